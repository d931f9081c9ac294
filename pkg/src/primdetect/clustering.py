"""Degree partition and complete-linkage agglomeration of patches.

Patches of one implicit degree are compared through the dissimilarity

    d_lambda(a, b) = sigma_min(cloud_a U cloud_b) + lambda * |cm_a - cm_b|

and merged bottom-up.  Two matrices are kept side by side: the lambda-weighted
one drives merging, the sigma-only one (d_0) gives the representation error
used by the stopping rules.
"""
from __future__ import annotations

import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegreeOverflowError, InvalidInputError, PreconditionError
from .geometry import CloudDataset, LabeledDataset, PointCloud, rescale_to_unit_box, sample_patch
from .implicitization import (
    build_basis,
    build_collocation,
    check_samples,
    sigma_min,
    smallest_singular_values,
)

DEFAULT_LAMBDA = 1e-10
RATIO_EPS = 1e-300
PAIR_CHUNK = 4096


def default_samples(ambient_dim: int, m_cap: int) -> int:
    """Samples per parameter direction: curves satisfy m_cap^2+1, surfaces use 8x8."""
    if ambient_dim == 2:
        return max(m_cap * m_cap + 1, 16)
    return 8


def _as_cloud(item, samples):
    if isinstance(item, PointCloud):
        return item
    return sample_patch(item, samples)


# ---------------------------------------------------------------------------
# Degree estimation
# ---------------------------------------------------------------------------


@dataclass
class DegreePartition:
    classes: dict
    m_max: int
    rejected: list = field(default_factory=list)
    spectra: dict = field(default_factory=dict)


def estimate_degree(patch, profile, samples: int | None = None) -> int:
    """Smallest degree m <= m_cap with sigma_min^(m) below the threshold xi^(m)."""
    cloud = _as_cloud(patch, samples or default_samples(_dim_of(patch), profile.m_cap))
    spectrum = {}
    for m in range(1, profile.m_cap + 1):
        if m not in profile.xi:
            break
        s = sigma_min(cloud, m)
        spectrum[m] = s
        if s < profile.xi[m]:
            return m
    raise DegreeOverflowError(spectrum, profile.m_cap)


def _dim_of(item):
    return item.dim if isinstance(item, PointCloud) else item.ambient_dim


def partition_by_degree(patches, profile, samples: int | None = None) -> DegreePartition:
    """Group patch indices by estimated implicit degree.

    Patches whose sigma_min stays above xi up to m_cap are rejected and their
    spectra kept.  Clouds of equal size are tested in one batched SVD per
    degree, which gives the same values as testing them one by one.
    """
    items = list(patches)
    if not items:
        return DegreePartition({}, 0)
    samples = samples or default_samples(_dim_of(items[0]), profile.m_cap)
    clouds = [_as_cloud(p, samples) for p in items]
    pending = list(range(len(clouds)))
    spectra: dict = {i: {} for i in pending}
    classes: dict = {}
    for m in range(1, profile.m_cap + 1):
        if m not in profile.xi or not pending:
            break
        basis = build_basis(clouds[pending[0]].dim, m)
        by_size: dict = {}
        for i in pending:
            check_samples(len(clouds[i]), clouds[i].dim, m)
            by_size.setdefault(len(clouds[i]), []).append(i)
        sig = {}
        for group in by_size.values():
            stack = np.stack([build_collocation(clouds[i], basis) for i in group])
            sig.update(zip(group, smallest_singular_values(stack)))
        still = []
        for i in pending:
            spectra[i][m] = float(sig[i])
            if sig[i] < profile.xi[m]:
                classes.setdefault(m, []).append(i)
            else:
                still.append(i)
        pending = still
    classes = dict(sorted(classes.items()))
    return DegreePartition(classes, max(classes, default=0), pending, {i: spectra[i] for i in pending})


# ---------------------------------------------------------------------------
# Dissimilarities
# ---------------------------------------------------------------------------


def _cm_distance(diff):
    return np.sqrt(np.sum(diff * diff, axis=-1))


def dissimilarity(tau1: PointCloud, tau2: PointCloud, degree: int, lambda_: float = DEFAULT_LAMBDA) -> float:
    if lambda_ < 0:
        raise InvalidInputError("lambda must be >= 0")
    check_samples(len(tau1) + len(tau2), tau1.dim, degree)
    basis = build_basis(tau1.dim, degree)
    joint = np.vstack([build_collocation(tau1, basis), build_collocation(tau2, basis)])
    s = smallest_singular_values(joint[None])[0]
    return float(s + lambda_ * _cm_distance(tau1.center_of_mass - tau2.center_of_mass))


@dataclass(frozen=True, eq=False)
class DissimilarityMatrix:
    """d_lambda values (``values``) and their sigma-only part (``d0``)."""

    values: np.ndarray
    d0: np.ndarray
    lambda_: float
    degree: int

    @property
    def size(self) -> int:
        return self.values.shape[0]


def _pair_sigmas(blocks, I, J):
    joint = np.concatenate([blocks[I], blocks[J]], axis=1)
    finite = np.all(np.isfinite(joint), axis=(1, 2))
    out = np.full(len(I), np.inf)
    if finite.any():
        out[finite] = smallest_singular_values(joint[finite])
    return out


def assemble_dissimilarity_matrix(
    clouds, degree: int, lambda_: float = DEFAULT_LAMBDA, threads: int = 1
) -> DissimilarityMatrix:
    """All P(P-1)/2 pairwise dissimilarities of one degree class.

    Pairs are processed in independent chunks (optionally on several threads);
    each value is computed once and mirrored, so the matrix is exactly symmetric
    and does not depend on the thread count.
    """
    clouds = list(clouds)
    P = len(clouds)
    if P == 0:
        raise InvalidInputError("cannot assemble a matrix for an empty class")
    d0 = np.zeros((P, P))
    values = np.zeros((P, P))
    if P == 1:
        return DissimilarityMatrix(values, d0, lambda_, degree)
    dim = clouds[0].dim
    basis = build_basis(dim, degree)
    colls = [build_collocation(c, basis) for c in clouds]
    cms = np.array([c.center_of_mass for c in clouds])
    I, J = np.triu_indices(P, k=1)
    sizes = {len(c) for c in clouds}
    check_samples(2 * min(sizes), dim, degree)
    if len(sizes) == 1:
        blocks = np.stack(colls)
        chunks = [(I[a:a + PAIR_CHUNK], J[a:a + PAIR_CHUNK]) for a in range(0, len(I), PAIR_CHUNK)]
        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(lambda ij: _pair_sigmas(blocks, *ij), chunks))
        else:
            parts = [_pair_sigmas(blocks, *ij) for ij in chunks]
        sig = np.concatenate(parts)
    else:
        sig = np.array(
            [smallest_singular_values(np.vstack([colls[i], colls[j]])[None])[0] for i, j in zip(I, J)]
        )
    if not np.all(np.isfinite(sig)):
        warnings.warn(f"{np.sum(~np.isfinite(sig))} pair(s) failed; recorded as +inf", stacklevel=2)
    vals = sig + lambda_ * _cm_distance(cms[I] - cms[J])
    d0[I, J] = sig
    d0[J, I] = sig
    values[I, J] = vals
    values[J, I] = vals
    d0.setflags(write=False)
    values.setflags(write=False)
    return DissimilarityMatrix(values, d0, lambda_, degree)


def complete_linkage(Ci, Cj, matrix) -> float:
    """max over a in Ci, b in Cj of the stored pairwise dissimilarity."""
    vals = matrix.values if isinstance(matrix, DissimilarityMatrix) else np.asarray(matrix)
    return float(vals[np.ix_(list(Ci), list(Cj))].max())


def representation_error(partition, d0_matrix) -> float:
    """Largest within-cluster d_0 over all clusters (singletons contribute 0)."""
    d0 = d0_matrix.d0 if isinstance(d0_matrix, DissimilarityMatrix) else np.asarray(d0_matrix)
    err = 0.0
    for c in partition:
        c = list(c)
        if len(c) > 1:
            err = max(err, float(d0[np.ix_(c, c)].max()))
    return err


# ---------------------------------------------------------------------------
# Agglomeration
# ---------------------------------------------------------------------------


@dataclass
class MergeStep:
    k: int
    merged: tuple
    error: float
    height: float


@dataclass
class MergeTrace:
    """Every merge that was evaluated, in order.

    ``accepted`` merges make up the returned partition; in absolute mode the
    step after them (if any) is the one that broke the tolerance.
    """

    steps: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    accepted: int = 0

    @property
    def errors(self):
        return [s.error for s in self.steps]


def _naive_merges(values):
    """Repeatedly merge the closest pair; O(P^3).

    Clusters live at the row of their smallest member, so a row-major argmin
    over the upper triangle breaks ties by (min index of first, min index of
    second).
    """
    P = values.shape[0]
    W = np.array(values, dtype=float)
    np.fill_diagonal(W, np.inf)
    upper = np.triu(np.ones((P, P), dtype=bool), k=1)
    seq = []
    for _ in range(P - 1):
        flat = np.argmin(np.where(upper, W, np.inf))
        a, b = divmod(int(flat), P)
        h = W[a, b]
        row = np.maximum(W[a], W[b])
        W[a, :] = row
        W[:, a] = row
        W[a, a] = np.inf
        W[b, :] = np.inf
        W[:, b] = np.inf
        seq.append((a, b, float(h)))
    return seq


def _nn_chain_merges(values):
    """Nearest-neighbour chain for complete linkage, O(P^2), returned in height order."""
    P = values.shape[0]
    W = np.array(values, dtype=float)
    np.fill_diagonal(W, np.inf)
    active = np.ones(P, dtype=bool)
    chain: list = []
    seq = []
    while active.sum() > 1:
        if not chain:
            chain.append(int(np.flatnonzero(active)[0]))
        a = chain[-1]
        row = np.where(active, W[a], np.inf)
        b = int(np.argmin(row))
        if len(chain) > 1 and row[chain[-2]] == row[b]:
            b = chain[-2]
        if len(chain) > 1 and b == chain[-2]:
            chain.pop()
            chain.pop()
            lo, hi = min(a, b), max(a, b)
            h = W[lo, hi]
            new = np.maximum(W[lo], W[hi])
            W[lo, :] = new
            W[:, lo] = new
            W[lo, lo] = np.inf
            active[hi] = False
            seq.append((lo, hi, float(h)))
        else:
            chain.append(b)
    order = sorted(range(len(seq)), key=lambda t: (seq[t][2], seq[t][0], seq[t][1]))
    return [seq[t] for t in order]


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        lo, hi = min(ra, rb), max(ra, rb)
        self.parent[hi] = lo
        return lo, hi


def _replay(P, seq, d0):
    """Representation error e^(k) after each merge of ``seq``."""
    uf = _UnionFind(P)
    members = {i: [i] for i in range(P)}
    within = dict.fromkeys(range(P), 0.0)
    e = 0.0
    steps = []
    for k, (a, b, h) in enumerate(seq, start=1):
        ra, rb = uf.find(a), uf.find(b)
        cross = float(d0[np.ix_(members[ra], members[rb])].max())
        lo, hi = uf.union(ra, rb)
        members[lo] = members[lo] + members.pop(hi)
        within[lo] = max(within[lo], within.pop(hi), cross)
        e = max(e, within[lo])
        steps.append(MergeStep(k, (lo, hi), e, h))
    return steps


def _clusters_after(P, steps, count):
    uf = _UnionFind(P)
    for s in steps[:count]:
        uf.union(*s.merged)
    groups: dict = {}
    for i in range(P):
        groups.setdefault(uf.find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def relative_cut(errors) -> tuple:
    """Number of merges to keep by the largest error ratio, and the ratios.

    e^(0) is taken equal to e^(1); a tiny epsilon keeps 0/0 out of the ratios.
    """
    if not errors:
        return 0, []
    prev = [errors[0]] + list(errors[:-1])
    ratios = [(e + RATIO_EPS) / (p + RATIO_EPS) for e, p in zip(errors, prev)]
    return int(np.argmax(ratios)), ratios


def agglomerate(
    clouds,
    degree: int,
    profile=None,
    mode: str = "relative",
    *,
    eta: float | None = None,
    lambda_: float | None = None,
    n_clusters: int | None = None,
    method: str = "naive",
    matrix: DissimilarityMatrix | None = None,
    threads: int = 1,
):
    """Complete-linkage clustering of one degree class.

    ``mode`` is ``"absolute"`` (stop before the first merge whose error exceeds
    ``eta``) or ``"relative"`` (cut at the largest jump of consecutive errors).
    ``n_clusters`` overrides both and merges down to that many clusters.
    Returns ``(clusters, trace)`` with clusters as sorted lists of indices
    into ``clouds``.
    """
    if mode not in ("absolute", "relative"):
        raise InvalidInputError(f"unknown stopping mode {mode!r}")
    if method not in ("naive", "nn_chain"):
        raise InvalidInputError(f"unknown merge method {method!r}")
    if lambda_ is None:
        lambda_ = profile.lambda_ if profile is not None else DEFAULT_LAMBDA
    if eta is None and profile is not None:
        eta = profile.eta
    clouds = list(clouds)
    P = len(clouds) if matrix is None else matrix.size
    if P == 0:
        return [], MergeTrace()
    if P == 1:
        return [[0]], MergeTrace()
    if matrix is None:
        matrix = assemble_dissimilarity_matrix(clouds, degree, lambda_, threads)
    seq = _naive_merges(matrix.values) if method == "naive" else _nn_chain_merges(matrix.values)
    steps = _replay(P, seq, matrix.d0)
    trace = MergeTrace(steps)
    if n_clusters is not None:
        trace.accepted = P - min(max(int(n_clusters), 1), P)
    elif mode == "absolute":
        if eta is None:
            raise InvalidInputError("absolute mode needs eta")
        over = [s.k for s in steps if s.error > eta]
        trace.accepted = over[0] - 1 if over else P - 1
        trace.steps = steps[: trace.accepted + 1]
    else:
        trace.accepted, trace.ratios = relative_cut([s.error for s in steps])
    return _clusters_after(P, steps, trace.accepted), trace


def lambda_star(clouds=None, degree: int | None = None, *, matrix: DissimilarityMatrix | None = None):
    """Smallest lambda for which d_lambda satisfies the triangle inequality.

    Maximum over ordered triples (1, 2, 3) of
    (s12 - s13 - s23) / (c13 + c23 - c12), with s the joint sigma_min and c the
    centre-of-mass distances.  Triples with vanishing denominator (collinear
    centres) are skipped.
    """
    if matrix is None:
        clouds = list(clouds)
        matrix = assemble_dissimilarity_matrix(clouds, degree, 0.0)
    if clouds is None:
        raise InvalidInputError("centres of mass need the clouds")
    P = matrix.size
    if P < 3:
        raise PreconditionError("lambda_star needs at least 3 patches")
    cms = np.array([c.center_of_mass for c in clouds])
    C = _cm_distance(cms[:, None, :] - cms[None, :, :])
    off = ~np.eye(P, dtype=bool)
    if np.any(C[off] < 1e-12):
        raise PreconditionError("centres of mass must be pairwise distinct")
    S = matrix.d0
    num = S[:, :, None] - S[:, None, :] - S.T[None, :, :]  # s12 - s13 - s23 at [1, 2, 3]
    den = C[:, None, :] + C.T[None, :, :] - C[:, :, None]
    idx = np.arange(P)
    distinct = (idx[:, None, None] != idx[None, :, None]) & (idx[:, None, None] != idx[None, None, :]) & (
        idx[None, :, None] != idx[None, None, :]
    )
    ok = distinct & (den > 1e-12 * C.max())
    skipped = int(np.sum(distinct & ~ok))
    if skipped:
        warnings.warn(f"lambda_star skipped {skipped} triple(s) with collinear centres of mass", stacklevel=2)
    return float(np.max(num[ok] / den[ok]))


# ---------------------------------------------------------------------------
# Full pipeline and scoring
# ---------------------------------------------------------------------------


@dataclass
class ClusterPartition:
    assignment: np.ndarray
    clusters: list
    degrees: dict
    per_degree: dict
    traces: dict
    rejected: list
    mode: str
    timings: dict = field(default_factory=dict)

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)


def _prepare_clouds(data, samples, rescale):
    if isinstance(data, (LabeledDataset, CloudDataset)):
        if rescale and len(data):
            data = rescale_to_unit_box(data)
        if isinstance(data, LabeledDataset):
            return [sample_patch(p, samples) for p in data.patches]
        return list(data.clouds)
    return [_as_cloud(item, samples) for item in data]


def detect_primitives(
    data,
    profile,
    mode: str = "relative",
    *,
    lambda_: float | None = None,
    eta: float | None = None,
    clusters_per_degree: dict | None = None,
    samples: int | None = None,
    threads: int = 1,
    method: str = "naive",
    rescale: bool = True,
) -> ClusterPartition:
    """Rescale, split by implicit degree, then agglomerate each degree class."""
    dim = data.ambient_dim if hasattr(data, "ambient_dim") else _dim_of(list(data)[0])
    samples = samples or default_samples(dim or 2, profile.m_cap)
    lam = profile.lambda_ if lambda_ is None else lambda_
    t0 = time.perf_counter()
    clouds = _prepare_clouds(data, samples, rescale)
    part = partition_by_degree(clouds, profile)
    t1 = time.perf_counter()
    t_assembly = t_clustering = 0.0
    per_degree, traces = {}, {}
    for m, idx in part.classes.items():
        sub = [clouds[i] for i in idx]
        ta = time.perf_counter()
        mat = assemble_dissimilarity_matrix(sub, m, lam, threads) if len(sub) > 1 else None
        tb = time.perf_counter()
        forced = (clusters_per_degree or {}).get(m)
        local, trace = agglomerate(
            sub, m, profile, mode, eta=eta, lambda_=lam, n_clusters=forced, method=method, matrix=mat
        )
        tc = time.perf_counter()
        t_assembly += tb - ta
        t_clustering += tc - tb
        per_degree[m] = [[idx[j] for j in c] for c in local]
        traces[m] = trace
    clusters = [c for m in per_degree for c in per_degree[m]]
    clusters += [[i] for i in part.rejected]
    assignment = np.empty(len(clouds), dtype=int)
    for cid, c in enumerate(clusters):
        assignment[c] = cid
    degrees = {i: m for m, idx in part.classes.items() for i in idx}
    timings = {
        "partition": t1 - t0,
        "assembly": t_assembly,
        "clustering": t_clustering,
        "total": time.perf_counter() - t0,
    }
    return ClusterPartition(assignment, clusters, degrees, per_degree, traces, part.rejected, mode, timings)


def misclassification_rate(predicted, truth) -> float:
    """Fraction of patches outside their best-matched true class.

    Clusters are matched one-to-one to labels by a maximum-weight assignment on
    the contingency table; unmatched clusters count entirely as errors.
    """
    pred = predicted.assignment if isinstance(predicted, ClusterPartition) else np.asarray(predicted)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise InvalidInputError("predicted and truth labels must cover the same patches")
    if pred.size == 0:
        return 0.0
    _, p_idx = np.unique(pred, return_inverse=True)
    _, t_idx = np.unique(truth, return_inverse=True)
    table = np.zeros((p_idx.max() + 1, t_idx.max() + 1), dtype=int)
    np.add.at(table, (p_idx, t_idx), 1)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return 1.0 - table[rows, cols].sum() / pred.size

