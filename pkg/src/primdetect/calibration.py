"""Threshold calibration from random training patches.

``xi[m]`` separates patches of implicit degree m from those of degree m+1 and
``eta`` is the absolute tolerance on the representation error.  Both are
pure functions of their arguments and seed.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .clustering import DEFAULT_LAMBDA, agglomerate, assemble_dissimilarity_matrix, default_samples
from .errors import InvalidInputError, UnsupportedDegreeError
from .geometry import (
    CONIC_TYPES,
    LabeledDataset,
    PointCloud,
    generate_bezier_family,
    generate_conic_family,
    generate_surface_primitives,
    random_polynomial_surfaces,
    rescale_to_unit_box,
    restrict_patch,
    sample_points,
)
from .implicitization import SURFACE_MAX_DEGREE, sigma_min

MAX_CURVE_DEGREE = 8
REJECT_FACTOR = 10.0
_QUADRIC_KINDS = ("sphere", "cylinder", "cone")


@dataclass
class CalibrationProfile:
    xi: dict
    eta: float
    m_cap: int
    lambda_: float = DEFAULT_LAMBDA
    Q1: int = 200
    Q2: int = 200
    P3: int = 50
    seed: int = 0
    ambient_dim: int = 2
    noise: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.xi = {int(k): float(v) for k, v in self.xi.items()}
        if not 1 <= self.m_cap:
            raise InvalidInputError("m_cap must be >= 1")
        if any(not 1 <= m <= self.m_cap for m in self.xi):
            raise InvalidInputError("xi degrees must lie in 1..m_cap")
        if any(v <= 0 for v in self.xi.values()):
            raise InvalidInputError("all xi thresholds must be positive")
        if not self.eta > 0:
            raise InvalidInputError("eta must be positive")


def _subseed(seed, *tags) -> int:
    return int(np.random.SeedSequence([int(seed), *tags]).generate_state(1)[0])


def _check_degree(degree, ambient_dim):
    limit = MAX_CURVE_DEGREE if ambient_dim == 2 else SURFACE_MAX_DEGREE + 1
    if not 1 <= degree <= limit:
        raise UnsupportedDegreeError(
            f"no random generator for implicit degree {degree} in R^{ambient_dim}"
        )


def random_training_dataset(degree: int, seed: int, ambient_dim: int = 2, curves: int = 4) -> LabeledDataset:
    """A rescaled family of random primitives of one implicit degree."""
    _check_degree(degree, ambient_dim)
    if ambient_dim == 2:
        if degree == 1:
            return generate_conic_family(curves, (1, 3), seed, types=("line",))
        if degree == 2:
            return generate_conic_family(curves, (1, 3), seed, types=CONIC_TYPES[1:])
        return generate_bezier_family(degree, curves, (1, 3), seed)
    rng = np.random.default_rng(seed)
    if degree == 1:
        return generate_surface_primitives(["plane"] * curves, seed, splits=(1, 1))
    if degree == 2:
        kinds = [_QUADRIC_KINDS[i] for i in rng.integers(3, size=curves)]
        return generate_surface_primitives(kinds, seed, splits=(1, 1))
    # non-quadric surfaces: random biquadratic polynomial patches, cut to smaller pieces
    patches = []
    for p in random_polynomial_surfaces((2, 2), curves, seed):
        a, b = rng.uniform(0.0, 0.5, size=2)
        patches.append(restrict_patch(p, ((a, a + 0.5), (b, b + 0.5))))
    return rescale_to_unit_box(LabeledDataset(patches))


def _training_clouds(degree, count, seed, ambient_dim, samples, noise, accept=None):
    """``count`` sampled training clouds of a given degree, optionally filtered."""
    out = []
    batch = 0
    rng = np.random.default_rng(_subseed(seed, degree, 99))
    while len(out) < count:
        if batch > 50 * count:
            raise InvalidInputError(f"could not draw {count} acceptable degree-{degree} patches")
        ds = random_training_dataset(degree, _subseed(seed, degree, batch), ambient_dim)
        batch += 1
        for p in ds.patches:
            pts = sample_points(p, samples)
            if noise > 0:
                pts = pts + rng.normal(0.0, noise, size=pts.shape)
            cloud = PointCloud(pts)
            if accept is None or accept(cloud):
                out.append(cloud)
            if len(out) == count:
                break
    return out


def _mean(values) -> float:
    return math.fsum(values) / len(values)


def xi_training_sigmas(
    degree: int,
    Q1: int = 200,
    Q2: int = 200,
    seed: int = 0,
    *,
    ambient_dim: int = 2,
    samples: int | None = None,
    m_cap: int = 4,
    noise: float = 0.0,
    lower_xi: float | None = None,
):
    """sigma_min^(degree) of Q1 degree-m and Q2 degree-(m+1) training patches.

    Degree >= 3 patches are only kept when they are clearly not of lower
    degree: sigma_min^(d-1) >= 10 * xi^(d-1).  For the degree-m group that
    threshold is ``lower_xi``; for the degree-(m+1) group it is a provisional
    xi^(m) computed from unfiltered draws.  With ``noise > 0`` no filtering
    is done.
    """
    if Q1 < 10 or Q2 < 10:
        raise InvalidInputError("Q1 and Q2 must be >= 10")
    _check_degree(degree + 1, ambient_dim)
    samples = samples or default_samples(ambient_dim, m_cap)

    # the lower-degree filter only makes sense for exact data; noise swamps it
    exact = noise == 0
    accept1 = None
    if degree >= 3 and lower_xi is not None and exact:
        accept1 = lambda c: sigma_min(c, degree - 1) >= REJECT_FACTOR * lower_xi  # noqa: E731
    group1 = _training_clouds(degree, Q1, _subseed(seed, 1), ambient_dim, samples, noise, accept1)
    s1 = np.array([sigma_min(c, degree) for c in group1])

    accept2 = None
    if degree + 1 >= 3 and exact:
        draft = _training_clouds(degree + 1, Q2, _subseed(seed, 2), ambient_dim, samples, noise)
        provisional = math.sqrt(_mean(s1) * _mean([sigma_min(c, degree) for c in draft]))
        accept2 = lambda c: sigma_min(c, degree) >= REJECT_FACTOR * provisional  # noqa: E731
    group2 = _training_clouds(degree + 1, Q2, _subseed(seed, 2), ambient_dim, samples, noise, accept2)
    s2 = np.array([sigma_min(c, degree) for c in group2])
    return s1, s2


def calibrate_xi(degree: int, Q1: int = 200, Q2: int = 200, seed: int = 0, **kwargs) -> float:
    """Geometric mean of the mean sigma_min^(m) of degree-m and degree-(m+1) training patches."""
    s1, s2 = xi_training_sigmas(degree, Q1, Q2, seed, **kwargs)
    return math.sqrt(_mean(s1) * _mean(s2))


def random_mixed_dataset(m_cap: int, seed: int, ambient_dim: int = 2, curves=(2, 5)) -> LabeledDataset:
    """Random primitives of implicit degree 1..m_cap with known labels, rescaled together."""
    rng = np.random.default_rng(seed)
    L = int(rng.integers(curves[0], curves[1] + 1))
    patches, labels, degrees = [], [], []
    for i in range(L):
        m = int(rng.integers(1, m_cap + 1))
        sub = _subseed(seed, i)
        if ambient_dim == 2:
            if m == 1:
                ds = generate_conic_family(1, (2, 4), sub, types=("line",), rescale=False)
            elif m == 2:
                ds = generate_conic_family(1, (2, 4), sub, types=CONIC_TYPES[1:], rescale=False)
            else:
                ds = generate_bezier_family(m, 1, (2, 4), sub, rescale=False)
        else:
            kind = "plane" if m == 1 else _QUADRIC_KINDS[int(rng.integers(3))]
            ds = generate_surface_primitives([kind], sub, splits=(2, 2), rescale=False)
        patches.extend(ds.patches)
        labels.extend([i] * len(ds))
        degrees.extend([m] * len(ds))
    return rescale_to_unit_box(LabeledDataset(patches, labels, degrees))


def eta_training_errors(
    m_cap: int = 4,
    P3: int = 50,
    seed: int = 0,
    *,
    ambient_dim: int = 2,
    samples: int | None = None,
    lambda_: float = DEFAULT_LAMBDA,
    noise: float = 0.0,
):
    """Smallest incorrect-merge representation error of each training dataset.

    Each degree class is agglomerated down to its known number of primitives;
    the error of the next merge (necessarily joining two primitives) is the
    class's incorrect-merge error.
    """
    if P3 < 10:
        raise InvalidInputError("P3 must be >= 10")
    if ambient_dim == 3:
        m_cap = min(m_cap, SURFACE_MAX_DEGREE)
    samples = samples or default_samples(ambient_dim, m_cap)
    rng = np.random.default_rng(_subseed(seed, 7))
    errors = []
    for i in range(P3):
        ds = random_mixed_dataset(m_cap, _subseed(seed, 3, i), ambient_dim)
        if len(ds) < 2:
            warnings.warn(f"training dataset {i} has a single patch; skipped", stacklevel=2)
            continue
        best = math.inf
        for m in sorted(set(ds.truth_degrees)):
            idx = [j for j, d in enumerate(ds.truth_degrees) if d == m]
            n_labels = len({ds.truth_labels[j] for j in idx})
            if n_labels < 2:
                continue
            clouds = []
            for j in idx:
                pts = sample_points(ds.patches[j], samples)
                if noise > 0:
                    pts = pts + rng.normal(0.0, noise, size=pts.shape)
                clouds.append(PointCloud(pts))
            mat = assemble_dissimilarity_matrix(clouds, m, lambda_)
            _, trace = agglomerate(clouds, m, matrix=mat, lambda_=lambda_, n_clusters=n_labels)
            best = min(best, trace.steps[trace.accepted].error)
        if math.isfinite(best):
            errors.append(best)
    return errors


def calibrate_eta(m_cap: int = 4, P3: int = 50, seed: int = 0, exponent: float = 2.0, **kwargs) -> float:
    """eta = (min_i e_i)^exponent over the training datasets (exponent 2 by default)."""
    errors = eta_training_errors(m_cap, P3, seed, **kwargs)
    if not errors:
        raise InvalidInputError("no training dataset produced an incorrect merge")
    return min(errors) ** exponent


def calibrate(
    m_cap: int = 4,
    Q1: int = 200,
    Q2: int = 200,
    P3: int = 50,
    seed: int = 0,
    *,
    ambient_dim: int = 2,
    lambda_: float = DEFAULT_LAMBDA,
    samples: int | None = None,
    noise: float = 0.0,
    eta_exponent: float = 2.0,
) -> CalibrationProfile:
    """Full profile: xi^(1..m_cap) and eta."""
    if m_cap < 1:
        raise InvalidInputError("m_cap must be >= 1")
    if ambient_dim == 3 and m_cap > SURFACE_MAX_DEGREE:
        m_cap = SURFACE_MAX_DEGREE
    # fail before any work if degree m_cap + 1 has no training generator
    _check_degree(m_cap + 1, ambient_dim)
    xi: dict = {}
    for m in range(1, m_cap + 1):
        xi[m] = calibrate_xi(
            m,
            Q1,
            Q2,
            _subseed(seed, 11, m),
            ambient_dim=ambient_dim,
            samples=samples,
            m_cap=m_cap,
            noise=noise,
            lower_xi=xi.get(m - 1),
        )
    eta = calibrate_eta(
        m_cap,
        P3,
        _subseed(seed, 13),
        exponent=eta_exponent,
        ambient_dim=ambient_dim,
        samples=samples,
        lambda_=lambda_,
        noise=noise,
    )
    return CalibrationProfile(xi, eta, m_cap, lambda_, Q1, Q2, P3, seed, ambient_dim, noise)
