"""Discrete approximate implicitization over the graded monomial basis.

The implicit polynomial of a point cloud is the right singular vector of the
collocation matrix for its smallest singular value.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .errors import InsufficientSamplesError, InvalidInputError, NumericalError, UnsupportedDegreeError
from .geometry import PointCloud

SURFACE_MIN_SAMPLES = 64
SURFACE_MAX_DEGREE = 2
SIGN_TOL = 1e-8


@dataclass(frozen=True)
class MonomialBasis:
    """Monomials of total degree <= ``total_degree`` in graded lex order.

    For two variables: 1, x, y, x^2, xy, y^2, x^3, ...
    ``parents[j]`` is ``(i, k)`` such that monomial j = monomial i * x_k, which
    lets the collocation matrix be filled one column product at a time.
    """

    ambient_dim: int
    total_degree: int
    exponents: tuple
    parents: tuple

    @property
    def size(self) -> int:
        return len(self.exponents)


def _exponents_of_degree(n, d):
    if n == 1:
        return [(d,)]
    out = []
    for first in range(d, -1, -1):
        for rest in _exponents_of_degree(n - 1, d - first):
            out.append((first,) + rest)
    return out


@lru_cache(maxsize=None)
def build_basis(ambient_dim: int, total_degree: int) -> MonomialBasis:
    if ambient_dim not in (2, 3):
        raise InvalidInputError(f"ambient_dim must be 2 or 3, got {ambient_dim}")
    if total_degree < 1:
        raise InvalidInputError("total_degree must be >= 1")
    exps = []
    for d in range(total_degree + 1):
        exps.extend(_exponents_of_degree(ambient_dim, d))
    index = {e: j for j, e in enumerate(exps)}
    parents = [None]
    for e in exps[1:]:
        k = next(i for i, v in enumerate(e) if v > 0)
        parent = list(e)
        parent[k] -= 1
        parents.append((index[tuple(parent)], k))
    assert len(exps) == comb(total_degree + ambient_dim, ambient_dim)
    return MonomialBasis(ambient_dim, total_degree, tuple(exps), tuple(parents))


def build_collocation(cloud, basis: MonomialBasis) -> np.ndarray:
    """N x M matrix with entry (i, j) = monomial j evaluated at point i."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.atleast_2d(np.asarray(cloud, float))
    if pts.shape[1] != basis.ambient_dim:
        raise InvalidInputError(
            f"cloud dimension {pts.shape[1]} does not match basis dimension {basis.ambient_dim}"
        )
    D = np.empty((pts.shape[0], basis.size))
    D[:, 0] = 1.0
    for j, (i, k) in enumerate(basis.parents[1:], start=1):
        np.multiply(D[:, i], pts[:, k], out=D[:, j])
    return D


def normalize_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > SIGN_TOL)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def svd_smallest(D: np.ndarray):
    """Smallest singular value of ``D`` and a unit right singular vector for it."""
    D = np.asarray(D, dtype=float)
    if not np.all(np.isfinite(D)):
        raise NumericalError("collocation matrix has non-finite entries")
    N, M = D.shape
    if N < M:
        warnings.warn(f"underdetermined collocation matrix ({N} x {M}); sigma_min is 0", stacklevel=2)
        _, s, Vt = np.linalg.svd(D, full_matrices=True)
        return 0.0, normalize_sign(Vt[-1].copy())
    _, s, Vt = np.linalg.svd(D, full_matrices=False)
    return float(s[-1]), normalize_sign(Vt[-1].copy())


def smallest_singular_values(stack: np.ndarray) -> np.ndarray:
    """sigma_min of each matrix in a (B, N, M) stack, without singular vectors.

    This is the single code path behind every dissimilarity value, so a pair's
    value does not depend on how many pairs are evaluated together.
    """
    stack = np.asarray(stack, dtype=float)
    if not np.all(np.isfinite(stack)):
        raise NumericalError("collocation matrix has non-finite entries")
    return np.linalg.svd(stack, compute_uv=False)[..., -1]


def min_samples(ambient_dim: int, degree: int) -> int:
    """Samples needed for a unique exact implicitization (m^2+1 for planar curves)."""
    if ambient_dim == 2:
        return degree * degree + 1
    if degree > SURFACE_MAX_DEGREE:
        raise UnsupportedDegreeError(
            f"surface implicitization above degree {SURFACE_MAX_DEGREE} is not supported"
        )
    return SURFACE_MIN_SAMPLES


def check_samples(n_points: int, ambient_dim: int, degree: int):
    need = min_samples(ambient_dim, degree)
    if n_points < need:
        raise InsufficientSamplesError(n_points, need, degree)


@dataclass(frozen=True, eq=False)
class ImplicitResult:
    degree: int
    coefficients: np.ndarray
    sigma_min: float
    basis: MonomialBasis

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (self.basis.size,):
            raise InvalidInputError(f"expected {self.basis.size} coefficients, got {c.shape}")
        if abs(np.linalg.norm(c) - 1.0) > 1e-12:
            raise InvalidInputError("coefficient vector must have unit 2-norm")
        if self.sigma_min < 0:
            raise InvalidInputError("sigma_min must be nonnegative")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    def __call__(self, points):
        return evaluate_implicit(self, points)


def approximate_implicitize(cloud: PointCloud, degree: int) -> ImplicitResult:
    basis = build_basis(cloud.dim, degree)
    check_samples(len(cloud), cloud.dim, degree)
    sigma, v = svd_smallest(build_collocation(cloud, basis))
    return ImplicitResult(degree, v, sigma, basis)


def evaluate_implicit(result: ImplicitResult, point):
    """q(x) = sum_j b_j * monomial_j(x); scalar for one point, array for (k, n)."""
    pts = np.asarray(point, dtype=float)
    single = pts.ndim == 1
    D = build_collocation(np.atleast_2d(pts), result.basis)
    vals = D @ result.coefficients
    return float(vals[0]) if single else vals


def sigma_min(cloud: PointCloud, degree: int) -> float:
    """Smallest singular value alone (the value used for degree tests and dissimilarities)."""
    check_samples(len(cloud), cloud.dim, degree)
    D = build_collocation(cloud, build_basis(cloud.dim, degree))
    return float(smallest_singular_values(D[None])[0])
