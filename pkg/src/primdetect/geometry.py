"""Parametric patches, point clouds, affine maps and synthetic datasets.

Patches are rational Bezier curves (one parameter) or tensor-product
rational Bezier surfaces (two parameters) over a box domain.  The Bernstein
basis is always taken on the domain normalised to ``[0, 1]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.spatial.transform import Rotation
from scipy.special import comb

from .errors import DomainError, InvalidInputError, InvalidTransformError

CONIC_TYPES = ("line", "parabola", "ellipse", "hyperbola")
SURFACE_KINDS = ("plane", "sphere", "cylinder", "cone")
GEAR_RADII = (2.0, 1.5, 1.0)  # outer, root, inner
LABEL_TOL = 1e-9


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Core types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Patch:
    """A rational Bezier curve or tensor-product surface patch.

    ``control_points`` has shape ``(n0+1, n)`` for a curve of degree ``n0`` in
    R^n and ``(n0+1, n1+1, n)`` for a surface of bidegree ``(n0, n1)``.
    ``weights`` is ``None`` for polynomial patches, otherwise it has the shape
    of ``control_points`` without the last axis.
    """

    control_points: np.ndarray
    weights: np.ndarray | None = None
    domain: tuple = None

    def __post_init__(self):
        cp = _frozen(self.control_points)
        if cp.ndim not in (2, 3):
            raise InvalidInputError("control_points must be a (n0+1, n) or (n0+1, n1+1, n) array")
        if cp.shape[-1] not in (2, 3):
            raise InvalidInputError(f"ambient dimension must be 2 or 3, got {cp.shape[-1]}")
        if not np.all(np.isfinite(cp)):
            raise InvalidInputError("control points must be finite")
        object.__setattr__(self, "control_points", cp)
        if self.weights is not None:
            w = _frozen(self.weights)
            if w.shape != cp.shape[:-1]:
                raise InvalidInputError(
                    f"weights shape {w.shape} does not match control net {cp.shape[:-1]}"
                )
            if not np.all(w > 0):
                raise InvalidInputError("weights must be strictly positive")
            object.__setattr__(self, "weights", w)
        dom = self.domain
        if dom is None:
            dom = ((0.0, 1.0),) * (cp.ndim - 1)
        dom = tuple((float(lo), float(hi)) for lo, hi in dom)
        if len(dom) != cp.ndim - 1:
            raise InvalidInputError("domain needs one interval per parameter")
        for lo, hi in dom:
            if not lo < hi:
                raise InvalidInputError(f"degenerate domain interval [{lo}, {hi}]")
        object.__setattr__(self, "domain", dom)

    @property
    def ambient_dim(self) -> int:
        return self.control_points.shape[-1]

    @property
    def param_dim(self) -> int:
        return self.control_points.ndim - 1

    @property
    def degree(self) -> tuple:
        return tuple(k - 1 for k in self.control_points.shape[:-1])

    @property
    def is_rational(self) -> bool:
        return self.weights is not None

    def homogeneous(self) -> np.ndarray:
        """Control points as ``(w*P, w)`` rows."""
        w = self.weights if self.weights is not None else np.ones(self.control_points.shape[:-1])
        return np.concatenate([self.control_points * w[..., None], w[..., None]], axis=-1)

    def bounding_box(self):
        pts = self.control_points.reshape(-1, self.ambient_dim)
        return pts.min(axis=0), pts.max(axis=0)


@dataclass(frozen=True, eq=False)
class CompositeCurve:
    """Chain of curve patches treated as one patch (e.g. a closed circle).

    Piece ``i`` is parametrised by ``[i, i+1]`` of the composite domain.
    """

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise InvalidInputError("composite curve needs at least one piece")
        if any(not isinstance(p, Patch) or p.param_dim != 1 for p in pieces):
            raise InvalidInputError("composite pieces must be curve patches")
        if len({p.ambient_dim for p in pieces}) != 1:
            raise InvalidInputError("composite pieces must share the ambient dimension")
        object.__setattr__(self, "pieces", pieces)

    @property
    def ambient_dim(self) -> int:
        return self.pieces[0].ambient_dim

    param_dim = 1

    @property
    def domain(self):
        return ((0.0, float(len(self.pieces))),)

    @property
    def degree(self):
        return (max(p.degree[0] for p in self.pieces),)

    def bounding_box(self):
        boxes = [p.bounding_box() for p in self.pieces]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)


AnyPatch = Union[Patch, CompositeCurve]


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    center_of_mass: np.ndarray = field(init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise InvalidInputError("a point cloud needs an (N, n) array with N >= 1")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "center_of_mass", _frozen(pts.mean(axis=0)))

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def union(self, other: "PointCloud") -> "PointCloud":
        return PointCloud(np.vstack([self.points, other.points]))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    patches: tuple
    truth_labels: tuple | None = None
    truth_degrees: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "patches", tuple(self.patches))
        for name in ("truth_labels", "truth_degrees"):
            val = getattr(self, name)
            if val is not None:
                val = tuple(int(v) for v in val)
                if len(val) != len(self.patches):
                    raise InvalidInputError(f"{name} length {len(val)} != {len(self.patches)} patches")
                object.__setattr__(self, name, val)
        if len({p.ambient_dim for p in self.patches}) > 1:
            raise InvalidInputError("all patches must share one ambient dimension")

    def __len__(self):
        return len(self.patches)

    @property
    def ambient_dim(self) -> int | None:
        return self.patches[0].ambient_dim if self.patches else None


@dataclass(frozen=True, eq=False)
class CloudDataset:
    """Sampled (possibly perturbed) version of a :class:`LabeledDataset`."""

    clouds: tuple
    truth_labels: tuple | None = None
    truth_degrees: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "clouds", tuple(self.clouds))
        for name in ("truth_labels", "truth_degrees"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(int(v) for v in val))

    def __len__(self):
        return len(self.clouds)

    @property
    def ambient_dim(self) -> int | None:
        return self.clouds[0].dim if self.clouds else None


# ---------------------------------------------------------------------------
# Affine maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> matrix @ x + offset."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        A = _frozen(self.matrix)
        b = _frozen(self.offset)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or b.shape != (A.shape[0],):
            raise InvalidTransformError("affine map needs a square matrix and a matching offset")
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
            raise InvalidTransformError("affine map entries must be finite")
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] <= s[0] * 1e-14 or s[0] == 0:
            raise InvalidTransformError("linear part of the affine map is singular")
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "offset", b)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix.T + self.offset

    def then(self, other: "AffineMap") -> "AffineMap":
        """Composition: apply ``self`` first, then ``other``."""
        return AffineMap(other.matrix @ self.matrix, other.matrix @ self.offset + other.offset)

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim), np.zeros(dim))

    @classmethod
    def scaling(cls, factors):
        factors = np.asarray(factors, dtype=float)
        return cls(np.diag(factors), np.zeros(len(factors)))

    @classmethod
    def translation(cls, vector):
        vector = np.asarray(vector, dtype=float)
        return cls(np.eye(len(vector)), vector)

    @classmethod
    def rotation(cls, theta):
        c, s = math.cos(theta), math.sin(theta)
        return cls(np.array([[c, -s], [s, c]]), np.zeros(2))


# ---------------------------------------------------------------------------
# Evaluation and sampling
# ---------------------------------------------------------------------------


def bernstein_matrix(degree: int, t) -> np.ndarray:
    """Rows of Bernstein basis values B_{k,degree}(t) for each t in ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    k = np.arange(degree + 1)
    return comb(degree, k) * t**k * (1.0 - t) ** (degree - k)


def _eval_grid(patch: Patch, params: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate on the tensor grid of normalised parameters ``params``."""
    H = patch.homogeneous()
    B = [bernstein_matrix(d, t) for d, t in zip(patch.degree, params)]
    if patch.param_dim == 1:
        hom = B[0] @ H
    else:
        hom = np.einsum("ai,bj,ijd->abd", B[0], B[1], H)
    return hom[..., :-1] / hom[..., -1:]


def _check_in_domain(domain, s):
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if s.shape != (len(domain),):
        raise DomainError(f"parameter must have {len(domain)} coordinates, got {s.shape}")
    for x, (lo, hi) in zip(s, domain):
        if not lo <= x <= hi:
            raise DomainError(f"parameter {x} outside [{lo}, {hi}]")
    return s


def evaluate_patch(patch: AnyPatch, s) -> np.ndarray:
    """Point ``p(s)`` for a parameter ``s`` in the patch domain."""
    s = _check_in_domain(patch.domain, s)
    if isinstance(patch, CompositeCurve):
        i = min(int(math.floor(s[0])), len(patch.pieces) - 1)
        piece = patch.pieces[i]
        lo, hi = piece.domain[0]
        return evaluate_patch(piece, lo + (s[0] - i) * (hi - lo))
    t = [np.array([(x - lo) / (hi - lo)]) for x, (lo, hi) in zip(s, patch.domain)]
    return _eval_grid(patch, t).reshape(patch.ambient_dim)


def sample_points(patch: AnyPatch, samples_per_dim: int) -> np.ndarray:
    """Evaluations on a uniform parameter grid with endpoints, flattened to (N, n)."""
    if samples_per_dim < 2:
        raise InvalidInputError("samples_per_dim must be >= 2")
    if isinstance(patch, CompositeCurve):
        k = len(patch.pieces)
        s = np.linspace(0.0, k, samples_per_dim)
        idx = np.minimum(np.floor(s).astype(int), k - 1)
        out = np.empty((samples_per_dim, patch.ambient_dim))
        for i, piece in enumerate(patch.pieces):
            mask = idx == i
            if mask.any():
                out[mask] = _eval_grid(piece, [s[mask] - i])
        return out
    t = np.linspace(0.0, 1.0, samples_per_dim)
    pts = _eval_grid(patch, [t] * patch.param_dim)
    return pts.reshape(-1, patch.ambient_dim)


def sample_patch(patch: AnyPatch, samples_per_dim: int) -> PointCloud:
    return PointCloud(sample_points(patch, samples_per_dim))


def transform_patch(patch: AnyPatch, transform: AffineMap) -> AnyPatch:
    """Apply an affine map to the control points; weights are unchanged."""
    if transform.dim != patch.ambient_dim:
        raise InvalidTransformError(
            f"{transform.dim}-d transform applied to a {patch.ambient_dim}-d patch"
        )
    if isinstance(patch, CompositeCurve):
        return CompositeCurve(tuple(transform_patch(p, transform) for p in patch.pieces))
    return Patch(transform(patch.control_points), patch.weights, patch.domain)


def _split_homogeneous(H, t, axis):
    """de Casteljau split of homogeneous control net ``H`` along ``axis``."""
    H = np.moveaxis(H, axis, 0)
    n = H.shape[0] - 1
    left, right = [H[0]], [H[n]]
    cur = H
    for _ in range(n):
        cur = (1 - t) * cur[:-1] + t * cur[1:]
        left.append(cur[0])
        right.append(cur[-1])
    left = np.moveaxis(np.stack(left), 0, axis)
    right = np.moveaxis(np.stack(right[::-1]), 0, axis)
    return left, right


def restrict_patch(patch: Patch, subdomain) -> Patch:
    """The same geometry reparametrised over a sub-box of the domain.

    Control points are recomputed by de Casteljau subdivision, so the result
    lies exactly (up to rounding) on the original patch.
    """
    H = patch.homogeneous()
    for axis, ((lo, hi), (a, b)) in enumerate(zip(patch.domain, subdomain)):
        if not lo <= a < b <= hi:
            raise DomainError(f"subinterval [{a}, {b}] not inside [{lo}, {hi}]")
        ta, tb = (a - lo) / (hi - lo), (b - lo) / (hi - lo)
        if tb < 1.0:
            H, _ = _split_homogeneous(H, tb, axis)
        if ta > 0.0:
            _, H = _split_homogeneous(H, ta / tb, axis)
    w = H[..., -1]
    pts = H[..., :-1] / w[..., None]
    return Patch(pts, None if patch.weights is None else w, tuple(subdomain))


# ---------------------------------------------------------------------------
# Primitive builders (exact parametrisations)
# ---------------------------------------------------------------------------


def line_segment(p0, p1) -> Patch:
    return Patch(np.array([p0, p1], dtype=float))


def circle_arc(center, radius, a0, a1) -> Patch:
    """Exact rational quadratic arc from angle ``a0`` to ``a1`` (span < pi)."""
    span = a1 - a0
    if not 0 < span < math.pi:
        raise InvalidInputError("rational quadratic arcs need 0 < span < pi")
    c = np.asarray(center, dtype=float)
    h = math.cos(span / 2)
    am = 0.5 * (a0 + a1)
    P = np.array(
        [
            c + radius * np.array([math.cos(a0), math.sin(a0)]),
            c + radius / h * np.array([math.cos(am), math.sin(am)]),
            c + radius * np.array([math.cos(a1), math.sin(a1)]),
        ]
    )
    return Patch(P, np.array([1.0, h, 1.0]))


def cubic_circle_arc(center, radius, a0, a1) -> Patch:
    """Standard polynomial cubic approximation of a circular arc."""
    span = a1 - a0
    k = 4.0 / 3.0 * math.tan(span / 4)
    c = np.asarray(center, dtype=float)
    u0 = np.array([math.cos(a0), math.sin(a0)])
    u1 = np.array([math.cos(a1), math.sin(a1)])
    t0 = np.array([-u0[1], u0[0]])
    t1 = np.array([-u1[1], u1[0]])
    P = radius * np.array([u0, u0 + k * t0, u1 - k * t1, u1]) + c
    return Patch(P)


def parabola_segment(t0, t1) -> Patch:
    """Segment of y = x^2 for x in [t0, t1]."""
    return Patch(np.array([[t0, t0 * t0], [0.5 * (t0 + t1), t0 * t1], [t1, t1 * t1]]))


def hyperbola_segment(u0, u1) -> Patch:
    """Segment of the right branch of x^2 - y^2 = 1, (cosh u, sinh u)."""
    half = 0.5 * (u1 - u0)
    um = 0.5 * (u0 + u1)
    h = math.cosh(half)
    P = np.array(
        [
            [math.cosh(u0), math.sinh(u0)],
            [math.cosh(um) / h, math.sinh(um) / h],
            [math.cosh(u1), math.sinh(u1)],
        ]
    )
    return Patch(P, np.array([1.0, h, 1.0]))


def full_circle(center, radius, mode="exact") -> CompositeCurve:
    """Closed circle made of four quarter arcs."""
    build = circle_arc if mode == "exact" else cubic_circle_arc
    q = math.pi / 2
    return CompositeCurve(tuple(build(center, radius, i * q, (i + 1) * q) for i in range(4)))


# ---------------------------------------------------------------------------
# Rescaling and labels
# ---------------------------------------------------------------------------


def unit_box_map(lo, hi) -> AffineMap:
    """Uniform scale + translation taking the box [lo, hi] into [-1, 1]^n."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    half = 0.5 * (hi - lo)
    if not np.max(half) > 0:
        raise InvalidInputError("degenerate bounding box: all points coincide")
    s = 1.0 / np.max(half)
    center = 0.5 * (hi + lo)
    return AffineMap(s * np.eye(len(lo)), -s * center)


def rescale_to_unit_box(dataset):
    """Map a whole dataset into [-1, 1]^n with one uniform scale + translation.

    Patch datasets use the control-point bounding box (which contains the
    patches, weights being positive); cloud datasets use the points.
    """
    if len(dataset) == 0:
        raise InvalidInputError("cannot rescale an empty dataset")
    if isinstance(dataset, CloudDataset):
        pts = np.vstack([c.points for c in dataset.clouds])
        m = unit_box_map(pts.min(axis=0), pts.max(axis=0))
        clouds = tuple(PointCloud(m(c.points)) for c in dataset.clouds)
        return CloudDataset(clouds, dataset.truth_labels, dataset.truth_degrees)
    boxes = [p.bounding_box() for p in dataset.patches]
    lo = np.min([b[0] for b in boxes], axis=0)
    hi = np.max([b[1] for b in boxes], axis=0)
    m = unit_box_map(lo, hi)
    patches = tuple(transform_patch(p, m) for p in dataset.patches)
    return LabeledDataset(patches, dataset.truth_labels, dataset.truth_degrees)


def normalize_coefficients(coeffs) -> np.ndarray:
    """Unit 2-norm, first nonzero coefficient positive."""
    c = np.asarray(coeffs, dtype=float)
    c = c / np.linalg.norm(c)
    nz = np.flatnonzero(np.abs(c) > LABEL_TOL)
    if nz.size and c[nz[0]] < 0:
        c = -c
    return c


def labels_from_coefficients(coeff_vectors, tol=LABEL_TOL) -> list:
    """Group primitives whose normalised implicit coefficients agree within ``tol``."""
    reps = []
    labels = []
    for c in coeff_vectors:
        c = normalize_coefficients(c)
        for i, r in enumerate(reps):
            if r.shape == c.shape and np.max(np.abs(r - c)) < tol:
                labels.append(i)
                break
        else:
            reps.append(c)
            labels.append(len(reps) - 1)
    return labels


def line_coefficients(p0, p1) -> np.ndarray:
    """(c, a, b) of a*x + b*y + c = 0 through two points, graded-lex order."""
    (x0, y0), (x1, y1) = p0, p1
    a, b = y0 - y1, x1 - x0
    return np.array([-(a * x0 + b * y0), a, b])


def circle_coefficients(center, radius) -> np.ndarray:
    """Graded-lex coefficients (1, x, y, x^2, xy, y^2) of the circle equation."""
    cx, cy = center
    return np.array([cx * cx + cy * cy - radius * radius, -2 * cx, -2 * cy, 1.0, 0.0, 1.0])


# ---------------------------------------------------------------------------
# Synthetic datasets
# ---------------------------------------------------------------------------


def _affine_2d(rng) -> AffineMap:
    dil = rng.uniform(0.5, 2.0, size=2)
    theta = rng.uniform(0.0, 2 * math.pi)
    shift = rng.uniform(-1.0, 1.0, size=2)
    return AffineMap.scaling(dil).then(AffineMap.rotation(theta)).then(AffineMap.translation(shift))


def _subintervals(rng, lo, hi, count, min_length, max_length=math.inf):
    """``count`` disjoint random subintervals of [lo, hi], one per equal slot."""
    slot = (hi - lo) / count
    out = []
    for i in range(count):
        top = min(0.9 * slot, max_length)
        length = rng.uniform(min_length, max(top, min_length))
        start = lo + i * slot + rng.uniform(0.0, max(slot - length, 0.0))
        out.append((start, start + length))
    return out


_CONIC_RANGES = {
    "line": (-1.0, 1.0),
    "parabola": (-1.0, 1.0),
    "ellipse": (0.0, 2 * math.pi),
    "hyperbola": (-1.2, 1.2),
}


def _canonical_segment(kind, a, b, phase=0.0) -> Patch:
    if kind == "line":
        return line_segment((a, 0.0), (b, 0.0))
    if kind == "parabola":
        return parabola_segment(a, b)
    if kind == "ellipse":
        return circle_arc((0.0, 0.0), 1.0, a + phase, b + phase)
    if kind == "hyperbola":
        return hyperbola_segment(a, b)
    raise InvalidInputError(f"unknown conic type {kind!r}")


def generate_conic_family(
    num_curves: int,
    segments_per_curve=(2, 4),
    seed: int = 0,
    types: Iterable[str] | None = None,
    min_length: float = 0.1,
    rescale: bool = True,
) -> LabeledDataset:
    """Random lines/parabolas/ellipses/hyperbolas, each cut into disjoint segments.

    Each curve is a canonical form (y=0, y=x^2, x^2+y^2=1, x^2-y^2=1) put
    through a random dilation, rotation and translation.  ``segments_per_curve``
    is an inclusive ``(lo, hi)`` range or a fixed integer.
    """
    if num_curves < 1:
        raise InvalidInputError("num_curves must be >= 1")
    types = tuple(types) if types is not None else CONIC_TYPES
    for t in types:
        if t not in CONIC_TYPES:
            raise InvalidInputError(f"unknown conic type {t!r}")
    if isinstance(segments_per_curve, int):
        segments_per_curve = (segments_per_curve, segments_per_curve)
    lo_seg, hi_seg = segments_per_curve
    if lo_seg < 1 or hi_seg < lo_seg:
        raise InvalidInputError("invalid segments_per_curve range")
    rng = np.random.default_rng(seed)
    patches, labels, degrees = [], [], []
    for i in range(num_curves):
        kind = types[rng.integers(len(types))]
        count = int(rng.integers(lo_seg, hi_seg + 1))
        lo, hi = _CONIC_RANGES[kind]
        max_len = 0.9 * math.pi if kind == "ellipse" else math.inf
        phase = rng.uniform(0.0, 2 * math.pi) if kind == "ellipse" else 0.0
        m = _affine_2d(rng)
        for a, b in _subintervals(rng, lo, hi, count, min_length, max_len):
            patches.append(transform_patch(_canonical_segment(kind, a, b, phase), m))
            labels.append(i)
            degrees.append(1 if kind == "line" else 2)
    ds = LabeledDataset(patches, labels, degrees)
    return rescale_to_unit_box(ds) if rescale else ds


def generate_bezier_family(
    degree: int,
    num_curves: int,
    segments_per_curve=(2, 4),
    seed: int = 0,
    min_length: float = 0.1,
    rescale: bool = True,
) -> LabeledDataset:
    """Random polynomial Bezier curves of ``degree`` split into disjoint segments.

    A generic polynomial curve of degree d has implicit degree d.
    """
    if isinstance(segments_per_curve, int):
        segments_per_curve = (segments_per_curve, segments_per_curve)
    rng = np.random.default_rng(seed)
    patches, labels = [], []
    for i in range(num_curves):
        curve = Patch(rng.uniform(-1.0, 1.0, size=(degree + 1, 2)))
        count = int(rng.integers(segments_per_curve[0], segments_per_curve[1] + 1))
        for a, b in _subintervals(rng, 0.0, 1.0, count, min_length / 2):
            patches.append(restrict_patch(curve, ((a, b),)))
            labels.append(i)
    ds = LabeledDataset(patches, labels, [degree] * len(patches))
    return rescale_to_unit_box(ds) if rescale else ds


def generate_gear(teeth: int, mode: str = "exact") -> LabeledDataset:
    """Planar gear outline with ``4*teeth + 1`` patches.

    Per tooth: outer arc (r=2), falling radial side, root arc (r=1.5), rising
    radial side; then one inner circle (r=1) as a closed chain of quarter arcs.
    Every tooth occupies an angular period 2*pi/teeth, half outer and half root.
    ``mode`` is ``"exact"`` (rational arcs) or ``"cubic_bezier"``.
    """
    if teeth < 2:
        raise InvalidInputError("a gear needs at least 2 teeth")
    if mode not in ("exact", "cubic_bezier"):
        raise InvalidInputError(f"unknown gear mode {mode!r}")
    arc = circle_arc if mode == "exact" else cubic_circle_arc
    r_out, r_root, r_in = GEAR_RADII
    period = 2 * math.pi / teeth
    half = period / 2
    origin = (0.0, 0.0)
    patches, coeffs, degrees = [], [], []

    def radial(theta, r0, r1):
        u = np.array([math.cos(theta), math.sin(theta)])
        return line_segment(r0 * u, r1 * u), line_coefficients((0.0, 0.0), u)

    for k in range(teeth):
        t0 = k * period
        t1 = t0 + half
        t2 = t0 + period
        patches.append(arc(origin, r_out, t0, t1))
        coeffs.append(circle_coefficients(origin, r_out))
        seg, c = radial(t1, r_out, r_root)
        patches.append(seg)
        coeffs.append(c)
        patches.append(arc(origin, r_root, t1, t2))
        coeffs.append(circle_coefficients(origin, r_root))
        seg, c = radial(t2, r_root, r_out)
        patches.append(seg)
        coeffs.append(c)
        degrees.extend([2, 1, 2, 1])
    patches.append(full_circle(origin, r_in, mode))
    coeffs.append(circle_coefficients(origin, r_in))
    degrees.append(2)
    return LabeledDataset(patches, labels_from_coefficients(coeffs), degrees)


def sample_dataset(dataset: LabeledDataset, samples_per_dim: int) -> CloudDataset:
    clouds = tuple(sample_patch(p, samples_per_dim) for p in dataset.patches)
    return CloudDataset(clouds, dataset.truth_labels, dataset.truth_degrees)


def add_noise(dataset, sigma: float, seed: int, samples_per_dim: int | None = None) -> CloudDataset:
    """Perturb every sampled coordinate with independent N(0, sigma^2) noise.

    ``dataset`` is either a :class:`CloudDataset` or a :class:`LabeledDataset`,
    which is sampled first with ``samples_per_dim`` points per parameter.
    """
    if sigma < 0:
        raise InvalidInputError("sigma must be >= 0")
    if isinstance(dataset, LabeledDataset):
        if samples_per_dim is None:
            raise InvalidInputError("samples_per_dim is required to sample a patch dataset")
        dataset = sample_dataset(dataset, samples_per_dim)
    rng = np.random.default_rng(seed)
    clouds = []
    for c in dataset.clouds:
        noise = rng.normal(0.0, sigma, size=c.points.shape) if sigma > 0 else 0.0
        clouds.append(PointCloud(c.points + noise))
    return CloudDataset(clouds, dataset.truth_labels, dataset.truth_degrees)


# --- surfaces ---------------------------------------------------------------


def bilinear_patch(p00, p10, p01, p11) -> Patch:
    return Patch(np.array([[p00, p01], [p10, p11]], dtype=float))


def revolution_patch(profile: Patch, a0: float, a1: float) -> Patch:
    """Surface of revolution about the z-axis.

    ``profile`` is a planar curve in the (rho, z) half-plane; the surface is
    its sweep for azimuth in [a0, a1] (span < pi), as a tensor product of an
    exact circle arc and the profile.
    """
    ring = circle_arc((0.0, 0.0), 1.0, a0, a1)
    cu, wu = ring.control_points, ring.weights
    prof = profile.control_points
    wv = profile.weights if profile.weights is not None else np.ones(len(prof))
    P = np.empty((len(cu), len(prof), 3))
    P[..., 0] = cu[:, None, 0] * prof[None, :, 0]
    P[..., 1] = cu[:, None, 1] * prof[None, :, 0]
    P[..., 2] = prof[None, :, 1]
    return Patch(P, np.outer(wu, wv))


def _split_range(lo, hi, n):
    edges = np.linspace(lo, hi, n + 1)
    return list(zip(edges[:-1], edges[1:]))


def _plane_pieces(rng, splits):
    a, b = rng.uniform(0.15, 0.35, size=2)
    pieces = []
    for u0, u1 in _split_range(-a, a, splits[0]):
        for v0, v1 in _split_range(-b, b, splits[1]):
            pieces.append(
                bilinear_patch((u0, v0, 0.0), (u1, v0, 0.0), (u0, v1, 0.0), (u1, v1, 0.0))
            )
    return pieces


def _revolution_pieces(rng, kind, splits):
    span = rng.uniform(0.5 * math.pi, min(1.5 * math.pi, 0.9 * math.pi * splits[0]))
    a0 = rng.uniform(0.0, 2 * math.pi)
    if kind == "sphere":
        r = rng.uniform(0.15, 0.35)
        v_lo, v_hi = rng.uniform(-1.2, -0.4), rng.uniform(0.4, 1.2)

        def profile(v0, v1):
            return circle_arc((0.0, 0.0), r, v0, v1)

    elif kind == "cylinder":
        r = rng.uniform(0.15, 0.3)
        h = rng.uniform(0.2, 0.4)
        v_lo, v_hi = -h, h

        def profile(v0, v1):
            return line_segment((r, v0), (r, v1))

    elif kind == "cone":
        slope = math.tan(rng.uniform(0.3, 0.8))
        v_lo = rng.uniform(0.1, 0.2)
        v_hi = v_lo + rng.uniform(0.2, 0.4)

        def profile(v0, v1):
            return line_segment((slope * v0, v0), (slope * v1, v1))

    else:
        raise InvalidInputError(f"unknown surface kind {kind!r}")
    pieces = []
    for u0, u1 in _split_range(a0, a0 + span, splits[0]):
        for v0, v1 in _split_range(v_lo, v_hi, splits[1]):
            pieces.append(revolution_patch(profile(v0, v1), u0, u1))
    return pieces


def generate_surface_primitives(kinds: Sequence[str], seed: int = 0, splits=(2, 2), rescale=True):
    """One randomly placed primitive per entry of ``kinds``, each cut into a grid of sub-patches."""
    rng = np.random.default_rng(seed)
    patches, labels, degrees = [], [], []
    for i, kind in enumerate(kinds):
        if kind not in SURFACE_KINDS:
            raise InvalidInputError(f"unknown surface kind {kind!r}")
        local = _plane_pieces(rng, splits) if kind == "plane" else _revolution_pieces(rng, kind, splits)
        rot = Rotation.random(random_state=rng).as_matrix()
        shift = rng.uniform(-0.6, 0.6, size=3)
        m = AffineMap(rot, shift)
        for p in local:
            patches.append(transform_patch(p, m))
            labels.append(i)
            degrees.append(1 if kind == "plane" else 2)
    ds = LabeledDataset(patches, labels, degrees)
    return rescale_to_unit_box(ds) if rescale else ds


def generate_quadric_surfaces(kinds, count: int, seed: int = 0, splits=(2, 2)) -> LabeledDataset:
    """``count`` primitives with kinds drawn uniformly from ``kinds``."""
    if count < 1:
        raise InvalidInputError("count must be >= 1")
    pool = sorted(set(kinds))
    rng = np.random.default_rng(seed)
    chosen = [pool[i] for i in rng.integers(len(pool), size=count)]
    return generate_surface_primitives(chosen, seed=int(rng.integers(2**31)), splits=splits)


def random_polynomial_surfaces(bidegree, count, seed=0) -> list:
    """Random polynomial tensor-product patches with control points in [-1, 1]^3."""
    rng = np.random.default_rng(seed)
    shape = (bidegree[0] + 1, bidegree[1] + 1, 3)
    return [Patch(rng.uniform(-1.0, 1.0, size=shape)) for _ in range(count)]
