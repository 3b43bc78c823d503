"""Uniform grids, complex fields, weighted sup norms, incident waves and
pointwise nonlinearities.

Weighted norms use the bracket weight <x> = sqrt(1 + |x|^2) and
||w||_alpha = sup <x>^alpha |w(x)|.  The decay exponent the resolvent
delivers for a source decaying at rate alpha is

    tau(alpha) = alpha - (dim+1)/2   for (dim+1)/2 < alpha < dim,
    tau(alpha) = (dim-1)/2           for alpha >= dim,

continuous across alpha = dim.

Nonlinearities act pointwise.  The power kind is f(x, u) = Q(x)|u|^(p-2)u
with real coefficient Q and 2 < p (< 2 dim/(dim-2) in dimension 3); its
derivative at u is the real-linear map

    v  ->  Q(x) ( (p/2)|u|^(p-2) v  +  ((p-2)/2)|u|^(p-4) u^2 conj(v) ),

which vanishes at u = 0.  The affine kind is f(x, u) = a(x) u + b(x).
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

__all__ = [
    "DEFAULT_MAX_POINTS",
    "Grid",
    "ComplexField",
    "WeightedNormResult",
    "BoundCheck",
    "IncidentWave",
    "NonlinearitySpec",
    "weighted_norm",
    "tau",
    "sphere_quadrature",
    "product_gauss_sphere",
    "make_incident",
    "apply_nonlinearity",
    "nonlinearity_derivative",
    "estimate_lipschitz",
    "restrict_field",
    "embed_field",
    "save_field",
    "load_field",
    "write_slice_csv",
]

DEFAULT_MAX_POINTS = 1 << 22


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian grid on [-half_width, half_width]^dim."""

    dim: int
    half_width: float
    points_per_axis: int
    max_points: int = DEFAULT_MAX_POINTS

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if not (math.isfinite(self.half_width) and self.half_width > 0.0):
            raise ValueError("half_width must be finite and > 0")
        if self.points_per_axis < 2:
            raise ValueError("points_per_axis must be >= 2")
        if self.points_per_axis ** self.dim > self.max_points:
            raise ValueError(
                f"grid of {self.points_per_axis}^{self.dim} points exceeds "
                f"the memory cap of {self.max_points} points")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points_per_axis - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points_per_axis)

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        ax = self.axis()
        return tuple(np.meshgrid(*([ax] * self.dim), indexing="ij"))

    def radius(self) -> np.ndarray:
        xs = self.meshgrid()
        return np.sqrt(sum(x * x for x in xs))

    def bracket(self) -> np.ndarray:
        """<x> = sqrt(1 + |x|^2) on the grid."""
        r = self.radius()
        return np.sqrt(1.0 + r * r)


@dataclass
class ComplexField:
    """Complex values on a grid.  All values must be finite."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        self.values = vals

    @classmethod
    def zeros(cls, grid: Grid) -> "ComplexField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.values.copy())

    def conj(self) -> "ComplexField":
        return ComplexField(self.grid, np.conj(self.values))

    def _require_same_grid(self, other: "ComplexField"):
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "ComplexField") -> "ComplexField":
        self._require_same_grid(other)
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        self._require_same_grid(other)
        return ComplexField(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "ComplexField":
        return ComplexField(self.grid, self.values * complex(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class WeightedNormResult:
    alpha: float
    value: float
    argmax_point: tuple[float, ...]


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of one named inequality: satisfied iff margin >= 0."""

    name: str
    lhs: float
    rhs: float
    margin: float
    satisfied: bool
    context: dict = field(default_factory=dict)


def weighted_norm(w: ComplexField, alpha: float) -> WeightedNormResult:
    """sup over the grid of <x>^alpha |w(x)|, with the attaining point."""
    if not (math.isfinite(alpha) and alpha >= 0.0):
        raise ValueError("alpha must be finite and >= 0")
    weighted = w.grid.bracket() ** alpha * np.abs(w.values)
    flat = int(np.argmax(weighted))
    idx = np.unravel_index(flat, w.grid.shape)
    ax = w.grid.axis()
    point = tuple(float(ax[i]) for i in idx)
    return WeightedNormResult(alpha=alpha, value=float(weighted.flat[flat]), argmax_point=point)


def tau(alpha: float, dim: int) -> float:
    """Decay exponent delivered by the resolvent for sources decaying at
    rate alpha; requires alpha > (dim+1)/2."""
    lo = 0.5 * (dim + 1)
    if alpha <= lo:
        raise ValueError(f"alpha must exceed (dim+1)/2 = {lo}, got {alpha}")
    if alpha < dim:
        return alpha - lo
    return 0.5 * (dim - 1)


# -- sphere quadrature --------------------------------------------------------

# 26-point octahedral rule on S^2, exact through degree 7.  Weights are
# fractions of the full measure 4 pi.
_LEB26_GROUPS = (
    (1.0 / 21.0, "axes"),
    (4.0 / 105.0, "edges"),
    (27.0 / 840.0, "corners"),
)


def _octahedral_points(group: str) -> np.ndarray:
    if group == "axes":
        pts = []
        for ax in range(3):
            for s in (+1.0, -1.0):
                v = [0.0, 0.0, 0.0]
                v[ax] = s
                pts.append(v)
        return np.array(pts)
    if group == "edges":
        r = 1.0 / math.sqrt(2.0)
        pts = []
        for a in range(3):
            for b in range(a + 1, 3):
                for sa in (+1.0, -1.0):
                    for sb in (+1.0, -1.0):
                        v = [0.0, 0.0, 0.0]
                        v[a], v[b] = sa * r, sb * r
                        pts.append(v)
        return np.array(pts)
    r = 1.0 / math.sqrt(3.0)
    return np.array([[sx * r, sy * r, sz * r]
                     for sx in (+1.0, -1.0)
                     for sy in (+1.0, -1.0)
                     for sz in (+1.0, -1.0)])


def product_gauss_sphere(n_polar: int, n_az: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre in cos(theta) crossed with uniform azimuth on S^2.
    Returns (directions, weights); weights sum to 4 pi."""
    mu, wmu = np.polynomial.legendre.leggauss(n_polar)
    phi = np.arange(n_az) * 2.0 * np.pi / n_az
    st = np.sqrt(1.0 - mu**2)
    dirs = np.empty((n_polar * n_az, 3))
    wts = np.empty(n_polar * n_az)
    i = 0
    for m, s, w in zip(mu, st, wmu):
        dirs[i:i + n_az, 0] = s * np.cos(phi)
        dirs[i:i + n_az, 1] = s * np.sin(phi)
        dirs[i:i + n_az, 2] = m
        wts[i:i + n_az] = w * 2.0 * np.pi / n_az
        i += n_az
    return dirs, wts


def sphere_quadrature(dim: int, points: int = 26) -> tuple[np.ndarray, np.ndarray]:
    """Directions and positive weights on the unit sphere S^(dim-1); weights
    sum to the sphere measure (2 pi for dim 2, 4 pi for dim 3)."""
    if dim == 2:
        if points < 4:
            raise ValueError("need at least 4 points on the circle")
        ang = np.arange(points) * 2.0 * np.pi / points
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        return dirs, np.full(points, 2.0 * np.pi / points)
    if dim != 3:
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    if points == 26:
        dirs = []
        wts = []
        for frac, group in _LEB26_GROUPS:
            pts = _octahedral_points(group)
            dirs.append(pts)
            wts.append(np.full(len(pts), frac * 4.0 * np.pi))
        return np.concatenate(dirs), np.concatenate(wts)
    # fall back to a product rule of comparable size
    n_polar = max(2, int(round(math.sqrt(points / 2.0))))
    return product_gauss_sphere(n_polar, 2 * n_polar)


# -- incident waves -----------------------------------------------------------

@dataclass
class IncidentWave:
    """Incident field description: a plane wave, a finite Herglotz
    superposition of plane waves, or a caller-supplied field."""

    kind: str
    k: float
    direction: np.ndarray | None = None
    directions: np.ndarray | None = None
    weights: np.ndarray | None = None
    density: np.ndarray | None = None
    custom: ComplexField | None = None

    @classmethod
    def plane(cls, k: float, direction) -> "IncidentWave":
        d = np.asarray(direction, dtype=float)
        norm = float(np.linalg.norm(d))
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-8:
            raise ValueError(f"direction must be unit length, |d| = {norm}")
        if k <= 0:
            raise ValueError("k must be > 0")
        return cls(kind="plane", k=float(k), direction=d / norm)

    @classmethod
    def herglotz(cls, k: float, directions, weights, density) -> "IncidentWave":
        dirs = np.asarray(directions, dtype=float)
        wts = np.asarray(weights, dtype=float)
        dens = np.asarray(density, dtype=complex)
        if dirs.ndim != 2 or dirs.shape[0] != len(wts) or len(dens) != len(wts):
            raise ValueError("directions, weights and density sizes disagree")
        if np.any(wts <= 0.0):
            raise ValueError("quadrature weights must be positive")
        measure = {2: 2.0 * np.pi, 3: 4.0 * np.pi}[dirs.shape[1]]
        if abs(wts.sum() - measure) > 1e-6 * measure:
            raise ValueError("weights must sum to the sphere measure")
        if k <= 0:
            raise ValueError("k must be > 0")
        return cls(kind="herglotz", k=float(k), directions=dirs, weights=wts, density=dens)

    @classmethod
    def from_field(cls, k: float, fld: ComplexField) -> "IncidentWave":
        if k <= 0:
            raise ValueError("k must be > 0")
        return cls(kind="custom", k=float(k), custom=fld)


def make_incident(spec: IncidentWave, grid: Grid) -> ComplexField:
    """Evaluate the incident wave on the grid."""
    if spec.kind == "plane":
        xs = grid.meshgrid()
        phase = sum(x * d for x, d in zip(xs, spec.direction))
        return ComplexField(grid, np.exp(1j * spec.k * phase))
    if spec.kind == "herglotz":
        if spec.directions.shape[1] != grid.dim:
            raise ValueError("direction dimension does not match grid")
        xs = grid.meshgrid()
        acc = np.zeros(grid.shape, dtype=complex)
        for d, w, g in zip(spec.directions, spec.weights, spec.density):
            phase = sum(x * di for x, di in zip(xs, d))
            acc += w * g * np.exp(1j * spec.k * phase)
        return ComplexField(grid, acc)
    if spec.kind == "custom":
        if spec.custom.grid != grid:
            raise ValueError("custom incident field lives on a different grid")
        return spec.custom.copy()
    raise ValueError(f"unknown incident kind {spec.kind!r}")


# -- nonlinearities -----------------------------------------------------------

@dataclass
class NonlinearitySpec:
    """Pointwise nonlinearity f(x, u) with decay rate alpha for the
    coefficient.  regime_tags is metadata ('f1', 'f2', 'defocusing');
    'defocusing' is validated: real Q <= 0 vanishing on the boundary layer."""

    kind: str
    alpha: float
    Q: ComplexField | None = None
    p: float | None = None
    a: ComplexField | None = None
    b: ComplexField | None = None
    custom_fn: Callable | None = None
    custom_dfn: Callable | None = None
    lipschitz_ell: float | None = None
    regime_tags: frozenset = frozenset()

    @property
    def grid(self) -> Grid:
        for f in (self.Q, self.a, self.b):
            if f is not None:
                return f.grid
        raise ValueError("custom nonlinearity carries no grid")

    @classmethod
    def power(cls, Q: ComplexField, p: float, alpha: float, tags=()) -> "NonlinearitySpec":
        if not np.all(Q.values.imag == 0.0):
            raise ValueError("power coefficient Q must be real-valued")
        if p <= 2.0:
            raise ValueError(f"power p must exceed 2, got {p}")
        dim = Q.grid.dim
        if dim >= 3 and p >= 2.0 * dim / (dim - 2.0):
            raise ValueError(f"power p must stay below 2*dim/(dim-2) = "
                             f"{2.0 * dim / (dim - 2.0)}, got {p}")
        spec = cls(kind="power", alpha=_check_alpha(alpha, dim), Q=Q, p=float(p),
                   regime_tags=frozenset(tags))
        _validate_tags(spec)
        return spec

    @classmethod
    def affine(cls, a: ComplexField, b: ComplexField, alpha: float, tags=()) -> "NonlinearitySpec":
        if a.grid != b.grid:
            raise ValueError("affine coefficients live on different grids")
        spec = cls(kind="affine", alpha=_check_alpha(alpha, a.grid.dim), a=a, b=b,
                   regime_tags=frozenset(tags))
        _validate_tags(spec)
        return spec

    @classmethod
    def custom(cls, fn: Callable, alpha: float, grid: Grid,
               dfn: Callable | None = None, tags=()) -> "NonlinearitySpec":
        # carry the grid through a zero placeholder coefficient
        holder = ComplexField.zeros(grid)
        return cls(kind="custom", alpha=_check_alpha(alpha, grid.dim), Q=holder,
                   custom_fn=fn, custom_dfn=dfn, regime_tags=frozenset(tags))

    def support_diameter(self) -> float:
        """Diagonal of the bounding box of the nonzero coefficient cells
        (an upper bound for the support diameter)."""
        coef = self.Q if self.kind == "power" else self.a
        if coef is None:
            raise ValueError("no coefficient field for support diameter")
        mask = np.abs(coef.values) > 0.0
        if not mask.any():
            return 0.0
        ax = coef.grid.axis()
        h = coef.grid.spacing
        extents = []
        for axis_idx in range(coef.grid.dim):
            proj = mask.any(axis=tuple(i for i in range(coef.grid.dim) if i != axis_idx))
            idx = np.nonzero(proj)[0]
            extents.append(ax[idx[-1]] - ax[idx[0]] + h)
        return float(np.sqrt(sum(e * e for e in extents)))


def _check_alpha(alpha: float, dim: int) -> float:
    lo = 0.5 * (dim + 1)
    if not (math.isfinite(alpha) and alpha > lo):
        raise ValueError(f"alpha must exceed (dim+1)/2 = {lo}, got {alpha}")
    return float(alpha)


def _validate_tags(spec: NonlinearitySpec):
    known = {"f1", "f2", "defocusing"}
    unknown = set(spec.regime_tags) - known
    if unknown:
        raise ValueError(f"unknown regime tags {sorted(unknown)}")
    if "defocusing" in spec.regime_tags:
        if spec.kind != "power":
            raise ValueError("defocusing tag applies to the power kind")
        q = spec.Q.values.real
        if np.any(q > 0.0):
            raise ValueError("defocusing requires Q <= 0 everywhere")
        edge = np.ones(spec.Q.grid.shape, dtype=bool)
        edge[(slice(1, -1),) * spec.Q.grid.dim] = False
        if np.any(q[edge] != 0.0):
            raise ValueError("defocusing requires Q to vanish on the boundary layer "
                             "(compact support inside the box)")


def apply_nonlinearity(f: NonlinearitySpec, u: ComplexField) -> ComplexField:
    """Pointwise f(x, u(x))."""
    if f.kind == "custom":
        if u.grid != f.grid:
            raise ValueError("field grid does not match nonlinearity grid")
        return ComplexField(u.grid, np.asarray(f.custom_fn(u.grid.meshgrid(), u.values),
                                               dtype=complex))
    if u.grid != f.grid:
        raise ValueError("field grid does not match nonlinearity grid")
    if f.kind == "power":
        au = np.abs(u.values)
        return ComplexField(u.grid, f.Q.values.real * au ** (f.p - 2.0) * u.values)
    if f.kind == "affine":
        return ComplexField(u.grid, f.a.values * u.values + f.b.values)
    raise ValueError(f"unknown nonlinearity kind {f.kind!r}")


def nonlinearity_derivative(f: NonlinearitySpec, u: ComplexField, v: ComplexField) -> ComplexField:
    """Directional derivative of u -> f(x, u) at u applied to v, as a
    real-linear map on the complex values."""
    if u.grid != v.grid:
        raise ValueError("u and v live on different grids")
    if f.kind == "custom":
        if f.custom_dfn is None:
            raise ValueError("custom nonlinearity has no derivative rule")
        return ComplexField(u.grid, np.asarray(
            f.custom_dfn(u.grid.meshgrid(), u.values, v.values), dtype=complex))
    if u.grid != f.grid:
        raise ValueError("field grid does not match nonlinearity grid")
    if f.kind == "affine":
        return ComplexField(u.grid, f.a.values * v.values)
    au = np.abs(u.values)
    amp = au ** (f.p - 2.0)
    # |u|^(p-4) u^2 = |u|^(p-2) (u/|u|)^2, removing the 0/0 at u = 0
    unit = np.where(au > 0.0, u.values / np.where(au > 0.0, au, 1.0), 0.0)
    lin = 0.5 * f.p * amp * v.values
    anti = 0.5 * (f.p - 2.0) * amp * unit * unit * np.conj(v.values)
    return ComplexField(u.grid, f.Q.values.real * (lin + anti))


def _power_quotient_sup(p: float, cap: float, samples: int, rng, rounds: int) -> float:
    """sup over |u|,|v| <= cap of ||u|^(p-2)u - |v|^(p-2)v| / |u - v| by
    randomized search with shrinking refinement around the best pair."""
    def g(z):
        return np.abs(z) ** (p - 2.0) * z

    def quot(u, v):
        d = np.abs(u - v)
        with np.errstate(invalid="ignore", divide="ignore"):
            q = np.abs(g(u) - g(v)) / d
        return np.where(d > 0.0, q, 0.0)

    def draw(n):
        u = cap * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
        mode = rng.uniform(0, 1, n)
        eps = cap * 10.0 ** rng.uniform(-9, -1, n) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
        v_near = u + eps
        v_far = cap * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
        v = np.where(mode < 0.5, v_near, v_far)
        av = np.abs(v)
        v = np.where(av > cap, v * (cap / np.maximum(av, 1e-300)), v)
        return u, v

    u, v = draw(samples)
    q = quot(u, v)
    best = float(np.max(q))
    bu, bv = u[np.argmax(q)], v[np.argmax(q)]
    scale = 0.3 * cap
    for _ in range(rounds):
        n = max(64, samples // 4)
        du = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        dv = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        u = bu + du
        v = bv + dv
        keep = (np.abs(u) <= cap) & (np.abs(v) <= cap)
        if keep.any():
            q = quot(u[keep], v[keep])
            if q.size and float(np.max(q)) > best:
                best = float(np.max(q))
                bu, bv = u[keep][np.argmax(q)], v[keep][np.argmax(q)]
        scale *= 0.35
    return best


def estimate_lipschitz(f: NonlinearitySpec, cap: float, samples: int = 4000,
                       seed: int = 0, rounds: int = 8) -> float:
    """Estimate sup over x, |u|,|v| <= cap of
    <x>^alpha |f(x,u) - f(x,v)| / |u - v|.

    For the affine kind the supremum is exactly the weighted norm of a.  For
    the power kind the x and (u, v) searches separate, so only the pair
    search is randomized.  The result is a lower estimate, not a certificate;
    it is stored into lipschitz_ell when it improves on the current value.
    """
    if cap <= 0.0:
        raise ValueError("cap must be > 0")
    rng = np.random.default_rng(seed)
    if f.kind == "affine":
        est = weighted_norm(f.a, f.alpha).value
    elif f.kind == "power":
        coef = weighted_norm(f.Q, f.alpha).value
        est = coef * _power_quotient_sup(f.p, cap, samples, rng, rounds)
    else:
        est = _custom_lipschitz(f, cap, samples, rng)
    if f.lipschitz_ell is None or est > f.lipschitz_ell:
        f.lipschitz_ell = est
    return est


def _custom_lipschitz(f: NonlinearitySpec, cap: float, samples: int, rng) -> float:
    xs = f.grid.meshgrid()
    wt = f.grid.bracket() ** f.alpha
    best = 0.0
    for _ in range(max(8, samples // 250)):
        u = complex(cap * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform()))
        if rng.uniform() < 0.5:
            v = u + complex(cap * 10.0 ** rng.uniform(-9, -1) * np.exp(2j * np.pi * rng.uniform()))
            if abs(v) > cap:
                v = u - (v - u)
        else:
            v = complex(cap * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform()))
        if u == v:
            continue
        fu = np.asarray(f.custom_fn(xs, np.full(f.grid.shape, u, dtype=complex)))
        fv = np.asarray(f.custom_fn(xs, np.full(f.grid.shape, v, dtype=complex)))
        q = float(np.max(wt * np.abs(fu - fv))) / abs(u - v)
        best = max(best, q)
    return best


# -- aligned subgrids ---------------------------------------------------------

def _alignment_offset(outer: Grid, inner: Grid) -> int:
    """Index offset of the inner grid's first point inside the outer grid.
    Requires equal spacing and exact node alignment."""
    if outer.dim != inner.dim:
        raise ValueError("grid dimensions differ")
    h0, h1 = outer.spacing, inner.spacing
    if abs(h0 - h1) > 1e-12 * h0:
        raise ValueError("grid spacings differ")
    shift = (inner.half_width - outer.half_width) / h0  # negative or zero
    off = -shift
    n = round(off)
    if abs(off - n) > 1e-9 or n < 0:
        raise ValueError("inner grid nodes do not align with the outer grid")
    if inner.points_per_axis + n > outer.points_per_axis:
        raise ValueError("inner grid does not fit inside the outer grid")
    return int(n)


def restrict_field(fld: ComplexField, inner: Grid) -> ComplexField:
    """Restriction to an aligned subgrid."""
    n = _alignment_offset(fld.grid, inner)
    sl = (slice(n, n + inner.points_per_axis),) * inner.dim
    return ComplexField(inner, fld.values[sl].copy())

def embed_field(fld: ComplexField, outer: Grid) -> ComplexField:
    """Zero-extension to an aligned supergrid."""
    n = _alignment_offset(outer, fld.grid)
    out = np.zeros(outer.shape, dtype=complex)
    sl = (slice(n, n + fld.grid.points_per_axis),) * outer.dim
    out[sl] = fld.values
    return ComplexField(outer, out)


# -- serialization ------------------------------------------------------------

_FIELD_MAGIC = b"CFLD"
_HEADER = struct.Struct("<4sB3xiidd")  # magic, version, dim, M, L, k


def save_field(path, fld: ComplexField, k: float = 0.0):
    """Binary field file: 32-byte header {dim, M, L, k} then row-major
    interleaved re/im little-endian float64."""
    g = fld.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_FIELD_MAGIC, 1, g.dim, g.points_per_axis,
                              g.half_width, float(k)))
        fh.write(np.ascontiguousarray(fld.values).astype("<c16").tobytes())


def load_field(path, max_points: int = DEFAULT_MAX_POINTS) -> tuple[ComplexField, float]:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError("truncated field file header")
        magic, version, dim, m, half_width, k = _HEADER.unpack(head)
        if magic != _FIELD_MAGIC:
            raise ValueError("not a field file")
        if version != 1:
            raise ValueError(f"unsupported field file version {version}")
        grid = Grid(dim=dim, half_width=half_width, points_per_axis=m,
                    max_points=max_points)
        raw = fh.read(16 * m ** dim)
        if len(raw) != 16 * m ** dim:
            raise ValueError("truncated field file payload")
        vals = np.frombuffer(raw, dtype="<c16").astype(complex).reshape(grid.shape)
    return ComplexField(grid, vals), float(k)


def write_slice_csv(path, fld: ComplexField, axis: int | None = None,
                    index: int | None = None):
    """CSV of an axis-aligned slice: coordinates, re, im, abs.  For dim 3 the
    default slices the mid-plane normal to the last axis; dim 2 writes the
    whole field."""
    g = fld.grid
    ax = g.axis()
    if g.dim == 2:
        plane = fld.values
        labels = ("x1", "x2")
    else:
        axis = g.dim - 1 if axis is None else axis
        index = g.points_per_axis // 2 if index is None else index
        if not (0 <= axis < g.dim and 0 <= index < g.points_per_axis):
            raise ValueError("slice axis or index out of range")
        plane = np.take(fld.values, index, axis=axis)
        labels = tuple(f"x{i + 1}" for i in range(g.dim) if i != axis)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([*labels, "re", "im", "abs"])
        for i in range(plane.shape[0]):
            for j in range(plane.shape[1]):
                z = complex(plane[i, j])
                wr.writerow([repr(float(ax[i])), repr(float(ax[j])),
                             repr(z.real), repr(z.imag), repr(abs(z))])
