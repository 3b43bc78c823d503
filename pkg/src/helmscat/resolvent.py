"""Convolution with the outgoing Helmholtz kernel on truncated grids, the
operator-norm surrogate kappa, radiation-condition diagnostics and far-field
extraction.

The resolvent applied to a source h supported in the source box is

    u(x) = integral Phi_k(x - y) h(y) dy,

discretized by the midpoint rule on the shared lattice.  Kernel weights are
tabulated on the difference lattice once per configuration:

  * regular cells: Phi at the cell center times the cell volume,
  * the 3^dim - 1 cells adjacent to the singularity: cell averages of Phi by
    midpoint subsampling (quadrature_order points per axis),
  * the singular cell itself, by one of two rules over the ball of equal
    volume (radius rho):
      - cell_average: the exact ball integral of Phi
          dim 3:  exp(ik rho)(rho/(ik) + 1/k^2) - 1/k^2
          dim 2:  (i pi rho / 2k) H^(1)_1(k rho) - 1/k^2
      - subtraction: split Phi into its static singular part and a bounded
        remainder; integrate the static part over the ball exactly and take
        the remainder's limit value times the cell volume.

Direct summation is the reference path; the fast path evaluates the same
lattice sum by FFT convolution and agrees with the reference to 1e-10 on
small grids (enforced in tests).

kappa is estimated by pushing the extremal profile <y>^(-alpha) through the
magnitude kernel |Phi_k| and taking the tau(alpha)-weighted sup.  Because the
magnitude kernel is nonnegative, the profile majorizes every unit-norm
source, so the estimate is exact for the truncated discrete operator; an
analytic bound on the discarded exterior integral is reported alongside.
"""

from __future__ import annotations

import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate, signal

from . import fields as _fields
from .fields import ComplexField, Grid, WeightedNormResult, tau, weighted_norm
from .specfun import FundamentalSolutionParams, fundamental_solution, hankel1

__all__ = [
    "ResolventConfig",
    "KappaEstimate",
    "RadiationReport",
    "FarField",
    "apply_resolvent",
    "estimate_kappa",
    "radiation_report",
    "far_field",
    "singular_cell_weight",
]

_EULER_GAMMA = float(np.euler_gamma)


@dataclass(frozen=True)
class ResolventConfig:
    """Discretization of the resolvent.  Source and eval grids share spacing
    and node alignment; the eval grid contains the source grid."""

    source_grid: Grid
    eval_grid: Grid
    singular_rule: str = "cell_average"
    quadrature_order: int = 4
    method: str = "fft"  # "fft" | "direct"

    def __post_init__(self):
        if self.singular_rule not in ("cell_average", "subtraction"):
            raise ValueError(f"unknown singular rule {self.singular_rule!r}")
        if self.method not in ("fft", "direct"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.quadrature_order < 1:
            raise ValueError("quadrature_order must be >= 1")
        # raises when grids are incompatible
        _fields._alignment_offset(self.eval_grid, self.source_grid)
        m = 2 * self.eval_grid.points_per_axis - 1
        if m ** self.eval_grid.dim > self.eval_grid.max_points * 8:
            raise ValueError("difference lattice exceeds the memory cap")

    @classmethod
    def padded(cls, source_grid: Grid, pad_cells: int = 0, **kw) -> "ResolventConfig":
        """Eval grid = source grid extended by pad_cells nodes per side."""
        if pad_cells < 0:
            raise ValueError("pad_cells must be >= 0")
        h = source_grid.spacing
        eval_grid = Grid(
            dim=source_grid.dim,
            half_width=source_grid.half_width + pad_cells * h,
            points_per_axis=source_grid.points_per_axis + 2 * pad_cells,
            max_points=source_grid.max_points,
        )
        return cls(source_grid=source_grid, eval_grid=eval_grid, **kw)


@dataclass(frozen=True)
class KappaEstimate:
    """tau-weighted norm of |Phi_k| applied to the extremal profile."""

    alpha: float
    tau_alpha: float
    kappa_hat: float
    grid: Grid
    truncation_tail_bound: float


@dataclass(frozen=True)
class RadiationReport:
    """Outgoing-radiation residuals over a family of ball radii."""

    radii: tuple[float, ...]
    averaged_residual: tuple[float, ...]
    pointwise_residual: tuple[float, ...]
    inner_radius: float
    monotone_decreasing: bool


@dataclass(frozen=True)
class FarField:
    directions: np.ndarray
    amplitude: np.ndarray
    extraction_radius: float
    convergence_indicator: np.ndarray


def _equal_volume_radius(dim: int, h: float) -> float:
    if dim == 3:
        return h * (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)
    return h / math.sqrt(np.pi)


def singular_cell_weight(dim: int, k: float, h: float, rule: str) -> complex:
    """Quadrature weight of the singular cell: the integral of Phi_k over
    the ball of volume h^dim, by the named rule."""
    rho = _equal_volume_radius(dim, h)
    if rule == "cell_average":
        if dim == 3:
            return complex(np.exp(1j * k * rho) * (rho / (1j * k) + 1.0 / k**2)
                           - 1.0 / k**2)
        return complex(1j * np.pi * rho / (2.0 * k) * hankel1(1.0, k * rho)
                       - 1.0 / k**2)
    # subtraction: exact ball integral of the static part plus the smooth
    # remainder's value at 0 times the cell volume
    if dim == 3:
        return complex(0.5 * rho**2 + 1j * k / (4.0 * np.pi) * h**3)
    static = rho**2 * (1.0 - 2.0 * math.log(rho)) / 4.0
    smooth0 = 0.25j - (math.log(k / 2.0) + _EULER_GAMMA) / (2.0 * np.pi)
    return complex(static + smooth0 * h**2)


def _abs_singular_cell_weight(dim: int, k: float, h: float) -> float:
    """Integral of |Phi_k| over the equal-volume ball."""
    rho = _equal_volume_radius(dim, h)
    if dim == 3:
        # |Phi| = 1/(4 pi r) exactly
        return 0.5 * rho**2
    val, _ = integrate.quad(
        lambda r: 0.25 * abs(hankel1(0.0, k * r)) * 2.0 * np.pi * r, 0.0, rho,
        limit=200)
    return float(val)


def _kernel_values(dim: int, k: float, r: np.ndarray, kind: str) -> np.ndarray:
    params = FundamentalSolutionParams(k=k, dim=dim)
    vals = fundamental_solution(params, r)
    if kind == "magnitude":
        return np.abs(vals)
    if kind == "conjugate":
        return np.conj(vals)
    return vals


def _kernel_table(cfg: ResolventConfig, k: float, kind: str) -> np.ndarray:
    """Cell weights of Phi_k (or |Phi_k| / conj Phi_k) on the difference
    lattice of the eval grid, singular and near-singular cells corrected."""
    g = cfg.eval_grid
    h = g.spacing
    m = g.points_per_axis
    offs = np.arange(-(m - 1), m) * h
    grids = np.meshgrid(*([offs] * g.dim), indexing="ij")
    r = np.sqrt(sum(x * x for x in grids))
    center = (m - 1,) * g.dim
    r[center] = 1.0  # placeholder, overwritten below
    table = _kernel_values(g.dim, k, r, kind) * g.cell_volume

    # near-singular cells: replace the midpoint value by a subsampled average
    q = cfg.quadrature_order
    if q > 1:
        sub = (np.arange(q) + 0.5) / q * h - 0.5 * h
        subgrids = np.meshgrid(*([sub] * g.dim), indexing="ij")
        for idx in np.ndindex(*(3,) * g.dim):
            d = tuple(i - 1 for i in idx)
            if all(v == 0 for v in d):
                continue
            pt = [di * h + sg for di, sg in zip(d, subgrids)]
            rr = np.sqrt(sum(x * x for x in pt))
            avg = np.mean(_kernel_values(g.dim, k, rr, kind))
            cell = tuple(m - 1 + di for di in d)
            table[cell] = avg * g.cell_volume

    if kind == "magnitude":
        table[center] = _abs_singular_cell_weight(g.dim, k, h)
    else:
        w = singular_cell_weight(g.dim, k, h, cfg.singular_rule)
        table[center] = np.conj(w) if kind == "conjugate" else w
    return table


class _TableCache:
    """Small LRU for kernel tables; thread-safe."""

    def __init__(self, capacity: int = 4):
        self._cap = capacity
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, cfg: ResolventConfig, k: float, kind: str) -> np.ndarray:
        key = (cfg, float(k), kind)
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                return self._data[key]
        table = _kernel_table(cfg, k, kind)
        with self._lock:
            self._data[key] = table
            self._data.move_to_end(key)
            while len(self._data) > self._cap:
                self._data.popitem(last=False)
        return table


_tables = _TableCache()


def apply_resolvent(h_field: ComplexField, cfg: ResolventConfig, k: float,
                    kind: str = "outgoing") -> ComplexField:
    """Convolve a source on the source grid with the (tabulated) kernel,
    evaluated on the eval grid.  kind selects the outgoing kernel, its
    complex conjugate (incoming) or its magnitude."""
    if kind not in ("outgoing", "conjugate", "magnitude"):
        raise ValueError(f"unknown kernel kind {kind!r}")
    if h_field.grid != cfg.source_grid:
        raise ValueError("source field does not live on the source grid")
    if not (math.isfinite(k) and k > 0.0):
        raise ValueError("k must be finite and > 0")
    table = _tables.get(cfg, k, kind)
    src = _fields.embed_field(h_field, cfg.eval_grid).values
    if cfg.method == "fft":
        out = signal.fftconvolve(src, table, mode="same")
    else:
        out = _direct_convolve(src, table)
    return ComplexField(cfg.eval_grid, out)


def _direct_convolve(src: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Reference lattice sum: out[e] = sum_s src[s] * table[e - s + m - 1]."""
    m = src.shape[0]
    dim = src.ndim
    out = np.zeros_like(src, dtype=complex)
    for s in np.ndindex(*src.shape):
        v = src[s]
        if v == 0.0:
            continue
        sl = tuple(slice(m - 1 - si, 2 * m - 1 - si) for si in s)
        out += v * table[sl]
    return out


# -- kappa --------------------------------------------------------------------

def _exterior_tail_bound(alpha: float, k: float, dim: int,
                         source_half_width: float, eval_half_width: float) -> float:
    """Bound on the tau-weighted sup of the exterior part
        integral over |y| > L_src of |Phi_k(x-y)| <y>^(-alpha) dy
    for x in the eval box, via |Phi_k(z)| <= C_k |z|^((1-dim)/2) away from
    the singularity and the near-singularity mass of |Phi_k|."""
    rho_x = math.sqrt(dim) * eval_half_width
    r0 = source_half_width
    if dim == 3:
        ck = 1.0 / (4.0 * np.pi)
        near_mass = 0.5  # integral of 1/(4 pi r) over the unit ball
        omega = 4.0 * np.pi
    else:
        ck = 0.25 * math.sqrt(2.0 / (np.pi * k))
        near_mass, _ = integrate.quad(
            lambda r: 0.25 * abs(hankel1(0.0, k * r)) * 2.0 * np.pi * r, 0.0, 1.0,
            limit=200)
        omega = 2.0 * np.pi
    br0 = math.sqrt(1.0 + r0 * r0)
    # y within distance 1 of some eval point: |y| still exceeds the source box
    near = near_mass * br0 ** (-alpha)
    s0 = max(2.0 * rho_x, 2.0 * r0, 2.0)
    half = 0.5 * (dim + 1)
    # annulus r0 < |y| < s0 at kernel distance > 1: |Phi| <= C_k there
    ann, _ = integrate.quad(lambda s: s ** (dim - 1) * (1.0 + s * s) ** (-0.5 * alpha),
                            r0, s0, limit=200)
    mid = ck * omega * ann
    # |y| >= s0 implies |x - y| >= |y|/2
    far = ck * 2.0 ** (0.5 * (dim - 1)) * omega * s0 ** (half - alpha) / (alpha - half)
    weight = (1.0 + rho_x * rho_x) ** (0.5 * tau(alpha, dim))
    return float(weight * (near + mid + far))


def estimate_kappa(alpha: float, cfg: ResolventConfig, k: float) -> KappaEstimate:
    """kappa for the truncated discrete operator, via the extremal profile
    <y>^(-alpha), plus an analytic bound for the discarded exterior."""
    dim = cfg.source_grid.dim
    t = tau(alpha, dim)
    profile = ComplexField(cfg.source_grid,
                           cfg.source_grid.bracket() ** (-alpha) + 0j)
    pushed = apply_resolvent(profile, cfg, k, kind="magnitude")
    wn = weighted_norm(pushed, t)
    tail = _exterior_tail_bound(alpha, k, dim, cfg.source_grid.half_width,
                                cfg.eval_grid.half_width)
    return KappaEstimate(alpha=float(alpha), tau_alpha=t, kappa_hat=wn.value,
                         grid=cfg.source_grid, truncation_tail_bound=tail)


# -- radiation diagnostics ----------------------------------------------------

def _gradient(values: np.ndarray, h: float) -> list[np.ndarray]:
    return list(np.gradient(values, h, edge_order=2))


def _interpolators(grid: Grid, arrays: list[np.ndarray]):
    ax = (grid.axis(),) * grid.dim
    interps = []
    for arr in arrays:
        interps.append((
            interpolate.RegularGridInterpolator(ax, arr.real, method="linear"),
            interpolate.RegularGridInterpolator(ax, arr.imag, method="linear"),
        ))

    def at(points: np.ndarray) -> list[np.ndarray]:
        return [re(points) + 1j * im(points) for re, im in interps]

    return at


def radiation_report(u: ComplexField, k: float, radii, inner_radius: float | None = None,
                     sphere_points: int = 26) -> RadiationReport:
    """Ball-averaged and sphere-sup residuals of the outgoing radiation
    condition.

    averaged(R) = (1/R) sum over grid cells with inner_radius < |x| <= R of
                  |grad u - i k u x/|x||^2 h^dim,
    pointwise(R) = max over sphere directions of
                  R^((dim-1)/2) |du/dr - i k u| at |x| = R.

    The inner exclusion radius keeps point-source test fields integrable; it
    defaults to half the smallest radius.  Radii must stay inside the grid.
    """
    g = u.grid
    radii = tuple(float(R) for R in radii)
    if any(R <= 0 for R in radii) or sorted(radii) != list(radii):
        raise ValueError("radii must be positive and increasing")
    if radii[-1] > g.half_width:
        raise ValueError(f"radius {radii[-1]} exceeds the grid half-width {g.half_width}")
    r_in = 0.5 * radii[0] if inner_radius is None else float(inner_radius)
    if not 0.0 <= r_in < radii[0]:
        raise ValueError("inner radius must lie below the smallest radius")

    h = g.spacing
    grads = _gradient(u.values, h)
    r = g.radius()
    xs = g.meshgrid()
    with np.errstate(invalid="ignore", divide="ignore"):
        units = [np.where(r > 0, x / np.where(r > 0, r, 1.0), 0.0) for x in xs]
    interior = np.zeros(g.shape, dtype=bool)
    interior[(slice(1, -1),) * g.dim] = True

    sq = np.zeros(g.shape)
    for gc, un in zip(grads, units):
        sq += np.abs(gc - 1j * k * u.values * un) ** 2

    averaged = []
    for R in radii:
        mask = interior & (r > r_in) & (r <= R)
        averaged.append(float(np.sum(sq[mask]) * g.cell_volume / R))

    dirs, _ = _fields.sphere_quadrature(g.dim, sphere_points)
    at = _interpolators(g, [u.values] + grads)
    pointwise = []
    for R in radii:
        pts = R * dirs
        vals = at(pts)
        uv, gv = vals[0], vals[1:]
        du_dr = sum(gc * d for gc, d in zip(gv, dirs.T))
        res = np.abs(du_dr - 1j * k * uv) * R ** (0.5 * (g.dim - 1))
        pointwise.append(float(np.max(res)))

    mono = all(b <= a * (1 + 1e-12) for a, b in zip(averaged, averaged[1:]))
    return RadiationReport(radii=radii, averaged_residual=tuple(averaged),
                           pointwise_residual=tuple(pointwise),
                           inner_radius=r_in, monotone_decreasing=mono)


def far_field(u_sc: ComplexField, k: float, directions, radius: float) -> FarField:
    """Far-field amplitude g(theta) = R^((dim-1)/2) exp(-i k R) u_sc(R theta)
    read off at |x| = R, with |g_R - g_{1.1 R}| as a convergence indicator."""
    g = u_sc.grid
    dirs = np.asarray(directions, dtype=float)
    if dirs.ndim != 2 or dirs.shape[1] != g.dim:
        raise ValueError("directions must be (n, dim)")
    norms = np.linalg.norm(dirs, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-8):
        raise ValueError("directions must be unit length")
    if radius <= 0 or 1.1 * radius > g.half_width:
        raise ValueError("need 1.1 * radius inside the grid")
    at = _interpolators(g, [u_sc.values])

    def amp(R):
        vals = at(R * dirs)[0]
        return R ** (0.5 * (g.dim - 1)) * np.exp(-1j * k * R) * vals

    a0 = amp(radius)
    a1 = amp(1.1 * radius)
    return FarField(directions=dirs, amplitude=a0, extraction_radius=float(radius),
                    convergence_indicator=np.abs(a0 - a1))
