"""Numerically checkable inequalities and identities behind the solver.

Four independent checks live here.

Arch inequality.  For z(t) = t^(1/2) J_nu(t) with nu >= 1/2, the areas of
consecutive arches of |z| between zeros of J_nu are nonincreasing,

    int_{j^(2m-2)}^{j^(2m-1)} |z| dt >= int_{j^(2m-1)}^{j^(2m)} |z| dt,

with j^(0) = 0 and equality for nu = 1/2, where every arch integrates to
2 sqrt(2/pi).  Each arch is integrated by Gauss-Legendre with 32 nodes;
the integrand is smooth between consecutive zeros.

Radial Fourier positivity.  The transform of a radial profile f supported
in [0, delta] is evaluated through the one-dimensional reduction

    F(xi) = |xi|^(-nu) int_0^delta J_nu(s |xi|) f(s) s^(dim/2) ds,

nu = (dim-2)/2, with the zero-frequency limit 2^(-nu)/Gamma(nu+1) times the
radial mass (equivalently (2 pi)^(-dim/2) times the plain volume integral).
Applied to the real part of the outgoing fundamental solution truncated to
the ball of radius delta, the transform stays nonnegative whenever
k delta <= z, z the first positive zero of Y_nu; truncation_threshold
returns that z.  Panels are split at a tiny inner radius and at the zeros
of s -> J_nu(s |xi|) so each Gauss-Legendre panel sees a single arch.

Flux identity.  Pairing the equation with the conjugate solution over a
ball shows Im over the boundary sphere of conj(u) d_r u vanishes for any
solution with a real coefficient.  The flux is computed from centered
gradients and sphere quadrature; the point-source field e^{ikr}/(4 pi r)
gives the positive control flux k/(4 pi) at every radius.

Defocusing chain.  For f = Q |u|^(p-2) u with Q <= 0, compactly supported
with diam(supp Q) <= z/k, every bounded solution of u = R_k N(u) + phi
satisfies the chained integral bounds

    int |Q| |u|^p <= ||phi||_inf int |Q| |u|^(p-1),
    int |Q| |u|^(p-1) <= ||phi||_inf^(p-1) int |Q|,
    || Q |u|^(p-1) ||_q <= |Omega|^(1/q) ||Q||_inf ||phi||_inf^(p-1),

q = 2 dim/(dim+2) the dual critical exponent, Omega = {Q != 0}.  All
integrals are cell sums on the coefficient grid, and every check reports a
signed margin, never a boolean alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import gamma as gamma_fn

from .fields import BoundCheck, ComplexField, restrict_field, sphere_quadrature
from .specfun import bessel_j, bessel_y, first_y_zero, j_zeros

__all__ = [
    "SturmResult",
    "sturm_check",
    "FourierPositivityResult",
    "radial_transform",
    "fourier_positivity",
    "truncation_threshold",
    "EnergyIdentityResult",
    "energy_identity",
    "defocusing_inequalities",
    "GrowthFit",
    "growth_law_fit",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _gl_panel(fn, a: float, b: float) -> float:
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.sum(_GL_WEIGHTS * fn(mid + half * _GL_NODES)))


# -- arch inequality ----------------------------------------------------------

@dataclass(frozen=True)
class SturmResult:
    order: float
    pair_index: int
    left_integral: float
    right_integral: float

    @property
    def margin(self) -> float:
        return self.left_integral - self.right_integral


def sturm_check(nu: float, pairs: int, quad_points: int = 32) -> list[SturmResult]:
    """Compare consecutive arch areas of t^(1/2)|J_nu|; margin = left - right."""
    if nu < 0.5:
        raise ValueError("arch inequality holds for order >= 1/2")
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    zeros = np.concatenate(([0.0], j_zeros(nu, 2 * pairs).zeros))

    def arch(a, b):
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        t = mid + half * nodes
        # J_nu keeps one sign inside the arch, so |int| = int | . |
        return abs(half * float(np.sum(weights * np.sqrt(t) * bessel_j(nu, t))))

    results = []
    for m in range(1, pairs + 1):
        left = arch(zeros[2 * m - 2], zeros[2 * m - 1])
        right = arch(zeros[2 * m - 1], zeros[2 * m])
        results.append(SturmResult(order=nu, pair_index=m,
                                   left_integral=left, right_integral=right))
    return results


# -- radial Fourier transform -------------------------------------------------

def truncation_threshold(dim: int) -> float:
    """Largest k*delta keeping the truncated kernel transform nonnegative."""
    if dim < 3:
        raise ValueError("threshold defined for dim >= 3")
    return first_y_zero((dim - 2) / 2.0)


def radial_transform(profile, dim: int, upper: float, freqs,
                     inner_split: float = 1e-4) -> np.ndarray:
    """F(xi) = |xi|^(-nu) int_0^upper J_nu(s xi) profile(s) s^(dim/2) ds.

    profile must be vectorized over s > 0 and integrable against s^(dim-1);
    panels split at inner_split*upper and at the zeros of the Bessel factor.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if upper <= 0.0:
        raise ValueError("upper must be > 0")
    nu = (dim - 2) / 2.0
    xs = np.atleast_1d(np.asarray(freqs, dtype=float))
    if np.any(xs < 0.0) or not np.all(np.isfinite(xs)):
        raise ValueError("frequencies must be finite and >= 0")
    out = np.empty_like(xs)
    eps = inner_split * upper
    for i, xi in enumerate(xs):
        if xi == 0.0:
            fn = lambda s: profile(s) * s ** (dim - 1)
            mass = _gl_panel(fn, 0.0, eps) + _gl_panel(fn, eps, upper)
            out[i] = 2.0 ** (-nu) / gamma_fn(nu + 1.0) * mass
            continue
        n_zeros = int(xi * upper / math.pi) + 2
        cuts = j_zeros(nu, n_zeros).zeros / xi
        edges = np.concatenate(([0.0, eps], cuts[(cuts > eps) & (cuts < upper)],
                                [upper]))
        fn = lambda s: bessel_j(nu, s * xi) * profile(s) * s ** (dim / 2.0)
        out[i] = sum(_gl_panel(fn, a, b) for a, b in zip(edges[:-1], edges[1:]))
        out[i] *= xi ** (-nu)
    return out


@dataclass(frozen=True)
class FourierPositivityResult:
    dim: int
    k: float
    delta: float
    freqs: tuple[float, ...]
    values: tuple[float, ...]
    min_value: float
    tolerance: float

    @property
    def nonnegative(self) -> bool:
        return self.min_value >= -self.tolerance


def fourier_positivity(dim: int, k: float, delta: float | None = None,
                       freqs=None, tolerance: float = 1e-8) -> FourierPositivityResult:
    """Transform of the ball-truncated real-part kernel, sampled over freqs.

    delta defaults to the threshold radius z/k; below it the sampled
    transform is expected nonnegative up to quadrature error.
    """
    if dim < 3:
        raise ValueError("positivity check defined for dim >= 3")
    if k <= 0.0:
        raise ValueError("k must be > 0")
    if delta is None:
        delta = truncation_threshold(dim) / k
    if delta <= 0.0:
        raise ValueError("delta must be > 0")
    if freqs is None:
        freqs = np.concatenate(([0.0], np.geomspace(0.1, 60.0, 180) / delta))
    nu = (dim - 2) / 2.0
    const = -0.25 * (k / (2.0 * math.pi)) ** nu

    def profile(s):
        return const * s ** (-nu) * bessel_y(nu, k * s)

    vals = radial_transform(profile, dim, delta, freqs)
    return FourierPositivityResult(
        dim=dim, k=k, delta=float(delta),
        freqs=tuple(float(x) for x in np.atleast_1d(freqs)),
        values=tuple(float(v) for v in vals),
        min_value=float(np.min(vals)), tolerance=tolerance)


# -- boundary flux identity ---------------------------------------------------

@dataclass(frozen=True)
class EnergyIdentityResult:
    radii: tuple[float, ...]
    flux_imag: tuple[float, ...]
    quad_tol: tuple[float, ...]
    context: dict

    def within(self, factor: float = 10.0) -> bool:
        return all(abs(f) <= factor * t
                   for f, t in zip(self.flux_imag, self.quad_tol))


def _complex_interp(grid, values):
    ax = grid.axis()
    re = RegularGridInterpolator((ax,) * grid.dim, values.real)
    im = RegularGridInterpolator((ax,) * grid.dim, values.imag)
    return lambda pts: re(pts) + 1j * im(pts)


def energy_identity(u: ComplexField, k: float, Q: ComplexField | None = None,
                    p: float | None = None, radii=(1.0,),
                    sphere_points: int = 26) -> EnergyIdentityResult:
    """Im of the boundary integral of conj(u) d_r u per radius.

    Vanishes (up to quadrature error) for solutions with real coefficient;
    the context records the grid spacing, shell magnitudes, and whether each
    radius encloses the coefficient support.
    """
    g = u.grid
    radii = tuple(float(r) for r in np.atleast_1d(radii))
    if any(r <= 0.0 or r > g.half_width for r in radii):
        raise ValueError("radii must lie in (0, half_width]")
    h = g.spacing
    dirs, wts = sphere_quadrature(g.dim, sphere_points)
    grads = np.gradient(u.values, h, edge_order=2)
    u_at = _complex_interp(g, u.values)
    g_at = [_complex_interp(g, comp) for comp in grads]

    support_radius = 0.0
    if Q is not None:
        mask = np.abs(Q.values) > 0.0
        if mask.any():
            support_radius = float(np.max(Q.grid.radius()[mask]))

    flux = []
    tols = []
    shell_info = []
    for rho in radii:
        pts = rho * dirs
        uv = u_at(pts)
        radial = np.zeros(len(dirs), dtype=complex)
        for axis in range(g.dim):
            radial += dirs[:, axis] * g_at[axis](pts)
        flux.append(float(rho ** (g.dim - 1)
                          * np.sum(wts * np.imag(np.conj(uv) * radial))))
        m = float(np.max(np.abs(uv)))
        gr = float(np.max(np.abs(radial)))
        area = rho ** (g.dim - 1) * float(np.sum(wts))
        # centered differences and multilinear interpolation are both O(h^2);
        # curvature of u on the shell sets the constant
        tol = 0.5 * h * h * area * k * k * (m * gr + k * m * m) + 1e-14
        tols.append(tol)
        shell_info.append({"radius": rho, "shell_max": m, "shell_grad_max": gr,
                           "encloses_support": rho >= support_radius})
    context = {"spacing": h, "sphere_points": len(dirs),
               "support_radius": support_radius, "order": p, "shells": shell_info}
    return EnergyIdentityResult(radii=radii, flux_imag=tuple(flux),
                                quad_tol=tuple(tols), context=context)


# -- defocusing integral chain ------------------------------------------------

def _support_diameter(Q: ComplexField) -> float:
    mask = np.abs(Q.values) > 0.0
    if not mask.any():
        return 0.0
    ax = Q.grid.axis()
    h = Q.grid.spacing
    diag = 0.0
    for axis_idx in range(Q.grid.dim):
        proj = mask.any(axis=tuple(i for i in range(Q.grid.dim) if i != axis_idx))
        lo, hi = ax[proj][0], ax[proj][-1]
        diag += (hi - lo + h) ** 2
    return math.sqrt(diag)


def defocusing_inequalities(u: ComplexField, phi: ComplexField, Q: ComplexField,
                            p: float, k: float | None = None,
                            tolerance: float = 1e-10) -> tuple[BoundCheck, ...]:
    """Chained integral bounds for a converged defocusing solve.

    Passing k adds the support-diameter admissibility check against the
    truncation threshold, which is what makes the chain valid.
    """
    dim = Q.grid.dim
    if dim < 3:
        raise ValueError("defocusing chain requires dim >= 3")
    crit = 2.0 * dim / (dim - 2.0)
    if not 2.0 < p < crit:
        raise ValueError(f"p must lie in (2, {crit:.4g})")
    if np.any(Q.values.imag != 0.0) or np.max(Q.values.real) > 0.0:
        raise ValueError("coefficient must be real and nonpositive")
    edge = np.ones(Q.grid.shape, dtype=bool)
    edge[(slice(1, -1),) * dim] = False
    if np.any(np.abs(Q.values[edge]) > 0.0):
        raise ValueError("coefficient must vanish on the boundary layer")
    if u.grid != Q.grid:
        u = restrict_field(u, Q.grid)

    vol = Q.grid.cell_volume
    absq = np.abs(Q.values.real)
    au = np.abs(u.values)
    phisup = phi.sup_norm
    int_p = float(np.sum(absq * au ** p) * vol)
    int_pm1 = float(np.sum(absq * au ** (p - 1.0)) * vol)
    int_q = float(np.sum(absq) * vol)
    omega = float(np.count_nonzero(absq) * vol)
    normq = float(np.max(absq))
    qdual = 2.0 * dim / (dim + 2.0)
    dual_norm = float(np.sum((absq * au ** (p - 1.0)) ** qdual * vol) ** (1.0 / qdual))
    cap_d = omega ** (1.0 / qdual) * normq * phisup ** (p - 1.0)

    def check(name, lhs, rhs, extra=None):
        margin = rhs - lhs
        ctx = {"tolerance": tolerance}
        if extra:
            ctx.update(extra)
        return BoundCheck(name=name, lhs=lhs, rhs=rhs, margin=margin,
                          satisfied=bool(margin >= -tolerance), context=ctx)

    checks = [
        check("defocusing_first_bound", int_p, phisup * int_pm1),
        check("weighted_mass_p_minus_1", int_pm1, phisup ** (p - 1.0) * int_q,
              extra={"loose_rhs": omega * normq * phisup ** (p - 1.0)}),
        check("weighted_mass_p", int_p, phisup ** p * int_q),
        check("source_dual_norm", dual_norm, cap_d,
              extra={"dual_exponent": qdual, "support_measure": omega}),
    ]
    if k is not None:
        diam = _support_diameter(Q)
        checks.append(check("support_diameter", diam,
                            truncation_threshold(dim) / k,
                            extra={"k": k}))
    return tuple(checks)


@dataclass(frozen=True)
class GrowthFit:
    exponent: float
    m: int
    constant: float
    covers_all: bool
    pairs: tuple[tuple[float, float], ...]


def growth_law_fit(phi_sups, u_sups, p: float, m_max: int = 8) -> GrowthFit:
    """Fit sup|u| <= C (1 + ||phi||^((p-1)^m)) across a solve family.

    The growth exponent comes from the log-log slope over the larger half of
    the family; m is the smallest integer with (p-1)^m at or above it.
    """
    phis = np.asarray(phi_sups, dtype=float)
    sups = np.asarray(u_sups, dtype=float)
    if phis.shape != sups.shape or phis.size < 3:
        raise ValueError("need at least 3 matching (phi, u) pairs")
    if np.any(phis <= 0.0) or np.any(sups <= 0.0):
        raise ValueError("norms must be positive")
    order = np.argsort(phis)
    phis, sups = phis[order], sups[order]
    top = slice(phis.size // 2, None)
    slope = float(np.polyfit(np.log(phis[top]), np.log(sups[top]), 1)[0])
    m = 1
    while (p - 1.0) ** m < slope and m < m_max:
        m += 1
    covers = (p - 1.0) ** m >= slope
    constant = float(np.max(sups / (1.0 + phis ** ((p - 1.0) ** m))))
    return GrowthFit(exponent=slope, m=m, constant=constant, covers_all=covers,
                     pairs=tuple(zip(phis.tolist(), sups.tolist())))
