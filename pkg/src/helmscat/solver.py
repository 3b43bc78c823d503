"""Damped Picard iteration for the scattering fixed point

    u = R_k[ f(., u) ] + phi,

with contraction certificates and the linear a priori sup bound.

The iteration is u_{n+1} = (1 - theta) u_n + theta (R_k N_f(u_n) + phi),
started at phi (or a caller-supplied warm start).  When an update increases
the residual the damping theta is halved, down to a floor of 1/16.  A sup
norm beyond the divergence cap stops the run with partial data; non-finite
values abort.

The contraction certificate multiplies the kappa estimate by the sampled
Lipschitz estimate of the nonlinearity on a ball of radius cap; a product
below 1 indicates (but does not certify) a contractive map.

For the affine nonlinearity f(x, u) = a(x) u + b(x) with
kappa_hat ||a||_alpha < 1 the solution obeys

    ||u||_inf <= (kappa_hat ||b||_alpha + ||phi||_inf) / (1 - kappa_hat ||a||_alpha),

checked by linear_bound_check.  On matching grids the kappa estimate is the
exact norm bound of the truncated discrete operator, so the margin is
nonnegative up to roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .fields import (
    BoundCheck,
    ComplexField,
    NonlinearitySpec,
    apply_nonlinearity,
    estimate_lipschitz,
    restrict_field,
    weighted_norm,
)
from .resolvent import (
    KappaEstimate,
    RadiationReport,
    ResolventConfig,
    apply_resolvent,
    estimate_kappa,
    radiation_report,
)

__all__ = [
    "SolverConfig",
    "SolveReport",
    "picard_solve",
    "contraction_certificate",
    "linear_bound_check",
]


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 200
    tol: float = 1e-10
    damping: float = 1.0
    damping_floor: float = 1.0 / 16.0
    adapt_damping: bool = True
    divergence_cap: float = 1e6
    compute_radiation: bool = True
    certify: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")
        if not 0.0 < self.damping_floor <= self.damping:
            raise ValueError("damping_floor must lie in (0, damping]")
        if self.tol <= 0.0 or self.divergence_cap <= 0.0:
            raise ValueError("tol and divergence_cap must be > 0")


@dataclass(frozen=True)
class SolveReport:
    converged: bool
    status: str  # "converged" | "max_iters" | "diverged"
    iterations: int
    residual_history: tuple[float, ...]
    final_residual: float | None
    damping_used: float
    contraction_certificate: dict | None = None
    bound_checks: tuple[BoundCheck, ...] = ()
    radiation: RadiationReport | None = None

    def as_dict(self) -> dict:
        out = {
            "converged": self.converged,
            "status": self.status,
            "iterations": self.iterations,
            "residual_history": list(self.residual_history),
            "final_residual": self.final_residual,
            "damping_used": self.damping_used,
        }
        if self.contraction_certificate is not None:
            out["contraction_certificate"] = dict(self.contraction_certificate)
        if self.bound_checks:
            out["bound_checks"] = [bc.__dict__ for bc in self.bound_checks]
        if self.radiation is not None:
            r = self.radiation
            out["radiation"] = {
                "radii": list(r.radii),
                "averaged_residual": list(r.averaged_residual),
                "pointwise_residual": list(r.pointwise_residual),
                "inner_radius": r.inner_radius,
                "monotone_decreasing": r.monotone_decreasing,
            }
        return out


def _apply_map(f: NonlinearitySpec, phi: ComplexField, k: float,
               rcfg: ResolventConfig, u: ComplexField) -> ComplexField:
    src = restrict_field(u, rcfg.source_grid)
    return apply_resolvent(apply_nonlinearity(f, src), rcfg, k) + phi


def picard_solve(f: NonlinearitySpec, phi: ComplexField, k: float,
                 cfg: SolverConfig, rcfg: ResolventConfig,
                 u0: ComplexField | None = None) -> tuple[ComplexField, SolveReport]:
    """Iterate the damped fixed-point map from phi (or u0)."""
    if phi.grid != rcfg.eval_grid:
        raise ValueError("incident field must live on the eval grid")
    if f.grid != rcfg.source_grid:
        raise ValueError("nonlinearity coefficients must live on the source grid")
    u = (u0 if u0 is not None else phi).copy()
    if u.grid != rcfg.eval_grid:
        raise ValueError("warm start must live on the eval grid")

    theta = cfg.damping
    history: list[float] = []
    status = "max_iters"
    prev_res = math.inf
    for _ in range(cfg.max_iters):
        mapped = _apply_map(f, phi, k, rcfg, u)
        if not np.all(np.isfinite(mapped.values)):
            raise FloatingPointError("non-finite iterate in Picard solve")
        cand = (1.0 - theta) * u.values + theta * mapped.values
        res = float(np.max(np.abs(cand - u.values)))
        while (cfg.adapt_damping and res > prev_res
               and theta > cfg.damping_floor):
            theta = max(0.5 * theta, cfg.damping_floor)
            cand = (1.0 - theta) * u.values + theta * mapped.values
            res = float(np.max(np.abs(cand - u.values)))
        u = ComplexField(u.grid, cand)
        history.append(res)
        prev_res = res
        if u.sup_norm > cfg.divergence_cap:
            status = "diverged"
            break
        if res <= cfg.tol:
            status = "converged"
            break

    final_residual = None
    radiation = None
    certificate = None
    if status != "diverged":
        final_residual = float(np.max(np.abs(
            _apply_map(f, phi, k, rcfg, u).values - u.values)))
        if cfg.compute_radiation:
            L = rcfg.eval_grid.half_width
            radiation = radiation_report(u - phi, k, (L / 4, L / 2, 3 * L / 4))
        if cfg.certify:
            kappa = estimate_kappa(f.alpha, rcfg, k)
            cap = 1.05 * max(u.sup_norm, phi.sup_norm, 1e-12)
            certificate = contraction_certificate(f, kappa, cap, seed=cfg.seed)

    report = SolveReport(
        converged=(status == "converged"),
        status=status,
        iterations=len(history),
        residual_history=tuple(history),
        final_residual=final_residual,
        damping_used=theta,
        contraction_certificate=certificate,
        radiation=radiation,
    )
    return u, report


def contraction_certificate(f: NonlinearitySpec, kappa: KappaEstimate,
                            cap: float, samples: int = 4000, seed: int = 0) -> dict:
    """kappa_hat times the sampled Lipschitz estimate on |u| <= cap."""
    ell = estimate_lipschitz(f, cap, samples=samples, seed=seed)
    product = kappa.kappa_hat * ell
    return {
        "kappa_hat": kappa.kappa_hat,
        "ell_estimate": ell,
        "product": product,
        "cap": cap,
        "alpha": f.alpha,
        "certified": bool(product < 1.0),
    }


def linear_bound_check(f: NonlinearitySpec, phi: ComplexField, u: ComplexField,
                       kappa: KappaEstimate) -> BoundCheck:
    """A priori sup bound for the affine problem; margin = bound - ||u||."""
    if f.kind != "affine":
        raise ValueError("linear bound applies to the affine kind")
    if kappa.alpha != f.alpha:
        raise ValueError("kappa estimate was taken at a different alpha")
    qn = weighted_norm(f.a, f.alpha).value
    bn = weighted_norm(f.b, f.alpha).value
    small = kappa.kappa_hat * qn
    if small >= 1.0:
        raise ValueError(f"kappa_hat * ||a||_alpha = {small:.3f} >= 1; bound void")
    rhs = (kappa.kappa_hat * bn + phi.sup_norm) / (1.0 - small)
    lhs = u.sup_norm
    margin = rhs - lhs
    return BoundCheck(
        name="linear_sup_bound", lhs=lhs, rhs=rhs, margin=margin,
        satisfied=bool(margin >= 0.0),
        context={"kappa_hat": kappa.kappa_hat, "coef_norm": qn,
                 "offset_norm": bn, "smallness": small},
    )
