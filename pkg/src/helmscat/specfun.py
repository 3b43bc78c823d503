"""Cylinder functions of real order, their positive zeros, and the outgoing
Helmholtz point source.

Evaluation of J_nu, Y_nu and H^(1)_nu for real order goes through
scipy.special, which holds better than 1e-12 relative accuracy (relative to
the modulus envelope near zeros) over the working range t in [1e-6, 1e4].
Half-integer orders 1/2 and 3/2 take closed-form trigonometric fast paths;
the generic route stays available and the two are cross-checked in the test
suite.

Zeros are never read from a table.  A sign-change scan at pi/8 spacing
brackets each zero (consecutive positive zeros of a cylinder function are
separated by more than 2.9, so the scan cannot skip one) and Brent's method
polishes the bracket to near machine precision.

The outgoing point source in dimension N >= 2 is

    (i/4) * (k / (2 pi r))**((N-2)/2) * H^(1)_{(N-2)/2}(k r),

which for N = 3 collapses to exp(i k r) / (4 pi r).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

__all__ = [
    "FundamentalSolutionParams",
    "ZeroTable",
    "bessel_j",
    "bessel_y",
    "hankel1",
    "fundamental_solution",
    "first_y_zero",
    "j_zeros",
    "y_zeros",
]

# Scan step for zero bracketing.  Positive zeros of any fixed-order cylinder
# function are spaced by more than 2.9, so pi/8 cannot straddle two.
_SCAN_STEP = math.pi / 8.0
_MAX_SCAN_STEPS = 20000
_BRENT_XTOL = 1e-14


def _check_order(nu: float) -> float:
    nu = float(nu)
    if not math.isfinite(nu) or nu < 0.0:
        raise ValueError(f"order must be finite and >= 0, got {nu}")
    return nu


def _positive_arg(t, name: str = "t"):
    arr = np.asarray(t, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr <= 0.0)):
        raise ValueError(f"{name} must be finite and > 0")
    return arr, arr.ndim == 0


def _ret(arr: np.ndarray, scalar: bool):
    return arr.item() if scalar else arr


def bessel_j(nu: float, t):
    """J_nu(t) for real nu >= 0, t > 0.  Scalar or array t."""
    nu = _check_order(nu)
    arr, scalar = _positive_arg(t)
    if nu == 0.5:
        out = np.sqrt(2.0 / (np.pi * arr)) * np.sin(arr)
    elif nu == 1.5:
        out = np.sqrt(2.0 / (np.pi * arr)) * (np.sin(arr) / arr - np.cos(arr))
    else:
        out = special.jv(nu, arr)
    return _ret(out, scalar)


def bessel_y(nu: float, t):
    """Y_nu(t) for real nu >= 0, t > 0.  Scalar or array t."""
    nu = _check_order(nu)
    arr, scalar = _positive_arg(t)
    if nu == 0.5:
        out = -np.sqrt(2.0 / (np.pi * arr)) * np.cos(arr)
    elif nu == 1.5:
        out = -np.sqrt(2.0 / (np.pi * arr)) * (np.cos(arr) / arr + np.sin(arr))
    else:
        out = special.yv(nu, arr)
    return _ret(out, scalar)


def hankel1(nu: float, t):
    """H^(1)_nu(t) = J_nu(t) + i Y_nu(t) for real nu >= 0, t > 0."""
    nu = _check_order(nu)
    arr, scalar = _positive_arg(t)
    if nu == 0.5:
        out = -1j * np.sqrt(2.0 / (np.pi * arr)) * np.exp(1j * arr)
    elif nu == 1.5:
        out = -np.sqrt(2.0 / (np.pi * arr)) * np.exp(1j * arr) * (1.0 + 1j / arr)
    else:
        out = special.hankel1(nu, arr)
    return _ret(out, scalar)


@dataclass(frozen=True)
class FundamentalSolutionParams:
    """Wavenumber and ambient dimension of the outgoing point source."""

    k: float
    dim: int

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0.0):
            raise ValueError(f"wavenumber must be finite and > 0, got {self.k}")
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")

    @property
    def order(self) -> float:
        return 0.5 * (self.dim - 2)


def fundamental_solution(params: FundamentalSolutionParams, r):
    """Outgoing point source at radius r > 0.

    Diverges like r**(2-dim) (log for dim 2) toward r = 0; evaluation close
    enough to the singularity to overflow raises instead of returning inf.
    """
    arr, scalar = _positive_arg(r, "r")
    k = params.k
    with np.errstate(over="ignore", invalid="ignore"):
        if params.dim == 2:
            out = 0.25j * hankel1(0.0, k * arr)
        else:
            amp = (k / (2.0 * np.pi * arr)) ** params.order
            out = 0.25j * amp * hankel1(params.order, k * arr)
    out = np.asarray(out)
    if not np.all(np.isfinite(out)):
        raise OverflowError("point source overflow: r too close to 0")
    return _ret(out, scalar)


@dataclass(frozen=True)
class ZeroTable:
    """Consecutive positive zeros of J_nu or Y_nu, each certified by a
    bracketing sign change."""

    order: float
    kind: str  # "J" or "Y"
    zeros: tuple[float, ...]
    precision: float = _BRENT_XTOL

    def __post_init__(self):
        if self.kind not in ("J", "Y"):
            raise ValueError(f"kind must be 'J' or 'Y', got {self.kind!r}")
        zs = tuple(float(z) for z in self.zeros)
        if any(b <= a for a, b in zip(zs, zs[1:])):
            raise ValueError("zeros must be strictly increasing")
        object.__setattr__(self, "zeros", zs)

    def verify_brackets(self, width: float = 1e-9) -> bool:
        """Check a sign change of the named function across each zero."""
        fn = bessel_j if self.kind == "J" else bessel_y
        for z in self.zeros:
            w = width * max(1.0, abs(z))
            if fn(self.order, z - w) * fn(self.order, z + w) >= 0.0:
                return False
        return True


def _scan_for_zeros(fn, nu: float, count: int) -> list[float]:
    # Walk t upward in pi/8 steps, polishing each sign-change bracket.
    zeros: list[float] = []
    t_prev = _SCAN_STEP
    f_prev = fn(nu, t_prev)
    for j in range(2, _MAX_SCAN_STEPS):
        t = j * _SCAN_STEP
        f = fn(nu, t)
        if f_prev == 0.0:
            zeros.append(t_prev)
        elif np.sign(f) != np.sign(f_prev) and f != 0.0:
            z = optimize.brentq(
                lambda x: fn(nu, x), t_prev, t,
                xtol=_BRENT_XTOL, rtol=4 * np.finfo(float).eps,
            )
            zeros.append(z)
        if len(zeros) >= count:
            return zeros
        t_prev, f_prev = t, f
    raise RuntimeError(f"zero scan exhausted after {_MAX_SCAN_STEPS} steps")


_zero_cache: dict[tuple, ZeroTable] = {}
_zero_cache_lock = threading.Lock()


def j_zeros(nu: float, count: int) -> ZeroTable:
    """First `count` positive zeros of J_nu, in increasing order."""
    nu = _check_order(nu)
    if count < 1:
        raise ValueError("count must be >= 1")
    key = ("J", nu, count)
    with _zero_cache_lock:
        hit = _zero_cache.get(key)
    if hit is not None:
        return hit
    table = ZeroTable(order=nu, kind="J", zeros=tuple(_scan_for_zeros(bessel_j, nu, count)))
    with _zero_cache_lock:
        _zero_cache[key] = table
    return table


def y_zeros(nu: float, count: int) -> ZeroTable:
    """First `count` positive zeros of Y_nu, in increasing order."""
    nu = _check_order(nu)
    if count < 1:
        raise ValueError("count must be >= 1")
    key = ("Y", nu, count)
    with _zero_cache_lock:
        hit = _zero_cache.get(key)
    if hit is not None:
        return hit
    table = ZeroTable(order=nu, kind="Y", zeros=tuple(_scan_for_zeros(bessel_y, nu, count)))
    with _zero_cache_lock:
        _zero_cache[key] = table
    return table


def first_y_zero(nu: float) -> float:
    """First positive zero of Y_nu.

    Y_nu is negative on (0, z) and the scan starts below the smallest
    possible zero (0.89 at nu = 0), so the first sign change is the answer.
    """
    return y_zeros(nu, 1).zeros[0]
