"""Marginal maximum-likelihood estimation and confidence intervals.

The model is an exponential family in (beta, h) with sufficient statistic
sigma_bar, so each marginal ML equation matches an exact finite-N moment to
the observation and the moment maps are strictly increasing (strict convexity
of log Z).  Estimation is therefore monotone root-finding: bracket expansion,
Brent, and one Newton polish using the exact variance as the derivative.

Estimates can be genuinely infinite: the field estimate escapes when
|sigma_bar| = 1, and for even interaction order the coupling estimate escapes
to -infinity when sigma_bar = 0.  Those cases return signed-infinity
sentinels rather than errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtri

from .landscape import critical_set_beta, critical_set_h, h_derivatives
from .model import _moment_raw

__all__ = [
    "Existence",
    "EstimateReport",
    "ConfidenceInterval",
    "PluginVarianceError",
    "mle_h",
    "mle_beta",
    "mle_h_values",
    "mle_beta_values",
    "ci_h",
    "ci_beta",
]

RESIDUAL_TOL = 1e-10
MAX_DOUBLINGS = 60


class Existence(Enum):
    FINITE = "finite"
    PLUS_INFINITY = "+inf"
    MINUS_INFINITY = "-inf"


@dataclass(frozen=True)
class EstimateReport:
    estimate: float
    existence: Existence
    residual: float
    iterations: int

    @property
    def finite(self) -> bool:
        return self.existence is Existence.FINITE


class PluginVarianceError(ValueError):
    """Plug-in curvature at the observed mean is not negative: no interval."""


@dataclass(frozen=True)
class ConfidenceInterval:
    """Open interval plus the finite augmentation set unioned with it."""

    lower: float
    upper: float
    augmentation: tuple[float, ...]
    level: float

    def contains(self, x: float, atol: float = 1e-12) -> bool:
        if self.lower < x < self.upper:
            return True
        return any(abs(x - a) <= atol for a in self.augmentation)

    @property
    def width(self) -> float:
        return self.upper - self.lower


def _sentinel(existence: Existence, iterations: int = 0) -> EstimateReport:
    val = math.inf if existence is Existence.PLUS_INFINITY else -math.inf
    return EstimateReport(val, existence, math.nan, iterations)


def _solve_monotone(f, lo, hi, fprime=None):
    """Root of increasing f by bracket doubling + Brent + Newton polish.

    Returns (root, iterations, bracket_failed); bracket_failed is the signed
    direction (+1/-1) when 60 doublings never produced a sign change.
    """
    iters = 0
    flo, fhi = f(lo), f(hi)
    iters += 2
    n = 0
    while fhi < 0.0 and n < MAX_DOUBLINGS:
        lo, flo = hi, fhi
        hi *= 2.0
        fhi = f(hi)
        iters += 1
        n += 1
    if fhi < 0.0:
        return math.nan, iters, +1
    n = 0
    while flo > 0.0 and n < MAX_DOUBLINGS:
        hi, fhi = lo, flo
        lo *= 2.0
        flo = f(lo)
        iters += 1
        n += 1
    if flo > 0.0:
        return math.nan, iters, -1
    root, res = brentq(f, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=300,
                       full_output=True)
    iters += res.function_calls
    if fprime is not None:
        slope = fprime(root)
        if np.isfinite(slope) and slope > 0.0:
            step = f(root) / slope
            iters += 1
            if np.isfinite(step) and abs(step) < 1.0:
                root -= step
    return root, iters, 0


def mle_h(sigma_bar: float, beta: float, p: int, N: int) -> EstimateReport:
    """ML estimate of the field given the coupling, from one observed mean.

    Finite exactly when |sigma_bar| < 1; otherwise the matching signed
    infinity.
    """
    if abs(sigma_bar) > 1.0:
        raise ValueError(f"sigma_bar must lie in [-1, 1], got {sigma_bar!r}")
    if sigma_bar == 1.0:
        return _sentinel(Existence.PLUS_INFINITY)
    if sigma_bar == -1.0:
        return _sentinel(Existence.MINUS_INFINITY)

    def f(h):
        return _moment_raw(beta, h, p, N, 1) - sigma_bar

    def slope(h):
        u1 = _moment_raw(beta, h, p, N, 1)
        u2 = _moment_raw(beta, h, p, N, 2)
        return N * (u2 - u1 * u1)

    root, iters, failed = _solve_monotone(f, -1.0, 1.0, slope)
    if failed:
        return _sentinel(
            Existence.PLUS_INFINITY if failed > 0 else Existence.MINUS_INFINITY,
            iters,
        )
    return EstimateReport(float(root), Existence.FINITE, abs(f(root)), iters)


def mle_beta(sigma_bar: float, h: float, p: int, N: int) -> EstimateReport:
    """ML estimate of the coupling given the field, from one observed mean.

    Solved over all real beta (the estimating equation stays monotone there).
    Finite iff |sigma_bar| < 1 for odd p, and iff sigma_bar is not in
    {-1, 0, 1} for even p; sigma_bar = 0 with even p escapes to -infinity.
    """
    if abs(sigma_bar) > 1.0:
        raise ValueError(f"sigma_bar must lie in [-1, 1], got {sigma_bar!r}")
    even = p % 2 == 0
    if sigma_bar == 1.0 or (even and sigma_bar == -1.0):
        return _sentinel(Existence.PLUS_INFINITY)
    if sigma_bar == -1.0:
        return _sentinel(Existence.MINUS_INFINITY)
    if even and sigma_bar == 0.0:
        return _sentinel(Existence.MINUS_INFINITY)
    target = sigma_bar**p

    def f(beta):
        return _moment_raw(beta, h, p, N, p) - target

    def slope(beta):
        up = _moment_raw(beta, h, p, N, p)
        u2p = _moment_raw(beta, h, p, N, 2 * p)
        return N * (u2p - up * up)

    root, iters, failed = _solve_monotone(f, -1.0, 4.0, slope)
    if failed:
        return _sentinel(
            Existence.PLUS_INFINITY if failed > 0 else Existence.MINUS_INFINITY,
            iters,
        )
    return EstimateReport(float(root), Existence.FINITE, abs(f(root)), iters)


def mle_h_values(sigmas, beta: float, p: int, N: int) -> np.ndarray:
    """Field estimates for many observed means (vectorized convenience).

    Solves in sorted order with secant continuation: the previous two roots
    predict the next one, so each atom costs only a handful of moment
    evaluations when thousands of support atoms are swept at once.
    """
    sigmas = np.asarray(sigmas, dtype=np.float64)
    out = np.empty_like(sigmas)
    order = np.argsort(sigmas)
    prev: tuple[float, float] | None = None   # (sigma, root)
    slope_inv = None                          # d root / d sigma estimate
    for j in order:
        s = float(sigmas[j])
        if abs(s) >= 1.0:
            out[j] = math.copysign(math.inf, s)
            continue

        def f(h):
            return _moment_raw(beta, h, p, N, 1) - s

        root = None
        if prev is not None and slope_inv is not None:
            pred = prev[1] + (s - prev[0]) * slope_inv
            half = max(4.0 * (s - prev[0]) * slope_inv, 1e-9)
            lo, hi = prev[1], pred + half
            flo, fhi = f(lo), f(hi)
            for _ in range(8):
                if fhi >= 0.0:
                    break
                hi += 2.0 * half
                half *= 2.0
                fhi = f(hi)
            if flo <= 0.0 <= fhi:
                root = brentq(f, lo, hi, xtol=1e-12, rtol=8.9e-16, maxiter=200)
        if root is None:
            root, _, failed = _solve_monotone(f, -1.0, 1.0)
            if failed:
                out[j] = math.copysign(math.inf, failed)
                prev, slope_inv = None, None
                continue
        if prev is not None and s > prev[0]:
            slope_inv = (root - prev[1]) / (s - prev[0])
        prev = (s, root)
        out[j] = root
    return out


def mle_beta_values(sigmas, h: float, p: int, N: int) -> np.ndarray:
    """Coupling estimates for many observed means (vectorized convenience)."""
    sigmas = np.asarray(sigmas, dtype=np.float64)
    out = np.empty_like(sigmas)
    cache: dict[float, float] = {}
    for j in range(len(sigmas)):
        s = float(sigmas[j])
        key = s**p
        if key in cache:
            out[j] = cache[key]
            continue
        rep = mle_beta(s, h, p, N)
        val = rep.estimate
        cache[key] = val
        out[j] = val
    return out


def _plugin_curvature(beta: float, p: int, sigma_bar: float) -> float:
    """H'' evaluated at the observed mean (h does not enter H'')."""
    return h_derivatives(beta, 0.0, p, sigma_bar, 2)[2]


def ci_h(sigma_bar: float, beta: float, p: int, N: int,
         alpha: float) -> ConfidenceInterval:
    """Level-(1 - alpha) interval for the field, augmented by the critical set.

    The plug-in standard error is sqrt(-H''(sigma_bar)/N) with the known
    beta; the augmentation adds every field at which (beta, .) meets the
    closed critical curve, guaranteeing coverage at those measure-zero
    points.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    rep = mle_h(sigma_bar, beta, p, N)
    if not rep.finite:
        raise ValueError("field estimate is infinite; no interval")
    curv = _plugin_curvature(beta, p, sigma_bar)
    if curv >= 0.0:
        raise PluginVarianceError(
            f"plug-in curvature {curv} >= 0 at sigma_bar={sigma_bar}"
        )
    z = ndtri(1.0 - alpha / 2.0)
    half = z * math.sqrt(-curv / N)
    aug = critical_set_h(beta, p) if p >= 3 else ()
    return ConfidenceInterval(rep.estimate - half, rep.estimate + half, aug,
                              1.0 - alpha)


def ci_beta(sigma_bar: float, h: float, p: int, N: int,
            alpha: float) -> ConfidenceInterval:
    """Level-(1 - alpha) interval for the coupling, critical-set augmented.

    Requires a nonzero known field (the coupling estimate is inconsistent on
    h = 0) and a nonzero observed mean.  The plug-in curvature uses the
    estimated coupling, which is the only one available at inference time.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if h == 0.0:
        raise ValueError("coupling interval requires h != 0")
    if sigma_bar == 0.0:
        raise ValueError("coupling interval requires sigma_bar != 0")
    rep = mle_beta(sigma_bar, h, p, N)
    if not rep.finite:
        raise ValueError("coupling estimate is infinite; no interval")
    curv = _plugin_curvature(rep.estimate, p, sigma_bar)
    if curv >= 0.0:
        raise PluginVarianceError(
            f"plug-in curvature {curv} >= 0 at sigma_bar={sigma_bar}"
        )
    z = ndtri(1.0 - alpha / 2.0)
    half = z * abs(sigma_bar) ** (1 - p) / p * math.sqrt(-curv / N)
    aug = critical_set_beta(h, p) if p >= 3 else ()
    return ConfidenceInterval(rep.estimate - half, rep.estimate + half, aug,
                              1.0 - alpha)
