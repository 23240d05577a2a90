"""Variational landscape of the p-spin Curie-Weiss model.

The free-energy density H(x) = beta*x^p + h*x - I(x), with I the binary
entropy, controls everything: its global maximizers are the typical values of
the average spin, and the local structure at those maximizers (number of
global maxima, sign of the curvature) decides which limit theorem applies.

This module evaluates H and its first four derivatives in closed form, finds
all maximizers by a sign-change scan plus root polishing, classifies parameter
points (regular / special / weakly critical / strongly critical), computes the
structural constants (coexistence threshold, special points), and traces the
critical curve where two maxima tie.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
import math

import numpy as np
from scipy.optimize import brentq, minimize_scalar

__all__ = [
    "PointClass",
    "HAnalysis",
    "RootScanError",
    "entropy",
    "h_derivatives",
    "analyze",
    "beta_tilde",
    "special_point",
    "critical_curve",
    "critical_set_h",
    "critical_set_beta",
]

# Tolerances for the measure-zero classifications (configurable per call).
EPS_TIE = 1e-9       # two maximizer values considered tied
EPS_FLAT = 1e-7      # curvature at the maximizer considered zero
DEFAULT_GRID = 4096  # sign-change scan resolution
_EDGE = 1e-9         # scan domain is (-1 + _EDGE, 1 - _EDGE)


class PointClass(Enum):
    REGULAR = "regular"
    SPECIAL = "special"
    WEAKLY_CRITICAL = "weakly-critical"
    STRONGLY_CRITICAL = "strongly-critical"

    @property
    def is_critical(self) -> bool:
        return self in (PointClass.WEAKLY_CRITICAL, PointClass.STRONGLY_CRITICAL)


class RootScanError(RuntimeError):
    """Raised when the stationary-point scan is unstable under grid refinement."""


@dataclass(frozen=True)
class HAnalysis:
    """Global maximizers of the landscape and the classification they imply.

    maximizers are sorted increasingly; weights is None unless the point is
    critical, in which case it holds the mixture weights of the limiting law
    of the average spin.
    """

    beta: float
    h: float
    p: int
    maximizers: np.ndarray
    values: np.ndarray
    second_derivs: np.ndarray
    classification: PointClass
    weights: np.ndarray | None = None

    @property
    def n_maximizers(self) -> int:
        return len(self.maximizers)


def entropy(x):
    """Binary entropy I(x) = ((1+x)log(1+x) + (1-x)log(1-x))/2 on [-1, 1].

    For |x| < 1/4 the series sum_k x^(2k) / ((2k-1) 2k) is used, which keeps
    full relative accuracy where the log form loses everything to
    cancellation (I(x) ~ x^2 / 2 near 0).
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("entropy argument must lie in [-1, 1]")
    small = np.abs(x) < 0.25
    x2 = x * x
    series = np.zeros_like(x)
    for k in range(16, 0, -1):
        series = x2 * (series + 1.0 / ((2 * k - 1) * (2 * k)))
    plus = np.where(x == -1.0, 0.0, (1.0 + x) * np.log1p(np.where(x == -1.0, 0.0, x)))
    minus = np.where(x == 1.0, 0.0, (1.0 - x) * np.log1p(np.where(x == 1.0, 0.0, -x)))
    val = np.where(small, series, 0.5 * (plus + minus))
    return val if val.ndim else float(val)


def h_derivatives(beta, h, p, x, max_order=4):
    """Landscape value and derivatives [H, H', H'', H''', H''''] at x.

    Closed forms; the polynomial part of the k-th derivative is
    beta * p(p-1)...(p-k+1) * x^(p-k), which vanishes identically once the
    falling factorial hits zero, so negative powers never arise.
    Accepts scalar or array x with |x| < 1 (value itself also allows |x| = 1).
    """
    if not 0 <= max_order <= 4:
        raise ValueError("max_order must be in [0, 4]")
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 0
    if np.any(np.abs(x) >= 1.0) and max_order >= 1:
        raise ValueError("derivatives require |x| < 1")
    if np.any(np.abs(x) > 1.0):
        raise ValueError("x must lie in [-1, 1]")

    out = []
    val = beta * x**p + h * x - entropy(x)
    out.append(val)
    if max_order >= 1:
        out.append(beta * p * x ** (p - 1) + h - np.arctanh(x))
    if max_order >= 2:
        one_m_x2 = 1.0 - x * x
        coeff = beta * p * (p - 1)
        poly = coeff * x ** (p - 2) if coeff != 0.0 else np.zeros_like(x)
        out.append(poly - 1.0 / one_m_x2)
    if max_order >= 3:
        coeff = beta * p * (p - 1) * (p - 2)
        poly = coeff * x ** (p - 3) if coeff != 0.0 else np.zeros_like(x)
        out.append(poly - 2.0 * x / one_m_x2**2)
    if max_order >= 4:
        coeff = beta * p * (p - 1) * (p - 2) * (p - 3)
        poly = coeff * x ** (p - 4) if coeff != 0.0 else np.zeros_like(x)
        out.append(poly - (2.0 + 6.0 * x * x) / one_m_x2**3)
    if scalar:
        return [float(v) for v in out]
    return out


def _grad(beta, h, p, x):
    return beta * p * x ** (p - 1) + h - np.arctanh(x)


def _stationary_points(beta, h, p, grid):
    """All roots of H' in (-1, 1) via sign-change bracketing + Brent polish."""
    xs = np.linspace(-1.0 + _EDGE, 1.0 - _EDGE, grid)
    gs = _grad(beta, h, p, xs)
    roots = []
    for i in np.nonzero(np.diff(np.signbit(gs)))[0]:
        r = brentq(
            lambda t: _grad(beta, h, p, t),
            xs[i],
            xs[i + 1],
            xtol=1e-15,
            rtol=8.9e-16,
            maxiter=200,
        )
        roots.append(r)
    # Exact zeros sitting on a grid node (e.g. x=0 when h=0 and the grid is odd).
    for i in np.nonzero(gs == 0.0)[0]:
        roots.append(xs[i])
    return sorted(roots)


def _local_maxima(beta, h, p, grid):
    """Stationary points that are local maxima, with degenerate-curvature care.

    Roots reached through a sign change of H' have odd multiplicity, so a
    near-flat curvature there means a degenerate (quartic-order) maximizer,
    not a saddle; saddles come from even-multiplicity roots the sign scan
    never brackets.  A direct value comparison settles the degenerate case.
    """
    maxima = []
    for r in _stationary_points(beta, h, p, grid):
        _, _, d2, _, d4 = h_derivatives(beta, h, p, r, 4)
        if d2 < -EPS_FLAT:
            maxima.append(r)
        elif abs(d2) <= EPS_FLAT and d4 < 0.0:
            step = 1e-3 * (1.0 - abs(r))
            h0 = h_derivatives(beta, h, p, r, 0)[0]
            if (
                h_derivatives(beta, h, p, r - step, 0)[0] < h0
                and h_derivatives(beta, h, p, r + step, 0)[0] < h0
            ):
                maxima.append(r)
    return maxima


def analyze(
    beta: float,
    h: float,
    p: int,
    grid: int = DEFAULT_GRID,
    eps_tie: float = EPS_TIE,
    eps_flat: float = EPS_FLAT,
    check_stability: bool = True,
) -> HAnalysis:
    """Locate all global maximizers of the landscape and classify the point.

    The classification is tolerance-based: maximizer values within eps_tie of
    the supremum count as tied (critical point), and |H''| <= eps_flat at a
    unique maximizer counts as flat (special point).  Raises RootScanError if
    a 4x finer scan finds a different number of local maxima.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if p < 2:
        raise ValueError("p must be >= 2")
    maxima = _local_maxima(beta, h, p, grid)
    if check_stability:
        refined = _local_maxima(beta, h, p, 4 * grid)
        if len(refined) != len(maxima):
            raise RootScanError(
                f"unstable maximizer count at (beta={beta}, h={h}, p={p}): "
                f"{len(maxima)} on grid {grid} vs {len(refined)} on grid {4 * grid}"
            )
    if not maxima:
        raise RootScanError(f"no local maximizer found at (beta={beta}, h={h}, p={p})")

    values = np.array([h_derivatives(beta, h, p, m, 0)[0] for m in maxima])
    top = values.max()
    keep = values >= top - eps_tie
    maximizers = np.array([m for m, k in zip(maxima, keep) if k])
    values = values[keep]
    second = np.array([h_derivatives(beta, h, p, m, 2)[2] for m in maximizers])

    weights = None
    if len(maximizers) == 1:
        if abs(second[0]) <= eps_flat:
            cls = PointClass.SPECIAL
        else:
            cls = PointClass.REGULAR
    else:
        cls = (
            PointClass.STRONGLY_CRITICAL
            if len(maximizers) == 3
            else PointClass.WEAKLY_CRITICAL
        )
        raw = ((maximizers**2 - 1.0) * second) ** (-0.5)
        weights = raw / raw.sum()

    return HAnalysis(
        beta=float(beta),
        h=float(h),
        p=int(p),
        maximizers=maximizers,
        values=values,
        second_derivs=second,
        classification=cls,
        weights=weights,
    )


@lru_cache(maxsize=64)
def beta_tilde(p: int) -> float:
    """Coexistence threshold: the largest beta with sup_x H(x; beta, 0, p) = 0.

    Equivalently inf over x in (0, 1] of I(x)/x^p, which is how it is
    evaluated here: the ratio form is exact where the sup-predicate bisection
    loses all precision (the p = 2 threshold 1/2 is a degenerate minimum at
    x -> 0).
    """
    if p < 2:
        raise ValueError("p must be >= 2")

    def ratio(x):
        return entropy(x) / x**p

    xs = np.linspace(1e-8, 1.0, 2001)
    vals = np.array([ratio(x) for x in xs])
    i = int(np.argmin(vals))
    if i == 0:
        return float(vals[0])
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, len(xs) - 1)]
    res = minimize_scalar(ratio, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13})
    return float(min(res.fun, vals[i]))


def special_point(p: int, sign: int = +1) -> tuple[float, float]:
    """Coordinates (beta, h) of the degenerate-curvature (flat-maximizer) point.

    For odd p there is a single such point; for even p the mirror image
    (sign = -1) is also one.
    """
    if p < 3:
        raise ValueError("special points exist only for p >= 3")
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if sign == -1 and p % 2 == 1:
        raise ValueError("odd p has a single special point (sign = +1 only)")
    q = (p - 2.0) / p
    beta_check = (1.0 / (2.0 * (p - 1.0))) * (p / (p - 2.0)) ** ((p - 2.0) / 2.0)
    h_check = math.atanh(math.sqrt(q)) - beta_check * p * q ** ((p - 1.0) / 2.0)
    return beta_check, sign * h_check


def _inflection_points(beta, p):
    """Positive roots a1 < a2 of H'' (independent of h), or None if concave.

    (1 - x^2) H''(x) + 1 is single-peaked on (0, 1) with peak at
    x = sqrt(1 - 2/p); real roots exist only for beta above the flat-point
    threshold.
    """
    q = math.sqrt((p - 2.0) / p)

    def n_fun(x):
        return beta * p * (p - 1) * x ** (p - 2) * (1.0 - x * x) - 1.0

    if n_fun(q) <= 0.0:
        return None
    a1 = brentq(n_fun, 1e-14, q, xtol=1e-15, rtol=8.9e-16)
    a2 = brentq(n_fun, q, 1.0 - 1e-14, xtol=1e-15, rtol=8.9e-16)
    return a1, a2


def _bracketed_maxima(beta, h, p, infl):
    """Local maxima via exact concavity brackets (needs the inflection pair).

    H' is strictly decreasing on every interval where H is concave, so each
    concave interval holds at most one maximum, found by Brent whenever H'
    changes sign from + to - across it.  Grid-free, so it resolves maxima
    that merge as beta approaches the flat-point threshold.
    """
    a1, a2 = infl
    lo, hi = -1.0 + 1e-13, 1.0 - 1e-13
    if p % 2 == 0:
        intervals = [(lo, -a2), (-a1, a1), (a2, hi)]
    else:
        intervals = [(lo, a1), (a2, hi)]
    maxima = []
    for u, v in intervals:
        fu, fv = _grad(beta, h, p, u), _grad(beta, h, p, v)
        if fu > 0.0 > fv:
            maxima.append(
                brentq(lambda t: _grad(beta, h, p, t), u, v,
                       xtol=1e-15, rtol=8.9e-16, maxiter=200)
            )
        elif fu == 0.0:
            maxima.append(u)
        elif fv == 0.0 and u < 0 <= v:
            maxima.append(v)
    return maxima


def _group_gap(beta, h, p, infl):
    """Best maximum right of the upper inflection minus best to its left.

    A tie of global maxima always pairs one maximizer from each group, and
    the group gap is strictly increasing in h (envelope slopes differ by at
    least a2 - a1), so its sign steers a bisection for the tie field.
    Returns +/-inf when one group is empty.
    """
    a2 = infl[1]
    maxima = _bracketed_maxima(beta, h, p, infl)
    left = [m for m in maxima if m < a2]
    right = [m for m in maxima if m >= a2]
    if not right:
        return -math.inf
    if not left:
        return math.inf
    v = lambda m: h_derivatives(beta, h, p, m, 0)[0]
    return max(v(m) for m in right) - max(v(m) for m in left)


def critical_curve(p: int, beta: float, tol: float = 1e-11) -> float | None:
    """Field value h = phi_p(beta) at which two landscape maxima tie.

    Returns the nonnegative branch for even p (the curve is mirror-symmetric
    in h) and the signed value for odd p.  Returns None when no two-maximum
    field exists (beta at the even-p coexistence threshold, where three maxima
    tie instead).
    """
    bcheck, _ = special_point(max(p, 3))
    if p < 3:
        raise ValueError("the critical curve is traced for p >= 3")
    if beta <= bcheck:
        raise ValueError(f"require beta > {bcheck} for p={p}")
    if p % 2 == 0 and abs(beta - beta_tilde(p)) < 1e-12:
        return None

    infl = _inflection_points(beta, p)
    if infl is None:
        raise ValueError(f"no inflection pair at beta={beta}, p={p}")
    a1, a2 = infl
    # Competing maxima exist only while H'(a1) < 0 < H'(a2).
    h_hi = math.atanh(a1) - beta * p * a1 ** (p - 1)
    h_lo = math.atanh(a2) - beta * p * a2 ** (p - 1)
    if not h_lo < h_hi:
        raise ValueError(f"bracketing failed at beta={beta}, p={p}")
    if h_hi - h_lo < 1e-11:
        # Just above the flat-point threshold the whole two-maximum window is
        # narrower than the tie tolerance; any field inside it qualifies.
        return 0.5 * (h_lo + h_hi)
    pad = 1e-9 * (h_hi - h_lo)
    lo, hi = h_lo + pad, h_hi - pad

    g_lo = _group_gap(beta, lo, p, infl)
    g_hi = _group_gap(beta, hi, p, infl)
    if not (g_lo < 0.0 < g_hi):
        raise ValueError(f"gap function does not bracket a tie at beta={beta}, p={p}")
    g = math.inf
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = _group_gap(beta, mid, p, infl)
        if abs(g) < tol and np.isfinite(g):
            break
        if g > 0.0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15 * max(1.0, abs(mid)):
            mid = 0.5 * (lo + hi)
            g = _group_gap(beta, mid, p, infl)
            break
    if not (np.isfinite(g) and abs(g) < EPS_TIE):
        raise ValueError(
            f"tie refinement stalled at beta={beta}, p={p}: residual gap {g}"
        )
    return float(mid)


def critical_set_h(beta: float, p: int) -> tuple[float, ...]:
    """All fields h at which (beta, h) lies on the closed critical curve.

    Empty below the flat-point threshold, the flat-point field(s) exactly at
    it, and the traced curve value(s) above it.  This is the augmentation set
    for the field confidence interval.
    """
    bcheck, hcheck = special_point(max(p, 3))
    if p < 3:
        raise ValueError("p >= 3 required")
    if beta < bcheck - 1e-14:
        return ()
    if abs(beta - bcheck) <= 1e-14:
        return (-hcheck, hcheck) if p % 2 == 0 else (hcheck,)
    if p % 2 == 0:
        if beta >= beta_tilde(p) - 1e-12:
            return (0.0,)
        phi = critical_curve(p, beta)
        return (-phi, phi)
    phi = critical_curve(p, beta)
    return (phi,)


def critical_set_beta(h: float, p: int) -> tuple[float, ...]:
    """All beta at which (beta, h) lies on the closed critical curve (h != 0).

    Empty or a singleton: the curve is strictly decreasing in beta, so it is
    inverted by bisection.  This is the augmentation set for the temperature
    confidence interval.
    """
    if h == 0.0:
        raise ValueError("the h = 0 section of the critical set is a half-line")
    if p < 3:
        raise ValueError("p >= 3 required")
    bcheck, hcheck = special_point(p)
    target = abs(h) if p % 2 == 0 else h
    if target > hcheck + 1e-14:
        return ()
    if abs(target - hcheck) <= 1e-14:
        return (bcheck,)
    if p % 2 == 0:
        if target <= 0.0:
            return ()
        lo, hi = bcheck + 1e-13, beta_tilde(p) - 1e-12
    else:
        lo = bcheck + 1e-13
        hi = beta_tilde(p)
        if target < 0.0:
            # Negative branch: expand until the curve drops below the target.
            hi = beta_tilde(p) + 1.0
            while critical_curve(p, hi) > target:
                hi = bcheck + 2.0 * (hi - bcheck)
                if hi > 1e6:
                    raise RuntimeError("critical-curve inversion failed to bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if critical_curve(p, mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return (0.5 * (lo + hi),)
