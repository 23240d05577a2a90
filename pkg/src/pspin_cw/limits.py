"""Limiting distributions of the average spin and of the ML estimates.

Every limit that arises is assembled from five primitives: Gaussians,
half-normals (the law of +|Z| or -|Z|), point masses (including ones at
+/-infinity), mixtures of those, and the quartic-tilted law with density
proportional to exp(c x^4 / 24 + d x) that replaces the Gaussian when the
curvature at the maximizer vanishes.  Laws expose density, CDF, mean and an
inverse-CDF sampler driven by a caller-supplied generator.

The constructors at the bottom map a landscape analysis to the matching
limit law for the average spin, the field estimate, and the coupling
estimate, including the superefficient composite laws at flat-curvature
points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.special import ndtr

from .landscape import HAnalysis, PointClass, h_derivatives

__all__ = [
    "LimitLaw",
    "Gaussian",
    "HalfNormal",
    "PointMass",
    "Quartic",
    "Mixture",
    "ScaledLaw",
    "GLaw",
    "quartic_law",
    "g_law",
    "sigma_limit",
    "h_mle_limit",
    "beta_mle_limit",
    "gamma_p",
]


class LimitLaw:
    """Common surface for the limiting distributions used here."""

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def atoms(self) -> list[tuple[float, float]]:
        """(location, mass) pairs of the discrete part; empty if continuous."""
        return []

    def cdf_left(self, x):
        """Left limit of the CDF, needed for KS distances against atoms."""
        x = np.asarray(x, dtype=np.float64)
        out = np.asarray(self.cdf(x), dtype=np.float64).copy()
        for loc, mass in self.atoms():
            if np.isfinite(loc):
                out = np.where(x == loc, out - mass, out)
        return out


@dataclass(frozen=True)
class Gaussian(LimitLaw):
    mu: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("variance must be positive")

    @property
    def sigma(self):
        return math.sqrt(self.variance)

    def pdf(self, x):
        z = (np.asarray(x) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi))

    def cdf(self, x):
        return ndtr((np.asarray(x) - self.mu) / self.sigma)

    def mean(self):
        return self.mu

    def sample(self, rng, size):
        return rng.normal(self.mu, self.sigma, size)


@dataclass(frozen=True)
class HalfNormal(LimitLaw):
    """Law of side * |Z| with Z ~ N(0, variance); side is +1 or -1."""

    variance: float
    side: int = +1

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("variance must be positive")
        if self.side not in (+1, -1):
            raise ValueError("side must be +1 or -1")

    @property
    def sigma(self):
        return math.sqrt(self.variance)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        z = x / self.sigma
        base = 2.0 * np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2 * math.pi))
        ok = x >= 0 if self.side > 0 else x <= 0
        return np.where(ok, base, 0.0)

    def cdf(self, x):
        z = np.asarray(x, dtype=np.float64) / self.sigma
        if self.side > 0:
            return np.where(z < 0, 0.0, 2.0 * ndtr(z) - 1.0)
        return np.where(z >= 0, 1.0, 2.0 * ndtr(z))

    def mean(self):
        return self.side * self.sigma * math.sqrt(2.0 / math.pi)

    def sample(self, rng, size):
        return self.side * np.abs(rng.normal(0.0, self.sigma, size))


@dataclass(frozen=True)
class PointMass(LimitLaw):
    """Degenerate law at a location, which may be +/-infinity.

    A mass at -infinity contributes its full weight to the CDF at every
    finite argument; a mass at +infinity contributes nothing there.
    """

    location: float

    def pdf(self, x):
        return np.zeros_like(np.asarray(x, dtype=np.float64))

    def cdf(self, x):
        return (np.asarray(x, dtype=np.float64) >= self.location).astype(np.float64)

    def mean(self):
        return self.location

    def sample(self, rng, size):
        return np.full(size, self.location)

    def atoms(self):
        return [(self.location, 1.0)]


def _quartic_cutoff(c4: float, drift: float) -> float:
    """Half-width L with exponent <= -60 outside [-L, L] (tail mass << 1e-14)."""
    scale = abs(c4) / 24.0
    L = (60.0 / scale) ** 0.25
    for _ in range(8):
        L = ((60.0 + abs(drift) * L) / scale) ** 0.25
    return L


def _quartic_logpdf_unnorm(x, c4, drift):
    x = np.asarray(x, dtype=np.float64)
    return (c4 / 24.0) * x**4 + drift * x


def _quartic_quad(c4, drift, moment=0):
    """Integral of x^moment exp(c4 x^4/24 + drift x), with exponent shifting."""
    L = _quartic_cutoff(c4, drift)
    if drift == 0.0:
        shift = 0.0
    else:
        x_peak = np.sign(drift) * (6.0 * abs(drift) / abs(c4)) ** (1.0 / 3.0)
        shift = _quartic_logpdf_unnorm(x_peak, c4, drift)
    val, _ = quad(
        lambda x: x**moment * math.exp((c4 / 24.0) * x**4 + drift * x - shift),
        -L,
        L,
        epsabs=1e-14,
        epsrel=1e-12,
        limit=200,
    )
    return val, shift


def _tilted_quartic_mean(c4: float, drift: float) -> float:
    z, shift = _quartic_quad(c4, drift, 0)
    m, _ = _quartic_quad(c4, drift, 1)
    return m / z


class Quartic(LimitLaw):
    """Density proportional to exp(curvature * x^4 / 24 + drift * x).

    curvature must be negative.  Normalization and mean come from adaptive
    quadrature; the CDF is a dense Simpson accumulation interpolated by a
    monotone cubic, which also powers the inverse-CDF sampler.
    """

    _GRID = 4096

    def __init__(self, curvature: float, drift: float = 0.0):
        if not curvature < 0:
            raise ValueError("curvature must be negative")
        self.curvature = float(curvature)
        self.drift = float(drift)
        z, shift = _quartic_quad(curvature, drift, 0)
        self._log_norm = math.log(z) + shift
        self._mean = _quartic_quad(curvature, drift, 1)[0] / z
        self._cut = _quartic_cutoff(curvature, drift)
        self._cdf_spline = None
        self._quantile_spline = None

    @property
    def normalizer(self) -> float:
        """Integral of exp(curvature x^4/24 + drift x) over the line."""
        return math.exp(self._log_norm)

    def pdf(self, x):
        return np.exp(_quartic_logpdf_unnorm(x, self.curvature, self.drift)
                      - self._log_norm)

    def _build_splines(self):
        n = self._GRID
        xs = np.linspace(-self._cut, self._cut, n + 1)
        mid = 0.5 * (xs[:-1] + xs[1:])
        f = self.pdf(xs)
        fm = self.pdf(mid)
        step = xs[1] - xs[0]
        increments = (step / 6.0) * (f[:-1] + 4.0 * fm + f[1:])
        cum = np.concatenate([[0.0], np.cumsum(increments)])
        cum /= cum[-1]
        self._cdf_spline = PchipInterpolator(xs, cum, extrapolate=False)
        keep = np.concatenate([[True], np.diff(cum) > 0])
        self._quantile_spline = PchipInterpolator(cum[keep], xs[keep],
                                                  extrapolate=False)

    def cdf(self, x):
        if self._cdf_spline is None:
            self._build_splines()
        x = np.asarray(x, dtype=np.float64)
        out = self._cdf_spline(np.clip(x, -self._cut, self._cut))
        return np.where(x < -self._cut, 0.0, np.where(x > self._cut, 1.0, out))

    def quantile(self, u):
        if self._quantile_spline is None:
            self._build_splines()
        u = np.clip(np.asarray(u, dtype=np.float64), 1e-300, 1.0)
        return self._quantile_spline(np.clip(u, self._quantile_spline.x[0],
                                             self._quantile_spline.x[-1]))

    def mean(self):
        return self._mean

    def moment(self, k: int) -> float:
        z, _ = _quartic_quad(self.curvature, self.drift, 0)
        num, _ = _quartic_quad(self.curvature, self.drift, k)
        return num / z

    def sample(self, rng, size):
        return self.quantile(rng.random(size))


class Mixture(LimitLaw):
    """Finite mixture of limit laws; weights must be positive and sum to 1."""

    def __init__(self, components: list[tuple[float, LimitLaw]]):
        weights = np.array([w for w, _ in components], dtype=np.float64)
        if np.any(weights <= 0):
            raise ValueError("mixture weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights sum to {weights.sum()}, not 1")
        self.components = [(float(w), law) for w, law in components]

    def pdf(self, x):
        return sum(w * law.pdf(x) for w, law in self.components)

    def cdf(self, x):
        return sum(w * law.cdf(x) for w, law in self.components)

    def mean(self):
        return sum(w * law.mean() for w, law in self.components)

    def atoms(self):
        merged: dict[float, float] = {}
        for w, law in self.components:
            for loc, mass in law.atoms():
                merged[loc] = merged.get(loc, 0.0) + w * mass
        return sorted(merged.items())

    def sample(self, rng, size):
        weights = [w for w, _ in self.components]
        counts = rng.multinomial(size, weights)
        parts = [law.sample(rng, n) for (_, law), n in zip(self.components, counts)]
        out = np.concatenate(parts) if parts else np.empty(0)
        return out[rng.permutation(size)]


@dataclass(frozen=True)
class ScaledLaw:
    """A limit law together with the rate and centering of its statistic.

    The convergent statistic is rate(N) * (raw - center), with rate one of
    sqrt(N), N^(1/4), N^(3/4), or 1.
    """

    law: LimitLaw
    scale: str
    center: float

    _RATES = {
        "sqrt": 0.5,
        "quarter": 0.25,
        "three_quarters": 0.75,
        "none": 0.0,
    }

    def __post_init__(self):
        if self.scale not in self._RATES:
            raise ValueError(f"unknown scale {self.scale!r}")

    def rate(self, N: int) -> float:
        return float(N) ** self._RATES[self.scale]

    def statistic(self, raw, N: int):
        return self.rate(N) * (np.asarray(raw, dtype=np.float64) - self.center)


def quartic_law(h4: float, drift: float) -> Quartic:
    """The flat-curvature limit law: density ~ exp(h4 x^4/24 + drift x)."""
    return Quartic(h4, drift)


def gamma_p(p: int) -> float:
    """P(Z^p <= E Z^p) for standard normal Z.

    1/2 for odd p by symmetry; for even p it is P(|Z| <= ((p-1)!!)^(1/p))
    using the Gaussian moment identity E Z^p = (p-1)!!.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if p % 2 == 1:
        return 0.5
    double_fact = 1
    for j in range(1, p, 2):
        double_fact *= j
    threshold = double_fact ** (1.0 / p)
    return float(2.0 * ndtr(threshold) - 1.0)


def _fourth_deriv_at_max(analysis: HAnalysis) -> float:
    m = float(analysis.maximizers[0])
    return h_derivatives(analysis.beta, analysis.h, analysis.p, m, 4)[4]


def sigma_limit(analysis: HAnalysis) -> ScaledLaw:
    """Limiting law of the average spin implied by the landscape analysis.

    Regular: sqrt(N)(sigma_bar - m*) -> Gaussian(0, -1/H''(m*)).
    Critical: sigma_bar itself -> point-mass mixture over the maximizers.
    Flat (special): N^(1/4)(sigma_bar - m*) -> symmetric quartic law.
    """
    cls = analysis.classification
    if cls is PointClass.REGULAR:
        m = float(analysis.maximizers[0])
        return ScaledLaw(Gaussian(0.0, -1.0 / analysis.second_derivs[0]), "sqrt", m)
    if cls.is_critical:
        comps = [
            (float(w), PointMass(float(m)))
            for w, m in zip(analysis.weights, analysis.maximizers)
        ]
        return ScaledLaw(Mixture(comps), "none", 0.0)
    return ScaledLaw(
        Quartic(_fourth_deriv_at_max(analysis), 0.0), "quarter",
        float(analysis.maximizers[0]),
    )


def h_mle_limit(analysis: HAnalysis) -> ScaledLaw:
    """Limiting law of sqrt(N)(h_hat - h); flat points are served by g_law."""
    cls = analysis.classification
    if cls is PointClass.SPECIAL:
        raise ValueError("flat-curvature points have the N^(3/4) limit: use g_law")
    if cls is PointClass.REGULAR:
        law = Gaussian(0.0, -analysis.second_derivs[0])
        return ScaledLaw(law, "sqrt", analysis.h)

    m = analysis.maximizers
    d2 = analysis.second_derivs
    w = analysis.weights
    if len(m) == 3:
        # Symmetric triple: the two half-normals from the outer maximizers
        # combine into one full Gaussian.
        law = Mixture([
            (float(w[0]), Gaussian(0.0, -d2[0])),
            (float(1.0 - w[0]), PointMass(0.0)),
        ])
    elif analysis.p % 2 == 0 and analysis.h == 0.0:
        # Symmetric pair above the coexistence threshold.
        law = Mixture([
            (0.5, Gaussian(0.0, -d2[1])),
            (0.5, PointMass(0.0)),
        ])
    else:
        law = Mixture([
            (float(w[0]) / 2.0, HalfNormal(-d2[0], side=-1)),
            (float(1.0 - w[0]) / 2.0, HalfNormal(-d2[1], side=+1)),
            (0.5, PointMass(0.0)),
        ])
    return ScaledLaw(law, "sqrt", analysis.h)


def _beta_var(d2: float, p: int, m: float) -> float:
    return -d2 / (p**2 * m ** (2 * p - 2))


def beta_mle_limit(analysis: HAnalysis) -> ScaledLaw:
    """Limiting law of the coupling estimate; flat points are served by g_law.

    At regular points with nonzero maximizer (and at symmetric critical
    pairs) the statistic is sqrt(N)(beta_hat - beta); in the inconsistent
    regimes the returned law is for beta_hat itself (scale "none"), with
    escape to -infinity carrying the gamma_p weight for even p.
    """
    from .landscape import beta_tilde

    cls = analysis.classification
    p = analysis.p
    if cls is PointClass.SPECIAL:
        raise ValueError("flat-curvature points have the N^(3/4) limit: use g_law")

    if cls is PointClass.REGULAR:
        m = float(analysis.maximizers[0])
        if abs(m) > 1e-12:
            law = Gaussian(0.0, _beta_var(analysis.second_derivs[0], p, m))
            return ScaledLaw(law, "sqrt", analysis.beta)
        bt = beta_tilde(p)
        if p % 2 == 1:
            law = Mixture([(0.5, PointMass(bt)), (0.5, PointMass(-bt))])
        else:
            g = gamma_p(p)
            law = Mixture([(g, PointMass(-math.inf)), (1.0 - g, PointMass(bt))])
        return ScaledLaw(law, "none", 0.0)

    m = analysis.maximizers
    d2 = analysis.second_derivs
    w = analysis.weights
    if len(m) == 3:
        g = gamma_p(p)
        var = _beta_var(d2[2], p, float(m[2]))
        law = Mixture([
            (float(w[1]) * g, PointMass(-math.inf)),
            (float(w[0]), HalfNormal(var, side=+1)),
            (float(1.0 - w[0] - w[1] * g), PointMass(0.0)),
        ])
    elif p % 2 == 1 and abs(m[0]) < 1e-9:
        # Odd-p coexistence threshold: the zero maximizer sends the lower
        # half-normal off to -infinity.
        var2 = _beta_var(d2[1], p, float(m[1]))
        law = Mixture([
            (float(w[0]) / 2.0, PointMass(-math.inf)),
            (float(1.0 - w[0]) / 2.0, HalfNormal(var2, side=+1)),
            (0.5, PointMass(0.0)),
        ])
    elif p % 2 == 0 and analysis.h == 0.0:
        var = _beta_var(d2[1], p, float(m[1]))
        law = Gaussian(0.0, var)
    else:
        var1 = _beta_var(d2[0], p, float(m[0]))
        var2 = _beta_var(d2[1], p, float(m[1]))
        sides = (-1, +1) if (p % 2 == 1 or analysis.h > 0.0) else (+1, -1)
        law = Mixture([
            (float(w[0]) / 2.0, HalfNormal(var1, side=sides[0])),
            (float(1.0 - w[0]) / 2.0, HalfNormal(var2, side=sides[1])),
            (0.5, PointMass(0.0)),
        ])
    return ScaledLaw(law, "sqrt", analysis.beta)


@dataclass
class GLaw:
    """Distribution function of the superefficient N^(3/4) estimate limits.

    G(t) is the symmetric quartic CDF evaluated at the mean of the
    drift-tilted quartic law, with the drift equal to t for the field
    estimate and t * p * m*^(p-1) for the coupling estimate.
    """

    which: int
    curvature: float
    drift_slope: float
    base: Quartic = field(repr=False)

    def cdf(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        means = np.array(
            [_tilted_quartic_mean(self.curvature, self.drift_slope * ti) for ti in t]
        )
        out = self.base.cdf(means)
        return out if out.shape != (1,) else float(out[0])

    def __call__(self, t):
        return self.cdf(t)


def g_law(which: int, beta: float, h: float, p: int,
          analysis: HAnalysis | None = None) -> GLaw:
    """G_1 (field estimate) or G_2 (coupling estimate) at a flat point."""
    from .landscape import analyze

    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    if analysis is None:
        analysis = analyze(beta, h, p)
    if analysis.classification is not PointClass.SPECIAL:
        raise ValueError(
            f"g_law requires a flat (special) point, got {analysis.classification}"
        )
    m = float(analysis.maximizers[0])
    h4 = _fourth_deriv_at_max(analysis)
    slope = 1.0 if which == 1 else p * m ** (p - 1)
    return GLaw(which=which, curvature=h4, drift_slope=slope, base=Quartic(h4, 0.0))
