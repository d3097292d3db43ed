"""Statistical estimators: stretched-exponential tail norms, streaming
moments, trend fits, the linearization gap, and the deterministic
comparison checks.

The tail norm of exponent s is the smallest nu with
mean exp(|X/nu|**s) = e; the estimator solves that equation on the
empirical sample by bisection (log-sum-exp form).  Empirical tail norms
are biased for heavy tails at small n, so reported norms carry the sample
size and a bootstrap bias correction with a standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .energy import HeightConfig, dirichlet, total_energy
from .minimize import MinimizeOptions, minimize_pair
from .potential import PotentialField, mix_seed

__all__ = [
    "SampleSet",
    "OrliczEstimate",
    "RunningMoments",
    "OLSFit",
    "orlicz_norm",
    "bootstrap_norm",
    "ols",
    "trend_not_positive",
    "linearization_gap",
    "comparison_suite",
    "ComparisonReport",
    "random_bridge",
]


@dataclass
class SampleSet:
    values: np.ndarray
    label: str = ""
    seed: int | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.size == 0:
            raise ValueError("empty sample set")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("samples must be finite")


@dataclass
class OrliczEstimate:
    s: float
    nu_hat: float
    n: int
    bracket: tuple[float, float]
    rel_tol: float


def _values_of(samples) -> np.ndarray:
    if isinstance(samples, SampleSet):
        return samples.values
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empty sample set")
    return arr


def _log_mean_exp(t: np.ndarray) -> float:
    m = float(t.max())
    return m + math.log(float(np.mean(np.exp(t - m))))


def orlicz_norm(samples, s: float, rel_tol: float = 1e-6) -> OrliczEstimate:
    """Empirical tail norm: the nu with mean exp(|X/nu|**s) = e."""
    if s < 1:
        raise ValueError("exponent s must be >= 1")
    a = np.abs(_values_of(samples))
    n = a.size
    amax = float(a.max())
    if amax == 0.0:
        return OrliczEstimate(s, 0.0, n, (0.0, 0.0), rel_tol)
    if float(a.min()) == amax:
        # constant |X|: the norm is |X| itself, exactly
        return OrliczEstimate(s, amax, n, (amax, amax), rel_tol)

    def gap(nu: float) -> float:
        return _log_mean_exp((a / nu) ** s) - 1.0

    lo = amax / math.log(10.0 * n) ** (1.0 / s)
    hi = amax * n ** (1.0 / s)
    while gap(lo) <= 0.0:  # defensive; holds by construction
        lo /= 2.0
    while gap(hi) > 0.0:
        hi *= 2.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return OrliczEstimate(s, 0.5 * (lo + hi), n, (lo, hi), rel_tol)


def bootstrap_norm(samples, s: float, n_boot: int = 200, seed: int = 0):
    """Bias-corrected tail norm with a bootstrap standard error.

    Returns (corrected, se, point_estimate).
    """
    a = np.abs(_values_of(samples))
    point = orlicz_norm(a, s).nu_hat
    rng = np.random.default_rng(mix_seed(seed, a.size, n_boot))
    reps = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, a.size, size=a.size)
        reps[b] = orlicz_norm(a[idx], s).nu_hat
    corrected = 2.0 * point - float(reps.mean())
    se = float(reps.std(ddof=1))
    return corrected, se, point


class RunningMoments:
    """Welford accumulator: numerically stable streaming mean/variance."""

    def __init__(self):
        self.n = 0
        self._mean = 0.0
        self._m2 = 0.0

    def push(self, x: float) -> None:
        self.n += 1
        d = x - self._mean
        self._mean += d / self.n
        self._m2 += d * (x - self._mean)

    def extend(self, xs) -> "RunningMoments":
        for x in xs:
            self.push(float(x))
        return self

    @property
    def mean(self) -> float:
        if self.n == 0:
            raise ValueError("no samples")
        return self._mean

    @property
    def variance(self) -> float:
        if self.n < 2:
            raise ValueError("need at least two samples")
        return self._m2 / (self.n - 1)

    @property
    def se(self) -> float:
        return math.sqrt(self.variance / self.n)


@dataclass
class OLSFit:
    slope: float
    intercept: float
    r2: float
    se_slope: float
    n: int


def ols(x, y) -> OLSFit:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    if n < 3:
        raise ValueError("need at least three points to regress")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0:
        raise ValueError("degenerate abscissa")
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    resid = y - intercept - slope * x
    ssr = float(np.sum(resid**2))
    sst = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if sst == 0 else 1.0 - ssr / sst
    se_slope = math.sqrt(ssr / (n - 2) / sxx) if n > 2 else 0.0
    return OLSFit(slope=slope, intercept=intercept, r2=r2, se_slope=se_slope, n=n)


def trend_not_positive(x, y) -> tuple[bool, OLSFit]:
    """No-growth gate: the OLS slope is not positive at the 2-s.e. level."""
    fit = ols(x, y)
    return fit.slope <= 2.0 * fit.se_slope, fit


def linearization_gap(h: HeightConfig, eps: float):
    """Gap between the exact length of the graph and its quadratic proxy.

    Slopes are eps**(2/3) times the lattice increments.  Returns
    (eta, eta_tilde) with

        sum (sqrt(1+z^2) - 1) = (1 - eta) * (1/2) sum z^2,

    and eta_tilde(nu) = the fraction of sum z^2 carried by |z| > nu.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    z = eps ** (2.0 / 3.0) * np.diff(h.heights)
    z2 = z * z
    s2 = math.fsum(z2)
    if s2 == 0.0:
        return 0.0, (lambda nu: 0.0)
    # sqrt(1+z^2)-1 written stably as z^2/(1+sqrt(1+z^2))
    length = math.fsum(z2 / (1.0 + np.sqrt(1.0 + z2)))
    eta = 1.0 - length / (0.5 * s2)

    def eta_tilde(nu: float) -> float:
        frac = float(np.sum(z2[np.abs(z) > nu]) / s2)
        return min(1.0, max(0.0, frac))

    return eta, eta_tilde


def random_bridge(rng: np.random.Generator, L: int, amplitude: float) -> HeightConfig:
    """Random zero-boundary profile: a Gaussian walk tied down at both ends."""
    w = np.concatenate([[0.0], np.cumsum(rng.standard_normal(L))])
    w -= np.linspace(0.0, w[-1], L + 1)
    return HeightConfig(0, amplitude * w)


@dataclass
class ComparisonReport:
    trials: int
    submodularity_violations: int
    max_submodularity_excess: float
    order_violations: int
    max_order_excess: float


def comparison_suite(
    master_seed: int,
    L: int,
    trials: int,
    opts: MinimizeOptions | None = None,
    tolerance: float = 1e-9,
) -> ComparisonReport:
    """Count violations of the two deterministic inequalities.

    (a) The energy of the pointwise min plus the energy of the pointwise max
        never exceeds the summed energies of a random pair.
    (b) The minimizer with nonnegative boundary data dominates the
        zero-boundary minimizer, up to one grid step.
    """
    opts = opts or MinimizeOptions()
    sub_viol = 0
    sub_excess = 0.0
    for t in range(trials):
        field = PotentialField(mix_seed(master_seed, 1, t), L)
        rng = np.random.default_rng(mix_seed(master_seed, 2, t))
        h1 = random_bridge(rng, L, 1.0)
        h2 = random_bridge(rng, L, 1.5)
        lo = HeightConfig(0, np.minimum(h1.heights, h2.heights))
        hi = HeightConfig(0, np.maximum(h1.heights, h2.heights))
        lhs = total_energy(field, lo).total + total_energy(field, hi).total
        rhs = total_energy(field, h1).total + total_energy(field, h2).total
        excess = lhs - rhs
        if excess > tolerance:
            sub_viol += 1
            sub_excess = max(sub_excess, excess)

    order_viol = 0
    order_excess = 0.0
    delta = opts.grid_spacing
    for t in range(trials):
        field = PotentialField(mix_seed(master_seed, 3, t), L)
        rng = np.random.default_rng(mix_seed(master_seed, 4, t))
        h0, h1 = np.round(np.abs(rng.normal(0.0, L / 4.0, size=2)) / delta) * delta
        base, shifted = minimize_pair(field, L, (0.0, 0.0), (float(h0), float(h1)), opts)
        gap = base.config.heights - shifted.config.heights
        worst = float(gap.max()) - delta
        if worst > tolerance:
            order_viol += 1
            order_excess = max(order_excess, worst)
    return ComparisonReport(
        trials=trials,
        submodularity_violations=sub_viol,
        max_submodularity_excess=sub_excess,
        order_violations=order_viol,
        max_order_excess=order_excess,
    )
