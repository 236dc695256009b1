"""Concentration functions, the c(t, gamma) quantile, and point estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats as _st

# below this many successes (or failures) the normal interval is replaced by Clopper-Pearson
SMALL_COUNT = 10


@dataclass(frozen=True)
class SampleSet:
    values: np.ndarray
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).ravel())

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class EstimateResult:
    estimate: float
    stderr: float
    replicates: int
    seed: int
    ci_low: float = math.nan
    ci_high: float = math.nan


def _values(samples) -> np.ndarray:
    vals = samples.values if isinstance(samples, SampleSet) else np.asarray(samples, float).ravel()
    if vals.size == 0:
        raise ValueError("empty sample set")
    return vals


def empirical_concentration(samples, lam: float) -> float:
    """sup_x of the empirical P(x <= X <= x + lam).

    The supremum is attained with x at a sample point, so only those are tried.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    s = np.sort(_values(samples))
    lo = np.searchsorted(s, s, side="left")
    hi = np.searchsorted(s, s + lam, side="right")
    return float((hi - lo).max() / s.size)


def empirical_quantile_c(samples, a: float) -> int:
    """min{z in {0, 1, ...}: empirical P(Z <= z) > a}, strict inequality."""
    if not 0 < a < 0.5:
        raise ValueError(f"a must lie in (0, 1/2), got {a}")
    vals = _values(samples)
    if np.any(vals != np.round(vals)):
        raise ValueError("samples must be integer valued")
    s = np.sort(vals.astype(np.int64))
    need = Fraction(a) * s.size
    # the empirical cdf only jumps at sample values; count(<= s[i]) for the last copy of each
    counts = np.searchsorted(s, s, side="right")
    idx = int(np.argmax([Fraction(int(c)) > need for c in counts]))
    return max(int(s[idx]), 0)


def rogozin_bound(lam: float, lam_tilde: float, m: int, a: float, C: float) -> float:
    """C lam / (lam_tilde sqrt(m a)), the Kolmogorov-Rogozin type bound."""
    if not 0 < lam_tilde <= lam:
        raise ValueError("need 0 < lam_tilde <= lam")
    if not 0 < a <= 1:
        raise ValueError("a must lie in (0, 1]")
    if m < 1 or C <= 0:
        raise ValueError("need m >= 1 and C > 0")
    return C * lam / (lam_tilde * math.sqrt(m * a))


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log y against log x."""
    x = np.asarray(xs, float)
    y = np.asarray(ys, float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need two equal-length sequences of length >= 2")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive values")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def binomial_estimate(successes: int, trials: int, seed: int) -> EstimateResult:
    if trials <= 0:
        raise ValueError("need at least one trial")
    p = successes / trials
    se = math.sqrt(p * (1 - p) / trials)
    if successes < SMALL_COUNT or trials - successes < SMALL_COUNT:
        lo = 0.0 if successes == 0 else float(_st.beta.ppf(0.025, successes, trials - successes + 1))
        hi = 1.0 if successes == trials else float(_st.beta.ppf(0.975, successes + 1, trials - successes))
    else:
        lo, hi = p - 1.959963984540054 * se, p + 1.959963984540054 * se
    return EstimateResult(p, se, trials, seed, lo, hi)


def mean_estimate(values, seed: int, scale: float = 1.0) -> EstimateResult:
    """Sample mean of ``values / scale`` with its standard error."""
    v = np.asarray(values, float) / scale
    if v.size == 0:
        raise ValueError("empty sample")
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    m = float(v.mean())
    return EstimateResult(m, se, int(v.size), seed, m - 1.959963984540054 * se,
                          m + 1.959963984540054 * se)
