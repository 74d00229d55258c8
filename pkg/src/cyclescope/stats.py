"""Two-sided tests used for cycle detection: t-tests, Wilcoxon rank sum, OLS slope.

Distribution functions are computed here directly (regularized incomplete
beta by continued fraction) so that no statistics package is required.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

EXACT_RANK_SUM_MAX = 12
P_FLOOR = 1e-300

_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAX_ITER = 10_000


class DegenerateSampleError(ValueError):
    """Raised when a test statistic is undefined because the sample has no spread."""


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n: tuple[int, ...]
    df: float | None = None
    estimate: float | None = None
    method: str = ""
    sidedness: str = field(default="two-sided")

    __test__ = False  # not a pytest class

    def __post_init__(self):
        # plain Python numbers, so repr and JSON output do not leak numpy types
        put = partial(object.__setattr__, self)
        put("statistic", float(self.statistic))
        put("p_value", float(self.p_value))
        put("n", tuple(int(v) for v in self.n))
        if self.df is not None:
            put("df", float(self.df))
        if self.estimate is not None:
            put("estimate", float(self.estimate))

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "p_value": self.p_value, "n": list(self.n),
                "df": self.df, "estimate": self.estimate, "method": self.method,
                "sidedness": self.sidedness}


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc requires a, b > 0")
    if not 0.0 <= x <= 1.0:
        raise ValueError("betainc requires 0 <= x <= 1")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf2(t: float, df: float) -> float:
    """Two-sided tail probability P(|T| >= |t|) for Student-t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_sf2(t, df)
    return 1.0 - tail if t > 0 else tail


def norm_sf2(z: float) -> float:
    """Two-sided normal tail probability P(|Z| >= |z|)."""
    return math.erfc(abs(z) / math.sqrt(2.0))


def _as_sample(values, name="samples") -> np.ndarray:
    x = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} must be finite")
    return x


def one_sample_t(samples, mu0: float = 0.0) -> TestResult:
    """Student t-test of H0: population mean == mu0."""
    x = _as_sample(samples)
    n = x.size
    if n < 2:
        raise ValueError("one-sample t-test needs at least 2 samples")
    diff = x - mu0
    mean = diff.mean()
    sd = diff.std(ddof=1)
    if sd == 0.0:
        raise DegenerateSampleError("zero sample variance")
    t = mean / (sd / math.sqrt(n))
    return TestResult(float(t), t_sf2(t, n - 1), (n,), df=n - 1,
                      estimate=float(x.mean()), method="one-sample t")


def two_sample_t(a, b) -> TestResult:
    """Pooled-variance two-sample t-test of H0: mean(b) == mean(a).

    The statistic is signed as mean(b) - mean(a), so positive means the second
    group is larger.
    """
    x, y = _as_sample(a, "a"), _as_sample(b, "b")
    n1, n2 = x.size, y.size
    if n1 < 1 or n2 < 1 or n1 + n2 < 3:
        raise ValueError("two-sample t-test needs n1, n2 >= 1 and n1 + n2 >= 3")
    df = n1 + n2 - 2
    ss = ((x - x.mean()) ** 2).sum() + ((y - y.mean()) ** 2).sum()
    delta = y.mean() - x.mean()
    se = math.sqrt(ss / df * (1.0 / n1 + 1.0 / n2))
    if se == 0.0:
        if delta == 0.0:
            return TestResult(0.0, 1.0, (n1, n2), df=df, estimate=0.0, method="two-sample t")
        raise DegenerateSampleError("zero pooled variance with distinct means")
    t = delta / se
    return TestResult(float(t), t_sf2(t, df), (n1, n2), df=df,
                      estimate=float(delta), method="two-sample t")


def midranks(values) -> np.ndarray:
    """1-based ranks, ties receiving the average of the positions they span."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(x.size)
    sorted_x = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_rank_sum_p(doubled_ranks: np.ndarray, n1: int) -> float:
    # doubled midranks keep every rank sum integral, so the tail count is exact
    n = doubled_ranks.size
    center = n1 * (n + 1)  # twice the null mean of W
    ranks = [int(r) for r in doubled_ranks]
    observed = abs(sum(ranks[:n1]) - center)
    hits = total = 0
    for combo in itertools.combinations(ranks, n1):
        total += 1
        if abs(sum(combo) - center) >= observed:
            hits += 1
    return hits / total


def rank_sum(a, b) -> TestResult:
    """Wilcoxon rank-sum test comparing group ``a`` against group ``b``.

    ``statistic`` is the standardized rank sum of ``a`` (positive when ``a``
    tends to be larger) and ``estimate`` the raw rank sum. The p-value is exact
    when the pooled size is at most 12, otherwise from the normal
    approximation with tie and continuity corrections.
    """
    x, y = _as_sample(a, "a"), _as_sample(b, "b")
    n1, n2 = x.size, y.size
    if n1 < 1 or n2 < 1:
        raise ValueError("rank-sum test needs two non-empty groups")
    n = n1 + n2
    ranks = midranks(np.concatenate([x, y]))
    w = float(ranks[:n1].sum())
    mean_w = n1 * (n + 1) / 2.0
    _, tie_counts = np.unique(np.concatenate([x, y]), return_counts=True)
    tie_term = float(((tie_counts ** 3) - tie_counts).sum())
    var_w = n1 * n2 / 12.0 * ((n + 1) - (tie_term / (n * (n - 1)) if n > 1 else 0.0))
    sd_w = math.sqrt(var_w) if var_w > 0 else 0.0
    z = (w - mean_w) / sd_w if sd_w > 0 else 0.0
    if n <= EXACT_RANK_SUM_MAX:
        doubled = np.rint(2 * ranks).astype(int)
        p = _exact_rank_sum_p(doubled, n1)
        method = "rank-sum exact"
    else:
        if sd_w == 0:
            p = 1.0
        else:
            p = norm_sf2(max(abs(w - mean_w) - 0.5, 0.0) / sd_w)
        method = "rank-sum normal"
    return TestResult(float(z), min(1.0, p), (n1, n2), estimate=w, method=method)


def ols_slope(x, y) -> TestResult:
    """Least-squares slope of y on x with a t-test of slope == 0 (n - 2 df).

    A perfect nonzero fit has no finite t; it is reported with the largest
    float as statistic and p clamped to 1e-300.
    """
    xs, ys = _as_sample(x, "x"), _as_sample(y, "y")
    if xs.size != ys.size:
        raise ValueError("x and y must have equal length")
    n = xs.size
    if n < 3:
        raise ValueError("OLS slope test needs at least 3 points")
    dx = xs - xs.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ValueError("x is constant; slope undefined")
    slope = float(dx @ (ys - ys.mean())) / sxx
    resid = ys - ys.mean() - slope * dx
    sse = float(resid @ resid)
    df = n - 2
    if sse <= 1e-24 * max(1.0, float(((ys - ys.mean()) ** 2).sum())):
        if slope == 0.0:
            return TestResult(0.0, 1.0, (n,), df=df, estimate=0.0, method="OLS slope")
        t = math.copysign(np.finfo(float).max, slope)
        return TestResult(t, P_FLOOR, (n,), df=df, estimate=slope, method="OLS slope")
    se = math.sqrt(sse / df / sxx)
    t = slope / se
    return TestResult(float(t), max(t_sf2(t, df), P_FLOOR), (n,), df=df,
                      estimate=slope, method="OLS slope")


STAR_LEVELS = ((0.01, "***"), (0.05, "**"), (0.1, "*"), (0.2, "·"))


def stars(p: float) -> str:
    """Significance mark; the empty string means no mark."""
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"p-value must lie in [0, 1], got {p!r}")
    for level, mark in STAR_LEVELS:
        if p < level:
            return mark
    return ""
