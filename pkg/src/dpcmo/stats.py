"""Two-sample rank-sum test and multi-problem signed-rank test.

Both tests are two-sided, use midranks for ties, and switch between exact
null enumeration for small samples and a normal approximation with tie and
continuity corrections otherwise. Rank arithmetic is implemented here; only
the normal tail probability comes from scipy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.stats import norm

EXACT_RANKSUM_LIMIT = 16  # combined sample size for exact enumeration
EXACT_SIGNEDRANK_LIMIT = 12  # nonzero-delta count for exact enumeration


@dataclass(frozen=True)
class TestReport:
    statistic: float
    p_value: float
    verdict: str  # "better" | "worse" | "equal"
    extras: dict | None = None

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")


def midranks(values: np.ndarray) -> np.ndarray:
    """Ranks starting at 1; tied values share the mean of their positions."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _two_sided_from_tails(p_low: float, p_high: float) -> float:
    return min(1.0, 2.0 * min(p_low, p_high))


def _exact_ranksum_p(ranks: np.ndarray, n_a: int, observed: float) -> float:
    n = len(ranks)
    total = math.comb(n, n_a)
    count_le = 0
    count_ge = 0
    for combo in combinations(range(n), n_a):
        w = ranks[list(combo)].sum()
        if w <= observed + 1e-12:
            count_le += 1
        if w >= observed - 1e-12:
            count_ge += 1
    return _two_sided_from_tails(count_le / total, count_ge / total)


def _approx_ranksum_p(ranks: np.ndarray, n_a: int, observed: float) -> float:
    n = len(ranks)
    n_b = n - n_a
    mu = n_a * (n + 1) / 2.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(((tie_counts ** 3 - tie_counts)).sum()) / (n * (n - 1))
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return 1.0
    diff = observed - mu
    z = (diff - math.copysign(0.5, diff)) / math.sqrt(var) if abs(diff) > 0.5 else 0.0
    return min(1.0, 2.0 * float(norm.sf(abs(z))))


def ranksum_test(a, b, alpha: float = 0.05, larger_is_better: bool = False) -> TestReport:
    """Two-sided rank-sum comparison of two independent samples.

    The verdict says how sample ``a`` compares to sample ``b`` at level
    alpha, oriented by ``larger_is_better``. Exact enumeration is used when
    the combined size is at most 16.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least 2 observations")
    pooled = np.concatenate([a, b])
    ranks = midranks(pooled)
    w = float(ranks[: len(a)].sum())

    if len(pooled) <= EXACT_RANKSUM_LIMIT:
        p = _exact_ranksum_p(ranks, len(a), w)
    else:
        p = _approx_ranksum_p(ranks, len(a), w)

    if p >= alpha:
        verdict = "equal"
    else:
        mean_rank_a = w / len(a)
        mean_rank_b = float(ranks[len(a):].sum()) / len(b)
        a_is_high = mean_rank_a > mean_rank_b
        verdict = "better" if a_is_high == larger_is_better else "worse"
    return TestReport(statistic=w, p_value=p, verdict=verdict)


def _exact_signedrank_p(ranks: np.ndarray, observed_rplus: float) -> float:
    n = len(ranks)
    count_le = 0
    count_ge = 0
    for mask in range(1 << n):
        rplus = sum(ranks[i] for i in range(n) if mask >> i & 1)
        if rplus <= observed_rplus + 1e-12:
            count_le += 1
        if rplus >= observed_rplus - 1e-12:
            count_ge += 1
    total = float(1 << n)
    return _two_sided_from_tails(count_le / total, count_ge / total)


def _approx_signedrank_p(ranks: np.ndarray, observed_rplus: float) -> float:
    n = len(ranks)
    mu = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float((tie_counts ** 3 - tie_counts).sum()) / 48.0
    if var <= 0:
        return 1.0
    diff = observed_rplus - mu
    z = (diff - math.copysign(0.5, diff)) / math.sqrt(var) if abs(diff) > 0.5 else 0.0
    return min(1.0, 2.0 * float(norm.sf(abs(z))))


def signed_rank_multiproblem(deltas, alpha: float = 0.05) -> TestReport:
    """Paired signed-rank test over per-problem differences.

    Zero differences are dropped before ranking. The report's extras carry
    the positive and negative rank sums (R+ and R-); the verdict orients on
    the sign convention that positive deltas favor the first method.
    Exact enumeration is used for at most 12 nonzero differences.
    """
    deltas = np.asarray(deltas, dtype=float)
    nonzero = deltas[deltas != 0.0]
    if nonzero.size == 0:
        return TestReport(statistic=0.0, p_value=1.0, verdict="equal",
                          extras={"r_plus": 0.0, "r_minus": 0.0, "n": 0})
    if nonzero.size < 5:
        raise ValueError("need at least 5 nonzero differences")
    ranks = midranks(np.abs(nonzero))
    r_plus = float(ranks[nonzero > 0].sum())
    r_minus = float(ranks[nonzero < 0].sum())

    if nonzero.size <= EXACT_SIGNEDRANK_LIMIT:
        p = _exact_signedrank_p(ranks, r_plus)
    else:
        p = _approx_signedrank_p(ranks, r_plus)

    if p >= alpha:
        verdict = "equal"
    else:
        verdict = "better" if r_plus > r_minus else "worse"
    return TestReport(statistic=r_plus, p_value=p, verdict=verdict,
                      extras={"r_plus": r_plus, "r_minus": r_minus, "n": int(nonzero.size)})
