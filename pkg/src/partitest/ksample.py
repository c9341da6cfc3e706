"""K-sample statistics over all interval partitions of the ranked line.

For each partition size m the sum statistic aggregates the partition score
over every one of the C(N-1, m-1) interval partitions, and the max statistic
takes the best partition.  Both are computed for every m at once: the sum via
width-bucketed cell totals weighted by closed-form partition counts (O(N^2)
total), the max via dynamic programming over split positions (O(N^3) total).

Prior-penalized single-number statistics over all m are provided on top.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .core import (
    BinomialTable,
    GroupedSample,
    ScoreKind,
    _cell_index_cache,
    _log_table,
    _xlogx_table,
    binomial_table,
)

__all__ = [
    "KSampleStatistics",
    "PriorSpec",
    "ksample_sum_all_m",
    "ksample_max_all_m",
    "penalized_max",
    "penalized_sum",
]


@dataclass(frozen=True)
class KSampleStatistics:
    """Per-m statistic values for one grouped sample.

    ``values[i]`` holds the statistic for partition size m = i + 2.
    """

    kind: str  # "sum" | "max"
    score: ScoreKind
    values: np.ndarray
    n: int
    group_sizes: tuple[int, ...]

    @property
    def m_max(self) -> int:
        return self.values.size + 1

    @property
    def ms(self) -> np.ndarray:
        return np.arange(2, self.m_max + 1)

    def value(self, m: int) -> float:
        if not 2 <= m <= self.m_max:
            raise ValueError(f"m={m} outside 2..{self.m_max}")
        return float(self.values[m - 2])


@dataclass(frozen=True)
class PriorSpec:
    """Prior over partition size used by the penalized statistics.

    Variants: ``poisson-sqrt-n`` (rate sqrt(N)), ``binomial`` (success
    probability ``p``), ``uniform`` over ``k_levels`` sizes, and ``ds`` whose
    additive penalty -lambda0 * log(N) * (m-1) replaces both prior terms.
    """

    variant: str
    p: float | None = None
    k_levels: int | None = None
    lambda0: float | None = None

    def __post_init__(self):
        if self.variant not in ("poisson-sqrt-n", "binomial", "uniform", "ds"):
            raise ValueError(f"unknown prior variant: {self.variant!r}")
        if self.variant == "binomial" and not (self.p is not None and 0.0 < self.p < 1.0):
            raise ValueError("binomial prior needs 0 < p < 1")
        if self.variant == "uniform" and not (self.k_levels is not None and self.k_levels >= 1):
            raise ValueError("uniform prior needs k_levels >= 1")
        if self.variant == "ds" and not (self.lambda0 is not None and self.lambda0 > 0.0):
            raise ValueError("ds prior needs lambda0 > 0")

    @classmethod
    def poisson_sqrt_n(cls) -> "PriorSpec":
        return cls(variant="poisson-sqrt-n")

    @classmethod
    def binomial(cls, p: float) -> "PriorSpec":
        return cls(variant="binomial", p=float(p))

    @classmethod
    def uniform(cls, k_levels: int) -> "PriorSpec":
        return cls(variant="uniform", k_levels=int(k_levels))

    @classmethod
    def ds(cls, lambda0: float) -> "PriorSpec":
        return cls(variant="ds", lambda0=float(lambda0))

    def log_prior_m(self, ms, n: int) -> np.ndarray:
        """log pi(m) for an array of partition sizes (not defined for ``ds``)."""
        ms = np.asarray(ms, dtype=float)
        if self.variant == "poisson-sqrt-n":
            rate = math.sqrt(n)
            return ms * math.log(rate) - rate - gammaln(ms + 1.0)
        if self.variant == "binomial":
            logc = gammaln(n) - gammaln(ms) - gammaln(n - ms + 1.0)
            return logc + ms * math.log(self.p) + (n - ms) * math.log1p(-self.p)
        if self.variant == "uniform":
            return np.full(ms.shape, -math.log(self.k_levels))
        raise ValueError("ds prior has no standalone log pi(m); it is an additive penalty")


def _group_cumcounts(labels_by_rank: np.ndarray, k: int) -> np.ndarray:
    n = labels_by_rank.size
    cum = np.zeros((k, n + 1), dtype=np.int64)
    for g in range(k):
        np.cumsum(labels_by_rank == g + 1, out=cum[g, 1:])
    return cum


def _cell_scores_flat(cum, group_sizes, score, lo, hi):
    """t_C for every interval cell [lo_i, hi_i]; expected masses use w * N_g / N."""
    n = cum.shape[1] - 1
    w = hi - lo + 1
    t = np.zeros(w.shape)
    if score is ScoreKind.PEARSON:
        for g, ng in enumerate(group_sizes):
            o = (cum[g, hi] - cum[g, lo - 1]).astype(float)
            e = w * (ng / n)
            t += (o - e) ** 2 / e
    else:
        xlogx = _xlogx_table(n)
        logw = _log_table(n)
        for g, ng in enumerate(group_sizes):
            o = cum[g, hi] - cum[g, lo - 1]
            t += xlogx[o] - o * (logw[w] + math.log(ng / n))
    return t


@lru_cache(maxsize=64)
def _sum_weight_rows(n: int, m_max: int) -> np.ndarray:
    """Partition-count weights per m, concatenated (internal widths, edge widths).

    Internal cells of width w sit in C(N-2-w, m-3) partitions, edge cells in
    C(N-1-w, m-2); choose() returns zero whenever an argument goes negative,
    which kills internal cells at m = 2 and the full-width cell everywhere.
    """
    binom = binomial_table(n)
    ws = np.arange(n + 1)
    rows = np.empty((m_max - 1, 2 * (n + 1)))
    for m in range(2, m_max + 1):
        rows[m - 2, : n + 1] = binom.choose(n - 2 - ws, m - 3)
        rows[m - 2, n + 1 :] = binom.choose(n - 1 - ws, m - 2)
    rows.flags.writeable = False
    return rows


def _sum_values(labels_by_rank, group_sizes, score, m_max) -> np.ndarray:
    n = labels_by_rank.size
    cum = _group_cumcounts(labels_by_rank, len(group_sizes))
    lo, hi = _cell_index_cache(n)
    t = _cell_scores_flat(cum, group_sizes, score, lo, hi)
    w = hi - lo + 1
    edge = (lo == 1) | (hi == n)
    profile = np.concatenate(
        (
            np.bincount(w[~edge], weights=t[~edge], minlength=n + 1),
            np.bincount(w[edge], weights=t[edge], minlength=n + 1),
        )
    )
    rows = _sum_weight_rows(n, m_max)
    # weights reach C(N-1, m-1) while cell totals stay moderate; fsum keeps the
    # per-m reductions exactly rounded.
    return np.array([math.fsum((rows[j] * profile).tolist()) for j in range(m_max - 1)])


def _max_values(labels_by_rank, group_sizes, score, m_max) -> np.ndarray:
    n = labels_by_rank.size
    cum = _group_cumcounts(labels_by_rank, len(group_sizes))
    lo, hi = _cell_index_cache(n)
    t = _cell_scores_flat(cum, group_sizes, score, lo, hi)
    tmat = np.zeros((n + 1, n + 1))
    tmat[lo, hi] = t
    # shifted[a, i] = t of cell (a+1 .. i); -inf blocks empty cells so the DP
    # only considers splits that leave every cell non-empty.
    cols = np.arange(n + 1)
    shifted = np.full((n + 1, n + 1), -np.inf)
    shifted[:n, :] = np.where(cols[None, :] >= cols[:n, None] + 1, tmat[1:, :], -np.inf)
    best = np.full(n + 1, -np.inf)
    best[1:] = tmat[1, 1:]
    out = np.empty(m_max - 1)
    for j in range(2, m_max + 1):
        best = np.max(best[:, None] + shifted, axis=0)
        out[j - 2] = best[n]
    return out


def _validated(sample: GroupedSample, score, m_max) -> tuple[ScoreKind, int]:
    score = ScoreKind.parse(score)
    n = sample.n
    if m_max is None:
        m_max = max(2, n // 2)
    m_max = int(m_max)
    if not 2 <= m_max <= n:
        raise ValueError(f"m_max must lie in 2..N, got {m_max} for N={n}")
    return score, m_max


def ksample_sum_all_m(sample: GroupedSample, score, m_max: int | None = None) -> KSampleStatistics:
    """Sum-aggregated statistic for every partition size 2..m_max at once.

    Width-bucketed cell totals are computed once in O(N^2); each per-m value
    is then a weighted reduction, so the total cost does not depend on how
    many sizes are requested.  ``m_max`` defaults to N // 2.
    """
    score, m_max = _validated(sample, score, m_max)
    values = _sum_values(sample.labels_by_rank, sample.group_sizes, score, m_max)
    return KSampleStatistics(
        kind="sum", score=score, values=values, n=sample.n, group_sizes=sample.group_sizes
    )


def ksample_max_all_m(sample: GroupedSample, score, m_max: int | None = None) -> KSampleStatistics:
    """Max-aggregated statistic for every partition size 2..m_max at once.

    Dynamic program over prefix lengths: the best score that splits the first
    i ranks into j cells extends by one cell at a time, with expected counts
    always taken from full-sample group proportions.
    """
    score, m_max = _validated(sample, score, m_max)
    values = _max_values(sample.labels_by_rank, sample.group_sizes, score, m_max)
    return KSampleStatistics(
        kind="max", score=score, values=values, n=sample.n, group_sizes=sample.group_sizes
    )


def _require_prior_table(stats: KSampleStatistics, binom: BinomialTable | None) -> BinomialTable:
    if binom is None:
        return binomial_table(stats.n)
    if binom.n < stats.n:
        raise ValueError("binomial table too small for this sample size")
    return binom


def penalized_max(stats: KSampleStatistics, prior: PriorSpec, binom: BinomialTable | None = None) -> float:
    """Best penalized max statistic over m: M_m + log pi(I|m) + log pi(m).

    pi(I|m) is uniform over the C(N-1, m-1) partitions of size m.  With the
    ``ds`` prior the additive term -lambda0 * log(N) * (m-1) replaces both
    prior terms.  Canonical with the likelihood-ratio score; other scores are
    accepted but non-canonical.
    """
    if stats.kind != "max":
        raise ValueError("penalized_max expects max-aggregated statistics")
    binom = _require_prior_table(stats, binom)
    ms = stats.ms
    if prior.variant == "ds":
        pen = -prior.lambda0 * math.log(stats.n) * (ms - 1)
        return float(np.max(stats.values + pen))
    log_pi_im = -np.log(binom.choose(stats.n - 1, ms - 1))
    return float(np.max(stats.values + log_pi_im + prior.log_prior_m(ms, stats.n)))


def penalized_sum(stats: KSampleStatistics, prior: PriorSpec, binom: BinomialTable | None = None) -> float:
    """Best penalized per-partition average over m: S_m / C(N-1, m-1) + log pi(m)."""
    if stats.kind != "sum":
        raise ValueError("penalized_sum expects sum-aggregated statistics")
    if prior.variant == "ds":
        raise ValueError("ds prior applies to max aggregation only")
    binom = _require_prior_table(stats, binom)
    ms = stats.ms
    norm = stats.values / binom.choose(stats.n - 1, ms - 1)
    return float(np.max(norm + prior.log_prior_m(ms, stats.n)))
