"""Independence statistics over exhaustive partitions of the rank plane.

Two partition families are supported.  Grid partitions place m-1 cut lines
per axis anywhere between consecutive ranks, giving C(N-1, m-1)^2 partitions
of size m x m.  Point-anchored partitions are induced by subsets of m-1
sample points whose coordinates become the cut lines, giving C(N, m-1)
partitions whose cells count only the points strictly inside.

Sum aggregation is computed for every m at once by sweeping cells instead of
partitions: each cell's score is weighted by the number of partitions that
contain it, which is a closed-form function of the cell's geometry.  Max
aggregation enumerates partitions directly and is only polynomial for small m.

The pairwise-classification statistic (every ordered pair of points induces a
2x2 table over the remaining N-2 points) is provided with an O(N^2) algorithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, islice

import numpy as np

from .core import (
    BinomialTable,
    CumulativeCountGrid,
    RankedSample,
    ScoreKind,
    _log_table,
    _pair_index_cache,
    _xlogx_table,
    binomial_table,
    cumulative_count_grid,
)
from .ksample import PriorSpec

__all__ = [
    "IndependenceStatistics",
    "adp_sum_all_m",
    "ddp_sum_all_m",
    "ddp_max",
    "adp_max_2x2",
    "penalized_adp_sum",
    "hhg_univariate",
]

ADP_SUM = "adp_sum"
DDP_SUM = "ddp_sum"


@dataclass(frozen=True)
class IndependenceStatistics:
    """Per-m statistic values for one paired sample (index i -> m = i + 2)."""

    family: str
    score: ScoreKind
    values: np.ndarray
    n: int

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


def _as_pair(x, y) -> tuple[np.ndarray, np.ndarray, int]:
    xr = x.ranks if isinstance(x, RankedSample) else np.ascontiguousarray(x, dtype=np.int64)
    yr = y.ranks if isinstance(y, RankedSample) else np.ascontiguousarray(y, dtype=np.int64)
    if xr.size != yr.size:
        raise ValueError("x and y must have equal length")
    return xr, yr, xr.size


def _default_m_max(n: int) -> int:
    return max(2, math.isqrt(n))


def _check_m_max(m_max, n: int) -> int:
    if m_max is None:
        m_max = _default_m_max(n)
    m_max = int(m_max)
    if not 2 <= m_max <= n:
        raise ValueError(f"m_max must lie in 2..N, got {m_max} for N={n}")
    return m_max


# ---------------------------------------------------------------------------
# Grid partitions, sum aggregation


def _grid_cell_tables(grid: CumulativeCountGrid, score: ScoreKind, with_nonempty: bool = False):
    """Cell-score totals bucketed by (x-span class, y-span class, width, length).

    Class 0 spans are internal (touch neither end of the axis), class 1 spans
    touch an end.  Returns (P, Q, Z): P sums the score kernel (o*log(o) for
    the likelihood ratio, o^2 for Pearson), Q sums o, Z counts non-empty
    cells (only when requested).  The full-width x-span is skipped: it sits
    in no partition with at least one x cut.
    """
    a = grid.a
    n = grid.n
    if score is ScoreKind.LIKELIHOOD_RATIO:
        lut = _xlogx_table(n)
    else:
        lut = np.square(np.arange(n + 1, dtype=float))
    cc, dd = _pair_index_cache(n + 1)
    ll = dd - cc
    edge_sel = np.flatnonzero((cc == 0) | (dd == n))
    int_sel = np.flatnonzero((cc != 0) & (dd != n))
    sels = (int_sel, edge_sel)
    lls = (ll[int_sel], ll[edge_sel])
    ccs = (cc[int_sel], cc[edge_sel])
    dds = (dd[int_sel], dd[edge_sel])
    p = np.zeros((2, 2, n + 1, n + 1))
    q = np.zeros((2, 2, n + 1, n + 1))
    z = np.zeros((2, 2, n + 1, n + 1)) if with_nonempty else None
    for lo in range(n):
        row_lo = a[lo]
        for hi in range(lo + 1, n + 1):
            if lo == 0 and hi == n:
                continue
            w = hi - lo
            xc = 0 if (lo >= 1 and hi <= n - 1) else 1
            diff = a[hi] - row_lo
            for yc in (0, 1):
                o = diff[dds[yc]] - diff[ccs[yc]]
                lw = lls[yc]
                p[xc, yc, w] += np.bincount(lw, weights=lut[o], minlength=n + 1)
                q[xc, yc, w] += np.bincount(lw, weights=o, minlength=n + 1)
                if with_nonempty:
                    z[xc, yc, w] += np.bincount(lw, weights=(o > 0).astype(float), minlength=n + 1)
    return p, q, z


def _grid_span_counts(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Number of internal / edge spans per width actually visited by the sweep."""
    ws = np.arange(n + 1)
    internal = np.maximum(n - 1 - ws, 0)
    internal[0] = 0
    edge = np.where((ws >= 1) & (ws <= n - 1), 2, 0)
    return internal, edge


def _grid_totals_per_size(p, q, n: int, score: ScoreKind):
    """Per-(width, length) cell-score totals T[xc][yc] from the accumulators."""
    if score is ScoreKind.LIKELIHOOD_RATIO:
        lg = _log_table(n)
        adj = lg[:, None] + lg[None, :] - math.log(n)
        return [[p[xc, yc] - q[xc, yc] * adj for yc in (0, 1)] for xc in (0, 1)]
    ws = np.arange(n + 1, dtype=float)
    wl = np.outer(ws, ws)
    safe = np.maximum(wl, 1.0)
    ni, ne = _grid_span_counts(n)
    counts = (ni.astype(float), ne.astype(float))
    out = []
    for xc in (0, 1):
        row = []
        for yc in (0, 1):
            cnt = np.outer(counts[xc], counts[yc])
            row.append(np.where(wl > 0, n * p[xc, yc] / safe - 2.0 * q[xc, yc] + cnt * wl / n, 0.0))
        out.append(row)
    return out


def _grid_weight_vectors(n: int, m: int, binom: BinomialTable) -> tuple[np.ndarray, np.ndarray]:
    ws = np.arange(n + 1)
    internal = binom.choose(n - 2 - ws, m - 3)
    edge = binom.choose(n - 1 - ws, m - 2)
    return internal, edge


def _grid_contract(tables, n: int, ms, binom: BinomialTable) -> np.ndarray:
    out = np.empty(len(ms))
    for idx, m in enumerate(ms):
        fi, fe = _grid_weight_vectors(n, m, binom)
        fx = (fi, fe)
        out[idx] = math.fsum(
            float(fx[xc] @ tables[xc][yc] @ fx[yc]) for xc in (0, 1) for yc in (0, 1)
        )
    return out


def _adp_values_raw(xr, yr, n: int, score: ScoreKind, ms) -> np.ndarray:
    grid = cumulative_count_grid(xr, yr)
    p, q, _ = _grid_cell_tables(grid, score)
    tables = _grid_totals_per_size(p, q, n, score)
    return _grid_contract(tables, n, list(ms), binomial_table(n))


def adp_sum_all_m(x, y, score, m_max: int | None = None) -> IndependenceStatistics:
    """Sum-aggregated grid-partition statistic for every m in 2..m_max.

    One O(N^4) sweep accumulates per-size cell totals; every per-m value is
    then an O(N^2) weighted contraction, with expected counts width*length/N.
    ``m_max`` defaults to floor(sqrt(N)).
    """
    score = ScoreKind.parse(score)
    xr, yr, n = _as_pair(x, y)
    m_max = _check_m_max(m_max, n)
    values = _adp_values_raw(xr, yr, n, score, range(2, m_max + 1))
    return IndependenceStatistics(family=ADP_SUM, score=score, values=values, n=n)


# ---------------------------------------------------------------------------
# Point-anchored partitions, sum aggregation


def _point_cell_tables(grid: CumulativeCountGrid, xr, yr, score: ScoreKind, with_nonempty: bool = False):
    """Valid point-anchored cells bucketed by (defining points k, outer count).

    A candidate cell [rl, rh] x [sl, sh] (0 and N+1 stand for the axis
    boundaries) is a cell of some partition iff each boundary cut passes
    through a sample point whose other coordinate falls outside the open cell
    extent; k is the number of distinct such points (coincidences are corner
    points) and the cell then belongs to C(out, m-1-k) partitions of size m,
    where out counts the sample points strictly inside the four outer corner
    quadrants.  Cells with empty interior contribute nothing and are skipped.

    Returns flat (5*(N+1),) buckets: for the likelihood ratio U sums
    o*log(o) - o*log(inner_area) and V sums o; for Pearson U sums
    o^2/inner_area, V sums o and W sums inner_area.  Z counts non-empty cells.
    """
    a = grid.a
    n = grid.n
    lr = score is ScoreKind.LIKELIHOOD_RATIO
    lut = _xlogx_table(n)
    loglen = _log_table(n)
    y_of_x = np.zeros(n + 1, dtype=np.int64)
    x_of_y = np.zeros(n + 1, dtype=np.int64)
    y_of_x[xr] = yr
    x_of_y[yr] = xr
    xs_by_y = x_of_y[1:]
    nbuck = 5 * (n + 1)
    u_acc = np.zeros(nbuck)
    v_acc = np.zeros(nbuck)
    w_acc = np.zeros(nbuck) if not lr else None
    z_acc = np.zeros(nbuck) if with_nonempty else None
    a_last = a[n]
    zeros_row = np.zeros(n + 1, dtype=np.int64)
    for rl in range(0, n):
        row_rl = a[rl]
        row_rlm1 = a[rl - 1] if rl >= 1 else zeros_row
        u_cut = y_of_x[rl] if rl >= 1 else 0
        for rh in range(rl + 2, n + 2):
            width = rh - rl - 1
            v_cut = y_of_x[rh] if rh <= n else 0
            ok = ~((xs_by_y > rl) & (xs_by_y < rh))
            vs = np.flatnonzero(ok) + 1
            nv = vs.size
            svals = np.empty(nv + 2, dtype=np.int64)
            svals[0] = 0
            svals[1 : nv + 1] = vs
            svals[nv + 1] = n + 1
            ii, jj = _pair_index_cache(nv + 2)
            sl = svals[ii]
            sh = svals[jj]
            keep = (sh - sl) >= 2
            if u_cut:
                iu = int(np.searchsorted(svals, u_cut))
                keep &= ~((ii < iu) & (jj > iu))
            if v_cut:
                iv = int(np.searchsorted(svals, v_cut))
                keep &= ~((ii < iv) & (jj > iv))
            sl = sl[keep]
            sh = sh[keep]
            ii_k = ii[keep]
            jj_k = jj[keep]
            diff = a[rh - 1] - row_rl
            o = diff[sh - 1] - diff[sl]
            outside = row_rlm1 + a_last - a[min(rh, n)]
            out_tot = int(outside[n])
            pad_lo = np.concatenate(([0], outside))
            pad_hi = np.concatenate((outside, [out_tot]))
            out_cnt = pad_lo[sl] + (out_tot - pad_hi[sh])
            k = (1 if rl >= 1 else 0) + (1 if rh <= n else 0) + (ii_k >= 1) + (jj_k <= nv)
            if u_cut:
                k = k - (sl == u_cut) - (sh == u_cut)
            if v_cut:
                k = k - (sl == v_cut) - (sh == v_cut)
            length = sh - sl - 1
            buck = k * (n + 1) + out_cnt
            if lr:
                val = lut[o] - o * (loglen[width] + loglen[length])
                u_acc += np.bincount(buck, weights=val, minlength=nbuck)
                v_acc += np.bincount(buck, weights=o, minlength=nbuck)
            else:
                area = (width * length).astype(float)
                u_acc += np.bincount(buck, weights=o * o / area, minlength=nbuck)
                v_acc += np.bincount(buck, weights=o, minlength=nbuck)
                w_acc += np.bincount(buck, weights=area, minlength=nbuck)
            if with_nonempty:
                z_acc += np.bincount(buck, weights=(o > 0).astype(float), minlength=nbuck)
    return u_acc, v_acc, w_acc, z_acc


def _point_bucket_weights(n: int, m: int, binom: BinomialTable) -> np.ndarray:
    """C(out, m-1-k) over the flat (k, out) buckets."""
    outs = np.arange(n + 1)
    rows = [np.zeros(n + 1)]
    for k in range(1, 5):
        rows.append(binom.choose(outs, m - 1 - k))
    return np.concatenate(rows)


def _point_values(tabs, n: int, score: ScoreKind, ms, binom: BinomialTable) -> np.ndarray:
    u_acc, v_acc, w_acc, _ = tabs
    out = np.empty(len(ms))
    for idx, m in enumerate(ms):
        weights = _point_bucket_weights(n, m, binom)
        div = n - m + 1
        if score is ScoreKind.LIKELIHOOD_RATIO:
            # o*log(o/e) with e = area/div splits into the bucketed numerator
            # plus o*log(div), so the m-dependence is a single scalar.
            out[idx] = float(weights @ u_acc) + math.log(div) * float(weights @ v_acc)
        else:
            out[idx] = (
                div * float(weights @ u_acc)
                - 2.0 * float(weights @ v_acc)
                + float(weights @ w_acc) / div
            )
    return out


def _ddp_values_raw(xr, yr, n: int, score: ScoreKind, ms) -> np.ndarray:
    grid = cumulative_count_grid(xr, yr)
    tabs = _point_cell_tables(grid, xr, yr, score)
    return _point_values(tabs, n, score, list(ms), binomial_table(n))


def ddp_sum_all_m(x, y, score, m_max: int | None = None) -> IndependenceStatistics:
    """Sum-aggregated point-anchored statistic for every m in 2..m_max.

    Cells are classified once by defining-point count and outer-quadrant
    occupancy (O(N^4) sweep); the expected count divisor N - m + 1 enters
    only per m.  ``m_max`` defaults to floor(sqrt(N)).
    """
    score = ScoreKind.parse(score)
    xr, yr, n = _as_pair(x, y)
    m_max = _check_m_max(m_max, n)
    values = _ddp_values_raw(xr, yr, n, score, range(2, m_max + 1))
    return IndependenceStatistics(family=DDP_SUM, score=score, values=values, n=n)


# ---------------------------------------------------------------------------
# Max aggregation (small m only)


def _partition_scores_from_cuts(grid: CumulativeCountGrid, xcuts, ycuts, score: ScoreKind, m: int):
    """Partition scores T^I for a batch of point-anchored cut sets.

    ``xcuts``/``ycuts`` are (B, m-1) arrays of sorted cut ranks; counts are
    taken strictly inside cells and expected counts divide by N - m + 1.
    """
    a = grid.a
    n = grid.n
    b = xcuts.shape[0]
    div = n - m + 1
    lut = _xlogx_table(n)
    xb = np.empty((b, m + 1), dtype=np.int64)
    yb = np.empty((b, m + 1), dtype=np.int64)
    xb[:, 0] = 0
    yb[:, 0] = 0
    xb[:, 1:m] = xcuts
    yb[:, 1:m] = ycuts
    xb[:, m] = n + 1
    yb[:, m] = n + 1
    total = np.zeros(b)
    logdiv = math.log(div)
    for i in range(m):
        rl = xb[:, i]
        rh = xb[:, i + 1]
        width = rh - rl - 1
        for j in range(m):
            sl = yb[:, j]
            sh = yb[:, j + 1]
            area = width * (sh - sl - 1)
            o = a[rh - 1, sh - 1] - a[rl, sh - 1] - a[rh - 1, sl] + a[rl, sl]
            if score is ScoreKind.LIKELIHOOD_RATIO:
                term = np.where(
                    area > 0,
                    lut[o] - o * (np.log(np.maximum(area, 1)) - logdiv),
                    0.0,
                )
            else:
                e = np.where(area > 0, area / div, 1.0)
                term = np.where(area > 0, (o - e) ** 2 / e, 0.0)
            total += term
    return total


def ddp_max(x, y, score, m: int) -> float:
    """Max-aggregated point-anchored statistic; only m in {2, 3, 4} is tractable."""
    score = ScoreKind.parse(score)
    xr, yr, n = _as_pair(x, y)
    if m not in (2, 3, 4):
        raise ValueError("exponential regime: max aggregation supports m in {2, 3, 4}")
    if n < m:
        raise ValueError("need at least m observations")
    grid = cumulative_count_grid(xr, yr)
    best = -math.inf
    if m == 2:
        scores = _partition_scores_from_cuts(grid, xr[:, None], yr[:, None], score, m)
        return float(scores.max())
    chunk = 200_000
    combos = combinations(range(n), m - 1)
    while True:
        block_rows = list(islice(combos, chunk))
        if not block_rows:
            break
        block = np.asarray(block_rows, dtype=np.int64)
        xcuts = np.sort(xr[block], axis=1)
        ycuts = np.sort(yr[block], axis=1)
        scores = _partition_scores_from_cuts(grid, xcuts, ycuts, score, m)
        best = max(best, float(scores.max()))
    return best


def _grid_m2_partition_scores(grid: CumulativeCountGrid, score: ScoreKind) -> np.ndarray:
    """T^I for every 2x2 grid partition, indexed by cut position pair."""
    a = grid.a
    n = grid.n
    lut = _xlogx_table(n)
    wi = np.arange(1, n, dtype=float)
    n11 = a[1:n, 1:n].astype(float)
    rmarg = a[1:n, n].astype(float)[:, None]
    cmarg = a[n, 1:n].astype(float)[None, :]
    counts = (n11, rmarg - n11, cmarg - n11, n - rmarg - cmarg + n11)
    ex = (
        np.outer(wi, wi) / n,
        np.outer(wi, n - wi) / n,
        np.outer(n - wi, wi) / n,
        np.outer(n - wi, n - wi) / n,
    )
    total = np.zeros((n - 1, n - 1))
    for o, e in zip(counts, ex):
        if score is ScoreKind.PEARSON:
            total += (o - e) ** 2 / e
        else:
            total += lut[o.astype(np.int64)] - o * np.log(e)
    return total


def adp_max_2x2(x, y, score) -> float:
    """Max-aggregated grid statistic for m = 2 over all (N-1)^2 partitions."""
    score = ScoreKind.parse(score)
    xr, yr, n = _as_pair(x, y)
    if n < 2:
        raise ValueError("need at least two observations")
    grid = cumulative_count_grid(xr, yr)
    return float(_grid_m2_partition_scores(grid, score).max())


def penalized_adp_sum(
    stats: IndependenceStatistics, prior: PriorSpec, binom: BinomialTable | None = None
) -> float:
    """Best penalized per-partition average: S_m / C(N-1, m-1)^2 + log pi(m)."""
    if stats.family != ADP_SUM:
        raise ValueError("penalized_adp_sum expects grid-partition sum statistics")
    if prior.variant == "ds":
        raise ValueError("ds prior applies to max aggregation only")
    if binom is None:
        binom = binomial_table(stats.n)
    ms = stats.ms
    npart = binom.choose(stats.n - 1, ms - 1) ** 2
    return float(np.max(stats.values / npart + prior.log_prior_m(ms, stats.n)))


def normalized_sum_per_m(stats: IndependenceStatistics, binom: BinomialTable | None = None) -> np.ndarray:
    """S_m divided by its family's partition count, per m (used for penalization)."""
    if binom is None:
        binom = binomial_table(stats.n)
    ms = stats.ms
    if stats.family == ADP_SUM:
        return stats.values / binom.choose(stats.n - 1, ms - 1) ** 2
    if stats.family == DDP_SUM:
        return stats.values / binom.choose(stats.n, ms - 1)
    raise ValueError("normalization defined for sum families only")


# ---------------------------------------------------------------------------
# Pairwise-classification statistic


def _axis_windows(uvals: np.ndarray, p: int):
    """Inclusive unique-index window of the open ball around value p, per target q.

    For each target value index q, the window holds every unique value whose
    distance to uvals[p] is strictly below |uvals[q] - uvals[p]|.  Distances
    are compared as computed floats, never recombined, so ties in distance
    behave exactly as in the naive definition.
    """
    nu = uvals.size
    vi = uvals[p]
    lo = np.empty(nu, dtype=np.int64)
    hi = np.empty(nu, dtype=np.int64)
    lo[p] = 0
    hi[p] = -1
    left = p
    for q in range(p + 1, nu):
        d = uvals[q] - vi
        while left > 0 and (vi - uvals[left - 1]) < d:
            left -= 1
        lo[q] = left
        hi[q] = q - 1
    right = p
    for q in range(p - 1, -1, -1):
        d = vi - uvals[q]
        while right < nu - 1 and (uvals[right + 1] - vi) < d:
            right += 1
        lo[q] = q + 1
        hi[q] = right
    return lo, hi


def hhg_univariate(x, y) -> float:
    """Pairwise-classification statistic on raw values (or ranks), in O(N^2).

    For every ordered pair (i, j) the remaining points are classified by
    whether their axis distances to point i are strictly below the distances
    from j to i; the Pearson statistic of the resulting 2x2 table is summed
    over all pairs.  Passing :class:`RankedSample` inputs gives the
    distribution-free variant; both share this implementation.
    """
    xv = x.ranks.astype(float) if isinstance(x, RankedSample) else np.asarray(x, dtype=float)
    yv = y.ranks.astype(float) if isinstance(y, RankedSample) else np.asarray(y, dtype=float)
    if xv.size != yv.size:
        raise ValueError("x and y must have equal length")
    n = xv.size
    if n < 3:
        raise ValueError("need at least three observations")
    ux, px = np.unique(xv, return_inverse=True)
    uy, py = np.unique(yv, return_inverse=True)
    ccx = np.zeros(ux.size + 1, dtype=np.int64)
    ccx[1:] = np.cumsum(np.bincount(px, minlength=ux.size))
    ccy = np.zeros(uy.size + 1, dtype=np.int64)
    ccy[1:] = np.cumsum(np.bincount(py, minlength=uy.size))
    a = np.zeros((ux.size + 1, uy.size + 1), dtype=np.int64)
    np.add.at(a, (px + 1, py + 1), 1)
    np.cumsum(a, axis=0, out=a)
    np.cumsum(a, axis=1, out=a)
    nn = float(n - 2)
    total = 0.0
    for i in range(n):
        lox_u, hix_u = _axis_windows(ux, int(px[i]))
        loy_u, hiy_u = _axis_windows(uy, int(py[i]))
        lx = lox_u[px]
        hx = hix_u[px]
        ly = loy_u[py]
        hy = hiy_u[py]
        valid = (hx >= lx) & (hy >= ly)
        cx = np.where(hx >= lx, ccx[hx + 1] - ccx[lx] - 1, 0).astype(float)
        cy = np.where(hy >= ly, ccy[hy + 1] - ccy[ly] - 1, 0).astype(float)
        o11 = a[hx + 1, hy + 1] - a[lx, hy + 1] - a[hx + 1, ly] + a[lx, ly]
        o11 = np.where(valid, o11 - 1, 0).astype(float)
        b = cx - o11
        c = cy - o11
        d = nn - cx - cy + o11
        den = cx * (nn - cx) * cy * (nn - cy)
        num = (o11 * d - b * c) ** 2
        terms = np.where(den > 0, nn * num / np.maximum(den, 1.0), 0.0)
        total += float(np.sum(terms))
    return total
