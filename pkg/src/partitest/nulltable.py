"""Monte Carlo null tables, persistence, and the combined-p-value tests.

A null table stores one statistic row per random reassignment of a sample of
fixed size: a label permutation for the K-sample problem, a y-rank
permutation for independence.  Because the statistics are rank-based, a table
depends only on (N, group sizes, family, score) and is reusable across
datasets; p-values are tail fractions with the +1 convention.

The combined tests follow a three-step calibration: per-m p-values for the
observed data against the table, the same per-m p-values for every replicate
against the table itself, and a final p-value of the combined statistic
against the combined null distribution.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from itertools import permutations

import numpy as np

from . import independence as _ind
from . import ksample as _ks
from .core import GroupedSample, RankedSample, ScoreKind, binomial_table
from .ksample import PriorSpec

__all__ = [
    "NullTableMeta",
    "NullTable",
    "TestResult",
    "generate_null_table",
    "save_table",
    "load_table",
    "p_value",
    "combined_statistic",
    "combined_null_distribution",
    "run_test",
    "exact_enumeration_count",
]

EXACT_LIMIT = 10**5
_FORMAT_MAJOR = 1

_KSAMPLE_FAMILIES = ("sum", "max")
_INDEP_FAMILIES = ("adp_sum", "ddp_sum")
_COMBINE_KINDS = ("minp", "fisher", "penalized")


@dataclass(frozen=True)
class NullTableMeta:
    """Identity of a null table; two tables with equal meta hold identical data."""

    problem: str
    family: str
    score: ScoreKind
    n: int
    group_sizes: tuple[int, ...] | None
    m_max: int
    b: int
    seed: int
    exact: bool = False

    def __post_init__(self):
        object.__setattr__(self, "score", ScoreKind.parse(self.score))
        if self.problem == "ksample":
            if self.family not in _KSAMPLE_FAMILIES:
                raise ValueError(f"family {self.family!r} invalid for the K-sample problem")
            if not self.group_sizes or len(self.group_sizes) < 2:
                raise ValueError("K-sample tables need at least two group sizes")
            if any(g < 1 for g in self.group_sizes):
                raise ValueError("every group must be non-empty")
            if sum(self.group_sizes) != self.n:
                raise ValueError("group sizes must sum to N")
            object.__setattr__(self, "group_sizes", tuple(int(g) for g in self.group_sizes))
        elif self.problem == "independence":
            if self.family not in _INDEP_FAMILIES:
                raise ValueError(f"family {self.family!r} invalid for the independence problem")
            if self.group_sizes is not None:
                raise ValueError("independence tables carry no group sizes")
        else:
            raise ValueError(f"unknown problem: {self.problem!r}")
        if not 2 <= self.m_max <= self.n:
            raise ValueError("m_max must lie in 2..N")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def exact_enumeration_count(meta: NullTableMeta) -> int:
    """Number of distinct reassignments for this table's sampling problem."""
    if meta.problem == "ksample":
        count = math.factorial(meta.n)
        for g in meta.group_sizes:
            count //= math.factorial(g)
        return count
    return math.factorial(meta.n)


@dataclass(eq=False)
class NullTable:
    """B null-replicate statistic rows (columns are m = 2..m_max) plus metadata."""

    meta: NullTableMeta
    data: np.ndarray
    _sorted: np.ndarray | None = field(default=None, repr=False)
    _combined: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != self.meta.m_max - 1:
            raise ValueError("data shape must be (B, m_max - 1)")
        if data.shape[0] != self.meta.b:
            raise ValueError("row count must match meta.b")
        data.flags.writeable = False
        self.data = data

    @property
    def b(self) -> int:
        return self.meta.b

    @property
    def ms(self) -> np.ndarray:
        return np.arange(2, self.meta.m_max + 1)

    def sorted_columns(self) -> np.ndarray:
        if self._sorted is None:
            cols = np.sort(self.data, axis=0)
            cols.flags.writeable = False
            self._sorted = cols
        return self._sorted

    def combined_null(self, kind: str, prior: PriorSpec | None = None) -> np.ndarray:
        key = (kind, None if prior is None else prior)
        if key not in self._combined:
            self._combined[key] = combined_null_distribution(self, kind, prior)
        return self._combined[key]


def _base_labels(meta: NullTableMeta) -> np.ndarray:
    return np.repeat(np.arange(1, len(meta.group_sizes) + 1), meta.group_sizes)


def _row_statistics(meta: NullTableMeta, arrangement: np.ndarray) -> np.ndarray:
    """Statistic row for one reassignment; the same path scores observed data."""
    ms = range(2, meta.m_max + 1)
    if meta.problem == "ksample":
        if meta.family == "sum":
            return _ks._sum_values(arrangement, meta.group_sizes, meta.score, meta.m_max)
        return _ks._max_values(arrangement, meta.group_sizes, meta.score, meta.m_max)
    xr = np.arange(1, meta.n + 1)
    if meta.family == "adp_sum":
        return _ind._adp_values_raw(xr, arrangement, meta.n, meta.score, ms)
    return _ind._ddp_values_raw(xr, arrangement, meta.n, meta.score, ms)


def _mc_arrangement(meta: NullTableMeta, index: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((meta.seed, index))))
    if meta.problem == "ksample":
        return rng.permutation(_base_labels(meta))
    return rng.permutation(meta.n) + 1


def _mc_rows(meta: NullTableMeta, start: int, stop: int) -> np.ndarray:
    rows = np.empty((stop - start, meta.m_max - 1))
    for b in range(start, stop):
        rows[b - start] = _row_statistics(meta, _mc_arrangement(meta, b))
    return rows


def _multiset_permutations(base: list[int]):
    """Distinct arrangements of a multiset in lexicographic order."""
    arr = sorted(base)
    n = len(arr)
    while True:
        yield tuple(arr)
        i = n - 2
        while i >= 0 and arr[i] >= arr[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while arr[j] <= arr[i]:
            j -= 1
        arr[i], arr[j] = arr[j], arr[i]
        arr[i + 1 :] = arr[i + 1 :][::-1]


def _exact_rows(meta: NullTableMeta, count: int) -> np.ndarray:
    rows = np.empty((count, meta.m_max - 1))
    if meta.problem == "ksample":
        arrangements = _multiset_permutations(list(_base_labels(meta)))
    else:
        arrangements = permutations(range(1, meta.n + 1))
    for i, arr in enumerate(arrangements):
        rows[i] = _row_statistics(meta, np.asarray(arr, dtype=np.int64))
    return rows


def generate_null_table(meta: NullTableMeta, threads: int = 1) -> NullTable:
    """Build the table: exact enumeration when feasible, Monte Carlo otherwise.

    Replicate b draws its RNG from a splittable hash of (seed, b), and rows
    are assembled in replicate order, so the result is bit-identical for any
    thread count.  Exact mode replaces B with the enumeration count.
    """
    if meta.b < 100:
        raise ValueError("B must be at least 100")
    count = exact_enumeration_count(meta)
    if count <= EXACT_LIMIT:
        data = _exact_rows(meta, count)
        return NullTable(meta=replace(meta, b=count, exact=True), data=data)
    meta = replace(meta, exact=False)
    if threads <= 1:
        return NullTable(meta=meta, data=_mc_rows(meta, 0, meta.b))
    from concurrent.futures import ProcessPoolExecutor

    bounds = np.linspace(0, meta.b, 4 * threads + 1, dtype=int)
    chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_mc_rows, [meta] * len(chunks), *zip(*chunks)))
    return NullTable(meta=meta, data=np.vstack(parts))


# ---------------------------------------------------------------------------
# Persistence (.pnt: text header lines then tab-separated statistic rows)


def save_table(table: NullTable, path: str) -> None:
    """Write atomically; an interrupted write leaves no partial file."""
    meta = table.meta
    groups = ",".join(str(g) for g in meta.group_sizes) if meta.group_sizes else ""
    header = [
        f"#PNT v{_FORMAT_MAJOR}",
        f"#problem={meta.problem}",
        f"#family={meta.family}",
        f"#score={meta.score.value}",
        f"#N={meta.n}",
        f"#groups={groups}",
        f"#m_max={meta.m_max}",
        f"#B={meta.b}",
        f"#seed={meta.seed}",
        f"#exact={1 if meta.exact else 0}",
    ]
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".pnt-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(header))
            fh.write("\n")
            for row in table.data:
                fh.write("\t".join(f"{v:.17g}" for v in row))
                fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_table(path: str) -> NullTable:
    fields: dict[str, str] = {}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        magic = fh.readline().rstrip("\n")
        if not magic.startswith("#PNT v"):
            raise ValueError("not a null-table file")
        try:
            major = int(magic[len("#PNT v") :].split(".")[0])
        except ValueError as exc:
            raise ValueError("malformed version line") from exc
        if major != _FORMAT_MAJOR:
            raise ValueError(f"unsupported format major version {major}")
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                fields[key] = value
            elif line:
                rows.append([float(tok) for tok in line.split("\t")])
    groups = fields.get("groups", "")
    meta = NullTableMeta(
        problem=fields["problem"],
        family=fields["family"],
        score=ScoreKind.parse(fields["score"]),
        n=int(fields["N"]),
        group_sizes=tuple(int(g) for g in groups.split(",")) if groups else None,
        m_max=int(fields["m_max"]),
        b=int(fields["B"]),
        seed=int(fields["seed"]),
        exact=fields.get("exact", "0") == "1",
    )
    return NullTable(meta=meta, data=np.asarray(rows, dtype=float))


# ---------------------------------------------------------------------------
# P-values and combined statistics


def p_value(observed: float, null_column: np.ndarray) -> float:
    """(1 + #{v >= observed}) / (B + 1) against an ascending-sorted column."""
    col = np.asarray(null_column)
    b = col.size
    geq = b - int(np.searchsorted(col, observed, side="left"))
    return (1.0 + geq) / (b + 1.0)


def combined_statistic(per_m_pvalues, kind: str) -> float:
    """Combine per-m p-values: ``minp`` takes the minimum, ``fisher`` -sum(log p)."""
    p = np.asarray(per_m_pvalues, dtype=float)
    if p.size == 0:
        raise ValueError("no p-values to combine")
    if np.any(p <= 0) or np.any(p > 1):
        raise ValueError("p-values must lie in (0, 1]")
    if kind == "minp":
        return float(p.min())
    if kind == "fisher":
        return float(-np.log(p).sum())
    raise ValueError(f"unknown combination kind: {kind!r}")


def _per_m_pvalue_rows(table: NullTable, values: np.ndarray) -> np.ndarray:
    """Per-m p-values of statistic rows against the table's own columns."""
    cols = table.sorted_columns()
    b = table.b
    rows = np.atleast_2d(values)
    out = np.empty_like(rows)
    for j in range(rows.shape[1]):
        geq = b - np.searchsorted(cols[:, j], rows[:, j], side="left")
        out[:, j] = (1.0 + geq) / (b + 1.0)
    return out


def _penalized_rows(values: np.ndarray, meta: NullTableMeta, prior: PriorSpec) -> np.ndarray:
    """Prior-penalized statistic per row, max over m (shared by observed and null)."""
    rows = np.atleast_2d(values)
    ms = np.arange(2, meta.m_max + 1)
    n = meta.n
    binom = binomial_table(n)
    if meta.family == "max":
        if prior.variant == "ds":
            add = -prior.lambda0 * math.log(n) * (ms - 1)
        else:
            add = -np.log(binom.choose(n - 1, ms - 1)) + prior.log_prior_m(ms, n)
        return np.max(rows + add, axis=1)
    if prior.variant == "ds":
        raise ValueError("ds prior applies to max aggregation only")
    if meta.problem == "ksample":
        denom = binom.choose(n - 1, ms - 1)
    elif meta.family == "adp_sum":
        denom = binom.choose(n - 1, ms - 1) ** 2
    else:
        denom = binom.choose(n, ms - 1)
    return np.max(rows / denom + prior.log_prior_m(ms, n), axis=1)


def combined_null_distribution(
    table: NullTable, kind: str, prior: PriorSpec | None = None
) -> np.ndarray:
    """Sorted combined statistic of every replicate, calibrated on the table itself.

    Replicate p-values use the same tail rule as observed data, counted over
    all B rows including the replicate's own, so exact-mode self-tests
    reproduce plain enumeration rank ratios.
    """
    if kind not in _COMBINE_KINDS:
        raise ValueError(f"unknown combination kind: {kind!r}")
    if kind == "penalized":
        if prior is None:
            raise ValueError("penalized combination needs a prior")
        return np.sort(_penalized_rows(table.data, table.meta, prior))
    pv = _per_m_pvalue_rows(table, table.data)
    if kind == "minp":
        combined = pv.min(axis=1)
    else:
        combined = -np.log(pv).sum(axis=1)
    return np.sort(combined)


@dataclass(frozen=True)
class TestResult:
    """Per-m p-values plus the combined statistic and its final p-value."""

    ms: tuple[int, ...]
    per_m_pvalues: np.ndarray
    combined_kind: str
    combined_statistic: float
    final_pvalue: float

    def pvalue(self, m: int) -> float:
        return float(self.per_m_pvalues[m - 2])


def _observed_arrangement(data, meta: NullTableMeta):
    if meta.problem == "ksample":
        if not isinstance(data, GroupedSample):
            raise ValueError("table incompatible: K-sample table needs grouped data")
        if data.n != meta.n or data.group_sizes != meta.group_sizes:
            raise ValueError("table incompatible: sample size or group sizes differ")
        return _row_statistics(meta, data.labels_by_rank)
    if not (isinstance(data, tuple) and len(data) == 2):
        raise ValueError("table incompatible: independence table needs an (x, y) pair")
    x, y = data
    if not isinstance(x, RankedSample) or not isinstance(y, RankedSample):
        raise ValueError("table incompatible: expected ranked samples")
    if x.n != meta.n or y.n != meta.n:
        raise ValueError("table incompatible: sample size differs")
    ms = range(2, meta.m_max + 1)
    if meta.family == "adp_sum":
        return _ind._adp_values_raw(x.ranks, y.ranks, meta.n, meta.score, ms)
    return _ind._ddp_values_raw(x.ranks, y.ranks, meta.n, meta.score, ms)


def run_test(data, table: NullTable, kind: str = "minp", prior: PriorSpec | None = None) -> TestResult:
    """Full combined test of one dataset against a matching null table.

    ``data`` is a :class:`GroupedSample` for K-sample tables or an
    ``(x_ranks, y_ranks)`` pair for independence tables.  The final p-value
    counts null combined values at least as extreme as the observed one:
    small is extreme for ``minp``, large for ``fisher`` and ``penalized``.
    """
    if kind not in _COMBINE_KINDS:
        raise ValueError(f"unknown combination kind: {kind!r}")
    observed = _observed_arrangement(data, table.meta)
    pvec = _per_m_pvalue_rows(table, observed)[0]
    null_combined = table.combined_null(kind, prior)
    b = table.b
    if kind == "penalized":
        stat = float(_penalized_rows(observed, table.meta, prior)[0])
        extreme = b - int(np.searchsorted(null_combined, stat, side="left"))
    else:
        stat = combined_statistic(pvec, kind)
        if kind == "minp":
            extreme = int(np.searchsorted(null_combined, stat, side="right"))
        else:
            extreme = b - int(np.searchsorted(null_combined, stat, side="left"))
    final = (1.0 + extreme) / (b + 1.0)
    return TestResult(
        ms=tuple(int(m) for m in table.ms),
        per_m_pvalues=pvec,
        combined_kind=kind,
        combined_statistic=stat,
        final_pvalue=final,
    )
