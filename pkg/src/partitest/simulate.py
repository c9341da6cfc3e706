"""Scenario generators and power/level studies with reproducible streams.

Datasets are deterministic functions of (scenario seed, replicate index): a
counter-based bit generator feeds a uniform stream, and normal variates come
from the inverse CDF so replicates are stable across platforms and thread
counts.  A power study runs the combined test on R replicate datasets against
one shared null table and reports the rejection fraction with its binomial
standard error, plus per-m rejection rates for plotting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .core import GroupedSample, rank_with_random_ties
from .ksample import PriorSpec
from .nulltable import NullTable, run_test

__all__ = [
    "ScenarioSpec",
    "PowerReport",
    "builtin_scenarios",
    "make_scenario",
    "parse_scenario_file",
    "generate_scenario",
    "power_study",
]


@dataclass(frozen=True)
class ScenarioSpec:
    """A fully parameterized data-generating scenario."""

    name: str
    problem: str  # "ksample" | "independence"
    n: int
    group_sizes: tuple[int, ...] | None
    params: tuple  # sorted (key, value) pairs; values are floats or tuples
    seed: int
    replicates: int
    alpha: float

    def __post_init__(self):
        if self.problem not in ("ksample", "independence"):
            raise ValueError(f"unknown problem: {self.problem!r}")
        if self.problem == "ksample":
            if not self.group_sizes or sum(self.group_sizes) != self.n:
                raise ValueError("group sizes must sum to N")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    def param(self, key: str):
        for k, v in self.params:
            if k == key:
                return v
        raise KeyError(key)


# Two-sample Gaussian setups pin one alternative per name (the N=100
# benchmark parameters) for every N, so power comparisons across sample
# sizes isolate N itself.
_BUILTINS: dict[str, dict] = {
    "gauss-shift": {
        "problem": "ksample",
        "family": "gauss",
        "params": {"mu": (0.0, 0.5), "sigma": (1.0, 1.0)},
    },
    "gauss-scale": {
        "problem": "ksample",
        "family": "gauss",
        "params": {"mu": (0.0, 0.0), "sigma": (1.0, 0.6)},
    },
    "gauss-shift-scale": {
        "problem": "ksample",
        "family": "gauss",
        "params": {"mu": (0.0, 0.36), "sigma": (1.0, 0.7)},
    },
    "null-equal": {
        "problem": "ksample",
        "family": "gauss",
        "params": {"mu": (0.0, 0.0), "sigma": (1.0, 1.0)},
    },
    "null-uniform": {
        "problem": "independence",
        "family": "uniform-independent",
        "params": {},
    },
    # Bivariate two-component Gaussian mixture used for the MI benchmark.
    "gauss-mixture-2d": {
        "problem": "independence",
        "family": "mixture2d",
        "params": {
            "weight1": 0.8,
            "mean1": (0.5, 0.5),
            "cov1": (0.05, 0.025, 0.05),  # (var_x, cov_xy, var_y)
            "mean2": (-0.125, 0.675),
            "cov2": (0.01, 0.0, 0.01),
        },
    },
}

_SHAPES = ("circle", "sine", "line")


def builtin_scenarios() -> tuple[str, ...]:
    return tuple(sorted(_BUILTINS))


def _freeze_params(family: str, params: dict) -> tuple:
    items = [("family", family)]
    for k in sorted(params):
        v = params[k]
        items.append((k, tuple(float(x) for x in v) if isinstance(v, (tuple, list)) else float(v)))
    return tuple(items)


def make_scenario(
    name: str,
    n: int,
    group_sizes: tuple[int, ...] | None = None,
    seed: int = 0,
    replicates: int = 1000,
    alpha: float = 0.05,
) -> ScenarioSpec:
    """Instantiate a built-in scenario for a concrete sample size."""
    if name not in _BUILTINS:
        raise ValueError(
            f"unknown scenario {name!r}; built-ins: {', '.join(builtin_scenarios())}"
        )
    entry = _BUILTINS[name]
    problem = entry["problem"]
    if problem == "ksample":
        if group_sizes is None:
            half = n // 2
            group_sizes = (half, n - half)
        group_sizes = tuple(int(g) for g in group_sizes)
    else:
        group_sizes = None
    return ScenarioSpec(
        name=name,
        problem=problem,
        n=int(n),
        group_sizes=group_sizes,
        params=_freeze_params(entry["family"], entry["params"]),
        seed=int(seed),
        replicates=int(replicates),
        alpha=float(alpha),
    )


def parse_scenario_file(
    path: str, seed: int = 0, replicates: int = 1000, alpha: float = 0.05
) -> ScenarioSpec:
    """Read a key=value scenario description (UTF-8 text, ``#`` comments).

    Required keys: ``name``, ``problem``, ``family``, ``n`` (plus ``groups``
    for two-sample scenarios); family parameters are explicit, nothing is
    guessed.  Families: ``gauss`` (mu1, sigma1, mu2, sigma2), ``mixture2d``
    (weight1, mean1/2, cov1/2 as var_x,cov_xy,var_y), ``shape`` with
    shape in {circle, sine, line} plus ``noise`` (and ``frequency`` for sine).
    """
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()
    try:
        name = raw["name"]
        problem = raw["problem"]
        family = raw["family"]
        n = int(raw["n"])
    except KeyError as exc:
        raise ValueError(f"scenario file missing required key: {exc}") from exc

    def flist(key):
        return tuple(float(tok) for tok in raw[key].split(","))

    if family == "gauss":
        params = {
            "mu": (float(raw["mu1"]), float(raw["mu2"])),
            "sigma": (float(raw["sigma1"]), float(raw["sigma2"])),
        }
    elif family == "mixture2d":
        params = {
            "weight1": float(raw["weight1"]),
            "mean1": flist("mean1"),
            "cov1": flist("cov1"),
            "mean2": flist("mean2"),
            "cov2": flist("cov2"),
        }
    elif family == "shape":
        shape = raw["shape"]
        if shape not in _SHAPES:
            raise ValueError(f"unknown shape {shape!r}; choose from {_SHAPES}")
        params = {"shape_id": float(_SHAPES.index(shape)), "noise": float(raw["noise"])}
        if shape == "sine":
            params["frequency"] = float(raw["frequency"])
    else:
        raise ValueError(f"unknown scenario family: {family!r}")
    group_sizes = None
    if problem == "ksample":
        group_sizes = tuple(int(g) for g in raw["groups"].split(","))
    return ScenarioSpec(
        name=name,
        problem=problem,
        n=n,
        group_sizes=group_sizes,
        params=_freeze_params(family, params),
        seed=int(raw.get("seed", seed)),
        replicates=int(raw.get("replicates", replicates)),
        alpha=float(raw.get("alpha", alpha)),
    )


def _uniform_stream(seed: int, replicate_index: int):
    """Counter-based uniforms in (0, 1), deterministic in (seed, replicate)."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, replicate_index))))

    def draw(count: int) -> np.ndarray:
        return (rng.integers(0, 2**53, size=count) + 0.5) * 2.0**-53

    return draw


def _chol2(cov: tuple[float, float, float]) -> np.ndarray:
    vx, cxy, vy = cov
    mat = np.array([[vx, cxy], [cxy, vy]])
    return np.linalg.cholesky(mat)


def generate_scenario(spec: ScenarioSpec, replicate_index: int):
    """One deterministic dataset: (labels, values) or (x, y) raw value arrays."""
    draw = _uniform_stream(spec.seed, replicate_index)
    family = spec.param("family")
    n = spec.n
    if family == "gauss":
        mu = spec.param("mu")
        sigma = spec.param("sigma")
        labels = np.repeat(np.arange(1, len(spec.group_sizes) + 1), spec.group_sizes)
        z = ndtri(draw(n))
        values = np.empty(n)
        start = 0
        for g, size in enumerate(spec.group_sizes):
            values[start : start + size] = mu[g] + sigma[g] * z[start : start + size]
            start += size
        return labels, values
    if family == "uniform-independent":
        u = draw(2 * n)
        return u[:n], u[n:]
    if family == "mixture2d":
        pick = draw(n) < spec.param("weight1")
        z = ndtri(draw(2 * n)).reshape(n, 2)
        l1 = _chol2(spec.param("cov1"))
        l2 = _chol2(spec.param("cov2"))
        m1 = np.asarray(spec.param("mean1"))
        m2 = np.asarray(spec.param("mean2"))
        pts = np.where(pick[:, None], m1 + z @ l1.T, m2 + z @ l2.T)
        return pts[:, 0], pts[:, 1]
    if family == "shape":
        shape = _SHAPES[int(spec.param("shape_id"))]
        noise = spec.param("noise")
        eps = noise * ndtri(draw(n))
        if shape == "circle":
            theta = 2.0 * math.pi * draw(n)
            return np.cos(theta) + noise * ndtri(draw(n)), np.sin(theta) + eps
        x = draw(n)
        if shape == "sine":
            return x, np.sin(2.0 * math.pi * spec.param("frequency") * x) + eps
        return x, x + eps
    raise ValueError(f"unknown scenario family: {family!r}")


@dataclass(frozen=True)
class PowerReport:
    """Rejection fraction at level alpha, with per-m single-size rates."""

    scenario: str
    replicates: int
    alpha: float
    rejections: int
    rejection_rate: float
    standard_error: float
    ms: tuple[int, ...]
    per_m_rates: np.ndarray = field(repr=False)


def _tie_seed_for(spec: ScenarioSpec, replicate_index: int, axis: int) -> int:
    ss = np.random.SeedSequence((spec.seed, replicate_index, 0x7155 + axis))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def dataset_for_test(spec: ScenarioSpec, replicate_index: int):
    """Rank-level test input for one replicate of the scenario."""
    data = generate_scenario(spec, replicate_index)
    if spec.problem == "ksample":
        labels, values = data
        return GroupedSample.from_values(labels, values, _tie_seed_for(spec, replicate_index, 0))
    xv, yv = data
    return (
        rank_with_random_ties(xv, _tie_seed_for(spec, replicate_index, 0)),
        rank_with_random_ties(yv, _tie_seed_for(spec, replicate_index, 1)),
    )


def _power_chunk(spec, table, combined_kind, prior, start, stop):
    per_m = np.zeros(table.meta.m_max - 1, dtype=np.int64)
    rejections = 0
    for rep in range(start, stop):
        result = run_test(dataset_for_test(spec, rep), table, combined_kind, prior)
        rejections += int(result.final_pvalue <= spec.alpha)
        per_m += result.per_m_pvalues <= spec.alpha
    return rejections, per_m


def power_study(
    spec: ScenarioSpec,
    table: NullTable,
    combined_kind: str = "minp",
    prior: PriorSpec | None = None,
    threads: int = 1,
) -> PowerReport:
    """Fraction of replicates whose final p-value is at or below alpha.

    Per-m rates count replicates with p_m <= alpha for each fixed size.
    Replicates are data-parallel over ``threads``; the reduction is an
    ordered integer sum of indicator bits, so the report is identical for
    any thread count.
    """
    meta = table.meta
    if meta.problem != spec.problem or meta.n != spec.n:
        raise ValueError("table incompatible: scenario and table disagree")
    if spec.problem == "ksample" and meta.group_sizes != spec.group_sizes:
        raise ValueError("table incompatible: group sizes differ")
    ms = tuple(int(m) for m in table.ms)
    if threads <= 1 or spec.replicates < 2 * threads:
        rejections, per_m = _power_chunk(spec, table, combined_kind, prior, 0, spec.replicates)
    else:
        from concurrent.futures import ProcessPoolExecutor

        table.combined_null(combined_kind, prior)  # build once, ship to workers
        bounds = np.linspace(0, spec.replicates, 4 * threads + 1, dtype=int)
        chunks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(
                    _power_chunk,
                    [spec] * len(chunks),
                    [table] * len(chunks),
                    [combined_kind] * len(chunks),
                    [prior] * len(chunks),
                    *zip(*chunks),
                )
            )
        rejections = sum(r for r, _ in parts)
        per_m = np.sum([p for _, p in parts], axis=0)
    rate = rejections / spec.replicates
    se = math.sqrt(rate * (1.0 - rate) / spec.replicates)
    return PowerReport(
        scenario=spec.name,
        replicates=spec.replicates,
        alpha=spec.alpha,
        rejections=rejections,
        rejection_rate=rate,
        standard_error=se,
        ms=ms,
        per_m_rates=per_m / spec.replicates,
    )
