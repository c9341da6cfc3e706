"""Acceptance suite: every criterion at its stated tolerance, one line each.

Run with ``pytest -v tests/test_acceptance.py``; each test prints a
``[acceptance N] PASS/FAIL`` line (visible with ``-rA`` or on failure).
The two shared 10^4-replicate null tables come from session fixtures.
"""

import time

import numpy as np
import pytest

from partitest import (
    GroupedSample,
    NullTableMeta,
    RankedSample,
    adp_max_2x2,
    adp_sum_all_m,
    combined_null_distribution,
    ddp_max,
    ddp_sum_all_m,
    generate_null_table,
    hhg_univariate,
    ksample_cell_score,
    ksample_max_all_m,
    ksample_sum_all_m,
    make_scenario,
    mi_adp,
    mi_ddp,
    mi_histogram,
    power_study,
    run_test,
    save_table,
)
from partitest.oracle import oracle_adp, oracle_ddp, oracle_hhg, oracle_ksample
from partitest.simulate import dataset_for_test

from helpers import random_grouped_labels, random_rank_pair


def report(criterion: int, passed: bool, detail: str) -> None:
    print(f"[acceptance {criterion}] {'PASS' if passed else 'FAIL'}: {detail}")
    assert passed, f"criterion {criterion}: {detail}"


def rel_close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def test_criterion_1_ksample_oracle_equivalence():
    rng = np.random.default_rng(101)
    start = time.time()
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(4, 13))
        k = int(rng.integers(2, 4))
        gs = GroupedSample.from_values(
            random_grouped_labels(rng, n, k), rng.normal(size=n), tie_seed=1
        )
        for score in ("pearson", "lr"):
            fast_sum = ksample_sum_all_m(gs, score, m_max=n)
            fast_max = ksample_max_all_m(gs, score, m_max=n)
            for m in range(2, n + 1):
                s_ref, m_ref = oracle_ksample(gs, score, m)
                for got, ref in ((fast_sum.value(m), s_ref), (fast_max.value(m), m_ref)):
                    err = abs(got - ref) / max(1.0, abs(ref))
                    worst = max(worst, err)
                    assert err <= 1e-10, (n, k, score, m, got, ref)
    elapsed = time.time() - start
    report(
        1,
        worst <= 1e-10 and elapsed < 60.0,
        f"500 instances, worst relative error {worst:.2e}, {elapsed:.1f}s (< 60s)",
    )


def test_criterion_2_independence_oracle_equivalence():
    rng = np.random.default_rng(202)
    start = time.time()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(4, 9))
        xr, yr = random_rank_pair(rng, n)
        x = RankedSample(xr, n, 0)
        y = RankedSample(yr, n, 0)
        m_top = min(5, n)
        for score in ("pearson", "lr"):
            adp = adp_sum_all_m(x, y, score, m_max=m_top)
            ddp = ddp_sum_all_m(x, y, score, m_max=m_top)
            for m in range(2, m_top + 1):
                s_adp, m_adp = oracle_adp(x, y, score, m)
                s_ddp, m_ddp = oracle_ddp(x, y, score, m)
                checks = [(adp.value(m), s_adp), (ddp.value(m), s_ddp)]
                if m <= 4:
                    checks.append((ddp_max(x, y, score, m), m_ddp))
                if m == 2:
                    checks.append((adp_max_2x2(x, y, score), m_adp))
                for got, ref in checks:
                    err = abs(got - ref) / max(1.0, abs(ref))
                    worst = max(worst, err)
                    assert err <= 1e-10, (n, score, m, got, ref)
    elapsed = time.time() - start
    report(
        2,
        worst <= 1e-10 and elapsed < 120.0,
        f"200 instances, worst relative error {worst:.2e}, {elapsed:.1f}s (< 120s)",
    )


def test_criterion_3_hhg_fast_path():
    rng = np.random.default_rng(303)
    start = time.time()
    worst = 0.0
    for trial in range(50):
        n = int(rng.integers(3, 51))
        if trial % 2:
            xv = rng.integers(0, max(2, n // 4), size=n).astype(float)
            yv = rng.integers(0, max(2, n // 4), size=n).astype(float)
        else:
            xv = rng.normal(size=n)
            yv = rng.normal(size=n)
        fast = hhg_univariate(xv, yv)
        ref = oracle_hhg(xv, yv)
        err = abs(fast - ref) / max(1.0, abs(ref))
        worst = max(worst, err)
        assert err <= 1e-9, (n, trial, fast, ref)
    elapsed = time.time() - start
    report(
        3,
        worst <= 1e-9 and elapsed < 60.0,
        f"50 datasets (ties included), worst relative error {worst:.2e}, {elapsed:.1f}s (< 60s)",
    )


def test_criterion_4_level_control(table_two_sample_100):
    start = time.time()
    spec = make_scenario(
        "null-equal", n=100, group_sizes=(50, 50), seed=404, replicates=2000, alpha=0.05
    )
    rep = power_study(spec, table_two_sample_100, "minp")
    elapsed = time.time() - start
    ok = 0.037 <= rep.rejection_rate <= 0.065 and elapsed < 900.0
    report(
        4,
        ok,
        f"null rejection rate {rep.rejection_rate:.4f} in [0.037, 0.065], "
        f"R=2000, B=10^4, {elapsed:.0f}s (< 900s)",
    )


def test_criterion_5_two_sample_power(table_two_sample_100):
    start = time.time()
    results = {}
    for name, target in (("gauss-shift", 0.58), ("gauss-scale", 0.59)):
        spec = make_scenario(
            name, n=100, group_sizes=(50, 50), seed=505, replicates=1000, alpha=0.05
        )
        rate = power_study(spec, table_two_sample_100, "minp").rejection_rate
        results[name] = (rate, target)
    elapsed = time.time() - start
    ok = all(abs(rate - target) <= 0.06 for rate, target in results.values())
    detail = ", ".join(
        f"{name} {rate:.3f} (target {target} +/- 0.06)" for name, (rate, target) in results.items()
    )
    report(5, ok and elapsed < 1200.0, f"{detail}, {elapsed:.0f}s (< 1200s)")


def test_criterion_6_mi_benchmark():
    start = time.time()
    spec = make_scenario("gauss-mixture-2d", n=300, seed=606, replicates=10)
    sums = {"adp": [], "ddp": [], "hist": []}
    for rep in range(10):
        x, y = dataset_for_test(spec, rep)
        sums["adp"].append(mi_adp(x, y, 15, miller_madow=True).value)
        sums["ddp"].append(mi_ddp(x, y, 15, miller_madow=True).value)
        sums["hist"].append(mi_histogram(x, y, 15, miller_madow=True).value)
    means = {k: float(np.mean(v)) for k, v in sums.items()}
    windows = {"adp": (0.27, 0.32), "ddp": (0.27, 0.33), "hist": (0.29, 0.34)}
    elapsed = time.time() - start
    ok = all(windows[k][0] <= means[k] <= windows[k][1] for k in means) and elapsed < 1800.0
    detail = ", ".join(f"{k} {means[k]:.4f} in {windows[k]}" for k in ("adp", "ddp", "hist"))
    report(6, ok, f"N=300 m=15 10 reps: {detail}, {elapsed:.0f}s (< 1800s)")


def test_criterion_7_property_suite(tmp_path):
    rng = np.random.default_rng(707)
    checks = []

    # refinement monotonicity of partition scores (random cell splits)
    ok = True
    for _ in range(200):
        n = int(rng.integers(6, 16))
        k = int(rng.integers(2, 4))
        labels = random_grouped_labels(rng, n, k)
        sizes = np.bincount(labels, minlength=k + 1)[1:]
        lo = int(rng.integers(1, n))
        hi = int(rng.integers(lo + 1, n + 1))
        mid = int(rng.integers(lo, hi))
        frac = sizes / n

        def counts(a, b):
            return [(labels[a - 1 : b] == g + 1).sum() for g in range(k)]

        for kind in ("pearson", "lr"):
            whole = ksample_cell_score(counts(lo, hi), (hi - lo + 1) * frac, kind)
            split = ksample_cell_score(
                counts(lo, mid), (mid - lo + 1) * frac, kind
            ) + ksample_cell_score(counts(mid + 1, hi), (hi - mid) * frac, kind)
            ok &= split >= whole - 1e-9
    checks.append(("refinement monotonicity", ok))

    # LR max statistic nondecreasing in m
    ok = True
    for _ in range(20):
        n = int(rng.integers(5, 13))
        gs = GroupedSample.from_values(
            random_grouped_labels(rng, n, 2), rng.normal(size=n), tie_seed=2
        )
        values = ksample_max_all_m(gs, "lr", m_max=n).values
        ok &= bool(np.all(np.diff(values) >= -1e-12))
    checks.append(("LR max nondecreasing in m", ok))

    # monotone-transform invariance, bit identical
    values = rng.normal(size=20)
    labels = random_grouped_labels(rng, 20, 2)
    a = GroupedSample.from_values(labels, values, 5)
    b = GroupedSample.from_values(labels, np.exp(values), 5)
    ok = (
        ksample_sum_all_m(a, "lr", 10).values.tolist()
        == ksample_sum_all_m(b, "lr", 10).values.tolist()
    )
    xv, yv = rng.normal(size=10), rng.normal(size=10)
    from partitest import rank_with_random_ties

    x1, y1 = rank_with_random_ties(xv, 0), rank_with_random_ties(yv, 0)
    x2, y2 = rank_with_random_ties(3 * xv + 1, 0), rank_with_random_ties(yv**3, 0)
    ok &= (
        adp_sum_all_m(x1, y1, "lr", 4).values.tolist()
        == adp_sum_all_m(x2, y2, "lr", 4).values.tolist()
    )
    checks.append(("monotone-transform invariance (bit identical)", ok))

    # x <-> y symmetry of the independence sums
    xr, yr = rng.permutation(8) + 1, rng.permutation(8) + 1
    x = RankedSample(xr, 8, 0)
    y = RankedSample(yr, 8, 0)
    ok = bool(
        np.allclose(
            adp_sum_all_m(x, y, "lr", 4).values, adp_sum_all_m(y, x, "lr", 4).values, rtol=1e-12
        )
        and np.allclose(
            ddp_sum_all_m(x, y, "pearson", 4).values,
            ddp_sum_all_m(y, x, "pearson", 4).values,
            rtol=1e-12,
        )
    )
    checks.append(("x/y symmetry of partition sums", ok))

    # null-table byte determinism across thread counts 1 and 4
    meta = NullTableMeta(
        problem="ksample",
        family="sum",
        score="lr",
        n=30,
        group_sizes=(15, 15),
        m_max=8,
        b=400,
        seed=7,
    )
    t1 = generate_null_table(meta, threads=1)
    t4 = generate_null_table(meta, threads=4)
    p1, p4 = tmp_path / "t1.pnt", tmp_path / "t4.pnt"
    save_table(t1, str(p1))
    save_table(t4, str(p4))
    checks.append(("table byte determinism across threads {1,4}", p1.read_bytes() == p4.read_bytes()))

    # exact-mode self p-values equal enumeration rank ratios (tie rule: >=)
    meta = NullTableMeta(
        problem="ksample",
        family="sum",
        score="lr",
        n=6,
        group_sizes=(3, 3),
        m_max=4,
        b=100,
        seed=1,
    )
    table = generate_null_table(meta)
    assert table.meta.exact
    b_count = table.meta.b
    combined = combined_null_distribution(table, "minp")
    from partitest.nulltable import _multiset_permutations

    perms = list(_multiset_permutations([1, 1, 1, 2, 2, 2]))
    ok = True
    for i in range(b_count):
        gs = GroupedSample(
            labels=np.asarray(perms[i]),
            y_ranks=RankedSample(np.arange(1, 7), 6, 0),
            group_sizes=(3, 3),
        )
        res = run_test(gs, table, "minp")
        for j in range(table.data.shape[1]):
            geq = int(np.sum(table.data[:, j] >= table.data[i, j]))
            ok &= res.per_m_pvalues[j] == pytest.approx((1 + geq) / (b_count + 1))
        leq = int(np.sum(combined <= res.combined_statistic))
        ok &= res.final_pvalue == pytest.approx((1 + leq) / (b_count + 1))
    checks.append(("exact-mode self p-values equal rank ratios", ok))

    all_ok = all(flag for _, flag in checks)
    detail = "; ".join(f"{name}: {'ok' if flag else 'FAILED'}" for name, flag in checks)
    report(7, all_ok, detail)


def test_criterion_8_consistency_smoke(table_two_sample_100, table_two_sample_200):
    start = time.time()
    rates = {}
    for n, table in ((100, table_two_sample_100), (200, table_two_sample_200)):
        half = n // 2
        spec = make_scenario(
            "gauss-scale", n=n, group_sizes=(half, half), seed=808, replicates=500, alpha=0.05
        )
        rates[n] = power_study(spec, table, "minp").rejection_rate
    elapsed = time.time() - start
    gain = rates[200] - rates[100]
    report(
        8,
        gain >= 0.05,
        f"power N=100: {rates[100]:.3f}, N=200: {rates[200]:.3f}, gain {gain:.3f} >= 0.05, "
        f"{elapsed:.0f}s",
    )
