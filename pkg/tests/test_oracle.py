import math

import numpy as np
import pytest

from partitest import GroupedSample, RankedSample
from partitest.oracle import (
    PartitionEnumeration,
    oracle_adp,
    oracle_ddp,
    oracle_hhg,
    oracle_ksample,
    partition_count,
)


class TestEnumeration:
    def test_cardinalities_match_closed_forms(self):
        for n in (4, 6, 9):
            for m in range(2, min(5, n) + 1):
                for kind in ("ksample", "adp", "ddp"):
                    enum = PartitionEnumeration.enumerate(kind, n, m)
                    assert len(enum) == partition_count(kind, n, m)

    def test_counts(self):
        assert partition_count("ksample", 10, 3) == math.comb(9, 2)
        assert partition_count("adp", 10, 3) == math.comb(9, 2) ** 2
        assert partition_count("ddp", 10, 3) == math.comb(10, 2)
        with pytest.raises(ValueError):
            partition_count("nope", 4, 2)

    def test_budget_guard(self):
        with pytest.raises(ValueError, match="budget"):
            PartitionEnumeration.enumerate("adp", 40, 12)

    def test_adp_partition_count_n3_m2(self):
        assert len(PartitionEnumeration.enumerate("adp", 3, 2)) == 4

    def test_ddp_partition_count_n5_m3(self):
        assert len(PartitionEnumeration.enumerate("ddp", 5, 3)) == 10


class TestOracleGuards:
    def test_ksample_budget(self):
        labels = np.tile([1, 2], 20)
        gs = GroupedSample.from_values(labels, np.arange(40.0), 0)
        with pytest.raises(ValueError, match="budget"):
            oracle_ksample(gs, "lr", 20)

    def test_hhg_size_limit(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            oracle_hhg(rng.normal(size=201), rng.normal(size=201))

    def test_m_out_of_range(self):
        x = RankedSample(np.array([1, 2, 3]), 3, 0)
        y = RankedSample(np.array([3, 1, 2]), 3, 0)
        with pytest.raises(ValueError):
            oracle_adp(x, y, "lr", 1)
        with pytest.raises(ValueError):
            oracle_ddp(x, y, "lr", 4)


class TestOracleBasics:
    def test_ksample_single_partition_at_m_n(self):
        gs = GroupedSample.from_values([1, 2, 1, 2], [0.1, 0.2, 0.3, 0.4], 0)
        s, m = oracle_ksample(gs, "pearson", 4)
        assert s == pytest.approx(m, rel=1e-12)

    def test_alternating_example(self):
        gs = GroupedSample.from_values([1, 2, 1, 2], [0.1, 0.2, 0.3, 0.4], 0)
        s, m = oracle_ksample(gs, "pearson", 2)
        assert s == pytest.approx(8.0 / 3.0, rel=1e-12)
        assert m == pytest.approx(4.0 / 3.0, rel=1e-12)

    def test_hhg_axis_symmetry(self):
        rng = np.random.default_rng(4)
        xv, yv = rng.normal(size=12), rng.normal(size=12)
        assert oracle_hhg(xv, yv) == pytest.approx(oracle_hhg(yv, xv), rel=1e-10)

    def test_ddp_zero_area_cells_ignored(self):
        # adjacent cut ranks leave zero-width interiors that add nothing
        x = RankedSample(np.array([1, 2, 3, 4]), 4, 0)
        y = RankedSample(np.array([1, 2, 3, 4]), 4, 0)
        s, _ = oracle_ddp(x, y, "lr", 4)
        assert np.isfinite(s)
