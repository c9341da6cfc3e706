import pytest

from partitest import NullTableMeta, generate_null_table


@pytest.fixture(scope="session")
def table_two_sample_100():
    """Shared N=100 (50/50) sum/LR table, B=10^4, m in 2..29."""
    meta = NullTableMeta(
        problem="ksample",
        family="sum",
        score="lr",
        n=100,
        group_sizes=(50, 50),
        m_max=29,
        b=10_000,
        seed=20260807,
    )
    return generate_null_table(meta)


@pytest.fixture(scope="session")
def table_two_sample_200():
    """Shared N=200 (100/100) sum/LR table, B=10^4, m in 2..29."""
    meta = NullTableMeta(
        problem="ksample",
        family="sum",
        score="lr",
        n=200,
        group_sizes=(100, 100),
        m_max=29,
        b=10_000,
        seed=20260808,
    )
    return generate_null_table(meta)
