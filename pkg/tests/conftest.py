import numpy as np
import pytest

from torscat import arith, spectral

# Large enough for the doubled truncation ladder at lambda <= 1e4 with
# tol 1e-9, the 1e7 counting checkpoint, and pair shifts beyond 1e6.
LIMIT_BIG = 10_500_000


@pytest.fixture(scope="session")
def big_table():
    return arith.build_table(LIMIT_BIG)


@pytest.fixture(scope="session")
def table10k():
    return arith.build_table(10_000)


@pytest.fixture(scope="session")
def weak_cfg(big_table):
    return spectral.CouplingConfig.create("weak", 0.0, table=big_table)


def brute_membership(x: int) -> np.ndarray:
    """Direct two-square enumeration oracle: sorted members of S in [0, x]."""
    hits = set()
    a = 0
    while a * a <= x:
        b = a
        while a * a + b * b <= x:
            hits.add(a * a + b * b)
            b += 1
        a += 1
    return np.array(sorted(hits), dtype=np.int64)
