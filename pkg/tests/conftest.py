import numpy as np
import pytest
from hypothesis import settings

from acisched.core import Schedule, derive_constants
from acisched.environment import (Duplex, build_aci_matrix, channel_gain_matrix, intended_sets,
                                  sample_convoy)

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_instance(rng, N, F, T, duplex=Duplex.HALF, scale=None):
    """Benchmark-style channel on a random convoy plus a random schedule."""
    params = derive_constants(N, F, T, duplex=duplex)
    scenario = sample_convoy(N, seed=rng)
    H = channel_gain_matrix(scenario, duplex=duplex, seed=rng).gains
    if scale is not None:
        H = H * scale
    links = intended_sets(scenario, F, T)
    A = build_aci_matrix(F)
    U = np.zeros((F, T), dtype=int)
    for t in range(T):
        # distinct real VUEs per timeslot, zeros fill the rest
        col = np.r_[rng.permutation(N + 1), np.zeros(max(F - N - 1, 0), dtype=int)][:F]
        U[:, t] = rng.permutation(col)
    sched = Schedule(U, N)
    P = rng.uniform(0, params.p_max, size=(N, T))
    return params, H, A, links, sched, P


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one verdict line per acceptance criterion."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
