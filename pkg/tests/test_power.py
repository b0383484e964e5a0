import numpy as np
import pytest
from hypothesis import given, strategies as st

from acisched.core import Schedule, derive_constants, link_sinr_tensor, success_matrix
from acisched.environment import LinkSets, build_aci_matrix
from acisched.errors import ConfigurationError
from acisched.power import equal_power, heuristic_power
from acisched.schedulers import bis_schedule

from conftest import random_instance


def test_equal_power_levels():
    params = derive_constants(4, 3, 2)
    np.testing.assert_allclose(equal_power(params), params.p_max)
    assert params.p_max == pytest.approx(251.19, abs=0.01)
    assert not equal_power(params, 0.0).any()
    np.testing.assert_allclose(equal_power(params, params.p_max / 10), 25.119, atol=1e-3)


def test_equal_power_out_of_range():
    params = derive_constants(4, 3, 2)
    with pytest.raises(ConfigurationError):
        equal_power(params, params.p_max * 1.01)
    with pytest.raises(ConfigurationError):
        equal_power(params, -1.0)


def test_nothing_scheduled_returns_zero():
    params = derive_constants(3, 2, 2)
    res = heuristic_power(params, Schedule.empty(3, 2, 2), np.ones((3, 3)), build_aci_matrix(2),
                          LinkSets.all_to_all(3))
    assert not res.P.any() and res.iterations == 0 and res.initial_links == 0


def test_zero_initial_power_rejected():
    params = derive_constants(2, 1, 1).with_(p_init=0.0)
    sched = Schedule(np.array([[1]]), 2)
    with pytest.raises(ConfigurationError):
        heuristic_power(params, sched, np.ones((2, 2)), build_aci_matrix(1), LinkSets.all_to_all(2))


def test_single_noise_limited_link_closed_form():
    # p_init is too weak, p_max is enough: one update lands on the threshold
    params = derive_constants(2, 1, 1)
    g = params.gamma_t * params.sigma2 / 100.0
    H = np.array([[0.0, g], [g, 0.0]])
    links = LinkSets.from_receivers([[1], []], 2)
    res = heuristic_power(params, Schedule(np.array([[1]]), 2), H, build_aci_matrix(1), links)
    target = params.gamma_t * params.sigma2 / g
    assert params.p_init < target < params.p_max
    assert res.P[0, 0] == pytest.approx(target, rel=1e-12)
    assert res.P[1, 0] == 0.0
    assert res.converged and res.iterations == 1


def test_fixed_point_needs_no_iteration():
    # p_init already puts the link exactly on the threshold
    params = derive_constants(2, 1, 1)
    g = params.gamma_t * params.sigma2 / params.p_init
    H = np.array([[0.0, g], [g, 0.0]])
    links = LinkSets.from_receivers([[1], []], 2)
    sched = Schedule(np.array([[1]]), 2)
    P0 = np.array([[params.p_init], [0.0]])
    ups = link_sinr_tensor(sched.slots(), P0, H, build_aci_matrix(1), params.sigma2)
    assert ups[0, 1, 0] == pytest.approx(params.gamma_t, rel=1e-12)
    res = heuristic_power(params, sched, H * (1 + 1e-12), build_aci_matrix(1), links)
    assert res.iterations == 0
    assert res.P[0, 0] == params.p_init


def test_unreachable_link_dropped_after_cmax():
    params = derive_constants(2, 1, 1, c_max=3)
    H = np.array([[0.0, 1e-20], [1e-20, 0.0]])
    links = LinkSets.from_receivers([[1], []], 2)
    res = heuristic_power(params, Schedule(np.array([[1]]), 2), H, build_aci_matrix(1), links)
    assert res.converged
    assert res.iterations == params.c_max + 1
    assert not res.candidate_links.any()


@given(seed=st.integers(0, 10_000), N=st.integers(2, 6), F=st.integers(1, 4), T=st.integers(1, 3))
def test_power_invariants(seed, N, F, T):
    rng = np.random.default_rng(seed)
    params, H, A, links, sched, _ = random_instance(rng, N, F, T)
    res = heuristic_power(params, sched, H, A, links)
    P = res.P
    assert np.all(P >= 0) and np.all(P <= params.p_max * (1 + 1e-12))
    assert not P[sched.slots() < 0].any()
    assert res.converged
    assert res.iterations <= (params.c_max + 1) * max(res.initial_links, 1)
    # every surviving candidate link succeeds in some timeslot
    Y = success_matrix(sched, P, H, A, links, params).Z
    assert not (res.candidate_links & ~Y).any()
    # the candidate set only shrinks
    on = sched.slots() >= 0
    L0 = on.any(axis=1)[:, None] & links.mask
    assert not (res.candidate_links & ~L0).any()
    assert res.counters.max(initial=0) <= params.c_max + 1


def test_benchmark_power_below_equal(rng):
    params, H, A, links, _, _ = random_instance(rng, 20, 20, 2)
    sched = bis_schedule(20, 20, 2)
    res = heuristic_power(params, sched, H, A, links)
    used = res.P[sched.slots() >= 0]
    assert used.mean() < params.p_max
