import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from acisched.environment import (AciModel, ChannelParams, ConvoyScenario, Duplex, LinkSets,
                                  build_aci_matrix, channel_gain_matrix, intended_sets,
                                  sample_convoy, uniform_convoy)
from acisched.errors import ConfigurationError


# --- ACI matrix

def test_gpp3_mask_values_f8():
    A = build_aci_matrix(8, AciModel.gpp3())
    assert A[0, 0] == 1.0
    assert A[0, 2] == pytest.approx(1e-3)
    assert A[0, 6] == pytest.approx(10 ** -4.5)


def test_gpp3_mask_boundary_offsets_f6():
    A = build_aci_matrix(6)
    assert A[1, 5] == pytest.approx(1e-3)        # offset 4
    assert A[0, 5] == pytest.approx(10 ** -4.5)  # offset 5


def test_no_aci_is_identity():
    np.testing.assert_array_equal(build_aci_matrix(3, AciModel.no_aci()), np.eye(3))


def test_custom_step_and_parse():
    model = AciModel.parse("custom:1=1e-2,3=1e-4")
    A = build_aci_matrix(6, model)
    assert A[0, 1] == pytest.approx(1e-2)
    assert A[0, 3] == pytest.approx(1e-4)
    assert A[0, 4] == 0.0
    assert AciModel.parse("none") == AciModel.no_aci()


@pytest.mark.parametrize("levels", [[], [(2, 1e-3), (2, 1e-4)], [(1, 0.0)], [(1, 1.5)], [(0, 0.1)]])
def test_custom_step_rejects_bad_levels(levels):
    with pytest.raises(ConfigurationError):
        AciModel.custom(levels)


def test_aci_bad_inputs():
    with pytest.raises(ConfigurationError):
        build_aci_matrix(0)
    with pytest.raises(ConfigurationError):
        AciModel.parse("whatever")


@given(F=st.integers(1, 30), kind=st.sampled_from(["gpp3", "none", "custom:2=0.01,5=0.001"]))
def test_aci_toeplitz_unit_diagonal(F, kind):
    A = build_aci_matrix(F, AciModel.parse(kind))
    assert np.all(np.diag(A) == 1.0)
    for k in range(-F + 1, F):
        d = np.diag(A, k)
        assert np.all(d == d[0])
    if kind == "gpp3":
        assert np.all((A > 0) & (A <= 1))
    if kind == "none":
        assert np.all(A[~np.eye(F, dtype=bool)] == 0)


# --- convoy

def test_gap_mean_and_support():
    pos = sample_convoy(100_001, seed=7).positions
    gaps = np.diff(pos)
    assert pos[0] == 0.0
    assert gaps.min() >= 10.0
    assert gaps.mean() == pytest.approx(48.6, abs=0.5)


def test_gap_distribution_ks():
    gaps = np.diff(sample_convoy(100_001, seed=11).positions)
    ks = stats.kstest(gaps, stats.expon(loc=10.0, scale=38.6).cdf)
    assert ks.statistic < 0.01


def test_convoy_determinism():
    np.testing.assert_array_equal(sample_convoy(20, seed=42).positions,
                                  sample_convoy(20, seed=42).positions)


@pytest.mark.parametrize("kw", [dict(N=1), dict(N=5, d_min=50, d_avg=48.6), dict(N=5, d_min=0)])
def test_convoy_rejects_bad_config(kw):
    with pytest.raises(ConfigurationError):
        sample_convoy(**kw)


@given(N=st.integers(2, 40), seed=st.integers(0, 2**32 - 1))
def test_positions_increasing_with_min_gap(N, seed):
    gaps = np.diff(sample_convoy(N, seed=seed).positions)
    assert np.all(gaps >= 10.0)


# --- channel

def _no_shadow():
    return ChannelParams(sigma1=0.0)


def test_gain_at_reference_distance():
    sc = ConvoyScenario(np.array([0.0, 10.0]))
    H = channel_gain_matrix(sc, _no_shadow()).gains
    assert H[0, 1] == pytest.approx(4.677e-7, rel=1e-3)
    assert H[0, 1] == pytest.approx(10 ** (-6.33))


def test_gain_at_100m():
    sc = ConvoyScenario(np.array([0.0, 100.0]))
    H = channel_gain_matrix(sc, _no_shadow()).gains
    assert H[0, 1] == pytest.approx(7.943e-9, rel=1e-3)


def test_one_blocker_costs_10db():
    # 0 -> 2 passes VUE 1; 3 -> 4 is the same distance unobstructed
    sc = ConvoyScenario(np.array([0.0, 25.0, 50.0, 100.0, 150.0]))
    H = channel_gain_matrix(sc, _no_shadow()).gains
    assert 10 * np.log10(H[3, 4] / H[0, 2]) == pytest.approx(10.0)


def test_diagonal_modes():
    sc = uniform_convoy(4)
    assert np.all(np.diag(channel_gain_matrix(sc, seed=1).gains) == 0.0)
    full = channel_gain_matrix(sc, duplex=Duplex.FULL, seed=1, self_gain=0.5)
    assert np.all(np.diag(full.gains) == 0.5)
    assert full.diagonal_mode is Duplex.FULL


def test_independent_shadowing_is_asymmetric():
    sc = uniform_convoy(6)
    H = channel_gain_matrix(sc, ChannelParams(symmetric_shadowing=False), seed=3).gains
    assert not np.allclose(H, H.T)


def test_duplicate_positions_rejected():
    with pytest.raises(ConfigurationError):
        channel_gain_matrix(ConvoyScenario(np.array([0.0, 0.0, 5.0])))


@given(N=st.integers(2, 15), seed=st.integers(0, 10_000))
def test_channel_symmetric_positive(N, seed):
    H = channel_gain_matrix(sample_convoy(N, seed=seed), seed=seed).gains
    off = ~np.eye(N, dtype=bool)
    assert np.all(H[off] > 0)
    np.testing.assert_array_equal(H, H.T)


@given(d=st.lists(st.floats(10, 500), min_size=2, max_size=2, unique=True))
def test_gain_decreases_with_distance(d):
    near, far = sorted(d)
    g = [channel_gain_matrix(ConvoyScenario(np.array([0.0, x])), _no_shadow()).gains[0, 1]
         for x in (near, far)]
    assert g[0] > g[1]


def test_gain_decreases_with_blockers():
    # same 200 m span with 0, 1 and 2 VUEs in between
    spans = [np.array([0.0, 200.0]), np.array([0.0, 100.0, 200.0]), np.array([0.0, 60.0, 120.0, 200.0])]
    g = [channel_gain_matrix(ConvoyScenario(p), _no_shadow()).gains[0, -1] for p in spans]
    assert g[0] > g[1] > g[2]


# --- intended sets

def test_all_others_when_grid_is_large():
    links = intended_sets(uniform_convoy(5), 5, 1)
    for j in range(5):
        assert links.transmitters_of(j) == set(range(5)) - {j}


def test_single_neighbour_when_ft_is_two():
    links = intended_sets(sample_convoy(20, seed=1), 2, 1)
    assert all(len(links.transmitters_of(j)) == 1 for j in range(20))


def test_equal_spacing_neighbours():
    # FT - 1 = 2: the two adjacent VUEs (1-based 2 and 4 for VUE 3)
    links = intended_sets(uniform_convoy(4), 3, 1)
    assert links.transmitters_of(2) == {1, 3}


def test_ties_go_to_lower_index():
    # VUE 1 (0-based) is equidistant from 0 and 2; one slot left for it
    links = intended_sets(uniform_convoy(3), 2, 1)
    assert links.transmitters_of(1) == {0}


@given(N=st.integers(2, 12), F=st.integers(1, 6), T=st.integers(1, 4), seed=st.integers(0, 999))
def test_link_reciprocity(N, F, T, seed):
    links = intended_sets(sample_convoy(N, seed=seed), F, T)
    for i in range(N):
        assert i not in links.receivers_of(i)
        for j in links.receivers_of(i):
            assert i in links.transmitters_of(j)
    assert all(len(links.transmitters_of(j)) == min(N - 1, F * T - 1) for j in range(N))


def test_linksets_helpers():
    links = LinkSets.from_receivers([{1}, {0, 2}, set()], 3)
    assert links.transmitters_of(0) == {1}
    uni = LinkSets.all_to_all(3).unicast([1, None, 0])
    assert uni.receivers_of(0) == {1} and uni.receivers_of(1) == set()
    with pytest.raises(ConfigurationError):
        LinkSets(np.eye(2, dtype=bool))
