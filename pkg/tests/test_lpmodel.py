import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acisched.core import derive_constants, success_matrix
from acisched.environment import LinkSets, build_aci_matrix
from acisched.errors import ConfigurationError
from acisched.lpmodel import (ModelKind, ModelSpec, build_model, emit_model, feasible_assignment,
                              format_lp, model_stats, objective_value, parse_lp, read_lp,
                              violations)
from acisched.power import heuristic_power
from acisched.schedulers import bis_schedule

from conftest import random_instance


def _spec(kind, params, sched=None, **kw):
    if kind == "milp":
        kw["fixed_X"] = sched if sched is not None else bis_schedule(params.N, params.F, params.T)
    if kind == "blp":
        kw["fixed_P"] = params.p_max
    return ModelSpec(kind, **kw)


def _sinr_rows(model):
    return [r for r in model.rows if r.name.startswith("sinr")]


def test_blp_smallest_counts():
    params = derive_constants(2, 1, 1)
    H = np.array([[0, 1e-9], [1e-9, 0]])
    model = build_model(_spec("blp", params), params, H, build_aci_matrix(1), LinkSets.all_to_all(2))
    assert sorted(model.binaries) == ["X_1_1_1", "X_2_1_1", "Y_1_1_1", "Y_2_1_1"]
    assert len(_sinr_rows(model)) == 2
    assert not any(r.quad for r in model.rows)


def test_joint_boolean_count():
    params = derive_constants(3, 2, 2)
    stats = model_stats(ModelSpec("joint"), params)
    assert stats.binaries == 24
    assert stats.continuous == 3 * 2 + 9 * 2 * 2 + 9
    assert stats.quadratic_rows == 3 * 2 * 2


def test_blp_continuous_count():
    params = derive_constants(3, 2, 2)
    assert model_stats(_spec("blp", params), params).continuous == 9 * 4 + 9


def test_half_duplex_row_count():
    params = derive_constants(3, 4, 2)
    full = model_stats(ModelSpec("joint", half_duplex=False), params)
    half = model_stats(ModelSpec("joint", half_duplex=True), params)
    assert half.linear_rows - full.linear_rows == 3 * 4 * 4 * 2


def test_milp_has_no_v():
    params = derive_constants(3, 2, 2)
    H = np.full((3, 3), 1e-9)
    model = build_model(_spec("milp", params), params, H, build_aci_matrix(2), LinkSets.all_to_all(3))
    assert not any(v.startswith("V_") for v in model.variables)
    assert model.objective["P_1_1"] == pytest.approx(-params.beta)


def test_beta_default():
    params = derive_constants(20, 20, 2)
    assert params.beta == pytest.approx(9.953e-5, rel=1e-3)


def test_spec_requires_fixed_parts():
    with pytest.raises(ConfigurationError):
        ModelSpec("milp")
    with pytest.raises(ConfigurationError):
        ModelSpec("blp")


def test_joint_has_bilinear_section():
    params = derive_constants(2, 1, 1)
    H = np.array([[0, 1e-9], [1e-9, 0]])
    model = build_model(ModelSpec("joint"), params, H, build_aci_matrix(1), LinkSets.all_to_all(2))
    text = format_lp(model)
    assert "[" in text and "X_1_1_1 * P_1_1" in text
    assert text.splitlines()[-1] == "End"


def test_unwritable_path(tmp_path):
    params = derive_constants(2, 1, 1)
    H = np.array([[0, 1e-9], [1e-9, 0]])
    with pytest.raises(OSError):
        emit_model(ModelSpec("joint"), params, H, build_aci_matrix(1), LinkSets.all_to_all(2),
                   tmp_path / "missing" / "m.lp")
    assert list(tmp_path.iterdir()) == []


def test_file_round_trip(tmp_path, rng):
    params, H, A, links, sched, _ = random_instance(rng, 3, 2, 2)
    for kind in ("joint", "blp", "milp"):
        model = build_model(_spec(kind, params, sched, maxmin=True), params, H, A, links)
        path = tmp_path / f"{kind}.lp"
        stats = emit_model(_spec(kind, params, sched, maxmin=True), params, H, A, links, path)
        back = read_lp(path)
        assert stats == model.stats() == back.stats()
        assert back.objective == model.objective
        assert back.bounds == model.bounds
        assert sorted(back.binaries) == sorted(model.binaries)
        for a, b in zip(model.rows, back.rows):
            assert (a.name, a.lin, a.quad, a.sense, a.rhs) == (b.name, b.lin, b.quad, b.sense, b.rhs)


@settings(max_examples=40)
@given(seed=st.integers(0, 10_000), N=st.integers(2, 4), F=st.integers(1, 3), T=st.integers(1, 3),
       kind=st.sampled_from(["joint", "blp", "milp"]), maxmin=st.booleans(),
       restrict=st.booleans(), tuned=st.booleans())
def test_simulator_assignments_are_feasible(seed, N, F, T, kind, maxmin, restrict, tuned):
    rng = np.random.default_rng(seed)
    params, H, A, links, sched, P = random_instance(rng, N, F, T)
    if kind == "blp":
        P = np.full((N, T), params.p_max)
    elif tuned:
        P = heuristic_power(params, sched, H, A, links).P
    spec = ModelSpec(kind, maxmin=maxmin, restrict_links=restrict,
                     fixed_X=sched if kind == "milp" else None,
                     fixed_P=P if kind == "blp" else None)
    model = build_model(spec, params, H, A, links)
    assert model.stats() == model_stats(spec, params, links)
    values = feasible_assignment(spec, params, sched, P, H, A, links)
    assert violations(model, values, tol=1e-9) == []
    J = success_matrix(sched, P, H, A, links, params).J
    obj = objective_value(model, values)
    if kind == "milp":
        obj += params.beta * P.sum()
    if maxmin:
        active = links.mask.any(axis=1)
        Z = success_matrix(sched, P, H, A, links, params).Z
        expected = Z.sum(axis=1)[active].min() if active.any() else 0
        assert obj == pytest.approx(expected)
    else:
        assert obj == pytest.approx(J, abs=1e-9)


def test_text_round_trip_is_stable(rng):
    params, H, A, links, sched, _ = random_instance(rng, 3, 2, 2)
    model = build_model(ModelSpec("joint", maxmin=True), params, H, A, links)
    text = format_lp(model)
    assert format_lp(parse_lp(text)) == text
