import json

import numpy as np
import pytest

from partition_opt import (
    InstanceError,
    ProblemInstance,
    Regime,
    ZeroWisdomWarning,
    check_assumptions,
    classify_regime,
    generate_instance,
    instance_from_dict,
    instance_to_dict,
    load_instance,
    random_positive,
    save_instance,
    uniform_grid_multiplicative,
)
from partition_opt.measure import bump_profile


def write(tmp_path, data, name="inst.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return path


TWO_POINT = {
    "points": [{"id": 0, "weight": 0.5}, {"id": 1, "weight": 0.5}],
    "wisdoms": [[1, 0], [0, 1]],
    "capacities": [0.5, 0.5],
}


def test_load_saturated(tmp_path):
    inst = load_instance(write(tmp_path, TWO_POINT))
    assert inst.regime.tag is Regime.SATURATED
    assert inst.total_mass == 1.0


def test_load_under_saturated(tmp_path):
    data = dict(TWO_POINT, capacities=[0.5, 0.25])
    inst = load_instance(write(tmp_path, data))
    assert inst.regime.tag is Regime.UNDER
    assert inst.regime.slack == pytest.approx(-0.25)


def test_parse_error_names_file(tmp_path):
    with pytest.raises(InstanceError, match="parse error"):
        load_instance(write(tmp_path, "{not json"))


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"points": [{"id": 0, "weight": -0.5}, {"id": 1, "weight": 0.5}]}, "weights"),
        ({"capacities": [0.5]}, "capacities"),
        ({"wisdoms": [[1, 0, 2], [0, 1, 2]]}, "wisdoms"),
        ({"capacities": [0.5, -0.1]}, "capacities"),
        ({"points": [{"id": 0, "weight": 0.5}, {"id": 0, "weight": 0.5}]}, "points"),
    ],
)
def test_validation_names_field(tmp_path, patch, field):
    with pytest.raises(InstanceError, match=field):
        load_instance(write(tmp_path, dict(TWO_POINT, **patch)))


def test_round_trip(tmp_path):
    inst = random_positive(7, 3, capacities="OS", seed=4)
    path = tmp_path / "r.json"
    save_instance(inst, path)
    back = load_instance(path)
    np.testing.assert_array_equal(back.wisdoms, inst.wisdoms)
    np.testing.assert_array_equal(back.weights, inst.weights)
    np.testing.assert_array_equal(back.capacities, inst.capacities)
    assert back.regime == inst.regime


def test_points_reordered_by_id():
    data = {
        "points": [{"id": 1, "weight": 0.25}, {"id": 0, "weight": 0.75}],
        "wisdoms": [[10.0, 20.0]],
        "capacities": [1.0],
    }
    inst = instance_from_dict(data)
    # columns follow the listed records, so they move with their ids
    np.testing.assert_array_equal(inst.weights, [0.75, 0.25])
    np.testing.assert_array_equal(inst.wisdoms[0], [20.0, 10.0])
    assert instance_to_dict(inst)["points"][0] == {"id": 0, "weight": 0.75}


def test_regime_band():
    assert classify_regime([0.5, 0.5 + 1e-12], 1.0).tag is Regime.SATURATED
    assert classify_regime([0.5, 0.6], 1.0).tag is Regime.OVER
    assert classify_regime([0.5, 0.4], 1.0).tag is Regime.UNDER


def test_zero_wisdom_warns_but_is_accepted():
    with pytest.warns(ZeroWisdomWarning):
        inst = ProblemInstance.from_arrays([1.0], [[0.0]], [1.0])
    assert check_assumptions(inst).zero_wisdom_mass[0] == 1.0


def test_instances_are_immutable(two_point):
    with pytest.raises(ValueError):
        two_point.wisdoms[0, 0] = 5.0


def test_two_point_assumption_report_empty(two_point):
    report = check_assumptions(two_point)
    assert report.empty
    assert not report.positive


def test_tie_violation_reported():
    inst = ProblemInstance.from_arrays([0.25, 0.25, 0.5], [[2.0, 3.0, 1.0], [1.0, 2.0, 0.5]], [0.5, 0.5])
    report = check_assumptions(inst)
    assert not report.empty
    (pair, value, mass), = report.tie_violations
    assert pair == (0, 1) and value == pytest.approx(1.0) and mass == pytest.approx(0.5)


def test_level_sets_only_checked_under_saturation():
    psi = [[1.0, 1.0, 2.0], [0.5, 3.0, 1.0]]
    sat = ProblemInstance.from_arrays([1, 1, 1], psi, [1.5, 1.5])
    under = sat.replace(capacities=np.array([1.0, 1.0]))
    assert check_assumptions(sat).level_set_violations == {}
    levels = check_assumptions(under).level_set_violations
    assert levels[0] == [(1.0, 2.0)]
    assert levels[1] == []


def test_generators_are_deterministic():
    a = generate_instance("random_positive", seed=3, n=20, n_agents=3, capacities="US")
    b = generate_instance("random_positive", seed=3, n=20, n_agents=3, capacities="US")
    np.testing.assert_array_equal(a.wisdoms, b.wisdoms)
    assert a.regime.tag is Regime.UNDER


@pytest.mark.parametrize("regime, tag", [("S", Regime.SATURATED), ("US", Regime.UNDER), ("OS", Regime.OVER)])
def test_random_regimes(regime, tag):
    for seed in range(10):
        assert random_positive(15, 4, capacities=regime, seed=seed).regime.tag is tag


def test_multiplicative_grid():
    inst = uniform_grid_multiplicative(4, [1, 3], [0.5, 0.5])
    np.testing.assert_allclose(inst.wisdoms[1], 3 * inst.wisdoms[0])
    np.testing.assert_allclose(inst.wisdoms[0], [0.125, 0.375, 0.625, 0.875])
    with pytest.raises(InstanceError):
        uniform_grid_multiplicative(4, [3, 1], [0.5, 0.5])


def test_bump_profile_hits_nodes():
    inst = bump_profile([[(0, 0.1), (0.25, 2.0), (1, 0.1)], [(0, 0.5), (1, 0.5)]], [0.1, 0.9], n=2001)
    x = inst.measure.coords
    k = int(np.flatnonzero(x == 0.25)[0])
    assert inst.wisdoms[0, k] == 2.0
    assert inst.total_mass == pytest.approx(1.0)
