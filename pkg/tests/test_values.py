import numpy as np
import pytest

from partition_opt import (
    eval_xi,
    extract_partition,
    individual_values,
    normalize_price,
    random_positive,
    solve_dual,
    total_profit,
    uniform_grid_multiplicative,
    value_decomposition,
    value_report,
)
from partition_opt.transport import random_feasible_plan
from partition_opt.values import Partition


def test_extract_partition_examples(two_point, two_point_us):
    part = extract_partition(two_point, [0, 0])
    np.testing.assert_allclose(part.cell_masses, [0.5, 0.5, 0.0])
    assert part.tie_points == ()

    tied = extract_partition(two_point, [-1, 0])
    np.testing.assert_allclose(tied.assignment[1], [0.5, 0.0, 0.0])
    assert tied.tie_points == (1,)

    clipped = extract_partition(two_point_us, [0, 1], "Clipped")
    assert 1 in clipped.tie_points
    # indifferent between agent 2 and leaving: lowest index picks leaving
    np.testing.assert_allclose(clipped.assignment[1], [0.0, 0.0, 0.5])


def test_total_profit_examples(two_point, os_instance):
    assert total_profit(two_point, extract_partition(two_point, [0, 0])) == 1.0
    assert total_profit(two_point, extract_partition(two_point, [50, 50], "Clipped")) == 0.0
    rep = solve_dual(os_instance)
    assert total_profit(os_instance, rep.partition) == pytest.approx(2.5)


def test_individual_values_examples(two_point):
    np.testing.assert_allclose(individual_values(two_point, extract_partition(two_point, [0, 0])), [0.5, 0.5])
    from partition_opt import ProblemInstance

    single = ProblemInstance.from_arrays([0.5, 0.5], [[2.0, 4.0]], [1.0])
    np.testing.assert_allclose(individual_values(single, extract_partition(single, [0.0])), [3.0])


def test_fine_grid_individual_values():
    inst = uniform_grid_multiplicative(10_000, [1, 2], [0.5, 0.5])
    values = individual_values(inst, solve_dual(inst).partition)
    np.testing.assert_allclose(values, [0.125, 0.75], atol=1e-3)


def test_decomposition_examples(two_point, two_point_us):
    part = extract_partition(two_point, [0, 0])
    va, vc = value_decomposition(two_point, part, [0, 0])
    np.testing.assert_allclose(va, [0, 0])
    np.testing.assert_allclose(vc, [0.5, 0.5])

    p = normalize_price(two_point, [0, 0])
    va, vc = value_decomposition(two_point, part, p)
    np.testing.assert_allclose(va, [0.5, 0.5])
    np.testing.assert_allclose(vc, [0, 0])

    plan = np.array([[0.5, 0.0, 0.0], [0.0, 0.25, 0.25]])
    va, vc = value_decomposition(two_point_us, Partition(plan), [0, 1])
    np.testing.assert_allclose(va, [0, 0.25])
    np.testing.assert_allclose(vc, [0.5, 0])


def test_decomposition_identity_random():
    rng = np.random.default_rng(0)
    for seed in range(30):
        inst = random_positive(30, 3, ["S", "US", "OS"][seed % 3], seed=seed)
        p = rng.uniform(-1, 2, size=3)
        part = extract_partition(inst, p, "Clipped", "ProportionalSplit")
        rep = value_report(inst, part, p)
        np.testing.assert_allclose(rep.agent_profits + rep.consumer_surpluses, rep.individual_values, atol=1e-10)
        assert rep.total == pytest.approx(rep.individual_values.sum())


def test_weak_duality_on_random_plans():
    rng = np.random.default_rng(1)
    for seed in range(30):
        inst = random_positive(25, 3, ["S", "US", "OS"][seed % 3], seed=seed)
        plan = random_feasible_plan(inst, rng)
        p = rng.uniform(0, 2, size=3)
        bound = eval_xi(inst, p, "Clipped") + p @ inst.capacities
        assert plan.objective <= bound + 1e-12
        if inst.regime.tag.value == "Saturated":
            q = rng.uniform(-2, 2, size=3)
            # an exact-saturation plan also obeys the free functional bound
            full = plan.flows[:, -1].sum() < 1e-12
            if full:
                assert plan.objective <= eval_xi(inst, q) + q @ inst.capacities + 1e-12


def test_report_serialization(two_point):
    rep = value_report(two_point, extract_partition(two_point, [0, 0]), [0, 0])
    csv_text = rep.to_csv().splitlines()
    assert csv_text[0] == "agent,individual_value,agent_profit,consumer_surplus,mass"
    assert len(csv_text) == 3
    assert rep.to_dict()["total"] == 1.0


def test_shape_mismatch(two_point):
    with pytest.raises(ValueError):
        individual_values(two_point, Partition(np.zeros((3, 3))))
