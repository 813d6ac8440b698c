import numpy as np
import pytest
from scipy.optimize import linprog

from partition_opt import ProblemInstance, Regime, brute_force_tiny, random_positive, solve_dual, transportation_lp
from partition_opt.transport import TransportPlan, random_feasible_plan, transport_simplex


def test_two_point_plan(two_point):
    plan = transportation_lp(two_point)
    assert plan.objective == pytest.approx(1.0)
    np.testing.assert_allclose(plan.flows, [[0.5, 0, 0], [0, 0.5, 0]])


def test_under_saturated_plan(two_point_us):
    plan = transportation_lp(two_point_us)
    assert plan.objective == pytest.approx(0.75)
    np.testing.assert_allclose(plan.flows[1], [0, 0.25, 0.25])


def test_over_saturated_plan(os_instance):
    plan = transportation_lp(os_instance)
    assert plan.objective == pytest.approx(2.5)
    np.testing.assert_allclose(plan.served, [0.5, 0.5])


def test_brute_force_examples(two_point, os_instance):
    assert brute_force_tiny(two_point) == 1.0
    single = ProblemInstance.from_arrays([0.5, 0.5], [[2.0, 4.0]], [0.5])
    assert brute_force_tiny(single) == 2.0
    assert brute_force_tiny(os_instance) == 2.5


def test_brute_force_preconditions():
    with pytest.raises(ValueError):
        brute_force_tiny(random_positive(9, 2, seed=0))
    inst = ProblemInstance.from_arrays([0.5, 0.5], [[1.0, 2.0]], [0.3])
    with pytest.raises(ValueError, match="not a sum"):
        brute_force_tiny(inst)


def _integral_instance(rng):
    n = int(rng.integers(1, 8))
    N = int(rng.integers(1, 4))
    w = np.full(n, 1.0 / n)
    psi = rng.uniform(0.1, 2.0, size=(N, n))
    cap = rng.integers(0, n + 1, size=N) / n  # multiples of the point weight
    return ProblemInstance.from_arrays(w, psi, cap)


def test_simplex_equals_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(60):
        inst = _integral_instance(rng)
        assert transportation_lp(inst).objective == pytest.approx(brute_force_tiny(inst), abs=1e-12)


def test_simplex_equals_reference_lp():
    # a general-purpose LP on the same transportation model
    rng = np.random.default_rng(1)
    for seed in range(20):
        regime = ["S", "US", "OS"][seed % 3]
        inst = random_positive(int(rng.integers(2, 40)), int(rng.integers(1, 5)), regime, seed=seed)
        n, N = inst.n_points, inst.n_agents
        c = -inst.wisdoms.T.ravel()
        A_eq = np.kron(np.eye(n), np.ones(N))
        A_ub = np.kron(np.ones(n), np.eye(N))
        # rows may leave mass unserved, so row sums are <= weights
        res = linprog(
            c,
            A_ub=np.vstack([A_ub, A_eq]),
            b_ub=np.concatenate([inst.capacities, inst.weights]),
            bounds=(0, None),
            method="highs",
        )
        assert transportation_lp(inst).objective == pytest.approx(-res.fun, abs=1e-9)


def test_plan_invariants():
    for seed in range(20):
        inst = random_positive(50, 4, ["S", "US", "OS"][seed % 3], seed=seed)
        plan = transportation_lp(inst)
        assert np.all(plan.flows >= 0)
        np.testing.assert_allclose(plan.flows.sum(axis=1), inst.weights, atol=1e-12)
        assert np.all(plan.served <= inst.capacities + 1e-12)
        assert plan.objective == pytest.approx(float(np.sum(plan.flows[:, :-1] * inst.wisdoms.T)))


def test_complementary_slackness_with_dual_prices():
    for seed in range(10):
        inst = random_positive(40, 3, ["S", "US"][seed % 2], seed=seed)
        rep = solve_dual(inst)
        p = rep.price.prices
        plan = transportation_lp(inst)
        net = inst.wisdoms.T - p[None, :]
        best = net.max(axis=1)
        if inst.regime.tag is Regime.UNDER:
            best = np.maximum(best, 0.0)  # the null agent charges nothing
        used = plan.flows[:, :-1] > 1e-12
        assert np.all(net[used] >= best[np.nonzero(used)[0]] - 1e-8)


def test_serialization_round_trip(two_point_us):
    plan = transportation_lp(two_point_us)
    d = plan.to_dict()
    assert d["objective"] == pytest.approx(0.75)
    assert all(len(t) == 3 for t in d["flows"])
    back = TransportPlan.from_dict(d, two_point_us.n_points, two_point_us.n_agents)
    np.testing.assert_array_equal(back.flows, plan.flows)


def test_degenerate_transport_problem():
    # many equal costs force degenerate pivots
    cost = np.ones((6, 4))
    cost[0, 0] = 2.0
    X, _ = transport_simplex(cost, np.full(6, 1.0), np.array([2.0, 2.0, 1.0, 1.0]))
    assert np.sum(cost * X) == pytest.approx(7.0)


def test_random_feasible_plan_is_feasible():
    rng = np.random.default_rng(3)
    inst = random_positive(30, 3, "S", seed=1)
    plan = random_feasible_plan(inst, rng)
    np.testing.assert_allclose(plan.flows.sum(axis=1), inst.weights)
    assert np.all(plan.served <= inst.capacities + 1e-12)
    assert np.all(plan.flows >= -1e-15)
