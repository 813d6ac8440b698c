import itertools

import numpy as np
import pytest

from partition_opt import (
    CoalitionGame,
    CoreStatus,
    ProblemInstance,
    build_game,
    check_superadditive,
    coalition_value,
    core_check,
    core_check_n3,
    random_positive,
    super_agent,
    uniform_grid_multiplicative,
)
from partition_opt.games import cardinality_order, mask_of, members, partitions_of

PAIR_GAME = [0, 0, 0, 0, 0.75, 0.75, 0.75, 1]


@pytest.fixture(scope="module")
def grid_124():
    return uniform_grid_multiplicative(600, [1, 2, 4], [1 / 3, 1 / 3, 1 / 3])


def test_masks():
    assert mask_of([0, 2]) == 0b101
    assert members(0b110) == [1, 2]
    assert cardinality_order(3) == [0, 1, 2, 4, 3, 5, 6, 7]


def test_super_agent(two_point):
    psi, m = super_agent(two_point, [0, 1])
    np.testing.assert_array_equal(psi, [1, 1])
    assert m == 1.0
    psi, _ = super_agent(two_point, [0])
    np.testing.assert_array_equal(psi, two_point.wisdoms[0])
    with pytest.raises(ValueError):
        super_agent(two_point, [])


def test_super_agent_multiplicative():
    inst = uniform_grid_multiplicative(10, [1, 2, 5], [0.2, 0.3, 0.5])
    psi, m = super_agent(inst, [0, 1])
    np.testing.assert_allclose(psi, 2 * inst.wisdoms[0])
    assert m == pytest.approx(0.5)


def test_coalition_values(grid_124):
    assert coalition_value(grid_124, [2]) == pytest.approx(10 / 9, abs=1e-9)
    assert coalition_value(grid_124, [0, 1]) == pytest.approx(4 / 9, abs=1e-9)
    assert coalition_value(grid_124, [0, 1, 2]) == pytest.approx(2.0, abs=1e-12)


def test_coalition_value_rejects_unsaturated():
    with pytest.raises(ValueError):
        coalition_value(random_positive(10, 3, "US", seed=1), [0])


def test_build_game(grid_124):
    game = build_game(grid_124)
    expected = [0, 1 / 18, 1 / 9, 10 / 9, 4 / 9, 16 / 9, 16 / 9, 2]
    np.testing.assert_allclose(game.in_cardinality_order(), expected, atol=1e-9)


def test_single_agent_game():
    inst = ProblemInstance.from_arrays([0.5, 0.5], [[2.0, 4.0]], [1.0])
    np.testing.assert_allclose(build_game(inst).values, [0, 3.0])


def test_relabeling_permutes_values():
    inst = random_positive(40, 3, "S", seed=3)
    game = build_game(inst)
    perm = [2, 0, 1]
    swapped = inst.replace(wisdoms=inst.wisdoms[perm], capacities=inst.capacities[perm])
    g2 = build_game(swapped)
    for mask in range(8):
        relabeled = mask_of(perm.index(i) for i in members(mask))
        assert g2.values[relabeled] == pytest.approx(game.values[mask], abs=1e-10)


def test_threads_do_not_change_values(monkeypatch):
    inst = random_positive(40, 4, "S", seed=8)
    serial = build_game(inst).values
    monkeypatch.setenv("PARTITION_OPT_THREADS", "4")
    np.testing.assert_array_equal(build_game(inst).values, serial)


def test_structural_properties_of_built_games():
    for seed in range(8):
        inst = random_positive(30, 3, "S", seed=seed)
        game = build_game(inst)
        v = game.values
        assert v[0] == 0 and np.all(v >= 0)
        full = game.grand_mask
        for mask in range(1, full):
            # a coalition and its complement cannot beat the grand coalition
            assert v[mask] + v[full & ~mask] <= v[full] + 1e-9
            for sub in range(1, 8):
                if sub & mask == sub:
                    assert v[sub] <= v[mask] + 1e-9


def test_superadditivity_examples():
    assert check_superadditive(CoalitionGame(2, [0, 1, 1, 1])) == [(1, 2)]
    assert check_superadditive(CoalitionGame.from_cardinality_order(3, PAIR_GAME)) == []


def test_core_pair_game():
    cert = core_check(CoalitionGame.from_cardinality_order(3, PAIR_GAME))
    assert cert.status is CoreStatus.EMPTY and not cert.boundary
    weights = dict(cert.violating_collection)
    assert weights == pytest.approx({0b011: 0.5, 0b101: 0.5, 0b110: 0.5})
    assert sum(w * 0.75 for w in weights.values()) == pytest.approx(9 / 8)
    assert core_check_n3(CoalitionGame.from_cardinality_order(3, PAIR_GAME)) is CoreStatus.EMPTY


def test_core_additive_game():
    # the core is the single point (1, 2, 3); the LP hits the grand value exactly
    game = CoalitionGame.from_cardinality_order(3, [0, 1, 2, 3, 3, 4, 5, 6])
    cert = core_check(game)
    assert cert.boundary
    np.testing.assert_allclose(cert.allocation, [1, 2, 3], atol=1e-9)


def test_core_boundary_multiplicative(grid_124):
    cert = core_check(build_game(grid_124))
    assert cert.status is CoreStatus.EMPTY and cert.boundary
    assert core_check_n3(build_game(grid_124)) is CoreStatus.EMPTY


def test_core_nonempty_allocation():
    inst = uniform_grid_multiplicative(600, [1, 2, 5], [1 / 3, 1 / 3, 1 / 3])
    game = build_game(inst)
    cert = core_check(game)
    assert cert.status is CoreStatus.NON_EMPTY
    x = cert.allocation
    assert x.sum() <= game.grand_value + 1e-9
    for mask in range(1, 8):
        assert x[members(mask)].sum() >= game.values[mask] - 1e-9
    assert core_check_n3(game) is CoreStatus.NON_EMPTY


def _random_superadditive_n3(rng):
    singles = rng.uniform(0, 1, size=3)
    v = np.zeros(8)
    for i in range(3):
        v[1 << i] = singles[i]
    for a, b in itertools.combinations(range(3), 2):
        v[(1 << a) | (1 << b)] = singles[a] + singles[b] + rng.uniform(0, 1)
    best = max(v[m] + v[7 & ~m] for m in range(1, 7))
    v[7] = best + rng.uniform(0, 1.5)
    return CoalitionGame(3, v)


def test_n3_criterion_agrees_with_lp():
    rng = np.random.default_rng(4)
    seen = set()
    for _ in range(200):
        game = _random_superadditive_n3(rng)
        a = core_check(game).status
        assert core_check_n3(game) is a
        seen.add(a)
    assert seen == {CoreStatus.EMPTY, CoreStatus.NON_EMPTY}


def test_balanced_certificate_identity():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(2, 5))
        v = np.concatenate([[0.0], rng.uniform(0, 1, size=(1 << n) - 1)])
        cert = core_check(CoalitionGame(n, v))
        if cert.status is CoreStatus.EMPTY:
            share = np.zeros(n)
            for mask, w in cert.violating_collection:
                share[members(mask)] += w
            np.testing.assert_allclose(share, 1.0, atol=1e-9)
            total = sum(w * v[m] for m, w in cert.violating_collection)
            assert total >= v[-1] - 1e-9


def test_nonempty_core_implies_partition_bound():
    rng = np.random.default_rng(6)
    for _ in range(50):
        n = int(rng.integers(2, 5))
        v = np.concatenate([[0.0], rng.uniform(0, 1, size=(1 << n) - 1)])
        v[-1] += rng.uniform(0, 3)
        game = CoalitionGame(n, v)
        if core_check(game).status is CoreStatus.NON_EMPTY:
            for blocks in partitions_of(game.grand_mask):
                assert sum(v[b] for b in blocks) <= v[-1] + 1e-9


def test_partitions_count():
    # Bell numbers
    assert [len(list(partitions_of((1 << k) - 1))) for k in range(1, 6)] == [1, 2, 5, 15, 52]


def test_game_serialization():
    game = CoalitionGame.from_cardinality_order(3, PAIR_GAME)
    back = CoalitionGame.from_dict(game.to_dict())
    assert back.n_agents == 3
    np.testing.assert_array_equal(back.values, game.values)
    with pytest.raises(ValueError):
        CoalitionGame(2, [1, 0, 0, 0])
