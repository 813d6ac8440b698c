"""
Coalition/partition games built from an instance, super-additivity audits and
core stability via the balanced-collection linear program.

Subsets of agents are bitmasks: bit ``i`` set means agent ``i`` (0-based)
belongs to the coalition.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import linprog

from .measure import ProblemInstance, Regime
from .values import individual_values

MAX_AGENTS = 16
CORE_ATOL = 1e-9


def all_masks(n):
    return range(1, 1 << n)


def members(mask):
    return [i for i in range(mask.bit_length()) if mask >> i & 1]


def mask_of(agents):
    mask = 0
    for i in agents:
        mask |= 1 << int(i)
    return mask


def cardinality_order(n):
    """Masks sorted by coalition size, then lexicographically by members."""
    return sorted(range(1 << n), key=lambda m: (bin(m).count("1"), members(m)))


@dataclass(frozen=True)
class CoalitionGame:
    n_agents: int
    values: np.ndarray  # indexed by bitmask

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (1 << self.n_agents,):
            raise ValueError(f"game: expected {1 << self.n_agents} values, got {v.size}")
        if v[0] != 0.0:
            raise ValueError("game: value of the empty coalition must be 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def grand_mask(self):
        return (1 << self.n_agents) - 1

    @property
    def grand_value(self):
        return float(self.values[self.grand_mask])

    def value(self, agents):
        return float(self.values[mask_of(agents)])

    def in_cardinality_order(self):
        return self.values[cardinality_order(self.n_agents)]

    @classmethod
    def from_cardinality_order(cls, n, values):
        """Build from values listed as empty set, singletons, pairs, ..."""
        v = np.zeros(1 << n)
        v[cardinality_order(n)] = values
        return cls(n, v)

    def to_dict(self):
        return {"n": self.n_agents, "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(int(data["n"]), data["values"])


class CoreStatus(str, Enum):
    NON_EMPTY = "NonEmpty"
    EMPTY = "Empty"


@dataclass(frozen=True)
class CoreCertificate:
    status: CoreStatus
    allocation: np.ndarray = None
    violating_collection: list = field(default_factory=list)  # (mask, weight)
    lp_value: float = 0.0
    boundary: bool = False

    def to_dict(self):
        out = {"status": self.status.value, "boundary": self.boundary, "lp_value": self.lp_value}
        if self.allocation is not None:
            out["allocation"] = self.allocation.tolist()
        if self.violating_collection:
            out["violating_collection"] = [
                {"coalition": members(m), "mask": m, "weight": w} for m, w in self.violating_collection
            ]
        return out


# --------------------------------------------------------------------------
# building games


def super_agent(instance, J):
    """Pointwise-max wisdom and summed capacity of coalition ``J`` (mask or
    iterable of agent indices)."""
    idx = members(J) if isinstance(J, (int, np.integer)) else [int(i) for i in J]
    if not idx:
        raise ValueError("super_agent: empty coalition")
    return instance.wisdoms[idx].max(axis=0), float(instance.capacities[idx].sum())


def cartel_instance(instance, J):
    """Two-agent instance: coalition ``J`` (agent 0) against the rest."""
    mask = J if isinstance(J, (int, np.integer)) else mask_of(J)
    rest = ((1 << instance.n_agents) - 1) & ~mask
    psi_j, m_j = super_agent(instance, mask)
    psi_r, m_r = super_agent(instance, rest)
    return ProblemInstance(
        instance.measure,
        np.vstack([psi_j, psi_r]),
        np.array([m_j, m_r]),
        {"coalition": members(mask)},
    )


def coalition_value(instance, J, method="lp"):
    """Individual value of coalition ``J`` acting as one agent against the
    complementary coalition, at a saturated optimum."""
    from .duality import solve_dual

    if instance.regime.tag is not Regime.SATURATED:
        raise ValueError("coalition games are defined for saturated instances only")
    mask = J if isinstance(J, (int, np.integer)) else mask_of(J)
    full = (1 << instance.n_agents) - 1
    if mask == 0:
        return 0.0
    if mask == full:
        return float(instance.weights @ instance.wisdoms.max(axis=0))
    duo = cartel_instance(instance, mask)
    report = solve_dual(duo, method=method)
    if not report.converged:
        raise RuntimeError(f"coalition {members(mask)}: dual solve did not converge")
    return float(individual_values(duo, report.partition)[0])


def _threads():
    try:
        return max(1, int(os.environ.get("PARTITION_OPT_THREADS", "1")))
    except ValueError:
        return 1


def build_game(instance, method="lp"):
    N = instance.n_agents
    if N > MAX_AGENTS:
        raise ValueError(f"build_game: at most {MAX_AGENTS} agents, got {N}")
    masks = list(all_masks(N))
    values = np.zeros(1 << N)
    work = lambda m: coalition_value(instance, m, method)  # noqa: E731
    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, masks))
    else:
        results = [work(m) for m in masks]
    values[masks] = results
    return CoalitionGame(N, values)


# --------------------------------------------------------------------------
# audits


def check_superadditive(game, atol=CORE_ATOL):
    """Disjoint pairs ``(J1, J2)`` with ``v(J1) + v(J2) > v(J1 | J2)``."""
    v = game.values
    out = []
    for a in all_masks(game.n_agents):
        rest = game.grand_mask & ~a
        b = rest
        while b:
            if a < b and v[a] + v[b] > v[a | b] + atol:
                out.append((a, b))
            b = (b - 1) & rest
    return sorted(out)


def core_check(game, atol=CORE_ATOL):
    """Bondareva-Shapley test.

    Minimizes the total allocation subject to every proper coalition getting
    its value. The core is empty when that minimum exceeds the grand value;
    the LP dual then gives a balanced collection with weighted value above
    the grand value. A minimum within ``atol * (1 + |v(I)|)`` of the grand
    value is reported as empty with ``boundary=True`` (the core degenerates
    to a face); an allocation is still attached.
    """
    N = game.n_agents
    grand = game.grand_value
    if N == 1:
        return CoreCertificate(CoreStatus.NON_EMPTY, np.array([grand]), [], grand)
    masks = [m for m in all_masks(N) if m != game.grand_mask]
    A = np.array([[-(m >> i & 1) for i in range(N)] for m in masks], dtype=float)
    b = -game.values[masks]
    res = linprog(
        np.ones(N),
        A_ub=A,
        b_ub=b,
        bounds=[(None, None)] * N,
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise RuntimeError(f"core LP failed: {res.message}")
    opt = float(res.fun)
    band = atol * (1 + abs(grand))
    weights = -res.ineqlin.marginals
    collection = [(m, float(w)) for m, w in zip(masks, weights) if w > 1e-12]
    if opt < grand - band:
        x = res.x.copy()
        x[0] += grand - x.sum()  # hand the slack to someone; keeps all constraints
        return CoreCertificate(CoreStatus.NON_EMPTY, x, [], opt)
    boundary = opt <= grand + band
    return CoreCertificate(
        CoreStatus.EMPTY,
        res.x.copy() if boundary else None,
        collection,
        opt,
        boundary,
    )


def core_check_n3(game, atol=CORE_ATOL):
    """Three-player super-additive game: core nonempty iff the pair values
    sum to strictly less than twice the grand value."""
    if game.n_agents != 3:
        raise ValueError("core_check_n3: needs exactly three players")
    if check_superadditive(game, atol):
        raise ValueError("core_check_n3: game is not super-additive")
    v = game.values
    pairs = v[0b011] + v[0b101] + v[0b110]
    grand = game.grand_value
    if pairs < 2 * grand - 2 * atol * (1 + abs(grand)):
        return CoreStatus.NON_EMPTY
    return CoreStatus.EMPTY


def partitions_of(mask):
    """All partitions of the members of ``mask`` into nonempty blocks."""
    if mask == 0:
        yield []
        return
    low = mask & -mask
    rest = mask & ~low
    sub = rest
    while True:
        block = low | sub
        for tail in partitions_of(rest & ~sub):
            yield [block] + tail
        if sub == 0:
            break
        sub = (sub - 1) & rest
