"""
Dual functionals of the partition problem and equilibrium prices.

For prices ``p`` the free functional is

    Xi(p)  = sum_x w_x max_i (psi_i(x) - p_i)

and the clipped one replaces the max by ``max(0, max_i(...))`` so that
consumers may opt out. Equilibrium prices minimize ``Xi(p) + p.M`` (clipped
variant, ``p >= 0``, when the agents have spare capacity) and the minimum
equals the maximal total profit.
"""

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ._cells import TieRule, Variant, as_prices, choose, tie_tolerance
from .measure import ProblemInstance, Regime, ZeroWisdomWarning
from .values import Partition

SOLUTION_TIE_ATOL = 1e-9


class Normalization(str, Enum):
    SUM_ZERO = "SumZero"
    MAX_SHIFT = "MaxShift"
    NON_NEGATIVE = "NonNegative"
    RAW = "Raw"


@dataclass(frozen=True)
class PriceVector:
    prices: np.ndarray
    normalization: Normalization = Normalization.RAW

    def __post_init__(self):
        p = np.array(self.prices, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "prices", p)
        object.__setattr__(self, "normalization", Normalization(self.normalization))
        if self.normalization is Normalization.SUM_ZERO:
            if abs(p.sum()) > 1e-9 * (1 + np.max(np.abs(p), initial=0.0)):
                raise ValueError("SumZero prices must sum to zero")
        elif self.normalization is Normalization.NON_NEGATIVE:
            if np.any(p < -1e-12):
                raise ValueError("NonNegative prices must be >= 0")

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.prices, dtype=dtype)

    def __len__(self):
        return self.prices.size


@dataclass(frozen=True)
class DualReport:
    price: PriceVector
    dual_value: float
    residuals: np.ndarray  # M_i - served_i
    served: np.ndarray
    iterations: int
    tie_mass: float
    converged: bool
    method: str
    partition: Partition = field(repr=False, default=None)

    def to_dict(self):
        return {
            "prices": self.price.prices.tolist(),
            "normalization": self.price.normalization.value,
            "dual_value": float(self.dual_value),
            "residuals": self.residuals.tolist(),
            "served": self.served.tolist(),
            "iterations": int(self.iterations),
            "tie_mass": float(self.tie_mass),
            "converged": bool(self.converged),
            "method": self.method,
        }


# --------------------------------------------------------------------------
# functionals


def eval_xi(instance, p, variant=Variant.FREE):
    """Value of the free or clipped dual functional at ``p``."""
    p = as_prices(p, instance.n_agents)
    best = (instance.wisdoms - p[:, None]).max(axis=0)
    if Variant(variant) is Variant.CLIPPED:
        best = np.maximum(best, 0.0)
    return float(instance.weights @ best)


def subgradient_xi(instance, p, variant=Variant.FREE, tie_rule=TieRule.LOWEST_INDEX):
    """Minus the mass each agent receives; a subgradient for any tie rule."""
    assignment, _ = choose(instance, p, variant, tie_rule)
    return -assignment[:, :-1].sum(axis=0)


def dual_objective(instance, p, variant=Variant.FREE):
    p = as_prices(p, instance.n_agents)
    return eval_xi(instance, p, variant) + float(p @ instance.capacities)


def normalize_price(instance, p):
    """Shift all prices up as far as possible while everyone stays served.

    The shift is ``min_x max_i (psi_i(x) - p_i)``; afterwards the least happy
    consumer has zero net utility.
    """
    if instance.regime.tag is Regime.UNDER:
        raise ValueError("normalize_price: only defined for saturated or over-saturated instances")
    p = as_prices(p, instance.n_agents)
    gamma = float((instance.wisdoms - p[:, None]).max(axis=0).min())
    return PriceVector(p + gamma, Normalization.MAX_SHIFT)


# --------------------------------------------------------------------------
# solvers


def with_null_agent(instance):
    """Append a zero-wisdom agent absorbing the unserved mass."""
    slack = max(instance.total_mass - float(np.sum(instance.capacities)), 0.0)
    psi = np.vstack([instance.wisdoms, np.zeros((1, instance.n_points))])
    cap = np.append(instance.capacities, slack)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroWisdomWarning)
        return ProblemInstance(instance.measure, psi, cap, {"null_agent": True})


_HIGHS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _epigraph_lp(psi, w, M, sum_zero=False, pinned=None, nonneg=False, clipped=False):
    """min_p sum_x w_x u_x + p.M  s.t.  u_x >= psi_i(x) - p_i.

    Returns prices, the flows read off the constraint multipliers
    (``n x N``) and the simplex iteration count.
    """
    N, n = psi.shape
    rows = np.arange(N * n)
    agent = np.repeat(np.arange(N), n)
    point = np.tile(np.arange(n), N)
    A = sparse.csr_matrix(
        (-np.ones(2 * N * n), (np.concatenate([rows, rows]), np.concatenate([agent, N + point]))),
        shape=(N * n, N + n),
    )
    c = np.concatenate([M, w])
    p_bounds = [(0, None) if nonneg else (None, None)] * N
    if pinned is not None:
        p_bounds[pinned] = (0, 0)
    u_bounds = [(0, None) if clipped else (None, None)] * n
    kw = {}
    if sum_zero:
        kw = {"A_eq": np.concatenate([np.ones(N), np.zeros(n)])[None, :], "b_eq": [0.0]}
    res = linprog(
        c,
        A_ub=A,
        b_ub=-psi.ravel(),
        bounds=p_bounds + u_bounds,
        method="highs-ds",
        options=_HIGHS,
        **kw,
    )
    if res.status != 0:
        raise RuntimeError(f"dual LP failed: {res.message}")
    flows = np.maximum(-res.ineqlin.marginals, 0.0).reshape(N, n).T
    return res.x[:N], flows, int(res.nit)


def _clean_plan(instance, p, variant, flows):
    """Exact mass on strict argmax cells; LP flows only on tied cells."""
    N = instance.n_agents
    w = instance.weights
    net = instance.wisdoms - p[:, None]
    options = np.vstack([net, np.zeros((1, net.shape[1]))]) if variant is Variant.CLIPPED else net
    best = options.max(axis=0)
    hit = options >= best - tie_tolerance(net, SOLUTION_TIE_ATOL)
    tied = hit.sum(axis=0) > 1
    plan = np.zeros((instance.n_points, N + 1))
    full = np.zeros_like(plan)
    full[:, : flows.shape[1]] = flows
    if variant is Variant.CLIPPED:
        full[:, N] = np.maximum(w - flows[:, :N].sum(axis=1), 0.0)
    for x in range(instance.n_points):
        k = np.flatnonzero(hit[:, x])
        if k.size == 1:
            plan[x, k[0]] = w[x]
            continue
        share = full[x, k]
        s = share.sum()
        plan[x, k] = w[x] * (share / s if s > 0 else 1.0 / k.size)
    return plan, tied


def _levelset_two_agents(instance):
    """Saturated two-agent case: agent 0 takes the ``M_0`` mass where
    ``psi_0 - psi_1`` is largest."""
    w = instance.weights
    gap = instance.wisdoms[0] - instance.wisdoms[1]
    order = np.argsort(-gap, kind="stable")
    m0 = float(instance.capacities[0])
    plan = np.zeros((instance.n_points, 3))
    plan[:, 1] = w
    filled = 0.0
    last = None
    eps = 1e-15 * instance.total_mass
    for k, x in enumerate(order):
        room = m0 - filled
        if room <= eps:
            break
        take = min(w[x], room)
        plan[x, 0] = take
        plan[x, 1] = w[x] - take
        filled += take
        last = k
    if last is None:
        d = gap[order[0]]
    elif plan[order[last], 1] > 0 or last + 1 == order.size:
        d = gap[order[last]]
    else:
        d = 0.5 * (gap[order[last]] + gap[order[last + 1]])
    p = np.array([d / 2, -d / 2]) + 0.0
    net = instance.wisdoms - p[:, None]
    tied = np.abs(net[0] - net[1]) <= tie_tolerance(net, SOLUTION_TIE_ATOL)
    return p, plan, tied


def _projected_subgradient(instance, variant, project, max_iterations, target=None):
    N = instance.n_agents
    M = instance.capacities
    p = project(np.zeros(N))
    best_p, best_f = p.copy(), dual_objective(instance, p, variant)
    step0 = max(1.0, float(np.max(instance.wisdoms)))
    k = 0
    for k in range(1, max_iterations + 1):
        g = subgradient_xi(instance, p, variant) + M
        gg = float(g @ g)
        if gg == 0.0:
            break
        f = dual_objective(instance, p, variant)
        if target is not None and f > target:
            step = (f - target) / gg
        else:
            step = step0 / np.sqrt(k) / np.sqrt(gg)
        p = project(p - step * g)
        f = dual_objective(instance, p, variant)
        if f < best_f:
            best_p, best_f = p.copy(), f
    return best_p, k


def solve_dual(
    instance,
    tolerance=1e-8,
    max_iterations=100_000,
    tie_rule=TieRule.LOWEST_INDEX,
    method="auto",
    target=None,
):
    """Equilibrium prices by minimizing the regime's dual objective.

    Saturated: free functional on ``sum(p) = 0``. Under-saturated: a null
    agent with zero wisdom and the missing capacity is appended and its price
    pinned at 0. Over-saturated: clipped functional over ``p >= 0``.

    ``method`` is ``"lp"`` (exact epigraph LP), ``"levelset"`` (saturated two
    agent instances only, exact), ``"subgradient"`` (projected subgradient,
    approximate; ``target`` enables Polyak steps) or ``"auto"``.

    The returned report carries the partition. When the argmax cells under
    ``tie_rule`` cannot meet the capacities, tied mass is split fractionally
    and the affected mass is reported as ``tie_mass``.
    """
    tie_rule = TieRule(tie_rule)
    regime = instance.regime.tag
    N = instance.n_agents
    if method == "auto":
        method = "levelset" if (N == 2 and regime is Regime.SATURATED) else "lp"
    if method == "levelset" and not (N == 2 and regime is Regime.SATURATED):
        raise ValueError("levelset method needs a saturated two-agent instance")

    if regime is Regime.OVER:
        work, variant, norm = instance, Variant.CLIPPED, Normalization.NON_NEGATIVE
    elif regime is Regime.UNDER:
        work, variant, norm = with_null_agent(instance), Variant.FREE, Normalization.RAW
    else:
        work, variant, norm = instance, Variant.FREE, Normalization.SUM_ZERO

    plan = None
    if method == "levelset":
        p, plan3, tied = _levelset_two_agents(instance)
        plan, iterations = plan3, 1
    elif method == "lp":
        p, flows, iterations = _epigraph_lp(
            work.wisdoms,
            work.weights,
            work.capacities,
            sum_zero=regime is Regime.SATURATED,
            pinned=N if regime is Regime.UNDER else None,
            nonneg=regime is Regime.OVER,
            clipped=regime is Regime.OVER,
        )
        if regime is Regime.SATURATED:
            p = p - p.mean()
        plan, tied = _clean_plan(work, p, variant, flows)
    elif method == "subgradient":
        if regime is Regime.SATURATED:
            project = lambda q: q - q.mean()  # noqa: E731
        elif regime is Regime.UNDER:
            project = lambda q: np.append(q[:N], 0.0)  # noqa: E731
        else:
            project = lambda q: np.maximum(q, 0.0)  # noqa: E731
        p, iterations = _projected_subgradient(work, variant, project, max_iterations, target)
        plan, tied = choose(work, p, variant, tie_rule)
    else:
        raise ValueError(f"unknown method {method!r}")

    if regime is Regime.UNDER:
        # fold the null agent into the opt-out column
        plan = np.column_stack([plan[:, :N], plan[:, N] + plan[:, N + 1]])
        p = p[:N]
    served = plan[:, :N].sum(axis=0)

    if method != "subgradient":
        # prefer the plain tie rule when it already meets the capacities
        simple, _ = choose(work, np.append(p, 0.0) if regime is Regime.UNDER else p, variant, tie_rule)
        if regime is Regime.UNDER:
            simple = np.column_stack([simple[:, :N], simple[:, N] + simple[:, N + 1]])
        if _meets(instance, simple[:, :N].sum(axis=0), p, tolerance):
            plan = simple
            served = plan[:, :N].sum(axis=0)

    tie_mass = float(instance.weights[tied].sum())
    residuals = instance.capacities - served
    converged = _meets(instance, served, p, tolerance)
    p = p + 0.0  # no negative zeros in reports
    price = PriceVector(p, norm)
    dual_value = dual_objective(instance, p, Variant.FREE if regime is Regime.SATURATED else Variant.CLIPPED)
    tie_points = tuple(int(k) for k in np.flatnonzero(tied))
    return DualReport(
        price,
        dual_value,
        residuals,
        served,
        int(iterations),
        tie_mass,
        bool(converged),
        method,
        Partition(plan, tie_points),
    )


def _meets(instance, served, p, tolerance):
    mu = instance.total_mass
    M = instance.capacities
    tag = instance.regime.tag
    if tag is Regime.OVER:
        if np.any(served > M + tolerance * mu):
            return False
        if np.any(np.abs(p * (M - served)) > tolerance * max(1.0, mu)):
            return False
        return True
    return bool(np.max(np.abs(M - served), initial=0.0) <= tolerance * mu)
