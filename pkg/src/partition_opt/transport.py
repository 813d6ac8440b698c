"""
Exact primal solver: the fractional partition problem as a transportation
problem between consumer points and agents (plus a null agent), solved with a
self-contained transportation simplex.
"""

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TransportPlan:
    """``flows[x, i]`` is the mass of point ``x`` served by agent ``i``;
    column ``N`` holds unserved mass."""

    flows: np.ndarray
    objective: float
    iterations: int = 0

    @property
    def served(self):
        return self.flows[:, :-1].sum(axis=0)

    def to_dict(self, atol=0.0):
        triples = [
            [int(x), int(i), float(self.flows[x, i])]
            for x, i in zip(*np.nonzero(self.flows > atol))
        ]
        return {"flows": triples, "objective": float(self.objective)}

    @classmethod
    def from_dict(cls, data, n_points, n_agents):
        flows = np.zeros((n_points, n_agents + 1))
        for x, i, m in data["flows"]:
            flows[int(x), int(i)] = float(m)
        return cls(flows, float(data["objective"]))


class _Tree:
    """Spanning-tree basis over row nodes ``0..m-1`` and column nodes ``m..``."""

    def __init__(self, m, k):
        self.m = m
        self.adj = [set() for _ in range(m + k)]

    def add(self, r, c):
        self.adj[r].add(self.m + c)
        self.adj[self.m + c].add(r)

    def remove(self, r, c):
        self.adj[r].discard(self.m + c)
        self.adj[self.m + c].discard(r)

    def walk(self, cost):
        """Potentials ``u, v`` with ``u_r + v_c = cost[r, c]`` on basic cells,
        plus BFS parent pointers and depths rooted at row 0."""
        m = self.m
        total = len(self.adj)
        pot = np.zeros(total)
        parent = np.full(total, -1)
        depth = np.full(total, -1)
        depth[0] = 0
        queue = deque([0])
        while queue:
            a = queue.popleft()
            for b in self.adj[a]:
                if depth[b] >= 0:
                    continue
                depth[b] = depth[a] + 1
                parent[b] = a
                r, c = (a, b - m) if a < m else (b, a - m)
                pot[b] = cost[r, c] - pot[a]
                queue.append(b)
        if np.any(depth < 0):
            raise RuntimeError("transportation basis is not a spanning tree")
        return pot[:m], pot[m:], parent, depth


def _cycle(tree, parent, depth, r, c):
    """Cells of the pivot cycle started by entering cell ``(r, c)``.

    Signs alternate ``+ - + ...`` starting with the entering cell.
    """
    m = tree.m
    a, b = m + c, r
    left, right = [a], [b]
    while depth[a] > depth[b]:
        a = parent[a]
        left.append(a)
    while depth[b] > depth[a]:
        b = parent[b]
        right.append(b)
    while a != b:
        a, b = parent[a], parent[b]
        left.append(a)
        right.append(b)
    nodes = left + right[-2::-1]  # column c ... lca ... row r
    cells = [(r, c)]
    for s, t in zip(nodes[:-1], nodes[1:]):
        cells.append((s, t - m) if s < m else (t, s - m))
    return cells


def _initial_basis(supply, demand, order):
    """Northwest corner over rows visited in ``order``; returns basic cells and
    their values (exactly ``m + k - 1`` cells)."""
    m, k = supply.size, demand.size
    s = supply.astype(float).copy()
    d = demand.astype(float).copy()
    X = np.zeros((m, k))
    basis = []
    ri, c = 0, 0
    while True:
        r = order[ri]
        q = min(s[r], d[c])
        X[r, c] = q
        basis.append((r, c))
        s[r] -= q
        d[c] -= q
        if ri == m - 1 and c == k - 1:
            break
        if ri == m - 1:
            c += 1
        elif c == k - 1:
            ri += 1
        elif s[r] < d[c]:
            ri += 1
        else:
            c += 1
    return basis, X


def transport_simplex(cost, supply, demand, max_iterations=100_000, bland_after=50):
    """Maximize ``sum cost * X`` over the balanced transportation polytope.

    Dantzig entering rule, switching to Bland's rule after ``bland_after``
    consecutive degenerate pivots. Ties for the leaving cell are broken by
    ``(cost, column, row)``.
    """
    cost = np.asarray(cost, dtype=float)
    m, k = cost.shape
    # rows preferring the same column next to each other gives a good start
    order = np.lexsort((np.arange(m), np.argmax(cost, axis=1)))
    basis, X = _initial_basis(supply, demand, order)
    tree = _Tree(m, k)
    for r, c in basis:
        tree.add(r, c)
    is_basic = np.zeros((m, k), dtype=bool)
    for r, c in basis:
        is_basic[r, c] = True

    scale = max(1.0, float(np.max(np.abs(cost)))) if cost.size else 1.0
    tol = 1e-12 * scale
    degenerate = 0
    it = 0
    for it in range(1, max_iterations + 1):
        u, v, parent, depth = tree.walk(cost)
        reduced = cost - u[:, None] - v[None, :]
        reduced[is_basic] = 0.0
        if degenerate >= bland_after:
            cand = np.flatnonzero(reduced.ravel() > tol)
            if cand.size == 0:
                break
            r, c = divmod(int(cand[0]), k)
        else:
            flat = int(np.argmax(reduced))
            if reduced.flat[flat] <= tol:
                break
            r, c = divmod(flat, k)
        cells = _cycle(tree, parent, depth, r, c)
        minus = cells[1::2]
        theta = min(X[a, b] for a, b in minus)
        leave = min(
            (cell for cell in minus if X[cell] == theta),
            key=lambda cell: (cost[cell], cell[1], cell[0]),
        )
        for idx, (a, b) in enumerate(cells):
            X[a, b] += theta if idx % 2 == 0 else -theta
        X[leave] = 0.0
        is_basic[leave] = False
        tree.remove(*leave)
        is_basic[r, c] = True
        tree.add(r, c)
        degenerate = degenerate + 1 if theta == 0.0 else 0
    else:
        raise RuntimeError(f"transportation simplex hit the iteration cap ({max_iterations})")
    np.maximum(X, 0.0, out=X)
    return X, it


def transportation_lp(instance, max_iterations=100_000):
    """Optimal fractional partition by the transportation simplex.

    Rows are consumer points (plus a dummy supply row when capacities exceed
    the mass); columns are agents plus a null column taking unserved mass.

    Examples
    --------
    >>> from partition_opt import ProblemInstance
    >>> inst = ProblemInstance.from_arrays([.5, .5], [[1, 0], [0, 1]], [.5, .25])
    >>> round(transportation_lp(inst).objective, 12)
    0.75
    """
    n, N = instance.n_points, instance.n_agents
    w = instance.weights
    M = instance.capacities
    excess = float(M.sum() - w.sum())
    supply = np.append(w, max(excess, 0.0))
    demand = np.concatenate([M, [max(-excess, 0.0)]])
    cost = np.zeros((n + 1, N + 1))
    cost[:n, :N] = instance.wisdoms.T
    X, iterations = transport_simplex(cost, supply, demand, max_iterations)
    flows = X[:n].copy()
    objective = float(np.sum(flows[:, :N] * instance.wisdoms.T))
    return TransportPlan(flows, objective, iterations)


def brute_force_tiny(instance, atol=1e-12):
    """Best integral assignment of whole points to agents or to nobody.

    Only for ``n <= 8`` and ``N <= 3`` with every capacity either at least the
    total mass or equal to a sum of point weights.
    """
    n, N = instance.n_points, instance.n_agents
    if n > 8 or N > 3:
        raise ValueError(f"brute_force_tiny: needs n <= 8 and N <= 3, got n={n}, N={N}")
    w = instance.weights
    sums = {0.0}
    for r in range(1, n + 1):
        for subset in itertools.combinations(range(n), r):
            sums.add(float(w[list(subset)].sum()))
    sums = np.array(sorted(sums))
    for i, cap in enumerate(instance.capacities):
        if cap < instance.total_mass - atol and np.min(np.abs(sums - cap)) > 1e-9:
            raise ValueError(f"brute_force_tiny: capacity {i} ({cap}) is not a sum of point weights")
    psi = instance.wisdoms
    best = -np.inf
    for choice in itertools.product(range(N + 1), repeat=n):
        choice = np.array(choice)
        load = np.bincount(choice, weights=w, minlength=N + 1)[:N]
        if np.any(load > instance.capacities + 1e-9):
            continue
        served = choice < N
        value = float(np.sum(w[served] * psi[choice[served], np.flatnonzero(served)]))
        best = max(best, value)
    return best


def random_feasible_plan(instance, rng):
    """A random feasible fractional plan; handy for weak-duality checks."""
    n, N = instance.n_points, instance.n_agents
    w = instance.weights
    share = rng.dirichlet(np.ones(N + 1), size=n) * w[:, None]
    load = share[:, :N].sum(axis=0)
    scale = np.minimum(1.0, instance.capacities / np.where(load > 0, load, 1.0))
    share[:, :N] *= scale
    share[:, N] = w - share[:, :N].sum(axis=1)
    objective = float(np.sum(share[:, :N] * instance.wisdoms.T))
    return TransportPlan(share, objective)

