"""Argmax cells of the net utility ``psi_i(x) - p_i`` with tie handling."""

from enum import Enum

import numpy as np

from .measure import TIE_ATOL


class Variant(str, Enum):
    CLIPPED = "Clipped"  # consumers may opt out (net utility clipped at 0)
    FREE = "Free"  # everyone is served


class TieRule(str, Enum):
    LOWEST_INDEX = "LowestIndex"
    PROPORTIONAL = "ProportionalSplit"


def as_prices(p, n_agents):
    p = np.asarray(getattr(p, "prices", p), dtype=float)
    if p.shape != (n_agents,):
        raise ValueError(f"prices: expected {n_agents} entries, got shape {p.shape}")
    return p


def tie_tolerance(net, atol=TIE_ATOL):
    return atol * max(1.0, float(np.max(np.abs(net))) if net.size else 1.0)


def choose(instance, p, variant=Variant.FREE, tie_rule=TieRule.LOWEST_INDEX, atol=TIE_ATOL):
    """Split each point's mass over agents and the opt-out column.

    Returns ``(assignment, tied)`` where ``assignment`` is ``n x (N+1)``
    (last column is opt-out) and ``tied`` flags points whose best option is
    not unique within ``atol`` (scaled by the utility magnitude).

    Under ``LowestIndex`` the opt-out option counts as index 0, so a consumer
    indifferent between an agent and opting out opts out.
    """
    variant = Variant(variant)
    tie_rule = TieRule(tie_rule)
    N = instance.n_agents
    p = as_prices(p, N)
    net = instance.wisdoms - p[:, None]
    n = net.shape[1]
    if variant is Variant.CLIPPED:
        options = np.vstack([net, np.zeros((1, n))])
    else:
        options = net
    best = options.max(axis=0)
    tol = tie_tolerance(net, atol)
    hit = options >= best - tol
    count = hit.sum(axis=0)
    tied = count > 1
    frac = np.zeros((N + 1, n))
    if tie_rule is TieRule.PROPORTIONAL:
        frac[: options.shape[0]] = hit / count
    else:
        first = np.argmax(hit, axis=0)
        if variant is Variant.CLIPPED:
            first = np.where(hit[N], N, first)
        frac[first, np.arange(n)] = 1.0
    assignment = (frac * instance.weights[None, :]).T
    return assignment, tied
