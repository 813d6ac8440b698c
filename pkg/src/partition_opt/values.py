"""
Partitions induced by prices, total profit, individual values and the split
of each individual value into an agent part and a consumer part.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from ._cells import TieRule, Variant, as_prices, choose


@dataclass(frozen=True)
class Partition:
    """Fractional assignment of point mass; column ``N`` is opt-out."""

    assignment: np.ndarray
    tie_points: tuple = ()

    @property
    def cell_masses(self):
        return self.assignment.sum(axis=0)

    @property
    def n_agents(self):
        return self.assignment.shape[1] - 1


@dataclass(frozen=True)
class ValueReport:
    individual_values: np.ndarray
    agent_profits: np.ndarray
    consumer_surpluses: np.ndarray
    served: np.ndarray

    @property
    def total(self):
        return float(np.sum(self.individual_values))

    def to_dict(self):
        return {
            "individual_values": self.individual_values.tolist(),
            "agent_profits": self.agent_profits.tolist(),
            "consumer_surpluses": self.consumer_surpluses.tolist(),
            "served": self.served.tolist(),
            "total": self.total,
        }

    def to_csv(self):
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["agent", "individual_value", "agent_profit", "consumer_surplus", "mass"])
        for i in range(self.individual_values.size):
            out.writerow(
                [
                    i,
                    repr(float(self.individual_values[i])),
                    repr(float(self.agent_profits[i])),
                    repr(float(self.consumer_surpluses[i])),
                    repr(float(self.served[i])),
                ]
            )
        return buf.getvalue()


def extract_partition(instance, p, variant=Variant.FREE, tie_rule=TieRule.LOWEST_INDEX):
    """Partition chosen by consumers facing prices ``p``.

    Examples
    --------
    >>> from partition_opt import ProblemInstance
    >>> inst = ProblemInstance.from_arrays([.5, .5], [[1, 0], [0, 1]], [.5, .5])
    >>> extract_partition(inst, [0, 0]).cell_masses
    array([0.5, 0.5, 0. ])
    """
    assignment, tied = choose(instance, p, variant, tie_rule)
    return Partition(assignment, tuple(int(k) for k in np.flatnonzero(tied)))


def _check(instance, partition):
    a = partition.assignment
    if a.shape != (instance.n_points, instance.n_agents + 1):
        raise ValueError(
            f"partition: shape {a.shape} does not match instance "
            f"({instance.n_points}, {instance.n_agents + 1})"
        )
    return a


def individual_values(instance, partition):
    a = _check(instance, partition)
    return np.einsum("xi,ix->i", a[:, :-1], instance.wisdoms)


def total_profit(instance, partition):
    return float(np.sum(individual_values(instance, partition)))


def value_decomposition(instance, partition, p):
    """Agent profit ``p_i * served_i`` and consumer surplus per agent.

    Served mass is used instead of the nominal capacity so that the two
    parts always add up to the individual value.
    """
    a = _check(instance, partition)
    p = as_prices(p, instance.n_agents)
    served = a[:, :-1].sum(axis=0)
    v_agent = p * served
    net = instance.wisdoms - p[:, None]
    v_consumer = np.einsum("xi,ix->i", a[:, :-1], net)
    return v_agent, v_consumer


def value_report(instance, partition, p):
    v_agent, v_consumer = value_decomposition(instance, partition, p)
    return ValueReport(
        individual_values(instance, partition),
        v_agent,
        v_consumer,
        partition.assignment[:, :-1].sum(axis=0),
    )
