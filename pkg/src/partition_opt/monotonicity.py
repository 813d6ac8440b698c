"""
How an agent's individual value reacts when only that agent's wisdom changes.

Bounds checked here, with ``old``/``new`` the agent's value before and after:

* scaling the row by ``beta > 1`` gives ``new >= beta * old`` (``<=`` for
  ``beta < 1``);
* adding a constant ``c`` (saturated or under-saturated) gives exactly
  ``new = old + c * M``;
* any row ``>= beta * row`` with ``beta > 1`` gives ``new >= (beta - 1) old``;
* a row between ``beta * row`` and ``beta * row + c`` with ``1 < beta < 2``
  gives ``new >= old - M c (2 - beta) / (beta - 1)``.

The two ``build_sharpness_*`` functions produce two-agent interval instances
on which the last two bounds are nearly attained.
"""

import csv
import io
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .duality import solve_dual
from .measure import Regime, bump_profile
from .values import individual_values

SLACK = 1e-9
FLOOR = 0.01
X1, X2 = 0.25, 0.75


class PerturbationKind(str, Enum):
    SCALE = "Scale"
    SHIFT = "Shift"
    GENERAL = "General"


@dataclass(frozen=True)
class PerturbationSpec:
    kind: PerturbationKind
    agent: int = 0
    factor: float = 1.0  # Scale
    amount: float = 0.0  # Shift
    row: np.ndarray = None  # General

    def __post_init__(self):
        object.__setattr__(self, "kind", PerturbationKind(self.kind))
        if self.kind is PerturbationKind.SCALE and not self.factor > 0:
            raise ValueError("Scale factor must be positive")
        if self.kind is PerturbationKind.SHIFT and self.amount < 0:
            raise ValueError("Shift amount must be nonnegative")
        if self.kind is PerturbationKind.GENERAL:
            if self.row is None:
                raise ValueError("General perturbation needs a row")
            row = np.array(self.row, dtype=float)
            if np.any(row < 0):
                raise ValueError("General row has negative entries")
            row.setflags(write=False)
            object.__setattr__(self, "row", row)

    @classmethod
    def scale(cls, beta, agent=0):
        return cls(PerturbationKind.SCALE, agent, factor=beta)

    @classmethod
    def shift(cls, amount, agent=0):
        return cls(PerturbationKind.SHIFT, agent, amount=amount)

    @classmethod
    def general(cls, row, agent=0):
        return cls(PerturbationKind.GENERAL, agent, row=row)


@dataclass(frozen=True)
class MonotonicityReport:
    baseline_value: float
    perturbed_value: float
    bound_kind: str
    bound_value: float
    direction: str  # "lower", "upper" or "equal"
    satisfied: bool
    margin: float  # signed distance to the bound, positive when satisfied

    def to_dict(self):
        return {
            "baseline_value": self.baseline_value,
            "perturbed_value": self.perturbed_value,
            "bound_kind": self.bound_kind,
            "bound_value": self.bound_value,
            "direction": self.direction,
            "satisfied": self.satisfied,
            "margin": self.margin,
        }


def perturb(instance, spec):
    """Copy of ``instance`` with one wisdom row replaced; nothing else moves."""
    psi = instance.wisdoms.copy()
    a = spec.agent
    if not 0 <= a < instance.n_agents:
        raise ValueError(f"perturb: agent {a} out of range")
    if spec.kind is PerturbationKind.SCALE:
        psi[a] = spec.factor * psi[a]
    elif spec.kind is PerturbationKind.SHIFT:
        psi[a] = psi[a] + spec.amount
    else:
        if spec.row.shape != (instance.n_points,):
            raise ValueError(
                f"perturb: row has {spec.row.size} entries, instance has {instance.n_points} points"
            )
        psi[a] = spec.row
    return instance.replace(wisdoms=psi)


def agent_value(instance, agent=0):
    """Individual value of ``agent`` at an optimal partition."""
    report = solve_dual(instance)
    return float(individual_values(instance, report.partition)[agent])


def _report(old, new, kind, bound, direction):
    tol = SLACK * (1 + abs(bound))
    if direction == "lower":
        margin = new - bound
        ok = margin >= -tol
    elif direction == "upper":
        margin = bound - new
        ok = margin >= -tol
    else:
        margin = -abs(new - bound)
        ok = margin >= -tol
    return MonotonicityReport(old, new, kind, bound, direction, bool(ok), float(margin))


def verify_scale_bound(instance, beta, agent=0):
    if not beta > 0:
        raise ValueError("beta must be positive")
    old = agent_value(instance, agent)
    new = agent_value(perturb(instance, PerturbationSpec.scale(beta, agent)), agent)
    direction = "lower" if beta > 1 else "upper" if beta < 1 else "equal"
    return _report(old, new, "scale", beta * old, direction)


def _require_not_over(instance, what):
    if instance.regime.tag is Regime.OVER:
        raise ValueError(f"{what}: only stated for saturated or under-saturated instances")


def verify_shift_equality(instance, amount, agent=0):
    _require_not_over(instance, "verify_shift_equality")
    if amount < 0:
        raise ValueError("shift amount must be nonnegative")
    old = agent_value(instance, agent)
    new = agent_value(perturb(instance, PerturbationSpec.shift(amount, agent)), agent)
    bound = old + amount * float(instance.capacities[agent])
    return _report(old, new, "shift", bound, "equal")


def verify_general_lower_bound(instance, new_row, beta, agent=0):
    if not beta > 1:
        raise ValueError("beta must exceed 1")
    new_row = np.asarray(new_row, dtype=float)
    old_row = instance.wisdoms[agent]
    if np.any(new_row < beta * old_row - 1e-12 * (1 + np.abs(beta * old_row))):
        raise ValueError("new row must dominate beta times the old row")
    old = agent_value(instance, agent)
    new = agent_value(perturb(instance, PerturbationSpec.general(new_row, agent)), agent)
    return _report(old, new, "general", (beta - 1) * old, "lower")


def verify_decrease_bound(instance, new_row, beta, amount, agent=0):
    _require_not_over(instance, "verify_decrease_bound")
    if not 1 < beta < 2:
        raise ValueError("beta must lie in (1, 2)")
    new_row = np.asarray(new_row, dtype=float)
    lo = beta * instance.wisdoms[agent]
    pad = 1e-12 * (1 + np.abs(lo) + amount)
    if np.any(new_row < lo - pad) or np.any(new_row > lo + amount + pad):
        raise ValueError("new row must lie between beta*row and beta*row + amount")
    old = agent_value(instance, agent)
    new = agent_value(perturb(instance, PerturbationSpec.general(new_row, agent)), agent)
    m = float(instance.capacities[agent])
    return _report(old, new, "decrease", old - m * amount * (2 - beta) / (beta - 1), "lower")


def scale_sweep(instance, betas, agent=0):
    """Rows ``(beta, old, new, bound)`` for a grid of scale factors."""
    old = agent_value(instance, agent)
    rows = []
    for beta in betas:
        new = agent_value(perturb(instance, PerturbationSpec.scale(beta, agent)), agent)
        rows.append((float(beta), old, new, float(beta) * old))
    return rows


def sweep_csv(rows):
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["beta", "baseline_value", "perturbed_value", "bound"])
    for row in rows:
        out.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def xi_along_family(instance, p, t, slope, bump, phi=np.square, agent=0):
    """Free dual functional with agent's row ``(1 + slope t) row + bump phi(t)``."""
    from .duality import eval_xi

    psi = instance.wisdoms.copy()
    psi[agent] = (1 + slope * t) * psi[agent] + np.asarray(bump) * phi(t)
    return eval_xi(instance.replace(wisdoms=np.maximum(psi, 0.0)), p)


# --------------------------------------------------------------------------
# sharpness instances


@dataclass(frozen=True)
class SharpnessCase:
    instance: object
    new_row: np.ndarray
    beta: float
    amount: float  # height of the hat added on top of beta * row
    target: float  # s
    hat_width: float
    profile: dict = field(default_factory=dict)
    conditions: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "beta": self.beta,
            "amount": self.amount,
            "s": self.target,
            "hat_width": self.hat_width,
            "profile": self.profile,
            "conditions": self.conditions,
        }


def hat(x, center, width):
    return np.maximum(0.0, 1.0 - np.abs(x - center) / width)


def _profiles(top1, at_x2, bottom2, slopes, n, small_cap, plateau=0.05, ramp=0.03):
    """Agent 0: plateau ``top1`` around X1, plateau ``at_x2`` around X2, floor
    elsewhere. Agent 1: asymmetric V with minimum ``bottom2`` at X1 that
    falls back to the floor; floor at X2."""
    f = FLOOR
    w, r = plateau, ramp
    row1 = [(0, f), (X1 - w - r, f), (X1 - w, top1), (X1 + w, top1), (X1 + w + r, f)]
    if at_x2 > f:
        row1 += [(X2 - w - r, f), (X2 - w, at_x2), (X2 + w, at_x2), (X2 + w + r, f)]
    row1.append((1, f))
    kl, kr = slopes
    row2 = [
        (0, f),
        (X1 - w - r - 0.05, f),
        (X1 - w - r, bottom2 + kl * (w + r)),
        (X1, bottom2),
        (X1 + w + r, bottom2 + kr * (w + r)),
        (X1 + w + r + 0.05, f),
        (1, f),
    ]
    return bump_profile([row1, row2], [small_cap, 1.0 - small_cap], n=n)


def _hat_width(amount, margin, small_cap, width=None):
    # the hat must hold the whole small capacity above the competing level
    if width is not None:
        return float(width)
    return float(np.clip(1.25 * amount * small_cap / (2 * margin), 0.02, 0.4))


def _grid_checks(inst, new_row, beta):
    x = inst.measure.coords
    i1 = int(np.argmin(np.abs(x - X1)))
    i2 = int(np.argmin(np.abs(x - X2)))
    psi1, psi2 = inst.wisdoms
    gap = psi1 - psi2
    gap_b = beta * psi1 - psi2
    gap_new = new_row - psi2

    def unique_max_at(v, i):
        others = np.delete(v, i)
        return bool(v[i] > others.max())

    return {
        "gap_peaks_at_x1": unique_max_at(gap, i1),
        "scaled_gap_peaks_at_x1": unique_max_at(gap_b, i1),
        "perturbed_gap_peaks_at_x2": unique_max_at(gap_new, i2),
    }, i1, i2


def build_sharpness_new(beta=3.0, s=2.5, delta=0.1, small_cap=0.01, n=2001, top=None, bottom=None, hat_width=None):
    """Instance where ``new / old`` stays below ``s`` although the row grew
    by more than ``beta`` times.

    Needs ``beta > 2`` and ``s > beta - 1``. Agent 0's value sits on a plateau
    of height ``top`` around X1 where agent 0 beats agent 1; the perturbation
    adds a hat of height ``amount`` at X2 that pulls all of agent 0's capacity
    there.
    """
    if not beta > 2:
        raise ValueError("build_sharpness_new: needs beta > 2")
    if not s > beta - 1:
        raise ValueError("build_sharpness_new: needs s > beta - 1 (the bound itself)")
    f = FLOOR
    at_x2 = 1.0
    if top is None:
        top = 2 * (at_x2 + delta) / (s - beta + 1)
    if bottom is None:
        # midpoint of the admissible window for agent 1's minimum
        bottom = 0.5 * ((beta - s) * top + delta + f + top - at_x2 + f)
    probe = _profiles(top, at_x2, bottom, (10.0, 12.0), n, small_cap)
    psi1, psi2 = probe.wisdoms
    x = probe.measure.coords
    i1 = int(np.argmin(np.abs(x - X1)))
    i2 = int(np.argmin(np.abs(x - X2)))
    amount = float((beta * psi1[i1] - psi2[i1]) + delta - (beta * psi1[i2] - psi2[i2]))
    width = _hat_width(amount, delta, small_cap, hat_width)
    new_row = beta * psi1 + amount * hat(x, X2, width)
    checks, _, _ = _grid_checks(probe, new_row, beta)
    checks["hat_beats_target"] = bool(s * psi1[i1] > beta * psi1[i2] + amount)
    checks["agent1_floor_positive"] = bool(bottom > f)
    bad = [k for k, ok in checks.items() if not ok]
    if bad:
        raise ValueError(f"build_sharpness_new: conditions fail on the grid: {', '.join(bad)}")
    profile = {"top": float(top), "bottom": float(bottom), "at_x2": at_x2, "delta": delta, "floor": f}
    return SharpnessCase(probe, new_row, beta, amount, s, width, profile, checks)


def build_sharpness_new1(beta=1.5, amount=1.0, s=0.9, delta=0.05, small_cap=0.01, n=2001, hat_width=None):
    """Instance where the value drops by more than ``s * M`` after the row is
    replaced by ``beta * row + amount * hat`` with ``1 < beta < 2``.

    Needs ``s < amount (2 - beta) / (beta - 1)``. Agent 0 barely beats agent 1
    around X1 and has only the floor at X2.
    """
    if not 1 < beta < 2:
        raise ValueError("build_sharpness_new1: needs 1 < beta < 2")
    if not amount > 0:
        raise ValueError("build_sharpness_new1: needs a positive hat height")
    limit = amount * (2 - beta) / (beta - 1)
    if not s < limit:
        raise ValueError(f"build_sharpness_new1: needs s < {limit}")
    f = FLOOR
    # room left for the plateau excess over amount + s
    room = (amount * (2 - beta) - (beta - 1) * (s - f)) / (beta - 1 + 0.1)
    delta = min(delta, 0.9 * room)
    if not delta > beta * f:
        raise ValueError("build_sharpness_new1: s too close to the limit for the positivity floor")
    top = amount + s + delta
    bottom = top - delta / 10
    inst = _profiles(top, f, bottom, (0.4, 0.5), n, small_cap)
    psi1, psi2 = inst.wisdoms
    x = inst.measure.coords
    i1 = int(np.argmin(np.abs(x - X1)))
    i2 = int(np.argmin(np.abs(x - X2)))
    margin = float(amount + beta * psi1[i2] - psi2[i2] - (beta * psi1[i1] - psi2[i1]))
    width = _hat_width(amount, max(margin, 1e-12), small_cap, hat_width)
    new_row = beta * psi1 + amount * hat(x, X2, width)
    checks, _, _ = _grid_checks(inst, new_row, beta)
    checks["hat_overtakes_x1"] = margin > 0
    checks["plateau_exceeds_hat_plus_s"] = bool(psi1[i1] - beta * psi1[i2] - amount - s > 0)
    bad = [k for k, ok in checks.items() if not ok]
    if bad:
        raise ValueError(f"build_sharpness_new1: conditions fail on the grid: {', '.join(bad)}")
    profile = {"top": float(top), "bottom": float(bottom), "at_x2": f, "delta": delta, "floor": f}
    return SharpnessCase(inst, new_row, beta, amount, s, width, profile, checks)


def demonstrate_new(case):
    """Bound report plus the observed ratio ``new / old``."""
    rep = verify_general_lower_bound(case.instance, case.new_row, case.beta)
    ratio = rep.perturbed_value / rep.baseline_value
    return rep, ratio


def demonstrate_new1(case):
    """Bound report plus the observed drop ``old - new`` in units of capacity."""
    rep = verify_decrease_bound(case.instance, case.new_row, case.beta, case.amount)
    drop = (rep.baseline_value - rep.perturbed_value) / float(case.instance.capacities[0])
    return rep, drop


__all__ = [
    "MonotonicityReport",
    "PerturbationKind",
    "PerturbationSpec",
    "SharpnessCase",
    "agent_value",
    "build_sharpness_new",
    "build_sharpness_new1",
    "demonstrate_new",
    "demonstrate_new1",
    "hat",
    "perturb",
    "scale_sweep",
    "sweep_csv",
    "verify_decrease_bound",
    "verify_general_lower_bound",
    "verify_scale_bound",
    "verify_shift_equality",
    "xi_along_family",
]
