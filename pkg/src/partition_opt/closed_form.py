"""
Fast path for multiplicative wisdoms ``psi_i = lambda_i * psi`` with
increasing multipliers.

Everything reduces to one convex, piecewise-linear function of mass: the
cumulative psi-value carried by the lowest ``m`` units of mass, written
``F*(m)`` below. Agents take consecutive psi-bands, the strongest agent the
top band.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .games import CoalitionGame, CoreStatus, all_masks, members
from .measure import REGIME_BAND


@dataclass(frozen=True)
class ClosedFormModel:
    sorted_psi: np.ndarray
    sorted_weights: np.ndarray
    order: np.ndarray  # point ids in ascending psi order
    cum_mass: np.ndarray  # n + 1 entries, starts at 0
    cum_value: np.ndarray  # n + 1 entries, starts at 0

    @property
    def total_mass(self):
        return float(self.cum_mass[-1])

    @property
    def n_points(self):
        return self.sorted_psi.size

    def has_level_ties(self, atol=1e-12):
        return bool(np.any(np.diff(self.sorted_psi) <= atol * max(1.0, self.sorted_psi[-1])))


@dataclass(frozen=True)
class ClosedFormSolution:
    breakpoints: np.ndarray  # cumulative masses, N + 1 entries
    thresholds: np.ndarray  # psi level at each breakpoint
    individual_values: np.ndarray
    level_ties: bool

    def to_dict(self):
        return {
            "breakpoints": self.breakpoints.tolist(),
            "thresholds": self.thresholds.tolist(),
            "individual_values": self.individual_values.tolist(),
            "level_ties": self.level_ties,
        }


def build_model(psi, weights):
    """Sort points by ``psi`` (stable in point id) and tabulate F*.

    Examples
    --------
    >>> model = build_model([3.0, 1.0, 2.0], [1.0, 1.0, 1.0])
    >>> eval_F_star(model, 2.0), eval_F_star(model, 2.5)
    (3.0, 4.5)
    """
    psi = np.asarray(psi, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if psi.shape != weights.shape or psi.ndim != 1:
        raise ValueError("build_model: psi and weights must be 1-d of equal length")
    if np.any(weights <= 0):
        raise ValueError("build_model: weights must be positive")
    order = np.argsort(psi, kind="stable")
    s_psi, s_w = psi[order], weights[order]
    cum_mass = np.concatenate([[0.0], np.cumsum(s_w)])
    cum_value = np.concatenate([[0.0], np.cumsum(s_psi * s_w)])
    return ClosedFormModel(s_psi, s_w, order, cum_mass, cum_value)


def model_from_instance(instance):
    """Model of the common profile of a multiplicative instance."""
    lambdas = _instance_lambdas(instance)
    return build_model(instance.wisdoms[0] / lambdas[0], instance.weights), lambdas


def _instance_lambdas(instance):
    lam = instance.meta.get("lambdas")
    if lam is None:
        raise ValueError("instance carries no multipliers (meta['lambdas'])")
    return np.asarray(lam, dtype=float)


def _check_mass(model, m):
    mu = model.total_mass
    m = np.asarray(m, dtype=float)
    band = 1e-12 * mu
    if np.any(m < -band) or np.any(m > mu + band):
        raise ValueError(f"eval_F_star: mass outside [0, {mu}]")
    return np.clip(m, 0.0, mu)


def eval_F_star(model, m):
    """psi-value of the lowest ``m`` mass, interpolating inside the boundary point."""
    m = _check_mass(model, m)
    out = np.interp(m, model.cum_mass, model.cum_value)
    return float(out) if out.ndim == 0 else out


def level_at(model, m):
    """psi level reached after filling mass ``m`` from the bottom."""
    m = _check_mass(model, m)
    k = np.searchsorted(model.cum_mass, m, side="left")
    k = np.clip(k, 1, model.n_points)
    return model.sorted_psi[k - 1]


def breakpoints(capacities, total_mass):
    """Cumulative masses separating the bands, bottom (weakest agent) first."""
    M = np.asarray(capacities, dtype=float)
    cal = np.empty(M.size + 1)
    cal[-1] = total_mass
    for j in range(M.size - 1, -1, -1):
        cal[j] = max(cal[j + 1] - M[j], 0.0)
    return cal


def _check_inputs(model, lambdas, capacities):
    lambdas = np.asarray(lambdas, dtype=float)
    M = np.asarray(capacities, dtype=float)
    if lambdas.shape != M.shape:
        raise ValueError("multipliers and capacities differ in length")
    if np.any(np.diff(lambdas) <= 0):
        raise ValueError("multipliers must be strictly increasing")
    mu = model.total_mass
    if abs(M.sum() - mu) > REGIME_BAND * mu:
        raise ValueError(f"capacities must saturate the mass: sum {M.sum()} vs {mu}")
    return lambdas, M


def closed_form_solution(model, lambdas, capacities):
    """Band breakpoints and individual values ``lambda_i (F*(b_{i+1}) - F*(b_i))``."""
    lambdas, M = _check_inputs(model, lambdas, capacities)
    cal = breakpoints(M, model.total_mass)
    F = eval_F_star(model, cal)
    values = lambdas * np.diff(F)
    return ClosedFormSolution(cal, level_at(model, cal), values, model.has_level_ties())


def band_assignment(model, capacities):
    """Point-level partition (``n x (N+1)``, original point order) of the bands."""
    cal = breakpoints(capacities, model.total_mass)
    N = cal.size - 1
    lo, hi = model.cum_mass[:-1], model.cum_mass[1:]
    out = np.zeros((model.n_points, N + 1))
    for i in range(N):
        overlap = np.clip(np.minimum(hi, cal[i + 1]) - np.maximum(lo, cal[i]), 0.0, None)
        out[model.order, i] = overlap
    return out


def closed_form_game(model, lambdas, capacities):
    """Coalition values: the strongest agent's side keeps the top of the
    profile, any other coalition gets the bottom ``M_J`` mass."""
    lambdas, M = _check_inputs(model, lambdas, capacities)
    N = M.size
    mu = model.total_mass
    top = N - 1
    values = np.zeros(1 << N)
    total = eval_F_star(model, mu)
    for mask in all_masks(N):
        J = members(mask)
        mJ = float(M[J].sum())
        if top in J:
            values[mask] = lambdas[top] * (total - eval_F_star(model, max(mu - mJ, 0.0)))
        else:
            values[mask] = lambdas[J].max() * eval_F_star(model, mJ)
    return CoalitionGame(N, values)


def stability_criterion_n3(model, lambdas, capacities, atol=1e-9):
    """Three agents: the core is nonempty iff
    ``lambda_3 (F*(M_1) + F*(M_2)) > lambda_2 F*(M_1 + M_2)`` strictly.

    Equality (within ``atol`` of the grand value) counts as empty.
    """
    lambdas, M = _check_inputs(model, lambdas, capacities)
    if M.size != 3:
        raise ValueError("stability_criterion_n3: needs exactly three agents")
    f1, f2, f12 = eval_F_star(model, [M[0], M[1], M[0] + M[1]])
    grand = lambdas[2] * eval_F_star(model, model.total_mass)
    # pair sum minus twice the grand value equals lambda_2 f12 - lambda_3 (f1 + f2)
    gap = lambdas[2] * (f1 + f2) - lambdas[1] * f12
    return CoreStatus.NON_EMPTY if gap > 2 * atol * (1 + abs(grand)) else CoreStatus.EMPTY


def f_star_csv(model, samples=101):
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["m", "F_star"])
    for m in np.linspace(0.0, model.total_mass, samples):
        out.writerow([repr(float(m)), repr(float(eval_F_star(model, m)))])
    return buf.getvalue()
