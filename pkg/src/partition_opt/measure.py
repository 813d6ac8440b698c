"""
Problem instances: a weighted point cloud of consumers, the agents' wisdom
matrix and their capacities.

Every solver in the package consumes a :class:`ProblemInstance`. Instances
are immutable; the arrays they hold are flagged read-only.
"""

import json
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

REGIME_BAND = 1e-9
TIE_ATOL = 1e-12


class InstanceError(ValueError):
    """Raised when an instance file or constructor argument is invalid."""


class ZeroWisdomWarning(UserWarning):
    """Some wisdom entries are exactly zero (allowed, but not a.e. positive)."""


class Regime(str, Enum):
    UNDER = "UnderSaturated"
    SATURATED = "Saturated"
    OVER = "OverSaturated"


@dataclass(frozen=True)
class RegimeInfo:
    tag: Regime
    slack: float  # sum(M) - mu(X)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DiscreteMeasure:
    """Consumer measure as positive weights on points ``0..n-1``.

    ``coords`` is optional and only used by generators and plotting.
    """

    weights: np.ndarray
    coords: np.ndarray = None

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or w.size == 0:
            raise InstanceError("weights: expected a non-empty 1-d array")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InstanceError("weights: every weight must be a positive finite real")
        object.__setattr__(self, "weights", w)
        if self.coords is not None:
            c = _frozen(self.coords)
            if c.shape[0] != w.size:
                raise InstanceError("points: coordinate count differs from weight count")
            object.__setattr__(self, "coords", c)

    @property
    def n(self):
        return self.weights.size

    @property
    def total_mass(self):
        return float(np.sum(self.weights))


def classify_regime(capacities, total_mass):
    """Saturation regime from the sign of ``sum(M) - mu(X)``.

    Differences within ``1e-9 * mu(X)`` count as saturated.
    """
    slack = float(np.sum(capacities)) - float(total_mass)
    band = REGIME_BAND * float(total_mass)
    if slack > band:
        tag = Regime.OVER
    elif slack < -band:
        tag = Regime.UNDER
    else:
        tag = Regime.SATURATED
    return RegimeInfo(tag, slack)


@dataclass(frozen=True)
class ProblemInstance:
    """Consumer measure, ``N x n`` wisdom matrix and ``N`` capacities."""

    measure: DiscreteMeasure
    wisdoms: np.ndarray
    capacities: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        psi = _frozen(self.wisdoms)
        if psi.ndim == 1:
            psi = _frozen(psi[None, :])
        if psi.ndim != 2:
            raise InstanceError("wisdoms: expected an N x n matrix")
        cap = _frozen(np.atleast_1d(self.capacities))
        if cap.ndim != 1:
            raise InstanceError("capacities: expected a 1-d array")
        if psi.shape[0] != cap.size:
            raise InstanceError(
                f"capacities: {cap.size} entries but wisdoms has {psi.shape[0]} rows"
            )
        if psi.shape[1] != self.measure.n:
            raise InstanceError(
                f"wisdoms: {psi.shape[1]} columns but the measure has {self.measure.n} points"
            )
        if not np.all(np.isfinite(psi)) or np.any(psi < 0):
            raise InstanceError("wisdoms: entries must be finite and nonnegative")
        if not np.all(np.isfinite(cap)) or np.any(cap < 0):
            raise InstanceError("capacities: entries must be finite and nonnegative")
        if np.any(psi == 0):
            warnings.warn(
                "wisdoms contain exact zeros; positivity holds only almost everywhere",
                ZeroWisdomWarning,
                stacklevel=3,
            )
        object.__setattr__(self, "wisdoms", psi)
        object.__setattr__(self, "capacities", cap)

    @classmethod
    def from_arrays(cls, weights, wisdoms, capacities, coords=None, meta=None):
        return cls(DiscreteMeasure(weights, coords), wisdoms, capacities, dict(meta or {}))

    @property
    def n_points(self):
        return self.measure.n

    @property
    def n_agents(self):
        return self.capacities.size

    @property
    def weights(self):
        return self.measure.weights

    @property
    def total_mass(self):
        return self.measure.total_mass

    @property
    def regime(self):
        return classify_regime(self.capacities, self.total_mass)

    def replace(self, wisdoms=None, capacities=None, meta=None):
        """Copy with some fields swapped; the measure is shared."""
        return ProblemInstance(
            self.measure,
            self.wisdoms if wisdoms is None else wisdoms,
            self.capacities if capacities is None else capacities,
            dict(self.meta if meta is None else meta),
        )


# --------------------------------------------------------------------------
# assumption diagnostics


@dataclass(frozen=True)
class AssumptionReport:
    """Discrete footprint of the tie and positivity assumptions.

    ``tie_violations`` holds ``((i, j), r, mass)`` for each value ``r`` of
    ``psi_i - psi_j`` attained on two or more points. ``level_set_violations``
    maps agent ``i`` to ``(r, mass)`` pairs of repeated ``psi_i`` values and
    is only filled in the under-saturated regime. ``zero_wisdom_mass`` is
    informational: isolated zeros are tolerated.
    """

    tie_violations: list
    zero_wisdom_mass: np.ndarray
    level_set_violations: dict

    @property
    def empty(self):
        return not self.tie_violations and not any(self.level_set_violations.values())

    @property
    def positive(self):
        return not np.any(self.zero_wisdom_mass > 0)

    def to_dict(self):
        return {
            "empty": self.empty,
            "positive": self.positive,
            "tie_violations": [
                {"agents": list(pair), "value": r, "mass": m} for pair, r, m in self.tie_violations
            ],
            "zero_wisdom_mass": self.zero_wisdom_mass.tolist(),
            "level_set_violations": {
                str(i): [{"value": r, "mass": m} for r, m in items]
                for i, items in self.level_set_violations.items()
            },
        }


def _repeated_values(values, weights, atol=TIE_ATOL):
    """Groups of (numerically) equal values spanning two or more points."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    w = weights[order]
    out = []
    start = 0
    for k in range(1, v.size + 1):
        if k == v.size or v[k] - v[k - 1] > atol:
            if k - start >= 2:
                out.append((float(v[start]), float(np.sum(w[start:k]))))
            start = k
    return out


def check_assumptions(instance):
    """Report tie and positivity violations; never rejects."""
    psi = instance.wisdoms
    w = instance.weights
    N = instance.n_agents
    ties = []
    for i in range(N):
        for j in range(i + 1, N):
            for r, mass in _repeated_values(psi[i] - psi[j], w):
                ties.append(((i, j), r, mass))
    zero_mass = np.array([float(np.sum(w[psi[i] <= 0])) for i in range(N)])
    levels = {}
    if instance.regime.tag is Regime.UNDER:
        for i in range(N):
            levels[i] = _repeated_values(psi[i], w)
    return AssumptionReport(ties, zero_mass, levels)


# --------------------------------------------------------------------------
# file I/O


def instance_to_dict(instance):
    pts = []
    for k in range(instance.n_points):
        rec = {"id": k}
        if instance.measure.coords is not None:
            c = instance.measure.coords[k]
            rec["x"] = float(c) if np.ndim(c) == 0 else [float(t) for t in c]
        rec["weight"] = float(instance.weights[k])
        pts.append(rec)
    out = {
        "points": pts,
        "wisdoms": [[float(v) for v in row] for row in instance.wisdoms],
        "capacities": [float(m) for m in instance.capacities],
    }
    if instance.meta:
        out["meta"] = instance.meta
    return out


def instance_from_dict(data):
    if not isinstance(data, dict):
        raise InstanceError("instance: top level must be an object")
    for key in ("points", "wisdoms", "capacities"):
        if key not in data:
            raise InstanceError(f"{key}: missing")
    pts = data["points"]
    if not isinstance(pts, list) or not pts:
        raise InstanceError("points: expected a non-empty array")
    try:
        ids = [int(p["id"]) for p in pts]
        weights = [float(p["weight"]) for p in pts]
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"points: malformed record ({exc})") from None
    if sorted(ids) != list(range(len(pts))):
        raise InstanceError("points: ids must be unique and dense 0..n-1")
    order = np.argsort(ids)
    weights = np.asarray(weights)[order]
    coords = None
    if all("x" in p for p in pts):
        coords = np.asarray([pts[k]["x"] for k in order], dtype=float)
    try:
        psi = np.asarray(data["wisdoms"], dtype=float)
        cap = np.asarray(data["capacities"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"wisdoms/capacities: not numeric ({exc})") from None
    if psi.ndim == 2:
        if psi.shape[1] != len(pts):
            raise InstanceError(f"wisdoms: {psi.shape[1]} columns but {len(pts)} points")
        psi = psi[:, order]
    return ProblemInstance.from_arrays(weights, psi, cap, coords, data.get("meta"))


def load_instance(path):
    """Read and validate an instance file."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: parse error: {exc}") from None
    return instance_from_dict(data)


def save_instance(instance, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(instance), fh, indent=1)
        fh.write("\n")


# --------------------------------------------------------------------------
# generators


def midpoint_grid(n):
    """Cell midpoints of a uniform ``n``-cell partition of [0, 1]."""
    return (np.arange(n) + 0.5) / n


def uniform_grid_multiplicative(n, lambdas, capacities, psi=None):
    """Multiplicative wisdoms ``lambda_i * psi`` on a midpoint grid of [0, 1].

    ``psi`` defaults to the identity ``psi(x) = x``; it may be any callable.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.ndim != 1 or np.any(lam <= 0):
        raise InstanceError("lambdas: expected positive multipliers")
    if np.any(np.diff(lam) <= 0):
        raise InstanceError("lambdas: multipliers must be strictly increasing")
    x = midpoint_grid(int(n))
    base = x if psi is None else np.asarray(psi(x), dtype=float)
    weights = np.full(x.size, 1.0 / x.size)
    return ProblemInstance.from_arrays(
        weights,
        lam[:, None] * base[None, :],
        capacities,
        coords=x,
        meta={"family": "uniform_grid_multiplicative", "lambdas": lam.tolist()},
    )


def random_capacities(rng, n_agents, total_mass, regime):
    """Capacities drawn on the simplex and scaled to the requested regime."""
    share = rng.dirichlet(np.ones(n_agents))
    if regime in ("S", Regime.SATURATED):
        scale = 1.0
    elif regime in ("US", Regime.UNDER):
        scale = rng.uniform(0.3, 0.9)
    elif regime in ("OS", Regime.OVER):
        scale = rng.uniform(1.2, 2.5)
    else:
        raise InstanceError(f"regime: unknown tag {regime!r}")
    cap = share * total_mass * scale
    if scale == 1.0:
        # exact saturation up to rounding
        cap[-1] = total_mass - np.sum(cap[:-1])
        if cap[-1] < 0:
            cap[-1] = 0.0
    return cap


def random_positive(n, n_agents, capacities="S", seed=0, low=0.1, high=2.0):
    """Random positive wisdoms and weights; differences are a.s. distinct.

    ``capacities`` is an explicit vector or a regime tag (``"S"``, ``"US"``,
    ``"OS"``) used to draw one.
    """
    rng = np.random.default_rng(seed)
    weights = rng.exponential(size=n)
    weights /= weights.sum()
    psi = rng.uniform(low, high, size=(n_agents, n))
    if isinstance(capacities, (str, Regime)):
        cap = random_capacities(rng, n_agents, float(weights.sum()), capacities)
    else:
        cap = np.asarray(capacities, dtype=float)
    return ProblemInstance.from_arrays(
        weights, psi, cap, meta={"family": "random_positive", "seed": int(seed)}
    )


def endpoint_grid(n):
    return np.linspace(0.0, 1.0, int(n))


def bump_profile(control_points, capacities, n=2001):
    """Piecewise-linear wisdom rows through prescribed ``(x, value)`` nodes.

    The grid includes both endpoints so that nodes such as 0.25 and 0.75
    fall exactly on grid points; weights are ``1/n``.
    """
    x = endpoint_grid(n)
    rows = []
    for nodes in control_points:
        nodes = sorted((float(a), float(b)) for a, b in nodes)
        xs, ys = zip(*nodes)
        rows.append(np.interp(x, xs, ys))
    weights = np.full(x.size, 1.0 / x.size)
    return ProblemInstance.from_arrays(
        weights, np.vstack(rows), capacities, coords=x, meta={"family": "bump_profile"}
    )


GENERATORS = {
    "uniform_grid_multiplicative": uniform_grid_multiplicative,
    "random_positive": random_positive,
    "bump_profile": bump_profile,
}


def generate_instance(family, seed=0, **params):
    """Dispatch to a named generator.

    Generators other than ``random_positive`` are deterministic and ignore
    ``seed``.
    """
    if family not in GENERATORS:
        raise InstanceError(f"family: unknown generator {family!r}")
    if family == "random_positive":
        params.setdefault("seed", seed)
    return GENERATORS[family](**params)
