"""Command-line front end.

Exit codes: 0 success, 1 invalid input or usage, 2 solver did not converge,
3 a verified property failed.
"""

import argparse
import json
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from . import closed_form as cf
from . import games, monotonicity as mono
from ._cells import TieRule
from .duality import solve_dual
from .measure import (
    InstanceError,
    ZeroWisdomWarning,
    check_assumptions,
    generate_instance,
    instance_to_dict,
    load_instance,
    save_instance,
)
from .transport import transportation_lp
from .values import value_report

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED, EXIT_VIOLATION = 0, 1, 2, 3
ORACLE_LIMIT = 20_000  # n * (N + 1) cells before the primal cross-check is skipped


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    instance: str = None
    output: str = None
    tolerance: float = 1e-8
    max_iterations: int = 100_000
    tie_rule: TieRule = TieRule.LOWEST_INDEX
    seed: int = 0
    format: str = "machine"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--output", "-o")
    common.add_argument("--format", choices=["report", "machine", "csv"], default="machine")
    common.add_argument("--tolerance", type=float, default=1e-8)
    common.add_argument("--max-iterations", type=int, default=100_000)
    common.add_argument("--tie-rule", choices=[t.value for t in TieRule], default=TieRule.LOWEST_INDEX.value)
    common.add_argument("--seed", type=int, default=0)

    parser = _Parser(prog="partition-opt", description="Capacity-constrained optimal partitions.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", parents=[common], help="equilibrium prices, partition and values")
    p.add_argument("--instance", required=True)
    p.add_argument("--method", choices=["auto", "lp", "levelset", "subgradient"], default="auto")

    p = sub.add_parser("check", parents=[common], help="assumption report")
    p.add_argument("--instance", required=True)

    p = sub.add_parser("game", parents=[common], help="coalition game and super-additivity audit")
    p.add_argument("--instance", required=True)
    p.add_argument("--strict", action="store_true", help="exit 3 when the game is not super-additive")

    p = sub.add_parser("core", parents=[common], help="core certificate")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--game")
    src.add_argument("--instance")

    p = sub.add_parser("closedform", parents=[common], help="multiplicative fast path with cross-check")
    p.add_argument("--instance")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--lambdas", type=_floats)
    p.add_argument("--capacities", type=_floats)
    p.add_argument("--game", action="store_true", help="also compare coalition games")

    p = sub.add_parser("perturb", parents=[common], help="verify a monotonicity bound")
    p.add_argument("--instance", required=True)
    p.add_argument("--kind", choices=["scale", "shift", "general", "decrease"], required=True)
    p.add_argument("--agent", type=int, default=0)
    p.add_argument("--beta", type=float)
    p.add_argument("--lambda", dest="amount", type=float)
    p.add_argument("--row", help="file holding the new wisdom row (JSON list)")

    p = sub.add_parser("sharpness", parents=[common], help="build a near-extremal instance")
    p.add_argument("which", choices=["new", "new1"])
    p.add_argument("--beta", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--lambda", dest="amount", type=float, default=1.0)
    p.add_argument("--delta", type=float)
    p.add_argument("--small-cap", type=float, default=0.01)
    p.add_argument("--n", type=int, default=2001)
    p.add_argument("--save-instance")

    p = sub.add_parser("gen", parents=[common], help="generate an instance file")
    p.add_argument("--family", default="random_positive", choices=sorted(_families()))
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--agents", type=int, default=3)
    p.add_argument("--regime", choices=["S", "US", "OS"], default="S")
    p.add_argument("--lambdas", type=_floats)
    p.add_argument("--capacities", type=_floats)
    return parser


def _families():
    from .measure import GENERATORS

    return GENERATORS.keys()


def _emit(cfg, payload, report_lines=None, csv_text=None):
    if cfg.format == "machine":
        text = json.dumps(payload, sort_keys=True) + "\n"
    elif cfg.format == "csv":
        if csv_text is None:
            raise UsageError(f"{cfg.subcommand}: no CSV output for this subcommand")
        text = csv_text
    else:
        text = "\n".join(report_lines if report_lines is not None else _flatten(payload)) + "\n"
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _flatten(payload, prefix=""):
    lines = []
    for key in sorted(payload):
        value = payload[key]
        if isinstance(value, dict):
            lines += _flatten(value, f"{prefix}{key}.")
        else:
            lines.append(f"{prefix}{key}: {value}")
    return lines


# --------------------------------------------------------------------------
# subcommands


def _solve(args, cfg):
    inst = load_instance(args.instance)
    rep = solve_dual(
        inst,
        tolerance=cfg.tolerance,
        max_iterations=cfg.max_iterations,
        tie_rule=cfg.tie_rule,
        method=args.method,
    )
    values = value_report(inst, rep.partition, rep.price)
    payload = {
        "regime": inst.regime.tag.value,
        "dual": rep.to_dict(),
        "values": values.to_dict(),
        "assumptions_hold": check_assumptions(inst).empty,
    }
    if inst.n_points * (inst.n_agents + 1) <= ORACLE_LIMIT:
        primal = transportation_lp(inst).objective
        payload["oracle_objective"] = primal
        payload["duality_gap"] = rep.dual_value - primal
    _emit(cfg, payload, csv_text=values.to_csv())
    return EXIT_OK if rep.converged else EXIT_NONCONVERGED


def _check(args, cfg):
    report = check_assumptions(load_instance(args.instance))
    _emit(cfg, report.to_dict())
    return EXIT_OK


def _game(args, cfg):
    inst = load_instance(args.instance)
    game = games.build_game(inst)
    violations = games.check_superadditive(game)
    payload = {
        "game": game.to_dict(),
        "superadditive": not violations,
        "violations": [[games.members(a), games.members(b)] for a, b in violations],
    }
    _emit(cfg, payload)
    return EXIT_VIOLATION if (violations and args.strict) else EXIT_OK


def _core(args, cfg):
    if args.game:
        with open(args.game, encoding="utf-8") as fh:
            game = games.CoalitionGame.from_dict(json.load(fh))
    else:
        game = games.build_game(load_instance(args.instance))
    cert = games.core_check(game)
    payload = {"game": game.to_dict(), "certificate": cert.to_dict()}
    if game.n_agents == 3 and not games.check_superadditive(game):
        payload["three_player_criterion"] = games.core_check_n3(game).value
    _emit(cfg, payload)
    return EXIT_OK


def _closedform(args, cfg):
    from .measure import uniform_grid_multiplicative
    from .values import individual_values

    if args.instance:
        inst = load_instance(args.instance)
    else:
        if args.lambdas is None or args.capacities is None:
            raise UsageError("closedform: give --instance or both --lambdas and --capacities")
        inst = uniform_grid_multiplicative(args.n, args.lambdas, args.capacities)
    model, lambdas = cf.model_from_instance(inst)
    sol = cf.closed_form_solution(model, lambdas, inst.capacities)
    rep = solve_dual(inst, tolerance=cfg.tolerance, tie_rule=cfg.tie_rule)
    generic = individual_values(inst, rep.partition)
    diff = float(np.max(np.abs(generic - sol.individual_values)))
    payload = {
        "closed_form": sol.to_dict(),
        "generic_individual_values": generic.tolist(),
        "max_abs_difference": diff,
    }
    ok = diff <= 1e-6
    if args.game:
        g_closed = cf.closed_form_game(model, lambdas, inst.capacities)
        g_generic = games.build_game(inst)
        gdiff = float(np.max(np.abs(g_closed.values - g_generic.values)))
        payload["game"] = g_closed.to_dict()
        payload["game_max_abs_difference"] = gdiff
        if inst.n_agents == 3:
            payload["stability"] = cf.stability_criterion_n3(model, lambdas, inst.capacities).value
        ok = ok and gdiff <= 1e-6
    _emit(cfg, payload, csv_text=cf.f_star_csv(model))
    if not rep.converged:
        return EXIT_NONCONVERGED
    return EXIT_OK if ok else EXIT_VIOLATION


def _need(value, flag):
    if value is None:
        raise UsageError(f"missing {flag}")
    return value


def _perturb(args, cfg):
    inst = load_instance(args.instance)
    csv_text = None
    if args.kind == "scale":
        beta = _need(args.beta, "--beta")
        rep = mono.verify_scale_bound(inst, beta, args.agent)
        csv_text = mono.sweep_csv(mono.scale_sweep(inst, [beta], args.agent))
    elif args.kind == "shift":
        rep = mono.verify_shift_equality(inst, _need(args.amount, "--lambda"), args.agent)
    else:
        with open(_need(args.row, "--row"), encoding="utf-8") as fh:
            row = np.asarray(json.load(fh), dtype=float)
        if args.kind == "general":
            rep = mono.verify_general_lower_bound(inst, row, _need(args.beta, "--beta"), args.agent)
        else:
            rep = mono.verify_decrease_bound(
                inst, row, _need(args.beta, "--beta"), _need(args.amount, "--lambda"), args.agent
            )
    _emit(cfg, rep.to_dict(), csv_text=csv_text)
    return EXIT_OK if rep.satisfied else EXIT_VIOLATION


def _sharpness(args, cfg):
    extra = {} if args.delta is None else {"delta": args.delta}
    if args.which == "new":
        case = mono.build_sharpness_new(
            beta=3.0 if args.beta is None else args.beta,
            s=2.5 if args.s is None else args.s,
            small_cap=args.small_cap,
            n=args.n,
            **extra,
        )
        rep, ratio = mono.demonstrate_new(case)
        shown = ratio < case.target
        payload = {"case": case.to_dict(), "bound": rep.to_dict(), "ratio": ratio, "gap_demonstrated": shown}
        lines = [
            f"baseline value      {rep.baseline_value:.6g}",
            f"perturbed value     {rep.perturbed_value:.6g}",
            f"ratio               {ratio:.4f}  (bound {case.beta - 1:g}, target below {case.target:g})",
        ]
    else:
        case = mono.build_sharpness_new1(
            beta=1.5 if args.beta is None else args.beta,
            amount=args.amount,
            s=0.9 if args.s is None else args.s,
            small_cap=args.small_cap,
            n=args.n,
            **extra,
        )
        rep, drop = mono.demonstrate_new1(case)
        shown = drop > case.target
        limit = case.amount * (2 - case.beta) / (case.beta - 1)
        payload = {"case": case.to_dict(), "bound": rep.to_dict(), "drop_per_capacity": drop, "gap_demonstrated": shown}
        lines = [
            f"baseline value      {rep.baseline_value:.6g}",
            f"perturbed value     {rep.perturbed_value:.6g}",
            f"drop / capacity     {drop:.4f}  (target above {case.target:g}, bound {limit:g})",
        ]
    lines.append(f"bound satisfied     {rep.satisfied}")
    lines.append(f"gap demonstrated    {shown}")
    if args.save_instance:
        save_instance(case.instance, args.save_instance)
    _emit(cfg, payload, lines)
    return EXIT_OK if (rep.satisfied and shown) else EXIT_VIOLATION


def _gen(args, cfg):
    if args.family == "random_positive":
        cap = args.capacities if args.capacities is not None else args.regime
        inst = generate_instance("random_positive", seed=cfg.seed, n=args.n, n_agents=args.agents, capacities=cap)
    elif args.family == "uniform_grid_multiplicative":
        inst = generate_instance(
            args.family,
            n=args.n,
            lambdas=_need(args.lambdas, "--lambdas"),
            capacities=_need(args.capacities, "--capacities"),
        )
    else:
        raise UsageError(f"gen: family {args.family!r} needs control points; use the library API")
    if cfg.output:
        save_instance(inst, cfg.output)
    else:
        sys.stdout.write(json.dumps(instance_to_dict(inst), sort_keys=True) + "\n")
    return EXIT_OK


HANDLERS = {
    "solve": _solve,
    "check": _check,
    "game": _game,
    "core": _core,
    "closedform": _closedform,
    "perturb": _perturb,
    "sharpness": _sharpness,
    "gen": _gen,
}


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = RunConfig(
            subcommand=args.subcommand,
            instance=getattr(args, "instance", None),
            output=args.output,
            tolerance=args.tolerance,
            max_iterations=args.max_iterations,
            tie_rule=TieRule(args.tie_rule),
            seed=args.seed,
            format=args.format,
        )
        with warnings.catch_warnings():
            # positivity is reported by `check`; keep stderr for errors
            warnings.simplefilter("ignore", ZeroWisdomWarning)
            return HANDLERS[args.subcommand](args, cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except (InstanceError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID


def main():
    sys.exit(run())
