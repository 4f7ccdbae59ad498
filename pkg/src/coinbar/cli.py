"""Command-line interface.

On failure a single line ``error: <category>: <message>`` goes to stderr
and the exit status is nonzero: 2 for bad usage or configuration, 1
otherwise.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import analysis
from .config import build_scenarios, coerce, load_config
from .env import run_simulation
from .errors import CoinbarError, ConfigError, UsageError
from .experiments import PRESET_NOTES, PRESETS, emit_csv, emit_plot_data, run_scenario, run_sweep
from .state import WorldParams
from .utilities import RewardKind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


FLAG_KEYS = {"seed": "seed", "runs": "runs", "weeks": "weeks", "reward": "reward_kind",
             "alpha": "alpha", "agents": "N", "capacity": "capacity"}


def _scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="key = value scenario file")
    p.add_argument("--preset", metavar="NAME", help="built-in scenario or group (see 'presets')")
    p.add_argument("--seed", metavar="U64", help="master seed; runs use seed..seed+R-1")
    p.add_argument("--runs", metavar="R")
    p.add_argument("--weeks", metavar="T")
    p.add_argument("--reward", metavar="{G|UD|WL}")
    p.add_argument("--alpha", metavar="a1,...,aK")
    p.add_argument("--agents", metavar="N")
    p.add_argument("--capacity", metavar="c")
    p.add_argument("--out", metavar="DIR", help="write CSV and plot data here")


def _values(args) -> dict:
    values = load_config(args.config) if args.config else {}
    if args.preset:
        values["preset"] = args.preset
    for flag, key in FLAG_KEYS.items():
        raw = getattr(args, flag, None)
        if raw is not None:
            values.update([coerce(key, str(raw), f"--{flag}: ")])
    return values


def _world(args) -> WorldParams:
    values = {k: v for k, v in _values(args).items() if k in ("alpha", "capacity", "N")}
    return WorldParams(**values)


def _report(rec, out):
    conv = rec.convergence.converged_week if rec.convergence else None
    norm = f"{rec.normalized_late_mean():.4f}" if rec.optimum else "n/a"
    print(f"{rec.scenario:<22} {rec.reward_kind.value:<3} N={rec.N:<5} runs={len(rec.seeds):<3} "
          f"late_mean={rec.late_mean():.4f} normalized={norm} converged_week={conv} "
          f"wall={rec.wall_time:.1f}s", file=out)


def _emit(records, args, out):
    if args.out and records:
        paths = emit_csv(records, args.out)
        paths += emit_plot_data(records, args.out, svg=args.svg)
        for p in paths:
            print(f"wrote {p}", file=out)


def cmd_run(args, out):
    scenarios = build_scenarios(_values(args))
    records = [run_scenario(s) for s in scenarios]
    for r in records:
        _report(r, out)
    _emit(records, args, out)


def cmd_sweep(args, out):
    values = _values(args)
    if args.sweep:
        values.update([coerce("sweep", args.sweep, "--sweep: ")])
    if "preset" not in values and "sweep" not in values:
        values["preset"] = "fig3"
    scenarios = build_scenarios(values)
    records = []
    for s in scenarios:
        if not s.sweep:
            raise ConfigError(f"scenario {s.name} has no sweep; pass --sweep N1,N2,...")
        records += run_sweep(s)
    for r in records:
        _report(r, out)
    _emit(records, args, out)


def cmd_factoredness(args, out):
    world = _world(args)
    N = world.N if args.agents is not None else 3
    kinds = [RewardKind.parse(args.reward)] if args.reward else list(RewardKind)
    for kind in kinds:
        v = analysis.factoredness_check(N, world.K, kind, world)
        line = f"{kind.value}: factored={str(v.factored).lower()} profiles={v.profiles_checked}"
        if v.counterexample:
            cx = v.counterexample
            line += (f" agent={cx.agent} a={list(cx.profile_a)} b={list(cx.profile_b)}"
                     f" g={cx.g_values[0]:.9g},{cx.g_values[1]:.9g} G={cx.G_values[0]:.9g},{cx.G_values[1]:.9g}")
        print(line, file=out)


def cmd_learnability(args, out):
    # States come from a run of world-reward learners unless --reward says otherwise.
    values = _values(args)
    values.setdefault("weeks", 2000)
    values.setdefault("reward_kind", RewardKind.G)
    (s,) = build_scenarios({k: v for k, v in values.items() if k not in ("runs", "preset", "sweep")})
    result = run_simulation(s.config)
    rep = analysis.learnability_report(result.trajectory, s.config.world, args.samples,
                                       np.random.default_rng(s.config.seed))
    for kind, lam in rep.lambda_values.items():
        print(f"lambda_{kind.value} = {lam:.6g}", file=out)
    print(f"ratio_WL_over_G = {rep.ratio_wl_over_g:.6g} (M={rep.samples}, policy={s.config.reward_kind.value}, "
          f"weeks={s.config.weeks})", file=out)


def cmd_optimum(args, out):
    world = _world(args)
    profile, value = analysis.optimal_allocation(world)
    print(f"profile = {','.join(str(int(x)) for x in profile)}", file=out)
    print(f"world_reward = {value:.12g}", file=out)


def cmd_presets(args, out):
    for group, note in PRESET_NOTES.items():
        names = ", ".join(s.name for s in PRESETS[group])
        print(f"{group:<11} {note}", file=out)
        print(f"{'':<11} members: {names}", file=out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coinbar", description="El Farol bar simulator with collective-intelligence rewards")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one scenario or preset group")
    _scenario_flags(p)
    p.add_argument("--svg", action="store_true", help="also render an SVG chart (needs matplotlib)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a scenario across agent counts (default preset fig3)")
    _scenario_flags(p)
    p.add_argument("--sweep", metavar="N1,N2,...")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("factoredness", help="exhaustive single-week factoredness check")
    _scenario_flags(p)
    p.set_defaults(func=cmd_factoredness)

    p = sub.add_parser("learnability", help="on-policy learnability of G, UD and WL")
    _scenario_flags(p)
    p.add_argument("--samples", type=int, default=10_000, metavar="M")
    p.set_defaults(func=cmd_learnability)

    p = sub.add_parser("optimum", help="optimal attendance and world reward")
    _scenario_flags(p)
    p.set_defaults(func=cmd_optimum)

    p = sub.add_parser("presets", help="list built-in scenarios")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        args.func(args, out)
    except CoinbarError as exc:
        print(f"error: {exc.category}: {_one_line(exc)}", file=sys.stderr)
        return 2 if isinstance(exc, (UsageError, ConfigError)) else 1
    except OSError as exc:
        print(f"error: io: {_one_line(exc)}", file=sys.stderr)
        return 1
    return 0


def _one_line(exc) -> str:
    return " ".join(str(exc).split()) or type(exc).__name__
