"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 parse error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from pathlib import Path

from . import report
from .game_model import GameSpec, build_rpsd_matrix, equilibrium_payoff, find_symmetric_nash
from .ingest import ACTION_HEADER, ParseError, parse_actions, parse_states, states_csv
from .simulator import ConfigError, SimConfig, default_configs, pay_factor, run_sessions
from .state_space import check_simplex, enumerate_lattice, lattice_csv, lattice_size

log = logging.getLogger("cyclescope")

EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_IO = 0, 2, 3, 4
SEED_ENV = "CYCLESCOPE_SEED"
_GAME_IN_NAME = re.compile(r"game[_-]?(\d)")


def load_run_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    mode = cfg.get("mode", "simulate")
    if mode not in ("simulate", "ingest"):
        raise ConfigError(f"mode must be 'simulate' or 'ingest', got {mode!r}")
    if mode == "simulate" and "inputs" in cfg:
        raise ConfigError("a simulate config cannot also list ingest inputs")
    if mode == "ingest" and "simulations" in cfg:
        raise ConfigError("an ingest config cannot also list simulations")
    return cfg


def resolve_seed(cli_seed, config_seed) -> int:
    if cli_seed is not None:
        return int(cli_seed)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return int(config_seed or 0)


def simulation_plan(cfg: dict | None, seed: int) -> list[tuple[GameSpec, SimConfig]]:
    """(game, SimConfig) pairs, one per simulated game."""
    if not cfg or not cfg.get("simulations"):
        defaults = default_configs(seed=seed)
        return [(GameSpec.from_id(g), c) for g, c in defaults.items()]
    plan = []
    for entry in cfg["simulations"]:
        if not isinstance(entry, dict) or "game" not in entry:
            raise ConfigError("every simulation entry needs a 'game' object")
        try:
            game = GameSpec.from_dict(entry["game"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        params = {k: v for k, v in entry.items() if k != "game"}
        if "payoff_scale" not in params:
            params["payoff_scale"] = pay_factor(game)
        plan.append((game, SimConfig.from_dict(params, seed=seed)))
    ids = [g.game_id for g, _ in plan]
    if len(set(ids)) != len(ids):
        raise ConfigError("each game may appear only once in 'simulations'")
    return plan


def _reference_from(cfg: dict | None):
    ref = (cfg or {}).get("reference", "default")
    if ref in (None, "default"):
        return None
    try:
        return check_simplex(ref, "reference")
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid reference point: {exc}") from None


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc


def load_game_files(paths) -> dict:
    """Group trajectories by the game id embedded in each file name (``...game<d>...``)."""
    files: list[Path] = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(q for q in p.glob("*.csv") if _GAME_IN_NAME.search(q.name)))
        elif p.exists():
            files.append(p)
        else:
            raise OSError(f"cannot read {p}: no such file or directory")
    if not files:
        raise ConfigError("no input files with a game id in their name (e.g. states_game0.csv)")
    groups: dict[int, list] = {}
    for f in files:
        m = _GAME_IN_NAME.search(f.name)
        if not m:
            raise ConfigError(f"{f}: cannot infer game id from file name")
        game = int(m.group(1))
        if game not in range(4):
            raise ConfigError(f"{f}: game id must be 0..3")
        text = _read(f)
        first = text.splitlines()[0] if text else ""
        parse = (parse_actions if tuple(x.strip() for x in first.split(",")) == ACTION_HEADER
                 else parse_states)
        try:
            trajs = parse(text, game_id=game)
        except ParseError as exc:
            raise ParseError(f"{f}: {exc}") from None
        groups.setdefault(game, []).extend(trajs)
    return groups


def cmd_lattice(args) -> int:
    states = enumerate_lattice(args.n)
    print(f"N={args.n} states={len(states)} formula={lattice_size(args.n)}")
    if args.csv:
        Path(args.csv).write_text(lattice_csv(args.n), encoding="utf-8")
    return EXIT_OK


def cmd_nash(args) -> int:
    if args.game == "custom":
        if not args.abcd:
            raise ConfigError("--game custom requires --abcd A B C D")
        game = GameSpec(*args.abcd)
    else:
        try:
            game = GameSpec.from_id(int(args.game))
        except ValueError:
            raise ConfigError(f"--game must be 0..3 or custom, got {args.game!r}") from None
    matrix = build_rpsd_matrix(game)
    result = [{"profile": [float(v) for v in p],
               "payoff": equilibrium_payoff(matrix, p)} for p in find_symmetric_nash(matrix)]
    print(json.dumps({"game": game.to_dict(), "equilibria": result}, indent=2))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_run_config(args.config) if args.config else None
    if cfg and cfg.get("mode", "simulate") != "simulate":
        raise ConfigError("simulate needs a config with mode 'simulate'")
    seed = resolve_seed(args.seed, (cfg or {}).get("seed"))
    plan = simulation_plan(cfg, seed)
    out = Path(args.out or (cfg or {}).get("output_dir") or "out")
    try:
        out.mkdir(parents=True, exist_ok=True)
        for game, sim in plan:
            trajs = run_sessions(sim, game)
            name = f"states_game{game.game_id}.csv" if game.game_id is not None else "states_custom.csv"
            (out / name).write_text(states_csv(trajs), encoding="utf-8")
        resolved = {"mode": "simulate", "seed": seed,
                    "simulations": [{"game": g.to_dict(), **s.to_dict()} for g, s in plan]}
        (out / "simulation.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write to {out}: {exc.strerror}") from exc
    print(f"wrote {len(plan)} game file(s) to {out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = load_run_config(args.config) if args.config else None
    inputs = list(args.inputs or [])
    if not inputs and cfg and cfg.get("mode") == "ingest":
        for game, paths in sorted(cfg.get("inputs", {}).items()):
            inputs.extend(paths)
    if not inputs:
        raise ConfigError("analyze needs --in DIR|FILES or an ingest config")
    groups = load_game_files(inputs)
    reference = _reference_from(cfg)
    rounding = args.rounding if args.rounding is not None else (cfg or {}).get(
        "rounding", report.DEFAULT_ROUNDING)
    boundary = args.boundary or (cfg or {}).get("boundary_period", report.DEFAULT_BOUNDARY)
    bundle = report.analyze(groups, reference, boundary_period=boundary,
                            sweep=args.reference == "sweep")
    out = args.out or (cfg or {}).get("output_dir") or "report"
    report.emit(bundle, out, groups, rounding=rounding)
    sys.stdout.write(report.summary_text(bundle))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        bundle = report.load_bundle(args.inp)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{args.inp}: invalid report.json ({exc})") from None
    sys.stdout.write(report.summary_text(bundle))
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from .calibration import calibrate_direction
    best, table = calibrate_direction(seed=args.seed, replications=args.replications)
    for c in table:
        print(f"lambda={c.lam:<5} rho={c.rho:<5} passed={c.passed!s:<5} "
              f"weakest_t={c.weakest_t:8.2f} contrast_z={c.contrast_z:6.2f} "
              f"arrow_margin={c.arrow_margin:5.3f}")
    print("best:", None if best is None else {"lambda": best.lam, "rho": best.rho})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cyclescope",
                                     description="Cycle detection in RPSD game trajectories")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lattice", help="count the social states of N players")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--csv", help="also write the lattice to this CSV file")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("nash", help="symmetric Nash equilibria of a game")
    p.add_argument("--game", required=True, help="0..3 or custom")
    p.add_argument("--abcd", type=float, nargs=4, metavar=("A", "B", "C", "D"))
    p.set_defaults(func=cmd_nash)

    p = sub.add_parser("simulate", help="generate synthetic sessions")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="compute tables and verdicts")
    p.add_argument("--in", dest="inputs", nargs="+", metavar="DIR|FILE")
    p.add_argument("--config")
    p.add_argument("--reference", choices=("default", "sweep"), default="default")
    p.add_argument("--out")
    p.add_argument("--rounding", type=float)
    p.add_argument("--boundary", type=int)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="print a summary of an analysis directory")
    p.add_argument("--in", dest="inp", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("calibrate", help="grid search of simulator parameters")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--replications", type=int, default=5)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, report.ConfigurationError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
