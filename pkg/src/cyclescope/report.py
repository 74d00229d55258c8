"""Analysis pipeline: per-game sample tables, verdicts, cross-game comparisons, output files.

The report bundle is a plain JSON-compatible dict holding unrounded numbers.
Table CSVs are rendered from it in units of 1e-3, rounded to the configured
resolution.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import stats
from .cycle_metrics import (
    DEFAULT_REFERENCE,
    Trajectory,
    average_play,
    persistence_split,
    reference_sweep,
    transition_bivectors,
)
from .state_space import (
    COMPONENTS,
    EXPECTED_SIGNS,
    SETTINGS,
    enumerate_lattice,
    l_from_bivector,
    project,
)

VERDICT_ALPHA = 0.05
DEFAULT_ROUNDING = 1e-4
DEFAULT_BOUNDARY = 40
UNIT = 1e-3

# Strength orderings expected between treatments: (stronger, weaker).
STRENGTH_ARROWS = ((1, 0), (0, 2), (1, 3), (3, 2))

# PPT and half-split sample counts of the original experiment, per game.
REFERENCE_PPT_COUNTS = {0: 237, 1: 217, 2: 237, 3: 237}
REFERENCE_SPLIT_COUNTS = {0: (351, 351), 1: (351, 321), 2: (351, 351), 3: (351, 351)}
REFERENCE_SESSIONS = 3


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class GameData:
    """Per-PPT bivector samples of one game with their session labels."""

    bivectors: np.ndarray
    session_ids: tuple[str, ...]

    @classmethod
    def from_trajectories(cls, trajs: Sequence[Trajectory], reference=None) -> "GameData":
        parts = [transition_bivectors(tr, reference) for tr in trajs]
        labels = tuple(tr.session_id for tr, p in zip(trajs, parts) for _ in range(len(p)))
        return cls(np.concatenate(parts), labels)

    def L(self, k: int) -> np.ndarray:
        return l_from_bivector(self.bivectors, k)


def _cell_test(samples: np.ndarray) -> tuple[float, float]:
    try:
        res = stats.one_sample_t(samples, 0.0)
    except stats.DegenerateSampleError:
        mean = float(samples.mean())
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(np.finfo(float).max, mean), 0.0
    return res.statistic, res.p_value


def table3(data: Mapping[int, GameData]) -> list[dict]:
    """Mean angular momentum with one-sample t-tests for every (setting, game)."""
    rows = []
    for k in SETTINGS:
        for game in sorted(data):
            L = data[game].L(k)
            tests = [_cell_test(L[:, c]) for c in range(3)]
            rows.append({
                "k": k, "game": game, "n": int(L.shape[0]),
                "mean": [float(v) for v in L.mean(axis=0)],
                "t": [t for t, _ in tests],
                "p": [p for _, p in tests],
                "stars": [stats.stars(p) for _, p in tests],
            })
    return rows


def _sign(x: float) -> str:
    return "+" if x > 0 else "-" if x < 0 else "0"


def compare_games(data: Mapping[int, GameData], k: int = 1) -> dict:
    """Pairwise rank-sum comparison of per-PPT components, row game against column game."""
    games = sorted(data)
    if len(games) < 2:
        raise ConfigurationError("comparing games needs at least two games")
    strength = {g: float(np.linalg.norm(data[g].L(k).mean(axis=0))) for g in games}
    comparisons = []
    for i, a in enumerate(games):
        for b in games[i + 1:]:
            La, Lb = data[a].L(k), data[b].L(k)
            for c, name in enumerate(COMPONENTS):
                res = stats.rank_sum(La[:, c], Lb[:, c])
                comparisons.append({
                    "row": a, "col": b, "component": name, "z": res.statistic,
                    "p": res.p_value, "sign": _sign(res.statistic),
                    "stars": stats.stars(res.p_value)})
    predictions = []
    for strong, weak in STRENGTH_ARROWS:
        if strong not in data or weak not in data:
            continue
        row, col = min(strong, weak), max(strong, weak)
        flip = 1 if row == strong else -1
        signs = [c["sign"] for c in comparisons if c["row"] == row and c["col"] == col]
        agree = sum(1 for s in signs if s == ("+" if flip > 0 else "-"))
        predictions.append({
            "stronger": strong, "weaker": weak,
            "strength_holds": strength[strong] > strength[weak],
            "components_agreeing": agree})
    ordering = sorted(games, key=lambda g: strength[g], reverse=True)
    return {"k": k, "strength": {str(g): strength[g] for g in games},
            "ordering": ordering, "comparisons": comparisons, "predictions": predictions}


def _bookkeeping(groups: Mapping[int, Sequence[Trajectory]], ppt_counts: dict,
                 split_counts: dict) -> dict:
    flags = []
    for game, count in sorted(REFERENCE_PPT_COUNTS.items()):
        if count % REFERENCE_SESSIONS:
            flags.append(f"game {game}: reference PPT count {count} cannot come from "
                         f"{REFERENCE_SESSIONS} sessions of equal length")
        for half, n in zip(("first", "second"), REFERENCE_SPLIT_COUNTS[game]):
            if n % (3 * REFERENCE_SESSIONS):
                flags.append(f"game {game}: reference {half}-half count {n} is not "
                             f"3 components x {REFERENCE_SESSIONS} sessions x whole PPTs")
        if game in ppt_counts and ppt_counts[game] != count:
            flags.append(f"game {game}: observed {ppt_counts[game]} PPTs, reference {count}")
        observed = split_counts.get(game)
        if observed is not None and tuple(observed) != REFERENCE_SPLIT_COUNTS[game]:
            flags.append(f"game {game}: observed half-split samples {tuple(observed)}, "
                         f"reference {REFERENCE_SPLIT_COUNTS[game]}")
    periods = {str(g): [tr.periods for tr in trajs] for g, trajs in sorted(groups.items())}
    return {"ppt_counts": {str(g): n for g, n in sorted(ppt_counts.items())},
            "session_periods": periods,
            "split_counts": {str(g): list(v) for g, v in sorted(split_counts.items())},
            "flags": flags}


def _session_level(groups: Mapping[int, Sequence[Trajectory]], reference) -> dict:
    sessions = []
    for game, trajs in sorted(groups.items()):
        for tr in trajs:
            L = l_from_bivector(transition_bivectors(tr, reference), 1)
            sessions.append({"game": game, "session_id": tr.session_id,
                             "P_D": average_play([tr], "D"),
                             "L": [float(v) for v in L.mean(axis=0)]})
    ols = []
    x = [s["P_D"] for s in sessions]
    for c, name in enumerate(COMPONENTS):
        y = [s["L"][c] for s in sessions]
        try:
            res = stats.ols_slope(x, y)
        except ValueError as exc:
            ols.append({"component": name, "error": str(exc)})
            continue
        ols.append({"component": name, "slope": res.estimate, "t": res.statistic,
                    "p": res.p_value, "n": res.n[0], "stars": stats.stars(res.p_value)})
    by_game = {str(g): average_play(list(trajs), "D") for g, trajs in sorted(groups.items())}
    return {"sessions": sessions, "P_D_by_game": by_game, "ols": ols}


def _sweep(groups: Mapping[int, Sequence[Trajectory]]) -> dict:
    out = {}
    for game, trajs in sorted(groups.items()):
        N = trajs[0].N
        refs = enumerate_lattice(N)
        totals = np.zeros((len(refs), 3))
        n = 0
        for tr in trajs:
            sweep = reference_sweep(tr, 1, refs)
            totals += sweep.totals()
            n += sweep.means[0].n
        means = totals / n
        default_sign = np.sign(means.mean(axis=0))
        consistent = [float(np.mean(np.sign(means[:, c]) == default_sign[c])) for c in range(3)]
        out[str(game)] = {"references": len(refs), "sign_agreement": consistent,
                          "min_mean": [float(v) for v in means.min(axis=0)],
                          "max_mean": [float(v) for v in means.max(axis=0)],
                          "closed_sessions": sum(1 for tr in trajs if tr.closed)}
    return out


def analyze(groups: Mapping[int, Sequence[Trajectory]], reference=None, *,
            boundary_period: int = DEFAULT_BOUNDARY, sweep: bool = False,
            declared_games: Sequence[int] | None = None) -> dict:
    """Compute every table for trajectories grouped by game id."""
    if declared_games is not None:
        missing = [g for g in declared_games if not groups.get(g)]
        if missing:
            raise ConfigurationError(f"no trajectories for declared games {missing}")
    groups = {int(g): list(trajs) for g, trajs in groups.items() if trajs}
    if not groups:
        raise ConfigurationError("no trajectories to analyze")
    ref = DEFAULT_REFERENCE if reference is None else np.asarray(reference, dtype=float)
    data = {g: GameData.from_trajectories(trajs, ref) for g, trajs in groups.items()}
    persistence, split_counts = [], {}
    for game, trajs in sorted(groups.items()):
        try:
            rep = persistence_split(trajs, ref, boundary_period)
        except ValueError as exc:
            persistence.append({"game": game, "error": str(exc)})
            continue
        split_counts[game] = (rep.n1, rep.n2)
        persistence.append({"game": game, **rep.to_dict(), "t": rep.test.statistic,
                            "stars": stats.stars(rep.p_value)})
    bundle = {
        "reference": [float(v) for v in ref],
        "games": sorted(groups),
        "boundary_period": boundary_period,
        "table3": table3(data),
        "table4": compare_games(data) if len(data) > 1 else None,
        "table5": persistence,
        "session_level": _session_level(groups, ref),
        "bookkeeping": _bookkeeping(groups, {g: len(d.bivectors) for g, d in data.items()},
                                    split_counts),
    }
    if sweep:
        bundle["reference_sweep"] = _sweep(groups)
    return bundle


def bundle_from_bivectors(data: Mapping[int, GameData]) -> dict:
    """The table3 and table4 sections of a bundle, from precomputed bivector samples."""
    return {"games": sorted(data), "table3": table3(data),
            "table4": compare_games(data) if len(data) > 1 else None}


@dataclass(frozen=True)
class VerdictCell:
    k: int
    game: int
    component: str
    mean: float
    p: float
    stars: str
    expected: str
    verdict: str


@dataclass(frozen=True)
class VerdictGrid:
    cells: tuple[VerdictCell, ...]

    @property
    def matches(self) -> int:
        return sum(c.verdict == "match" for c in self.cells)

    def summary(self) -> dict:
        zero = [c for c in self.cells if c.expected == "0"]
        signed = [c for c in self.cells if c.expected != "0"]
        return {"cells": len(self.cells), "matches": self.matches,
                "zero_cells": len(zero),
                "zero_cells_matched": sum(c.verdict == "match" for c in zero),
                "signed_cells": len(signed),
                "signed_cells_matched": sum(c.verdict == "match" for c in signed)}


def verdict_for(expected: str, mean: float, p: float, alpha: float = VERDICT_ALPHA) -> str:
    if expected == "+":
        ok = mean > 0 and p < alpha
    elif expected == "-":
        ok = mean < 0 and p < alpha
    else:
        ok = p >= alpha
    return "match" if ok else "mismatch"


def verdicts(bundle: Mapping) -> VerdictGrid:
    cells = []
    for row in bundle["table3"]:
        for c, name in enumerate(COMPONENTS):
            expected = EXPECTED_SIGNS[(row["k"], name)]
            cells.append(VerdictCell(row["k"], row["game"], name, row["mean"][c], row["p"][c],
                                     row["stars"][c], expected,
                                     verdict_for(expected, row["mean"][c], row["p"][c])))
    return VerdictGrid(tuple(cells))


# ---------------------------------------------------------------- rendering


def decimals_for(rounding: float) -> int:
    if rounding <= 0:
        raise ConfigurationError("rounding must be positive")
    d = -math.log10(rounding / UNIT)
    if abs(d - round(d)) > 1e-9 or round(d) < 0:
        raise ConfigurationError(f"rounding {rounding} is not a power of ten below {UNIT}")
    return int(round(d))


def fmt_milli(value: float, decimals: int) -> str:
    s = f"{value / UNIT:.{decimals}f}"
    return s[1:] if s.startswith("-") and float(s) == 0 else s


def _csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_table3(bundle, decimals: int) -> str:
    rows = []
    for r in bundle["table3"]:
        rows.append([r["k"], r["game"], *(fmt_milli(v, decimals) for v in r["mean"]),
                     *(repr(float(p)) for p in r["p"]),
                     *((_sign(m) if p < VERDICT_ALPHA else "0") + s
                       for m, p, s in zip(r["mean"], r["p"], r["stars"])), r["n"]])
    return _csv(rows, ["k", "game", "Lx", "Ly", "Lz", "px", "py", "pz",
                       "mark_x", "mark_y", "mark_z", "n"])


def render_table4(bundle, decimals: int) -> str:
    t4 = bundle.get("table4")
    rows = []
    if t4:
        for g in bundle["games"]:
            strength = fmt_milli(t4["strength"][str(g)], decimals)
            others = [c for c in t4["comparisons"] if c["row"] == g]
            cols = sorted({c["col"] for c in others})
            if not cols:
                rows.append([g, strength, "", "", "", ""])
            for col in cols:
                marks = {c["component"]: c["sign"] + c["stars"] for c in others if c["col"] == col}
                rows.append([g, strength, col, marks["x"], marks["y"], marks["z"]])
    return _csv(rows, ["game", "strength", "vs_game", "Lx", "Ly", "Lz"])


def render_table5(bundle, decimals: int) -> str:
    rows = []
    for r in bundle.get("table5", []):
        if "error" in r:
            rows.append([r["game"], "", "", "", "", "", "", r["error"]])
            continue
        rows.append([r["game"], fmt_milli(r["first_mean"], decimals),
                     fmt_milli(r["second_mean"], decimals), fmt_milli(r["delta"], decimals),
                     repr(float(r["p_value"])), r["stars"], r["samples"][0], r["samples"][1]])
    return _csv(rows, ["game", "first_half", "second_half", "delta", "p", "stars",
                       "n_first", "n_second"])


def render_verdicts(grid: VerdictGrid, decimals: int) -> str:
    rows = [[c.k, c.game, c.component, fmt_milli(c.mean, decimals), repr(float(c.p)), c.stars,
             c.expected, c.verdict] for c in grid.cells]
    return _csv(rows, ["k", "game", "component", "mean", "p", "stars", "expected", "verdict"])


def render_trajectories(groups: Mapping[int, Sequence[Trajectory]], k: int) -> str:
    rows = []
    for _, trajs in sorted(groups.items()):
        for tr in trajs:
            xyz = project(tr.fractions, k)
            for period, (x, y, z) in enumerate(xyz, start=1):
                rows.append([tr.session_id, period, repr(float(x)), repr(float(y)), repr(float(z))])
    return _csv(rows, ["session_id", "period", "x", "y", "z"])


def to_json(bundle) -> str:
    return json.dumps(bundle, indent=2, sort_keys=True, allow_nan=False) + "\n"


def emit(bundle: dict, out_dir, groups: Mapping[int, Sequence[Trajectory]] | None = None,
         rounding: float = DEFAULT_ROUNDING) -> list[Path]:
    """Write tables, verdicts, the unrounded JSON bundle and plot data into ``out_dir``."""
    decimals = decimals_for(rounding)
    out = Path(out_dir)
    grid = verdicts(bundle)
    full = dict(bundle)
    full["verdicts"] = {"summary": grid.summary(),
                        "cells": [c.__dict__ for c in grid.cells]}
    full["rounding"] = rounding
    files = {
        "table3.csv": render_table3(bundle, decimals),
        "table4.csv": render_table4(bundle, decimals),
        "table5.csv": render_table5(bundle, decimals),
        "verdicts.csv": render_verdicts(grid, decimals),
        "report.json": to_json(full),
    }
    if groups:
        for k in SETTINGS:
            files[f"trajectory_k{k}.csv"] = render_trajectories(groups, k)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out / name
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write {exc.filename or out}: {exc.strerror}") from exc
    return written


def summary_text(bundle: Mapping) -> str:
    """Human-readable digest of a report bundle."""
    lines = []
    lines.append("Mean angular momentum x 1e-3 (k, game: Lx Ly Lz | marks)")
    for r in bundle["table3"]:
        marks = " ".join((_sign(m) if p < VERDICT_ALPHA else "0") + s
                         for m, p, s in zip(r["mean"], r["p"], r["stars"]))
        vals = " ".join(f"{v / UNIT:7.1f}" for v in r["mean"])
        lines.append(f"  k{r['k']} game {r['game']}: {vals} | {marks}  (n={r['n']})")
    grid = verdicts(bundle)
    s = grid.summary()
    lines.append(f"Verdicts: {s['matches']}/{s['cells']} cells match the expected sign pattern")
    t4 = bundle.get("table4")
    if t4:
        lines.append("Strength |L| x 1e-3: " + ", ".join(
            f"game {g}: {v / UNIT:.1f}" for g, v in sorted(t4["strength"].items())))
        for p in t4["predictions"]:
            lines.append(f"  game {p['stronger']} > game {p['weaker']}: "
                         f"{'holds' if p['strength_holds'] else 'fails'}")
    for r in bundle.get("table5", []):
        if "error" in r:
            lines.append(f"Persistence game {r['game']}: {r['error']}")
        else:
            lines.append(f"Persistence game {r['game']}: {r['first_mean'] / UNIT:.1f} -> "
                         f"{r['second_mean'] / UNIT:.1f} (delta {r['delta'] / UNIT:.1f}"
                         f"{r['stars']}, samples {tuple(r['samples'])})")
    for flag in bundle.get("bookkeeping", {}).get("flags", []):
        lines.append(f"NOTE: {flag}")
    return "\n".join(lines) + "\n"


def load_bundle(path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "report.json"
    with open(p, encoding="utf-8") as fh:
        return json.load(fh)


__all__ = [
    "GameData", "analyze", "bundle_from_bivectors", "compare_games", "emit", "table3",
    "verdicts", "VerdictGrid", "ConfigurationError", "summary_text", "load_bundle",
]