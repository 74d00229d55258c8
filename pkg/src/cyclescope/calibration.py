"""Calibration of the fictitious-play simulator against the expected cycle pattern.

A parameter set is acceptable when, over independent meta-replications of
pooled sessions of the unstable game,

* every signed cell of the expected sign table has the expected sign at p < 0.01,
* every "0" cell fails to reject at alpha = 0.05 in at least 80% of replications,

when unstable sessions end farther from the Nash profile than stable ones, and
when the cycle strength of the four treatments follows the expected ordering.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .cycle_metrics import transition_bivectors
from .game_model import GameSpec
from .simulator import SimConfig, pay_factor, run_sessions
from .state_space import COMPONENTS, EXPECTED_SIGNS, l_from_bivector
from . import stats

# (stronger, weaker) treatment pairs
STRENGTH_ARROWS = ((1, 0), (0, 2), (1, 3), (3, 2))

NASH_PROFILE = np.array([1 / 6, 1 / 6, 1 / 6, 1 / 2])
SIGNED_ALPHA = 0.01
ZERO_ALPHA = 0.05
ZERO_PASS_RATE = 0.8


@dataclass(frozen=True)
class DirectionCheck:
    """Per-cell outcomes of a meta-replicated direction experiment."""

    cells: tuple[tuple[int, str], ...]
    means: np.ndarray      # (replications, cells)
    p_values: np.ndarray   # (replications, cells)
    t_values: np.ndarray   # (replications, cells)

    def _index(self, cell):
        return self.cells.index(cell)

    def signed_ok(self) -> np.ndarray:
        """(replications, signed cells) booleans."""
        cols = [self._index(c) for c in self.cells if EXPECTED_SIGNS[c] != "0"]
        signs = np.array([1.0 if EXPECTED_SIGNS[self.cells[i]] == "+" else -1.0 for i in cols])
        return (self.means[:, cols] * signs > 0) & (self.p_values[:, cols] < SIGNED_ALPHA)

    def zero_pass_rates(self) -> dict:
        return {c: float(np.mean(self.p_values[:, self._index(c)] >= ZERO_ALPHA))
                for c in self.cells if EXPECTED_SIGNS[c] == "0"}

    @property
    def passed(self) -> bool:
        return bool(self.signed_ok().all()
                    and min(self.zero_pass_rates().values()) >= ZERO_PASS_RATE)

    def weakest_signed_t(self) -> float:
        return float(np.min(np.abs(self.t_values[:, [self._index(c) for c in self.cells
                                                      if EXPECTED_SIGNS[c] != "0"]])))


def cell_tests(bivectors: np.ndarray):
    """Means, p-values and t statistics for all twelve (setting, component) cells."""
    cells, means, ps, ts = [], [], [], []
    for k in (1, 2, 3, 4):
        L = l_from_bivector(bivectors, k)
        for c, name in enumerate(COMPONENTS):
            res = stats.one_sample_t(L[:, c])
            cells.append((k, name))
            means.append(L[:, c].mean())
            ps.append(res.p_value)
            ts.append(res.statistic)
    return tuple(cells), np.array(means), np.array(ps), np.array(ts)


def direction_check(cfg: SimConfig, game: GameSpec | None = None,
                    replications: int = 10) -> DirectionCheck:
    """Run ``replications`` independent batches of ``cfg.sessions`` sessions each."""
    game = game or GameSpec.from_id(0)
    rows_m, rows_p, rows_t = [], [], []
    cells = None
    for r in range(replications):
        trajs = run_sessions(cfg, game, first_session=r * cfg.sessions)
        B = np.concatenate([transition_bivectors(tr) for tr in trajs])
        cells, m, p, t = cell_tests(B)
        rows_m.append(m)
        rows_p.append(p)
        rows_t.append(t)
    return DirectionCheck(cells, np.array(rows_m), np.array(rows_p), np.array(rows_t))


def nash_distance(trajs, tail: int = 20) -> np.ndarray:
    """Distance of each session's average state over its last ``tail`` periods from Nash."""
    return np.array([np.linalg.norm(tr.fractions[-tail:].mean(axis=0) - NASH_PROFILE)
                     for tr in trajs])


def stability_contrast(cfg: SimConfig, sessions: int = 100):
    """Rank-sum comparison of final Nash distances, unstable (game 0) against stable (game 2)."""
    cfg = replace(cfg, sessions=sessions)
    unstable = nash_distance(run_sessions(cfg, GameSpec.from_id(0)))
    stable = nash_distance(run_sessions(cfg, GameSpec.from_id(2)))
    return unstable, stable, stats.rank_sum(unstable, stable)


def strength_margins(cfg: SimConfig, sessions: int = 30) -> dict:
    """Strength ratio |L|_stronger / |L|_weaker for each expected treatment ordering.

    Each treatment is simulated with ``cfg``; high-pay games get their logit
    precision scaled by the pay factor.
    """
    data = {}
    for g in range(4):
        game = GameSpec.from_id(g)
        run = replace(cfg, sessions=sessions, payoff_scale=cfg.payoff_scale * pay_factor(game))
        B = np.concatenate([transition_bivectors(tr) for tr in run_sessions(run, game)])
        data[g] = float(np.linalg.norm(l_from_bivector(B, 1).mean(axis=0)))
    return {(a, b): data[a] / data[b] for a, b in STRENGTH_ARROWS}


@dataclass(frozen=True)
class Candidate:
    lam: float
    rho: float
    passed: bool
    weakest_t: float
    contrast_z: float
    contrast_p: float
    arrow_margin: float

    @property
    def qualified(self) -> bool:
        return (self.passed and self.contrast_z > 0 and self.contrast_p < 0.05
                and self.arrow_margin > 1.0)


def calibrate_direction(lams=(0.3, 0.5, 1.0), rhos=(0.02, 0.05, 0.1), *,
                        seed: int = 2024, sessions: int = 100, periods: int = 80,
                        replications: int = 5, full_information: bool = False):
    """Grid search over (lambda, rho) for logit fictitious play.

    A candidate qualifies when the direction check passes on the unstable game,
    unstable sessions end significantly farther from Nash than stable ones, and
    every expected strength ordering between treatments holds. Among
    qualifiers the one whose weakest ordering has the largest ratio wins.
    Returns the winner (or None) and the full table.
    """
    table = []
    for lam, rho in itertools.product(lams, rhos):
        cfg = SimConfig(lam=lam, rho=rho, seed=seed, sessions=sessions, periods=periods,
                        full_information=full_information)
        check = direction_check(cfg, replications=replications)
        _, _, contrast = stability_contrast(cfg, sessions=sessions)
        margin = min(strength_margins(cfg).values())
        table.append(Candidate(lam, rho, check.passed, check.weakest_signed_t(),
                               contrast.statistic, contrast.p_value, margin))
    qualified = [c for c in table if c.qualified]
    best = max(qualified, key=lambda c: c.arrow_margin) if qualified else None
    return best, table
