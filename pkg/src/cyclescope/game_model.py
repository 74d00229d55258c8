"""Rock-Paper-Scissors-Dumb games: payoff matrices and symmetric Nash equilibria.

Strategies are always indexed in the order R, P, S, D.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

STRATEGIES = ("R", "P", "S", "D")
STRATEGY_INDEX = {s: i for i, s in enumerate(STRATEGIES)}

UNSTABLE_PARAMS = (90.0, 120.0, 20.0, 90.0)
STABLE_PARAMS = (60.0, 150.0, 20.0, 90.0)

# game_id -> (stability, pay_scale)
TREATMENTS = {
    0: ("unstable", "low"),
    1: ("unstable", "high"),
    2: ("stable", "low"),
    3: ("stable", "high"),
}

NASH_TOL = 1e-9


@dataclass(frozen=True)
class GameSpec:
    """An RPSD game. ``game_id`` and ``stability`` are None for custom games."""

    a: float
    b: float
    c: float
    d: float
    pay_scale: str = "low"
    game_id: int | None = None
    stability: str | None = None

    def __post_init__(self):
        if self.pay_scale not in ("low", "high"):
            raise ValueError(f"pay_scale must be 'low' or 'high', got {self.pay_scale!r}")
        params = (self.a, self.b, self.c, self.d)
        if not all(np.isfinite(params)):
            raise ValueError("payoff parameters must be finite")
        if self.game_id is None:
            if self.stability is not None:
                raise ValueError("stability is only defined for the four treatment games")
            return
        if self.game_id not in TREATMENTS:
            raise ValueError(f"game_id must be one of 0..3, got {self.game_id!r}")
        stability, pay = TREATMENTS[self.game_id]
        if self.stability != stability or self.pay_scale != pay:
            raise ValueError(
                f"game {self.game_id} is ({stability}, {pay}), "
                f"got ({self.stability}, {self.pay_scale})")
        expected = UNSTABLE_PARAMS if stability == "unstable" else STABLE_PARAMS
        if tuple(float(v) for v in params) != expected:
            raise ValueError(f"{stability} game requires (a,b,c,d)={expected}")

    @classmethod
    def from_id(cls, game_id: int) -> "GameSpec":
        if game_id not in TREATMENTS:
            raise ValueError(f"game_id must be one of 0..3, got {game_id!r}")
        stability, pay = TREATMENTS[game_id]
        a, b, c, d = UNSTABLE_PARAMS if stability == "unstable" else STABLE_PARAMS
        return cls(a, b, c, d, pay_scale=pay, game_id=game_id, stability=stability)

    @classmethod
    def from_dict(cls, obj: dict) -> "GameSpec":
        """Accept either ``{"game_id": g}`` or explicit ``{"a","b","c","d","pay_scale"}``."""
        if "game_id" in obj and obj["game_id"] is not None:
            return cls.from_id(int(obj["game_id"]))
        try:
            return cls(float(obj["a"]), float(obj["b"]), float(obj["c"]), float(obj["d"]),
                       pay_scale=obj.get("pay_scale", "low"))
        except KeyError as exc:
            raise ValueError(f"game spec missing field {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "d": self.d,
                "pay_scale": self.pay_scale, "game_id": self.game_id,
                "stability": self.stability}


def build_rpsd_matrix(spec: GameSpec) -> np.ndarray:
    """Row player's payoff matrix, rows/columns ordered (R, P, S, D)."""
    a, b, c, d = spec.a, spec.b, spec.c, spec.d
    return np.array([
        [a, 0.0, b, c],
        [b, a, 0.0, c],
        [0.0, b, a, c],
        [d, d, d, 0.0],
    ], dtype=float)


def check_profile(p, tol: float = 1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (4,):
        raise ValueError(f"mixed profile must have 4 entries, got shape {p.shape}")
    if np.any(p < -tol) or np.any(p > 1 + tol) or abs(p.sum() - 1.0) > tol:
        raise ValueError(f"not a probability vector: {p}")
    return p


def expected_payoffs(matrix, opponent) -> np.ndarray:
    """Expected payoff of each pure strategy against a mixed opponent."""
    return np.asarray(matrix, dtype=float) @ check_profile(opponent)


def _is_symmetric_nash(matrix: np.ndarray, p: np.ndarray, tol: float) -> bool:
    u = matrix @ p
    value = p @ u
    support = p > tol
    return bool(np.all(u <= value + tol) and np.all(np.abs(u[support] - value) <= tol))


def find_symmetric_nash(matrix) -> list[np.ndarray]:
    """All symmetric Nash equilibria found by enumerating the 15 supports.

    For each support the indifference system ``M[S,S] p = v 1, sum(p) = 1`` is
    solved; supports with a singular system are skipped. Candidates must be
    feasible and survive a best-response check against every pure strategy.
    Equilibria reached from nested supports are reported once.
    """
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    if m.shape != (n, n):
        raise ValueError("payoff matrix must be square")
    # tolerances relative to the payoff scale so that kappa*M behaves like M
    scale = max(1.0, float(np.max(np.abs(m))))
    tol = NASH_TOL * scale
    found: list[np.ndarray] = []
    for size in range(1, n + 1):
        for support in itertools.combinations(range(n), size):
            idx = list(support)
            system = np.zeros((size + 1, size + 1))
            system[:size, :size] = m[np.ix_(idx, idx)]
            system[:size, size] = -1.0
            system[size, :size] = 1.0
            rhs = np.zeros(size + 1)
            rhs[size] = 1.0
            try:
                sol = np.linalg.solve(system, rhs)
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.isfinite(sol)):
                continue
            weights = sol[:size]
            if np.any(weights < -NASH_TOL):
                continue
            p = np.zeros(n)
            p[idx] = np.clip(weights, 0.0, None)
            p /= p.sum()
            if not _is_symmetric_nash(m, p, tol):
                continue
            if any(np.max(np.abs(p - q)) <= NASH_TOL for q in found):
                continue
            found.append(p)
    return found


def equilibrium_payoff(matrix, profile) -> float:
    p = check_profile(profile, tol=1e-9)
    return float(p @ np.asarray(matrix, dtype=float) @ p)
