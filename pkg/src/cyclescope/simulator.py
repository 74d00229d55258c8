"""Synthetic RPSD sessions: N players, random pairwise matching, discrete periods.

Three learning rules are available:

``logit_fictitious_play``
    Each agent keeps recency-weighted beliefs about opponent play and picks a
    strategy by logit choice on the expected payoffs under those beliefs.
``population_logit``
    Every agent redraws by logit choice against the current population mix.
``sampled_replicator``
    Each agent compares last period's payoff with that of a random other agent
    and imitates with probability proportional to the payoff gap.

Every session draws from its own random stream, derived from
``(seed, game_id, session_index)``, so sessions can be generated in any order
or in parallel with identical results.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from .cycle_metrics import Trajectory
from .game_model import GameSpec, build_rpsd_matrix, check_profile
from .state_space import SocialState

# $5 versus $2 per 100 experimental francs
HIGH_PAY_FACTOR = 2.5

RULES = ("logit_fictitious_play", "population_logit", "sampled_replicator")
SEED_MASK = (1 << 64) - 1
CUSTOM_GAME_KEY = 255


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    N: int = 12
    periods: int = 80
    sessions: int = 3
    rule: str = "logit_fictitious_play"
    lam: float = 0.2
    rho: float = 0.2
    payoff_scale: float = 1.0
    seed: int = 0
    initial_state: object = "uniform_random"
    full_information: bool = False

    def __post_init__(self):
        if isinstance(self.initial_state, (list, tuple)):
            object.__setattr__(self, "initial_state", SocialState(*self.initial_state))
        self.validate()

    def validate(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 2 or self.N % 2:
            raise ConfigError(f"N must be an even integer >= 2, got {self.N!r}")
        if not isinstance(self.periods, (int, np.integer)) or self.periods < 1:
            raise ConfigError(f"periods must be a positive integer, got {self.periods!r}")
        if not isinstance(self.sessions, (int, np.integer)) or self.sessions < 1:
            raise ConfigError(f"sessions must be a positive integer, got {self.sessions!r}")
        if self.rule not in RULES:
            raise ConfigError(f"unknown rule {self.rule!r}; choose from {', '.join(RULES)}")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ConfigError(f"lambda must be finite and >= 0, got {self.lam!r}")
        if not np.isfinite(self.rho) or not 0 < self.rho <= 1:
            raise ConfigError(f"rho must lie in (0, 1], got {self.rho!r}")
        if not np.isfinite(self.payoff_scale) or self.payoff_scale <= 0:
            raise ConfigError(f"payoff_scale must be > 0, got {self.payoff_scale!r}")
        if self.full_information and self.rule != "logit_fictitious_play":
            raise ConfigError("full_information only applies to logit_fictitious_play")
        if isinstance(self.initial_state, SocialState):
            if min(self.initial_state) < 0 or self.initial_state.N != self.N:
                raise ConfigError(f"initial_state {tuple(self.initial_state)} "
                                  f"is not a state of {self.N} players")
        elif self.initial_state != "uniform_random":
            raise ConfigError(f"initial_state must be 'uniform_random' or a count vector, "
                              f"got {self.initial_state!r}")

    @property
    def effective_lambda(self) -> float:
        return self.lam * self.payoff_scale

    @classmethod
    def from_dict(cls, obj: dict, **overrides) -> "SimConfig":
        obj = dict(obj)
        if "lambda" in obj:
            obj["lam"] = obj.pop("lambda")
        obj.pop("game", None)
        obj.update(overrides)
        known = set(cls.__dataclass_fields__)
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown simulation fields: {', '.join(sorted(unknown))}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        if isinstance(self.initial_state, SocialState):
            out["initial_state"] = list(self.initial_state)
        return out


def session_rng(seed: int, game_id: int | None, session_index: int) -> np.random.Generator:
    key = [int(seed) & SEED_MASK, CUSTOM_GAME_KEY if game_id is None else int(game_id),
           int(session_index)]
    return np.random.default_rng(np.random.SeedSequence(key))


def random_pairing(N: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """A uniformly random perfect matching of agents 0..N-1."""
    if N < 2 or N % 2:
        raise ValueError(f"pairwise matching needs an even N >= 2, got {N}")
    perm = rng.permutation(N)
    return [(int(min(i, j)), int(max(i, j))) for i, j in perm.reshape(-1, 2)]


def _partners(N: int, rng: np.random.Generator) -> np.ndarray:
    perm = rng.permutation(N).reshape(-1, 2)
    partner = np.empty(N, dtype=np.int64)
    partner[perm[:, 0]] = perm[:, 1]
    partner[perm[:, 1]] = perm[:, 0]
    return partner


def logit_probabilities(payoffs, lam: float) -> np.ndarray:
    u = lam * np.asarray(payoffs, dtype=float)
    u = u - u.max(axis=-1, keepdims=True)
    w = np.exp(u)
    return w / w.sum(axis=-1, keepdims=True)


def _draw(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # one categorical draw per row
    cum = np.cumsum(probs, axis=-1)
    u = rng.random(probs.shape[:-1] + (1,))
    return np.minimum((u >= cum).sum(axis=-1), probs.shape[-1] - 1)


def logit_choice(payoffs, lam: float, rng: np.random.Generator) -> int:
    """Draw strategy i with probability exp(lam u_i) / sum_j exp(lam u_j)."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return int(_draw(logit_probabilities(payoffs, lam), rng))


def belief_update(beliefs, observed: int, rho: float) -> np.ndarray:
    """Move beliefs a fraction ``rho`` toward the observed pure strategy."""
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    b = (1.0 - rho) * check_profile(beliefs, tol=1e-9)
    b[observed] += rho
    return b


def population_step(state: SocialState, game: GameSpec, lam: float,
                    rng: np.random.Generator) -> SocialState:
    """Every agent redraws by logit choice against the current population mix.

    The mix includes the agent itself; the O(1/N) self-exclusion correction is
    omitted.
    """
    state = SocialState(*state)
    mix = state.fractions()
    probs = logit_probabilities(build_rpsd_matrix(game) @ mix, lam)
    return SocialState(*(int(v) for v in rng.multinomial(state.N, probs)))


def _initial_actions(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    if isinstance(cfg.initial_state, SocialState):
        actions = np.repeat(np.arange(4), cfg.initial_state)
        return rng.permutation(actions)
    return rng.integers(0, 4, size=cfg.N)


def _counts(actions: np.ndarray) -> SocialState:
    return SocialState(*(int(v) for v in np.bincount(actions, minlength=4)))


def run_session(cfg: SimConfig, game: GameSpec, session_index: int = 0) -> Trajectory:
    """Simulate one session of ``cfg.periods`` periods."""
    cfg.validate()
    rng = session_rng(cfg.seed, game.game_id, session_index)
    matrix = build_rpsd_matrix(game)
    lam = cfg.effective_lambda
    N = cfg.N
    actions = _initial_actions(cfg, rng)
    states = [_counts(actions)]
    if cfg.rule == "population_logit":
        state = states[0]
        for _ in range(cfg.periods - 1):
            state = population_step(state, game, lam, rng)
            states.append(state)
    elif cfg.rule == "logit_fictitious_play":
        beliefs = np.full((N, 4), 0.25)
        for _ in range(cfg.periods - 1):
            partner = _partners(N, rng)
            if cfg.full_information:
                counts = np.bincount(actions, minlength=4)
                observed = (counts[None, :] - np.eye(4)[actions]) / (N - 1)
            else:
                observed = np.eye(4)[actions[partner]]
            beliefs = (1.0 - cfg.rho) * beliefs + cfg.rho * observed
            probs = logit_probabilities(beliefs @ matrix.T, lam)
            actions = _draw(probs, rng)
            states.append(_counts(actions))
    else:
        span = float(matrix.max() - matrix.min()) or 1.0
        for _ in range(cfg.periods - 1):
            partner = _partners(N, rng)
            payoff = matrix[actions, actions[partner]]
            # a uniformly chosen other agent for every agent
            other = (np.arange(N) + rng.integers(1, N, size=N)) % N
            gap = payoff[other] - payoff
            switch = rng.random(N) < np.clip(gap / span, 0.0, 1.0)
            actions = np.where(switch, actions[other], actions)
            states.append(_counts(actions))
    return Trajectory(f"g{game.game_id if game.game_id is not None else 'x'}s{session_index + 1}",
                      game.game_id, tuple(states))


def run_sessions(cfg: SimConfig, game: GameSpec, workers: int | None = None,
                 first_session: int = 0) -> list[Trajectory]:
    """All ``cfg.sessions`` sessions; the result does not depend on ``workers``."""
    indices = range(first_session, first_session + cfg.sessions)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda i: run_session(cfg, game, i), indices))
    return [run_session(cfg, game, i) for i in indices]


# Output of ``calibration.calibrate_direction()`` with its default grid and seed.
CALIBRATED = {"lam": 1.0, "rho": 0.02, "payoff_scale": 1.0, "full_information": False}


def calibrated_config(**overrides) -> SimConfig:
    params = dict(CALIBRATED)
    params.update(overrides)
    return SimConfig(**params)


def default_configs(seed: int = 0, sessions: int = 3, periods: int = 80) -> dict[int, SimConfig]:
    """One configuration per treatment; high pay scales logit precision up."""
    base = calibrated_config(seed=seed, sessions=sessions, periods=periods)
    return {g: replace(base, payoff_scale=base.payoff_scale * pay_factor(GameSpec.from_id(g)))
            for g in range(4)}


def pay_factor(game: GameSpec) -> float:
    return HIGH_PAY_FACTOR if game.pay_scale == "high" else 1.0
