"""Per-transition angular momentum and its stochastic averages.

A period-by-period transition (PPT) ``t`` goes from the state of period ``t``
to the state of period ``t + 1`` (periods are 1-based). Samples are computed
per session and never span two sessions.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import stats
from .state_space import (
    SocialState,
    bivector_from_displacements,
    check_simplex,
    cross3,
    get_setting,
    l_from_bivector,
    strategy_index,
)

DEFAULT_REFERENCE = np.full(4, 0.25)


@dataclass(frozen=True)
class Trajectory:
    session_id: str
    game_id: int | None
    states: tuple[SocialState, ...]

    def __post_init__(self):
        states = tuple(SocialState(*(int(v) for v in s)) for s in self.states)
        object.__setattr__(self, "states", states)
        if any(min(s) < 0 for s in states):
            raise ValueError(f"session {self.session_id}: negative strategy count")
        if states and len({s.N for s in states}) != 1:
            raise ValueError(f"session {self.session_id}: states do not share the same N")

    @property
    def N(self) -> int:
        return self.states[0].N

    @property
    def periods(self) -> int:
        return len(self.states)

    @property
    def counts(self) -> np.ndarray:
        return np.asarray(self.states, dtype=np.int64).reshape(-1, 4)

    @property
    def fractions(self) -> np.ndarray:
        return self.counts / float(self.N)

    @property
    def closed(self) -> bool:
        return len(self.states) >= 2 and self.states[0] == self.states[-1]

    def reversed(self) -> "Trajectory":
        return Trajectory(self.session_id, self.game_id, self.states[::-1])


@dataclass(frozen=True)
class AngularSamples:
    """One (L_x, L_y, L_z) row per PPT. ``t`` holds the 1-based PPT index."""

    k: int
    reference: np.ndarray
    t: np.ndarray
    L: np.ndarray
    session_id: np.ndarray
    game_id: np.ndarray

    def __len__(self) -> int:
        return self.L.shape[0]

    @classmethod
    def concat(cls, parts: Sequence["AngularSamples"]) -> "AngularSamples":
        if not parts:
            raise ValueError("nothing to concatenate")
        if len({p.k for p in parts}) != 1:
            raise ValueError("cannot pool samples from different settings")
        return cls(parts[0].k, parts[0].reference,
                   np.concatenate([p.t for p in parts]),
                   np.concatenate([p.L for p in parts]).reshape(-1, 3),
                   np.concatenate([p.session_id for p in parts]),
                   np.concatenate([p.game_id for p in parts]))

    def select(self, mask) -> "AngularSamples":
        return AngularSamples(self.k, self.reference, self.t[mask], self.L[mask],
                              self.session_id[mask], self.game_id[mask])


@dataclass(frozen=True)
class MeanL:
    x: float
    y: float
    z: float
    n: int

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def total(self) -> np.ndarray:
        """Sum of the samples, i.e. mean times count."""
        return self.as_array() * self.n


@dataclass(frozen=True)
class PersistenceReport:
    first_mean: float
    second_mean: float
    delta: float
    p_value: float
    n1: int
    n2: int
    test: stats.TestResult = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {"first_mean": self.first_mean, "second_mean": self.second_mean,
                "delta": self.delta, "p_value": self.p_value,
                "samples": [self.n1, self.n2]}


def _reference(o) -> np.ndarray:
    if o is None:
        return DEFAULT_REFERENCE
    if isinstance(o, SocialState):
        return o.fractions()
    return check_simplex(o, "reference")


def transition_bivectors(traj: Trajectory, o=None) -> np.ndarray:
    """(PPT count, 6) array of bivector components for consecutive states."""
    if traj.periods < 2:
        raise ValueError(f"session {traj.session_id}: need at least 2 states for a transition")
    disp = traj.fractions - _reference(o)
    return bivector_from_displacements(disp[:-1], disp[1:])


def angular_momentum_step(x_t: SocialState, x_t1: SocialState, o=None, k=1) -> np.ndarray:
    """Cross product of the projected displacements of two consecutive states from ``o``."""
    x_t, x_t1 = SocialState(*x_t), SocialState(*x_t1)
    if x_t.N != x_t1.N:
        raise ValueError(f"population size mismatch: {x_t.N} vs {x_t1.N}")
    axes = list(get_setting(k).axes)
    ref = _reference(o)
    a = x_t.fractions()[axes] - ref[axes]
    b = x_t1.fractions()[axes] - ref[axes]
    return cross3(a, b)


def trajectory_samples(traj: Trajectory, o=None, k=1) -> AngularSamples:
    setting = get_setting(k)
    L = l_from_bivector(transition_bivectors(traj, o), setting)
    n = L.shape[0]
    return AngularSamples(setting.k, _reference(o), np.arange(1, n + 1), L,
                          np.full(n, traj.session_id, dtype=object),
                          np.full(n, -1 if traj.game_id is None else traj.game_id))


def pooled_samples(trajs: Iterable[Trajectory], o=None, k=1) -> AngularSamples:
    return AngularSamples.concat([trajectory_samples(tr, o, k) for tr in trajs])


def mean_L(samples) -> MeanL:
    L = samples.L if isinstance(samples, AngularSamples) else np.asarray(samples, dtype=float)
    L = L.reshape(-1, 3)
    if L.shape[0] == 0:
        raise ValueError("cannot average an empty sample set")
    m = L.mean(axis=0)
    return MeanL(float(m[0]), float(m[1]), float(m[2]), L.shape[0])


def strength(m) -> float:
    v = m.as_array() if isinstance(m, MeanL) else np.asarray(m, dtype=float)
    return float(math.sqrt(float(v @ v)))


def combined_scale_samples(samples: AngularSamples) -> np.ndarray:
    """Pool the three k1 component columns as separate scalar samples."""
    if samples.k != 1:
        raise ValueError(f"combined scale is defined for setting k1 only, got k{samples.k}")
    return samples.L.reshape(-1)


def projected_scale_samples(samples: AngularSamples) -> np.ndarray:
    """Per-PPT projection onto the unit (1,1,1) direction, (L_x + L_y + L_z) / sqrt(3)."""
    if samples.k != 1:
        raise ValueError(f"projected scale is defined for setting k1 only, got k{samples.k}")
    return samples.L.sum(axis=1) / math.sqrt(3.0)


def split_samples(trajs: Sequence[Trajectory], o, boundary_period: int):
    """k1 samples of PPTs before and after ``boundary_period``; the crossing PPT is dropped."""
    first, second = [], []
    for tr in trajs:
        if not 1 < boundary_period < tr.periods:
            raise ValueError(f"session {tr.session_id}: boundary {boundary_period} "
                             f"outside period range 1..{tr.periods}")
        s = trajectory_samples(tr, o, 1)
        first.append(s.select(s.t <= boundary_period - 1))
        second.append(s.select(s.t >= boundary_period + 1))
    return AngularSamples.concat(first), AngularSamples.concat(second)


def persistence_split(traj_group: Sequence[Trajectory], o=None,
                      boundary_period: int = 40) -> PersistenceReport:
    first, second = split_samples(traj_group, o, boundary_period)
    a, b = combined_scale_samples(first), combined_scale_samples(second)
    if a.size == 0 or b.size == 0:
        raise ValueError("one half of the split has no samples")
    test = stats.two_sample_t(a, b)
    return PersistenceReport(float(a.mean()), float(b.mean()), float(b.mean() - a.mean()),
                             test.p_value, int(a.size), int(b.size), test)


@dataclass(frozen=True)
class ReferenceSweep:
    references: tuple
    means: tuple[MeanL, ...]
    closed: bool

    def totals(self) -> np.ndarray:
        return np.array([m.total() for m in self.means])

    def max_total_deviation(self) -> float:
        totals = self.totals()
        return float(np.max(np.abs(totals - totals[0])))

    @property
    def reference_independent(self) -> bool:
        return self.max_total_deviation() <= 1e-10

    def dominant_sign_consistent(self) -> bool:
        """True when the component with the largest default-reference magnitude keeps its sign."""
        arr = np.array([m.as_array() for m in self.means])
        comp = int(np.argmax(np.abs(arr).mean(axis=0)))
        signs = np.sign(arr[:, comp])
        return bool(np.all(signs == signs[0]))


def reference_sweep(traj: Trajectory, k, references: Sequence) -> ReferenceSweep:
    """Recompute the mean angular momentum for each reference point.

    For a closed trajectory the sample totals are identical for every
    reference, because the displacement terms telescope to zero.
    """
    if len(references) == 0:
        raise ValueError("reference list is empty")
    refs = np.array([_reference(o) for o in references])
    counts = traj.fractions
    if traj.periods < 2:
        raise ValueError(f"session {traj.session_id}: need at least 2 states for a transition")
    setting = get_setting(k)
    disp = counts[None, :, :] - refs[:, None, :]
    L = l_from_bivector(bivector_from_displacements(disp[:, :-1], disp[:, 1:]), setting)
    n = L.shape[1]
    means = tuple(MeanL(float(m[0]), float(m[1]), float(m[2]), n) for m in L.mean(axis=1))
    return ReferenceSweep(tuple(references), means, traj.closed)


def average_play(traj_group: Sequence[Trajectory], strategy) -> float:
    """Mean fraction of ``strategy`` over every period of every session."""
    if not traj_group:
        raise ValueError("empty trajectory group")
    idx = strategy if isinstance(strategy, (int, np.integer)) else strategy_index(strategy)
    return float(np.concatenate([tr.fractions[:, idx] for tr in traj_group]).mean())


SAMPLE_HEADER = ("session_id", "game_id", "k", "t", "Lx", "Ly", "Lz")


def samples_csv(samples: AngularSamples) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SAMPLE_HEADER)
    for sid, gid, t, row in zip(samples.session_id, samples.game_id, samples.t, samples.L):
        writer.writerow([sid, gid, samples.k, t] + [repr(float(v)) for v in row])
    return buf.getvalue()
