"""Social-state lattice, the four 3D coordinate settings and the 4D bivector.

A transition between two simplex points ``x -> x'`` observed from reference
``o`` has six antisymmetric components ``B_ij = a_i b_j - a_j b_i`` with
``a = x - o`` and ``b = x' - o``. Every setting's 3D angular momentum is a
signed selection of these six numbers.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .game_model import STRATEGIES, STRATEGY_INDEX

R, P, S, D = range(4)

# canonical upper-triangle order of the bivector components
PAIRS = ((R, P), (R, S), (R, D), (P, S), (P, D), (S, D))
PAIR_NAMES = tuple(STRATEGIES[i] + STRATEGIES[j] for i, j in PAIRS)
_PAIR_SLOT = {pair: n for n, pair in enumerate(PAIRS)}

SIMPLEX_TOL = 1e-12


class SocialState(NamedTuple):
    n_R: int
    n_P: int
    n_S: int
    n_D: int

    @property
    def N(self) -> int:
        return self.n_R + self.n_P + self.n_S + self.n_D

    def fractions(self) -> np.ndarray:
        return np.asarray(self, dtype=float) / self.N


@dataclass(frozen=True)
class Setting:
    k: int
    x: int
    y: int
    z: int
    origin: int

    @property
    def axes(self) -> tuple[int, int, int]:
        return (self.x, self.y, self.z)

    @property
    def label(self) -> str:
        return "-".join(STRATEGIES[i] for i in self.axes) + ";" + STRATEGIES[self.origin]


SETTINGS = {
    1: Setting(1, R, P, S, D),
    2: Setting(2, P, S, D, R),
    3: Setting(3, S, D, R, P),
    4: Setting(4, D, R, P, S),
}

# sign each (setting, component) should carry when play cycles R -> P -> S -> R
EXPECTED_SIGNS = {
    (1, "x"): "+", (1, "y"): "+", (1, "z"): "+",
    (2, "x"): "0", (2, "y"): "0", (2, "z"): "+",
    (3, "x"): "0", (3, "y"): "-", (3, "z"): "0",
    (4, "x"): "+", (4, "y"): "0", (4, "z"): "0",
}

COMPONENTS = ("x", "y", "z")


def get_setting(k) -> Setting:
    if isinstance(k, Setting):
        return k
    try:
        return SETTINGS[int(k)]
    except (KeyError, ValueError, TypeError):
        raise ValueError(f"setting must be one of 1..4, got {k!r}") from None


def lattice_size(N: int) -> int:
    return (N + 1) * (N + 2) * (N + 3) // 6


def enumerate_lattice(N: int) -> list[SocialState]:
    """Every social state of N players, ordered lexicographically by (n_R, n_P, n_S)."""
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"population size must be a positive integer, got {N!r}")
    N = int(N)
    states = []
    for r in range(N + 1):
        for p in range(N + 1 - r):
            for s in range(N + 1 - r - p):
                states.append(SocialState(r, p, s, N - r - p - s))
    return states


def lattice_csv(N: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n_R", "n_P", "n_S", "n_D"])
    writer.writerows(enumerate_lattice(N))
    return buf.getvalue()


def check_simplex(point, name: str = "point") -> np.ndarray:
    v = np.asarray(point, dtype=float)
    if v.shape[-1] != 4:
        raise ValueError(f"{name} must have 4 components")
    if np.any(np.abs(v.sum(axis=-1) - 1.0) > SIMPLEX_TOL):
        raise ValueError(f"{name} components must sum to 1")
    return v


def project(point4, k) -> np.ndarray:
    """Read off the three axis coordinates of ``point4`` under setting ``k``."""
    setting = get_setting(k)
    v = check_simplex(point4)
    return v[..., list(setting.axes)]


def bivector(from4, to4, o4) -> np.ndarray:
    """Six components ordered (RP, RS, RD, PS, PD, SD). Broadcasts over leading axes."""
    a = check_simplex(from4, "from4") - check_simplex(o4, "o4")
    b = check_simplex(to4, "to4") - np.asarray(o4, dtype=float)
    return bivector_from_displacements(a, b)


def bivector_from_displacements(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty(np.broadcast_shapes(a.shape, b.shape)[:-1] + (6,))
    for n, (i, j) in enumerate(PAIRS):
        out[..., n] = a[..., i] * b[..., j] - a[..., j] * b[..., i]
    return out


def bivector_component(B: np.ndarray, i: int, j: int) -> np.ndarray:
    """``B_ij`` for any ordered pair of distinct strategies, via antisymmetry."""
    if (i, j) in _PAIR_SLOT:
        return B[..., _PAIR_SLOT[(i, j)]]
    return -B[..., _PAIR_SLOT[(j, i)]]


def l_from_bivector(B, k) -> np.ndarray:
    """3D angular momentum under setting ``k``: (B_qr, B_rp, B_pq) for axes (p, q, r)."""
    setting = get_setting(k)
    B = np.asarray(B, dtype=float)
    p, q, r = setting.axes
    return np.stack([
        bivector_component(B, q, r),
        bivector_component(B, r, p),
        bivector_component(B, p, q),
    ], axis=-1)


def cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.stack([
        a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
        a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
        a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
    ], axis=-1)


def strategy_index(token: str) -> int:
    try:
        return STRATEGY_INDEX[token]
    except KeyError:
        raise ValueError(f"unknown strategy {token!r}") from None
