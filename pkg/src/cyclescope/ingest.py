"""Read and write session data as CSV.

Two layouts are understood:

* action level, ``session_id,period,subject_id,action``: one row per subject
  and period, aggregated into strategy counts;
* state level, ``session_id,period,n_R,n_P,n_S,n_D``: one row per period.

Sessions keep the order in which they first appear. Periods are 1-based and
must be contiguous.
"""

from __future__ import annotations

import csv
import io
import re
from collections import OrderedDict

from .cycle_metrics import Trajectory
from .game_model import STRATEGY_INDEX
from .state_space import SocialState

ACTION_HEADER = ("session_id", "period", "subject_id", "action")
STATE_HEADER = ("session_id", "period", "n_R", "n_P", "n_S", "n_D")

_LABEL = re.compile(r"^[A-Za-z0-9_-]+$")


class ParseError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


def _rows(text: str, header: tuple[str, ...]):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if not isinstance(text, str):
        text = text.read()
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty input")
    found = tuple(f.strip() for f in lines[0].split(","))
    if found != header:
        raise ParseError(f"expected header {','.join(header)!r}, got {lines[0]!r}", row=1)
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(fields)}", row=number)
        yield number, fields


def _label(value: str, what: str, row: int) -> str:
    if not _LABEL.match(value):
        raise ParseError(f"invalid {what} {value!r}", row=row)
    return value


def _int(value: str, what: str, row: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {value!r}", row=row) from None


def _check_periods(session: str, periods: dict, first_rows: dict):
    expected = 1
    for period in sorted(periods):
        if period != expected:
            missing = expected if period > expected else period
            raise ParseError(f"session {session}: missing period {missing}",
                             row=first_rows[period])
        expected += 1


def parse_actions(text, game_id: int | None = None) -> list[Trajectory]:
    sessions: OrderedDict[str, dict[int, dict[str, int]]] = OrderedDict()
    first_rows: dict[str, dict[int, int]] = {}
    for row, (sid, period_s, subject, action) in _rows(text, ACTION_HEADER):
        sid = _label(sid, "session_id", row)
        subject = _label(subject, "subject_id", row)
        period = _int(period_s, "period", row)
        if period < 1:
            raise ParseError(f"period must be positive, got {period}", row=row)
        if action not in STRATEGY_INDEX:
            raise ParseError(f"unknown action {action!r}", row=row)
        by_period = sessions.setdefault(sid, {})
        first_rows.setdefault(sid, {}).setdefault(period, row)
        choices = by_period.setdefault(period, {})
        if subject in choices:
            raise ParseError(f"duplicate entry for session {sid} period {period} "
                             f"subject {subject}", row=row)
        choices[subject] = STRATEGY_INDEX[action]
    trajectories = []
    for sid, by_period in sessions.items():
        _check_periods(sid, by_period, first_rows[sid])
        states, n = [], None
        for period in sorted(by_period):
            choices = by_period[period]
            if n is None:
                n = len(choices)
            elif len(choices) != n:
                raise ParseError(f"session {sid}: inconsistent N, period {period} has "
                                 f"{len(choices)} subjects, expected {n}",
                                 row=first_rows[sid][period])
            counts = [0, 0, 0, 0]
            for strategy in choices.values():
                counts[strategy] += 1
            states.append(SocialState(*counts))
        trajectories.append(Trajectory(sid, game_id, tuple(states)))
    return trajectories


def parse_states(text, game_id: int | None = None) -> list[Trajectory]:
    sessions: OrderedDict[str, dict[int, SocialState]] = OrderedDict()
    first_rows: dict[str, dict[int, int]] = {}
    sizes: dict[str, int] = {}
    for row, fields in _rows(text, STATE_HEADER):
        sid = _label(fields[0], "session_id", row)
        period = _int(fields[1], "period", row)
        if period < 1:
            raise ParseError(f"period must be positive, got {period}", row=row)
        counts = [_int(v, name, row) for v, name in zip(fields[2:], STATE_HEADER[2:])]
        if any(c < 0 for c in counts):
            raise ParseError("negative strategy count", row=row)
        state = SocialState(*counts)
        n = sizes.setdefault(sid, state.N)
        if state.N != n:
            raise ParseError(f"session {sid}: counts sum to {state.N}, expected N={n}", row=row)
        if n == 0:
            raise ParseError("empty population", row=row)
        by_period = sessions.setdefault(sid, {})
        if period in by_period:
            raise ParseError(f"duplicate period {period} in session {sid}", row=row)
        by_period[period] = state
        first_rows.setdefault(sid, {})[period] = row
    trajectories = []
    for sid, by_period in sessions.items():
        _check_periods(sid, by_period, first_rows[sid])
        states = tuple(by_period[p] for p in sorted(by_period))
        trajectories.append(Trajectory(sid, game_id, states))
    return trajectories


def states_csv(trajectories) -> str:
    """Canonical state-level CSV; ``parse_states`` inverts it."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(STATE_HEADER)
    for tr in trajectories:
        for period, state in enumerate(tr.states, start=1):
            writer.writerow([tr.session_id, period, *state])
    return buf.getvalue()
