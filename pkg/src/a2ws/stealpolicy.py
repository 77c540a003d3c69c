"""Steal-rate arithmetic and victim selection.

All functions are pure. They accept ``int``/``float`` or ``fractions.Fraction``
inputs and keep the arithmetic in whatever type they are given, so exact
checks can run on rationals.

A rank's *steal rate* is the gap between its speed-weighted fair share of the
tasks visible in its window and the tasks it holds: positive means it should
take work, negative means it has work to give.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real
from typing import Sequence

import numpy as np

from .inforing import ProcessInfo

CLOSEST_RATE = "closest-rate"
IN_PAIR = "in-pair"


@dataclass(frozen=True)
class ViewEntry:
    rank: int
    n: Real
    t: Real
    available: int = 0


@dataclass(frozen=True)
class RateView:
    """Snapshot of a window with effective runtimes already substituted."""

    entries: tuple[ViewEntry, ...]
    self_rank: int
    elapsed: float = 0.0

    def __post_init__(self):
        if not any(e.rank == self.self_rank for e in self.entries):
            raise ValueError("the view must contain its own rank")

    def entry(self, rank: int) -> ViewEntry:
        for e in self.entries:
            if e.rank == rank:
                return e
        raise KeyError(rank)

    @classmethod
    def from_pairs(
        cls, self_rank: int, pairs: Sequence[tuple], elapsed: float = 0.0
    ) -> "RateView":
        """Build from ``(rank, n, t[, available])`` tuples."""
        return cls(tuple(ViewEntry(*p) for p in pairs), self_rank, elapsed)


@dataclass(frozen=True)
class StealDecision:
    victim: int
    amount: int
    criterion: str


def effective_runtime(entry: ProcessInfo, elapsed: float) -> float:
    """Mean task runtime, or the elapsed wall time for a rank that has not
    finished a task yet."""
    if entry.completed >= 1 and entry.t > 0:
        return entry.t
    if elapsed <= 0:
        raise ValueError("elapsed time must be positive")
    return elapsed


def steal_rate(view: RateView, target: int):
    """``sum(n) / (t_target * sum(1/t)) - n_target`` over the window."""
    if not view.entries:
        raise ValueError("empty window")
    total_n = sum(e.n for e in view.entries)
    total_speed = sum(1 / e.t for e in view.entries)
    me = view.entry(target)
    return total_n / (me.t * total_speed) - me.n


def steal_rates(view: RateView) -> dict[int, Real]:
    if not view.entries:
        raise ValueError("empty window")
    total_n = sum(e.n for e in view.entries)
    total_speed = sum(1 / e.t for e in view.entries)
    return {e.rank: total_n / (e.t * total_speed) - e.n for e in view.entries}


def pair_runtime(n, t, s):
    """Predicted finishing time of a rank holding ``n + s`` tasks."""
    if t <= 0:
        raise ValueError("runtime must be positive")
    return (n + s) * t


def _gamma(s, thief, victim):
    return max(pair_runtime(victim[0], victim[1], -s), pair_runtime(thief[0], thief[1], s))


def round_steal(s, thief: tuple, victim: tuple) -> int:
    """Round a fractional steal rate to whichever neighbouring integer gives
    the pair the smaller finishing time; ties go to the floor."""
    lo, hi = math.floor(s), math.ceil(s)
    if lo == hi:
        d = lo
    elif _gamma(lo, thief, victim) <= _gamma(hi, thief, victim):
        d = lo
    else:
        d = hi
    return max(0, int(d))


def pair_rate(thief: tuple, victim: tuple):
    """Steal rate of ``thief`` restricted to the two-rank window."""
    n_i, t_i = thief
    n_j, t_j = victim
    if t_i <= 0 or t_j <= 0:
        raise ValueError("runtimes must be positive")
    return (n_i + n_j) * t_j / (t_j + t_i) - n_i


def _round_half_up(x) -> int:
    return math.floor(x + 0.5)


def _draw(rng, candidates: list, weights: list):
    w = np.asarray(weights, dtype=float)
    idx = rng.choice(len(candidates), p=w / w.sum()) if len(candidates) > 1 else 0
    return candidates[idx]


def closest_rate_weight(s_self, s_j) -> float:
    return 1.0 / (1.0 + abs(float(s_self) + float(s_j)))


def select_victim(
    view: RateView, s_self, rng: np.random.Generator, idle: bool = False
) -> StealDecision | None:
    """Pick a victim in the window, or ``None`` when no steal is warranted.

    First criterion: ranks with a negative rate and stealable tasks, drawn
    with probability peaking where the two rates cancel. Second, used only
    when the first finds nobody: ranks whose two-rank pair rate is positive,
    drawn proportionally to it.

    A thief with a non-positive rate gets ``None`` unless it is ``idle``
    (nothing left queued), in which case only the second criterion applies.
    """
    if s_self <= 0 and not idle:
        return None
    me = view.entry(view.self_rank)
    thief = (me.n, me.t)
    rates = steal_rates(view)

    candidates, weights = [], []
    for e in view.entries:
        if s_self <= 0:
            break
        if e.rank == view.self_rank or e.available <= 0:
            continue
        s_j = rates[e.rank]
        if s_j >= 0:
            continue
        amount = min(
            round_steal(s_self, thief, (e.n, e.t)), _round_half_up(-s_j), e.available
        )
        if amount >= 1:
            candidates.append(StealDecision(e.rank, amount, CLOSEST_RATE))
            weights.append(closest_rate_weight(s_self, s_j))
    if candidates:
        return _draw(rng, candidates, weights)

    for e in view.entries:
        if e.rank == view.self_rank or e.available <= 0:
            continue
        p = pair_rate(thief, (e.n, e.t))
        if p <= 0:
            continue
        amount = min(round_steal(p, thief, (e.n, e.t)), e.available)
        if amount >= 1:
            candidates.append(StealDecision(e.rank, amount, IN_PAIR))
            weights.append(float(p))
    if candidates:
        return _draw(rng, candidates, weights)
    return None
