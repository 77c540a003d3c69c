"""Radius-limited load information exchanged over a bidirectional ring.

Rank ``i`` keeps entries for ranks ``i-R .. i+R`` (mod P) in its own window.
Writes into that vector are partitioned: ``i-1`` writes the left half,
``i+1`` the right half and ``i`` its own entry, so neighbours ``put`` without
mutual exclusion between themselves. Each entry carries a dirty flag; a rank
forwards only dirty entries that fall inside a neighbour's half, then clears
the flags.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .oscwin import Communicator, ContractError, LockMode

UNKNOWN = 0.0

# n, t, completed, stamp, via, dirty
_FIELDS = 6
_N, _T, _DONE, _STAMP, _VIA, _DIRTY = range(_FIELDS)


class Cause(Enum):
    SELF_RUNTIME_UPDATE = "self-runtime-update"
    THIEF_STOLE = "thief-stole"
    STEAL_ATTEMPT_FAILED = "steal-attempt-failed"
    VICTIM_DETECTED_THEFT = "victim-detected-theft"


@dataclass(frozen=True)
class ProcessInfo:
    n: int
    t: float = UNKNOWN
    completed: int = 0
    dirty: bool = False
    stamp: int = 0

    @property
    def known(self) -> bool:
        return self.completed >= 1 and self.t > 0

    @property
    def queued_estimate(self) -> int:
        """Tasks still stealable, assuming one is in progress."""
        return max(0, self.n - self.completed - 1)


def clamp_radius(radius: int, n_ranks: int) -> int:
    """Largest usable radius: beyond ``(P-1)//2`` the two halves overlap."""
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    return max(1, min(radius, (n_ranks - 1) // 2))


def radius_default(n_ranks: int) -> int:
    """20% of the rank count, rounded half up, clamped to a usable radius."""
    if n_ranks < 2:
        raise ValueError("need at least two ranks")
    r = int(Fraction(n_ranks, 5) + Fraction(1, 2))
    return clamp_radius(max(1, r), n_ranks)


def subsystem_size(radius: int, n_ranks: int) -> int:
    return min(2 * radius + 1, n_ranks)


def window_ranks(rank: int, radius: int, n_ranks: int) -> list[int]:
    """Ranks ``rank-R .. rank+R`` mod P, without duplicates, in ring order."""
    seen: dict[int, None] = {}
    for d in range(-radius, radius + 1):
        seen.setdefault((rank + d) % n_ranks, None)
    return list(seen)


def ring_distance(a: int, b: int, n_ranks: int) -> int:
    d = (a - b) % n_ranks
    return min(d, n_ranks - d)


def neighbor_send_range(
    rank: int, direction: str, radius: int, n_ranks: int
) -> list[int]:
    """Positions ``rank`` may write into a neighbour's vector.

    ``right`` (to ``rank+1``) covers ``rank-R+1 .. rank``; ``left`` (to
    ``rank-1``) covers ``rank .. rank+R-1``.
    """
    if radius < 1 or n_ranks < 2:
        raise ValueError("need radius >= 1 and at least two ranks")
    if direction == "right":
        offsets = range(-radius + 1, 1)
    elif direction == "left":
        offsets = range(0, radius)
    else:
        raise ValueError(f"direction must be 'left' or 'right', not {direction!r}")
    return list(dict.fromkeys((rank + d) % n_ranks for d in offsets))


def allowed_writers(owner: int, position: int, radius: int, n_ranks: int) -> set[int]:
    """Ranks permitted to write ``position`` of ``owner``'s vector."""
    writers = set()
    for d in range(-radius, radius + 1):
        if (owner + d) % n_ranks != position:
            continue
        if d < 0:
            writers.add((owner - 1) % n_ranks)
        elif d > 0:
            writers.add((owner + 1) % n_ranks)
        else:
            writers.add(owner)
    return writers


class InfoRing:
    """Information vectors of every rank, resident in one window."""

    def __init__(
        self,
        comm: Communicator,
        radius: int,
        initial_counts: Sequence[int],
        name: str = "info",
    ) -> None:
        P = comm.size
        if P < 2:
            raise ValueError("the info ring needs at least two ranks")
        if len(initial_counts) != P:
            raise ValueError("one initial count per rank required")
        self.comm = comm
        self.n_ranks = P
        self.radius = clamp_radius(radius, P)
        self.window = comm.create_window(name, P * _FIELDS)
        self._positions = [window_ranks(i, self.radius, P) for i in range(P)]
        self._position_sets = [set(p) for p in self._positions]
        self._send = [
            {
                (i + 1) % P: neighbor_send_range(i, "right", self.radius, P),
                (i - 1) % P: neighbor_send_range(i, "left", self.radius, P),
            }
            for i in range(P)
        ]
        if P == 2:
            # both neighbours are the same rank
            for i in range(P):
                other = 1 - i
                self._send[i] = {other: [i]}
        self._own = [ProcessInfo(int(n)) for n in initial_counts]
        self._overlay: list[dict[int, ProcessInfo]] = [{} for _ in range(P)]
        self._stamps = itertools.count(1)
        self.sends = [0] * P
        for i in range(P):
            cells = [0] * (P * _FIELDS)
            for j in self._positions[i]:
                cells[j * _FIELDS + _N] = int(initial_counts[j])
                cells[j * _FIELDS + _T] = UNKNOWN
                cells[j * _FIELDS + _VIA] = -1
            with self.window.lock(i, LockMode.EXCLUSIVE):
                self.window.put(i, 0, cells)

    def positions(self, rank: int) -> list[int]:
        return list(self._positions[rank])

    def own(self, rank: int) -> ProcessInfo:
        return self._own[rank]

    # -- local updates ---------------------------------------------------

    def _set_dirty(self, rank: int, positions: Sequence[int]) -> None:
        with self.window.lock(rank, LockMode.EXCLUSIVE, origin=rank):
            for j in positions:
                self.window.put(rank, j * _FIELDS + _DIRTY, [1], origin=rank)

    def update_self(self, rank: int, n: int, t: float, completed: int) -> bool:
        """Refresh ``rank``'s own entry; returns whether it became dirty.

        The entry is dirty when a new runtime sample arrived (``completed``
        grew) or the task count moved, e.g. after a theft was detected.
        """
        old = self._own[rank]
        if n == old.n and completed == old.completed and t == old.t:
            return False
        info = ProcessInfo(n, t, completed, True, next(self._stamps))
        self._own[rank] = info
        base = rank * _FIELDS
        with self.window.lock(rank, LockMode.EXCLUSIVE, origin=rank):
            self.window.put(
                rank, base, [n, t, completed, info.stamp, rank, 1], origin=rank
            )
        return True

    def mark_outdated(self, rank: int, position: int, cause: Cause) -> None:
        cause = Cause(cause)
        if position not in self._position_sets[rank]:
            raise ContractError(
                f"position {position} is outside rank {rank}'s information window"
            )
        is_self = position == rank
        legal = {
            Cause.SELF_RUNTIME_UPDATE: is_self,
            Cause.THIEF_STOLE: True,
            Cause.STEAL_ATTEMPT_FAILED: not is_self,
            Cause.VICTIM_DETECTED_THEFT: is_self,
        }[cause]
        if not legal:
            raise ContractError(f"{cause.value} cannot mark position {position}")
        self._set_dirty(rank, [position])

    def observe(self, rank: int, position: int, n: int, completed: int | None = None):
        """Record a first-hand observation of another rank's task count
        (made by a thief from the victim's cursors)."""
        if position == rank:
            raise ContractError("use update_self for the own entry")
        current = self.snapshot(rank)[position]
        self._overlay[rank][position] = replace(
            current,
            n=int(n),
            completed=current.completed if completed is None else completed,
            stamp=next(self._stamps),
        )

    # -- reads -------------------------------------------------------------

    def _read(self, rank: int) -> list:
        P = self.n_ranks
        with self.window.lock(rank, LockMode.SHARED, origin=rank):
            return self.window.get(rank, 0, P * _FIELDS, origin=rank)

    def _merge(self, rank: int, cells: list) -> dict[int, ProcessInfo]:
        out = {}
        overlay = self._overlay[rank]
        for j in self._positions[rank]:
            b = j * _FIELDS
            if j == rank:
                out[j] = replace(self._own[rank], dirty=bool(cells[b + _DIRTY]))
                continue
            info = ProcessInfo(
                cells[b + _N],
                cells[b + _T],
                cells[b + _DONE],
                bool(cells[b + _DIRTY]),
                cells[b + _STAMP],
            )
            seen = overlay.get(j)
            if seen is not None and seen.stamp > info.stamp:
                info = replace(seen, dirty=info.dirty)
            out[j] = info
        return out

    def snapshot(self, rank: int) -> dict[int, ProcessInfo]:
        """Freshest known entry for every position in ``rank``'s window."""
        return self._merge(rank, self._read(rank))

    def writer_tags(self, rank: int) -> dict[int, int]:
        """Which rank last wrote each position of ``rank``'s vector."""
        cells = self._read(rank)
        return {j: cells[j * _FIELDS + _VIA] for j in self._positions[rank]}

    # -- communication -----------------------------------------------------

    def info_communication(self, rank: int) -> int:
        """Forward dirty entries to the neighbours whose half they fall in,
        then clear the flags. Returns the number of puts issued."""
        P = self.n_ranks
        with self.window.lock(rank, LockMode.EXCLUSIVE, origin=rank):
            cells = self.window.get(rank, 0, P * _FIELDS, origin=rank)
            dirty = [
                j for j in self._positions[rank] if cells[j * _FIELDS + _DIRTY]
            ]
            for j in dirty:
                self.window.put(rank, j * _FIELDS + _DIRTY, [0], origin=rank)
        if not dirty:
            return 0
        dirty_set = set(dirty)
        best = self._merge(rank, cells)
        sends = 0
        for dest, allowed in self._send[rank].items():
            for j in allowed:
                if j not in dirty_set:
                    continue
                if self.comm.debug and rank not in allowed_writers(
                    dest, j, self.radius, P
                ):
                    raise ContractError(
                        f"rank {rank} may not write position {j} of rank {dest}"
                    )
                info = best[j]
                record = [info.n, info.t, info.completed, info.stamp, rank, 1]
                with self.window.lock(dest, LockMode.SHARED, origin=rank):
                    self.window.put(dest, j * _FIELDS, record, origin=rank)
                sends += 1
        self.sends[rank] += sends
        return sends
