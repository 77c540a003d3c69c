"""Per-rank task deques: the owner consumes at the head, thieves take from the
tail.

Both cursors live in one packed word per rank, so every claim (an owner
``get_task`` or a thief's tail shift) is a single linearized fetch-and-add.
Slot contents are guarded by a per-rank deque lock: thieves copy slots under
a shared lock, and a rank appends stolen tasks to its own deque under an
exclusive one.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

from .oscwin import CellKind, Communicator, HeadTail, LockMode, pack_headtail


@dataclass(frozen=True)
class StealOutcome:
    stolen: tuple[int, ...]
    requested: int
    adjusted: int
    victim_before: HeadTail

    @property
    def victim_remaining(self) -> int:
        """Tasks left in the victim deque right after this theft."""
        return self.victim_before.available - self.adjusted


def available(ht: HeadTail) -> int:
    return max(0, ht.tail - ht.head + 1)


def block_partition(n_tasks: int, n_ranks: int) -> list[range]:
    """Contiguous blocks; the first ``n_tasks % n_ranks`` ranks get one extra."""
    if n_ranks < 1 or n_tasks < 0:
        raise ValueError("need n_ranks >= 1 and n_tasks >= 0")
    base, extra = divmod(n_tasks, n_ranks)
    blocks, start = [], 0
    for rank in range(n_ranks):
        size = base + (rank < extra)
        blocks.append(range(start, start + size))
        start += size
    return blocks


class TaskDeques:
    """The set of deques of all ranks of a communicator.

    ``capacity`` is the global task count: a deque never holds more tasks
    than exist, and slot indices never exceed the tasks its owner has run
    plus the tasks it holds.
    """

    def __init__(self, comm: Communicator, capacity: int, name: str = "deque"):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.comm = comm
        self.capacity = capacity
        self.slots = comm.create_window(f"{name}.slots", capacity, CellKind.SCALAR)
        self.cursors = comm.create_window(
            f"{name}.headtail", 1, CellKind.PACKED_HEADTAIL
        )
        for rank in range(comm.size):
            self._store_cursors(rank, HeadTail(0, -1))

    def _store_cursors(self, rank: int, ht: HeadTail) -> None:
        with self.cursors.lock(rank, LockMode.EXCLUSIVE):
            self.cursors.put(rank, 0, [pack_headtail(ht.head, ht.tail)])

    def init_deque(self, rank: int, tasks: Sequence[int]) -> HeadTail:
        """Load ``tasks`` before any worker starts."""
        tasks = list(tasks)
        if len(tasks) > self.capacity:
            raise ValueError("more tasks than deque capacity")
        with self.slots.lock(rank, LockMode.EXCLUSIVE):
            if tasks:
                self.slots.put(rank, 0, tasks)
        ht = HeadTail(0, len(tasks) - 1)
        self._store_cursors(rank, ht)
        return ht

    def headtail(self, rank: int) -> HeadTail:
        return self.cursors.read_headtail(rank)

    def get_task(self, rank: int) -> int | None:
        """Owner-only: claim the head task, or ``None`` when empty."""
        with self.slots.lock(rank, LockMode.SHARED, origin=rank):
            while True:
                old = self.cursors.fetch_add_packed(rank, 1, 0, origin=rank)
                if old.head <= old.tail:
                    return self.slots.get(rank, old.head, 1, origin=rank)[0]
                self.cursors.fetch_add_packed(rank, -1, 0, origin=rank)
                # tail below head - 1 means a thief overshot and has not yet
                # given the excess back; the deque may not really be empty
                if old.tail >= old.head - 1:
                    return None
                time.sleep(0)

    def steal_tasks(self, thief: int, victim: int, k: int) -> StealOutcome:
        """Take up to ``k`` tasks from the tail of ``victim`` and append them
        to the thief's own deque."""
        if not 0 <= victim < self.comm.size:
            raise ValueError(f"victim rank {victim} out of range")
        if victim == thief:
            raise ValueError("a rank cannot steal from itself")
        if k < 1:
            raise ValueError(f"steal amount must be >= 1, got {k}")

        with self.slots.lock(victim, LockMode.SHARED, origin=thief):
            old = self.cursors.fetch_add_packed(victim, 0, -k, origin=thief)
            adjusted = min(available(old), k)
            if adjusted < k:
                self.cursors.fetch_add_packed(victim, 0, k - adjusted, origin=thief)
            stolen = (
                self.slots.get(victim, old.tail - adjusted + 1, adjusted, origin=thief)
                if adjusted
                else []
            )

        if stolen:
            # temporary buffer -> own deque; tail moves only after the slots
            # are written so no thief can copy an unwritten slot
            with self.slots.lock(thief, LockMode.EXCLUSIVE, origin=thief):
                own = self.cursors.fetch_add_packed(thief, 0, 0, origin=thief)
                self.slots.put(thief, own.tail + 1, stolen, origin=thief)
                self.cursors.fetch_add_packed(thief, 0, adjusted, origin=thief)
        return StealOutcome(tuple(stolen), k, adjusted, old)
