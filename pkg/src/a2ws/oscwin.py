"""In-process emulation of one-sided (RMA-style) communication windows.

A :class:`Communicator` owns ``size`` ranks. A window created on it exposes
one memory segment per rank; any rank may ``put``/``get`` into any other
rank's segment, apply an atomic lane-wise fetch-and-add to a packed
head/tail word, and take shared or exclusive locks on a (window, rank)
pair. Ranks are threads of one process.

Environment knobs (read when a communicator is built without explicit
arguments):

``A2WS_DEBUG``
    non-empty and not ``0`` enables lock-held assertions on put/get and the
    lock-ordering watchdog.
``A2WS_LATENCY_US``
    upper bound ``L`` of a uniform ``[0, L]`` microsecond sleep injected
    before every remote operation.
"""
from __future__ import annotations

import os
import random
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterator, Sequence, TypeVar

T = TypeVar("T")

LANE_BITS = 32
_LANE_MASK = (1 << LANE_BITS) - 1
_LANE_LIMIT = 1 << (LANE_BITS - 1)


class WindowError(RuntimeError):
    """Base class for window faults."""


class BoundsError(WindowError, IndexError):
    """Access outside a window segment."""


class ContractError(WindowError):
    """A precondition of the window protocol was violated."""


class LockOrderError(ContractError):
    """A lock request that could deadlock under the acquisition order."""


class CellKind(Enum):
    SCALAR = "scalar-word"
    PACKED_HEADTAIL = "packed-headtail"


class LockMode(Enum):
    SHARED = "shared"
    EXCLUSIVE = "exclusive"


@dataclass(frozen=True)
class HeadTail:
    """Deque cursors: ``head`` is the next task the owner runs, ``tail`` the
    last stealable one. The deque is empty iff ``tail < head``."""

    head: int
    tail: int

    @property
    def empty(self) -> bool:
        return self.tail < self.head

    @property
    def available(self) -> int:
        return max(0, self.tail - self.head + 1)


def pack_headtail(head: int, tail: int) -> int:
    if not 0 <= head < _LANE_LIMIT:
        raise OverflowError(f"head {head} does not fit a {LANE_BITS}-bit lane")
    if not -_LANE_LIMIT <= tail < _LANE_LIMIT:
        raise OverflowError(f"tail {tail} does not fit a {LANE_BITS}-bit lane")
    return (head << LANE_BITS) | (tail & _LANE_MASK)


def unpack_headtail(word: int) -> HeadTail:
    head = word >> LANE_BITS
    tail = word & _LANE_MASK
    if tail >= _LANE_LIMIT:
        tail -= 1 << LANE_BITS
    return HeadTail(head, tail)


class _RWLock:
    # New shared requests queue behind a waiting exclusive one so thieves
    # cannot starve an appending owner.
    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = False
        self._writers_waiting = 0

    def acquire(self, mode: LockMode) -> None:
        with self._cond:
            if mode is LockMode.SHARED:
                while self._writer or self._writers_waiting:
                    self._cond.wait()
                self._readers += 1
            else:
                self._writers_waiting += 1
                try:
                    while self._writer or self._readers:
                        self._cond.wait()
                finally:
                    self._writers_waiting -= 1
                self._writer = True

    def release(self, mode: LockMode) -> None:
        with self._cond:
            if mode is LockMode.SHARED:
                self._readers -= 1
            else:
                self._writer = False
            self._cond.notify_all()

    @property
    def state(self) -> tuple[int, bool]:
        return self._readers, self._writer


class _Segment:
    __slots__ = ("cells", "mutex", "rwlock")

    def __init__(self, cell_count: int) -> None:
        self.cells: list = [0] * cell_count
        self.mutex = threading.Lock()
        self.rwlock = _RWLock()


def _env_flag(name: str) -> bool:
    value = os.environ.get(name, "")
    return bool(value) and value != "0"


class Communicator:
    """A set of ``size`` ranks sharing one-sided windows."""

    def __init__(
        self,
        size: int,
        latency_us: float | None = None,
        debug: bool | None = None,
        seed: int | None = None,
    ) -> None:
        if size < 1:
            raise ValueError(f"communicator size must be positive, got {size}")
        self.size = size
        if latency_us is None:
            latency_us = float(os.environ.get("A2WS_LATENCY_US", "0") or 0)
        if latency_us < 0:
            raise ValueError("latency must be non-negative")
        self.latency_us = latency_us
        self.debug = _env_flag("A2WS_DEBUG") if debug is None else debug
        self._latency_rng = random.Random(seed)
        self._windows: dict[str, Window] = {}
        self._registry_lock = threading.Lock()
        self._held: dict[int, list[tuple[str, int, LockMode]]] = {}

    def create_window(
        self, window_id: str, cell_count: int, kind: CellKind = CellKind.SCALAR
    ) -> "Window":
        """Collectively create a window with one zeroed segment per rank."""
        if cell_count <= 0:
            raise ValueError(f"cell count must be positive, got {cell_count}")
        with self._registry_lock:
            if window_id in self._windows:
                raise WindowError(f"window {window_id!r} already exists")
            window = Window(self, window_id, cell_count, CellKind(kind))
            self._windows[window_id] = window
        return window

    def window(self, window_id: str) -> "Window":
        return self._windows[window_id]

    def held_locks(self, origin: int) -> list[tuple[str, int, LockMode]]:
        return list(self._held.get(origin, ()))

    def _delay(self, origin: int | None, target: int) -> None:
        if self.latency_us > 0 and origin != target:
            time.sleep(self._latency_rng.uniform(0.0, self.latency_us) * 1e-6)


class Window:
    """Handle to one window id; addresses every rank's segment."""

    def __init__(
        self, comm: Communicator, window_id: str, cell_count: int, kind: CellKind
    ) -> None:
        self.comm = comm
        self.window_id = window_id
        self.cell_count = cell_count
        self.kind = kind
        self._segments = [_Segment(cell_count) for _ in range(comm.size)]
        self.history: list | None = None

    def __repr__(self) -> str:
        return (
            f"Window({self.window_id!r}, cells={self.cell_count}, "
            f"kind={self.kind.value}, ranks={self.comm.size})"
        )

    def _segment(self, target: int) -> _Segment:
        if not 0 <= target < self.comm.size:
            raise ValueError(f"target rank {target} outside [0, {self.comm.size})")
        return self._segments[target]

    def _check_range(self, offset: int, length: int) -> None:
        if offset < 0 or length < 0 or offset + length > self.cell_count:
            raise BoundsError(
                f"cells [{offset}, {offset + length}) outside window "
                f"{self.window_id!r} of {self.cell_count} cells"
            )

    def _check_locked(self, target: int, origin: int | None) -> None:
        if not self.comm.debug or origin is None:
            return
        for wid, rank, _ in self.comm._held.get(origin, ()):
            if wid == self.window_id and rank == target:
                return
        raise ContractError(
            f"rank {origin} accessed {self.window_id!r}@{target} without a lock"
        )

    # -- locking ---------------------------------------------------------

    @contextmanager
    def lock(
        self, target: int, mode: LockMode, origin: int | None = None
    ) -> Iterator[None]:
        segment = self._segment(target)
        held = self.comm._held.setdefault(origin, []) if origin is not None else None
        if held is not None:
            for wid, rank, held_mode in held:
                if wid == self.window_id and rank == target:
                    raise ContractError(
                        f"rank {origin} already holds {self.window_id!r}@{target}"
                    )
                if self.comm.debug and held_mode is LockMode.EXCLUSIVE:
                    raise LockOrderError(
                        f"rank {origin} requested {self.window_id!r}@{target} "
                        f"while holding {wid!r}@{rank} exclusively"
                    )
        self.comm._delay(origin, target)
        segment.rwlock.acquire(mode)
        entry = (self.window_id, target, mode)
        if held is not None:
            held.append(entry)
        try:
            yield
        finally:
            if held is not None:
                held.remove(entry)
            segment.rwlock.release(mode)

    def with_lock(
        self,
        target: int,
        mode: LockMode,
        body: Callable[[], T],
        origin: int | None = None,
    ) -> T:
        with self.lock(target, mode, origin):
            return body()

    def lock_state(self, target: int) -> tuple[int, bool]:
        """(shared holder count, exclusive held) for diagnostics."""
        return self._segment(target).rwlock.state

    # -- data movement ---------------------------------------------------

    def put(
        self,
        target: int,
        offset: int,
        values: Sequence,
        origin: int | None = None,
    ) -> None:
        segment = self._segment(target)
        values = list(values)
        self._check_range(offset, len(values))
        self._check_locked(target, origin)
        self.comm._delay(origin, target)
        with segment.mutex:
            segment.cells[offset : offset + len(values)] = values

    def get(
        self, target: int, offset: int, length: int, origin: int | None = None
    ) -> list:
        segment = self._segment(target)
        self._check_range(offset, length)
        self._check_locked(target, origin)
        self.comm._delay(origin, target)
        with segment.mutex:
            return segment.cells[offset : offset + length]

    def compare_and_swap(
        self, target: int, offset: int, expected, new, origin: int | None = None
    ):
        """Atomically store ``new`` if the cell equals ``expected``; return
        the value found."""
        segment = self._segment(target)
        self._check_range(offset, 1)
        with segment.mutex:
            found = segment.cells[offset]
            if found == expected:
                segment.cells[offset] = new
                if self.history is not None:
                    self.history.append((target, offset, found, new, origin))
            return found

    def fetch_add_packed(
        self,
        target: int,
        delta_head: int,
        delta_tail: int,
        origin: int | None = None,
        offset: int = 0,
    ) -> HeadTail:
        """Atomically add lane-wise to a packed head/tail word; return the
        old cursors."""
        if self.kind is not CellKind.PACKED_HEADTAIL:
            raise ContractError(
                f"fetch_add_packed on {self.kind.value} window {self.window_id!r}"
            )
        segment = self._segment(target)
        self._check_range(offset, 1)
        self.comm._delay(origin, target)
        while True:
            word = segment.cells[offset]
            old = unpack_headtail(word)
            new = pack_headtail(old.head + delta_head, old.tail + delta_tail)
            if self.compare_and_swap(target, offset, word, new, origin) == word:
                return old

    def read_headtail(self, target: int, offset: int = 0) -> HeadTail:
        return self.fetch_add_packed(target, 0, 0, offset=offset)

    def record_history(self) -> list:
        """Start logging successful CAS updates in linearization order."""
        self.history = []
        return self.history
