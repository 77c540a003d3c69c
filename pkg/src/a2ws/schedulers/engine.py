"""Drivers that run worker generators.

A worker is a generator. It yields :class:`Execute` to spend time on a task
(the driver sends back the time actually spent) and :class:`Park` to wait
until another worker calls :meth:`notify` with the same key. Everything else
a worker does happens instantly between yields.

:class:`VirtualEngine` replays all ranks on one thread in virtual-time order
(ties broken by rank), which makes runs deterministic. :class:`ThreadEngine`
gives every rank its own thread and really sleeps.
"""
from __future__ import annotations

import heapq
import threading
import time
from dataclasses import dataclass
from typing import Callable, Generator, Hashable

from ..clustersim import sleep_for


@dataclass(frozen=True)
class Execute:
    duration: float


@dataclass(frozen=True)
class Park:
    key: Hashable


Worker = Generator[object, float, None]


class DeadlockError(RuntimeError):
    pass


class VirtualEngine:
    mode = "virtual"

    def __init__(self, n_ranks: int):
        self.n_ranks = n_ranks
        self._clock = [0.0] * n_ranks
        self._heap: list[tuple[float, int]] = []
        self._parked: dict[Hashable, list[int]] = {}
        self.finish = [0.0] * n_ranks

    def now(self, rank: int) -> float:
        return self._clock[rank]

    def notify(self, key: Hashable, origin: int) -> None:
        t = self._clock[origin]
        for rank in self._parked.pop(key, ()):
            self._clock[rank] = max(self._clock[rank], t)
            heapq.heappush(self._heap, (self._clock[rank], rank))

    def run(self, factories: list[Callable[[], Worker]]) -> None:
        gens = [f() for f in factories]
        pending: list[object] = [None] * self.n_ranks
        self._heap = [(0.0, r) for r in range(self.n_ranks)]
        heapq.heapify(self._heap)
        alive = self.n_ranks
        while self._heap:
            t, rank = heapq.heappop(self._heap)
            self._clock[rank] = t
            try:
                cmd = gens[rank].send(pending[rank])
            except StopIteration:
                self.finish[rank] = t
                alive -= 1
                continue
            if isinstance(cmd, Execute):
                pending[rank] = cmd.duration
                heapq.heappush(self._heap, (t + cmd.duration, rank))
            elif isinstance(cmd, Park):
                pending[rank] = None
                self._parked.setdefault(cmd.key, []).append(rank)
            else:
                raise TypeError(f"worker {rank} yielded {cmd!r}")
        if alive:
            raise DeadlockError(
                f"{alive} workers parked with nobody left to wake them: "
                f"{sorted(self._parked)}"
            )


class ThreadEngine:
    mode = "real"

    def __init__(self, n_ranks: int, park_timeout: float = 0.005):
        self.n_ranks = n_ranks
        self.park_timeout = park_timeout
        self._events: dict[Hashable, threading.Event] = {}
        self._events_lock = threading.Lock()
        self._t0 = time.perf_counter()
        self.finish = [0.0] * n_ranks
        self.errors: list[BaseException] = []

    def now(self, rank: int | None = None) -> float:
        return time.perf_counter() - self._t0

    def _event(self, key: Hashable) -> threading.Event:
        with self._events_lock:
            ev = self._events.get(key)
            if ev is None:
                ev = self._events[key] = threading.Event()
            return ev

    def notify(self, key: Hashable, origin: int) -> None:
        self._event(key).set()

    def _drive(self, rank: int, factory, barrier: threading.Barrier) -> None:
        try:
            barrier.wait()
            gen = factory()
            reply = None
            while True:
                try:
                    cmd = gen.send(reply)
                except StopIteration:
                    break
                if isinstance(cmd, Execute):
                    reply = sleep_for(cmd.duration)
                elif isinstance(cmd, Park):
                    ev = self._event(cmd.key)
                    ev.wait(self.park_timeout)
                    ev.clear()
                    reply = None
                else:
                    raise TypeError(f"worker {rank} yielded {cmd!r}")
            self.finish[rank] = self.now()
        except BaseException as exc:  # surfaced by run()
            self.errors.append(exc)

    def run(self, factories: list[Callable[[], Worker]]) -> None:
        barrier = threading.Barrier(self.n_ranks + 1)
        threads = [
            threading.Thread(
                target=self._drive, args=(r, f, barrier), name=f"rank-{r}", daemon=True
            )
            for r, f in enumerate(factories)
        ]
        for th in threads:
            th.start()
        self._t0 = time.perf_counter()
        barrier.wait()
        for th in threads:
            th.join()
        if self.errors:
            raise self.errors[0]


def make_engine(mode: str, n_ranks: int):
    if mode == "virtual":
        return VirtualEngine(n_ranks)
    if mode == "real":
        return ThreadEngine(n_ranks)
    raise ValueError(f"mode must be 'real' or 'virtual', not {mode!r}")
