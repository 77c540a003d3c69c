"""Baseline schedulers: Leader-Workers on-demand dispatch and cyclic
token-based work stealing."""
from __future__ import annotations

import math
import queue
import threading
from collections import deque
from dataclasses import dataclass

from ..oscwin import Communicator, LockMode
from ..taskdeque import TaskDeques, available
from .engine import Execute, Park
from .records import StealRecord, TaskRecord, WorkerStats

DONE = -1


def leader_slowdown(cores: int) -> float:
    """Task-time inflation on the node that also hosts the dispatch thread."""
    return cores / (cores - 1) if cores > 1 else 2.0


@dataclass(frozen=True)
class DispatchEvent:
    rank: int
    requested: float
    replied: float
    task: int
    backlog: int  # undispatched tasks left after the reply


class DirectLeader:
    """Leader for virtual runs: requests are served in virtual-time order."""

    def __init__(self, tasks, clock):
        self._pool = deque(tasks)
        self._clock = clock
        self.log: list[DispatchEvent] = []

    def start(self):
        pass

    def stop(self):
        pass

    def request(self, rank: int) -> int:
        t = self._clock(rank)
        task = self._pool.popleft() if self._pool else DONE
        self.log.append(DispatchEvent(rank, t, t, task, len(self._pool)))
        return task


class ThreadedLeader:
    """A dispatch thread owning the undispatched pool; workers talk to it
    through request/reply queues."""

    def __init__(self, tasks, n_workers: int, clock):
        self._pool = deque(tasks)
        self._clock = clock
        self._requests: queue.Queue = queue.Queue()
        self._replies = [queue.Queue(maxsize=1) for _ in range(n_workers)]
        self._n_workers = n_workers
        self._thread = threading.Thread(target=self._serve, name="lw-leader", daemon=True)
        self.log: list[DispatchEvent] = []

    def start(self):
        self._thread.start()

    def stop(self):
        self._thread.join(timeout=5)

    def _serve(self):
        finished = 0
        while finished < self._n_workers:
            rank, requested = self._requests.get()
            task = self._pool.popleft() if self._pool else DONE
            finished += task == DONE
            self.log.append(DispatchEvent(rank, requested, self._clock(rank), task, len(self._pool)))
            self._replies[rank].put(task)

    def request(self, rank: int) -> int:
        self._requests.put((rank, self._clock(rank)))
        return self._replies[rank].get()


def lw_worker(rank: int, leader, engine, sampler, stats: WorkerStats):
    while True:
        task = leader.request(rank)
        if task == DONE:
            break
        start = engine.now(rank)
        spent = yield Execute(sampler.next())
        stats.executed.append(TaskRecord(rank, task, start, spent))
    stats.finish_time = engine.now(rank)


class Token:
    """Circulating token: a flag plus per-rank remaining-task counts, held in
    a window cell on whichever rank owns it."""

    def __init__(self, comm: Communicator, initial_counts):
        P = comm.size
        self.comm = comm
        self.n_ranks = P
        self.window = comm.create_window("ctws.token", P + 1)
        self.done = comm.create_window("ctws.done", 1)
        with self.window.lock(0, LockMode.EXCLUSIVE):
            self.window.put(0, 0, [1, *initial_counts])
        self.passes = 0

    def held_by(self, rank: int) -> bool:
        with self.window.lock(rank, LockMode.SHARED, origin=rank):
            return bool(self.window.get(rank, 0, 1, origin=rank)[0])

    def counts(self, rank: int) -> list[int]:
        with self.window.lock(rank, LockMode.SHARED, origin=rank):
            return self.window.get(rank, 1, self.n_ranks, origin=rank)

    def pass_on(self, rank: int, counts) -> int:
        nxt = (rank + 1) % self.n_ranks
        with self.window.lock(rank, LockMode.EXCLUSIVE, origin=rank):
            self.window.put(rank, 0, [0], origin=rank)
        with self.window.lock(nxt, LockMode.EXCLUSIVE, origin=rank):
            self.window.put(nxt, 0, [1, *counts], origin=rank)
        self.passes += 1
        return nxt

    def is_done(self, rank: int) -> bool:
        with self.done.lock(rank, LockMode.SHARED, origin=rank):
            return bool(self.done.get(rank, 0, 1, origin=rank)[0])

    def finish(self, rank: int) -> None:
        for r in range(self.n_ranks):
            with self.done.lock(r, LockMode.EXCLUSIVE, origin=rank):
                self.done.put(r, 0, [1], origin=rank)


def _ctws_hold(rank, token: Token, deques: TaskDeques, engine, stats: WorkerStats):
    """Act on the token: steal half of the fullest known deque if ours is
    empty, then pass it on (or end the run)."""
    counts = token.counts(rank)
    counts[rank] = available(deques.headtail(rank))
    while counts[rank] == 0:
        victim = max(
            (r for r in range(token.n_ranks) if r != rank), key=lambda r: (counts[r], -r)
        )
        if counts[victim] <= 0:
            break
        k = math.ceil(counts[victim] / 2)
        start = engine.now(rank)
        outcome = deques.steal_tasks(rank, victim, k)
        stats.steals.append(
            StealRecord(rank, victim, start, engine.now(rank), k, outcome.adjusted, "token")
        )
        counts[victim] = outcome.victim_remaining
        counts[rank] = available(deques.headtail(rank))
    if not any(counts):
        token.finish(rank)
        for r in range(token.n_ranks):
            engine.notify(("ctws", r), rank)
        with token.window.lock(rank, LockMode.EXCLUSIVE, origin=rank):
            token.window.put(rank, 0, [0], origin=rank)
        return
    nxt = token.pass_on(rank, counts)
    engine.notify(("ctws", nxt), rank)


def ctws_worker(rank, token: Token, deques: TaskDeques, engine, sampler, stats):
    while True:
        if token.held_by(rank):
            _ctws_hold(rank, token, deques, engine, stats)
        task = deques.get_task(rank)
        if task is not None:
            start = engine.now(rank)
            spent = yield Execute(sampler.next())
            stats.executed.append(TaskRecord(rank, task, start, spent))
            continue
        if stats.deque_empty_time is None:
            stats.deque_empty_time = engine.now(rank)
        if token.is_done(rank):
            break
        yield Park(("ctws", rank))
    stats.finish_time = max(
        (r.start + r.duration for r in stats.executed), default=engine.now(rank)
    )
