"""The adaptive asynchronous work-stealing worker loop."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..clustersim import DurationSampler
from ..inforing import UNKNOWN, Cause, InfoRing
from ..stealpolicy import RateView, ViewEntry, effective_runtime, select_victim, steal_rate
from ..taskdeque import TaskDeques, available
from .engine import Execute
from .records import StealRecord, TaskRecord, WorkerStats


@dataclass
class WorkerContext:
    rank: int
    engine: object
    deques: TaskDeques
    ring: InfoRing | None
    radius: int
    rng: np.random.Generator
    sampler: DurationSampler
    stats: WorkerStats
    # relay ring information every this many seconds while a task runs
    relay_interval: float | None = None


class _A2WSWorker:
    def __init__(self, ctx: WorkerContext):
        self.ctx = ctx
        self.started = 0
        self.completed = 0
        self.busy_time = 0.0

    def now(self) -> float:
        return self.ctx.engine.now(self.ctx.rank)

    def own_n(self) -> int:
        """Tasks started plus tasks still queued."""
        return self.started + available(self.ctx.deques.headtail(self.ctx.rank))

    def mean_runtime(self) -> float:
        return self.busy_time / self.completed if self.completed else UNKNOWN

    def update_process_info(self) -> None:
        # a theft against this rank shows up as a smaller n and marks the
        # entry dirty, as does a fresh runtime sample
        self.ctx.ring.update_self(
            self.ctx.rank, self.own_n(), self.mean_runtime(), self.completed
        )

    def rate_view(self) -> RateView:
        rank = self.ctx.rank
        elapsed = self.now()
        entries = []
        for j, info in self.ctx.ring.snapshot(rank).items():
            if j == rank:
                entries.append(ViewEntry(j, self.own_n(), self.mean_runtime(), 0))
            else:
                t = effective_runtime(info, elapsed)
                entries.append(ViewEntry(j, info.n, t, info.queued_estimate))
        return RateView(tuple(entries), rank, elapsed)

    def try_steal(self):
        ctx, rank = self.ctx, self.ctx.rank
        view = self.rate_view()
        idle = available(ctx.deques.headtail(rank)) == 0
        decision = select_victim(view, steal_rate(view, rank), ctx.rng, idle=idle)
        if decision is None:
            return None
        start = self.now()
        outcome = ctx.deques.steal_tasks(rank, decision.victim, decision.amount)
        victim_info = ctx.ring.snapshot(rank)[decision.victim]
        # what we now know first-hand about the victim's deque
        ctx.ring.observe(
            rank,
            decision.victim,
            victim_info.completed + 1 + outcome.victim_remaining,
        )
        if outcome.adjusted:
            self.update_process_info()
            ctx.ring.mark_outdated(rank, rank, Cause.THIEF_STOLE)
            ctx.ring.mark_outdated(rank, decision.victim, Cause.THIEF_STOLE)
        else:
            ctx.ring.mark_outdated(rank, decision.victim, Cause.STEAL_ATTEMPT_FAILED)
        ctx.stats.steals.append(
            StealRecord(
                rank,
                decision.victim,
                start,
                self.now(),
                decision.amount,
                outcome.adjusted,
                decision.criterion,
            )
        )
        return decision

    def execute(self, duration: float):
        step = self.ctx.relay_interval
        if not step or duration <= step:
            return (yield Execute(duration))
        spent, left = 0.0, duration
        while left > step:
            spent += yield Execute(step)
            left -= step
            self.ctx.stats.info_sends += self.ctx.ring.info_communication(self.ctx.rank)
        return spent + (yield Execute(left))

    def run(self):
        ctx, rank, stats = self.ctx, self.ctx.rank, self.ctx.stats
        while True:
            self.update_process_info()
            decision = None
            if self.completed:
                decision = self.try_steal()
            task = ctx.deques.get_task(rank)
            if task is None:
                if stats.deque_empty_time is None:
                    stats.deque_empty_time = self.now()
                self.update_process_info()
                if decision is None:
                    break
                stats.info_sends += ctx.ring.info_communication(rank)
                continue
            self.started += 1
            self.update_process_info()
            start = self.now()
            spent = yield from self.execute(ctx.sampler.next())
            stats.executed.append(TaskRecord(rank, task, start, spent))
            self.completed += 1
            self.busy_time += spent
            if stats.first_task_done is None:
                stats.first_task_done = self.now()
            # publish the new runtime sample before communicating
            self.update_process_info()
            stats.info_sends += ctx.ring.info_communication(rank)
        stats.info_sends += ctx.ring.info_communication(rank)
        stats.finish_time = self.now()


def a2ws_worker(ctx: WorkerContext):
    """Generator running one rank's A2WS loop until it retires."""
    return _A2WSWorker(ctx).run()
