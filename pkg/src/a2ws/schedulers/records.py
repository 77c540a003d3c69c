from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field


@dataclass(frozen=True)
class TaskRecord:
    rank: int
    task_id: int
    start: float
    duration: float


@dataclass(frozen=True)
class StealRecord:
    thief: int
    victim: int
    start: float
    end: float
    requested: int
    adjusted: int
    criterion: str = ""

    @property
    def succeeded(self) -> bool:
        return self.adjusted > 0


@dataclass
class WorkerStats:
    rank: int
    executed: list[TaskRecord] = field(default_factory=list)
    steals: list[StealRecord] = field(default_factory=list)
    info_sends: int = 0
    finish_time: float = 0.0
    first_task_done: float | None = None
    deque_empty_time: float | None = None

    @property
    def steals_attempted(self) -> int:
        return len(self.steals)

    @property
    def steals_succeeded(self) -> int:
        return sum(s.succeeded for s in self.steals)

    @property
    def tasks_stolen(self) -> int:
        return sum(s.adjusted for s in self.steals)

    @property
    def mean_duration(self) -> float:
        if not self.executed:
            return 0.0
        return sum(r.duration for r in self.executed) / len(self.executed)


@dataclass
class RunResult:
    scheduler: str
    config: str
    n_tasks: int
    seed: int
    radius: int | None
    mode: str
    stats: list[WorkerStats]
    extra: dict = field(default_factory=dict)

    @property
    def makespan(self) -> float:
        """Time at which the last task completed."""
        return max(
            (r.start + r.duration for s in self.stats for r in s.executed), default=0.0
        )

    @property
    def trace(self) -> list[TaskRecord]:
        return sorted(
            (r for s in self.stats for r in s.executed), key=lambda r: (r.start, r.rank)
        )

    @property
    def steals(self) -> list[StealRecord]:
        return sorted((x for s in self.stats for x in s.steals), key=lambda x: x.start)

    @property
    def executed_counts(self) -> list[int]:
        return [len(s.executed) for s in self.stats]

    @property
    def total_executed(self) -> int:
        return sum(self.executed_counts)

    @property
    def steals_attempted(self) -> int:
        return sum(s.steals_attempted for s in self.stats)

    @property
    def steals_succeeded(self) -> int:
        return sum(s.steals_succeeded for s in self.stats)

    @property
    def info_sends(self) -> int:
        return sum(s.info_sends for s in self.stats)

    def execution_counts(self) -> Counter:
        """How many times each task id ran."""
        return Counter(r.task_id for s in self.stats for r in s.executed)

    def check_exactly_once(self) -> tuple[list[int], list[int]]:
        """(lost ids, duplicated ids)."""
        counts = self.execution_counts()
        lost = [t for t in range(self.n_tasks) if counts[t] == 0]
        dup = sorted(t for t, c in counts.items() if c > 1 or not 0 <= t < self.n_tasks)
        return lost, dup
