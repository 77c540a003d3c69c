"""A2WS and the two baseline schedulers, plus the drivers that run them."""
from .a2ws import WorkerContext, a2ws_worker
from .baselines import DONE, Token, ctws_worker, leader_slowdown, lw_worker
from .engine import DeadlockError, Execute, Park, ThreadEngine, VirtualEngine, make_engine
from .records import RunResult, StealRecord, TaskRecord, WorkerStats
from .runner import SCHEDULERS, run_schedule

__all__ = [
    "DONE", "DeadlockError", "Execute", "Park", "RunResult", "SCHEDULERS",
    "StealRecord", "TaskRecord", "ThreadEngine", "Token", "VirtualEngine",
    "WorkerContext", "WorkerStats", "a2ws_worker", "ctws_worker",
    "leader_slowdown", "lw_worker", "make_engine", "run_schedule",
]
