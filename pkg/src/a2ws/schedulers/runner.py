from __future__ import annotations

from ..clustersim import (
    DEFAULT_BASE_COST,
    DEFAULT_SIGMA,
    ClusterConfig,
    DurationSampler,
    WorkloadSpec,
    rank_rng,
)
from ..inforing import InfoRing, clamp_radius, radius_default
from ..oscwin import Communicator
from ..taskdeque import TaskDeques, block_partition
from .a2ws import WorkerContext, a2ws_worker
from .baselines import (
    DirectLeader,
    ThreadedLeader,
    Token,
    ctws_worker,
    leader_slowdown,
    lw_worker,
)
from .engine import make_engine
from .records import RunResult, WorkerStats

SCHEDULERS = ("a2ws", "ctws", "lw")


def run_schedule(
    scheduler: str,
    cluster: ClusterConfig,
    n_tasks: int,
    seed: int = 0,
    radius: int | None = None,
    *,
    base_cost: float = DEFAULT_BASE_COST,
    sigma: float = DEFAULT_SIGMA,
    mode: str = "virtual",
    latency_us: float = 0.0,
    debug: bool | None = None,
    lw_slowdown: float | None = None,
    relay_interval: float | None = None,
) -> RunResult:
    """Run one scheduler over ``n_tasks`` synthetic tasks on ``cluster``.

    Virtual runs are deterministic for fixed arguments. ``radius`` only
    matters for A2WS; ``None`` means 20% of the node count.
    """
    if scheduler not in SCHEDULERS:
        raise ValueError(f"unknown scheduler {scheduler!r}; choose from {SCHEDULERS}")
    P = cluster.size
    if n_tasks < P:
        raise ValueError(f"need at least one task per rank ({n_tasks} < {P})")
    workload = WorkloadSpec(n_tasks, base_cost, sigma, seed)
    engine = make_engine(mode, P)
    stats = [WorkerStats(r) for r in range(P)]
    blocks = block_partition(n_tasks, P)
    extra: dict = {}
    used_radius = None

    if scheduler == "lw":
        slow = leader_slowdown(cluster.nodes[0].cores) if lw_slowdown is None else lw_slowdown
        samplers = [
            DurationSampler(node, workload, r, slow if r == 0 else 1.0)
            for r, node in enumerate(cluster.nodes)
        ]
        if mode == "virtual":
            leader = DirectLeader(range(n_tasks), engine.now)
        else:
            leader = ThreadedLeader(range(n_tasks), P, engine.now)
        factories = [
            (lambda r=r: lw_worker(r, leader, engine, samplers[r], stats[r]))
            for r in range(P)
        ]
        leader.start()
        try:
            engine.run(factories)
        finally:
            leader.stop()
        extra["dispatch_log"] = leader.log
        extra["leader_slowdown"] = slow
    else:
        comm = Communicator(P, latency_us=latency_us, debug=debug, seed=seed)
        deques = TaskDeques(comm, n_tasks)
        for r, block in enumerate(blocks):
            deques.init_deque(r, block)
        samplers = [DurationSampler(node, workload, r) for r, node in enumerate(cluster.nodes)]
        counts = [len(b) for b in blocks]
        if scheduler == "a2ws":
            used_radius = clamp_radius(radius or radius_default(P), P)
            ring = InfoRing(comm, used_radius, counts)
            contexts = [
                WorkerContext(
                    r, engine, deques, ring, used_radius, rank_rng(seed, r, 1),
                    samplers[r], stats[r], relay_interval,
                )
                for r in range(P)
            ]
            factories = [(lambda c=c: a2ws_worker(c)) for c in contexts]
            engine.run(factories)
            extra["ring"] = ring
        else:
            token = Token(comm, counts)
            factories = [
                (lambda r=r: ctws_worker(r, token, deques, engine, samplers[r], stats[r]))
                for r in range(P)
            ]
            engine.run(factories)
            extra["token_passes"] = token.passes
        extra["deques"] = deques

    return RunResult(scheduler, cluster.name, n_tasks, seed, used_radius, mode, stats, extra)
