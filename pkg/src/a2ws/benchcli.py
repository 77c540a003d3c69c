"""Benchmark harness: single runs, radius sweeps, scheduler comparisons and
per-task trace dumps, all written as CSV."""
from __future__ import annotations

import argparse
import csv
import logging
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .clustersim import (
    DEFAULT_ALPHA,
    DEFAULT_BASE_COST,
    DEFAULT_SIGMA,
    ClusterConfig,
    builtin_config,
    load_config,
)
from .inforing import clamp_radius, radius_default
from .schedulers import SCHEDULERS, RunResult, run_schedule

log = logging.getLogger("a2ws.bench")

RUN_FIELDS = (
    "scheduler", "config", "n_tasks", "radius", "seed", "makespan",
    "steals", "failed_steals", "info_sends", "executed", "status",
)
TRACE_FIELDS = ("scheduler", "config", "n_tasks", "radius", "seed", "rank", "task_id", "start", "duration")
GAIN_FIELDS = ("n_tasks", "config", "gain_percent", "a_median", "b_median", "a", "b")

__all__ = [
    "ExperimentPlan", "gain", "median_makespan", "radius_default", "run_experiment",
    "compare_experiment", "main",
]


def gain(a_median: float, b_median: float) -> float:
    """Percentage by which ``a`` beats ``b``; losses come out negative."""
    if b_median <= 0:
        raise ValueError(f"baseline median must be positive, got {b_median}")
    return (1.0 - a_median / b_median) * 100.0


@dataclass
class ExperimentPlan:
    schedulers: tuple[str, ...]
    cluster: ClusterConfig
    task_counts: tuple[int, ...]
    repetitions: int = 5
    first_seed: int = 1
    radii: tuple[int | None, ...] = (None,)
    base_cost: float = DEFAULT_BASE_COST
    sigma: float = DEFAULT_SIGMA
    mode: str = "virtual"
    latency_us: float = 0.0
    trace: bool = False
    parallel_runs: int = 1
    out: Path = field(default_factory=lambda: Path("."))

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        for s in self.schedulers:
            if s not in SCHEDULERS:
                raise ValueError(f"unknown scheduler {s!r}")
        P = self.cluster.size
        for r in self.radii:
            if r is not None and r < 1:
                raise ValueError(f"radius must be a positive integer, got {r}")
        self.radii = tuple(None if r is None else clamp_radius(r, P) for r in self.radii)
        for n in self.task_counts:
            if n < P:
                raise ValueError(f"need at least one task per rank ({n} < {P})")

    @property
    def seeds(self) -> list[int]:
        return list(range(self.first_seed, self.first_seed + self.repetitions))

    def jobs(self):
        for n in self.task_counts:
            for sched in self.schedulers:
                radii = self.radii if sched == "a2ws" else (None,)
                for radius in radii:
                    for seed in self.seeds:
                        yield sched, n, radius, seed


def _run_one(plan: ExperimentPlan, job) -> RunResult:
    sched, n, radius, seed = job
    return run_schedule(
        sched, plan.cluster, n, seed, radius,
        base_cost=plan.base_cost, sigma=plan.sigma, mode=plan.mode,
        latency_us=plan.latency_us,
    )


def _run_row(res: RunResult) -> dict:
    lost, dup = res.check_exactly_once()
    return {
        "scheduler": res.scheduler,
        "config": res.config,
        "n_tasks": res.n_tasks,
        "radius": "" if res.radius is None else res.radius,
        "seed": res.seed,
        "makespan": f"{res.makespan:.9g}",
        "steals": res.steals_succeeded,
        "failed_steals": res.steals_attempted - res.steals_succeeded,
        "info_sends": res.info_sends,
        "executed": res.total_executed,
        "status": "ok" if not lost and not dup else f"lost={len(lost)} dup={len(dup)}",
    }


def _trace_rows(res: RunResult):
    for rec in res.trace:
        yield {
            "scheduler": res.scheduler, "config": res.config, "n_tasks": res.n_tasks,
            "radius": "" if res.radius is None else res.radius, "seed": res.seed,
            "rank": rec.rank, "task_id": rec.task_id,
            "start": f"{rec.start:.9g}", "duration": f"{rec.duration:.9g}",
        }


def _open_csv(path: Path, fields):
    fh = path.open("w", newline="")
    writer = csv.DictWriter(fh, fieldnames=fields)
    writer.writeheader()
    return fh, writer


def run_experiment(plan: ExperimentPlan) -> list[RunResult]:
    """Execute every run in ``plan`` and write ``runs.csv`` (plus
    ``trace.csv`` when tracing). Rows are flushed as runs finish."""
    try:
        plan.out.mkdir(parents=True, exist_ok=True)
        runs_fh, runs = _open_csv(plan.out / "runs.csv", RUN_FIELDS)
        trace_fh, trace = (
            _open_csv(plan.out / "trace.csv", TRACE_FIELDS) if plan.trace else (None, None)
        )
    except OSError as exc:
        raise OSError(f"cannot write to {plan.out}: {exc}") from exc

    jobs = list(plan.jobs())
    results = []
    try:
        if plan.parallel_runs > 1:
            with ThreadPoolExecutor(plan.parallel_runs) as pool:
                produced = pool.map(lambda j: _run_one(plan, j), jobs)
                for res in produced:
                    results.append(res)
                    _emit(res, runs, runs_fh, trace)
        else:
            for job in jobs:
                res = _run_one(plan, job)
                results.append(res)
                _emit(res, runs, runs_fh, trace)
    finally:
        runs_fh.close()
        if trace_fh:
            trace_fh.close()
    return results


def _emit(res: RunResult, runs, runs_fh, trace) -> None:
    row = _run_row(res)
    runs.writerow(row)
    runs_fh.flush()
    log.info(
        "%s %s n=%d R=%s seed=%d makespan=%.4fs",
        res.scheduler, res.config, res.n_tasks, row["radius"] or "-", res.seed, res.makespan,
    )
    if trace is not None:
        trace.writerows(_trace_rows(res))


def median_makespan(results, scheduler: str, n_tasks: int) -> float:
    spans = [r.makespan for r in results if r.scheduler == scheduler and r.n_tasks == n_tasks]
    if not spans:
        raise ValueError(f"no runs for {scheduler} with {n_tasks} tasks")
    return statistics.median(spans)


def compare_experiment(plan: ExperimentPlan) -> list[dict]:
    """Run both arms of a two-scheduler plan on the same seeds and write
    ``gains.csv`` with one row per task count."""
    if len(plan.schedulers) != 2:
        raise ValueError("a comparison needs exactly two schedulers")
    if len(plan.radii) > 1:
        raise ValueError("a comparison takes a single radius, not a sweep")
    a, b = plan.schedulers
    results = run_experiment(plan)
    rows = []
    for n in plan.task_counts:
        am, bm = median_makespan(results, a, n), median_makespan(results, b, n)
        rows.append({
            "n_tasks": n, "config": plan.cluster.name, "gain_percent": f"{gain(am, bm):.6f}",
            "a_median": f"{am:.9g}", "b_median": f"{bm:.9g}", "a": a, "b": b,
        })
    fh, writer = _open_csv(plan.out / "gains.csv", GAIN_FIELDS)
    with fh:
        writer.writerows(rows)
    return rows


def _int_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _cluster(text: str, alpha: float) -> ClusterConfig:
    if text.startswith("@"):
        return load_config(text[1:], alpha)
    return builtin_config(text, alpha)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="C1..C5, or @path to a node file")
    p.add_argument("--tasks", required=True, type=_int_list, help="task count(s), comma separated")
    radius = p.add_mutually_exclusive_group()
    radius.add_argument("--radius", type=int, help="fixed A2WS radius (default 20%% of nodes)")
    radius.add_argument("--radius-sweep", type=_int_list, help="comma-separated radii")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=1, help="first seed; runs use seed..seed+reps-1")
    p.add_argument("--base-cost", type=float, default=DEFAULT_BASE_COST * 1000, help="ms per task on one core")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--sigma", type=float, default=DEFAULT_SIGMA)
    p.add_argument("--mode", choices=("real", "virtual"), default="virtual")
    p.add_argument("--latency-us", type=float, default=0.0)
    p.add_argument("--trace", action="store_true", help="also write trace.csv")
    p.add_argument("--parallel-runs", type=int, default=1)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="a2ws-bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one scheduler")
    run.add_argument("--scheduler", required=True, choices=SCHEDULERS)
    _common(run)
    cmp_ = sub.add_parser("compare", help="run two schedulers on paired seeds and report gains")
    cmp_.add_argument("--a", required=True, choices=SCHEDULERS)
    cmp_.add_argument("--b", required=True, choices=SCHEDULERS)
    _common(cmp_)
    return parser


def plan_from_args(args: argparse.Namespace) -> ExperimentPlan:
    if args.radius_sweep:
        radii = args.radius_sweep
    elif args.radius is not None:
        radii = (args.radius,)
    else:
        radii = (None,)
    scheds = (args.scheduler,) if args.command == "run" else (args.a, args.b)
    return ExperimentPlan(
        schedulers=scheds,
        cluster=_cluster(args.config, args.alpha),
        task_counts=args.tasks,
        repetitions=args.reps,
        first_seed=args.seed,
        radii=radii,
        base_cost=args.base_cost / 1000.0,
        sigma=args.sigma,
        mode=args.mode,
        latency_us=args.latency_us,
        trace=args.trace,
        parallel_runs=args.parallel_runs,
        out=args.out,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        plan = plan_from_args(args)
        if args.command == "run":
            run_experiment(plan)
        else:
            for row in compare_experiment(plan):
                print(f"{row['config']} n={row['n_tasks']}: {row['a']} vs {row['b']} gain {float(row['gain_percent']):+.2f}%")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
