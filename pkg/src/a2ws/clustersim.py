"""Heterogeneous cluster model and synthetic workload.

A node with ``c`` cores runs one task in ``base_cost / c**alpha`` seconds,
times a lognormal noise factor. One rank runs per node.
"""
from __future__ import annotations

import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_ALPHA = 0.9
DEFAULT_BASE_COST = 0.05
DEFAULT_SIGMA = 0.02

# node count per core type, C1..C5
_CONFIG_COUNTS = {
    "C1": {24: 2, 16: 1, 8: 1, 4: 1, 2: 1, 1: 2},
    "C2": {24: 4, 16: 2, 8: 2, 4: 2, 2: 2, 1: 4},
    "C3": {24: 8, 16: 4, 8: 4, 4: 4, 2: 4, 1: 8},
    "C4": {24: 16, 16: 8, 8: 8, 4: 8, 2: 8, 1: 16},
    "C5": {24: 32, 16: 16, 8: 16, 4: 16, 2: 16, 1: 32},
}


@dataclass(frozen=True)
class NodeSpec:
    cores: int
    alpha: float = DEFAULT_ALPHA
    label: str = ""

    def __post_init__(self):
        if self.cores < 1:
            raise ValueError(f"a node needs at least one core, got {self.cores}")

    @property
    def speed(self) -> float:
        return float(self.cores) ** self.alpha


@dataclass(frozen=True)
class ClusterConfig:
    nodes: tuple[NodeSpec, ...]
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) < 2:
            raise ValueError("a cluster needs at least two nodes")

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def cores(self) -> list[int]:
        return [n.cores for n in self.nodes]

    def with_alpha(self, alpha: float) -> "ClusterConfig":
        return ClusterConfig(
            tuple(NodeSpec(n.cores, alpha, n.label) for n in self.nodes), self.name
        )


@dataclass(frozen=True)
class WorkloadSpec:
    n_tasks: int
    base_cost: float = DEFAULT_BASE_COST
    sigma: float = DEFAULT_SIGMA
    seed: int = 0

    def __post_init__(self):
        if self.base_cost <= 0:
            raise ValueError("base cost must be positive")
        if self.sigma < 0:
            raise ValueError("noise sigma must be non-negative")
        if self.n_tasks < 0:
            raise ValueError("task count must be non-negative")


def builtin_config(name: str, alpha: float = DEFAULT_ALPHA) -> ClusterConfig:
    """One of C1..C5. Ranks are laid out fastest node type first, one block
    per type, so the 1-core ranks close the ring."""
    key = name.upper()
    if key not in _CONFIG_COUNTS:
        raise ValueError(f"unknown configuration {name!r}; expected C1..C5")
    nodes = []
    for cores, count in _CONFIG_COUNTS[key].items():
        nodes.extend(NodeSpec(cores, alpha, f"{cores}c") for _ in range(count))
    return ClusterConfig(tuple(nodes), key)


_LINE = re.compile(r"^\s*cores\s*=\s*(\d+)(?:\s+alpha\s*=\s*([0-9.eE+-]+))?\s*$")


def parse_config(text: str, name: str = "custom", alpha: float = DEFAULT_ALPHA):
    """Parse ``cores=<int> [alpha=<float>]`` lines; ``#`` starts a comment."""
    nodes = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ValueError(f"line {lineno}: expected 'cores=<int> [alpha=<float>]'")
        a = float(m.group(2)) if m.group(2) else alpha
        nodes.append(NodeSpec(int(m.group(1)), a, f"{m.group(1)}c"))
    return ClusterConfig(tuple(nodes), name)


def load_config(path: str | Path, alpha: float = DEFAULT_ALPHA) -> ClusterConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.stem, alpha)


def mean_duration(node: NodeSpec, workload: WorkloadSpec) -> float:
    """Noise-free task duration on ``node``."""
    return workload.base_cost / node.speed


def task_duration(node: NodeSpec, workload: WorkloadSpec, rng: np.random.Generator):
    d = mean_duration(node, workload)
    if workload.sigma > 0:
        d *= rng.lognormal(0.0, workload.sigma)
    return d


def ideal_runtime(cluster: ClusterConfig, workload: WorkloadSpec) -> float:
    """Total tasks over aggregate speed: the makespan with zero imbalance."""
    speed = sum(1.0 / mean_duration(n, workload) for n in cluster.nodes)
    return workload.n_tasks / speed


def rank_rng(seed: int, rank: int, stream: int = 0) -> np.random.Generator:
    """Independent generator per (run seed, rank, stream)."""
    return np.random.default_rng([seed, rank, stream])


class DurationSampler:
    """Per-rank duration stream; identical in both execution modes."""

    def __init__(self, node: NodeSpec, workload: WorkloadSpec, rank: int, scale=1.0):
        self.node = node
        self.workload = workload
        self.scale = scale
        self._rng = rank_rng(workload.seed, rank)

    def next(self) -> float:
        return task_duration(self.node, self.workload, self._rng) * self.scale


def execute_task(
    node: NodeSpec, workload: WorkloadSpec, rng: np.random.Generator, mode: str
) -> float:
    """Run one synthetic task. ``real`` sleeps for the sampled duration and
    returns the wall time spent; ``virtual`` just returns the sample."""
    d = task_duration(node, workload, rng)
    if mode == "virtual":
        return d
    if mode != "real":
        raise ValueError(f"mode must be 'real' or 'virtual', not {mode!r}")
    return sleep_for(d)


def sleep_for(duration: float) -> float:
    start = time.perf_counter()
    time.sleep(duration)
    return time.perf_counter() - start


def total_work(cluster: ClusterConfig, workload: WorkloadSpec, counts: Sequence[int]):
    """Noise-free work of running ``counts[r]`` tasks on each rank."""
    return sum(c * mean_duration(n, workload) for n, c in zip(cluster.nodes, counts))
