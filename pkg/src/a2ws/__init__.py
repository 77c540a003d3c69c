"""Adaptive asynchronous work stealing on an emulated one-sided-communication
substrate, with two baseline schedulers and a heterogeneous-cluster harness."""
from .clustersim import ClusterConfig, NodeSpec, WorkloadSpec, builtin_config, ideal_runtime
from .inforing import radius_default
from .schedulers import RunResult, run_schedule

__version__ = "0.1.0"

__all__ = [
    "ClusterConfig", "NodeSpec", "RunResult", "WorkloadSpec", "builtin_config",
    "ideal_runtime", "radius_default", "run_schedule",
]
