"""Memory-hierarchy design-space exploration for DNN workloads."""

from ._core import (
    ConfigError,
    Error,
    GraphError,
    ModelError,
    ParseError,
    WorkloadGraph,
    evaluate,
    families,
    generate,
    load_workload,
    parse_capacity,
    parse_workload,
    pareto_indices,
    stats,
    sweep,
)

__all__ = [
    "ConfigError",
    "Error",
    "GraphError",
    "ModelError",
    "ParseError",
    "WorkloadGraph",
    "evaluate",
    "families",
    "generate",
    "load_workload",
    "parse_capacity",
    "parse_workload",
    "pareto_indices",
    "stats",
    "sweep",
]
