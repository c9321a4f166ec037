"""Lease-based intersection coordination simulator."""

from ._core import (
    __version__,
    aggregate_bandwidth,
    compare_scenarios,
    controller_step,
    max_supported_vehicles,
    run_scenario,
    stopping_distance,
)

__all__ = [
    "__version__",
    "aggregate_bandwidth",
    "compare_scenarios",
    "controller_step",
    "max_supported_vehicles",
    "run_scenario",
    "stopping_distance",
]
