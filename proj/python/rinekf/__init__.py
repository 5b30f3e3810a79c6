"""Robust invariant EKF for legged-robot state estimation."""

from ._rinekf import *  # noqa: F401,F403
from ._rinekf import (
    Config,
    MeasurementLog,
    Trajectory,
    ate,
    rpe,
    run_filter,
    simulate,
)

__all__ = [
    "Config",
    "MeasurementLog",
    "Trajectory",
    "ate",
    "rpe",
    "run_filter",
    "simulate",
]
