"""Thrust-vectoring control of a spherical pendulum by a gimbal-mounted quadcopter."""

from .plant import PlantParams
from .sim import RateSchedule, SimConfig, TrajectoryLog, run

__all__ = ["PlantParams", "RateSchedule", "SimConfig", "TrajectoryLog", "run"]
__version__ = "0.1.0"
