"""Feed-forward force design for a 2-D overhead crane.

Pipeline: nonlinear crane model, linearization, controllability check,
pole placement, equilibrium shift, Lyapunov certificate, closed-loop
simulation and export of the resulting force profiles.
"""

from .errors import CraneError
from .model import CraneParams, ConstantRopeCrane, VaryingRopeCrane
from .simulate import (
    Scenario,
    Trajectory,
    compare_scenarios,
    design,
    integrate_closed_loop,
    integrate_open_loop,
    reference_scenario,
    settle_time,
)
from .synthesis import ChannelAssignment, ackermann, gain_transform, place_decoupled

__all__ = [
    "ChannelAssignment",
    "ConstantRopeCrane",
    "CraneError",
    "CraneParams",
    "Scenario",
    "Trajectory",
    "VaryingRopeCrane",
    "ackermann",
    "compare_scenarios",
    "design",
    "gain_transform",
    "integrate_closed_loop",
    "integrate_open_loop",
    "reference_scenario",
    "place_decoupled",
    "settle_time",
]
