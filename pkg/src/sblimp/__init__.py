"""Simulation and control of a soft blimp driven by two tilted rotors.

The planar model tracks velocity with a feedback-linearizing controller that
never commands attitude; a buoyancy pendulum keeps pitch bounded. A spatial
plus-layout extension, parameter sweeps and a command-line front end build on
the same compiled integrator.
"""
from .controller import (auxiliary_input, clamp, closed_form_velocity, closed_loop_pitch_dynamics,
                         feedback_linearize, linearized_pitch_dynamics, steady_state_ratio,
                         velocity_control)
from .experiments import (SweepReport, SweepSpec, calibrate_drag, classify_stability, metrics,
                          static_feasible, sweep)
from .model import (BodyWrench, PlanarState, RotorCommand, allocation_force_matrix,
                    allocation_torque_matrix, body_wrench, coupling_coefficient, state_derivative)
from .params import ControllerGains, DegenerateDesignError, DesignParams, InvalidDesignError
from .simulator import IntegrationDivergedError, SimConfig, SimLog, run, step
from .spatial import SpatialState, spatial_run, spatial_step
from .trajectories import TrajectoryRef

__version__ = "0.1.0"

__all__ = [
    "BodyWrench", "ControllerGains", "DegenerateDesignError", "DesignParams",
    "IntegrationDivergedError", "InvalidDesignError", "PlanarState", "RotorCommand",
    "SimConfig", "SimLog", "SpatialState", "SweepReport", "SweepSpec", "TrajectoryRef",
    "allocation_force_matrix", "allocation_torque_matrix", "auxiliary_input", "body_wrench",
    "calibrate_drag", "clamp", "classify_stability", "closed_form_velocity",
    "closed_loop_pitch_dynamics", "coupling_coefficient", "feedback_linearize",
    "linearized_pitch_dynamics", "metrics", "run", "spatial_run", "spatial_step",
    "state_derivative", "static_feasible", "steady_state_ratio", "step", "sweep",
    "velocity_control",
]
