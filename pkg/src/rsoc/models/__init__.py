from .base import (DryFrictionSpec, DynamicsModel, complex_step_jacobians,
                   finite_diff_jacobians, friction_impulse, sticking_joints)
from .cartpole import CartPole
from .cube import Cube
from .double_pendulum import DoublePendulum
from .hopper import Hopper2D
from .mechanics import MechanicalModel, SingularityError, ground_reference
from .pendulum import Pendulum
from .quadrotor import Quadrotor2D
from .simple import FunctionModel, LinearModel, Ramp, double_integrator

__all__ = [
    "CartPole", "Cube", "DoublePendulum", "DryFrictionSpec", "DynamicsModel",
    "FunctionModel", "Hopper2D", "LinearModel", "MechanicalModel", "Pendulum",
    "Quadrotor2D", "Ramp", "SingularityError", "complex_step_jacobians",
    "double_integrator", "finite_diff_jacobians", "friction_impulse",
    "ground_reference", "sticking_joints",
]
