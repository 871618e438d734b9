"""Age-structured SEIR model of tuberculosis transmission with preferential mixing."""

from .errors import ModelError
from .mixing import MixingSpec, contact_matrix, force_of_infection, mixing_fractions
from .model import ModelParams, StateVec, initial_state, preset, rhs
from .simulate import AnnualIncidence, Trajectory, annual_new_cases, integrate

__version__ = "0.1.0"

__all__ = [
    "AnnualIncidence",
    "MixingSpec",
    "ModelError",
    "ModelParams",
    "StateVec",
    "Trajectory",
    "annual_new_cases",
    "contact_matrix",
    "force_of_infection",
    "initial_state",
    "integrate",
    "mixing_fractions",
    "preset",
    "rhs",
]
