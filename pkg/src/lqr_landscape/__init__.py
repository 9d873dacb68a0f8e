"""LQR policy optimization: duality certificates, gradient dominance and Gramian sandwiches."""

from .config import Tolerances, get_tolerances, override
from .errors import (
    AssumptionError,
    DimensionError,
    IllConditionedError,
    LQRError,
    NumericalError,
    PlantError,
    SamplingError,
    SingularLiftError,
    StabilityError,
)
from .lti_model import FeedbackGain, Plant, random_plant, structural_report
from .lyap_riccati import cost, gradient, newton_kleinman, solve_care, solve_lyapunov

__version__ = "0.1.0"

__all__ = [
    "AssumptionError",
    "DimensionError",
    "FeedbackGain",
    "IllConditionedError",
    "LQRError",
    "NumericalError",
    "Plant",
    "PlantError",
    "SamplingError",
    "SingularLiftError",
    "StabilityError",
    "Tolerances",
    "cost",
    "get_tolerances",
    "gradient",
    "newton_kleinman",
    "override",
    "random_plant",
    "solve_care",
    "solve_lyapunov",
    "structural_report",
]
