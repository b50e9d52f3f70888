"""Acoustic modelling and inversion on top of the DSL."""
from .analytic import analytic_2d
from .fwi import FwiResult, circle_problem, circle_velocity, fwi, model_error
from .model import SeismicModel, build_damping, critical_dt
from .operators import (AcousticSolver, GradientResult, adjoint_operator, forward_operator,
                        gradient_operator, objective)
from .source import AcquisitionGeometry, ricker
from .special import hankel2_0, j0, y0

__all__ = ["analytic_2d", "FwiResult", "circle_problem", "circle_velocity", "fwi", "model_error", "SeismicModel",
           "build_damping", "critical_dt", "AcousticSolver", "GradientResult",
           "adjoint_operator", "forward_operator", "gradient_operator", "objective",
           "AcquisitionGeometry", "ricker", "hankel2_0", "j0", "y0"]
