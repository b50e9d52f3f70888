"""Lowering, optimization passes, cost model and the Operator front end."""
from .operator import Operator, autotune

__all__ = ["Operator", "autotune"]
