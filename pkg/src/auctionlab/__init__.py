"""Numerical toolkit for budget-constrained parameterized auction mechanisms.

Buyers are described by bidding quantile functions; the toolkit evaluates
five parameterized single-item mechanisms (bid-discounted and paced, first-
and second-price, plus the virtual-value revenue-optimal rule), computes
budget-extracting parameter tuples, maps mechanisms onto strategically
equivalent ones, and cross-checks everything by quadrature and Monte Carlo.
"""

from . import errors, evaluate, mechanisms, oracle, qfspace, solvers, transforms
from .evaluate import OutcomeProfile, QuadratureConfig
from .mechanisms import ExPostOutcome, MechanismSpec, Scenario
from .qfspace import (ExpHead, IntegralAverage, PiecewiseLinear, PowerTail,
                      QuantileFunction, SinHead, Uniform, VirtualQf,
                      increasing_rearrangement, inverse_lipschitz_lower,
                      virtualize)
from .solvers import SolveReport

__version__ = "0.1.0"

__all__ = [
    "errors", "evaluate", "mechanisms", "oracle", "qfspace", "solvers",
    "transforms", "OutcomeProfile", "QuadratureConfig", "ExPostOutcome",
    "MechanismSpec", "Scenario", "ExpHead", "IntegralAverage",
    "PiecewiseLinear", "PowerTail", "QuantileFunction", "SinHead", "Uniform",
    "VirtualQf", "increasing_rearrangement", "inverse_lipschitz_lower",
    "virtualize", "SolveReport",
]
