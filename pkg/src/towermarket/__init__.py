"""Operator and TowerCo market model: assignment, pricing, outsourcing and games."""

__version__ = "0.1.0"

from .coordinated import CoordinationProblem, CoordinationResult, offset, reduced_market, solve
from .errors import (
    DegenerateBaselineError,
    InfeasibleError,
    ModelError,
    NoEligibleEquilibriumError,
    SizeGuardError,
    UndefinedRatioError,
)
from .game import (
    ActionGrid,
    GridEquilibrium,
    PayoffTensor,
    best_response_top,
    build_grid,
    eligible,
    solve_lexicographic,
    verify_constrained_nash,
)
from .market import MarketConfig, MarketOutcome, PriceVector, assign_market, scale_report, utility, utility_table
from .optimize import (
    OptimizerSettings,
    Optimum,
    enumerate_assignment_regions,
    optimize_bargaining,
    optimize_ordered_product,
    optimize_sum,
)
from .outsourcing import OutsourcingScenario, ValueReport, gain_ratio, outsource
from .selfish import SelfishSweepResult, deviated_utility, sweep

__all__ = [name for name in dir() if not name.startswith("_")]
