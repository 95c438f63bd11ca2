"""Simultaneous price cuts paid for by the outsourcing gain.

Every operator ``j`` cuts its exponent by ``eps_j`` and gains reputation
``(1 + eta * eps_j)``. Operator ``j`` receives ``delta * R_top * w_j`` from
outsourcing, where ``R_top`` is the baseline revenue of the best-reputation
operator and ``w_j`` the regime weight. The offset

    O_j(eps) = R_j(eps) + delta * R_top * w_j - R_j

must stay non-negative; negative offsets are mapped to ``+inf`` so that a
product of offsets behaves as a barrier objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateBaselineError, InfeasibleError
from .market import MarketConfig, MarketOutcome, PriceVector, market_outcome
from .selfish import MAX_EPSILON, reduced_inputs

TOWERCO_OPERATED = "towerco_operated"
SMART_OPERATOR_OPERATED = "smart_operator_operated"
REGIMES = (TOWERCO_OPERATED, SMART_OPERATOR_OPERATED)

FIXED_POINT = "fixed-point"
BARRIER_DESCENT = "barrier-descent"
MODES = (FIXED_POINT, BARRIER_DESCENT)

_BISECT_TOL = 1e-13
_CONVERGENCE_TOL = 1e-10


def regime_weights(regime: str, num_operators: int) -> tuple[float, ...]:
    """Gain weights per regime.

    When the best-reputation operator runs the tower it keeps its own saving
    and also collects the fees of the ``J0 - 1`` others, so its weight is
    ``J0 - 1``; every other weight is one.
    """
    if regime == TOWERCO_OPERATED:
        return (1.0,) * num_operators
    if regime == SMART_OPERATOR_OPERATED:
        return (1.0,) * (num_operators - 1) + (float(max(num_operators - 1, 1)),)
    raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")


@dataclass(frozen=True)
class CoordinationProblem:
    """Inputs of the coordinated reduction.

    ``gain_weights`` defaults to :func:`regime_weights`. The constructor
    computes the baseline outcome and rejects baselines where an operator
    earns nothing.
    """

    config: MarketConfig
    prices: PriceVector
    delta: float
    eta: float
    regime: str = TOWERCO_OPERATED
    gain_weights: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if not isinstance(self.prices, PriceVector):
            object.__setattr__(self, "prices", PriceVector(tuple(self.prices)))
        self.prices.validate(self.config)
        if not 0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 0.5), got {self.delta!r}")
        if not 0 <= self.eta < 1:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta!r}")
        J = self.config.num_operators
        if self.gain_weights is None:
            object.__setattr__(self, "gain_weights", regime_weights(self.regime, J))
        else:
            if self.regime not in REGIMES:
                raise ValueError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
            object.__setattr__(self, "gain_weights", tuple(float(w) for w in self.gain_weights))
        if len(self.gain_weights) != J or any(not w > 0 for w in self.gain_weights):
            raise ValueError(f"need {J} positive gain weights, got {self.gain_weights!r}")
        if self.baseline.degenerate:
            raise DegenerateBaselineError(f"baseline revenues {self.baseline.revenues} contain a zero")

    @property
    def baseline(self) -> MarketOutcome:
        return market_outcome(self.config, np.asarray(self.prices.exponents))

    @property
    def gains(self) -> np.ndarray:
        """Outsourcing gain ``delta * R_top * w_j`` of each operator."""
        top = self.baseline.revenues[-1]
        return self.delta * top * np.asarray(self.gain_weights)


@dataclass(frozen=True)
class CoordinationResult:
    epsilon: tuple[float, ...]
    reduced_revenues: tuple[float, ...]
    revenue_ratios: tuple[float, ...]
    global_ratios: tuple[float, ...]
    offsets: tuple[float, ...]
    assignment_preserved: bool
    mode: str
    regime: str
    delta: float
    gain_weights: tuple[float, ...]
    iterations: int

    def to_dict(self) -> dict:
        return {
            "epsilon": list(self.epsilon),
            "reduced_revenues": list(self.reduced_revenues),
            "revenue_ratios": list(self.revenue_ratios),
            "global_ratios": list(self.global_ratios),
            "offsets": list(self.offsets),
            "assignment_preserved": self.assignment_preserved,
            "mode": self.mode,
            "regime": self.regime,
            "delta": self.delta,
            "gain_weights": list(self.gain_weights),
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CoordinationResult":
        return cls(
            epsilon=tuple(data["epsilon"]),
            reduced_revenues=tuple(data["reduced_revenues"]),
            revenue_ratios=tuple(data["revenue_ratios"]),
            global_ratios=tuple(data["global_ratios"]),
            offsets=tuple(data["offsets"]),
            assignment_preserved=data["assignment_preserved"],
            mode=data["mode"],
            regime=data["regime"],
            delta=data["delta"],
            gain_weights=tuple(data["gain_weights"]),
            iterations=data["iterations"],
        )


def reduced_market(problem: CoordinationProblem, epsilon: Sequence[float]) -> MarketOutcome:
    """Market after every operator applies its own cut."""
    eps = np.asarray(epsilon, dtype=float)
    if eps.shape != (problem.config.num_operators,):
        raise ValueError(f"expected {problem.config.num_operators} reduction factors, got shape {eps.shape}")
    b, rep = reduced_inputs(problem.config, problem.prices, eps, problem.eta)
    return market_outcome(problem.config, b, rep)


def _raw_offsets(problem: CoordinationProblem, outcome: MarketOutcome) -> np.ndarray:
    return np.asarray(outcome.revenues) + problem.gains - np.asarray(problem.baseline.revenues)


def offset(problem: CoordinationProblem, epsilon: Sequence[float], operator: int) -> float:
    """Offset of ``operator`` (1-based), or ``math.inf`` when it is negative."""
    J = problem.config.num_operators
    if not 1 <= operator <= J:
        raise IndexError(f"operator {operator} out of range 1..{J}")
    value = float(_raw_offsets(problem, reduced_market(problem, epsilon))[operator - 1])
    return value if value >= 0 else math.inf


def offsets(problem: CoordinationProblem, epsilon: Sequence[float]) -> tuple[float, ...]:
    raw = _raw_offsets(problem, reduced_market(problem, epsilon))
    return tuple(float(v) if v >= 0 else math.inf for v in raw)


def barrier_objective(problem: CoordinationProblem, epsilon: Sequence[float]) -> float:
    """Product of barrier offsets; ``+inf`` outside ``[0, 1)`` or when infeasible."""
    eps = np.asarray(epsilon, dtype=float)
    if np.any(eps < 0) or np.any(eps >= 1):
        return math.inf
    values = offsets(problem, eps)
    if any(math.isinf(v) for v in values):
        return math.inf
    return float(np.prod(values))


def is_feasible(problem: CoordinationProblem, epsilon: Sequence[float]) -> bool:
    return not any(math.isinf(v) for v in offsets(problem, epsilon))


def global_revenues(problem: CoordinationProblem, epsilon: Sequence[float]) -> tuple[float, ...]:
    """Operator revenue after cuts plus outsourcing gain."""
    R = np.asarray(reduced_market(problem, epsilon).revenues) + problem.gains
    return tuple(float(r) for r in R)


def _result(problem: CoordinationProblem, eps: np.ndarray, mode: str, iterations: int) -> CoordinationResult:
    outcome = reduced_market(problem, eps)
    R0 = np.asarray(problem.baseline.revenues)
    R = np.asarray(outcome.revenues)
    raw = R + problem.gains - R0
    if np.any(raw < 0):
        raise InfeasibleError(f"no feasible reduction found; offsets {raw.tolist()}")
    return CoordinationResult(
        epsilon=tuple(float(e) for e in eps),
        reduced_revenues=tuple(float(r) for r in R),
        revenue_ratios=tuple(float(r) for r in R / R0),
        global_ratios=tuple(float(r) for r in (R + problem.gains) / R0),
        offsets=tuple(float(v) for v in raw),
        assignment_preserved=outcome.assignment == problem.baseline.assignment,
        mode=mode,
        regime=problem.regime,
        delta=problem.delta,
        gain_weights=problem.gain_weights,
        iterations=iterations,
    )


def _largest_admissible(problem: CoordinationProblem, eps: np.ndarray, j: int) -> float:
    # Operator j's utility rises with eps_j at every level, so both the
    # preserved assignment and its own revenue loss cut out an interval.
    base_assignment = problem.baseline.assignment
    R0j = problem.baseline.revenues[j]
    gain = problem.gains[j]

    def ok(value: float) -> bool:
        trial = eps.copy()
        trial[j] = value
        out = reduced_market(problem, trial)
        return out.assignment == base_assignment and out.revenues[j] + gain - R0j >= 0

    lo, hi = float(eps[j]), MAX_EPSILON
    if ok(hi):
        return hi
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _solve_fixed_point(problem: CoordinationProblem, max_sweeps: int) -> CoordinationResult:
    eps = np.zeros(problem.config.num_operators)
    for sweep_no in range(1, max_sweeps + 1):
        previous = eps.copy()
        for j in range(len(eps)):
            eps[j] = _largest_admissible(problem, eps, j)
        if np.max(np.abs(eps - previous)) < _CONVERGENCE_TOL:
            return _result(problem, eps, FIXED_POINT, sweep_no)
    return _result(problem, eps, FIXED_POINT, max_sweeps)


def _solve_barrier(problem: CoordinationProblem, max_sweeps: int) -> CoordinationResult:
    x0 = np.zeros(problem.config.num_operators)
    res = minimize(
        lambda x: barrier_objective(problem, x),
        x0,
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 400 * max_sweeps, "maxfev": 800 * max_sweeps},
    )
    best = res.x if math.isfinite(barrier_objective(problem, res.x)) else x0
    return _result(problem, np.asarray(best, dtype=float), BARRIER_DESCENT, int(res.nit))


def solve(problem: CoordinationProblem, mode: str = FIXED_POINT, max_sweeps: int = 50) -> CoordinationResult:
    """Pick a feasible reduction vector.

    ``fixed-point`` raises each ``eps_j`` in turn to the largest value that
    keeps its own offset non-negative and the baseline assignment intact,
    repeating until nothing moves by more than 1e-10. ``barrier-descent``
    runs Nelder-Mead on the barrier product from ``eps = 0``.

    Raises:
        InfeasibleError: the selected point has a negative offset.
    """
    if mode == FIXED_POINT:
        return _solve_fixed_point(problem, max_sweeps)
    if mode == BARRIER_DESCENT:
        return _solve_barrier(problem, max_sweeps)
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
