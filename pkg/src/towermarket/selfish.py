"""Unilateral price cuts funded by the outsourcing gain.

A deviating operator ``j`` cuts its exponent to ``(1 - eps) b_j`` and sees
its reputation factor grow to ``(1 + eta * eps) a0**j``; everybody else keeps
the baseline utility. The cut is admissible while the relative revenue loss
stays strictly below the budget ``(1 - kappa) c / R_j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateBaselineError
from .market import MarketConfig, MarketOutcome, PriceVector, market_outcome, utility_matrix

MAX_EPSILON = 0.99


def _check_epsilon(eps: float) -> None:
    if not 0 <= eps < 1:
        raise ValueError(f"reduction factor must lie in [0, 1), got {eps!r}")


def _exponents(config: MarketConfig, prices) -> np.ndarray:
    if isinstance(prices, PriceVector):
        prices.validate(config)
        return np.asarray(prices.exponents, dtype=float)
    return np.asarray(prices, dtype=float)


def reduced_inputs(config: MarketConfig, prices, reductions, eta: float) -> tuple[np.ndarray, np.ndarray]:
    """Posted exponents and reputation multipliers after per-operator cuts."""
    b = _exponents(config, prices)
    eps = np.asarray(reductions, dtype=float)
    for e in eps:
        _check_epsilon(float(e))
    return (1.0 - eps) * b, 1.0 + eta * eps


def _single(config: MarketConfig, operator: int, eps: float) -> np.ndarray:
    if not 1 <= operator <= config.num_operators:
        raise IndexError(f"operator {operator} out of range 1..{config.num_operators}")
    _check_epsilon(eps)
    vec = np.zeros(config.num_operators)
    vec[operator - 1] = eps
    return vec


def deviated_utility(
    config: MarketConfig,
    prices,
    deviator: int,
    eps: float,
    eta: float,
    level: int,
    operator: int,
) -> float:
    """Utility of ``operator`` at ``level`` when only ``deviator`` cuts by ``eps``."""
    if not 1 <= level <= config.num_quality_levels:
        raise IndexError(f"level {level} out of range 1..{config.num_quality_levels}")
    if not 1 <= operator <= config.num_operators:
        raise IndexError(f"operator {operator} out of range 1..{config.num_operators}")
    b, rep = reduced_inputs(config, prices, _single(config, deviator, eps), eta)
    return float(utility_matrix(config, b, rep)[level - 1, operator - 1])


def deviated_market(config: MarketConfig, prices, deviator: int, eps: float, eta: float) -> MarketOutcome:
    b, rep = reduced_inputs(config, prices, _single(config, deviator, eps), eta)
    return market_outcome(config, b, rep)


@dataclass(frozen=True)
class SelfishSweepResult:
    """Market path while one operator deepens its cut.

    ``revenue_ratios_path[i][k]`` is ``R_k(eps_i) / R_k`` or ``None`` when
    operator ``k`` earns nothing at baseline. The path ends at the first grid
    point past ``epsilon_star`` (or at the grid end).
    """

    operator: int
    budget: float
    eta: float
    step: float
    epsilon_grid: tuple[float, ...]
    shares_path: tuple[tuple[float, ...], ...]
    revenue_ratios_path: tuple[tuple[Optional[float], ...], ...]
    epsilon_star: float
    epsilon_star_refined: Optional[float] = None

    @property
    def peak_ratio(self) -> float:
        """Largest revenue ratio of the deviator along the path."""
        return max(r[self.operator - 1] for r in self.revenue_ratios_path)

    def csv_rows(self) -> tuple[list[str], list[list]]:
        """Header and rows; the abscissa column is ``100 eps + 1``."""
        J = len(self.shares_path[0])
        header = ["epsilon", "abscissa"] + [f"nu_{k}" for k in range(1, J + 1)] + [f"r_{k}" for k in range(1, J + 1)]
        rows = []
        for eps, nu, r in zip(self.epsilon_grid, self.shares_path, self.revenue_ratios_path):
            rows.append([eps, round(100 * eps + 1, 10), *nu, *r])
        return header, rows

    def to_dict(self) -> dict:
        return {
            "operator": self.operator,
            "budget": self.budget,
            "eta": self.eta,
            "step": self.step,
            "epsilon_grid": list(self.epsilon_grid),
            "shares_path": [list(x) for x in self.shares_path],
            "revenue_ratios_path": [list(x) for x in self.revenue_ratios_path],
            "epsilon_star": self.epsilon_star,
            "epsilon_star_refined": self.epsilon_star_refined,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SelfishSweepResult":
        return cls(
            operator=data["operator"],
            budget=data["budget"],
            eta=data["eta"],
            step=data["step"],
            epsilon_grid=tuple(data["epsilon_grid"]),
            shares_path=tuple(tuple(x) for x in data["shares_path"]),
            revenue_ratios_path=tuple(tuple(x) for x in data["revenue_ratios_path"]),
            epsilon_star=data["epsilon_star"],
            epsilon_star_refined=data.get("epsilon_star_refined"),
        )


def sweep(
    config: MarketConfig,
    prices,
    operator: int,
    budget: float,
    eta: float,
    step: float = 0.01,
    refine: bool = False,
    max_epsilon: float = MAX_EPSILON,
) -> SelfishSweepResult:
    """Sweep the deviator's cut over ``0, step, 2 step, ...`` up to ``max_epsilon``.

    ``epsilon_star`` is the largest grid value whose relative revenue loss
    is strictly below ``budget``, or zero when no cut qualifies. Cuts that
    win new levels raise revenue and count as admissible even after a
    non-admissible stretch. With ``refine`` the boundary between
    ``epsilon_star`` and the next grid point is bisected to 1e-4.

    Raises:
        DegenerateBaselineError: the deviator has no revenue at baseline.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step!r}")
    if not budget > 0:
        raise ValueError(f"budget must be positive, got {budget!r}")
    _check_epsilon(max_epsilon)
    base = market_outcome(config, _exponents(config, prices))
    R0 = np.asarray(base.revenues)
    Rj = R0[operator - 1]
    if Rj == 0:
        raise DegenerateBaselineError(f"operator {operator} has zero baseline revenue")

    def admissible(eps: float) -> bool:
        R = deviated_market(config, prices, operator, eps, eta).revenues[operator - 1]
        return (Rj - R) / Rj < budget

    n = int(np.floor(max_epsilon / step + 1e-9))
    grid = [round(i * step, 12) for i in range(n + 1)]
    outcomes = [deviated_market(config, prices, operator, e, eta) for e in grid]
    star_idx = 0
    for i, out in enumerate(outcomes):
        if (Rj - out.revenues[operator - 1]) / Rj < budget:
            star_idx = i
    stop = min(star_idx + 1, len(grid) - 1)

    refined = None
    if refine:
        lo = grid[star_idx]
        refined = lo
        if stop > star_idx:
            hi = grid[stop]
            while hi - lo > 1e-4:
                mid = 0.5 * (lo + hi)
                if admissible(mid):
                    lo = mid
                else:
                    hi = mid
            refined = lo

    ratios = []
    for out in outcomes[: stop + 1]:
        ratios.append(tuple(None if r0 == 0 else r / r0 for r, r0 in zip(out.revenues, R0)))
    return SelfishSweepResult(
        operator=operator,
        budget=budget,
        eta=eta,
        step=step,
        epsilon_grid=tuple(grid[: stop + 1]),
        shares_path=tuple(out.shares for out in outcomes[: stop + 1]),
        revenue_ratios_path=tuple(ratios),
        epsilon_star=grid[star_idx],
        epsilon_star_refined=refined,
    )
