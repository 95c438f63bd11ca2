"""Value accounting when tower operation moves to a TowerCo.

Each operator saves its normalized tower cost ``c`` and pays a fee ``p_j``;
the TowerCo collects the fees and runs the shared tower at cost ``c'``.
Antenna installation costs are ignored. Arithmetic is generic, so
``fractions.Fraction`` inputs give exact results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import UndefinedRatioError
from .market import MarketOutcome


@dataclass(frozen=True)
class OutsourcingScenario:
    tower_cost: float
    towerco_cost: float
    fee_fraction: float
    fees: Optional[tuple[float, ...]] = None
    reputation_feedback: float = 0.0

    def __post_init__(self) -> None:
        if self.fees is not None:
            object.__setattr__(self, "fees", tuple(self.fees))
            if any(p < 0 or not math.isfinite(p) for p in self.fees):
                raise ValueError("fees must be finite and non-negative")
        elif not 0 < self.fee_fraction < 1:
            raise ValueError(f"fee fraction must lie in (0, 1), got {self.fee_fraction!r}")
        if self.tower_cost < 0 or self.towerco_cost < 0:
            raise ValueError("costs must be non-negative")
        if not 0 <= self.reputation_feedback < 1:
            raise ValueError(f"reputation feedback must lie in [0, 1), got {self.reputation_feedback!r}")

    @property
    def common_fee(self) -> float:
        return self.fee_fraction * self.tower_cost

    def fee_vector(self, num_operators: int) -> tuple[float, ...]:
        if self.fees is None:
            return (self.common_fee,) * num_operators
        if len(self.fees) != num_operators:
            raise ValueError(f"expected {num_operators} fees, got {len(self.fees)}")
        return self.fees

    @property
    def operator_saving(self) -> float:
        """Per-operator gain ``(1 - kappa) c`` under the common fee."""
        return (1 - self.fee_fraction) * self.tower_cost

    @classmethod
    def from_gain_ratio(
        cls,
        delta: float,
        reference_revenue: float,
        fee_fraction: float,
        towerco_cost: Optional[float] = None,
        reputation_feedback: float = 0.0,
    ) -> "OutsourcingScenario":
        """Back-solve ``c`` from ``(1 - kappa) c = delta * reference_revenue``."""
        c = delta * reference_revenue / (1 - fee_fraction)
        return cls(
            tower_cost=c,
            towerco_cost=c if towerco_cost is None else towerco_cost,
            fee_fraction=fee_fraction,
            reputation_feedback=reputation_feedback,
        )


@dataclass(frozen=True)
class ValueReport:
    operator_totals: tuple[float, ...]
    towerco_revenue: float
    value_created: float
    profitable: bool

    def to_dict(self) -> dict:
        return {
            "operator_totals": list(self.operator_totals),
            "towerco_revenue": self.towerco_revenue,
            "value_created": self.value_created,
            "profitable": self.profitable,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ValueReport":
        return cls(
            operator_totals=tuple(data["operator_totals"]),
            towerco_revenue=data["towerco_revenue"],
            value_created=data["value_created"],
            profitable=data["profitable"],
        )


def outsource(outcome: MarketOutcome, scenario: OutsourcingScenario) -> ValueReport:
    """Operator totals ``R_j + c - p_j`` and TowerCo revenue ``sum p_j - c'``."""
    J = len(outcome.revenues)
    fees = scenario.fee_vector(J)
    c = scenario.tower_cost
    totals = tuple(r + c - p for r, p in zip(outcome.revenues, fees))
    towerco = sum(fees) - scenario.towerco_cost
    return ValueReport(
        operator_totals=totals,
        towerco_revenue=towerco,
        value_created=J * c - scenario.towerco_cost,
        profitable=towerco > 0,
    )


def gain_ratio(outcome: MarketOutcome, scenario: OutsourcingScenario, operator: int) -> float:
    """Relative gain ``(1 - kappa) c / R_operator`` (operator is 1-based)."""
    J = len(outcome.revenues)
    if not 1 <= operator <= J:
        raise IndexError(f"operator {operator} out of range 1..{J}")
    revenue = outcome.revenues[operator - 1]
    if revenue == 0:
        raise UndefinedRatioError(f"operator {operator} has zero revenue")
    return scenario.operator_saving / revenue


def towerco_revenue_common_fee(num_operators: int, fee_fraction: float, tower_cost: float) -> float:
    """Closed form ``(J0 kappa - 1) c`` when ``c' = c`` and every fee is ``kappa c``."""
    return (num_operators * fee_fraction - 1) * tower_cost
