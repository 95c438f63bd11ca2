"""Utility-based market model shared by every analysis in the package.

Customers at quality level ``q`` sign with the operator whose utility

    u(q, j) = alpha * a0**j - (1 - alpha) * b_j**q

is strictly larger than every competitor's. Operators are numbered from 1 so
that the reputation factor reads ``a0**j``. Revenues are normalized by the
price scale and the number of covered users; :func:`scale_report` puts both
back for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

TIE_STRICT = "strict"
TIE_HIGHEST_REPUTATION = "highest_reputation"
TIE_MODES = (TIE_STRICT, TIE_HIGHEST_REPUTATION)

_FRACTION_SUM_TOL = 1e-12


@dataclass(frozen=True)
class MarketConfig:
    """Exogenous parameters of the market.

    Attributes:
        num_operators: Number of operators sharing the tower (J0).
        num_quality_levels: Number of contract tiers (K).
        quality_fractions: Fraction of users at each tier; sums to one.
        popularity_index: Base ``a0 > 1`` of the reputation factor ``a0**j``.
        reputation_weight: Weight ``alpha`` of reputation against price.
        price_exponent_bound: Regulator cap ``B > 1`` on price exponents.
        price_scale: Monetary scale ``pi0``; reporting only.
        user_count: Covered users ``N``; reporting only.
    """

    num_operators: int
    num_quality_levels: int
    quality_fractions: tuple[float, ...]
    popularity_index: float
    reputation_weight: float
    price_exponent_bound: float
    price_scale: float = 1.0
    user_count: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "quality_fractions", tuple(float(x) for x in self.quality_fractions))
        if not isinstance(self.num_operators, (int, np.integer)) or self.num_operators < 1:
            raise ValueError(f"num_operators must be a positive integer, got {self.num_operators!r}")
        if not isinstance(self.num_quality_levels, (int, np.integer)) or self.num_quality_levels < 1:
            raise ValueError(f"num_quality_levels must be a positive integer, got {self.num_quality_levels!r}")
        if len(self.quality_fractions) != self.num_quality_levels:
            raise ValueError(
                f"expected {self.num_quality_levels} quality fractions, got {len(self.quality_fractions)}"
            )
        if any(not math.isfinite(x) or x < 0 for x in self.quality_fractions):
            raise ValueError("quality fractions must be finite and non-negative")
        if abs(math.fsum(self.quality_fractions) - 1.0) > _FRACTION_SUM_TOL:
            raise ValueError(f"quality fractions sum to {math.fsum(self.quality_fractions)!r}, not 1")
        if not self.popularity_index > 1:
            raise ValueError(f"popularity index must exceed 1, got {self.popularity_index!r}")
        if not 0 <= self.reputation_weight <= 1:
            raise ValueError(f"reputation weight must lie in [0, 1], got {self.reputation_weight!r}")
        if not self.price_exponent_bound > 1 or not math.isfinite(self.price_exponent_bound):
            raise ValueError(f"price exponent bound must exceed 1, got {self.price_exponent_bound!r}")
        if not self.price_scale > 0 or not math.isfinite(self.price_scale):
            raise ValueError(f"price scale must be positive, got {self.price_scale!r}")
        if isinstance(self.user_count, bool) or not isinstance(self.user_count, (int, np.integer)) or self.user_count < 1:
            raise ValueError(f"user count must be a positive integer, got {self.user_count!r}")

    @classmethod
    def uniform(
        cls,
        num_operators: int,
        num_quality_levels: int,
        popularity_index: float,
        reputation_weight: float,
        price_exponent_bound: float,
        **kwargs,
    ) -> "MarketConfig":
        """Config with users spread evenly over the quality levels."""
        fractions = (1.0 / num_quality_levels,) * num_quality_levels
        return cls(
            num_operators,
            num_quality_levels,
            fractions,
            popularity_index,
            reputation_weight,
            price_exponent_bound,
            **kwargs,
        )

    @property
    def reputations(self) -> np.ndarray:
        """Reputation factors ``a0**j`` for j = 1..J0."""
        return self.popularity_index ** np.arange(1, self.num_operators + 1, dtype=float)

    @property
    def levels(self) -> np.ndarray:
        return np.arange(1, self.num_quality_levels + 1, dtype=float)

    @property
    def fractions(self) -> np.ndarray:
        return np.asarray(self.quality_fractions, dtype=float)


@dataclass(frozen=True)
class PriceVector:
    """Price exponents ``b_j`` posted by the operators, in operator order."""

    exponents: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "exponents", tuple(float(b) for b in self.exponents))

    def __len__(self) -> int:
        return len(self.exponents)

    def __getitem__(self, operator: int) -> float:
        """Exponent of ``operator`` (1-based)."""
        if not 1 <= operator <= len(self.exponents):
            raise IndexError(f"operator {operator} out of range 1..{len(self.exponents)}")
        return self.exponents[operator - 1]

    @property
    def is_ordered(self) -> bool:
        """True when exponents strictly increase with reputation."""
        return all(a < b for a, b in zip(self.exponents, self.exponents[1:]))

    @property
    def top_dominates(self) -> bool:
        """True when the highest-reputation operator posts the largest exponent."""
        top = self.exponents[-1]
        return all(b < top for b in self.exponents[:-1])

    def validate(self, config: MarketConfig) -> None:
        if len(self.exponents) != config.num_operators:
            raise ValueError(f"expected {config.num_operators} exponents, got {len(self.exponents)}")
        for j, b in enumerate(self.exponents, start=1):
            if not (1 < b <= config.price_exponent_bound):
                raise ValueError(
                    f"exponent b_{j} = {b!r} outside (1, {config.price_exponent_bound!r}]"
                )


@dataclass(frozen=True)
class MarketOutcome:
    """Winner of each quality level and the resulting normalized accounts.

    ``assignment[q - 1]`` is the 1-based winning operator of level ``q`` or
    ``None`` when the top utility is shared. ARPU is ``None`` for operators
    without customers.
    """

    assignment: tuple[Optional[int], ...]
    revenues: tuple[float, ...]
    shares: tuple[float, ...]
    arpus: tuple[Optional[float], ...]

    @property
    def assignment0(self) -> tuple[Optional[int], ...]:
        """Same assignment with 0-based operator indices."""
        return tuple(None if w is None else w - 1 for w in self.assignment)

    @property
    def fully_assigned(self) -> bool:
        return all(w is not None for w in self.assignment)

    @property
    def degenerate(self) -> bool:
        """True when some operator earns nothing."""
        return any(r == 0 for r in self.revenues)

    def to_dict(self) -> dict:
        return {
            "assignment": list(self.assignment),
            "assignment_index0": list(self.assignment0),
            "revenues": list(self.revenues),
            "shares": list(self.shares),
            "arpus": list(self.arpus),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MarketOutcome":
        return cls(
            assignment=tuple(data["assignment"]),
            revenues=tuple(data["revenues"]),
            shares=tuple(data["shares"]),
            arpus=tuple(data["arpus"]),
        )


def _as_exponents(config: MarketConfig, prices) -> np.ndarray:
    if isinstance(prices, PriceVector):
        prices.validate(config)
        return np.asarray(prices.exponents, dtype=float)
    arr = np.asarray(prices, dtype=float)
    if arr.shape[-1] != config.num_operators:
        raise ValueError(f"expected {config.num_operators} exponents, got shape {arr.shape}")
    return arr


def utility_matrix(
    config: MarketConfig,
    exponents,
    reputation_factors=None,
) -> np.ndarray:
    """Utilities for a batch of exponent vectors.

    Args:
        config: Market parameters.
        exponents: Array ``(..., J0)`` of posted price exponents.
        reputation_factors: Optional ``(..., J0)`` multipliers applied to
            ``a0**j``; used by the price-reduction analyses.

    Returns:
        Array ``(..., K, J0)`` holding ``u(q, j)``.
    """
    b = np.asarray(exponents, dtype=float)
    rep = config.reputations
    if reputation_factors is not None:
        rep = rep * np.asarray(reputation_factors, dtype=float)
    rep = np.broadcast_to(rep, b.shape)
    price = b[..., None, :] ** config.levels[:, None]
    alpha = config.reputation_weight
    return alpha * rep[..., None, :] - (1.0 - alpha) * price


def level_winners(utilities: np.ndarray, tie_break: str = TIE_STRICT) -> np.ndarray:
    """0-based winner per level, ``-1`` where the maximum is shared.

    Comparisons are exact: a level is won only by an operator whose utility
    is strictly above every other operator's.
    """
    if tie_break not in TIE_MODES:
        raise ValueError(f"unknown tie-break mode {tie_break!r}")
    top = utilities.max(axis=-1, keepdims=True)
    at_top = utilities == top
    count = at_top.sum(axis=-1)
    if tie_break == TIE_HIGHEST_REPUTATION:
        last = utilities.shape[-1] - 1 - np.argmax(at_top[..., ::-1], axis=-1)
        return last
    return np.where(count == 1, np.argmax(at_top, axis=-1), -1)


def batch_revenues(
    config: MarketConfig,
    exponents,
    reputation_factors=None,
    tie_break: str = TIE_STRICT,
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized revenues and level winners for a batch of price vectors.

    Returns:
        ``(revenues, winners)`` with shapes ``(..., J0)`` and ``(..., K)``.
    """
    b = np.asarray(exponents, dtype=float)
    u = utility_matrix(config, b, reputation_factors)
    winners = level_winners(u, tie_break)
    price = b[..., None, :] ** config.levels[:, None]
    won = winners[..., :, None] == np.arange(config.num_operators)
    revenues = np.sum(np.where(won, config.fractions[:, None] * price, 0.0), axis=-2)
    return revenues, winners


def outcome_from_arrays(config: MarketConfig, revenues: np.ndarray, winners: np.ndarray) -> MarketOutcome:
    fractions = config.quality_fractions
    shares = [0.0] * config.num_operators
    for q, w in enumerate(winners.tolist()):
        if w >= 0:
            shares[w] += fractions[q]
    revs = [float(r) for r in revenues.tolist()]
    arpus = [r / s if s > 0 else None for r, s in zip(revs, shares)]
    return MarketOutcome(
        assignment=tuple(None if w < 0 else w + 1 for w in winners.tolist()),
        revenues=tuple(revs),
        shares=tuple(shares),
        arpus=tuple(arpus),
    )


def market_outcome(
    config: MarketConfig,
    exponents,
    reputation_factors=None,
    tie_break: str = TIE_STRICT,
) -> MarketOutcome:
    """Outcome for raw exponents, which may fall outside ``(1, B]``."""
    b = np.asarray(exponents, dtype=float)
    if b.shape != (config.num_operators,):
        raise ValueError(f"expected {config.num_operators} exponents, got shape {b.shape}")
    revenues, winners = batch_revenues(config, b, reputation_factors, tie_break)
    return outcome_from_arrays(config, revenues, winners)


def utility(config: MarketConfig, prices: PriceVector | Sequence[float], level: int, operator: int) -> float:
    """Utility of ``operator`` for a customer at ``level`` (both 1-based)."""
    if not 1 <= level <= config.num_quality_levels:
        raise IndexError(f"level {level} out of range 1..{config.num_quality_levels}")
    if not 1 <= operator <= config.num_operators:
        raise IndexError(f"operator {operator} out of range 1..{config.num_operators}")
    b = _as_exponents(config, prices)
    return float(utility_matrix(config, b)[level - 1, operator - 1])


def utility_table(config: MarketConfig, prices: PriceVector | Sequence[float]) -> np.ndarray:
    """``K x J0`` table of utilities, rows are quality levels."""
    return utility_matrix(config, _as_exponents(config, prices))


def assign_market(
    config: MarketConfig,
    prices: PriceVector | Sequence[float],
    tie_break: str = TIE_STRICT,
) -> MarketOutcome:
    """Assign every quality level to its strict utility maximizer.

    Tied levels stay unassigned and earn nobody anything unless
    ``tie_break="highest_reputation"`` is requested.
    """
    return market_outcome(config, _as_exponents(config, prices), tie_break=tie_break)


@dataclass(frozen=True)
class ScaledReport:
    """Outcome expressed in currency and subscriber counts."""

    assignment: tuple[Optional[int], ...]
    revenues: tuple[float, ...]
    subscribers: tuple[float, ...]
    arpus: tuple[Optional[float], ...]
    price_scale: float
    user_count: int

    def to_dict(self) -> dict:
        return {
            "assignment": list(self.assignment),
            "revenues": list(self.revenues),
            "subscribers": list(self.subscribers),
            "arpus": list(self.arpus),
            "price_scale": self.price_scale,
            "user_count": self.user_count,
        }


def scale_report(outcome: MarketOutcome, config: MarketConfig) -> ScaledReport:
    """Multiply normalized accounts back by ``pi0`` and ``N``."""
    scale = config.price_scale * config.user_count
    return ScaledReport(
        assignment=outcome.assignment,
        revenues=tuple(r * scale for r in outcome.revenues),
        subscribers=tuple(s * config.user_count for s in outcome.shares),
        arpus=tuple(None if a is None else a * config.price_scale for a in outcome.arpus),
        price_scale=config.price_scale,
        user_count=config.user_count,
    )
