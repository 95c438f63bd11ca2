"""Reference three-operator market used by the bundled scenario and tests."""

from __future__ import annotations

from .market import MarketConfig, PriceVector

REFERENCE_CONFIG = MarketConfig.uniform(
    num_operators=3,
    num_quality_levels=4,
    popularity_index=2.0,
    reputation_weight=0.2,
    price_exponent_bound=1.5,
)

# Ordered-product equilibrium prices. A sixth digit on b_2 is required: with
# b_2 = 1.23821 operator 2 edges operator 1 out of level 4 by about 2e-5.
REFERENCE_PRICES = PriceVector((1.16635, 1.238214, 1.5))
PRINTED_PRICES = PriceVector((1.16635, 1.23821, 1.5))

REFERENCE_GRID_POINTS = 50

# Quoted beta for k_1 = 27 on the 50-point grid; the grid formula and the
# payoff R_1 = 1.27**4 / 4 both give 1.27.
QUOTED_BETA_K1 = 1.26


def beta_discrepancy_note(indices, betas, config: MarketConfig, grid_points: int) -> str | None:
    """Note on the quoted 1.26 when the reference game is solved."""
    if config != REFERENCE_CONFIG or grid_points != REFERENCE_GRID_POINTS or indices[0] != 27:
        return None
    return (
        f"beta(k1=27) = {betas[0]!r} from 1 + k(B-1)/M; the quoted value {QUOTED_BETA_K1} "
        f"disagrees with the grid formula and with R1 = 1.27**4/4"
    )
