import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from towermarket.errors import DegenerateBaselineError
from towermarket.market import assign_market, utility
from towermarket.reference import PRINTED_PRICES
from towermarket.selfish import SelfishSweepResult, deviated_market, deviated_utility, sweep


def test_zero_cut_is_baseline_utility(config, prices):
    for q in range(1, 5):
        for j in range(1, 4):
            assert deviated_utility(config, prices, 2, 0.0, 0.1, q, j) == utility(config, prices, q, j)


def test_deviated_formula(config, prices):
    eps, eta = 0.2, 0.1
    for q in range(1, 5):
        expected = 0.2 * (1 + eta * eps) * 2.0 - 0.8 * ((1 - eps) * prices[1]) ** q
        assert deviated_utility(config, prices, 1, eps, eta, q, 1) == pytest.approx(expected, abs=1e-15)
        for other in (2, 3):
            assert deviated_utility(config, prices, 1, eps, eta, q, other) == utility(config, prices, q, other)


def test_no_feedback_changes_price_only(config, prices):
    eps = 0.3
    for q in range(1, 5):
        expected = 0.2 * 8.0 - 0.8 * ((1 - eps) * prices[3]) ** q
        assert deviated_utility(config, prices, 3, eps, 0.0, q, 3) == pytest.approx(expected, abs=1e-15)


def test_range_errors(config, prices):
    with pytest.raises(ValueError):
        deviated_utility(config, prices, 1, 1.0, 0.1, 1, 1)
    with pytest.raises(ValueError):
        deviated_utility(config, prices, 1, -0.1, 0.1, 1, 1)
    with pytest.raises(IndexError):
        deviated_utility(config, prices, 4, 0.1, 0.1, 1, 1)
    with pytest.raises(IndexError):
        deviated_utility(config, prices, 1, 0.1, 0.1, 5, 1)


def test_low_cost_cut_takes_three_quarters(config, prices):
    out = deviated_market(config, prices, 1, 0.29, 0.1)
    assert out.shares == (0.75, 0.0, 0.25)
    assert out.assignment == (3, 1, 1, 1)


def _oracle_star(config, prices, j, budget, eta, step=0.01):
    b = list(prices.exponents)
    R0 = oracles.assign_config(config, b)[1][j - 1]
    star = 0.0
    for i in range(100):
        eps = round(i * step, 12)
        bb = list(b)
        bb[j - 1] = (1 - eps) * b[j - 1]
        reps = [1.0] * 3
        reps[j - 1] = 1 + eta * eps
        R = oracles.assign_config(config, bb, reps)[1][j - 1]
        if (R0 - R) / R0 < budget:
            star = eps
    return star


@pytest.mark.parametrize("j", [1, 2, 3])
def test_epsilon_star_matches_oracle(config, prices, j):
    result = sweep(config, prices, j, 0.05, 0.1)
    assert result.epsilon_star == _oracle_star(config, prices, j, 0.05, 0.1)


@pytest.mark.parametrize("j", [1, 2, 3])
def test_path_starts_at_baseline(config, prices, j):
    result = sweep(config, prices, j, 0.05, 0.1)
    base = assign_market(config, prices)
    assert result.epsilon_grid[0] == 0.0
    assert result.shares_path[0] == base.shares
    assert result.revenue_ratios_path[0] == (1.0, 1.0, 1.0)
    star_pos = result.epsilon_grid.index(result.epsilon_star)
    assert len(result.epsilon_grid) in (star_pos + 1, star_pos + 2)


@pytest.mark.parametrize("j", [1, 2, 3])
def test_deviator_share_non_decreasing(config, prices, j):
    shares = [deviated_market(config, prices, j, i / 100, 0.1).shares[j - 1] for i in range(100)]
    assert all(a <= b for a, b in zip(shares, shares[1:]))
    posted = [(1 - i / 100) * prices[j] for i in range(100)]
    assert all(a > b for a, b in zip(posted, posted[1:]))


def test_tiny_budget_gives_zero(config, prices):
    # A monopolist only loses revenue when it cuts its price.
    from towermarket.market import MarketConfig

    mono = MarketConfig.uniform(1, 3, 2.0, 0.2, 1.5)
    assert sweep(mono, [1.4], 1, 1e-9, 0.1).epsilon_star == 0.0


def test_revenue_gains_count_after_a_gap(config, prices):
    # Operator 1 loses more than 5% at 4% but wins level 3 at 5%.
    result = sweep(config, prices, 1, 0.05, 0.1)
    assert result.epsilon_star > 0.05


def test_degenerate_baseline_rejected(config):
    with pytest.raises(DegenerateBaselineError):
        sweep(config, PRINTED_PRICES, 1, 0.05, 0.1)


def test_bad_arguments(config, prices):
    with pytest.raises(ValueError):
        sweep(config, prices, 1, 0.05, 0.1, step=0.0)
    with pytest.raises(ValueError):
        sweep(config, prices, 1, 0.0, 0.1)


def test_refinement_brackets_boundary(config, prices):
    result = sweep(config, prices, 1, 0.05, 0.1, refine=True)
    r = result.epsilon_star_refined
    assert result.epsilon_star <= r < result.epsilon_star + 0.01
    R0 = assign_market(config, prices).revenues[0]
    loss = lambda e: (R0 - deviated_market(config, prices, 1, e, 0.1).revenues[0]) / R0
    assert loss(r) < 0.05
    assert loss(r + 1e-4) >= 0.05


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.floats(1e-6, 0.03))
def test_no_feedback_closed_form(j, eps):
    from towermarket.reference import REFERENCE_CONFIG as config, REFERENCE_PRICES as prices

    base = assign_market(config, prices)
    out = deviated_market(config, prices, j, eps, 0.0)
    if out.assignment != base.assignment:
        return
    levels = [q for q, w in enumerate(base.assignment, start=1) if w == j]
    b = prices[j]
    expected = sum(((1 - eps) * b) ** q for q in levels) / sum(b**q for q in levels)
    ratio = out.revenues[j - 1] / base.revenues[j - 1]
    assert ratio == pytest.approx(expected, rel=1e-12)
    assert ratio < 1


def test_csv_rows_and_round_trip(config, prices):
    result = sweep(config, prices, 2, 0.05, 0.1)
    header, rows = result.csv_rows()
    assert header == ["epsilon", "abscissa", "nu_1", "nu_2", "nu_3", "r_1", "r_2", "r_3"]
    assert rows[3][1] == pytest.approx(100 * rows[3][0] + 1)
    assert SelfishSweepResult.from_dict(result.to_dict()) == result
