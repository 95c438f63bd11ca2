import numpy as np
import pytest

import oracles
from towermarket.errors import NoEligibleEquilibriumError
from towermarket.game import (
    MATERIALIZE_LIMIT,
    GridEquilibrium,
    PayoffTensor,
    best_response_top,
    build_grid,
    eligible,
    lexicographic_sets,
    positive_middle_set,
    solve_lexicographic,
    tensor_rows,
    top_revenue_slice,
    verify_constrained_nash,
)
from towermarket.market import MarketConfig, assign_market


@pytest.fixture(scope="module")
def reference_game():
    from towermarket.reference import REFERENCE_CONFIG

    grid = build_grid(50, 1.5)
    return REFERENCE_CONFIG, grid, PayoffTensor(REFERENCE_CONFIG, grid)


def test_grid_values():
    g = build_grid(50, 1.5)
    assert g.beta(50) == 1.5
    assert g.beta(27) == pytest.approx(1.27, abs=1e-15)
    assert g.beta(33) == pytest.approx(1.33, abs=1e-15)
    assert np.all(np.diff(g.values) > 0) and np.all(g.values > 1)
    assert build_grid(1, 1.5).values.tolist() == [1.5]
    with pytest.raises(ValueError):
        build_grid(0, 1.5)
    with pytest.raises(ValueError):
        build_grid(5, 1.0)
    with pytest.raises(IndexError):
        g.beta(51)


def test_tensor_matches_market(reference_game):
    config, grid, T = reference_game
    assert T.materialized
    for t in [(1, 2, 3), (27, 33, 50), (10, 40, 45), (5, 5, 5), (50, 1, 20)]:
        expected = assign_market(config, [grid.beta(k) for k in t]).revenues
        np.testing.assert_allclose(T(t), expected, rtol=0, atol=1e-12)


def test_lazy_tensor_matches_materialized():
    config = MarketConfig.uniform(3, 3, 2.0, 0.3, 1.6)
    big = build_grid(MATERIALIZE_LIMIT + 1, 1.6)
    lazy = PayoffTensor(config, big)
    assert not lazy.materialized
    for t in [(1, 2, 3), (20, 40, 61), (30, 31, 32)]:
        expected = assign_market(config, [big.beta(k) for k in t]).revenues
        np.testing.assert_allclose(lazy(t), expected, rtol=0, atol=1e-12)
    assert lazy((20, 40, 61)) is lazy((20, 40, 61))


def test_tensor_scale_invariance():
    a = MarketConfig.uniform(3, 3, 2.0, 0.3, 1.6)
    b = MarketConfig.uniform(3, 3, 2.0, 0.3, 1.6, price_scale=7.0, user_count=900)
    g = build_grid(8, 1.6)
    ta, tb = PayoffTensor(a, g), PayoffTensor(b, g)
    for t in ta.ordered_tuples():
        assert np.array_equal(ta(t), tb(t))


def test_top_best_response(reference_game):
    config, grid, T = reference_game
    assert best_response_top(config, grid, (27, 33), tensor=T) == 50
    # Without the eligibility filter the top operator prices operator 2 out.
    k3 = best_response_top(config, grid, (27, 33), eligible_only=False, tensor=T)
    assert k3 == 42 and T((27, 33, 42))[1] == 0
    with pytest.raises(ValueError):
        best_response_top(config, grid, (27, 50), tensor=T)
    with pytest.raises(ValueError):
        best_response_top(config, grid, (33, 27), tensor=T)


def test_unconstrained_best_responses_are_ineligible(reference_game):
    config, grid, T = reference_game
    pairs = [(k1, k2) for k1 in range(1, 49) for k2 in range(k1 + 1, 50)]
    bad = 0
    for k1, k2 in pairs:
        k3 = best_response_top(config, grid, (k1, k2), eligible_only=False, tensor=T)
        bad += np.prod(T((k1, k2, k3))) == 0
    assert bad == len(pairs)


def test_flat_top_revenue_picks_smallest():
    # Price alone decides when alpha = 0, so the top operator never sells.
    config = MarketConfig.uniform(3, 3, 2.0, 0.0, 1.5)
    grid = build_grid(10, 1.5)
    assert best_response_top(config, grid, (2, 4), eligible_only=False) == 5
    assert best_response_top(config, grid, (2, 4)) == 5
    assert not eligible(config, grid, (2, 4, 7))


def test_reputation_only_top_prices_high():
    config = MarketConfig.uniform(3, 3, 2.0, 1.0, 1.5)
    grid = build_grid(12, 1.5)
    for k1, k2 in [(1, 2), (3, 9), (10, 11)]:
        assert best_response_top(config, grid, (k1, k2), eligible_only=False) == 12


def test_reference_equilibrium(reference_game):
    config, grid, T = reference_game
    eq = solve_lexicographic(config, grid, T, certify=True)
    assert eq.indices == (27, 33, 50)
    assert eq.eligible
    assert eq.payoffs == pytest.approx((1.27**4 / 4, 1.33**3 / 4, (1.5 + 1.5**2) / 4), abs=1e-12)
    assert eq.betas == pytest.approx((1.27, 1.33, 1.5), abs=1e-15)
    assert eq.nash_certificate == oracles.deviation_certificate(config, 50, 1.5, (27, 33, 50))
    assert GridEquilibrium.from_dict(eq.to_dict()) == eq
    assert assign_market(config, list(eq.betas)).assignment == (3, 3, 2, 1)


def test_sets_are_nested(reference_game):
    config, grid, T = reference_game
    sets = lexicographic_sets(config, grid, T)
    assert set(sets.middle_fixed) <= set(sets.top_fixed) <= set(sets.top_best_responses)
    assert all(np.prod(T(t)) > 0 for t in sets.top_best_responses)
    assert (27, 33, 50) in sets.middle_fixed


def test_top_revenue_runs_non_decreasing(reference_game):
    config, grid, T = reference_game
    for k1, k2 in [(27, 33), (5, 20), (10, 11), (30, 45)]:
        prev_assign, prev_r = None, None
        for k3, r in top_revenue_slice(T, k1, k2):
            a = assign_market(config, [grid.beta(k1), grid.beta(k2), grid.beta(k3)]).assignment
            if a == prev_assign:
                assert r >= prev_r
            prev_assign, prev_r = a, r


def test_positive_middle_set(reference_game):
    config, grid, T = reference_game
    positive = positive_middle_set(T, 27, 50)
    assert 33 in positive
    assert all(T((27, k2, 50))[1] > 0 for k2 in positive)


def test_oracle_equivalence_small_instances():
    # Three sellers need at least three levels, so most draws use K >= 3 and
    # every tenth draw exercises the empty case.
    rng = np.random.default_rng(3)
    solved = 0
    for i in range(50):
        K = 3 + int(rng.integers(0, 2)) if i % 10 else int(rng.integers(1, 3))
        M = int(rng.integers(5, 11))
        B = float(rng.uniform(1.3, 2.0))
        config = MarketConfig.uniform(3, K, float(rng.uniform(1.3, 2.5)), float(rng.uniform(0.1, 0.4)), B)
        grid = build_grid(M, B)
        expected = oracles.grid_game(config, M, B)
        if expected is None:
            with pytest.raises(NoEligibleEquilibriumError):
                solve_lexicographic(config, grid)
        else:
            eq = solve_lexicographic(config, grid, certify=True)
            assert eq.indices == expected
            assert eq.nash_certificate == oracles.deviation_certificate(config, M, B, expected)
            solved += 1
    assert solved >= 20


def test_tiny_instance_matches_oracle():
    config = MarketConfig.uniform(3, 3, 2.0, 0.3, 1.6)
    expected = oracles.grid_game(config, 6, 1.6)
    if expected is None:
        with pytest.raises(NoEligibleEquilibriumError):
            solve_lexicographic(config, build_grid(6, 1.6))
    else:
        assert solve_lexicographic(config, build_grid(6, 1.6)).indices == expected


def test_verifier_edge_cases():
    config = MarketConfig.uniform(3, 3, 2.0, 0.3, 1.6)
    assert verify_constrained_nash(config, build_grid(3, 1.6), (1, 2, 3)) == (True, True, True)
    with pytest.raises(ValueError):
        verify_constrained_nash(config, build_grid(5, 1.6), (2, 2, 3))


def test_verifier_flags_profitable_move():
    from towermarket.reference import REFERENCE_CONFIG

    grid = build_grid(50, 1.5)
    T = PayoffTensor(REFERENCE_CONFIG, grid)
    # Operator 2 earns nothing at (1, 13, 34) but everybody earns at (1, 12, 34).
    assert T((1, 13, 34))[1] == 0 and np.prod(T((1, 12, 34))) > 0
    cert = verify_constrained_nash(REFERENCE_CONFIG, grid, (1, 13, 34), T)
    assert cert[1] is False
    assert cert == oracles.deviation_certificate(REFERENCE_CONFIG, 50, 1.5, (1, 13, 34))


def test_no_eligible_tuple():
    config = MarketConfig.uniform(3, 3, 2.0, 0.0, 1.5)
    with pytest.raises(NoEligibleEquilibriumError):
        solve_lexicographic(config, build_grid(6, 1.5))
    with pytest.raises(ValueError):
        solve_lexicographic(MarketConfig.uniform(2, 3, 2.0, 0.3, 1.5), build_grid(6, 1.5))


def test_tensor_rows():
    config = MarketConfig.uniform(3, 2, 2.0, 0.3, 1.5)
    T = PayoffTensor(config, build_grid(5, 1.5))
    header, rows = tensor_rows(T)
    assert header == ["k1", "k2", "k3", "R1", "R2", "R3", "eligible"]
    assert len(rows) == 10
    assert all(r[6] == int(all(x > 0 for x in r[3:6])) for r in rows)
