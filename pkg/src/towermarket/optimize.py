"""Centralized price setting over the box ``(1, B]**J0``.

Three problems are solved with the same machinery:

* ``optimize_sum``: maximize total revenue, no ordering.
* ``optimize_bargaining``: maximize the product of revenues while the
  highest-reputation operator posts the largest exponent.
* ``optimize_ordered_product``: maximize the product of revenues with
  exponents strictly increasing in reputation.

Revenues are piecewise smooth in the exponents and jump whenever a level
changes hands, so the search is a multi-start coarse grid followed by
shrinking-box refinement, seeded also from ordered vectors with geometric
gaps so that thin regions near the diagonal are found. Each refined point is
then pushed coordinate-wise to the edge of its region. Within a fixed assignment each revenue depends only
on its own exponent and increases with it, which makes the region
enumeration in :func:`enumerate_assignment_regions` an exact oracle on small
instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import SizeGuardError
from .market import MarketConfig, MarketOutcome, PriceVector, batch_revenues, market_outcome

ORDER_NONE = "none"
ORDER_TOP = "top_dominates"
ORDER_FULL = "fully_ordered"
ORDERING_MODES = (ORDER_NONE, ORDER_TOP, ORDER_FULL)

_CHUNK = 250_000


@dataclass(frozen=True)
class OptimizerSettings:
    """Search controls.

    ``refine_points`` per dimension over a box of half-width equal to the
    previous spacing shrinks the box by 10x per round when it is 21.
    """

    coarse_grid_points: int = 60
    refine_rounds: int = 3
    boundary_offset: float = 1e-6
    ordering_mode: str = ORDER_NONE
    refine_points: int = 21
    starts: int = 8

    def __post_init__(self) -> None:
        if self.coarse_grid_points < 2:
            raise ValueError("coarse_grid_points must be at least 2")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be non-negative")
        if not 0 < self.boundary_offset < 1e-3:
            raise ValueError("boundary_offset must lie in (0, 1e-3)")
        if self.ordering_mode not in ORDERING_MODES:
            raise ValueError(f"unknown ordering mode {self.ordering_mode!r}")
        if self.refine_points < 3:
            raise ValueError("refine_points must be at least 3")
        if self.starts < 1:
            raise ValueError("starts must be positive")


@dataclass(frozen=True)
class Optimum:
    prices: PriceVector
    objective: float
    outcome: MarketOutcome
    degenerate: bool
    problem: str = ""
    ordering_mode: str = ORDER_NONE

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "ordering_mode": self.ordering_mode,
            "prices": list(self.prices.exponents),
            "objective": self.objective,
            "degenerate": self.degenerate,
            "outcome": self.outcome.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Optimum":
        return cls(
            prices=PriceVector(tuple(data["prices"])),
            objective=data["objective"],
            outcome=MarketOutcome.from_dict(data["outcome"]),
            degenerate=data["degenerate"],
            problem=data.get("problem", ""),
            ordering_mode=data.get("ordering_mode", ORDER_NONE),
        )


def _feasible_mask(points: np.ndarray, bound: float, mode: str) -> np.ndarray:
    ok = np.all((points > 1.0) & (points <= bound), axis=-1)
    if mode == ORDER_FULL:
        ok &= np.all(np.diff(points, axis=-1) > 0, axis=-1)
    elif mode == ORDER_TOP:
        ok &= np.all(points[..., :-1] < points[..., -1:], axis=-1)
    return ok


def _objective(revenues: np.ndarray, kind: str) -> np.ndarray:
    if kind == "sum":
        return revenues.sum(axis=-1)
    return revenues.prod(axis=-1)


def _lex_better(value: float, point: np.ndarray, best_value: float, best_point: Optional[np.ndarray]) -> bool:
    if best_point is None or value > best_value:
        return True
    if value < best_value:
        return False
    return tuple(point) < tuple(best_point)


def _evaluate_grid(config: MarketConfig, axes: list[np.ndarray], kind: str, mode: str, keep: int):
    """Top ``keep`` grid points (value desc, then lexicographic asc)."""
    bound = config.price_exponent_bound
    values_all, points_all = [], []
    first, rest = axes[0], axes[1:]
    rest_grid = np.stack(np.meshgrid(*rest, indexing="ij"), axis=-1).reshape(-1, len(rest)) if rest else np.zeros((1, 0))
    for x0 in first:
        pts = np.concatenate([np.full((len(rest_grid), 1), x0), rest_grid], axis=1)
        pts = pts[_feasible_mask(pts, bound, mode)]
        if len(pts) == 0:
            continue
        for start in range(0, len(pts), _CHUNK):
            chunk = pts[start:start + _CHUNK]
            revenues, _ = batch_revenues(config, chunk)
            vals = _objective(revenues, kind)
            order = np.argsort(-vals, kind="stable")[:keep]
            values_all.append(vals[order])
            points_all.append(chunk[order])
    if not values_all:
        return np.zeros(0), np.zeros((0, len(axes)))
    values = np.concatenate(values_all)
    points = np.concatenate(points_all)
    # points arrive in lexicographic order, so a stable sort on -value keeps ties lexicographic
    order = np.argsort(-values, kind="stable")[:keep]
    return values[order], points[order]


def _grid_axis(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n)


def _refine(config: MarketConfig, start: np.ndarray, half_width: float, kind: str, settings: OptimizerSettings):
    bound = config.price_exponent_bound
    x = start.copy()
    best_val = float(_objective(batch_revenues(config, x)[0], kind))
    w = half_width
    for _ in range(settings.refine_rounds):
        axes = [_grid_axis(max(xi - w, 1.0 + 1e-15), min(xi + w, bound), settings.refine_points) for xi in x]
        vals, pts = _evaluate_grid(config, axes, kind, settings.ordering_mode, 1)
        if len(vals) and _lex_better(float(vals[0]), pts[0], best_val, x):
            best_val, x = float(vals[0]), pts[0].copy()
        w /= 10.0
    return best_val, x


def _nudge(config: MarketConfig, x: np.ndarray, kind: str, settings: OptimizerSettings):
    tau = settings.boundary_offset
    cands = [x]
    for i in range(len(x)):
        for s in (-tau, tau):
            y = x.copy()
            y[i] += s
            cands.append(y)
    cands = np.array(cands)
    cands = cands[_feasible_mask(cands, config.price_exponent_bound, settings.ordering_mode)]
    vals = _objective(batch_revenues(config, cands)[0], kind)
    best_v, best_p = -np.inf, None
    for v, p in zip(vals, cands):
        if _lex_better(float(v), p, best_v, best_p):
            best_v, best_p = float(v), p
    return best_v, best_p


def _upper_limits(x: np.ndarray, j: int, bound: float, mode: str, tau: float) -> float:
    J = len(x)
    if mode == ORDER_FULL and j < J - 1:
        return x[j + 1] - tau
    if mode == ORDER_TOP and j < J - 1:
        return x[-1] - tau
    return bound


def _push(config: MarketConfig, x: np.ndarray, kind: str, settings: OptimizerSettings, max_rounds: int = 50):
    """Raise each exponent to just inside the edge of its current region.

    While the assignment is fixed each revenue grows with its own exponent
    alone, so coordinate moves toward the region edge never lower the
    objective. Operators are visited top first so the ordering leaves room.
    """
    tau = settings.boundary_offset
    bound = config.price_exponent_bound
    x = x.copy()
    assignment = market_outcome(config, x).assignment
    for _ in range(max_rounds):
        moved = 0.0
        for j in reversed(range(len(x))):
            hi = _upper_limits(x, j, bound, settings.ordering_mode, tau)
            if hi <= x[j]:
                continue
            y = x.copy()
            y[j] = hi
            if market_outcome(config, y).assignment == assignment:
                target = hi
            else:
                lo, up = x[j], hi
                while up - lo > 1e-14:
                    y[j] = 0.5 * (lo + up)
                    if market_outcome(config, y).assignment == assignment:
                        lo = y[j]
                    else:
                        up = y[j]
                target = max(x[j], lo - tau)
            moved = max(moved, target - x[j])
            x[j] = target
        if moved < 1e-13:
            break
    return float(_objective(batch_revenues(config, x)[0], kind)), x


def _gap_seeds(config: MarketConfig, settings: OptimizerSettings, kind: str):
    """Best ordered vectors ``b_J`` on the coarse axis with geometric gaps below it.

    Regions where utilities nearly coincide can be much thinner than the
    coarse spacing; geometric gaps reach them.
    """
    J = config.num_operators
    axis = coarse_grid(config, settings)
    if J == 1:
        return np.zeros(0), np.zeros((0, 1))
    fractions = np.geomspace(1e-6, 0.95, 24)
    combos = np.stack(np.meshgrid(*([fractions] * (J - 1)), indexing="ij"), axis=-1).reshape(-1, J - 1)
    pts = np.empty((len(axis) * len(combos), J))
    top = np.repeat(axis, len(combos))
    pts[:, -1] = top
    g = np.tile(combos, (len(axis), 1))
    for j in range(J - 2, -1, -1):
        pts[:, j] = pts[:, j + 1] - g[:, j] * (pts[:, j + 1] - 1.0)
    pts = pts[_feasible_mask(pts, config.price_exponent_bound, settings.ordering_mode)]
    if len(pts) == 0:
        return np.zeros(0), np.zeros((0, J))
    revenues, _ = batch_revenues(config, pts)
    vals = _objective(revenues, kind)
    order = np.lexsort((*pts.T[::-1], -vals))[: settings.starts]
    return vals[order], pts[order]


def coarse_grid(config: MarketConfig, settings: OptimizerSettings) -> np.ndarray:
    """Per-axis coarse values ``1 + k (B - 1) / n`` for k = 1..n."""
    n = settings.coarse_grid_points
    B = config.price_exponent_bound
    return 1.0 + np.arange(1, n + 1) * (B - 1.0) / n


def maximize(config: MarketConfig, kind: str, settings: OptimizerSettings, problem: str = "") -> Optimum:
    """Maximize ``sum`` or ``product`` of revenues under ``settings.ordering_mode``."""
    if kind not in ("sum", "product"):
        raise ValueError(f"unknown objective {kind!r}")
    J = config.num_operators
    axis = coarse_grid(config, settings)
    spacing = (config.price_exponent_bound - 1.0) / settings.coarse_grid_points
    vals, pts = _evaluate_grid(config, [axis] * J, kind, settings.ordering_mode, settings.starts)
    extra_vals, extra_pts = _gap_seeds(config, settings, kind)
    if len(vals) + len(extra_vals) == 0:
        raise ValueError("no coarse grid point satisfies the ordering constraint; raise coarse_grid_points")
    best_v, best_p = -np.inf, None
    seeds = [(p, spacing) for p in pts] + [(p, spacing * 1e-3) for p in extra_pts]
    for p, width in seeds:
        v, x = _refine(config, p, width, kind, settings)
        v, x = _nudge(config, x, kind, settings)
        pv, px = _push(config, x, kind, settings)
        if pv > v:
            v, x = _nudge(config, px, kind, settings)
        if _lex_better(v, x, best_v, best_p):
            best_v, best_p = v, x
    prices = PriceVector(tuple(float(b) for b in best_p))
    outcome = market_outcome(config, best_p)
    objective = float(sum(outcome.revenues)) if kind == "sum" else float(np.prod(outcome.revenues))
    return Optimum(
        prices=prices,
        objective=objective,
        outcome=outcome,
        degenerate=outcome.degenerate,
        problem=problem,
        ordering_mode=settings.ordering_mode,
    )


def optimize_sum(config: MarketConfig, settings: Optional[OptimizerSettings] = None) -> Optimum:
    """Maximize total normalized revenue over ``(1, B]**J0``."""
    settings = replace(settings or OptimizerSettings(), ordering_mode=ORDER_NONE)
    return maximize(config, "sum", settings, problem="sum")


def optimize_bargaining(config: MarketConfig, settings: Optional[OptimizerSettings] = None) -> Optimum:
    """Maximize the revenue product with ``b_k < b_J0`` for every ``k < J0``."""
    if config.num_operators < 2:
        raise ValueError("bargaining needs at least two operators")
    settings = replace(settings or OptimizerSettings(), ordering_mode=ORDER_TOP)
    return maximize(config, "product", settings, problem="bargaining")


def optimize_ordered_product(config: MarketConfig, settings: Optional[OptimizerSettings] = None) -> Optimum:
    """Maximize the revenue product with ``1 < b_1 < ... < b_J0 <= B``."""
    if config.num_operators < 2:
        raise ValueError("ordered product needs at least two operators")
    settings = replace(settings or OptimizerSettings(), ordering_mode=ORDER_FULL)
    return maximize(config, "product", settings, problem="ordered")


PROBLEMS = {
    "sum": optimize_sum,
    "bargaining": optimize_bargaining,
    "ordered": optimize_ordered_product,
}


# --- assignment regions -------------------------------------------------

@dataclass(frozen=True)
class AssignmentRegion:
    """Set of exponent vectors producing one fixed level assignment.

    The region is cut out by ``b_w**q < b_k**q + c(w, k)`` for each level
    ``q`` won by ``w`` against each rival ``k``, plus the ordering and the
    box. ``lower_corner`` and ``upper_corner`` bound its closure;
    ``upper_corner`` is also its componentwise supremum. ``interior_point``
    is a verified point where the assignment holds strictly.
    """

    assignment: tuple[int, ...]
    lower_corner: tuple[float, ...]
    upper_corner: tuple[float, ...]
    interior_point: tuple[float, ...]
    constraints: tuple[tuple[int, int, int], ...] = field(repr=False)

    def supremum_revenues(self, config: MarketConfig) -> np.ndarray:
        """Revenues at ``upper_corner`` computed from the assignment itself."""
        b = np.asarray(self.upper_corner)
        R = np.zeros(config.num_operators)
        for q, w in enumerate(self.assignment, start=1):
            R[w - 1] += config.quality_fractions[q - 1] * b[w - 1] ** q
        return R


def _pair_constant(config: MarketConfig, winner: int, loser: int) -> float:
    alpha = config.reputation_weight
    a0 = config.popularity_index
    return alpha * (a0 ** (winner + 1) - a0 ** (loser + 1)) / (1.0 - alpha)


def _ordering_pairs(J: int, mode: str) -> list[tuple[int, int]]:
    """Pairs ``(lo, hi)`` meaning ``b_lo < b_hi``."""
    if mode == ORDER_FULL:
        return [(j, j + 1) for j in range(J - 1)]
    if mode == ORDER_TOP:
        return [(k, J - 1) for k in range(J - 1)]
    return []


def _greatest_point(config, constraints, order_pairs, margin, max_iter=20000):
    J = config.num_operators
    B = config.price_exponent_bound
    b = np.full(J, B)
    for _ in range(max_iter):
        old = b.copy()
        for q, w, k in constraints:
            rhs = b[k] ** q + _pair_constant(config, w, k) - margin
            if rhs <= 0:
                return None
            b[w] = min(b[w], rhs ** (1.0 / q))
        for lo, hi in order_pairs:
            b[lo] = min(b[lo], b[hi] - margin)
        if np.any(b <= 1.0 + margin):
            return None
        if np.max(np.abs(b - old)) < 1e-15:
            return b
    return b


def _least_point(config, constraints, order_pairs, max_iter=20000):
    J = config.num_operators
    B = config.price_exponent_bound
    b = np.ones(J)
    for _ in range(max_iter):
        old = b.copy()
        for q, w, k in constraints:
            lhs = b[w] ** q - _pair_constant(config, w, k)
            if lhs > 0:
                b[k] = max(b[k], lhs ** (1.0 / q))
        for lo, hi in order_pairs:
            b[hi] = max(b[hi], b[lo])
        if np.any(b > B):
            return None
        if np.max(np.abs(b - old)) < 1e-15:
            return b
    return b


def enumerate_assignment_regions(
    config: MarketConfig,
    ordering_mode: str = ORDER_NONE,
    margin: float = 1e-9,
) -> list[AssignmentRegion]:
    """All level assignments realizable by some admissible exponent vector.

    Raises:
        SizeGuardError: when ``J0 > 4`` or ``K > 6``.
    """
    J, K = config.num_operators, config.num_quality_levels
    if J > 4 or K > 6:
        raise SizeGuardError(f"region enumeration limited to J0 <= 4 and K <= 6, got J0={J}, K={K}")
    if ordering_mode not in ORDERING_MODES:
        raise ValueError(f"unknown ordering mode {ordering_mode!r}")
    alpha = config.reputation_weight
    order_pairs = _ordering_pairs(J, ordering_mode)
    regions = []
    for assignment in itertools.product(range(J), repeat=K):
        constraints = []
        possible = True
        for q, w in enumerate(assignment, start=1):
            for k in range(J):
                if k == w:
                    continue
                if alpha == 1.0:
                    if w < k:
                        possible = False
                    continue
                constraints.append((q, w, k))
        if not possible:
            continue
        if alpha == 1.0:
            b = np.full(J, config.price_exponent_bound)
            for lo, hi in reversed(order_pairs):
                b[lo] = min(b[lo], b[hi] - margin)
            if np.any(b <= 1.0):
                continue
            upper = np.full(J, config.price_exponent_bound)
            lower = np.ones(J)
            witness = b
        else:
            witness = _greatest_point(config, constraints, order_pairs, margin)
            if witness is None:
                continue
            upper = _greatest_point(config, constraints, order_pairs, 0.0)
            lower = _least_point(config, constraints, order_pairs)
            if upper is None or lower is None:
                continue
        check = market_outcome(config, witness)
        if check.assignment != tuple(w + 1 for w in assignment):
            continue
        regions.append(
            AssignmentRegion(
                assignment=tuple(w + 1 for w in assignment),
                lower_corner=tuple(float(x) for x in lower),
                upper_corner=tuple(float(x) for x in upper),
                interior_point=tuple(float(x) for x in witness),
                constraints=tuple((q, w + 1, k + 1) for q, w, k in constraints),
            )
        )
    return regions


def region_oracle_optimum(config: MarketConfig, kind: str, ordering_mode: str) -> tuple[float, Optional[AssignmentRegion]]:
    """Supremum of the objective over all regions, evaluated at their upper corners."""
    best, best_region = 0.0, None
    for region in enumerate_assignment_regions(config, ordering_mode):
        R = region.supremum_revenues(config)
        value = float(R.sum() if kind == "sum" else R.prod())
        if best_region is None or value > best:
            best, best_region = value, region
    return best, best_region
