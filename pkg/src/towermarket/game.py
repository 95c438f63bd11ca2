"""Discretized pure-strategy pricing game between ordered operators.

Each operator picks an index ``k`` into the common grid
``beta_k = 1 + k (B - 1) / M`` (k = 1..M) and players are ordered so that
``k_1 < k_2 < ... < k_J0``. A tuple is eligible when every operator earns a
positive revenue; the tower company only accepts eligible tuples.

The three-player selection runs in stages. The top operator's eligible best
response ``K3(k1, k2)`` gives the set ``L``; the top index maximizing ``R3``
over ``L`` is fixed, then the middle index maximizing ``R2`` among those
tuples, then the bottom index maximizing ``R1``. Ties go to the smallest
index everywhere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .errors import NoEligibleEquilibriumError
from .market import MarketConfig, batch_revenues

MATERIALIZE_LIMIT = 60

# Pure policies only: a policy is a point mass on a single grid index.
PurePolicy = int


@dataclass(frozen=True)
class ActionGrid:
    points_per_player: int
    bound: float

    def __post_init__(self) -> None:
        if self.points_per_player < 1:
            raise ValueError(f"grid needs at least one point, got {self.points_per_player!r}")
        if not self.bound > 1:
            raise ValueError(f"bound must exceed 1, got {self.bound!r}")

    @property
    def values(self) -> np.ndarray:
        """``beta_1 .. beta_M``; the last entry is exactly ``B``."""
        M = self.points_per_player
        v = 1.0 + np.arange(1, M + 1) * (self.bound - 1.0) / M
        v[-1] = self.bound
        return v

    def beta(self, k: int) -> float:
        if not 1 <= k <= self.points_per_player:
            raise IndexError(f"grid index {k} out of range 1..{self.points_per_player}")
        return float(self.values[k - 1])


def build_grid(points_per_player: int, bound: float) -> ActionGrid:
    return ActionGrid(points_per_player, bound)


class PayoffTensor:
    """Revenues at every index tuple.

    Grids up to ``MATERIALIZE_LIMIT`` points are filled at construction;
    larger grids are evaluated on demand and memoized.
    """

    def __init__(self, config: MarketConfig, grid: ActionGrid):
        self.config = config
        self.grid = grid
        self._values = grid.values
        J, M = config.num_operators, grid.points_per_player
        self._table: Optional[np.ndarray] = None
        if M <= MATERIALIZE_LIMIT and M**J <= MATERIALIZE_LIMIT**3:
            mesh = np.stack(np.meshgrid(*([self._values] * J), indexing="ij"), axis=-1)
            self._table, _ = batch_revenues(config, mesh)
        self._lazy = lru_cache(maxsize=None)(self._evaluate)

    @property
    def materialized(self) -> bool:
        return self._table is not None

    def _evaluate(self, indices: tuple[int, ...]) -> np.ndarray:
        b = self._values[np.asarray(indices) - 1]
        R, _ = batch_revenues(self.config, b)
        R.setflags(write=False)
        return R

    def __call__(self, indices: Sequence[int]) -> np.ndarray:
        """Revenue vector at 1-based ``indices``."""
        idx = tuple(int(k) for k in indices)
        if len(idx) != self.config.num_operators:
            raise ValueError(f"expected {self.config.num_operators} indices, got {len(idx)}")
        M = self.grid.points_per_player
        if any(not 1 <= k <= M for k in idx):
            raise IndexError(f"grid indices {idx} out of range 1..{M}")
        if self._table is not None:
            return self._table[tuple(k - 1 for k in idx)]
        return self._lazy(idx)

    def ordered_tuples(self):
        return itertools.combinations(range(1, self.grid.points_per_player + 1), self.config.num_operators)


def _tensor(config: MarketConfig, grid: ActionGrid, tensor: Optional[PayoffTensor]) -> PayoffTensor:
    if tensor is None:
        return PayoffTensor(config, grid)
    if tensor.config != config or tensor.grid != grid:
        raise ValueError("payoff tensor was built for a different config or grid")
    return tensor


def _check_ordered(indices: Sequence[int]) -> None:
    if any(a >= b for a, b in zip(indices, indices[1:])):
        raise ValueError(f"indices must be strictly increasing, got {tuple(indices)}")


def eligible(config: MarketConfig, grid: ActionGrid, indices: Sequence[int], tensor: Optional[PayoffTensor] = None) -> bool:
    """True when every operator earns a positive revenue at ``indices``."""
    _check_ordered(indices)
    return bool(np.prod(_tensor(config, grid, tensor)(indices)) > 0)


def best_response_top(
    config: MarketConfig,
    grid: ActionGrid,
    lower: Sequence[int],
    eligible_only: bool = True,
    tensor: Optional[PayoffTensor] = None,
) -> int:
    """Top operator's best index given the indices of the others.

    The search runs over ``k > max(lower)``. With ``eligible_only`` only
    candidates giving every operator positive revenue compete; when none does,
    or when the top revenue is flat, the smallest index in range is returned.

    Raises:
        ValueError: the candidate range is empty or ``lower`` is unordered.
    """
    T = _tensor(config, grid, tensor)
    lower = tuple(int(k) for k in lower)
    _check_ordered(lower)
    if len(lower) != config.num_operators - 1:
        raise ValueError(f"expected {config.num_operators - 1} lower indices, got {len(lower)}")
    start = (lower[-1] if lower else 0) + 1
    M = grid.points_per_player
    if start > M:
        raise ValueError(f"no grid index above {start - 1} in 1..{M}")
    best_k, best_r = start, -np.inf
    found = False
    for k in range(start, M + 1):
        R = T(lower + (k,))
        if eligible_only and not np.prod(R) > 0:
            continue
        if R[-1] > best_r:
            best_k, best_r, found = k, R[-1], True
    return best_k if found or not eligible_only else start


@dataclass(frozen=True)
class GridEquilibrium:
    indices: tuple[int, ...]
    betas: tuple[float, ...]
    payoffs: tuple[float, ...]
    eligible: bool
    nash_certificate: Optional[tuple[bool, ...]] = None
    notes: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "indices": list(self.indices),
            "betas": list(self.betas),
            "payoffs": list(self.payoffs),
            "eligible": self.eligible,
            "nash_certificate": None if self.nash_certificate is None else list(self.nash_certificate),
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GridEquilibrium":
        cert = data.get("nash_certificate")
        return cls(
            indices=tuple(data["indices"]),
            betas=tuple(data["betas"]),
            payoffs=tuple(data["payoffs"]),
            eligible=data["eligible"],
            nash_certificate=None if cert is None else tuple(cert),
            notes=tuple(data.get("notes", ())),
        )


def _argmax_smallest(candidates, key) -> list:
    best = max(key(c) for c in candidates)
    return [c for c in candidates if key(c) == best]


@dataclass(frozen=True)
class LexicographicSets:
    """Intermediate sets of the staged search (index tuples)."""

    top_best_responses: tuple[tuple[int, int, int], ...]
    top_fixed: tuple[tuple[int, int, int], ...]
    middle_fixed: tuple[tuple[int, int, int], ...]


def lexicographic_sets(config: MarketConfig, grid: ActionGrid, tensor: Optional[PayoffTensor] = None) -> LexicographicSets:
    if config.num_operators != 3:
        raise ValueError("the staged search is defined for three operators")
    T = _tensor(config, grid, tensor)
    M = grid.points_per_player
    L = []
    for k1 in range(1, M - 1):
        for k2 in range(k1 + 1, M):
            k3 = best_response_top(config, grid, (k1, k2), eligible_only=True, tensor=T)
            if np.prod(T((k1, k2, k3))) > 0:
                L.append((k1, k2, k3))
    if not L:
        raise NoEligibleEquilibriumError(f"no eligible best response on a {M}-point grid")
    # Candidates are generated in increasing index order, so the first
    # maximizer is always the one with the smallest index.
    top = _argmax_smallest(L, lambda t: T(t)[2])
    k3 = min(t[2] for t in top)
    L_top = [t for t in L if t[2] == k3]
    mid = _argmax_smallest(L_top, lambda t: T(t)[1])
    k2 = min(t[1] for t in mid)
    L_mid = [t for t in L_top if t[1] == k2]
    return LexicographicSets(tuple(L), tuple(L_top), tuple(L_mid))


def solve_lexicographic(
    config: MarketConfig,
    grid: ActionGrid,
    tensor: Optional[PayoffTensor] = None,
    certify: bool = False,
) -> GridEquilibrium:
    """Staged selection for three ordered operators.

    Raises:
        NoEligibleEquilibriumError: no eligible best response exists.
    """
    T = _tensor(config, grid, tensor)
    sets = lexicographic_sets(config, grid, T)
    bottom = _argmax_smallest(list(sets.middle_fixed), lambda t: T(t)[0])
    indices = min(bottom)
    cert = verify_constrained_nash(config, grid, indices, T) if certify else None
    return equilibrium_at(config, grid, indices, T, cert)


def equilibrium_at(
    config: MarketConfig,
    grid: ActionGrid,
    indices: Sequence[int],
    tensor: Optional[PayoffTensor] = None,
    certificate: Optional[tuple[bool, ...]] = None,
) -> GridEquilibrium:
    T = _tensor(config, grid, tensor)
    indices = tuple(int(k) for k in indices)
    R = T(indices)
    betas = tuple(grid.beta(k) for k in indices)
    M, B = grid.points_per_player, grid.bound
    notes = tuple(f"beta_{k} = 1 + {k}*({B!r} - 1)/{M} = {b!r}" for k, b in zip(indices, betas))
    return GridEquilibrium(
        indices=indices,
        betas=betas,
        payoffs=tuple(float(r) for r in R),
        eligible=bool(np.prod(R) > 0),
        nash_certificate=certificate,
        notes=notes,
    )


def verify_constrained_nash(
    config: MarketConfig,
    grid: ActionGrid,
    indices: Sequence[int],
    tensor: Optional[PayoffTensor] = None,
) -> tuple[bool, ...]:
    """Per-player check that no ordered, eligible unilateral move pays more.

    Player ``j`` may move to any index strictly between its neighbours'
    indices. The entry for ``j`` is False as soon as one such move is
    eligible and strictly raises ``R_j``.
    """
    T = _tensor(config, grid, tensor)
    indices = tuple(int(k) for k in indices)
    _check_ordered(indices)
    R = T(indices)
    M = grid.points_per_player
    cert = []
    for j, k in enumerate(indices):
        lo = indices[j - 1] + 1 if j > 0 else 1
        hi = indices[j + 1] - 1 if j + 1 < len(indices) else M
        ok = True
        for alt in range(lo, hi + 1):
            if alt == k:
                continue
            trial = indices[:j] + (alt,) + indices[j + 1 :]
            Rt = T(trial)
            if np.prod(Rt) > 0 and Rt[j] > R[j]:
                ok = False
                break
        cert.append(ok)
    return tuple(cert)


def tensor_rows(tensor: PayoffTensor, tuples=None) -> tuple[list[str], list[list]]:
    """CSV header and rows ``k_1..k_J, R_1..R_J, eligible`` over ordered tuples."""
    J = tensor.config.num_operators
    header = [f"k{j}" for j in range(1, J + 1)] + [f"R{j}" for j in range(1, J + 1)] + ["eligible"]
    rows = []
    for t in tensor.ordered_tuples() if tuples is None else tuples:
        R = tensor(t)
        rows.append([*t, *(float(r) for r in R), int(np.prod(R) > 0)])
    return header, rows


def top_revenue_slice(tensor: PayoffTensor, k1: int, k2: int) -> list[tuple[int, float]]:
    """``(k3, R3)`` for ``k3 > k2`` at fixed lower indices."""
    return [(k3, float(tensor((k1, k2, k3))[2])) for k3 in range(k2 + 1, tensor.grid.points_per_player + 1)]


def middle_revenue_slice(tensor: PayoffTensor, k1: int, k3: int) -> list[tuple[int, float]]:
    """``(k2, R2)`` for ``k1 < k2 < k3``."""
    return [(k2, float(tensor((k1, k2, k3))[1])) for k2 in range(k1 + 1, k3)]


def positive_middle_set(tensor: PayoffTensor, k1: int, k3: int) -> tuple[int, ...]:
    return tuple(k2 for k2, r in middle_revenue_slice(tensor, k1, k3) if r > 0)
