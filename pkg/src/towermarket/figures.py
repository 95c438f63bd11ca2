"""Tabular figure data and deterministic CSV output.

Each builder returns ``(header, rows)``. Nothing here draws; the tables are
meant to be plotted elsewhere.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .coordinated import CoordinationResult
from .market import MarketConfig, PriceVector, utility_matrix
from .selfish import SelfishSweepResult, reduced_inputs

FIGURE_IDS = (
    "prices",
    "utilities",
    "sweep",
    "deviated-utilities",
    "coordinated-utilities",
    "r3-slice",
    "r2-slice",
)

Table = tuple[list[str], list[list]]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """CSV with minimal quoting, LF line endings and ``repr`` floats."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(header, rows))
    return path


def price_table(config: MarketConfig, prices: PriceVector) -> Table:
    """Price ``b_j**q`` per level, one column per operator."""
    J = config.num_operators
    header = ["q"] + [f"price_{j}" for j in range(1, J + 1)]
    rows = [[q, *(b**q for b in prices.exponents)] for q in range(1, config.num_quality_levels + 1)]
    return header, rows


def _utility_rows(config: MarketConfig, u: np.ndarray) -> Table:
    J = config.num_operators
    header = ["q"] + [f"u_{j}" for j in range(1, J + 1)]
    rows = [[q, *(float(x) for x in u[q - 1])] for q in range(1, config.num_quality_levels + 1)]
    return header, rows


def utility_figure(config: MarketConfig, prices: PriceVector) -> Table:
    return _utility_rows(config, utility_matrix(config, np.asarray(prices.exponents)))


def reduced_utility_figure(config: MarketConfig, prices: PriceVector, epsilon: Sequence[float], eta: float) -> Table:
    """Utilities after per-operator cuts ``epsilon``."""
    b, rep = reduced_inputs(config, prices, epsilon, eta)
    return _utility_rows(config, utility_matrix(config, b, rep))


def deviated_utility_figure(config: MarketConfig, prices: PriceVector, result: SelfishSweepResult) -> Table:
    """Utilities with the deviator at its maximal admissible cut."""
    eps = np.zeros(config.num_operators)
    eps[result.operator - 1] = result.epsilon_star
    return reduced_utility_figure(config, prices, eps, result.eta)


def coordinated_utility_figure(config: MarketConfig, prices: PriceVector, result: CoordinationResult, eta: float) -> Table:
    return reduced_utility_figure(config, prices, result.epsilon, eta)


def sweep_figure(result: SelfishSweepResult) -> Table:
    """Sweep path with the ``100 eps + 1`` abscissa as first column."""
    header, rows = result.csv_rows()
    return [header[1], header[0], *header[2:]], [[r[1], r[0], *r[2:]] for r in rows]


def slice_table(slice_rows, index_name: str, value_name: str) -> Table:
    return [index_name, value_name], [list(r) for r in slice_rows]
