"""Command-line entry point.

Every command reads a JSON scenario, runs one analysis and writes
``report.json`` (byte-stable for identical inputs) plus CSV tables into the
output directory. Wall-clock time goes to ``timing.json`` so that the report
itself stays reproducible.

Exit codes: 0 success, 2 unparsable input, 3 invalid scenario, 4 infeasible
or degenerate model outcome, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Callable, Optional

from . import __version__
from .coordinated import FIXED_POINT, MODES, CoordinationProblem, solve
from .errors import DegenerateBaselineError, InfeasibleError, NoEligibleEquilibriumError, UndefinedRatioError
from .figures import (
    FIGURE_IDS,
    coordinated_utility_figure,
    deviated_utility_figure,
    price_table,
    slice_table,
    sweep_figure,
    utility_figure,
    write_csv,
)
from .game import (
    PayoffTensor,
    build_grid,
    equilibrium_at,
    lexicographic_sets,
    middle_revenue_slice,
    solve_lexicographic,
    tensor_rows,
    top_revenue_slice,
    verify_constrained_nash,
)
from .market import MarketConfig, PriceVector, assign_market, scale_report, utility_table
from .optimize import PROBLEMS
from .outsourcing import gain_ratio, outsource
from .reference import beta_discrepancy_note
from .scenario import Scenario, ScenarioParseError, ScenarioValidationError, load_scenario
from .selfish import sweep

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_INFEASIBLE = 4
EXIT_IO = 5

REPORT_NAME = "report.json"
TIMING_NAME = "timing.json"

_INFEASIBLE = (DegenerateBaselineError, InfeasibleError, NoEligibleEquilibriumError, UndefinedRatioError)


class Output:
    """Collects CSV tables and console lines for one run."""

    def __init__(self) -> None:
        self.tables: list[tuple[str, list[str], list[list]]] = []
        self.lines: list[str] = []

    def table(self, name: str, header, rows) -> str:
        self.tables.append((name, list(header), rows))
        return name

    def say(self, line: str = "") -> None:
        self.lines.append(line)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _print_rows(out: Output, header, rows) -> None:
    cells = [[str(h) for h in header]] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    for row in cells:
        out.say("  ".join(c.rjust(w) for c, w in zip(row, widths)))


# --- scenario helpers ---------------------------------------------------

def _prices(scenario: Scenario, config: MarketConfig, args) -> tuple[PriceVector, Optional[dict]]:
    explicit = scenario.explicit_prices(config)
    if explicit is not None:
        return explicit, None
    name = scenario.price_spec().split(":", 1)[1]
    opt = PROBLEMS[name](config, scenario.optimizer_settings())
    return opt.prices, opt.to_dict()


def _game_grid(scenario: Scenario, config: MarketConfig, args):
    g = scenario.section("game")
    M = args.grid_points if args.grid_points is not None else g["points_per_player"]
    if M < config.num_operators:
        raise ScenarioValidationError(f"game needs at least {config.num_operators} grid points, got {M}")
    return build_grid(M, g.get("bound", config.price_exponent_bound))


def _sweep_results(scenario: Scenario, config: MarketConfig, prices: PriceVector):
    s = scenario.section("sweep")
    results = []
    for j in s["operators"]:
        if j > config.num_operators:
            raise ScenarioValidationError(f"sweep operator {j} exceeds {config.num_operators}")
        results.append(
            sweep(config, prices, j, s["budget"], s["eta"], step=s.get("step", 0.01), refine=s.get("refine", False))
        )
    return results


def _coordination_problems(scenario: Scenario, config: MarketConfig, prices: PriceVector):
    c = scenario.section("coordination")
    weights = c.get("gain_weights")
    return [
        CoordinationProblem(
            config,
            prices,
            delta,
            c["eta"],
            regime=c.get("regime", "towerco_operated"),
            gain_weights=None if weights is None else tuple(weights),
        )
        for delta in c["deltas"]
    ]


def _solve_game(config: MarketConfig, grid):
    tensor = PayoffTensor(config, grid)
    eq = solve_lexicographic(config, grid, tensor, certify=True)
    note = beta_discrepancy_note(eq.indices, eq.betas, config, grid.points_per_player)
    if note is not None:
        eq = replace(eq, notes=eq.notes + (note,))
    return tensor, eq


# --- commands -----------------------------------------------------------

def cmd_baseline(scenario: Scenario, args, out: Output) -> dict:
    config = scenario.market()
    prices, solved = _prices(scenario, config, args)
    outcome = assign_market(config, prices)
    header = ["operator", "revenue", "share", "arpu"]
    rows = [[j + 1, outcome.revenues[j], outcome.shares[j], outcome.arpus[j]] for j in range(config.num_operators)]
    out.table("baseline.csv", header, rows)
    out.say(f"prices {list(prices.exponents)}  assignment {list(outcome.assignment)}")
    _print_rows(out, header, rows)
    return {
        "prices": list(prices.exponents),
        "solved_prices": solved,
        "outcome": outcome.to_dict(),
        "scaled": scale_report(outcome, config).to_dict(),
        "utilities": utility_table(config, prices).tolist(),
    }


def cmd_optimize(scenario: Scenario, args, out: Output) -> dict:
    config = scenario.market()
    opt = PROBLEMS[args.problem](config, scenario.optimizer_settings(args.grid_points))
    header = ["operator", "exponent", "revenue", "share"]
    rows = [[j + 1, opt.prices.exponents[j], opt.outcome.revenues[j], opt.outcome.shares[j]] for j in range(config.num_operators)]
    out.table(f"optimize_{args.problem}.csv", header, rows)
    out.say(f"{args.problem}: objective {opt.objective:.9g}  degenerate {opt.degenerate}")
    _print_rows(out, header, rows)
    return opt.to_dict()


def cmd_outsource(scenario: Scenario, args, out: Output) -> dict:
    config = scenario.market()
    prices, _ = _prices(scenario, config, args)
    outcome = assign_market(config, prices)
    os_ = scenario.outsourcing()
    report = outsource(outcome, os_)
    ratios = []
    for j in range(1, config.num_operators + 1):
        try:
            ratios.append(gain_ratio(outcome, os_, j))
        except UndefinedRatioError:
            ratios.append(None)
    header = ["operator", "revenue", "total", "gain_ratio"]
    rows = [[j + 1, outcome.revenues[j], report.operator_totals[j], ratios[j]] for j in range(config.num_operators)]
    out.table("outsource.csv", header, rows)
    _print_rows(out, header, rows)
    out.say(f"towerco revenue {report.towerco_revenue:.6g}  value created {report.value_created:.6g}  profitable {report.profitable}")
    return {"prices": list(prices.exponents), "value": report.to_dict(), "gain_ratios": ratios}


def cmd_sweep(scenario: Scenario, args, out: Output) -> dict:
    config = scenario.market()
    prices, _ = _prices(scenario, config, args)
    results = _sweep_results(scenario, config, prices)
    for r in results:
        header, rows = r.csv_rows()
        out.table(f"sweep_operator{r.operator}.csv", header, rows)
        out.say(
            f"operator {r.operator}: eps* {r.epsilon_star}  refined {_fmt(r.epsilon_star_refined)}  "
            f"peak ratio {r.peak_ratio:.6g}"
        )
    return {"prices": list(prices.exponents), "sweeps": [r.to_dict() for r in results]}


def cmd_coordinate(scenario: Scenario, args, out: Output) -> dict:
    config = scenario.market()
    prices, _ = _prices(scenario, config, args)
    J = config.num_operators
    header = (
        ["delta", "mode"]
        + [f"eps_{j}" for j in range(1, J + 1)]
        + [f"offset_{j}" for j in range(1, J + 1)]
        + [f"global_ratio_{j}" for j in range(1, J + 1)]
        + ["assignment_preserved"]
    )
    rows, entries = [], []
    for problem in _coordination_problems(scenario, config, prices):
        by_mode = {m: solve(problem, m) for m in MODES}
        for m, r in by_mode.items():
            rows.append([problem.delta, m, *r.epsilon, *r.offsets, *r.global_ratios, r.assignment_preserved])
        entries.append({"delta": problem.delta, "selected": by_mode[args.mode].to_dict(), "modes": {m: r.to_dict() for m, r in by_mode.items()}})
    out.table("coordination.csv", header, rows)
    _print_rows(out, ["delta", "mode"] + header[2 : 2 + J], [r[: 2 + J] for r in rows])
    return {"prices": list(prices.exponents), "selected_mode": args.mode, "results": entries}


def cmd_game(scenario: Scenario, args, out: Output) -> dict:
    config = scenario.market()
    grid = _game_grid(scenario, config, args)
    tensor, eq = _solve_game(config, grid)
    sets = lexicographic_sets(config, grid, tensor)
    out.table("game_L.csv", *tensor_rows(tensor, sets.top_best_responses))
    out.table("game_L_prime.csv", *tensor_rows(tensor, sets.top_fixed))
    if args.export_tensor:
        out.table("game_tensor.csv", *tensor_rows(tensor))
    out.say(f"equilibrium {list(eq.indices)}  betas {list(eq.betas)}  payoffs {[round(p, 8) for p in eq.payoffs]}")
    out.say(f"nash certificate {list(eq.nash_certificate)}")
    for n in eq.notes:
        out.say(f"note: {n}")
    return {
        "points_per_player": grid.points_per_player,
        "bound": grid.bound,
        "equilibrium": eq.to_dict(),
        "set_sizes": {"L": len(sets.top_best_responses), "L_prime": len(sets.top_fixed), "L_final": len(sets.middle_fixed)},
    }


def cmd_verify_nash(scenario: Scenario, args, out: Output) -> dict:
    config = scenario.market()
    grid = _game_grid(scenario, config, args)
    tensor = PayoffTensor(config, grid)
    g = scenario.section("game")
    if "verify" in g:
        indices = tuple(g["verify"])
        if len(indices) != config.num_operators or any(k > grid.points_per_player for k in indices):
            raise ScenarioValidationError(f"game/verify: {list(indices)} is not a tuple on the grid")
    else:
        indices = solve_lexicographic(config, grid, tensor).indices
    cert = verify_constrained_nash(config, grid, indices, tensor)
    eq = equilibrium_at(config, grid, indices, tensor, cert)
    out.say(f"tuple {list(indices)}  eligible {eq.eligible}  certificate {list(cert)}")
    return {"points_per_player": grid.points_per_player, "bound": grid.bound, "equilibrium": eq.to_dict()}


def cmd_figure(scenario: Scenario, args, out: Output) -> dict:
    config = scenario.market()
    fid = args.figure
    files = []
    if fid in ("prices", "utilities"):
        prices, _ = _prices(scenario, config, args)
        table = price_table(config, prices) if fid == "prices" else utility_figure(config, prices)
        files.append(out.table(f"figure_{fid}.csv", *table))
    elif fid in ("sweep", "deviated-utilities"):
        prices, _ = _prices(scenario, config, args)
        for r in _sweep_results(scenario, config, prices):
            table = sweep_figure(r) if fid == "sweep" else deviated_utility_figure(config, prices, r)
            files.append(out.table(f"figure_{fid}_operator{r.operator}.csv", *table))
    elif fid == "coordinated-utilities":
        prices, _ = _prices(scenario, config, args)
        for i, problem in enumerate(_coordination_problems(scenario, config, prices)):
            r = solve(problem, args.mode)
            files.append(out.table(f"figure_{fid}_{i}.csv", *coordinated_utility_figure(config, prices, r, problem.eta)))
    else:
        grid = _game_grid(scenario, config, args)
        tensor, eq = _solve_game(config, grid)
        k1 = args.k1 if args.k1 is not None else eq.indices[0]
        if fid == "r3-slice":
            k2 = args.k2 if args.k2 is not None else eq.indices[1]
            if not 1 <= k1 < k2 < grid.points_per_player:
                raise ScenarioValidationError(f"r3-slice needs 1 <= k1 < k2 < M, got ({k1}, {k2})")
            table = slice_table(top_revenue_slice(tensor, k1, k2), "k3", "R3")
        else:
            k3 = args.k3 if args.k3 is not None else eq.indices[2]
            if not 1 <= k1 < k3 - 1 or k3 > grid.points_per_player:
                raise ScenarioValidationError(f"r2-slice needs 1 <= k1 < k3 - 1 and k3 <= M, got ({k1}, {k3})")
            table = slice_table(middle_revenue_slice(tensor, k1, k3), "k2", "R2")
        files.append(out.table(f"figure_{fid}.csv", *table))
    for f in files:
        out.say(f"wrote {f}")
    return {"figure": fid, "files": files}


COMMANDS: dict[str, Callable[[Scenario, argparse.Namespace, Output], dict]] = {
    "baseline": cmd_baseline,
    "optimize": cmd_optimize,
    "outsource": cmd_outsource,
    "sweep": cmd_sweep,
    "coordinate": cmd_coordinate,
    "game": cmd_game,
    "verify-nash": cmd_verify_nash,
    "figure": cmd_figure,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="path to the JSON scenario")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--mode", choices=MODES, default=FIXED_POINT, help="coordinated solver mode")
    common.add_argument("--grid-points", type=int, default=None, help="override game or optimizer grid size")
    common.add_argument("--seed", type=int, default=None, help="reserved; every algorithm is deterministic")

    parser = argparse.ArgumentParser(prog="towermarket", description="Operator and TowerCo market analyses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("baseline", parents=[common], help="assign the market at the scenario prices")
    p = sub.add_parser("optimize", parents=[common], help="centralized price optimization")
    p.add_argument("problem", choices=sorted(PROBLEMS))
    sub.add_parser("outsource", parents=[common], help="TowerCo value accounting")
    sub.add_parser("sweep", parents=[common], help="unilateral price-cut sweeps")
    sub.add_parser("coordinate", parents=[common], help="coordinated price reduction")
    p = sub.add_parser("game", parents=[common], help="staged grid-game equilibrium")
    p.add_argument("--export-tensor", action="store_true", help="also write the full payoff tensor")
    sub.add_parser("verify-nash", parents=[common], help="unilateral deviation check")
    p = sub.add_parser("figure", parents=[common], help="emit figure data as CSV")
    p.add_argument("figure", choices=FIGURE_IDS)
    p.add_argument("--k1", type=int, default=None)
    p.add_argument("--k2", type=int, default=None)
    p.add_argument("--k3", type=int, default=None)
    return parser


def _command_name(args) -> str:
    if args.command == "optimize":
        return f"optimize {args.problem}"
    if args.command == "figure":
        return f"figure {args.figure}"
    return args.command


def render_report(command: str, scenario: Scenario, result: dict) -> str:
    report = {
        "command": command,
        "scenario_digest": scenario.digest,
        "tool_version": __version__,
        "result": result,
    }
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def run(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    out = Output()
    try:
        scenario = load_scenario(args.scenario)
        result = COMMANDS[args.command](scenario, args, out)
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ScenarioValidationError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except _INFEASIBLE as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, IndexError) as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    command = _command_name(args)
    try:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, header, rows in out.tables:
            write_csv(out_dir / name, header, rows)
        (out_dir / REPORT_NAME).write_text(render_report(command, scenario, result), encoding="utf-8")
        timing = {"command": command, "duration_seconds": time.perf_counter() - started}
        (out_dir / TIMING_NAME).write_text(json.dumps(timing, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for line in out.lines:
        print(line)
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
