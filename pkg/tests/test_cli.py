import json
from pathlib import Path

import pytest

from towermarket.cli import run
from towermarket.coordinated import CoordinationResult
from towermarket.game import GridEquilibrium
from towermarket.market import MarketOutcome
from towermarket.optimize import Optimum
from towermarket.outsourcing import ValueReport
from towermarket.selfish import SelfishSweepResult

ROOT = Path(__file__).resolve().parents[1]
BASELINE = ROOT / "scenarios" / "baseline.json"


def _scenario(tmp_path, **changes):
    data = json.loads(BASELINE.read_text())
    for key, value in changes.items():
        if value is None:
            data.pop(key, None)
        else:
            data[key] = value
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(data))
    return path


def _run(args, scenario, out):
    return run([*args, "--scenario", str(scenario), "--out", str(out)])


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_baseline_report(tmp_path, capsys):
    assert _run(["baseline"], BASELINE, tmp_path) == 0
    rep = _report(tmp_path)
    assert rep["command"] == "baseline"
    outcome = MarketOutcome.from_dict(rep["result"]["outcome"])
    assert outcome.assignment == (3, 3, 2, 1)
    assert outcome.shares == (0.25, 0.25, 0.5)
    assert "assignment [3, 3, 2, 1]" in capsys.readouterr().out
    assert (tmp_path / "timing.json").exists()


COMMANDS = [
    ["baseline"],
    ["optimize", "ordered"],
    ["outsource"],
    ["sweep"],
    ["coordinate"],
    ["game"],
    ["verify-nash"],
    ["figure", "utilities"],
    ["figure", "r2-slice"],
]


@pytest.mark.parametrize("args", COMMANDS, ids=lambda a: "-".join(a))
def test_runs_are_byte_identical(tmp_path, args):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(args, BASELINE, a) == 0
    assert _run(args, BASELINE, b) == 0
    names = sorted(p.name for p in a.iterdir() if p.name != "timing.json")
    assert names == sorted(p.name for p in b.iterdir() if p.name != "timing.json")
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_round_trips(tmp_path):
    checks = {
        ("optimize", "bargaining"): lambda r: Optimum.from_dict(r).to_dict() == r,
        ("outsource",): lambda r: ValueReport.from_dict(r["value"]).to_dict() == r["value"],
        ("sweep",): lambda r: all(SelfishSweepResult.from_dict(s).to_dict() == s for s in r["sweeps"]),
        ("coordinate",): lambda r: all(
            CoordinationResult.from_dict(m).to_dict() == m for e in r["results"] for m in e["modes"].values()
        ),
        ("game",): lambda r: GridEquilibrium.from_dict(r["equilibrium"]).to_dict() == r["equilibrium"],
        ("baseline",): lambda r: MarketOutcome.from_dict(r["outcome"]).to_dict() == r["outcome"],
    }
    for i, (args, check) in enumerate(checks.items()):
        out = tmp_path / str(i)
        assert _run(list(args), BASELINE, out) == 0
        assert check(_report(out)["result"]), args


def test_game_report_notes(tmp_path):
    assert _run(["game", "--export-tensor"], BASELINE, tmp_path) == 0
    eq = _report(tmp_path)["result"]["equilibrium"]
    assert eq["indices"] == [27, 33, 50]
    assert eq["betas"] == [1.27, 1.33, 1.5]
    assert any("1.26" in n for n in eq["notes"])
    header = (tmp_path / "game_tensor.csv").read_text().splitlines()[0]
    assert header == "k1,k2,k3,R1,R2,R3,eligible"
    assert (tmp_path / "game_L.csv").exists() and (tmp_path / "game_L_prime.csv").exists()


def test_verify_given_tuple(tmp_path):
    path = _scenario(tmp_path, game={"points_per_player": 50, "verify": [1, 13, 34]})
    assert _run(["verify-nash"], path, tmp_path / "o") == 0
    eq = _report(tmp_path / "o")["result"]["equilibrium"]
    assert eq["nash_certificate"][1] is False


def test_grid_points_override(tmp_path):
    assert _run(["game", "--grid-points", "20", "--seed", "5"], BASELINE, tmp_path) == 0
    assert _report(tmp_path)["result"]["points_per_player"] == 20


def test_solved_prices(tmp_path):
    path = _scenario(tmp_path, prices="solve:ordered", optimizer={"coarse_grid_points": 20})
    assert _run(["baseline"], path, tmp_path / "o") == 0
    result = _report(tmp_path / "o")["result"]
    assert result["solved_prices"]["problem"] == "ordered"
    assert result["prices"] == result["solved_prices"]["prices"]


@pytest.mark.parametrize("fid", ["prices", "utilities", "sweep", "deviated-utilities", "coordinated-utilities", "r3-slice", "r2-slice"])
def test_figures(tmp_path, fid):
    assert _run(["figure", fid], BASELINE, tmp_path) == 0
    files = _report(tmp_path)["result"]["files"]
    assert files
    for name in files:
        raw = (tmp_path / name).read_bytes()
        assert b"\r" not in raw
        lines = raw.decode().splitlines()
        if fid == "utilities":
            assert lines[0] == "q,u_1,u_2,u_3" and len(lines) == 5
        if fid == "sweep":
            assert lines[0].startswith("abscissa,epsilon,nu_1")
            first = lines[2].split(",")
            assert float(first[0]) == pytest.approx(100 * float(first[1]) + 1)
        if fid == "r3-slice":
            assert lines[0] == "k3,R3" and len(lines) == 1 + 50 - 33


def test_slice_arguments(tmp_path):
    assert run(["figure", "r3-slice", "--k1", "5", "--k2", "20", "--scenario", str(BASELINE), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "figure_r3-slice.csv").read_text().splitlines()[1].startswith("21,")
    assert run(["figure", "r3-slice", "--k1", "5", "--k2", "50", "--scenario", str(BASELINE), "--out", str(tmp_path)]) == 3


def test_empty_file_exit_2(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("")
    assert _run(["baseline"], path, tmp_path) == 2


def test_malformed_json_exit_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{market: ")
    assert _run(["baseline"], path, tmp_path) == 2


def test_missing_flag_exit_2():
    with pytest.raises(SystemExit) as exc:
        run(["baseline"])
    assert exc.value.code == 2


@pytest.mark.parametrize(
    "changes,args",
    [
        (dict(extra={"x": 1}), ["baseline"]),
        (dict(sweep=None), ["sweep"]),
        (dict(prices=None), ["baseline"]),
        (dict(prices=[1.1, 1.2, 1.6]), ["baseline"]),
        (dict(prices=[1.1, 1.2]), ["baseline"]),
        (dict(game={"points_per_player": 50, "colour": "red"}), ["game"]),
        (dict(market={"num_operators": 3, "num_quality_levels": 2, "quality_fractions": [0.3, 0.3], "popularity_index": 2.0, "reputation_weight": 0.2, "price_exponent_bound": 1.5}), ["baseline"]),
        (dict(coordination={"deltas": [0.7], "eta": 0.1}), ["coordinate"]),
    ],
)
def test_validation_exit_3(tmp_path, changes, args):
    assert _run(args, _scenario(tmp_path, **changes), tmp_path / "o") == 3


@pytest.mark.parametrize(
    "changes,args",
    [
        (dict(prices=[1.16635, 1.23821, 1.5]), ["coordinate"]),
        (dict(prices=[1.16635, 1.23821, 1.5]), ["sweep"]),
        (dict(market={"num_operators": 3, "num_quality_levels": 3, "quality_fractions": [0.5, 0.25, 0.25], "popularity_index": 2.0, "reputation_weight": 0.0, "price_exponent_bound": 1.5}), ["game"]),
    ],
)
def test_degenerate_exit_4(tmp_path, changes, args, capsys):
    assert _run(args, _scenario(tmp_path, **changes), tmp_path / "o") == 4
    assert "error:" in capsys.readouterr().err


def test_missing_file_exit_5(tmp_path):
    assert _run(["baseline"], tmp_path / "nope.json", tmp_path) == 5


def test_unwritable_output_exit_5(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert _run(["baseline"], BASELINE, blocker) == 5
