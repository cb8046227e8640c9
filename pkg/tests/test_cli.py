import csv
import json
import time
from pathlib import Path

import numpy as np
import pytest

from modular_entropy import kleingordon as kg
from modular_entropy.cli import main
from modular_entropy.runner import CSV_COLUMNS
from modular_entropy.scenario import ScenarioError, from_dict

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def write(tmp_path, obj, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def wave(**overrides):
    w = {"d": 1, "mass": 1.0, "L": 4.0, "N": 512, "f": {"profile": "bump"}, "g": None}
    w.update(overrides)
    return w


def wave_scenario(**overrides):
    sc = {"mode": "wave-entropy", "wave": wave(), "lambda": {"start": 0.0, "stop": 1.0, "step": 0.25}}
    sc.update(overrides)
    return sc


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_zero_wave_gives_zero_rows_and_exit_zero(tmp_path):
    code = main(["run", str(SCENARIOS / "zero-wave.json"), "--out", str(tmp_path)])
    assert code == 0
    header, rows = read_csv(tmp_path / "curve.csv")
    assert tuple(header) == CSV_COLUMNS
    assert rows.shape[0] == 5
    assert not np.any(rows[:, 1:])


def test_bump_scenario_matches_oracle(tmp_path):
    code = main(["run", str(SCENARIOS / "bump-1d.json"), "--out", str(tmp_path), "--svg"])
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    names = [c["name"] for c in report["checks"]]
    assert len(names) == len(set(names))
    assert {"two_path", "fd_first", "fd_second", "qnec", "monotone", "convexity", "additivity", "conservation", "oracle"} <= set(names)
    assert all(isinstance(c["residual"], float) for c in report["checks"])
    assert (tmp_path / "curve.svg").read_text().startswith("<svg")
    _, rows = read_csv(tmp_path / "curve.csv")
    assert np.all(np.diff(rows[:, 1]) <= 0)
    assert np.all(rows[:, 6] >= 0) and rows[:, 6].max() == pytest.approx(1.0)


def test_outputs_are_deterministic(tmp_path):
    path = str(SCENARIOS / "bump-fg-1d.json")
    for run in ("a", "b"):
        assert main(["run", path, "--out", str(tmp_path / run), "--workers", "3"]) == 0
    for name in ("curve.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert main(["run", path, "--out", str(tmp_path / "c"), "--workers", "1"]) == 0
    assert (tmp_path / "a" / "curve.csv").read_bytes() == (tmp_path / "c" / "curve.csv").read_bytes()
    assert json.loads((tmp_path / "a" / "timings.json").read_text())


def test_negative_step_is_validation_error_without_artifacts(tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(SCENARIOS / "bad-lambda.json"), "--out", str(out)]) == 3
    assert not out.exists()


def test_parse_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad), "--out", str(tmp_path / "out")]) == 2
    assert main(["run", str(tmp_path / "missing.json"), "--out", str(tmp_path / "out")]) == 2
    bad.write_text("[1, 2]")
    assert main(["run", str(bad), "--out", str(tmp_path / "out")]) == 2
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize(
    "patch",
    [
        {"mode": "nonsense"},
        {"wave": wave(N=500)},
        {"wave": wave(mass=0.0)},
        {"wave": wave(d=3)},
        {"wave": wave(L=1.5)},
        {"lambda": {"start": 1.0, "stop": 0.0, "step": 0.1}},
        {"lambda": {"start": 0.0, "stop": 3.5, "step": 0.1}},
        {"lambda": {"start": 0.0}},
        {"tolerances": {"qnec": -1.0}},
        {"tolerances": {"made_up": 1.0}},
        {"wave": wave(f={"profile": "spiral"})},
    ],
)
def test_invalid_scenarios_exit_three(tmp_path, patch):
    out = tmp_path / "out"
    assert main(["run", write(tmp_path, wave_scenario(**patch)), "--out", str(out)]) == 3
    assert not out.exists()


def test_invalid_subspace_scenarios():
    with pytest.raises(ScenarioError):
        from_dict({"mode": "subspace-demo"})
    with pytest.raises(ScenarioError):
        from_dict({"mode": "subspace-demo", "subspace": {"basis": [[[1, 0], [0, 0]], [[2, 0], [0, 0]]]}})
    with pytest.raises(ScenarioError):
        from_dict({"mode": "subspace-demo", "subspace": {"fixture": "two-mode"}, "vectors": [[[1, 0]]]})
    with pytest.raises(ScenarioError):
        from_dict({"mode": "fock-check", "random": {"count": 3, "max_n": 1}})


def test_check_failure_exits_one(tmp_path):
    sc = wave_scenario(wave=wave(N=4096), tolerances={"fd_first": 1e-12})
    assert main(["run", write(tmp_path, sc), "--out", str(tmp_path / "out")]) == 1
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert not report["passed"]
    assert [c["name"] for c in report["checks"] if not c["passed"]] == ["fd_first"]


def test_subspace_and_fock_scenarios(tmp_path):
    assert main(["run", str(SCENARIOS / "subspace-demo.json"), "--out", str(tmp_path / "s")]) == 0
    report = json.loads((tmp_path / "s" / "report.json").read_text())
    assert report["tables"]["factorial_split_dims"][0] == [2, 1]
    assert main(["run", str(SCENARIOS / "fock-check.json"), "--out", str(tmp_path / "f")]) == 0


def test_convergence_command_reports_orders(tmp_path):
    code = main(["convergence", str(SCENARIOS / "convergence-1d.json"), "--doublings", "2", "--out", str(tmp_path)])
    assert code == 0
    table = json.loads((tmp_path / "report.json").read_text())["tables"]["convergence"]
    assert [row["N"] for row in table] == [512, 1024, 2048]
    discrepancies = [row["two_path"] for row in table]
    assert all(b <= a / 4 or b <= 1e-11 for a, b in zip(discrepancies, discrepancies[1:]))
    assert table[-1]["fd_first_order"] > 1.95


def test_convergence_on_fully_resolved_data_sits_at_rounding_floor(tmp_path):
    sc = {
        "mode": "wave-entropy",
        "wave": wave(N=2048, L=8.0, f={"profile": "bump", "width": 3.0}, g={"profile": "bump", "width": 2.5, "amplitude": 0.3}),
        "lambda": {"start": 0.5, "stop": 0.5, "step": 0.1},
        "lambda0": 0.5,
    }
    assert main(["convergence", write(tmp_path, sc), "--doublings", "2", "--out", str(tmp_path)]) == 0
    table = json.loads((tmp_path / "report.json").read_text())["tables"]["convergence"]
    assert all(row["two_path"] <= 1e-11 for row in table)


def test_small_two_dimensional_convergence_is_quick(tmp_path):
    sc = {
        "mode": "wave-entropy",
        "wave": wave(d=2, L=3.0, N=128, f={"profile": "bump", "center": [0.0, 0.2]},
                     g={"profile": "bump", "center": [0.3, 0.0], "width": 0.8, "amplitude": 0.5}),
        "lambda": {"start": 0.3, "stop": 0.3, "step": 0.1},
        "lambda0": 0.3,
    }
    start = time.perf_counter()
    assert main(["convergence", write(tmp_path, sc), "--doublings", "1", "--out", str(tmp_path)]) == 0
    assert time.perf_counter() - start < 30


def test_convergence_rejects_bad_input(tmp_path):
    assert main(["convergence", str(SCENARIOS / "subspace-demo.json"), "--doublings", "2", "--out", str(tmp_path / "x")]) == 3
    assert main(["convergence", str(SCENARIOS / "bump-1d.json"), "--doublings", "0", "--out", str(tmp_path / "x")]) == 3
    assert not (tmp_path / "x").exists()


def test_fields_roundtrip_through_scenarios(tmp_path):
    sc = wave_scenario(wave=wave(N=4096, g={"profile": "bump", "center": 0.1, "amplitude": 0.4}),
                       **{"lambda": {"start": 0.0, "stop": 0.5, "step": 0.25}}, outputs={"fields": "fields.bin"})
    assert main(["run", write(tmp_path, sc), "--out", str(tmp_path / "a")]) == 0
    fields = tmp_path / "a" / "fields.bin"
    state = kg.read_fields(fields)
    assert state.t == pytest.approx(0.5)
    follow_up = {"mode": "wave-entropy", "wave": {"fields_in": str(fields)}, "lambda": {"start": 0.5, "stop": 1.0, "step": 0.25}}
    assert main(["run", write(tmp_path, follow_up, "b.json"), "--out", str(tmp_path / "b")]) == 0
    _, first = read_csv(tmp_path / "a" / "curve.csv")
    _, second = read_csv(tmp_path / "b" / "curve.csv")
    # the entropy at the handover slice agrees between the two runs
    assert second[0, 1] == pytest.approx(first[-1, 1], rel=1e-9)
