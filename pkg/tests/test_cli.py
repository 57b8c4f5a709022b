import csv
import json

import pytest
import yaml

from edgemigrate import cli
from edgemigrate.cli import ExperimentSpec, SpecError, main, replay
from edgemigrate.metrics import event_dicts

SMALL = {"kind": "synthetic", "spec": {"n_trips": 60, "n_stations": 60}}


def _spec(tmp_path, name="spec.yaml", **kw):
    d = {"grid": {"n_nodes": [20], "trips": [30], "req_step": [1.0]}, "seeds": [0],
         "out": str(tmp_path / "out"), "workload": SMALL, "sim": {"ensemble": {"omega": 5}}}
    d.update(kw)
    path = tmp_path / name
    path.write_text(yaml.safe_dump(d), encoding="utf-8")
    return path


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_single_cell_single_seed(tmp_path):
    assert main(["run", str(_spec(tmp_path))]) == 0
    out = tmp_path / "out"
    assert len(_rows(out / "summary.csv")) == 1
    assert len(_rows(out / "runs.csv")) == 1
    logs = list((out / "events").glob("*.jsonl"))
    assert len(logs) == 1
    events = [json.loads(line) for line in logs[0].read_text().splitlines()]
    assert {e["event"] for e in events} <= {"request", "migration"}
    assert sum(e["event"] == "request" for e in events) == int(_rows(out / "runs.csv")[0]
                                                               ["requests"])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "run" and manifest["seeds"] == [0]
    assert manifest["version"] and manifest["backend"] in ("cython", "python")
    assert list(_rows(out / "summary.csv")[0]) == list(cli.SUMMARY_COLUMNS)


def test_grid_is_cartesian(tmp_path):
    spec = ExperimentSpec.from_dict({
        "grid": {"n_nodes": [20, 50], "trips": [2], "policy": list(cli.POLICIES)},
        "seeds": [0, 1, 2, 3, 4], "out": str(tmp_path / "grid"), "workload": SMALL,
        "logs": False})
    out = cli.run_command(spec)
    rows = _rows(out / "runs.csv")
    assert len(rows) == 30
    assert len({(r["n_nodes"], r["policy"], r["seed"]) for r in rows}) == 30
    assert len(_rows(out / "summary.csv")) == 6
    assert len(_rows(out / "plot_data" / "mu_s.csv")) == 30


def test_rerun_is_byte_identical(tmp_path):
    path = _spec(tmp_path, grid={"n_nodes": [20], "trips": [30], "req_step": [2.0, 1.0]},
                 seeds=[0, 1])
    assert main(["run", str(path)]) == 0
    first = (tmp_path / "out" / "summary.csv").read_bytes()
    assert main(["run", str(path), "--out", str(tmp_path / "again"), "--workers", "2"]) == 0
    assert (tmp_path / "again" / "summary.csv").read_bytes() == first


def test_compare_rows_and_calibration_provenance(tmp_path):
    assert main(["compare", str(_spec(tmp_path))]) == 0
    out = tmp_path / "out"
    summary = _rows(out / "summary.csv")
    assert [r["policy"] for r in summary] == ["model", "random-dm", "dbscan-dm"]
    manifest = json.loads((out / "manifest.json").read_text())
    cal = manifest["calibration"][0]
    rnd = next(r for r in manifest["runs"] if r["cell"]["policy"] == "random-dm")
    assert rnd["config"]["random_dm"]["p_migrate"] == cal["p_migrate"]
    assert rnd["config"]["random_dm"]["qnm"] == cal["qnm"]
    for row in _rows(out / "runs.csv"):
        assert float(row["p_migrate"]) == cal["p_migrate"] and int(row["qnm"]) == cal["qnm"]


def test_manifest_replays_every_run(tmp_path):
    assert main(["compare", str(_spec(tmp_path))]) == 0
    out = tmp_path / "out"
    manifest = json.loads((out / "manifest.json").read_text())
    for entry in manifest["runs"]:
        rec = replay(out / "manifest.json", entry["label"])
        lines = [json.dumps(cli._jsonable(e), default=cli._json_default, sort_keys=True)
                 for e in event_dicts(rec)]
        assert "".join(x + "\n" for x in lines) == open(entry["events"]).read()
    with pytest.raises(KeyError):
        replay(out / "manifest.json", "nope")


def test_seed_override(tmp_path):
    assert main(["run", str(_spec(tmp_path, seeds=[0, 1])), "--seed", "7"]) == 0
    rows = _rows(tmp_path / "out" / "runs.csv")
    assert [r["seed"] for r in rows] == ["7"]


def test_failing_cell_is_named(tmp_path, capsys):
    # more trips than the workload holds
    path = _spec(tmp_path, grid={"n_nodes": [20], "trips": [500]})
    assert main(["run", str(path)]) == 1
    err = capsys.readouterr().err
    assert "N20_T500_S1_model_seed0" in err


def test_bad_specs(tmp_path, capsys):
    assert main(["run", str(_spec(tmp_path, grid={"policy": ["greedy"]}))]) == 1
    assert "greedy" in capsys.readouterr().err
    assert main(["run", str(_spec(tmp_path, seeds=[]))]) == 1
    assert main(["run", str(_spec(tmp_path, colour="red"))]) == 1
    assert main(["run", str(tmp_path / "missing.yaml")]) == 1
    with pytest.raises(SpecError):
        ExperimentSpec.from_dict({"sim": {"seed": 3}})


def test_synth_writes_schema_files(tmp_path):
    assert main(["synth", str(_spec(tmp_path, n_intervals=50)), "--seed", "3"]) == 0
    out = tmp_path / "out"
    assert list(_rows(out / "locations.csv")[0]) == ["id", "x", "y"]
    assert list(_rows(out / "trips.csv")[0]) == ["trip_id", "seq", "x", "y"]
    ivs = _rows(out / "intervals.csv")
    assert list(ivs[0]) == ["low", "high"] and len(ivs) == 50
    truth = json.loads((out / "ground_truth.json").read_text())
    assert truth["seed"] == 3
    # the written files drive a csv-workload run
    csv_wl = {"kind": "csv", "locations": str(out / "locations.csv"),
              "trips": str(out / "trips.csv"), "intervals": str(out / "intervals.csv")}
    path = _spec(tmp_path, "csv.yaml", workload=csv_wl, out=str(tmp_path / "csvrun"))
    assert main(["run", str(path)]) == 0
