"""Command-line experiment runner.

Usage::

    edgemigrate run <spec.yaml>      [--seed S] [--workers W] [--out DIR]
    edgemigrate compare <spec.yaml>  [--seed S] [--workers W] [--out DIR]
    edgemigrate synth <spec.yaml>    [--seed S] [--out DIR]

The spec is a YAML file::

    grid:
      n_nodes: [20, 50]
      trips: [1000]
      req_step: [2.0, 1.0, 0.5]
      policy: [model]          # ignored by ``compare``
    seeds: [0, 1, 2]
    out: results/demo
    workload:
      kind: synthetic          # or csv
      spec: {n_trips: 3000}    # SynthSpec fields; mixture as a nested mapping
      # seed: 7                # pin one workload for every run seed
      # locations/trips/intervals: paths, for kind: csv
    sim:                       # SimConfig fields shared by every run
      n_clusters: 3
      ensemble: {omega: 5}
    logs: true                 # write JSON-lines event logs
    n_intervals: 20000         # synth only

Output layout (``out``)::

    summary.csv         one row per grid cell, averaged over seeds
    runs.csv            one row per (cell, seed) with raw scores
    plot_data/<m>.csv   raw per-run values of metric m
    events/*.jsonl      per-run request and migration events
    manifest.json       spec, seeds, per-run configs, calibration, backend

Every file is written atomically.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import functools
import io
import itertools
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import __version__
from ._backend import BACKEND
from .baselines import RandomDmParams, derive_calibration
from .metrics import CELL_KEYS, RunRecord, event_dicts, summarize
from .simnet import POLICIES, SimConfig, run_trace
from .workload import (SynthSpec, Workload, WorkloadError, load_csv_traces,
                       synth_workload, write_csv_traces)

log = logging.getLogger(__name__)

RUN_COLUMNS = CELL_KEYS + ("seed", "requests", "migration_pct", "directives_per_migration",
                           "migrations", "tp", "fp", "unm", "tp_relaxed", "fp_relaxed",
                           "mu_s", "mu_r", "kappa", "unm_ratio", "delta", "unserviceable",
                           "unclassified", "truncated", "p_migrate", "qnm")
SUMMARY_COLUMNS = CELL_KEYS + ("runs", "migration_pct", "directives_per_migration",
                               "mu_s", "mu_r", "kappa", "unm_ratio", "delta")
PLOT_METRICS = ("mu_s", "mu_r", "kappa", "unm_ratio", "delta", "migration_pct")


class SpecError(ValueError):
    pass


class CellError(RuntimeError):
    pass


@dataclass
class ExperimentSpec:
    grid: dict
    seeds: list
    out: str
    workload: dict = field(default_factory=lambda: {"kind": "synthetic"})
    sim: dict = field(default_factory=dict)
    logs: bool = True
    n_intervals: int = 20000

    def __post_init__(self):
        defaults = {"n_nodes": [20], "trips": [1000], "req_step": [1.0], "policy": ["model"]}
        unknown = set(self.grid) - set(defaults)
        if unknown:
            raise SpecError(f"unknown grid keys {sorted(unknown)}")
        grid = {}
        for key, default in defaults.items():
            vals = self.grid.get(key, default)
            vals = list(vals) if isinstance(vals, (list, tuple)) else [vals]
            if not vals:
                raise SpecError(f"grid.{key} is empty")
            grid[key] = vals
        grid["n_nodes"] = [int(v) for v in grid["n_nodes"]]
        grid["trips"] = [int(v) for v in grid["trips"]]
        grid["req_step"] = [float(v) for v in grid["req_step"]]
        bad = [p for p in grid["policy"] if p not in POLICIES]
        if bad:
            raise SpecError(f"unknown policies {bad}; choose from {list(POLICIES)}")
        self.grid = grid
        if not self.seeds:
            raise SpecError("seeds is empty")
        self.seeds = [int(s) for s in self.seeds]
        if self.workload.get("kind", "synthetic") not in ("synthetic", "csv"):
            raise SpecError(f"unknown workload kind {self.workload.get('kind')!r}")
        forbidden = {"n_nodes", "trips", "req_step", "policy", "seed"} & set(self.sim)
        if forbidden:
            raise SpecError(f"sim may not set grid or seed fields {sorted(forbidden)}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        if not isinstance(d, dict):
            raise SpecError("spec must be a mapping")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise SpecError(f"unknown spec keys {sorted(unknown)}")
        d = dict(d)
        d.setdefault("grid", {})
        d.setdefault("seeds", [0])
        d.setdefault("out", "results")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        with open(path, encoding="utf-8") as fh:
            try:
                data = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise SpecError(f"{path}: {exc}") from None
        return cls.from_dict(data or {})

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def cells(self, policies=None):
        g = self.grid
        for n, trips, step, policy in itertools.product(g["n_nodes"], g["trips"],
                                                        g["req_step"],
                                                        policies or g["policy"]):
            yield {"n_nodes": n, "trips": trips, "req_step": step, "policy": policy}

    def sim_config(self, cell: dict, seed: int, **extra) -> SimConfig:
        return SimConfig.from_dict({**self.sim, **cell, "seed": seed, **extra})

    def workload_source(self, seed: int) -> dict:
        w = dict(self.workload)
        kind = w.pop("kind", "synthetic")
        if kind == "csv":
            missing = [k for k in ("locations", "trips", "intervals") if k not in w]
            if missing:
                raise SpecError(f"csv workload lacks {missing}")
            return {"kind": "csv", **{k: str(w[k]) for k in ("locations", "trips",
                                                               "intervals")},
                    "columns": w.get("columns") or {}}
        spec = SynthSpec.from_dict(w.get("spec") or {})
        return {"kind": "synthetic", "seed": int(w.get("seed", seed)),
                "spec": spec.to_dict()}


# ---------------------------------------------------------------- workloads

@functools.lru_cache(maxsize=8)
def _workload_cached(key: str) -> Workload:
    src = json.loads(key)
    if src["kind"] == "csv":
        return load_csv_traces(src["locations"], src["trips"], src["intervals"],
                               src.get("columns") or None)
    return synth_workload(SynthSpec.from_dict(src["spec"]), seed=src["seed"])


def build_workload(source: dict) -> Workload:
    return _workload_cached(json.dumps(source, sort_keys=True))


# ---------------------------------------------------------------- file output

def atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def csv_text(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c, "")) for c in columns])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def _jsonable(o):
    """Recursively replace non-finite floats, which strict JSON lacks."""
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {k: _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    return o


def run_label(cell: dict, seed: int) -> str:
    return (f"N{cell['n_nodes']}_T{cell['trips']}_S{cell['req_step']:g}_"
            f"{cell['policy']}_seed{seed}")


# ---------------------------------------------------------------- execution

@dataclass(frozen=True)
class RunTask:
    cell: dict
    seed: int
    config: dict
    source: dict
    log_path: Optional[str]


def execute(task: RunTask) -> dict:
    """Run one (cell, seed) and return its flat score row plus bookkeeping."""
    try:
        cfg = SimConfig.from_dict(task.config)
        record = run_trace(cfg, build_workload(task.source))
    except Exception as exc:
        raise CellError(f"cell {run_label(task.cell, task.seed)} failed: {exc}") from exc
    if task.log_path:
        lines = (json.dumps(_jsonable(e), default=_json_default, sort_keys=True)
                 for e in event_dicts(record))
        atomic_write(task.log_path, "".join(line + "\n" for line in lines))
    row = {**task.cell, "seed": task.seed, **record.scores()}
    return {"row": row, "requests": record.r_total,
            "initiating": record.requests_with_migration,
            "directives": record.n_directives}


def _map(tasks: list[RunTask], workers: int) -> list[dict]:
    if workers <= 1 or len(tasks) <= 1:
        return [execute(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(execute, tasks))


def _task(spec: ExperimentSpec, out: Path, cell: dict, seed: int, **extra) -> RunTask:
    cfg = spec.sim_config(cell, seed, **extra)
    log_path = str(out / "events" / f"{run_label(cell, seed)}.jsonl") if spec.logs else None
    return RunTask(cell, seed, cfg.to_dict(), spec.workload_source(seed), log_path)


def _write_outputs(out: Path, spec: ExperimentSpec, command: str, tasks: list[RunTask],
                   results: list[dict], calibration: Optional[list] = None):
    rows = [r["row"] for r in results]
    order = {k: {v: i for i, v in enumerate(vals)} for k, vals in spec.grid.items()}
    order["policy"] = {p: i for i, p in enumerate(POLICIES)}
    key = lambda r: (order["n_nodes"][r["n_nodes"]], order["trips"][r["trips"]],
                     order["req_step"][r["req_step"]], order["policy"][r["policy"]])
    rows.sort(key=lambda r: (key(r), r["seed"]))
    summary = sorted(summarize(rows), key=key)
    atomic_write(out / "summary.csv", csv_text(summary, SUMMARY_COLUMNS))
    atomic_write(out / "runs.csv", csv_text(rows, RUN_COLUMNS))
    for metric in PLOT_METRICS:
        atomic_write(out / "plot_data" / f"{metric}.csv",
                     csv_text(rows, CELL_KEYS + ("seed", metric)))
    manifest = {
        "command": command,
        "version": __version__,
        "backend": BACKEND,
        "numpy": np.__version__,
        "spec": spec.to_dict(),
        "seeds": spec.seeds,
        "runs": [{"label": run_label(t.cell, t.seed), "cell": t.cell, "seed": t.seed,
                  "config": t.config, "workload": t.source, "events": t.log_path}
                 for t in tasks],
        "calibration": calibration or [],
        "summary_columns": list(SUMMARY_COLUMNS),
    }
    atomic_write(out / "manifest.json",
                 json.dumps(_jsonable(manifest), indent=2, sort_keys=True,
                            default=_json_default) + "\n")


def run_command(spec: ExperimentSpec, workers: int = 1) -> Path:
    out = Path(spec.out)
    tasks = [_task(spec, out, cell, seed) for cell in spec.cells() for seed in spec.seeds]
    results = _map(tasks, workers)
    _write_outputs(out, spec, "run", tasks, results)
    return out


def compare_command(spec: ExperimentSpec, workers: int = 1) -> Path:
    """Model first; each (cell, seed) then calibrates Random-DM and sets the
    DBSCAN-DM fan-out from that Model run."""
    out = Path(spec.out)
    model_tasks = [_task(spec, out, cell, seed)
                   for cell in spec.cells(policies=["model"]) for seed in spec.seeds]
    model_results = _map(model_tasks, workers)

    calibration, baseline_tasks = [], []
    for task, res in zip(model_tasks, model_results):
        cal = derive_calibration(_Counts(res))
        calibration.append({"cell": {k: v for k, v in task.cell.items() if k != "policy"},
                            "seed": task.seed, **dataclasses.asdict(cal)})
        for policy in ("random-dm", "dbscan-dm"):
            cell = {**task.cell, "policy": policy}
            extra = {"qnm": cal.qnm}
            if policy == "random-dm":
                extra["random_dm"] = dataclasses.asdict(
                    RandomDmParams(cal.p_migrate, cal.qnm, task.seed))
            t = _task(spec, out, cell, task.seed, **extra)
            baseline_tasks.append(t)
    baseline_results = _map(baseline_tasks, workers)

    # attach calibration to every row of the matching (cell, seed)
    cal_of = {(tuple(c["cell"].values()), c["seed"]): c for c in calibration}
    for res in itertools.chain(model_results, baseline_results):
        row = res["row"]
        c = cal_of[(tuple(row[k] for k in CELL_KEYS if k != "policy"), row["seed"])]
        row["p_migrate"], row["qnm"] = c["p_migrate"], c["qnm"]
    _write_outputs(out, spec, "compare", model_tasks + baseline_tasks,
                   model_results + baseline_results, calibration)
    return out


class _Counts:
    """Minimal record view for ``derive_calibration``."""

    def __init__(self, res: dict):
        self.r_total = res["requests"]
        self.requests_with_migration = res["initiating"]
        self.n_directives = res["directives"]


def synth_command(spec: ExperimentSpec) -> Path:
    out = Path(spec.out)
    seed = spec.seeds[0]
    source = spec.workload_source(seed)
    if source["kind"] != "synthetic":
        raise SpecError("synth needs a synthetic workload section")
    wl = build_workload(source)
    # write into a scratch dir, then move each file into place
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=out) as tmp:
        paths = write_csv_traces(wl, tmp, spec.n_intervals)
        for name, p in paths.items():
            os.replace(p, out / Path(p).name)
    truth = {"seed": seed, "source": source, "ground_truth": wl.ground_truth,
             "n_intervals": spec.n_intervals}
    atomic_write(out / "ground_truth.json", json.dumps(truth, indent=2, sort_keys=True) + "\n")
    return out


def replay(manifest_path, label: str) -> RunRecord:
    """Re-run one manifest entry from its recorded config and workload."""
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    for entry in manifest["runs"]:
        if entry["label"] == label:
            return run_trace(SimConfig.from_dict(entry["config"]),
                             build_workload(entry["workload"]))
    raise KeyError(label)


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgemigrate", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "run every grid cell and seed"),
                           ("compare", "calibrated Model / Random-DM / DBSCAN-DM comparison"),
                           ("synth", "write a synthetic workload as CSV traces")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("spec", help="YAML experiment spec")
        p.add_argument("--seed", type=int, help="run this single seed instead of the spec file's list")
        p.add_argument("--out", help="override the output directory")
        if name != "synth":
            p.add_argument("--workers", type=int, default=1,
                           help="parallel worker processes (default 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        spec = ExperimentSpec.load(args.spec)
        if args.seed is not None:
            spec.seeds = [args.seed]
        if args.out:
            spec.out = args.out
        if args.command == "synth":
            out = synth_command(spec)
        else:
            if args.workers < 1:
                raise SpecError("--workers must be >= 1")
            command = run_command if args.command == "run" else compare_command
            out = command(spec, workers=args.workers)
    except (SpecError, WorkloadError, CellError, OSError) as exc:
        print(f"edgemigrate {args.command}: error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
