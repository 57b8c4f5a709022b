"""Workload inputs: node candidate locations, user trips and request streams.

Two sources share one shape: generic CSV traces and a seeded synthetic
generator whose request mixture is kept as ground truth.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .core import RequestInterval


class WorkloadError(ValueError):
    pass


@dataclass
class LocationTrace:
    ids: np.ndarray
    coords: np.ndarray  # (n, 2)

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=int)
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        if len(set(self.ids.tolist())) != len(self.ids):
            raise WorkloadError("location ids are not unique")
        if not np.all(np.isfinite(self.coords)):
            raise WorkloadError("location coordinates must be finite")

    def __len__(self):
        return len(self.ids)


@dataclass
class Trip:
    waypoints: np.ndarray  # (m, 2)
    cumdist: np.ndarray    # (m,), starts at 0

    @classmethod
    def from_waypoints(cls, waypoints) -> "Trip":
        wp = np.asarray(waypoints, dtype=float).reshape(-1, 2)
        steps = np.hypot(*np.diff(wp, axis=0).T) if len(wp) > 1 else np.zeros(0)
        return cls(wp, np.concatenate([[0.0], np.cumsum(steps)]))

    @property
    def length(self) -> float:
        return float(self.cumdist[-1]) if len(self.cumdist) else 0.0

    def request_positions(self, req_step: float) -> np.ndarray:
        """Positions every ``req_step`` distance units, starting at the origin:
        ``floor(length / req_step) + 1`` of them."""
        if req_step <= 0:
            raise ValueError("req_step must be positive")
        count = int(math.floor(self.length / req_step + 1e-9)) + 1
        marks = np.arange(count) * req_step
        if len(self.waypoints) == 1:
            return np.repeat(self.waypoints, count, axis=0)
        x = np.interp(marks, self.cumdist, self.waypoints[:, 0])
        y = np.interp(marks, self.cumdist, self.waypoints[:, 1])
        return np.column_stack([x, y])


@dataclass
class TripTrace:
    trips: list[Trip]

    def __len__(self):
        return len(self.trips)

    def __post_init__(self):
        for k, trip in enumerate(self.trips):
            if np.any(np.diff(trip.cumdist) < 0):
                raise WorkloadError(f"trip {k}: cumulative distance decreases")


class _ListCursor:
    def __init__(self, intervals):
        self._it = itertools.cycle(intervals) if intervals else iter(())

    def __iter__(self):
        return self

    def __next__(self) -> RequestInterval:
        return next(self._it)

    def new_trip(self):
        pass


class _MixtureCursor:
    def __init__(self, mixture: "MixtureSpec", seed: int):
        self.mixture = mixture
        self.rng = np.random.default_rng(seed)
        self._probs = np.array([m.weight for m in mixture.modes] + [mixture.noise_weight])
        self.context = 0.0
        self.new_trip()

    def __iter__(self):
        return self

    def __next__(self) -> RequestInterval:
        c = int(self.rng.choice(len(self._probs), p=self._probs))
        return self.mixture.draw(self.rng, c, self.context)

    def new_trip(self):
        sd = self.mixture.trip_shift
        self.context = float(self.rng.normal(0.0, sd)) if sd else 0.0


class IntervalStream:
    """Re-iterable source of normalized request intervals.

    Each ``iter()`` returns a fresh cursor, so consumers never share a
    position. Finite lists are cycled. Cursors have ``new_trip()``, which a
    consumer calls when a new trip starts; mixture streams then redraw the
    trip-level shift, list streams ignore it.
    """

    def __init__(self, intervals: Optional[Sequence[RequestInterval]] = None,
                 mixture: Optional["MixtureSpec"] = None, seed: int = 0):
        if (intervals is None) == (mixture is None):
            raise ValueError("give either a list of intervals or a mixture")
        self._intervals = list(intervals) if intervals is not None else None
        self.mixture = mixture
        self.seed = seed

    def __iter__(self):
        if self._intervals is not None:
            return _ListCursor(self._intervals)
        return _MixtureCursor(self.mixture, self.seed)

    def take(self, n: int) -> list[RequestInterval]:
        """First ``n`` intervals, all under the first trip's context."""
        return list(itertools.islice(iter(self), n))


@dataclass(frozen=True)
class Mode:
    """Request mode around ``[low, high]``; each endpoint gets its own
    ``jitter`` draw."""

    low: float
    high: float
    jitter: float
    weight: float


@dataclass(frozen=True)
class MixtureSpec:
    """Dominant modes plus uniform noise.

    ``trip_shift`` is the sd of an offset drawn once per trip and added to
    both endpoints of every mode draw in that trip, so requests issued during
    one trip share their conditions. It is clipped so the shifted mode centre
    stays inside [0, 1].
    """

    modes: tuple[Mode, ...]
    noise_weight: float = 0.0
    jitter_kind: str = "normal"  # "normal": jitter is the sd; "uniform": half-width
    trip_shift: float = 0.0

    def __post_init__(self):
        total = sum(m.weight for m in self.modes) + self.noise_weight
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise WorkloadError(f"mixture weights sum to {total}, not 1")
        if any(m.weight < 0 for m in self.modes) or self.noise_weight < 0:
            raise WorkloadError("mixture weights must be nonnegative")
        if self.jitter_kind not in ("normal", "uniform"):
            raise WorkloadError(f"unknown jitter kind {self.jitter_kind!r}")
        for m in self.modes:
            if not 0.0 <= m.low <= m.high <= 1.0 or m.jitter < 0:
                raise WorkloadError(f"invalid mode {m}")
        if self.trip_shift < 0:
            raise WorkloadError("trip_shift must be nonnegative")

    @classmethod
    def single(cls, low, high, jitter, noise_weight=0.1, jitter_kind="normal",
               trip_shift=0.0):
        return cls((Mode(low, high, jitter, 1.0 - noise_weight),), noise_weight,
                   jitter_kind, trip_shift)

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureSpec":
        modes = tuple(Mode(**m) for m in d.get("modes", []))
        return cls(modes, d.get("noise_weight", 0.0), d.get("jitter_kind", "normal"),
                   d.get("trip_shift", 0.0))

    def to_dict(self) -> dict:
        return asdict(self)

    def stream(self, seed: int) -> Iterator[RequestInterval]:
        return _MixtureCursor(self, seed)

    def draw(self, rng, c: int, context: float = 0.0) -> RequestInterval:
        """One interval from component ``c`` (``len(modes)`` is the noise)."""
        if c == len(self.modes):
            u = rng.random(2)
            return RequestInterval(float(u.min()), float(u.max()))
        m = self.modes[c]
        offset = min(max(context, -m.low), 1.0 - m.high)
        while True:
            if self.jitter_kind == "normal":
                low, high = rng.normal([m.low, m.high], m.jitter)
            else:
                low, high = rng.uniform([m.low - m.jitter, m.high - m.jitter],
                                        [m.low + m.jitter, m.high + m.jitter])
            low, high = low + offset, high + offset
            if 0.0 <= low <= high <= 1.0:
                return RequestInterval(float(low), float(high))


@dataclass
class Workload:
    locations: LocationTrace
    trips: TripTrace
    intervals: IntervalStream
    ground_truth: dict = field(default_factory=dict)
    source: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SynthSpec:
    """Synthetic workload recipe. Distances are in miles."""

    mixture: MixtureSpec = MixtureSpec.single(0.12, 0.88, 0.01, 0.1, trip_shift=0.08)
    n_blobs: int = 4
    n_stations: int = 150
    area: float = 12.0
    blob_spread: float = 1.0
    n_trips: int = 3000
    mean_leg: float = 2.0
    max_legs: int = 4
    turn_sd: float = 0.8

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        d = dict(d)
        if "mixture" in d:
            d["mixture"] = MixtureSpec.from_dict(d["mixture"])
        return cls(**d)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["mixture"] = self.mixture.to_dict()
        return out


def synth_workload(spec: SynthSpec = SynthSpec(), seed: int = 0) -> Workload:
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.2 * spec.area, 0.8 * spec.area, size=(spec.n_blobs, 2))
    which = rng.integers(spec.n_blobs, size=spec.n_stations)
    coords = centers[which] + rng.normal(0.0, spec.blob_spread, size=(spec.n_stations, 2))
    locations = LocationTrace(np.arange(spec.n_stations), coords)

    trips = []
    for _ in range(spec.n_trips):
        start = coords[rng.integers(spec.n_stations)] + rng.normal(0.0, 0.3, size=2)
        heading = rng.uniform(0.0, 2.0 * math.pi)
        pts = [start]
        for _ in range(int(rng.integers(1, spec.max_legs + 1))):
            heading += rng.normal(0.0, spec.turn_sd)
            leg = rng.exponential(spec.mean_leg)
            pts.append(pts[-1] + leg * np.array([math.cos(heading), math.sin(heading)]))
        trips.append(Trip.from_waypoints(np.array(pts)))

    stream = IntervalStream(mixture=spec.mixture, seed=seed + 1)
    truth = {"modes": [asdict(m) for m in spec.mixture.modes],
             "noise_weight": spec.mixture.noise_weight}
    return Workload(locations, TripTrace(trips), stream, truth,
                    {"kind": "synthetic", "seed": seed, "spec": spec.to_dict()})


# ---------------------------------------------------------------- CSV traces

DEFAULT_COLUMNS = {
    "id": "id", "x": "x", "y": "y",
    "trip_id": "trip_id", "seq": "seq",
    "low": "low", "high": "high",
}


def _rows(path: Path, needed: Sequence[str]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise WorkloadError(f"{path}: missing header row")
        missing = [c for c in needed if c not in reader.fieldnames]
        if missing:
            raise WorkloadError(f"{path}: missing columns {missing}")
        for row in reader:
            yield reader.line_num, row


def _num(path, line, row, col, kind=float):
    try:
        return kind(row[col])
    except (TypeError, ValueError):
        raise WorkloadError(f"{path}:{line}: cannot parse {col}={row[col]!r}") from None


def normalize_pairs(raw: np.ndarray) -> np.ndarray:
    """Min-max scale all endpoints together so the smallest maps to 0 and the
    largest to 1."""
    raw = np.asarray(raw, dtype=float).reshape(-1, 2)
    if raw.size == 0:
        return raw
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.zeros_like(raw)
    out = (raw - lo) / (hi - lo)
    return np.clip(out, 0.0, 1.0)


def load_csv_traces(locations_path, trips_path, intervals_path,
                    columns: Optional[dict] = None) -> Workload:
    cols = {**DEFAULT_COLUMNS, **(columns or {})}
    locations_path, trips_path, intervals_path = map(Path, (locations_path, trips_path,
                                                            intervals_path))

    ids, coords = [], []
    for line, row in _rows(locations_path, [cols["id"], cols["x"], cols["y"]]):
        ids.append(_num(locations_path, line, row, cols["id"], int))
        coords.append((_num(locations_path, line, row, cols["x"]),
                       _num(locations_path, line, row, cols["y"])))
        if not all(map(math.isfinite, coords[-1])):
            raise WorkloadError(f"{locations_path}:{line}: non-finite coordinate")
    try:
        locations = LocationTrace(np.array(ids, dtype=int), np.array(coords, dtype=float))
    except WorkloadError as exc:
        raise WorkloadError(f"{locations_path}: {exc}") from None

    by_trip: dict = {}
    for line, row in _rows(trips_path, [cols["trip_id"], cols["seq"], cols["x"], cols["y"]]):
        key = row[cols["trip_id"]]
        seq = _num(trips_path, line, row, cols["seq"], int)
        xy = (_num(trips_path, line, row, cols["x"]), _num(trips_path, line, row, cols["y"]))
        by_trip.setdefault(key, []).append((seq, xy))
    trips = []
    for key, items in by_trip.items():  # first-appearance order
        items.sort(key=lambda s: s[0])
        trips.append(Trip.from_waypoints([xy for _, xy in items]))

    raw = []
    for line, row in _rows(intervals_path, [cols["low"], cols["high"]]):
        low = _num(intervals_path, line, row, cols["low"])
        high = _num(intervals_path, line, row, cols["high"])
        if not (math.isfinite(low) and math.isfinite(high)):
            raise WorkloadError(f"{intervals_path}:{line}: non-finite endpoint")
        if low > high:
            raise WorkloadError(f"{intervals_path}:{line}: low {low} > high {high}")
        raw.append((low, high))
    norm = normalize_pairs(np.array(raw, dtype=float))
    intervals = [RequestInterval(float(a), float(b)) for a, b in norm]

    return Workload(locations, TripTrace(trips), IntervalStream(intervals), {},
                    {"kind": "csv", "locations": str(locations_path),
                     "trips": str(trips_path), "intervals": str(intervals_path),
                     "normalization": "min-max over all endpoints"})


def write_csv_traces(workload: Workload, out_dir, n_intervals: int) -> dict:
    """Write the three CSV files for ``workload``; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {k: out / f"{k}.csv" for k in ("locations", "trips", "intervals")}
    with open(paths["locations"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y"])
        for i, (x, y) in zip(workload.locations.ids, workload.locations.coords):
            w.writerow([int(i), repr(float(x)), repr(float(y))])
    with open(paths["trips"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["trip_id", "seq", "x", "y"])
        for k, trip in enumerate(workload.trips.trips):
            for s, (x, y) in enumerate(trip.waypoints):
                w.writerow([k, s, repr(float(x)), repr(float(y))])
    with open(paths["intervals"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["low", "high"])
        for iv in workload.intervals.take(n_intervals):
            w.writerow([repr(iv.low), repr(iv.high)])
    return {k: str(v) for k, v in paths.items()}
