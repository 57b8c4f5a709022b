"""Scoring of migration decisions from a run's event logs.

A migration to requestor A is judged by A's own subsequent requests:

* UnM - another migration reaches A before A issues any request;
* strict - TP when A's next request fits A's available interval, else FP;
* relaxed - TP when at least one of A's next ``lr`` requests fits, with the
  number that fit recorded as the hit count kappa.

Migrations after which A never issues another request are left unclassified.
"""
from __future__ import annotations

import bisect
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

from .core import RequestInterval, contains, interval_distance_sq

TP, FP, UNM = "TP", "FP", "UnM"


class UndefinedMetric(ValueError):
    pass


@dataclass(frozen=True)
class RequestEvent:
    t: int
    requestor: int
    server: int
    low: float
    high: float
    avail_low: float   # requestor's available interval when the request arrived
    avail_high: float
    local: bool
    serviceable: bool  # the serving node covered the request

    @property
    def interval(self) -> RequestInterval:
        return RequestInterval(self.low, self.high)

    @property
    def available(self) -> RequestInterval:
        return RequestInterval(self.avail_low, self.avail_high)

    @property
    def fits(self) -> bool:
        return contains(self.available, self.interval)


@dataclass(frozen=True)
class MigrationEvent:
    t: int
    source: int
    target: int
    low: float
    high: float
    policy: str

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError("migration source and target coincide")
        RequestInterval(self.low, self.high)


@dataclass(frozen=True)
class Classification:
    strict: Optional[str]   # None when unclassified
    relaxed: Optional[str]
    kappa: int = 0
    truncated: bool = False


@dataclass
class RunRecord:
    lr: int
    tp: int = 0
    fp: int = 0
    unm: int = 0
    tp_relaxed: int = 0
    fp_relaxed: int = 0
    hits_per_migration: list = field(default_factory=list)
    delta_accumulator: float = 0.0
    r_total: int = 0
    unserviceable: int = 0          # not coverable at the requestor
    unserved: int = 0               # not coverable at the serving node either
    requests_with_migration: int = 0
    n_directives: int = 0
    n_unclassified: int = 0
    n_truncated: int = 0
    requests: list = field(default_factory=list)
    migrations: list = field(default_factory=list)
    classifications: list = field(default_factory=list)
    trip_starts: list = field(default_factory=list)  # first request index per trip
    meta: dict = field(default_factory=dict)

    @property
    def classified(self) -> int:
        return self.tp + self.fp + self.unm

    @property
    def mu_s(self) -> float:
        return mu(self.tp, self.fp, self.unm)

    @property
    def mu_r(self) -> float:
        return mu(self.tp_relaxed, self.fp_relaxed, self.unm)

    @property
    def delta(self) -> float:
        return self.delta_accumulator / self.r_total if self.r_total else 0.0

    @property
    def mean_kappa(self) -> float:
        h = self.hits_per_migration
        return sum(h) / len(h) if h else math.nan

    @property
    def unm_ratio(self) -> float:
        return self.unm / self.classified if self.classified else math.nan

    @property
    def migration_share(self) -> float:
        return self.requests_with_migration / self.r_total if self.r_total else 0.0

    def migration_share_upto(self, n_trips: int) -> float:
        """Migration share over the first ``n_trips`` trips only.

        Runs are causal, so this equals the share of a run stopped after
        ``n_trips`` trips.
        """
        if not 0 < n_trips <= len(self.trip_starts):
            raise ValueError(f"run has {len(self.trip_starts)} trips, not {n_trips}")
        end = (self.trip_starts[n_trips] if n_trips < len(self.trip_starts)
               else self.r_total)
        if end == 0:
            return 0.0
        initiating = len({m.t for m in self.migrations if m.t < end})
        return initiating / end

    @property
    def directives_per_initiating(self) -> float:
        if not self.requests_with_migration:
            return math.nan
        return self.n_directives / self.requests_with_migration

    def scores(self) -> dict:
        return {
            "requests": self.r_total,
            "migration_pct": 100.0 * self.migration_share,
            "directives_per_migration": self.directives_per_initiating,
            "migrations": len(self.migrations),
            "tp": self.tp, "fp": self.fp, "unm": self.unm,
            "tp_relaxed": self.tp_relaxed, "fp_relaxed": self.fp_relaxed,
            "mu_s": _or_nan(lambda: self.mu_s),
            "mu_r": _or_nan(lambda: self.mu_r),
            "kappa": self.mean_kappa,
            "unm_ratio": self.unm_ratio,
            "delta": self.delta,
            "unserviceable": self.unserviceable,
            "unclassified": self.n_unclassified,
            "truncated": self.n_truncated,
        }


def _or_nan(fn):
    try:
        return fn()
    except UndefinedMetric:
        return math.nan


def mu(tp: int, fp: int, unm: int) -> float:
    denom = tp + fp + unm
    if denom == 0:
        raise UndefinedMetric("mu is undefined without classified migrations")
    return tp / denom


class _History:
    """Per-node request times and fit flags, for bisecting."""

    def __init__(self, requests: Iterable[RequestEvent]):
        self.times = defaultdict(list)
        self.fits = defaultdict(list)
        for r in requests:
            self.times[r.requestor].append(r.t)
            self.fits[r.requestor].append(r.fits)


def _next_migration_times(migrations: list[MigrationEvent]) -> list[Optional[int]]:
    nxt: list[Optional[int]] = [None] * len(migrations)
    last_seen: dict = {}
    for k in range(len(migrations) - 1, -1, -1):
        m = migrations[k]
        nxt[k] = last_seen.get(m.target)
        last_seen[m.target] = m.t
    return nxt


def _classify(t, history: _History, target, next_t, lr) -> Classification:
    times = history.times.get(target, [])
    idx = bisect.bisect_right(times, t)
    if next_t is not None and (idx == len(times) or times[idx] > next_t):
        return Classification(UNM, UNM, 0)
    if idx == len(times):
        return Classification(None, None, 0)
    # a request at the same index as the next migration precedes it
    end = len(times) if next_t is None else bisect.bisect_right(times, next_t)
    stop = min(idx + lr, end)
    fits = history.fits[target]
    kappa = sum(fits[idx:stop])
    strict = TP if fits[idx] else FP
    relaxed = TP if kappa >= 1 else FP
    return Classification(strict, relaxed, kappa, truncated=stop - idx < lr)


def classify_strict(migration: MigrationEvent, requests: list[RequestEvent],
                    next_migration_t: Optional[int] = None) -> Optional[str]:
    """TP / FP / UnM for one migration; None when unclassifiable."""
    return _classify(migration.t, _History(requests), migration.target,
                     next_migration_t, 1).strict


def classify_relaxed(migration: MigrationEvent, requests: list[RequestEvent], lr: int,
                     next_migration_t: Optional[int] = None
                     ) -> tuple[Optional[str], int]:
    c = _classify(migration.t, _History(requests), migration.target, next_migration_t, lr)
    return c.relaxed, c.kappa


def build_record(requests: list[RequestEvent], migrations: list[MigrationEvent], lr: int,
                 requests_with_migration: int, meta: Optional[dict] = None,
                 trip_starts: Optional[list] = None) -> RunRecord:
    rec = RunRecord(lr=lr, meta=dict(meta or {}), trip_starts=list(trip_starts or []))
    rec.requests = requests
    rec.migrations = migrations
    rec.r_total = len(requests)
    rec.requests_with_migration = requests_with_migration
    rec.n_directives = len(migrations)
    for r in requests:
        if not r.local:
            rec.unserviceable += 1
            rec.delta_accumulator += interval_distance_sq(r.interval, r.available)
        if not r.serviceable:
            rec.unserved += 1

    history = _History(requests)
    for m, next_t in zip(migrations, _next_migration_times(migrations)):
        c = _classify(m.t, history, m.target, next_t, lr)
        rec.classifications.append(c)
        if c.strict is None:
            rec.n_unclassified += 1
            continue
        rec.n_truncated += c.truncated
        rec.hits_per_migration.append(c.kappa)
        if c.strict == UNM:
            rec.unm += 1
            continue
        rec.tp += c.strict == TP
        rec.fp += c.strict == FP
        rec.tp_relaxed += c.relaxed == TP
        rec.fp_relaxed += c.relaxed == FP
    return rec


def delta(record: RunRecord) -> float:
    if record.r_total <= 0:
        raise UndefinedMetric("delta needs at least one request")
    return record.delta_accumulator / record.r_total


def replay_delta(requests: list[RequestEvent]) -> float:
    """Independent recomputation of delta straight from the request log."""
    total = 0.0
    for r in requests:
        if not (r.avail_low <= r.low and r.high <= r.avail_high):
            total += (r.low - r.avail_low) ** 2 + (r.high - r.avail_high) ** 2
    return total / len(requests) if requests else 0.0


# ---------------------------------------------------------------- summaries

SUMMARY_METRICS = ("migration_pct", "directives_per_migration", "mu_s", "mu_r",
                   "kappa", "unm_ratio", "delta")
CELL_KEYS = ("n_nodes", "trips", "req_step", "policy")


def _mean(values):
    vals = [v for v in values if not (isinstance(v, float) and math.isnan(v))]
    return sum(vals) / len(vals) if vals else math.nan


def summarize(runs: list[dict]) -> list[dict]:
    """Average per-run score dicts over seeds, one row per configuration cell.

    Each input dict carries the ``CELL_KEYS`` plus the metrics of
    :meth:`RunRecord.scores`.
    """
    cells: dict = {}
    for run in runs:
        key = tuple(run[k] for k in CELL_KEYS)
        cells.setdefault(key, []).append(run)
    rows = []
    for key, group in cells.items():
        row = dict(zip(CELL_KEYS, key))
        row["runs"] = len(group)
        for metric in SUMMARY_METRICS:
            row[metric] = _mean([g[metric] for g in group])
        rows.append(row)
    return rows


def average_column(rows: list[dict], metric: str) -> dict:
    """Mean of ``metric`` over all (trips, req_step) cells per (N, policy)."""
    groups: dict = defaultdict(list)
    for row in rows:
        groups[(row["n_nodes"], row["policy"])].append(row[metric])
    return {k: _mean(v) for k, v in groups.items()}


def table(rows: list[dict], metric: str, n_nodes, policy: str,
          steps=(2.0, 1.0, 0.5)) -> list[dict]:
    """Layout of the migration tables: one row per trips value, one column
    per req_step, plus the cross-cell average."""
    sel = [r for r in rows if r["n_nodes"] == n_nodes and r["policy"] == policy]
    out = []
    for trips in sorted({r["trips"] for r in sel}):
        line = {"trips": trips}
        for step in steps:
            hit = [r[metric] for r in sel if r["trips"] == trips and r["req_step"] == step]
            line[step] = hit[0] if hit else math.nan
        out.append(line)
    avg = _mean([r[metric] for r in sel])
    return [dict(line, average=avg) for line in out]


def record_to_dict(rec: RunRecord) -> dict:
    return {"scores": rec.scores(), "meta": rec.meta}


def event_dicts(rec: RunRecord):
    for r in rec.requests:
        yield {"event": "request", **asdict(r)}
    for m, c in zip(rec.migrations, rec.classifications):
        yield {"event": "migration", **asdict(m), "strict": c.strict,
               "relaxed": c.relaxed, "kappa": c.kappa}
