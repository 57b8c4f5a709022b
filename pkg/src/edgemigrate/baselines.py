"""Comparison policies: Random-DM and DBSCAN-DM, plus a from-scratch DBSCAN.

Both baselines reuse the receptor bookkeeping of the ensemble policy so that
only the choice of interval and of targets differs between policies.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import DominantInterval, RequestInterval, as_array
from .ensemble import EnsembleConfig, MigrationDirective, ReceptorState

NOISE = -1


@dataclass(frozen=True)
class DbscanParams:
    eps: float = 0.0296
    min_samples: int = 4

    def __post_init__(self):
        if self.eps <= 0 or self.min_samples < 1:
            raise ValueError("eps must be positive and min_samples >= 1")


@dataclass(frozen=True)
class RandomDmParams:
    p_migrate: float = 0.0
    qnm: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_migrate <= 1.0:
            raise ValueError("p_migrate must lie in [0, 1]")
        if self.qnm < 1:
            raise ValueError("qnm must be >= 1")


@dataclass(frozen=True)
class Calibration:
    p_migrate: float
    qnm: int
    requests: int
    initiating: int
    directives: int


@dataclass
class DbscanResult:
    labels: np.ndarray  # cluster id per point, NOISE for noise
    core: np.ndarray    # bool mask

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def clusters(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == k) for k in range(self.n_clusters)]

    @property
    def noise(self) -> np.ndarray:
        return np.flatnonzero(self.labels == NOISE)


def neighborhoods(arr: np.ndarray, eps: float) -> list[np.ndarray]:
    d2 = ((arr[:, None, :] - arr[None, :, :]) ** 2).sum(axis=-1)
    within = d2 <= eps * eps
    return [np.flatnonzero(row) for row in within]


def dbscan(points, params: DbscanParams = DbscanParams()) -> DbscanResult:
    """Density-based clustering with inclusive ``eps`` balls that count the
    point itself. Points are scanned in index order; a border point joins the
    first cluster whose expansion reaches it."""
    arr = as_array(points)
    n = arr.shape[0]
    labels = np.full(n, NOISE, dtype=int)
    if n == 0:
        return DbscanResult(labels, np.zeros(0, dtype=bool))
    nbrs = neighborhoods(arr, params.eps)
    core = np.array([len(nb) >= params.min_samples for nb in nbrs])
    cluster = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        labels[i] = cluster
        queue = deque([i])
        while queue:
            p = queue.popleft()
            for q in nbrs[p]:
                if labels[q] == NOISE:
                    labels[q] = cluster
                    if core[q]:
                        queue.append(q)
        cluster += 1
    return DbscanResult(labels, core)


def dbscan_dm_dominant(points, params: DbscanParams = DbscanParams()
                       ) -> Optional[DominantInterval]:
    """Centroid of the most populated cluster, read as an interval."""
    arr = as_array(points)
    result = dbscan(arr, params)
    clusters = result.clusters()
    if not clusters:
        return None
    # max() keeps the first, i.e. lowest-labelled, cluster on ties
    biggest = max(clusters, key=len)
    cx, cy = (float(v) for v in arr[biggest].mean(axis=0))
    low, high = min(cx, cy), max(cx, cy)
    low, high = max(low, 0.0), min(high, 1.0)
    return DominantInterval(RequestInterval(low, high), (cx, cy), (cx, cy))


def dbscan_dm_step(state: ReceptorState, requestor: int, interval: RequestInterval,
                   params: DbscanParams, qnm: int, cfg: EnsembleConfig, t: int
                   ) -> list[MigrationDirective]:
    if not state.record(t, requestor, interval.as_point()):
        return []
    dominant = dbscan_dm_dominant(state.inference_points(requestor), params)
    targets = [r for r, _ in state.candidates(requestor).ranked()][:qnm]
    return state.emit(t, dominant, targets)


class RandomDmState:
    def __init__(self, params: RandomDmParams):
        self.params = params
        self.rng = np.random.default_rng(params.seed)


def random_dm_step(state: RandomDmState, source: int, peers: Sequence[int]
                   ) -> list[MigrationDirective]:
    """With probability ``p_migrate`` push a uniform random interval to
    ``qnm`` distinct peers drawn uniformly (``source`` excluded)."""
    p = state.params
    if p.p_migrate <= 0.0 or state.rng.random() >= p.p_migrate:
        return []
    u1, u2 = state.rng.random(2)
    interval = RequestInterval(float(min(u1, u2)), float(max(u1, u2)))
    pool = np.array([peer for peer in peers if peer != source], dtype=int)
    if pool.size == 0:
        return []
    chosen = state.rng.choice(pool, size=min(p.qnm, pool.size), replace=False)
    return [MigrationDirective(source, int(target), interval) for target in chosen]


def derive_calibration(record) -> Calibration:
    """Random-DM migration probability and fan-out from a Model run."""
    total = record.r_total
    initiating = record.requests_with_migration
    directives = record.n_directives
    p = initiating / total if total else 0.0
    # half-up rounding; round() would send 2.5 to 2
    qnm = max(1, math.floor(directives / initiating + 0.5)) if initiating else 1
    return Calibration(p, qnm, total, initiating, directives)
