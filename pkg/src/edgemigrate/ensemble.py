"""The proactive migration policy: a KDE + one-class SVM ensemble run by a
receptor over the remote requests it serves.

Every ``lr`` remote requests the receptor infers a dominant interval from at
most ``window`` recent boundary points and pushes it to the requestors whose
request count reached ``omega``.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import kde, ocsvm
from .core import (BoundaryPoint, BoundingBox, DominantInterval, RequestInterval,
                   SlidingWindow, as_array, box_intersection)

log = logging.getLogger(__name__)

MIN_INFERENCE_POINTS = 10


@dataclass(frozen=True)
class EnsembleConfig:
    thresh: float = 0.8
    nu: float = 0.8
    lr: int = 20
    window: int = 100
    omega: float = 2
    pooled: bool = True
    resolution: int = kde.DEFAULT_RESOLUTION
    padding: float = kde.DEFAULT_PADDING

    def __post_init__(self):
        if not 0.0 < self.thresh < 1.0:
            raise ValueError("thresh must lie in (0, 1)")
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("nu must lie in (0, 1]")
        if self.lr <= 0 or self.window <= 0 or self.window % self.lr:
            raise ValueError("lr must be a positive divisor of window")
        if self.omega <= 0:
            raise ValueError("omega must be positive")


@dataclass(frozen=True)
class MigrationDirective:
    source: int
    target: int
    interval: RequestInterval


class FrequencyMap:
    """Per-requestor request counts at one receptor."""

    def __init__(self):
        self._counts: Counter = Counter()

    def record(self, requestor: int, k: int = 1):
        self._counts[requestor] += k

    def discard(self, requestor: int):
        if self._counts[requestor] > 0:
            self._counts[requestor] -= 1

    def reset(self, requestor: int):
        self._counts.pop(requestor, None)

    def __getitem__(self, requestor: int) -> int:
        return self._counts.get(requestor, 0)

    def items(self):
        return ((r, c) for r, c in self._counts.items() if c > 0)

    @property
    def total(self) -> int:
        return sum(self._counts.values())

    def ranked(self) -> list[tuple[int, int]]:
        """(requestor, count) pairs by count descending, then requestor id."""
        return sorted(self.items(), key=lambda rc: (-rc[1], rc[0]))


def combine_boxes(kde_box: Optional[BoundingBox],
                  svm_box: Optional[BoundingBox]) -> Optional[DominantInterval]:
    """Intersect the two branch boxes and join the lower-left x with the
    upper-right y of the intersection."""
    if kde_box is None or svm_box is None:
        return None
    inter = box_intersection(kde_box, svm_box)
    if inter is None:
        return None
    y1, y2 = inter.min_corner, inter.max_corner
    low, high = y1[0], y2[1]
    if low > high:
        # intersection lies entirely in the infeasible half-plane
        return None
    low = min(max(low, 0.0), 1.0)
    high = min(max(high, 0.0), 1.0)
    return DominantInterval(RequestInterval(low, high), y1, y2)


def branch_boxes(window_points, cfg: EnsembleConfig):
    """Return ``(kde_box, svm_box)``; either may be None."""
    pts = as_array(window_points)
    kde_box = kde.dominant_island_box(pts, cfg.thresh, cfg.resolution, cfg.padding)
    model = ocsvm.train(pts, ocsvm.OcsvmParams(nu=cfg.nu))
    svm_box = ocsvm.inlier_bbox(model, pts)
    return kde_box, svm_box


def infer_dominant_interval(window_points, cfg: EnsembleConfig = EnsembleConfig()
                            ) -> Optional[DominantInterval]:
    pts = as_array(window_points)
    if pts.shape[0] < MIN_INFERENCE_POINTS:
        return None
    try:
        kde_box, svm_box = branch_boxes(pts, cfg)
    except kde.DegenerateSampleError:
        return None
    except (ocsvm.ConvergenceError, ocsvm.InfeasibleError) as exc:
        log.warning("ensemble inference skipped: %s", exc)
        return None
    return combine_boxes(kde_box, svm_box)


def select_targets(freq: FrequencyMap, omega: float) -> list[int]:
    return [r for r, c in freq.ranked() if c >= omega]


@dataclass
class ReceptorState:
    """Windowing and frequency bookkeeping of one receptor node.

    Counts for a requestor restart after each migration to it and only cover
    requests still inside the window.
    """

    node_id: int
    window_size: int
    lr: int
    pooled: bool = True
    window: SlidingWindow = field(init=False)
    freq: FrequencyMap = field(default_factory=FrequencyMap)
    n_remote: int = 0
    n_fired: int = 0
    last_reset: dict = field(default_factory=dict)
    _per_requestor: dict = field(default_factory=dict)
    _per_count: Counter = field(default_factory=Counter)

    def __post_init__(self):
        self.window = SlidingWindow(self.window_size)

    def _window_for(self, requestor: int) -> SlidingWindow:
        if self.pooled:
            return self.window
        if requestor not in self._per_requestor:
            self._per_requestor[requestor] = SlidingWindow(self.window_size)
        return self._per_requestor[requestor]

    def record(self, t: int, requestor: int, point: BoundaryPoint) -> bool:
        """Enqueue one remote request; True when it completes an ``lr`` batch."""
        evicted = self._window_for(requestor).push(t, point, requestor)
        self.freq.record(requestor)
        if evicted is not None:
            et, _, who = evicted
            if et > self.last_reset.get(who, -1):
                self.freq.discard(who)
        self.n_remote += 1
        if self.pooled:
            fire = self.n_remote % self.lr == 0
        else:
            self._per_count[requestor] += 1
            fire = self._per_count[requestor] % self.lr == 0
        if fire:
            self.n_fired += 1
        return fire

    def inference_points(self, requestor: int):
        return self._window_for(requestor).array()

    def candidates(self, requestor: int) -> FrequencyMap:
        if self.pooled:
            return self.freq
        only = FrequencyMap()
        only.record(requestor, self.freq[requestor])
        return only

    def migrated(self, t: int, target: int):
        self.freq.reset(target)
        self.last_reset[target] = t

    def emit(self, t: int, dominant: Optional[DominantInterval],
             targets: list[int]) -> list[MigrationDirective]:
        if dominant is None:
            return []
        out = []
        for target in targets:
            if target == self.node_id:
                continue
            out.append(MigrationDirective(self.node_id, target, dominant.interval))
            self.migrated(t, target)
        return out


def on_request(state: ReceptorState, requestor: int, interval: RequestInterval,
               cfg: EnsembleConfig, t: int,
               infer: Callable = infer_dominant_interval) -> list[MigrationDirective]:
    """Feed one locally served remote request to the receptor's policy."""
    if not state.record(t, requestor, interval.as_point()):
        return []
    dominant = infer(state.inference_points(requestor), cfg)
    return state.emit(t, dominant, select_targets(state.candidates(requestor), cfg.omega))
