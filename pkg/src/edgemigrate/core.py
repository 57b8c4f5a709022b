"""Domain value types and interval/point geometry.

Every request value is normalized to [0, 1] before it reaches these types.
A request ``[low, high]`` doubles as the 2D boundary point ``(low, high)``,
which is the sample unit for the density, novelty and clustering models.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np


class InvalidIntervalError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class RequestInterval:
    low: float
    high: float

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise InvalidIntervalError(f"non-finite interval [{self.low}, {self.high}]")
        if self.low > self.high:
            raise InvalidIntervalError(f"low > high in [{self.low}, {self.high}]")
        if self.low < 0.0 or self.high > 1.0:
            raise InvalidIntervalError(f"interval [{self.low}, {self.high}] outside [0, 1]")

    @property
    def width(self) -> float:
        return self.high - self.low

    def as_point(self) -> "BoundaryPoint":
        return BoundaryPoint(self.low, self.high)

    def __iter__(self):
        yield self.low
        yield self.high


@dataclass(frozen=True, slots=True)
class BoundaryPoint:
    x: float
    y: float

    def __post_init__(self):
        if self.x > self.y:
            raise InvalidIntervalError(f"boundary point ({self.x}, {self.y}) has x > y")

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True, slots=True)
class BoundingBox:
    """Axis-aligned box. Corners are plain float pairs because a box built
    around feasible points may still reach into the x > y half-plane."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValueError(f"inverted box {self}")

    @property
    def min_corner(self) -> tuple[float, float]:
        return (self.xmin, self.ymin)

    @property
    def max_corner(self) -> tuple[float, float]:
        return (self.xmax, self.ymax)

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    def contains_box(self, other: "BoundingBox") -> bool:
        return (self.xmin <= other.xmin and self.ymin <= other.ymin
                and other.xmax <= self.xmax and other.ymax <= self.ymax)

    @classmethod
    def around(cls, points) -> Optional["BoundingBox"]:
        """Bounding box of an (n, 2) array or sequence of points; None if empty."""
        arr = as_array(points)
        if arr.shape[0] == 0:
            return None
        lo = arr.min(axis=0)
        hi = arr.max(axis=0)
        return cls(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))


@dataclass(frozen=True, slots=True)
class DominantInterval:
    interval: RequestInterval
    y1: tuple[float, float]
    y2: tuple[float, float]


def contains(a: RequestInterval, b: RequestInterval) -> bool:
    """True when the closed interval ``a`` covers ``b``."""
    return a.low <= b.low and b.high <= a.high


def interval_distance_sq(a: RequestInterval, b: RequestInterval) -> float:
    return (a.low - b.low) ** 2 + (a.high - b.high) ** 2


def box_intersection(a: BoundingBox, b: BoundingBox) -> Optional[BoundingBox]:
    xmin = max(a.xmin, b.xmin)
    ymin = max(a.ymin, b.ymin)
    xmax = min(a.xmax, b.xmax)
    ymax = min(a.ymax, b.ymax)
    if xmin > xmax or ymin > ymax:
        return None
    return BoundingBox(xmin, ymin, xmax, ymax)


def as_array(points) -> np.ndarray:
    """Coerce boundary points (objects, pairs or an array) to a float (n, 2) array."""
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
    else:
        arr = np.array([(p[0], p[1]) if not isinstance(p, (BoundaryPoint, RequestInterval))
                        else tuple(p) for p in points], dtype=float)
    return arr.reshape(-1, 2)


class SlidingWindow:
    """Bounded FIFO of ``(time_index, BoundaryPoint)`` entries.

    Pushing into a full window evicts the oldest entry, which is returned so
    callers can keep derived counters in step with the window contents.
    """

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("window capacity must be positive")
        self.capacity = capacity
        self._entries: deque = deque()

    def push(self, t: int, point: BoundaryPoint, tag=None):
        if self._entries and t <= self._entries[-1][0]:
            raise ValueError(f"time index {t} is not after {self._entries[-1][0]}")
        evicted = None
        if len(self._entries) == self.capacity:
            evicted = self._entries.popleft()
        self._entries.append((t, point, tag))
        return evicted

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[tuple]:
        return iter(self._entries)

    def points(self) -> list[BoundaryPoint]:
        return [p for _, p, _ in self._entries]

    def times(self) -> list[int]:
        return [t for t, _, _ in self._entries]

    def array(self) -> np.ndarray:
        if not self._entries:
            return np.empty((0, 2))
        return np.array([(p.x, p.y) for _, p, _ in self._entries], dtype=float)


def points_from(pairs: Sequence[Sequence[float]]) -> list[BoundaryPoint]:
    return [BoundaryPoint(float(a), float(b)) for a, b in pairs]
