"""One-class SVM (RBF kernel) trained in its dual form on a window of
boundary points.

Dual problem solved here::

    minimize    0.5 * sum_ij a_i a_j K(y_i, y_j)
    subject to  0 <= a_i <= 1 / (nu * n),   sum_i a_i = 1

with ``K(y, y') = exp(-|y - y'|^2 / (2 sigma^2))``. The decision function is
``F(y) = sum_i a_i K(y_i, y) - rho``; ``F >= 0`` marks an inlier.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._backend import kernels
from .core import BoundingBox, RequestInterval, as_array

SIGMA_SQ_FLOOR = 1e-6


class ConvergenceError(RuntimeError):
    pass


class InfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class OcsvmParams:
    nu: float = 0.8
    sigma: Optional[float] = None  # None -> data-driven heuristic per window
    tolerance: float = 1e-6
    max_passes: Optional[int] = None  # None -> 10 * n**2 pair updates

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("nu must lie in (0, 1]")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class OcsvmModel:
    support_vectors: np.ndarray
    alphas: np.ndarray
    rho: float
    sigma: float
    upper_bound: float
    tolerance: float
    n_train: int
    n_iter: int

    @property
    def n_support(self) -> int:
        return len(self.alphas)

    def decision(self, queries) -> np.ndarray:
        q = as_array(queries)
        return rbf_kernel(q, self.support_vectors, self.sigma) @ self.alphas - self.rho


def heuristic_sigma(points) -> float:
    """sigma**2 = mean pairwise squared distance / 2, floored."""
    arr = as_array(points)
    n = arr.shape[0]
    if n < 2:
        return float(np.sqrt(SIGMA_SQ_FLOOR))
    d2 = _sq_dists(arr, arr)
    mean_pair = d2[np.triu_indices(n, k=1)].mean()
    return float(np.sqrt(max(mean_pair / 2.0, SIGMA_SQ_FLOOR)))


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    dx = a[:, 0:1] - b[:, 0]
    dy = a[:, 1:2] - b[:, 1]
    return dx * dx + dy * dy


def rbf_kernel(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    return np.exp(-_sq_dists(a, b) / (2.0 * sigma * sigma))


def dual_objective(alpha: np.ndarray, K: np.ndarray) -> float:
    return float(0.5 * alpha @ K @ alpha)


def train(points, params: OcsvmParams = OcsvmParams()) -> OcsvmModel:
    arr = as_array(points)
    n = arr.shape[0]
    if n < 2:
        raise ValueError("one-class SVM needs at least 2 points")
    if params.nu * n < 1.0 - 1e-12:
        raise InfeasibleError(f"nu * n = {params.nu * n:.3g} < 1")
    sigma = params.sigma if params.sigma is not None else heuristic_sigma(arr)
    K = rbf_kernel(arr, arr, sigma)
    C = 1.0 / (params.nu * n)
    max_iter = params.max_passes if params.max_passes is not None else 10 * n * n
    alpha, grad, n_iter, converged = kernels.smo_solve(K, C, params.tolerance, max_iter)
    if not converged:
        raise ConvergenceError(f"no convergence after {n_iter} pair updates (n={n})")

    free = (alpha > 0.0) & (alpha < C)
    if free.any():
        rho = float(grad[free].mean())
    else:
        at_upper = alpha >= C
        at_zero = alpha <= 0.0
        hi = grad[at_zero].min() if at_zero.any() else grad.max()
        lo = grad[at_upper].max() if at_upper.any() else grad.min()
        rho = float(0.5 * (hi + lo))

    sv = alpha > 0.0
    return OcsvmModel(arr[sv].copy(), alpha[sv].copy(), rho, sigma, C,
                      params.tolerance, n, n_iter)


def decision(model: OcsvmModel, q) -> float:
    return float(model.decision([q])[0])


def inlier_mask(model: OcsvmModel, points) -> np.ndarray:
    # margin support vectors sit at F ~ 0 up to the solver tolerance; keep them
    return model.decision(points) >= -model.tolerance


def inliers(model: OcsvmModel, points) -> np.ndarray:
    arr = as_array(points)
    return arr[inlier_mask(model, arr)]


def inlier_bbox(model: OcsvmModel, points) -> Optional[BoundingBox]:
    return BoundingBox.around(inliers(model, points))


def request_bounds(model: OcsvmModel, points) -> RequestInterval:
    """Widest inlier-supported range: lowest lower bound, highest upper bound."""
    kept = inliers(model, points)
    if kept.shape[0] == 0:
        raise ValueError("no inliers to bound")
    return RequestInterval(float(kept[:, 0].min()), float(kept[:, 1].max()))
