"""Pure numpy implementations of the hot kernels.

Mirrors ``_ckernels.pyx`` function for function; used whenever the compiled
extension is unavailable or ``EDGEMIGRATE_PURE_PYTHON`` is set.
"""
import math

import numpy as np

_TAU = 1e-12
_CHUNK = 4096


def kde_eval(points, queries, i11, i12, i22, norm):
    """Gaussian KDE at each query: ``norm * sum_k exp(-q(query - point_k) / 2)``
    where ``q`` is the quadratic form of the inverse bandwidth matrix."""
    points = np.ascontiguousarray(points, dtype=float)
    queries = np.ascontiguousarray(queries, dtype=float)
    out = np.empty(queries.shape[0])
    for start in range(0, queries.shape[0], _CHUNK):
        q = queries[start:start + _CHUNK]
        dx = q[:, 0:1] - points[:, 0]
        dy = q[:, 1:2] - points[:, 1]
        quad = i11 * dx * dx + 2.0 * i12 * dx * dy + i22 * dy * dy
        out[start:start + _CHUNK] = norm * np.exp(-0.5 * quad).sum(axis=1)
    return out


def smo_solve(Q, C, tol, max_iter):
    """Minimize 0.5 a'Qa subject to sum(a) = 1, 0 <= a <= C by pairwise updates.

    Returns ``(alpha, grad, n_iter, converged)``.
    """
    Q = np.ascontiguousarray(Q, dtype=float)
    n = Q.shape[0]
    alpha = np.zeros(n)
    k = min(int(math.floor(1.0 / C + 1e-9)), n)
    alpha[:k] = C
    if k < n:
        alpha[k] = max(0.0, 1.0 - k * C)
    grad = Q @ alpha
    diag = np.diag(Q).copy()

    n_iter = 0
    converged = False
    while n_iter < max_iter:
        up = alpha < C
        low = alpha > 0.0
        if not up.any() or not low.any():
            converged = True
            break
        neg = -grad
        i = int(np.argmax(np.where(up, neg, -np.inf)))
        gmax = neg[i]
        gmin = np.min(np.where(low, neg, np.inf))
        if gmax - gmin < tol:
            converged = True
            break
        b = gmax + grad
        a = diag[i] + diag - 2.0 * Q[i]
        a = np.where(a > 0.0, a, _TAU)
        score = np.where(low & (b > 0.0), -(b * b) / a, np.inf)
        j = int(np.argmin(score))
        if not np.isfinite(score[j]):
            converged = True
            break

        quad = diag[i] + diag[j] - 2.0 * Q[i, j]
        if quad <= 0.0:
            quad = _TAU
        delta = (grad[j] - grad[i]) / quad
        old_i, old_j = alpha[i], alpha[j]
        total = old_i + old_j
        if delta >= C - old_i and C - old_i <= old_j:
            alpha[i] = C
            alpha[j] = max(0.0, total - C)
        elif delta >= old_j:
            alpha[j] = 0.0
            alpha[i] = total
        else:
            alpha[i] = old_i + delta
            alpha[j] = old_j - delta
        di = alpha[i] - old_i
        dj = alpha[j] - old_j
        grad += di * Q[:, i] + dj * Q[:, j]
        n_iter += 1
    return alpha, grad, n_iter, converged
