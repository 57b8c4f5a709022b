"""Slow, obviously-correct reference implementations used only by the tests.

Nothing here imports the package's own algorithms.
"""
import itertools
import math
from collections import deque

import numpy as np


def naive_kde(points, H, q):
    """Bivariate Gaussian KDE at ``q`` as a plain double loop."""
    H = np.asarray(H, dtype=float)
    Hinv = np.linalg.inv(H)
    det = np.linalg.det(H)
    n = len(points)
    total = 0.0
    for i in range(n):
        d = [q[0] - points[i][0], q[1] - points[i][1]]
        quad = 0.0
        for a in range(2):
            for b in range(2):
                quad += d[a] * Hinv[a, b] * d[b]
        total += math.exp(-0.5 * quad)
    return total / (2.0 * math.pi * n * math.sqrt(det))


def _project_capped_simplex(v, C):
    """Exact Euclidean projection onto {0 <= a <= C, sum(a) = 1}.

    sum(clip(v - tau, 0, C)) is piecewise linear and non-increasing in tau
    with kinks at v_i and v_i - C; find the bracketing kinks and interpolate.
    """
    kinks = np.unique(np.concatenate([v, v - C]))
    sums = np.array([np.clip(v - t, 0.0, C).sum() for t in kinks])
    # sums decrease along kinks; pick the segment where they cross 1
    k = int(np.searchsorted(-sums, -1.0, side="left"))
    if k == 0:
        tau = kinks[0]
    elif k == len(kinks):
        tau = kinks[-1]
    else:
        t0, t1, s0, s1 = kinks[k - 1], kinks[k], sums[k - 1], sums[k]
        tau = t0 if s0 == s1 else t0 + (s0 - 1.0) * (t1 - t0) / (s0 - s1)
    return np.clip(v - tau, 0.0, C)


def projected_gradient_qp(K, C, iters=50000, tol=1e-13):
    """Accelerated projected gradient for min 1/2 a'Ka over the capped simplex."""
    n = K.shape[0]
    L = max(np.linalg.eigvalsh(K).max(), 1e-12)
    a = _project_capped_simplex(np.full(n, 1.0 / n), C)
    y, t = a.copy(), 1.0
    for _ in range(iters):
        a_next = _project_capped_simplex(y - (K @ y) / L, C)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = a_next + ((t - 1.0) / t_next) * (a_next - a)
        done = np.abs(a_next - a).max() < tol
        a, t = a_next, t_next
        if done:
            break
    return a, 0.5 * a @ K @ a


def reachability_dbscan(points, eps, min_samples):
    """Core points grouped by density-connectivity, plus the noise set.

    Returns ``(core_partition, noise)`` where the partition is a set of
    frozensets of core indices. Border assignment is order-dependent in any
    DBSCAN, so only core membership and noise are compared.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    near = [[j for j in range(n)
             if (pts[i][0] - pts[j][0]) ** 2 + (pts[i][1] - pts[j][1]) ** 2 <= eps * eps]
            for i in range(n)]
    core = [len(near[i]) >= min_samples for i in range(n)]
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        if core[i]:
            for j in near[i]:
                if core[j]:
                    parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        if core[i]:
            groups.setdefault(find(i), set()).add(i)
    partition = {frozenset(g) for g in groups.values()}
    noise = {i for i in range(n) if not core[i] and not any(core[j] for j in near[i])}
    return partition, noise


def flood_fill_components(mask):
    """4-connected components of a boolean 2D array, as lists of cells."""
    mask = np.asarray(mask, dtype=bool)
    seen = np.zeros_like(mask)
    comps = []
    nx, ny = mask.shape
    for i in range(nx):
        for j in range(ny):
            if mask[i, j] and not seen[i, j]:
                comp, queue = [], deque([(i, j)])
                seen[i, j] = True
                while queue:
                    a, b = queue.popleft()
                    comp.append((a, b))
                    for da, db in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                        u, v = a + da, b + db
                        if 0 <= u < nx and 0 <= v < ny and mask[u, v] and not seen[u, v]:
                            seen[u, v] = True
                            queue.append((u, v))
                comps.append(comp)
    return comps


def best_partition_sse(points, k):
    """Global minimum within-cluster sum of squares by enumerating labelings."""
    pts = np.asarray(points, dtype=float)
    best = math.inf
    for labels in itertools.product(range(k), repeat=len(pts)):
        if len(set(labels)) != k or labels[0] != 0:
            continue
        lab = np.array(labels)
        sse = sum(((pts[lab == c] - pts[lab == c].mean(axis=0)) ** 2).sum() for c in range(k))
        best = min(best, sse)
    return best
