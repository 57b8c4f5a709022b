# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Gaussian KDE evaluation and the one-class SVM
pairwise dual solver. Signatures match ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, floor, INFINITY

cnp.import_array()

cdef double _TAU = 1e-12


def kde_eval(points, queries, double i11, double i12, double i22, double norm):
    cdef double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef double[:, ::1] qs = np.ascontiguousarray(queries, dtype=np.float64)
    cdef Py_ssize_t n = pts.shape[0], m = qs.shape[0], a, k
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    cdef double qx, qy, dx, dy, acc
    with nogil:
        for a in range(m):
            qx = qs[a, 0]
            qy = qs[a, 1]
            acc = 0.0
            for k in range(n):
                dx = qx - pts[k, 0]
                dy = qy - pts[k, 1]
                acc += exp(-0.5 * (i11 * dx * dx + 2.0 * i12 * dx * dy + i22 * dy * dy))
            o[a] = norm * acc
    return out


def smo_solve(Q, double C, double tol, long max_iter):
    cdef double[:, ::1] q = np.ascontiguousarray(Q, dtype=np.float64)
    cdef Py_ssize_t n = q.shape[0], t, i, j, k
    alpha_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] alpha = alpha_arr
    cdef long kk = <long>floor(1.0 / C + 1e-9)
    if kk > n:
        kk = n
    for t in range(kk):
        alpha[t] = C
    if kk < n:
        alpha[kk] = max(0.0, 1.0 - kk * C)
    grad_arr = np.asarray(Q, dtype=np.float64) @ alpha_arr
    cdef double[::1] grad = grad_arr

    cdef long n_iter = 0
    cdef bint converged = False
    cdef double gmax, gmin, b, a, score, best, quad, delta, old_i, old_j, total, di, dj
    with nogil:
        while n_iter < max_iter:
            i = -1
            gmax = -INFINITY
            gmin = INFINITY
            for t in range(n):
                if alpha[t] < C and -grad[t] > gmax:
                    gmax = -grad[t]
                    i = t
            for t in range(n):
                if alpha[t] > 0.0 and -grad[t] < gmin:
                    gmin = -grad[t]
            if i < 0 or gmin == INFINITY:
                converged = True
                break
            if gmax - gmin < tol:
                converged = True
                break
            j = -1
            best = INFINITY
            for t in range(n):
                if alpha[t] > 0.0:
                    b = gmax + grad[t]
                    if b > 0.0:
                        a = q[i, i] + q[t, t] - 2.0 * q[i, t]
                        if a <= 0.0:
                            a = _TAU
                        score = -(b * b) / a
                        if score < best:
                            best = score
                            j = t
            if j < 0:
                converged = True
                break

            quad = q[i, i] + q[j, j] - 2.0 * q[i, j]
            if quad <= 0.0:
                quad = _TAU
            delta = (grad[j] - grad[i]) / quad
            old_i = alpha[i]
            old_j = alpha[j]
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
            for k in range(n):
                grad[k] += di * q[k, i] + dj * q[k, j]
            n_iter += 1
    return alpha_arr, grad_arr, n_iter, bool(converged)
