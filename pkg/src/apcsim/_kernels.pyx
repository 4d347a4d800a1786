# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; see ``_fallback.py`` for the reference semantics."""
import numpy as np
from libc.math cimport sqrt

cdef enum:
    BALL = 0
    HALFSPACE = 1
    BOX = 2
    SINGLETON = 3


cdef inline void _project(int kind, const double* prm, double* x, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s, t, nrm, f, a2
    if kind == BALL:
        s = 0.0
        for i in range(m):
            t = x[i] - prm[i]
            s += t * t
        nrm = sqrt(s)
        if nrm > prm[m]:
            f = prm[m] / nrm
            for i in range(m):
                x[i] = prm[i] + (x[i] - prm[i]) * f
    elif kind == HALFSPACE:
        t = -prm[m]
        a2 = 0.0
        for i in range(m):
            t += x[i] * prm[i]
            a2 += prm[i] * prm[i]
        if t > 0:
            f = t / a2
            for i in range(m):
                x[i] -= f * prm[i]
    elif kind == BOX:
        for i in range(m):
            if x[i] < prm[i]:
                x[i] = prm[i]
            elif x[i] > prm[m + i]:
                x[i] = prm[m + i]
    else:
        for i in range(m):
            x[i] = prm[i]


cdef inline double _distance(int kind, const double* prm, const double* x, double* tmp,
                             Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i
    cdef double s = 0.0, t
    for i in range(m):
        tmp[i] = x[i]
    _project(kind, prm, tmp, m)
    for i in range(m):
        t = x[i] - tmp[i]
        s += t * t
    return sqrt(s)


def cyclic_projection_batch(const int[::1] kinds, const double[:, ::1] params,
                            X0, double tol, long max_sweeps):
    cdef double[:, ::1] X = np.array(X0, dtype=np.float64, order="C")
    cdef Py_ssize_t N = X.shape[0], m = X.shape[1], nb = kinds.shape[0]
    sweeps_arr = np.zeros(N, dtype=np.int64)
    conv_arr = np.zeros(N, dtype=np.uint8)
    cdef long long[::1] sweeps = sweeps_arr
    cdef unsigned char[::1] conv = conv_arr
    cdef double[::1] prev_buf = np.empty(m)
    cdef double* prev = &prev_buf[0]
    cdef double* x
    cdef Py_ssize_t p, b, i
    cdef long s
    cdef double mv, t, tol2 = tol * tol
    with nogil:
        for p in range(N):
            x = &X[p, 0]
            for s in range(1, max_sweeps + 1):
                for i in range(m):
                    prev[i] = x[i]
                for b in range(nb):
                    _project(kinds[b], &params[b, 0], x, m)
                mv = 0.0
                for i in range(m):
                    t = x[i] - prev[i]
                    mv += t * t
                sweeps[p] = s
                if mv < tol2:
                    conv[p] = 1
                    break
    return np.asarray(X), sweeps_arr, conv_arr


def grid_feasible_mask(const int[::1] kinds, const double[:, ::1] params,
                       const double[::1] xs, const double[::1] ys, double tol):
    cdef Py_ssize_t nx = xs.shape[0], ny = ys.shape[0], nb = kinds.shape[0]
    mask_arr = np.zeros((ny, nx), dtype=np.uint8)
    cdef unsigned char[:, ::1] mask = mask_arr
    cdef double pt[2]
    cdef double tmp[2]
    cdef Py_ssize_t r, c, b
    cdef bint ok
    with nogil:
        for r in range(ny):
            for c in range(nx):
                pt[0] = xs[c]
                pt[1] = ys[r]
                ok = True
                for b in range(nb):
                    if _distance(kinds[b], &params[b, 0], pt, tmp, 2) > tol:
                        ok = False
                        break
                mask[r, c] = ok
    return mask_arr


def blend_consensus_final(const int[::1] kinds, const double[:, ::1] params,
                          const double[:, :, ::1] weights, const double[:, ::1] alphas, X0):
    cdef double[:, :, ::1] X = np.array(X0, dtype=np.float64, order="C")
    cdef Py_ssize_t B = X.shape[0], n = X.shape[1], m = X.shape[2]
    cdef Py_ssize_t S = weights.shape[0], K = alphas.shape[0]
    cdef double[:, ::1] pa = np.empty((n, m))
    cdef double[::1] proj = np.empty(m)
    cdef Py_ssize_t bt, k, i, j, d, w
    cdef double a, acc
    with nogil:
        for bt in range(B):
            for k in range(K):
                w = k % S
                for j in range(n):
                    a = alphas[k, j]
                    for d in range(m):
                        proj[d] = X[bt, j, d]
                    _project(kinds[j], &params[j, 0], &proj[0], m)
                    for d in range(m):
                        pa[j, d] = (1.0 - a) * X[bt, j, d] + a * proj[d]
                for i in range(n):
                    for d in range(m):
                        acc = 0.0
                        for j in range(n):
                            acc = acc + weights[w, i, j] * pa[j, d]
                        X[bt, i, d] = acc
    return np.asarray(X)


def dykstra_batch(const double[:, ::1] A, const double[::1] b, X0, double tol, double eps,
                  long max_sweeps):
    cdef double[:, ::1] X = np.array(X0, dtype=np.float64, order="C")
    cdef Py_ssize_t N = X.shape[0], m = X.shape[1], nf = A.shape[0]
    sweeps_arr = np.zeros(N, dtype=np.int64)
    conv_arr = np.zeros(N, dtype=np.uint8)
    cdef long long[::1] sweeps = sweeps_arr
    cdef unsigned char[::1] conv = conv_arr
    cdef double[::1] a2 = np.empty(nf)
    cdef double[::1] anorm = np.empty(nf)
    cdef double[:, ::1] incr = np.empty((nf, m))
    cdef double[::1] prev = np.empty(m)
    cdef double[::1] z = np.empty(m)
    cdef double* x
    cdef Py_ssize_t p, f, i
    cdef long s
    cdef double t, t2, mv, cv, yn, tol2 = tol * tol
    cdef bint feasible
    for f in range(nf):
        t = 0.0
        for i in range(m):
            t += A[f, i] * A[f, i]
        a2[f] = t
        anorm[f] = sqrt(t)
    with nogil:
        for p in range(N):
            x = &X[p, 0]
            feasible = True
            for f in range(nf):
                t = -b[f]
                for i in range(m):
                    t += A[f, i] * x[i]
                if t > 0:
                    feasible = False
                    break
            if feasible:
                conv[p] = 1
                continue
            for f in range(nf):
                for i in range(m):
                    incr[f, i] = 0.0
            for s in range(1, max_sweeps + 1):
                for i in range(m):
                    prev[i] = x[i]
                cv = 0.0
                for f in range(nf):
                    t = -b[f]
                    for i in range(m):
                        z[i] = x[i] + incr[f, i]
                        t += A[f, i] * z[i]
                    t = t / a2[f] if t > 0 else 0.0
                    for i in range(m):
                        x[i] = z[i] - t * A[f, i]
                        t2 = z[i] - x[i] - incr[f, i]
                        cv += t2 * t2
                        incr[f, i] = z[i] - x[i]
                mv = 0.0
                yn = 0.0
                for i in range(m):
                    t = x[i] - prev[i]
                    mv += t * t
                    yn += x[i] * x[i]
                sweeps[p] = s
                # the iterate can pause while the corrections still drift
                if mv < tol2 and cv < tol2:
                    # settled sweeps can stall outside the region
                    feasible = True
                    yn = eps * (1.0 + sqrt(yn))
                    for f in range(nf):
                        t = -b[f]
                        for i in range(m):
                            t += A[f, i] * x[i]
                        if t / anorm[f] > yn:
                            feasible = False
                            break
                    if feasible:
                        conv[p] = 1
                        break
    return np.asarray(X), sweeps_arr, conv_arr
