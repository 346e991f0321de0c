# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: RPR phasors, exact coherence and the OMP iteration.

Same contract as ``rprsd._pykernels``.  OMP here keeps an incremental
modified Gram-Schmidt factorization (two passes per new column) instead of
refactoring the selected block every iteration.
"""

import numpy as np
from libc.math cimport sqrt

cdef extern from "math.h" nogil:
    void sincos(double x, double *s, double *c)

from .errors import DegenerateColumnsError

NAME = "cython"


cdef inline double abs2(double complex z) nogil:
    return z.real * z.real + z.imag * z.imag


def rpr_phasors(const double[:, ::1] u, double scale):
    """``scale * exp(j 2 pi u)`` elementwise, same shape as ``u``."""
    out = np.empty((u.shape[0], u.shape[1]), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double s, c, two_pi = 6.283185307179586
    with nogil:
        for i in range(u.shape[0]):
            for j in range(u.shape[1]):
                sincos(two_pi * u[i, j], &s, &c)
                o[i, j].real = c * scale
                o[i, j].imag = s * scale
    return out


cdef double _max_upper(const double complex[:, :] G) nogil:
    cdef Py_ssize_t n = G.shape[0], i, j
    cdef double best = 0.0, v
    for i in range(n):
        for j in range(i + 1, n):
            v = abs2(G[i, j])
            if v > best:
                best = v
    return best


def max_offdiag_gram(const double complex[::1, :] A):
    cdef Py_ssize_t M = A.shape[0], N = A.shape[1]
    cdef Py_ssize_t i, j, m
    cdef double complex s
    cdef double best = 0.0, v
    if N >= 16:
        # BLAS forms the Gram matrix faster than a scalar loop at this size
        Af = np.asarray(A)
        return sqrt(_max_upper(Af.conj().T @ Af))
    with nogil:
        for i in range(N):
            for j in range(i + 1, N):
                s = 0
                for m in range(M):
                    s = s + A[m, i].conjugate() * A[m, j]
                v = abs2(s)
                if v > best:
                    best = v
    return sqrt(best)


def batch_coherence(const double complex[:, :, :] stack):
    cdef Py_ssize_t S = stack.shape[0], M = stack.shape[1], N = stack.shape[2]
    out = np.empty(S, dtype=np.float64)
    cdef double[::1] res = out
    cdef Py_ssize_t k, i, j, m
    cdef double complex s
    cdef double best, v
    with nogil:
        for k in range(S):
            best = 0.0
            for i in range(N):
                for j in range(i + 1, N):
                    s = 0
                    for m in range(M):
                        s = s + stack[k, m, i].conjugate() * stack[k, m, j]
                    v = abs2(s)
                    if v > best:
                        best = v
            res[k] = sqrt(best)
    return out


def omp(const double complex[::1, :] A, const double complex[::1] y, Py_ssize_t K, double rank_tolerance):
    cdef Py_ssize_t M = A.shape[0], N = A.shape[1]
    cdef Py_ssize_t t, n, m, j, i, p, bi
    cdef double best, v, nrm, maxpiv = 0.0, minpiv = 0.0
    cdef double complex s, c

    selected_arr = np.empty(K, dtype=np.int64)
    norms_arr = np.empty(K + 1, dtype=np.float64)
    coefs_arr = np.zeros((K, K), dtype=np.complex128)
    resid_arr = np.empty((K + 1, M), dtype=np.complex128)
    Q_arr = np.zeros((K, M), dtype=np.complex128)
    R_arr = np.zeros((K, K), dtype=np.complex128)
    b_arr = np.zeros(K, dtype=np.complex128)
    x_arr = np.zeros(K, dtype=np.complex128)
    w_arr = np.empty(M, dtype=np.complex128)
    r_arr = np.array(y, dtype=np.complex128)
    mask_arr = np.zeros(N, dtype=np.uint8)

    cdef long long[::1] selected = selected_arr
    cdef double[::1] norms = norms_arr
    cdef double complex[:, ::1] coefs = coefs_arr
    cdef double complex[:, ::1] resid = resid_arr
    cdef double complex[:, ::1] Q = Q_arr
    cdef double complex[:, ::1] R = R_arr
    cdef double complex[::1] b = b_arr
    cdef double complex[::1] x = x_arr
    cdef double complex[::1] w = w_arr
    cdef double complex[::1] r = r_arr
    cdef unsigned char[::1] mask = mask_arr

    v = 0.0
    for m in range(M):
        resid[0, m] = r[m]
        v += abs2(r[m])
    norms[0] = sqrt(v)

    for t in range(K):
        best = -1.0
        bi = -1
        with nogil:
            for n in range(N):
                if mask[n]:
                    continue
                s = 0
                for m in range(M):
                    s = s + A[m, n].conjugate() * r[m]
                v = abs2(s)
                # strict comparison keeps the lowest index on ties
                if v > best:
                    best = v
                    bi = n
        selected[t] = bi
        mask[bi] = 1

        with nogil:
            for m in range(M):
                w[m] = A[m, bi]
            for p in range(2):
                for j in range(t):
                    c = 0
                    for m in range(M):
                        c = c + Q[j, m].conjugate() * w[m]
                    R[j, t] = R[j, t] + c
                    for m in range(M):
                        w[m] = w[m] - c * Q[j, m]
            v = 0.0
            for m in range(M):
                v += abs2(w[m])
            nrm = sqrt(v)
        if t == 0:
            maxpiv = nrm
            minpiv = nrm
        else:
            maxpiv = max(maxpiv, nrm)
            minpiv = min(minpiv, nrm)
        if maxpiv == 0.0 or minpiv < rank_tolerance * maxpiv:
            raise DegenerateColumnsError(
                f"rank deficient column set: pivot ratio {minpiv / max(maxpiv, 1e-300):.3e}"
            )
        R[t, t] = nrm

        with nogil:
            for m in range(M):
                Q[t, m] = w[m] / nrm
            s = 0
            c = 0
            for m in range(M):
                s = s + Q[t, m].conjugate() * y[m]
                c = c + Q[t, m].conjugate() * r[m]
            b[t] = s
            v = 0.0
            for m in range(M):
                r[m] = r[m] - c * Q[t, m]
                resid[t + 1, m] = r[m]
                v += abs2(r[m])
            norms[t + 1] = sqrt(v)

            i = t
            while i >= 0:
                s = b[i]
                for j in range(i + 1, t + 1):
                    s = s - R[i, j] * x[j]
                x[i] = s / R[i, i]
                i -= 1
            for i in range(t + 1):
                coefs[t, i] = x[i]

    return selected_arr, norms_arr, coefs_arr, resid_arr
