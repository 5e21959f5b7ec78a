# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation of 2D harmonic power/log series."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, log, pow, sqrt, M_PI

cnp.import_array()


def eval_series_2d(P, Q, double m0, r, phi):
    """sum_j r^(m0+j) (P_j + log r Q_j) . Y(phi); same contract as the numpy version."""
    cdef double[:, ::1] Pv = np.ascontiguousarray(P, dtype=np.float64)
    cdef double[:, ::1] Qv = np.ascontiguousarray(Q, dtype=np.float64)
    cdef double[::1] rv = np.ascontiguousarray(r, dtype=np.float64).ravel()
    cdef double[::1] fv = np.ascontiguousarray(phi, dtype=np.float64).ravel()
    cdef Py_ssize_t M = rv.shape[0], J = Pv.shape[0], B = Pv.shape[1]
    cdef Py_ssize_t L = (B - 1) // 2
    out = np.empty(M, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double[::1] Y = np.empty(B, dtype=np.float64)
    # rows of Q that vanish identically are skipped (log parts are sparse in j)
    cdef unsigned char[::1] qlive = np.ascontiguousarray(np.any(np.asarray(Q) != 0, axis=1), dtype=np.uint8)
    cdef double c0 = 1.0 / sqrt(2.0 * M_PI), c1 = 1.0 / sqrt(M_PI)
    cdef double c, s, cl, sl, tmp, rr, ap, aq, sp, sq
    cdef Py_ssize_t i, j, b, l
    with nogil:
        for i in range(M):
            c = cos(fv[i])
            s = sin(fv[i])
            Y[0] = c0
            cl = 1.0
            sl = 0.0
            for l in range(1, L + 1):
                tmp = cl * c - sl * s
                sl = sl * c + cl * s
                cl = tmp
                Y[2 * l - 1] = cl * c1
                Y[2 * l] = sl * c1
            rr = rv[i]
            ap = 0.0
            aq = 0.0
            for j in range(J - 1, -1, -1):
                sp = 0.0
                sq = 0.0
                for b in range(B):
                    sp += Pv[j, b] * Y[b]
                if qlive[j]:
                    for b in range(B):
                        sq += Qv[j, b] * Y[b]
                ap = ap * rr + sp
                aq = aq * rr + sq
            ov[i] = pow(rr, m0) * (ap + log(rr) * aq)
    return out
