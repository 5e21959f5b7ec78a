"""Numpy reference implementation of the series kernels (fallback when the extension is absent)."""
import math

import numpy as np


def fourier_basis(L, phi):
    phi = np.asarray(phi, dtype=float)
    out = np.empty((phi.size, 2 * L + 1))
    out[:, 0] = 1.0 / math.sqrt(2.0 * math.pi)
    ang = np.outer(phi, np.arange(1, L + 1))
    out[:, 1::2] = np.cos(ang) / math.sqrt(math.pi)
    out[:, 2::2] = np.sin(ang) / math.sqrt(math.pi)
    return out


def eval_series_2d(P, Q, m0, r, phi):
    """sum_j r^(m0+j) (P_j + log r Q_j) . Y(phi) for points given in polar form."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    r = np.asarray(r, dtype=float)
    L = (P.shape[1] - 1) // 2
    Y = fourier_basis(L, phi)
    pv = Y @ P.T
    qv = Y @ Q.T
    acc_p = np.zeros(r.size)
    acc_q = np.zeros(r.size)
    for j in range(P.shape[0] - 1, -1, -1):
        acc_p = acc_p * r + pv[:, j]
        acc_q = acc_q * r + qv[:, j]
    return r ** m0 * (acc_p + np.log(r) * acc_q)
