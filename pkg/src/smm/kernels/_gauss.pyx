# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loop: mixture component log densities for all observations.

Same contract as smm.kernels.numpy_backend.cluster_logdens; selected at
import when the extension built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, isinf, log

cnp.import_array()

cdef double LOG_2PI = 1.8378770664093453


def cluster_logdens(double[:, ::1] y, double[:, ::1] logw,
                    double[:, :, ::1] mu, double[:, :, :, ::1] factor,
                    double[:, ::1] logdet):
    """Weighted Gaussian log densities of every observation under every
    subcomponent, plus their per-cluster log-sum-exp.

    factor[k, l] is any r x r matrix M with ||M (y - mu_kl)||^2 equal to the
    Mahalanobis quadratic form; logdet[k, l] is log|Sigma_kl|.

    Returns (cluster_log[N, K], comp_log[N, K, L]).
    """
    cdef Py_ssize_t N = y.shape[0]
    cdef Py_ssize_t r = y.shape[1]
    cdef Py_ssize_t K = logw.shape[0]
    cdef Py_ssize_t L = logw.shape[1]
    comp_np = np.empty((N, K, L))
    clus_np = np.empty((N, K))
    cdef double[:, :, ::1] comp = comp_np
    cdef double[:, ::1] clus = clus_np
    cdef double[64] d
    cdef Py_ssize_t n, k, l, i, j
    cdef double quad, z, m, s, v

    if r > 64:
        raise ValueError("dimension too large for the compiled kernel")

    with nogil:
        for n in range(N):
            for k in range(K):
                m = -1e1000  # -inf
                for l in range(L):
                    for i in range(r):
                        d[i] = y[n, i] - mu[k, l, i]
                    quad = 0.0
                    for i in range(r):
                        z = 0.0
                        for j in range(r):
                            z += factor[k, l, i, j] * d[j]
                        quad += z * z
                    v = logw[k, l] - 0.5 * (r * LOG_2PI + logdet[k, l] + quad)
                    comp[n, k, l] = v
                    if v > m:
                        m = v
                if isinf(m) and m < 0:
                    clus[n, k] = m
                else:
                    s = 0.0
                    for l in range(L):
                        s += exp(comp[n, k, l] - m)
                    clus[n, k] = m + log(s)
    return clus_np, comp_np
