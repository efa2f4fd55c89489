"""Pure NumPy implementation of the density kernel (fallback backend)."""

from __future__ import annotations

import numpy as np

_LOG_2PI = float(np.log(2.0 * np.pi))


def cluster_logdens(y: np.ndarray, logw: np.ndarray, mu: np.ndarray,
                    factor: np.ndarray, logdet: np.ndarray):
    """Weighted Gaussian log densities and their per-cluster log-sum-exp.

    factor[k, l] is any r x r matrix M with ||M (y - mu_kl)||^2 the
    Mahalanobis quadratic form of subcomponent (k, l); logdet[k, l] is
    log|Sigma_kl|.  Returns (cluster_log[N, K], comp_log[N, K, L]).
    """
    N, r = y.shape
    K, L = logw.shape
    comp = np.empty((N, K, L))
    for k in range(K):
        for l in range(L):
            z = (y - mu[k, l]) @ factor[k, l].T
            quad = np.einsum("ni,ni->n", z, z)
            comp[:, k, l] = logw[k, l] - 0.5 * (r * _LOG_2PI + logdet[k, l] + quad)
    m = comp.max(axis=2)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        clus = m_safe + np.log(np.exp(comp - m_safe[:, :, None]).sum(axis=2))
    clus = np.where(np.isfinite(m), clus, -np.inf)
    return clus, comp
