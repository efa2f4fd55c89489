"""Identification of the fitted mixture from the stored chain.

The chain is exchangeable over cluster indices, so raw draws mean nothing
cluster by cluster.  The pipeline: estimate the number of data clusters as
the mode of the non-empty-cluster trace, keep only sweeps with exactly that
many non-empty clusters and drop the empty clusters' (prior) draws, cluster
the weighted cluster means of the surviving draws in their point-process
representation, keep the sweeps whose classification sequence is a
permutation, relabel everything accordingly, and read classifications off
the relabeled draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (AllZeroLikelihood, InvalidLabel, NoMatchingDraws,
                     NotAPermutation)
from .kmeans import kmeans
from .model import DataSet
from .rng import make_rng


def count_nonempty(S, K: int) -> int:
    """Number of clusters with at least one assigned observation."""
    S = np.asarray(S, dtype=np.int64)
    if S.size and (S.min() < 1 or S.max() > K):
        raise InvalidLabel(f"labels must lie in 1..{K}")
    return int(np.count_nonzero(np.bincount(S, minlength=K + 1)[1:]))


def estimate_K0(k0_trace) -> int:
    """Mode of the non-empty-cluster trace; ties break toward the smaller
    value (parsimony)."""
    trace = np.asarray(k0_trace, dtype=np.int64)
    if trace.size == 0:
        raise ValueError("empty trace")
    return int(np.argmax(np.bincount(trace)))


@dataclass
class FilteredChain:
    """Sweeps with exactly K0_hat non-empty clusters, empties stripped."""

    eta: np.ndarray          # (M0, K0_hat) weights of the non-empty clusters
    w: np.ndarray            # (M0, K0_hat, L)
    mu: np.ndarray           # (M0, K0_hat, L, r)
    sigma: np.ndarray        # (M0, K0_hat, L, r, r)
    S: np.ndarray            # (M0, N), labels remapped to 1..K0_hat
    kept_iters: np.ndarray   # indices into the stored chain

    @property
    def M0(self) -> int:
        return self.eta.shape[0]

    @property
    def K0_hat(self) -> int:
        return self.eta.shape[1]

    def subset(self, idx: np.ndarray) -> "FilteredChain":
        return FilteredChain(eta=self.eta[idx], w=self.w[idx],
                             mu=self.mu[idx], sigma=self.sigma[idx],
                             S=self.S[idx], kept_iters=self.kept_iters[idx])


def filter_draws(chain, K0_hat: int) -> FilteredChain:
    """Keep sweeps whose non-empty count equals K0_hat; within each, move
    empty clusters last (stable among the non-empty), truncate to width
    K0_hat and remap the assignment labels accordingly."""
    if K0_hat < 1:
        raise ValueError("K0_hat must be >= 1")
    sel = np.nonzero(np.asarray(chain.k0_trace) == K0_hat)[0]
    if sel.size == 0:
        raise NoMatchingDraws(
            f"no stored sweep has exactly {K0_hat} non-empty clusters")
    K = chain.K
    m0 = sel.size
    out = FilteredChain(
        eta=np.empty((m0, K0_hat)),
        w=np.empty((m0, K0_hat) + chain.w.shape[2:]),
        mu=np.empty((m0, K0_hat) + chain.mu.shape[2:]),
        sigma=np.empty((m0, K0_hat) + chain.sigma.shape[2:]),
        S=np.empty((m0, chain.S.shape[1]), dtype=chain.S.dtype),
        kept_iters=sel,
    )
    for i, m in enumerate(sel):
        counts = np.bincount(chain.S[m], minlength=K + 1)[1:]
        order = np.nonzero(counts > 0)[0]          # stable: ascending index
        out.eta[i] = chain.eta[m, order]
        out.w[i] = chain.w[m, order]
        out.mu[i] = chain.mu[m, order]
        out.sigma[i] = chain.sigma[m, order]
        remap = np.zeros(K + 1, dtype=out.S.dtype)
        remap[order + 1] = np.arange(1, K0_hat + 1)
        out.S[i] = remap[chain.S[m]]
    return out


def cluster_means_functional(w_draw: np.ndarray, mu_draw: np.ndarray) -> np.ndarray:
    """Weighted cluster means, the label-invariant functional used for
    relabeling: sum_l w_kl mu_kl per cluster."""
    return np.einsum("kl,klr->kr", w_draw, mu_draw)


def stacked_functionals(filtered: FilteredChain) -> np.ndarray:
    """All cluster-mean functionals as an (M0*K0_hat, r) matrix, draw-major."""
    f = np.einsum("mkl,mklr->mkr", filtered.w, filtered.mu)
    return f.reshape(-1, f.shape[-1])


def cluster_point_process(functionals: np.ndarray, K0_hat: int,
                          seed: int) -> np.ndarray:
    """Cluster the stacked functionals into K0_hat groups (K-means with 10
    restarts) and regroup the labels into one classification sequence per
    draw.  Returns (M0, K0_hat) with classes 1..K0_hat."""
    if functionals.shape[0] % K0_hat:
        raise ValueError("functional matrix rows must be a multiple of K0_hat")
    labels, _, _ = kmeans(functionals, K0_hat, make_rng(seed, stream=1),
                          n_init=10, max_iter=100)
    return labels.reshape(-1, K0_hat) + 1


def permutation_filter(rhos: np.ndarray):
    """Indices of draws whose classification sequence is a permutation of
    (1..K0_hat), plus the dropped fraction."""
    rhos = np.asarray(rhos)
    k = rhos.shape[1]
    is_perm = np.all(np.sort(rhos, axis=1) == np.arange(1, k + 1), axis=1)
    kept = np.nonzero(is_perm)[0]
    return kept, float(1.0 - kept.size / rhos.shape[0])


@dataclass
class RelabeledChain:
    """Uniquely labeled draws of the identified K0_hat-cluster model."""

    eta: np.ndarray
    w: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    S: np.ndarray

    @property
    def M(self) -> int:
        return self.eta.shape[0]

    @property
    def K0_hat(self) -> int:
        return self.eta.shape[1]


def relabel(filtered: FilteredChain, rhos: np.ndarray) -> RelabeledChain:
    """Reorder cluster-indexed draws by each sweep's classification sequence
    and relabel the assignments; raises unless every sequence is a
    permutation."""
    rhos = np.asarray(rhos, dtype=np.int64)
    k = filtered.K0_hat
    out = RelabeledChain(eta=np.empty_like(filtered.eta),
                         w=np.empty_like(filtered.w),
                         mu=np.empty_like(filtered.mu),
                         sigma=np.empty_like(filtered.sigma),
                         S=np.empty_like(filtered.S))
    for m in range(filtered.M0):
        rho = rhos[m]
        if not np.array_equal(np.sort(rho), np.arange(1, k + 1)):
            raise NotAPermutation(f"sequence {rho.tolist()} at draw {m}")
        inv = np.argsort(rho)            # new position c holds old draw inv[c]
        out.eta[m] = filtered.eta[m, inv]
        out.w[m] = filtered.w[m, inv]
        out.mu[m] = filtered.mu[m, inv]
        out.sigma[m] = filtered.sigma[m, inv]
        out.S[m] = rho[filtered.S[m] - 1]
    return out


def _draw_factors(sigma: np.ndarray):
    """Inverse Cholesky factors and log determinants for one draw's (K, L)
    covariance stack."""
    chol = np.linalg.cholesky(sigma)
    inv_chol = np.linalg.inv(chol)
    logdet = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=-2, axis2=-1)), axis=-1)
    return inv_chol, logdet


def posterior_classification(data: DataSet, relabeled: RelabeledChain):
    """Average posterior classification probabilities over relabeled draws.

    t[i, k] averages eta_k p_k(y_i) / sum_j eta_j p_j(y_i); the point
    assignment takes the row argmax with ties toward the smaller cluster.
    """
    if relabeled.M == 0:
        raise ValueError("need at least one relabeled draw")
    n = data.n
    k = relabeled.K0_hat
    t = np.zeros((n, k))
    for m in range(relabeled.M):
        inv_chol, logdet = _draw_factors(relabeled.sigma[m])
        with np.errstate(divide="ignore"):
            logw = np.log(relabeled.w[m])
            log_eta = np.log(relabeled.eta[m])
        clus, _ = kernels.cluster_logdens(data.y, logw, relabeled.mu[m],
                                          inv_chol, logdet)
        logpost = log_eta[None, :] + clus
        mx = logpost.max(axis=1, keepdims=True)
        if not np.all(np.isfinite(mx)):
            raise AllZeroLikelihood("zero posterior mass in classification")
        p = np.exp(logpost - mx)
        t += p / p.sum(axis=1, keepdims=True)
    t /= relabeled.M
    s_hat = np.argmax(t, axis=1).astype(np.int64) + 1
    return t, s_hat


def frequency_assignment(relabeled: RelabeledChain) -> np.ndarray:
    """Alternative point assignment: per observation, the relabeled cluster
    visited most often (ties toward the smaller label)."""
    k = relabeled.K0_hat
    n = relabeled.S.shape[1]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = np.argmax(np.bincount(relabeled.S[:, i], minlength=k + 1)[1:]) + 1
    return out


def similarity_matrix(chain) -> np.ndarray:
    """Co-clustering probabilities P(S_i = S_j | data) over all stored
    draws; relabeling-invariant, so no identification is needed."""
    S = np.asarray(chain.S)
    if S.ndim != 2 or S.shape[0] == 0:
        raise ValueError("need at least one stored draw")
    n = S.shape[1]
    counts = np.zeros((n, n), dtype=np.int64)
    for m in range(S.shape[0]):
        counts += S[m, :, None] == S[m, None, :]
    return counts / S.shape[0]


def posterior_entropy(t: np.ndarray) -> float:
    """Posterior expected classification entropy; zero means unambiguous."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(t > 0, t * np.log(t), 0.0)
    return float(-terms.sum())


@dataclass
class IdentifiedModel:
    """Result of the full identification pipeline."""

    K0_hat: int
    M0: int                   # sweeps with K0_hat non-empty clusters
    M0_rho: float             # fraction of those dropped as non-permutations
    t: np.ndarray             # (N, K0_hat) classification probabilities
    S_hat: np.ndarray         # (N,) point assignments in 1..K0_hat
    entropy: float
    relabeled: RelabeledChain
    eta_mean: np.ndarray      # (K0_hat,) posterior means of the weights
    mu_mean: np.ndarray       # (K0_hat, r) posterior means of cluster means
    warnings: list = field(default_factory=list)


def identify(chain, data: DataSet, seed: int = 0,
             assign: str = "posterior") -> IdentifiedModel:
    """Run the whole pipeline on one stored chain.

    ``assign`` picks the point-assignment rule: "posterior" (argmax of the
    averaged classification probabilities, the default) or "frequency"
    (most-visited relabeled cluster).
    """
    K0_hat = estimate_K0(chain.k0_trace)
    filtered = filter_draws(chain, K0_hat)
    rhos = cluster_point_process(stacked_functionals(filtered), K0_hat, seed)
    kept, m0_rho = permutation_filter(rhos)
    if kept.size == 0:
        raise NoMatchingDraws("every classification sequence failed the "
                              "permutation check; clusters are unresolved")
    warnings = []
    if m0_rho > 0.1:
        warnings.append(
            f"{m0_rho:.1%} of classification sequences are not permutations; "
            "point-process clusters overlap (K0_hat may be too large)")
    relabeled = relabel(filtered.subset(kept), rhos[kept])
    t, s_hat = posterior_classification(data, relabeled)
    if assign == "frequency":
        s_hat = frequency_assignment(relabeled)
    elif assign != "posterior":
        raise ValueError(f"unknown assignment rule {assign!r}")
    functional = np.einsum("mkl,mklr->mkr", relabeled.w, relabeled.mu)
    return IdentifiedModel(
        K0_hat=K0_hat, M0=filtered.M0, M0_rho=m0_rho, t=t, S_hat=s_hat,
        entropy=posterior_entropy(t), relabeled=relabeled,
        eta_mean=relabeled.eta.mean(axis=0), mu_mean=functional.mean(axis=0),
        warnings=warnings)
