"""Blocked Gibbs sampler over the augmented two-level mixture state.

One sweep runs the steps in a fixed order: cluster weights given the
assignments, cluster assignments with the subcomponent labels integrated out,
subcomponent labels, then per-cluster subcomponent weights, precisions and
means, and finally the per-cluster random hyperparameters (shrinkage factors,
scale matrix, cluster center).  Any scan order is a valid Gibbs sampler; the
order is pinned for reproducibility.

Parameters of empty clusters and subcomponents are redrawn from their priors
every sweep (that is what the full conditionals reduce to); they are stored
as-is and removal is postprocessing's job.

The classification steps sample in log space throughout (Gumbel-max over the
log posterior), so arbitrarily small weights are handled exactly; a sweep
aborts with :class:`AllZeroLikelihood` rather than assigning by noise when
every cluster has zero posterior mass for some observation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import AllZeroLikelihood, SamplerError, SmmError
from .kmeans import kmeans
from .model import DataSet, FixedHyperparameters, MixtureParams, Variant
from .postprocess import count_nonempty
from .rng import (RandomSeed, cholesky, make_rng, sample_dirichlet,
                  sample_gig, symmetrize, wishart_bartlett, wishart_scale_chol)


@dataclass(frozen=True)
class ChainConfig:
    K: int = 10
    L: int = 4
    burnin: int = 4000
    iterations: int = 4000
    thin: int = 1
    seed: RandomSeed = RandomSeed(0, 0)

    def __post_init__(self):
        if self.K < 1 or self.L < 1 or self.iterations < 1:
            raise ValueError("K, L and iterations must be >= 1")
        if self.burnin < 0 or self.thin < 1:
            raise ValueError("burnin must be >= 0 and thin >= 1")


@dataclass
class ChainOutput:
    """Stored post-burn-in draws, one record per kept sweep."""

    eta: np.ndarray          # (M, K)
    w: np.ndarray            # (M, K, L)
    mu: np.ndarray           # (M, K, L, r)
    sigma: np.ndarray        # (M, K, L, r, r)
    b0: np.ndarray           # (M, K, r)
    lam: np.ndarray          # (M, K, r)
    S: np.ndarray            # (M, N) labels in 1..K
    k0_trace: np.ndarray     # (M,) non-empty cluster counts
    sweep_index: np.ndarray  # (M,) global sweep numbers
    config: ChainConfig | None = None

    @property
    def n_stored(self) -> int:
        return self.eta.shape[0]

    @property
    def K(self) -> int:
        return self.eta.shape[1]

    @property
    def L(self) -> int:
        return self.w.shape[2]

    @property
    def r(self) -> int:
        return self.mu.shape[3]

    def params_at(self, m: int) -> MixtureParams:
        return MixtureParams(eta=self.eta[m], w=self.w[m],
                             mu=self.mu[m], sigma=self.sigma[m])


# ---------------------------------------------------------------------------
# categorical draws
# ---------------------------------------------------------------------------

def _gumbel_argmax(logp: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per row of unnormalized log probabilities."""
    if np.isnan(logp).any():
        raise AllZeroLikelihood("NaN in classification log probabilities")
    dead = np.all(np.isneginf(logp), axis=1)
    if dead.any():
        raise AllZeroLikelihood(
            f"zero posterior mass for observation(s) {np.nonzero(dead)[0][:5]}")
    return np.argmax(logp + rng.gumbel(size=logp.shape), axis=1)


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def init_allocations(data: DataSet, K: int, L: int, rng: np.random.Generator):
    """Starting allocations: K-means into K clusters, then K-means into L
    subcomponents within each cluster; clusters with fewer than L points get
    subcomponent labels round-robin.  Labels are 1-based."""
    if data.n < K:
        raise ValueError(f"need N >= K, got N={data.n}, K={K}")
    top, _, _ = kmeans(data.y, K, rng, n_init=5, max_iter=100)
    S = top.astype(np.int64) + 1
    I = np.empty(data.n, dtype=np.int64)
    for k in range(1, K + 1):
        members = np.nonzero(S == k)[0]
        if members.size == 0:
            continue
        if members.size < L:
            I[members] = np.arange(members.size) % L + 1
        else:
            sub, _, _ = kmeans(data.y[members], L, rng, n_init=5, max_iter=100)
            I[members] = sub + 1
    return S, I


def _initial_state(data: DataSet, hyp: FixedHyperparameters, K: int, L: int,
                   rng: np.random.Generator) -> "_GibbsState":
    """Deterministic moment-based parameter start from the K-means partition.

    The first sweep immediately redraws everything from the full
    conditionals; this start only has to be sensible and positive definite.
    """
    S, I = init_allocations(data, K, L, rng)
    r = data.r
    n = data.n
    counts = np.bincount(S, minlength=K + 1)[1:]
    sigma_fallback = hyp.C0_fixed / (hyp.c0 - (r + 1) / 2.0)

    b0 = np.tile(hyp.m0, (K, 1))
    mu = np.empty((K, L, r))
    sigma = np.empty((K, L, r, r))
    w = np.empty((K, L))
    for k in range(K):
        members = S == k + 1
        if members.any():
            b0[k] = data.y[members].mean(axis=0)
        for l in range(L):
            sub = members & (I == l + 1)
            nkl = int(sub.sum())
            mu[k, l] = data.y[sub].mean(axis=0) if nkl else b0[k]
            sig = sigma_fallback
            if nkl >= r + 2:
                cand = np.cov(data.y[sub], rowvar=False).reshape(r, r)
                try:
                    cholesky(cand)
                    sig = cand
                except SmmError:
                    pass
            sigma[k, l] = sig
            w[k, l] = (nkl + hyp.d0)
        w[k] /= w[k].sum()

    eta = (counts + hyp.e0) / (n + K * hyp.e0)
    state = _GibbsState(
        eta=eta, log_eta=np.log(eta), w=w, logw=np.log(w), mu=mu,
        prec=np.linalg.inv(sigma), C0=np.tile(hyp.C0_fixed, (K, 1, 1)),
        b0=b0, lam=np.ones((K, r)), S=S, I=I)
    state.refresh_factors()
    return state


@dataclass
class _GibbsState:
    eta: np.ndarray
    log_eta: np.ndarray
    w: np.ndarray
    logw: np.ndarray
    mu: np.ndarray
    prec: np.ndarray          # subcomponent precisions, (K, L, r, r)
    C0: np.ndarray
    b0: np.ndarray
    lam: np.ndarray
    S: np.ndarray
    I: np.ndarray
    factor: np.ndarray = None       # chol(prec)^T per (k, l)
    logdet_sigma: np.ndarray = None

    def refresh_factors(self):
        pc = np.linalg.cholesky(symmetrize(self.prec))
        self.factor = np.ascontiguousarray(np.swapaxes(pc, -1, -2))
        d = np.diagonal(pc, axis1=-2, axis2=-1)
        self.logdet_sigma = -2.0 * np.sum(np.log(d), axis=-1)

    def sigma(self) -> np.ndarray:
        return symmetrize(np.linalg.inv(self.prec))


# ---------------------------------------------------------------------------
# individual Gibbs steps (the spec surface; the fused sweep below shares the
# same posterior-parameter helpers)
# ---------------------------------------------------------------------------

def step_sample_eta(S, K: int, e0: float, rng: np.random.Generator):
    """Cluster weights given assignments: Dirichlet(e0 + N_1..e0 + N_K)."""
    counts = np.bincount(np.asarray(S, dtype=np.int64), minlength=K + 1)[1:]
    return sample_dirichlet(e0 + counts, rng)


def step_classify_clusters(y, eta, params: MixtureParams,
                           rng: np.random.Generator) -> np.ndarray:
    """Cluster assignments with subcomponent labels integrated out."""
    inv_chol, logdet = params.factors()
    with np.errstate(divide="ignore"):
        logw = np.log(params.w)
        log_eta = np.log(np.asarray(eta, dtype=float))
    clus, _ = kernels.cluster_logdens(np.atleast_2d(np.asarray(y, float)),
                                      logw, params.mu, inv_chol, logdet)
    return _gumbel_argmax(log_eta[None, :] + clus, rng) + 1


def step_classify_subcomponents(y, S, params: MixtureParams,
                                rng: np.random.Generator) -> np.ndarray:
    """Subcomponent labels within each observation's assigned cluster."""
    inv_chol, logdet = params.factors()
    with np.errstate(divide="ignore"):
        logw = np.log(params.w)
    y2 = np.atleast_2d(np.asarray(y, float))
    _, comp = kernels.cluster_logdens(y2, logw, params.mu, inv_chol, logdet)
    S = np.asarray(S, dtype=np.int64)
    rows = comp[np.arange(y2.shape[0]), S - 1, :]
    return _gumbel_argmax(rows, rng) + 1


def _subcomponent_counts(S, I, K: int, L: int):
    flat = (np.asarray(S, np.int64) - 1) * L + (np.asarray(I, np.int64) - 1)
    return flat, np.bincount(flat, minlength=K * L).reshape(K, L)


def step_sample_weights(I, S, k: int, L: int, d0: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Subcomponent weights of cluster k: Dirichlet(d0 + N_k1..d0 + N_kL)."""
    S = np.asarray(S, np.int64)
    I = np.asarray(I, np.int64)
    counts = np.bincount(I[S == k], minlength=L + 1)[1:]
    return sample_dirichlet(d0 + counts, rng)


def _sigma_posterior(c0: float, C0k: np.ndarray, scatter: np.ndarray,
                     counts) -> tuple:
    """Shape and rate of the precision full conditional, batched over the
    leading axes of ``scatter``: shape c0 + n/2, rate C0 + scatter/2."""
    return c0 + 0.5 * np.asarray(counts, float), C0k + 0.5 * scatter


def step_sample_sigmas(y, S, I, k: int, mus_k: np.ndarray, C0k: np.ndarray,
                       c0: float, rng: np.random.Generator) -> np.ndarray:
    """Covariances of cluster k's subcomponents via Wishart precision draws."""
    y = np.atleast_2d(np.asarray(y, float))
    S = np.asarray(S, np.int64)
    I = np.asarray(I, np.int64)
    L, r = mus_k.shape
    scatter = np.zeros((L, r, r))
    counts = np.zeros(L)
    for l in range(L):
        rows = y[(S == k) & (I == l + 1)]
        counts[l] = rows.shape[0]
        if rows.shape[0]:
            d = rows - mus_k[l]
            scatter[l] = d.T @ d
    shape, rate = _sigma_posterior(c0, C0k, scatter, counts)
    prec = wishart_bartlett(shape, wishart_scale_chol(rate), rng)
    return symmetrize(np.linalg.inv(symmetrize(prec)))


def _mu_posterior(btilde_inv_diag: np.ndarray, b0k: np.ndarray,
                  prec: np.ndarray, ysum: np.ndarray, counts) -> tuple:
    """Mean and covariance of the subcomponent-mean full conditional,
    batched over leading axes.  ``ysum`` is sum of assigned rows (zero when
    empty, which reproduces the prior fallback)."""
    r = b0k.shape[-1]
    idx = np.arange(r)
    post_prec = np.asarray(counts, float)[..., None, None] * prec
    post_prec[..., idx, idx] += btilde_inv_diag
    cov = symmetrize(np.linalg.inv(post_prec))
    rhs = btilde_inv_diag * b0k + np.einsum("...ij,...j->...i", prec, ysum)
    return np.einsum("...ij,...j->...i", cov, rhs), cov


def step_sample_mus(y, S, I, k: int, sigmas_k: np.ndarray, b0k: np.ndarray,
                    B0: np.ndarray, lambda_k: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
    """Means of cluster k's subcomponents from their Gaussian conditional."""
    y = np.atleast_2d(np.asarray(y, float))
    S = np.asarray(S, np.int64)
    I = np.asarray(I, np.int64)
    L, r = sigmas_k.shape[0], sigmas_k.shape[1]
    ysum = np.zeros((L, r))
    counts = np.zeros(L)
    for l in range(L):
        rows = y[(S == k) & (I == l + 1)]
        counts[l] = rows.shape[0]
        ysum[l] = rows.sum(axis=0) if rows.shape[0] else 0.0
    prec = symmetrize(np.linalg.inv(sigmas_k))
    btilde_inv = 1.0 / (lambda_k * np.diag(B0))
    mean, cov = _mu_posterior(btilde_inv, b0k, prec, ysum, counts)
    z = rng.standard_normal((L, r))
    return mean + np.einsum("lij,lj->li", np.linalg.cholesky(cov), z)


def step_sample_lambda(mus_k: np.ndarray, b0k: np.ndarray, B0: np.ndarray,
                       L: int, nu: float, rng: np.random.Generator,
                       variant: Variant = Variant.HIERARCHICAL) -> np.ndarray:
    """Per-dimension shrinkage factors from their GIG full conditional."""
    r = b0k.shape[0]
    if variant is Variant.FIXED_C0_LAMBDA1:
        return np.ones(r)
    b = np.sum((mus_k - b0k) ** 2, axis=0) / np.diag(B0)
    return np.asarray(sample_gig(nu - L / 2.0, 2.0 * nu, b, rng), float).reshape(r)


def step_sample_C0(sigmas_k: np.ndarray, g0: float, G0: np.ndarray, c0: float,
                   L: int, rng: np.random.Generator,
                   variant: Variant = Variant.HIERARCHICAL) -> np.ndarray:
    """Cluster scale matrix from its Wishart full conditional."""
    if variant is Variant.FIXED_C0_LAMBDA1:
        return g0 * np.linalg.inv(G0)
    prec = symmetrize(np.linalg.inv(sigmas_k))
    rate = G0 + prec.sum(axis=0)
    return symmetrize(wishart_bartlett(g0 + L * c0, wishart_scale_chol(rate), rng))


def _b0_posterior(M0_inv: np.ndarray, m0: np.ndarray,
                  btilde_inv_diag: np.ndarray, musum: np.ndarray,
                  L: int) -> tuple:
    r = m0.shape[0]
    idx = np.arange(r)
    post_prec = np.broadcast_to(M0_inv, btilde_inv_diag.shape[:-1] + (r, r)).copy()
    post_prec[..., idx, idx] += L * btilde_inv_diag
    cov = symmetrize(np.linalg.inv(post_prec))
    rhs = M0_inv @ m0 + btilde_inv_diag * musum
    return np.einsum("...ij,...j->...i", cov, rhs), cov


def step_sample_b0(mus_k: np.ndarray, lambda_k: np.ndarray, B0: np.ndarray,
                   m0: np.ndarray, M0: np.ndarray,
                   rng: np.random.Generator) -> np.ndarray:
    """Cluster center from its Gaussian full conditional."""
    L = mus_k.shape[0]
    btilde_inv = 1.0 / (lambda_k * np.diag(B0))
    mean, cov = _b0_posterior(np.linalg.inv(M0), m0, btilde_inv,
                              mus_k.sum(axis=0), L)
    return mean + cholesky(cov) @ rng.standard_normal(m0.shape[0])


# ---------------------------------------------------------------------------
# the fused sweep and the chain driver
# ---------------------------------------------------------------------------

def _scatter_and_sums(y: np.ndarray, flat: np.ndarray, mu_assigned: np.ndarray,
                      K: int, L: int):
    """Per-(k,l) scatter around the current means and per-(k,l) data sums."""
    n, r = y.shape
    d = y - mu_assigned
    scatter = np.empty((K, L, r, r))
    for i in range(r):
        for j in range(i + 1):
            s = np.bincount(flat, weights=d[:, i] * d[:, j],
                            minlength=K * L).reshape(K, L)
            scatter[:, :, i, j] = s
            scatter[:, :, j, i] = s
    ysum = np.empty((K, L, r))
    for j in range(r):
        ysum[:, :, j] = np.bincount(flat, weights=y[:, j],
                                    minlength=K * L).reshape(K, L)
    return scatter, ysum


def _sweep(y: np.ndarray, hyp: FixedHyperparameters, K: int, L: int,
           state: _GibbsState, rng: np.random.Generator,
           M0_inv: np.ndarray) -> None:
    n, r = y.shape
    hier = hyp.variant is Variant.HIERARCHICAL

    # (1a) cluster weights | S
    counts = np.bincount(state.S, minlength=K + 1)[1:]
    state.eta, state.log_eta = sample_dirichlet(hyp.e0 + counts, rng,
                                                return_log=True)

    # (1b) S | eta, theta with subcomponent labels integrated out
    clus, comp = kernels.cluster_logdens(y, state.logw, state.mu,
                                         state.factor, state.logdet_sigma)
    state.S = _gumbel_argmax(state.log_eta[None, :] + clus, rng) + 1

    # (2a) I | S, theta
    rows = comp[np.arange(n), state.S - 1, :]
    state.I = _gumbel_argmax(rows, rng) + 1

    flat, n_kl = _subcomponent_counts(state.S, state.I, K, L)

    # (2b-i) subcomponent weights | I, S
    alpha = hyp.d0 + n_kl
    g = rng.standard_gamma(alpha)
    state.w = g / g.sum(axis=1, keepdims=True)
    state.logw = np.log(g) - np.log(g.sum(axis=1, keepdims=True))

    # (2b-ii) precisions | allocations, mu
    mu_assigned = state.mu[state.S - 1, state.I - 1]
    scatter, ysum = _scatter_and_sums(y, flat, mu_assigned, K, L)
    shape, rate = _sigma_posterior(hyp.c0, state.C0[:, None, :, :], scatter, n_kl)
    state.prec = symmetrize(wishart_bartlett(shape, wishart_scale_chol(rate), rng))

    # (2b-iii) means | allocations, precisions
    btilde_inv = 1.0 / (state.lam * np.diag(hyp.B0))          # (K, r)
    mean, cov = _mu_posterior(btilde_inv[:, None, :], state.b0[:, None, :],
                              state.prec, ysum, n_kl)
    z = rng.standard_normal((K, L, r))
    state.mu = mean + np.einsum("klij,klj->kli", np.linalg.cholesky(cov), z)

    # (3a) shrinkage factors | mu, b0
    if hier:
        b = np.sum((state.mu - state.b0[:, None, :]) ** 2, axis=1) / np.diag(hyp.B0)
        state.lam = sample_gig(hyp.nu - L / 2.0, 2.0 * hyp.nu, b, rng)

    # (3b) cluster scale matrices | precisions
    if hier:
        rate = hyp.G0[None, :, :] + state.prec.sum(axis=1)
        state.C0 = symmetrize(wishart_bartlett(hyp.g0 + L * hyp.c0,
                                               wishart_scale_chol(rate), rng))

    # (3c) cluster centers | mu, lambda
    btilde_inv = 1.0 / (state.lam * np.diag(hyp.B0))
    mean, cov = _b0_posterior(M0_inv, hyp.m0, btilde_inv,
                              state.mu.sum(axis=1), L)
    z = rng.standard_normal((K, r))
    state.b0 = mean + np.einsum("kij,kj->ki", np.linalg.cholesky(cov), z)

    state.refresh_factors()


def run_chain(data: DataSet, hyp: FixedHyperparameters,
              cfg: ChainConfig) -> ChainOutput:
    """Run one chain: initialize, burn in, store every thin-th sweep.

    Deterministic given ``cfg.seed``; sweep errors are re-raised as
    :class:`SamplerError` carrying the failing sweep index.
    """
    if hyp.r != data.r:
        raise ValueError(f"hyperparameters are {hyp.r}-dimensional, "
                         f"data is {data.r}-dimensional")
    rng = make_rng(cfg.seed.seed, cfg.seed.stream)
    K, L = cfg.K, cfg.L
    state = _initial_state(data, hyp, K, L, rng)
    M0_inv = symmetrize(np.linalg.inv(hyp.M0))

    n_store = cfg.iterations // cfg.thin
    r = data.r
    out = ChainOutput(
        eta=np.empty((n_store, K)),
        w=np.empty((n_store, K, L)),
        mu=np.empty((n_store, K, L, r)),
        sigma=np.empty((n_store, K, L, r, r)),
        b0=np.empty((n_store, K, r)),
        lam=np.empty((n_store, K, r)),
        S=np.empty((n_store, data.n), dtype=np.int32),
        k0_trace=np.empty(n_store, dtype=np.int32),
        sweep_index=np.empty(n_store, dtype=np.int64),
        config=cfg,
    )
    stored = 0
    for sweep in range(1, cfg.burnin + cfg.iterations + 1):
        try:
            _sweep(data.y, hyp, K, L, state, rng, M0_inv)
        except SmmError as exc:
            raise SamplerError(sweep, exc) from exc
        kept = sweep - cfg.burnin
        if kept >= 1 and kept % cfg.thin == 0 and stored < n_store:
            out.eta[stored] = state.eta
            out.w[stored] = state.w
            out.mu[stored] = state.mu
            out.sigma[stored] = state.sigma()
            out.b0[stored] = state.b0
            out.lam[stored] = state.lam
            out.S[stored] = state.S
            out.k0_trace[stored] = count_nonempty(state.S, K)
            out.sweep_index[stored] = sweep
            stored += 1
    return out
