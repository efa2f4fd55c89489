"""Model definition: two-level Gaussian mixture densities, data summaries,
the variance-decomposition rule that turns (phi_b, phi_w) into prior scales,
and the allocation-prior analytics used as test oracles.

The model: observations are drawn from a K-component mixture whose component
("cluster") densities are themselves L-component Gaussian mixtures.  Cluster
k has weight eta_k; within it, subcomponent l has weight w_kl, mean mu_kl and
covariance Sigma_kl.  Flattening gives an equivalent K*L Gaussian mixture
with weights eta_k * w_kl, which is the identity the density code must honor
to machine precision.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateData, InvalidCount, InvalidLabel
from .rng import cholesky, chol_logdet

_LOG_2PI = float(np.log(2.0 * np.pi))


class Variant(str, enum.Enum):
    """Estimation variant for the cluster-level hyperpriors.

    HIERARCHICAL draws the per-cluster scale matrix and shrinkage factors
    from their hyperpriors each sweep; FIXED_C0_LAMBDA1 pins the scale matrix
    at its prior mean and the shrinkage factors at one, the setting used for
    heavy-tailed, outlier-rich clusters.
    """

    HIERARCHICAL = "hier"
    FIXED_C0_LAMBDA1 = "fixed"


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DataSet:
    """N x r observation matrix with cached summary statistics."""

    y: np.ndarray            # (N, r)
    cov: np.ndarray          # unbiased sample covariance, (r, r)
    mins: np.ndarray         # per-dimension minimum, (r,)
    maxs: np.ndarray         # per-dimension maximum, (r,)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def r(self) -> int:
        return self.y.shape[1]

    @property
    def midpoint(self) -> np.ndarray:
        """Per-dimension range midpoint (min+max)/2."""
        return 0.5 * (self.mins + self.maxs)


def data_summaries(raw: np.ndarray) -> DataSet:
    """Validate raw data and cache its summary statistics.

    Raises :class:`DegenerateData` for fewer than two rows, non-finite
    entries or a constant column (which would make the prior scales
    singular).
    """
    y = np.atleast_2d(np.asarray(raw, dtype=float))
    if y.shape[0] < 2:
        raise DegenerateData(f"need at least 2 observations, got {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise DegenerateData("data contains non-finite entries")
    mins = y.min(axis=0)
    maxs = y.max(axis=0)
    if np.any(mins == maxs):
        cols = np.nonzero(mins == maxs)[0].tolist()
        raise DegenerateData(f"constant data column(s) {cols}")
    cov = np.cov(y, rowvar=False).reshape(y.shape[1], y.shape[1])
    return DataSet(y=y, cov=cov, mins=mins, maxs=maxs)


# ---------------------------------------------------------------------------
# hyperparameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Proportions:
    """Fractions of total heterogeneity explained between clusters (phi_b)
    and by subcomponent-mean spread within a cluster (phi_w)."""

    phi_b: float
    phi_w: float

    def __post_init__(self):
        for name, v in (("phi_b", self.phi_b), ("phi_w", self.phi_w)):
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie strictly in (0, 1), got {v}")


@dataclass(frozen=True)
class FixedHyperparameters:
    """The fixed prior hyperparameters, all in data units."""

    e0: float                # cluster-weight Dirichlet concentration
    d0: float                # subcomponent-weight Dirichlet concentration
    c0: float                # subcomponent precision Wishart shape
    g0: float                # cluster scale-matrix Wishart shape
    G0_inv: np.ndarray       # inverse rate of the scale-matrix prior (diagonal)
    B0: np.ndarray           # subcomponent-mean spread around cluster center (diagonal)
    m0: np.ndarray           # overall center: data range midpoint
    M0: np.ndarray           # cluster-center spread around m0
    nu: float                # shrinkage-factor gamma shape/rate
    variant: Variant = Variant.HIERARCHICAL

    def __post_init__(self):
        r = self.m0.shape[0]
        if not self.c0 > 2.0 + (r - 1) / 2.0:
            raise ValueError(f"c0 must exceed 2+(r-1)/2 = {2 + (r - 1) / 2}")
        if not self.g0 > (r - 1) / 2.0:
            raise ValueError(f"g0 must exceed (r-1)/2 = {(r - 1) / 2}")
        for name in ("e0", "d0", "nu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("G0_inv", "B0"):
            m = getattr(self, name)
            if m.shape != (r, r):
                raise ValueError(f"{name} must be {r}x{r}")
            if np.any(np.diag(m) <= 0) or np.any(m != np.diag(np.diag(m))):
                raise ValueError(f"{name} must be diagonal with positive entries")

    @property
    def r(self) -> int:
        return self.m0.shape[0]

    @property
    def G0(self) -> np.ndarray:
        """Rate matrix of the cluster scale-matrix prior."""
        return np.diag(1.0 / np.diag(self.G0_inv))

    @property
    def C0_fixed(self) -> np.ndarray:
        """Scale matrix used when the variant pins it: g0 * inv(G0)."""
        return self.g0 * self.G0_inv


def theta_dimension(L: int, r: int) -> int:
    """Dimension of one cluster's parameter block: L-1 + L*r*(r+3)/2."""
    if L < 1 or r < 1:
        raise ValueError("L and r must be >= 1")
    return L - 1 + L * r * (r + 3) // 2


def derive_hyperparameters(data: DataSet, K: int, L: int, props: Proportions,
                           e0: float = 0.001, nu: float = 10.0,
                           variant: Variant = Variant.HIERARCHICAL,
                           ) -> FixedHyperparameters:
    """Variance-decomposition choice of the fixed hyperparameters.

    Splits the diagonal of the sample covariance into a between-cluster part
    (phi_b), a between-subcomponent part (phi_w of the rest) and the
    remainder for the subcomponent covariances; the prior scales are set so
    the prior means of the three variance terms match those fractions.  All
    scales follow the data, so no standardization is needed beforehand.
    """
    if K < 1 or L < 1:
        raise ValueError("K and L must be >= 1")
    r = data.r
    c0 = 2.5 + (r - 1) / 2.0
    g0 = 0.5 + (r - 1) / 2.0
    diag_s = np.diag(np.diag(data.cov))
    G0_inv = (1.0 - props.phi_w) * (1.0 - props.phi_b) \
        * (c0 - (r + 1) / 2.0) / g0 * diag_s
    B0 = props.phi_w * (1.0 - props.phi_b) * diag_s
    d0 = theta_dimension(L, r) / 2.0 + 2.0
    return FixedHyperparameters(
        e0=float(e0), d0=float(d0), c0=c0, g0=g0, G0_inv=G0_inv, B0=B0,
        m0=data.midpoint, M0=10.0 * data.cov, nu=float(nu), variant=variant)


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixtureParams:
    """One full parameter point of the two-level mixture."""

    eta: np.ndarray          # (K,)
    w: np.ndarray            # (K, L)
    mu: np.ndarray           # (K, L, r)
    sigma: np.ndarray        # (K, L, r, r)
    _factors: tuple = field(default=None, repr=False, compare=False)

    @property
    def K(self) -> int:
        return self.eta.shape[0]

    @property
    def L(self) -> int:
        return self.w.shape[1]

    @property
    def r(self) -> int:
        return self.mu.shape[2]

    def factors(self):
        """(inverse-Cholesky factors, log-determinants) of all covariances."""
        if self._factors is None:
            K, L, r = self.K, self.L, self.r
            inv_chol = np.empty((K, L, r, r))
            logdet = np.empty((K, L))
            for k in range(K):
                for l in range(L):
                    C = cholesky(self.sigma[k, l])
                    inv_chol[k, l] = np.linalg.inv(C)
                    logdet[k, l] = chol_logdet(C)
            object.__setattr__(self, "_factors", (inv_chol, logdet))
        return self._factors


def _component_logpdfs(y: np.ndarray, params: MixtureParams) -> np.ndarray:
    """log N(y | mu_kl, Sigma_kl) for all (k, l); y is (N, r) or (r,)."""
    y2 = np.atleast_2d(np.asarray(y, dtype=float))
    inv_chol, logdet = params.factors()
    K, L, r = params.K, params.L, params.r
    out = np.empty((y2.shape[0], K, L))
    for k in range(K):
        for l in range(L):
            z = (y2 - params.mu[k, l]) @ inv_chol[k, l].T
            quad = np.einsum("ni,ni->n", z, z)
            out[:, k, l] = -0.5 * (r * _LOG_2PI + logdet[k, l] + quad)
    return out


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(a - m_safe), axis=axis)) + np.squeeze(m_safe, axis)
    return np.where(np.isfinite(np.squeeze(m, axis)), out, -np.inf)


def cluster_log_density(y, k: int, params: MixtureParams):
    """log of the cluster-k density: logsumexp_l [log w_kl + log N_kl(y)]."""
    comp = _component_logpdfs(y, params)[:, k, :]
    with np.errstate(divide="ignore"):
        logw = np.log(params.w[k])
    out = _logsumexp(logw + comp, axis=1)
    return out if np.ndim(y) > 1 else float(out[0])


def cluster_density(y, k: int, params: MixtureParams):
    """Cluster-k density sum_l w_kl N(y | mu_kl, Sigma_kl)."""
    return np.exp(cluster_log_density(y, k, params))


def mixture_log_density(y, params: MixtureParams):
    """log of the top-level mixture density sum_k eta_k p_k(y)."""
    comp = _component_logpdfs(y, params)
    with np.errstate(divide="ignore"):
        lw = np.log(params.w)[None, :, :] + np.log(params.eta)[None, :, None]
    out = _logsumexp((lw + comp).reshape(comp.shape[0], -1), axis=1)
    return out if np.ndim(y) > 1 else float(out[0])


def mixture_density(y, params: MixtureParams):
    """Mixture density; equals the flat K*L-component evaluation exactly."""
    return np.exp(mixture_log_density(y, params))


def expanded_mixture_log_density(y, params: MixtureParams):
    """Flat evaluation over the K*L expanded components with weights
    eta_k * w_kl; agrees with :func:`mixture_log_density` to 1e-12 relative
    and exists as the independent route for that identity."""
    comp = _component_logpdfs(y, params)
    wtilde = (params.eta[:, None] * params.w).reshape(-1)
    with np.errstate(divide="ignore"):
        lw = np.log(wtilde)[None, :]
    out = _logsumexp(lw + comp.reshape(comp.shape[0], -1), axis=1)
    return out if np.ndim(y) > 1 else float(out[0])


# ---------------------------------------------------------------------------
# allocation prior analytics
# ---------------------------------------------------------------------------

def prior_existing_cluster_prob(nk_minus: int, n: int, K: int, e0: float) -> float:
    """Prior predictive probability of joining a nonempty cluster of current
    size ``nk_minus`` when ``n-1`` observations are already assigned."""
    if not 0 < nk_minus <= n - 1:
        raise InvalidCount(f"need 0 < nk_minus <= n-1, got {nk_minus}, n={n}")
    return (nk_minus + e0) / (n - 1 + e0 * K)


def prior_new_cluster_prob(k0_minus: int, n: int, K: int, e0: float) -> float:
    """Prior predictive probability of opening any currently empty cluster,
    given ``k0_minus`` nonempty ones among the ``n-1`` assigned."""
    if not 0 <= k0_minus <= K:
        raise InvalidCount(f"need 0 <= k0_minus <= K, got {k0_minus}, K={K}")
    return e0 * (K - k0_minus) / (n - 1 + e0 * K)


def log_partition_prior(labels, K: int, e0: float,
                        of_partition: bool = False) -> float:
    """Log marginal prior of a label vector under the symmetric Dirichlet.

    With ``of_partition=True`` returns the prior of the induced partition
    instead, which adds ``log K!/(K-K0)!`` for the K0 nonempty clusters.
    """
    labels = np.asarray(labels)
    if labels.size == 0:
        raise InvalidLabel("empty label vector")
    if labels.min() < 1 or labels.max() > K:
        raise InvalidLabel(f"labels must lie in 1..{K}")
    counts = np.bincount(labels, minlength=K + 1)[1:]
    n = labels.size
    k0 = int(np.count_nonzero(counts))
    out = (math.lgamma(K * e0) - math.lgamma(n + K * e0)
           - k0 * math.lgamma(e0)
           + sum(math.lgamma(c + e0) for c in counts if c > 0))
    if of_partition:
        out += math.lgamma(K + 1) - math.lgamma(K - k0 + 1)
    return out
