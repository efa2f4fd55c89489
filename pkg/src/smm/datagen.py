"""Ground-truth data generators for the simulation experiments.

Setup I: 800 points from an eight-component planar normal mixture forming
four clusters (triangle, L, cross, ellipse).  Setup II: 300 points from
three equal spherical components of which the lower two merge into one data
cluster.  The SAL generator produces skewed, comet-tailed clusters via the
normal variance-mean mixture representation with an Exp(1) mixing variable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DataSet, data_summaries
from .rng import cholesky, make_rng

# generators draw from their own stream so experiment code can reuse the
# plain seed for the chain without coupling the two
_DATA_STREAM = 9


@dataclass(frozen=True)
class GeneratorSpec:
    """Finite mixture ground truth: per-component Gaussian (or SAL) pieces
    and the map from generating components to true data clusters."""

    means: np.ndarray                 # (C, r)
    covs: np.ndarray                  # (C, r, r)
    weights: np.ndarray               # (C,)
    cluster_of_component: np.ndarray  # (C,) labels in 1..K_true
    skews: np.ndarray | None = None   # (C, r), SAL only

    def __post_init__(self):
        c = self.means.shape[0]
        if not (self.covs.shape[0] == self.weights.shape[0]
                == self.cluster_of_component.shape[0] == c):
            raise ValueError("component count mismatch across fields")
        if abs(self.weights.sum() - 1.0) > 1e-12 or np.any(self.weights < 0):
            raise ValueError("weights must form a simplex vector")
        k = int(self.cluster_of_component.max())
        if set(np.unique(self.cluster_of_component)) != set(range(1, k + 1)):
            raise ValueError("cluster map must cover 1..K_true")

    @property
    def n_components(self) -> int:
        return self.means.shape[0]


def _spec(means, covs, weights, cluster_map, skews=None) -> GeneratorSpec:
    return GeneratorSpec(
        means=np.asarray(means, dtype=float),
        covs=np.asarray(covs, dtype=float),
        weights=np.asarray(weights, dtype=float),
        cluster_of_component=np.asarray(cluster_map, dtype=np.int64),
        skews=None if skews is None else np.asarray(skews, dtype=float))


def sample_gaussian_mixture(spec: GeneratorSpec, n: int, seed: int):
    """Draw n points; returns (DataSet, cluster labels, component labels)."""
    rng = make_rng(seed, stream=_DATA_STREAM)
    comp = rng.choice(spec.n_components, size=n, p=spec.weights)
    z = rng.standard_normal((n, spec.means.shape[1]))
    chols = np.stack([cholesky(c) for c in spec.covs])
    y = spec.means[comp] + np.einsum("nij,nj->ni", chols[comp], z)
    return (data_summaries(y), spec.cluster_of_component[comp],
            comp.astype(np.int64) + 1)


def sample_sal_mixture(spec: GeneratorSpec, n: int, seed: int):
    """Draw n points from a mixture of shifted asymmetric Laplace components
    via y = mu + W*skew + sqrt(W)*chol(cov)z with W ~ Exp(1), so
    E(y) = mu + skew and Cov(y) = cov + skew skew'."""
    if spec.skews is None:
        raise ValueError("spec.skews is required for a SAL mixture")
    rng = make_rng(seed, stream=_DATA_STREAM)
    comp = rng.choice(spec.n_components, size=n, p=spec.weights)
    wmix = rng.exponential(size=n)
    z = rng.standard_normal((n, spec.means.shape[1]))
    chols = np.stack([cholesky(c) for c in spec.covs])
    y = (spec.means[comp] + wmix[:, None] * spec.skews[comp]
         + np.sqrt(wmix)[:, None] * np.einsum("nij,nj->ni", chols[comp], z))
    return (data_summaries(y), spec.cluster_of_component[comp],
            comp.astype(np.int64) + 1)


# --- setup I: four non-Gaussian clusters from eight components -------------

SETUP_I_MEANS = np.array([
    [6.0, 1.5], [4.0, 6.0], [8.0, 6.0], [22.5, 1.5],
    [20.0, 8.0], [22.0, 31.0], [22.0, 31.0], [6.5, 29.0]])

SETUP_I_COVS = np.array([
    [[4.84, 0.0], [0.0, 2.89]],
    [[3.61, 5.05], [5.05, 14.44]],
    [[3.61, -5.05], [-5.05, 14.44]],
    [[12.25, 0.0], [0.0, 3.24]],
    [[3.24, 0.0], [0.0, 12.25]],
    [[14.44, 0.0], [0.0, 2.25]],
    [[2.25, 0.0], [0.0, 17.64]],
    [[2.25, 4.2], [4.2, 16.0]]])

SETUP_I_WEIGHTS = np.array([1 / 12, 1 / 12, 1 / 12, 1 / 8, 1 / 8, 1 / 8, 1 / 8, 1 / 4])

# components 1-3 form the triangle, 4-5 the L shape, 6-7 the cross and 8 the
# ellipse
SETUP_I_CLUSTER_MAP = np.array([1, 1, 1, 2, 2, 3, 3, 4])

SETUP_I_N = 800


def setup_I_spec() -> GeneratorSpec:
    return _spec(SETUP_I_MEANS, SETUP_I_COVS, SETUP_I_WEIGHTS, SETUP_I_CLUSTER_MAP)


def setup_I(seed: int):
    """One setup-I dataset: (DataSet of 800 x 2, cluster labels in 1..4,
    component labels in 1..8)."""
    return sample_gaussian_mixture(setup_I_spec(), SETUP_I_N, seed)


# --- setup II: three components, two distinguishable clusters --------------

SETUP_II_MEANS = np.array([[2.0, 2.0], [4.2, 4.2], [7.8, 7.8]])
SETUP_II_N = 300


def setup_II_spec() -> GeneratorSpec:
    covs = np.stack([np.eye(2)] * 3)
    # the two lower components overlap into a single data cluster
    return _spec(SETUP_II_MEANS, covs, np.full(3, 1 / 3), [1, 1, 2])


def setup_II(seed: int):
    """One setup-II dataset: (DataSet of 300 x 2, cluster labels in 1..2,
    component labels in 1..3)."""
    return sample_gaussian_mixture(setup_II_spec(), SETUP_II_N, seed)


# --- SAL demo ----------------------------------------------------------------

def default_sal_spec() -> GeneratorSpec:
    """Illustrative two-cluster SAL mixture with comet-like tails.  The
    published experiment defers its exact parameters to an external source,
    so this default is a stand-in of the same character, not a reproduction."""
    return _spec(
        means=[[0.0, 0.0], [8.0, 0.0]],
        covs=[np.eye(2), np.eye(2)],
        weights=[0.5, 0.5],
        cluster_map=[1, 2],
        skews=[[3.0, 3.0], [-3.0, 3.0]])
