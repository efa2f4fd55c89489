"""Sparse hierarchical mixture-of-mixtures clustering by Gibbs sampling."""

from .model import (DataSet, FixedHyperparameters, MixtureParams, Proportions,
                    Variant, data_summaries, derive_hyperparameters,
                    theta_dimension)
from .postprocess import IdentifiedModel, identify
from .rng import RandomSeed, make_rng
from .sampler import ChainConfig, ChainOutput, run_chain

__version__ = "0.1.0"

__all__ = [
    "ChainConfig", "ChainOutput", "DataSet", "FixedHyperparameters",
    "IdentifiedModel", "MixtureParams", "Proportions", "RandomSeed",
    "Variant", "data_summaries", "derive_hyperparameters", "identify",
    "make_rng", "run_chain", "theta_dimension", "__version__",
]
