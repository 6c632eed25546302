"""Kernel Bayesian inference: posterior embeddings with thresholded weights,
posterior-regularized estimation, and nonparametric state-space filtering."""

from .embedding import BetaWeights, Embedding, compute_beta, embed_empirical, renormalize
from .errors import (
    DecodeDegenerateError,
    DegenerateBeliefError,
    FilterStepError,
    InputError,
    KernelBayesError,
    NumericError,
)
from .kernels import GramMatrix, KernelSpec, gaussian, linear, median_heuristic
from .posterior import (
    DiscreteModel,
    PosteriorRegressor,
    embed_pmf,
    exact_discrete_posterior,
    fit_kregbayes,
    fit_threshold,
    kbr_squared_predict,
    kbr_squared_weights,
)

__version__ = "0.1.0"

__all__ = [
    "BetaWeights", "Embedding", "compute_beta", "embed_empirical", "renormalize",
    "DecodeDegenerateError", "DegenerateBeliefError", "FilterStepError",
    "InputError", "KernelBayesError", "NumericError",
    "GramMatrix", "KernelSpec", "gaussian", "linear", "median_heuristic",
    "DiscreteModel", "PosteriorRegressor", "embed_pmf", "exact_discrete_posterior",
    "fit_kregbayes", "fit_threshold", "kbr_squared_predict", "kbr_squared_weights",
    "__version__",
]
