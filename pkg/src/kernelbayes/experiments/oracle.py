"""Statistical convergence checks against exact finite-state Bayes.

Two suites, both over discrete ground truth where the exact answer is
computable:

* beta-sum: with the n^{-1/2} regularization schedule, the thresholded
  prior-to-joint weights should approach total mass 1 as the sample grows.
  A fixed large regularizer is run as a negative control and must be flagged.
* posterior: expectations of state indicators under the fitted thresholded
  regressor should converge to the true discrete posterior.

Thresholds here were frozen from a reference run and are asserted by the
acceptance suite; medians over seeds keep single unlucky draws from flipping
the verdict.
"""
from __future__ import annotations

import numpy as np

from ..embedding import compute_beta
from ..kernels import gaussian
from ..posterior import DiscreteModel, exact_discrete_posterior, fit_threshold
from ..rng import PortableRng
from .config import OracleCheckConfig

BETA_MEDIAN_MAX = 0.1
POSTERIOR_MEDIAN_MAX = 0.05
MONOTONE_SLACK = 1e-3

_BETA_SUPPORT = np.arange(5.0)
_BETA_PRIOR = np.array([0.1, 0.15, 0.2, 0.25, 0.3])
_BETA_BANDWIDTH = 1.0
_MODEL_SEED = 20240819


def sample_discrete(pmf: np.ndarray, size: int, rng: PortableRng) -> np.ndarray:
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.uniform(size=(size,)), side="right")


def beta_sum_errors(n: int, seeds: int, lam: float) -> np.ndarray:
    """|sum beta_plus - 1| per seed for a size-n sample from the 5-state setup."""
    kernel = gaussian(_BETA_BANDWIDTH)
    gram_support = kernel.gram(_BETA_SUPPORT, _BETA_SUPPORT)
    errors = np.empty(seeds)
    for s in range(seeds):
        rng = PortableRng((101, n, s))
        idx = sample_discrete(np.full(5, 0.2), n, rng)
        sample = _BETA_SUPPORT[idx]
        gram_y = kernel.gram(sample, sample)
        gram_prior = gram_support.entries[idx]
        beta = compute_beta(gram_y, gram_prior, _BETA_PRIOR, lam)
        errors[s] = abs(float(beta.thresholded.sum()) - 1.0)
    return errors


def reference_discrete_model() -> DiscreteModel:
    rng = PortableRng(_MODEL_SEED)
    prior = 0.2 + rng.uniform(size=(3,))
    prior /= prior.sum()
    lik = 0.2 + rng.uniform(size=(3, 4))
    lik /= lik.sum(axis=1, keepdims=True)
    return DiscreteModel(
        x_states=np.arange(4.0), y_states=np.arange(3.0),
        prior=prior, likelihood=lik,
    )


def sample_joint(model: DiscreteModel, n: int, rng: PortableRng):
    """Draw (y, x) index pairs: y uniform over states, x from its likelihood row."""
    k = model.y_states.shape[0]
    y_idx = sample_discrete(np.full(k, 1.0 / k), n, rng)
    u = rng.uniform(size=(n,))
    x_idx = np.empty(n, dtype=int)
    for j in range(k):
        mask = y_idx == j
        cdf = np.cumsum(model.likelihood[j])
        cdf[-1] = 1.0
        x_idx[mask] = np.searchsorted(cdf, u[mask], side="right")
    return y_idx, x_idx


def posterior_indicator_errors(n: int, seeds: int, lambda_scale: float) -> np.ndarray:
    """Worst indicator-expectation error over all (x, y) pairs, per seed."""
    model = reference_discrete_model()
    kernel_x = gaussian(1.0)
    kernel_y = gaussian(1.0)
    exact = np.stack([
        exact_discrete_posterior(model, x) for x in model.x_states
    ])
    errors = np.empty(seeds)
    for s in range(seeds):
        rng = PortableRng((202, n, s))
        y_idx, x_idx = sample_joint(model, n, rng)
        sample_y = model.y_states[y_idx]
        sample_x = model.x_states[x_idx]
        lam = lambda_scale * n ** -0.5
        gram_y = kernel_y.gram(sample_y, sample_y)
        gram_prior = kernel_y.gram(sample_y, model.y_states)
        beta = compute_beta(gram_y, gram_prior, model.prior, lam)
        regressor = fit_threshold(sample_x, sample_y, beta, kernel_x, kernel_y, lam)
        worst = 0.0
        active_y_idx = y_idx[beta.active]
        for xi, x in enumerate(model.x_states):
            emb = regressor.predict(x)
            for j in range(3):
                est = float(emb.weights[active_y_idx == j].sum())
                worst = max(worst, abs(est - exact[xi, j]))
        errors[s] = worst
    return errors


def run_oracle_check(config: OracleCheckConfig) -> dict:
    """Run both suites (plus the negative control) and report pass/fail."""
    beta_medians = {}
    for n in config.beta_sample_sizes:
        lam = config.lambda_scale * n ** -0.5
        beta_medians[n] = float(np.median(beta_sum_errors(n, config.beta_seeds, lam)))
    sizes = config.beta_sample_sizes
    beta_decreasing = all(
        beta_medians[sizes[i + 1]] <= beta_medians[sizes[i]] + MONOTONE_SLACK
        for i in range(len(sizes) - 1)
    )
    beta_passed = beta_decreasing and beta_medians[sizes[-1]] < BETA_MEDIAN_MAX

    report = {
        "schema_version": 1,
        "beta": {
            "medians": {str(n): beta_medians[n] for n in sizes},
            "decreasing": beta_decreasing,
            "final_below_threshold": beta_medians[sizes[-1]] < BETA_MEDIAN_MAX,
            "threshold": BETA_MEDIAN_MAX,
            "passed": beta_passed,
        },
    }

    if config.include_negative_control:
        control_n = sizes[-1]
        control = float(np.median(beta_sum_errors(control_n, config.beta_seeds, 0.5)))
        flagged = control >= BETA_MEDIAN_MAX
        report["beta_negative_control"] = {
            "lam": 0.5,
            "median": control,
            "flagged": flagged,
        }
    else:
        flagged = True

    post_medians = {}
    for n in config.posterior_sample_sizes:
        post_medians[n] = float(np.median(
            posterior_indicator_errors(n, config.posterior_seeds, config.lambda_scale)
        ))
    psizes = config.posterior_sample_sizes
    post_decreasing = all(
        post_medians[psizes[i + 1]] <= post_medians[psizes[i]] + MONOTONE_SLACK
        for i in range(len(psizes) - 1)
    )
    post_passed = post_decreasing and post_medians[psizes[-1]] <= POSTERIOR_MEDIAN_MAX
    report["posterior"] = {
        "medians": {str(n): post_medians[n] for n in psizes},
        "non_increasing": post_decreasing,
        "final_below_threshold": post_medians[psizes[-1]] <= POSTERIOR_MEDIAN_MAX,
        "threshold": POSTERIOR_MEDIAN_MAX,
        "passed": post_passed,
    }
    report["passed"] = bool(beta_passed and post_passed and flagged)
    return report
