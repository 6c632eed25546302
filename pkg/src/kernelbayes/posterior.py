"""Posterior-embedding estimators.

Three routes from a weighted joint sample to a conditional embedding:

* fit_threshold: vector-valued ridge regression whose per-sample weights are
  the thresholded prior-to-joint weights. Rows with zero weight drop out of
  the system entirely, so the solve runs on the active subset only.
* fit_kregbayes: the same ridge system augmented with supervision pairs
  (anchor point, target state) sharing a single confidence 1/delta. With no
  supervision pairs it reduces to fit_threshold exactly (same code path).
* kbr_squared_weights: the classical squared-regularization weighting, kept
  as a baseline. Its normal-equations system is nonsymmetric, so it costs a
  dense matrix product plus an LU solve per query batch.

A small exact-inference oracle over finite state spaces (DiscreteModel) is
included for convergence checks against true Bayes posteriors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import BetaWeights, Embedding
from .errors import DegenerateBeliefError, InputError
from .kernels import KernelSpec, as_point, as_points
from .linalg import condition_estimate, solve_square, spd_factor, spd_solve_factored


@dataclass(frozen=True)
class PosteriorRegressor:
    """Fitted conditional-embedding map x -> Embedding over output points."""

    anchors_x: np.ndarray
    outputs_y: np.ndarray
    inv_weights: np.ndarray
    lam: float
    kernel_x: KernelSpec
    kernel_y: KernelSpec
    system: np.ndarray
    factor: tuple
    n_train: int
    active_count: int
    supervision_count: int

    def predict(self, x) -> Embedding:
        x = as_point(x)
        if x.shape[0] != self.anchors_x.shape[1]:
            raise InputError(
                f"query dimension {x.shape[0]} != anchor dimension {self.anchors_x.shape[1]}"
            )
        k_vec = self.kernel_x.gram(self.anchors_x, x[None, :]).entries[:, 0]
        w = spd_solve_factored(self.factor, k_vec)
        return Embedding(points=self.outputs_y, weights=w, kernel=self.kernel_y)

    def coefficient_matrix(self) -> np.ndarray:
        """(K_X + lam * D)^{-1} in Gram coordinates, for stationarity checks."""
        return spd_solve_factored(self.factor, np.eye(self.system.shape[0]))

    def metadata(self) -> dict:
        return {
            "n_train": self.n_train,
            "active_count": self.active_count,
            "supervision_count": self.supervision_count,
            "system_rows": int(self.system.shape[0]),
            "lam": self.lam,
            "kernel_x": self.kernel_x.to_dict(),
            "kernel_y": self.kernel_y.to_dict(),
            "condition_estimate": condition_estimate(self.system, self.factor),
        }


def _fit(anchors_x, outputs_y, inv_weights, lam, kernel_x, kernel_y,
         n_train, active_count, supervision_count) -> PosteriorRegressor:
    system = kernel_x.gram(anchors_x, anchors_x).entries + lam * np.diag(inv_weights)
    factor = spd_factor(system)
    return PosteriorRegressor(
        anchors_x=anchors_x,
        outputs_y=outputs_y,
        inv_weights=inv_weights,
        lam=lam,
        kernel_x=kernel_x,
        kernel_y=kernel_y,
        system=system,
        factor=factor,
        n_train=n_train,
        active_count=active_count,
        supervision_count=supervision_count,
    )


def _check_training(train_x, train_y, beta: BetaWeights):
    xs = as_points(train_x)
    ys = as_points(train_y)
    if xs.shape[0] != ys.shape[0]:
        raise InputError(f"{xs.shape[0]} inputs but {ys.shape[0]} outputs")
    if beta.raw.shape[0] != xs.shape[0]:
        raise InputError(
            f"{beta.raw.shape[0]} weights for {xs.shape[0]} training pairs"
        )
    return xs, ys


def fit_threshold(train_x, train_y, beta: BetaWeights, kernel_x: KernelSpec,
                  kernel_y: KernelSpec, lam: float) -> PosteriorRegressor:
    """Weighted ridge over the active (positive-weight) training rows.

    The fitted map sends x to an embedding over the active outputs with
    weight vector (K_X + lam * diag(1/beta_plus))^{-1} k_X(anchors, x).
    """
    return fit_kregbayes(train_x, train_y, beta, None, None, kernel_x, kernel_y,
                         lam, delta=1.0)


def fit_kregbayes(train_x, train_y, beta: BetaWeights, supervision_x, supervision_t,
                  kernel_x: KernelSpec, kernel_y: KernelSpec, lam: float,
                  delta: float) -> PosteriorRegressor:
    """Threshold fit augmented with supervision pairs at confidence 1/delta.

    Each supervision pair (anchor, target) contributes a ridge row whose
    diagonal entry is lam/delta; small delta pins the prediction at the anchor
    to (nearly) a point mass on the target. Passing no pairs reproduces
    fit_threshold bit-for-bit.
    """
    xs, ys = _check_training(train_x, train_y, beta)
    if not (lam > 0 and np.isfinite(lam)):
        raise InputError(f"lam must be finite and > 0, got {lam}")
    if not (delta > 0 and np.isfinite(delta)):
        raise InputError(f"delta must be finite and > 0, got {delta}")
    active = beta.active
    if supervision_x is None:
        sup_x = np.zeros((0, xs.shape[1]))
        sup_t = np.zeros((0, ys.shape[1]))
    else:
        sup_x = as_points(supervision_x)
        sup_t = as_points(supervision_t)
        if sup_x.shape[0] != sup_t.shape[0]:
            raise InputError(
                f"{sup_x.shape[0]} supervision anchors but {sup_t.shape[0]} targets"
            )
        if sup_x.shape[1] != xs.shape[1] or sup_t.shape[1] != ys.shape[1]:
            raise InputError("supervision dimensions do not match training dimensions")
    # supervision rows alone can carry the system; only a fully empty one fails
    if active.size == 0 and sup_x.shape[0] == 0:
        raise DegenerateBeliefError("no active training rows: all weights thresholded to zero")
    anchors = np.concatenate([xs[active], sup_x])
    outputs = np.concatenate([ys[active], sup_t])
    inv = np.concatenate([
        1.0 / beta.thresholded[active],
        np.full(sup_x.shape[0], 1.0 / delta),
    ])
    return _fit(anchors, outputs, inv, lam, kernel_x, kernel_y,
                n_train=xs.shape[0], active_count=int(active.size),
                supervision_count=int(sup_x.shape[0]))


def kbr_squared_weights(gram_x, k_vec, beta_raw, delta: float) -> np.ndarray:
    """Classical squared-regularization posterior weights in Gram coordinates.

    w = L K ((L K)^2 + delta I)^{-1} L k_vec with L = diag(beta_raw). The inner
    system is nonsymmetric, hence the LU solve.
    """
    k = np.asarray(gram_x, dtype=float)
    kv = np.asarray(k_vec, dtype=float).reshape(-1)
    b = np.asarray(beta_raw, dtype=float).reshape(-1)
    n = k.shape[0]
    if k.shape != (n, n) or kv.shape[0] != n or b.shape[0] != n:
        raise InputError("gram_x, k_vec and beta_raw sizes disagree")
    if not (delta > 0 and np.isfinite(delta)):
        raise InputError(f"delta must be finite and > 0, got {delta}")
    bk = b[:, None] * k
    system = bk @ bk + delta * np.eye(n)
    c = solve_square(system, b * kv)
    return bk @ c


def kbr_squared_predict(train_x, train_y, beta: BetaWeights, kernel_x: KernelSpec,
                        kernel_y: KernelSpec, x, delta: float) -> Embedding:
    """Posterior embedding at x under the squared-regularization baseline."""
    xs, ys = _check_training(train_x, train_y, beta)
    x = as_point(x)
    k = kernel_x.gram(xs, xs).entries
    kv = kernel_x.gram(xs, x[None, :]).entries[:, 0]
    w = kbr_squared_weights(k, kv, beta.raw, delta)
    return Embedding(points=ys, weights=w, kernel=kernel_y)


@dataclass(frozen=True)
class DiscreteModel:
    """Finite joint model: prior over y states, likelihood rows p(x | y)."""

    x_states: np.ndarray
    y_states: np.ndarray
    prior: np.ndarray
    likelihood: np.ndarray

    def __post_init__(self):
        xs = as_points(self.x_states)
        ys = as_points(self.y_states)
        prior = np.asarray(self.prior, dtype=float).reshape(-1)
        lik = np.asarray(self.likelihood, dtype=float)
        if prior.shape[0] != ys.shape[0]:
            raise InputError("prior length must match the number of y states")
        if lik.shape != (ys.shape[0], xs.shape[0]):
            raise InputError(
                f"likelihood must be ({ys.shape[0]}, {xs.shape[0]}), got {lik.shape}"
            )
        if np.any(prior < 0) or not np.isclose(prior.sum(), 1.0, atol=1e-9):
            raise InputError("prior must be a pmf")
        if np.any(lik < 0) or not np.allclose(lik.sum(axis=1), 1.0, atol=1e-9):
            raise InputError("each likelihood row must be a pmf over x states")
        object.__setattr__(self, "x_states", xs)
        object.__setattr__(self, "y_states", ys)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "likelihood", lik)


def exact_discrete_posterior(model: DiscreteModel, x) -> np.ndarray:
    """True Bayes posterior pmf over model.y_states given an observed x state."""
    x = as_point(x)
    matches = np.flatnonzero(
        np.all(np.isclose(model.x_states, x[None, :], rtol=0.0, atol=1e-12), axis=1)
    )
    if matches.size == 0:
        raise InputError("x is not one of the model's x states")
    joint = model.prior * model.likelihood[:, matches[0]]
    total = float(joint.sum())
    if total <= 0.0:
        raise InputError("observation has zero probability under the model")
    return joint / total


def embed_pmf(pmf, points, kernel: KernelSpec) -> Embedding:
    """Exact embedding of a pmf supported on the given points."""
    p = np.asarray(pmf, dtype=float).reshape(-1)
    pts = as_points(points)
    if p.shape[0] != pts.shape[0]:
        raise InputError("pmf length must match the number of support points")
    if np.any(p < 0) or not np.isclose(p.sum(), 1.0, atol=1e-9):
        raise InputError("pmf must be nonnegative and sum to 1")
    return Embedding(points=pts, weights=p, kernel=kernel)
