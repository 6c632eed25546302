"""Parametric Gaussian filters: Kalman, extended, and unscented.

All three share the GaussianBelief/StateSpaceSpec types and a predict-update
step signature. The KF requires explicit transition/observation matrices; the
EKF linearizes the provided nonlinear maps at the current estimate; the UKF
propagates scaled sigma points (Merwe weights, alpha=1e-3, beta=2, kappa=0).
Covariances are symmetrized after every update to stop drift.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import InputError, NumericError
from .linalg import JITTER_SCALE

UKF_ALPHA = 1e-3
UKF_BETA = 2.0
UKF_KAPPA = 0.0


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        cov = np.asarray(self.cov, dtype=float)
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise InputError(f"covariance must be ({d}, {d}), got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InputError("belief contains non-finite values")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise InputError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))


@dataclass(frozen=True)
class StateSpaceSpec:
    """Dynamics x' = f(x) + N(0, Q), observation z = h(x) + N(0, R)."""

    transition: Callable
    observation: Callable
    process_cov: np.ndarray
    observation_cov: np.ndarray
    transition_jacobian: Callable | None = None
    observation_jacobian: Callable | None = None
    transition_matrix: np.ndarray | None = None
    observation_matrix: np.ndarray | None = None

    @classmethod
    def linear(cls, transition_matrix, observation_matrix, process_cov,
               observation_cov) -> "StateSpaceSpec":
        f_mat = np.asarray(transition_matrix, dtype=float)
        h_mat = np.asarray(observation_matrix, dtype=float)
        return cls(
            transition=lambda x: f_mat @ x,
            observation=lambda x: h_mat @ x,
            process_cov=np.asarray(process_cov, dtype=float),
            observation_cov=np.asarray(observation_cov, dtype=float),
            transition_jacobian=lambda x: f_mat,
            observation_jacobian=lambda x: h_mat,
            transition_matrix=f_mat,
            observation_matrix=h_mat,
        )


def _symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def _gaussian_update(mean_pred, cov_pred, z_pred, innov_cov, cross_cov, z):
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape != z_pred.shape:
        raise InputError(f"observation has shape {z.shape}, expected {z_pred.shape}")
    try:
        gain = scipy.linalg.solve(innov_cov, cross_cov.T, assume_a="sym").T
    except scipy.linalg.LinAlgError as err:
        raise NumericError("innovation covariance is singular") from err
    if not np.all(np.isfinite(gain)):
        raise NumericError("Kalman gain contains non-finite values")
    mean = mean_pred + gain @ (z - z_pred)
    cov = _symmetrize(cov_pred - gain @ innov_cov @ gain.T)
    return GaussianBelief(mean=mean, cov=cov)


def kf_step(belief: GaussianBelief, spec: StateSpaceSpec, z) -> GaussianBelief:
    """One linear predict-update; requires a StateSpaceSpec with explicit matrices."""
    if spec.transition_matrix is None or spec.observation_matrix is None:
        raise InputError("kf_step requires a spec with explicit linear matrices")
    f_mat, h_mat = spec.transition_matrix, spec.observation_matrix
    mean_pred = f_mat @ belief.mean
    cov_pred = _symmetrize(f_mat @ belief.cov @ f_mat.T + spec.process_cov)
    z_pred = h_mat @ mean_pred
    innov_cov = h_mat @ cov_pred @ h_mat.T + spec.observation_cov
    cross_cov = cov_pred @ h_mat.T
    return _gaussian_update(mean_pred, cov_pred, z_pred, innov_cov, cross_cov, z)


def ekf_step(belief: GaussianBelief, spec: StateSpaceSpec, z) -> GaussianBelief:
    """One first-order linearized predict-update around the current estimate."""
    if spec.transition_jacobian is None or spec.observation_jacobian is None:
        raise InputError("ekf_step requires transition and observation Jacobians")
    f_jac = np.asarray(spec.transition_jacobian(belief.mean), dtype=float)
    mean_pred = np.asarray(spec.transition(belief.mean), dtype=float).reshape(-1)
    cov_pred = _symmetrize(f_jac @ belief.cov @ f_jac.T + spec.process_cov)
    h_jac = np.asarray(spec.observation_jacobian(mean_pred), dtype=float)
    z_pred = np.asarray(spec.observation(mean_pred), dtype=float).reshape(-1)
    innov_cov = h_jac @ cov_pred @ h_jac.T + spec.observation_cov
    cross_cov = cov_pred @ h_jac.T
    return _gaussian_update(mean_pred, cov_pred, z_pred, innov_cov, cross_cov, z)


def _sigma_points(mean: np.ndarray, cov: np.ndarray):
    """Scaled sigma points and Merwe mean/cov weights for the given belief."""
    d = mean.shape[0]
    lam = UKF_ALPHA * UKF_ALPHA * (d + UKF_KAPPA) - d
    scaled = (d + lam) * cov
    try:
        root = scipy.linalg.cholesky(scaled, lower=True)
    except scipy.linalg.LinAlgError:
        jitter = JITTER_SCALE * max(np.trace(scaled) / d, 1.0)
        try:
            root = scipy.linalg.cholesky(scaled + jitter * np.eye(d), lower=True)
        except scipy.linalg.LinAlgError as err:
            raise NumericError("sigma-point factorization failed") from err
    points = np.empty((2 * d + 1, d))
    points[0] = mean
    points[1 : d + 1] = mean[None, :] + root.T
    points[d + 1 :] = mean[None, :] - root.T
    w_mean = np.full(2 * d + 1, 1.0 / (2.0 * (d + lam)))
    w_cov = w_mean.copy()
    w_mean[0] = lam / (d + lam)
    w_cov[0] = w_mean[0] + 1.0 - UKF_ALPHA * UKF_ALPHA + UKF_BETA
    return points, w_mean, w_cov


def _unscented_moments(values, w_mean, w_cov, noise_cov):
    mean = w_mean @ values
    centered = values - mean[None, :]
    cov = (centered * w_cov[:, None]).T @ centered + noise_cov
    return mean, _symmetrize(cov)


def ukf_step(belief: GaussianBelief, spec: StateSpaceSpec, z) -> GaussianBelief:
    """One sigma-point predict-update; fresh points are drawn after the predict."""
    points, w_mean, w_cov = _sigma_points(belief.mean, belief.cov)
    propagated = np.array([spec.transition(p) for p in points], dtype=float)
    mean_pred, cov_pred = _unscented_moments(propagated, w_mean, w_cov, spec.process_cov)

    points, w_mean, w_cov = _sigma_points(mean_pred, cov_pred)
    observed = np.array([spec.observation(p) for p in points], dtype=float)
    z_pred, innov_cov = _unscented_moments(observed, w_mean, w_cov, spec.observation_cov)
    cross_cov = ((points - mean_pred[None, :]) * w_cov[:, None]).T @ (observed - z_pred[None, :])
    return _gaussian_update(mean_pred, cov_pred, z_pred, innov_cov, cross_cov, z)
