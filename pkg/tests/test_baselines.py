"""Parametric filter baselines: KF against a hand-rolled reference, EKF/UKF
agreement with the KF on linear systems, and the toy-system Jacobians."""
import numpy as np
import pytest

from kernelbayes.baselines import (
    GaussianBelief,
    StateSpaceSpec,
    _sigma_points,
    ekf_step,
    kf_step,
    ukf_step,
)
from kernelbayes.errors import InputError, NumericError
from kernelbayes.experiments.dynamics import (
    angles_to_states,
    generate_toy,
    noiseless_observation,
    toy_linear_state_space,
    toy_state_space,
    ToyDynamicsConfig,
)
from kernelbayes.rng import PortableRng


def _random_linear_system(rng, d_state, d_obs):
    f_mat = 0.5 * rng.normal(size=(d_state, d_state))
    h_mat = rng.normal(size=(d_obs, d_state))
    a = rng.normal(size=(d_state, d_state))
    q = a @ a.T + 0.1 * np.eye(d_state)
    b = rng.normal(size=(d_obs, d_obs))
    r = b @ b.T + 0.1 * np.eye(d_obs)
    spec = StateSpaceSpec.linear(f_mat, h_mat, q, r)
    p0 = np.eye(d_state)
    belief = GaussianBelief(mean=rng.normal(size=(d_state,)), cov=p0)
    return spec, belief


def _reference_kf_step(belief, spec, z):
    # textbook predict-update with explicit inverse, written independently
    f, h = spec.transition_matrix, spec.observation_matrix
    m_pred = f @ belief.mean
    p_pred = f @ belief.cov @ f.T + spec.process_cov
    p_pred = 0.5 * (p_pred + p_pred.T)
    s = h @ p_pred @ h.T + spec.observation_cov
    gain = p_pred @ h.T @ np.linalg.inv(s)
    mean = m_pred + gain @ (np.asarray(z, dtype=float) - h @ m_pred)
    cov = p_pred - gain @ s @ gain.T
    return mean, 0.5 * (cov + cov.T)


class TestKalmanFilter:
    def test_matches_hand_rolled_reference(self):
        rng = PortableRng(50)
        spec, belief = _random_linear_system(rng, 3, 2)
        for _ in range(6):
            z = rng.normal(size=(2,))
            expected_mean, expected_cov = _reference_kf_step(belief, spec, z)
            belief = kf_step(belief, spec, z)
            assert np.allclose(belief.mean, expected_mean, rtol=1e-10, atol=1e-12)
            assert np.allclose(belief.cov, expected_cov, rtol=1e-10, atol=1e-12)

    def test_perfect_observation_pins_state(self):
        # identity H with tiny R: posterior mean sits on the observation
        spec = StateSpaceSpec.linear(np.eye(2), np.eye(2), 0.1 * np.eye(2),
                                     1e-12 * np.eye(2))
        belief = GaussianBelief(mean=[5.0, -3.0], cov=np.eye(2))
        z = np.array([1.0, 2.0])
        stepped = kf_step(belief, spec, z)
        assert np.allclose(stepped.mean, z, atol=1e-9)

    def test_requires_linear_matrices(self):
        spec, initial = toy_state_space(0.3)
        with pytest.raises(InputError):
            kf_step(initial, spec, [1.0, 0.0])

    def test_observation_shape_mismatch(self):
        spec = StateSpaceSpec.linear(np.eye(2), np.eye(2), np.eye(2), np.eye(2))
        belief = GaussianBelief(mean=[0.0, 0.0], cov=np.eye(2))
        with pytest.raises(InputError):
            kf_step(belief, spec, [1.0, 0.0, 0.0])

    def test_singular_innovation_rejected(self):
        # duplicated observation rows with zero noise make S rank deficient
        h = np.array([[1.0, 0.0], [1.0, 0.0]])
        spec = StateSpaceSpec.linear(np.eye(2), h, np.eye(2), np.zeros((2, 2)))
        belief = GaussianBelief(mean=[0.0, 0.0], cov=np.eye(2))
        with pytest.raises(NumericError):
            kf_step(belief, spec, [1.0, 1.0])


class TestLinearAgreement:
    def test_ekf_equals_kf_on_linear_system(self):
        rng = PortableRng(51)
        spec, belief = _random_linear_system(rng, 3, 2)
        b_kf, b_ekf = belief, belief
        for _ in range(6):
            z = rng.normal(size=(2,))
            b_kf = kf_step(b_kf, spec, z)
            b_ekf = ekf_step(b_ekf, spec, z)
            assert np.allclose(b_ekf.mean, b_kf.mean, rtol=1e-10, atol=1e-12)
            assert np.allclose(b_ekf.cov, b_kf.cov, rtol=1e-10, atol=1e-12)

    def test_ukf_equals_kf_on_linear_system(self):
        # the unscented transform is exact for linear maps
        rng = PortableRng(52)
        spec, belief = _random_linear_system(rng, 3, 2)
        b_kf, b_ukf = belief, belief
        for _ in range(6):
            z = rng.normal(size=(2,))
            b_kf = kf_step(b_kf, spec, z)
            b_ukf = ukf_step(b_ukf, spec, z)
            assert np.allclose(b_ukf.mean, b_kf.mean, atol=1e-8)
            assert np.allclose(b_ukf.cov, b_kf.cov, atol=1e-8)


class TestUnscentedTransform:
    def test_sigma_points_reproduce_moments(self):
        rng = PortableRng(53)
        mean = rng.normal(size=(3,))
        a = rng.normal(size=(3, 3))
        cov = a @ a.T + 0.5 * np.eye(3)
        points, w_mean, w_cov = _sigma_points(mean, cov)
        assert points.shape == (7, 3)
        assert w_mean.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(w_mean @ points, mean, atol=1e-10)
        centered = points - mean[None, :]
        recovered = (centered * w_cov[:, None]).T @ centered
        assert np.allclose(recovered, cov, rtol=1e-8, atol=1e-10)

    def test_quadratic_mean_exact(self):
        # E[x^2] under N(0, 1) is recovered exactly by the weighted points
        points, w_mean, _ = _sigma_points(np.zeros(1), np.eye(1))
        assert w_mean @ (points[:, 0] ** 2) == pytest.approx(1.0, rel=1e-9)

    def test_degenerate_covariance_jitter_rescue(self):
        # rank-deficient covariance still yields usable points
        cov = np.outer([1.0, 2.0], [1.0, 2.0])
        points, w_mean, _ = _sigma_points(np.zeros(2), cov)
        assert np.all(np.isfinite(points))
        assert np.allclose(w_mean @ points, 0.0, atol=1e-8)


class TestEkfRequirements:
    def test_requires_jacobians(self):
        spec = StateSpaceSpec(
            transition=lambda x: x,
            observation=lambda x: x,
            process_cov=np.eye(2),
            observation_cov=np.eye(2),
        )
        belief = GaussianBelief(mean=[0.0, 0.0], cov=np.eye(2))
        with pytest.raises(InputError):
            ekf_step(belief, spec, [0.0, 0.0])


class TestGaussianBelief:
    def test_rejects_asymmetric_cov(self):
        with pytest.raises(InputError):
            GaussianBelief(mean=[0.0, 0.0], cov=[[1.0, 0.5], [0.0, 1.0]])

    def test_rejects_shape_mismatch(self):
        with pytest.raises(InputError):
            GaussianBelief(mean=[0.0, 0.0, 0.0], cov=np.eye(2))

    def test_rejects_non_finite(self):
        with pytest.raises(InputError):
            GaussianBelief(mean=[np.nan, 0.0], cov=np.eye(2))

    def test_symmetrizes_storage(self):
        cov = np.array([[1.0, 0.3 + 1e-12], [0.3, 1.0]])
        belief = GaussianBelief(mean=[0.0, 0.0], cov=cov)
        assert np.array_equal(belief.cov, belief.cov.T)


def _central_difference_jacobian(fn, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.shape[0]):
        dx = np.zeros_like(x)
        dx[i] = h
        cols.append((np.asarray(fn(x + dx)) - np.asarray(fn(x - dx))) / (2.0 * h))
    return np.column_stack(cols)


class TestToyStateSpace:
    def test_transition_jacobian_matches_finite_difference(self):
        spec, _ = toy_state_space(0.7)
        for theta in (0.1, 1.3, 2.9, 4.4, 5.8):
            s = 1.2 * angles_to_states(theta)[0]
            numeric = _central_difference_jacobian(spec.transition, s)
            analytic = spec.transition_jacobian(s)
            assert np.allclose(analytic, numeric, rtol=1e-5, atol=1e-7)

    def test_observation_jacobian_matches_finite_difference(self):
        spec, _ = toy_state_space(0.7)
        for theta in (0.1, 1.3, 2.9, 4.4, 5.8):
            s = angles_to_states(theta)[0]
            numeric = _central_difference_jacobian(spec.observation, s)
            analytic = spec.observation_jacobian(s)
            assert np.allclose(analytic, numeric, rtol=1e-5, atol=1e-6)

    def test_transition_rotates_on_circle(self):
        spec, _ = toy_state_space(0.4)
        s = angles_to_states(1.0)[0]
        out = spec.transition(3.0 * s)
        assert np.allclose(out, angles_to_states(1.4)[0], atol=1e-12)
        assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-12)

    def test_observation_matches_generator(self):
        spec, _ = toy_state_space(0.4)
        for theta in (0.3, 2.1, 5.0):
            s = angles_to_states(theta)[0]
            assert np.allclose(
                spec.observation(s), noiseless_observation(theta)[0], atol=1e-12
            )

    def test_initial_mean_rolled_back_one_step(self):
        # first predict lands the mean exactly on the known starting angle
        spec, initial = toy_state_space(2.2, step=0.4)
        assert np.allclose(
            spec.transition(initial.mean), angles_to_states(2.2)[0], atol=1e-12
        )

    def test_linear_spec_shapes(self):
        spec, initial = toy_linear_state_space(1.0)
        assert spec.transition_matrix.shape == (2, 2)
        assert np.array_equal(spec.observation_matrix, np.eye(2))
        assert initial.cov.shape == (2, 2)

    def test_ekf_tracks_clean_trajectory(self):
        config = ToyDynamicsConfig(length=12, seed=7, process_noise=0.0,
                                   observation_noise=0.0, theta1=0.9)
        traj = generate_toy(config)
        spec, belief = toy_state_space(traj.thetas[0])
        errors = []
        for t in range(config.length):
            belief = ekf_step(belief, spec, traj.observations[t])
            errors.append(float(np.sum((belief.mean - traj.states[t]) ** 2)))
            assert np.allclose(belief.cov, belief.cov.T)
        assert np.median(errors) < 0.05
