"""Posterior-embedding estimators: thresholded ridge, supervision-augmented
variant, squared-regularization baseline, and the exact discrete oracle."""
from fractions import Fraction

import numpy as np
import pytest

from kernelbayes.embedding import BetaWeights, Embedding, compute_beta
from kernelbayes.errors import DegenerateBeliefError, InputError
from kernelbayes.kernels import gaussian, linear
from kernelbayes.posterior import (
    DiscreteModel,
    embed_pmf,
    exact_discrete_posterior,
    fit_kregbayes,
    fit_threshold,
    kbr_squared_predict,
    kbr_squared_weights,
)
from kernelbayes.rng import PortableRng


class TestFitThreshold:
    def test_hand_solved_system(self):
        # linear kernel, x = (1),(2), beta_plus = (1,1), lam = 1:
        # system [[2,2],[2,5]]; predict(1) solves against k = (1,2) -> (1/6, 1/3)
        reg = fit_threshold(
            [[1.0], [2.0]], [[10.0], [20.0]], BetaWeights(raw=np.array([1.0, 1.0])),
            linear(), linear(), 1.0,
        )
        emb = reg.predict([1.0])
        assert np.allclose(emb.weights, [1.0 / 6.0, 1.0 / 3.0], rtol=1e-12)
        assert np.array_equal(emb.points, [[10.0], [20.0]])

    def test_inactive_rows_dropped(self):
        rng = PortableRng(30)
        xs = rng.normal(size=(6, 2))
        ys = rng.normal(size=(6, 2))
        beta = BetaWeights(raw=np.array([0.5, -0.1, 0.0, 0.4, -0.9, 0.2]))
        reg = fit_threshold(xs, ys, beta, gaussian(1.0), gaussian(1.0), 0.01)
        assert reg.active_count == 3
        assert np.array_equal(reg.outputs_y, ys[[0, 3, 5]])
        assert reg.system.shape == (3, 3)

    def test_elimination_oracle(self):
        # dense solve of the same weighted ridge system, built independently
        rng = PortableRng(31)
        xs = rng.normal(size=(8, 2))
        ys = rng.normal(size=(8, 1))
        beta = BetaWeights(raw=rng.normal(size=(8,)) + 0.2)
        k = gaussian(1.4)
        lam = 0.05
        reg = fit_threshold(xs, ys, beta, k, k, lam)
        x = np.array([0.25, -0.4])
        emb = reg.predict(x)
        act = beta.active
        system = k.gram(xs[act], xs[act]).entries + lam * np.diag(
            1.0 / beta.thresholded[act]
        )
        rhs = np.array([k.eval(p, x) for p in xs[act]])
        assert np.allclose(emb.weights, np.linalg.solve(system, rhs), rtol=1e-9)

    def test_all_zero_beta_degenerate(self):
        with pytest.raises(DegenerateBeliefError):
            fit_threshold(
                [[0.0], [1.0]], [[0.0], [1.0]],
                BetaWeights(raw=np.array([-0.5, -0.1])),
                gaussian(1.0), gaussian(1.0), 0.1,
            )

    def test_beta_length_mismatch(self):
        with pytest.raises(InputError):
            fit_threshold(
                [[0.0], [1.0]], [[0.0], [1.0]], BetaWeights(raw=np.array([1.0])),
                gaussian(1.0), gaussian(1.0), 0.1,
            )

    def test_invalid_lam(self):
        with pytest.raises(InputError):
            fit_threshold(
                [[0.0]], [[0.0]], BetaWeights(raw=np.array([1.0])),
                gaussian(1.0), gaussian(1.0), 0.0,
            )

    def test_predict_dimension_check(self):
        reg = fit_threshold(
            [[0.0, 0.0]], [[1.0]], BetaWeights(raw=np.array([1.0])),
            gaussian(1.0), gaussian(1.0), 0.1,
        )
        with pytest.raises(InputError):
            reg.predict([1.0])

    def test_stationarity_residual(self):
        # Gram-coordinate coefficients satisfy (K + lam D) C = I
        rng = PortableRng(32)
        xs = rng.normal(size=(10, 2))
        ys = rng.normal(size=(10, 2))
        beta = BetaWeights(raw=rng.normal(size=(10,)) + 0.3)
        reg = fit_threshold(xs, ys, beta, gaussian(0.9), gaussian(1.1), 0.02)
        c = reg.coefficient_matrix()
        resid = reg.system @ c - np.eye(reg.system.shape[0])
        assert np.max(np.abs(resid)) < 1e-8

    def test_metadata(self):
        rng = PortableRng(33)
        xs = rng.normal(size=(7, 2))
        ys = rng.normal(size=(7, 2))
        beta = BetaWeights(raw=np.concatenate([np.full(5, 0.4), [-1.0, -2.0]]))
        reg = fit_threshold(xs, ys, beta, gaussian(1.0), gaussian(1.0), 0.1)
        meta = reg.metadata()
        assert meta["n_train"] == 7
        assert meta["active_count"] == 5
        assert meta["supervision_count"] == 0
        assert meta["system_rows"] == 5
        assert meta["lam"] == 0.1
        assert meta["kernel_x"] == {"variant": "gaussian", "bandwidth": 1.0}
        assert np.isfinite(meta["condition_estimate"])
        assert meta["condition_estimate"] >= 1.0


class TestFitKregbayes:
    def test_zero_supervision_identical_to_threshold(self):
        rng = PortableRng(34)
        xs = rng.normal(size=(9, 2))
        ys = rng.normal(size=(9, 2))
        beta = BetaWeights(raw=rng.normal(size=(9,)))
        k = gaussian(1.2)
        plain = fit_threshold(xs, ys, beta, k, k, 0.03)
        augmented = fit_kregbayes(xs, ys, beta, None, None, k, k, 0.03, delta=0.5)
        assert np.array_equal(plain.system, augmented.system)
        x = np.array([0.5, 0.5])
        assert np.array_equal(plain.predict(x).weights, augmented.predict(x).weights)

    def test_supervision_only_system(self):
        # all training rows thresholded away; the supervision pair carries the fit
        beta = BetaWeights(raw=np.array([-1.0, -0.5]))
        k = gaussian(1.0)
        anchor, target = [3.0, 0.0], [7.0]
        reg = fit_kregbayes(
            [[0.0, 0.0], [1.0, 0.0]], [[0.0], [1.0]], beta,
            [anchor], [target], k, k, lam=1e-8, delta=1.0,
        )
        assert reg.active_count == 0 and reg.supervision_count == 1
        emb = reg.predict(anchor)
        # 1x1 system: weight = k(a,a) / (k(a,a) + lam/delta) -> 1 as lam -> 0
        assert emb.weights[0] == pytest.approx(1.0, abs=1e-7)
        assert np.array_equal(emb.points, [target])

    def test_strong_supervision_pins_point_mass(self):
        # delta -> inf makes mu(anchor) -> psi(target)
        rng = PortableRng(35)
        xs = rng.normal(size=(8, 2))
        ys = rng.normal(size=(8, 2))
        beta = BetaWeights(raw=rng.uniform(size=(8,)) + 0.1)
        k = gaussian(1.0)
        anchor = np.array([5.0, 5.0])
        target = np.array([2.0, -1.0])
        reg = fit_kregbayes(
            xs, ys, beta, [anchor], [target], k, k, lam=0.1, delta=1e12
        )
        predicted = reg.predict(anchor)
        point_mass = embed_pmf([1.0], [target], k)
        assert predicted.rkhs_distance(point_mass) < 1e-5

    def test_weak_supervision_reduces_to_threshold(self):
        # delta -> 0 removes the supervision influence
        rng = PortableRng(36)
        xs = rng.normal(size=(7, 2))
        ys = rng.normal(size=(7, 2))
        beta = BetaWeights(raw=rng.uniform(size=(7,)) + 0.1)
        k = gaussian(1.0)
        plain = fit_threshold(xs, ys, beta, k, k, 0.1)
        augmented = fit_kregbayes(
            xs, ys, beta, [[0.2, 0.2]], [[0.5, 0.5]], k, k, 0.1, delta=1e-12
        )
        x = np.array([0.4, -0.3])
        w_plain = plain.predict(x).weights
        w_aug = augmented.predict(x).weights
        assert np.allclose(w_aug[:7], w_plain, atol=1e-6)
        assert abs(w_aug[7]) < 1e-6

    def test_supervision_count_mismatch(self):
        beta = BetaWeights(raw=np.array([1.0]))
        with pytest.raises(InputError):
            fit_kregbayes(
                [[0.0]], [[0.0]], beta, [[1.0], [2.0]], [[1.0]],
                gaussian(1.0), gaussian(1.0), 0.1, 1.0,
            )

    def test_metadata_counts_supervision(self):
        beta = BetaWeights(raw=np.array([1.0, 0.5]))
        reg = fit_kregbayes(
            [[0.0], [1.0]], [[0.0], [1.0]], beta, [[2.0]], [[2.0]],
            gaussian(1.0), gaussian(1.0), 0.1, 1.0,
        )
        meta = reg.metadata()
        assert meta["supervision_count"] == 1
        assert meta["system_rows"] == 3


class TestKbrSquared:
    def test_single_point_closed_form(self):
        # n=1: w = b^2 k^2 / (b^2 k^2 + delta) / (b k) * b k ... reduces to
        # w = b*k * (b*k*b*k + delta)^{-1} * b*k
        k = gaussian(1.0)
        delta = 0.01
        w = kbr_squared_weights(np.array([[1.0]]), np.array([1.0]), np.array([1.0]), delta)
        assert w[0] == pytest.approx(1.0 / (1.0 + delta), rel=1e-12)

    def test_matches_dense_formula(self):
        rng = PortableRng(37)
        n = 9
        k = gaussian(1.1)
        xs = rng.normal(size=(n, 2))
        gram = k.gram(xs, xs).entries
        x = np.array([0.1, 0.7])
        k_vec = np.array([k.eval(p, x) for p in xs])
        braw = rng.normal(size=(n,))
        delta = 1e-3
        w = kbr_squared_weights(gram, k_vec, braw, delta)
        bk = np.diag(braw) @ gram
        expected = bk @ np.linalg.solve(bk @ bk + delta * np.eye(n), braw * k_vec)
        assert np.allclose(w, expected, rtol=1e-9, atol=1e-12)

    def test_predict_wraps_weights(self):
        rng = PortableRng(38)
        xs = rng.normal(size=(6, 2))
        ys = rng.normal(size=(6, 1))
        beta = BetaWeights(raw=rng.normal(size=(6,)))
        k = gaussian(1.0)
        emb = kbr_squared_predict(xs, ys, beta, k, gaussian(0.7), [0.0, 0.0], 1e-3)
        gram = k.gram(xs, xs).entries
        k_vec = np.array([k.eval(p, [0.0, 0.0]) for p in xs])
        assert np.allclose(
            emb.weights, kbr_squared_weights(gram, k_vec, beta.raw, 1e-3)
        )
        assert emb.kernel == gaussian(0.7)

    def test_signed_weights_preserved(self):
        # unlike the thresholded route, the baseline keeps negative mass
        rng = PortableRng(39)
        xs = rng.normal(size=(10, 1))
        gram = gaussian(1.0).gram(xs, xs).entries
        braw = rng.normal(size=(10,))
        w = kbr_squared_weights(gram, gram[:, 0], braw, 1e-4)
        assert np.any(w < 0)

    def test_invalid_delta(self):
        with pytest.raises(InputError):
            kbr_squared_weights(np.eye(2), np.ones(2), np.ones(2), 0.0)

    def test_size_mismatch(self):
        with pytest.raises(InputError):
            kbr_squared_weights(np.eye(2), np.ones(3), np.ones(2), 0.1)


class TestDiscreteModel:
    def _model(self):
        return DiscreteModel(
            x_states=[[0.0], [1.0]],
            y_states=[[0.0], [1.0], [2.0]],
            prior=[0.5, 0.25, 0.25],
            likelihood=[[0.9, 0.1], [0.5, 0.5], [0.2, 0.8]],
        )

    def test_posterior_via_fractions_oracle(self):
        model = self._model()
        prior = [Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]
        lik_x0 = [Fraction(9, 10), Fraction(1, 2), Fraction(1, 5)]
        joint = [p * l for p, l in zip(prior, lik_x0)]
        total = sum(joint)
        expected = [float(j / total) for j in joint]
        assert np.allclose(exact_discrete_posterior(model, [0.0]), expected, rtol=1e-14)

    def test_posterior_sums_to_one(self):
        model = self._model()
        for x in ([0.0], [1.0]):
            assert exact_discrete_posterior(model, x).sum() == pytest.approx(1.0)

    def test_uniform_prior_flat_likelihood(self):
        model = DiscreteModel(
            x_states=[[0.0], [1.0]],
            y_states=[[0.0], [1.0]],
            prior=[0.5, 0.5],
            likelihood=[[0.5, 0.5], [0.5, 0.5]],
        )
        assert np.allclose(exact_discrete_posterior(model, [1.0]), [0.5, 0.5])

    def test_constant_likelihood_leaves_prior(self):
        # likelihood independent of y leaves the prior untouched
        model = DiscreteModel(
            x_states=[[0.0], [1.0]],
            y_states=[[0.0], [1.0], [2.0]],
            prior=[0.6, 0.3, 0.1],
            likelihood=[[0.7, 0.3]] * 3,
        )
        assert np.allclose(exact_discrete_posterior(model, [0.0]), [0.6, 0.3, 0.1])

    def test_deterministic_likelihood_point_mass(self):
        model = DiscreteModel(
            x_states=[[0.0], [1.0]],
            y_states=[[0.0], [1.0]],
            prior=[0.5, 0.5],
            likelihood=[[1.0, 0.0], [0.0, 1.0]],
        )
        assert np.allclose(exact_discrete_posterior(model, [1.0]), [0.0, 1.0])

    def test_unknown_x_rejected(self):
        with pytest.raises(InputError):
            exact_discrete_posterior(self._model(), [0.5])

    def test_zero_evidence_rejected(self):
        model = DiscreteModel(
            x_states=[[0.0], [1.0]],
            y_states=[[0.0]],
            prior=[1.0],
            likelihood=[[1.0, 0.0]],
        )
        with pytest.raises(InputError):
            exact_discrete_posterior(model, [1.0])

    def test_invalid_prior_rejected(self):
        with pytest.raises(InputError):
            DiscreteModel(
                x_states=[[0.0]], y_states=[[0.0], [1.0]],
                prior=[0.7, 0.7], likelihood=[[1.0], [1.0]],
            )

    def test_invalid_likelihood_rejected(self):
        with pytest.raises(InputError):
            DiscreteModel(
                x_states=[[0.0], [1.0]], y_states=[[0.0]],
                prior=[1.0], likelihood=[[0.6, 0.6]],
            )


class TestEmbedPmf:
    def test_embeds_weights(self):
        emb = embed_pmf([0.2, 0.8], [[0.0], [1.0]], gaussian(1.0))
        assert emb.weights.tolist() == [0.2, 0.8]

    def test_rejects_non_pmf(self):
        with pytest.raises(InputError):
            embed_pmf([0.5, 0.6], [[0.0], [1.0]], gaussian(1.0))
        with pytest.raises(InputError):
            embed_pmf([-0.1, 1.1], [[0.0], [1.0]], gaussian(1.0))

    def test_exact_prior_embedding_inner_products(self):
        # <psi(s_j), embed_pmf(pi)> = sum_i pi_i k(s_i, s_j)
        k = gaussian(1.0)
        states = np.array([[0.0], [1.0], [2.0]])
        pmf = np.array([0.5, 0.3, 0.2])
        emb = embed_pmf(pmf, states, k)
        for j in range(3):
            point = Embedding(points=states[j][None, :], weights=[1.0], kernel=k)
            expected = sum(pmf[i] * k.eval(states[i], states[j]) for i in range(3))
            assert point.inner(emb) == pytest.approx(expected, rel=1e-12)


class TestEndToEndDiscreteRecovery:
    def test_posterior_embedding_close_to_exact(self):
        # moderate-sample sanity run of the full beta -> threshold -> predict path
        rng = PortableRng(40)
        model = DiscreteModel(
            x_states=[[0.0], [1.0]],
            y_states=[[0.0], [1.0]],
            prior=[0.3, 0.7],
            likelihood=[[0.8, 0.2], [0.3, 0.7]],
        )
        n = 1200
        y_idx = (rng.uniform(size=(n,)) < 0.5).astype(int)
        u = rng.uniform(size=(n,))
        x_idx = np.where(
            y_idx == 0, (u > 0.8).astype(int), (u > 0.3).astype(int)
        )
        ys = model.y_states[y_idx]
        xs = model.x_states[x_idx]
        k = gaussian(1.0)
        lam = n ** -0.5
        beta = compute_beta(
            k.gram(ys, ys), k.gram(ys, model.y_states), model.prior, lam
        )
        reg = fit_threshold(xs, ys, beta, k, k, lam)
        active_y = y_idx[beta.active]
        for xi, x in enumerate(model.x_states):
            emb = reg.predict(x)
            exact = exact_discrete_posterior(model, x)
            for j in range(2):
                est = float(emb.weights[active_y == j].sum())
                assert abs(est - exact[j]) < 0.1
