"""Gaussian posteriors for the linear class and the restricted Q-objective."""

import numpy as np
import pytest

from agglab import (
    DesignSample,
    GaussianMeasure,
    ew_gaussian_posterior,
    gaussian_complexities,
    gaussian_q_objective,
    LinearInstance,
    qagg_gaussian_posterior,
    ridge_fit,
)


def random_sample(rng, n, d):
    return DesignSample(rng.normal(size=(n, d)), rng.normal(size=n))


SCALAR_DS = DesignSample([[1.0], [1.0]], [1.0, 1.0])


class TestPosteriors:
    def test_scalar_closed_forms(self):
        q = qagg_gaussian_posterior(SCALAR_DS, gamma=2.0, beta=2.0)
        np.testing.assert_allclose(q.mean, [0.5], rtol=1e-12)
        np.testing.assert_allclose(q.covariance, [[1 / 3]], rtol=1e-12)
        e = ew_gaussian_posterior(SCALAR_DS, gamma=2.0, beta=2.0)
        np.testing.assert_allclose(e.mean, [0.5], rtol=1e-12)
        np.testing.assert_allclose(e.covariance, [[0.25]], rtol=1e-12)

    def test_prior_dominated_limit(self):
        rng = np.random.default_rng(0)
        ds = random_sample(rng, 10, 2)
        beta = 2.0
        gamma = 1e8 * beta
        lam = gamma / beta
        q = qagg_gaussian_posterior(ds, gamma, beta)
        assert np.linalg.norm(q.mean) <= 1e-6
        np.testing.assert_allclose(q.covariance, np.eye(2) / (beta * lam), rtol=1e-6, atol=1e-15)

    def test_covariance_scaling(self):
        rng = np.random.default_rng(1)
        ds = random_sample(rng, 8, 3)
        a = qagg_gaussian_posterior(ds, gamma=2.0, beta=4.0)
        b = qagg_gaussian_posterior(ds, gamma=4.0, beta=8.0)  # lam fixed
        np.testing.assert_allclose(b.covariance, a.covariance / 2, rtol=1e-12)
        np.testing.assert_allclose(b.mean, a.mean, rtol=1e-12)

    def test_zero_design_recovers_prior(self):
        ds = DesignSample(np.zeros((4, 2)), np.zeros(4))
        gamma, beta = 3.0, 1.5
        e = ew_gaussian_posterior(ds, gamma, beta)
        np.testing.assert_allclose(e.mean, np.zeros(2), atol=1e-14)
        np.testing.assert_allclose(e.covariance, np.eye(2) / gamma, rtol=1e-12)

    def test_ew_covariance_dominated_by_qagg(self):
        rng = np.random.default_rng(2)
        ds = random_sample(rng, 12, 3)
        q = qagg_gaussian_posterior(ds, 2.0, 3.0)
        e = ew_gaussian_posterior(ds, 2.0, 3.0)
        evals = np.linalg.eigvalsh(q.covariance - e.covariance)
        assert np.min(evals) >= -1e-12

    def test_mean_equivalence_with_ridge(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n, d = int(rng.integers(2, 15)), int(rng.integers(1, 5))
            ds = random_sample(rng, n, d)
            gamma = float(rng.uniform(0.2, 4.0))
            beta = float(rng.uniform(0.2, 4.0))
            theta = ridge_fit(ds, gamma / beta).theta
            np.testing.assert_allclose(qagg_gaussian_posterior(ds, gamma, beta).mean, theta, rtol=1e-10, atol=1e-12)
            np.testing.assert_allclose(ew_gaussian_posterior(ds, gamma, beta).mean, theta, rtol=1e-10, atol=1e-12)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            qagg_gaussian_posterior(SCALAR_DS, 0.0, 1.0)
        with pytest.raises(ValueError):
            ew_gaussian_posterior(SCALAR_DS, 1.0, -1.0)
        with pytest.raises(ValueError):
            GaussianMeasure([0.0], [[0.0]])


class TestGaussianQObjective:
    def test_prior_value(self):
        rng = np.random.default_rng(4)
        ds = random_sample(rng, 6, 2)
        gamma, beta = 2.5, 3.0
        prior = GaussianMeasure(np.zeros(2), np.eye(2) / gamma)
        sigma_n = ds.X.T @ ds.X / ds.n
        rn0 = float(np.mean(ds.y**2))
        expected = 0.5 * (rn0 + np.trace(sigma_n) / gamma) + 0.5 * rn0
        np.testing.assert_allclose(gaussian_q_objective(prior, ds, gamma, beta), expected, rtol=1e-12)

    def test_posterior_beats_prior(self):
        rng = np.random.default_rng(5)
        ds = random_sample(rng, 10, 3)
        gamma, beta = 1.5, 2.5
        post = qagg_gaussian_posterior(ds, gamma, beta)
        prior = GaussianMeasure(np.zeros(3), np.eye(3) / gamma)
        assert gaussian_q_objective(post, ds, gamma, beta) <= gaussian_q_objective(prior, ds, gamma, beta)

    def test_scalar_grid_search_oracle(self):
        # claimed posterior minimizes over a (mu, Gamma) grid
        ds = SCALAR_DS
        gamma, beta = 2.0, 2.0
        post = qagg_gaussian_posterior(ds, gamma, beta)
        claimed = gaussian_q_objective(post, ds, gamma, beta)
        mus = np.linspace(-1.0, 2.0, 301)
        covs = np.linspace(0.01, 2.0, 300)
        best = min(
            gaussian_q_objective(GaussianMeasure([m], [[c]]), ds, gamma, beta) for m in mus for c in covs
        )
        assert claimed <= best + 1e-6

    def test_perturbation_certificate(self):
        rng = np.random.default_rng(6)
        ds = random_sample(rng, 9, 3)
        gamma, beta = 1.2, 2.2
        post = qagg_gaussian_posterior(ds, gamma, beta)
        claimed = gaussian_q_objective(post, ds, gamma, beta)
        eps = 1e-3
        for _ in range(200):
            u = rng.normal(size=3)
            u /= np.linalg.norm(u)
            v = rng.normal(size=3)
            sign = 1.0 if rng.random() < 0.5 else -1.0
            cov = post.covariance + sign * eps * np.outer(v, v) / (1 + v @ v)
            if np.min(np.linalg.eigvalsh(cov)) <= 1e-10:
                cov = post.covariance + eps * np.outer(v, v) / (1 + v @ v)
            g = GaussianMeasure(post.mean + eps * u, cov)
            assert claimed <= gaussian_q_objective(g, ds, gamma, beta) + 1e-12


class TestConsistencyWithComplexity:
    def test_local_value_matches_posterior_trace(self):
        # local = R(theta_lam) + tr(Sigma_n @ Cov_ew): the trace term is the
        # EW posterior covariance contracted against the second moment.
        rng = np.random.default_rng(7)
        for _ in range(20):
            n, d = int(rng.integers(3, 12)), int(rng.integers(1, 4))
            ds = random_sample(rng, n, d)
            gamma = float(rng.uniform(0.5, 3.0))
            beta = float(rng.uniform(0.5, 3.0))
            lam = gamma / beta
            sigma_n = ds.X.T @ ds.X / ds.n
            theta_star = np.linalg.solve(sigma_n + 1e-9 * np.eye(d), ds.X.T @ ds.y / ds.n)
            base = float(np.mean(ds.y**2)) - float(theta_star @ sigma_n @ theta_star)
            inst = LinearInstance(sigma_n, theta_star, max(base, 0.0))
            out = gaussian_complexities(inst, gamma, beta)
            cov_ew = ew_gaussian_posterior(ds, gamma, beta).covariance
            recomputed = inst.risk(out.theta_lambda) + float(np.trace(sigma_n @ cov_ew))
            np.testing.assert_allclose(out.local_value, recomputed, rtol=1e-10, atol=1e-10)
