"""Closed-form Gaussian posteriors on a linear class under the prior N(0, I/gamma).

At inverse temperature beta/2 with lam = gamma/beta, both entropy-regularized
estimators have Gaussian posteriors centered at the ridge solution:

    Q-aggregation:        N(theta_lam, (beta (Sigma_n/2 + lam I))^{-1})
    exponential weights:  N(theta_lam, (beta (Sigma_n   + lam I))^{-1})

so their prediction functions coincide with ridge regression.  The module
also evaluates the Q-objective restricted to Gaussian measures, which is the
certificate used to verify the claimed posterior is optimal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ridge import DesignSample, ridge_fit

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GaussianMeasure:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self) -> None:
        mu = np.array(self.mean, dtype=float, copy=True).reshape(-1)
        cov = np.array(self.covariance, dtype=float, copy=True)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] != mu.size:
            raise ValueError("covariance must be d x d matching the mean")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(cov))):
            raise ValueError("entries must be finite")
        scale = 1.0 + np.max(np.abs(cov))
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * scale:
            raise ValueError("covariance must be symmetric")
        if np.min(np.linalg.eigvalsh((cov + cov.T) / 2)) <= 0:
            raise ValueError("covariance must be positive definite")
        mu.flags.writeable = False
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "covariance", cov)

    @property
    def d(self) -> int:
        return self.mean.size


def _sample_cov(ds: DesignSample) -> np.ndarray:
    return ds.X.T @ ds.X / ds.n


def _posterior(ds: DesignSample, gamma: float, beta: float, half_gram: bool) -> GaussianMeasure:
    if gamma <= 0 or beta <= 0:
        raise ValueError("gamma and beta must be positive")
    lam = gamma / beta
    mean = ridge_fit(ds, lam).theta
    gram = _sample_cov(ds)
    if half_gram:
        gram = gram / 2.0
    precision = beta * (gram + lam * np.eye(ds.d))
    cov = np.linalg.inv(precision)
    return GaussianMeasure(mean, (cov + cov.T) / 2.0)


def qagg_gaussian_posterior(ds: DesignSample, gamma: float, beta: float) -> GaussianMeasure:
    """N(theta_lam, (beta (Sigma_n/2 + lam I))^{-1}) with lam = gamma/beta."""
    return _posterior(ds, gamma, beta, half_gram=True)


def ew_gaussian_posterior(ds: DesignSample, gamma: float, beta: float) -> GaussianMeasure:
    """N(theta_lam, (beta (Sigma_n + lam I))^{-1}) with lam = gamma/beta."""
    return _posterior(ds, gamma, beta, half_gram=False)


def gaussian_q_objective(g: GaussianMeasure, ds: DesignSample, gamma: float, beta: float) -> float:
    """Q-objective at inverse temperature beta/2 restricted to Gaussian measures.

    Uses <rho, R_n> = R_n(mu) + tr(Sigma_n Gamma) and
    KL(N(mu, Gamma), N(0, I/gamma)) = (-logdet(gamma Gamma) + tr(gamma Gamma)
    - d + gamma ||mu||^2) / 2.
    """
    if gamma <= 0 or beta <= 0:
        raise ValueError("gamma and beta must be positive")
    if g.d != ds.d:
        raise ValueError("dimension mismatch")
    sigma_n = _sample_cov(ds)
    mu, cov = g.mean, g.covariance
    rn_mu = float(np.mean((ds.X @ mu - ds.y) ** 2))
    smoothed = rn_mu + float(np.trace(sigma_n @ cov))
    sign, logdet = np.linalg.slogdet(gamma * cov)
    if sign <= 0:
        raise ValueError("covariance must be positive definite")
    kl_doubled = -logdet + gamma * float(np.trace(cov)) - g.d + gamma * float(mu @ mu)
    return 0.5 * smoothed + 0.5 * rn_mu + kl_doubled / beta
