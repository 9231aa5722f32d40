"""Ridge regression and the improper ridge-type predictors.

All linear systems go through a Cholesky factorization of the regularized
Gram matrix (lam > 0 keeps it positive definite); explicit inverses are never
formed.  Each fit is checked against a residual ceiling and raises
``NumericalError`` on failure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NumericalError

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DesignSample:
    """n covariate rows and their responses."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.X, dtype=float, copy=True)
        yv = np.array(self.y, dtype=float, copy=True).reshape(-1)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("X must be a nonempty n x d matrix")
        if x.shape[0] != yv.size:
            raise ValueError("y must have one entry per row of X")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(yv))):
            raise ValueError("entries must be finite")
        x.flags.writeable = False
        yv.flags.writeable = False
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "y", yv)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True, eq=False)
class RidgeModel:
    theta: np.ndarray
    lam: float

    def __post_init__(self) -> None:
        t = np.array(self.theta, dtype=float, copy=True).reshape(-1)
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if not np.all(np.isfinite(t)):
            raise ValueError("theta must be finite")
        t.flags.writeable = False
        object.__setattr__(self, "theta", t)

    def predict(self, x: np.ndarray) -> float:
        return float(self.theta @ np.asarray(x, dtype=float).reshape(-1))


def ridge_fit(ds: DesignSample, lam: float) -> RidgeModel:
    """theta = (Gram/n + lam I)^{-1} (1/n) sum_i y_i x_i via Cholesky."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    n = ds.n
    gram = ds.X.T @ ds.X / n + lam * np.eye(ds.d)
    rhs = ds.X.T @ ds.y / n
    theta = cho_solve(cho_factor(gram), rhs)
    residual = np.linalg.norm(gram @ theta - rhs)
    if residual > RESIDUAL_TOL * (1.0 + np.linalg.norm(ds.y)):
        raise NumericalError(f"ridge solve residual {residual:.3e} exceeds tolerance")
    return RidgeModel(theta, lam)


def ridge_leverage(x: np.ndarray, ds: DesignSample, lam: float, method: str = "sherman-morrison") -> float:
    """h_lam(x) = <(sum_i x_i x_i^T + lam n I + x x^T)^{-1} x, x>, always in [0, 1).

    ``sherman-morrison`` evaluates s/(1+s) with s the leverage under the
    rank-one-free matrix; ``direct`` solves against the updated matrix.  The
    two routes agree to machine precision and cross-check each other.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    xv = np.asarray(x, dtype=float).reshape(-1)
    if xv.size != ds.d:
        raise ValueError("x must have d entries")
    base = ds.X.T @ ds.X + lam * ds.n * np.eye(ds.d)
    if method == "sherman-morrison":
        s = max(float(xv @ cho_solve(cho_factor(base), xv)), 0.0)
        return s / (1.0 + s)
    if method == "direct":
        updated = base + np.outer(xv, xv)
        return max(float(xv @ cho_solve(cho_factor(updated), xv)), 0.0)
    raise ValueError("method must be 'sherman-morrison' or 'direct'")


def _prime(lam: float, n: int) -> float:
    # The leave-one-out argument regularizes n points at (1 + 1/n) lam.
    return (1.0 + 1.0 / n) * lam


def fw_predict(ds: DesignSample, lam: float, x: np.ndarray) -> float:
    """Forster-Warmuth-type prediction (1 - h_{lam'}(x))^2 <theta_{lam'}, x>."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    lam_p = _prime(lam, ds.n)
    model = ridge_fit(ds, lam_p)
    h = ridge_leverage(x, ds, lam_p)
    return (1.0 - h) ** 2 * model.predict(x)


def truncated_ridge_predict(ds: DesignSample, lam: float, b: float, x: np.ndarray) -> float:
    """Ridge prediction at lam' = (1+1/n) lam, clipped to [-b, b]."""
    if lam <= 0 or b <= 0:
        raise ValueError("lam and b must be positive")
    raw = ridge_fit(ds, _prime(lam, ds.n)).predict(x)
    return float(min(max(raw, -b), b))


def adaptive_truncated_predict(ds: DesignSample, lam: float, x: np.ndarray) -> float:
    """Truncated ridge with the data-driven level b_hat = max_i |y_i|."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    b_hat = float(np.max(np.abs(ds.y)))
    if b_hat == 0.0:
        return 0.0
    return truncated_ridge_predict(ds, lam, b_hat, x)


def loo_residual_identity(A: np.ndarray, b_vec: np.ndarray, x: np.ndarray, y: float):
    """Both sides of the rank-one residual update <theta', x> - y = (1-h)(<theta, x> - y).

    With theta = A^{-1} b, A' = A + x x^T, theta' = A'^{-1}(b + y x) and
    h = <A'^{-1} x, x>.  Returned as (lhs, rhs); the equality is exact up to
    solve accuracy and serves as the leave-one-out test oracle.
    """
    a = np.asarray(A, dtype=float)
    bv = np.asarray(b_vec, dtype=float).reshape(-1)
    xv = np.asarray(x, dtype=float).reshape(-1)
    try:
        factor = cho_factor(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - scipy raises its own type
        raise NumericalError("A must be positive definite") from exc
    except Exception as exc:
        raise NumericalError("A must be positive definite") from exc
    theta = cho_solve(factor, bv)
    updated = a + np.outer(xv, xv)
    factor_p = cho_factor(updated)
    theta_p = cho_solve(factor_p, bv + y * xv)
    h = float(xv @ cho_solve(factor_p, xv))
    lhs = float(theta_p @ xv - y)
    rhs = float((1.0 - h) * (theta @ xv - y))
    return lhs, rhs
