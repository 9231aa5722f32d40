"""Probability distributions on a finite parameter set.

Weights are stored and combined in natural-log space throughout: inverse
temperatures of order n / (8 sigma^2) tilt weights far below the smallest
positive double, while log-weights stay well scaled.  Probabilities are
materialized only at API boundaries (``SimplexWeights.probs``).

Zero-mass atoms are representable as ``-inf`` log-weights.  The divergence
``kl_divergence`` follows the 0 * log 0 = 0 convention and returns ``+inf``
whenever the first argument charges an atom the second one does not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

NORMALIZATION_TOL = 1e-12


def _normalized_log_weights(log_weights: np.ndarray) -> np.ndarray:
    """Shift log-weights so they log-sum-exp to zero (two passes for float exactness)."""
    out = log_weights - logsumexp(log_weights)
    out = out - logsumexp(out)
    return out


@dataclass(frozen=True, eq=False)
class SimplexWeights:
    """A distribution over M atoms stored as log-probabilities.

    ``-inf`` entries denote zero mass; ``+inf`` and NaN are rejected.  The
    log-weights must log-sum-exp to zero within 1e-12.
    """

    log_weights: np.ndarray

    def __post_init__(self) -> None:
        lw = np.array(self.log_weights, dtype=float, copy=True).reshape(-1)
        if lw.size < 1:
            raise ValueError("SimplexWeights needs at least one atom")
        if np.any(np.isnan(lw)) or np.any(lw == np.inf):
            raise ValueError("log-weights must be < +inf and not NaN")
        total = logsumexp(lw)
        if abs(total) > NORMALIZATION_TOL:
            raise ValueError(f"log-weights do not sum to one: logsumexp={total!r}")
        lw.flags.writeable = False
        object.__setattr__(self, "log_weights", lw)

    @classmethod
    def uniform(cls, m: int) -> "SimplexWeights":
        if m < 1:
            raise ValueError("m must be >= 1")
        return cls(np.full(m, -np.log(m)))

    @classmethod
    def point_mass(cls, index: int, m: int) -> "SimplexWeights":
        if not 0 <= index < m:
            raise ValueError("index out of range")
        lw = np.full(m, -np.inf)
        lw[index] = 0.0
        return cls(lw)

    @classmethod
    def from_probs(cls, probs) -> "SimplexWeights":
        p = np.asarray(probs, dtype=float).reshape(-1)
        if np.any(p < 0) or not np.all(np.isfinite(p)) or p.sum() <= 0:
            raise ValueError("probabilities must be finite, nonnegative, not all zero")
        with np.errstate(divide="ignore"):
            lw = np.log(p)
        return cls(_normalized_log_weights(lw))

    @property
    def m(self) -> int:
        return self.log_weights.size

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def support(self) -> np.ndarray:
        """Boolean mask of atoms carrying positive mass."""
        return self.log_weights > -np.inf


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Per-atom scores: empirical/population risks or arbitrary tilt exponents.

    ``risk=True`` tags the vector as a risk vector (all entries >= 0), which
    the complexity functionals require.
    """

    values: np.ndarray
    risk: bool = False

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if not np.all(np.isfinite(v)):
            raise ValueError("scores must be finite")
        if self.risk and np.any(v < 0):
            raise ValueError("risk vectors must be nonnegative")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def risks(cls, values) -> "ScoreVector":
        return cls(values, risk=True)

    @property
    def m(self) -> int:
        return self.values.size


def _score_values(h, m: int) -> np.ndarray:
    values = h.values if isinstance(h, ScoreVector) else np.asarray(h, dtype=float).reshape(-1)
    if values.size != m:
        raise ValueError(f"score length {values.size} does not match {m} atoms")
    if not np.all(np.isfinite(values)):
        raise ValueError("scores must be finite")
    return values


def kl_divergence(rho: SimplexWeights, pi: SimplexWeights) -> float:
    """KL(rho, pi) = sum_j rho_j log(rho_j / pi_j), computed in log space.

    Returns +inf when rho charges an atom of pi-mass zero; 0*log(0/...) = 0.
    The result is clamped at 0 (it is >= 0 with equality iff rho == pi).
    """
    if rho.m != pi.m:
        raise ValueError("dimension mismatch between rho and pi")
    lr, lp = rho.log_weights, pi.log_weights
    charged = lr > -np.inf
    if np.any(lp[charged] == -np.inf):
        return float("inf")
    diff = lr[charged] - lp[charged]
    return max(float(np.exp(lr[charged]) @ diff), 0.0)


def gibbs_tilt(pi: SimplexWeights, h) -> SimplexWeights:
    """The tilted distribution with log-weights log pi_j + h_j, renormalized.

    Tilts compose additively and are invariant to constant shifts of ``h``.
    Stable for |h| up to at least 1e4 via log-sum-exp.
    """
    values = _score_values(h, pi.m)
    return SimplexWeights(_normalized_log_weights(pi.log_weights + values))


def mixture_values(rho: SimplexWeights, class_values: np.ndarray) -> np.ndarray:
    """Average the rows of an M x n matrix under rho: f_rho = sum_j rho_j f_j."""
    cv = np.asarray(class_values, dtype=float)
    if cv.ndim != 2 or cv.shape[0] != rho.m:
        raise ValueError("class values must be an M x n matrix matching rho")
    return rho.probs @ cv


def empirical_variance(rho: SimplexWeights, class_values: np.ndarray, y: np.ndarray) -> float:
    """V_n(rho) = <rho, R_n> - R_n(rho), the within-mixture spread of the class.

    Evaluated as the equal centered form <rho, ||f - f_rho||_n^2>: a sum of
    nonnegative terms, so the value carries no cancellation error from the
    risk scale and is nonnegative by construction.
    """
    cv = np.asarray(class_values, dtype=float)
    yv = np.asarray(y, dtype=float).reshape(-1)
    if cv.ndim != 2 or cv.shape[0] != rho.m or cv.shape[1] != yv.size:
        raise ValueError("inconsistent dimensions")
    p = rho.probs
    mix = p @ cv
    return float(p @ np.mean((cv - mix) ** 2, axis=1))
