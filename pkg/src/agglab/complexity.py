"""Global and local entropic complexities.

For a prior pi on M atoms with risk vector R and inverse temperature beta,

    global(beta) = -(1/beta) * log <pi, exp(-beta R)>      (the free energy)
    local(beta)  = <pi tilted by -beta R, R>               (the average energy)

``local`` is the beta-derivative of ``beta * global``, is nonincreasing in
beta, and never exceeds ``global``.  Both admit closed forms under a Gaussian
prior on a linear class; ``gaussian_complexities`` evaluates them through the
symmetric eigendecomposition of the second-moment matrix.

beta = 0 is accepted everywhere and maps to the analytic limit <pi, R>, so
profiles can be anchored at the origin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .simplex import ScoreVector, SimplexWeights, gibbs_tilt

EIGENVALUE_CLIP = 1e-12
SYMMETRY_TOL = 1e-12


def _risk_values(risks, m: int) -> np.ndarray:
    if isinstance(risks, ScoreVector):
        if not risks.risk:
            raise ValueError("complexities require a risk-tagged ScoreVector")
        values = risks.values
    else:
        values = np.asarray(risks, dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("risks must be finite and nonnegative")
    if values.size != m:
        raise ValueError("risk length does not match prior")
    return values


def global_complexity(pi: SimplexWeights, risks, beta: float) -> float:
    """-(1/beta) log <pi, e^{-beta R}> for beta > 0; <pi, R> at beta = 0."""
    values = _risk_values(risks, pi.m)
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if beta == 0:
        return float(pi.probs @ values)
    return float(-logsumexp(pi.log_weights - beta * values) / beta)


def local_complexity(pi: SimplexWeights, risks, beta: float) -> float:
    """<pi_{-beta R}, R>: mean risk under the Gibbs tilt of the prior."""
    values = _risk_values(risks, pi.m)
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if beta == 0:
        return float(pi.probs @ values)
    tilted = gibbs_tilt(pi, -beta * values)
    return float(tilted.probs @ values)


@dataclass(frozen=True, eq=False)
class ComplexityProfile:
    """Global and local complexities sampled along an increasing beta grid."""

    betas: np.ndarray
    global_values: np.ndarray
    local_values: np.ndarray

    def __post_init__(self) -> None:
        b = np.array(self.betas, dtype=float).reshape(-1)
        g = np.array(self.global_values, dtype=float).reshape(-1)
        l = np.array(self.local_values, dtype=float).reshape(-1)
        if not (b.size and b.size == g.size == l.size):
            raise ValueError("profile vectors must be nonempty and equally long")
        if np.any(b < 0) or np.any(np.diff(b) <= 0):
            raise ValueError("beta grid must be nonnegative and strictly increasing")
        scale = 1.0 + np.max(np.abs(g))
        if np.any(l > g + 1e-9 * scale):
            raise ValueError("local complexity exceeds global complexity")
        if np.any(np.diff(l) > 1e-9 * scale):
            raise ValueError("local complexity must be nonincreasing in beta")
        for arr in (b, g, l):
            arr.flags.writeable = False
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "global_values", g)
        object.__setattr__(self, "local_values", l)


def complexity_profile(pi: SimplexWeights, risks, beta_grid) -> ComplexityProfile:
    grid = np.asarray(beta_grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise ValueError("empty beta grid")
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("beta grid must be nonnegative and strictly increasing")
    g = np.array([global_complexity(pi, risks, b) for b in grid])
    l = np.array([local_complexity(pi, risks, b) for b in grid])
    return ComplexityProfile(grid, g, l)


@dataclass(frozen=True, eq=False)
class LinearInstance:
    """A linear-class risk landscape: R(theta) = base_risk + ||theta - theta_star||_Sigma^2."""

    Sigma: np.ndarray
    theta_star: np.ndarray
    base_risk: float

    def __post_init__(self) -> None:
        s = np.array(self.Sigma, dtype=float, copy=True)
        t = np.array(self.theta_star, dtype=float, copy=True).reshape(-1)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] != t.size:
            raise ValueError("Sigma must be d x d matching theta_star")
        if not np.all(np.isfinite(s)) or not np.all(np.isfinite(t)):
            raise ValueError("entries must be finite")
        scale = 1.0 + np.max(np.abs(s))
        if np.max(np.abs(s - s.T)) > SYMMETRY_TOL * scale:
            raise ValueError("Sigma must be symmetric")
        if np.min(np.linalg.eigvalsh((s + s.T) / 2)) < -EIGENVALUE_CLIP * scale:
            raise ValueError("Sigma must be positive semi-definite")
        if self.base_risk < 0:
            raise ValueError("base_risk must be nonnegative")
        s.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "Sigma", s)
        object.__setattr__(self, "theta_star", t)

    def risk(self, theta: np.ndarray) -> float:
        diff = np.asarray(theta, dtype=float).reshape(-1) - self.theta_star
        return float(self.base_risk + diff @ self.Sigma @ diff)


class GaussianComplexities(NamedTuple):
    global_value: float
    local_value: float
    theta_lambda: np.ndarray


def _clipped_eigh(sigma: np.ndarray):
    evals, evecs = np.linalg.eigh((sigma + sigma.T) / 2)
    evals = np.where(evals < EIGENVALUE_CLIP, 0.0, evals)
    return evals, evecs


def gaussian_complexities(inst: LinearInstance, gamma: float, beta: float) -> GaussianComplexities:
    """Closed-form complexities at inverse temperature beta/2 under prior N(0, I/gamma).

    With lam = gamma / beta and theta_lam = (Sigma + lam I)^{-1} Sigma theta_star:

        global = R(theta_lam) + lam ||theta_lam||^2 + (1/beta) logdet(I + Sigma/lam)
        local  = R(theta_lam) + (1/beta) tr[(Sigma + lam I)^{-1} Sigma]
    """
    if gamma <= 0 or beta <= 0:
        raise ValueError("gamma and beta must be positive")
    lam = gamma / beta
    evals, evecs = _clipped_eigh(inst.Sigma)
    # theta_lam in the eigenbasis: e_i / (e_i + lam) * <v_i, theta_star>
    coords = evecs.T @ inst.theta_star
    theta_lam = evecs @ (evals / (evals + lam) * coords)
    r_lam = inst.risk(theta_lam)
    logdet = float(np.sum(np.log1p(evals / lam)))
    trace = float(np.sum(evals / (evals + lam)))
    global_value = r_lam + lam * float(theta_lam @ theta_lam) + logdet / beta
    local_value = r_lam + trace / beta
    return GaussianComplexities(global_value, local_value, theta_lam)


class TraceLogDetGap(NamedTuple):
    trace_term: float
    logdet_term: float
    upper_bound: float


def trace_logdet_gap(sigma: np.ndarray, lam: float) -> TraceLogDetGap:
    """tr[(Sigma+lam I)^{-1} Sigma], logdet(I + Sigma/lam), and the trace-based cap.

    trace_term <= logdet_term always; logdet_term <= upper_bound whenever
    lam <= ||Sigma||_op.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    s = np.asarray(sigma, dtype=float)
    scale = 1.0 + np.max(np.abs(s)) if s.size else 1.0
    if np.max(np.abs(s - s.T)) > SYMMETRY_TOL * scale:
        raise ValueError("Sigma must be symmetric")
    evals, _ = _clipped_eigh(s)
    if np.min(evals) < 0:
        raise ValueError("Sigma must be positive semi-definite")
    trace = float(np.sum(evals / (evals + lam)))
    logdet = float(np.sum(np.log1p(evals / lam)))
    opnorm = float(np.max(evals))
    upper = 2.0 * np.log1p(opnorm / lam) * trace
    return TraceLogDetGap(trace, logdet, upper)
