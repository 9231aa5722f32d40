"""Aggregation estimators over a finite class of predictors.

The class is an M x n matrix of predictor values on the design points plus a
target vector.  Exponential weights is the exact Gibbs tilt of the prior by
the empirical risks.  Q-aggregation minimizes

    G(rho) = 1/2 <rho, R_n> + 1/2 R_n(rho) + KL(rho, pi) / beta

over the simplex; there is no closed form, so the solver runs entropic mirror
descent (multiplicative updates) with a backtracking step search and certifies
optimality through the simplex KKT conditions: a scalar nu with g_j ~= nu on
every atom carrying mass and g_j >= nu - tol everywhere.  Since G is convex,
the certificate implies global optimality within the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .simplex import ScoreVector, SimplexWeights, empirical_variance, kl_divergence

# Line-search internals: objective comparisons are accepted within float
# granularity once KKT progress is still being made, and the solver stops
# early after this many iterations without residual improvement.
_MAX_BACKTRACKS = 60
_STALL_LIMIT = 50


@dataclass(frozen=True, eq=False)
class FiniteClass:
    """M base predictors restricted to n sample points, plus the targets."""

    F: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        f = np.array(self.F, dtype=float, copy=True)
        yv = np.array(self.y, dtype=float, copy=True).reshape(-1)
        if f.ndim != 2 or f.shape[0] < 1 or f.shape[1] < 1:
            raise ValueError("F must be a nonempty M x n matrix")
        if f.shape[1] != yv.size:
            raise ValueError("targets must match the number of sample points")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(yv))):
            raise ValueError("entries must be finite")
        f.flags.writeable = False
        yv.flags.writeable = False
        object.__setattr__(self, "F", f)
        object.__setattr__(self, "y", yv)

    @property
    def m(self) -> int:
        return self.F.shape[0]

    @property
    def n(self) -> int:
        return self.F.shape[1]


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-9
    max_iter: int = 200_000
    step_rule: str = "backtracking"

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.step_rule not in ("fixed", "backtracking"):
            raise ValueError("step_rule must be 'fixed' or 'backtracking'")


@dataclass(frozen=True, eq=False)
class SolverResult:
    weights: SimplexWeights
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool


def empirical_risks(fc: FiniteClass) -> ScoreVector:
    """R_n(theta_j) = (1/n) sum_i (F[j,i] - y_i)^2, per atom."""
    return ScoreVector.risks(np.mean((fc.F - fc.y) ** 2, axis=1))


def exp_weights(pi: SimplexWeights, fc: FiniteClass, beta: float) -> SimplexWeights:
    """The Gibbs posterior pi_{-beta R_n}: exact minimizer of <rho,R_n> + KL/beta."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if pi.m != fc.m:
        raise ValueError("prior does not match class size")
    from .simplex import gibbs_tilt

    return gibbs_tilt(pi, -beta * empirical_risks(fc).values)


def q_objective(rho: SimplexWeights, pi: SimplexWeights, fc: FiniteClass, beta: float) -> float:
    """Exact evaluation of G(rho); +inf when rho charges atoms outside pi."""
    if not (rho.m == pi.m == fc.m):
        raise ValueError("dimension mismatch")
    if beta <= 0:
        raise ValueError("beta must be positive")
    risks = empirical_risks(fc).values
    p = rho.probs
    mixture = p @ fc.F
    linear = float(p @ risks)
    mixture_risk = float(np.mean((mixture - fc.y) ** 2))
    return 0.5 * linear + 0.5 * mixture_risk + kl_divergence(rho, pi) / beta


def _kkt_residual(g: np.ndarray, p: np.ndarray, tol: float) -> float:
    """Distance to the simplex stationarity certificate at tolerance scale tol."""
    active = p > 10.0 * tol
    if not np.any(active):
        active = p == np.max(p)
    ga = g[active]
    nu = 0.5 * (np.max(ga) + np.min(ga))
    spread = 0.5 * (np.max(ga) - np.min(ga))
    below = float(np.max(nu - g))
    return max(spread, below, 0.0)


def q_aggregation(
    pi: SimplexWeights,
    fc: FiniteClass,
    beta: float,
    cfg: SolverConfig = SolverConfig(),
) -> SolverResult:
    """Minimize the Q-aggregation objective by entropic mirror descent.

    Atoms with zero prior mass cannot be charged by the minimizer (their KL
    cost is infinite) and are dropped before solving.  The initial step is
    beta, which turns the bare update into the fixed-point iteration
    rho <- pi * exp(-beta * grad_smooth(rho)); backtracking halves the step
    until the objective decreases (or, within float granularity of the
    current value, until the KKT residual improves).
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if pi.m != fc.m:
        raise ValueError("prior does not match class size")

    keep = pi.support()
    lp = pi.log_weights[keep]
    F = fc.F[keep]
    y = fc.y
    n = fc.n
    risks = np.mean((F - y) ** 2, axis=1)

    def objective(lw: np.ndarray) -> float:
        p = np.exp(lw)
        mixture = p @ F
        kl = float(p @ (lw - lp))
        return 0.5 * float(p @ risks) + 0.5 * float(np.mean((mixture - y) ** 2)) + max(kl, 0.0) / beta

    def gradient(lw: np.ndarray) -> np.ndarray:
        p = np.exp(lw)
        resid = p @ F - y
        return 0.5 * risks + (F @ resid) / n + (lw - lp + 1.0) / beta

    def normalize(lw: np.ndarray) -> np.ndarray:
        out = lw - logsumexp(lw)
        return out - logsumexp(out)

    def tail_assignment(lw: np.ndarray) -> np.ndarray | None:
        # Atoms below the certificate's active threshold barely feed back
        # into the mixture, yet their log-weights converge only at the damped
        # rate.  Given the current mixture they have an exact stationary
        # position g_j = nu, which this move assigns in closed form (capped
        # so assigned atoms stay out of the active set).
        p = np.exp(lw)
        resid = p @ F - y
        smooth = 0.5 * risks + (F @ resid) / n
        g_now = smooth + (lw - lp + 1.0) / beta
        dominant = p > 10.0 * cfg.tol
        if dominant.all() or not np.any(dominant):
            return None
        gd = g_now[dominant]
        nu = 0.5 * (np.max(gd) + np.min(gd))
        new = lw.copy()
        assigned = lp[~dominant] - 1.0 + beta * (nu - smooth[~dominant])
        new[~dominant] = np.minimum(assigned, np.log(10.0 * cfg.tol))
        return normalize(new)

    def newton_polish(lw: np.ndarray) -> np.ndarray | None:
        # Plateau rescue for badly conditioned dominant blocks: solve the
        # equality-constrained stationarity system on the active atoms by a
        # damped Newton iteration (exact Hessian: Gram/n + diag(1/(beta rho))).
        # The caller accepts the result only if the certificate improves.
        p = np.exp(lw)
        dominant = p > 10.0 * cfg.tol
        k = int(np.sum(dominant))
        if k == 0 or k > 2000:
            return None
        FD = F[dominant]
        rD = risks[dominant]
        lpD = lp[dominant]
        rest = ~dominant
        fixed_mix = p[rest] @ F[rest] if np.any(rest) else np.zeros(n)
        total = 1.0 - float(np.sum(p[rest]))
        rho = p[dominant].copy()
        gram = FD @ FD.T / n
        bordered = np.zeros((k + 1, k + 1))
        bordered[:k, k] = -1.0
        bordered[k, :k] = 1.0
        for _ in range(50):
            grad = 0.5 * rD + FD @ (rho @ FD + fixed_mix - y) / n + (np.log(rho) - lpD + 1.0) / beta
            spread = np.max(grad) - np.min(grad)
            if spread <= 0.01 * cfg.tol:
                break
            bordered[:k, :k] = gram + np.diag(1.0 / (beta * rho))
            rhs = np.concatenate([-grad, [total - float(np.sum(rho))]])
            try:
                sol = np.linalg.solve(bordered, rhs)
            except np.linalg.LinAlgError:
                return None
            delta = sol[:k]
            alpha = 1.0
            for _ in range(60):
                if np.all(rho + alpha * delta > 0):
                    break
                alpha *= 0.5
            else:
                return None
            rho = rho + alpha * delta
        new = lw.copy()
        new[dominant] = np.log(rho)
        return normalize(new)

    lw = lp.copy()
    obj = objective(lw)
    g = gradient(lw)
    kkt = _kkt_residual(g, np.exp(lw), cfg.tol)
    best_lw, best_kkt, best_obj = lw, kkt, obj
    stall = 0
    iterations = 0
    step = beta
    plateau = False

    for _ in range(cfg.max_iter):
        if best_kkt <= cfg.tol:
            break
        if plateau or stall >= _STALL_LIMIT:
            rescued = False
            polished = newton_polish(best_lw)
            candidates = [tail_assignment(best_lw), polished]
            if polished is not None:
                candidates.append(tail_assignment(polished))
            for cand in candidates:
                if cand is None:
                    continue
                cand_g = gradient(cand)
                cand_kkt = _kkt_residual(cand_g, np.exp(cand), cfg.tol)
                if cand_kkt < best_kkt:
                    lw, obj, g, kkt = cand, objective(cand), cand_g, cand_kkt
                    best_lw, best_kkt, best_obj = lw, kkt, obj
                    stall = 0
                    plateau = False
                    rescued = True
            if rescued:
                continue
            break
        iterations += 1

        if cfg.step_rule == "fixed":
            lw = normalize(lw - beta * g)
            obj = objective(lw)
            g = gradient(lw)
            kkt = _kkt_residual(g, np.exp(lw), cfg.tol)
        else:
            # Warm-started search over the (step, step/2) pair.  The larger
            # candidate wins on a measurable objective decrease, otherwise
            # the pair is compared by KKT residual: near the optimum the
            # objective is flat to float granularity while the residual still
            # distinguishes contractive from marginally stable steps.  The
            # noise slack must cover the KL/beta term, whose rounding scales
            # with log-weight magnitude over beta.
            kl_noise = (np.max(np.abs(lw)) + np.max(np.abs(lp)) + 1.0) / beta
            slack = 4.0 * np.finfo(float).eps * (1.0 + abs(obj) + kl_noise)
            accepted = False
            for _ in range(_MAX_BACKTRACKS):
                trial = []
                for s in (step, 0.5 * step):
                    cand = normalize(lw - s * g)
                    cand_obj = objective(cand)
                    cand_g = gradient(cand)
                    cand_kkt = _kkt_residual(cand_g, np.exp(cand), cfg.tol)
                    trial.append((cand, cand_obj, cand_g, cand_kkt, s))
                if trial[0][1] < trial[1][1] - slack:
                    pick = trial[0]
                elif trial[1][1] < trial[0][1] - slack:
                    pick = trial[1]
                else:
                    pick = min(trial, key=lambda t: t[3])
                # Objective decreases below the noise slack do not count as
                # progress; inside that flat basin only residual improvement
                # is accepted, which rules out sub-ulp random walks.
                if pick[1] < obj - slack or (pick[1] <= obj + slack and pick[3] < kkt):
                    lw, obj, g, kkt = pick[0], pick[1], pick[2], pick[3]
                    step = min(2.0 * pick[4], beta) if pick[4] == step else pick[4]
                    accepted = True
                    break
                step *= 0.25
            if not accepted:
                plateau = True
                continue
        if kkt < best_kkt:
            best_lw, best_kkt, best_obj = lw, kkt, obj
            stall = 0
        else:
            stall += 1

    full = np.full(pi.m, -np.inf)
    full[keep] = best_lw
    weights = SimplexWeights(full)
    return SolverResult(
        weights=weights,
        objective=best_obj,
        kkt_residual=best_kkt,
        iterations=iterations,
        converged=bool(best_kkt <= cfg.tol),
    )


def progressive_mixture(fc: FiniteClass, pi: SimplexWeights, c: float, query: np.ndarray) -> np.ndarray:
    """Average the exponential-weights predictors over all sample prefixes.

    Prefix i (observations 1..i) is aggregated at inverse temperature
    beta_i = i / c, so the tilt exponent telescopes to -(cumulative squared
    error)/c; prefix 0 is the prior itself.  Returns the averaged mixture of
    the query rows, (1/(n+1)) sum_i f_{rho_i}(query).
    """
    if c < 8:
        raise ValueError("c must be >= 8")
    q = np.asarray(query, dtype=float)
    if q.ndim != 2 or q.shape[0] != fc.m or pi.m != fc.m:
        raise ValueError("dimension mismatch")
    errors = (fc.F - fc.y) ** 2
    cumulative = np.cumsum(errors, axis=1)  # column i-1 holds i * R_i
    exponents = np.vstack([np.zeros(fc.m), -cumulative.T / c])  # (n+1) x M
    logw = pi.log_weights + exponents
    logw -= logsumexp(logw, axis=1, keepdims=True)
    weights = np.exp(logw)
    return weights.mean(axis=0) @ q


def sure_exp_weights(pi: SimplexWeights, fc: FiniteClass, sigma: float, beta: float) -> float:
    """Per-observation SURE of the exponential-weights predictor.

    Closed form: <rho, R_n> + (4 beta sigma^2 / n - 1) V_n(rho) - sigma^2,
    with rho the exponential-weights posterior at inverse temperature beta.
    Under Gaussian noise its expectation equals E ||f_rho - f*||_n^2.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    rho = exp_weights(pi, fc, beta)
    risks = empirical_risks(fc).values
    linear = float(rho.probs @ risks)
    variance = empirical_variance(rho, fc.F, fc.y)
    return linear + (4.0 * beta * sigma**2 / fc.n - 1.0) * variance - sigma**2
