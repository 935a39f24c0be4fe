"""Regularized optimal-transport solvers over token or phrase sequences.

Two solver entry points share one scaling loop: entropy-regularized
transport (kernel exp(-D/reg)) and transport with a KL pull toward a prior
alignment (kernel Pi * exp(-D/eps)).  Both run in the plain domain and
switch to log-domain scalings automatically when the kernel underflows.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

MARGINAL_ATOL = 1e-12
PRIOR_FLOOR = 1e-12
_LOG_DOMAIN_THRESHOLD = 1e-300


class DegenerateSentenceError(ValueError):
    """A sentence carries no transport mass (every w_i * ||v_i|| is zero)."""


@dataclass(frozen=True)
class TransportProblem:
    """Cost matrix with source/target marginals, both summing to one."""

    cost: np.ndarray
    mu: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        m, n = self.cost.shape
        if self.mu.shape != (m,) or self.nu.shape != (n,):
            raise ValueError("marginal shapes do not match the cost matrix")
        if not np.all(np.isfinite(self.cost)):
            raise ValueError("cost matrix must be finite")
        if np.any(self.mu < 0) or np.any(self.nu < 0):
            raise ValueError("marginals must be nonnegative")
        if abs(self.mu.sum() - 1.0) > MARGINAL_ATOL or abs(self.nu.sum() - 1.0) > MARGINAL_ATOL:
            raise ValueError("marginals must sum to one")

    @property
    def shape(self) -> tuple[int, int]:
        return self.cost.shape


@dataclass(frozen=True)
class AlignmentMatrix:
    """Transport plan with its achieved marginal residuals.

    ``history`` records the per-iteration residuals of the final scaling
    loop (diagnostics only).
    """

    gamma: np.ndarray
    residual: float
    iterations: int
    converged: bool
    history: tuple[float, ...] = ()

    @property
    def shape(self) -> tuple[int, int]:
        return self.gamma.shape


def wrd_marginals(seq) -> np.ndarray:
    """Marginal masses proportional to weight times vector norm.

    Zero-mass entries stay exactly zero (they are excluded from transport
    by the reduced solver).  A sequence with no mass at all raises
    DegenerateSentenceError.
    """
    mass = seq.weights * np.linalg.norm(seq.vectors, axis=1)
    total = mass.sum()
    if total <= 0:
        raise DegenerateSentenceError("sentence has no transport mass")
    return mass / total


def cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities; any zero vector has cosine 0."""
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    denom = np.outer(np.where(na > 0, na, 1.0), np.where(nb > 0, nb, 1.0))
    sim = (a @ b.T) / denom
    sim[na == 0, :] = 0.0
    sim[:, nb == 0] = 0.0
    return np.clip(sim, -1.0, 1.0)


def cosine_cost(a, b) -> np.ndarray:
    """Cost 1 - cos(v_i, v_j), entries in [0, 2].

    Accepts raw (m, d) arrays or sequence objects exposing ``vectors``.
    """
    va = a.vectors if hasattr(a, "vectors") else np.asarray(a, dtype=np.float64)
    vb = b.vectors if hasattr(b, "vectors") else np.asarray(b, dtype=np.float64)
    return np.clip(1.0 - cosine_matrix(va, vb), 0.0, 2.0)


def _scaling_loop_plain(kernel, mu, nu, max_iter, tol):
    v = np.ones_like(nu)
    best = None
    history: list[float] = []
    kv = kernel @ v
    for it in range(1, max_iter + 1):
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(kv > 0, mu / kv, 0.0)
            ktu = kernel.T @ u
            v = np.where(ktu > 0, nu / ktu, 0.0)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            return None  # overflow: caller retries in the log domain
        kv = kernel @ v
        residual = float(np.max(np.abs(u * kv - mu)))
        history.append(residual)
        if best is None or residual < best[1]:
            gamma = (u[:, None] * kernel) * v[None, :]
            best = (gamma, residual, it)
        if residual < tol:
            return AlignmentMatrix(best[0], residual, it, True, tuple(history))
    gamma, residual, it = best
    return AlignmentMatrix(gamma, residual, it, False, tuple(history))


def _scaling_loop_log(log_kernel, log_mu, log_nu, mu, nu, max_iter, tol, f, g):
    """Log-domain scalings from warm-start potentials; returns the result
    plus the final potentials for annealed restarts."""
    best = None
    history: list[float] = []
    for it in range(1, max_iter + 1):
        f = log_mu - logsumexp(log_kernel + g[None, :], axis=1)
        g = log_nu - logsumexp(log_kernel + f[:, None], axis=0)
        gamma = np.exp(log_kernel + f[:, None] + g[None, :])
        residual = float(
            max(np.max(np.abs(gamma.sum(axis=1) - mu)), np.max(np.abs(gamma.sum(axis=0) - nu)))
        )
        history.append(residual)
        if best is None or residual < best[1]:
            best = (gamma, residual, it)
        if residual < tol:
            return AlignmentMatrix(gamma, residual, it, True, tuple(history)), f, g
    gamma, residual, it = best
    return AlignmentMatrix(gamma, residual, it, False, tuple(history)), f, g


_ANNEAL_START = 1.0
_ANNEAL_ITERS = 1000
_ANNEAL_TOL = 1e-6


def _solve_log_annealed(log_affinity, cost, strength, mu, nu, max_iter, tol):
    """Log-domain solve of kernel exp(log_affinity - cost/strength), with
    the strength annealed downward from 1 so that small strengths converge
    (plain Sinkhorn stalls there).  Potentials rescale by the strength
    ratio across stages, which is what makes the warm start effective.
    """
    with np.errstate(divide="ignore"):
        log_mu = np.log(mu)
        log_nu = np.log(nu)
    f = np.zeros_like(mu)
    g = np.zeros_like(nu)
    t = max(_ANNEAL_START, strength)
    while t > strength:
        _, f, g = _scaling_loop_log(
            log_affinity - cost / t, log_mu, log_nu, mu, nu, _ANNEAL_ITERS, _ANNEAL_TOL, f, g
        )
        t_next = max(strength, t / 2.0)
        f, g = f * (t / t_next), g * (t / t_next)
        t = t_next
    result, _, _ = _scaling_loop_log(
        log_affinity - cost / strength, log_mu, log_nu, mu, nu, max_iter, tol, f, g
    )
    return result


def _round_to_feasible(gamma, mu, nu):
    """Project an almost-feasible plan onto the transport polytope: damp
    overfull rows and columns, then spread the missing mass as a rank-one
    correction."""
    row = gamma.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale_r = np.where(row > 0, np.minimum(1.0, mu / row), 0.0)
    g = gamma * scale_r[:, None]
    col = g.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale_c = np.where(col > 0, np.minimum(1.0, nu / col), 0.0)
    g = g * scale_c[None, :]
    err_r = mu - g.sum(axis=1)
    err_c = nu - g.sum(axis=0)
    total = err_r.sum()
    if total > 0:
        g = g + np.outer(err_r, err_c) / total
    return g


def _solve(log_affinity, cost, strength, mu, nu, max_iter, tol):
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    log_kernel = log_affinity - cost / strength
    result = None
    if np.min(log_kernel) > np.log(_LOG_DOMAIN_THRESHOLD):
        result = _scaling_loop_plain(np.exp(log_kernel), mu, nu, max_iter, tol)
    if result is None or not result.converged:
        retry = _solve_log_annealed(log_affinity, cost, strength, mu, nu, max_iter, tol)
        if result is None or retry.residual < result.residual:
            result = retry
    if not result.converged:
        warnings.warn(
            f"Sinkhorn stopped after {result.iterations} iterations with "
            f"marginal residual {result.residual:.3e}; returning the "
            "feasibility-rounded best iterate",
            stacklevel=3,
        )
        gamma = _round_to_feasible(result.gamma, mu, nu)
        residual = float(
            max(np.max(np.abs(gamma.sum(axis=1) - mu)), np.max(np.abs(gamma.sum(axis=0) - nu)))
        )
        result = AlignmentMatrix(
            gamma, residual, result.iterations, False, result.history
        )
    return result


def sinkhorn_entropy(
    prob: TransportProblem,
    reg: float = 0.1,
    max_iter: int = 10000,
    tol: float = 1e-9,
) -> AlignmentMatrix:
    """Entropy-regularized transport via alternating scalings of
    exp(-D/reg)."""
    if reg <= 0:
        raise ValueError("regularization strength must be positive")
    return _solve(
        np.zeros(prob.shape), prob.cost, reg, prob.mu, prob.nu, max_iter, tol
    )


def sinkhorn_prior(
    prob: TransportProblem,
    prior: np.ndarray,
    eps: float,
    max_iter: int = 10000,
    tol: float = 1e-9,
) -> AlignmentMatrix:
    """Minimize sum(Gamma * D) + eps * KL(Gamma || prior) over the
    transport polytope, by scalings of the kernel prior * exp(-D/eps).

    Prior entries are floored at 1e-12 to keep the KL term finite; for a
    feasible prior and very large eps the plan converges to the prior.
    """
    if eps <= 0:
        raise ValueError("prior strength eps must be positive")
    if prior.shape != prob.shape:
        raise ValueError("prior shape does not match the problem")
    floored = np.maximum(prior, PRIOR_FLOOR)
    return _solve(np.log(floored), prob.cost, eps, prob.mu, prob.nu, max_iter, tol)


def product_prior(mu: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """Independence prior mu nu^T (the implicit alignment of additive
    composition)."""
    return np.outer(mu, nu)


def solve_reduced(
    prob: TransportProblem,
    reg: float | None = None,
    prior: np.ndarray | None = None,
    eps: float | None = None,
    max_iter: int = 10000,
    tol: float = 1e-9,
) -> AlignmentMatrix:
    """Strip zero-mass rows/columns, solve, and reinsert zero rows/columns.

    With ``prior``/``eps`` given this wraps the prior solver, else the
    entropic solver with ``reg``.
    """
    keep_r = prob.mu > 0
    keep_c = prob.nu > 0
    if not keep_r.any() or not keep_c.any():
        raise DegenerateSentenceError("all transport mass stripped")
    if keep_r.all() and keep_c.all():
        sub, restore = prob, None
    else:
        sub = TransportProblem(
            cost=prob.cost[np.ix_(keep_r, keep_c)],
            mu=prob.mu[keep_r],
            nu=prob.nu[keep_c],
        )
        restore = (keep_r, keep_c)

    if prior is not None:
        if eps is None:
            raise ValueError("prior transport requires eps")
        sub_prior = prior if restore is None else prior[np.ix_(keep_r, keep_c)]
        total = sub_prior.sum()
        if total > 0:
            sub_prior = sub_prior / total
        result = sinkhorn_prior(sub, sub_prior, eps, max_iter=max_iter, tol=tol)
    else:
        if reg is None:
            raise ValueError("entropic transport requires reg")
        result = sinkhorn_entropy(sub, reg, max_iter=max_iter, tol=tol)

    if restore is None:
        return result
    gamma = np.zeros(prob.shape)
    gamma[np.ix_(keep_r, keep_c)] = result.gamma
    return AlignmentMatrix(gamma, result.residual, result.iterations, result.converged)


def transport_cost(gamma: np.ndarray, cost: np.ndarray) -> float:
    return float(np.sum(gamma * cost))


def entropic_objective(gamma: np.ndarray, cost: np.ndarray, reg: float) -> float:
    """Transport cost plus reg times negative entropy (0 log 0 = 0)."""
    pos = gamma[gamma > 0]
    return transport_cost(gamma, cost) + reg * float(np.sum(pos * np.log(pos)))


def prior_objective(gamma: np.ndarray, cost: np.ndarray, prior: np.ndarray, eps: float) -> float:
    """Transport cost plus eps times KL(gamma || prior)."""
    floored = np.maximum(prior, PRIOR_FLOOR)
    mask = gamma > 0
    kl = float(np.sum(gamma[mask] * (np.log(gamma[mask]) - np.log(floored[mask]))))
    return transport_cost(gamma, cost) + eps * kl


def exact_ot_oracle(prob: TransportProblem) -> AlignmentMatrix:
    """Exact optimum of the unregularized problem, for instances with at
    most 25 plan entries.  Solved as a linear program (independent of the
    scaling solvers)."""
    m, n = prob.shape
    if m * n > 25:
        raise ValueError("oracle limited to problems with at most 25 entries")
    # equality constraints: all row sums, and all but one column sum
    a_eq = np.zeros((m + n - 1, m * n))
    b_eq = np.zeros(m + n - 1)
    for i in range(m):
        a_eq[i, i * n : (i + 1) * n] = 1.0
        b_eq[i] = prob.mu[i]
    for j in range(n - 1):
        a_eq[m + j, j::n] = 1.0
        b_eq[m + j] = prob.nu[j]
    res = linprog(
        prob.cost.ravel(),
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"exact transport LP failed: {res.message}")
    gamma = res.x.reshape(m, n)
    residual = float(
        max(np.max(np.abs(gamma.sum(axis=1) - prob.mu)), np.max(np.abs(gamma.sum(axis=0) - prob.nu)))
    )
    return AlignmentMatrix(gamma, residual, 0, True)
