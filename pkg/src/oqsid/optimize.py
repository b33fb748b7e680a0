"""Quasi-Newton local minimizer and basin-hopping global wrapper.

The local method is BFGS with the inverse-Hessian update and a strong-Wolfe
line search (bracket + zoom with safeguarded interpolation). The global
wrapper perturbs the accepted point uniformly per coordinate, re-minimizes,
and accepts via the Metropolis rule. Everything is deterministic given the
config seed; the RNG is local to each call.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OptimizerConfig:
    g_tol: float = 1e-6
    max_iter: int = 500
    hops: int = 30
    step_size: float = 0.5
    temperature: float = 1.0
    c1: float = 1e-4
    c2: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.c1 < self.c2 < 1):
            raise ValueError("Wolfe constants must satisfy 0 < c1 < c2 < 1")
        if self.g_tol <= 0 or self.temperature <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1 or self.hops < 0 or self.step_size < 0:
            raise ValueError("max_iter >= 1, hops >= 0, step_size >= 0 required")


@dataclass
class OptimizationResult:
    best_params: np.ndarray
    best_value: float
    best_grad_norm: float
    converged: bool
    local_runs: int
    total_evals: int
    wall_time: float


def _as_evaluator(objective):
    return objective.evaluate if hasattr(objective, "evaluate") else objective


class _CountedObjective:
    """Wraps value-and-gradient evaluation; non-finite values become +inf."""

    def __init__(self, objective):
        self._evaluate = _as_evaluator(objective)
        self.evals = 0

    def __call__(self, x):
        self.evals += 1
        value, grad = self._evaluate(x)
        grad = np.asarray(grad, dtype=float)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            return np.inf, grad
        return float(value), grad


def bfgs_minimize(objective, x0, cfg: OptimizerConfig) -> OptimizationResult:
    """BFGS with strong-Wolfe line search.

    Terminates with converged=True when the gradient norm drops to
    cfg.g_tol; otherwise runs out of iterations or dies on a line-search
    failure (after one identity reset of the inverse Hessian). Never
    returns a point worse than x0.
    """
    start = time.perf_counter()
    fun = _CountedObjective(objective)
    x = np.array(x0, dtype=float)
    dim = x.size
    f, g = fun(x)
    converged = False
    if np.isfinite(f):
        eye = np.eye(dim)
        hinv = eye.copy()
        first_update = True
        for _ in range(cfg.max_iter):
            if float(np.linalg.norm(g)) <= cfg.g_tol:
                converged = True
                break
            p = -(hinv @ g)
            fresh_start = False
            if float(g @ p) >= 0:
                # numerical loss of descent; restart curvature estimate
                hinv = eye.copy()
                first_update = True
                fresh_start = True
                p = -g
            step = _wolfe_line_search(fun, x, p, f, g, cfg.c1, cfg.c2)
            if step is None and not fresh_start:
                # reset the Hessian estimate and retry once; dead if that fails too
                hinv = eye.copy()
                first_update = True
                p = -g
                step = _wolfe_line_search(fun, x, p, f, g, cfg.c1, cfg.c2)
            if step is None:
                break
            alpha, f_new, g_new = step
            s = alpha * p
            y = g_new - g
            x = x + s
            f, g = f_new, g_new
            sy = float(y @ s)
            if sy > 1e-12:
                if first_update:
                    # standard initial scaling of the inverse Hessian estimate
                    hinv = (sy / float(y @ y)) * eye
                    first_update = False
                hy = hinv @ y
                rho = 1.0 / sy
                hinv = (
                    hinv
                    + (rho * rho * float(y @ hy) + rho) * np.outer(s, s)
                    - rho * (np.outer(hy, s) + np.outer(s, hy))
                )
        if not converged:
            converged = float(np.linalg.norm(g)) <= cfg.g_tol
    return OptimizationResult(
        best_params=x,
        best_value=f,
        best_grad_norm=float(np.linalg.norm(g)),
        converged=converged,
        local_runs=1,
        total_evals=fun.evals,
        wall_time=time.perf_counter() - start,
    )


def basin_hopping(objective, x0, cfg: OptimizerConfig) -> OptimizationResult:
    """Global stepping: uniform perturbation, local BFGS, Metropolis accept.

    Tracks the global best over all local runs; converged=True iff at
    least one local run converged. With hops=0 this degenerates to a
    single :func:`bfgs_minimize`.
    """
    start = time.perf_counter()
    rng = np.random.default_rng(cfg.seed)
    x0 = np.asarray(x0, dtype=float)

    result = bfgs_minimize(objective, x0, cfg)
    best = result
    accepted_x = result.best_params
    accepted_f = result.best_value
    any_converged = result.converged
    total_evals = result.total_evals

    for _ in range(cfg.hops):
        x_try = accepted_x + rng.uniform(-cfg.step_size, cfg.step_size, size=x0.size)
        run = bfgs_minimize(objective, x_try, cfg)
        total_evals += run.total_evals
        any_converged = any_converged or run.converged
        if run.best_value < best.best_value:
            best = run
        delta = run.best_value - accepted_f
        if delta < 0 or rng.uniform() < np.exp(-delta / cfg.temperature):
            accepted_x = run.best_params
            accepted_f = run.best_value

    return OptimizationResult(
        best_params=best.best_params,
        best_value=best.best_value,
        best_grad_norm=best.best_grad_norm,
        converged=any_converged,
        local_runs=1 + cfg.hops,
        total_evals=total_evals,
        wall_time=time.perf_counter() - start,
    )


def finite_diff_gradient(objective, x, h=1e-6) -> np.ndarray:
    """Central-difference gradient (test oracle).

    Accepts an :class:`~oqsid.objectives.ObjectiveFunction` or any callable
    returning a scalar; ``h`` may be a scalar or per-coordinate array.
    """
    if hasattr(objective, "value"):
        value = objective.value
    elif hasattr(objective, "evaluate"):
        value = lambda z: objective.evaluate(z)[0]
    else:
        value = objective
    x = np.asarray(x, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), x.shape)
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h[i]
        grad[i] = (value(x + step) - value(x - step)) / (2 * h[i])
    return grad


def _wolfe_line_search(fun, x, p, f0, g0, c1, c2, max_brackets=20, max_zoom=30):
    """Strong-Wolfe line search; returns (alpha, f, g) or None on failure."""
    dphi0 = float(g0 @ p)
    if not np.isfinite(dphi0) or dphi0 >= 0:
        return None

    def phi(alpha):
        f, g = fun(x + alpha * p)
        d = float(g @ p) if np.isfinite(f) else np.inf
        return f, g, d

    def zoom(a_lo, f_lo, d_lo, a_hi, f_hi):
        for _ in range(max_zoom):
            lo, hi = (a_lo, a_hi) if a_lo < a_hi else (a_hi, a_lo)
            if hi - lo <= 1e-14 * max(1.0, hi):
                return None
            a = _quadratic_min(a_lo, f_lo, d_lo, a_hi, f_hi)
            margin = 0.1 * (hi - lo)
            if not np.isfinite(a) or a < lo + margin or a > hi - margin:
                a = 0.5 * (lo + hi)
            f, g, d = phi(a)
            if f > f0 + c1 * a * dphi0 or f >= f_lo:
                a_hi, f_hi = a, f
            else:
                if abs(d) <= -c2 * dphi0:
                    return a, f, g
                if d * (a_hi - a_lo) >= 0:
                    a_hi, f_hi = a_lo, f_lo
                a_lo, f_lo, d_lo = a, f, d
        return None

    a_prev, f_prev, d_prev = 0.0, f0, dphi0
    a = 1.0
    for it in range(max_brackets):
        f, g, d = phi(a)
        if f > f0 + c1 * a * dphi0 or (it > 0 and f >= f_prev):
            return zoom(a_prev, f_prev, d_prev, a, f)
        if abs(d) <= -c2 * dphi0:
            return a, f, g
        if d >= 0:
            return zoom(a, f, d, a_prev, f_prev)
        a_prev, f_prev, d_prev = a, f, d
        a *= 2.0
    return None


def _quadratic_min(a_lo, f_lo, d_lo, a_hi, f_hi):
    """Minimizer of the quadratic through (a_lo, f_lo, d_lo) and (a_hi, f_hi)."""
    da = a_hi - a_lo
    denom = 2.0 * (f_hi - f_lo - d_lo * da)
    if denom == 0.0 or not np.isfinite(denom):
        return np.nan
    return a_lo - d_lo * da * da / denom
