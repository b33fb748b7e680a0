"""Identification accuracy metrics and the end-to-end identify driver.

Accuracy is scored exclusively through trajectory fidelity: the identified
model re-propagates the noisy initial state and the resulting series is
compared pointwise against the exact one via the Uhlmann fidelity

    F(rho, sigma) = Tr sqrt( sqrt(rho) sigma sqrt(rho) ),

with F_min the minimum over the trajectory. Model parameters themselves
are never compared (unitary mixing of Kraus operators, jump-operator
phases and Hamiltonian trace shifts leave the trajectory invariant).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import (
    KrausSet,
    LindbladModel,
    TimeSeries,
    apply_kraus,
    lindbladian_superoperator,
)
from .linalg import (
    as_matrix,
    hermitian_part,
    matrix_exp,
    psd_sqrt,
    validate_density_matrix,
    vectorize,
)
from .objectives import (
    DEFAULT_PENALTY_WEIGHT,
    ObjectiveFunction,
    ParameterLayout,
    integral_objective,
    kraus_objective,
    pade_objective,
)
from .optimize import OptimizationResult, OptimizerConfig, basin_hopping, bfgs_minimize

METHODS = ("kraus", "pade", "trapezoid", "simpson")

# Penalty continuation for the Kraus completeness constraint.
COMPLETENESS_TARGET = 1e-3
CONTINUATION_ROUNDS = 5

# A repropagated state whose smallest eigenvalue drops below -PSD_CLAMP_LIMIT
# is considered non-physical; milder violations are clamped.
PSD_CLAMP_LIMIT = 1e-4


class NonPhysicalTrajectory(ValueError):
    """Raised when a repropagated state is too far from a valid density matrix."""


@dataclass
class IdentifiedModel:
    kind: str  # kraus | lindblad-pade | lindblad-trapezoid | lindblad-simpson
    model: KrausSet | LindbladModel
    optimization: OptimizationResult
    completeness_residual: float | None = None

    @property
    def n(self) -> int:
        return self.model.n


def fidelity(rho: np.ndarray, sigma: np.ndarray, validation_tol: float = 1e-6) -> float:
    """Uhlmann fidelity of two density matrices, clamped to [0, 1]."""
    rho = as_matrix(rho)
    sigma = as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    validate_density_matrix(rho, validation_tol)
    validate_density_matrix(sigma, validation_tol)
    root = psd_sqrt(rho, clamp_tol=validation_tol)
    inner = root @ sigma @ root
    w = np.linalg.eigvalsh(hermitian_part(inner))
    value = float(np.sum(np.sqrt(np.clip(w, 0.0, None))))
    clamped = min(max(value, 0.0), 1.0)
    if abs(value - clamped) > 1e-6:
        warnings.warn(f"fidelity value {value:.8f} clamped to [0, 1]")
    return clamped


def min_fidelity(exact: TimeSeries, sid: TimeSeries) -> float:
    """Pointwise fidelity minimum over two equal-length trajectories."""
    if exact.states.shape != sid.states.shape:
        raise ValueError(
            f"series shapes differ: {exact.states.shape} vs {sid.states.shape}"
        )
    return min(
        fidelity(a, b) for a, b in zip(exact.states, sid.states)
    )


def clamp_to_density(m: np.ndarray, psd_limit: float = PSD_CLAMP_LIMIT) -> tuple[np.ndarray, float]:
    """Project a near-density matrix onto the valid set.

    Re-Hermitizes, clamps negative eigenvalues to zero and renormalizes the
    trace. Returns (state, clamp_amount) where clamp_amount is the most
    negative eigenvalue removed; raises NonPhysicalTrajectory when that
    exceeds ``psd_limit``.
    """
    m = hermitian_part(as_matrix(m))
    w, v = np.linalg.eigh(m)
    clamp_amount = float(max(0.0, -w[0]))
    if clamp_amount > psd_limit:
        raise NonPhysicalTrajectory(
            f"eigenvalue {w[0]:.3e} below -{psd_limit:.0e}; trajectory is non-physical"
        )
    w = np.clip(w, 0.0, None)
    trace = float(np.sum(w))
    if trace <= 0:
        raise NonPhysicalTrajectory("state collapsed to zero trace")
    w = w / trace
    return hermitian_part((v * w) @ v.conj().T), clamp_amount


def repropagate(
    identified: IdentifiedModel, rho0: np.ndarray, dt: float, num_steps: int
) -> TimeSeries:
    """Propagate rho0 under the identified model.

    Raw propagation is exact (channel iteration or superoperator
    exponential); each stored state is projected with
    :func:`clamp_to_density`, tolerating PSD violations up to 1e-4.
    The maximum clamped amount is recorded in the series metadata.
    """
    rho0 = as_matrix(rho0)
    n = identified.n
    states = np.empty((num_steps + 1, n, n), dtype=complex)
    max_clamp = 0.0
    states[0], clamp = clamp_to_density(rho0)
    max_clamp = max(max_clamp, clamp)

    if isinstance(identified.model, KrausSet):
        rho = rho0
        for i in range(1, num_steps + 1):
            rho = apply_kraus(identified.model, rho)
            states[i], clamp = clamp_to_density(rho)
            max_clamp = max(max_clamp, clamp)
    else:
        propagator = matrix_exp(dt * lindbladian_superoperator(identified.model))
        vec = vectorize(rho0)
        for i in range(1, num_steps + 1):
            vec = propagator @ vec
            states[i], clamp = clamp_to_density(vec.reshape((n, n), order="F"))
            max_clamp = max(max_clamp, clamp)

    metadata = {"generator": f"repropagated:{identified.kind}", "max_clamp": max_clamp}
    return TimeSeries(dt=dt, states=states, metadata=metadata)


def build_objective(
    series: TimeSeries, method: str, ell: int, mu: float = DEFAULT_PENALTY_WEIGHT
) -> ObjectiveFunction:
    """Objective factory keyed by method name."""
    if method == "kraus":
        return kraus_objective(series, ell, mu)
    if method == "pade":
        return pade_objective(series, ell)
    if method in ("trapezoid", "simpson"):
        return integral_objective(series, ell, method)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def initial_guess(layout: ParameterLayout, rng: np.random.Generator) -> np.ndarray:
    """Initialization policy: near-identity Kraus sets, near-zero Lindblad models."""
    n = layout.n
    if layout.kind == "kraus":
        blocks = []
        for k in range(layout.ell):
            re = 0.01 * rng.standard_normal((n, n)) / np.sqrt(2)
            im = 0.01 * rng.standard_normal((n, n)) / np.sqrt(2)
            if k == 0:
                re = re + np.eye(n)
            blocks.append(np.concatenate([re.ravel(), im.ravel()]))
        return np.concatenate(blocks)
    return 0.1 * rng.standard_normal(layout.size)


def identify(
    series: TimeSeries,
    method: str,
    ell: int,
    cfg: OptimizerConfig,
    mu: float = DEFAULT_PENALTY_WEIGHT,
) -> IdentifiedModel:
    """Full identification pipeline for one time series.

    Builds the requested objective, draws the initial point from the
    documented policy, runs basin hopping, and decodes the best parameters.
    For the Kraus method a penalty continuation loop multiplies mu by 10
    (warm-started local re-optimization, up to 5 rounds) until the
    completeness residual drops to 1e-3.

    An unconverged optimizer still yields an IdentifiedModel; the caller
    decides what to do with it. For the Kraus method, failing to meet the
    completeness target within the continuation budget marks the result
    unconverged, since the constrained problem was not solved.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    objective = build_objective(series, method, ell, mu)
    rng = np.random.default_rng([cfg.seed, 1])
    x0 = initial_guess(objective.layout, rng)
    result = basin_hopping(objective, x0, cfg)

    residual = None
    if method == "kraus":
        decoded = objective.layout.decode(result.best_params)
        residual = decoded.completeness_residual
        rounds = 0
        while residual > COMPLETENESS_TARGET and rounds < CONTINUATION_ROUNDS:
            mu *= 10.0
            objective = build_objective(series, method, ell, mu)
            run = bfgs_minimize(objective, result.best_params, cfg)
            result = replace(
                run,
                converged=result.converged or run.converged,
                local_runs=result.local_runs + run.local_runs,
                total_evals=result.total_evals + run.total_evals,
                wall_time=result.wall_time + run.wall_time,
            )
            decoded = objective.layout.decode(result.best_params)
            residual = decoded.completeness_residual
            rounds += 1
        if residual > COMPLETENESS_TARGET:
            result = replace(result, converged=False)
        kind = "kraus"
        model = decoded
    else:
        model = objective.layout.decode(result.best_params)
        kind = f"lindblad-{method}"

    return IdentifiedModel(
        kind=kind,
        model=model,
        optimization=result,
        completeness_residual=residual,
    )
