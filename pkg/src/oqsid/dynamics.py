"""Model generation, exact propagation, and noise injection.

The master equation implemented here is, with hbar = 1,

    L[rho] = i [H, rho] + sum_j (2 A_j rho A_j^dag - {A_j^dag A_j, rho})

with the sign of the commutator term and the factor-2 dissipator taken
as-is. Generation and identification share this convention, so it is
self-consistent; note the +i commutator means an identified H equals the
negative of the conventionally defined Hamiltonian.

Random generators take an explicit ``numpy.random.Generator``; nothing in
this module touches global RNG state. "Standard complex Gaussian" entries
have independent real and imaginary parts of variance 1/2, so E|g|^2 = 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    as_matrix,
    dagger,
    frobenius_norm,
    hermitian_part,
    matrix_exp,
    sandwich_superop,
    validate_density_matrix,
    vectorize,
)

DEFAULT_JUMP_SCALE = 0.1


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian plus jump operators defining the master equation above."""

    h: np.ndarray
    jumps: tuple[np.ndarray, ...]

    def __post_init__(self):
        h = as_matrix(self.h)
        if h.shape[0] != h.shape[1]:
            raise ValueError("H must be square")
        defect = frobenius_norm(h - dagger(h))
        if defect > 1e-12 * max(frobenius_norm(h), 1.0):
            raise ValueError(f"H is not Hermitian (defect {defect:.3e})")
        jumps = tuple(as_matrix(a) for a in self.jumps)
        for a in jumps:
            if a.shape != h.shape:
                raise ValueError("every jump operator must be n x n")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "jumps", jumps)

    @property
    def n(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class KrausSet:
    """Operator-sum representation rho -> sum_k E_k rho E_k^dag."""

    ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(as_matrix(e) for e in self.ops)
        if not ops:
            raise ValueError("KrausSet needs at least one operator")
        n = ops[0].shape[0]
        for e in ops:
            if e.shape != (n, n):
                raise ValueError("all Kraus operators must share one square shape")
        object.__setattr__(self, "ops", ops)

    @property
    def n(self) -> int:
        return self.ops[0].shape[0]

    @property
    def completeness_residual(self) -> float:
        """||sum_k E_k^dag E_k - I||_F. ~0 for a trace-preserving channel."""
        n = self.n
        acc = np.zeros((n, n), dtype=complex)
        for e in self.ops:
            acc += dagger(e) @ e
        return frobenius_norm(acc - np.eye(n))

    def require_complete(self, tol: float = 1e-10) -> None:
        r = self.completeness_residual
        if r > tol:
            raise ValueError(f"completeness residual {r:.3e} exceeds {tol:.3e}")


@dataclass
class TimeSeries:
    """Uniformly sampled trajectory rho_(0), ..., rho_(N) with step dt.

    ``states`` has shape (N+1, n, n); ``metadata`` carries provenance
    (seed, generator description, noise weight w).
    """

    dt: float
    states: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=complex)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.states.ndim != 3 or self.states.shape[1] != self.states.shape[2]:
            raise ValueError("states must have shape (N+1, n, n)")
        if self.states.shape[0] < 2:
            raise ValueError("a time series needs at least two states (N >= 1)")

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def num_steps(self) -> int:
        """N, the number of transitions (len(states) - 1)."""
        return self.states.shape[0] - 1

    def validate(self, tol: float = 1e-8) -> None:
        """Check every stored state against the density-matrix invariants."""
        for i, rho in enumerate(self.states):
            try:
                validate_density_matrix(rho, tol)
            except ValueError as exc:
                raise ValueError(f"state {i} is not a valid density matrix: {exc}") from exc


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    """H = (G + G^dag)/2 with G standard complex Gaussian; exactly Hermitian."""
    if n < 2:
        raise ValueError("n must be at least 2")
    g = _complex_gaussian(n, rng)
    return (g + dagger(g)) / 2


def random_density_matrix(n: int, rng: np.random.Generator) -> np.ndarray:
    """Ginibre state rho = G G^dag / Tr(G G^dag); PSD with unit trace by construction."""
    g = _complex_gaussian(n, rng)
    w = g @ dagger(g)
    return w / np.trace(w).real


def random_jump_operator(
    n: int, rng: np.random.Generator, scale: float = DEFAULT_JUMP_SCALE
) -> np.ndarray:
    """sqrt(scale) * G with G standard complex Gaussian; generally non-Hermitian."""
    if scale < 0:
        raise ValueError("scale must be non-negative")
    if scale == 0:
        warnings.warn("jump operator scale 0 gives a degenerate zero operator")
    return np.sqrt(scale) * _complex_gaussian(n, rng)


def _complex_gaussian(n: int, rng: np.random.Generator) -> np.ndarray:
    re = rng.standard_normal((n, n))
    im = rng.standard_normal((n, n))
    return (re + 1j * im) / np.sqrt(2)


def lindbladian_apply(model: LindbladModel, rho: np.ndarray) -> np.ndarray:
    """Evaluate L[rho] for the master equation in the module docstring."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != model.h.shape:
        raise ValueError(f"state shape {rho.shape} does not match model dimension {model.n}")
    out = 1j * (model.h @ rho - rho @ model.h)
    for a in model.jumps:
        ad = dagger(a)
        ada = ad @ a
        out += 2 * (a @ rho @ ad) - ada @ rho - rho @ ada
    return out


def lindbladian_superoperator(model: LindbladModel) -> np.ndarray:
    """The n^2 x n^2 matrix Lmat with Lmat vec(rho) = vec(L[rho])."""
    n = model.n
    eye = np.eye(n)
    lmat = 1j * (sandwich_superop(model.h, eye) - sandwich_superop(eye, model.h))
    for a in model.jumps:
        ada = dagger(a) @ a
        lmat += (
            2 * sandwich_superop(a, dagger(a))
            - sandwich_superop(ada, eye)
            - sandwich_superop(eye, ada)
        )
    return lmat


def propagate_lindblad(
    model: LindbladModel,
    rho0: np.ndarray,
    dt: float,
    num_steps: int,
    metadata: dict | None = None,
) -> TimeSeries:
    """Exact stroboscopic propagation rho_(i+1) = e^(dt L) rho_(i).

    The superoperator exponential is computed once; every stored state is
    re-Hermitized as (M + M^dag)/2 and validated with tolerance 1e-8.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if num_steps < 1:
        raise ValueError("num_steps must be at least 1")
    rho0 = as_matrix(rho0)
    n = model.n
    propagator = matrix_exp(dt * lindbladian_superoperator(model))
    states = np.empty((num_steps + 1, n, n), dtype=complex)
    states[0] = hermitian_part(rho0)
    vec = vectorize(rho0)
    for i in range(1, num_steps + 1):
        vec = propagator @ vec
        states[i] = hermitian_part(vec.reshape((n, n), order="F"))
    series = TimeSeries(dt=dt, states=states, metadata=dict(metadata or {}))
    series.validate(tol=1e-8)
    return series


def apply_kraus(kraus: KrausSet, rho: np.ndarray) -> np.ndarray:
    """Operator-sum evaluation sum_k E_k rho E_k^dag."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (kraus.n, kraus.n):
        raise ValueError(f"state shape {rho.shape} does not match channel dimension {kraus.n}")
    out = np.zeros_like(rho)
    for e in kraus.ops:
        out += e @ rho @ dagger(e)
    return out


def propagate_kraus(
    kraus: KrausSet,
    rho0: np.ndarray,
    num_steps: int,
    dt: float = 1.0,
    metadata: dict | None = None,
) -> TimeSeries:
    """Iterate the channel num_steps times from rho0."""
    if num_steps < 1:
        raise ValueError("num_steps must be at least 1")
    rho0 = as_matrix(rho0)
    states = np.empty((num_steps + 1, kraus.n, kraus.n), dtype=complex)
    states[0] = hermitian_part(rho0)
    rho = states[0]
    for i in range(1, num_steps + 1):
        rho = hermitian_part(apply_kraus(kraus, rho))
        states[i] = rho
    return TimeSeries(dt=dt, states=states, metadata=dict(metadata or {}))


def mix_noise(series: TimeSeries, w: float, rng: np.random.Generator) -> TimeSeries:
    """Admix an independent random state per index:

        rho_noisy_(i) = (1 - w) rho_(i) + w rho_rand_(i),  0 <= w < 1.

    Convexity keeps every output a valid density matrix.
    """
    if not 0 <= w < 1:
        raise ValueError(f"mixing coefficient w must satisfy 0 <= w < 1, got {w}")
    n = series.n
    noisy = np.empty_like(series.states)
    for i in range(series.states.shape[0]):
        noisy[i] = (1 - w) * series.states[i] + w * random_density_matrix(n, rng)
    metadata = dict(series.metadata)
    metadata["w"] = w
    return TimeSeries(dt=series.dt, states=noisy, metadata=metadata)


def dephasing_model(gamma: float, n: int = 2) -> LindbladModel:
    """Pure dephasing: H = 0, single jump sqrt(gamma/2) sigma_z.

    Off-diagonals decay as rho_01(t) = exp(-2 gamma t) rho_01(0); closed
    form used as a test oracle.
    """
    if n != 2:
        raise ValueError("dephasing_model is qubit-only")
    sz = np.diag([1.0, -1.0]).astype(complex)
    return LindbladModel(h=np.zeros((2, 2), dtype=complex), jumps=(np.sqrt(gamma / 2) * sz,))


def random_model(
    n: int,
    num_jumps: int,
    rng: np.random.Generator,
    jump_scale: float = DEFAULT_JUMP_SCALE,
) -> LindbladModel:
    """Random Hermitian H plus ``num_jumps`` random jump operators."""
    h = random_hermitian(n, rng)
    jumps = tuple(random_jump_operator(n, rng, jump_scale) for _ in range(num_jumps))
    return LindbladModel(h=h, jumps=jumps)
