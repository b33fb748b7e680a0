"""Propagating open-system dynamics and checking the physics.
======================================================

Builds a pure-dephasing qubit and a random dissipative qubit, propagates
both with the exact superoperator exponential, and verifies the invariants
a valid quantum trajectory must satisfy: unit trace, positivity, and (for
dephasing) the closed-form off-diagonal decay.
"""

import numpy as np

from oqsid import (
    dephasing_model,
    mix_noise,
    propagate_lindblad,
    random_density_matrix,
    random_model,
)

# ---------------------------------------------------------------------
# A dephasing qubit: H = 0, one jump operator sqrt(gamma/2) sigma_z.
# The coherence decays as rho_01(t) = exp(-2 gamma t) rho_01(0).
# ---------------------------------------------------------------------
gamma = 0.3
model = dephasing_model(gamma)
rho0 = np.array([[0.6, 0.25 + 0.15j], [0.25 - 0.15j, 0.4]])

dt, steps = 0.1, 30
series = propagate_lindblad(model, rho0, dt, steps)

print("dephasing qubit, gamma =", gamma)
print(f"{'t':>5} {'|rho_01|':>12} {'analytic':>12} {'trace':>8} {'min eig':>10}")
for i in (0, 5, 10, 20, 30):
    state = series.states[i]
    analytic = abs(rho0[0, 1]) * np.exp(-2 * gamma * i * dt)
    eigs = np.linalg.eigvalsh(state)
    print(
        f"{i*dt:5.1f} {abs(state[0,1]):12.6f} {analytic:12.6f} "
        f"{np.trace(state).real:8.4f} {eigs[0]:10.2e}"
    )

# ---------------------------------------------------------------------
# A random open system: Gaussian Hamiltonian plus one random jump
# operator. Trace is preserved to rounding; purity decays monotonically
# toward the stationary state.
# ---------------------------------------------------------------------
rng = np.random.default_rng(42)
model = random_model(n=2, num_jumps=1, rng=rng, jump_scale=0.15)
rho0 = random_density_matrix(2, rng)
series = propagate_lindblad(model, rho0, dt=0.1, num_steps=49)

purities = [np.trace(s @ s).real for s in series.states]
print("\nrandom dissipative qubit (seed 42)")
print("purity:", " -> ".join(f"{purities[i]:.4f}" for i in (0, 10, 25, 49)))
print("max trace deviation:", max(abs(np.trace(s) - 1) for s in series.states))

# ---------------------------------------------------------------------
# Admixing measurement noise: a convex mix with an independent random
# state at every index keeps every snapshot a valid density matrix.
# ---------------------------------------------------------------------
noisy = mix_noise(series, w=0.1, rng=rng)
noisy.validate(tol=1e-10)
deviation = max(
    np.linalg.norm(a - b) for a, b in zip(noisy.states, series.states)
)
print(f"\nnoise mixing at w=0.1: all states valid, max deviation {deviation:.4f}")
