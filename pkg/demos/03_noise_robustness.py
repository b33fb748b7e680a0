"""Identification quality as a function of measurement noise.
===========================================================

Takes one fixed random system and sweeps the noise mixing coefficient w,
identifying the dynamics at each level with the Pade and Kraus methods.
The minimum trajectory fidelity degrades gracefully: even with every
snapshot contaminated by a 10% random-state admixture, the recovered
model still tracks the exact trajectory closely.
"""

import numpy as np

from oqsid import (
    OptimizerConfig,
    identify,
    min_fidelity,
    mix_noise,
    propagate_lindblad,
    random_density_matrix,
    random_model,
    repropagate,
)

rng = np.random.default_rng(2024)
model = random_model(n=2, num_jumps=1, rng=rng, jump_scale=0.15)
rho0 = random_density_matrix(2, rng)
exact = propagate_lindblad(model, rho0, dt=0.1, num_steps=49)

cfg = OptimizerConfig(g_tol=1e-5, max_iter=150, hops=4, step_size=0.5, seed=5)

print(f"{'w':>6} {'F_min (pade)':>14} {'F_min (kraus)':>14}")
for w in (0.0, 0.01, 0.05, 0.1, 0.2):
    noisy = mix_noise(exact, w, np.random.default_rng(99))
    row = [w]
    for method, ell in (("pade", 1), ("kraus", 2)):
        ident = identify(noisy, method, ell, cfg)
        # re-propagate the *noisy* initial state, compare against the truth
        sid = repropagate(ident, noisy.states[0], exact.dt, exact.num_steps)
        row.append(min_fidelity(exact, sid))
    print(f"{row[0]:6.2f} {row[1]:14.6f} {row[2]:14.6f}")

print(
    "\nNote: at w > 0 even a perfect model cannot reach F_min = 1, because"
    "\nthe re-propagation starts from the noisy initial snapshot."
)
