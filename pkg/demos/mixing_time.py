"""
Mixing time as the history grows
================================

Start many chains from adversarial trajectories and count the steps until
the last slice forgets where it started.
"""

import decfilt as df

model = df.canonical_model()
print("eta =", round(df.mixing_parameter(model), 4))

for T in (25, 50, 100, 200):
    _, ys = df.simulate(model, T, seed=T)
    row = [f"T={T:3d}"]
    for sched in (df.quadratic(), df.uniform()):
        rep = df.estimate_mixing_time(model, ys, sched, epsilon=0.05, n_chains=500, max_steps=1 << 13, seed=0)
        row.append(f"{sched.label}: {rep.tau_m if rep.mixed else 'not mixed'}")
    print("   ".join(row))

# The per-checkpoint numbers behind one estimate:
print(rep.to_csv())
