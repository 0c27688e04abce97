"""
Tracking a manoeuvring target
=============================

A random walk whose drift flips between -1 and +1, observed in unit noise.
"""

import numpy as np

import decfilt as df

model = df.SwitchingKF([-1.0, 1.0], [0.5, 0.5], sigma_v=0.5, sigma_w=1.0)
(xs, ss), ys = df.skf_simulate(model, 200, seed=7)

chain = df.SKFChain(df.SKFConfig(steps_per_update=1500, gap=3, seed=8))
ps, rng = df.pf_init(model, 500, seed=9)
mc_err, pf_err = [], []
for t, y in enumerate(ys):
    df.skf_observe(chain, model, y)
    ps = df.pf_step(ps, model, y, rng)
    mc_err.append(abs(df.skf_estimate(chain)[0] - xs[t]))
    pf_err.append(abs(df.pf_estimate(ps)[0] - xs[t]))

for lo, hi in ((0, 50), (50, 100), (100, 200)):
    print(f"t {lo + 1:3d}-{hi:3d}: mcmc {np.mean(mc_err[lo:hi]):.3f}   pf {np.mean(pf_err[lo:hi]):.3f}")
