"""
Filtering a two-state chain three ways
======================================

Exact forward filtering, decayed MCMC and a particle filter on the same
observation stream.
"""

import numpy as np

import decfilt as df

# The canonical model: sticky dynamics (0.7) and a fairly honest sensor (0.8).
model = df.canonical_model()
xs, ys = df.simulate(model, 30, seed=1)
exact = df.forward_filter(model, ys).beliefs

# Decayed MCMC sees one observation at a time and runs 5000 Gibbs steps after each.
chain = df.new_chain(model, df.ChainConfig(steps_per_update=5000, seed=2))
particles = df.pf_filter(model, ys, N=5000, seed=3, n_states=2)

print(" t  y  true   exact P(x=0)  mcmc   pf")
for t, y in enumerate(ys):
    df.observe(chain, model, y)
    mc = df.estimate(chain)
    print(f"{t + 1:2d}  {y}   {xs[t]}     {exact[t, 0]:.3f}        {mc[0]:.3f}  {particles[t][0]:.3f}")

# Old slices are rarely revisited under quadratic decay, so each update costs
# the same no matter how long the history gets.
print("total Gibbs steps:", chain.total_steps)
