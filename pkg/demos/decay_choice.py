"""
How the decay schedule trades bias for speed
============================================

A window only ever touches the last few slices: fast, but its error stops
improving.  Quadratic decay keeps improving with more samples.
"""

import numpy as np

import decfilt as df

model = df.make_random_hmm(3, 3, 0.9, 0.3, seed=0)  # sticky dynamics, weak sensor
print("mixing parameter eta =", round(df.mixing_parameter(model), 3))

_, ys = df.simulate(model, 1000, seed=4)
target = df.forward_filter(model, ys).beliefs[-1]

for spec in ["window:5", "exp:2", "exp:0.1", "poly:1"]:
    chain = df.chain_from_evidence(model, ys, df.ChainConfig(schedule=df.parse_decay(spec), seed=5))
    errs = []
    done = 0
    for budget in (10**3, 10**4, 10**5):
        df.run(chain, model, budget - done)
        done = budget
        errs.append(df.tv_distance(df.estimate(chain), target))
    print(f"{spec:>9}: " + "  ".join(f"{e:.3f}" for e in errs))

# A single evidence sequence is noisy; the harness averages over replications:
#   decfilt run demos/configs/error_vs_samples.json
