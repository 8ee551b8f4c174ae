"""
Paired coalition samples and inverse-probability weights
========================================================

Each draw takes every sampled coalition together with its complement, plus
the empty and full coalitions. Row weights are kernel weight over inclusion
probability, so weighted sums are unbiased for the full-population sums.
"""
import numpy as np

from shapwor import build_system, draw_sample, exact_shapley, fit_linear, generate_synthetic, plan_sample
from shapwor.wls import solve_shapley

data = generate_synthetic(5, 2000, seed=1, rho=0.5)
oracle = fit_linear(data, kind="linear-regression")
x = data.X_explain[0]

plan = plan_sample(5, 16)
sample = draw_sample(plan, seed=0)
for mask, s, w in zip(sample.masks, sample.stratum, sample.weight):
    print(f"{int(mask):05b}  stratum {s:2d}  weight {w:.4g}")

est = solve_shapley(build_system(sample, oracle, x))
print("estimate:", np.round(est.phi, 4))
print("exact:   ", np.round(exact_shapley(oracle, x).phi, 4))

# spread over repeated draws
runs = np.array([solve_shapley(build_system(draw_sample(plan, seed=r), oracle, x)).phi for r in range(200)])
print("mean over 200 draws:", np.round(runs.mean(axis=0), 4))
print("SD over 200 draws:  ", np.round(runs.std(axis=0, ddof=1), 4))
