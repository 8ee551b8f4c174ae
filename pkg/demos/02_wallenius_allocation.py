"""
Allocating a coalition budget with the Wallenius mean
======================================================

Pairs of coalitions are drawn from each size stratum in proportion to the
expected counts of a biased urn in which each pair carries its kernel weight.
"""
import numpy as np

from shapwor import UrnSpec, exact_mean, plan_sample, wallenius_mean, wallenius_pmf

# a small urn where the exact answer is easy to enumerate
urn = UrnSpec((2, 2), (1.0, 2.0), 2)
for x in [(2, 0), (1, 1), (0, 2)]:
    print(x, round(wallenius_pmf(x, urn), 6))
print("exact mean:     ", exact_mean(urn))
print("asymptotic mean:", wallenius_mean(urn))

# the plan used by the small study: p = 5, 16 coalitions including the anchors
plan = plan_sample(5, 16)
print("pairs per stratum:", plan.m, " expected draws:", np.round(plan.mu, 3), " drawn:", plan.x)
print("inclusion probabilities:", plan.pi)

# a larger plan
plan = plan_sample(12, 202)
print("p = 12:", plan.x, "of", plan.m)
