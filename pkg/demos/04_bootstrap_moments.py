"""
Replicate multiplicities of the two bootstrap schemes
======================================================

A valid scheme for drawing n of N units without replacement needs mean 1,
variance 1 - n/N and covariance -(1 - n/N)/(n - 1) for its multiplicities.
"""
import numpy as np

from shapwor.bootstrap import doubled_half_multiplicities, symmetric_counts, symmetric_multiplicities

rng = np.random.default_rng(0)
for n, N in [(20, 40), (5, 13), (7, 10)]:
    c = symmetric_counts(n, N)
    print(f"n={n} N={N}: n2_real={c.n2_real:.3f}, Bernoulli p={c.bern_p:.3f}")
    print(f"  target   var {1 - n / N:.4f}  cov {-(1 - n / N) / (n - 1):.4f}")
    for name, gen in [("symmetric", symmetric_multiplicities), ("doubled-half", doubled_half_multiplicities)]:
        S = gen(n, N, 100_000, rng).astype(float)
        cov = np.cov(S[:, 0], S[:, 1])[0, 1]
        print(f"  {name:12s} var {S.var(axis=0).mean():.4f}  cov {cov:.4f}  mean {S.mean():.4f}")
