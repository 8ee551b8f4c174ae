"""Finite-population bootstrap for Shapley estimates from a without-replacement sample.

Replicates assign each sampled *pair* a multiplicity in {0, 1, 2}; both
coalitions of a pair share it and anchors always keep 1. A valid replicate
scheme for simple random sampling of ``n`` out of ``N`` units needs

    E(S_k) = 1,   Var(S_k) = 1 - n/N,   Cov(S_k, S_l) = -(1 - n/N) / (n - 1).

Two schemes are provided:

* ``symmetric``: per stratum draw ``n2`` units to double and ``n2`` units to
  drop, ``n2 = n (1 - n/N) / 2`` (randomised between its floor and ceiling
  when fractional). All three moments hold exactly.
* ``doubled-half``: keep every unit with probability ``n/N``, then double a
  random half of the units not kept and drop the rest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import EstimationFailedError
from .wls import build_system, solve_batch

SYMMETRIC = "symmetric"
DOUBLED_HALF = "doubled-half"
METHODS = (SYMMETRIC, DOUBLED_HALF)


@dataclass(frozen=True)
class SymmetricCounts:
    """How many units of a stratum get multiplicity 2 (and, equally, 0)."""

    n: int
    N: int
    n2_real: float
    n2_low: int
    n2_high: int
    bern_p: float

    @property
    def n1_low(self) -> int:
        return self.n - 2 * self.n2_low

    @property
    def n1_high(self) -> int:
        return self.n - 2 * self.n2_high

    @property
    def n1_real(self) -> float:
        return self.n - 2 * self.n2_real

    @property
    def odd_overflow(self) -> bool:
        """True when ``2 * n2_high`` exceeds ``n`` (odd ``n`` with ``n**2 < N``)."""
        return 2 * self.n2_high > self.n


def symmetric_counts(n: int, N: int) -> SymmetricCounts:
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    n2_real = n * (N - n) / (2 * N)
    low = math.floor(n2_real)
    bern_p = n2_real - low
    return SymmetricCounts(n, N, n2_real, low, low + 1 if bern_p > 0 else low, bern_p)


def symmetric_multiplicities(n: int, N: int, size: int, rng) -> np.ndarray:
    """``size`` symmetric replicates for one stratum, shape ``(size, n)``.

    When ``n`` is odd and ``n2`` would round up past ``n/2``, the upper branch
    instead doubles/drops ``(n-1)/2`` units each and sends the last unit to 0
    or 2 with equal probability. That branch moves one unit fewer than asked,
    so it is taken with probability ``2 * bern_p`` to keep the variance exact;
    the mean stays exact and the within-stratum covariance is off by
    ``2 * bern_p / (n (n - 1))``.
    """
    counts = symmetric_counts(n, N)
    p_upper = 2 * counts.bern_p if counts.odd_overflow else counts.bern_p
    n2 = counts.n2_low + (rng.random(size) < p_upper)
    rank = np.argsort(np.argsort(rng.random((size, n)), axis=1), axis=1)
    if counts.odd_overflow:
        upper = n2 > counts.n2_low
        n2 = np.minimum(n2, (n - 1) // 2)
    out = np.where(rank < n2[:, None], 2, np.where(rank < 2 * n2[:, None], 0, 1)).astype(np.int8)
    if counts.odd_overflow:
        coin = rng.random(size) < 0.5
        last = rank == n - 1
        flip = upper[:, None] & last
        out[flip] = np.where(np.broadcast_to(coin[:, None], out.shape)[flip], 2, 0)
    return out


def doubled_half_multiplicities(n: int, N: int, size: int, rng) -> np.ndarray:
    """``size`` doubled-half replicates for one stratum, shape ``(size, n)``.

    An odd number of non-kept units has its half rounded up or down with
    probability 1/2.
    """
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    kept = rng.random((size, n)) < n / N
    left = n - kept.sum(axis=1)
    half = left // 2 + ((left % 2 == 1) & (rng.random(size) < 0.5))
    keys = np.where(kept, 2.0, rng.random((size, n)))
    rank = np.argsort(np.argsort(keys, axis=1), axis=1)
    return np.where(kept, 1, np.where(rank < half[:, None], 2, 0)).astype(np.int8)


_GENERATORS = {SYMMETRIC: symmetric_multiplicities, DOUBLED_HALF: doubled_half_multiplicities}


@dataclass(frozen=True)
class ReplicateWeights:
    """Multiplicity of every sample row (``rows``) and every sampled pair (``pairs``)."""

    rows: np.ndarray
    pairs: np.ndarray


def pair_multiplicities(sample, method: str, rng, size: int = 1) -> np.ndarray:
    """Replicate multiplicities for every pair of ``sample``, shape ``(size, n_pairs)``."""
    try:
        generate = _GENERATORS[method]
    except KeyError:
        raise ValueError(f"unknown bootstrap method {method!r}; choose from {METHODS}") from None
    out = np.ones((size, sample.n_pairs), dtype=np.int8)
    pair_stratum = sample.pair_strata()
    for s in sorted(sample.strata):
        idx = np.flatnonzero(pair_stratum == s)
        n, N = sample.strata[s]
        out[:, idx] = generate(n, N, size, rng)
    return out


def _replicate(sample, method, seed) -> ReplicateWeights:
    pairs = pair_multiplicities(sample, method, np.random.default_rng(seed))[0]
    return ReplicateWeights(sample.expand(pairs), pairs)


def symmetric_replicate(sample, seed=None) -> ReplicateWeights:
    return _replicate(sample, SYMMETRIC, seed)


def doubled_half_replicate(sample, seed=None) -> ReplicateWeights:
    return _replicate(sample, DOUBLED_HALF, seed)


def replicate_seeds(seed, B: int) -> list:
    """One independent seed per replicate index, derived from ``seed``."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return seed.spawn(B)


def replicate_matrix(sample, method: str, B: int, seed=None, seeds=None) -> np.ndarray:
    """Row multiplicities of ``B`` replicates, shape ``(B, rows)``.

    ``seeds`` overrides the derivation from ``seed`` with one explicit seed
    per replicate.
    """
    if seeds is None:
        seeds = replicate_seeds(seed, B)
    elif len(seeds) != B:
        raise ValueError(f"expected {B} replicate seeds, got {len(seeds)}")
    pairs = np.stack([pair_multiplicities(sample, method, np.random.default_rng(s))[0] for s in seeds])
    return sample.expand(pairs)


def replicate_estimates(system, multiplicity):
    """Solve the system once per replicate row-scaling.

    Returns ``(phi, ok)``: ``phi`` has shape ``(B, p + 1)`` or ``(B, I, p + 1)``
    (intercept first) and is NaN for singular replicates.
    """
    M = np.asarray(multiplicity, dtype=float)
    wm = M * system.w
    Z = system.Z
    A = np.einsum("br,ri,rj->bij", wm, Z, Z, optimize=True)
    V = system.v if system.v.ndim == 2 else system.v[:, None]
    rhs = np.einsum("br,ri,rk->bik", wm, Z, V, optimize=True)
    x, ok = solve_batch(A, rhs)
    x = np.swapaxes(x, 1, 2)
    if system.v.ndim == 1:
        x = x[:, 0, :]
    return x, ok


def replicate_sd(phi, ok):
    """Per-coordinate sample SD over successful replicates (NaN if fewer than two).

    Values are shifted by the first replicate first, so identical replicates
    give exactly zero.
    """
    good = phi[ok]
    if good.shape[0] < 2:
        return np.full(phi.shape[1:], np.nan)
    return np.std(good - good[0], axis=0, ddof=1)


def bootstrap_sd(sample, oracle, x_star, B: int, method: str = SYMMETRIC, seed=None, system=None, seeds=None):
    """Bootstrap SD of each Shapley value.

    Returns ``(sd, failures)``; ``sd`` has shape ``(p,)`` for one instance or
    ``(I, p)`` for several. Singular replicates are counted and left out.
    """
    if B < 2:
        raise ValueError("need at least two bootstrap replicates")
    if system is None:
        system = build_system(sample, oracle, x_star)
    if system.masks is not None and not np.array_equal(system.masks, sample.masks):
        raise ValueError("system rows are not aligned with the sample")
    M = replicate_matrix(sample, method, B, seed, seeds)
    phi, ok = replicate_estimates(system, M)
    failures = int(B - ok.sum())
    if failures == B:
        raise EstimationFailedError(f"all {B} {method} replicates gave singular systems")
    return replicate_sd(phi[..., 1:], ok), failures
