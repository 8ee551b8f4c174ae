"""Wallenius' noncentral hypergeometric distribution: pmf, mean and integer allocation.

The allocation of a coalition budget across strata uses the mean only. The
pmf exists so the mean approximation can be checked against exact moments on
small urns.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exceptions import DegenerateUrnError

LARGEST_REMAINDER = "largest-remainder"
NEAREST = "nearest"


@dataclass(frozen=True)
class UrnSpec:
    """``m[i]`` items of weight ``omega[i]`` in group ``i``; ``n`` draws in total."""

    m: tuple[int, ...]
    omega: tuple[float, ...]
    n: int

    def __init__(self, m, omega, n):
        m = tuple(int(v) for v in np.atleast_1d(m))
        omega = tuple(float(v) for v in np.atleast_1d(omega))
        if len(m) != len(omega) or not m:
            raise ValueError("m and omega must be non-empty and of equal length")
        if any(v < 1 for v in m):
            raise ValueError(f"group sizes must be >= 1, got {m}")
        if any(not (w > 0 and math.isfinite(w)) for w in omega):
            raise ValueError(f"weights must be positive and finite, got {omega}")
        if not 0 <= int(n) <= sum(m):
            raise ValueError(f"n={n} outside [0, {sum(m)}]")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "n", int(n))

    @property
    def c(self) -> int:
        return len(self.m)

    @property
    def total(self) -> int:
        return sum(self.m)


@dataclass(frozen=True)
class Allocation:
    mu: np.ndarray
    x: np.ndarray


def wallenius_pmf(x, urn: UrnSpec) -> float:
    """Probability of drawing ``x[i]`` items from each group.

    Evaluates ``prod C(m_i, x_i) * int_0^1 prod (1 - t^(omega_i/d))^x_i dt``
    with ``d = sum omega_i (m_i - x_i)``.
    """
    x = [int(v) for v in np.atleast_1d(x)]
    if len(x) != urn.c or any(not 0 <= xi <= mi for xi, mi in zip(x, urn.m)):
        raise ValueError(f"x={x} is outside the support of {urn}")
    if sum(x) != urn.n:
        raise ValueError(f"x sums to {sum(x)}, expected n={urn.n}")
    return float(pmf_table(urn, [x])[0])


def pmf_table(urn: UrnSpec, xs=None) -> np.ndarray:
    """pmf at each row of ``xs`` (default: the whole support, in ``support`` order).

    All rows share one vector-valued adaptive quadrature.
    """
    xs = np.array(list(support(urn)) if xs is None else xs, dtype=np.int64).reshape(-1, urn.c)
    m = np.array(urn.m)
    omega = np.array(urn.omega)
    d = (omega * (m - xs)).sum(axis=1)
    if np.any(d == 0) and urn.n < urn.total:
        raise DegenerateUrnError("no weight left in the urn before all draws are made")
    coef = np.array([math.prod(math.comb(mi, xi) for mi, xi in zip(urn.m, row)) for row in xs.tolist()],
                    dtype=float)
    out = np.ones(len(xs))
    live = d > 0
    if not live.any():
        return out
    r = omega / d[live, None]
    k = xs[live].astype(float)

    # t = exp(-y) maps the integral onto [0, inf) with a smooth integrand;
    # in t the integrand has an unbounded derivative at t = 0
    def integrand(y):
        return np.prod((-np.expm1(-r * y)) ** k, axis=1) * math.exp(-y)

    value, _ = integrate.quad_vec(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11, limit=500)
    out[live] = coef[live] * value
    return out


def support(urn: UrnSpec):
    """Every feasible draw vector of ``urn``."""
    for x in itertools.product(*(range(mi + 1) for mi in urn.m)):
        if sum(x) == urn.n:
            yield x


def exact_mean(urn: UrnSpec) -> np.ndarray:
    """Mean by summing over the support (small urns only)."""
    xs = np.array(list(support(urn)), dtype=float).reshape(-1, urn.c)
    return pmf_table(urn) @ xs


def wallenius_mean(urn: UrnSpec, tol: float = 1e-12) -> np.ndarray:
    """Approximate mean from ``sum m_i (1 - theta**omega_i) = n``.

    Bisection runs on ``u = -log(theta)`` so that very unequal weights do
    not underflow ``theta``.
    """
    m = np.array(urn.m, dtype=float)
    if urn.n == 0:
        return np.zeros(urn.c)
    if urn.n == urn.total:
        return m.copy()
    omega = np.array(urn.omega) / max(urn.omega)

    def drawn(u):
        return m * -np.expm1(-omega * u)

    lo, hi = 0.0, 1.0
    while drawn(hi).sum() < urn.n:
        hi *= 2.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if drawn(mid).sum() < urn.n:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    u = 0.5 * (lo + hi)
    return drawn(u)


def round_allocation(mu, m, n: int, method: str = LARGEST_REMAINDER) -> np.ndarray:
    """Integer draw counts from expected counts.

    ``largest-remainder`` floors every entry then hands the missing units to
    the largest fractional parts, so the total is exactly ``n``. ``nearest``
    rounds each entry independently and may miss the total.
    """
    mu = np.asarray(mu, dtype=float)
    m = np.asarray(m, dtype=np.int64)
    if method == NEAREST:
        return np.clip(np.floor(mu + 0.5).astype(np.int64), 0, m)
    if method != LARGEST_REMAINDER:
        raise ValueError(f"unknown rounding method {method!r}")
    x = np.clip(np.floor(mu + 1e-9).astype(np.int64), 0, m)
    short = int(n - x.sum())
    frac = mu - x
    order = np.argsort(-frac, kind="stable")
    for i in order:
        if short <= 0:
            break
        if x[i] < m[i]:
            x[i] += 1
            short -= 1
    while short < 0:
        i = int(np.argmin(np.where(x > 0, frac, np.inf)))
        x[i] -= 1
        frac[i] += 1
        short += 1
    return x


def allocate_integer(urn: UrnSpec, method: str = LARGEST_REMAINDER) -> Allocation:
    mu = wallenius_mean(urn)
    return Allocation(mu, round_allocation(mu, urn.m, urn.n, method))
