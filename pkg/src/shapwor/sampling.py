"""Paired, stratified coalition sampling without replacement.

Coalitions are grouped by size. A coalition and its complement always enter
the sample together, so sampling happens over *pairs*: stratum ``s`` holds the
pairs whose smaller half has ``s`` features. For even ``p`` the middle stratum
takes the size-``p/2`` masks that contain feature 0 as representatives.

The number of pairs drawn from each stratum is the rounded Wallenius mean;
within a stratum pairs are drawn by simple random sampling without
replacement, so every coalition of stratum ``s`` has inclusion probability
``x_s / m_s``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .coalitions import (
    DEFAULT_ANCHOR_WEIGHT,
    KernelWeightTable,
    MAX_FEATURES,
    complement,
    full_mask,
    popcount,
    unrank_combination,
)
from .wallenius import LARGEST_REMAINDER, UrnSpec, allocate_integer

ANCHOR = -1


@dataclass(frozen=True)
class PairingStructure:
    """Representative strata and the complement pairing for ``p`` features."""

    p: int
    sizes: tuple[int, ...]
    pair_counts: tuple[int, ...]

    def pair(self, masks):
        return complement(masks, self.p)

    def stratum_of(self, masks) -> np.ndarray:
        size = popcount(masks)
        return np.minimum(size, self.p - size)

    def representative(self, s: int, rank: int) -> int:
        """Mask of the ``rank``-th representative pair of stratum ``s``."""
        p = self.p
        if 2 * s == p:
            return 1 | unrank_combination(rank, s - 1, range(1, p))
        return unrank_combination(rank, s, range(p))

    def representatives(self, s: int) -> np.ndarray:
        i = self.sizes.index(s)
        return np.array([self.representative(s, r) for r in range(self.pair_counts[i])], dtype=np.int64)

    def is_representative(self, mask: int) -> bool:
        size = bin(mask).count("1")
        if 2 * size == self.p:
            return bool(mask & 1)
        return 0 < size < self.p - size


def build_pairing(p: int) -> PairingStructure:
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if p > MAX_FEATURES:
        raise ValueError(f"p must be <= {MAX_FEATURES}")
    sizes = tuple(range(1, p // 2 + 1))
    counts = tuple(comb(p, s) // 2 if 2 * s == p else comb(p, s) for s in sizes)
    return PairingStructure(p, sizes, counts)


@dataclass(frozen=True)
class SamplingPlan:
    """Per-stratum pair populations, Wallenius weights, draws and inclusion probabilities."""

    p: int
    n_total: int
    sizes: np.ndarray
    m: np.ndarray
    omega: np.ndarray
    mu: np.ndarray
    x: np.ndarray
    anchor_weight: float = DEFAULT_ANCHOR_WEIGHT

    @property
    def pi(self) -> np.ndarray:
        return self.x / self.m

    @property
    def n_pairs(self) -> int:
        return int(self.x.sum())

    @property
    def n_sampled(self) -> int:
        """Coalitions drawn, anchors excluded."""
        return 2 * self.n_pairs


def plan_sample(
    p: int,
    n_total: int,
    anchor_weight: float = DEFAULT_ANCHOR_WEIGHT,
    rounding: str = LARGEST_REMAINDER,
) -> SamplingPlan:
    """Allocate ``(n_total - 2) / 2`` pairs over the strata by the Wallenius mean.

    ``n_total`` counts every coalition in the final sample, anchors included.
    """
    pairing = build_pairing(p)
    if n_total > 2**p:
        raise ValueError(f"n_total={n_total} exceeds the {2**p} coalitions available")
    if n_total < 4 or (n_total - 2) % 2:
        raise ValueError(f"n_total={n_total} must be even and >= 4 (pairs plus two anchors)")
    kernel = KernelWeightTable.build(p, anchor_weight)
    sizes = np.array(pairing.sizes)
    m = np.array(pairing.pair_counts, dtype=np.int64)
    omega = np.array([kernel[s] + kernel[p - s] for s in sizes])
    n_pairs = (n_total - 2) // 2
    alloc = allocate_integer(UrnSpec(m, omega, n_pairs), rounding)
    return SamplingPlan(p, n_total, sizes, m, omega, alloc.mu, alloc.x, anchor_weight)


@dataclass(frozen=True)
class CoalitionSample:
    """Sampled coalitions sorted by mask, with their design information.

    ``stratum`` is the representative size (``-1`` for anchors); ``pair``
    links a coalition to its complement (``-1`` for anchors). ``pi`` is NaN
    for with-replacement samples, which carry ``frequency`` instead.
    ``strata`` maps each stratum to ``(pairs drawn, pairs in population)``.
    """

    p: int
    masks: np.ndarray
    stratum: np.ndarray
    pair: np.ndarray
    pi: np.ndarray
    weight: np.ndarray
    strata: dict = field(default_factory=dict)
    frequency: np.ndarray | None = None

    def __len__(self):
        return self.masks.size

    @property
    def n_pairs(self) -> int:
        return int(self.pair.max()) + 1 if self.pair.size and self.pair.max() >= 0 else 0

    @property
    def anchor_rows(self) -> np.ndarray:
        return np.flatnonzero(self.stratum == ANCHOR)

    def pair_strata(self) -> np.ndarray:
        """Stratum of each pair id."""
        out = np.empty(self.n_pairs, dtype=np.int64)
        rows = self.pair >= 0
        out[self.pair[rows]] = self.stratum[rows]
        return out

    def expand(self, pair_multiplicity) -> np.ndarray:
        """Row multiplicities from pair multiplicities (anchors fixed at 1).

        Accepts shape ``(n_pairs,)`` or ``(B, n_pairs)``.
        """
        pm = np.asarray(pair_multiplicity)
        rows = np.ones(pm.shape[:-1] + (self.masks.size,), dtype=pm.dtype)
        hit = self.pair >= 0
        rows[..., hit] = pm[..., self.pair[hit]]
        return rows

    def check(self) -> None:
        """Raise ``AssertionError`` if any sample invariant fails."""
        masks = self.masks
        assert np.unique(masks).size == masks.size, "duplicate coalitions"
        present = set(masks.tolist())
        fm = full_mask(self.p)
        assert 0 in present and fm in present, "anchors missing"
        for m in present:
            assert fm ^ m in present, f"coalition {m:#x} present without its complement"
        for pid in range(self.n_pairs):
            rows = np.flatnonzero(self.pair == pid)
            assert rows.size == 2 and masks[rows[0]] ^ masks[rows[1]] == fm


def _assemble(p, masks, stratum, pair, pi, anchor_weight, strata, frequency=None, weight=None):
    masks = np.asarray(masks, dtype=np.int64)
    order = np.argsort(masks, kind="stable")
    masks = masks[order]
    stratum = np.asarray(stratum, dtype=np.int64)[order]
    pair = np.asarray(pair, dtype=np.int64)[order]
    pi = np.asarray(pi, dtype=float)[order]
    if weight is None:
        weight = KernelWeightTable.build(p, anchor_weight).for_masks(masks) / pi
    else:
        weight = np.asarray(weight, dtype=float)[order]
    if frequency is not None:
        frequency = np.asarray(frequency, dtype=np.int64)[order]
    return CoalitionSample(p, masks, stratum, pair, pi, weight, strata, frequency)


def _with_anchors(p, reps, strata_ids):
    """Masks, strata and pair ids for representatives plus complements and anchors."""
    reps = np.asarray(reps, dtype=np.int64)
    n = reps.size
    masks = np.concatenate([[0, full_mask(p)], reps, complement(reps, p)])
    stratum = np.concatenate([[ANCHOR, ANCHOR], strata_ids, strata_ids])
    pair = np.concatenate([[ANCHOR, ANCHOR], np.arange(n), np.arange(n)])
    return masks, stratum, pair


def draw_sample(plan: SamplingPlan, pairing: PairingStructure | None = None, seed=None) -> CoalitionSample:
    """Draw ``plan.x[s]`` pairs from each stratum without replacement."""
    pairing = pairing or build_pairing(plan.p)
    rng = np.random.default_rng(seed)
    reps, strata_ids, pis, strata = [], [], [], {}
    for s, m_s, x_s in zip(plan.sizes.tolist(), plan.m.tolist(), plan.x.tolist()):
        if x_s == 0:
            continue
        ranks = np.sort(rng.choice(m_s, size=x_s, replace=False))
        reps.extend(pairing.representative(s, int(r)) for r in ranks)
        strata_ids.extend([s] * x_s)
        pis.extend([x_s / m_s] * x_s)
        strata[s] = (x_s, m_s)
    masks, stratum, pair = _with_anchors(plan.p, reps, strata_ids)
    pi = np.concatenate([[1.0, 1.0], pis, pis])
    return _assemble(plan.p, masks, stratum, pair, pi, plan.anchor_weight, strata)


def full_population_sample(p: int, anchor_weight: float = DEFAULT_ANCHOR_WEIGHT) -> CoalitionSample:
    """Every coalition with inclusion probability 1."""
    pairing = build_pairing(p)
    reps, strata_ids, strata = [], [], {}
    for s, count in zip(pairing.sizes, pairing.pair_counts):
        reps.append(pairing.representatives(s))
        strata_ids.extend([s] * count)
        strata[s] = (count, count)
    masks, stratum, pair = _with_anchors(p, np.concatenate(reps), strata_ids)
    return _assemble(p, masks, stratum, pair, np.ones(masks.size), anchor_weight, strata)


def draw_with_replacement_baseline(
    p: int, n_total: int, seed=None, anchor_weight: float = DEFAULT_ANCHOR_WEIGHT
) -> CoalitionSample:
    """Classic KernelSHAP sampling: pairs drawn with replacement, probability proportional to kernel weight.

    Repeated pairs are collapsed into one row each with their draw frequency.
    The row weight ``frequency * K / (n_total - 2)``, with ``K`` the kernel
    mass of all non-anchor coalitions, is unbiased for the kernel weight.
    """
    if n_total < 4 or n_total % 2:
        raise ValueError(f"n_total={n_total} must be even and >= 4")
    pairing = build_pairing(p)
    kernel = KernelWeightTable.build(p, anchor_weight)
    rng = np.random.default_rng(seed)
    sizes = np.array(pairing.sizes)
    counts = np.array(pairing.pair_counts, dtype=float)
    pair_w = np.array([kernel[s] + kernel[p - s] for s in sizes])
    mass = counts * pair_w
    n_draws = (n_total - 2) // 2
    strata_draws = rng.choice(sizes.size, size=n_draws, p=mass / mass.sum())
    drawn = {}
    for i in strata_draws.tolist():
        key = (int(sizes[i]), int(rng.integers(pairing.pair_counts[i])))
        drawn[key] = drawn.get(key, 0) + 1
    keys = sorted(drawn)
    reps = [pairing.representative(s, r) for s, r in keys]
    strata_ids = [s for s, _ in keys]
    freq = np.array([drawn[k] for k in keys], dtype=np.int64)
    masks, stratum, pair = _with_anchors(p, reps, strata_ids)
    scale = mass.sum() / (2 * n_draws)
    weight = np.concatenate([[anchor_weight, anchor_weight], freq * scale, freq * scale])
    frequency = np.concatenate([[1, 1], freq, freq])
    pi = np.concatenate([[1.0, 1.0], np.full(2 * freq.size, np.nan)])
    strata = {s: (strata_ids.count(s), pairing.pair_counts[pairing.sizes.index(s)]) for s in set(strata_ids)}
    return _assemble(p, masks, stratum, pair, pi, anchor_weight, strata, frequency, weight)
