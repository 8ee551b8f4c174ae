"""Coalition bitmasks, Shapley kernel weights and enumeration helpers.

Coalitions are stored as integer bitmasks: bit ``j`` is set when feature ``j``
belongs to the coalition. Bulk operations work on ``int64`` arrays of masks,
``CoalitionMask`` wraps a single mask for the public API.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterable

import numpy as np

from .exceptions import CapacityError

DEFAULT_ANCHOR_WEIGHT = 1e6
ENUMERATION_CAP = 25
MAX_FEATURES = 62


@dataclass(frozen=True, order=True)
class CoalitionMask:
    """A subset of ``p`` features encoded as a bit vector."""

    bits: int
    p: int

    def __post_init__(self):
        if self.p < 1 or self.p > MAX_FEATURES:
            raise ValueError(f"p must lie in [1, {MAX_FEATURES}], got {self.p}")
        if self.bits < 0 or self.bits >> self.p:
            raise ValueError(f"bits {self.bits:#x} do not fit in {self.p} features")

    @classmethod
    def from_members(cls, members: Iterable[int], p: int) -> CoalitionMask:
        bits = 0
        for j in members:
            if not 0 <= j < p:
                raise ValueError(f"feature index {j} out of range for p={p}")
            bits |= 1 << j
        return cls(bits, p)

    @property
    def size(self) -> int:
        return bin(self.bits).count("1")

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.p) if self.bits >> j & 1)

    def complement(self) -> CoalitionMask:
        return CoalitionMask(full_mask(self.p) ^ self.bits, self.p)

    def __contains__(self, j: int) -> bool:
        return bool(self.bits >> j & 1)

    def __len__(self) -> int:
        return self.size

    def __repr__(self):
        return f"CoalitionMask({set(self.members) or '{}'}, p={self.p})"


def full_mask(p: int) -> int:
    return (1 << p) - 1


def popcount(masks) -> np.ndarray:
    """Vectorised popcount of an int64 mask array."""
    masks = np.asarray(masks, dtype=np.int64)
    counts = np.zeros(masks.shape, dtype=np.int64)
    m = masks.copy()
    while np.any(m):
        counts += m & 1
        m >>= 1
    return counts


def complement(masks, p: int) -> np.ndarray:
    return np.asarray(masks, dtype=np.int64) ^ np.int64(full_mask(p))


def design_matrix(masks, p: int) -> np.ndarray:
    """Binary KernelSHAP design matrix: intercept column then one column per feature."""
    masks = np.asarray(masks, dtype=np.int64)
    Z = np.ones((masks.size, p + 1))
    Z[:, 1:] = (masks[:, None] >> np.arange(p, dtype=np.int64)) & 1
    return Z


def kernel_weight(p: int, s: int, anchor_weight: float = DEFAULT_ANCHOR_WEIGHT) -> float:
    """Shapley kernel weight ``(p-1) / (C(p,s) s (p-s))``.

    The empty and grand coalitions have infinite kernel weight; they receive
    ``anchor_weight`` instead.
    """
    if p < 2:
        raise ValueError(f"kernel weight needs p >= 2, got p={p}")
    if not 0 <= s <= p:
        raise ValueError(f"coalition size {s} outside [0, {p}]")
    if s == 0 or s == p:
        return float(anchor_weight)
    return (p - 1) / (comb(p, s) * s * (p - s))


@dataclass(frozen=True)
class KernelWeightTable:
    """Kernel weights indexed by coalition size."""

    p: int
    w: np.ndarray
    anchor_weight: float

    @classmethod
    def build(cls, p: int, anchor_weight: float = DEFAULT_ANCHOR_WEIGHT) -> KernelWeightTable:
        if anchor_weight <= 0:
            raise ValueError("anchor_weight must be positive")
        w = np.array([kernel_weight(p, s, anchor_weight) for s in range(p + 1)])
        w.setflags(write=False)
        return cls(p, w, float(anchor_weight))

    def __getitem__(self, s):
        return self.w[s]

    def for_masks(self, masks) -> np.ndarray:
        return self.w[popcount(masks)]


def enumerate_coalitions(p: int, as_masks: bool = False):
    """All ``2**p`` coalitions in ascending integer order.

    Returns an int64 array by default, or a list of ``CoalitionMask`` when
    ``as_masks`` is true.
    """
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    if p > ENUMERATION_CAP:
        raise CapacityError(f"full enumeration capped at p={ENUMERATION_CAP}, got p={p}")
    masks = np.arange(1 << p, dtype=np.int64)
    if as_masks:
        return [CoalitionMask(int(b), p) for b in masks]
    return masks


def unrank_combination(rank: int, k: int, items: Iterable[int]) -> int:
    """Mask of the ``rank``-th ``k``-subset of ``items`` in colexicographic order."""
    items = list(items)
    n = len(items)
    if not 0 <= rank < comb(n, k):
        raise ValueError(f"rank {rank} outside [0, C({n},{k}))")
    bits = 0
    for j in range(k, 0, -1):
        # largest c with C(c, j) <= rank
        c = j - 1
        while comb(c + 1, j) <= rank:
            c += 1
        rank -= comb(c, j)
        bits |= 1 << items[c]
    return bits
