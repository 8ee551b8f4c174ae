from math import comb

import numpy as np
import pytest

from shapwor.coalitions import KernelWeightTable, enumerate_coalitions, full_mask, popcount
from shapwor.sampling import (
    build_pairing,
    draw_sample,
    draw_with_replacement_baseline,
    full_population_sample,
    plan_sample,
)


def test_pairing_p3():
    pairing = build_pairing(3)
    assert pairing.sizes == (1,) and pairing.pair_counts == (3,)
    reps = pairing.representatives(1)
    assert sorted(reps.tolist()) == [1, 2, 4]
    assert sorted(pairing.pair(reps).tolist()) == [3, 5, 6]


def test_pairing_p4_middle_stratum():
    pairing = build_pairing(4)
    assert pairing.sizes == (1, 2) and pairing.pair_counts == (4, 3)
    reps = pairing.representatives(2)
    assert all(r & 1 for r in reps)
    assert set(reps.tolist()) | set(pairing.pair(reps).tolist()) == {3, 5, 6, 9, 10, 12}


@pytest.mark.parametrize("p", [2, 3, 4, 5, 6, 7, 8])
def test_pairing_partitions_all_non_anchor_coalitions(p):
    pairing = build_pairing(p)
    seen = []
    for s in pairing.sizes:
        reps = pairing.representatives(s)
        assert all(pairing.is_representative(int(r)) for r in reps)
        assert not any(pairing.is_representative(int(c)) for c in pairing.pair(reps))
        seen.extend(reps.tolist())
        seen.extend(pairing.pair(reps).tolist())
    assert sorted(seen) == list(range(1, 2**p - 1))
    assert sum(pairing.pair_counts) == 2 ** (p - 1) - 1


def test_plan_small_study():
    plan = plan_sample(5, 16)
    assert plan.m.tolist() == [5, 10]
    assert plan.x.tolist() == [4, 3]
    np.testing.assert_allclose(plan.pi, [0.8, 0.3])
    assert plan.n_sampled + 2 == 16
    # pair weight is the kernel weight of both halves
    np.testing.assert_allclose(plan.omega, [2 * 0.2, 2 * 4 / 60])


def test_plan_full_budget_takes_everything():
    plan = plan_sample(6, 64)
    np.testing.assert_array_equal(plan.x, plan.m)
    np.testing.assert_array_equal(plan.pi, 1.0)


@pytest.mark.parametrize("n_total", [3, 2, 15, 34])
def test_plan_rejects_bad_budget(n_total):
    with pytest.raises(ValueError):
        plan_sample(5, n_total)


def test_sample_invariants():
    plan = plan_sample(7, 40)
    for seed in range(30):
        sample = draw_sample(plan, seed=seed)
        sample.check()
        assert len(sample) == 40
        assert np.all(np.diff(sample.masks) > 0)
        assert sample.anchor_rows.tolist() == [0, 39]
        for s, (n, N) in sample.strata.items():
            assert np.sum(sample.pair_strata() == s) == n
            np.testing.assert_allclose(sample.pi[sample.stratum == s], n / N)


def test_draws_are_deterministic_and_seed_sensitive():
    plan = plan_sample(6, 20)
    a = draw_sample(plan, seed=5)
    b = draw_sample(plan, seed=5)
    c = draw_sample(plan, seed=6)
    assert np.array_equal(a.masks, b.masks)
    assert not all(np.array_equal(draw_sample(plan, seed=s).masks, a.masks) for s in range(6, 12))
    assert len(c) == len(a)


def test_inclusion_frequencies():
    plan = plan_sample(5, 16)
    pairing = build_pairing(5)
    draws = 30_000
    counts = np.zeros(32)
    for seed in range(draws):
        counts[draw_sample(plan, pairing, seed).masks] += 1
    freq = counts / draws
    size = popcount(np.arange(32))
    stratum = np.minimum(size, 5 - size)
    assert freq[0] == freq[31] == 1.0
    np.testing.assert_allclose(freq[stratum == 1], 0.8, atol=0.01)
    np.testing.assert_allclose(freq[stratum == 2], 0.3, atol=0.01)


def test_horvitz_thompson_total_is_unbiased():
    p = 6
    plan = plan_sample(p, 22)
    pairing = build_pairing(p)
    f = np.random.default_rng(0).standard_normal(2**p)
    table = KernelWeightTable.build(p)
    interior = np.arange(1, 2**p - 1)
    target = np.sum(table.for_masks(interior) * f[interior])
    totals = []
    for seed in range(20_000):
        s = draw_sample(plan, pairing, seed)
        rows = s.stratum >= 0
        totals.append(np.sum(s.weight[rows] * f[s.masks[rows]]))
    totals = np.array(totals)
    se = totals.std(ddof=1) / np.sqrt(totals.size)
    assert abs(totals.mean() - target) < 4 * se


def test_full_population_sample():
    sample = full_population_sample(5)
    assert np.array_equal(sample.masks, enumerate_coalitions(5))
    assert np.all(sample.pi == 1.0)
    sample.check()


def test_p2_has_a_single_pair():
    plan = plan_sample(2, 4)
    assert plan.x.tolist() == [1]
    sample = draw_sample(plan, seed=0)
    assert sample.masks.tolist() == [0, 1, 2, 3]


def test_expand_pairs_to_rows():
    sample = draw_sample(plan_sample(5, 16), seed=2)
    pairs = np.arange(sample.n_pairs) % 3
    rows = sample.expand(pairs)
    assert rows[sample.anchor_rows].tolist() == [1, 1]
    for pid in range(sample.n_pairs):
        assert set(rows[sample.pair == pid].tolist()) == {pairs[pid]}
    assert sample.expand(np.stack([pairs, pairs])).shape == (2, 16)


def test_baseline_sample_structure():
    p, n_total = 5, 16
    sample = draw_with_replacement_baseline(p, n_total, seed=3)
    sample.check()
    interior = sample.stratum >= 0
    assert sample.frequency[interior].sum() == n_total - 2
    assert np.all(np.isnan(sample.pi[interior]))


def test_baseline_weights_are_unbiased_for_kernel_weights():
    p, n_total = 4, 10
    table = KernelWeightTable.build(p)
    acc = np.zeros(2**p)
    draws = 20_000
    for seed in range(draws):
        s = draw_with_replacement_baseline(p, n_total, seed=seed)
        rows = s.stratum >= 0
        np.add.at(acc, s.masks[rows], s.weight[rows])
    interior = np.arange(1, 2**p - 1)
    np.testing.assert_allclose(acc[interior] / draws, table.for_masks(interior), rtol=0.05)


def test_baseline_duplicates_reduce_unique_coalitions():
    # with replacement, a budget equal to the population almost never covers it
    unique = [len(draw_with_replacement_baseline(4, 16, seed=s)) for s in range(200)]
    assert np.mean(unique) < 16
    assert max(unique) <= 16


def test_representative_count_matches_binomial():
    pairing = build_pairing(10)
    for s, count in zip(pairing.sizes, pairing.pair_counts):
        assert count == (comb(10, s) // 2 if s == 5 else comb(10, s))
    assert full_mask(10) == 1023
