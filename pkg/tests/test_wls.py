import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import shapley_by_subsets
from shapwor.coalitions import enumerate_coalitions
from shapwor.data import fit_linear, generate_synthetic
from shapwor.exceptions import ConstructionError, SingularSystemError, UnsupportedOracleError
from shapwor.sampling import draw_sample, full_population_sample, plan_sample
from shapwor.wls import (
    WlsSystem,
    build_system,
    closed_form_linear_shapley,
    condition_number,
    exact_shapley,
    solve_normal,
    solve_shapley,
)


def test_inclusion_probability_scales_weight(regression_oracle, small_data):
    sample = draw_sample(plan_sample(5, 16), seed=1)
    system = build_system(sample, regression_oracle, small_data.X_explain[0])
    rows = np.flatnonzero(sample.stratum == 1)
    n, N = sample.strata[1]
    assert n / N < 1
    np.testing.assert_allclose(system.w[rows], 0.2 * N / n, rtol=1e-14)


def test_pi_one_third_triples_weight():
    full = full_population_sample(4)
    third = type(full)(full.p, full.masks, full.stratum, full.pair, full.pi / 3, full.weight * 3, full.strata)
    assert np.all(third.weight[third.stratum > 0] == 3 * full.weight[full.stratum > 0])


def test_missing_anchor_is_rejected(regression_oracle, small_data):
    sample = full_population_sample(5)
    keep = sample.masks != 0
    broken = type(sample)(5, sample.masks[keep], sample.stratum[keep], sample.pair[keep],
                          sample.pi[keep], sample.weight[keep], sample.strata)
    with pytest.raises(ConstructionError, match="anchor"):
        build_system(broken, regression_oracle, small_data.X_explain[0])


def test_system_shape_validation():
    with pytest.raises(ConstructionError):
        WlsSystem(np.ones((1, 3)), np.ones(1), np.ones(1))
    with pytest.raises(ConstructionError):
        WlsSystem(np.ones((3, 3)), np.ones(2), np.ones(3))
    with pytest.raises(ConstructionError):
        WlsSystem(np.ones((3, 3)), np.array([1.0, 0.0, 1.0]), np.ones(3))


def test_full_budget_sample_is_bitwise_exact(regression_oracle, small_data):
    x = small_data.X_explain[2]
    sample = draw_sample(plan_sample(5, 32), seed=4)
    est = solve_shapley(build_system(sample, regression_oracle, x))
    exact = exact_shapley(regression_oracle, x)
    assert np.array_equal(est.phi, exact.phi)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_constant_game_gives_zero_attributions(p):
    class Constant:
        def __init__(self, p):
            self.p = p

        def contribution(self, masks, x):
            return np.full(np.asarray(masks).shape, 3.25)

    sample = full_population_sample(p)
    res = solve_shapley(build_system(sample, Constant(p), None))
    assert res.phi0 == pytest.approx(3.25, abs=1e-9)
    np.testing.assert_allclose(res.phi, 0.0, atol=1e-9)


def test_mean_point_gives_zero_shapley(marginal_oracle):
    res = exact_shapley(marginal_oracle, marginal_oracle.feature_means)
    np.testing.assert_allclose(res.phi, 0.0, atol=1e-9)


def test_singular_system_raises():
    # two coalitions plus anchors cannot pin down three features
    Z = np.array([[1, 0, 0, 0], [1, 1, 0, 0], [1, 0, 1, 1], [1, 1, 1, 1]], dtype=float)
    system = WlsSystem(Z, np.array([1e6, 1.0, 1.0, 1e6]), np.arange(4.0))
    with pytest.raises(SingularSystemError) as err:
        solve_shapley(system, label=7)
    assert err.value.label == 7 and err.value.condition > 1e12


def test_condition_number_known():
    assert condition_number(np.diag([1.0, 4.0])) == pytest.approx(4.0)
    assert condition_number(np.diag([1.0, 0.0])) == np.inf


def test_solve_normal_matches_numpy(rng):
    M = rng.standard_normal((6, 4))
    A = M.T @ M
    b = rng.standard_normal(4)
    x, _ = solve_normal(A, b)
    np.testing.assert_allclose(x, np.linalg.solve(A, b), rtol=1e-10)


def test_efficiency(regression_oracle, small_data):
    x = small_data.X_explain[5]
    res = exact_shapley(regression_oracle, x)
    # anchors are soft constraints with weight 1e6, so efficiency holds to about 1e-6
    assert res.total == pytest.approx(regression_oracle.predict(x), abs=1e-5)
    assert res.phi0 == pytest.approx(regression_oracle.mean_prediction, abs=1e-5)


def test_exact_matches_subset_formula_on_non_additive_game(regression_oracle, small_data):
    x = small_data.X_explain[7]
    expected = shapley_by_subsets(lambda m: regression_oracle.contribution(np.array([m]), x)[0], 5)
    np.testing.assert_allclose(exact_shapley(regression_oracle, x).phi, expected, rtol=1e-7, atol=1e-9)


def test_regression_game_is_not_additive(regression_oracle, small_data):
    x = small_data.X_explain[0]
    phi = exact_shapley(regression_oracle, x).phi
    naive = regression_oracle.beta * (x - regression_oracle.feature_means)
    assert np.max(np.abs(phi - naive)) > 1e-3


def test_permuting_features_permutes_shapley():
    d = generate_synthetic(4, 300, seed=11, rho=0.4)
    perm = np.array([2, 0, 3, 1])
    oracle = fit_linear(d, kind="linear-regression")
    oracle_perm = fit_linear(d.X[: d.X_train.shape[0]][:, perm], d.y_train, kind="linear-regression")
    x = d.X_explain[0]
    a = exact_shapley(oracle, x).phi
    b = exact_shapley(oracle_perm, x[perm]).phi
    np.testing.assert_allclose(b, a[perm], rtol=1e-7, atol=1e-10)


def test_closed_form_rejects_regression_oracle(regression_oracle, small_data):
    with pytest.raises(UnsupportedOracleError):
        closed_form_linear_shapley(regression_oracle, small_data.X_explain[0])


def test_multi_instance_matches_single(regression_oracle, small_data):
    X = small_data.X_explain[:3]
    many = exact_shapley(regression_oracle, X)
    for i in range(3):
        one = exact_shapley(regression_oracle, X[i])
        np.testing.assert_allclose(many.phi[i], one.phi, rtol=1e-8, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10_000))
def test_exact_equals_closed_form_property(p, seed):
    d = generate_synthetic(p, 4 * (p + 2), seed=seed)
    oracle = fit_linear(d)
    x = d.X_explain[0]
    np.testing.assert_allclose(
        exact_shapley(oracle, x).phi, closed_form_linear_shapley(oracle, x).phi, rtol=1e-6, atol=1e-9
    )


def test_enumeration_rows_order(marginal_oracle, small_data):
    sample = full_population_sample(5)
    assert np.array_equal(sample.masks, enumerate_coalitions(5))
