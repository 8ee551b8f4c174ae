import numpy as np
import pytest

from shapwor.coalitions import CoalitionMask, enumerate_coalitions, full_mask
from shapwor.data import (
    ContributionOracle,
    Dataset,
    contribution,
    fit_linear,
    generate_synthetic,
    load_csv,
    save_csv,
)
from shapwor.exceptions import DataError, FitError


def test_noiseless_fit_recovers_beta():
    data = generate_synthetic(4, 200, beta=[1.0, -2.0, 0.5, 3.0], noise_sd=0.0, seed=1, beta0=0.7)
    oracle = fit_linear(data)
    np.testing.assert_allclose(oracle.beta, [1.0, -2.0, 0.5, 3.0], rtol=1e-8)
    assert oracle.beta0 == pytest.approx(0.7, rel=1e-8)


def test_constant_response_gives_zero_slopes(rng):
    X = rng.standard_normal((50, 3))
    oracle = fit_linear(X, np.full(50, 2.5))
    np.testing.assert_allclose(oracle.beta, 0.0, atol=1e-12)
    assert oracle.beta0 == pytest.approx(2.5)


def test_rank_deficient_fit_raises(rng):
    X = rng.standard_normal((30, 2))
    X = np.column_stack([X, X[:, 0] * 2])
    with pytest.raises(FitError):
        fit_linear(X, rng.standard_normal(30))


def test_ols_consistency():
    beta = np.array([1.0, -1.0, 2.0])
    errors = []
    for n in (100, 1000, 10000):
        errs = []
        for seed in range(20):
            d = generate_synthetic(3, 2 * n, beta=beta, noise_sd=1.0, seed=seed)
            errs.append(np.linalg.norm(fit_linear(d).beta - beta))
        errors.append(np.mean(errs))
    assert errors[0] > errors[1] > errors[2]


def test_synthetic_is_deterministic():
    a = generate_synthetic(5, 100, seed=9)
    b = generate_synthetic(5, 100, seed=9)
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)


def test_synthetic_small_study_scale():
    d = generate_synthetic(5, 2864)
    assert d.X_train.shape == (1432, 5) and d.X_explain.shape == (1432, 5)


def test_synthetic_validation():
    with pytest.raises(ValueError):
        generate_synthetic(5, 13)
    with pytest.raises(ValueError):
        generate_synthetic(3, 100, rho=-0.6)


@pytest.mark.parametrize("kind", ["linear-marginal", "linear-regression"])
def test_anchor_contributions(small_data, kind):
    oracle = fit_linear(small_data, kind=kind)
    x = small_data.X_explain[0]
    p = small_data.p
    assert contribution(oracle, 0, x) == pytest.approx(small_data.y_train.mean(), rel=1e-12)
    assert contribution(oracle, CoalitionMask(full_mask(p), p), x) == pytest.approx(oracle.predict(x), rel=1e-12)


def test_marginal_contribution_is_expectation_over_training_rows(marginal_oracle, small_data):
    # brute force: replace out-of-coalition features by every training row and average
    x = small_data.X_explain[3]
    Xtr = small_data.X_train
    for mask in (0b00101, 0b11010, 0b01000):
        inside = np.array([mask >> j & 1 for j in range(5)], dtype=bool)
        filled = np.where(inside, x, Xtr)
        expected = marginal_oracle.predict(filled).mean()
        assert contribution(marginal_oracle, mask, x) == pytest.approx(expected, rel=1e-12)


def test_regression_contribution_matches_direct_regression(regression_oracle, small_data):
    Xtr = small_data.X_train
    yhat = regression_oracle.predict(Xtr)
    x = small_data.X_explain[1]
    for mask in (0b00001, 0b10110, 0b01111):
        cols = [j for j in range(5) if mask >> j & 1]
        A = np.column_stack([np.ones(len(Xtr)), Xtr[:, cols]])
        coef, *_ = np.linalg.lstsq(A, yhat, rcond=None)
        expected = coef[0] + x[cols] @ coef[1:]
        assert contribution(regression_oracle, mask, x) == pytest.approx(expected, rel=1e-9)


def test_marginal_game_is_additive(marginal_oracle, small_data):
    x = small_data.X_explain[0]
    masks = enumerate_coalitions(5)
    v = marginal_oracle.contribution(masks, x)
    for j in range(5):
        with_j = masks[(masks >> j & 1) == 0]
        diffs = v[with_j | 1 << j] - v[with_j]
        expected = marginal_oracle.beta[j] * (x[j] - marginal_oracle.feature_means[j])
        np.testing.assert_allclose(diffs, expected, atol=1e-12)


def test_contribution_vectorised_over_instances(regression_oracle, small_data):
    X = small_data.X_explain[:4]
    masks = np.array([0, 3, 12, 31])
    V = regression_oracle.contribution(masks, X)
    assert V.shape == (4, 4)
    for i in range(4):
        np.testing.assert_allclose(V[:, i], regression_oracle.contribution(masks, X[i]))


def test_oracle_kind_validation():
    with pytest.raises(ValueError):
        ContributionOracle("quadratic", 0.0, np.ones(2), np.zeros(2))
    with pytest.raises(ValueError):
        ContributionOracle("linear-regression", 0.0, np.ones(2), np.zeros(2))


def test_load_csv_split(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b,y\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n")
    d = load_csv(path, "y", 0.5)
    assert d.X_train.shape == (2, 2) and d.X_explain.shape == (2, 2)
    assert d.columns == ("a", "b")
    np.testing.assert_array_equal(d.y, [3, 6, 9, 12])


def test_load_csv_names_bad_cell(tmp_path):
    rows = ["a,b,y"] + [f"{i},{i},{i}" for i in range(1, 11)]
    rows[7] = "7,oops,7"
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(rows) + "\n")
    with pytest.raises(DataError) as err:
        load_csv(path, "y")
    assert (err.value.row, err.value.column) == (7, 2)
    assert "row 7, column 2" in str(err.value)


def test_load_csv_missing_response(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b\n1,2\n3,4\n")
    with pytest.raises(DataError, match="response column"):
        load_csv(path, "y")


def test_load_csv_missing_value(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,y\n1,2\n,4\n5,6\n")
    with pytest.raises(DataError) as err:
        load_csv(path, "y")
    assert err.value.row == 2


def test_csv_round_trip_is_bit_identical(tmp_path):
    d = generate_synthetic(4, 60, seed=5, rho=0.3)
    path = tmp_path / "syn.csv"
    save_csv(d, path)
    back = load_csv(path, "y", 0.5)
    assert np.array_equal(back.X, d.X) and np.array_equal(back.y, d.y)
    assert back.columns == d.columns and back.split == d.split


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset(np.ones((4, 2)), np.ones(4), ("a", "b"), 0)
    with pytest.raises(DataError):
        Dataset(np.array([[1.0, np.nan], [1, 2]]), np.ones(2), ("a", "b"), 1)
