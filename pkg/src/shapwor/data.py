"""Datasets, linear model fitting and contribution-function oracles."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coalitions import design_matrix, full_mask
from .exceptions import DataError, FitError

MARGINAL = "linear-marginal"
REGRESSION = "linear-regression"


@dataclass(frozen=True)
class Dataset:
    """Feature matrix and response, split into a training head and an explain tail."""

    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]
    split: int
    response: str = "y"

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DataError("X must be 2-D with one row per response value")
        if len(self.columns) != self.X.shape[1]:
            raise DataError("column names do not match feature count")
        if not 0 < self.split < self.X.shape[0]:
            raise DataError(f"split index {self.split} leaves an empty train or explain part")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise DataError("dataset contains missing or non-finite values")

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def X_train(self):
        return self.X[: self.split]

    @property
    def y_train(self):
        return self.y[: self.split]

    @property
    def X_explain(self):
        return self.X[self.split:]

    @property
    def y_explain(self):
        return self.y[self.split:]


@dataclass(frozen=True, eq=False)
class ContributionOracle:
    """Exact contribution function ``v(S)`` for a fitted linear model.

    Both kinds share the representation ``v(S; x*) = mean_pred + (x* - mean) @ c_S``
    where ``c_S`` is a length-``p`` coefficient row:

    * ``linear-marginal``: features outside ``S`` are integrated out at their
      training means, so ``c_S = beta`` restricted to ``S``. The game is additive.
    * ``linear-regression``: ``v(S)`` is the prediction of an OLS regression of
      the training predictions on the features in ``S`` (one regression per
      coalition). With correlated features the game is not additive.
    """

    kind: str
    beta0: float
    beta: np.ndarray
    feature_means: np.ndarray
    train_cov: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in (MARGINAL, REGRESSION):
            raise ValueError(f"unknown oracle kind {self.kind!r}")
        if self.kind == REGRESSION and self.train_cov is None:
            raise ValueError("regression oracle needs the training covariance")

    @property
    def p(self) -> int:
        return self.beta.size

    @property
    def mean_prediction(self) -> float:
        return float(self.beta0 + self.feature_means @ self.beta)

    def predict(self, X) -> np.ndarray:
        return self.beta0 + np.asarray(X, dtype=float) @ self.beta

    def with_kind(self, kind: str) -> ContributionOracle:
        return ContributionOracle(kind, self.beta0, self.beta, self.feature_means, self.train_cov)

    def coefficient_rows(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        if self.kind == MARGINAL:
            return design_matrix(masks, self.p)[:, 1:] * self.beta
        out = np.empty((masks.size, self.p))
        for i, m in enumerate(masks.tolist()):
            row = self._cache.get(m)
            if row is None:
                row = self._regression_row(m)
                self._cache[m] = row
            out[i] = row
        return out

    def _regression_row(self, mask: int) -> np.ndarray:
        p = self.p
        row = np.zeros(p)
        idx = [j for j in range(p) if mask >> j & 1]
        if not idx:
            return row
        if mask == full_mask(p):
            return self.beta.copy()
        S = self.train_cov
        row[idx] = np.linalg.solve(S[np.ix_(idx, idx)], S[idx] @ self.beta)
        return row

    def contribution(self, masks, x_star) -> np.ndarray:
        """``v(S)`` for each mask; shape (n_masks,) or (n_masks, n_instances)."""
        x_star = np.asarray(x_star, dtype=float)
        C = self.coefficient_rows(masks)
        centred = x_star - self.feature_means
        return self.mean_prediction + C @ centred.T


def contribution(oracle: ContributionOracle, mask, x_star) -> float:
    """Contribution of a single coalition (``CoalitionMask`` or int bits)."""
    bits = getattr(mask, "bits", mask)
    return float(oracle.contribution(np.array([bits]), np.asarray(x_star, dtype=float))[0])


def fit_linear(data, y=None, kind: str = MARGINAL) -> ContributionOracle:
    """OLS fit on the training split of a ``Dataset`` (or on raw ``X, y``)."""
    if isinstance(data, Dataset):
        X, y = data.X_train, data.y_train
    else:
        X = np.asarray(data, dtype=float)
        y = np.asarray(y, dtype=float)
    n, p = X.shape
    A = np.column_stack([np.ones(n), X])
    if n < p + 1 or np.linalg.matrix_rank(A) < p + 1:
        raise FitError(f"design with {n} rows and {p} features is rank deficient")
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    means = X.mean(axis=0)
    cov = np.cov(X, rowvar=False).reshape(p, p)
    return ContributionOracle(kind, float(coef[0]), coef[1:], means, cov)


def generate_synthetic(
    p: int,
    N: int,
    beta=None,
    noise_sd: float = 1.0,
    seed: int = 0,
    rho: float = 0.0,
    beta0: float = 1.0,
    split: float = 0.5,
) -> Dataset:
    """Gaussian features (equicorrelation ``rho``) with a linear response.

    ``rho=0`` gives independent standard-normal features.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if N < 2 * (p + 2):
        raise ValueError(f"N must be >= 2(p+2) = {2 * (p + 2)}")
    if not -1.0 / (p - 1) < rho < 1.0:
        raise ValueError(f"rho={rho} does not give a positive definite correlation")
    rng = np.random.default_rng(seed)
    if beta is None:
        beta = default_beta(p)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (p,):
        raise ValueError(f"beta must have length {p}")
    Z = rng.standard_normal((N, p))
    if rho:
        corr = np.full((p, p), rho) + (1 - rho) * np.eye(p)
        Z = Z @ np.linalg.cholesky(corr).T
    y = beta0 + Z @ beta + noise_sd * rng.standard_normal(N)
    columns = tuple(f"x{j + 1}" for j in range(p))
    return Dataset(Z, y, columns, _split_index(N, split))


def default_beta(p: int) -> np.ndarray:
    return np.array([(-1) ** j * (1.0 + j / p) for j in range(p)])


def _split_index(n_rows: int, fraction: float) -> int:
    if not 0 < fraction < 1:
        raise DataError(f"split fraction must be in (0, 1), got {fraction}")
    k = int(math.floor(fraction * n_rows))
    if not 0 < k < n_rows:
        raise DataError(f"split fraction {fraction} leaves an empty part of {n_rows} rows")
    return k


def load_csv(path, response: str, split: float = 0.5) -> Dataset:
    """Read a numeric CSV with a header row.

    The first ``floor(split * n)`` data rows train the model, the rest are
    explained. Errors name the 1-based data row and column.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        if response not in header:
            raise DataError(f"response column {response!r} not found in {path}")
        rows = []
        for r, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != len(header):
                raise DataError(
                    f"{path}: row {r} has {len(record)} fields, expected {len(header)}", row=r
                )
            values = []
            for c, cell in enumerate(record, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric value {cell!r} at row {r}, column {c} "
                        f"({header[c - 1]!r})",
                        row=r,
                        column=c,
                    ) from None
                if not math.isfinite(values[-1]):
                    raise DataError(f"{path}: missing value at row {r}, column {c}", row=r, column=c)
            rows.append(values)
    if len(rows) < 2:
        raise DataError(f"{path} needs at least two data rows")
    table = np.array(rows)
    j = header.index(response)
    features = [k for k in range(len(header)) if k != j]
    return Dataset(
        table[:, features],
        table[:, j],
        tuple(header[k] for k in features),
        _split_index(len(rows), split),
        response,
    )


def save_csv(dataset: Dataset, path) -> None:
    """Write ``dataset`` so that ``load_csv`` restores it bit for bit."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*dataset.columns, dataset.response])
        for x, y in zip(dataset.X, dataset.y):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])
