"""Assembly and solution of the KernelSHAP weighted least-squares system."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .coalitions import DEFAULT_ANCHOR_WEIGHT, design_matrix, full_mask
from .data import MARGINAL, ContributionOracle
from .exceptions import ConstructionError, SingularSystemError, UnsupportedOracleError

CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class WlsSystem:
    """Rows of ``Z`` (intercept + membership), their weights and contributions.

    ``v`` has one column per explained instance, or is 1-D for a single one.
    """

    Z: np.ndarray
    w: np.ndarray
    v: np.ndarray
    masks: np.ndarray | None = None

    def __post_init__(self):
        if self.Z.shape[0] < 2:
            raise ConstructionError("a WLS system needs at least the two anchor rows")
        if self.w.shape != (self.Z.shape[0],) or self.v.shape[0] != self.Z.shape[0]:
            raise ConstructionError("Z, w and v disagree on the number of rows")
        if np.any(self.w <= 0):
            raise ConstructionError("all row weights must be positive")

    @property
    def p(self) -> int:
        return self.Z.shape[1] - 1

    def normal_equations(self, multiplicity=None):
        """``(Z^T W Z, Z^T W v)``, optionally with rows scaled by ``multiplicity``."""
        w = self.w if multiplicity is None else self.w * multiplicity
        keep = w > 0
        Z, w, v = self.Z[keep], w[keep], self.v[keep]
        A = (Z * w[:, None]).T @ Z
        b = (Z * w[:, None]).T @ v
        return A, b


@dataclass(frozen=True)
class ShapleyExplanation:
    """Base value ``phi0`` and per-feature attributions ``phi``.

    For several instances ``phi0`` has shape ``(I,)`` and ``phi`` ``(I, p)``.
    """

    phi0: float | np.ndarray
    phi: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def total(self):
        return self.phi0 + self.phi.sum(axis=-1)


def condition_number(A) -> float:
    """2-norm condition of a symmetric PSD matrix; ``inf`` if not positive definite."""
    ev = np.linalg.eigvalsh(A)
    if ev[0] <= 0:
        return float("inf")
    return float(ev[-1] / ev[0])


def build_system(sample, oracle: ContributionOracle, x_star) -> WlsSystem:
    """Rows for every coalition in ``sample`` with their HT-adjusted kernel weights."""
    masks = np.asarray(sample.masks, dtype=np.int64)
    if masks.size == 0:
        raise ConstructionError("sample is empty")
    p = sample.p
    for anchor in (0, full_mask(p)):
        hit = np.flatnonzero(masks == anchor)
        if hit.size != 1:
            raise ConstructionError(f"anchor coalition {anchor:#x} missing from sample")
        if sample.pi is not None and not np.isnan(sample.pi[hit[0]]) and sample.pi[hit[0]] != 1.0:
            raise ConstructionError("anchor coalitions must have inclusion probability 1")
    order = np.argsort(masks, kind="stable")
    masks = masks[order]
    v = oracle.contribution(masks, x_star)
    return WlsSystem(design_matrix(masks, p), np.asarray(sample.weight, dtype=float)[order], v, masks)


def solve_normal(A, b, label=None, condition_limit: float = CONDITION_LIMIT):
    """Solve the SPD system ``A x = b`` by Cholesky; raise if ill-conditioned."""
    cond = condition_number(A)
    if not cond <= condition_limit:
        raise SingularSystemError(
            f"normal equations are rank deficient (condition {cond:.3g})", cond, label
        )
    try:
        factor = linalg.cho_factor(A)
    except linalg.LinAlgError as exc:
        raise SingularSystemError(f"Cholesky factorisation failed: {exc}", cond, label) from exc
    return linalg.cho_solve(factor, b), cond


def solve_shapley(system: WlsSystem, label=None) -> ShapleyExplanation:
    A, b = system.normal_equations()
    x, cond = solve_normal(A, b, label)
    return ShapleyExplanation(x[0], np.asarray(x[1:]).T, {"condition": cond, "rows": system.Z.shape[0]})


def solve_batch(A, b, condition_limit: float = CONDITION_LIMIT):
    """Solve a stack of normal-equation systems.

    ``A`` has shape ``(B, k, k)``, ``b`` ``(B, k, I)``. Returns ``(x, ok)`` with
    ``x`` NaN wherever the matching system is singular.
    """
    ev = np.linalg.eigvalsh(A)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(ev[:, 0] > 0, ev[:, -1] / ev[:, 0], np.inf)
    ok = cond <= condition_limit
    x = np.full(b.shape, np.nan)
    idx = np.flatnonzero(ok)
    if idx.size:
        try:
            L = np.linalg.cholesky(A[idx])
        except np.linalg.LinAlgError:
            for i in idx:
                try:
                    x[i] = solve_normal(A[i], b[i], condition_limit=condition_limit)[0]
                except SingularSystemError:
                    ok[i] = False
        else:
            y = np.linalg.solve(L, b[idx])
            x[idx] = np.linalg.solve(np.swapaxes(L, -1, -2), y)
    return x, ok


def exact_shapley(
    oracle: ContributionOracle, x_star, anchor_weight: float = DEFAULT_ANCHOR_WEIGHT
) -> ShapleyExplanation:
    """Shapley values from the full ``2**p`` system (no sampling)."""
    from .sampling import full_population_sample

    sample = full_population_sample(oracle.p, anchor_weight)
    return solve_shapley(build_system(sample, oracle, x_star), label="exact")


def closed_form_linear_shapley(oracle: ContributionOracle, x_star) -> ShapleyExplanation:
    """``phi_j = beta_j (x*_j - mean_j)``, valid for the marginal linear game only."""
    if oracle.kind != MARGINAL:
        raise UnsupportedOracleError(f"closed form needs a {MARGINAL} oracle, got {oracle.kind}")
    x_star = np.asarray(x_star, dtype=float)
    phi = oracle.beta * (x_star - oracle.feature_means)
    phi0 = oracle.mean_prediction
    if phi.ndim == 2:
        phi0 = np.full(phi.shape[0], phi0)
    return ShapleyExplanation(phi0, phi, {"closed_form": True})
