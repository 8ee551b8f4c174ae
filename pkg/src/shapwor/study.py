"""Single explanations and the repeated-sampling study.

The study draws ``runs`` independent coalition samples. The spread of the
resulting estimates (the *resampled* SD) is the benchmark that the mean
bootstrap SD of each method is compared against.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .bootstrap import METHODS, bootstrap_sd
from .coalitions import DEFAULT_ANCHOR_WEIGHT
from .data import MARGINAL, REGRESSION, fit_linear, generate_synthetic, load_csv
from .exceptions import EstimationFailedError, ShapworError, SingularSystemError
from .sampling import build_pairing, draw_sample, draw_with_replacement_baseline, plan_sample
from .wallenius import LARGEST_REMAINDER
from .wls import build_system, exact_shapley, solve_shapley

log = logging.getLogger(__name__)

EXACT_CAP = 20
WITH_REPLACEMENT = "with-replacement"
# spawn keys separating the random streams of each study arm
_ARMS = {"sample": 0, "symmetric": 1, "doubled-half": 2, WITH_REPLACEMENT: 3}


class StudyError(ShapworError, RuntimeError):
    pass


def derive_seed(master: int, arm: str, index: int) -> np.random.SeedSequence:
    """Counter-based stream for (arm, run index); independent of execution order."""
    return np.random.SeedSequence(master, spawn_key=(_ARMS[arm], index))


@dataclass
class StudyConfig:
    data: str | None = None
    response: str = "y"
    split: float = 0.5
    synthetic: dict = field(default_factory=lambda: {"p": 5, "n": 2864, "noise": 1.0, "rho": 0.5})
    n_total: int = 16
    runs: int = 300
    replicates: int = 300
    methods: tuple = METHODS
    baseline: str | None = None
    instances: int | list = 20
    seed: int = 0
    contribution: str = REGRESSION
    anchor_weight: float = DEFAULT_ANCHOR_WEIGHT
    rounding: str = LARGEST_REMAINDER
    keep_estimates: bool = False
    exact: bool = True

    def __post_init__(self):
        self.methods = tuple(self.methods)
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown bootstrap method {m!r}")
        if self.baseline not in (None, WITH_REPLACEMENT):
            raise ValueError(f"unknown baseline {self.baseline!r}")
        if self.runs < 2 or self.replicates < 2:
            raise ValueError("runs and replicates must both be >= 2")
        if self.contribution not in (MARGINAL, REGRESSION):
            raise ValueError(f"unknown contribution function {self.contribution!r}")

    def load_dataset(self):
        if self.data is not None:
            return load_csv(self.data, self.response, self.split)
        spec = dict(self.synthetic)
        return generate_synthetic(
            int(spec["p"]),
            int(spec.get("n", 2864)),
            noise_sd=float(spec.get("noise", 1.0)),
            seed=int(spec.get("seed", self.seed)),
            rho=float(spec.get("rho", 0.0)),
            split=self.split,
        )

    def instance_rows(self, n_explain: int) -> list[int]:
        if isinstance(self.instances, int):
            if self.instances < 1:
                raise ValueError("need at least one instance")
            return list(range(min(self.instances, n_explain)))
        rows = [int(i) for i in self.instances]
        bad = [i for i in rows if not 0 <= i < n_explain]
        if bad or not rows:
            raise ValueError(f"instance indices {bad or rows} outside the {n_explain} explain rows")
        return rows


@dataclass
class StudyReport:
    features: tuple
    instances: list
    methods: tuple
    exact_phi: np.ndarray | None
    mean_estimate: np.ndarray
    resampled_sd: np.ndarray
    resampled_sd_se: np.ndarray
    mean_boot_sd: dict
    mean_failures: dict
    plan: dict
    config: dict
    baseline: dict | None = None
    estimates: np.ndarray | None = None

    def ratios(self) -> dict:
        """Per method, per feature: instance-averaged bootstrap SD over instance-averaged resampled SD."""
        truth = self.resampled_sd.mean(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return {m: np.nanmean(self.mean_boot_sd[m], axis=0) / truth for m in self.methods}


@dataclass
class Explanation:
    phi0: np.ndarray
    phi: np.ndarray
    boot_sd: dict
    failures: dict
    sample: object


def explain(
    oracle,
    x_star,
    n_total: int,
    seed: int = 0,
    methods=(),
    replicates: int = 300,
    anchor_weight: float = DEFAULT_ANCHOR_WEIGHT,
    rounding: str = LARGEST_REMAINDER,
) -> Explanation:
    """One sampled-coalition estimate, plus bootstrap SDs for each requested method."""
    plan = plan_sample(oracle.p, n_total, anchor_weight, rounding)
    sample = draw_sample(plan, seed=derive_seed(seed, "sample", 0))
    system = build_system(sample, oracle, x_star)
    est = solve_shapley(system, label="explain")
    sds, fails = {}, {}
    for m in methods:
        sds[m], fails[m] = bootstrap_sd(
            sample, oracle, x_star, replicates, m, seed=derive_seed(seed, m, 0), system=system
        )
    return Explanation(est.phi0, est.phi, sds, fails, sample)


def _resampled(estimates):
    R = estimates.shape[0]
    # shifting by the first run makes identical estimates give an exact zero
    sd = (estimates - estimates[0]).std(axis=0, ddof=1)
    return estimates.mean(axis=0), sd, sd / math.sqrt(2 * (R - 1))


def run_study(config: StudyConfig) -> StudyReport:
    dataset = config.load_dataset()
    oracle = fit_linear(dataset, kind=config.contribution)
    rows = config.instance_rows(dataset.X_explain.shape[0])
    X = dataset.X_explain[rows]
    p, R, B = dataset.p, config.runs, config.replicates
    plan = plan_sample(p, config.n_total, config.anchor_weight, config.rounding)
    pairing = build_pairing(p)
    exact = exact_shapley(oracle, X, config.anchor_weight).phi if config.exact and p <= EXACT_CAP else None

    estimates = np.empty((R, len(rows), p))
    boot = {m: np.empty((R, len(rows), p)) for m in config.methods}
    fails = {m: np.empty(R) for m in config.methods}
    for r in range(R):
        sample = draw_sample(plan, pairing, derive_seed(config.seed, "sample", r))
        system = build_system(sample, oracle, X)
        try:
            estimates[r] = solve_shapley(system, label=r).phi
            for m in config.methods:
                boot[m][r], fails[m][r] = bootstrap_sd(
                    sample, oracle, X, B, m, seed=derive_seed(config.seed, m, r), system=system
                )
        except (SingularSystemError, EstimationFailedError) as exc:
            raise StudyError(f"run {r} failed: {exc}") from exc
        if (r + 1) % 50 == 0:
            log.info("run %d/%d done", r + 1, R)

    baseline = None
    if config.baseline == WITH_REPLACEMENT:
        # repeated draws often leave too few distinct coalitions; such runs are
        # counted and left out rather than aborting the study
        base_est = np.full((R, len(rows), p), np.nan)
        unique = np.empty(R)
        for r in range(R):
            sample = draw_with_replacement_baseline(
                p, config.n_total, derive_seed(config.seed, WITH_REPLACEMENT, r), config.anchor_weight
            )
            unique[r] = len(sample)
            try:
                base_est[r] = solve_shapley(build_system(sample, oracle, X), label=r).phi
            except SingularSystemError:
                pass
        good = ~np.isnan(base_est[:, 0, 0])
        if good.sum() < 2:
            raise StudyError(f"baseline arm: only {int(good.sum())} of {R} runs gave a full-rank system")
        mean, sd, se = _resampled(base_est[good])
        baseline = {"mean_estimate": mean, "resampled_sd": sd, "resampled_sd_se": se,
                    "mean_unique_coalitions": float(unique.mean()), "singular_runs": int(R - good.sum())}

    mean, sd, se = _resampled(estimates)
    cfg = asdict(config)
    cfg["methods"] = list(config.methods)
    return StudyReport(
        features=dataset.columns,
        instances=rows,
        methods=config.methods,
        exact_phi=exact,
        mean_estimate=mean,
        resampled_sd=sd,
        resampled_sd_se=se,
        mean_boot_sd={m: np.nanmean(boot[m], axis=0) for m in config.methods},
        mean_failures={m: float(fails[m].mean()) for m in config.methods},
        plan={"sizes": plan.sizes.tolist(), "pairs": plan.m.tolist(), "omega": plan.omega.tolist(),
              "expected": plan.mu.tolist(), "drawn": plan.x.tolist(), "pi": plan.pi.tolist()},
        config=cfg,
        baseline=baseline,
        estimates=estimates if config.keep_estimates else None,
    )


REPORT_COLUMNS = ("instance", "feature", "method", "exact_phi", "mean_estimate", "resampled_sd",
                  "resampled_sd_se", "mean_boot_sd", "failures")
SUMMARY_COLUMNS = ("method", "feature", "mean_boot_sd", "resampled_sd", "ratio")
BASELINE_COLUMNS = ("instance", "feature", "mean_estimate", "resampled_sd", "resampled_sd_se")


def _num(x):
    x = float(x)
    return None if math.isnan(x) else x


def report_rows(report: StudyReport) -> list[dict]:
    """Long-format rows: one per (instance, feature, method)."""
    rows = []
    methods = report.methods or ("none",)
    for i, inst in enumerate(report.instances):
        for j, feat in enumerate(report.features):
            for m in methods:
                boot = report.mean_boot_sd.get(m)
                rows.append({
                    "instance": inst,
                    "feature": feat,
                    "method": m,
                    "exact_phi": None if report.exact_phi is None else _num(report.exact_phi[i, j]),
                    "mean_estimate": _num(report.mean_estimate[i, j]),
                    "resampled_sd": _num(report.resampled_sd[i, j]),
                    "resampled_sd_se": _num(report.resampled_sd_se[i, j]),
                    "mean_boot_sd": None if boot is None else _num(boot[i, j]),
                    "failures": _num(report.mean_failures.get(m, float("nan"))),
                })
    return rows


def summary_rows(report: StudyReport) -> list[dict]:
    ratios = report.ratios()
    truth = report.resampled_sd.mean(axis=0)
    return [
        {"method": m, "feature": feat, "mean_boot_sd": _num(np.nanmean(report.mean_boot_sd[m][:, j])),
         "resampled_sd": _num(truth[j]), "ratio": _num(ratios[m][j])}
        for m in report.methods
        for j, feat in enumerate(report.features)
    ]


def baseline_rows(report: StudyReport) -> list[dict]:
    b = report.baseline
    if b is None:
        return []
    return [
        {"instance": inst, "feature": feat, "mean_estimate": _num(b["mean_estimate"][i, j]),
         "resampled_sd": _num(b["resampled_sd"][i, j]), "resampled_sd_se": _num(b["resampled_sd_se"][i, j])}
        for i, inst in enumerate(report.instances)
        for j, feat in enumerate(report.features)
    ]


def _write_csv(path: Path, columns, rows):
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(["" if row[c] is None else repr(row[c]) if isinstance(row[c], float) else row[c]
                             for c in columns])


def emit_report(report: StudyReport, out_dir, fmt: str = "csv") -> list[Path]:
    """Write the long table, per-feature summary and (if run) baseline table."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            paths = [out / "report.csv", out / "summary.csv"]
            _write_csv(paths[0], REPORT_COLUMNS, report_rows(report))
            _write_csv(paths[1], SUMMARY_COLUMNS, summary_rows(report))
            if report.baseline is not None:
                paths.append(out / "baseline.csv")
                _write_csv(paths[-1], BASELINE_COLUMNS, baseline_rows(report))
            return paths
        if fmt == "json":
            doc = {"rows": report_rows(report), "summary": summary_rows(report), "plan": report.plan,
                   "config": report.config}
            if report.baseline is not None:
                doc["baseline"] = baseline_rows(report)
                doc["baseline_mean_unique_coalitions"] = report.baseline["mean_unique_coalitions"]
                doc["baseline_singular_runs"] = report.baseline["singular_runs"]
            path = out / "report.json"
            path.write_text(json.dumps(doc, indent=1, allow_nan=False) + "\n", encoding="utf-8")
            return [path]
    except OSError as exc:
        raise StudyError(f"cannot write report to {out}: {exc}") from exc
    raise ValueError(f"unknown report format {fmt!r}")


def read_report_csv(path) -> list[dict]:
    """Parse a ``report.csv`` back into typed rows (blank cells become ``None``)."""
    numeric = set(REPORT_COLUMNS) - {"feature", "method"}
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            typed = {}
            for k, v in row.items():
                if k == "instance":
                    typed[k] = int(v)
                elif k in numeric:
                    typed[k] = None if v == "" else float(v)
                else:
                    typed[k] = v
            out.append(typed)
    return out
