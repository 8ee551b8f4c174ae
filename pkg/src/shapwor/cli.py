"""Command line front end: ``shapwor {exact,explain,study}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bootstrap import METHODS
from .data import fit_linear
from .exceptions import ShapworError
from .study import WITH_REPLACEMENT, StudyConfig, emit_report, explain, run_study
from .wls import exact_shapley

# flag name -> StudyConfig field
_FIELDS = {
    "data": "data", "response": "response", "split": "split", "synthetic": "synthetic",
    "coalitions": "n_total", "runs": "runs", "replicates": "replicates", "methods": "methods",
    "baseline": "baseline", "seed": "seed", "instances": "instances", "contribution": "contribution",
    "keep_estimates": "keep_estimates",
}


def parse_synthetic(text: str) -> dict:
    """``p=5,n=2864,noise=1,rho=0.5`` -> dict."""
    spec = {}
    for part in filter(None, text.split(",")):
        key, sep, value = part.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"bad synthetic spec item {part!r}")
        spec[key.strip()] = float(value) if key.strip() in ("noise", "rho") else int(value)
    if "p" not in spec:
        raise argparse.ArgumentTypeError("synthetic spec needs p=<features>")
    return spec


def parse_instances(text: str):
    """A bare integer ``k`` means the first ``k`` explain rows; a comma list gives indices."""
    if "," in text:
        return [int(v) for v in text.split(",") if v.strip()]
    return int(text)


def parse_methods(text: str) -> tuple:
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    for m in methods:
        if m not in METHODS:
            raise argparse.ArgumentTypeError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    return methods


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shapwor", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("exact", "explain", "study"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON file with any of the options below")
        src = p.add_mutually_exclusive_group()
        src.add_argument("--data", help="CSV file with a header row")
        src.add_argument("--synthetic", type=parse_synthetic, help="e.g. p=5,n=2864,noise=1,rho=0.5")
        p.add_argument("--response", help="response column of --data (default y)")
        p.add_argument("--split", type=float, help="training fraction (default 0.5)")
        p.add_argument("--instances", type=parse_instances, help="k, or a comma separated index list")
        p.add_argument("--contribution", choices=("linear-marginal", "linear-regression"))
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, help="output directory (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "exact":
            continue
        p.add_argument("--coalitions", type=int, help="coalition budget including the two anchors")
        p.add_argument("--replicates", type=int)
        p.add_argument("--methods", type=parse_methods)
        if name == "study":
            p.add_argument("--runs", type=int)
            p.add_argument("--baseline", choices=(WITH_REPLACEMENT,))
            p.add_argument("--keep-estimates", action="store_true", default=None)
    return parser


def resolve_config(args) -> tuple[StudyConfig, dict, set]:
    """Merge ``--config`` JSON with explicit flags (flags win).

    Returns the config, the output options and the set of config fields that
    were given explicitly.
    """
    options = {}
    if args.config is not None:
        raw = json.loads(args.config.read_text(encoding="utf-8"))
        for key, value in raw.items():
            key = key.replace("-", "_")
            if key in ("out", "format"):
                options[key] = value
                continue
            if key not in _FIELDS:
                raise ShapworError(f"unknown config key {key!r} in {args.config}")
            if key == "synthetic" and isinstance(value, str):
                value = parse_synthetic(value)
            elif key == "methods" and isinstance(value, str):
                value = parse_methods(value)
            elif key == "instances" and isinstance(value, str):
                value = parse_instances(value)
            options[_FIELDS[key]] = value
    for flag, fieldname in _FIELDS.items():
        value = getattr(args, flag, None)
        if value is not None:
            options[fieldname] = value
    if getattr(args, "data", None) is not None:
        options.pop("synthetic", None)
    elif getattr(args, "synthetic", None) is not None:
        options.pop("data", None)
    out = {"out": args.out or options.pop("out", None), "format": args.format or options.pop("format", None) or "csv"}
    options.pop("out", None)
    options.pop("format", None)
    return StudyConfig(**options), out, set(options)


def _write_table(columns, rows, out, name, fmt):
    if out is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows([[r[c] for c in columns] for r in rows])
        return
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        (out / f"{name}.json").write_text(json.dumps(rows, indent=1) + "\n", encoding="utf-8")
    else:
        with (out / f"{name}.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            writer.writerows([[r[c] for c in columns] for r in rows])


def _explanation_rows(rows, features, phi0, phi, sds=None, failures=None):
    phi0 = np.atleast_1d(phi0)
    out = []
    for i, inst in enumerate(rows):
        for j, feat in enumerate(features):
            row = {"instance": inst, "feature": feat, "phi0": repr(float(phi0[i])), "phi": repr(float(phi[i, j]))}
            for m, sd in (sds or {}).items():
                row[f"sd_{m}"] = repr(float(sd[i, j]))
                row[f"failures_{m}"] = failures[m]
            out.append(row)
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config, out, given = resolve_config(args)
        if args.command == "study":
            if out["out"] is None:
                raise ShapworError("study needs --out <dir>")
            report = run_study(config)
            for path in emit_report(report, out["out"], out["format"]):
                print(path)
            return 0
        dataset = config.load_dataset()
        oracle = fit_linear(dataset, kind=config.contribution)
        rows = config.instance_rows(dataset.X_explain.shape[0])
        X = dataset.X_explain[rows]
        if args.command == "exact":
            res = exact_shapley(oracle, X, config.anchor_weight)
            table = _explanation_rows(rows, dataset.columns, res.phi0, res.phi)
        else:
            methods = config.methods if "methods" in given else ()
            res = explain(oracle, X, config.n_total, config.seed, methods, config.replicates, config.anchor_weight)
            table = _explanation_rows(rows, dataset.columns, res.phi0, res.phi, res.boot_sd, res.failures)
        _write_table(list(table[0]), table, out["out"], args.command, out["format"])
        return 0
    except (ShapworError, ValueError, OSError) as exc:
        print(f"shapwor: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
