"""Batch front-end: ``kolmoreg <command> --config run.json [--out prefix]``.

Exit status: 0 on success, 2 when the configuration (or the structure it
names) fails validation, 3 when a grid exceeds the point budget.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import TextIO

import jsonschema

from . import schema
from .fields import DegreeCapError, FieldSpec, SupportError
from .rational import as_fraction, format_fraction
from .spectral import DEFAULT_BUDGET, BudgetError, GridSpec
from .structure import (
    ExponentDomainError,
    StructureError,
    StructureMatrix,
    dilation_law,
    kalman_rank,
    validate_structure,
)
from .verify import (
    family_supremum,
    gaussian_family,
    maximal_regularity,
    refinement_study,
    report_to_dict,
    reports_to_csv,
    scaling_experiment,
    toy_scaling_experiment,
    weighted_grid,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3


class ConfigError(ValueError):
    pass


def _schema_message(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path) or "<root>"
    if err.validator == "minItems" and err.instance == []:
        return f"{path}: empty"
    return f"{path}: {err.message}"


def validate_config(config: dict, command: str) -> None:
    if command not in schema.COMMANDS:
        raise ConfigError(f"command: unknown command {command!r}")
    validator = jsonschema.Draft202012Validator(schema.CONFIG)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError(_schema_message(errors[0]))
    declared = config.get("command")
    if declared is not None and declared != command:
        raise ConfigError(f"command: config says {declared!r}, invoked as {command!r}")
    for key in schema.REQUIRED[command]:
        if key not in config:
            raise ConfigError(f"{key}: required for {command}")
        if config[key] in ([], {}):
            raise ConfigError(f"{key}: empty")


def _grid(config: dict, M: StructureMatrix, budget: int) -> GridSpec:
    g = config["grid"]
    n = g.get("n", 64)
    n = tuple(n) if isinstance(n, list) else n
    L = g["L"]
    L = tuple(L) if isinstance(L, list) else (L,) * len(M.dims)
    if len(L) != len(M.dims):
        raise ConfigError(f"grid.L: need {len(M.dims)} half-widths, got {len(L)}")
    if "weight_refinement" in g:
        if not isinstance(n, int):
            raise ConfigError("grid.n: weight_refinement needs a single base count")
        return weighted_grid(M, L, g["Lt"], n, as_fraction(g["weight_refinement"]), budget=budget)
    try:
        return GridSpec(M.dims, L, g["Lt"], n, budget)
    except BudgetError:
        raise
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}")


def _fields(config: dict, M: StructureMatrix, grid: GridSpec) -> tuple[list[FieldSpec], int | None]:
    spec = config["fields"]
    if isinstance(spec, dict):
        kwargs = {"count": spec["count"], "seed": spec["seed"]}
        if "width_range" in spec:
            kwargs["width_range"] = tuple(as_fraction(w) for w in spec["width_range"])
        if "degree_cap" in spec:
            kwargs["degree_cap"] = spec["degree_cap"]
        return gaussian_family(grid, **kwargs), spec["seed"]
    out = []
    for k, d in enumerate(spec):
        try:
            out.append(FieldSpec.from_dict(d, n_vars=M.N + 1))
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"fields.{k}: {exc}")
    return out, None


def _exponents(config: dict) -> list[tuple[Fraction, Fraction]]:
    return [(as_fraction(b), as_fraction(g)) for b, g in config["exponents"]]


def run(
    config: dict,
    command: str | None = None,
    *,
    out: str | os.PathLike | None = None,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
    stdout: TextIO | None = None,
    config_bytes: bytes | None = None,
) -> int:
    """Execute one configuration and write ``<prefix>.csv`` / ``<prefix>.json``."""
    stdout = stdout or sys.stdout
    stderr = sys.stderr
    command = command or config.get("command")
    try:
        if command is None:
            raise ConfigError("command: missing")
        validate_config(config, command)
        M = StructureMatrix.from_dict(config["structure"])
        result = _dispatch(command, config, M, budget, threads, stdout)
    except BudgetError as exc:
        print(f"budget: {exc}", file=stderr)
        return EXIT_BUDGET
    except (ConfigError, StructureError, ExponentDomainError, SupportError, DegreeCapError) as exc:
        print(str(exc), file=stderr)
        return EXIT_INVALID
    csv_text, reports, summary, status = result

    prefix = Path(out or config.get("output") or "kolmoreg-report")
    doc = {
        "schema_version": 1,
        "command": command,
        "structure": M.to_dict(),
        "structure_hash": hashlib.sha256(M.to_json().encode()).hexdigest(),
        "reports": [report_to_dict(r) for r in reports],
        "summary": summary,
    }
    if config_bytes is not None:
        doc["config_hash"] = hashlib.sha256(config_bytes).hexdigest()
    jsonschema.validate(doc, schema.REPORT)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{prefix}.csv").write_text(csv_text)
    Path(f"{prefix}.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return status


def _dispatch(command, config, M, budget, threads, stdout):
    if command == "check-structure":
        report = validate_structure(M)
        rank = kalman_rank(M)
        law = dilation_law(M)
        line = f"{report.summary()}, kalman_rank={rank}"
        print(line, file=stdout)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["check", "passed", "message"])
        writer.writerows([c.name, str(c.passed).lower(), c.message] for c in report.checks)
        summary = {
            "valid": report.valid,
            "message": line,
            "kalman_rank": rank,
            "N": M.N,
            "checks": [{"name": c.name, "passed": c.passed, "message": c.message} for c in report.checks],
            "dilation": {"group_weights": list(law.group_weights), "time_weight": law.time_weight, "Q": law.Q},
        }
        return buf.getvalue(), [], summary, EXIT_OK if report.valid else EXIT_INVALID

    check = validate_structure(M)
    if not check.valid:
        raise ConfigError(f"structure: {check.summary()}")
    grid = _grid(config, M, budget)
    fields, seed = _fields(config, M, grid)

    if command == "verify-transport":
        reports, pairs = [], []
        for beta, gamma in _exponents(config):
            fam = family_supremum(fields, M, beta, gamma, grid, threads=threads, seed=seed)
            reports.extend(fam.reports)
            pairs.append({
                "beta": format_fraction(beta), "gamma": format_fraction(gamma),
                "s": format_fraction(fam.reports[0].s),
                "supremum_ratio": fam.supremum, "degenerate": fam.n_degenerate,
                "members": len(fam.reports),
            })
        print(_table(pairs, ["beta", "gamma", "s", "supremum_ratio", "degenerate"]), file=stdout)
        return reports_to_csv(reports), reports, {"exponents": pairs}, EXIT_OK

    if command == "verify-maximal":
        reports, rows = [], []
        for k, f in enumerate(fields):
            for sig in config["sigma"]:
                r = maximal_regularity(f, M, as_fraction(sig), grid, seed=seed)
                reports.append(r)
                rows.append({
                    "field": k, "sigma": format_fraction(r.sigma), "quotient": r.quotient,
                    "gain_quotient": r.gain_quotient, "sigma_is_one": r.sigma_is_one,
                })
        gains = [row["gain_quotient"] for row in rows if row["gain_quotient"]]
        summary = {"rows": rows, "gain_spread": max(gains) / min(gains) if gains else None}
        print(_table(rows, ["field", "sigma", "quotient", "gain_quotient"]), file=stdout)
        return reports_to_csv(reports), reports, summary, EXIT_OK

    if command == "scaling":
        shift = as_fraction(config.get("shift", 0))
        reports, fits = [], []
        for k, f in enumerate(fields):
            for beta, gamma in _exponents(config):
                sc = scaling_experiment(f, M, beta, gamma, config["radii"], grid, shift=shift)
                reports.extend(sc.reports)
                fits.append({
                    "field": k, "beta": format_fraction(beta), "gamma": format_fraction(gamma),
                    "s": format_fraction(sc.s), "slope": sc.fitted_slope,
                    "predicted_slope": format_fraction(sc.predicted_slope),
                    "flagged": sc.flagged, "radii": [format_fraction(r) for r in sc.radii],
                    "ratios": list(sc.ratios),
                })
        summary = {"fits": fits}
        if len(fits) == 1:
            summary["slope"] = fits[0]["slope"]
        print(_table(fits, ["field", "beta", "gamma", "s", "slope", "flagged"]), file=stdout)
        return reports_to_csv(reports), reports, summary, EXIT_OK

    if command == "refine":
        resolutions = [tuple(n) if isinstance(n, list) else n for n in config["resolutions"]]
        for n in resolutions:
            grid.with_n(n)  # budget check before any work
        reports, studies = [], []
        for k, f in enumerate(fields):
            for beta, gamma in _exponents(config):
                st = refinement_study(f, M, beta, gamma, resolutions, grid)
                reports.extend(st.reports)
                studies.append({
                    "field": k, "beta": format_fraction(beta), "gamma": format_fraction(gamma),
                    "ratios": [r.ratio for r in st.reports], "differences": list(st.differences),
                })
        print(_table(studies, ["field", "beta", "gamma", "differences"]), file=stdout)
        return reports_to_csv(reports), reports, {"studies": studies}, EXIT_OK

    if command == "toy":
        if M.kappa != 2:
            raise ConfigError(f"structure: toy needs kappa = 2, got {M.kappa}")
        groups = [config["group"]] if "group" in config else [2, 1]
        lines = ["field,group,s,slope"]
        results = []
        for k, f in enumerate(fields):
            for grp in groups:
                rep = toy_scaling_experiment(f, M, config["radii"], grid, group=grp)
                lines += [f"{k},{grp},{format_fraction(s)},{sl!r}" for s, sl in zip(rep.candidates, rep.slopes)]
                results.append({
                    "field": k, "group": grp, "balanced_exponent": format_fraction(rep.balanced_exponent),
                    "balanced_exponent_float": float(rep.balanced_exponent),
                    "slope": rep.fitted_slope, "flagged": rep.flagged, "label": rep.label,
                })
        print(_table(results, ["field", "group", "balanced_exponent", "slope", "label"]), file=stdout)
        return "\n".join(lines) + "\n", [], {"label": "exploratory", "results": results}, EXIT_OK

    raise ConfigError(f"command: unknown command {command!r}")


def _table(rows: list[dict], keys: list[str]) -> str:
    out = ["  ".join(keys)]
    for row in rows:
        out.append("  ".join(_fmt(row.get(k)) for k in keys))
    return "\n".join(out)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="kolmoreg", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=schema.COMMANDS)
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", default=None, help="output prefix (default: config 'output')")
    parser.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="max lattice points")
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)
    threads = args.threads or int(os.environ.get("KOLMOREG_THREADS", "1"))
    try:
        raw = args.config.read_bytes()
        config = json.loads(raw)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if not isinstance(config, dict):
        print("<root>: config must be a JSON object", file=sys.stderr)
        return EXIT_INVALID
    return run(config, args.command, out=args.out, budget=args.budget, threads=threads, config_bytes=raw)


if __name__ == "__main__":
    sys.exit(main())
