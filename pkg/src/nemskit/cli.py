"""Command-line entry point: ``nemskit <subcommand> ...``.

Exit codes: 0 success, 1 regression rows failed (``report``), 2 invalid
input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import potential as pot
from .circuit import CircuitError, CircuitSpec, load_circuit, parse_angle, preset
from .designer import DesignError, design, load_problem, solution_to_dict
from .drivetools import DriveWindowError, bessel_decompose, kerr_cat_budget, strong_drive_shifts
from .quantize import GridSpanError, QuantizationError, analyze, branch_axis, sweep_spectrum, worker_count
from .tables import FixtureError, regression_report
from .wao import wao_check

EXIT_OK, EXIT_REGRESSION, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3
FORMATS = ("table", "json", "csv")


class ValidationFailure(Exception):
    """Input was readable but the circuit or scenario is not acceptable."""


# --------------------------------------------------------------------------
# output


def _plain(v: Any) -> Any:
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (complex, np.complexfloating)):
        z = complex(v)
        return z.real if z.imag == 0 else [z.real, z.imag]
    if isinstance(v, (np.floating, float)):
        x = float(v)
        return None if math.isnan(x) or math.isinf(x) else x
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _cell(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.8g}"
    if v is None:
        return ""
    if isinstance(v, (list, dict)):
        return json.dumps(v)
    return str(v)


def render(fmt: str, records: list[dict], document: Any, csv_text: str | None = None) -> str:
    """``records`` drive the table and CSV views, ``document`` the JSON view."""
    if fmt == "json":
        return json.dumps(_plain(document), indent=2) + "\n"
    records = [_plain(r) for r in records]
    if fmt == "csv":
        if csv_text is not None:
            return csv_text
        buf = io.StringIO()
        keys = list(dict.fromkeys(k for r in records for k in r))
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in records:
            w.writerow({k: _cell(r.get(k)) for k in keys})
        return buf.getvalue()
    keys = list(dict.fromkeys(k for r in records for k in r))
    cells = [[_cell(r.get(k)) for k in keys] for r in records]
    widths = [max([len(k)] + [len(row[i]) for row in cells]) for i, k in enumerate(keys)]
    lines = ["  ".join(k.ljust(w) for k, w in zip(keys, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# shared helpers


def _circuit(args) -> CircuitSpec:
    if args.preset:
        return preset(args.preset)
    if args.circuit:
        return load_circuit(args.circuit)
    raise CircuitError("give --preset NAME or --circuit FILE")


def _wao_records(rep) -> list[dict]:
    return [
        {"quantity": "single_well", "value": rep.single_well},
        {"quantity": "minima_count", "value": rep.minima_count},
        {"quantity": "analytic_single_well", "value": rep.analytic_single_well},
        {"quantity": "marginal", "value": rep.marginal},
        {"quantity": "per_branch_limits", "value": rep.per_branch_limits},
        {"quantity": "drive_headroom", "value": rep.drive_headroom},
        {"quantity": "binding", "value": rep.binding},
        {"quantity": "diagnostics", "value": "; ".join(rep.diagnostics)},
    ]


def _require_single_well(rep, force: bool):
    if not rep.single_well and not force:
        raise ValidationFailure(
            f"circuit is not single-welled ({rep.minima_count} minima); use --force to continue")


# --------------------------------------------------------------------------
# subcommands


def cmd_analyze(args) -> tuple[str, int]:
    c = _circuit(args)
    rep = wao_check(c)
    _require_single_well(rep, args.force)
    q = analyze(c, order=args.order, force=args.force)
    rec = [
        {"quantity": "omega", "value": q.omega_static, "unit": "GHz"},
        {"quantity": "phi_zpf", "value": q.phi_zpf, "unit": ""},
        {"quantity": "n_zpf", "value": q.n_zpf, "unit": ""},
        {"quantity": "phi_star", "value": q.series.phi_star, "unit": "rad"},
        {"quantity": "kerr", "value": q.kerr_static, "unit": "GHz"},
    ]
    rec += [{"quantity": f"g{n}_static", "value": float(q.g_static[n]), "unit": "GHz"}
            for n in range(3, q.order + 1)]
    rec += [{"quantity": f"g{n}_driven", "value": float(q.g_driven[n]), "unit": "GHz/eps_d"}
            for n in range(1, q.order + 1)]
    rec += [{**r, "unit": ""} for r in _wao_records(rep)]
    doc = {"circuit": c.name, "quantization": q.as_dict(), "wao": json.loads(rep.to_json())}
    return render(args.format, rec, doc), EXIT_OK


def cmd_wao(args) -> tuple[str, int]:
    c = _circuit(args)
    rep = wao_check(c)
    out = render(args.format, _wao_records(rep), {"circuit": c.name, **json.loads(rep.to_json())})
    code = EXIT_OK if rep.single_well or args.force else EXIT_VALIDATION
    return out, code


def cmd_design(args) -> tuple[str, int]:
    p = load_problem(args.problem)
    sol = design(p, order=args.order)
    doc = solution_to_dict(sol)
    rec = [{"branch": i + 1, "r": b.r, "n": b.n, "dc_bias": b.dc_bias, "ac_ratio": b.ac_ratio}
           for i, b in enumerate(sol.branches)]
    if args.format == "table":
        rec += [{"branch": k, "r": v} for k, v in sorted(sol.residual_c.items())]
        rec.append({"branch": f"keep c{p.keep_order}", "r": sol.keep_coefficient})
        rec.append({"branch": "feasible", "r": sol.feasible})
    return render(args.format, rec, doc), EXIT_OK if sol.feasible else EXIT_NUMERICAL


def _axis_index(name: str, c: CircuitSpec) -> int:
    if not name.startswith("phi_e"):
        raise ValidationFailure(f"axis must look like phi_e<k>, got {name!r}")
    try:
        k = int(name[5:])
    except ValueError:
        raise ValidationFailure(f"axis must look like phi_e<k>, got {name!r}") from None
    if not 1 <= k <= len(c.branches):
        raise ValidationFailure(f"circuit has {len(c.branches)} branches; no {name}")
    return k - 1


def cmd_sweep(args) -> tuple[str, int]:
    c = _circuit(args)
    idx = _axis_index(args.axis, c)
    if args.samples < 2:
        raise ValidationFailure("need at least 2 samples")
    axis = branch_axis(c, idx, parse_angle(args.lo), parse_angle(args.hi))
    sw = sweep_spectrum(c, axis, samples=args.samples, n_levels=args.levels, points=args.points)
    text = sw.to_csv()
    rec = list(csv.DictReader(io.StringIO(text)))
    doc = {"axis": axis.name, "grid": sw.grid_meta, "rows": rec}
    return render(args.format, rec, doc, csv_text=text), EXIT_OK


def cmd_drive(args) -> tuple[str, int]:
    c = _circuit(args)
    dec = bessel_decompose(c, args.eps, order=args.order, max_harmonic=args.harmonics,
                           truncation=args.truncation)
    d_omega, d_kerr = strong_drive_shifts(c, args.eps)
    q = analyze(c, order=args.order, force=True)
    budget = kerr_cat_budget(q, nbar=args.nbar, g_over_delta=args.g_over_delta, drive=args.drive_type)
    rec = []
    for n in range(args.order + 1):
        r = {"n": n, "dc_shift": float(dec.dc_shift[n])}
        for k, arr in sorted(dec.harmonics.items()):
            r[f"harmonic_{k}"] = float(arr[n])
        rec.append(r)
    doc = {
        "eps_d": args.eps, "phi_star": dec.phi_star, "per_loop": dec.per_loop,
        "dc_shift": dec.dc_shift, "harmonics": {str(k): v for k, v in dec.harmonics.items()},
        "delta_omega": d_omega, "delta_kerr": d_kerr, "kerr_cat_budget": budget,
        "notes": list(dec.notes),
    }
    if args.format == "table":
        rec.append({"n": "delta_omega", "dc_shift": d_omega})
        rec.append({"n": "delta_kerr", "dc_shift": d_kerr})
        rec += [{"n": k, "dc_shift": v} for k, v in budget.items()]
    return render(args.format, rec, doc), EXIT_OK


# simulate -------------------------------------------------------------


def parse_sweep(spec: str) -> tuple[str, np.ndarray]:
    """``key=lo:hi:n`` with a dotted key into the scenario document."""
    try:
        key, rng = spec.split("=", 1)
        lo, hi, n = rng.split(":")
        values = np.linspace(float(lo), float(hi), int(n))
    except ValueError:
        raise ValidationFailure(f"sweep must be key=lo:hi:n, got {spec!r}") from None
    if not key or int(n) < 1:
        raise ValidationFailure(f"sweep must be key=lo:hi:n, got {spec!r}")
    return key, values


def set_dotted(doc: dict, key: str, value: Any) -> dict:
    out = copy.deepcopy(doc)
    node = out
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ValidationFailure(f"cannot set {key}: {p} is not an object")
    node[parts[-1]] = value
    return out


def _simulate_one(doc: dict) -> dict:
    from .dynamics import run, scenario_from_dict

    summary, _ = run(scenario_from_dict(doc))
    return summary


def _load_scenario(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ValidationFailure(f"no such scenario file: {path}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"malformed scenario JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationFailure("scenario must be a JSON object")
    return doc


def _flat(summary: dict) -> dict:
    out = {}
    for k, v in summary.items():
        if isinstance(v, dict):
            out.update({f"{k}.{kk}": vv for kk, vv in v.items()})
        else:
            out[k] = v
    return out


def cmd_simulate(args) -> tuple[str, int]:
    from .dynamics import run, scenario_from_dict

    doc = _load_scenario(args.scenario)
    if not args.sweep:
        s = scenario_from_dict(doc)
        s.validate()
        summary, res = run(s)
        csv_text = res.to_csv() if res is not None and args.timeseries else None
        return render(args.format, [_flat(summary)], summary, csv_text=csv_text), EXIT_OK
    key, values = parse_sweep(args.sweep)
    docs = [set_dotted(doc, key, float(v)) for v in values]
    for d in docs:
        scenario_from_dict(d).validate()
    workers = min(worker_count(), len(docs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            summaries = list(ex.map(_simulate_one, docs))
    else:
        summaries = [_simulate_one(d) for d in docs]
    rec = [{key: float(v), **_flat(s)} for v, s in zip(values, summaries)]
    return render(args.format, rec, {"sweep": key, "points": [{key: float(v), **s} for v, s in zip(values, summaries)]}), EXIT_OK


def cmd_report(args) -> tuple[str, int]:
    rows, ok = regression_report(args.table, args.fixture)
    rec = []
    for r in rows:
        d = r.as_dict()
        d["status"] = ("pass" if r.passed else "FAIL") + (" (info)" if r.informational else "")
        rec.append(d)
    doc = {"table": args.table, "fixture": args.fixture, "passed": ok, "rows": [r.as_dict() for r in rows]}
    out = render(args.format, rec, doc)
    failed = [f"{r.column}/{r.quantity}" for r in rows if not r.passed and not r.informational]
    if failed and args.format == "table":
        out += "failed rows: " + ", ".join(failed) + "\n"
    return out, EXIT_OK if ok else EXIT_REGRESSION


# --------------------------------------------------------------------------
# parser


def _add_circuit(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--preset", help="built-in circuit name")
    g.add_argument("--circuit", help="circuit JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nemskit", description=__doc__.splitlines()[0])
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=FORMATS, default="table")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[fmt], help="quantize a circuit and check its well")
    _add_circuit(p)
    p.add_argument("--order", type=int, default=pot.DEFAULT_ORDER)
    p.add_argument("--force", action="store_true", help="continue past WAO failures")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("wao-check", parents=[fmt], help="single-well diagnostics")
    _add_circuit(p)
    p.add_argument("--force", action="store_true", help="exit 0 even if not single-welled")
    p.set_defaults(func=cmd_wao)

    p = sub.add_parser("design", parents=[fmt], help="solve an inverse design problem")
    p.add_argument("--problem", required=True, help="problem JSON file or canned name")
    p.add_argument("--order", type=int, default=pot.DEFAULT_ORDER)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("sweep", parents=[fmt], help="transition frequencies along a flux axis")
    _add_circuit(p)
    p.add_argument("--axis", default="phi_e1")
    p.add_argument("--lo", default="-pi")
    p.add_argument("--hi", default="pi")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--points", type=int, default=2048)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("drive", parents=[fmt], help="strong-drive decomposition and shifts")
    _add_circuit(p)
    p.add_argument("--eps", type=float, required=True, help="drive amplitude eps_d")
    p.add_argument("--order", type=int, default=pot.DEFAULT_ORDER)
    p.add_argument("--harmonics", type=int, default=3)
    p.add_argument("--truncation", choices=("exact", "cubic"), default="exact")
    p.add_argument("--nbar", type=float, default=4.0)
    p.add_argument("--g-over-delta", type=float, default=0.1)
    p.add_argument("--drive-type", choices=("magnetic", "electric"), default="magnetic")
    p.set_defaults(func=cmd_drive)

    p = sub.add_parser("simulate", parents=[fmt], help="run a dynamics scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--sweep", help="key=lo:hi:n over a dotted scenario key")
    p.add_argument("--timeseries", action="store_true", help="with --format csv, print the time series")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", parents=[fmt], help="regression against a comparison table")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--table", type=int, choices=(1, 2, 3))
    g.add_argument("--fixture", help="fixture JSON file")
    p.set_defaults(func=cmd_report)
    return parser


def _classify(exc: BaseException) -> int:
    from .dynamics import IntegrationError, TruncationError

    numerical = (pot.MinimumError, QuantizationError, GridSpanError, IntegrationError,
                 np.linalg.LinAlgError, FloatingPointError, ArithmeticError)
    if isinstance(exc, numerical):
        return EXIT_NUMERICAL
    validation = (ValidationFailure, CircuitError, DesignError, FixtureError, DriveWindowError,
                  TruncationError, ValueError, KeyError, TypeError, IndexError, OSError)
    if isinstance(exc, validation):
        return EXIT_VALIDATION
    return EXIT_NUMERICAL


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    func: Callable = args.func
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            text, code = func(args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes
        code = _classify(exc)
        kind = "numerical failure" if code == EXIT_NUMERICAL else "invalid input"
        print(f"nemskit {args.command}: {kind}: {exc}", file=stderr)
        return code
    for w in caught:
        print(f"warning: {w.message}", file=stderr)
    stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
