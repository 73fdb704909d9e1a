"""Regression of computed coefficients against the stored comparison tables.

Each fixture row names a preset circuit, the quantity to compute and a
tolerance.  Rows with a zero reference are compared in absolute terms on the
raw Taylor coefficient (units of E_L); the others use relative error.  Rows
flagged ``magnitude`` compare absolute values (the overall sign of a driven
term follows the sign convention of the drive).  ``informational`` rows are
evaluated but do not decide the overall verdict.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .circuit import preset
from .drivetools import kerr_cat_budget
from .quantize import ModeQuantization, analyze

KINDS = ("omega", "phi_zpf", "g_static", "g_driven", "c_static_zero", "c_driven_zero", "budget")


class FixtureError(ValueError):
    pass


@dataclass(frozen=True)
class ReportRow:
    quantity: str
    column: str
    computed: float
    reference: float
    unit: str
    rel_error: float | None
    abs_error: float
    tolerance: float
    mode: str
    passed: bool
    informational: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=None)
def _quantized(name: str) -> ModeQuantization:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return analyze(preset(name), force=True)


def load_fixture(table: int | None = None, path: str | Path | None = None) -> dict:
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise FixtureError(f"cannot read fixture {path}: {exc}") from exc
    else:
        if table not in (1, 2, 3):
            raise FixtureError(f"unknown table {table!r}; choose 1, 2 or 3")
        doc = json.loads(resources.files("nemskit.data").joinpath(f"table{table}.json").read_text())
    if not isinstance(doc, dict) or not isinstance(doc.get("rows"), list):
        raise FixtureError("fixture must be an object with a 'rows' list")
    return doc


def computed_value(row: dict) -> float:
    kind = row.get("kind")
    if kind not in KINDS:
        raise FixtureError(f"row {row.get('quantity')!r}: unknown kind {kind!r}")
    q = _quantized(row["preset"])
    n = row.get("n")
    if kind == "omega":
        return q.omega_static
    if kind == "phi_zpf":
        return q.phi_zpf
    if kind == "g_static":
        return float(q.g_static[n])
    if kind == "g_driven":
        return float(q.g_driven[n])
    if kind == "c_static_zero":
        return float(q.series.c_static[n])
    if kind == "c_driven_zero":
        return float(q.series.c_driven[n])
    budget = kerr_cat_budget(q, drive=row.get("drive", "magnetic"))
    return float(budget[row["key"]])


def evaluate_row(row: dict) -> ReportRow:
    try:
        ref = float(row["reference"])
        label = str(row["quantity"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FixtureError(f"malformed fixture row {row!r}") from exc
    value = computed_value(row)
    magnitude = bool(row.get("magnitude", False))
    a, b = (abs(value), abs(ref)) if magnitude else (value, ref)
    abs_err = abs(a - b)
    if ref == 0.0:
        tol = float(row.get("abs_tol", 1e-9))
        rel, ok, mode = None, abs_err < tol, "absolute"
    else:
        tol = float(row.get("rel_tol") or 0.05)
        rel = abs_err / abs(b)
        ok, mode = rel <= tol, "magnitude" if magnitude else "relative"
    return ReportRow(quantity=label, column=str(row.get("column", row["preset"])), computed=value,
                     reference=ref, unit=str(row.get("unit", "")), rel_error=rel, abs_error=abs_err,
                     tolerance=tol, mode=mode, passed=bool(ok),
                     informational=bool(row.get("informational", False)))


def regression_report(table: int | None = None, path: str | Path | None = None) -> tuple[list[ReportRow], bool]:
    """Evaluate every fixture row; the verdict ignores informational rows."""
    doc = load_fixture(table, path)
    rows = [evaluate_row(r) for r in doc["rows"]]
    verdict = all(r.passed for r in rows if not r.informational)
    return rows, verdict


def find_row(rows: list[ReportRow], column: str, quantity: str) -> ReportRow:
    for r in rows:
        if r.column == column and r.quantity == quantity:
            return r
    raise KeyError(f"{column}/{quantity}")


def format_value(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.6g}"
