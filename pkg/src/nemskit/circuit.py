"""Circuit data model for multi-loop SQUIDs.

A circuit is a shunt capacitor, an inductor branch built from ``n_L`` large
junctions, and any number of parallel Josephson branches.  Every branch is
threaded by its own flux control: a DC bias plus a signed fraction of the
common drive amplitude.

All energies are frequencies in GHz, angles are radians.
"""
from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

POLICIES = ("strict", "warn")
INDUCTOR_MODELS = ("linear", "array")


class CircuitError(ValueError):
    """Raised for malformed or invalid circuit descriptions."""


class DriveNormalizationWarning(UserWarning):
    """The flux drive ratios do not sum to one in absolute value."""


def truncate_flux(phi_e):
    """Map a flux onto the half-open interval (-pi, pi].

    Works element-wise on arrays.  ``-pi`` is sent to ``+pi``.
    """
    phi = np.asarray(phi_e, dtype=float)
    t = phi - np.floor((phi + math.pi) / TWO_PI) * TWO_PI
    t = np.where(t <= -math.pi + 1e-12, t + TWO_PI, t)
    return float(t) if t.ndim == 0 else t


def parse_angle(value: Any) -> float:
    """Read an angle given either as a number or as a string such as
    ``"pi"``, ``"-0.05pi"``, ``"5pi/4"`` or ``"1/8"``."""
    if isinstance(value, bool):
        raise CircuitError(f"not an angle: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise CircuitError(f"not an angle: {value!r}")
    return parse_number(value)


_PI_RE = re.compile(
    r"^\s*(?P<sign>[+-])?\s*(?P<coef>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+)?\s*\*?\s*"
    r"(?P<pi>pi|π)?\s*(?:/\s*(?P<den>\d+(?:\.\d*)?))?\s*$"
)


def parse_number(text: str) -> float:
    """Parse plain numbers, fractions ``a/b`` and multiples of pi."""
    m = _PI_RE.match(text)
    if not m or (m.group("coef") is None and m.group("pi") is None):
        raise CircuitError(f"cannot parse number {text!r}")
    val = float(m.group("coef")) if m.group("coef") else 1.0
    if m.group("pi"):
        val *= math.pi
    if m.group("den"):
        den = float(m.group("den"))
        if den == 0:
            raise CircuitError(f"division by zero in {text!r}")
        val /= den
    return -val if m.group("sign") == "-" else val


@dataclass(frozen=True)
class JosephsonBranch:
    """One parallel branch of ``n`` identical junctions.

    Attributes:
        r: junction energy in units of the inductive energy E_L.
        n: number of junctions in series.
        dc_bias: DC flux through the loop, stored as given.
        ac_ratio: signed share of the drive amplitude applied to this loop.
    """

    r: float
    n: int
    dc_bias: float = 0.0
    ac_ratio: float = 0.0

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise CircuitError(f"junction count must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "dc_bias", float(self.dc_bias))
        object.__setattr__(self, "ac_ratio", float(self.ac_ratio))
        if self.n < 1:
            raise CircuitError(f"junction count must be >= 1, got {self.n}")
        if not (self.r > 0) or not math.isfinite(self.r):
            raise CircuitError(f"junction ratio must be positive, got {self.r}")
        if not math.isfinite(self.dc_bias) or not math.isfinite(self.ac_ratio):
            raise CircuitError("flux bias and drive ratio must be finite")

    @property
    def truncated_bias(self) -> float:
        return truncate_flux(self.dc_bias)

    @property
    def slip_offset(self) -> float:
        """Multiple of 2pi removed by truncation; fixes the phase-slip number."""
        return self.dc_bias - self.truncated_bias

    @property
    def sign(self) -> int:
        """-1 for a single junction biased at pi, +1 otherwise."""
        if self.n == 1 and abs(abs(self.truncated_bias) - math.pi) < 1e-9:
            return -1
        return 1


@dataclass(frozen=True)
class DriveSpec:
    amplitude: float = 0.0
    frequency: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise CircuitError("drive amplitude must be >= 0")
        if not self.frequency > 0:
            raise CircuitError("drive frequency must be > 0")


@dataclass(frozen=True)
class CircuitSpec:
    """Full circuit description.

    ``inductor_model`` selects how the inductor branch is treated: ``linear``
    keeps only the quadratic energy, ``array`` keeps the cosine of the
    ``n_L``-junction array.
    """

    inductor_EJL: float
    inductor_n: int
    charging_energy: float
    branches: tuple[JosephsonBranch, ...] = ()
    drive_normalization_policy: str = "warn"
    inductor_model: str = "linear"
    drive: DriveSpec | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if isinstance(self.inductor_n, bool) or int(self.inductor_n) != self.inductor_n:
            raise CircuitError("inductor junction count must be an integer")
        object.__setattr__(self, "inductor_n", int(self.inductor_n))
        if self.inductor_n < 1:
            raise CircuitError("inductor junction count must be >= 1")
        if not self.inductor_EJL > 0:
            raise CircuitError("inductor junction energy must be > 0")
        if not self.charging_energy > 0:
            raise CircuitError("charging energy must be > 0")
        if self.drive_normalization_policy not in POLICIES:
            raise CircuitError(f"unknown normalization policy {self.drive_normalization_policy!r}")
        if self.inductor_model not in INDUCTOR_MODELS:
            raise CircuitError(f"unknown inductor model {self.inductor_model!r}")
        for b in self.branches:
            if not isinstance(b, JosephsonBranch):
                raise CircuitError("branches must be JosephsonBranch instances")
        total = self.drive_ratio_sum
        if total > 0 and abs(total - 1.0) > 1e-9:
            msg = f"drive ratios sum to {total:.6g} in absolute value, not 1"
            if self.drive_normalization_policy == "strict":
                raise CircuitError(msg)
            warnings.warn(msg, DriveNormalizationWarning, stacklevel=3)

    @property
    def EL(self) -> float:
        return self.inductor_EJL / self.inductor_n

    @property
    def EC(self) -> float:
        return self.charging_energy

    @property
    def drive_ratio_sum(self) -> float:
        return float(sum(abs(b.ac_ratio) for b in self.branches))

    @property
    def r(self) -> np.ndarray:
        return np.array([b.r for b in self.branches], dtype=float)

    @property
    def n(self) -> np.ndarray:
        return np.array([b.n for b in self.branches], dtype=int)

    @property
    def dc_bias(self) -> np.ndarray:
        return np.array([b.dc_bias for b in self.branches], dtype=float)

    @property
    def ac_ratio(self) -> np.ndarray:
        return np.array([b.ac_ratio for b in self.branches], dtype=float)

    @property
    def signs(self) -> np.ndarray:
        return np.array([b.sign for b in self.branches], dtype=int)

    def with_branches(self, branches: Iterable[JosephsonBranch], **kw) -> "CircuitSpec":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DriveNormalizationWarning)
            return replace(self, branches=tuple(branches), **kw)

    def with_biases(self, biases: Sequence[float]) -> "CircuitSpec":
        if len(biases) != len(self.branches):
            raise CircuitError("one bias per branch required")
        return self.with_branches(
            replace(b, dc_bias=float(x)) for b, x in zip(self.branches, biases)
        )


def emf_residual(c: CircuitSpec) -> float:
    """Sum of r_i * ac_ratio_i / n_i.  Zero means the junction capacitances
    see no electromotive drive."""
    return float(sum(b.r * b.ac_ratio / b.n for b in c.branches))


# --------------------------------------------------------------------------
# JSON ingestion

def _require(d: Mapping, key: str, where: str):
    if key not in d:
        raise CircuitError(f"missing key {key!r} in {where}")
    return d[key]


def _as_float(v: Any, what: str) -> float:
    if isinstance(v, str):
        return parse_number(v)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise CircuitError(f"{what} must be a number, got {v!r}")
    return float(v)


def circuit_from_dict(d: Mapping[str, Any]) -> CircuitSpec:
    """Build a validated circuit from the JSON document structure."""
    if not isinstance(d, Mapping):
        raise CircuitError("circuit document must be a JSON object")
    ind = _require(d, "inductor", "circuit")
    cap = _require(d, "capacitor", "circuit")
    if not isinstance(ind, Mapping) or not isinstance(cap, Mapping):
        raise CircuitError("inductor and capacitor must be objects")
    raw_branches = d.get("branches", [])
    if not isinstance(raw_branches, list):
        raise CircuitError("branches must be a list")
    branches = []
    for i, b in enumerate(raw_branches):
        if not isinstance(b, Mapping):
            raise CircuitError(f"branch {i} must be an object")
        n = _require(b, "n", f"branch {i}")
        if isinstance(n, bool) or not isinstance(n, (int, float)) or int(n) != n:
            raise CircuitError(f"branch {i}: n must be an integer")
        branches.append(JosephsonBranch(
            r=_as_float(_require(b, "r", f"branch {i}"), "r"),
            n=int(n),
            dc_bias=parse_angle(b.get("dc_bias", 0.0)),
            ac_ratio=_as_float(b.get("ac_ratio", 0.0), "ac_ratio"),
        ))
    drive = None
    if d.get("drive") is not None:
        dd = d["drive"]
        if not isinstance(dd, Mapping):
            raise CircuitError("drive must be an object")
        drive = DriveSpec(
            amplitude=_as_float(dd.get("amplitude", 0.0), "amplitude"),
            frequency=_as_float(dd.get("frequency", 1.0), "frequency"),
            phase=parse_angle(dd.get("phase", 0.0)),
        )
    n_l = _require(ind, "n", "inductor")
    if isinstance(n_l, bool) or not isinstance(n_l, (int, float)) or int(n_l) != n_l:
        raise CircuitError("inductor n must be an integer")
    return CircuitSpec(
        inductor_EJL=_as_float(_require(ind, "EJ", "inductor"), "EJ"),
        inductor_n=int(n_l),
        inductor_model=ind.get("model", "linear"),
        charging_energy=_as_float(_require(cap, "EC", "capacitor"), "EC"),
        branches=tuple(branches),
        drive_normalization_policy=d.get("drive_normalization", "warn"),
        drive=drive,
        name=str(d.get("name", "")),
    )


def circuit_to_dict(c: CircuitSpec) -> dict:
    out: dict[str, Any] = {
        "name": c.name,
        "inductor": {"EJ": c.inductor_EJL, "n": c.inductor_n, "model": c.inductor_model},
        "capacitor": {"EC": c.charging_energy},
        "branches": [
            {"r": b.r, "n": b.n, "dc_bias": b.dc_bias, "ac_ratio": b.ac_ratio}
            for b in c.branches
        ],
        "drive": None,
        "drive_normalization": c.drive_normalization_policy,
    }
    if c.drive is not None:
        out["drive"] = {
            "amplitude": c.drive.amplitude,
            "frequency": c.drive.frequency,
            "phase": c.drive.phase,
        }
    return out


def dumps(c: CircuitSpec, indent: int | None = 2) -> str:
    # repr-exact floats so that a reload gives an identical circuit
    return json.dumps(circuit_to_dict(c), indent=indent)


def loads(text: str) -> CircuitSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitError(f"malformed circuit JSON: {exc}") from exc
    return circuit_from_dict(doc)


def load_circuit(source: str | Path) -> CircuitSpec:
    """Load a circuit from a JSON file, or resolve a preset by name."""
    key = str(source)
    if key in PRESETS and not Path(key).exists():
        return preset(key)
    path = Path(source)
    if not path.is_file():
        raise CircuitError(f"no such circuit file or preset: {key}")
    return loads(path.read_text())


# --------------------------------------------------------------------------
# presets

_PI = "pi"


def _doc(name, EJ, nL, EC, branches, model="linear"):
    return {
        "name": name,
        "inductor": {"EJ": EJ, "n": nL, "model": model},
        "capacitor": {"EC": EC},
        "branches": [
            {"r": r, "n": n, "dc_bias": bias, "ac_ratio": rp} for r, n, bias, rp in branches
        ],
    }


_NEMS3 = [(1.0, 1, 0.0, 0.2), (28 / 27, 1, _PI, 0.0), (1.0, 3, 0.0, -0.6)]
_NEMS5 = [(5 / 32, 1, _PI, 0.2), (1.0, 2, 0.0, 0.4), (27 / 32, 3, 0.0, -0.6)]
_NEMS4 = [
    (1 / 8, 1, "5pi/4", 0.5), (1 / 8, 1, "-5pi/4", -0.5),
    (1.0, 2, "pi/2", 0.25), (1.0, 2, "-pi/2", -0.25),
]
_ATS = [(1.0, 1, 0.0, 0.5), (1.0, 1, _PI, -0.5)]
_STS = [(1.0, 1, "pi/2", 0.5), (1.0, 1, "-pi/2", -0.5)]

PRESETS: dict[str, dict] = {
    # ideal designs at the energy scales used in the comparison tables
    "lc": _doc("lc", 90.0, 5, 0.2, []),
    "nems3": _doc("nems3", 90.0, 5, 0.2, _NEMS3),
    "nems5": _doc("nems5", 180.0, 10, 0.246, _NEMS5),
    "nems4": _doc("nems4", 180.0, 10, 0.231, _NEMS4),
    "ats": _doc("ats", 180.0, 10, 0.151, _ATS),
    "sts": _doc("sts", 180.0, 10, 0.151, _STS),
    # exact comparison-table columns; the inductor is a junction array
    "table1-nems3": _doc("table1-nems3", 90.0, 5, 0.2, [
        (1.0, 1, "0.05pi", 0.2), (1.05, 1, "1.05pi", 0.0), (1.0, 3, 0.0, -0.6)], "array"),
    "table1-ats": _doc("table1-ats", 120.0, 5, 0.2, [
        (1.0, 1, "0.05pi", 0.5), (1.0, 1, "1.05pi", -0.5)], "array"),
    "table1-snail": _doc("table1-snail", 114.0, 3, 0.2, [(0.3, 1, "0.78pi", 0.0)], "array"),
    "table2-nems5": _doc("table2-nems5", 180.0, 10, 0.246, _NEMS5, "array"),
    "table2-nems3": _doc("table2-nems3", 180.0, 10, 0.194, [
        (1.0, 1, 0.0, 0.2), (1.05, 1, _PI, 0.0), (1.0, 3, 0.0, -0.6)], "array"),
    "table2-ats": _doc("table2-ats", 180.0, 10, 0.151, _ATS, "array"),
    "table3-nems4": _doc("table3-nems4", 180.0, 10, 0.231, _NEMS4, "array"),
    "table3-sts": _doc("table3-sts", 180.0, 10, 0.151, _STS, "array"),
}


def preset(name: str) -> CircuitSpec:
    try:
        doc = PRESETS[name]
    except KeyError:
        raise CircuitError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DriveNormalizationWarning)
        return circuit_from_dict(doc)
