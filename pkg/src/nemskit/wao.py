"""Single-well checks: flux windows, drive headroom and minima counting."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import potential as pot
from .circuit import CircuitSpec, truncate_flux

MARGIN = 0.05
SCAN_WINDOW = 1.5 * math.pi
SCAN_POINTS = 20001

__all__ = [
    "truncate_flux", "single_jj_limit", "multi_jj_limit", "effective_single_junction",
    "branch_limits", "drive_window", "brute_force_minima", "phase_slip_energy",
    "WaoReport", "wao_check",
]


class HeadroomWarning(UserWarning):
    """The circuit is already outside its flux window without drive."""


def single_jj_limit(ratio: float) -> float:
    """Largest |truncated bias| keeping a single junction plus inductor single-welled.

    Approximate: below ratio 1 the potential always has one minimum.
    """
    if not ratio > 0:
        raise ValueError("junction ratio must be positive")
    return math.pi if ratio <= 1.0 else math.pi - (ratio - 1.0)


def multi_jj_limit(ratio: float, n: int) -> float:
    """Bias limit for an n-junction branch (n >= 2) from the phase-slip condition."""
    if n < 2:
        raise ValueError("multi-junction limit needs n >= 2")
    if ratio < 0:
        raise ValueError("junction ratio must be non-negative")
    return math.pi - ratio * math.sin(math.pi / n)


def effective_single_junction(c: CircuitSpec, drive: float = 0.0) -> tuple[float, float]:
    """Single-junction branches combined into one: (ratio, truncated bias).

    ``-sum r_i cos(phi + b_i) = -r_eff cos(phi + b_eff)``.
    """
    z = 0j
    for b in c.branches:
        if b.n == 1:
            z += b.r * np.exp(1j * (b.dc_bias + b.ac_ratio * drive))
    return float(abs(z)), float(truncate_flux(np.angle(z))) if z != 0 else 0.0


def branch_limits(c: CircuitSpec) -> np.ndarray:
    return np.array([
        single_jj_limit(b.r) if b.n == 1 else multi_jj_limit(b.r, b.n) for b in c.branches
    ])


def _sj_ok(r_eff: float, phi_eff: float) -> bool:
    if r_eff <= 1.0:
        return True
    return abs(phi_eff) < single_jj_limit(r_eff)


def _sj_window(c: CircuitSpec, cap: float) -> float:
    """Largest drive keeping the combined single junction inside its window."""
    driven = [b for b in c.branches if b.n == 1 and b.ac_ratio != 0.0]
    if not driven:
        return math.inf

    def ok(eps):
        return all(_sj_ok(*effective_single_junction(c, s * eps)) for s in (1.0, -1.0))

    if not ok(0.0):
        return 0.0
    upper = cap if math.isfinite(cap) else 2.0 * math.pi / min(abs(b.ac_ratio) for b in driven)
    grid = np.linspace(0.0, upper, 2001)
    for lo, hi in zip(grid[:-1], grid[1:]):
        if not ok(hi):
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                lo, hi = (mid, hi) if ok(mid) else (lo, mid)
            return lo
    return math.inf if not math.isfinite(cap) else cap


def _multi_window(c: CircuitSpec) -> tuple[float, int | None]:
    best, idx = math.inf, None
    for i, b in enumerate(c.branches):
        if b.n < 2 or b.ac_ratio == 0.0:
            continue
        slack = multi_jj_limit(b.r, b.n) - abs(b.truncated_bias)
        eps = max(slack, 0.0) / abs(b.ac_ratio)
        if eps < best:
            best, idx = eps, i
    return best, idx


def drive_window(c: CircuitSpec) -> float:
    """Largest drive amplitude keeping every loop inside its flux window.

    Multi-junction branches use their own phase-slip limit.  Single-junction
    branches act together as one effective junction, whose window is checked
    along the drive path.  Returns ``inf`` when nothing limits the drive.
    """
    multi, _ = _multi_window(c)
    outside = [
        i for i, b in enumerate(c.branches)
        if b.n > 1 and abs(b.truncated_bias) >= multi_jj_limit(b.r, b.n)
    ]
    if not _sj_ok(*effective_single_junction(c)):
        outside.append("single-junction group")
    if outside:
        warnings.warn(f"already outside the flux window at zero drive: {outside}",
                      HeadroomWarning, stacklevel=2)
        return 0.0
    return min(multi, _sj_window(c, multi))


def brute_force_minima(c: CircuitSpec, window: float = SCAN_WINDOW, points: int = SCAN_POINTS) -> int:
    """Count strict local minima of the slip-aware static potential on a grid."""
    if points < 1001:
        raise ValueError("need at least 1001 scan points")
    phi = np.linspace(-window, window, points)
    u = pot.u_static(c, phi, periodic=True)
    return int(np.count_nonzero((u[1:-1] < u[:-2]) & (u[1:-1] < u[2:])))


def phase_slip_energy(EJ: float, EC_j: float) -> float:
    """Tunnelling amplitude for a 2pi slip across one junction (GHz)."""
    if not (EJ > 0 and EC_j > 0):
        raise ValueError("junction energies must be positive")
    return math.sqrt(2.0 / math.pi) * (8.0**3 * EJ**3 * EC_j) ** 0.25 * math.exp(-math.sqrt(8.0 * EJ / EC_j))


@dataclass
class WaoReport:
    single_well: bool
    minima_count: int
    analytic_single_well: bool
    marginal: bool
    per_branch_limits: list[float]
    drive_headroom: float
    effective_sj: tuple[float, float]
    binding: str
    heuristic_binding: str
    diagnostics: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        d = asdict(self)
        d["drive_headroom"] = None if math.isinf(self.drive_headroom) else self.drive_headroom
        return json.dumps(d, indent=2)


def wao_check(c: CircuitSpec, window: float = SCAN_WINDOW, points: int = SCAN_POINTS) -> WaoReport:
    """Analytic flux-window conditions plus a brute-force minima count.

    The count decides ``single_well``; the analytic conditions are reported
    alongside and flagged ``marginal`` within 0.05 rad of a limit.
    """
    diags: list[str] = []
    slacks: list[tuple[float, str]] = []
    r_eff, phi_eff = effective_single_junction(c)
    if any(b.n == 1 for b in c.branches):
        if r_eff > 1.0:
            slacks.append((single_jj_limit(r_eff) - abs(phi_eff), "single-junction group"))
        else:
            slacks.append((math.inf, "single-junction group"))
    heuristic = []
    for i, b in enumerate(c.branches):
        if b.n > 1:
            slacks.append((multi_jj_limit(b.r, b.n) - abs(b.truncated_bias), f"branch {i + 1}"))
            heuristic.append((math.pi / 2 - abs(b.truncated_bias), f"branch {i + 1}"))
    analytic_ok = all(s > 0 for s, _ in slacks)
    marginal = any(abs(s) < MARGIN for s, _ in slacks)
    binding = min(slacks)[1] if slacks else "none"
    if heuristic:
        worst = min(heuristic)
        heuristic_binding = worst[1] if worst[0] <= 0 else "none"
        if worst[0] <= 0:
            diags.append(f"{worst[1]} exceeds the pi/2 rule of thumb for multi-junction loops")
    else:
        heuristic_binding = "none"
    count = brute_force_minima(c, window, points)
    if count != 1:
        diags.append(f"{count} local minima found in [-{window:.4g}, {window:.4g}]")
    if analytic_ok != (count == 1):
        diags.append("analytic conditions and minima count disagree")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HeadroomWarning)
        headroom = drive_window(c)
    if headroom == 0.0:
        diags.append("no drive headroom")
    return WaoReport(
        single_well=count == 1,
        minima_count=count,
        analytic_single_well=analytic_ok,
        marginal=marginal,
        per_branch_limits=[float(x) for x in branch_limits(c)],
        drive_headroom=float(headroom),
        effective_sj=(r_eff, phi_eff),
        binding=binding,
        heuristic_binding=heuristic_binding,
        diagnostics=diags,
    )
