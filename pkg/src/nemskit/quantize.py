"""Bosonic coefficients of a single-mode circuit and its exact spectrum.

The quantized phase is ``phi - phi* = phi_zpf (a + a^dag)`` and the charge is
``n = i n_zpf (a^dag - a)``.  Every Taylor coefficient ``c_n`` of the potential
becomes ``g_n = E_L c_n phi_zpf^n / n!`` multiplying ``(a + a^dag)^n``.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import potential as pot
from .circuit import CircuitSpec

N_HARMONIC_STATE = 20


class QuantizationError(ValueError):
    pass


class GridSpanError(ValueError):
    """The requested grid crosses a phase-slip point."""


@dataclass(frozen=True)
class ModeQuantization:
    """Single-mode Hamiltonian coefficients (GHz).

    ``g_static[n]`` and ``g_driven[n]`` are indexed by the power ``n`` of
    ``(a + a^dag)``.  Static entries below n = 3 are zero by construction;
    driven ones are per unit drive amplitude.
    """

    omega_static: float
    phi_zpf: float
    n_zpf: float
    g_static: np.ndarray
    g_driven: np.ndarray
    kerr_static: float
    EL: float
    EC: float
    series: pot.PotentialSeries

    @property
    def order(self) -> int:
        return len(self.g_static) - 1

    def as_dict(self) -> dict:
        return {
            "omega_static": self.omega_static,
            "phi_zpf": self.phi_zpf,
            "n_zpf": self.n_zpf,
            "phi_star": self.series.phi_star,
            "kerr_static": self.kerr_static,
            "g_static": {str(n): float(self.g_static[n]) for n in range(3, self.order + 1)},
            "g_driven": {str(n): float(self.g_driven[n]) for n in range(1, self.order + 1)},
            "c_static": [float(x) for x in self.series.c_static],
            "c_driven": [float(x) for x in self.series.c_driven],
        }


def kerr_coefficient(g3: float, g4: float, omega: float) -> float:
    """Coefficient K of a^dag a^dag a a from the cubic and quartic terms.

    Normal ordering ``g4 (a + a^dag)^4`` gives ``6 g4``; the cubic term enters
    at second order as ``-30 g3^2 / omega``.
    """
    return 6.0 * g4 - 30.0 * g3**2 / omega


def quantize(c: CircuitSpec, series: pot.PotentialSeries | None = None,
             order: int = pot.DEFAULT_ORDER) -> ModeQuantization:
    if series is None:
        series = pot.expand(c, order=order)
    c2 = float(series.c_static[2])
    if not c2 > 0:
        raise QuantizationError(f"non-positive curvature c2 = {c2:.6g}")
    EL, EC = c.EL, c.EC
    phi_zpf = (2.0 * EC / (c2 * EL)) ** 0.25
    n_zpf = 0.5 * (c2 * EL / (2.0 * EC)) ** 0.25
    omega = math.sqrt(8.0 * c2 * EL * EC)
    N = series.order
    fact = np.array([math.factorial(k) for k in range(N + 1)], dtype=float)
    powers = phi_zpf ** np.arange(N + 1)
    g_static = EL * series.c_static * powers / fact
    g_static[:3] = 0.0
    g_driven = EL * series.c_driven * powers / fact
    g_driven[0] = 0.0
    g3 = g_static[3] if N >= 3 else 0.0
    g4 = g_static[4] if N >= 4 else 0.0
    return ModeQuantization(
        omega_static=omega, phi_zpf=phi_zpf, n_zpf=n_zpf,
        g_static=g_static, g_driven=g_driven,
        kerr_static=kerr_coefficient(g3, g4, omega),
        EL=EL, EC=EC, series=series,
    )


def analyze(c: CircuitSpec, order: int = pot.DEFAULT_ORDER, force: bool = False) -> ModeQuantization:
    return quantize(c, pot.expand(c, order=order, force=force))


# --------------------------------------------------------------------------
# finite-difference Hamiltonian

def slip_free_interval(c: CircuitSpec) -> tuple[float, float]:
    """Range of phi over which no multi-junction branch would slip."""
    lo, hi = -math.inf, math.inf
    for b in c.branches:
        if b.n > 1:
            t = b.truncated_bias
            lo = max(lo, -math.pi - t)
            hi = min(hi, math.pi - t)
    return lo, hi


@dataclass(frozen=True)
class GridHamiltonian:
    """Tridiagonal ``-4 E_C d^2/dphi^2 + E_L U(phi)`` on a uniform grid."""

    phi: np.ndarray
    diagonal: np.ndarray
    off_diagonal: np.ndarray
    spacing: float
    periodic_branches: bool

    def matrix(self) -> np.ndarray:
        return (np.diag(self.diagonal) + np.diag(self.off_diagonal, 1)
                + np.diag(self.off_diagonal, -1))

    def eigenvalues(self, count: int = 6) -> np.ndarray:
        count = min(count, self.diagonal.size)
        return eigh_tridiagonal(self.diagonal, self.off_diagonal, eigvals_only=True,
                                select="i", select_range=(0, count - 1))

    def eigensystem(self, count: int = 6):
        count = min(count, self.diagonal.size)
        return eigh_tridiagonal(self.diagonal, self.off_diagonal,
                                select="i", select_range=(0, count - 1))


def grid_hamiltonian(c: CircuitSpec, points: int = 2048, span: float | None = None,
                     periodic: bool = False, center: float | None = None) -> GridHamiltonian:
    """Finite-difference Hamiltonian centred on the static minimum.

    The default span is eight standard deviations of the 20th oscillator
    state.  Where it reaches past a phase-slip point the slip numbers stay at
    the values fixed by the DC biases (slips are tunnelling events, far slower
    than the plasma oscillation); clipping the grid there would act as a hard
    wall.  An explicit span that crosses a phase-slip point is refused unless
    ``periodic`` is set, in which case every branch takes its lowest-energy
    slip state.
    """
    if points < 3:
        raise ValueError("need at least 3 grid points")
    if center is None:
        center = pot.find_minimum(c, force=True)
    if span is None:
        c2 = float(pot.static_derivative(c, center, 2))
        if c2 <= 0:
            raise QuantizationError("cannot size grid: curvature not positive")
        phi_zpf = (2.0 * c.EC / (c2 * c.EL)) ** 0.25
        span = 8.0 * phi_zpf * math.sqrt(N_HARMONIC_STATE)
    elif not periodic:
        lo, hi = slip_free_interval(c)
        if center - span < lo - 1e-12 or center + span > hi + 1e-12:
            raise GridSpanError(
                f"span {span:.4g} around {center:.4g} crosses a phase-slip point; "
                "enable periodic mode to allow it"
            )
    if not span > 0:
        raise GridSpanError("grid span must be positive")
    phi = np.linspace(center - span, center + span, points)
    h = phi[1] - phi[0]
    u = pot.u_static(c, phi, periodic=periodic)
    kin = 4.0 * c.EC / h**2
    diag = 2.0 * kin + c.EL * u
    off = np.full(points - 1, -kin)
    return GridHamiltonian(phi=phi, diagonal=diag, off_diagonal=off, spacing=h,
                           periodic_branches=periodic)


def transition_energies(c: CircuitSpec, n_levels: int = 3, points: int = 2048,
                        span: float | None = None, periodic: bool = False) -> np.ndarray:
    """E_k - E_0 for k = 1..n_levels (GHz)."""
    ev = grid_hamiltonian(c, points=points, span=span, periodic=periodic).eigenvalues(n_levels + 1)
    return ev[1:] - ev[0]


# --------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class FluxAxis:
    """Straight path in the space of DC loop biases."""

    name: str
    start: np.ndarray
    stop: np.ndarray

    def points(self, samples: int) -> np.ndarray:
        t = np.linspace(0.0, 1.0, samples)[:, None]
        return (1 - t) * self.start[None, :] + t * self.stop[None, :]


def branch_axis(c: CircuitSpec, index: int, lo: float, hi: float) -> FluxAxis:
    """Vary the bias of one branch, keeping the others at their DC value."""
    if not 0 <= index < len(c.branches):
        raise IndexError(f"branch index {index} out of range")
    start = c.dc_bias.copy()
    stop = c.dc_bias.copy()
    start[index] = lo
    stop[index] = hi
    return FluxAxis(name=f"phi_e{index + 1}", start=start, stop=stop)


@dataclass(frozen=True)
class SpectrumSweep:
    axis: FluxAxis
    biases: np.ndarray
    levels: np.ndarray  # shape (samples, n_levels); NaN where not single-well
    single_well: np.ndarray
    grid_meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        n_lv = self.levels.shape[1]
        head = [f"phi_e{i + 1}" for i in range(self.biases.shape[1])]
        head += [f"E{k}-E{k - 1}" for k in range(1, n_lv + 1)]
        rows = [",".join(head)]
        for b, lv in zip(self.biases, self.levels):
            gaps = np.diff(np.concatenate([[0.0], lv])) if np.all(np.isfinite(lv)) else [math.nan] * n_lv
            vals = [f"{x:.10g}" for x in b] + ["" if not np.isfinite(g) else f"{g:.12g}" for g in gaps]
            rows.append(",".join(vals))
        return "\n".join(rows) + "\n"


def worker_count() -> int:
    """Worker threads for sweeps, capped by NEMS_NUM_THREADS."""
    raw = os.environ.get("NEMS_NUM_THREADS")
    cap = os.cpu_count() or 1
    if raw:
        try:
            return max(1, min(int(raw), cap))
        except ValueError:
            warnings.warn(f"ignoring NEMS_NUM_THREADS={raw!r}")
    return cap


def _point_levels(c: CircuitSpec, biases: np.ndarray, n_levels: int, points: int):
    from .wao import brute_force_minima

    cc = c.with_biases(biases)
    if brute_force_minima(cc) != 1:
        return np.full(n_levels, np.nan), False
    try:
        return transition_energies(cc, n_levels=n_levels, points=points), True
    except (pot.MinimumError, QuantizationError, GridSpanError):
        return np.full(n_levels, np.nan), False


def sweep_spectrum(c: CircuitSpec, axis: FluxAxis, samples: int = 101, n_levels: int = 3,
                   points: int = 2048) -> SpectrumSweep:
    """Lowest transition frequencies along a flux path.

    Points whose static potential is not a single well are left blank (NaN).
    """
    biases = axis.points(samples)
    with ThreadPoolExecutor(max_workers=worker_count()) as ex:
        results = list(ex.map(lambda b: _point_levels(c, b, n_levels, points), biases))
    levels = np.array([r[0] for r in results])
    ok = np.array([r[1] for r in results])
    return SpectrumSweep(axis=axis, biases=biases, levels=levels, single_well=ok,
                         grid_meta={"points": points, "stencil": "3-point", "n_levels": n_levels})
