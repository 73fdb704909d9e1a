"""Strong-drive corrections, deformed-bias drives and dissipation comparators.

With a flux drive ``eps cos(w t)`` each loop sees ``e_i = a_i eps / n_i`` of
modulation of its reduced phase.  Jacobi-Anger expansion of

    -n r cos(theta + e cos t)

splits the potential into a time-independent shift and harmonics of ``w``:

    DC:         -n r cos(theta) (J0(e) - 1)
    k = 2m:     -n r cos(theta) 2 (-1)^m J_2m(e)
    k = 2m + 1:  n r sin(theta) 2 (-1)^m J_2m+1(e)
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import potential as pot
from .circuit import CircuitSpec
from .quantize import ModeQuantization, kerr_coefficient, quantize
from .wao import drive_window


class DriveWindowError(ValueError):
    pass


class DeformationWarning(UserWarning):
    pass


def bessel_j(k: int, x, truncation: str = "exact"):
    """J_k(x), either exact or its power series up to x^3."""
    if truncation == "exact":
        return special.jv(k, x)
    if truncation != "cubic":
        raise ValueError(f"unknown truncation {truncation!r}")
    x = np.asarray(x, dtype=float)
    series = {
        0: 1.0 - x**2 / 4.0,
        1: x / 2.0 - x**3 / 16.0,
        2: x**2 / 8.0,
        3: x**3 / 48.0,
    }
    return series.get(k, np.zeros_like(x))


def per_loop_amplitudes(c: CircuitSpec, eps_d: float) -> np.ndarray:
    return np.array([b.ac_ratio * eps_d / b.n for b in c.branches])


def _branch_coefficients(k: int, e: float, truncation: str) -> tuple[float, float]:
    """Weights (w_cos, w_sin) so that the k-th component of a branch is
    n r [w_cos cos(theta) + w_sin sin(theta)]."""
    if k == 0:
        return -(bessel_j(0, e, truncation) - 1.0), 0.0
    m, odd = divmod(k, 2)
    sign = -1.0 if m % 2 else 1.0
    if odd:
        return 0.0, 2.0 * sign * bessel_j(k, e, truncation)
    return -2.0 * sign * bessel_j(k, e, truncation), 0.0


def _component_series(c: CircuitSpec, k: int, eps_d: float, phi_star: float, order: int,
                      truncation: str) -> np.ndarray:
    out = np.zeros(order + 1)
    for b, e in zip(c.branches, per_loop_amplitudes(c, eps_d)):
        if e == 0.0:
            continue
        wc, ws = _branch_coefficients(k, e, truncation)
        theta = (phi_star + b.truncated_bias) / b.n
        for j in range(order + 1):
            out[j] += b.n * b.r * (wc * pot._dcos(j, theta) + ws * pot._dsin(j, theta)) / b.n**j
    return out


def component_potential(c: CircuitSpec, phi, k: int, eps_d: float, truncation: str = "exact"):
    """k-th harmonic amplitude (k = 0 for the DC shift) as a function of phi."""
    phi = np.asarray(phi, dtype=float)
    out = np.zeros_like(phi)
    for b, e in zip(c.branches, per_loop_amplitudes(c, eps_d)):
        if e == 0.0:
            continue
        wc, ws = _branch_coefficients(k, e, truncation)
        theta = (phi + b.truncated_bias) / b.n
        out = out + b.n * b.r * (wc * np.cos(theta) + ws * np.sin(theta))
    return out


@dataclass(frozen=True)
class HarmonicDecomposition:
    """Drive-induced potential split by frequency, Taylor-expanded about phi*.

    ``dc_shift`` adds to the static series; ``harmonics[k]`` multiplies
    ``cos(k w t)``.  All in units of E_L.
    """

    amplitude: float
    phi_star: float
    dc_shift: np.ndarray
    harmonics: dict[int, np.ndarray]
    per_loop: np.ndarray
    truncation: str = "exact"
    notes: tuple[str, ...] = field(default=())


def bessel_decompose(c: CircuitSpec, eps_d: float, order: int = pot.DEFAULT_ORDER,
                     max_harmonic: int = 3, truncation: str = "exact",
                     check_window: bool = True, phi_star: float | None = None) -> HarmonicDecomposition:
    if eps_d < 0:
        raise ValueError("drive amplitude must be non-negative")
    if phi_star is None:
        phi_star = pot.find_minimum(c)
    e = per_loop_amplitudes(c, eps_d)
    if eps_d == 0.0:
        return HarmonicDecomposition(0.0, phi_star, np.zeros(order + 1), {}, e, truncation)
    if check_window:
        limit = drive_window(c)
        if eps_d >= limit:
            raise DriveWindowError(f"drive {eps_d:.4g} exceeds the flux window {limit:.4g}")
    notes = []
    if truncation == "cubic" and np.any(np.abs(e) >= 0.2):
        notes.append("per-loop amplitude >= 0.2: cubic truncation is inaccurate")
    dc = _component_series(c, 0, eps_d, phi_star, order, truncation)
    harm = {k: _component_series(c, k, eps_d, phi_star, order, truncation)
            for k in range(1, max_harmonic + 1)}
    return HarmonicDecomposition(eps_d, phi_star, dc, harm, e, truncation, tuple(notes))


def time_averaged_potential(c: CircuitSpec, phi, eps_d: float, samples: int = 128):
    """Average of the full potential over one drive period (direct quadrature)."""
    phi = np.asarray(phi, dtype=float)
    tau = 2.0 * math.pi * np.arange(samples) / samples
    acc = np.zeros_like(phi)
    for t in tau:
        acc = acc + pot.u_total(c, phi, c.dc_bias + c.ac_ratio * eps_d * math.cos(t))
    return acc / samples


# --------------------------------------------------------------------------
# frequency and Kerr shifts

@dataclass(frozen=True)
class DriveShift:
    delta_omega: float
    delta_kerr: float
    method: str


def _nems3_structure(c: CircuitSpec):
    """(r1, r_multi, n_multi) if the circuit has one driven single junction and
    one driven multi-junction branch, otherwise None."""
    single = [b for b in c.branches if b.n == 1 and b.ac_ratio != 0]
    multi = [b for b in c.branches if b.n > 1 and b.ac_ratio != 0]
    if len(single) == 1 and len(multi) == 1:
        return single[0].r, multi[0].r, multi[0].n
    return None


def generic_drive_shifts(c: CircuitSpec, eps_d: float, order: int = pot.DEFAULT_ORDER) -> DriveShift:
    """Shifts from re-quantizing the static series plus the DC correction."""
    base = quantize(c, pot.expand(c, order=order))
    if eps_d == 0:
        return DriveShift(0.0, 0.0, "generic")
    dec = bessel_decompose(c, eps_d, order=order, phi_star=base.series.phi_star)
    c_new = base.series.c_static + dec.dc_shift
    # stay expanded about the undriven minimum; the DC shift moves it only at O(eps^2 c1)
    c2 = c_new[2]
    omega = math.sqrt(8.0 * c2 * c.EL * c.EC)
    zpf = (2.0 * c.EC / (c2 * c.EL)) ** 0.25
    g3 = c.EL * c_new[3] * zpf**3 / 6.0
    g4 = c.EL * c_new[4] * zpf**4 / 24.0
    kerr = kerr_coefficient(g3, g4, omega)
    return DriveShift(omega - base.omega_static, kerr - base.kerr_static, "generic")


def specialized_drive_shifts(c: CircuitSpec, eps_d: float) -> DriveShift:
    """Closed-form shifts for a circuit with one driven single junction and one
    driven multi-junction loop.  The per-loop modulation is taken as 0.1 eps."""
    st = _nems3_structure(c)
    if st is None:
        raise ValueError("closed-form shifts need one driven single junction and one driven multi-junction loop")
    r1, r3, n3 = st
    q = quantize(c, pot.expand(c))
    f = (0.1 * eps_d) ** 2
    d_omega = -(r1 + r3 / n3) / (1.0 + r3 / n3) * (q.omega_static / 2.0) * f
    # Kerr carried by the multi-junction loop alone
    k_multi = 6.0 * c.EL * (-r3 / n3**3) * q.phi_zpf**4 / 24.0
    d_kerr = -(r1 + r3 / n3**3) / (r3 / n3**3) * k_multi * f
    return DriveShift(d_omega, d_kerr, "closed-form")


def strong_drive_shifts(c: CircuitSpec, eps_d: float) -> tuple[float, float]:
    """(delta_omega, delta_kerr) in GHz.  Uses the closed form when the circuit
    structure allows it, the generic DC-shift path otherwise."""
    if eps_d == 0:
        return 0.0, 0.0
    if _nems3_structure(c) is not None:
        s = specialized_drive_shifts(c, eps_d)
    else:
        s = generic_drive_shifts(c, eps_d)
    return s.delta_omega, s.delta_kerr


# --------------------------------------------------------------------------
# deformed bias

def deformed_two_photon(c: CircuitSpec, delta_phi_e1: float, branch: int = 0,
                        co_shift: tuple[int, ...] = (), relax_minimum: bool = False) -> float:
    """Two-photon drive coefficient g2 (GHz per unit eps) created by shifting
    one loop's DC bias by ``delta_phi_e1``.

    By default the static potential is treated as unchanged: the deformed
    driven series is taken at the undeformed minimum with the undeformed
    phi_zpf.  ``relax_minimum`` re-minimizes and re-quantizes instead.
    ``co_shift`` lists further branches moved by the same angle, which keeps a
    balanced single-junction pair centred.
    """
    if not c.branches:
        raise ValueError("circuit has no branches to deform")
    if abs(delta_phi_e1) > 0.1 * math.pi:
        warnings.warn("bias deformation beyond 0.1 pi; linear regime not guaranteed",
                      DeformationWarning, stacklevel=2)
    biases = c.dc_bias.copy()
    for i in (branch, *co_shift):
        biases[i] += delta_phi_e1
    deformed = c.with_biases(biases)
    if relax_minimum:
        q = quantize(deformed, pot.expand(deformed, order=4))
        return float(q.g_driven[2])
    q0 = quantize(c, pot.expand(c, order=4))
    c2d = float(pot.driven_derivative(deformed, q0.series.phi_star, 2))
    return c.EL * c2d * q0.phi_zpf**2 / 2.0


# --------------------------------------------------------------------------
# dissipation comparator

def relative_dissipation(c1: CircuitSpec, c2: CircuitSpec, order: int) -> float:
    """|g_n(c1) / g_n(c2)|^2 for the driven coefficient of the given order."""
    n = max(order, 2)
    g1 = quantize(c1, pot.expand(c1, order=n)).g_driven[order]
    g2 = quantize(c2, pot.expand(c2, order=n)).g_driven[order]
    if g2 == 0.0:
        return math.inf
    return float(abs(g1 / g2) ** 2)


# --------------------------------------------------------------------------
# Kerr-cat drive budget

def bogoliubov_factor(g_over_delta: float) -> float:
    lam = 0.5 * math.atan(2.0 * abs(g_over_delta))
    return math.cos(lam) ** 2 * math.sin(lam)


def kerr_cat_budget(q: ModeQuantization, nbar: float = 4.0, g_over_delta: float = 0.1,
                    drive: str = "magnetic") -> dict[str, float]:
    """Drive amplitudes needed to run a Kerr-cat qubit and a conditional gate.

    The two-photon drive must equal |K| nbar.  The gate needs a conditional
    three-photon coupling of |K| sqrt(nbar) (equal cat sizes), reached through a
    hybridized partner mode with coupling ratio ``g_over_delta``.  Residual
    one- and two-photon drives are what the same flux drive leaves behind.
    """
    K = abs(q.kerr_static)
    alpha = math.sqrt(nbar)
    mix = bogoliubov_factor(g_over_delta)
    g1, g2, g3 = (abs(q.g_driven[k]) for k in (1, 2, 3))
    G3, G4 = abs(q.g_static[3]), abs(q.g_static[4])
    out = {"kerr": q.kerr_static, "nbar": nbar}
    if drive == "magnetic":
        out["two_photon_drive"] = 2.0 * K * nbar / g2 if g2 else math.inf
        eps = K * alpha / (1.5 * g3 * mix) if g3 else math.inf
        out["bpcnot_drive"] = eps
        out["residual_1ph"] = 0.5 * eps * g1
        out["residual_2ph"] = 0.5 * eps * g2
    elif drive == "electric":
        out["two_photon_drive"] = K * nbar / (3.0 * G3) if G3 else math.inf
        out["bpcnot_drive"] = K * alpha / (12.0 * G4 * mix) if G4 else math.inf
    else:
        raise ValueError(f"unknown drive type {drive!r}")
    return out
