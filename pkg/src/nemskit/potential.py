"""Inductive potential of a multi-loop SQUID and its Taylor expansion.

Energies are in units of E_L.  The static potential is

    U(phi) = inductor(phi) - sum_i n_i r_i cos((phi + bias_i) / n_i)

and a small flux modulation ``delta_i = ac_ratio_i * eps`` adds, to first
order, ``eps * sum_i r_i ac_ratio_i sin((phi + bias_i) / n_i)``.

Multi-junction branches are 2pi-periodic only up to a phase slip.  Outside the
periodic mode the slip number is frozen at the value chosen by the DC bias,
so ``bias_i`` above is the truncated bias.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .circuit import CircuitSpec, truncate_flux

DEFAULT_ORDER = 8


class MinimumError(RuntimeError):
    """No stable minimum of the static potential was found."""


class MultipleMinimaWarning(UserWarning):
    """The static potential has more than one local minimum in the window."""


# derivatives of cos and sin: d^k cos = _COS[k % 4](x), likewise for sin
def _dcos(k: int, x):
    return (np.cos(x), -np.sin(x), -np.cos(x), np.sin(x))[k % 4]


def _dsin(k: int, x):
    return (np.sin(x), np.cos(x), -np.sin(x), -np.cos(x))[k % 4]


def u_branch_periodic(r: float, n: int, phi_J):
    """Lowest-energy form of an n-junction branch: ``-n r cos(trunc(phi_J)/n)``.

    2pi-periodic in ``phi_J``; the slope is discontinuous where a phase slip
    occurs (``phi_J`` = pi modulo 2pi) for ``n > 1``.
    """
    return -n * r * np.cos(truncate_flux(phi_J) / n)


def inductor_energy(c: CircuitSpec, phi, k: int = 0):
    """k-th derivative of the inductor energy (units of E_L)."""
    phi = np.asarray(phi, dtype=float)
    if c.inductor_model == "linear":
        if k == 0:
            return 0.5 * phi**2
        if k == 1:
            return phi.copy()
        if k == 2:
            return np.ones_like(phi)
        return np.zeros_like(phi)
    nl = c.inductor_n
    x = phi / nl
    if k == 0:
        return nl**2 * (1.0 - np.cos(x))
    return -(nl**2) * _dcos(k, x) / nl**k


def _check_offsets(c: CircuitSpec, flux_offsets) -> np.ndarray:
    off = np.asarray(flux_offsets, dtype=float).reshape(-1)
    if off.size != len(c.branches):
        raise ValueError(
            f"expected {len(c.branches)} flux offsets, got {off.size}"
        )
    return off


def u_total(c: CircuitSpec, phi, flux_offsets, periodic: bool = False):
    """Potential for instantaneous loop fluxes ``flux_offsets``.

    With ``periodic`` every branch sits in its lowest-energy slip state, which
    makes the result 2pi-periodic in each flux.  Otherwise the slip number of
    each branch is the one selected by its DC bias.
    """
    off = _check_offsets(c, flux_offsets)
    phi = np.asarray(phi, dtype=float)
    u = inductor_energy(c, phi)
    for b, pe in zip(c.branches, off):
        if periodic:
            u = u + u_branch_periodic(b.r, b.n, phi + pe)
        else:
            u = u - b.n * b.r * np.cos((phi + pe - b.slip_offset) / b.n)
    return u


def u_static(c: CircuitSpec, phi, periodic: bool = False):
    return u_total(c, phi, c.dc_bias, periodic=periodic)


def u_driven(c: CircuitSpec, phi):
    """First-order change of the potential per unit drive amplitude."""
    phi = np.asarray(phi, dtype=float)
    u = np.zeros_like(phi)
    for b in c.branches:
        u = u + b.r * b.ac_ratio * np.sin((phi + b.truncated_bias) / b.n)
    return u


def static_derivative(c: CircuitSpec, phi, k: int):
    """Analytic k-th derivative of the static potential."""
    phi = np.asarray(phi, dtype=float)
    if k == 0:
        return u_static(c, phi)
    d = inductor_energy(c, phi, k)
    for b in c.branches:
        theta = (phi + b.truncated_bias) / b.n
        d = d - b.r * _dcos(k, theta) / b.n ** (k - 1)
    return d


def driven_derivative(c: CircuitSpec, phi, k: int):
    """Analytic k-th derivative of the first-order driven potential."""
    phi = np.asarray(phi, dtype=float)
    d = np.zeros_like(phi)
    for b in c.branches:
        if b.ac_ratio == 0.0:
            continue
        theta = (phi + b.truncated_bias) / b.n
        d = d + b.r * b.ac_ratio * _dsin(k, theta) / b.n**k
    return d


@dataclass(frozen=True)
class PotentialSeries:
    """Taylor coefficients about the static minimum.

    ``U_static/E_L = sum_n c_static[n] (phi - phi_star)^n / n!`` and likewise
    for the driven part per unit drive amplitude.
    """

    phi_star: float
    c_static: np.ndarray
    c_driven: np.ndarray
    order: int
    well_depth: float = math.inf
    minima_count: int = 1
    notes: tuple[str, ...] = field(default=())


def is_parity_symmetric(c: CircuitSpec, tol: float = 1e-12) -> bool:
    """True when the static potential is even in phi.

    That holds if every branch is individually even (bias 0, or pi for a
    single junction) or has a mirror partner with the opposite bias.
    """
    pending = []
    for b in c.branches:
        t = b.truncated_bias
        if abs(t) < tol or (b.n == 1 and abs(abs(t) - math.pi) < tol):
            continue
        pending.append((b.r, b.n, t))
    used = [False] * len(pending)
    for i, (r, n, t) in enumerate(pending):
        if used[i]:
            continue
        for j in range(i + 1, len(pending)):
            r2, n2, t2 = pending[j]
            if not used[j] and n2 == n and abs(r2 - r) < tol * max(1.0, r) and abs(t + t2) < tol:
                used[i] = used[j] = True
                break
        else:
            return False
    return True


def _local_minima(u: np.ndarray) -> np.ndarray:
    return np.flatnonzero((u[1:-1] < u[:-2]) & (u[1:-1] < u[2:])) + 1


def find_minimum(
    c: CircuitSpec,
    window: float = 1.5 * math.pi,
    points: int = 4001,
    force: bool = False,
) -> float:
    """Location of the lowest minimum of the static potential.

    A coarse scan picks the deepest grid minimum, a golden-section search
    refines it, and Newton steps on the analytic derivative finish the job.
    Even potentials return exactly 0 when the origin is a minimum.
    """
    if is_parity_symmetric(c) and static_derivative(c, 0.0, 2) > 0:
        return 0.0
    grid = np.linspace(-window, window, points)
    u = u_static(c, grid)
    mins = _local_minima(u)
    if mins.size == 0:
        raise MinimumError("static potential has no minimum inside the search window")
    if mins.size > 1 and not force:
        warnings.warn(
            f"static potential has {mins.size} local minima; using the deepest",
            MultipleMinimaWarning,
            stacklevel=2,
        )
    i = mins[np.argmin(u[mins])]
    lo, hi = grid[i - 1], grid[i + 1]
    res = optimize.minimize_scalar(
        lambda x: float(u_static(c, x)), bracket=(lo, grid[i], hi), method="golden",
        options={"xtol": 1e-10},
    )
    x = float(res.x)
    for _ in range(60):
        d1 = float(static_derivative(c, x, 1))
        d2 = float(static_derivative(c, x, 2))
        if d2 <= 0:
            raise MinimumError(f"curvature is not positive at phi = {x:.6g}")
        step = d1 / d2
        x -= step
        if abs(step) < 1e-15 or abs(d1) < 1e-14:
            break
    if abs(float(static_derivative(c, x, 1))) > 1e-12:
        raise MinimumError("Newton polish did not converge")
    if not float(static_derivative(c, x, 2)) > 0:
        raise MinimumError("stationary point is not a minimum")
    return x


def _well_depth(c: CircuitSpec, phi_star: float, window: float, points: int) -> tuple[float, int]:
    grid = np.linspace(phi_star - window, phi_star + window, points)
    u = u_static(c, grid)
    u0 = float(u_static(c, phi_star))
    mid = points // 2
    # walk outwards until the potential turns down
    du = np.diff(u)
    right = mid + np.argmax(du[mid:] < 0) if np.any(du[mid:] < 0) else points - 1
    left_d = du[:mid][::-1]
    left = mid - 1 - np.argmax(left_d > 0) if np.any(left_d > 0) else 0
    depth = min(u[right], u[left]) - u0
    return float(depth), int(_local_minima(u).size)


def _series(c: CircuitSpec, phi_star: float, order: int, static: bool, driven: bool,
            window: float = 1.5 * math.pi) -> PotentialSeries:
    if order < 2:
        raise ValueError("Taylor order must be at least 2")
    ks = range(order + 1)
    cs = np.array([float(static_derivative(c, phi_star, k)) for k in ks]) if static else np.zeros(order + 1)
    cd = np.array([float(driven_derivative(c, phi_star, k)) for k in ks]) if driven else np.zeros(order + 1)
    depth, count = _well_depth(c, phi_star, window, 4001)
    return PotentialSeries(phi_star=phi_star, c_static=cs, c_driven=cd, order=order,
                           well_depth=depth, minima_count=max(count, 1))


def taylor_static(c: CircuitSpec, order: int = DEFAULT_ORDER, phi_star: float | None = None) -> PotentialSeries:
    if phi_star is None:
        phi_star = find_minimum(c)
    return _series(c, phi_star, order, static=True, driven=False)


def taylor_driven(c: CircuitSpec, order: int = DEFAULT_ORDER, phi_star: float | None = None) -> PotentialSeries:
    if phi_star is None:
        phi_star = find_minimum(c)
    return _series(c, phi_star, order, static=False, driven=True)


def expand(c: CircuitSpec, order: int = DEFAULT_ORDER, phi_star: float | None = None,
           force: bool = False) -> PotentialSeries:
    """Static and driven Taylor series about the minimum."""
    if phi_star is None:
        phi_star = find_minimum(c, force=force)
    return _series(c, phi_star, order, static=True, driven=True)


def series_terms(coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of ``phi^n`` (divide by n!)."""
    return np.array([cn / math.factorial(n) for n, cn in enumerate(coeffs)])


def curve_csv(c: CircuitSpec, phis: np.ndarray) -> str:
    rows = ["phi,u_static,u_driven"]
    for p, us, ud in zip(phis, u_static(c, phis), u_driven(c, phis)):
        rows.append(f"{p:.10g},{us:.12g},{ud:.12g}")
    return "\n".join(rows) + "\n"


def series_csv(s: PotentialSeries) -> str:
    rows = ["n,c_static,c_driven"]
    for n in range(s.order + 1):
        rows.append(f"{n},{s.c_static[n]:.15g},{s.c_driven[n]:.15g}")
    return "\n".join(rows) + "\n"
