"""Kerr-cat, bias-preserving CNOT and four-photon cat scenarios.

Builders take frequencies and rates in GHz (cyclic) and store angular
coefficients (rad/ns), so times are in ns.  The Kerr argument is the
magnitude |K|; the physical Kerr of these circuits is negative, which makes
the cat states ground states of ``|K| (a^dag^2 - a*^2)(a^2 - a^2)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .bogoliubov import CoupledModeFrame
from .lindblad import Dissipator, HamiltonianTerm, SimScenario, evolve, propagate_kets
from .operators import FockOperator, cat_basis, cat_state, create, destroy, fock_state, number, tensor

TWO_PI = 2.0 * math.pi


class TruncationError(ValueError):
    pass


def min_dimension(alpha: complex) -> int:
    return int(math.ceil(4 * abs(alpha) ** 2 + 10))


def _check_dim(d: int, alpha: complex, what: str):
    need = min_dimension(alpha)
    if d < need:
        raise TruncationError(f"{what}: truncation {d} below 4|alpha|^2 + 10 = {need}")


def _herm_pair(coef: complex, op: FockOperator, env=None, label=""):
    """A term together with its Hermitian conjugate."""
    conj_env = None if env is None else (lambda t, e=env: np.conj(e(t)))
    return [HamiltonianTerm(coef, op, env, label),
            HamiltonianTerm(np.conj(coef), op.dag(), conj_env, f"({label})^dag")]


def kerr_cat_hamiltonian(a: FockOperator, K: float, alpha: complex) -> FockOperator:
    """|K| (a^dag^2 - alpha*^2)(a^2 - alpha^2), angular units, with K in GHz."""
    A = a @ a - alpha**2
    return TWO_PI * abs(K) * (A.dag() @ A)


# --------------------------------------------------------------------------
# Kerr cat

def build_kerr_cat(K: float, alpha: complex, dim: int = 30, total_time: float | None = None,
                   parity: int = 1, step: float | None = None) -> SimScenario:
    """Single Kerr-cat mode started in the cat state of the given parity.

    ``total_time`` defaults to 10/K with K in angular units.
    """
    if not K > 0:
        raise ValueError("K is the Kerr magnitude and must be positive")
    _check_dim(dim, alpha, "kerr_cat")
    a = destroy(dim)
    A = a @ a
    kk = TWO_PI * K
    terms = [
        HamiltonianTerm(kk, create(dim) @ create(dim) @ A, None, "K a^dag2 a2"),
        *_herm_pair(-kk * alpha**2, A.dag(), None, "-K alpha^2 a^dag2"),
    ]
    psi0 = fock_state(dim, 0) if alpha == 0 else cat_state(dim, alpha, parity)
    T = 10.0 / kk if total_time is None else total_time
    return SimScenario(
        kind="kerr_cat", dims=(dim,), terms=terms, dissipators=[], total_time=T,
        initial=psi0, step=step,
        observables={"n": number(dim), "a2": A},
        targets={"initial": psi0},
        params={"K": K, "alpha": alpha, "dim": dim},
    )


# --------------------------------------------------------------------------
# bias-preserving CNOT

def conditional_rate(K: float, alpha1: complex, alpha2: complex) -> float:
    """Strength of the a1 a2^dag^2 coupling the gate needs (GHz)."""
    return abs(K) * abs(alpha2) ** 2 / abs(alpha1)


def driven_conditional_rate(g3_driven: float, eps_d: float, frame: CoupledModeFrame) -> float:
    """(3/2) g3 eps cos^2(L) sin(L): what a magnetic drive delivers in the dressed frame."""
    lam = frame.lam
    return 1.5 * abs(g3_driven * eps_d) * math.cos(lam) ** 2 * math.sin(lam)


def linear_ramp(T: float):
    return lambda t: math.pi * min(max(t / T, 0.0), 1.0)


def flat_top(T: float, edge: float):
    """1 in the middle, raised-cosine edges of length ``edge``, 0 at both ends."""
    def env(t):
        if edge <= 0:
            return 1.0
        if t < edge:
            return 0.5 - 0.5 * math.cos(math.pi * t / edge)
        if t > T - edge:
            return 0.5 - 0.5 * math.cos(math.pi * max(T - t, 0.0) / edge)
        return 1.0
    return env


@dataclass(frozen=True)
class BpcnotLayout:
    dims: tuple[int, int]
    alpha1: complex
    alpha2: complex
    inputs: dict[str, np.ndarray]
    ideal: dict[str, np.ndarray]
    code_projector_control: np.ndarray


def _bpcnot_layout(dims, alpha1, alpha2, conditional: bool) -> BpcnotLayout:
    d1, d2 = dims
    z1 = cat_basis(d1, alpha1)
    z2 = cat_basis(d2, alpha2)
    inputs, ideal = {}, {}
    for c in (0, 1):
        for t in (0, 1):
            key = f"{c}{t}"
            inputs[key] = tensor(z1[c], z2[t])
            out_t = t ^ c if conditional else t
            ideal[key] = tensor(z1[c], z2[out_t])
    cp, cm = cat_state(d1, alpha1, 1), cat_state(d1, alpha1, -1)
    p1 = np.outer(cp, cp.conj()) + np.outer(cm, cm.conj())
    return BpcnotLayout(dims=(d1, d2), alpha1=alpha1, alpha2=alpha2, inputs=inputs, ideal=ideal,
                        code_projector_control=np.kron(p1, np.eye(d2)))


def build_bpcnot(K: float, alpha1: complex, alpha2: complex, frame: CoupledModeFrame | None = None,
                 residuals: dict | None = None, gate_time: float = 1000.0,
                 dims: tuple[int, int] | None = None, ramp=None, step: float | None = None,
                 initial: str = "00") -> SimScenario:
    """Conditional rotation of a target Kerr cat by the control cat's sign.

    ``H1 = |K| A1^dag A1`` with ``A1 = a1^2 - alpha1^2`` pins the control.
    ``H2 = |K| B^dag B`` with
    ``B = a2^2 - alpha2^2/(2 alpha1) (alpha1 + a1) - alpha2^2 e^{-2i phi}/(2 alpha1) (alpha1 - a1)``
    rotates the target cat by ``phi`` only when the control sits at -alpha1.
    ``phi(t)`` goes from 0 to pi over ``gate_time`` (linear by default).

    ``residuals`` may hold ``omega1`` and ``omega2`` (GHz) for spurious
    ``a2 e^{i D t}`` and ``a2^2 e^{i D2 t}`` drives, plus ``detuning1`` and
    ``detuning2`` (GHz) and ``edge`` (ns): the residuals switch on and off
    with the gate drive through raised-cosine edges, default min(T/10, 50 ns),
    so their fast linear response is gone by the end of the gate.  A frame with zero mixing angle means the drive has
    no conditional term, so only the target's own Kerr-cat confinement is left.
    Default truncation is the larger of 20 and 4|alpha|^2 + 10 per mode.
    """
    if dims is None:
        dims = (max(20, min_dimension(alpha1)), max(20, min_dimension(alpha2)))
    d1, d2 = dims
    _check_dim(d1, alpha1, "bpcnot control")
    _check_dim(d2, alpha2, "bpcnot target")
    if alpha1 == 0:
        raise ValueError("control amplitude must be non-zero")
    conditional = frame is None or frame.lam != 0.0
    kk = TWO_PI * abs(K)
    a1, a2 = destroy(dims, 0), destroy(dims, 1)
    A1 = a1 @ a1 - alpha1**2
    terms = [HamiltonianTerm(kk, A1.dag() @ A1, None, "H1")]
    phi = ramp if ramp is not None else linear_ramp(gate_time)
    if conditional:
        k = alpha2**2 / (2 * alpha1)
        B0 = a2 @ a2 - k * (alpha1 + a1)
        B1 = -k * (alpha1 - a1)
        terms.append(HamiltonianTerm(kk, B0.dag() @ B0 + B1.dag() @ B1, None, "H2 static"))
        terms += _herm_pair(kk, B0.dag() @ B1, lambda t: cmath.exp(-2j * phi(t)), "H2 ramp")
    else:
        A2 = a2 @ a2 - alpha2**2
        terms.append(HamiltonianTerm(kk, A2.dag() @ A2, None, "H2 unconditional"))
    residuals = dict(residuals or {})
    om1 = float(residuals.get("omega1", 0.0))
    om2 = float(residuals.get("omega2", 0.0))
    det1 = TWO_PI * float(residuals.get("detuning1", 0.5))
    det2 = TWO_PI * float(residuals.get("detuning2", residuals.get("detuning1", 0.5)))
    shape = flat_top(gate_time, float(residuals.get("edge", min(gate_time / 10, 50.0))))
    if om1:
        terms += _herm_pair(TWO_PI * om1, a2, lambda t, w=det1: shape(t) * cmath.exp(1j * w * t),
                            "omega1 residual")
    if om2:
        terms += _herm_pair(TWO_PI * om2, a2 @ a2, lambda t, w=det2: shape(t) * cmath.exp(1j * w * t),
                            "omega2 residual")
    layout = _bpcnot_layout(dims, alpha1, alpha2, conditional)
    return SimScenario(
        kind="bpcnot", dims=tuple(dims), terms=terms, dissipators=[], total_time=gate_time,
        initial=layout.inputs[initial], step=step,
        observables={"n1": number(dims, 0), "n2": number(dims, 1)},
        targets={"ideal": layout.ideal[initial]},
        params={"K": K, "alpha1": alpha1, "alpha2": alpha2, "gate_time": gate_time,
                "residuals": residuals, "conditional": conditional,
                "conditional_rate": conditional_rate(K, alpha1, alpha2) if conditional else 0.0,
                "layout": layout},
    )


@dataclass(frozen=True)
class GateReport:
    fidelity: float
    per_input: dict[str, float]
    control_leakage: float


def bpcnot_gate_fidelity(s: SimScenario, method: str = "dop853", rtol: float = 1e-9) -> GateReport:
    """Average over the four cat-basis inputs of |<ideal|out>|^2."""
    layout: BpcnotLayout = s.params["layout"]
    keys = list(layout.inputs)
    kets = np.stack([layout.inputs[k] for k in keys], axis=1)
    out = propagate_kets(s, kets, method=method, rtol=rtol)
    per = {k: float(abs(np.vdot(layout.ideal[k], out[:, i])) ** 2) for i, k in enumerate(keys)}
    P = layout.code_projector_control
    leak = max(1.0 - float(np.real(np.vdot(out[:, i], P @ out[:, i]))) for i in range(len(keys)))
    return GateReport(fidelity=float(np.mean(list(per.values()))), per_input=per, control_leakage=leak)


# --------------------------------------------------------------------------
# four-photon cat

def four_cat_parameters(g_c: float, kappa_b: float, eps_b: complex) -> dict:
    """Eliminated-buffer quantities: eps_4ph, kappa_4ph and alpha^4 (GHz)."""
    if not kappa_b > 0:
        raise ValueError("buffer decay must be positive")
    eps4 = -2j * g_c * eps_b / kappa_b
    kappa4 = 4.0 * g_c**2 / kappa_b
    alpha4 = -2j * eps4 / kappa4 if kappa4 else 0.0
    return {"eps_4ph": eps4, "kappa_4ph": kappa4, "alpha4": complex(alpha4)}


def build_four_cat(g_c: float, kappa_b: float, eps_b: complex, variant: str = "eliminated",
                   dims: tuple[int, ...] = (25, 8), total_time: float | None = None,
                   step: float | None = None, initial: np.ndarray | None = None) -> SimScenario:
    """Four-photon pumping of a storage mode, with or without its buffer.

    ``full``: ``g_c (a^dag^4 b + a^4 b^dag) + eps_b b^dag + eps_b* b`` with
    buffer decay ``kappa_b``.  ``eliminated``: ``eps_4ph a^dag^4 + h.c.`` with
    ``kappa_4ph D[a^4]`` on the storage mode alone.  ``total_time`` defaults
    to 1 / kappa_4ph (angular), many times the confinement time.
    """
    p = four_cat_parameters(g_c, kappa_b, eps_b)
    alpha = abs(p["alpha4"]) ** 0.25
    ds = dims[0]
    _check_dim(ds, alpha, "four_cat storage")
    if variant == "eliminated":
        dd = (ds,)
        a = destroy(dd)
        a4 = a**4
        terms = _herm_pair(TWO_PI * p["eps_4ph"], a4.dag(), None, "eps_4ph a^dag4")
        diss = [Dissipator(TWO_PI * p["kappa_4ph"], a4, "kappa_4ph D[a^4]")] if p["kappa_4ph"] else []
        psi0 = fock_state(ds, 0) if initial is None else initial
    elif variant == "full":
        if len(dims) < 2:
            raise ValueError("full variant needs storage and buffer truncations")
        dd = (ds, int(dims[1]))
        a, b = destroy(dd, 0), destroy(dd, 1)
        a4 = a**4
        terms = _herm_pair(TWO_PI * g_c, a4.dag() @ b, None, "g_c a^dag4 b")
        if eps_b:
            terms += _herm_pair(TWO_PI * eps_b, b.dag(), None, "eps_b b^dag")
        diss = [Dissipator(TWO_PI * kappa_b, b, "kappa_b D[b]")]
        psi0 = tensor(fock_state(ds, 0), fock_state(dd[1], 0)) if initial is None else initial
    else:
        raise ValueError(f"unknown four-cat variant {variant!r}")
    if total_time is None:
        k4 = TWO_PI * p["kappa_4ph"]
        total_time = 1.0 / k4 if k4 else 1.0
    obs = {"n": number(dd, 0), "a4": a4}
    return SimScenario(kind="four_cat", dims=dd, terms=terms, dissipators=diss,
                       total_time=total_time, initial=psi0, step=step, observables=obs,
                       params={**p, "g_c": g_c, "kappa_b": kappa_b, "eps_b": eps_b,
                               "variant": variant, "alpha": alpha})


# --------------------------------------------------------------------------
# JSON scenarios

def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def scenario_from_dict(d: dict) -> SimScenario:
    """Build a scenario from its JSON description (see docs/formats.md)."""
    kind = d.get("kind")
    opt = {k: d[k] for k in ("total_time", "step") if k in d}
    if kind == "kerr_cat":
        return build_kerr_cat(float(d["K"]), _complex(d["alpha"]), dim=int(d.get("dim", 30)), **opt)
    if kind == "four_cat":
        return build_four_cat(float(d["g_c"]), float(d["kappa_b"]), _complex(d["eps_b"]),
                              variant=d.get("variant", "eliminated"),
                              dims=tuple(d.get("dims", (25, 8))), **opt)
    if kind == "bpcnot":
        frame = None
        if "lambda" in d and float(d["lambda"]) == 0.0:
            from .bogoliubov import decoupled_frame
            frame = decoupled_frame()
        return build_bpcnot(float(d["K"]), _complex(d["alpha1"]), _complex(d["alpha2"]),
                            frame=frame, residuals=d.get("residuals"),
                            gate_time=float(d.get("gate_time", 1000.0)),
                            dims=tuple(d["dims"]) if "dims" in d else None, step=d.get("step"),
                            initial=d.get("initial", "00"))
    raise ValueError(f"unknown scenario kind {kind!r}")


def run(s: SimScenario):
    """Summary dict plus the time series (``None`` for BPCNOT).

    BPCNOT scenarios report the gate fidelity over the four cat-basis inputs,
    propagated with the adaptive integrator; the others are evolved with RK4.
    """
    if s.kind == "bpcnot":
        g = bpcnot_gate_fidelity(s)
        return {"kind": s.kind, "gate_time": s.total_time, "gate_fidelity": g.fidelity,
                "per_input": g.per_input, "control_leakage": g.control_leakage}, None
    res = evolve(s)
    out = {"kind": s.kind, **res.summary()}
    if s.kind == "four_cat":
        out["alpha4_target"] = _jsonable_complex(s.params["alpha4"])
    return out, res


def _jsonable_complex(z: complex):
    z = complex(z)
    return z.real if abs(z.imag) < 1e-15 else [z.real, z.imag]
