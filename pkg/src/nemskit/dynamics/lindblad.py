"""Scenario container and fixed-step RK4 integration of the Lindblad equation.

Coefficients and rates are in angular units (rad/ns) and times in ns.  The
integrator does not care about units as long as they are consistent.  Jump
operators follow ``D[L] rho = L rho L^dag - {L^dag L, rho} / 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .operators import FockOperator, state_fidelity

Envelope = Callable[[np.ndarray | float], complex]

TRACE_TOL = 1e-6
POSITIVITY_TOL = 1e-8
# step * (generator norm bound).  The RK4 stability edge is about 2.8, but
# near it the local error pushes eigenvalues of a pure initial state below
# -1e-8; 0.25 keeps them above that.  Purely Hamiltonian runs only need
# to avoid RK4's damping of fast oscillating components.
STIFFNESS_LIMIT = 0.25
STIFFNESS_LIMIT_UNITARY = 1.0


class IntegrationError(RuntimeError):
    """Trace drift or blow-up during a run."""


@dataclass(frozen=True)
class HamiltonianTerm:
    coefficient: complex
    operator: FockOperator
    envelope: Envelope | None = None
    label: str = ""


@dataclass(frozen=True)
class Dissipator:
    rate: float
    operator: FockOperator
    label: str = ""


@dataclass
class SimScenario:
    """Everything needed for one run.

    Hamiltonian terms are listed individually, so the total must be
    Hermitian at every time: each non-Hermitian term needs its partner.
    """

    kind: str
    dims: tuple[int, ...]
    terms: list[HamiltonianTerm]
    dissipators: list[Dissipator]
    total_time: float
    initial: np.ndarray
    step: float | None = None
    record_every: float | None = None
    observables: dict[str, FockOperator] = field(default_factory=dict)
    targets: dict[str, np.ndarray] = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def max_coefficient(self) -> float:
        vals = [abs(t.coefficient) for t in self.terms] + [d.rate for d in self.dissipators]
        return max(vals) if vals else 0.0

    def stiffness(self) -> float:
        """Norm bound of the generator, used to size the step."""
        return _Generator(self).stiffness()

    def auto_step(self, stiffness: float | None = None) -> float:
        mc = self.max_coefficient()
        if mc == 0:
            return self.total_time / 100 if self.total_time > 0 else 1.0
        b = self.stiffness() if stiffness is None else stiffness
        limit = STIFFNESS_LIMIT if self.dissipators else STIFFNESS_LIMIT_UNITARY
        return min(0.05 / mc, limit / b) if b > 0 else 0.05 / mc

    def resolved_step(self, stiffness: float | None = None) -> float:
        dt = self.auto_step(stiffness) if self.step is None else float(self.step)
        if self.step is not None and self.max_coefficient() > 0 and dt > 0.05 / self.max_coefficient() * (1 + 1e-12):
            raise ValueError(f"step {dt:.4g} too coarse for the fastest term "
                             f"(limit {0.05 / self.max_coefficient():.4g})")
        return dt

    def validate(self):
        size = int(np.prod(self.dims))
        for t in self.terms:
            if t.operator.dims != self.dims:
                raise ValueError(f"term {t.label!r} has dims {t.operator.dims}, expected {self.dims}")
        for d in self.dissipators:
            if d.rate < 0:
                raise ValueError(f"negative rate for {d.label!r}")
            if d.operator.dims != self.dims:
                raise ValueError(f"dissipator {d.label!r} has wrong dims")
        if self.initial.shape[0] != size:
            raise ValueError("initial state has the wrong size")
        if not self.total_time >= 0:
            raise ValueError("total time must be non-negative")


@dataclass
class SimResult:
    times: np.ndarray
    expectations: dict[str, np.ndarray]
    fidelities: dict[str, np.ndarray]
    final_state: np.ndarray
    step: float
    steps: int
    max_trace_error: float
    min_eigenvalue: float
    states: list[np.ndarray] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "final_time": float(self.times[-1]),
            "step": self.step,
            "steps": self.steps,
            "max_trace_error": self.max_trace_error,
            "min_eigenvalue": self.min_eigenvalue,
            "final_expectations": {k: _jsonable(v[-1]) for k, v in self.expectations.items()},
            "final_fidelities": {k: float(v[-1]) for k, v in self.fidelities.items()},
        }

    def to_csv(self) -> str:
        cols = ["t"]
        data = [self.times]
        for k, v in self.expectations.items():
            if np.iscomplexobj(v) and np.max(np.abs(v.imag), initial=0.0) > 1e-12:
                cols += [f"re_{k}", f"im_{k}"]
                data += [v.real, v.imag]
            else:
                cols.append(k)
                data.append(np.real(v))
        for k, v in self.fidelities.items():
            cols.append(f"F_{k}")
            data.append(v)
        rows = [",".join(cols)]
        for i in range(len(self.times)):
            rows.append(",".join(f"{d[i]:.10g}" for d in data))
        return "\n".join(rows) + "\n"


def _jsonable(x):
    x = complex(x)
    return x.real if abs(x.imag) < 1e-12 else [x.real, x.imag]


def _bound(m: sp.spmatrix) -> float:
    """sqrt(||A||_1 ||A||_inf), an upper bound on the spectral norm."""
    a = abs(m)
    if a.nnz == 0:
        return 0.0
    return float(math.sqrt(a.sum(axis=0).max() * a.sum(axis=1).max()))


class _Generator:
    def __init__(self, s: SimScenario):
        size = int(np.prod(s.dims))
        static = sp.csr_matrix((size, size), dtype=complex)
        self.timed: list[tuple[complex, sp.csr_matrix, Envelope]] = []
        for t in s.terms:
            if t.envelope is None:
                static = static + t.coefficient * t.operator.matrix
            else:
                self.timed.append((t.coefficient, t.operator.matrix, t.envelope))
        decay = sp.csr_matrix((size, size), dtype=complex)
        self.jumps = []
        for d in s.dissipators:
            L = d.operator.matrix
            decay = decay + d.rate * (L.conj().T @ L)
            self.jumps.append((d.rate, L))
        self.h_eff = (static - 0.5j * decay).tocsr()

    def stiffness(self) -> float:
        """Norm bound of the whole generator, used to size the step."""
        b = _bound(self.h_eff)
        b += sum(abs(c) * _bound(m) for c, m, _ in self.timed)
        b += sum(rate * _bound(L) ** 2 for rate, L in self.jumps)
        return b

    def hamiltonian(self, t: float) -> sp.csr_matrix:
        h = self.h_eff
        for c, m, env in self.timed:
            h = h + (c * complex(env(t))) * m
        return h

    def apply(self, t: float, y: np.ndarray) -> np.ndarray:
        """H(t) @ y without assembling H(t)."""
        out = self.h_eff @ y
        for c, m, env in self.timed:
            out += (c * complex(env(t))) * (m @ y)
        return out

    def ket_rhs(self, t, psi):
        return -1j * self.apply(t, psi)

    def rho_rhs(self, t, rho):
        hr = self.apply(t, rho)
        out = -1j * (hr - hr.conj().T)
        for rate, L in self.jumps:
            out += rate * (L @ (L @ rho.conj().T).conj().T)  # L rho L^dag with rho Hermitian
        return out


def _rk4(f, t, y, dt):
    k1 = f(t, y)
    k2 = f(t + dt / 2, y + dt / 2 * k1)
    k3 = f(t + dt / 2, y + dt / 2 * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _step_count(s: SimScenario, gen: _Generator) -> tuple[int, float]:
    if s.total_time <= 0:
        return 0, 0.0
    dt_max = s.resolved_step(gen.stiffness())
    n = max(1, math.ceil(s.total_time / dt_max - 1e-9))
    return n, s.total_time / n


def evolve(s: SimScenario, keep_states: bool = False) -> SimResult:
    """Integrate the scenario from its initial state.

    A ket (or a matrix of kets as columns) without dissipators is propagated
    with the Schrödinger equation; anything else uses the density matrix.
    Aborts with :class:`IntegrationError` if the trace drifts beyond 1e-6.
    """
    s.validate()
    gen = _Generator(s)
    n_steps, dt = _step_count(s, gen)
    rec = s.record_every if s.record_every else s.total_time / 50 if s.total_time > 0 else 1.0
    rec_stride = max(1, int(round(rec / dt))) if dt > 0 else 1

    pure = not s.dissipators and s.initial.ndim == 1
    y = np.array(s.initial, dtype=complex)
    if not pure and y.ndim == 1:
        y = np.outer(y, y.conj())
    f = gen.ket_rhs if pure else gen.rho_rhs

    times, exps, fids, states = [], {k: [] for k in s.observables}, {k: [] for k in s.targets}, []
    worst_trace, min_eig = 0.0, math.inf

    def record(t, y):
        nonlocal worst_trace, min_eig
        times.append(t)
        if pure:
            tr = float(np.vdot(y, y).real)
            for k, op in s.observables.items():
                exps[k].append(np.vdot(y, op.matrix @ y) / tr)
            for k, tgt in s.targets.items():
                fids[k].append(state_fidelity(y / math.sqrt(tr), tgt))
        else:
            tr = float(np.trace(y).real)
            ev = np.linalg.eigvalsh(y)
            min_eig = min(min_eig, float(ev[0]))
            for k, op in s.observables.items():
                exps[k].append(np.trace(op.matrix @ y))
            for k, tgt in s.targets.items():
                fids[k].append(state_fidelity(y, tgt))
        worst_trace = max(worst_trace, abs(tr - 1.0))
        if keep_states:
            states.append(y.copy())

    record(0.0, y)
    for i in range(1, n_steps + 1):
        y = _rk4(f, (i - 1) * dt, y, dt)
        if not pure:
            y = 0.5 * (y + y.conj().T)
        if i % rec_stride == 0 or i == n_steps:
            tr = float(np.vdot(y, y).real) if pure else float(np.trace(y).real)
            if not math.isfinite(tr) or abs(tr - 1.0) > TRACE_TOL:
                raise IntegrationError(
                    f"trace drift {tr - 1.0:.3g} at t = {i * dt:.6g} (step {dt:.4g}); "
                    "reduce the step or the truncation")
            record(i * dt, y)
    if min_eig < -POSITIVITY_TOL:
        raise IntegrationError(f"density matrix lost positivity (min eigenvalue {min_eig:.3g})")
    return SimResult(
        times=np.array(times),
        expectations={k: np.array(v) for k, v in exps.items()},
        fidelities={k: np.array(v) for k, v in fids.items()},
        final_state=y, step=dt, steps=n_steps,
        max_trace_error=worst_trace,
        min_eigenvalue=min_eig if not pure else 0.0,
        states=states,
    )


def propagate_kets(s: SimScenario, kets: np.ndarray, method: str = "rk4",
                   rtol: float = 1e-9) -> np.ndarray:
    """Schrödinger propagation of several kets at once (columns); no dissipators.

    ``method="dop853"`` uses scipy's adaptive 8th-order Runge-Kutta instead
    of fixed-step RK4; it is much cheaper when a fast detuned drive would
    otherwise force tiny RK4 steps.
    """
    if s.dissipators:
        raise ValueError("ket propagation needs a scenario without dissipators")
    s.validate()
    gen = _Generator(s)
    y = np.array(kets, dtype=complex)
    if method == "rk4":
        n_steps, dt = _step_count(s, gen)
        for i in range(n_steps):
            y = _rk4(gen.ket_rhs, i * dt, y, dt)
    elif method == "dop853":
        shape = y.shape
        sol = solve_ivp(lambda t, v: gen.ket_rhs(t, v.reshape(shape)).ravel(),
                        (0.0, s.total_time), y.ravel(), method="DOP853",
                        rtol=rtol, atol=rtol * 1e-2)
        if not sol.success:
            raise IntegrationError(f"adaptive integration failed: {sol.message}")
        y = sol.y[:, -1].reshape(shape)
    else:
        raise ValueError(f"unknown method {method!r}")
    norms = np.linalg.norm(y, axis=0)
    if np.max(np.abs(norms - 1.0)) > TRACE_TOL:
        raise IntegrationError(f"norm drift {np.max(np.abs(norms - 1.0)):.3g} "
                               f"({method}); reduce the step or the tolerance")
    return y
