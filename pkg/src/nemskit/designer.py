"""Inverse design: choose junction ratios, biases and drive ratios that cancel
selected Taylor orders of the driven and static potentials.

Odd-parity designs use loops biased at 0 (or pi for single junctions).  At
the origin their driven coefficients are

    c_k = (-1)^((k-1)/2) * sum_i x_i / n_i^(k-1),   x_i = s_i r_i a_i / n_i,

for odd k, where ``a_i`` is the drive ratio and ``s_i`` is -1 for a single
junction at pi.  Cancelling orders 1, 3, ... is a Vandermonde system in the
weights ``x``.

Even-parity designs use mirror pairs of loops with opposite biases and
opposite drive ratios.  Each pair contributes only even orders, with
``x_i = s_i r_i a_i / n_i^2`` playing the same role.
"""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import potential as pot
from .circuit import CircuitSpec, DriveNormalizationWarning, JosephsonBranch
from .wao import WaoReport, wao_check

CANCEL_TOL = 1e-12


class DesignError(ValueError):
    pass


class IllConditionedWarning(UserWarning):
    pass


# --------------------------------------------------------------------------
# Vandermonde system

def vandermonde_matrix(ns: Sequence[int]) -> np.ndarray:
    """A[k, j] = 1 / n_j^(2k)."""
    z = 1.0 / np.asarray(ns, dtype=float) ** 2
    return z[None, :] ** np.arange(len(z))[:, None]


def vandermonde_determinant(ns: Sequence[int]) -> float:
    """Closed form: product over i < j of (1/n_j^2 - 1/n_i^2)."""
    z = 1.0 / np.asarray(ns, dtype=float) ** 2
    det = 1.0
    for i in range(len(z)):
        for j in range(i + 1, len(z)):
            det *= z[j] - z[i]
    return float(det)


def solve_vandermonde(ns: Sequence[int], targets: Sequence[float]) -> np.ndarray:
    """Solve ``A x = targets`` for A[k, j] = 1/n_j^(2k).

    Uses the Bjorck-Pereyra recurrences, which need O(d^2) work and stay
    accurate for the small, well separated node sets that occur here.
    """
    ns = [int(n) for n in ns]
    b = np.array(targets, dtype=float)
    d = len(ns)
    if b.shape != (d,):
        raise DesignError("need exactly one target per junction count")
    if d == 0:
        return b
    if len(set(ns)) != d:
        raise DesignError(f"junction counts must be distinct, got {ns}")
    if min(ns) < 1:
        raise DesignError("junction counts must be >= 1")
    z = 1.0 / np.asarray(ns, dtype=float) ** 2
    cond = np.linalg.cond(vandermonde_matrix(ns))
    if cond > 1e8:
        warnings.warn(f"Vandermonde condition number {cond:.3g}", IllConditionedWarning, stacklevel=2)
    for k in range(d - 1):
        for i in range(d - 1, k, -1):
            b[i] -= z[k] * b[i - 1]
    for k in range(d - 2, -1, -1):
        for i in range(k + 1, d):
            b[i] /= z[i] - z[i - k - 1]
        for i in range(k, d - 1):
            b[i] -= b[i + 1]
    return b


# --------------------------------------------------------------------------
# problem / solution types

@dataclass(frozen=True)
class DesignProblem:
    """Target nonlinearity pattern and branch structure.

    ``branch_ns`` lists the driven branches (pairs for even parity);
    ``balance_ns`` adds undriven branches that only help cancel static orders.
    ``profile`` picks how drive weight is split between junction size and
    drive ratio: ``proportional`` keeps |a_i| / n_i equal across loops,
    ``static_first`` fixes junction sizes from the static constraints.
    ``auto`` tries the former and falls back to the latter.
    """

    parity: str
    zero_orders: tuple[int, ...]
    keep_order: int
    branch_ns: tuple[int, ...]
    static_zero_orders: tuple[int, ...] = ()
    balance_ns: tuple[int, ...] = ()
    flux_scale: float = math.pi / 4
    r_cap: float = 1.0
    drive_unit: float = 0.2
    profile: str = "auto"
    inductor_EJL: float = 180.0
    inductor_n: int = 10
    charging_energy: float = 0.2
    name: str = ""

    def __post_init__(self):
        for attr in ("zero_orders", "branch_ns", "static_zero_orders", "balance_ns"):
            object.__setattr__(self, attr, tuple(int(v) for v in getattr(self, attr)))
        if self.parity not in ("odd", "even"):
            raise DesignError(f"parity must be 'odd' or 'even', got {self.parity!r}")
        if len(set(self.branch_ns)) != len(self.branch_ns):
            raise DesignError("driven junction counts must be pairwise distinct")
        if not self.branch_ns:
            raise DesignError("at least one driven branch is required")
        if self.keep_order in self.zero_orders:
            raise DesignError("keep_order cannot also be cancelled")
        want = 1 if self.parity == "odd" else 0
        for k in (*self.zero_orders, self.keep_order):
            if k < 1 or k % 2 != want:
                raise DesignError(f"driven order {k} does not match {self.parity} parity")
        for k in self.static_zero_orders:
            if k < 2 or k % 2:
                raise DesignError("static cancellations must be even orders >= 2")
        if self.profile not in ("auto", "proportional", "static_first"):
            raise DesignError(f"unknown profile {self.profile!r}")
        if not 0 < self.r_cap:
            raise DesignError("r_cap must be positive")

    @property
    def driven_orders(self) -> list[int]:
        start = 1 if self.parity == "odd" else 2
        return [start + 2 * j for j in range(len(self.branch_ns))]

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "DesignProblem":
        from .circuit import parse_angle

        kw = dict(d)
        ind = kw.pop("inductor", None) or {}
        cap = kw.pop("capacitor", None) or {}
        if "EJ" in ind:
            kw["inductor_EJL"] = float(ind["EJ"])
        if "n" in ind:
            kw["inductor_n"] = int(ind["n"])
        if "EC" in cap:
            kw["charging_energy"] = float(cap["EC"])
        if "flux_scale" in kw:
            kw["flux_scale"] = parse_angle(kw["flux_scale"])
        known = set(cls.__dataclass_fields__)
        extra = set(kw) - known
        if extra:
            raise DesignError(f"unknown design keys: {sorted(extra)}")
        try:
            return cls(**kw)
        except TypeError as exc:
            raise DesignError(str(exc)) from exc


@dataclass
class DesignSolution:
    problem: DesignProblem
    branches: tuple[JosephsonBranch, ...]
    residual_c: dict[str, float]
    keep_coefficient: float
    feasible: bool
    weights: np.ndarray
    determinant: float
    profile_used: str
    diagnostics: list[str] = field(default_factory=list)
    wao: WaoReport | None = None

    def circuit(self) -> CircuitSpec:
        p = self.problem
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DriveNormalizationWarning)
            return CircuitSpec(
                inductor_EJL=p.inductor_EJL, inductor_n=p.inductor_n,
                charging_energy=p.charging_energy, branches=self.branches,
                name=p.name or f"{p.parity}-design",
            )


# --------------------------------------------------------------------------
# helpers

def _target_vector(p: DesignProblem) -> np.ndarray:
    orders = p.driven_orders
    unconstrained = [k for k in orders if k not in p.zero_orders and k != p.keep_order]
    missing = [k for k in (*p.zero_orders, p.keep_order) if k not in orders]
    if unconstrained or missing:
        raise DesignError(
            f"{len(p.branch_ns)} driven branches control orders {orders}; "
            f"cancel/keep set must be exactly these (free: {unconstrained}, unreachable: {missing})"
        )
    return np.array([1.0 if k == p.keep_order else 0.0 for k in orders])


def _static_rows(p: DesignProblem, ns: Sequence[int]) -> np.ndarray:
    """Rows k of sum_i s_i r_i / n_i^(k-1) for every static order to cancel."""
    return np.array([[1.0 / n ** (k - 1) for n in ns] for k in p.static_zero_orders]).reshape(
        len(p.static_zero_orders), len(ns))


def _sign_choices(ns: Sequence[int]):
    """All sign vectors: single junctions may take -1, +1 tried first."""
    free = [i for i, n in enumerate(ns) if n == 1]
    for combo in itertools.product((1, -1), repeat=len(free)):
        s = np.ones(len(ns), dtype=int)
        s[free] = combo
        yield s


def _proportional(p, x, s_drv, balance_ns):
    # |a_i| = u n_i^m with m = 1 (odd) or 2 (even) so r_i is proportional to |x_i|
    r_drv = np.abs(x)
    sigma = np.sign(x) * s_drv
    if not p.static_zero_orders:
        return r_drv, sigma, np.zeros(0), np.zeros(0, dtype=int)
    all_ns = list(p.branch_ns) + list(balance_ns)
    rows = _static_rows(p, all_ns)
    nd = len(p.branch_ns)
    if not balance_ns:
        resid = rows @ (s_drv * r_drv)
        if np.max(np.abs(resid)) > 1e-12 * max(1.0, np.max(r_drv)):
            return None
        return r_drv, sigma, np.zeros(0), np.zeros(0, dtype=int)
    if len(balance_ns) != len(p.static_zero_orders):
        raise DesignError("need one balance branch per static order to cancel")
    for s_bal in _sign_choices(balance_ns):
        A = rows[:, nd:] * s_bal[None, :]
        rhs = -rows[:, :nd] @ (s_drv * r_drv)
        try:
            r_bal = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            continue
        if np.all(r_bal > 0):
            return r_drv, sigma, r_bal, s_bal
    return None


def _static_first(p, x, s_drv):
    """Pin the largest-n driven junction, solve the others from static rows."""
    nd = len(p.branch_ns)
    if len(p.static_zero_orders) != nd - 1:
        return None
    pin = int(np.argmax(p.branch_ns))
    free = [i for i in range(nd) if i != pin]
    rows = _static_rows(p, p.branch_ns) * s_drv[None, :]
    r = np.zeros(nd)
    r[pin] = 1.0
    if free:
        try:
            r[free] = np.linalg.solve(rows[:, free], -rows[:, pin])
        except np.linalg.LinAlgError:
            return None
    if np.any(r <= 0):
        return None
    sigma = np.sign(x) * s_drv
    return r, sigma


def _bias(p: DesignProblem, n: int, s: int) -> float:
    if p.parity == "odd":
        return math.pi if s < 0 else 0.0
    return (p.flux_scale + math.pi) if s < 0 else n * p.flux_scale


def _assemble(p, r_drv, a_drv, s_drv, r_bal, s_bal) -> tuple[JosephsonBranch, ...]:
    out = []
    for n, r, a, s in zip(p.branch_ns, r_drv, a_drv, s_drv):
        b = _bias(p, n, s)
        out.append(JosephsonBranch(r=r, n=n, dc_bias=b, ac_ratio=a))
        if p.parity == "even":
            out.append(JosephsonBranch(r=r, n=n, dc_bias=-b, ac_ratio=-a))
    for n, r, s in zip(p.balance_ns, r_bal, s_bal):
        b = _bias(p, n, s)
        out.append(JosephsonBranch(r=r, n=n, dc_bias=b, ac_ratio=0.0))
        if p.parity == "even":
            out.append(JosephsonBranch(r=r, n=n, dc_bias=-b, ac_ratio=0.0))
    return tuple(out)


def _solve(p: DesignProblem) -> DesignSolution:
    t = _target_vector(p)
    ns = list(p.branch_ns)
    x = solve_vandermonde(ns, t)
    det = vandermonde_determinant(ns)
    diags: list[str] = []
    power = 1 if p.parity == "odd" else 2
    if np.any(x == 0):
        diags.append("a driven branch received zero weight")
    found = None
    if p.profile in ("auto", "proportional"):
        for s in _sign_choices(ns):
            res = _proportional(p, x, s, p.balance_ns)
            if res is not None:
                found = ("proportional", s, *res)
                break
    if found is None and p.profile in ("auto", "static_first") and not p.balance_ns:
        for s in _sign_choices(ns):
            res = _static_first(p, x, s)
            if res is not None:
                found = ("static_first", s, res[0], res[1], np.zeros(0), np.zeros(0, dtype=int))
                break
    if found is None:
        raise DesignError("no positive junction sizes satisfy the requested cancellations")
    profile, s_drv, r_drv, sigma, r_bal, s_bal = found
    # drive ratios from the weights: x_i = s_i r_i a_i / n_i^power
    n_arr = np.asarray(ns, dtype=float)
    a = x * n_arr**power / (s_drv * r_drv)
    scale_r = p.r_cap / np.max(r_drv)
    r_drv = r_drv * scale_r
    r_bal = r_bal * scale_r
    a = a / scale_r
    a *= p.drive_unit / np.max(np.abs(a) / n_arr)
    first = a[np.flatnonzero(a)[0]] if np.any(a) else 1.0
    if first < 0:
        a = -a
    branches = _assemble(p, r_drv, a, s_drv, r_bal, s_bal)
    sol = DesignSolution(
        problem=p, branches=branches, residual_c={}, keep_coefficient=0.0, feasible=True,
        weights=x, determinant=det, profile_used=profile, diagnostics=diags,
    )
    return sol


def _finalize(sol: DesignSolution, order: int) -> DesignSolution:
    rep = verify_design(sol, order)
    sol.residual_c = rep.residual_c
    sol.keep_coefficient = rep.keep_coefficient
    sol.wao = rep.wao
    sol.diagnostics.extend(rep.diagnostics)
    sol.feasible = sol.feasible and rep.passed
    return sol


def design_odd(p: DesignProblem, order: int = pot.DEFAULT_ORDER) -> DesignSolution:
    """Odd-order engineering with loops biased at 0 or pi."""
    if p.parity != "odd":
        raise DesignError("design_odd needs parity 'odd'")
    return _finalize(_solve(p), order)


def design_even(p: DesignProblem, order: int = pot.DEFAULT_ORDER) -> DesignSolution:
    """Even-order engineering with symmetric double branches.

    Single-junction pairs sit at +-flux_scale (or +-(flux_scale + pi)),
    n-junction pairs at +-n*flux_scale.  All even driven orders scale with
    sin(flux_scale).
    """
    if p.parity != "even":
        raise DesignError("design_even needs parity 'even'")
    for n in (*p.branch_ns, *p.balance_ns):
        if n > 1 and abs(n * p.flux_scale) >= math.pi:
            raise DesignError(
                f"flux scale {p.flux_scale:.4g} puts the {n}-junction pair past its phase-slip point"
            )
    sol = _solve(p)
    sin0 = math.sin(p.flux_scale)
    sol.diagnostics.append(f"even-order drive strength scales with sin(flux_scale) = {sin0:.4g}")
    if abs(sin0) < 1e-12:
        sol.feasible = False
        sol.diagnostics.append("flux_scale = 0 gives no even-order drive")
    return _finalize(sol, order)


def design(p: DesignProblem, order: int = pot.DEFAULT_ORDER) -> DesignSolution:
    return design_odd(p, order) if p.parity == "odd" else design_even(p, order)


# --------------------------------------------------------------------------
# verification

@dataclass
class DesignReport:
    residual_c: dict[str, float]
    keep_coefficient: float
    passed: bool
    wao: WaoReport | None
    diagnostics: list[str]


def verify_design(sol: DesignSolution, order: int = pot.DEFAULT_ORDER) -> DesignReport:
    """Expand the realized circuit and check every requested cancellation."""
    p = sol.problem
    c = sol.circuit()
    diags: list[str] = []
    try:
        s = pot.expand(c, order=max(order, p.keep_order, *p.static_zero_orders, *p.zero_orders),
                       force=True)
    except pot.MinimumError as exc:
        return DesignReport({}, 0.0, False, None, [f"no minimum: {exc}"])
    resid: dict[str, float] = {}
    for k in p.zero_orders:
        resid[f"driven_{k}"] = float(s.c_driven[k])
    for k in p.static_zero_orders:
        resid[f"static_{k}"] = float(s.c_static[k])
    # odd designs also promise vanishing odd static orders, even designs odd orders of both
    if p.parity == "odd":
        for k in range(1, s.order + 1, 2):
            resid.setdefault(f"static_{k}", float(s.c_static[k]))
    else:
        for k in range(1, s.order + 1, 2):
            resid.setdefault(f"static_{k}", float(s.c_static[k]))
            resid.setdefault(f"driven_{k}", float(s.c_driven[k]))
    keep = float(s.c_driven[p.keep_order])
    bad = {k: v for k, v in resid.items() if abs(v) >= CANCEL_TOL}
    if bad:
        diags.append("cancellation residuals above 1e-12: " + ", ".join(f"{k}={v:.3g}" for k, v in bad.items()))
    if keep == 0.0 or abs(keep) < CANCEL_TOL:
        diags.append("kept order vanished")
    rep = wao_check(c)
    if not rep.single_well:
        diags.append("realized circuit is not single-welled")
    passed = not bad and abs(keep) >= CANCEL_TOL and rep.single_well
    return DesignReport(resid, keep, passed, rep, diags)


def solution_to_dict(sol: DesignSolution) -> dict:
    from .circuit import circuit_to_dict

    return {
        "circuit": circuit_to_dict(sol.circuit()),
        "feasible": sol.feasible,
        "profile": sol.profile_used,
        "keep_order": sol.problem.keep_order,
        "keep_coefficient": sol.keep_coefficient,
        "residual_c": sol.residual_c,
        "weights": [float(v) for v in sol.weights],
        "determinant": sol.determinant,
        "diagnostics": sol.diagnostics,
    }


# --------------------------------------------------------------------------
# canned problems reproducing the reference designs

CANNED: dict[str, dict] = {
    "nems3": dict(parity="odd", zero_orders=[1], keep_order=3, branch_ns=[1, 3],
                  static_zero_orders=[4], balance_ns=[1], inductor_EJL=90.0, inductor_n=5,
                  charging_energy=0.2, name="nems3"),
    "nems3-two-branch": dict(parity="odd", zero_orders=[1], keep_order=3, branch_ns=[1, 3],
                             static_zero_orders=[4], inductor_EJL=90.0, inductor_n=5,
                             charging_energy=0.2, name="nems3-two-branch"),
    "nems5": dict(parity="odd", zero_orders=[1, 3], keep_order=5, branch_ns=[1, 2, 3],
                  static_zero_orders=[4], charging_energy=0.246, name="nems5"),
    "nems4": dict(parity="even", zero_orders=[2], keep_order=4, branch_ns=[1, 2],
                  static_zero_orders=[4], flux_scale=math.pi / 4, drive_unit=0.5,
                  charging_energy=0.231, name="nems4"),
    "ats": dict(parity="odd", zero_orders=[], keep_order=1, branch_ns=[1],
                charging_energy=0.151, name="single-junction"),
    "sts": dict(parity="even", zero_orders=[], keep_order=2, branch_ns=[1],
                flux_scale=math.pi / 2, drive_unit=0.5, charging_energy=0.151, name="sts"),
}


def canned_problem(name: str) -> DesignProblem:
    try:
        return DesignProblem.from_dict(CANNED[name])
    except KeyError:
        raise DesignError(f"unknown canned problem {name!r}; known: {', '.join(CANNED)}") from None


def load_problem(path_or_name: str) -> DesignProblem:
    from pathlib import Path

    if path_or_name in CANNED and not Path(path_or_name).exists():
        return canned_problem(path_or_name)
    path = Path(path_or_name)
    if not path.is_file():
        raise DesignError(f"no such design problem file: {path_or_name}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DesignError(f"malformed problem JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DesignError("design problem must be a JSON object")
    return DesignProblem.from_dict(doc)
