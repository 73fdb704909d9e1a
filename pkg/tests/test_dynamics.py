import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nemskit.dynamics import (
    Dissipator, HamiltonianTerm, SimScenario, TruncationError, bogoliubov, bpcnot_gate_fidelity,
    build_bpcnot, build_four_cat, build_kerr_cat, cat_basis, cat_state, coherent_state,
    conditional_rate, create, decoupled_frame, destroy, dm, evolve, expect, fock_state,
    four_cat_parameters, identity, number, partial_trace, propagate_kets, run, scenario_from_dict,
    state_fidelity, tensor,
)
from nemskit.dynamics.lindblad import IntegrationError


# ---------------------------------------------------------------- operators

@pytest.mark.parametrize("d", [2, 5, 12])
def test_commutator_identity_below_top_level(d):
    a, ad = destroy(d), create(d)
    comm = (a @ ad - ad @ a).dense()
    expected = np.eye(d)
    expected[-1, -1] = 1 - d
    np.testing.assert_allclose(comm, expected, atol=1e-14)


def test_two_mode_operators_commute():
    a1, a2 = destroy((3, 4), 0), destroy((3, 4), 1)
    assert np.abs((a1 @ a2 - a2 @ a1).dense()).max() == 0
    assert number((3, 4), 1).size == 12
    np.testing.assert_allclose(identity((3, 4)).dense(), np.eye(12))


def test_operator_arithmetic():
    a = destroy(4)
    n = number(4)
    np.testing.assert_allclose((create(4) @ a).dense(), n.dense())
    np.testing.assert_allclose((a**2).dense(), (a @ a).dense())
    np.testing.assert_allclose((2 * n - n).dense(), n.dense())
    with pytest.raises(ValueError):
        a + destroy(5)


@given(st.floats(0.0, 2.0), st.floats(0, 2 * math.pi))
def test_coherent_state_eigenvalue(r, theta):
    alpha = r * np.exp(1j * theta)
    psi = coherent_state(40, alpha)
    assert np.linalg.norm(psi) == pytest.approx(1.0)
    assert expect(destroy(40), psi) == pytest.approx(alpha, abs=1e-8)
    assert expect(number(40), psi).real == pytest.approx(r**2, abs=1e-8)


def test_cat_states_have_definite_parity():
    d = 30
    parity = np.diag((-1.0) ** np.arange(d))
    for p in (1, -1):
        c = cat_state(d, 2.0, p)
        assert np.vdot(c, parity @ c).real == pytest.approx(p)
    z0, z1 = cat_basis(d, 2.0)
    assert abs(np.vdot(z0, z1)) < 1e-12
    assert state_fidelity(z0, coherent_state(d, 2.0)) > 0.999


def test_fidelity_and_partial_trace():
    d = 6
    psi = tensor(fock_state(3, 1), coherent_state(2, 0.3))
    rho = dm(psi)
    red = partial_trace(rho, (3, 2), keep=0)
    np.testing.assert_allclose(red, dm(fock_state(3, 1)), atol=1e-14)
    a = dm(coherent_state(d, 0.5))
    assert state_fidelity(a, a) == pytest.approx(1.0, abs=1e-10)
    assert state_fidelity(coherent_state(d, 0.5), a) == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------- bogoliubov

def test_mixing_angle_small_coupling():
    f = bogoliubov(6.0, 5.0, 0.1)
    assert f.lam == pytest.approx(0.5 * math.atan(0.2), rel=1e-14)


@given(st.floats(4.0, 8.0), st.floats(0.05, 3.0), st.floats(-0.5, 0.5))
def test_rotation_diagonalizes_linear_block(w1, gap, g):
    f = bogoliubov(w1, w1 - gap, g)
    m = f.transformed_linear_block()
    assert abs(m[0, 1]) <= 1e-12 * max(abs(g), 1e-300) + 1e-15
    assert m[0, 0] == pytest.approx(f.dressed_freqs[0], rel=1e-12)
    assert m[1, 1] == pytest.approx(f.dressed_freqs[1], rel=1e-12)


def test_zero_coupling_is_identity():
    f = bogoliubov(6.0, 5.0, 0.0, K1=-1e-3, K2=-2e-3)
    assert f.lam == 0.0
    assert f.dressed_freqs == (6.0, 5.0)
    assert f.dressed_kerrs == (-1e-3, -2e-3, 0.0)
    assert decoupled_frame().lam == 0.0


def test_degenerate_modes_rejected():
    with pytest.raises(ValueError):
        bogoliubov(5.0, 5.0, 0.1)


@pytest.mark.parametrize("g", [0.05, 0.3, -0.2])
def test_dressed_kerrs_match_operator_expansion(g):
    """Rewrite the quartic terms in dressed operators and read off matrix elements."""
    K1, K2 = -2.2e-3, -1.3e-3
    f = bogoliubov(6.0, 5.0, g, K1, K2)
    t = f.rotation
    dims = (4, 4)
    b1, b2 = destroy(dims, 0).dense(), destroy(dims, 1).dense()
    a1 = math.cos(t) * b1 + math.sin(t) * b2
    a2 = math.cos(t) * b2 - math.sin(t) * b1
    H = K1 * a1.conj().T @ a1.conj().T @ a1 @ a1 + K2 * a2.conj().T @ a2.conj().T @ a2 @ a2

    def ket(n1, n2):
        return tensor(fock_state(4, n1), fock_state(4, n2))

    k1_eff = np.vdot(ket(2, 0), H @ ket(2, 0)).real / 2
    k2_eff = np.vdot(ket(0, 2), H @ ket(0, 2)).real / 2
    chi = np.vdot(ket(1, 1), H @ ket(1, 1)).real
    assert f.dressed_kerrs[0] == pytest.approx(k1_eff, rel=1e-12)
    assert f.dressed_kerrs[1] == pytest.approx(k2_eff, rel=1e-12)
    assert f.chi12 == pytest.approx(chi, rel=1e-12)


# ---------------------------------------------------------------- integrator

def test_amplitude_decay_matches_exponential():
    d, kappa = 5, 0.7
    a = destroy(d)
    s = SimScenario("decay", (d,), [], [Dissipator(kappa, a)], 3.0, fock_state(d, 1),
                    observables={"n": number(d)})
    r = evolve(s)
    assert np.max(np.abs(r.expectations["n"].real - np.exp(-kappa * r.times))) < 1e-4
    assert r.max_trace_error < 1e-6
    assert r.min_eigenvalue > -1e-8


def test_coherent_decay_keeps_trace_and_positivity():
    d = 12
    s = SimScenario("decay", (d,), [HamiltonianTerm(0.3, number(d))], [Dissipator(0.5, destroy(d))],
                    4.0, coherent_state(d, 1.2), observables={"a": destroy(d)})
    r = evolve(s, keep_states=True)
    for rho in r.states:
        assert abs(np.trace(rho) - 1) < 1e-6
        assert np.linalg.eigvalsh(rho)[0] > -1e-8
    expected = 1.2 * np.exp((-0.3j - 0.25) * r.times)
    assert np.max(np.abs(r.expectations["a"] - expected)) < 1e-4


def test_step_validation():
    d = 4
    s = SimScenario("x", (d,), [HamiltonianTerm(10.0, number(d))], [], 1.0, fock_state(d, 0), step=0.1)
    with pytest.raises(ValueError):
        evolve(s)
    bad = SimScenario("x", (d,), [HamiltonianTerm(1.0, number(5))], [], 1.0, fock_state(d, 0))
    with pytest.raises(ValueError):
        evolve(bad)


def test_trace_drift_is_reported():
    # an anti-Hermitian term makes the generator non trace preserving
    d = 6
    s = SimScenario("x", (d,), [HamiltonianTerm(1.0, number(d)), HamiltonianTerm(0.5j, identity(d))],
                    [Dissipator(1.0, destroy(d))], 10.0, fock_state(d, 3))
    with pytest.raises(IntegrationError):
        evolve(s)


def test_ket_routes_agree():
    d = 8
    a = destroy(d)
    s = SimScenario("x", (d,), [HamiltonianTerm(0.2, number(d)), HamiltonianTerm(0.05, a + a.dag())],
                    [], 20.0, coherent_state(d, 0.4), step=0.02)
    kets = np.stack([coherent_state(d, 0.4), fock_state(d, 1)], axis=1)
    rk = propagate_kets(s, kets, method="rk4")
    ad = propagate_kets(s, kets, method="dop853", rtol=1e-11)
    assert np.max(np.abs(rk - ad)) < 1e-6
    with pytest.raises(ValueError):
        propagate_kets(s, kets, method="euler")


# ---------------------------------------------------------------- scenarios

def test_kerr_cat_is_stationary():
    s = build_kerr_cat(0.01, 1.5, dim=19)
    r = evolve(s)
    assert r.times[-1] == pytest.approx(10 / (2 * math.pi * 0.01))
    assert r.fidelities["initial"].min() >= 0.999


def test_truncation_rule():
    with pytest.raises(TruncationError):
        build_kerr_cat(0.01, 2.0, dim=20)
    with pytest.raises(TruncationError):
        build_bpcnot(0.002, 2.0, 2.0, dims=(20, 20))
    s = build_bpcnot(0.002, 2.0, 2.0)
    assert s.dims == (26, 26)
    assert build_bpcnot(0.002, 1.0, 1.0).dims == (20, 20)


def test_bpcnot_integrators_agree():
    s = build_bpcnot(0.01, 1.0, 1.0, gate_time=100.0, dims=(14, 14))
    adaptive = bpcnot_gate_fidelity(s, method="dop853")
    fixed = bpcnot_gate_fidelity(s, method="rk4")
    assert adaptive.fidelity == pytest.approx(fixed.fidelity, abs=1e-6)
    for k in adaptive.per_input:
        assert adaptive.per_input[k] == pytest.approx(fixed.per_input[k], abs=1e-6)


def test_bpcnot_without_mixing_leaves_target_alone():
    s = build_bpcnot(0.01, 1.0, 1.0, frame=decoupled_frame(), gate_time=100.0, dims=(14, 14))
    assert not s.params["conditional"]
    g = bpcnot_gate_fidelity(s)
    assert g.fidelity > 1 - 1e-9
    assert g.control_leakage < 1e-9


def test_conditional_rate():
    assert conditional_rate(2.2e-3, 2.0, 2.0) == pytest.approx(2.2e-3 * 2)


def test_four_cat_parameters():
    p = four_cat_parameters(1e-3, 2e-2, -4e-3)
    assert p["kappa_4ph"] == pytest.approx(4 * 1e-6 / 2e-2)
    assert p["alpha4"] == pytest.approx(4.0)
    with pytest.raises(ValueError):
        four_cat_parameters(1e-3, 0.0, 1e-3)


def test_four_cat_vacuum_is_stationary_without_pump():
    s = build_four_cat(1e-3, 0.02, 0.0, dims=(12,))
    r = evolve(s)
    assert abs(r.expectations["n"][-1]) < 1e-12
    assert r.max_trace_error < 1e-6


def test_scenario_from_dict_round_trip():
    s = scenario_from_dict({"kind": "kerr_cat", "K": 0.01, "alpha": [1.0, 0.5], "dim": 16,
                            "total_time": 5.0})
    assert s.params["alpha"] == complex(1.0, 0.5)
    summary, res = run(s)
    assert summary["kind"] == "kerr_cat" and res is not None
    assert summary["final_fidelities"]["initial"] > 0.999
    bp = scenario_from_dict({"kind": "bpcnot", "K": 0.01, "alpha1": 1.0, "alpha2": 1.0, "lambda": 0,
                             "gate_time": 50, "dims": [14, 14]})
    assert not bp.params["conditional"]
    with pytest.raises(ValueError):
        scenario_from_dict({"kind": "teleporter"})
