"""Bosonic operators, coupled-mode transforms and Lindblad evolution."""
from .bogoliubov import CoupledModeFrame, bogoliubov, decoupled_frame
from .lindblad import (
    Dissipator, HamiltonianTerm, IntegrationError, SimResult, SimScenario, evolve, propagate_kets,
)
from .operators import (
    FockOperator, cat_basis, cat_state, coherent_state, create, destroy, dm, expect, fock_state,
    identity, number, partial_trace, state_fidelity, tensor,
)
from .scenarios import (
    GateReport, TruncationError, bpcnot_gate_fidelity, build_bpcnot, build_four_cat,
    build_kerr_cat, conditional_rate, driven_conditional_rate, four_cat_parameters, run,
    scenario_from_dict,
)

__all__ = [
    "CoupledModeFrame", "bogoliubov", "decoupled_frame",
    "Dissipator", "HamiltonianTerm", "IntegrationError", "SimResult", "SimScenario", "evolve",
    "propagate_kets",
    "FockOperator", "cat_basis", "cat_state", "coherent_state", "create", "destroy", "dm", "expect",
    "fock_state", "identity", "number", "partial_trace", "state_fidelity", "tensor",
    "GateReport", "TruncationError", "bpcnot_gate_fidelity", "build_bpcnot", "build_four_cat",
    "build_kerr_cat", "conditional_rate", "driven_conditional_rate", "four_cat_parameters", "run",
    "scenario_from_dict",
]
