"""Design and verification tools for multi-loop SQUID nonlinear elements."""
from .circuit import CircuitError, CircuitSpec, JosephsonBranch, circuit_from_dict, load_circuit, preset
from .designer import DesignProblem, DesignSolution, canned_problem, design, verify_design
from .drivetools import bessel_decompose, kerr_cat_budget, strong_drive_shifts
from .potential import PotentialSeries, expand, find_minimum, u_static, u_total
from .quantize import ModeQuantization, analyze, quantize, sweep_spectrum, transition_energies
from .tables import ReportRow, regression_report
from .wao import WaoReport, wao_check

__version__ = "0.1.0"

__all__ = [
    "CircuitError", "CircuitSpec", "JosephsonBranch", "circuit_from_dict", "load_circuit", "preset",
    "DesignProblem", "DesignSolution", "canned_problem", "design", "verify_design",
    "bessel_decompose", "kerr_cat_budget", "strong_drive_shifts",
    "PotentialSeries", "expand", "find_minimum", "u_static", "u_total",
    "ModeQuantization", "analyze", "quantize", "sweep_spectrum", "transition_energies",
    "ReportRow", "regression_report", "WaoReport", "wao_check",
]
