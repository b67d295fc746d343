"""Simulation of elasticity policies on component-based architecture models."""

from .arch_text import load_architecture, read_architecture
from .diagnostics import (AnalysisError, ConfigError, Diagnostic, DiagnosticError, SimulationError,
                          ValidationError)
from .enactment import check_constraints, enact_policy
from .metrics import MetricSummary, compute_metrics
from .monitor import Monitor, TriggerResult, evaluate_trigger
from .runtime import (identify_slingshot, scale_in_bottom_up, scale_in_top_down,
                      scale_out_bottom_up, scale_out_top_down)
from .sim import SimulationResult, run_simulation
from .spd import apply_adjustment, validate_spd
from .spd_text import export_notation_dot, parse_spd, read_spd, render_spd

__version__ = "0.1.0"

__all__ = [
    "AnalysisError", "ConfigError", "Diagnostic", "DiagnosticError", "MetricSummary", "Monitor",
    "SimulationError", "SimulationResult", "TriggerResult", "ValidationError", "apply_adjustment",
    "check_constraints", "compute_metrics", "enact_policy", "evaluate_trigger",
    "export_notation_dot", "identify_slingshot", "load_architecture", "parse_spd",
    "read_architecture", "read_spd", "render_spd", "run_simulation", "scale_in_bottom_up",
    "scale_in_top_down", "scale_out_bottom_up", "scale_out_top_down", "validate_spd",
]
