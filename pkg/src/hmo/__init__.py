"""Hybrid multi-observer supervision toolkit.

Simulates a bank of state observers supervised by monitor signals: the
supervisor flows while the active monitor stays minimal and switches to the
best mode otherwise, with optional estimate resets at switching times.
"""

from .config import (ConfigError, ScenarioConfig, Scenario, load_config,
                     build_scenario, bundled_config_path)
from .hybrid import (HybridArc, HybridTime, SolverConfig, SolverError,
                     NonFiniteState, StepTooLarge)
from .metrics import RunReport, build_report
from .runner import (RunResult, McResult, run_scenario, montecarlo,
                     verify_assumptions, design_gains, write_trace_csv,
                     write_mc_csv)
from .supervisor import Supervisor, SupervisorConfig, TraceView

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ScenarioConfig", "Scenario", "load_config",
    "build_scenario", "bundled_config_path",
    "HybridArc", "HybridTime", "SolverConfig", "SolverError",
    "NonFiniteState", "StepTooLarge",
    "RunReport", "build_report",
    "RunResult", "McResult", "run_scenario", "montecarlo",
    "verify_assumptions", "design_gains", "write_trace_csv", "write_mc_csv",
    "Supervisor", "SupervisorConfig", "TraceView",
    "__version__",
]
