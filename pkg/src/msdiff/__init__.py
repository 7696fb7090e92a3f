"""Conservative, energy-stable, positivity-preserving solver kit for
multicomponent (Maxwell-Stefan) diffusion on periodic staggered grids."""

from .config import ConfigError, RunConfig, load_config, paper_1d_config, paper_2d_config
from .diagnostics import (AuditSummary, ConvergenceReport, TruncationReport,
                          TwoSpeciesHeatMode, audit_run, spatial_convergence,
                          temporal_convergence, truncation_probe)
from .grid import GridSpec
from .mixture import FrictionMatrix, assemble_D_hat
from .stepper import (NewtonError, SimulationState, StepConfig, advance,
                      initial_state, take_step)

__version__ = "1.0.0"

__all__ = [
    "AuditSummary", "ConfigError", "ConvergenceReport", "FrictionMatrix",
    "GridSpec", "NewtonError", "RunConfig", "SimulationState", "StepConfig",
    "TruncationReport", "TwoSpeciesHeatMode", "advance", "assemble_D_hat",
    "audit_run", "initial_state", "load_config", "paper_1d_config",
    "paper_2d_config", "spatial_convergence", "take_step",
    "temporal_convergence", "truncation_probe", "__version__",
]
