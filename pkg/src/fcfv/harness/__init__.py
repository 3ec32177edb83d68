"""Study drivers, configuration, output writers and the ``fcfv`` CLI."""

from .checks import check_adaptivity, check_convergence, check_robustness, check_tau_sweep
from .config import ConfigError, StudyConfig, load_config
from .output import emit_plotdata, plot_convergence, write_convergence, write_history, write_solution
from .studies import (
    ConvergenceRecord,
    LevelRecord,
    RobustnessResult,
    TauSweep,
    fit_rate,
    run_adaptivity,
    run_convergence,
    run_robustness,
    run_tau_sweep,
)

__all__ = [
    "ConfigError", "ConvergenceRecord", "LevelRecord", "RobustnessResult", "StudyConfig",
    "TauSweep", "check_adaptivity", "check_convergence", "check_robustness", "check_tau_sweep",
    "emit_plotdata", "fit_rate", "load_config", "plot_convergence", "run_adaptivity",
    "run_convergence", "run_robustness", "run_tau_sweep", "write_convergence", "write_history",
    "write_solution",
]
