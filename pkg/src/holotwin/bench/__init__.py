from .evaluate import METHODS, ConfigurationError, EvalReport, evaluate, evaluate_pair, sweep_csv, z_sweep
from .plots import plot_emit, plot_eval, plot_timing, plot_zsweep
from .timing import TimingReport, hardware_descriptor, time_methods

__all__ = [
    "METHODS",
    "ConfigurationError",
    "EvalReport",
    "TimingReport",
    "evaluate",
    "evaluate_pair",
    "hardware_descriptor",
    "plot_emit",
    "plot_eval",
    "plot_timing",
    "plot_zsweep",
    "sweep_csv",
    "time_methods",
    "z_sweep",
]
