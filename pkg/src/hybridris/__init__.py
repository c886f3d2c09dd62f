"""Link-level simulator for RIS-assisted multi-user MISO downlinks with
no-RIS, dormant, passive, active and hybrid (controller-driven) operation."""

from .channel import (LOS_MODEL, NLOS_MODEL, ChannelSet, PathLossModel, SceneConfig, Scenario,
                      dbm_to_watts, realize_channels, watts_to_dbm)
from .config import ConfigError, load_config
from .controller import (ControllerThresholds, MeasurementReport, ReportClass, classify_report,
                         estimate_tau, select_mode)
from .optimize import (OptimizerOptions, PrecoderKind, Solution, optimize_active,
                       optimize_passive, solve_fixed, split_search)
from .signal import LinkBudget, Precoder, RisMode, RisState, evaluate_se, power_account, sinr
from .sim import SweepConfig, SweepResult, run_hybrid_sweep, run_point, run_sweep, write_csv

__version__ = "0.1.0"
