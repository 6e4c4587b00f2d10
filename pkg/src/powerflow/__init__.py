"""National power as flow through a network of states."""

from powerflow.calibration import (
    BetaFit,
    GrowthFit,
    MuEstimate,
    estimate_mu,
    fit_beta,
    fit_growth_regression,
    peacetime_growth,
)
from powerflow.errors import CalibrationError, DataError, ModelError, PowerflowError, ScenarioError
from powerflow.model import (
    DEFAULT_PARAMETERS,
    CountryRegistry,
    Parameters,
    PowerStructure,
    TacticMatrix,
    constructive_delta,
    destructive_delta,
    step,
    validate,
)
from powerflow.panel import PanelData, build_tactics, civil_war_diagonal, load_panel, load_panel_dir, write_panel
from powerflow.scenario import Scenario, apply_scenario, load_scenario
from powerflow.simulation import BacktestReport, Trajectory, backtest, coalition_power, simulate_dynamic, simulate_naive

__version__ = "0.1.0"

__all__ = [
    "BacktestReport", "BetaFit", "CalibrationError", "CountryRegistry", "DataError", "GrowthFit",
    "ModelError", "MuEstimate", "DEFAULT_PARAMETERS", "PanelData", "Parameters", "PowerStructure",
    "PowerflowError", "Scenario", "ScenarioError", "TacticMatrix", "Trajectory", "apply_scenario",
    "backtest", "build_tactics", "civil_war_diagonal", "coalition_power", "constructive_delta",
    "destructive_delta", "estimate_mu", "fit_beta", "fit_growth_regression", "load_panel",
    "load_panel_dir", "load_scenario", "peacetime_growth", "simulate_dynamic", "simulate_naive",
    "step", "validate", "write_panel",
]
