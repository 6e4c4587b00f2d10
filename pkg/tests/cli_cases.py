"""CLI golden cases shared by the CLI tests and the determinism criterion."""

import os
from pathlib import Path

from powerflow.cli import main

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"
UPDATE = os.environ.get("POWERFLOW_UPDATE_GOLDEN") == "1"

# (name, argv, outputs) where outputs are file names written under the temp dir
GOLDEN_CASES = [
    ("simulate_naive", ["simulate", "--data", "{demo}", "--base-year", "2010", "--years", "5", "--out", "{tmp}/naive.csv"], ["naive.csv"]),
    ("simulate_dynamic", ["simulate", "--data", "{demo}", "--base-year", "2010", "--years", "5", "--mode", "dynamic", "--out", "{tmp}/dyn.csv"], ["dyn.csv"]),
    ("scenario_ukraine", ["scenario", "--data", "{demo}", "--scenario-file", "{fx}/scenarios/ukraine.json", "--out", "{tmp}/ukr.csv"], ["ukr.csv"]),
    ("scenario_syria", ["scenario", "--data", "{syria}", "--scenario-file", "{fx}/scenarios/syria_peace.json", "--mode", "dynamic", "--out", "{tmp}/peace.csv"], ["peace.csv"]),
    ("backtest", ["backtest", "--data", "{demo}", "--base-year", "2000", "--years", "20", "--params", "{fx}/params.json", "--out", "{tmp}/bt.csv"], ["bt.csv", "bt_metrics.csv", "bt_errors.csv"]),
    ("calibrate_mu", ["calibrate", "mu", "--data", "{demo}", "--episodes", "{fx}/episodes.json", "--out", "{tmp}"], ["mu_report.csv"]),
    ("calibrate_growth", ["calibrate", "growth", "--data", "{demo}", "--out", "{tmp}"], ["growth_fit.csv"]),
    ("calibrate_beta", ["calibrate", "beta", "--data", "{demo}", "--grid", "1.3,1.5,0.001", "--out", "{tmp}"], ["beta_curve.csv"]),
    ("export_matrix", ["export", "matrix", "--data", "{demo}", "--base-year", "2020", "--out", "{tmp}/m.csv"], ["m.csv"]),
    ("export_graph", ["export", "graph", "--data", "{demo}", "--base-year", "2020", "--out", "{tmp}/g.dot"], ["g.dot"]),
]


def run_case(argv, tmp):
    subs = {"demo": FIXTURES / "demo", "syria": FIXTURES / "syria", "fx": FIXTURES, "tmp": tmp}
    tmp.mkdir(parents=True, exist_ok=True)
    return main([a.format(**subs) for a in argv])
