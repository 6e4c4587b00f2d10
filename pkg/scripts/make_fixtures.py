"""Regenerate the synthetic fixtures under ``fixtures/``.

Usage: python3 scripts/make_fixtures.py [OUT_DIR]
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from powerflow.model import DEFAULT_PARAMETERS, CountryRegistry
from powerflow.panel import PanelData, write_panel
from powerflow.scenario import (
    ReallocateTrade,
    RemoveConflict,
    Scenario,
    ScaleTrade,
    SetConflict,
    TradeScope,
    Transfer,
    save_scenario,
)
from powerflow.synthetic import synthesize_panel

DEMO_CODES = ("CHN", "DEU", "FRA", "GBR", "IND", "JPN", "RUS", "SYR", "TUR", "UKR", "USA")


def demo_panel() -> PanelData:
    """Eleven named states, 2000-2020, with one interstate and one civil war."""
    conflicts = {("RUS", "UKR", y): 15.0 for y in (2014, 2015)}
    conflicts.update({("SYR", "SYR", y): 4.0 for y in range(2012, 2017)})
    wealth0 = {
        "CHN": 9000.0, "DEU": 4000.0, "FRA": 3500.0, "GBR": 3600.0, "IND": 3000.0,
        "JPN": 5000.0, "RUS": 2000.0, "SYR": 120.0, "TUR": 900.0, "UKR": 400.0, "USA": 15000.0,
    }
    return synthesize_panel(
        DEFAULT_PARAMETERS, n_years=21, start_year=2000, seed=2024, codes=DEMO_CODES,
        conflicts=conflicts, initial_wealth=wealth0, density=0.8, trade_share=(0.01, 0.08),
    )


def syria_panel() -> PanelData:
    """Two states with steady trade; SYR fights itself 2012-2016."""
    years = range(2000, 2021)
    wealth = {("SYR", y): 100.0 for y in years}
    wealth.update({("TUR", y): 800.0 for y in years})
    trade = {}
    for y in years:
        trade[("SYR", "TUR", y)] = 5.0
        trade[("TUR", "SYR", y)] = 5.0
    milex = {("SYR", y): 3.0 for y in years}
    conflicts = {("SYR", "SYR", y): 2.0 for y in range(2012, 2017)}
    return PanelData(CountryRegistry(("SYR", "TUR")), wealth, trade, milex, conflicts)


def main(out: Path) -> None:
    write_panel(demo_panel(), out / "demo")
    write_panel(syria_panel(), out / "syria")
    (out / "params.json").write_text(json.dumps(DEFAULT_PARAMETERS.to_dict(), indent=2) + "\n")
    episodes = [{"country": "SYR", "war_years": list(range(2012, 2017))}]
    (out / "episodes.json").write_text(json.dumps(episodes, indent=2) + "\n")
    scen = out / "scenarios"
    scen.mkdir(parents=True, exist_ok=True)
    save_scenario(
        Scenario("syria-peace", 2000, 20, (RemoveConflict("SYR", "SYR", (2012, 2016)),)),
        scen / "syria_peace.json",
    )
    save_scenario(
        Scenario("ukraine-2020", 2020, 1, (
            SetConflict("RUS", "UKR", (2020, 2020), 100.0),
            SetConflict("UKR", "RUS", (2020, 2020), 25.0),
            ScaleTrade(TradeScope("country-all", ("RUS",)), (2020, 2020), 0.8),
            ScaleTrade(TradeScope("country-all", ("UKR",)), (2020, 2020), 0.5),
            Transfer("USA", "UKR", 2020, 20.0),
        )),
        scen / "ukraine.json",
    )
    save_scenario(
        Scenario("coalition-shift", 2020, 0, (
            ReallocateTrade(("CHN", "RUS"), ("DEU", "FRA", "GBR", "JPN", "USA"), 0.1),
        )),
        scen / "coalition_shift.json",
    )


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "fixtures")
