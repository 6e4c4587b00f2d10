import json
import shutil

import pytest

from powerflow.cli import main
from powerflow.model import DEFAULT_PARAMETERS
from powerflow.panel import write_panel
from powerflow.synthetic import synthesize_growth_panel, synthesize_panel

from cli_cases import FIXTURES, GOLDEN, GOLDEN_CASES, UPDATE, run_case
from conftest import make_panel


@pytest.mark.parametrize("name, argv, outputs", GOLDEN_CASES, ids=[c[0] for c in GOLDEN_CASES])
def test_golden(name, argv, outputs, tmp_path, capsys):
    assert run_case(argv, tmp_path) == 0
    for fname in outputs:
        golden = GOLDEN / name / fname
        if UPDATE:
            golden.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(tmp_path / fname, golden)
        assert (tmp_path / fname).read_bytes() == golden.read_bytes(), f"{name}/{fname} differs from golden"


def write(tmp_path, panel, name="data"):
    d = tmp_path / name
    write_panel(panel, d)
    return str(d)


def test_validate_ok(tmp_path, capsys):
    d = write(tmp_path, synthesize_panel(DEFAULT_PARAMETERS, 4, 2, seed=1))
    assert main(["validate", "--data", d]) == 0
    assert capsys.readouterr().out == "OK\n"


def test_validate_reports_clamps(tmp_path, capsys):
    wealth = {("AAA", 2000): 10.0, ("BBB", 2000): 10.0, ("CCC", 2000): 100.0}
    trade = {("AAA", "CCC", 2000): 30.0, ("BBB", "CCC", 2000): 12.0, ("CCC", "AAA", 2000): 1.0, ("CCC", "BBB", 2000): 1.0}
    d = write(tmp_path, make_panel(wealth, trade))
    assert main(["validate", "--data", d]) == 0
    out = capsys.readouterr().out.splitlines()
    warnings = [line for line in out if line.startswith("WARNING:")]
    assert len(warnings) == 2
    assert all(" clamp: " in w for w in warnings)
    assert {w.split()[2] for w in warnings} == {"AAA", "BBB"}
    assert out[-1] == "OK"


def test_negative_wealth_exit_2(tmp_path, capsys):
    d = tmp_path / "bad"
    write_panel(make_panel({("AAA", 2000): 1.0}), d)
    (d / "wealth.csv").write_text("country,year,wealth\nAAA,2000,-5\n")
    assert main(["validate", "--data", str(d)]) == 2
    err = capsys.readouterr().err
    assert "wealth.csv:2:" in err and "negative" in err


def test_missing_dir_exit_2(tmp_path, capsys):
    assert main(["simulate", "--data", str(tmp_path / "nope"), "--base-year", "2000", "--years", "1"]) == 2


def test_mu_without_episodes_exit_1(tmp_path, capsys):
    d = write(tmp_path, synthesize_panel(DEFAULT_PARAMETERS, 3, 3, seed=1))
    assert main(["calibrate", "mu", "--data", d, "--out", str(tmp_path / "o")]) == 1
    assert "no episodes" in capsys.readouterr().err


def test_bad_params_exit_1(tmp_path, capsys):
    d = write(tmp_path, make_panel({("AAA", 2000): 1.0}))
    p = tmp_path / "p.json"
    p.write_text(json.dumps({"beta": 0.9, "mu": 30, "lambda": 1.0}))
    assert main(["simulate", "--data", d, "--base-year", "2000", "--years", "1", "--params", str(p)]) == 1


def test_simulate_isolated_exact(tmp_path, capsys):
    d = write(tmp_path, make_panel({("AAA", 2000): 100.0}))
    assert main(["simulate", "--data", d, "--base-year", "2000", "--years", "2"]) == 0
    s1 = 1.025 * 100.0
    s2 = 1.025 * s1
    assert capsys.readouterr().out == f"year,country,size\n2000,AAA,100.0\n2001,AAA,{s1!r}\n2002,AAA,{s2!r}\n"


def test_growth_exact_line(tmp_path, capsys):
    d = write(tmp_path, synthesize_growth_panel(1.025, 0.201, 6, 5, seed=3))
    assert main(["calibrate", "growth", "--data", d, "--out", str(tmp_path / "o")]) == 0
    fit = (tmp_path / "o" / "growth_fit.csv").read_text().splitlines()
    assert fit[0] == "intercept,slope,n,rss"
    intercept, slope, n, _ = fit[1].split(",")
    assert float(intercept) == pytest.approx(1.025, abs=1e-10)
    assert float(slope) == pytest.approx(0.201, abs=1e-10)
    assert int(n) == 24


def test_beta_self_generated(tmp_path, capsys):
    d = write(tmp_path, synthesize_panel(DEFAULT_PARAMETERS, 6, 5, seed=8))
    assert main(["calibrate", "beta", "--data", d, "--out", str(tmp_path / "o")]) == 0
    assert capsys.readouterr().out.startswith("beta 1.392 ")


def test_scenario_differs_from_baseline(tmp_path, capsys):
    base_out, scen_out = tmp_path / "base.csv", tmp_path / "scen.csv"
    demo = str(FIXTURES / "demo")
    assert main(["simulate", "--data", demo, "--base-year", "2020", "--years", "1", "--out", str(base_out)]) == 0
    assert main(["scenario", "--data", demo, "--scenario-file", str(FIXTURES / "scenarios" / "ukraine.json"),
                 "--out", str(scen_out)]) == 0
    base = dict(((r.split(",")[0], r.split(",")[1]), float(r.split(",")[2])) for r in base_out.read_text().splitlines()[1:])
    scen = dict(((r.split(",")[0], r.split(",")[1]), float(r.split(",")[2])) for r in scen_out.read_text().splitlines()[1:])
    assert base[("2020", "UKR")] == scen[("2020", "UKR")]
    assert scen[("2021", "UKR")] < base[("2021", "UKR")]
    assert scen[("2021", "RUS")] < base[("2021", "RUS")]


def test_bad_grid_exit_2(tmp_path, capsys):
    d = write(tmp_path, synthesize_panel(DEFAULT_PARAMETERS, 3, 3, seed=1))
    assert main(["calibrate", "beta", "--data", d, "--grid", "1.1,2", "--out", str(tmp_path)]) == 2
