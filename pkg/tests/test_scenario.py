import json
from collections import defaultdict

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from powerflow.errors import DataError, ScenarioError
from powerflow.scenario import (
    ReallocateTrade,
    RemoveConflict,
    Scenario,
    ScaleTrade,
    SetConflict,
    TradeScope,
    Transfer,
    apply_scenario,
    load_scenario,
    save_scenario,
)
from powerflow.synthetic import synthesize_panel
from powerflow.model import DEFAULT_PARAMETERS

from conftest import make_panel


def outflows(trade, year):
    out = defaultdict(float)
    for (r, _p, y), v in trade.items():
        if y == year:
            out[r] += v
    return dict(out)


def xyz_panel():
    wealth = {(c, 2020): 100.0 for c in ("XXX", "YYY", "ZZZ")}
    trade = {
        ("XXX", "ZZZ", 2020): 10.0, ("ZZZ", "XXX", 2020): 4.0,
        ("XXX", "YYY", 2020): 5.0, ("YYY", "XXX", 2020): 5.0,
        ("YYY", "ZZZ", 2020): 2.0, ("ZZZ", "YYY", 2020): 2.0,
    }
    return make_panel(wealth, trade)


class TestConflictEdits:
    def test_remove(self):
        conflicts = {("SYR", "SYR", y): 3.0 for y in range(2011, 2021)}
        conflicts[("SYR", "SYR", 2010)] = 1.0
        wealth = {("SYR", y): 50.0 for y in range(2010, 2021)}
        panel = make_panel(wealth, conflicts=conflicts)
        sc = Scenario("no-war", 2010, 10, (RemoveConflict("SYR", "SYR", (2011, 2020)),))
        out = apply_scenario(panel, sc)
        assert not any(k[0] == "SYR" and 2011 <= k[2] <= 2020 for k in out.conflicts)
        assert out.conflicts == {("SYR", "SYR", 2010): 1.0}

    def test_remove_then_set_restores(self):
        panel = synthesize_panel(
            DEFAULT_PARAMETERS, 4, 5, seed=1, conflicts={("XAA", "XAB", 1997): 7.5, ("XAA", "XAB", 1998): 7.5}
        )
        sc = Scenario("rt", 1996, 4, (
            RemoveConflict("XAA", "XAB", (1997, 1998)),
            SetConflict("XAA", "XAB", (1997, 1998), 7.5),
        ))
        assert apply_scenario(panel, sc) == panel

    def test_set_overrides(self):
        panel = xyz_panel()
        out = apply_scenario(panel, Scenario("s", 2020, 1, (SetConflict("ZZZ", "YYY", (2020, 2021), 3.0),)))
        assert out.conflicts == {("ZZZ", "YYY", 2020): 3.0, ("ZZZ", "YYY", 2021): 3.0}


class TestTradeEdits:
    def test_scale_country_all(self):
        panel = xyz_panel()
        sc = Scenario("rus", 2020, 1, (ScaleTrade(TradeScope("country-all", ("XXX",)), (2020, 2020), 0.8),))
        out = apply_scenario(panel, sc)
        for key, v in panel.trade.items():
            expected = v * 0.8 if "XXX" in key[:2] else v
            assert out.trade[key] == expected

    def test_scale_dyad_materializes_mirror(self):
        panel = make_panel({("AAA", 2020): 1.0, ("BBB", 2020): 1.0}, {("AAA", "BBB", 2020): 10.0})
        sc = Scenario("d", 2020, 0, (ScaleTrade(TradeScope("dyad", ("AAA",), ("BBB",)), (2020, 2020), 0.5),))
        out = apply_scenario(panel, sc)
        assert out.trade == {("AAA", "BBB", 2020): 5.0, ("BBB", "AAA", 2020): 5.0}

    def test_reallocate_example(self):
        sc = Scenario("c", 2020, 0, (ReallocateTrade(("XXX", "YYY"), ("ZZZ",), 0.10),))
        out = apply_scenario(xyz_panel(), sc)
        assert out.trade[("XXX", "ZZZ", 2020)] == pytest.approx(9.0, abs=1e-12)
        assert out.trade[("XXX", "YYY", 2020)] == pytest.approx(6.0, abs=1e-12)

    def test_reallocate_uniform_without_intra_flows(self):
        wealth = {(c, 2020): 1.0 for c in ("AAA", "BBB", "CCC", "DDD")}
        panel = make_panel(wealth, {("AAA", "DDD", 2020): 10.0, ("DDD", "AAA", 2020): 10.0})
        sc = Scenario("u", 2020, 0, (ReallocateTrade(("AAA", "BBB", "CCC"), ("DDD",), 0.5),))
        out = apply_scenario(panel, sc)
        assert out.trade[("AAA", "BBB", 2020)] == 2.5
        assert out.trade[("AAA", "CCC", 2020)] == 2.5
        # lone member of B has nowhere to move its trade
        assert out.trade[("DDD", "AAA", 2020)] == 10.0

    def test_transfer(self):
        panel = xyz_panel()
        out = apply_scenario(panel, Scenario("aid", 2020, 0, (Transfer("YYY", "XXX", 2020, 20.0),)))
        assert out.trade[("YYY", "XXX", 2020)] == 25.0
        assert out.trade[("XXX", "YYY", 2020)] == 5.0

    def test_transfer_new_dyad_keeps_reverse_empty(self):
        panel = make_panel({("AAA", 2020): 1.0, ("BBB", 2020): 1.0})
        out = apply_scenario(panel, Scenario("aid", 2020, 0, (Transfer("AAA", "BBB", 2020, 3.0),)))
        assert out.trade == {("AAA", "BBB", 2020): 3.0, ("BBB", "AAA", 2020): 0.0}

    def test_order_matters(self):
        panel = xyz_panel()
        scale = ScaleTrade(TradeScope("dyad", ("XXX",), ("YYY",)), (2020, 2020), 0.0)
        aid = Transfer("YYY", "XXX", 2020, 1.0)
        a = apply_scenario(panel, Scenario("a", 2020, 0, (scale, aid)))
        b = apply_scenario(panel, Scenario("b", 2020, 0, (aid, scale)))
        assert a.trade[("YYY", "XXX", 2020)] == 1.0
        assert b.trade[("YYY", "XXX", 2020)] == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 1.0), st.integers(1, 3))
def test_reallocate_conserves_outflow_and_is_pure(seed, fraction, split):
    panel = synthesize_panel(DEFAULT_PARAMETERS, 6, 3, seed=seed, balanced=False, density=0.6)
    codes = panel.registry.codes
    before = dict(panel.trade)
    sc = Scenario("r", 1996, 2, (ReallocateTrade(codes[:split], codes[split:5], fraction),))
    out = apply_scenario(panel, sc)
    assert panel.trade == before
    mirrored = apply_scenario(panel, Scenario("m", 1996, 2, (ReallocateTrade(codes[:split], codes[split:5], 0.0),)))
    for y in panel.years:
        a, b = outflows(mirrored.trade, y), outflows(out.trade, y)
        assert a.keys() == b.keys()
        for c in a:
            assert b[c] == pytest.approx(a[c], rel=1e-9, abs=1e-9)


class TestErrors:
    def test_unknown_country(self):
        with pytest.raises(ScenarioError, match="unknown country 'QQQ'"):
            apply_scenario(xyz_panel(), Scenario("x", 2020, 0, (SetConflict("QQQ", "XXX", (2020, 2020), 1.0),)))

    def test_overlapping_coalitions(self):
        with pytest.raises(ScenarioError, match="overlapping"):
            Scenario.from_dict({"name": "o", "base_year": 2020, "horizon": 0, "edits": [
                {"kind": "reallocate_trade", "coalition_a": ["XXX", "YYY"], "coalition_b": ["YYY"], "fraction": 0.1}
            ]})

    @pytest.mark.parametrize(
        "edit, match",
        [
            ({"kind": "scale_trade", "scope": {"type": "dyad", "a": "XXX", "b": "YYY"}, "years": [2020, 2020], "factor": -1}, "non-negative"),
            ({"kind": "reallocate_trade", "coalition_a": ["XXX"], "coalition_b": ["YYY"], "fraction": 1.5}, r"\[0, 1\]"),
            ({"kind": "set_conflict", "aggressor": "XXX", "target": "YYY", "years": [2020, 2030], "expenditure": 1}, "outside"),
            ({"kind": "transfer", "donor": "XXX", "recipient": "YYY", "year": 2020, "amount": 1, "channel": "destructive"}, "channel"),
            ({"kind": "nuke"}, "unknown edit kind"),
            ({"kind": "remove_conflict", "aggressor": "XXX", "years": [2020, 2020]}, "missing field 'target'"),
            ({"kind": "scale_trade", "scope": {"type": "galaxy"}, "years": [2020, 2020], "factor": 1}, "scope type"),
        ],
    )
    def test_bad_edits(self, edit, match):
        with pytest.raises(ScenarioError, match=match):
            Scenario.from_dict({"name": "e", "base_year": 2020, "horizon": 1, "edits": [edit]})

    def test_bad_json(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text('{"name": "x",\n "base_year": }')
        with pytest.raises(DataError) as info:
            load_scenario(p)
        assert info.value.line == 2


def test_json_round_trip(tmp_path):
    sc = Scenario("all", 2020, 2, (
        SetConflict("RUS", "UKR", (2020, 2021), 100.0),
        RemoveConflict("SYR", "SYR", (2020, 2022)),
        ScaleTrade(TradeScope("country-all", ("RUS",)), (2020, 2020), 0.8),
        ScaleTrade(TradeScope("coalition-pair", ("CHN", "RUS"), ("GBR", "USA")), (2021, 2021), 0.5),
        ReallocateTrade(("CHN", "RUS"), ("GBR", "USA"), 0.1),
        Transfer("USA", "UKR", 2020, 20.0),
    ))
    p = tmp_path / "s.json"
    save_scenario(sc, p)
    assert load_scenario(p) == sc
    assert json.loads(p.read_text())["edits"][2]["scope"] == {"type": "country-all", "country": "RUS"}
