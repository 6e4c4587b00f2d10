"""Declarative what-if edits applied to a panel before simulation.

A scenario file is JSON::

    {
      "name": "ukraine-2021",
      "base_year": 2020,
      "horizon": 1,
      "edits": [
        {"kind": "set_conflict", "aggressor": "RUS", "target": "UKR",
         "years": [2020, 2020], "expenditure": 100},
        {"kind": "scale_trade", "scope": {"type": "country-all", "country": "RUS"},
         "years": [2020, 2020], "factor": 0.8},
        {"kind": "transfer", "donor": "USA", "recipient": "UKR", "year": 2020,
         "amount": 20, "channel": "constructive"}
      ]
    }

Edits apply in list order and each sees the output of the previous one.
Trade edits act on directed flows, so before touching a year they first
write out any direction that the model would otherwise mirror from the
partner's report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from powerflow.errors import DataError, ScenarioError
from powerflow.panel import PanelData

YearSpan = tuple[int, int]


def _span(value, field_name: str) -> YearSpan:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise ScenarioError(f"{field_name} must be a [start, end] pair of integer years")
    start, end = value
    if start > end:
        raise ScenarioError(f"{field_name} start {start} is after end {end}")
    return (start, end)


def _years(span: YearSpan) -> range:
    return range(span[0], span[1] + 1)


@dataclass(frozen=True)
class SetConflict:
    aggressor: str
    target: str
    years: YearSpan
    expenditure: float
    kind = "set_conflict"

    def countries(self):
        return (self.aggressor, self.target)


@dataclass(frozen=True)
class RemoveConflict:
    aggressor: str
    target: str
    years: YearSpan
    kind = "remove_conflict"

    def countries(self):
        return (self.aggressor, self.target)


@dataclass(frozen=True)
class TradeScope:
    """Which flows a trade edit touches.

    ``dyad``: both directions between ``a[0]`` and ``b[0]``.
    ``country-all``: every flow into or out of ``a[0]``.
    ``coalition-pair``: both directions between members of ``a`` and ``b``.
    """

    type: str
    a: tuple[str, ...]
    b: tuple[str, ...] = ()

    def matches(self, reporter: str, partner: str) -> bool:
        if self.type == "country-all":
            return self.a[0] in (reporter, partner)
        return (reporter in self.a and partner in self.b) or (reporter in self.b and partner in self.a)

    def countries(self):
        return self.a + self.b

    def to_dict(self) -> dict:
        if self.type == "dyad":
            return {"type": "dyad", "a": self.a[0], "b": self.b[0]}
        if self.type == "country-all":
            return {"type": "country-all", "country": self.a[0]}
        return {"type": "coalition-pair", "a": list(self.a), "b": list(self.b)}

    @classmethod
    def from_dict(cls, d: dict) -> "TradeScope":
        if not isinstance(d, dict):
            raise ScenarioError("scope must be an object")
        kind = d.get("type")
        try:
            if kind == "dyad":
                _only(d, {"type", "a", "b"}, "dyad scope")
                if d["a"] == d["b"]:
                    raise ScenarioError("dyad scope needs two different countries")
                return cls("dyad", (d["a"],), (d["b"],))
            if kind == "country-all":
                _only(d, {"type", "country"}, "country-all scope")
                return cls("country-all", (d["country"],))
            if kind == "coalition-pair":
                _only(d, {"type", "a", "b"}, "coalition-pair scope")
                a, b = tuple(d["a"]), tuple(d["b"])
                _check_coalitions(a, b)
                return cls("coalition-pair", a, b)
        except KeyError as exc:
            raise ScenarioError(f"scope missing field {exc.args[0]!r}") from None
        raise ScenarioError(f"unknown scope type {kind!r}")


@dataclass(frozen=True)
class ScaleTrade:
    scope: TradeScope
    years: YearSpan
    factor: float
    kind = "scale_trade"

    def countries(self):
        return self.scope.countries()


@dataclass(frozen=True)
class ReallocateTrade:
    """Move ``fraction`` of each member's exports to the other coalition onto its own.

    Applies to every year of the scenario window.
    """

    coalition_a: tuple[str, ...]
    coalition_b: tuple[str, ...]
    fraction: float
    kind = "reallocate_trade"

    def countries(self):
        return self.coalition_a + self.coalition_b


@dataclass(frozen=True)
class Transfer:
    donor: str
    recipient: str
    year: int
    amount: float
    channel: str = "constructive"
    kind = "transfer"

    def countries(self):
        return (self.donor, self.recipient)


Edit = Union[SetConflict, RemoveConflict, ScaleTrade, ReallocateTrade, Transfer]


def _only(d: dict, allowed: set[str], what: str) -> None:
    extra = set(d).difference(allowed)
    if extra:
        raise ScenarioError(f"{what}: unknown fields {sorted(extra)}")


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{name} must be a number")
    return float(value)


def _check_coalitions(a, b) -> None:
    if not a or not b:
        raise ScenarioError("coalitions must be non-empty")
    if len(set(a)) != len(a) or len(set(b)) != len(b):
        raise ScenarioError("coalition lists a country twice")
    overlap = set(a) & set(b)
    if overlap:
        raise ScenarioError(f"overlapping coalitions: {sorted(overlap)}")


def edit_from_dict(d: dict) -> Edit:
    if not isinstance(d, dict):
        raise ScenarioError("each edit must be an object")
    kind = d.get("kind")
    try:
        if kind == "set_conflict":
            _only(d, {"kind", "aggressor", "target", "years", "expenditure"}, kind)
            e = SetConflict(d["aggressor"], d["target"], _span(d["years"], "years"),
                            _number(d["expenditure"], "expenditure"))
            if e.expenditure < 0:
                raise ScenarioError("expenditure must be non-negative")
            return e
        if kind == "remove_conflict":
            _only(d, {"kind", "aggressor", "target", "years"}, kind)
            return RemoveConflict(d["aggressor"], d["target"], _span(d["years"], "years"))
        if kind == "scale_trade":
            _only(d, {"kind", "scope", "years", "factor"}, kind)
            e = ScaleTrade(TradeScope.from_dict(d["scope"]), _span(d["years"], "years"),
                           _number(d["factor"], "factor"))
            if e.factor < 0:
                raise ScenarioError("factor must be non-negative")
            return e
        if kind == "reallocate_trade":
            _only(d, {"kind", "coalition_a", "coalition_b", "fraction"}, kind)
            a, b = tuple(d["coalition_a"]), tuple(d["coalition_b"])
            _check_coalitions(a, b)
            frac = _number(d["fraction"], "fraction")
            if not 0.0 <= frac <= 1.0:
                raise ScenarioError("fraction must be in [0, 1]")
            return ReallocateTrade(a, b, frac)
        if kind == "transfer":
            _only(d, {"kind", "donor", "recipient", "year", "amount", "channel"}, kind)
            channel = d.get("channel", "constructive")
            if channel != "constructive":
                raise ScenarioError(f"unsupported transfer channel {channel!r}")
            if d["donor"] == d["recipient"]:
                raise ScenarioError("transfer donor and recipient must differ")
            year = d["year"]
            if not isinstance(year, int) or isinstance(year, bool):
                raise ScenarioError("year must be an integer")
            amount = _number(d["amount"], "amount")
            if amount < 0:
                raise ScenarioError("amount must be non-negative")
            return Transfer(d["donor"], d["recipient"], year, amount, channel)
    except KeyError as exc:
        raise ScenarioError(f"{kind} edit missing field {exc.args[0]!r}") from None
    raise ScenarioError(f"unknown edit kind {kind!r}")


def edit_to_dict(e: Edit) -> dict:
    if isinstance(e, SetConflict):
        return {"kind": e.kind, "aggressor": e.aggressor, "target": e.target,
                "years": list(e.years), "expenditure": e.expenditure}
    if isinstance(e, RemoveConflict):
        return {"kind": e.kind, "aggressor": e.aggressor, "target": e.target, "years": list(e.years)}
    if isinstance(e, ScaleTrade):
        return {"kind": e.kind, "scope": e.scope.to_dict(), "years": list(e.years), "factor": e.factor}
    if isinstance(e, ReallocateTrade):
        return {"kind": e.kind, "coalition_a": list(e.coalition_a),
                "coalition_b": list(e.coalition_b), "fraction": e.fraction}
    return {"kind": e.kind, "donor": e.donor, "recipient": e.recipient, "year": e.year,
            "amount": e.amount, "channel": e.channel}


@dataclass(frozen=True)
class Scenario:
    name: str
    base_year: int
    horizon: int
    edits: tuple[Edit, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "edits", tuple(self.edits))
        if self.horizon < 0:
            raise ScenarioError("horizon must be non-negative")
        lo, hi = self.window
        for e in self.edits:
            spans = [e.years] if hasattr(e, "years") else []
            if isinstance(e, Transfer):
                spans = [(e.year, e.year)]
            for start, end in spans:
                if start < lo or end > hi:
                    raise ScenarioError(
                        f"{e.kind} years {start}-{end} fall outside the scenario window {lo}-{hi}"
                    )

    @property
    def window(self) -> YearSpan:
        return (self.base_year, self.base_year + self.horizon)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "base_year": self.base_year,
            "horizon": self.horizon,
            "edits": [edit_to_dict(e) for e in self.edits],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if not isinstance(d, dict):
            raise ScenarioError("scenario must be an object")
        _only(d, {"name", "base_year", "horizon", "edits"}, "scenario")
        try:
            name, base, horizon = d["name"], d["base_year"], d["horizon"]
        except KeyError as exc:
            raise ScenarioError(f"scenario missing field {exc.args[0]!r}") from None
        if not isinstance(base, int) or not isinstance(horizon, int):
            raise ScenarioError("base_year and horizon must be integers")
        edits = d.get("edits", [])
        if not isinstance(edits, list):
            raise ScenarioError("edits must be a list")
        return cls(str(name), base, horizon, tuple(edit_from_dict(e) for e in edits))


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open: {exc.strerror}", p) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg}", p, exc.lineno) from exc
    return Scenario.from_dict(data)


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n", encoding="utf-8")


def _materialize_mirrors(trade: dict, year: int) -> None:
    reported = [(r, p) for (r, p, y) in trade if y == year]
    have = set(reported)
    for r, p in reported:
        if (p, r) not in have:
            trade[(p, r, year)] = trade[(r, p, year)]


def _reallocate(trade: dict, year: int, own: tuple[str, ...], other: tuple[str, ...], fraction: float) -> None:
    for m in own:
        mates = [k for k in own if k != m]
        if not mates:
            continue
        moved = 0.0
        for o in other:
            key = (m, o, year)
            if key in trade and trade[key] > 0:
                moved += fraction * trade[key]
                trade[key] = trade[key] * (1.0 - fraction)
        if moved == 0.0:
            continue
        base = [trade.get((m, k, year), 0.0) for k in mates]
        total = sum(base)
        if total > 0:
            shares = [b / total for b in base]
        else:
            shares = [1.0 / len(mates)] * len(mates)
        for k, share in zip(mates, shares):
            trade[(m, k, year)] = trade.get((m, k, year), 0.0) + moved * share


def apply_scenario(panel: PanelData, scenario: Scenario) -> PanelData:
    """Return a copy of ``panel`` with the scenario's edits applied in order.

    Raises:
        ScenarioError: if an edit names a country missing from the registry.
    """
    for e in scenario.edits:
        unknown = [c for c in e.countries() if c not in panel.registry]
        if unknown:
            raise ScenarioError(f"{e.kind}: unknown country {unknown[0]!r}")

    trade = dict(panel.trade)
    conflicts = dict(panel.conflicts)
    mirrored: set[int] = set()

    def prepare(year: int) -> None:
        if year not in mirrored:
            _materialize_mirrors(trade, year)
            mirrored.add(year)

    for e in scenario.edits:
        if isinstance(e, SetConflict):
            for y in _years(e.years):
                conflicts[(e.aggressor, e.target, y)] = e.expenditure
        elif isinstance(e, RemoveConflict):
            for y in _years(e.years):
                conflicts.pop((e.aggressor, e.target, y), None)
        elif isinstance(e, ScaleTrade):
            for y in _years(e.years):
                prepare(y)
            span = set(_years(e.years))
            for key in [k for k in trade if k[2] in span and e.scope.matches(k[0], k[1])]:
                trade[key] = trade[key] * e.factor
        elif isinstance(e, ReallocateTrade):
            years = sorted({k[2] for k in trade} & set(_years(scenario.window)))
            for y in years:
                prepare(y)
                _reallocate(trade, y, e.coalition_a, e.coalition_b, e.fraction)
                _reallocate(trade, y, e.coalition_b, e.coalition_a, e.fraction)
        elif isinstance(e, Transfer):
            prepare(e.year)
            key = (e.donor, e.recipient, e.year)
            trade[key] = trade.get(key, 0.0) + e.amount
            if (e.recipient, e.donor, e.year) not in trade:
                trade[(e.recipient, e.donor, e.year)] = 0.0

    return PanelData(panel.registry, dict(panel.wealth), trade, dict(panel.milex), conflicts)
