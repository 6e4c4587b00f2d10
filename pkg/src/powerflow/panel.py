"""Country-year panel data: CSV ingestion and conversion to tactic matrices.

Four files make up a panel, all in billions of constant-2020 USD:

========================  ======================================
``wealth.csv``            ``country,year,wealth``
``trade.csv``             ``reporter,partner,year,flow``
``milex.csv``             ``country,year,expenditure``
``conflicts.csv``         ``aggressor,target,year,expenditure``
========================  ======================================

A trade row is the value exported by ``reporter`` to ``partner``. A
conflict row with ``aggressor == target`` is a civil war.
"""

from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np
from numpy.typing import NDArray

from powerflow.errors import DataError, ModelError
from powerflow.model import CountryRegistry, TacticMatrix
from powerflow.numfmt import fmt

log = logging.getLogger(__name__)

WEALTH_FILE = "wealth.csv"
TRADE_FILE = "trade.csv"
MILEX_FILE = "milex.csv"
CONFLICTS_FILE = "conflicts.csv"

_SCHEMAS = {
    "wealth": ("country", "year", "wealth"),
    "trade": ("reporter", "partner", "year", "flow"),
    "milex": ("country", "year", "expenditure"),
    "conflicts": ("aggressor", "target", "year", "expenditure"),
}
_FILES = {
    "wealth": WEALTH_FILE,
    "trade": TRADE_FILE,
    "milex": MILEX_FILE,
    "conflicts": CONFLICTS_FILE,
}
_CODE = re.compile(r"^[A-Z]{3}$")

CountryYear = tuple[str, int]
Dyad = tuple[str, str, int]


@dataclass(frozen=True)
class PanelData:
    """Validated, immutable bundle of the four panel series.

    Mappings are keyed by ``(country, year)`` or ``(source, target, year)``.
    Treat them as read-only; edits go through :func:`dataclasses.replace`
    or the scenario module.
    """

    registry: CountryRegistry
    wealth: dict[CountryYear, float]
    trade: dict[Dyad, float] = field(default_factory=dict)
    milex: dict[CountryYear, float] = field(default_factory=dict)
    conflicts: dict[Dyad, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        known = self.registry
        for name, data, arity in (
            ("wealth", self.wealth, 1),
            ("trade", self.trade, 2),
            ("milex", self.milex, 1),
            ("conflicts", self.conflicts, 2),
        ):
            for key, value in data.items():
                for code in key[:arity]:
                    if code not in known:
                        raise DataError(f"{name}: country {code!r} not in registry")
                if not math.isfinite(value) or value < 0:
                    raise DataError(f"{name}: value {value!r} for {key} must be finite and >= 0")
        for (r, p, y) in self.trade:
            if r == p:
                raise DataError(f"trade: reporter equals partner ({r}, {y})")

    @cached_property
    def years(self) -> tuple[int, ...]:
        ys: set[int] = set()
        for data in (self.wealth, self.trade, self.milex, self.conflicts):
            ys.update(k[-1] for k in data)
        return tuple(sorted(ys))

    @property
    def year_range(self) -> tuple[int, int] | None:
        return (self.years[0], self.years[-1]) if self.years else None

    @cached_property
    def _trade_by_year(self) -> dict[int, list[tuple[str, str, float]]]:
        return _group_by_year(self.trade)

    @cached_property
    def _conflicts_by_year(self) -> dict[int, list[tuple[str, str, float]]]:
        return _group_by_year(self.conflicts)

    def require_year(self, year: int) -> None:
        if year not in self.years:
            raise DataError(f"year {year} is not covered by the panel")

    def wealth_vector(self, year: int) -> NDArray[np.float64]:
        """Wealth per registry country in ``year``; NaN where absent."""
        out = np.full(len(self.registry), np.nan)
        for i, code in enumerate(self.registry.codes):
            v = self.wealth.get((code, year))
            if v is not None:
                out[i] = v
        return out

    def milex_vector(self, year: int) -> NDArray[np.float64]:
        """Military expenditure per registry country in ``year``; NaN where absent."""
        out = np.full(len(self.registry), np.nan)
        for i, code in enumerate(self.registry.codes):
            v = self.milex.get((code, year))
            if v is not None:
                out[i] = v
        return out

    def trade_matrix(self, year: int, mirror: bool = True) -> NDArray[np.float64]:
        """Dense absolute trade, ``F[i, j]`` = exports of ``j`` to ``i``.

        With ``mirror`` set, a dyad reported in only one direction has the
        missing direction filled in with the reported value.
        """
        n = len(self.registry)
        idx = self.registry.index
        flows = np.zeros((n, n))
        reported = np.zeros((n, n), dtype=bool)
        for r, p, v in self._trade_by_year.get(year, ()):
            i, j = idx(p), idx(r)
            flows[i, j] = v
            reported[i, j] = True
        if mirror:
            fill = ~reported & reported.T
            flows[fill] = flows.T[fill]
        return flows

    def conflict_matrix(self, year: int) -> NDArray[np.float64]:
        """Dense conflict spending, ``C[i, j]`` = spent by ``j`` against ``i``.

        The diagonal holds civil-war spending.
        """
        n = len(self.registry)
        idx = self.registry.index
        out = np.zeros((n, n))
        for a, t, v in self._conflicts_by_year.get(year, ()):
            out[idx(t), idx(a)] = v
        return out

    def war_country_years(self) -> set[CountryYear]:
        """Country-years in which a country is an aggressor or target of conflict."""
        out = set()
        for (a, t, y), v in self.conflicts.items():
            if v > 0:
                out.add((a, y))
                out.add((t, y))
        return out

    def restrict(self, codes: Iterable[str]) -> "PanelData":
        """Sub-panel over ``codes``; rows touching other countries are dropped."""
        reg = self.registry.subset(codes)
        keep = set(reg.codes)
        return PanelData(
            registry=reg,
            wealth={k: v for k, v in self.wealth.items() if k[0] in keep},
            trade={k: v for k, v in self.trade.items() if k[0] in keep and k[1] in keep},
            milex={k: v for k, v in self.milex.items() if k[0] in keep},
            conflicts={k: v for k, v in self.conflicts.items() if k[0] in keep and k[1] in keep},
        )

    def replace(self, **changes) -> "PanelData":
        return replace(self, **changes)


def _group_by_year(data: dict[Dyad, float]) -> dict[int, list[tuple[str, str, float]]]:
    out: dict[int, list[tuple[str, str, float]]] = {}
    for (a, b, y), v in sorted(data.items()):
        out.setdefault(y, []).append((a, b, v))
    return out


def _read_csv(path: Path, kind: str) -> list[tuple[int, dict[str, str]]]:
    expected = _SCHEMAS[kind]
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open: {exc.strerror}", path) from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("missing header row", path, 1) from None
        header = [h.strip() for h in header]
        unknown = [h for h in header if h not in expected]
        if unknown:
            raise DataError(f"unknown column {unknown[0]!r}", path, 1)
        missing = [h for h in expected if h not in header]
        if missing:
            raise DataError(f"missing column {missing[0]!r}", path, 1)
        if len(set(header)) != len(header):
            raise DataError("duplicate column in header", path, 1)
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise DataError(
                    f"malformed row: expected {len(header)} fields, got {len(raw)}", path, lineno
                )
            rows.append((lineno, {h: c.strip() for h, c in zip(header, raw)}))
        return rows


def _code(value: str, path: Path, line: int) -> str:
    if not _CODE.match(value):
        raise DataError(f"malformed row: {value!r} is not an ISO alpha-3 code", path, line)
    return value


def _year(value: str, path: Path, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise DataError(f"malformed row: year {value!r} is not an integer", path, line) from None


def _amount(value: str, path: Path, line: int) -> float:
    try:
        x = float(value)
    except ValueError:
        raise DataError(f"malformed row: {value!r} is not a number", path, line) from None
    if not math.isfinite(x):
        raise DataError(f"malformed row: non-finite value {value!r}", path, line)
    if x < 0:
        raise DataError(f"negative value {value}", path, line)
    return x


def _load_series(path: Path, kind: str) -> dict[CountryYear, float]:
    c_col, _, v_col = _SCHEMAS[kind]
    out: dict[CountryYear, float] = {}
    for line, row in _read_csv(path, kind):
        key = (_code(row[c_col], path, line), _year(row["year"], path, line))
        value = _amount(row[v_col], path, line)
        if key in out:
            raise DataError(f"duplicate key {key[0]},{key[1]}", path, line)
        out[key] = value
    return out


def _load_dyads(path: Path, kind: str) -> dict[Dyad, float]:
    a_col, b_col, _, v_col = _SCHEMAS[kind]
    out: dict[Dyad, float] = {}
    for line, row in _read_csv(path, kind):
        a = _code(row[a_col], path, line)
        b = _code(row[b_col], path, line)
        if kind == "trade" and a == b:
            raise DataError(f"reporter equals partner ({a})", path, line)
        key = (a, b, _year(row["year"], path, line))
        value = _amount(row[v_col], path, line)
        if key in out:
            raise DataError(f"duplicate key {a},{b},{key[2]}", path, line)
        out[key] = value
    return out


def load_panel(
    wealth: str | Path,
    trade: str | Path,
    milex: str | Path,
    conflicts: str | Path,
) -> PanelData:
    """Parse and validate the four panel CSVs.

    Raises:
        DataError: on an unreadable file, unknown or missing column,
            malformed row, negative value or duplicate key. The message
            names the file and line.
    """
    w = _load_series(Path(wealth), "wealth")
    t = _load_dyads(Path(trade), "trade")
    m = _load_series(Path(milex), "milex")
    c = _load_dyads(Path(conflicts), "conflicts")
    codes = {k[0] for k in w} | {k[0] for k in m}
    codes |= {x for k in t for x in k[:2]} | {x for k in c for x in k[:2]}
    return PanelData(CountryRegistry.from_codes(codes), w, t, m, c)


def load_panel_dir(directory: str | Path) -> PanelData:
    d = Path(directory)
    if not d.is_dir():
        raise DataError("data directory does not exist", d)
    return load_panel(*(d / _FILES[k] for k in ("wealth", "trade", "milex", "conflicts")))


def write_panel(panel: PanelData, directory: str | Path) -> None:
    """Write ``panel`` as the four CSVs, rows sorted by key."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for kind, data in (
        ("wealth", panel.wealth),
        ("trade", panel.trade),
        ("milex", panel.milex),
        ("conflicts", panel.conflicts),
    ):
        with open(d / _FILES[kind], "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(_SCHEMAS[kind])
            for key in sorted(data):
                writer.writerow([*key, fmt(data[key])])


@dataclass(frozen=True)
class AllocationNote:
    """Warning raised while turning absolute flows into allocation fractions."""

    year: int
    country: str
    kind: str  # "clamp" | "milex-cap" | "zero-size" | "self-clamp"
    detail: str

    def __str__(self) -> str:
        return f"{self.year} {self.country} {self.kind}: {self.detail}"


def civil_war_diagonal(panel: PanelData, year: int, sizes: NDArray[np.float64]) -> NDArray[np.float64]:
    """Fraction of each state's size spent on internal conflict in ``year``.

    This is the raw ratio; :func:`build_tactics` additionally applies the
    military-expenditure cap before storing it on the tactic matrix.
    """
    panel.require_year(year)
    sizes = np.asarray(sizes, dtype=float)
    self_spend = np.diag(panel.conflict_matrix(year)).copy()
    _check_sizes(panel, year, sizes, self_spend > 0)
    out = np.zeros_like(sizes)
    active = self_spend > 0
    out[active] = self_spend[active] / sizes[active]
    return out


def _check_sizes(panel: PanelData, year: int, sizes, active) -> None:
    if sizes.shape != (len(panel.registry),):
        raise ModelError(f"sizes has shape {sizes.shape}, registry has {len(panel.registry)}")
    bad = active & ~(sizes > 0)
    if bad.any():
        code = panel.registry.codes[int(np.flatnonzero(bad)[0])]
        raise ModelError(f"{year}: {code} originates flows but has zero or missing size")


def build_tactics(
    panel: PanelData,
    year: int,
    sizes: NDArray[np.float64],
    *,
    mirror: bool = True,
    on_zero_size: str = "raise",
    notes: list[AllocationNote] | None = None,
) -> TacticMatrix:
    """Convert ``year``'s absolute flows into allocation fractions of ``sizes``.

    Per column ``j``: conflict spending (including civil war) is first
    capped at ``milex[j]``, then exports and conflict are divided by
    ``sizes[j]``. A column whose off-diagonal fractions sum past 1 is
    rescaled proportionally to sum to exactly 1. Whatever is left is
    retained on the diagonal. Civil-war spending goes to
    ``self_destruction`` rather than the column.

    Args:
        on_zero_size: ``"raise"`` rejects a state with flows but no positive
            size; ``"isolate"`` gives it a pure-retention column instead.
        notes: if given, clamp and cap warnings are appended to it.
    """
    if on_zero_size not in ("raise", "isolate"):
        raise ValueError(f"on_zero_size must be 'raise' or 'isolate', not {on_zero_size!r}")
    panel.require_year(year)
    sizes = np.asarray(sizes, dtype=float)
    n = len(panel.registry)
    codes = panel.registry.codes
    sink = notes if notes is not None else []
    first_new = len(sink)

    flows = panel.trade_matrix(year, mirror=mirror)
    conflict = panel.conflict_matrix(year)
    self_spend = np.diag(conflict).copy()
    np.fill_diagonal(conflict, 0.0)
    np.fill_diagonal(flows, 0.0)

    active = (flows.sum(axis=0) > 0) | (conflict.sum(axis=0) > 0) | (self_spend > 0)
    if on_zero_size == "raise":
        _check_sizes(panel, year, sizes, active)
    elif sizes.shape != (n,):
        raise ModelError(f"sizes has shape {sizes.shape}, registry has {n}")

    milex = panel.milex_vector(year)
    plus = np.zeros((n, n))
    minus = np.zeros((n, n))
    selfd = np.zeros(n)
    keep = np.ones(n)

    for j in range(n):
        if not active[j]:
            continue
        s = sizes[j]
        if not s > 0:
            sink.append(AllocationNote(year, codes[j], "zero-size", "allocates nothing"))
            continue
        c_col = conflict[:, j]
        c_self = self_spend[j]
        spent = c_col.sum() + c_self
        if spent > 0 and np.isfinite(milex[j]) and spent > milex[j]:
            scale = milex[j] / spent
            c_col = c_col * scale
            c_self = c_self * scale
            sink.append(
                AllocationNote(
                    year, codes[j], "milex-cap",
                    f"conflict spending {fmt(spent)} capped at military expenditure {fmt(milex[j])}",
                )
            )
        p_col = flows[:, j] / s
        m_col = c_col / s
        total = p_col.sum() + m_col.sum()
        if total > 1.0:
            p_col = p_col / total
            m_col = m_col / total
            sink.append(
                AllocationNote(
                    year, codes[j], "clamp",
                    f"allocations total {fmt(total)} of size; rescaled to 1",
                )
            )
            keep[j] = 0.0
        else:
            keep[j] = 1.0 - total
        plus[:, j] = p_col
        minus[:, j] = m_col
        frac = c_self / s
        if frac > 1.0:
            sink.append(
                AllocationNote(
                    year, codes[j], "self-clamp",
                    f"civil-war spending {fmt(c_self)} exceeds size {fmt(s)}; capped at 1",
                )
            )
            frac = 1.0
        selfd[j] = frac

    for note in sink[first_new:]:
        log.debug("%s", note)
    return TacticMatrix(plus, minus, np.diag(keep), selfd)


def trade_volume(panel: PanelData, year: int, mirror: bool = True) -> NDArray[np.float64]:
    """Exports plus imports per registry country in ``year``."""
    flows = panel.trade_matrix(year, mirror=mirror)
    return flows.sum(axis=0) + flows.sum(axis=1)
