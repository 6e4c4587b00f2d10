"""Naive and dynamic simulation, coalition aggregation and backtesting."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from numpy.typing import NDArray

from powerflow.errors import DataError, ModelError
from powerflow.model import CountryRegistry, Parameters, PowerStructure, pre_ramp, ramp
from powerflow.panel import AllocationNote, PanelData, build_tactics

log = logging.getLogger(__name__)

DENOMINATORS = ("simulated", "actual")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sizes over time; row ``k`` holds sizes at ``years[k]``."""

    registry: CountryRegistry
    years: tuple[int, ...]
    sizes: NDArray[np.float64]
    warnings: dict[int, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        arr = np.array(self.sizes, dtype=float)
        if arr.shape != (len(self.years), len(self.registry)):
            raise ModelError(f"trajectory shape {arr.shape} does not match years x registry")
        arr.setflags(write=False)
        object.__setattr__(self, "sizes", arr)

    def series(self, code: str) -> NDArray[np.float64]:
        return self.sizes[:, self.registry.index(code)]

    def at(self, year: int) -> NDArray[np.float64]:
        return self.sizes[self.years.index(year)]

    def total(self) -> NDArray[np.float64]:
        return self.sizes.sum(axis=1)

    def rows(self):
        """``(year, country, size)`` tuples in year-major, registry order."""
        for k, y in enumerate(self.years):
            for i, c in enumerate(self.registry.codes):
                yield y, c, float(self.sizes[k, i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.registry == other.registry
            and self.years == other.years
            and np.array_equal(self.sizes, other.sizes)
        )


def _starting_panel(panel: PanelData, year: int, warn: list[str]) -> tuple[PanelData, NDArray[np.float64]]:
    if year not in panel.years:
        raise DataError(f"year {year} is not covered by the panel")
    sizes = panel.wealth_vector(year)
    present = ~np.isnan(sizes)
    if not present.any():
        raise DataError(f"no wealth data for {year}")
    if not present.all():
        dropped = [c for c, ok in zip(panel.registry.codes, present) if not ok]
        for c in dropped:
            warn.append(f"{c}: no wealth in {year}; dropped from registry")
            log.warning("%s: no wealth in %s; dropped from registry", c, year)
        panel = panel.restrict(c for c, ok in zip(panel.registry.codes, present) if ok)
        sizes = sizes[present]
    return panel, sizes


def _advance(ps: PowerStructure, params: Parameters, warn: list[str]) -> NDArray[np.float64]:
    pre = pre_ramp(ps, params)
    for i in np.flatnonzero(pre < 0):
        warn.append(f"{ps.registry.codes[i]}: ramped to zero from {pre[i]:.6g}")
    return ramp(pre)


def simulate_naive(
    panel: PanelData,
    base_year: int,
    n_years: int,
    params: Parameters,
    *,
    mirror: bool = True,
) -> Trajectory:
    """Iterate the law of motion with ``base_year`` tactics held fixed.

    Allocation fractions are computed once, from base-year flows over
    base-year wealth, and never rebuilt. Countries lacking base-year wealth
    are dropped with a warning.
    """
    if n_years < 0:
        raise ModelError("n_years must be non-negative")
    warnings: dict[int, list[str]] = {}
    start_warn = warnings.setdefault(base_year, [])
    panel, sizes = _starting_panel(panel, base_year, start_warn)
    notes: list[AllocationNote] = []
    tactics = build_tactics(panel, base_year, sizes, mirror=mirror, on_zero_size="isolate", notes=notes)
    start_warn.extend(str(n) for n in notes)

    ps = PowerStructure(panel.registry, sizes, tactics)
    rows = [ps.sizes]
    years = [base_year]
    for k in range(n_years):
        year = base_year + k + 1
        nxt = _advance(ps, params, warnings.setdefault(year, []))
        ps = ps.with_sizes(nxt)
        rows.append(ps.sizes)
        years.append(year)
    return Trajectory(
        panel.registry, tuple(years), np.vstack(rows),
        {y: tuple(w) for y, w in warnings.items() if w},
    )


def simulate_dynamic(
    panel: PanelData,
    start_year: int,
    end_year: int,
    params: Parameters,
    *,
    denominator: str = "simulated",
    mirror: bool = True,
) -> Trajectory:
    """Iterate the law of motion with flows refreshed every calendar year.

    Sizes start from actual ``start_year`` wealth. For each year ``y`` in
    ``[start_year, end_year)`` that year's absolute flows become fractions
    of the current simulated sizes (``denominator="simulated"``) or of
    actual year-``y`` wealth (``"actual"``), and one step is applied.
    A state whose simulated size has hit zero allocates nothing.
    """
    if denominator not in DENOMINATORS:
        raise ModelError(f"denominator must be one of {DENOMINATORS}, not {denominator!r}")
    if end_year < start_year:
        raise ModelError("end_year precedes start_year")
    warnings: dict[int, list[str]] = {}
    panel, sizes = _starting_panel(panel, start_year, warnings.setdefault(start_year, []))
    for y in range(start_year, end_year):
        if y not in panel.years:
            raise DataError(f"missing flow year {y}")

    ps_sizes = sizes
    rows = [sizes]
    years = [start_year]
    for y in range(start_year, end_year):
        warn = warnings.setdefault(y, [])
        if denominator == "simulated":
            denom = ps_sizes
        else:
            denom = panel.wealth_vector(y)
            missing = np.isnan(denom)
            denom = np.where(missing, ps_sizes, denom)
        notes: list[AllocationNote] = []
        tactics = build_tactics(panel, y, denom, mirror=mirror, on_zero_size="isolate", notes=notes)
        warn.extend(str(n) for n in notes)
        ps = PowerStructure(panel.registry, ps_sizes, tactics)
        ps_sizes = _advance(ps, params, warnings.setdefault(y + 1, []))
        rows.append(ps_sizes)
        years.append(y + 1)
    return Trajectory(
        panel.registry, tuple(years), np.vstack(rows),
        {y: tuple(w) for y, w in sorted(warnings.items()) if w},
    )


def coalition_power(traj: Trajectory, members: Iterable[str]) -> NDArray[np.float64]:
    """Per-year summed size of ``members``."""
    members = list(members)
    try:
        idx = traj.registry.indices(members)
    except ModelError as exc:
        raise ModelError(f"unknown coalition member: {exc}") from None
    if len(set(idx)) != len(idx):
        raise ModelError("coalition lists a member twice")
    return traj.sizes[:, idx].sum(axis=1)


@dataclass(frozen=True, eq=False)
class BacktestReport:
    registry: CountryRegistry
    years: tuple[int, ...]
    predicted: NDArray[np.float64]
    actual: NDArray[np.float64]
    distances: NDArray[np.float64]
    mean_abs_rel_error: NDArray[np.float64]
    trajectory: Trajectory = field(repr=False)

    @property
    def mean_distance(self) -> float:
        return float(self.distances[1:].mean()) if len(self.distances) > 1 else 0.0


def backtest(
    panel: PanelData,
    params: Parameters,
    start_year: int,
    end_year: int,
    *,
    denominator: str = "simulated",
    mirror: bool = True,
) -> BacktestReport:
    """Dynamic simulation scored against actual wealth.

    Per year: Euclidean distance between predicted and actual size vectors.
    Per country: mean absolute relative error over the simulated years
    (the start year is the initial condition and is not scored).
    """
    traj = simulate_dynamic(panel, start_year, end_year, params, denominator=denominator, mirror=mirror)
    sub = panel.restrict(traj.registry.codes)
    actual = np.vstack([sub.wealth_vector(y) for y in traj.years])
    if np.isnan(actual).any():
        k, i = np.argwhere(np.isnan(actual))[0]
        raise DataError(f"no actual wealth for {traj.registry.codes[i]} in {traj.years[k]}")
    pred = traj.sizes
    distances = np.linalg.norm(pred - actual, axis=1)
    diff = np.abs(pred - actual)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(diff == 0, 0.0, diff / actual)
    mare = rel[1:].mean(axis=0) if len(traj.years) > 1 else np.zeros(len(traj.registry))
    return BacktestReport(traj.registry, traj.years, pred, actual, distances, mare, traj)
