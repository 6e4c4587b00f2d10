"""CSV and DOT writers for trajectories, reports and the world power structure.

All numbers are written in shortest round-trip form so that identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np
from numpy.typing import NDArray

from powerflow.calibration import BetaFit, GrowthFit, MuEstimate
from powerflow.errors import DataError
from powerflow.model import CountryRegistry, Parameters
from powerflow.numfmt import fmt
from powerflow.panel import PanelData, build_tactics
from powerflow.simulation import BacktestReport, Trajectory

GRAPH_RULES = ("primary-partner", "full")


def _writer(fh: TextIO):
    return csv.writer(fh, lineterminator="\n")


def write_trajectory(traj: Trajectory, fh: TextIO) -> None:
    w = _writer(fh)
    w.writerow(["year", "country", "size"])
    for year, country, size in traj.rows():
        w.writerow([year, country, fmt(size)])


def read_trajectory(path: str | Path) -> dict[tuple[int, str], float]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return {(int(r["year"]), r["country"]): float(r["size"]) for r in reader}


def write_mu_report(est: MuEstimate, fh: TextIO) -> None:
    w = _writer(fh)
    w.writerow(["country", "year", "expected", "actual", "loss", "x", "mu"])
    for r in est.records:
        w.writerow([r.country, r.year, fmt(r.expected), fmt(r.actual), fmt(r.loss), fmt(r.x), fmt(r.mu)])


def write_growth_fit(fit: GrowthFit, fh: TextIO) -> None:
    w = _writer(fh)
    w.writerow(["intercept", "slope", "n", "rss"])
    w.writerow([fmt(fit.intercept), fmt(fit.slope), fit.n, fmt(fit.rss)])


def write_beta_curve(fit: BetaFit, fh: TextIO) -> None:
    w = _writer(fh)
    w.writerow(["beta", "objective"])
    for b, obj in zip(fit.betas, fit.objectives):
        w.writerow([fmt(b), fmt(obj)])


def write_backtest_metrics(report: BacktestReport, fh: TextIO) -> None:
    w = _writer(fh)
    w.writerow(["year", "distance"])
    for y, d in zip(report.years, report.distances):
        w.writerow([y, fmt(d)])


def write_backtest_errors(report: BacktestReport, fh: TextIO) -> None:
    w = _writer(fh)
    w.writerow(["country", "mean_abs_rel_error"])
    for c, e in zip(report.registry.codes, report.mean_abs_rel_error):
        w.writerow([c, fmt(e)])


def combined_matrix(panel: PanelData, year: int, params: Parameters, mirror: bool = True) -> tuple[CountryRegistry, NDArray[np.float64]]:
    """Signed ``beta*T+ - mu*T- + lambda*T0`` for ``year``, over countries with wealth."""
    panel.require_year(year)
    sizes = panel.wealth_vector(year)
    present = ~np.isnan(sizes)
    if not present.any():
        raise DataError(f"no wealth data for {year}")
    if not present.all():
        panel = panel.restrict(c for c, ok in zip(panel.registry.codes, present) if ok)
        sizes = sizes[present]
    tactics = build_tactics(panel, year, sizes, mirror=mirror, on_zero_size="isolate")
    return panel.registry, tactics.combined(params)


def write_matrix(registry: CountryRegistry, matrix: NDArray[np.float64], fh: TextIO) -> None:
    """Dense CSV; row ``i``, column ``j`` is the effect of ``j``'s policy on ``i``."""
    w = _writer(fh)
    w.writerow(["country", *registry.codes])
    for code, row in zip(registry.codes, matrix):
        w.writerow([code, *(fmt(v) for v in row)])


def read_matrix(path: str | Path) -> tuple[tuple[str, ...], NDArray[np.float64]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    codes = tuple(rows[0][1:])
    if tuple(r[0] for r in rows[1:]) != codes:
        raise DataError("matrix row labels do not match column labels", path)
    return codes, np.array([[float(v) for v in r[1:]] for r in rows[1:]])


@dataclass(frozen=True)
class GraphExport:
    nodes: tuple[tuple[str, float], ...]
    edges: tuple[tuple[str, str, float], ...]
    rule: str

    def to_dot(self) -> str:
        out = io.StringIO()
        out.write("digraph power_structure {\n")
        out.write(f'  graph [rule="{self.rule}"];\n')
        for code, size in self.nodes:
            out.write(f'  "{code}" [size={fmt(size)}];\n')
        for src, dst, weight in self.edges:
            out.write(f'  "{src}" -> "{dst}" [weight={fmt(weight)}];\n')
        out.write("}\n")
        return out.getvalue()


def build_graph(panel: PanelData, year: int, rule: str = "primary-partner", mirror: bool = True) -> GraphExport:
    """Trade graph for ``year``.

    ``primary-partner`` keeps one edge per trading country, to the partner
    with the largest bilateral volume (exports plus imports); ties go to
    the lexicographically smaller code. ``full`` keeps every nonzero
    export flow.
    """
    if rule not in GRAPH_RULES:
        raise ValueError(f"rule must be one of {GRAPH_RULES}")
    panel.require_year(year)
    codes = panel.registry.codes
    sizes = panel.wealth_vector(year)
    nodes = tuple((c, float(s)) for c, s in zip(codes, sizes) if not np.isnan(s))
    flows = panel.trade_matrix(year, mirror=mirror)
    edges = []
    if rule == "full":
        for j, src in enumerate(codes):
            for i, dst in enumerate(codes):
                if i != j and flows[i, j] > 0:
                    edges.append((src, dst, float(flows[i, j])))
    else:
        volume = flows + flows.T
        np.fill_diagonal(volume, 0.0)
        for j, src in enumerate(codes):
            col = volume[:, j]
            if not (col > 0).any():
                continue
            # argmax returns the first maximum; registry order is lexicographic
            i = int(np.argmax(col))
            edges.append((src, codes[i], float(col[i])))
    return GraphExport(nodes, tuple(edges), rule)
