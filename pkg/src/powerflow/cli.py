"""Command-line front end.

Usage::

    powerflow validate  --data DIR [--base-year Y]
    powerflow calibrate {mu,growth,beta} --data DIR --out DIR [--episodes FILE] [--params FILE] [--grid LO,HI,STEP]
    powerflow simulate  --data DIR --base-year Y --years N [--mode naive|dynamic] [--params FILE] [--out FILE]
    powerflow backtest  --data DIR --base-year Y --years N [--params FILE] --out FILE
    powerflow scenario  --data DIR --scenario-file FILE [--mode naive|dynamic] [--params FILE] [--out FILE]
    powerflow export    {matrix,graph} --data DIR --base-year Y [--params FILE] [--out FILE]

Exit status is 0 on success, 1 on a domain error (invalid parameters,
calibration failure, validation violations) and 2 on I/O or parse errors.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, TextIO

from powerflow import calibration, export
from powerflow.errors import DataError, PowerflowError
from powerflow.model import DEFAULT_PARAMETERS, Parameters, PowerStructure, validate
from powerflow.numfmt import fmt
from powerflow.panel import AllocationNote, PanelData, build_tactics, load_panel_dir
from powerflow.scenario import apply_scenario, load_scenario
from powerflow.simulation import backtest, simulate_dynamic, simulate_naive

log = logging.getLogger("powerflow")

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2


@dataclass(frozen=True)
class RunConfig:
    data: Path
    params: Parameters
    out: Path | None
    mode: str = "naive"
    denominator: str = "simulated"
    verbosity: int = 0


def load_params(path: str | Path | None) -> Parameters:
    if path is None:
        return DEFAULT_PARAMETERS
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot open: {exc.strerror}", p) from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg}", p, exc.lineno) from exc
    if not isinstance(data, dict):
        raise DataError("parameter file must hold a JSON object", p)
    return Parameters.from_dict(data)


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        data=Path(args.data),
        params=load_params(getattr(args, "params", None)),
        out=Path(args.out) if getattr(args, "out", None) else None,
        mode=getattr(args, "mode", "naive"),
        denominator=getattr(args, "denominator", "simulated"),
        verbosity=args.verbose,
    )


@contextlib.contextmanager
def _output(path: Path | None) -> Iterator[TextIO]:
    if path is None:
        yield sys.stdout
        return
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write: {exc.strerror}", path) from exc
    with fh:
        yield fh


def _default_year(panel: PanelData) -> int:
    years = sorted({y for (_c, y) in panel.wealth})
    if not years:
        raise DataError("panel has no wealth data")
    return years[-1]


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    panel = load_panel_dir(cfg.data)
    year = args.base_year if args.base_year is not None else _default_year(panel)
    panel.require_year(year)
    sizes = panel.wealth_vector(year)
    present = [c for c, s in zip(panel.registry.codes, sizes) if not math.isnan(s)]
    for c in panel.registry.codes:
        if c not in present:
            print(f"WARNING: {c} has no wealth in {year}; dropped")
    panel = panel.restrict(present)
    notes: list[AllocationNote] = []
    tactics = build_tactics(panel, year, panel.wealth_vector(year), notes=notes)
    for note in notes:
        print(f"WARNING: {note}")
    violations = validate(PowerStructure(panel.registry, panel.wealth_vector(year), tactics))
    if violations:
        for v in violations:
            print(f"VIOLATION {v.rule}: {v.message}")
        return EXIT_DOMAIN
    print("OK")
    return EXIT_OK


def _parse_grid(text: str | None) -> tuple[float, float, float]:
    if text is None:
        return calibration.DEFAULT_GRID
    try:
        lo, hi, st = (float(x) for x in text.split(","))
    except ValueError:
        raise DataError(f"--grid expects LO,HI,STEP, got {text!r}") from None
    return lo, hi, st


def _load_episodes(path: str | None) -> list[tuple[str, list[int]]]:
    if path is None:
        return []
    p = Path(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot open: {exc.strerror}", p) from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg}", p, exc.lineno) from exc
    try:
        return [(str(e["country"]), [int(y) for y in e["war_years"]]) for e in data]
    except (TypeError, KeyError, ValueError):
        raise DataError('episodes must be a list of {"country": ..., "war_years": [...]}', p) from None


def cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if cfg.out is None:
        raise DataError("calibrate needs --out DIR")
    panel = load_panel_dir(cfg.data)
    out_dir = cfg.out
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.which == "mu":
        est = calibration.estimate_mu(panel, _load_episodes(args.episodes))
        with _output(out_dir / "mu_report.csv") as fh:
            export.write_mu_report(est, fh)
        print(f"mu raw mean {fmt(est.raw_mean)} trimmed mean {fmt(est.trimmed_mean)} n {est.count}")
    elif args.which == "growth":
        fit = calibration.fit_growth_regression(panel)
        with _output(out_dir / "growth_fit.csv") as fh:
            export.write_growth_fit(fit, fh)
        print(f"lambda {fmt(fit.intercept)} slope {fmt(fit.slope)} n {fit.n}")
    else:
        fit = calibration.fit_beta(panel, cfg.params.lam, cfg.params.mu, _parse_grid(args.grid))
        with _output(out_dir / "beta_curve.csv") as fh:
            export.write_beta_curve(fit, fh)
        print(f"beta {fmt(fit.beta)} objective {fmt(fit.objective)}")
    return EXIT_OK


def _simulate(cfg: RunConfig, panel: PanelData, base_year: int, years: int):
    if cfg.mode == "naive":
        return simulate_naive(panel, base_year, years, cfg.params)
    return simulate_dynamic(panel, base_year, base_year + years, cfg.params, denominator=cfg.denominator)


def _report_warnings(traj) -> None:
    for year, items in traj.warnings.items():
        for w in items:
            log.info("%s: %s", year, w)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    panel = load_panel_dir(cfg.data)
    traj = _simulate(cfg, panel, args.base_year, args.years)
    _report_warnings(traj)
    with _output(cfg.out) as fh:
        export.write_trajectory(traj, fh)
    return EXIT_OK


def cmd_backtest(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if cfg.out is None:
        raise DataError("backtest needs --out FILE")
    panel = load_panel_dir(cfg.data)
    report = backtest(panel, cfg.params, args.base_year, args.base_year + args.years, denominator=cfg.denominator)
    _report_warnings(report.trajectory)
    with _output(cfg.out) as fh:
        export.write_trajectory(report.trajectory, fh)
    with _output(cfg.out.with_name(cfg.out.stem + "_metrics.csv")) as fh:
        export.write_backtest_metrics(report, fh)
    with _output(cfg.out.with_name(cfg.out.stem + "_errors.csv")) as fh:
        export.write_backtest_errors(report, fh)
    print(f"mean distance {fmt(report.mean_distance)}")
    return EXIT_OK


def cmd_scenario(args: argparse.Namespace) -> int:
    cfg = _config(args)
    panel = load_panel_dir(cfg.data)
    scenario = load_scenario(args.scenario_file)
    edited = apply_scenario(panel, scenario)
    base = args.base_year if args.base_year is not None else scenario.base_year
    years = args.years if args.years is not None else scenario.horizon
    traj = _simulate(cfg, edited, base, years)
    _report_warnings(traj)
    with _output(cfg.out) as fh:
        export.write_trajectory(traj, fh)
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    cfg = _config(args)
    panel = load_panel_dir(cfg.data)
    year = args.base_year if args.base_year is not None else _default_year(panel)
    if args.what == "matrix":
        registry, matrix = export.combined_matrix(panel, year, cfg.params)
        with _output(cfg.out) as fh:
            export.write_matrix(registry, matrix, fh)
    else:
        graph = export.build_graph(panel, year, rule=args.graph_rule)
        with _output(cfg.out) as fh:
            fh.write(graph.to_dot())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="powerflow", description="National power as network flow.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, params=True, out=True):
        p.add_argument("--data", required=True, help="directory holding the four panel CSVs")
        if params:
            p.add_argument("--params", help='JSON file {"beta":..,"mu":..,"lambda":..}')
        if out:
            p.add_argument("--out", help="output file, stdout if omitted (a directory for calibrate)")
        p.add_argument("-v", "--verbose", action="count", default=0)

    def sim_flags(p, required=True):
        p.add_argument("--base-year", type=int, required=required)
        p.add_argument("--years", type=int, required=required)
        p.add_argument("--denominator", choices=("simulated", "actual"), default="simulated",
                       help="what dynamic-mode flows are divided by")

    p = sub.add_parser("validate", help="check base-year tactics")
    common(p, params=False, out=False)
    p.add_argument("--base-year", type=int)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("calibrate", help="estimate mu, lambda or beta")
    p.add_argument("which", choices=("mu", "growth", "beta"))
    common(p)
    p.add_argument("--episodes", help='JSON list of {"country": ISO3, "war_years": [...]}')
    p.add_argument("--grid", help="beta search grid LO,HI,STEP")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("simulate", help="naive or dynamic simulation")
    common(p)
    sim_flags(p)
    p.add_argument("--mode", choices=("naive", "dynamic"), default="naive")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("backtest", help="dynamic simulation scored against actual wealth")
    common(p)
    sim_flags(p)
    p.set_defaults(func=cmd_backtest, mode="dynamic")

    p = sub.add_parser("scenario", help="simulate after applying a scenario file")
    common(p)
    sim_flags(p, required=False)
    p.add_argument("--scenario-file", required=True)
    p.add_argument("--mode", choices=("naive", "dynamic"), default="naive")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("export", help="combined matrix CSV or trade graph DOT")
    p.add_argument("what", choices=("matrix", "graph"))
    common(p)
    p.add_argument("--base-year", type=int)
    p.add_argument("--graph-rule", choices=export.GRAPH_RULES, default="primary-partner")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else (logging.INFO if args.verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PowerflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
