"""Estimation of the destructive multiplier, intrinsic growth and trade multiplier.

Calibration runs in sequence: ``mu`` from civil-war episodes, ``lambda``
as the intercept of a growth-on-trade regression, then ``beta`` by grid
search over one-year-ahead predictions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from powerflow.errors import CalibrationError
from powerflow.panel import PanelData, build_tactics, trade_volume

DEFAULT_GRID = (1.001, 2.0, 0.001)


def peacetime_growth(wealth: Mapping[int, float], war_years: Iterable[int] = ()) -> float:
    """Geometric-mean year-over-year wealth multiplier outside war years.

    Only pairs ``(y, y + 1)`` where both years have data and neither is a
    war year contribute.

    >>> peacetime_growth({2000: 100.0, 2001: 110.0, 2002: 121.0})
    1.1
    """
    war = set(war_years)
    ratios = []
    for y in sorted(wealth):
        nxt = y + 1
        if nxt not in wealth or y in war or nxt in war:
            continue
        if wealth[y] <= 0:
            continue
        ratios.append(wealth[nxt] / wealth[y])
    if not ratios:
        raise CalibrationError("insufficient peacetime observations: need two consecutive non-war years")
    if any(r <= 0 for r in ratios):
        raise CalibrationError("peacetime wealth must stay positive")
    return float(math.exp(math.fsum(math.log(r) for r in ratios) / len(ratios)))


@dataclass(frozen=True)
class MuRecord:
    country: str
    year: int
    expected: float
    actual: float
    loss: float
    x: float
    mu: float


@dataclass(frozen=True)
class MuEstimate:
    records: tuple[MuRecord, ...]
    raw_mean: float
    trimmed_mean: float
    trim_threshold: float

    @property
    def count(self) -> int:
        return len(self.records)

    @property
    def trimmed_count(self) -> int:
        return sum(1 for r in self.records if r.mu <= self.trim_threshold)


def estimate_mu(
    panel: PanelData,
    episodes: Sequence[tuple[str, Iterable[int]]],
    trim_percentile: float = 90.0,
) -> MuEstimate:
    """Estimate ``mu`` from civil-war episodes.

    For each war year, expected wealth compounds the last pre-war actual
    wealth at the country's peacetime growth rate. The loss is expected
    minus actual, ``x`` is that year's military expenditure, and
    ``mu = (loss - x) / x``. Records above ``trim_percentile`` of ``mu``
    are left out of the trimmed mean.
    """
    if not episodes:
        raise CalibrationError("no episodes")
    records: list[MuRecord] = []
    for country, years in episodes:
        war = sorted(set(years))
        if country not in panel.registry:
            raise CalibrationError(f"episode country {country} is not in the panel")
        if not war:
            raise CalibrationError(f"episode for {country} has no war years")
        series = {y: v for (c, y), v in panel.wealth.items() if c == country}
        g = peacetime_growth(series, war)
        for y in war:
            pre = [b for b in series if b < y and b not in war]
            if not pre:
                raise CalibrationError(f"{country} {y}: no pre-war wealth observation")
            base = max(pre)
            if y not in series:
                raise CalibrationError(f"{country} {y}: no actual wealth")
            actual = series[y]
            x = panel.milex.get((country, y))
            if x is None:
                raise CalibrationError(f"{country} {y}: war year without military expenditure")
            if x == 0:
                raise CalibrationError(f"{country} {y}: military expenditure is zero")
            expected = series[base] * g ** (y - base)
            if expected <= 0:
                raise CalibrationError(f"{country} {y}: expected wealth is not positive")
            loss = expected - actual
            records.append(MuRecord(country, y, expected, actual, loss, x, (loss - x) / x))

    mus = np.array([r.mu for r in records])
    threshold = float(np.percentile(mus, trim_percentile))
    kept = mus[mus <= threshold]
    return MuEstimate(
        records=tuple(records),
        raw_mean=float(mus.mean()),
        trimmed_mean=float(kept.mean()),
        trim_threshold=threshold,
    )


def ols(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Intercept and slope of the least-squares line through ``(x, y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise CalibrationError("x and y must be 1-D and the same length")
    if len(x) < 2:
        raise CalibrationError("fewer than 2 points")
    if np.all(x == x[0]):
        raise CalibrationError("degenerate design: all regressor values are equal")
    xm = x.mean()
    ym = y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    slope = float(dx @ (y - ym)) / sxx
    return float(ym - slope * xm), slope


@dataclass(frozen=True)
class GrowthObservation:
    country: str
    year: int
    g: float
    tp: float


@dataclass(frozen=True)
class GrowthFit:
    intercept: float
    slope: float
    n: int
    rss: float
    residual_std: float
    observations: tuple[GrowthObservation, ...] = field(repr=False)

    @property
    def lam(self) -> float:
        return self.intercept

    def residuals(self) -> NDArray[np.float64]:
        g = np.array([o.g for o in self.observations])
        tp = np.array([o.tp for o in self.observations])
        return g - (self.intercept + self.slope * tp)


def growth_observations(
    panel: PanelData,
    countries: Iterable[str] | None = None,
    mirror: bool = True,
) -> list[GrowthObservation]:
    """Peacetime ``(g, tp)`` pairs: ``g = w(t+1)/w(t)``, ``tp = trade(t)/w(t)``.

    Trade volume is exports plus imports. Country-years involved in any
    conflict are skipped.
    """
    wanted = set(panel.registry.codes if countries is None else countries)
    war = panel.war_country_years()
    codes = panel.registry.codes
    out = []
    for t in panel.years:
        if t + 1 not in panel.years:
            continue
        now = panel.wealth_vector(t)
        nxt = panel.wealth_vector(t + 1)
        volume = trade_volume(panel, t, mirror=mirror)
        for i, c in enumerate(codes):
            if c not in wanted or (c, t) in war:
                continue
            if not (now[i] > 0) or np.isnan(nxt[i]):
                continue
            out.append(GrowthObservation(c, t, float(nxt[i] / now[i]), float(volume[i] / now[i])))
    return out


def fit_growth_regression(
    panel: PanelData,
    countries: Iterable[str] | None = None,
    mirror: bool = True,
) -> GrowthFit:
    """Pooled least-squares fit of annual growth on trade percentage.

    Pass ``countries`` to fit a single country (or group); the intercept
    then estimates that group's own intrinsic growth.
    """
    obs = growth_observations(panel, countries, mirror)
    if len(obs) < 2:
        raise CalibrationError(f"fewer than 2 growth observations ({len(obs)})")
    tp = np.array([o.tp for o in obs])
    g = np.array([o.g for o in obs])
    a, b = ols(tp, g)
    resid = g - (a + b * tp)
    rss = float(resid @ resid)
    dof = len(obs) - 2
    return GrowthFit(
        intercept=a,
        slope=b,
        n=len(obs),
        rss=rss,
        residual_std=math.sqrt(rss / dof) if dof > 0 else 0.0,
        observations=tuple(obs),
    )


def beta_grid(lo: float, hi: float, step: float) -> NDArray[np.float64]:
    if not (step > 0) or not (hi >= lo):
        raise CalibrationError(f"grid empty: lo={lo}, hi={hi}, step={step}")
    if not lo > 1:
        raise CalibrationError("grid lower bound must exceed 1")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    decimals = max(0, -int(math.floor(math.log10(step)))) + 3
    return np.round(lo + step * np.arange(count), decimals)


@dataclass(frozen=True)
class BetaFit:
    beta: float
    objective: float
    grid: tuple[float, float, float]
    betas: NDArray[np.float64] = field(repr=False)
    objectives: NDArray[np.float64] = field(repr=False)
    years: tuple[int, ...] = ()


@dataclass(frozen=True)
class _YearTerms:
    """Per-year pieces of the one-step prediction that do not depend on beta."""

    gained: NDArray[np.float64]
    rest: NDArray[np.float64]
    actual_next: NDArray[np.float64]


def _year_terms(panel: PanelData, year: int, lam, mu: float) -> _YearTerms | None:
    now = panel.wealth_vector(year)
    nxt = panel.wealth_vector(year + 1)
    mask = ~np.isnan(now) & ~np.isnan(nxt)
    if not mask.any():
        return None
    lam_full = np.broadcast_to(np.asarray(lam, dtype=float), now.shape)
    sub = panel
    if not mask.all():
        sub = panel.restrict(c for c, m in zip(panel.registry.codes, mask) if m)
    s = now[mask]
    t = build_tactics(sub, year, s, on_zero_size="isolate")
    lam_v = lam_full[mask]
    rest = (
        -mu * (t.destructive @ s)
        + lam_v * (np.diag(t.retained) * s)
        - (1.0 + mu) * t.self_destruction * s
    )
    return _YearTerms(gained=t.constructive @ s, rest=rest, actual_next=nxt[mask])


def beta_objective_curve(
    panel: PanelData, lam, mu: float, betas: NDArray[np.float64]
) -> tuple[NDArray[np.float64], tuple[int, ...]]:
    """Mean one-step Euclidean prediction error for every candidate beta."""
    terms = []
    used = []
    for t in panel.years:
        if t + 1 not in panel.years:
            continue
        yt = _year_terms(panel, t, lam, mu)
        if yt is not None:
            terms.append(yt)
            used.append(t)
    if not terms:
        raise CalibrationError("empty year overlap: no pair of consecutive years with wealth")
    total = np.zeros(len(betas))
    for yt in terms:
        pred = np.maximum(betas[:, None] * yt.gained[None, :] + yt.rest[None, :], 0.0)
        total += np.linalg.norm(pred - yt.actual_next[None, :], axis=1)
    return total / len(terms), tuple(used)


def fit_beta(
    panel: PanelData,
    lam,
    mu: float,
    grid: tuple[float, float, float] = DEFAULT_GRID,
) -> BetaFit:
    """Grid-search the constructive multiplier.

    Every year ``t`` with wealth at ``t`` and ``t + 1`` contributes the
    Euclidean distance between the one-step prediction (tactics built from
    year-``t`` flows and actual sizes) and actual year-``t + 1`` wealth.
    The lowest grid point wins ties.
    """
    betas = beta_grid(*grid)
    curve, years = beta_objective_curve(panel, lam, mu, betas)
    k = int(np.argmin(curve))
    return BetaFit(
        beta=float(betas[k]),
        objective=float(curve[k]),
        grid=tuple(float(v) for v in grid),
        betas=betas,
        objectives=curve,
        years=years,
    )
