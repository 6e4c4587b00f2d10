"""Schema-compatible synthetic panels.

:func:`synthesize_panel` runs the model forward, so its wealth series are
exactly what the engine predicts from its own flows; calibration and
backtests on it should recover the generating parameters.
:func:`synthesize_growth_panel` instead grows wealth along a prescribed
growth-versus-trade line.
"""

from __future__ import annotations

import string
from itertools import product
from typing import Mapping

import numpy as np

from powerflow.model import CountryRegistry, Parameters, PowerStructure, step
from powerflow.panel import PanelData, build_tactics, trade_volume


def country_codes(n: int) -> tuple[str, ...]:
    """``n`` distinct, sorted three-letter codes (``XAA``, ``XAB``, ...)."""
    letters = string.ascii_uppercase
    codes = ["X" + a + b for a, b in product(letters, repeat=2)]
    if n > len(codes):
        raise ValueError(f"at most {len(codes)} synthetic codes")
    return tuple(codes[:n])


def _balanced_flows(rng, codes, sizes, year, share_range):
    n = len(codes)
    trade = {}
    scale = rng.uniform(*share_range) / max(n - 1, 1)
    for j in range(n):
        for i in range(j + 1, n):
            v = float(2.0 * scale * rng.random() * min(sizes[i], sizes[j]))
            trade[(codes[j], codes[i], year)] = v
            trade[(codes[i], codes[j], year)] = v
    return trade


def _random_flows(rng, codes, sizes, year, share_range, density):
    n = len(codes)
    trade = {}
    for j in range(n):
        partners = [i for i in range(n) if i != j and (density >= 1 or rng.random() < density)]
        if not partners:
            continue
        weights = rng.random(len(partners))
        total = rng.uniform(*share_range)
        for i, w in zip(partners, weights / weights.sum()):
            trade[(codes[j], codes[i], year)] = float(total * w * sizes[j])
    # write both directions so no dyad is mirrored
    for (r, p, y) in list(trade):
        trade.setdefault((p, r, y), 0.0)
    return trade


def synthesize_panel(
    params: Parameters,
    n_countries: int = 20,
    n_years: int = 25,
    start_year: int = 1995,
    seed: int = 0,
    *,
    trade_share: tuple[float, float] = (0.05, 0.3),
    density: float = 1.0,
    balanced: bool = False,
    milex_share: float = 0.02,
    conflicts: Mapping[tuple[str, str, int], float] | None = None,
    codes: tuple[str, ...] | None = None,
    initial_wealth: Mapping[str, float] | None = None,
) -> PanelData:
    """Panel whose wealth follows the law of motion exactly.

    Each year, trade flows are random fractions of current wealth; military
    expenditure is ``milex_share`` of wealth, raised where needed so that it
    covers the given ``conflicts`` (absolute amounts). With ``balanced``
    every dyad trades the same amount in both directions. Wealth in year
    ``t + 1`` is one model step from year ``t``. Covers ``n_years`` wealth
    years and flows for every one of them.
    """
    rng = np.random.default_rng(seed)
    codes = tuple(sorted(codes)) if codes is not None else country_codes(n_countries)
    registry = CountryRegistry(codes)
    n = len(codes)
    if initial_wealth is not None:
        sizes = np.array([float(initial_wealth[c]) for c in codes])
    else:
        sizes = rng.uniform(50.0, 5000.0, n)
    conflicts = dict(conflicts or {})

    wealth, trade, milex, war = {}, {}, {}, {}
    for k in range(n_years):
        year = start_year + k
        for c, s in zip(codes, sizes):
            wealth[(c, year)] = float(s)
        if balanced:
            year_trade = _balanced_flows(rng, codes, sizes, year, trade_share)
        else:
            year_trade = _random_flows(rng, codes, sizes, year, trade_share, density)
        year_war = {key: v for key, v in conflicts.items() if key[2] == year}
        spend = {c: 0.0 for c in codes}
        for (a, _t, _y), v in year_war.items():
            spend[a] += v
        year_milex = {(c, year): max(milex_share * s, spend[c]) for c, s in zip(codes, sizes)}
        trade.update(year_trade)
        war.update(year_war)
        milex.update(year_milex)
        if k == n_years - 1:
            break
        one_year = PanelData(registry, {(c, year): wealth[(c, year)] for c in codes},
                             year_trade, year_milex, year_war)
        tactics = build_tactics(one_year, year, sizes)
        sizes = step(PowerStructure(registry, sizes, tactics), params)
    return PanelData(registry, wealth, trade, milex, war)


def synthesize_growth_panel(
    intercept: float = 1.025,
    slope: float = 0.201,
    n_countries: int = 20,
    n_years: int = 25,
    start_year: int = 1995,
    seed: int = 0,
    *,
    trade_share: tuple[float, float] = (0.02, 0.4),
    noise: float = 0.0,
) -> PanelData:
    """Panel where ``w(t+1) = w(t) * (intercept + slope * tp(t) + noise)``.

    ``tp`` is exports plus imports over wealth, matching the regressor used
    by the growth regression.
    """
    rng = np.random.default_rng(seed)
    codes = country_codes(n_countries)
    registry = CountryRegistry(codes)
    sizes = rng.uniform(50.0, 5000.0, n_countries)
    wealth, trade = {}, {}
    for k in range(n_years):
        year = start_year + k
        for c, s in zip(codes, sizes):
            wealth[(c, year)] = float(s)
        year_trade = _random_flows(rng, codes, sizes, year, trade_share, 1.0)
        trade.update(year_trade)
        one_year = PanelData(registry, {(c, year): wealth[(c, year)] for c in codes}, year_trade)
        tp = trade_volume(one_year, year) / sizes
        eps = rng.normal(0.0, noise, n_countries) if noise > 0 else 0.0
        sizes = sizes * (intercept + slope * tp + eps)
    return PanelData(registry, wealth, trade)
