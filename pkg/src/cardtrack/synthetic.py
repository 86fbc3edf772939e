"""Synthetic market fixtures with known ground truth."""
from __future__ import annotations

import csv
import datetime as dt
from typing import Optional, Sequence

import numpy as np

from .market_data import PricePanel, ReturnsPanel

__all__ = ["business_dates", "factor_returns", "constructed_index_panel", "to_price_panel", "write_price_csv"]


def business_dates(n: int, start: dt.date = dt.date(2021, 6, 1)) -> tuple[str, ...]:
    out, day = [], start
    while len(out) < n:
        if day.weekday() < 5:
            out.append(day.isoformat())
        day += dt.timedelta(days=1)
    return tuple(out)


def factor_returns(
    n_periods: int, n_assets: int, seed: int = 0, n_factors: int = 3, vol: float = 0.015
) -> np.ndarray:
    """Daily-like returns from a small linear factor model."""
    rng = np.random.default_rng(seed)
    loadings = rng.normal(1.0 / n_factors, 0.5 / n_factors, size=(n_assets, n_factors))
    factors = rng.normal(0.0005, vol, size=(n_periods, n_factors))
    idio = rng.normal(0.0, vol * 0.6, size=(n_periods, n_assets))
    return np.clip(factors @ loadings.T + idio, -0.5, 0.5)


def constructed_index_panel(
    units: Sequence[int],
    resolution: int,
    n_periods: int = 60,
    seed: int = 0,
    returns: Optional[np.ndarray] = None,
) -> ReturnsPanel:
    """Panel whose index is exactly ``returns @ (units / resolution)``."""
    units = np.asarray(units)
    if units.sum() != resolution:
        raise ValueError("units must sum to the resolution")
    if returns is None:
        returns = factor_returns(n_periods, len(units), seed=seed)
    rhat = returns @ (units / resolution)
    return ReturnsPanel(
        dates=business_dates(returns.shape[0]),
        asset_ids=tuple(f"A{i:03d}" for i in range(len(units))),
        returns=returns,
        index_returns=rhat,
    )


def to_price_panel(panel: ReturnsPanel, base: float = 100.0) -> PricePanel:
    """Cumulate returns from a flat base price (one extra leading row)."""
    T, N = panel.returns.shape
    growth = np.vstack([np.ones((1, N)), np.cumprod(1.0 + panel.returns, axis=0)])
    idx = None
    if panel.index_returns is not None:
        idx = base * np.concatenate([[1.0], np.cumprod(1.0 + panel.index_returns)])
    start = dt.date.fromisoformat(panel.dates[0]) - dt.timedelta(days=1) if panel.dates else dt.date(2021, 6, 1)
    return PricePanel(
        dates=(start.isoformat(),) + tuple(panel.dates),
        asset_ids=panel.asset_ids,
        prices=base * growth,
        index_prices=idx,
    )


def write_price_csv(prices: PricePanel, path, index_col: str = "INDEX") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["date", *prices.asset_ids]
        if prices.index_prices is not None:
            header.append(index_col)
        w.writerow(header)
        for t, date in enumerate(prices.dates):
            row = [date, *(repr(float(v)) for v in prices.prices[t])]
            if prices.index_prices is not None:
                row.append(repr(float(prices.index_prices[t])))
            w.writerow(row)
