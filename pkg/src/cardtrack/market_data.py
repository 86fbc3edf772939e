"""Price/return ingestion and covariance estimation.

Prices come from a wide CSV (``date,<ticker1>,...,<tickerN>[,INDEX]``).
Returns are simple per-period returns; covariances use the unbiased
(n - 1) denominator.
"""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, InsufficientDataError, ParseError

__all__ = [
    "PricePanel",
    "ReturnsPanel",
    "CovarianceSet",
    "load_prices",
    "to_returns",
    "covariances",
    "sample_covariance",
]


@dataclass(frozen=True)
class PricePanel:
    dates: tuple[str, ...]
    asset_ids: tuple[str, ...]
    prices: np.ndarray
    index_prices: Optional[np.ndarray] = None

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        prices.setflags(write=False)
        object.__setattr__(self, "prices", prices)
        if self.index_prices is not None:
            idx = np.array(self.index_prices, dtype=float)
            idx.setflags(write=False)
            object.__setattr__(self, "index_prices", idx)


@dataclass(frozen=True)
class ReturnsPanel:
    """T x N simple returns plus the target index return series.

    ``dates[t]`` labels the end of period ``t``.
    """

    dates: tuple[str, ...]
    asset_ids: tuple[str, ...]
    returns: np.ndarray
    index_returns: Optional[np.ndarray] = None

    def __post_init__(self):
        returns = np.array(self.returns, dtype=float)
        if returns.ndim != 2:
            raise DataError("returns must be a 2-D T x N matrix")
        T, N = returns.shape
        if len(self.dates) != T:
            raise DataError(f"dates has length {len(self.dates)}, expected {T}")
        if len(self.asset_ids) != N:
            raise DataError(f"asset_ids has length {len(self.asset_ids)}, expected {N}")
        if len(set(self.asset_ids)) != N:
            raise DataError("asset_ids must be unique")
        if not np.all(np.isfinite(returns)):
            raise DataError("returns contain non-finite values")
        if np.any(returns <= -1.0):
            raise DataError("a simple return of -100% or below is not allowed")
        returns.setflags(write=False)
        object.__setattr__(self, "returns", returns)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "asset_ids", tuple(self.asset_ids))
        if self.index_returns is not None:
            idx = np.array(self.index_returns, dtype=float)
            if idx.shape != (T,):
                raise DataError(f"index_returns must have length {T}")
            if not np.all(np.isfinite(idx)) or np.any(idx <= -1.0):
                raise DataError("index returns must be finite and > -1")
            idx.setflags(write=False)
            object.__setattr__(self, "index_returns", idx)

    @property
    def n_periods(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    def require_index(self) -> np.ndarray:
        if self.index_returns is None:
            raise DataError("this operation needs an index return series")
        return self.index_returns


@dataclass(frozen=True)
class CovarianceSet:
    """Full-sample covariance plus trailing rolling-window covariances.

    ``rolling[k]`` covers return rows ``[k, k + window)``. The matrix
    attached to period ``t`` is the trailing window ending at ``t``; the
    first ``window - 1`` periods reuse ``rolling[0]``.
    """

    full: np.ndarray
    rolling: np.ndarray
    window: int

    def __post_init__(self):
        for arr in (self.full, self.rolling):
            arr.setflags(write=False)

    def period_index(self, t: int) -> int:
        return max(0, t - self.window + 1)

    def for_period(self, t: int) -> np.ndarray:
        return self.rolling[self.period_index(t)]

    def aligned(self, n_periods: int) -> np.ndarray:
        """Map each period ``0..n_periods-1`` to its rolling-matrix index."""
        expected = n_periods - self.window + 1
        if expected != len(self.rolling):
            raise InsufficientDataError(
                f"rolling covariances cover {len(self.rolling)} windows, "
                f"panel needs {expected}"
            )
        return np.maximum(0, np.arange(n_periods) - self.window + 1)


def _parse_date(text: str, row: int) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(f"row {row}, column 1: invalid ISO-8601 date {text!r}") from None


def load_prices(path, index_col: Optional[str] = "INDEX") -> PricePanel:
    """Read a wide price CSV, sorted ascending by date.

    Args:
        path: CSV file with header ``date,<ticker>...[,<index_col>]``.
        index_col: name of the target index column; if it is absent from
            the header the panel carries no index prices.

    Raises:
        ParseError: malformed rows or non-numeric cells (row/column given,
            1-based, header is row 1).
        DataError: non-positive prices, duplicate dates or duplicate tickers.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise ParseError("row 1: need a date column and at least one price column")
    columns = header[1:]
    if len(set(columns)) != len(columns):
        raise DataError("duplicate column names in header")
    has_index = index_col is not None and index_col in columns
    index_pos = columns.index(index_col) if has_index else None

    records = []
    for r, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"row {r}: expected {len(header)} fields, got {len(row)}")
        date = _parse_date(row[0], r)
        values = []
        for c, cell in enumerate(row[1:], start=2):
            if not cell.strip():
                raise DataError(f"row {r}, column {c}: missing value")
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"row {r}, column {c}: not a number: {cell!r}") from None
            if not np.isfinite(v) or v <= 0:
                raise DataError(f"row {r}, column {c}: price must be positive, got {cell!r}")
            values.append(v)
        records.append((date, values))

    dates = [d for d, _ in records]
    if len(set(dates)) != len(dates):
        raise DataError("duplicate dates in price file")
    records.sort(key=lambda rec: rec[0])
    matrix = np.array([v for _, v in records], dtype=float).reshape(len(records), len(columns))

    asset_cols = [j for j in range(len(columns)) if j != index_pos]
    return PricePanel(
        dates=tuple(d.isoformat() for d, _ in records),
        asset_ids=tuple(columns[j] for j in asset_cols),
        prices=matrix[:, asset_cols],
        index_prices=matrix[:, index_pos] if has_index else None,
    )


def to_returns(prices: PricePanel) -> ReturnsPanel:
    """Simple returns ``p[t+1] / p[t] - 1``; ``T`` is one less than the row count."""
    if prices.prices.shape[0] < 2:
        raise InsufficientDataError("need at least 2 price rows to form returns")
    p = prices.prices
    rets = p[1:] / p[:-1] - 1.0
    idx = None
    if prices.index_prices is not None:
        ip = prices.index_prices
        idx = ip[1:] / ip[:-1] - 1.0
    return ReturnsPanel(
        dates=prices.dates[1:],
        asset_ids=prices.asset_ids,
        returns=rets,
        index_returns=idx,
    )


def sample_covariance(block: np.ndarray) -> np.ndarray:
    """Unbiased covariance of the rows of ``block``, exactly symmetric."""
    block = np.asarray(block, dtype=float)
    n = block.shape[0]
    if n < 2:
        raise InsufficientDataError("covariance needs at least 2 observations")
    centred = block - block.mean(axis=0)
    cov = (centred.T @ centred) / (n - 1)
    # float addition commutes, so this is bitwise symmetric
    return (cov + cov.T) / 2.0


def covariances(panel: ReturnsPanel, window: int) -> CovarianceSet:
    """Full-sample covariance and every complete trailing window."""
    T = panel.n_periods
    if window < 2:
        raise InsufficientDataError("window must be at least 2")
    if window > T:
        raise InsufficientDataError(f"window {window} exceeds the {T} available periods")
    R = panel.returns
    full = sample_covariance(R)
    rolling = np.stack([sample_covariance(R[k:k + window]) for k in range(T - window + 1)])
    return CovarianceSet(full=full, rolling=rolling, window=window)


def rolling_variance(series: Sequence[float], window: int) -> np.ndarray:
    """Trailing-window sample variance of a 1-D series, one value per window."""
    x = np.asarray(series, dtype=float)[:, None]
    if window < 2 or window > len(x):
        raise InsufficientDataError(f"window {window} invalid for {len(x)} periods")
    return np.array([sample_covariance(x[k:k + window])[0, 0] for k in range(len(x) - window + 1)])
