"""Tracking-quality and enhancement metrics for a fixed-weight portfolio.

All metrics take the holdings ``weights`` (length N) and a
:class:`~cardtrack.market_data.ReturnsPanel`; the portfolio return in
period ``t`` is ``weights @ returns[t]``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DegenerateRiskError, DomainError, ShapeError, UndefinedMetricError
from .market_data import CovarianceSet, ReturnsPanel, rolling_variance

__all__ = [
    "RelativeErrorSummary",
    "TrackingReport",
    "portfolio_returns",
    "tracking_error",
    "cumulative_log_returns",
    "cumulative_tracking_error",
    "relative_error_summary",
    "vol_error",
    "correlation",
    "sharpe_series",
    "index_sharpe_series",
    "mdrse",
    "enhancement_score",
    "score_portfolio",
    "DENOMINATOR_FLOOR",
]

DENOMINATOR_FLOOR = 1e-12


def portfolio_returns(weights, panel: ReturnsPanel) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (panel.n_assets,):
        raise ShapeError(f"weights have shape {w.shape}, expected ({panel.n_assets},)")
    return panel.returns @ w


def tracking_error(weights, panel: ReturnsPanel) -> float:
    """Sum of squared per-period deviations from the index."""
    gap = portfolio_returns(weights, panel) - panel.require_index()
    return float(gap @ gap)


def cumulative_log_returns(period_returns) -> np.ndarray:
    r = np.asarray(period_returns, dtype=float)
    if np.any(r <= -1.0):
        raise DomainError("a period return of -100% or below has no log return")
    return np.cumsum(np.log1p(r))


def cumulative_tracking_error(weights, panel: ReturnsPanel) -> float:
    """Sum over t of the squared gap in cumulative log return."""
    gap = cumulative_log_returns(portfolio_returns(weights, panel)) - cumulative_log_returns(
        panel.require_index()
    )
    return float(gap @ gap)


class RelativeErrorSummary(NamedTuple):
    mre: float
    mdre: float
    skipped: int


def relative_error_summary(weights, panel: ReturnsPanel) -> RelativeErrorSummary:
    """Mean and median of ``|cum gap| / |cum index|`` over periods.

    Periods whose cumulative index log return is below 1e-12 in magnitude
    are skipped and counted.
    """
    cum_index = cumulative_log_returns(panel.require_index())
    cum_port = cumulative_log_returns(portfolio_returns(weights, panel))
    valid = np.abs(cum_index) >= DENOMINATOR_FLOOR
    if not valid.any():
        raise UndefinedMetricError("index cumulative return is zero at every period")
    rel = np.abs(cum_port[valid] - cum_index[valid]) / np.abs(cum_index[valid])
    return RelativeErrorSummary(float(rel.mean()), float(np.median(rel)), int((~valid).sum()))


def vol_error(weights, panel: ReturnsPanel) -> float:
    """Signed relative difference of sample standard deviations."""
    if panel.n_periods < 2:
        raise UndefinedMetricError("volatility needs at least 2 periods")
    s_index = float(np.std(panel.require_index(), ddof=1))
    if s_index == 0:
        raise UndefinedMetricError("index volatility is zero")
    s_port = float(np.std(portfolio_returns(weights, panel), ddof=1))
    return (s_port - s_index) / s_index


def correlation(weights, panel: ReturnsPanel) -> float:
    """Pearson correlation of per-period (not cumulative) returns."""
    p = portfolio_returns(weights, panel)
    q = panel.require_index()
    if np.std(p) == 0 or np.std(q) == 0:
        raise UndefinedMetricError("correlation with a constant series")
    return float(np.clip(np.corrcoef(p, q)[0, 1], -1.0, 1.0))


def sharpe_series(weights, panel: ReturnsPanel, covset: CovarianceSet) -> np.ndarray:
    """Per-period ``w.r_t / sqrt(w' Sigma_t w)`` with zero risk-free rate."""
    w = np.asarray(weights, dtype=float)
    ret = portfolio_returns(w, panel)
    slot = covset.aligned(panel.n_periods)
    var_by_window = np.einsum("i,kij,j->k", w, covset.rolling, w)
    var = var_by_window[slot]
    if np.any(var <= 0):
        raise DegenerateRiskError("portfolio variance under a rolling covariance is not positive")
    return ret / np.sqrt(var)


def index_sharpe_series(panel: ReturnsPanel, window: int) -> np.ndarray:
    """Index Sharpe per period with the same trailing-window alignment."""
    rhat = panel.require_index()
    var = rolling_variance(rhat, window)
    slot = np.maximum(0, np.arange(panel.n_periods) - window + 1)
    v = var[slot]
    if np.any(v <= 0):
        raise DegenerateRiskError("index variance under a rolling window is not positive")
    return rhat / np.sqrt(v)


def mdrse(portfolio_sharpe: Sequence[float], index_sharpe: Sequence[float]) -> float:
    """Median over periods of ``(S_p - S_i) / |S_i|``; near-zero ``S_i`` skipped."""
    sp = np.asarray(portfolio_sharpe, dtype=float)
    si = np.asarray(index_sharpe, dtype=float)
    if sp.shape != si.shape:
        raise ShapeError("Sharpe series lengths differ")
    valid = np.abs(si) >= DENOMINATOR_FLOOR
    if not valid.any():
        raise UndefinedMetricError("no period with a nonzero index Sharpe ratio")
    return float(np.median((sp[valid] - si[valid]) / np.abs(si[valid])))


def enhancement_score(sharpe_gain: float, cte: float) -> float:
    """``sharpe_gain / cte``; ``math.inf`` when ``cte`` is zero."""
    if cte < 0:
        raise ValueError("cumulative tracking error cannot be negative")
    if cte == 0:
        return math.inf
    return sharpe_gain / cte


@dataclass(frozen=True)
class TrackingReport:
    te: float
    cte: float
    mre: float
    mdre: float
    vol_error: float
    correlation: float
    sharpe_series: Optional[tuple[float, ...]] = None
    mdrse: Optional[float] = None
    enhancement_score: Optional[float] = None
    success_rate: Optional[float] = None
    skipped_periods: int = 0

    def as_dict(self) -> dict:
        out = asdict(self)
        if self.sharpe_series is not None:
            out["sharpe_series"] = list(self.sharpe_series)
        return out


def score_portfolio(
    weights,
    panel: ReturnsPanel,
    covset: Optional[CovarianceSet] = None,
    success_rate: Optional[float] = None,
) -> TrackingReport:
    """Every metric for one portfolio; Sharpe-based fields need ``covset``."""
    rel = relative_error_summary(weights, panel)
    cte = cumulative_tracking_error(weights, panel)
    sharpe = gain = score = None
    if covset is not None:
        sharpe = sharpe_series(weights, panel, covset)
        gain = mdrse(sharpe, index_sharpe_series(panel, covset.window))
        score = enhancement_score(gain, cte)
        sharpe = tuple(float(s) for s in sharpe)
    return TrackingReport(
        te=tracking_error(weights, panel),
        cte=cte,
        mre=rel.mre,
        mdre=rel.mdre,
        vol_error=vol_error(weights, panel),
        correlation=correlation(weights, panel),
        sharpe_series=sharpe,
        mdrse=gain,
        enhancement_score=score,
        success_rate=success_rate,
        skipped_periods=rel.skipped,
    )
