"""Cardinality-constrained index tracking compiled to QUBO form."""
from .encoding import EncodingScheme, build_scheme, decode, feasible
from .market_data import CovarianceSet, ReturnsPanel, covariances, load_prices, to_returns
from .metrics import TrackingReport, score_portfolio
from .objectives import ObjectiveConfig, build_enhanced, build_markowitz, build_tracking
from .qubo import QuboModel, energy, merge
from .solver import AnnealConfig, Solution, filter_rank, solve_exhaustive, solve_sa

__all__ = [
    "AnnealConfig",
    "CovarianceSet",
    "EncodingScheme",
    "ObjectiveConfig",
    "QuboModel",
    "ReturnsPanel",
    "Solution",
    "TrackingReport",
    "build_enhanced",
    "build_markowitz",
    "build_scheme",
    "build_tracking",
    "covariances",
    "decode",
    "energy",
    "feasible",
    "filter_rank",
    "load_prices",
    "merge",
    "score_portfolio",
    "solve_exhaustive",
    "solve_sa",
    "to_returns",
]

__version__ = "0.1.0"
