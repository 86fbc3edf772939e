"""Compile portfolio objectives into QUBO models.

Three builders share one variable layout (see :mod:`cardtrack.encoding`):

* Markowitz: ``-w.mu + gamma w'Sigma w + A_b (sum w - 1)^2``
* tracking: ``A_tr sum_t (w.r_t - rhat_t)^2 + A_b (sum w - 1)^2
  + A_c (sum z - C)^2 + A_z sum_{i,d} x_{i,d} (1 - z_i)``
* enhanced: tracking with the per-period error replaced by
  ``(1 - lam) (w.r_t - rhat_t)^2 + lam (-w.r_t + gamma w'Sigma_t w)``

The indicator term only forbids holdings without an indicator; an indicator
set on an empty holding is caught by :func:`cardtrack.encoding.feasible`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .encoding import EncodingScheme
from .errors import InsufficientDataError, ShapeError
from .market_data import CovarianceSet, ReturnsPanel, sample_covariance
from .qubo import PenaltyTerm, QuboModel, merge, quadratic_form_model, squared_linear_model

__all__ = [
    "ObjectiveConfig",
    "MODES",
    "build_markowitz",
    "build_tracking",
    "build_enhanced",
    "markowitz_terms",
    "tracking_terms",
    "enhanced_terms",
    "auto_scaled",
]

MODES = ("markowitz", "tracking", "enhanced")
_OBJECTIVE_KINDS = ("tracking", "return", "risk")


@dataclass(frozen=True)
class ObjectiveConfig:
    """Objective parameters and penalty weights.

    ``auto_scale`` replaces every constraint weight by ``4 K`` times the
    largest absolute coefficient of the unpenalised objective.
    """

    mode: str = "tracking"
    gamma: float = 1.0
    lam: float = 0.0
    a_track: float = 1.0
    a_budget: float = 1.0
    a_card: float = 1.0
    a_ind: float = 1.0
    auto_scale: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.mode == "enhanced" and not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        for name in ("a_track", "a_budget", "a_card", "a_ind"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def _check(panel: ReturnsPanel, scheme: EncodingScheme, mode: str, config: ObjectiveConfig):
    if config.mode != mode:
        raise ValueError(f"config.mode is {config.mode!r}, builder expects {mode!r}")
    if panel.n_assets != scheme.n_assets:
        raise ShapeError(
            f"panel has {panel.n_assets} assets, scheme encodes {scheme.n_assets}"
        )


def _budget(scheme: EncodingScheme) -> QuboModel:
    B = scheme.weight_matrix()
    return squared_linear_model(B.sum(axis=0), 1.0, scheme.n_vars)


def _cardinality(scheme: EncodingScheme) -> QuboModel:
    reg = scheme.registry
    c = np.zeros(scheme.n_vars)
    c[reg.n_holding:] = 1.0
    return squared_linear_model(c, float(scheme.cardinality), scheme.n_vars)


def _indicator(scheme: EncodingScheme) -> QuboModel:
    """``sum_{i,d} x_{i,d} (1 - z_i)``."""
    reg = scheme.registry
    M = scheme.n_vars
    h = np.zeros(M)
    J = np.zeros((M, M))
    h[: reg.n_holding] = 1.0
    for i in range(scheme.n_assets):
        z = reg.indicator(i)
        for d in range(scheme.n_bits):
            J[reg.holding(i, d), z] = -1.0
    return QuboModel(h, J, 0.0)


def _tracking(panel: ReturnsPanel, scheme: EncodingScheme) -> QuboModel:
    """``sum_t (w.r_t - rhat_t)^2`` over the encoded weights."""
    rhat = panel.require_index()
    RB = panel.returns @ scheme.weight_matrix()  # T x M
    return quadratic_form_model(RB.T @ RB, -2.0 * (RB.T @ rhat), float(rhat @ rhat))


def _neg_return(mean_or_total: np.ndarray, scheme: EncodingScheme) -> QuboModel:
    B = scheme.weight_matrix()
    M = scheme.n_vars
    return QuboModel(-(B.T @ mean_or_total), np.zeros((M, M)), 0.0)


def _risk(cov: np.ndarray, scheme: EncodingScheme) -> QuboModel:
    B = scheme.weight_matrix()
    return quadratic_form_model(B.T @ cov @ B)


def _constraints(scheme: EncodingScheme, config: ObjectiveConfig, cardinality: bool) -> list[PenaltyTerm]:
    terms = [PenaltyTerm("budget", config.a_budget, _budget(scheme))]
    if cardinality:
        terms.append(PenaltyTerm("cardinality", config.a_card, _cardinality(scheme)))
        terms.append(PenaltyTerm("indicator-coupling", config.a_ind, _indicator(scheme)))
    return terms


def auto_scaled(terms: list[PenaltyTerm], resolution: int) -> list[PenaltyTerm]:
    """Set each constraint weight to ``4 * K * max |objective coefficient|``.

    Objective coefficients live on the 1/K weight grid; without the factor K
    a one-unit budget slip is cheaper than the tracking gain it buys.
    """
    objective = [(t.fragment, t.weight) for t in terms if t.kind in _OBJECTIVE_KINDS]
    if not objective:
        return terms
    scale = 4.0 * resolution * merge(objective).max_abs_coefficient()
    if scale == 0:
        return terms
    return [t if t.kind in _OBJECTIVE_KINDS else replace(t, weight=scale) for t in terms]


def _finish(terms: list[PenaltyTerm], scheme: EncodingScheme, config: ObjectiveConfig) -> list[PenaltyTerm]:
    return auto_scaled(terms, scheme.resolution) if config.auto_scale else terms


def markowitz_terms(
    panel: ReturnsPanel, scheme: EncodingScheme, config: ObjectiveConfig, cardinality: bool = False
) -> list[PenaltyTerm]:
    _check(panel, scheme, "markowitz", config)
    R = panel.returns
    cov = sample_covariance(R)
    terms = [
        PenaltyTerm("return", 1.0, _neg_return(R.mean(axis=0), scheme)),
        PenaltyTerm("risk", config.gamma, _risk(cov, scheme)),
    ]
    return _finish(terms + _constraints(scheme, config, cardinality), scheme, config)


def build_markowitz(
    panel: ReturnsPanel, scheme: EncodingScheme, config: ObjectiveConfig, cardinality: bool = False
) -> QuboModel:
    """Mean-variance QUBO ``-w.mu + gamma w'Sigma w + A_b (sum w - 1)^2``.

    With ``cardinality=True`` the cardinality and indicator terms of the
    tracking model are added, giving the cardinality-constrained variant.
    Otherwise the indicator bits carry no energy.
    """
    return merge((t.fragment, t.weight) for t in markowitz_terms(panel, scheme, config, cardinality))


def tracking_terms(panel: ReturnsPanel, scheme: EncodingScheme, config: ObjectiveConfig) -> list[PenaltyTerm]:
    _check(panel, scheme, "tracking", config)
    terms = [PenaltyTerm("tracking", config.a_track, _tracking(panel, scheme))]
    return _finish(terms + _constraints(scheme, config, True), scheme, config)


def build_tracking(panel: ReturnsPanel, scheme: EncodingScheme, config: ObjectiveConfig) -> QuboModel:
    return merge((t.fragment, t.weight) for t in tracking_terms(panel, scheme, config))


def enhanced_terms(
    panel: ReturnsPanel, scheme: EncodingScheme, covset: CovarianceSet, config: ObjectiveConfig
) -> list[PenaltyTerm]:
    _check(panel, scheme, "enhanced", config)
    if covset is None or len(covset.rolling) == 0:
        raise InsufficientDataError("enhanced tracking needs rolling covariances")
    if covset.rolling.shape[1] != panel.n_assets:
        raise ShapeError("rolling covariances do not match the panel's assets")
    lam = config.lam
    terms = [PenaltyTerm("tracking", (1.0 - lam) * config.a_track, _tracking(panel, scheme))]
    if lam > 0:
        slot = covset.aligned(panel.n_periods)
        counts = np.bincount(slot, minlength=len(covset.rolling)).astype(float)
        cov_sum = np.tensordot(counts, covset.rolling, axes=1)
        terms.append(PenaltyTerm("return", lam, _neg_return(panel.returns.sum(axis=0), scheme)))
        terms.append(PenaltyTerm("risk", lam, _risk(config.gamma * cov_sum, scheme)))
    return _finish(terms + _constraints(scheme, config, True), scheme, config)


def build_enhanced(
    panel: ReturnsPanel, scheme: EncodingScheme, covset: CovarianceSet, config: ObjectiveConfig
) -> QuboModel:
    """Risk-ratio blend of tracking and per-period mean-variance terms.

    At ``lam == 0`` the result equals :func:`build_tracking` bit for bit.
    """
    return merge((t.fragment, t.weight) for t in enhanced_terms(panel, scheme, covset, config))
