"""Shared fixtures and independent oracles for the test suite."""
import itertools

import numpy as np

from cardtrack.market_data import ReturnsPanel
from cardtrack.synthetic import business_dates, factor_returns


def make_panel(returns, index=None):
    returns = np.asarray(returns, dtype=float)
    return ReturnsPanel(
        business_dates(returns.shape[0]),
        tuple(f"A{i:03d}" for i in range(returns.shape[1])),
        returns,
        index,
    )


def random_index_panel(n_assets, n_periods=60, seed=0):
    R = factor_returns(n_periods, n_assets, seed=seed)
    w = np.random.default_rng(seed + 1).dirichlet(np.ones(n_assets))
    return make_panel(R, R @ w)


def high_variance_duplicate_panel(n_periods=120, seed=7):
    """Asset 0 is the index itself; asset 1 is a calmer near-substitute."""
    rng = np.random.default_rng(seed)
    index = rng.normal(0.001, 0.02, n_periods)
    calm = 0.6 * index + rng.normal(0.0004, 0.003, n_periods)
    other = rng.normal(-0.002, 0.02, n_periods)
    noisy = rng.normal(-0.003, 0.03, n_periods)
    return make_panel(np.column_stack([index, calm, other, noisy]), index)


def min_popcount(coefficients):
    """Fewest set bits that spell each unit count ``0..sum(coefficients)``."""
    best = {}
    for bits in itertools.product((0, 1), repeat=len(coefficients)):
        u = int(np.dot(bits, coefficients))
        best[u] = min(best.get(u, len(bits) + 1), sum(bits))
    return np.array([best[u] for u in range(sum(coefficients) + 1)])


def term_weights(terms):
    return {t.kind: t.weight for t in terms}


def tracking_energy(units, selected, bits_set, panel, scheme, weights):
    """Real-arithmetic tracking objective for one decoded portfolio."""
    K, C = scheme.resolution, scheme.cardinality
    w = np.asarray(units, dtype=float) / K
    gap = panel.returns @ w - panel.index_returns
    z = np.asarray(selected)
    return (
        weights.get("tracking", 0.0) * float(gap @ gap)
        + weights["budget"] * (w.sum() - 1.0) ** 2
        + weights["cardinality"] * (z.sum() - C) ** 2
        + weights["indicator-coupling"] * float(np.sum(np.asarray(bits_set) * (1 - z)))
    )


def portfolio_brute_force(panel, scheme, weights, tol=1e-9):
    """Minimum of the tracking objective over every (units, indicators) pair.

    Returns the minimum energy and all portfolios within ``tol`` of it.
    """
    N, K, C = scheme.n_assets, scheme.resolution, scheme.cardinality
    pc = min_popcount(scheme.coefficients)
    U = np.array(list(itertools.product(range(scheme.k_max + 1), repeat=N)))
    Z = np.array(list(itertools.product((0, 1), repeat=N)))
    W = U / K
    gap = W @ panel.returns.T - panel.index_returns
    te = np.einsum("ut,ut->u", gap, gap)
    budget = (W.sum(axis=1) - 1.0) ** 2
    card = (Z.sum(axis=1) - C) ** 2.0
    # indicator term: cheapest bit pattern for each unflagged holding
    ind = pc[U] @ (1 - Z).T
    E = (
        weights.get("tracking", 0.0) * te[:, None]
        + weights["budget"] * budget[:, None]
        + weights["cardinality"] * card[None, :]
        + weights["indicator-coupling"] * ind
    )
    best = E.min()
    hits = np.argwhere(E <= best + tol)
    return float(best), [(tuple(U[i]), tuple(Z[j])) for i, j in hits]
