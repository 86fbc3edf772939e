"""Bounded integer encoding of portfolio weights onto binary variables.

Each asset ``i`` holds an integer number of units ``u_i`` in ``[0, K_max]``
written as a subset-sum of ``D`` coefficients (powers of two followed by
one residual), so ``w_i = u_i / K``. Every asset also owns one indicator
bit ``z_i`` marking it as invested.

Variable layout (flat index)::

    x_{0,0} .. x_{0,D-1}, x_{1,0} .. x_{N-1,D-1}, z_0 .. z_{N-1}
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundTooTightError, InfeasibleSchemeError, ShapeError

__all__ = [
    "EncodingScheme",
    "VariableRegistry",
    "Verdict",
    "bounded_coefficients",
    "build_scheme",
    "decode",
    "decode_units",
    "feasible",
]

# slack for float products like 0.2 * 63 = 12.600000000000001
_FLOOR_EPS = 1e-9


def bounded_coefficients(k_max: int) -> tuple[int, ...]:
    """Powers of two plus a residual whose subset sums cover ``0..k_max``.

    >>> bounded_coefficients(6)
    (1, 2, 3)
    >>> bounded_coefficients(25)
    (1, 2, 4, 8, 10)
    """
    if k_max < 1:
        raise ValueError("k_max must be positive")
    n_bits = math.ceil(math.log2(k_max + 1))
    head = tuple(2 ** d for d in range(n_bits - 1))
    residual = k_max - (2 ** (n_bits - 1) - 1)
    return head + (residual,)


@dataclass(frozen=True)
class VariableRegistry:
    n_assets: int
    n_bits: int

    @property
    def n_vars(self) -> int:
        return self.n_assets * (self.n_bits + 1)

    @property
    def n_holding(self) -> int:
        return self.n_assets * self.n_bits

    def holding(self, asset: int, bit: int) -> int:
        if not (0 <= asset < self.n_assets and 0 <= bit < self.n_bits):
            raise IndexError((asset, bit))
        return asset * self.n_bits + bit

    def indicator(self, asset: int) -> int:
        if not 0 <= asset < self.n_assets:
            raise IndexError(asset)
        return self.n_holding + asset

    def describe(self, flat: int) -> tuple[str, int, int]:
        """Inverse map: ``('x', asset, bit)`` or ``('z', asset, -1)``."""
        if not 0 <= flat < self.n_vars:
            raise IndexError(flat)
        if flat < self.n_holding:
            return ("x", flat // self.n_bits, flat % self.n_bits)
        return ("z", flat - self.n_holding, -1)


@dataclass(frozen=True)
class EncodingScheme:
    resolution: int
    cardinality: int
    max_holding_fraction: float
    k_max: int
    coefficients: tuple[int, ...]
    n_assets: int
    registry: VariableRegistry = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "registry", VariableRegistry(self.n_assets, self.n_bits))

    @property
    def n_bits(self) -> int:
        return len(self.coefficients)

    @property
    def n_vars(self) -> int:
        return self.n_assets * (self.n_bits + 1)

    def weight_matrix(self) -> np.ndarray:
        """``N x M`` matrix ``B`` with ``weights = B @ assignment``."""
        B = np.zeros((self.n_assets, self.n_vars))
        coef = np.asarray(self.coefficients, dtype=float) / self.resolution
        D = self.n_bits
        for i in range(self.n_assets):
            B[i, i * D:(i + 1) * D] = coef
        return B


def build_scheme(K: int, C: int, max_holding_fraction: float, N: int) -> EncodingScheme:
    """Choose ``K_max`` and the bit coefficients for ``N`` assets.

    ``K_max = min(floor(max_holding_fraction * K), K - C + 1)``.

    Raises:
        InfeasibleSchemeError: ``K < C``, ``C`` outside ``[1, N]``, or the cap
            leaves no way to spend all ``K`` units on ``C`` assets.
        BoundTooTightError: ``floor(max_holding_fraction * K) < floor(K / C)``.
    """
    if N < 1:
        raise InfeasibleSchemeError("need at least one asset")
    if not 1 <= C <= N:
        raise InfeasibleSchemeError(f"cardinality C={C} must lie in [1, N={N}]")
    if K < C:
        raise InfeasibleSchemeError(f"K/C < 1 (K={K}, C={C})")
    if not 0 < max_holding_fraction <= 1:
        raise InfeasibleSchemeError("max_holding_fraction must be in (0, 1]")
    cap = math.floor(max_holding_fraction * K + _FLOOR_EPS)
    if cap < K // C:
        raise BoundTooTightError(
            f"max holding of {cap} units is below floor(K/C) = {K // C}"
        )
    k_max = min(cap, K - C + 1)
    if C * k_max < K:
        raise InfeasibleSchemeError(
            f"C * K_max = {C * k_max} units cannot reach the budget of {K}"
        )
    return EncodingScheme(
        resolution=K,
        cardinality=C,
        max_holding_fraction=float(max_holding_fraction),
        k_max=k_max,
        coefficients=bounded_coefficients(k_max),
        n_assets=N,
    )


def _check_assignment(assignment, scheme: EncodingScheme) -> np.ndarray:
    a = np.asarray(assignment)
    if a.shape != (scheme.n_vars,):
        raise ShapeError(f"assignment has shape {a.shape}, expected ({scheme.n_vars},)")
    return a.astype(np.int64)


def decode_units(assignment, scheme: EncodingScheme) -> tuple[np.ndarray, np.ndarray]:
    """Integer units per asset and the indicator bits."""
    a = _check_assignment(assignment, scheme)
    N, D = scheme.n_assets, scheme.n_bits
    bits = a[: N * D].reshape(N, D)
    units = bits @ np.asarray(scheme.coefficients, dtype=np.int64)
    return units, a[N * D:].copy()


def decode(assignment, scheme: EncodingScheme) -> tuple[np.ndarray, np.ndarray]:
    """Weights ``u_i / K`` and the indicator vector."""
    units, selected = decode_units(assignment, scheme)
    return units / scheme.resolution, selected


@dataclass(frozen=True)
class Verdict:
    feasible: bool
    violations: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.feasible


def feasible(weights, selected, scheme: EncodingScheme, tolerance: float = 1e-9) -> Verdict:
    """Check budget, cardinality, indicator consistency and holding bounds.

    Violation tags: ``budget``, ``cardinality``, ``phantom-indicator``
    (selected asset with zero weight), ``unflagged-holding`` (weight without
    indicator), ``holding-bounds`` and ``off-grid`` (weight not a multiple
    of 1/K).
    """
    w = np.asarray(weights, dtype=float)
    z = np.asarray(selected)
    if w.shape != (scheme.n_assets,) or z.shape != (scheme.n_assets,):
        raise ShapeError("weights/selected must have one entry per asset")
    K = scheme.resolution
    scaled = w * K
    units = np.rint(scaled).astype(np.int64)
    violations = []
    if np.any(np.abs(scaled - units) > tolerance * K):
        violations.append("off-grid")
    if units.sum() != K:
        violations.append("budget")
    if int(z.sum()) != scheme.cardinality:
        violations.append("cardinality")
    invested = units > 0
    if np.any((z == 1) & ~invested):
        violations.append("phantom-indicator")
    if np.any(invested & (z != 1)):
        violations.append("unflagged-holding")
    if np.any(units < 0) or np.any(units[invested] > scheme.k_max):
        violations.append("holding-bounds")
    return Verdict(not violations, tuple(violations))
