"""Quadratic forms over binary variables.

A model is ``offset + sum_i h_i a_i + sum_{i<j} J_ij a_i a_j``. Couplings
live in a strictly upper-triangular array; ``(j, i)`` input is folded onto
``(i, j)`` and self-couplings onto the linear part (``a * a == a``).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import ShapeError

__all__ = [
    "QuboModel",
    "PenaltyTerm",
    "TERM_KINDS",
    "energy",
    "energies",
    "add_squared_linear",
    "quadratic_form_model",
    "squared_linear_model",
    "merge",
    "dump_model",
    "load_model",
]

TERM_KINDS = ("budget", "cardinality", "indicator-coupling", "tracking", "return", "risk")


@dataclass(frozen=True, eq=False)
class QuboModel:
    linear: np.ndarray
    quadratic: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        h = np.array(self.linear, dtype=float)
        J = np.array(self.quadratic, dtype=float)
        M = h.shape[0]
        if h.ndim != 1 or J.shape != (M, M):
            raise ShapeError(f"linear {h.shape} and quadratic {J.shape} disagree")
        if np.any(np.tril(J) != 0):
            raise ShapeError("quadratic must be strictly upper triangular")
        h.setflags(write=False)
        J.setflags(write=False)
        object.__setattr__(self, "linear", h)
        object.__setattr__(self, "quadratic", J)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n_vars(self) -> int:
        return self.linear.shape[0]

    @classmethod
    def zeros(cls, n_vars: int, offset: float = 0.0) -> "QuboModel":
        return cls(np.zeros(n_vars), np.zeros((n_vars, n_vars)), offset)

    @classmethod
    def from_terms(
        cls,
        n_vars: int,
        linear: Mapping[int, float] | None = None,
        quadratic: Mapping[tuple[int, int], float] | None = None,
        offset: float = 0.0,
    ) -> "QuboModel":
        """Build from sparse dicts; ``(j, i)`` and ``(i, i)`` keys are canonicalised."""
        h = np.zeros(n_vars)
        J = np.zeros((n_vars, n_vars))
        for i, v in (linear or {}).items():
            h[i] += v
        for (i, j), v in (quadratic or {}).items():
            if not (0 <= i < n_vars and 0 <= j < n_vars):
                raise ShapeError(f"coupling ({i}, {j}) outside {n_vars} variables")
            if i == j:
                h[i] += v
            else:
                J[min(i, j), max(i, j)] += v
        return cls(h, J, offset)

    def coupling(self, i: int, j: int) -> float:
        if i == j:
            raise ValueError("no self-couplings; see linear")
        return float(self.quadratic[min(i, j), max(i, j)])

    def couplings(self) -> Iterator[tuple[int, int, float]]:
        """Nonzero ``(i, j, value)`` with ``i < j`` in row-major order."""
        rows, cols = np.nonzero(self.quadratic)
        for i, j in zip(rows.tolist(), cols.tolist()):
            yield i, j, float(self.quadratic[i, j])

    def symmetric_couplings(self) -> np.ndarray:
        """``J + J.T``: the local-field matrix used by the samplers."""
        return self.quadratic + self.quadratic.T

    def max_abs_coefficient(self) -> float:
        vals = [np.abs(self.linear).max(initial=0.0), np.abs(self.quadratic).max(initial=0.0)]
        return float(max(vals))

    def scaled(self, weight: float) -> "QuboModel":
        return QuboModel(self.linear * weight, self.quadratic * weight, self.offset * weight)

    def energy(self, assignment) -> float:
        return energy(self, assignment)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuboModel):
            return NotImplemented
        return (
            self.offset == other.offset
            and np.array_equal(self.linear, other.linear)
            and np.array_equal(self.quadratic, other.quadratic)
        )

    __hash__ = None


@dataclass(frozen=True)
class PenaltyTerm:
    kind: str
    weight: float
    fragment: QuboModel

    def __post_init__(self):
        if self.kind not in TERM_KINDS:
            raise ValueError(f"unknown term kind {self.kind!r}")
        if self.weight < 0:
            raise ValueError("term weights must be nonnegative")


def _as_vector(assignment, n_vars: int) -> np.ndarray:
    a = np.asarray(assignment, dtype=float)
    if a.shape != (n_vars,):
        raise ShapeError(f"assignment has shape {a.shape}, expected ({n_vars},)")
    return a


def energy(model: QuboModel, assignment) -> float:
    a = _as_vector(assignment, model.n_vars)
    return float(model.offset + model.linear @ a + a @ (model.quadratic @ a))


def energies(model: QuboModel, assignments) -> np.ndarray:
    """Row-wise energies of a ``(S, M)`` batch of assignments."""
    A = np.asarray(assignments, dtype=float)
    if A.ndim != 2 or A.shape[1] != model.n_vars:
        raise ShapeError(f"batch has shape {A.shape}, expected (S, {model.n_vars})")
    return model.offset + A @ model.linear + np.einsum("sj,sj->s", A @ model.quadratic.T, A)


def quadratic_form_model(
    P: np.ndarray, q: np.ndarray | None = None, constant: float = 0.0
) -> QuboModel:
    """Model for ``a^T P a + q^T a + constant`` with symmetric ``P``."""
    P = np.asarray(P, dtype=float)
    h = np.diag(P).copy()
    if q is not None:
        h += np.asarray(q, dtype=float)
    J = np.triu(P + P.T, k=1)
    return QuboModel(h, J, constant)


def _dense_coefficients(coefficients, n_vars: int) -> np.ndarray:
    if isinstance(coefficients, Mapping):
        c = np.zeros(n_vars)
        for k, v in coefficients.items():
            c[k] += v
        return c
    c = np.asarray(coefficients, dtype=float)
    if c.shape != (n_vars,):
        raise ShapeError(f"coefficients have shape {c.shape}, expected ({n_vars},)")
    return c


def squared_linear_model(coefficients, constant: float, n_vars: int) -> QuboModel:
    """Model for ``(sum_k c_k a_k - constant)^2``."""
    c = _dense_coefficients(coefficients, n_vars)
    return quadratic_form_model(np.outer(c, c), -2.0 * constant * c, constant * constant)


def add_squared_linear(
    model: QuboModel,
    coefficients: Union[Mapping[int, float], Sequence[float], np.ndarray],
    constant: float,
    weight: float = 1.0,
) -> QuboModel:
    """Return ``model + weight * (sum_k c_k a_k - constant)^2``.

    ``coefficients`` is either a length-M vector or a sparse ``{index: c}``.
    """
    if weight < 0:
        raise ValueError("penalty weight must be nonnegative")
    term = squared_linear_model(coefficients, constant, model.n_vars)
    return merge([(model, 1.0), (term, weight)])


def merge(models: Iterable[tuple[QuboModel, float]]) -> QuboModel:
    """Weighted sum of models over the same variables."""
    models = list(models)
    if not models:
        raise ValueError("nothing to merge")
    M = models[0][0].n_vars
    h = np.zeros(M)
    J = np.zeros((M, M))
    offset = 0.0
    for model, weight in models:
        if model.n_vars != M:
            raise ShapeError(f"cannot merge models over {model.n_vars} and {M} variables")
        if weight == 0:
            continue
        if weight == 1:
            h += model.linear
            J += model.quadratic
            offset += model.offset
        else:
            h += weight * model.linear
            J += weight * model.quadratic
            offset += weight * model.offset
    return QuboModel(h, J, offset)


def dump_model(model: QuboModel, path) -> None:
    """Write ``M offset`` then ``i j value`` lines (``j == i`` for linear)."""
    lines = [f"{model.n_vars} {model.offset!r}"]
    for i in np.nonzero(model.linear)[0].tolist():
        lines.append(f"{i} {i} {float(model.linear[i])!r}")
    for i, j, v in model.couplings():
        lines.append(f"{i} {j} {v!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> QuboModel:
    with Path(path).open() as fh:
        head = fh.readline().split()
        if len(head) != 2:
            raise ValueError("model dump header must be 'M offset'")
        M, offset = int(head[0]), float(head[1])
        linear: dict[int, float] = {}
        quadratic: dict[tuple[int, int], float] = {}
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'i j value'")
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            if i == j:
                linear[i] = linear.get(i, 0.0) + v
            else:
                quadratic[(i, j)] = quadratic.get((i, j), 0.0) + v
    return QuboModel.from_terms(M, linear, quadratic, offset)
