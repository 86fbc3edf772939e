"""Samplers for QUBO models: exhaustive oracle and simulated annealing."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .encoding import EncodingScheme, Verdict, decode, feasible
from .errors import ProblemTooLargeError
from .qubo import QuboModel, energies

__all__ = [
    "AnnealConfig",
    "Solution",
    "RankResult",
    "MAX_EXHAUSTIVE_VARS",
    "solve_exhaustive",
    "solve_sa",
    "filter_rank",
    "initial_temperature",
    "COLD_RATIO",
]

logger = logging.getLogger(__name__)

MAX_EXHAUSTIVE_VARS = 24
_MASK64 = (1 << 64) - 1
_CANDIDATE_CAPACITY = 1 << 14
_TIE_RTOL = 1e-12
# a random start sits deep in penalty territory, so t_hot dwarfs the objective
COLD_RATIO = 1e-7


@dataclass(frozen=True)
class AnnealConfig:
    """Simulated-annealing parameters.

    ``t_hot``/``t_cold`` default to the largest single-flip energy change
    from a random state and ``COLD_RATIO`` of it.
    """

    n_samples: int = 20
    sweeps: int = 5000
    t_hot: Optional[float] = None
    t_cold: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")
        if self.sweeps < 1:
            raise ValueError("sweeps must be at least 1")
        if self.t_hot is not None and self.t_hot <= 0:
            raise ValueError("t_hot must be positive")
        if self.t_cold is not None and self.t_cold <= 0:
            raise ValueError("t_cold must be positive")
        if self.t_hot is not None and self.t_cold is not None and not self.t_hot > self.t_cold:
            raise ValueError("need t_hot > t_cold > 0")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class Solution:
    assignment: np.ndarray
    energy: float
    weights: Optional[np.ndarray] = None
    selected: Optional[np.ndarray] = None
    verdict: Optional[Verdict] = None
    sample_index: int = 0
    seed_used: int = 0

    @classmethod
    def build(
        cls,
        model: QuboModel,
        assignment,
        scheme: Optional[EncodingScheme] = None,
        sample_index: int = 0,
        seed_used: int = 0,
    ) -> "Solution":
        a = np.asarray(assignment, dtype=np.int8).copy()
        a.setflags(write=False)
        weights = selected = verdict = None
        if scheme is not None:
            weights, selected = decode(a, scheme)
            verdict = feasible(weights, selected, scheme)
        return cls(a, model.energy(a), weights, selected, verdict, sample_index, seed_used)

    @property
    def feasible(self) -> bool:
        return bool(self.verdict) if self.verdict is not None else False

    def key(self) -> tuple:
        return (self.energy, tuple(self.assignment.tolist()), self.sample_index)


@dataclass(frozen=True)
class RankResult:
    feasible: list[Solution]
    infeasible: list[Solution]
    success_rate: float

    @property
    def best(self) -> Optional[Solution]:
        return self.feasible[0] if self.feasible else None

    def violation_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for sol in self.infeasible:
            for tag in sol.verdict.violations:
                counts[tag] = counts.get(tag, 0) + 1
        return counts


def _codes_to_assignments(codes: np.ndarray, n_vars: int) -> np.ndarray:
    return ((codes[:, None] >> np.arange(n_vars)) & 1).astype(np.int8)


def _lexicographic_argmin(model: QuboModel, batch: np.ndarray) -> np.ndarray:
    """Lowest-energy row; near-ties go to the lexicographically smallest."""
    e = energies(model, batch)
    e_min = e.min()
    tied = batch[e <= e_min + _TIE_RTOL * max(1.0, abs(e_min))]
    order = np.lexsort(tied.T[::-1])
    return tied[order[0]]


def _scan_lexicographic(model: QuboModel, chunk_bits: int = 16) -> np.ndarray:
    M = model.n_vars
    chunk = 1 << min(chunk_bits, M)
    # code -> assignment with variable 0 as the most significant bit
    shifts = np.arange(M - 1, -1, -1)
    best = None
    for start in range(0, 1 << M, chunk):
        codes = np.arange(start, min(start + chunk, 1 << M), dtype=np.int64)
        batch = ((codes[:, None] >> shifts) & 1).astype(np.int8)
        cand = _lexicographic_argmin(model, batch)
        if best is None:
            best = cand
        else:
            best = _lexicographic_argmin(model, np.stack([best, cand]))
    return best


def solve_exhaustive(model: QuboModel, scheme: Optional[EncodingScheme] = None) -> Solution:
    """Global minimum by enumerating all ``2^M`` assignments.

    Energies within a relative 1e-12 of the minimum count as ties, resolved
    towards the lexicographically smallest assignment.
    """
    M = model.n_vars
    if M > MAX_EXHAUSTIVE_VARS:
        raise ProblemTooLargeError(f"{M} variables exceed the exhaustive limit of {MAX_EXHAUSTIVE_VARS}")
    h = model.linear.copy()
    J = np.ascontiguousarray(model.symmetric_couplings())
    approx = _kernels.gray_minimum(h, J, model.offset)
    # the Gray walk accumulates rounding; widen the net then re-evaluate exactly
    scale = abs(model.offset) + np.abs(h).sum() + np.abs(model.quadratic).sum()
    threshold = approx + 1e-9 * max(scale, 1.0)
    codes, n = _kernels.gray_candidates(h, J, model.offset, threshold, _CANDIDATE_CAPACITY)
    if n > len(codes):
        logger.debug("%d near-optimal states; falling back to a full scan", n)
        best = _scan_lexicographic(model)
    else:
        best = _lexicographic_argmin(model, _codes_to_assignments(codes, M))
    return Solution.build(model, best, scheme)


def initial_temperature(model: QuboModel, rng: np.random.Generator) -> float:
    """Largest ``|dE|`` over single flips from a uniformly random state."""
    state = rng.integers(0, 2, model.n_vars).astype(float)
    field = model.linear + model.symmetric_couplings() @ state
    delta = np.where(state > 0, -field, field)
    t = float(np.abs(delta).max(initial=0.0))
    return t if t > 0 else 1.0


def _sample_seeds(seed: int, k: int) -> tuple[int, np.random.Generator, int]:
    derived = (seed ^ k) & _MASK64
    ss = np.random.SeedSequence(derived)
    kernel_seed = int(ss.generate_state(1, np.uint32)[0])
    return derived, np.random.Generator(np.random.PCG64(ss)), kernel_seed


def solve_sa(
    model: QuboModel, config: AnnealConfig = AnnealConfig(), scheme: Optional[EncodingScheme] = None
) -> list[Solution]:
    """Run ``config.n_samples`` independent anneals, sorted by energy.

    Sample ``k`` is seeded with ``config.seed ^ k``; the output is a pure
    function of ``(model, config)``.
    """
    M = model.n_vars
    if M < 1:
        raise ValueError("model has no variables")
    t_hot = config.t_hot
    if t_hot is None:
        t_hot = initial_temperature(model, np.random.default_rng(config.seed))
    t_cold = config.t_cold if config.t_cold is not None else COLD_RATIO * t_hot
    if not t_hot > t_cold:
        raise ValueError("need t_hot > t_cold")
    betas = 1.0 / np.geomspace(t_hot, t_cold, config.sweeps) if config.sweeps > 1 else np.array([1.0 / t_cold])
    h = model.linear.copy()
    J = np.ascontiguousarray(model.symmetric_couplings())

    samples = []
    for k in range(config.n_samples):
        derived, gen, kernel_seed = _sample_seeds(config.seed, k)
        state = gen.integers(0, 2, M).astype(np.int8)
        state = _kernels.metropolis_anneal(h, J, betas, state, kernel_seed)
        sol = Solution.build(model, state, scheme, sample_index=k, seed_used=derived)
        logger.info("sample %d seed %d energy %.12g feasible %s", k, derived, sol.energy, sol.feasible)
        samples.append(sol)
    samples.sort(key=Solution.key)
    return samples


def filter_rank(solutions: Sequence[Solution], scheme: EncodingScheme) -> RankResult:
    """Split samples by feasibility; ``success_rate`` is feasible / total."""
    good, bad = [], []
    for sol in solutions:
        if sol.verdict is None:
            w, z = decode(sol.assignment, scheme)
            sol = Solution(sol.assignment, sol.energy, w, z, feasible(w, z, scheme),
                           sol.sample_index, sol.seed_used)
        (good if sol.feasible else bad).append(sol)
    good.sort(key=Solution.key)
    bad.sort(key=Solution.key)
    rate = len(good) / len(solutions) if solutions else 0.0
    return RankResult(good, bad, rate)
