"""Compiled inner loops for the samplers."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def metropolis_anneal(h, J, betas, state, seed):
    """Single-bit-flip Metropolis sweeps in fixed index order.

    ``J`` is the full symmetric coupling matrix with zero diagonal; ``state``
    (int8) is updated in place and returned.
    """
    np.random.seed(seed)
    M = h.shape[0]
    field = h.copy()
    for i in range(M):
        if state[i]:
            for j in range(M):
                field[j] += J[j, i]
    for s in range(betas.shape[0]):
        beta = betas[s]
        for k in range(M):
            delta = -field[k] if state[k] else field[k]
            if delta > 0.0:
                if np.random.random() >= math.exp(-beta * delta):
                    continue
            sign = -1.0 if state[k] else 1.0
            state[k] = 1 - state[k]
            for j in range(M):
                field[j] += sign * J[j, k]
    return state


@njit(cache=True)
def _gray_walk(h, J, offset, threshold, codes, collect):
    """Walk all 2^M states in Gray order.

    Returns ``(min_energy, n_collected)``. When ``collect`` is set, states
    with running energy <= ``threshold`` are stored in ``codes`` (bit k of
    the code is variable k); ``n_collected`` may exceed ``len(codes)``.
    """
    M = h.shape[0]
    state = np.zeros(M, dtype=np.int8)
    field = h.copy()
    energy = offset
    best = energy
    n = 0
    code = 0
    if collect and energy <= threshold:
        if n < codes.shape[0]:
            codes[n] = code
        n += 1
    total = 1 << M
    for step in range(1, total):
        k = 0
        while ((step >> k) & 1) == 0:
            k += 1
        if state[k]:
            energy -= field[k]
            sign = -1.0
        else:
            energy += field[k]
            sign = 1.0
        state[k] = 1 - state[k]
        code ^= 1 << k
        for j in range(M):
            field[j] += sign * J[j, k]
        if energy < best:
            best = energy
        if collect and energy <= threshold:
            if n < codes.shape[0]:
                codes[n] = code
            n += 1
    return best, n


def gray_minimum(h, J, offset):
    empty = np.zeros(1, dtype=np.int64)
    best, _ = _gray_walk(h, J, offset, 0.0, empty, False)
    return best


def gray_candidates(h, J, offset, threshold, capacity):
    codes = np.zeros(capacity, dtype=np.int64)
    _, n = _gray_walk(h, J, offset, threshold, codes, True)
    return codes[: min(n, capacity)], n
