"""Exhaustive search over activation matrices, used as a detector oracle."""

from functools import lru_cache
from itertools import product

import numpy as np


@lru_cache(maxsize=None)
def feasible_masks(J: int, K: int) -> np.ndarray:
    """All J x K binary matrices without a row summing to exactly one, flattened."""
    rows = [r for r in product((0, 1), repeat=K) if sum(r) != 1]
    masks = np.array([np.concatenate(c) for c in product(rows, repeat=J)], dtype=float)
    return masks


def max_discoveries(modified: np.ndarray, alpha: float) -> int:
    """Largest number of rejections with mean modified lfdr <= alpha."""
    J, K = modified.shape
    masks = feasible_masks(J, K)
    counts = masks.sum(axis=1)
    sums = masks @ modified.ravel()
    ok = sums <= alpha * counts + 1e-12
    return int(counts[ok].max())
