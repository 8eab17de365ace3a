"""Paired nonparametric bootstrap of the eigenvector chunk norms, bootstrap
null distributions of the recentered chunk norms and atom p-values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coherence import (
    CoherenceSpectrum,
    SingularCovarianceError,
    chunk_norms,
    leading_eigs,
)
from .model import MultiSetSample, validate_sample

MAX_REDRAWS = 10


@dataclass(frozen=True)
class BootstrapNull:
    boot_norms: np.ndarray     # B x J x K
    boot_eigvals: np.ndarray   # B x J, leading eigenvalues per resample
    boot_means: np.ndarray     # J x K
    null_stats: np.ndarray     # J x K x B, ascending along the last axis

    @property
    def B(self) -> int:
        return self.boot_norms.shape[0]

    @property
    def J(self) -> int:
        return self.boot_norms.shape[1]

    @property
    def K(self) -> int:
        return self.boot_norms.shape[2]

    @classmethod
    def from_norms(cls, boot_norms: np.ndarray,
                   boot_eigvals: np.ndarray | None = None) -> "BootstrapNull":
        boot_norms = np.asarray(boot_norms, dtype=float)
        means = boot_norms.mean(axis=0)
        stats = np.sort(np.moveaxis(boot_norms - means, 0, -1), axis=-1)
        if boot_eigvals is None:
            boot_eigvals = np.full(boot_norms.shape[:2], np.nan)
        return cls(boot_norms=boot_norms, boot_eigvals=np.asarray(boot_eigvals, dtype=float),
                   boot_means=means, null_stats=stats)


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def whiten_blocks(R: np.ndarray, offsets: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Coherence matrix from a stacked covariance, whitening all blocks at once."""
    n = R.shape[0]
    W = np.zeros((n, n))
    for a, b in zip(offsets[:-1], offsets[1:]):
        blk = R[a:b, a:b]
        if ridge:
            blk = blk + ridge * np.eye(b - a)
        w, V = np.linalg.eigh(blk)
        if w[0] <= 1e-12 * max(w[-1], 0.0) or w[-1] <= 0:
            raise SingularCovarianceError("degenerate bootstrap resample")
        W[a:b, a:b] = (V / np.sqrt(w)) @ V.T
    C = W @ R @ W
    return (C + C.T) / 2


def _resample_coherence(Z: np.ndarray, weights: np.ndarray, offsets: np.ndarray,
                        ridge: float) -> np.ndarray:
    """Coherence matrix of the resample encoded by per-sample weights (sum 1)."""
    mean = Z @ weights
    R = (Z * weights) @ Z.T - np.outer(mean, mean)
    return whiten_blocks(R, offsets, ridge)


def bootstrap_chunk_norms(s: MultiSetSample, J: int | None = None, B: int = 300,
                          seed=None, ridge: float = 0.0) -> BootstrapNull:
    """Resample the N paired samples with replacement B times and recompute
    the leading J chunk norms of the coherence matrix for each resample.

    The same sample indices are applied to every set so pairing is kept.
    Each resample draws from its own substream of `seed`.
    """
    validate_sample(s)
    if B < 50:
        raise ValueError(f"B={B} resamples is too few; need at least 50")
    J = min(s.dims) if J is None else int(J)
    if not 1 <= J <= min(s.dims):
        raise ValueError(f"J={J} must lie in [1, min I_k={min(s.dims)}]")
    Z = s.stacked()
    Z = Z - Z.mean(axis=1, keepdims=True)
    N = s.N
    offsets = np.concatenate([[0], np.cumsum(s.dims)])
    norms = np.empty((B, J, s.K))
    eigvals = np.empty((B, J))
    for b, child in enumerate(_seed_sequence(seed).spawn(B)):
        rng = np.random.default_rng(child)
        for attempt in range(MAX_REDRAWS + 1):
            idx = rng.integers(0, N, size=N)
            weights = np.bincount(idx, minlength=N) / N
            try:
                C = _resample_coherence(Z, weights, offsets, ridge)
                break
            except SingularCovarianceError:
                if attempt == MAX_REDRAWS:
                    raise
        w, U = leading_eigs(C, J)
        eigvals[b] = w
        norms[b] = chunk_norms(U, s.dims)
    return BootstrapNull.from_norms(norms, eigvals)


def test_statistics(coh: CoherenceSpectrum, null: BootstrapNull) -> np.ndarray:
    """Chunk norm minus its null mean, the bootstrap mean clipped at 1/K."""
    c = coh.chunk_norms
    if c.shape != null.boot_means.shape:
        raise ValueError(f"spectrum chunk norms {c.shape} vs bootstrap {null.boot_means.shape}")
    mu = np.minimum(null.boot_means, 1.0 / c.shape[1])
    return c - mu


def p_values(T: np.ndarray, null: BootstrapNull) -> np.ndarray:
    """Upper-tail bootstrap p-values with the plus-one correction."""
    T = np.asarray(T, dtype=float)
    if T.shape != null.null_stats.shape[:2]:
        raise ValueError(f"statistics {T.shape} vs null {null.null_stats.shape[:2]}")
    B = null.B
    exceed = np.empty(T.shape, dtype=int)
    for j, k in np.ndindex(T.shape):
        exceed[j, k] = B - np.searchsorted(null.null_stats[j, k], T[j, k], side="left")
    return (1.0 + exceed) / (B + 1.0)
