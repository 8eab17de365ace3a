"""Two-step baseline: estimate the number of correlated components from the
leading eigenvalues, then test each set's chunk norm within those components
at a fixed false alarm level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bootstrap as bs
from .coherence import CoherenceSpectrum, SingularCovarianceError, leading_eigs
from .model import ActivationMatrix, MultiSetSample, validate_sample


@dataclass(frozen=True)
class TwoStepConfig:
    alpha_fa_i: float = 0.1
    alpha_fa_ii: float = 0.1
    B: int = 300


@dataclass(frozen=True)
class EigenvalueNull:
    """Leading coherence eigenvalues of resamples with the sets made independent."""

    eigvals: np.ndarray   # B x J, descending per row

    @property
    def B(self) -> int:
        return self.eigvals.shape[0]


def eigenvalue_null(s: MultiSetSample, J: int | None = None, B: int = 300, seed=None,
                    ridge: float = 0.0) -> EigenvalueNull:
    """Resample the columns of every set with its own index vector.

    This breaks all inter-set dependence while keeping each set's marginal
    distribution, N and dimension, so the spectrum reflects pure noise at
    the observed sample size.
    """
    validate_sample(s)
    J = min(s.dims) if J is None else int(J)
    offsets = np.concatenate([[0], np.cumsum(s.dims)])
    N = s.N
    out = np.empty((B, J))
    for b, child in enumerate(bs._seed_sequence(seed).spawn(B)):
        rng = np.random.default_rng(child)
        for attempt in range(bs.MAX_REDRAWS + 1):
            Z = np.vstack([x[:, rng.integers(0, N, size=N)] for x in s.sets])
            Z -= Z.mean(axis=1, keepdims=True)
            try:
                C = bs.whiten_blocks(Z @ Z.T / N, offsets, ridge)
                break
            except SingularCovarianceError:
                if attempt == bs.MAX_REDRAWS:
                    raise
        out[b] = leading_eigs(C, J)[0]
    return EigenvalueNull(out)


def eigenvalue_pvalue(lam: float, null_max: np.ndarray) -> float:
    """Upper-tail p-value of an eigenvalue against the null largest eigenvalue."""
    return (1.0 + np.count_nonzero(null_max >= lam)) / (null_max.size + 1.0)


def ts_step1(coh: CoherenceSpectrum, null: EigenvalueNull, alpha_fa_i: float = 0.1) -> int:
    """Sequentially test whether the (d+1)-th eigenvalue exceeds what
    independent sets produce, d = 0, 1, ...; return the first d not rejected.

    Under "exactly d correlated components" the (d+1)-th eigenvalue is the
    largest noise eigenvalue, so it is compared with the null distribution
    of the largest eigenvalue.
    """
    J = coh.J
    null_max = null.eigvals[:, 0]
    for d in range(J):
        if eigenvalue_pvalue(coh.eigenvalues[d], null_max) >= alpha_fa_i:
            return d
    return J


def ts_step2(coh: CoherenceSpectrum, null: bs.BootstrapNull, D_hat: int,
             alpha_fa_ii: float = 0.1, pvalues: np.ndarray | None = None) -> ActivationMatrix:
    """Reject atom (j, k), j < D_hat, when its chunk-norm p-value is below
    `alpha_fa_ii`. No row-sum post-processing."""
    J, K = coh.chunk_norms.shape
    if not 0 <= D_hat <= J:
        raise ValueError(f"D_hat={D_hat} outside [0, {J}]")
    if pvalues is None:
        pvalues = bs.p_values(bs.test_statistics(coh, null), null)
    M = np.zeros((J, K), dtype=np.int8)
    M[:D_hat] = pvalues[:D_hat] < alpha_fa_ii
    return ActivationMatrix(M)
