"""Sample composite coherence matrix and its eigenstructure."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .model import MultiSetSample

EIG_FLOOR = 1e-12


class SingularCovarianceError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class CovarianceEstimates:
    """Sample covariance of the stacked observations and its set blocks."""

    R: np.ndarray
    dims: tuple[int, ...]

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.dims)])

    def block(self, k: int, l: int | None = None) -> np.ndarray:
        o = self.offsets
        l = k if l is None else l
        return self.R[o[k]:o[k + 1], o[l]:o[l + 1]]

    @property
    def R_D(self) -> np.ndarray:
        return scipy.linalg.block_diag(*(self.block(k) for k in range(len(self.dims))))


@dataclass(frozen=True)
class CoherenceSpectrum:
    C: np.ndarray
    eigenvalues: np.ndarray     # all, descending
    eigenvectors: np.ndarray    # columns, same order as eigenvalues
    dims: tuple[int, ...]
    chunk_norms: np.ndarray     # J x K

    @property
    def J(self) -> int:
        return self.chunk_norms.shape[0]

    @property
    def K(self) -> int:
        return len(self.dims)


def _centered(x: np.ndarray) -> np.ndarray:
    return x - x.mean(axis=1, keepdims=True)


def sample_covariances(s: MultiSetSample) -> CovarianceEstimates:
    """Per-row centered sample covariance (normalized by N) of the stacked sets."""
    Z = _centered(s.stacked())
    R = Z @ Z.T / Z.shape[1]
    return CovarianceEstimates(R=(R + R.T) / 2, dims=s.dims)


def inv_sqrt(R: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Symmetric inverse square root with an explicit eigenvalue floor."""
    R = R + ridge * np.eye(R.shape[0]) if ridge else R
    w, V = np.linalg.eigh(R)
    floor = EIG_FLOOR * max(w[-1], 0.0)
    if w[0] <= floor or w[-1] <= 0:
        raise SingularCovarianceError(
            f"covariance block is singular (smallest eigenvalue {w[0]:.3g}); "
            "too few samples or degenerate data")
    return (V / np.sqrt(w)) @ V.T


def coherence_matrix(cov: CovarianceEstimates, ridge: float = 0.0) -> np.ndarray:
    """Blockwise whitened covariance R_D^{-1/2} R R_D^{-1/2}."""
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    o = cov.offsets
    W = [inv_sqrt(cov.block(k), ridge) for k in range(len(cov.dims))]
    C = np.empty_like(cov.R)
    for k, Wk in enumerate(W):
        for l in range(k, len(W)):
            blk = Wk @ cov.block(k, l) @ W[l]
            C[o[k]:o[k + 1], o[l]:o[l + 1]] = blk
            C[o[l]:o[l + 1], o[k]:o[k + 1]] = blk.T
    return (C + C.T) / 2


def chunk_norms(U: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    """Squared norms of the per-set chunks of each column of U, shape (cols, K)."""
    o = np.concatenate([[0], np.cumsum(dims)])
    sq = U ** 2
    return np.stack([sq[o[k]:o[k + 1]].sum(axis=0) for k in range(len(dims))], axis=1)


def _fix_signs(U: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def spectrum(C: np.ndarray, set_dims, J: int | None = None) -> CoherenceSpectrum:
    """Full eigendecomposition of a coherence matrix, sorted descending.

    Only the leading `J` eigenvectors (default min I_k) get chunk norms.
    """
    C = np.asarray(C, dtype=float)
    dims = tuple(int(d) for d in set_dims)
    if C.shape != (sum(dims), sum(dims)):
        raise ValueError(f"matrix shape {C.shape} does not match set dims {dims}")
    if np.max(np.abs(C - C.T)) > 1e-6:
        raise ValueError("coherence matrix is not symmetric")
    J = min(dims) if J is None else int(J)
    if not 1 <= J <= min(dims):
        raise ValueError(f"J={J} must lie in [1, min I_k={min(dims)}]")
    w, U = np.linalg.eigh((C + C.T) / 2)
    order = np.argsort(-w, kind="stable")
    w, U = w[order], _fix_signs(U[:, order])
    return CoherenceSpectrum(C=C, eigenvalues=w, eigenvectors=U, dims=dims,
                             chunk_norms=chunk_norms(U[:, :J], dims))


def leading_eigs(C: np.ndarray, J: int) -> tuple[np.ndarray, np.ndarray]:
    """Largest J eigenpairs of symmetric C, descending. Cheaper than `spectrum`."""
    n = C.shape[0]
    w, U = scipy.linalg.eigh(C, subset_by_index=[n - J, n - 1], driver="evr",
                             check_finite=False)
    return w[::-1], U[:, ::-1]


def sample_coherence(s: MultiSetSample, J: int | None = None,
                     ridge: float = 0.0) -> CoherenceSpectrum:
    return spectrum(coherence_matrix(sample_covariances(s), ridge), s.dims, J)
