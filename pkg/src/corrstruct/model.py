"""Domain types shared across the package: samples, ground-truth structures
and activation matrices.

Set and component indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np


class DimensionMismatchError(ValueError):
    pass


class TooFewSamplesError(ValueError):
    pass


class InvalidStructureError(ValueError):
    pass


@dataclass(frozen=True)
class MultiSetSample:
    """K paired observation matrices, each of shape (I_k, N).

    Column n of every set holds the n-th paired realization.
    """

    sets: tuple[np.ndarray, ...]

    def __post_init__(self):
        arrays = tuple(np.asarray(x, dtype=float) for x in self.sets)
        arrays = tuple(x.reshape(1, -1) if x.ndim == 1 else x for x in arrays)
        object.__setattr__(self, "sets", arrays)

    @property
    def K(self) -> int:
        return len(self.sets)

    @property
    def N(self) -> int:
        return self.sets[0].shape[1]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(x.shape[0] for x in self.sets)

    def stacked(self) -> np.ndarray:
        return np.vstack(self.sets)


def validate_sample(s: MultiSetSample) -> None:
    """Raise if `s` is not a usable multiset sample."""
    if s.K < 2:
        raise DimensionMismatchError(f"need at least 2 data sets, got {s.K}")
    n_ref = s.sets[0].shape[1]
    for k, x in enumerate(s.sets):
        if x.ndim != 2:
            raise DimensionMismatchError(f"set {k} is not a 2-D matrix")
        if x.shape[1] != n_ref:
            raise DimensionMismatchError(
                f"set {k} has {x.shape[1]} samples, set 0 has {n_ref}")
        if x.shape[0] < 1:
            raise DimensionMismatchError(f"set {k} has no dimensions")
        if not np.all(np.isfinite(x)):
            raise DimensionMismatchError(f"set {k} contains non-finite values")
    if n_ref < 2 or n_ref <= max(s.dims):
        raise TooFewSamplesError(
            f"N={n_ref} samples but the largest set has {max(s.dims)} dimensions; "
            "need N > max I_k for invertible per-set covariances")


@dataclass(frozen=True)
class CorrelationStructure:
    """Ground-truth correlation structure of J components over K sets.

    ``sets[j]`` is the collection of data sets across which component j is
    correlated (empty or at least two sets) and ``rho[j]`` the coefficient
    shared by every pair inside it. ``loadings`` optionally overrides the
    factor loadings per (component, set); the pairwise coefficient between
    sets k and k' is then ``loadings[j, k] * loadings[j, k']``.
    """

    K: int
    sets: tuple[frozenset, ...]
    rho: tuple[float, ...]
    loadings: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        sets = tuple(frozenset(int(k) for k in s) for s in self.sets)
        rho = tuple(float(r) for r in self.rho)
        object.__setattr__(self, "sets", sets)
        object.__setattr__(self, "rho", rho)
        if self.K < 2:
            raise InvalidStructureError("K must be at least 2")
        if len(sets) != len(rho):
            raise InvalidStructureError("one coefficient per component required")
        for j, (s, r) in enumerate(zip(sets, rho)):
            if len(s) == 1:
                raise InvalidStructureError(
                    f"component {j} is correlated across a single set")
            if any(k < 0 or k >= self.K for k in s):
                raise InvalidStructureError(f"component {j} has set index out of range")
            if s and not 0.0 < r <= 1.0:
                raise InvalidStructureError(f"component {j}: rho={r} not in (0, 1]")
        if self.loadings is not None:
            L = np.asarray(self.loadings, dtype=float)
            if L.shape != (len(sets), self.K) or np.any(np.abs(L) > 1):
                raise InvalidStructureError("loadings must be J x K with |a| <= 1")
            object.__setattr__(self, "loadings", L)

    @property
    def J(self) -> int:
        return len(self.sets)

    @property
    def D(self) -> int:
        return sum(1 for s in self.sets if len(s) >= 2)

    def factor_loadings(self) -> np.ndarray:
        """J x K loadings on the shared factor of each component."""
        if self.loadings is not None:
            return self.loadings
        L = np.zeros((self.J, self.K))
        for j, (s, r) in enumerate(zip(self.sets, self.rho)):
            for k in s:
                L[j, k] = np.sqrt(r)
        return L

    @classmethod
    def from_activation(cls, M: "ActivationMatrix | np.ndarray",
                        rho: float | Sequence[float] = 1.0) -> "CorrelationStructure":
        a = np.asarray(M.entries if isinstance(M, ActivationMatrix) else M)
        J, K = a.shape
        rhos = np.broadcast_to(np.asarray(rho, dtype=float), (J,))
        sets = tuple(frozenset(np.flatnonzero(row).tolist()) for row in a)
        return cls(K=K, sets=sets, rho=tuple(rhos))

    @classmethod
    def from_pairwise(cls, table: np.ndarray, K: int) -> "CorrelationStructure":
        """Build a structure from a J x K(K-1)/2 table of pairwise coefficients.

        Columns follow the pair order (0,1), (0,2), ..., (K-2,K-1). The
        per-component coefficient is the mean of the non-zero pairs.
        """
        table = np.asarray(table, dtype=float)
        pairs = list(combinations(range(K), 2))
        if table.shape[1] != len(pairs):
            raise InvalidStructureError(f"expected {len(pairs)} pair columns")
        sets, rho = [], []
        for row in table:
            nz = np.flatnonzero(row)
            members = {k for i in nz for k in pairs[i]}
            sets.append(frozenset(members))
            rho.append(float(row[nz].mean()) if nz.size else 0.0)
        return cls(K=K, sets=tuple(sets), rho=tuple(rho))


@dataclass(frozen=True)
class ActivationMatrix:
    """Binary J x K matrix; entry (j, k) is 1 if component j of set k is
    correlated with component j of another set."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 2:
            raise ValueError("activation matrix must be 2-D")
        if not np.all((e == 0) | (e == 1)):
            raise ValueError("activation matrix entries must be 0 or 1")
        e = e.astype(np.int8)
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @classmethod
    def zeros(cls, J: int, K: int) -> "ActivationMatrix":
        return cls(np.zeros((J, K), dtype=np.int8))

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def rows_valid(self) -> bool:
        """True if every row sum is 0 or at least 2."""
        return bool(np.all(self.row_sums != 1))

    def __eq__(self, other):
        if not isinstance(other, ActivationMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash((self.shape, self.entries.tobytes()))


def structure_to_activation(cs: CorrelationStructure) -> ActivationMatrix:
    M = np.zeros((cs.J, cs.K), dtype=np.int8)
    for j, s in enumerate(cs.sets):
        M[j, sorted(s)] = 1
    return ActivationMatrix(M)
