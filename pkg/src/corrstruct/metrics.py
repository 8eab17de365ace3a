"""Empirical performance measures: atom and component false discovery
proportions, power and averaged activation heatmaps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ActivationMatrix


def _entries(M) -> np.ndarray:
    return np.asarray(M.entries if isinstance(M, ActivationMatrix) else M, dtype=np.int8)


@dataclass(frozen=True)
class ConfusionCounts:
    """Counts for one estimate scored against the truth.

    Atom level: R discoveries, V false, S true, out of `n_true` true ones.
    Component level: a discovered component is a row of the estimate with at
    least one 1; it is false when the true row is all zero.
    """

    R: int
    V: int
    S: int
    n_true: int
    R_cmp: int
    V_cmp: int
    S_cmp: int
    n_true_cmp: int
    M_hat: np.ndarray

    @property
    def fdp(self) -> float:
        return self.V / max(self.R, 1)

    @property
    def power(self) -> float:
        return self.S / self.n_true if self.n_true else 0.0

    @property
    def fdp_cmp(self) -> float:
        return self.V_cmp / max(self.R_cmp, 1)

    @property
    def power_cmp(self) -> float:
        return self.S_cmp / self.n_true_cmp if self.n_true_cmp else 0.0


def score(M_hat, M) -> ConfusionCounts:
    est, true = _entries(M_hat), _entries(M)
    if est.shape != true.shape:
        raise ValueError(f"estimate shape {est.shape} differs from truth {true.shape}")
    est, true = est != 0, true != 0
    found, active = est.any(axis=1), true.any(axis=1)
    return ConfusionCounts(
        R=int(est.sum()), V=int((est & ~true).sum()), S=int((est & true).sum()),
        n_true=int(true.sum()),
        R_cmp=int(found.sum()), V_cmp=int((found & ~active).sum()),
        S_cmp=int((found & active).sum()), n_true_cmp=int(active.sum()),
        M_hat=est.astype(np.int8),
    )


@dataclass(frozen=True)
class Summary:
    """Means over repetitions; FDR is the mean false discovery proportion."""

    reps: int
    fdr: float
    power: float
    fdr_cmp: float
    power_cmp: float
    mean_activation: np.ndarray


def aggregate(counts) -> Summary:
    counts = list(counts)
    if not counts:
        raise ValueError("nothing to aggregate")
    return Summary(
        reps=len(counts),
        fdr=float(np.mean([c.fdp for c in counts])),
        power=float(np.mean([c.power for c in counts])),
        fdr_cmp=float(np.mean([c.fdp_cmp for c in counts])),
        power_cmp=float(np.mean([c.power_cmp for c in counts])),
        mean_activation=np.mean([c.M_hat for c in counts], axis=0),
    )
