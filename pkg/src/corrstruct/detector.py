"""lfdr-based detector with atom- and component-level FDR control.

Rejections are taken greedily in ascending order of the modified lfdrs,
which keeps the two smallest lfdrs of every component together so that a
component is never declared correlated in exactly one set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lfdr import component_null_probs, estimate_fdrs, modified_lfdrs, pair_positions
from .model import ActivationMatrix


@dataclass(frozen=True)
class DetectionResult:
    M_hat: ActivationMatrix
    fdr_hat: float
    fdr_cmp_hat: float
    removed_components: tuple[int, ...]
    m_final: int
    pairing_adjusted: bool = False


def greedy_prefix(sorted_values, alpha: float) -> int:
    """Length of the longest prefix whose mean is <= alpha."""
    v = np.asarray(sorted_values, dtype=float)
    if v.size == 0:
        return 0
    cmean = np.cumsum(v) / np.arange(1, v.size + 1)
    ok = np.flatnonzero(cmean <= alpha)
    return int(ok[-1] + 1) if ok.size else 0


def detect(lfdr, alpha: float = 0.1, alpha_cmp: float = 0.1, seed=None) -> DetectionResult:
    """Estimate the activation matrix from a J x K matrix of atom lfdrs.

    The result has FDR_hat <= alpha, FDR_cmp_hat <= alpha_cmp and no row with
    exactly one rejection.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha={alpha} must lie in (0, 1)")
    if not 0 < alpha_cmp <= 1:
        raise ValueError(f"alpha_cmp={alpha_cmp} must lie in (0, 1]")
    lfdr = np.asarray(lfdr, dtype=float)
    J, K = lfdr.shape
    mod = modified_lfdrs(lfdr)
    q = component_null_probs(mod)
    pairs = pair_positions(lfdr)
    in_pair = np.zeros((J, K), dtype=bool)
    in_pair[np.arange(J)[:, None], pairs] = True
    rng = np.random.default_rng(seed)

    candidates = list(range(J))
    removed: list[int] = []
    adjusted = False
    while True:
        jj = np.repeat(np.array(candidates, dtype=int), K)
        kk = np.tile(np.arange(K), len(candidates))
        vals = mod[jj, kk]
        order = np.lexsort((kk, jj, vals))
        sorted_vals = vals[order]
        m = greedy_prefix(sorted_vals, alpha)
        if m > 0:
            jm, km = jj[order[m - 1]], kk[order[m - 1]]
            partner_earlier = np.any(jj[order[:m - 1]] == jm)
            if in_pair[jm, km] and not partner_earlier:
                adjusted = True
                go_up = rng.random() < 0.5
                if go_up and m < sorted_vals.size and sorted_vals[:m + 1].mean() <= alpha:
                    m += 1
                else:
                    m -= 1
        M = np.zeros((J, K), dtype=np.int8)
        sel = order[:m]
        M[jj[sel], kk[sel]] = 1
        counts = M.sum(axis=1)
        active = np.flatnonzero(counts > 0)
        fdr_cmp = float(q[active].mean()) if active.size else 0.0
        if fdr_cmp <= alpha_cmp:
            break
        nu = counts[active].min()
        fewest = active[counts[active] == nu]
        worst = int(fewest[np.argmax(q[fewest])])
        candidates.remove(worst)
        removed.append(worst)

    fdr, fdr_cmp = estimate_fdrs(M, mod, q)
    return DetectionResult(M_hat=ActivationMatrix(M), fdr_hat=fdr, fdr_cmp_hat=fdr_cmp,
                           removed_components=tuple(removed), m_final=int(m),
                           pairing_adjusted=adjusted)
