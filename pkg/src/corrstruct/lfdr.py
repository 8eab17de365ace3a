"""Local false discovery rates from atom p-values.

The p-value density is modeled as a uniform null part plus a mixture of
beta(a, 1) alternatives, f(p) = pi0 + sum_m w_m a_m p^(a_m - 1), fitted by
EM with the number of beta components chosen by BIC. The null proportion
is kept at or above Storey's estimate at a small threshold, which stops the
beta part from absorbing uniform mass when alternative p-values pile up at
the smallest attainable value.

Bootstrap p-values only take values on the lattice k/(B+1). Passing that
lattice spacing as `resolution` fits the same mixture to the binned data:
each p-value stands for the interval (p - resolution, p], and lfdrs are
posterior null probabilities of the bin. A continuous density cannot put
enough mass at the lattice floor otherwise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .model import ActivationMatrix

MIN_PVALUES = 20
SHAPE_BOUNDS = (1e-4, 0.999)
INIT_ALT_MASS = 0.01
STOREY_INIT = 0.5
STOREY_FLOOR = 0.05
_INIT_SHAPES = {1: (0.3,), 2: (0.5, 0.1), 3: (0.7, 0.3, 0.05)}


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PvalueMixtureModel:
    pi0: float
    weights: np.ndarray
    shapes: np.ndarray
    loglik: float = np.nan
    bic: float = np.nan
    n_iter: int = 0
    converged: bool = True
    resolution: float | None = None

    @property
    def n_components(self) -> int:
        return len(self.weights)

    def density(self, p) -> np.ndarray:
        p = np.clip(np.asarray(p, dtype=float), np.finfo(float).tiny, 1.0)
        alt = np.zeros_like(p)
        for w, a in zip(self.weights, self.shapes):
            alt += w * a * p ** (a - 1.0)
        return self.pi0 + alt

    def bin_masses(self, p) -> np.ndarray:
        """(1 + M) x n probabilities of the bins (p - resolution, p]."""
        lo, hi = _bins(np.asarray(p, dtype=float), self.resolution)
        return _masses(lo, hi, self.pi0, self.weights, self.shapes)

    def lfdr(self, p) -> np.ndarray:
        if self.resolution is None:
            return np.clip(self.pi0 / self.density(p), 0.0, 1.0)
        p = np.asarray(p, dtype=float)
        m = self.bin_masses(p.ravel())
        total = m.sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(total > 0, m[0] / total, 1.0)
        return np.clip(out, 0.0, 1.0).reshape(p.shape)


def _bins(p: np.ndarray, resolution: float) -> tuple[np.ndarray, np.ndarray]:
    hi = np.clip(p, 0.0, 1.0)
    return np.clip(hi - resolution, 0.0, 1.0), hi


def _masses(lo, hi, pi0, w, a) -> np.ndarray:
    out = np.empty((len(w) + 1, lo.size))
    out[0] = pi0 * (hi - lo)
    for m, (wm, am) in enumerate(zip(w, a)):
        out[m + 1] = wm * (hi ** am - lo ** am)
    return out


def _binned_shape(r: np.ndarray, lo: np.ndarray, hi: np.ndarray, a0: float) -> float:
    """Maximize sum r log(hi^a - lo^a) over the shape bounds."""
    keep = r > 0
    if not keep.any():
        return a0
    r, lo, hi = r[keep], lo[keep], hi[keep]

    def nll(a):
        with np.errstate(divide="ignore"):
            return -float((r * np.log(np.maximum(hi ** a - lo ** a, 1e-300))).sum())

    res = minimize_scalar(nll, bounds=SHAPE_BOUNDS, method="bounded",
                          options={"xatol": 1e-7})
    return float(res.x)


def _em_binned(p: np.ndarray, resolution: float, pi0_init: float, pi0_floor: float,
               shapes, max_iter: int, tol: float):
    lo, hi = _bins(p, resolution)
    M = len(shapes)
    a = np.array(shapes, dtype=float)
    pi0 = min(max(pi0_init, pi0_floor), 1.0 - INIT_ALT_MASS)
    w = np.full(M, (1.0 - pi0) / M)
    ll_old = -np.inf
    converged = False
    for it in range(1, max_iter + 1):
        comp = _masses(lo, hi, pi0, w, a)
        total = np.maximum(comp.sum(axis=0), 1e-300)
        ll = float(np.log(total).sum())
        resp = comp / total
        pi0 = float(resp[0].mean())
        w = resp[1:].mean(axis=1)
        if pi0 < pi0_floor:
            w = w * (1.0 - pi0_floor) / w.sum()
            pi0 = pi0_floor
        a = np.array([_binned_shape(resp[m + 1], lo, hi, a[m]) for m in range(M)])
        if abs(ll - ll_old) <= tol * (1.0 + abs(ll)) or pi0 >= 1.0:
            converged = True
            break
        ll_old = ll
    total = np.maximum(_masses(lo, hi, pi0, w, a).sum(axis=0), 1e-300)
    return pi0, w, a, float(np.log(total).sum()), it, converged


def _em(p: np.ndarray, logp: np.ndarray, pi0_init: float, pi0_floor: float, shapes,
        max_iter: int, tol: float):
    M = len(shapes)
    a = np.array(shapes, dtype=float)
    pi0 = min(max(pi0_init, pi0_floor), 1.0 - INIT_ALT_MASS)
    w = np.full(M, (1.0 - pi0) / M)
    ll_old = -np.inf
    converged = False
    for it in range(1, max_iter + 1):
        comp = np.empty((M + 1, p.size))
        comp[0] = pi0
        comp[1:] = (w * a)[:, None] * np.exp((a - 1.0)[:, None] * logp[None, :])
        total = comp.sum(axis=0)
        ll = float(np.log(total).sum())
        resp = comp / total
        pi0 = float(resp[0].mean())
        w = resp[1:].mean(axis=1)
        if pi0 < pi0_floor:
            w = w * (1.0 - pi0_floor) / w.sum()
            pi0 = pi0_floor
        mass = resp[1:].sum(axis=1)
        denom = -(resp[1:] * logp[None, :]).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            a_new = np.where(denom > 0, mass / denom, a)
        a = np.clip(a_new, *SHAPE_BOUNDS)
        if abs(ll - ll_old) <= tol * (1.0 + abs(ll)) or pi0 >= 1.0:
            converged = True
            break
        ll_old = ll
    comp = np.vstack([np.full(p.size, pi0),
                      (w * a)[:, None] * np.exp((a - 1.0)[:, None] * logp[None, :])])
    ll = float(np.log(comp.sum(axis=0)).sum())
    return pi0, w, a, ll, it, converged


def storey_pi0(p: np.ndarray, lam: float = 0.5) -> float:
    return float(np.mean(p > lam) / (1.0 - lam))


def fit_lfdr_model(p, max_components: int = 3, max_iter: int = 500,
                   tol: float = 1e-9, resolution: float | None = None) -> PvalueMixtureModel:
    """Fit the uniform + beta(a, 1) mixture to the pooled p-values.

    EM starts from Storey's null proportion estimate at threshold 0.5 and
    never goes below Storey's estimate at threshold 0.05 (both clamped to
    [0.05, 1]). The low threshold matters because null p-values of sets
    outside a correlated component are stochastically larger than uniform
    and inflate right-tail estimates.

    With `resolution` set, p-values are treated as upper ends of bins of
    that width (bootstrap p-values use ``1 / (B + 1)``).

    Non-convergence after `max_iter` EM iterations returns the last iterate
    with ``converged=False`` and a ConvergenceWarning.
    """
    p = np.asarray(p, dtype=float).ravel()
    if p.size < MIN_PVALUES:
        raise ValueError(f"need at least {MIN_PVALUES} p-values, got {p.size}")
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueError("p-values must lie in [0, 1]")
    if resolution is not None and not 0.0 < resolution <= 1.0:
        raise ValueError(f"resolution={resolution} must lie in (0, 1]")
    p = np.clip(p, np.finfo(float).tiny, 1.0)
    logp = np.log(p)
    pi0_init = float(np.clip(storey_pi0(p, STOREY_INIT), 0.05, 1.0))
    pi0_floor = float(np.clip(storey_pi0(p, STOREY_FLOOR), 0.05, 1.0))
    best = None
    for M in range(1, max_components + 1):
        if resolution is None:
            fit = _em(p, logp, pi0_init, pi0_floor, _INIT_SHAPES[M], max_iter, tol)
        else:
            fit = _em_binned(p, resolution, pi0_init, pi0_floor, _INIT_SHAPES[M],
                             max_iter, tol)
        pi0, w, a, ll, n_iter, conv = fit
        bic = -2.0 * ll + 2 * M * np.log(p.size)
        model = PvalueMixtureModel(pi0=pi0, weights=w, shapes=a, loglik=ll, bic=bic,
                                   n_iter=n_iter, converged=conv, resolution=resolution)
        if best is None or bic < best.bic:
            best = model
    if not best.converged:
        warnings.warn(f"lfdr EM did not converge in {max_iter} iterations",
                      ConvergenceWarning, stacklevel=2)
    return best


def atom_lfdrs(p, model: PvalueMixtureModel) -> np.ndarray:
    return model.lfdr(p)


def pair_positions(lfdr: np.ndarray) -> np.ndarray:
    """Column indices of the two smallest entries per row (ties by lowest index)."""
    order = np.argsort(lfdr, axis=1, kind="stable")
    return order[:, :2]


def modified_lfdrs(lfdr) -> np.ndarray:
    """Replace the two smallest lfdrs of each row by their average."""
    lfdr = np.asarray(lfdr, dtype=float)
    if lfdr.ndim != 2 or lfdr.shape[1] < 2:
        raise ValueError("need a J x K matrix with K >= 2")
    out = lfdr.copy()
    pairs = pair_positions(lfdr)
    rows = np.arange(lfdr.shape[0])
    avg = (lfdr[rows, pairs[:, 0]] + lfdr[rows, pairs[:, 1]]) / 2.0
    out[rows, pairs[:, 0]] = avg
    out[rows, pairs[:, 1]] = avg
    return out


def component_null_probs(modified) -> np.ndarray:
    return np.prod(np.asarray(modified, dtype=float), axis=1)


def estimate_fdrs(M_hat: ActivationMatrix | np.ndarray, modified,
                  q=None) -> tuple[float, float]:
    """Plug-in atom and component FDR estimates of a rejection pattern.

    0/0 is taken as 0.
    """
    m = np.asarray(M_hat.entries if isinstance(M_hat, ActivationMatrix) else M_hat)
    modified = np.asarray(modified, dtype=float)
    if m.shape != modified.shape:
        raise ValueError("activation and lfdr shapes differ")
    q = component_null_probs(modified) if q is None else np.asarray(q, dtype=float)
    n_rej = m.sum()
    fdr = float((m * modified).sum() / n_rej) if n_rej else 0.0
    active = m.sum(axis=1) > 0
    fdr_cmp = float(q[active].mean()) if active.any() else 0.0
    return fdr, fdr_cmp


@dataclass(frozen=True)
class LfdrMatrix:
    lfdr: np.ndarray
    modified: np.ndarray
    q: np.ndarray

    @classmethod
    def from_lfdrs(cls, lfdr) -> "LfdrMatrix":
        lfdr = np.asarray(lfdr, dtype=float)
        mod = modified_lfdrs(lfdr)
        return cls(lfdr=lfdr, modified=mod, q=component_null_probs(mod))
