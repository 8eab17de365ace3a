"""End-to-end detectors: coherence spectrum, chunk-norm bootstrap, p-values,
lfdrs and the final activation matrix estimate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bootstrap as bs
from .baseline import eigenvalue_null, ts_step1, ts_step2
from .coherence import CoherenceSpectrum, sample_coherence
from .detector import DetectionResult, detect
from .lfdr import MIN_PVALUES, LfdrMatrix, PvalueMixtureModel, atom_lfdrs, fit_lfdr_model
from .model import ActivationMatrix, MultiSetSample, validate_sample


@dataclass(frozen=True)
class Analysis:
    """Everything computed before a detection decision is made."""

    spectrum: CoherenceSpectrum
    null: bs.BootstrapNull
    statistics: np.ndarray
    pvalues: np.ndarray
    model: PvalueMixtureModel
    lfdrs: LfdrMatrix


def analyze(sample: MultiSetSample, J: int | None = None, B: int = 300, seed=None,
            ridge: float = 0.0) -> Analysis:
    validate_sample(sample)
    coh = sample_coherence(sample, J, ridge)
    null = bs.bootstrap_chunk_norms(sample, coh.J, B, seed, ridge)
    T = bs.test_statistics(coh, null)
    p = bs.p_values(T, null)
    if p.size < MIN_PVALUES:
        # too few atoms to estimate a mixture; nothing can be declared
        model = PvalueMixtureModel(pi0=1.0, weights=np.zeros(0), shapes=np.zeros(0),
                                   resolution=1.0 / (null.B + 1))
    else:
        model = fit_lfdr_model(p, resolution=1.0 / (null.B + 1))
    return Analysis(spectrum=coh, null=null, statistics=T, pvalues=p, model=model,
                    lfdrs=LfdrMatrix.from_lfdrs(atom_lfdrs(p, model)))


def _split(seed) -> tuple[np.random.SeedSequence, ...]:
    """Fixed (boot, coin, eigenvalue-null) substreams; repeatable for a reused
    SeedSequence, unlike ``spawn``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return tuple(np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,),
                                        pool_size=ss.pool_size) for i in range(3))


def lfdr_mult_cost(sample: MultiSetSample, alpha: float = 0.1, alpha_cmp: float = 0.1,
                   J: int | None = None, B: int = 300, seed=None,
                   analysis: Analysis | None = None) -> tuple[DetectionResult, Analysis]:
    """Proposed detector. Pass a precomputed `analysis` to share the bootstrap
    between detectors."""
    boot_seed, coin_seed, _ = _split(seed)
    if analysis is None:
        analysis = analyze(sample, J, B, boot_seed)
    result = detect(analysis.lfdrs.lfdr, alpha, alpha_cmp, seed=coin_seed)
    return result, analysis


def two_step(sample: MultiSetSample, alpha_fa_i: float = 0.1, alpha_fa_ii: float = 0.1,
             J: int | None = None, B: int = 300, seed=None,
             analysis: Analysis | None = None) -> tuple[ActivationMatrix, int, Analysis]:
    """Baseline detector. Returns the estimate, the estimated number of
    correlated components and the shared analysis."""
    boot_seed, _, eig_seed = _split(seed)
    if analysis is None:
        analysis = analyze(sample, J, B, boot_seed)
    eig_null = eigenvalue_null(sample, analysis.spectrum.J, B, eig_seed)
    D_hat = ts_step1(analysis.spectrum, eig_null, alpha_fa_i)
    M = ts_step2(analysis.spectrum, analysis.null, D_hat, alpha_fa_ii, analysis.pvalues)
    return M, D_hat, analysis
