"""Correlation structure identification across multiple data sets.

Atom- and component-level false discovery rate control for deciding which
latent components are correlated across which data sets, built on the
eigenvectors of the sample composite coherence matrix.
"""

from .model import (
    ActivationMatrix,
    CorrelationStructure,
    MultiSetSample,
    structure_to_activation,
    validate_sample,
)
from .coherence import CoherenceSpectrum, coherence_matrix, sample_covariances, spectrum
from .bootstrap import BootstrapNull, bootstrap_chunk_norms, p_values, test_statistics
from .lfdr import (
    LfdrMatrix,
    PvalueMixtureModel,
    atom_lfdrs,
    component_null_probs,
    estimate_fdrs,
    fit_lfdr_model,
    modified_lfdrs,
)
from .detector import DetectionResult, detect, greedy_prefix
from .baseline import EigenvalueNull, eigenvalue_null, ts_step1, ts_step2
from .pipeline import lfdr_mult_cost, two_step

__version__ = "0.1.0"
