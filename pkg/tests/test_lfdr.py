import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from corrstruct.lfdr import (
    ConvergenceWarning,
    LfdrMatrix,
    PvalueMixtureModel,
    atom_lfdrs,
    component_null_probs,
    estimate_fdrs,
    fit_lfdr_model,
    modified_lfdrs,
    storey_pi0,
)


def test_uniform_grid_is_all_null():
    p = (np.arange(1000) + 0.5) / 1000
    model = fit_lfdr_model(p)
    assert model.pi0 >= 0.95
    assert np.all(model.lfdr(p) >= 0.9)


def test_half_tiny_pvalues():
    rng = np.random.default_rng(3)
    p = np.concatenate([np.full(500, 1e-6), rng.uniform(size=500)])
    assert fit_lfdr_model(p).pi0 == pytest.approx(0.5, abs=0.1)


def test_repeated_pvalue_below_minimum_count():
    with pytest.raises(ValueError):
        fit_lfdr_model(np.full(19, 0.3))


def test_atom_lfdr_examples():
    pure = PvalueMixtureModel(pi0=1.0, weights=np.zeros(0), shapes=np.zeros(0))
    np.testing.assert_array_equal(atom_lfdrs(np.array([[0.001, 0.5, 1.0]]), pure), 1.0)
    # beta(a, 1) with a = 0.5: 0.8 + w a p^(a-1) = 4 at p = 0.001
    a, p = 0.5, 0.001
    w = 3.2 / (a * p ** (a - 1))
    model = PvalueMixtureModel(pi0=0.8, weights=np.array([w]), shapes=np.array([a]))
    assert atom_lfdrs(np.array([p]), model)[0] == pytest.approx(0.2)
    no_alt = PvalueMixtureModel(pi0=1.0, weights=np.array([0.0]), shapes=np.array([0.5]))
    assert atom_lfdrs(np.array([1.0]), no_alt)[0] == 1.0


def test_point_mass_alternative_on_lattice():
    B = 300
    rng = np.random.default_rng(0)
    null = (rng.integers(0, B + 1, size=400) + 1) / (B + 1)
    alt = np.full(100, 1 / (B + 1))
    p = np.concatenate([null, alt])
    model = fit_lfdr_model(p, resolution=1 / (B + 1))
    assert model.pi0 == pytest.approx(0.8, abs=0.05)
    assert model.lfdr(np.array([1 / (B + 1)]))[0] < 0.05
    assert model.lfdr(np.array([0.5]))[0] > 0.95


def test_continuous_fit_separates_small_pvalues():
    rng = np.random.default_rng(1)
    p = np.concatenate([rng.uniform(size=800), rng.beta(0.1, 1, size=200)])
    model = fit_lfdr_model(p)
    assert 0.7 <= model.pi0 <= 0.9
    l = model.lfdr(np.array([1e-6, 0.01, 0.5, 1.0]))
    assert np.all(np.diff(l) >= 0)
    assert l[0] < 0.1 and l[-1] <= 1.0


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.integers(20, 200), elements=st.floats(0, 1)))
def test_lfdrs_in_unit_interval(p):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        model = fit_lfdr_model(p)
    l = model.lfdr(p)
    assert np.all((l >= 0) & (l <= 1))
    assert 0 < model.pi0 <= 1
    assert model.n_components in (1, 2, 3)


def test_input_validation():
    with pytest.raises(ValueError):
        fit_lfdr_model(np.full(10, 0.5))
    with pytest.raises(ValueError):
        fit_lfdr_model(np.linspace(0, 1.5, 50))
    with pytest.raises(ValueError):
        fit_lfdr_model(np.linspace(0, 1, 50), resolution=0.0)


def test_nonconvergence_warns():
    rng = np.random.default_rng(2)
    p = np.concatenate([rng.uniform(size=100), rng.beta(0.2, 1, size=50)])
    with pytest.warns(ConvergenceWarning):
        model = fit_lfdr_model(p, max_iter=1)
    assert not model.converged


def test_storey():
    assert storey_pi0(np.array([0.1, 0.6, 0.7, 0.9]), 0.5) == pytest.approx(1.5)


def test_modified_lfdr_example():
    out = modified_lfdrs(np.array([[0.1, 0.5, 0.02, 0.9]]))
    np.testing.assert_allclose(out, [[0.06, 0.5, 0.06, 0.9]])


def test_modified_lfdr_ties_use_lowest_index():
    out = modified_lfdrs(np.array([[0.3, 0.2, 0.2, 0.2]]))
    np.testing.assert_allclose(out, [[0.3, 0.2, 0.2, 0.2]])
    lm = LfdrMatrix.from_lfdrs(np.array([[0.4, 0.2, 0.6, 0.2]]))
    np.testing.assert_allclose(lm.modified, [[0.4, 0.2, 0.6, 0.2]])


@settings(max_examples=200, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 5), st.integers(2, 8)),
              elements=st.floats(0, 1)))
def test_modified_lfdr_properties(l):
    mod = modified_lfdrs(l)
    np.testing.assert_allclose(mod.sum(axis=1), l.sum(axis=1), atol=1e-12)
    order = np.argsort(l, axis=1, kind="stable")
    for j in range(l.shape[0]):
        rest = order[j, 2:]
        np.testing.assert_array_equal(mod[j, rest], l[j, rest])
        a, b = order[j, :2]
        assert mod[j, a] == mod[j, b]
    q = component_null_probs(mod)
    assert np.all((q >= 0) & (q <= 1))


def test_estimate_fdrs():
    mod = np.array([[0.05, 0.05, 0.9], [0.2, 0.2, 0.5]])
    q = component_null_probs(mod)
    fdr, fdr_cmp = estimate_fdrs(np.array([[1, 1, 0], [1, 1, 0]]), mod)
    assert fdr == pytest.approx(0.125)
    assert fdr_cmp == pytest.approx(q.mean())
    assert estimate_fdrs(np.zeros((2, 3), dtype=int), mod) == (0.0, 0.0)


def test_mixture_density_integrates_to_one():
    model = PvalueMixtureModel(pi0=0.7, weights=np.array([0.2, 0.1]), shapes=np.array([0.3, 0.8]))
    x = np.linspace(0, 1, 400_001)[1:]
    assert np.trapezoid(model.density(x), x) == pytest.approx(1.0, abs=0.01)
    binned = PvalueMixtureModel(pi0=0.7, weights=np.array([0.3]), shapes=np.array([0.1]),
                                resolution=0.1)
    grid = np.arange(1, 11) / 10
    assert binned.bin_masses(grid).sum() == pytest.approx(1.0)
