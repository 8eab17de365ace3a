import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from corrstruct.model import (
    ActivationMatrix,
    CorrelationStructure,
    DimensionMismatchError,
    InvalidStructureError,
    MultiSetSample,
    TooFewSamplesError,
    structure_to_activation,
    validate_sample,
)

# Pairwise coefficients of the K=4 example, pair columns (0,1),(0,2),(0,3),(1,2),(1,3),(2,3).
FIG_TABLE = np.array([
    [.9, .9, .9, .9, .9, .9],
    [.8, 0, .8, 0, .8, 0],
    [0, 0, 0, .7, 0, 0],
    [0, .6, .6, 0, 0, .6],
    [0, 0, 0, .5, 0, 0],
    [0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0],
])
FIG_ACTIVATION = np.array([
    [1, 1, 1, 1], [1, 1, 0, 1], [0, 1, 1, 0], [1, 0, 1, 1],
    [0, 1, 1, 0], [0, 0, 0, 0], [0, 0, 0, 0],
])


def test_pairwise_table_to_activation():
    cs = CorrelationStructure.from_pairwise(FIG_TABLE, K=4)
    assert cs.J == 7 and cs.D == 5
    np.testing.assert_array_equal(structure_to_activation(cs).entries, FIG_ACTIVATION)
    assert cs.rho[1] == pytest.approx(0.8)


def test_empty_and_full_structures():
    empty = CorrelationStructure(K=3, sets=(frozenset(),) * 2, rho=(0.0, 0.0))
    np.testing.assert_array_equal(structure_to_activation(empty).entries, np.zeros((2, 3)))
    full = CorrelationStructure(K=3, sets=(frozenset({0, 1, 2}),), rho=(0.5,))
    np.testing.assert_array_equal(structure_to_activation(full).entries, [[1, 1, 1]])


def test_single_set_component_rejected():
    with pytest.raises(InvalidStructureError):
        CorrelationStructure(K=3, sets=(frozenset({1}),), rho=(0.5,))
    with pytest.raises(InvalidStructureError):
        CorrelationStructure(K=3, sets=(frozenset({0, 1}),), rho=(1.5,))


def test_validate_sample():
    rng = np.random.default_rng(0)
    validate_sample(MultiSetSample((rng.standard_normal((3, 100)),) * 2))
    with pytest.raises(DimensionMismatchError, match="set 1"):
        validate_sample(MultiSetSample((rng.standard_normal((3, 100)),
                                        rng.standard_normal((3, 99)))))
    with pytest.raises(TooFewSamplesError):
        validate_sample(MultiSetSample((rng.standard_normal((10, 5)),) * 2))
    with pytest.raises(DimensionMismatchError):
        validate_sample(MultiSetSample((rng.standard_normal((3, 100)),)))


def test_activation_matrix_is_binary_and_immutable():
    with pytest.raises(ValueError):
        ActivationMatrix(np.array([[0, 2]]))
    M = ActivationMatrix(np.array([[1, 1, 0]]))
    with pytest.raises(ValueError):
        M.entries[0, 0] = 0
    assert M == ActivationMatrix(np.array([[1, 1, 0]]))
    assert M.rows_valid()
    assert not ActivationMatrix(np.array([[1, 0, 0]])).rows_valid()


valid_rows = arrays(np.int8, st.tuples(st.integers(1, 6), st.integers(2, 6)),
                    elements=st.integers(0, 1)).map(
    lambda a: np.where(a.sum(axis=1, keepdims=True) == 1, 0, a).astype(np.int8))


@settings(max_examples=100, deadline=None)
@given(valid_rows)
def test_activation_round_trip(a):
    cs = CorrelationStructure.from_activation(a, rho=0.5)
    np.testing.assert_array_equal(structure_to_activation(cs).entries, a)
