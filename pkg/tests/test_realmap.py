import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from latticebp.realmap import (
    mat_isom,
    mat_isom_inv,
    permute_to_y,
    real_channel,
    real_model,
    row_permutation,
    vec_isom,
    vec_isom_inv,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def _cplx(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_vec_isom_examples():
    assert np.array_equal(vec_isom([0, 0]), np.zeros(4))
    assert np.array_equal(vec_isom([1 + 2j]), [1, 2])
    assert np.array_equal(vec_isom([1 + 2j, 3 - 4j]), [1, 3, 2, -4])


def test_vec_isom_rejects_nonfinite():
    with pytest.raises(ValueError):
        vec_isom([np.nan + 0j])


def test_mat_isom_examples():
    assert np.array_equal(mat_isom(np.array([[1 + 2j], [3 - 4j]])), [1, 3, 2, -4])
    assert np.array_equal(mat_isom(np.array([[1 + 1j, 2 - 1j]])), [1, 1, 2, -1])


def test_mat_isom_roundtrip_and_norm():
    rng = np.random.default_rng(0)
    for _ in range(5):
        A = _cplx(rng, (2, 3))
        v = mat_isom(A)
        assert np.allclose(mat_isom_inv(v, 2, 3), A)
        assert abs(np.linalg.norm(v) - np.linalg.norm(A)) < 1e-12
    assert np.allclose(vec_isom_inv(vec_isom([1 + 2j, -3j])), [1 + 2j, -3j])


@settings(max_examples=50, deadline=None)
@given(
    arrays(float, (2, 2, 2), elements=finite),
    arrays(float, (2, 2, 2), elements=finite),
    finite,
    finite,
)
def test_mat_isom_linear(A, B, a, b):
    Ac, Bc = A[0] + 1j * A[1], B[0] + 1j * B[1]
    assert np.allclose(mat_isom(a * Ac + b * Bc), a * mat_isom(Ac) + b * mat_isom(Bc), atol=1e-6)


def test_real_channel_small_blocks():
    h = np.array([[2 + 3j]])
    assert np.array_equal(real_channel(h, 1), [[2, -3], [3, 2]])
    H2 = real_channel(h, 2)
    assert np.array_equal(H2[:2, :2], [[2, -3], [3, 2]])
    assert np.array_equal(H2[2:, 2:], [[2, -3], [3, 2]])
    assert not H2[:2, 2:].any() and not H2[2:, :2].any()
    with pytest.raises(ValueError):
        real_channel(h, 0)


def test_row_permutation_examples():
    assert np.array_equal(row_permutation(1, 1), [0, 1])
    assert np.array_equal(row_permutation(2, 1), [0, 2, 1, 3])
    rng = np.random.default_rng(1)
    Y = _cplx(rng, (2, 2))
    assert np.allclose(permute_to_y(mat_isom(Y.T), 2, 2), mat_isom(Y))
    v = rng.standard_normal(8)
    perm = row_permutation(2, 2)
    inv = np.argsort(perm)
    assert np.array_equal(permute_to_y(v, 2, 2)[inv], v)
    with pytest.raises(ValueError):
        permute_to_y(np.zeros(5), 2, 2)


def test_model_equivalence():
    rng = np.random.default_rng(2)
    for _ in range(100):
        S, Hbar, N = _cplx(rng, (2, 2)), _cplx(rng, (2, 2)), _cplx(rng, (2, 2))
        Y = S @ Hbar + N
        lhs = permute_to_y(real_channel(Hbar, 2) @ mat_isom(S.T) + mat_isom(N.T), 2, 2)
        assert np.linalg.norm(lhs - mat_isom(Y)) < 1e-10
        model = real_model(Hbar, 2, Y)
        assert np.allclose(model.H @ mat_isom(S.T) + permute_to_y(mat_isom(N.T), 2, 2), model.y)
        assert sorted(model.permutation) == list(range(8))
