import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qcausal import tensor
from qcausal.errors import DimensionError, LayoutError

import oracles
from conftest import random_complex, random_hermitian


# -- kron ----------------------------------------------------------------------

def test_kron_identities():
    assert np.array_equal(tensor.kron(np.eye(2), np.eye(3)), np.eye(6))


def test_kron_diagonal():
    out = tensor.kron(np.diag([1, 2]), np.diag([3, 4]))
    assert np.array_equal(out, np.diag([3, 4, 6, 8]))


def test_kron_left_operand_most_significant(rng):
    a, b = random_complex(rng, 2), random_complex(rng, 3)
    out = tensor.kron(a, b)
    for ia in range(2):
        for ib in range(3):
            assert abs(out[ia * 3 + ib, 0] - a[ia, 0] * b[ib, 0]) <= 1e-14


def test_kron_mixed_product(rng):
    a, b, c, d = (random_complex(rng, 2) for _ in range(4))
    lhs = tensor.kron(a, b) @ tensor.kron(c, d)
    rhs = tensor.kron(a @ c, b @ d)
    assert tensor.max_abs_diff(lhs, rhs) <= 1e-12


def test_kron_matches_loop_oracle(rng):
    a, b = random_complex(rng, 3, 2), random_complex(rng, 2, 4)
    assert tensor.max_abs_diff(tensor.kron(a, b), oracles.kron(a, b)) <= 1e-12


def test_kron_overflow_is_dimension_error():
    big = np.lib.stride_tricks.as_strided(np.zeros(1), shape=(2**40, 1), strides=(0, 0))
    with pytest.raises(DimensionError):
        tensor.kron(big, big)


def test_kron_all_empty_is_scalar_one():
    assert np.array_equal(tensor.kron_all([]), np.ones((1, 1)))


# -- partial trace ------------------------------------------------------------------

def test_partial_trace_product_state(rng):
    a, b = random_complex(rng, 2), random_complex(rng, 3)
    out = tensor.partial_trace(np.kron(a, b), [2, 3], [1])
    assert tensor.max_abs_diff(out, a * np.trace(b)) <= 1e-12


def test_partial_trace_all_factors(rng):
    m = random_complex(rng, 12)
    out = tensor.partial_trace(m, [2, 3, 2], [0, 1, 2])
    assert out.shape == (1, 1)
    assert abs(out[0, 0] - np.trace(m)) <= 1e-12


def test_partial_trace_first_qubit_by_hand(rng):
    m = random_hermitian(rng, 4)
    out = tensor.partial_trace(m, [2, 2], [0])
    expected = np.array([[sum(m[2 * i + j, 2 * i + k] for i in range(2)) for k in range(2)]
                         for j in range(2)])
    assert tensor.max_abs_diff(out, expected) <= 1e-12


def test_partial_trace_keeps_relative_order(rng):
    a, b, c = random_complex(rng, 2), random_complex(rng, 3), random_complex(rng, 2)
    m = np.kron(np.kron(a, b), c)
    out = tensor.partial_trace(m, [2, 3, 2], [1])
    assert tensor.max_abs_diff(out, np.kron(a, c) * np.trace(b)) <= 1e-12


def test_partial_trace_bad_index(rng):
    with pytest.raises(LayoutError):
        tensor.partial_trace(np.eye(4), [2, 2], [2])
    with pytest.raises(LayoutError):
        tensor.partial_trace(np.eye(4), [2, 2], [0, 0])
    with pytest.raises(LayoutError):
        tensor.partial_trace(np.eye(4), [2, 3], [0])


def test_partial_trace_many_factors_against_oracle(rng):
    dims = [2, 1, 3, 2, 1, 2]
    m = random_complex(rng, int(np.prod(dims)))
    traced = [0, 3, 4]
    got = tensor.partial_trace(m, dims, traced)
    assert tensor.max_abs_diff(got, oracles.partial_trace(m, dims, traced)) <= 1e-12


# -- reorder ------------------------------------------------------------------------

def test_reorder_identity(rng):
    m = random_complex(rng, 12)
    assert np.array_equal(tensor.reorder_systems(m, [2, 3, 2], [0, 1, 2]), m)


def test_reorder_swap(rng):
    a, b = random_complex(rng, 2), random_complex(rng, 3)
    out = tensor.reorder_systems(np.kron(a, b), [2, 3], [1, 0])
    assert tensor.max_abs_diff(out, np.kron(b, a)) <= 1e-12


def test_reorder_inverse_exact(rng):
    m = random_complex(rng, 8)
    perm = list(rng.permutation(3))
    inv = list(np.argsort(perm))
    fwd = tensor.reorder_systems(m, [2, 2, 2], perm)
    back = tensor.reorder_systems(fwd, [2, 2, 2], inv)
    assert np.array_equal(back, m)


def test_reorder_matches_permutation_matrix(rng):
    dims = [2, 3, 2]
    m = random_complex(rng, 12)
    perm = [2, 0, 1]
    expected = oracles.reorder(m, dims, perm)
    assert tensor.max_abs_diff(tensor.reorder_systems(m, dims, perm), expected) <= 1e-12
    assert tensor.permuted_dims(dims, perm) == (3, 2, 2)


def test_reorder_invalid_permutation():
    with pytest.raises(LayoutError):
        tensor.reorder_systems(np.eye(4), [2, 2], [0, 0])
    with pytest.raises(LayoutError):
        tensor.reorder_systems(np.eye(4), [2, 2], [0])


# -- comparison and spectra ------------------------------------------------------

def test_approx_equal_examples(rng):
    a = random_complex(rng, 3)
    assert tensor.approx_equal(a, a, 0.0)
    b = a.copy()
    b[1, 2] += 1e-6
    assert not tensor.approx_equal(a, b, 1e-9)
    assert tensor.approx_equal(a, a + 1e-10, 1e-9)


def test_approx_equal_shape_mismatch():
    with pytest.raises(LayoutError):
        tensor.approx_equal(np.eye(2), np.eye(3))


def test_min_eigenvalue_examples(rng):
    assert tensor.min_eigenvalue(np.eye(4)) == pytest.approx(1.0)
    assert tensor.min_eigenvalue(np.diag([2.0, 0.0, -0.5])) == pytest.approx(-0.5)
    g = random_complex(rng, 4)
    assert tensor.min_eigenvalue(g @ g.conj().T) >= -1e-10


def test_min_eigenvalue_non_square():
    with pytest.raises(LayoutError):
        tensor.min_eigenvalue(np.zeros((2, 3)))


def test_is_psd_agrees_with_spectrum(rng):
    g = random_complex(rng, 5)
    p = g @ g.conj().T
    assert tensor.is_psd(p, 1e-9)
    assert not tensor.is_psd(p - 1.1 * tensor.min_eigenvalue(p) * np.eye(5) - 0.1 * np.eye(5), 1e-9)


# -- properties --------------------------------------------------------------------

dims_strategy = st.lists(st.integers(1, 3), min_size=2, max_size=4)


@settings(max_examples=40, deadline=None)
@given(dims=dims_strategy, seed=st.integers(0, 2**32 - 1), data=st.data())
def test_partial_trace_preserves_trace(dims, seed, data):
    rng = np.random.default_rng(seed)
    m = random_complex(rng, int(np.prod(dims)))
    traced = data.draw(st.sets(st.integers(0, len(dims) - 1)))
    out = tensor.partial_trace(m, dims, sorted(traced))
    assert abs(np.trace(out) - np.trace(m)) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(dims=dims_strategy, seed=st.integers(0, 2**32 - 1), data=st.data())
def test_reorder_preserves_spectrum(dims, seed, data):
    rng = np.random.default_rng(seed)
    m = random_hermitian(rng, int(np.prod(dims)))
    perm = data.draw(st.permutations(range(len(dims))))
    out = tensor.reorder_systems(m, dims, perm)
    assert np.allclose(np.linalg.eigvalsh(out), np.linalg.eigvalsh(m), atol=1e-9, rtol=0)


@settings(max_examples=40, deadline=None)
@given(dims=dims_strategy, seed=st.integers(0, 2**32 - 1), data=st.data())
def test_trace_commutes_with_moving_factor_last(dims, seed, data):
    rng = np.random.default_rng(seed)
    m = random_complex(rng, int(np.prod(dims)))
    k = data.draw(st.integers(0, len(dims) - 1))
    n = len(dims)
    perm = [j if j < k else j - 1 for j in range(n)]
    perm[k] = n - 1
    moved = tensor.reorder_systems(m, dims, perm)
    lhs = tensor.partial_trace(m, dims, [k])
    rhs = tensor.partial_trace(moved, tensor.permuted_dims(dims, perm), [n - 1])
    assert tensor.max_abs_diff(lhs, rhs) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(da=st.integers(1, 4), db=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_kron_trace_multiplies(da, db, seed):
    rng = np.random.default_rng(seed)
    a, b = random_complex(rng, da), random_complex(rng, db)
    assert abs(np.trace(tensor.kron(a, b)) - np.trace(a) * np.trace(b)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), eps=st.floats(0, 1))
def test_approx_equal_symmetric_and_reflexive(seed, eps):
    rng = np.random.default_rng(seed)
    a, b = random_complex(rng, 3), random_complex(rng, 3) * 1e-3
    b = a + b
    assert tensor.approx_equal(a, a, 0.0)
    assert tensor.approx_equal(a, b, eps) == tensor.approx_equal(b, a, eps)
