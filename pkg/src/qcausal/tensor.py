"""Dense complex matrices over ordered tensor factors.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.  A
"shape" is the ordered tuple of factor dimensions a square matrix lives on.
Throughout the package the left Kronecker operand is the most significant
factor: the combined basis index is ``i_a * dim_b + i_b``.
"""
from __future__ import annotations

import math
import sys
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionError, LayoutError

#: Default tolerance for comparing synthetically generated matrices.
DEFAULT_EPS = 1e-9

# numpy's einsum accepts at most 52 distinct integer labels
_MAX_FACTORS = 26


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite 2-d complex128 array (no copy when possible)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise LayoutError(f"expected a non-empty 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def total_dim(dims: Iterable[int]) -> int:
    return math.prod(int(d) for d in dims)


def _check_shape(m: np.ndarray, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise LayoutError(f"factor dimensions must be >= 1, got {dims}")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise LayoutError(f"expected a square matrix, got shape {m.shape}")
    if total_dim(dims) != m.shape[0]:
        raise LayoutError(
            f"factor dims {dims} (product {total_dim(dims)}) do not match side {m.shape[0]}"
        )
    return dims


def kron(a, b) -> np.ndarray:
    """Kronecker product with ``a`` as the more significant factor."""
    sa, sb = np.shape(a), np.shape(b)
    if len(sa) != 2 or len(sb) != 2:
        raise LayoutError(f"kron needs 2-d matrices, got shapes {sa} and {sb}")
    rows = sa[0] * sb[0]
    cols = sa[1] * sb[1]
    if rows * cols > sys.maxsize // 16:
        raise DimensionError(f"kron result {rows}x{cols} is too large")
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def kron_all(mats: Iterable) -> np.ndarray:
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = kron(out, m)
    return out


def partial_trace(m, dims: Sequence[int], traced: Iterable[int]) -> np.ndarray:
    """Trace out the factors listed in ``traced``.

    The remaining factors keep their original relative order.  Tracing every
    factor returns the 1x1 matrix ``[[Tr m]]``.
    """
    m = np.asarray(m, dtype=np.complex128)
    dims = _check_shape(m, dims)
    n = len(dims)
    traced = list(traced)
    if len(set(traced)) != len(traced):
        raise LayoutError(f"traced factor indices repeat: {traced}")
    for k in traced:
        if not 0 <= k < n:
            raise LayoutError(f"factor index {k} out of range for {n} factors")
    if not traced:
        return m
    tset = set(traced)
    # drop dim-1 and merge runs so the einsum stays within its label limit
    groups: list[tuple[bool, int]] = []
    for k, d in enumerate(dims):
        if d == 1:
            continue
        is_traced = k in tset
        if groups and groups[-1][0] == is_traced:
            groups[-1] = (is_traced, groups[-1][1] * d)
        else:
            groups.append((is_traced, d))
    if not groups:
        return m.copy()
    if len(groups) > _MAX_FACTORS:
        raise DimensionError(f"too many factor groups ({len(groups)}) for einsum")
    g = len(groups)
    t = m.reshape([d for _, d in groups] * 2)
    rows = list(range(g))
    cols = [k if groups[k][0] else g + k for k in range(g)]
    keep = [k for k in range(g) if not groups[k][0]]
    out = keep + [g + k for k in keep]
    r = np.einsum(t, rows + cols, out)
    side = total_dim(groups[k][1] for k in keep)
    return np.ascontiguousarray(r).reshape(side, side)


def reorder_systems(m, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Move factor ``k`` to position ``perm[k]``.

    This is conjugation by a basis permutation, so trace, spectrum and
    positivity are preserved.
    """
    m = np.asarray(m, dtype=np.complex128)
    dims = _check_shape(m, dims)
    n = len(dims)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise LayoutError(f"{perm} is not a permutation of {n} factors")
    if perm == list(range(n)):
        return m
    src = [0] * n
    for k, p in enumerate(perm):
        src[p] = k
    t = m.reshape(dims + dims).transpose(src + [n + s for s in src])
    return np.ascontiguousarray(t).reshape(m.shape)


def permuted_dims(dims: Sequence[int], perm: Sequence[int]) -> tuple[int, ...]:
    out = [0] * len(dims)
    for k, p in enumerate(perm):
        out[p] = dims[k]
    return tuple(out)


def max_abs_diff(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise LayoutError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - b)))


def approx_equal(a, b, eps: float = DEFAULT_EPS) -> bool:
    """True iff the largest entrywise absolute difference is at most ``eps``."""
    return max_abs_diff(a, b) <= eps


def hermitian_part(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise LayoutError(f"expected a square matrix, got shape {m.shape}")
    return (m + m.conj().T) / 2


def min_eigenvalue(m) -> float:
    """Smallest eigenvalue of the Hermitian part of ``m``."""
    h = hermitian_part(m)
    w = scipy.linalg.eigh(h, eigvals_only=True, subset_by_index=[0, 0], overwrite_a=True)
    return float(w[0])


def is_psd(m, eps: float) -> bool:
    """Whether the Hermitian part of ``m`` has no eigenvalue below ``-eps``.

    Tries a Cholesky factorisation of ``H + eps*I`` first, which is an order
    of magnitude cheaper than an eigensolve for large matrices; falls back to
    :func:`min_eigenvalue` when it fails.
    """
    h = hermitian_part(m)
    h[np.diag_indices_from(h)] += eps
    try:
        scipy.linalg.cholesky(h, lower=True, overwrite_a=True, check_finite=False)
        return True
    except np.linalg.LinAlgError:
        pass
    return min_eigenvalue(m) >= -eps
