"""Slow reference implementations used only by the tests.

Everything here loops over explicit basis indices so it shares no code path
with the vectorised library functions it checks.
"""
import itertools

import numpy as np


def digits(index, dims):
    """Mixed-radix coordinates of ``index`` (first factor most significant)."""
    out = []
    for d in reversed(dims):
        out.append(index % d)
        index //= d
    return tuple(reversed(out))


def flat(coords, dims):
    index = 0
    for c, d in zip(coords, dims):
        index = index * d + c
    return index


def kron(a, b):
    ra, ca = a.shape
    rb, cb = b.shape
    out = np.zeros((ra * rb, ca * cb), dtype=complex)
    for i, j, k, l in itertools.product(range(ra), range(ca), range(rb), range(cb)):
        out[i * rb + k, j * cb + l] = a[i, j] * b[k, l]
    return out


def partial_trace(m, dims, traced):
    keep = [k for k in range(len(dims)) if k not in traced]
    kdims = [dims[k] for k in keep]
    tdims = [dims[k] for k in traced]
    side = int(np.prod(kdims)) if kdims else 1
    out = np.zeros((side, side), dtype=complex)
    for r in range(side):
        for c in range(side):
            rc, cc = digits(r, kdims), digits(c, kdims)
            total = 0j
            for t in itertools.product(*[range(d) for d in tdims]):
                row = [0] * len(dims)
                col = [0] * len(dims)
                for k, v in zip(keep, rc):
                    row[k] = v
                for k, v in zip(keep, cc):
                    col[k] = v
                for k, v in zip(traced, t):
                    row[k] = v
                    col[k] = v
                total += m[flat(row, dims), flat(col, dims)]
            out[r, c] = total
    return out


def permutation_matrix(dims, perm):
    """Unitary sending basis vector with factor k's digit to slot perm[k]."""
    new_dims = [0] * len(dims)
    for k, p in enumerate(perm):
        new_dims[p] = dims[k]
    n = int(np.prod(dims))
    P = np.zeros((n, n))
    for i in range(n):
        c = digits(i, dims)
        nc = [0] * len(dims)
        for k, p in enumerate(perm):
            nc[p] = c[k]
        P[flat(nc, new_dims), i] = 1
    return P


def reorder(m, dims, perm):
    P = permutation_matrix(dims, perm)
    return P @ m @ P.T
