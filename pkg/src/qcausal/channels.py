"""Choi matrices of channels, in the convention used inside process matrices.

A channel ``T`` from ``in`` to ``out`` is stored untransposed::

    T = sum_{jk} |j><k| (x) T(|j><k|)          on  in (x) out

so trace preservation reads ``Tr_out T = 1_in``.  The local operations of
parties use the transposed matrix (see :meth:`ChoiMatrix.event_matrix`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor
from .errors import ContractViolation


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    matrix: np.ndarray
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "in_dims", tuple(int(d) for d in self.in_dims))
        object.__setattr__(self, "out_dims", tuple(int(d) for d in self.out_dims))
        m = tensor.as_matrix(self.matrix)
        side = self.d_in * self.d_out
        if m.shape != (side, side):
            raise ContractViolation(
                f"Choi matrix shape {m.shape} does not match dims {self.in_dims} -> {self.out_dims}")
        object.__setattr__(self, "matrix", m)

    @property
    def d_in(self) -> int:
        return math.prod(self.in_dims)

    @property
    def d_out(self) -> int:
        return math.prod(self.out_dims)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.in_dims + self.out_dims

    def input_marginal(self) -> np.ndarray:
        """``Tr_out T``; the identity for a trace-preserving map."""
        n_in = len(self.in_dims)
        return tensor.partial_trace(self.matrix, self.dims, range(n_in, len(self.dims)))

    def tp_violation(self) -> float:
        return tensor.max_abs_diff(self.input_marginal(), np.eye(self.d_in))

    def is_trace_preserving(self, eps: float = 1e-9) -> bool:
        return self.tp_violation() <= eps

    def apply(self, rho) -> np.ndarray:
        """Image of the operator ``rho`` on the input space."""
        t = self.matrix.reshape(self.d_in, self.d_out, self.d_in, self.d_out)
        return np.einsum("jakb,jk->ab", t, np.asarray(rho, dtype=np.complex128))

    def event_matrix(self) -> np.ndarray:
        """Transposed form, as used for a party's local operation."""
        return self.matrix.T.copy()


def max_entangled(d: int) -> np.ndarray:
    """Unnormalised ``sum_jk |jj><kk|``, the Choi matrix of the identity."""
    v = np.eye(d, dtype=np.complex128).reshape(d * d)
    return np.outer(v, v.conj())


def identity_choi(d: int) -> ChoiMatrix:
    return ChoiMatrix(max_entangled(d), (d,), (d,))


def kraus_choi(kraus, in_dims, out_dims) -> ChoiMatrix:
    """Choi matrix of ``rho -> sum_e K_e rho K_e^dag``."""
    kraus = np.asarray(kraus, dtype=np.complex128)
    if kraus.ndim == 2:
        kraus = kraus[None]
    d_in, d_out = math.prod(in_dims), math.prod(out_dims)
    if kraus.shape[1:] != (d_out, d_in):
        raise ContractViolation(f"Kraus operators have shape {kraus.shape[1:]}, "
                                f"expected {(d_out, d_in)}")
    # |K>> = sum_j |j> (x) K|j>, indexed (j, o)
    vecs = kraus.transpose(0, 2, 1).reshape(len(kraus), d_in * d_out)
    return ChoiMatrix(vecs.T @ vecs.conj(), in_dims, out_dims)


def unitary_choi(u) -> ChoiMatrix:
    u = np.asarray(u, dtype=np.complex128)
    return kraus_choi(u, (u.shape[1],), (u.shape[0],))
