"""Brute-force checks that do not go through the discovery code.

Probabilities come straight from the generalised Born rule
``p = Tr[W (M_1 (x) ... (x) M_n)]`` where ``M_k`` is the transposed Choi
matrix of party k's CP map.  Signaling is probed operationally: vary the
sender's preparation and see whether any outcome probability at the receiver
moves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import tensor
from .errors import ContractViolation, LayoutError
from .generator import _rng, random_pure_state, random_unitary
from .process import ProcessMatrix, trace_out


@dataclass(frozen=True, eq=False)
class CpMapCJ:
    """A party's local CP map as a matrix on its input (x) output."""

    party: str
    matrix: np.ndarray


def default_map(w_or_layout, party: str) -> CpMapCJ:
    """Discard the input and prepare the maximally mixed output."""
    layout = getattr(w_or_layout, "layout", w_or_layout)
    p = layout.party(party)
    m = np.kron(np.eye(p.input_dim), np.eye(p.output_dim) / p.output_dim)
    return CpMapCJ(party, m.astype(np.complex128))


def _is_psd(m, eps=1e-9) -> bool:
    return tensor.max_abs_diff(m, m.conj().T) <= eps and tensor.min_eigenvalue(m) >= -eps


def prepare_measure_cj(party: str, measured_proj, prepared_state) -> CpMapCJ:
    """Measure ``measured_proj`` on the input, then prepare ``prepared_state``.

    The map ``X -> Tr[P X] sigma`` has matrix ``P (x) sigma^T``.
    """
    p = tensor.as_matrix(measured_proj)
    s = tensor.as_matrix(prepared_state)
    if not (_is_psd(p) and _is_psd(s)):
        raise ContractViolation("measurement and prepared state must be positive")
    return CpMapCJ(party, np.kron(p, s.T))


def _check_map(w: ProcessMatrix, cp: CpMapCJ) -> None:
    p = w.layout.party(cp.party)
    side = p.input_dim * p.output_dim
    if cp.matrix.shape != (side, side):
        raise LayoutError(f"map for party {cp.party!r} has shape {cp.matrix.shape}, "
                          f"expected {(side, side)}")


def probability(w: ProcessMatrix, setting: Mapping[str, CpMapCJ]) -> float:
    """Joint probability of the given local maps; unspecified parties use
    :func:`default_map`."""
    for name in setting:
        w.layout.party(name)
    mats = []
    for p in w.layout.parties:
        cp = setting.get(p.name) or default_map(w, p.name)
        _check_map(w, cp)
        mats.append(cp.matrix)
    big = tensor.kron_all(mats)
    # Tr[W M] without forming the product
    return float(np.real(np.sum(w.matrix * big.T)))


def marginal_process(w: ProcessMatrix, keep) -> ProcessMatrix:
    """Apply the default map for every party outside ``keep``.

    The dropped parties stay in the layout with dimension 1.
    """
    keep = set(keep)
    drop = [p for p in w.layout.names if p not in keep]
    if not drop:
        return w
    scale = math.prod(w.layout.party(p).output_dim for p in drop)
    red = trace_out(w, drop)
    return ProcessMatrix(red.layout, red.matrix / scale)


def signaling_strength(w: ProcessMatrix, sender: str, receiver: str, n_settings: int = 4,
                       seed=0) -> float:
    """Largest change in a receiver outcome probability over sender settings.

    The sender discards its input and prepares either a computational basis
    state or one of ``n_settings`` random pure states.  The receiver measures
    its input in the computational basis and in ``n_settings`` random bases,
    then prepares the maximally mixed state.  Everybody else applies the
    default map.  A value of 0 means no signaling detected within this family.
    """
    if sender == receiver:
        raise ContractViolation("sender and receiver must differ")
    rng = _rng(seed)
    marg = marginal_process(w, [sender, receiver])
    sp = marg.layout.party(sender)
    rp = marg.layout.party(receiver)

    d_so = sp.output_dim
    preps = [np.diag(np.eye(d_so)[k]).astype(np.complex128) for k in range(d_so)]
    preps += [random_pure_state(d_so, rng) for _ in range(n_settings)]
    send = [prepare_measure_cj(sender, np.eye(sp.input_dim), s) for s in preps]

    d_ri = rp.input_dim
    bases = [np.eye(d_ri, dtype=np.complex128)]
    bases += [random_unitary(d_ri, rng) for _ in range(n_settings)]
    mixed = np.eye(rp.output_dim) / rp.output_dim
    effects = []
    for u in bases:
        for k in range(d_ri):
            v = u[:, k]
            effects.append(prepare_measure_cj(receiver, np.outer(v, v.conj()), mixed))

    probs = np.array([[probability(marg, {sender: s, receiver: e}) for e in effects]
                      for s in send])
    return float(np.max(probs.max(axis=0) - probs.min(axis=0)))


def measure_prepare_instrument(w_or_layout, party: str) -> list[CpMapCJ]:
    """Computational-basis measurement, reprepare maximally mixed; sums to a CPTP map."""
    layout = getattr(w_or_layout, "layout", w_or_layout)
    p = layout.party(party)
    mixed = np.eye(p.output_dim) / p.output_dim
    return [prepare_measure_cj(party, np.diag(np.eye(p.input_dim)[k]), mixed)
            for k in range(p.input_dim)]
