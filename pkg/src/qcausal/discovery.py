"""Causal discovery on process matrices.

Three stages:

1. find output subsystems that carry an identity factor ("open") and trace
   them out;
2. peel off the set of parties whose whole output is open, trace it out and
   repeat, giving the causal order as a sequence of non-signaling sets;
3. for every party trace out its input and look for output (sub)systems of
   earlier parties that became identity; those are its parents.  Rebuild a
   Markovian test matrix from extracted states and channels and compare.

Every equality is tested as a maximum entrywise deviation ``<= eps``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import tensor
from .channels import ChoiMatrix
from .errors import ContractViolation, LayoutError, RejectedInput
from .process import (EPS_PSD, EPS_TRACE, InputRef, ProcessMatrix, SubsystemRef, SystemLayout,
                      assemble, trace_out, validate)

DEFAULT_EPS = tensor.DEFAULT_EPS


@dataclass
class Counter:
    """Number of open-output / channel constraint evaluations."""

    value: int = 0

    def tick(self):
        self.value += 1


def identity_deviation(m: np.ndarray, dims: Sequence[int], factors: Sequence[int]) -> float:
    """``max |1~_S (x) Tr_S m - m|`` for the factor group ``S``.

    Works on views of ``m``: the blocks ``m[s, s']`` (indices of ``S``) must
    vanish off the diagonal and all equal their average on it.
    """
    dims = tuple(dims)
    n = len(dims)
    factors = [k for k in factors if dims[k] > 1]
    if not factors:
        return 0.0
    rest = [k for k in range(n) if k not in factors]
    t = m.reshape(dims + dims).transpose(factors + [n + k for k in factors]
                                         + rest + [n + k for k in rest])
    sub = [dims[k] for k in factors]
    d_s = math.prod(sub)
    idx = list(itertools.product(*[range(d) for d in sub]))
    avg = sum(t[i + i] for i in idx) / d_s
    worst = 0.0
    for a in idx:
        for b in idx:
            block = t[a + b]
            dev = np.abs(block - avg) if a == b else np.abs(block)
            worst = max(worst, float(dev.max()) if dev.size else 0.0)
    return worst


def satisfies_identity(w: ProcessMatrix, refs: Iterable, eps: float,
                       counter: Counter | None = None) -> bool:
    """Whether ``1~ (x) Tr_S W = W`` for the systems ``refs``."""
    if counter is not None:
        counter.tick()
    pos = [w.layout.position(r) for r in refs]
    return identity_deviation(w.matrix, w.dims, pos) <= eps


# -- report types -------------------------------------------------------------------

@dataclass(frozen=True)
class Arrow:
    source: SubsystemRef
    target: str

    def to_json(self) -> dict:
        return {"from": self.source.to_json(), "to": self.target}


@dataclass
class CausalOrder:
    """Non-signaling sets, earliest first."""

    sets: list[list[str]]

    def index(self, party: str) -> int:
        for k, s in enumerate(self.sets):
            if party in s:
                return k
        raise LayoutError(f"party {party!r} is not ordered")

    def __str__(self):
        return " < ".join("{" + ", ".join(s) + "}" for s in self.sets)


@dataclass
class NotCausallyOrdered:
    """Peeling got stuck: ``found`` sets (earliest first) and the rest."""

    found: list[list[str]]
    remaining: list[str]


@dataclass
class Dag:
    nodes: list[str]
    edges: list[Arrow]
    first: list[str]
    last: list[str]

    def parents(self, party: str) -> list[SubsystemRef]:
        return [a.source for a in self.edges if a.target == party]


@dataclass
class Pieces:
    """Extracted mechanisms of a Markovian model."""

    states: dict[str, np.ndarray] = field(default_factory=dict)
    channels: dict[str, tuple[tuple[SubsystemRef, ...], ChoiMatrix]] = field(default_factory=dict)
    last: list[str] = field(default_factory=list)


@dataclass
class DiscoveryReport:
    parties: list[str]
    open_subsystems: list[SubsystemRef]
    causally_ordered: bool
    causal_order: CausalOrder | None
    arrows: list[Arrow]
    markovian: bool
    eps: float
    constraint_test_count: int
    dag: Dag | None = None
    pieces: Pieces | None = None
    unordered: list[str] = field(default_factory=list)
    partial_order: list[list[str]] = field(default_factory=list)
    reduced: ProcessMatrix | None = None
    test_matrix: np.ndarray | None = None
    markov_deviation: float | None = None

    @property
    def arrows_reliable(self) -> bool:
        return self.markovian

    def primal_arrows(self) -> list[Arrow]:
        """Arrows between consecutive non-signaling sets."""
        if self.causal_order is None:
            return []
        co = self.causal_order
        return [a for a in self.arrows if co.index(a.target) == co.index(a.source.party) + 1]

    def secondary_arrows(self) -> list[Arrow]:
        primal = self.primal_arrows()
        return [a for a in self.arrows if a not in primal]

    def to_json(self) -> dict:
        order = self.causal_order.sets if self.causal_order else self.partial_order
        out = {
            "open_subsystems": [r.to_json() for r in self.open_subsystems],
            "causally_ordered": self.causally_ordered,
            "causal_order": order,
            "unordered": self.unordered,
            "arrows": [a.to_json() for a in self.arrows],
            "primal_arrows": [a.to_json() for a in self.primal_arrows()],
            "secondary_arrows": [a.to_json() for a in self.secondary_arrows()],
            "arrows_reliable": self.arrows_reliable,
            "markovian": self.markovian,
            "constraint_tests": self.constraint_test_count,
            "eps": self.eps,
        }
        if self.markov_deviation is not None:
            out["markov_deviation"] = self.markov_deviation
        if self.dag is not None:
            out["dag"] = {"nodes": self.dag.nodes,
                          "edges": [a.to_json() for a in self.dag.edges],
                          "first": self.dag.first, "last": self.dag.last}
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "DiscoveryReport":
        def ref(x):
            return SubsystemRef(str(x[0]), int(x[1]))

        def arrows(xs):
            return [Arrow(ref(a["from"]), str(a["to"])) for a in xs]

        ordered = bool(data["causally_ordered"])
        sets = [list(s) for s in data["causal_order"]]
        dag = None
        if data.get("dag"):
            d = data["dag"]
            dag = Dag(list(d["nodes"]), arrows(d["edges"]), list(d["first"]), list(d["last"]))
        parties = sorted({p for s in sets for p in s} | set(data.get("unordered", [])))
        return cls(
            parties=parties,
            open_subsystems=[ref(r) for r in data["open_subsystems"]],
            causally_ordered=ordered,
            causal_order=CausalOrder(sets) if ordered else None,
            arrows=arrows(data["arrows"]),
            markovian=bool(data["markovian"]),
            eps=float(data["eps"]),
            constraint_test_count=int(data["constraint_tests"]),
            dag=dag,
            unordered=list(data.get("unordered", [])),
            partial_order=[] if ordered else sets,
            markov_deviation=data.get("markov_deviation"),
        )


# -- stage 1 ---------------------------------------------------------------------

def find_open_subsystems(w: ProcessMatrix, eps: float = DEFAULT_EPS,
                         counter: Counter | None = None) -> list[SubsystemRef]:
    """Output subsystems of split outputs that carry an identity factor.

    Each subsystem is tested on its own against the unreduced ``w``.
    """
    found = []
    for p in w.layout.parties:
        if p.undivided:
            continue
        for ref in w.layout.outputs(p.name):
            if w.layout.dim(ref) == 1:
                continue
            if satisfies_identity(w, [ref], eps, counter):
                found.append(ref)
    return found


def remove_open(w: ProcessMatrix, refs: Sequence[SubsystemRef]) -> ProcessMatrix:
    """Trace out identity factors, keeping the process normalised."""
    if not refs:
        return w
    scale = math.prod(w.layout.dim(r) for r in refs)
    reduced = trace_out(w, refs)
    return ProcessMatrix(reduced.layout, reduced.matrix / scale)


# -- stage 2 ---------------------------------------------------------------------

def _remaining_outputs(layout: SystemLayout, name: str) -> list[SubsystemRef]:
    return [r for r in layout.outputs(name) if layout.dim(r) > 1]


def peel_causal_order(w: ProcessMatrix, eps: float = DEFAULT_EPS,
                      counter: Counter | None = None,
                      parties: Sequence[str] | None = None
                      ) -> CausalOrder | NotCausallyOrdered:
    """Group parties into non-signaling sets, last set first, by peeling.

    A party belongs to the current last set when its whole remaining output
    is open; a party whose remaining output has dimension 1 qualifies without
    a test.
    """
    remaining = list(parties) if parties is not None else w.layout.names
    found: list[list[str]] = []
    cur = w
    while remaining:
        last = []
        for name in remaining:
            outs = _remaining_outputs(cur.layout, name)
            if not outs or satisfies_identity(cur, outs, eps, counter):
                last.append(name)
        if not last:
            return NotCausallyOrdered(found[::-1], remaining)
        found.append(last)
        remaining = [p for p in remaining if p not in last]
        if remaining:
            cur = trace_out(cur, [f for p in last for f in cur.layout.party_factors(p)
                                  if cur.layout.dim(f) > 1])
    return CausalOrder(found[::-1])


# -- stage 3 ---------------------------------------------------------------------

def find_arrows(w: ProcessMatrix, order: CausalOrder, open_subsystems: Iterable = (),
                eps: float = DEFAULT_EPS, counter: Counter | None = None,
                receivers: Sequence[str] | None = None) -> list[Arrow]:
    """Parents of every party, from channel constraints on ``Tr_{A_I} W``.

    ``w`` must already have its open subsystems traced out.  Receivers run
    from the earliest set to the latest (or in the order given); candidate
    sources are the unused output (sub)systems of parties in strictly
    earlier sets, in declaration order.
    """
    layout = w.layout
    skip = set(open_subsystems)
    used: set[SubsystemRef] = set()
    if receivers is None:
        receivers = [p for s in order.sets for p in layout.names if p in s]
    arrows = []
    for target in receivers:
        level = order.index(target)
        candidates = [r for p in layout.names if order.index(p) < level
                      for r in layout.outputs(p)
                      if r not in used and r not in skip and layout.dim(r) > 1]
        if not candidates:
            continue
        reduced = trace_out(w, [InputRef(target)]) if layout.dim(InputRef(target)) > 1 else w
        for ref in candidates:
            if satisfies_identity(reduced, [ref], eps, counter):
                arrows.append(Arrow(ref, target))
                used.add(ref)
    return arrows


def _sorted_arrows(layout: SystemLayout, arrows: Iterable[Arrow]) -> list[Arrow]:
    return sorted(arrows, key=lambda a: (layout.names.index(a.target),
                                         layout.position(a.source)))


def extract_state(w: ProcessMatrix, party: str) -> np.ndarray:
    """Marginal on ``party``'s input, normalised to unit trace."""
    pos = w.layout.position(InputRef(party))
    rho = tensor.partial_trace(w.matrix, w.dims, [k for k in range(len(w.dims)) if k != pos])
    return rho / np.trace(rho)


def extract_channel(w: ProcessMatrix, parents: Sequence[SubsystemRef], party: str) -> ChoiMatrix:
    """Marginal on parents (flat order) then ``party``'s input, trace ``d_parents``."""
    if not parents:
        raise ContractViolation(f"party {party!r} has no parents to extract a channel from")
    layout = w.layout
    parents = sorted(parents, key=layout.position)
    keep = [layout.position(r) for r in parents] + [layout.position(InputRef(party))]
    traced = [k for k in range(len(w.dims)) if k not in keep]
    t = tensor.partial_trace(w.matrix, w.dims, traced)
    # partial_trace keeps flat order; put the input factor last
    kept_sorted = sorted(keep)
    t = tensor.reorder_systems(t, [w.dims[k] for k in kept_sorted],
                               [keep.index(k) for k in kept_sorted])
    in_dims = tuple(layout.dim(r) for r in parents)
    d_gamma = math.prod(in_dims)
    t = t * (d_gamma / np.trace(t))
    return ChoiMatrix(t, in_dims, (layout.dim(InputRef(party)),))


def build_test_matrix(layout: SystemLayout, states: Mapping[str, np.ndarray],
                      channels: Mapping[str, tuple[Sequence[SubsystemRef], ChoiMatrix]],
                      last: Iterable[str]) -> ProcessMatrix:
    """Markovian process from states, channels and identities on last outputs."""
    pieces = [((InputRef(p),), rho) for p, rho in states.items()]
    pieces += [((*sorted(parents, key=layout.position), InputRef(p)), ch.matrix)
               for p, (parents, ch) in channels.items()]
    for p in last:
        for r in _remaining_outputs(layout, p):
            pieces.append(((r,), np.eye(layout.dim(r))))
    return ProcessMatrix(layout, assemble(layout, pieces))


def extract_pieces(w: ProcessMatrix, arrows: Sequence[Arrow], last: Sequence[str]) -> Pieces:
    pieces = Pieces(last=list(last))
    for name in w.layout.names:
        parents = [a.source for a in arrows if a.target == name]
        if parents:
            pieces.channels[name] = (tuple(sorted(parents, key=w.layout.position)),
                                     extract_channel(w, parents, name))
        else:
            pieces.states[name] = extract_state(w, name)
    return pieces


def pieces_cover(layout: SystemLayout, arrows: Sequence[Arrow], last: Sequence[str]) -> bool:
    """Whether every output factor is an arrow source or belongs to a last party."""
    sources = {a.source for a in arrows}
    for ref in layout.factors:
        if isinstance(ref, SubsystemRef) and layout.dim(ref) > 1:
            if ref not in sources and ref.party not in last:
                return False
    return True


def is_markovian(w: ProcessMatrix, w_test: ProcessMatrix, eps: float = DEFAULT_EPS) -> bool:
    if w.layout != w_test.layout:
        raise LayoutError("test matrix layout differs from the process layout")
    return tensor.approx_equal(w.matrix, w_test.matrix, eps)


def without_arrow(pieces: Pieces, arrow: Arrow, layout: SystemLayout) -> ProcessMatrix:
    """Test matrix with ``arrow``'s source disconnected.

    The target's channel ``T`` becomes ``1~_S (x) Tr_S T``: the receiver gets
    the marginal channel from its other parents (a fixed state if none).
    """
    parents, ch = pieces.channels[arrow.target]
    k = parents.index(arrow.source)
    d_s = ch.in_dims[k]
    marg = tensor.partial_trace(ch.matrix, ch.dims, [k])
    others = [i for i in range(len(ch.dims)) if i != k]
    new = tensor.kron(np.eye(d_s) / d_s, marg)
    # identity factor currently first; move it back to slot k
    cur = [k] + others
    new = tensor.reorder_systems(new, [ch.dims[i] for i in cur], cur)
    channels = dict(pieces.channels)
    channels[arrow.target] = (parents, ChoiMatrix(new, ch.in_dims, ch.out_dims))
    return build_test_matrix(layout, pieces.states, channels, pieces.last)


# -- orchestration ------------------------------------------------------------------

def discover(w: ProcessMatrix, eps: float = DEFAULT_EPS, check: bool = True,
             eps_psd: float = EPS_PSD, eps_trace: float = EPS_TRACE) -> DiscoveryReport:
    """Run all three stages on ``w``.

    With ``check`` the input is validated first and rejected when it is not
    a positive semidefinite, Hermitian, normalised process matrix.
    """
    if check:
        vr = validate(w, eps_psd=eps_psd, eps_trace=eps_trace)
        if not vr.valid:
            raise RejectedInput("; ".join(str(i) for i in vr.errors), vr)
    counter = Counter()
    names = w.layout.names

    open_refs = find_open_subsystems(w, eps, counter)
    reduced = remove_open(w, open_refs)

    order = peel_causal_order(reduced, eps, counter)
    if isinstance(order, NotCausallyOrdered):
        return DiscoveryReport(
            parties=names, open_subsystems=open_refs, causally_ordered=False,
            causal_order=None, arrows=[], markovian=False, eps=eps,
            constraint_test_count=counter.value, unordered=order.remaining,
            partial_order=order.found, reduced=reduced)

    arrows = find_arrows(reduced, order, open_refs, eps, counter)
    last = list(order.sets[-1])
    report = DiscoveryReport(
        parties=names, open_subsystems=open_refs, causally_ordered=True,
        causal_order=order, arrows=arrows, markovian=False, eps=eps,
        constraint_test_count=counter.value, reduced=reduced)
    if not pieces_cover(reduced.layout, arrows, last):
        return report
    pieces = extract_pieces(reduced, arrows, last)
    w_test = build_test_matrix(reduced.layout, pieces.states, pieces.channels, last)
    report.pieces = pieces
    report.test_matrix = w_test.matrix
    report.markov_deviation = tensor.max_abs_diff(reduced.matrix, w_test.matrix)
    report.markovian = report.markov_deviation <= eps
    if report.markovian:
        targets = {a.target for a in arrows}
        report.dag = Dag(nodes=list(names), edges=list(arrows),
                         first=[p for p in names if p not in targets], last=last)
    return report


def verify_two_order_decomposition(w: ProcessMatrix, q: float, w_ab: ProcessMatrix,
                                   w_ba: ProcessMatrix, eps: float = DEFAULT_EPS,
                                   parties: tuple[str, str] | None = None,
                                   eps_psd: float = EPS_PSD, eps_trace: float = EPS_TRACE
                                   ) -> bool:
    """Check ``w = q w_ab + (1 - q) w_ba`` with ``B`` last in ``w_ab``, ``A`` in ``w_ba``.

    ``parties`` names ``(A, B)``; by default the first two declared parties.
    """
    if not (w.layout == w_ab.layout == w_ba.layout):
        raise LayoutError("all three process matrices must share a layout")
    if not 0.0 <= q <= 1.0:
        return False
    a, b = parties if parties is not None else tuple(w.layout.names[:2])
    combo = q * w_ab.matrix + (1 - q) * w_ba.matrix
    if not tensor.approx_equal(combo, w.matrix, eps):
        return False
    for term, last in ((w_ab, b), (w_ba, a)):
        if not validate(term, eps_psd=eps_psd, eps_trace=eps_trace).valid:
            return False
        if not satisfies_identity(term, _remaining_outputs(term.layout, last), eps):
            return False
    return True
