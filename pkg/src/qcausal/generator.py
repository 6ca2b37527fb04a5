"""Ground-truth process matrices for testing discovery.

Markovian processes are built as a tensor product of states (parentless
parties), one channel per party with parents, and identities on every output
subsystem that feeds nothing.  Non-Markovian but causally ordered processes
come from contracting latent nodes out of a larger Markovian process.

All randomness goes through :func:`numpy.random.default_rng` (PCG64); every
function takes an explicit ``seed`` (an int or an existing ``Generator``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import tensor
from .channels import ChoiMatrix, identity_choi, kraus_choi
from .errors import ContractViolation, LayoutError, ParseError
from .process import (InputRef, PartySpec, ProcessMatrix, SubsystemRef, SystemLayout,
                      assemble)

RNG_NAME = "numpy-PCG64"


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _ginibre(rng, rows, cols) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_density(d: int, seed=None) -> np.ndarray:
    """Full-rank random state ``G G^dag / Tr`` with a Ginibre ``G``."""
    if d < 1:
        raise ContractViolation("dimension must be >= 1")
    g = _ginibre(_rng(seed), d, d)
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def random_pure_state(d: int, seed=None) -> np.ndarray:
    v = _ginibre(_rng(seed), d, 1)[:, 0]
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_unitary(d: int, seed=None) -> np.ndarray:
    q, r = np.linalg.qr(_ginibre(_rng(seed), d, d))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_isometry(d_in: int, d_out: int, seed=None) -> np.ndarray:
    """Haar-random isometry, shape ``(d_out, d_in)`` with ``d_out >= d_in``."""
    q, r = np.linalg.qr(_ginibre(_rng(seed), d_out, d_in))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_cptp_choi(in_dims: Sequence[int], out_dims: Sequence[int], seed=None,
                     unitary: bool = False) -> ChoiMatrix:
    """Choi matrix of a random channel from its Stinespring isometry.

    The environment has dimension ``d_in * d_out`` (full Kraus rank), or 1
    when ``unitary`` is set.
    """
    in_dims, out_dims = tuple(in_dims), tuple(out_dims)
    d_in, d_out = math.prod(in_dims), math.prod(out_dims)
    if unitary and d_in != d_out:
        raise ContractViolation(f"a unitary channel needs d_in == d_out, got {d_in}, {d_out}")
    env = 1 if unitary else d_in * d_out
    v = random_isometry(d_in, d_out * env, seed)
    kraus = v.reshape(d_out, env, d_in).transpose(1, 0, 2)
    return kraus_choi(kraus, in_dims, out_dims)


# -- DAG specifications ----------------------------------------------------------

@dataclass(frozen=True)
class Edge:
    source: SubsystemRef
    target: str

    def to_json(self) -> dict:
        return {"from": self.source.to_json(), "to": self.target}


@dataclass(frozen=True)
class DagSpec:
    """A layout plus arrows from output subsystems to party inputs."""

    layout: SystemLayout
    edges: tuple[Edge, ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))
        used = set()
        for e in self.edges:
            self.layout.position(e.source)
            self.layout.party(e.target)
            if e.source in used:
                raise LayoutError(f"subsystem {e.source} is the source of two edges")
            if e.source.party == e.target:
                raise LayoutError(f"self loop on party {e.target!r}")
            used.add(e.source)
        self.topological_order()

    def parents(self, name: str) -> list[SubsystemRef]:
        """Parent subsystems of ``name`` in flat layout order."""
        return sorted((e.source for e in self.edges if e.target == name),
                      key=self.layout.position)

    def children(self, name: str) -> list[str]:
        return [e.target for e in self.edges if e.source.party == name]

    def topological_order(self) -> list[str]:
        names = self.layout.names
        indeg = {n: 0 for n in names}
        succ: dict[str, list[str]] = {n: [] for n in names}
        for e in self.edges:
            indeg[e.target] += 1
            succ[e.source.party].append(e.target)
        ready = [n for n in names if indeg[n] == 0]
        out = []
        while ready:
            n = ready.pop(0)
            out.append(n)
            for m in succ[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    ready.append(m)
        if len(out) != len(names):
            raise LayoutError("edges contain a directed cycle")
        return out

    @property
    def first(self) -> list[str]:
        """Parties without parents; they receive a state."""
        targets = {e.target for e in self.edges}
        return [n for n in self.layout.names if n not in targets]

    @property
    def last(self) -> list[str]:
        """Parties without children; their whole output is open."""
        sources = {e.source.party for e in self.edges}
        return [n for n in self.layout.names if n not in sources]

    @property
    def open_subsystems(self) -> list[SubsystemRef]:
        """Edge-free subsystems of parties whose output is split."""
        sources = {e.source for e in self.edges}
        out = []
        for p in self.layout.parties:
            if p.undivided:
                continue
            out.extend(r for r in self.layout.outputs(p.name)
                       if r not in sources and self.layout.dim(r) > 1)
        return out

    def to_json(self) -> dict:
        return {"parties": self.layout.to_json(), "edges": [e.to_json() for e in self.edges]}

    @classmethod
    def from_json(cls, data) -> "DagSpec":
        if not isinstance(data, dict):
            raise ParseError("DagSpec must be an object")
        layout = SystemLayout.from_json(data.get("parties"))
        edges = []
        for i, e in enumerate(data.get("edges", [])):
            ctx = f"edges[{i}]"
            try:
                (party, index), target = e["from"], e["to"]
            except (KeyError, TypeError, ValueError):
                raise ParseError('edge must look like {"from": [party, index], "to": party}',
                                 ctx) from None
            if not isinstance(index, int) or not isinstance(party, str):
                raise ParseError("edge source must be [party name, subsystem index]", ctx)
            edges.append(Edge(SubsystemRef(party, index), str(target)))
        try:
            return cls(layout, tuple(edges))
        except LayoutError as err:
            raise ParseError(str(err), "edges") from None


def make_dag(layout: SystemLayout, edges) -> DagSpec:
    """``edges`` as ``((party, index), target)`` tuples."""
    return DagSpec(layout, tuple(Edge(SubsystemRef(p, i), t) for (p, i), t in edges))


def worked_example_spec() -> DagSpec:
    """Four parties with two open subsystems on party 2.

    Edges 3 -> 1 (whole output), 1.O1 -> 2, 1.O2 -> 4, 2.O3 -> 4.
    """
    layout = SystemLayout((
        PartySpec("1", 2, (2, 2)),
        PartySpec("2", 2, (2, 2, 2)),
        PartySpec("3", 2, (2,)),
        PartySpec("4", 2, (4,)),
    ))
    return make_dag(layout, [(("3", 0), "1"), (("1", 0), "2"),
                             (("1", 1), "4"), (("2", 2), "4")])


def random_dag_spec(n: int, seed=None, edge_prob: float = 0.5, open_prob: float = 0.3,
                    dim: int = 2, max_side: int = 1024) -> DagSpec:
    """Random DAG on parties ``"1".."n"`` with all systems of dimension ``dim``.

    Declaration order is independent of the causal order.  A party with
    children gets one output subsystem per child and, with probability
    ``open_prob``, one extra open subsystem; childless parties have one
    undivided output.  Draws are repeated until the matrix side is at most
    ``max_side``.
    """
    rng = _rng(seed)
    names = [str(i + 1) for i in range(n)]
    while True:
        causal = list(rng.permutation(names))
        outs: dict[str, list] = {name: [] for name in names}
        for i, u in enumerate(causal):
            for v in causal[i + 1:]:
                if rng.random() < edge_prob:
                    outs[u].append(v)
        for name in names:
            if outs[name] and rng.random() < open_prob:
                outs[name].append(None)
            perm = rng.permutation(len(outs[name]))
            outs[name] = [outs[name][k] for k in perm]
        parties = []
        edges = []
        for name in names:
            slots = outs[name] or [None]
            parties.append(PartySpec(name, dim, tuple([dim] * len(slots))))
            edges.extend(Edge(SubsystemRef(name, k), t) for k, t in enumerate(slots)
                         if t is not None)
        layout = SystemLayout(tuple(parties))
        if layout.side <= max_side:
            return DagSpec(layout, tuple(edges))


# -- process construction ----------------------------------------------------------

@dataclass(eq=False)
class GroundTruth:
    process: ProcessMatrix
    dag: DagSpec
    states: dict[str, np.ndarray]
    channels: dict[str, tuple[tuple[SubsystemRef, ...], ChoiMatrix]]
    open: list[SubsystemRef]
    seed: object = None
    identities: list[SubsystemRef] = field(default_factory=list)

    def pieces(self) -> list:
        out = [((InputRef(p),), rho) for p, rho in self.states.items()]
        out += [((*parents, InputRef(p)), ch.matrix) for p, (parents, ch) in self.channels.items()]
        out += [((r,), np.eye(self.dag.layout.dim(r))) for r in self.identities]
        return out

    def sidecar(self) -> dict:
        return {
            "seed": self.seed if isinstance(self.seed, (int, type(None))) else str(self.seed),
            "rng": RNG_NAME,
            **self.dag.to_json(),
            "open": [r.to_json() for r in self.open],
            "first": self.dag.first,
            "last": self.dag.last,
        }


def _draw_pieces(spec: DagSpec, rng, states, channels) -> GroundTruth:
    layout = spec.layout
    states = dict(states or {})
    channels = dict(channels or {})
    out_states: dict[str, np.ndarray] = {}
    out_channels: dict[str, tuple] = {}
    for p in layout.parties:
        parents = tuple(spec.parents(p.name))
        if not parents:
            rho = states.get(p.name)
            rho = random_density(p.input_dim, rng) if rho is None else tensor.as_matrix(rho)
            if rho.shape != (p.input_dim, p.input_dim):
                raise ContractViolation(f"state for party {p.name!r} has shape {rho.shape}")
            out_states[p.name] = rho
            continue
        in_dims = tuple(layout.dim(r) for r in parents)
        ch = channels.get(p.name)
        if ch is None:
            ch = random_cptp_choi(in_dims, (p.input_dim,), rng)
        elif ch.d_in != math.prod(in_dims) or ch.d_out != p.input_dim:
            raise ContractViolation(
                f"channel into party {p.name!r} maps {ch.in_dims} -> {ch.out_dims}, "
                f"edges need {in_dims} -> ({p.input_dim},)")
        else:
            ch = ChoiMatrix(ch.matrix, in_dims, (p.input_dim,))
        out_channels[p.name] = (parents, ch)
    sources = {e.source for e in spec.edges}
    idents = [r for r in layout.factors if isinstance(r, SubsystemRef) and r not in sources]
    return GroundTruth(None, spec, out_states, out_channels, spec.open_subsystems,
                       None, idents)


def markovian_process(spec: DagSpec, seed=None,
                      states: Mapping[str, np.ndarray] | None = None,
                      channels: Mapping[str, ChoiMatrix] | None = None) -> GroundTruth:
    """Markovian process for ``spec`` with random pieces.

    ``states`` / ``channels`` override the random draw for particular parties;
    a channel's input dims must be its parent subsystems in flat order.
    """
    truth = _draw_pieces(spec, _rng(seed), states, channels)
    truth.seed = seed if not isinstance(seed, np.random.Generator) else None
    truth.process = ProcessMatrix(spec.layout, assemble(spec.layout, truth.pieces()))
    return truth


def _link(mat: np.ndarray, dims: Sequence[int], pos: Sequence[int],
          event: np.ndarray) -> np.ndarray:
    """``Tr_P[mat (1 (x) event)]`` for the factors at positions ``pos``."""
    n = len(dims)
    rest = [k for k in range(n) if k not in pos]
    d_p = math.prod(dims[k] for k in pos)
    d_r = math.prod(dims[k] for k in rest)
    t = np.asarray(mat).reshape(tuple(dims) * 2)
    t = t.transpose(rest + list(pos) + [n + k for k in rest] + [n + k for k in pos])
    t = t.reshape(d_r, d_p, d_r, d_p)
    return np.einsum("apbq,qp->ab", t, event)


def _check_map(spec: PartySpec, choi: ChoiMatrix, eps: float):
    if choi.d_in != spec.input_dim or choi.d_out != spec.output_dim:
        raise ContractViolation(
            f"map {choi.d_in} -> {choi.d_out} does not fit party {spec.name!r} "
            f"({spec.input_dim} -> {spec.output_dim})")
    if not choi.is_trace_preserving(eps):
        raise ContractViolation(f"map for party {spec.name!r} is not trace preserving")


def contract_party(w: ProcessMatrix, party: str, choi: ChoiMatrix,
                   eps: float = 1e-9) -> ProcessMatrix:
    """Plug the channel ``choi`` into ``party`` and remove it from the process.

    Uses the probability rule ``Tr_party[W (1 (x) M)]`` with ``M`` the
    transposed Choi matrix of the map.
    """
    layout = w.layout
    _check_map(layout.party(party), choi, eps)
    pos = [layout.position(r) for r in layout.party_factors(party)]
    m = _link(w.matrix, layout.dims, pos, choi.event_matrix())
    return ProcessMatrix(layout.without(party), m)


def contract_pieces(layout: SystemLayout, pieces: list, party: str, choi: ChoiMatrix,
                    eps: float = 1e-9) -> list:
    """Same as :func:`contract_party` on a factorised process.

    Only the pieces touching ``party`` are multiplied out, which keeps
    latent-node contraction cheap when the full extended matrix is large.
    """
    _check_map(layout.party(party), choi, eps)
    mine = set(layout.party_factors(party))
    touching = [pc for pc in pieces if mine & set(pc[0])]
    others = [pc for pc in pieces if not mine & set(pc[0])]
    refs = [r for pc in touching for r in pc[0]]
    missing = [r for r in layout.party_factors(party) if r not in refs]
    mats = [pc[1] for pc in touching] + [np.eye(layout.dim(r)) for r in missing]
    refs += missing
    # party factors must follow the flat order: input, then output subsystems
    order = sorted(range(len(refs)), key=lambda k: (refs[k] in mine,
                                                   layout.position(refs[k]) if refs[k] in mine
                                                   else k))
    dims = [layout.dim(r) for r in refs]
    merged = tensor.reorder_systems(tensor.kron_all(mats), dims,
                                    [order.index(k) for k in range(len(refs))])
    refs = [refs[k] for k in order]
    dims = [dims[k] for k in order]
    pos = [k for k, r in enumerate(refs) if r in mine]
    out = _link(merged, dims, pos, choi.event_matrix())
    return others + [(tuple(r for r in refs if r not in mine), out)]


def _comb_spec(n_parties: int, dims, memory_dims) -> tuple[DagSpec, SystemLayout]:
    if n_parties < 2:
        raise ContractViolation("a comb needs at least two parties")
    d = [int(dims)] * n_parties if np.isscalar(dims) else [int(x) for x in dims]
    m = [int(memory_dims)] * (n_parties - 1) if np.isscalar(memory_dims) else [
        int(x) for x in memory_dims]
    if len(d) != n_parties or len(m) != n_parties - 1:
        raise ContractViolation("need one dim per party and one memory dim per link")
    names = [str(i + 1) for i in range(n_parties)]
    parties = [PartySpec(nm, d[i], (d[i],)) for i, nm in enumerate(names)]
    latents = []
    edges = []
    for k in range(n_parties):
        lname = f"L{k}"
        if k < n_parties - 1:
            latents.append(PartySpec(lname, d[k] * m[k], (d[k], m[k])))
            edges.append(((lname, 1), f"L{k + 1}"))
        else:
            latents.append(PartySpec(lname, d[k], (d[k],)))
        edges.append(((lname, 0), names[k]))
        if k > 0:
            edges.append(((names[k - 1], 0), lname))
    spec = make_dag(SystemLayout(tuple(parties + latents)), edges)
    return spec, SystemLayout(tuple(parties))


def comb_extended_spec(n_parties: int, dims=2, memory_dims=2) -> DagSpec:
    """Markovian spec, latent nodes ``L0 ..`` included, behind :func:`comb_with_memory`."""
    return _comb_spec(n_parties, dims, memory_dims)[0]


def comb_with_memory(n_parties: int, dims=2, memory_dims=2, seed=None) -> ProcessMatrix:
    """Causally ordered chain ``1 < 2 < ... < n`` whose channels carry memory.

    Built as a Markovian process on the parties plus latent nodes
    ``L0 .. L{n-1}``: ``L0`` emits a joint state to party 1 and to a memory
    line; ``Lk`` collects party k's output and the memory and emits to party
    k+1 and the memory.  Each latent node is then contracted with the identity
    map.  Memory of dimension 1 gives back a Markovian chain.
    """
    spec, visible = _comb_spec(n_parties, dims, memory_dims)
    pieces = _draw_pieces(spec, _rng(seed), None, None).pieces()
    for p in spec.layout.parties:
        if p.name not in visible.names:
            pieces = contract_pieces(spec.layout, pieces, p.name, identity_choi(p.input_dim))
    return ProcessMatrix(visible, assemble(visible, pieces))


def mixture(q: float, w1: ProcessMatrix, w2: ProcessMatrix) -> ProcessMatrix:
    """``q * w1 + (1 - q) * w2``."""
    if w1.layout != w2.layout:
        raise LayoutError("mixture terms must share a layout")
    if not 0.0 <= q <= 1.0:
        raise ContractViolation(f"q = {q} is not a probability")
    return ProcessMatrix(w1.layout, q * w1.matrix + (1 - q) * w2.matrix)


def identity_channel_process(order: tuple[str, str] = ("A", "B"), d: int = 2,
                             state=None, names: tuple[str, str] = ("A", "B")) -> ProcessMatrix:
    """Two parties where ``order[0]``'s output goes unchanged to ``order[1]``.

    The layout always declares ``names`` in that order, so processes with
    opposite orders can be mixed.  ``state`` defaults to the maximally mixed
    state.
    """
    layout = SystemLayout(tuple(PartySpec(nm, d, (d,)) for nm in names))
    src, dst = order
    spec = make_dag(layout, [((src, 0), dst)])
    rho = np.eye(d) / d if state is None else state
    return markovian_process(spec, states={src: rho},
                             channels={dst: identity_choi(d)}).process
