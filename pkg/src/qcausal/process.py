"""Process matrices: party layout, validity checks and the procmat-v1 format."""
from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from . import tensor
from .errors import ContractViolation, LayoutError, ParseError

FORMAT_TAG = "procmat-v1"

EPS_PSD = 1e-8
EPS_TRACE = 1e-6
EPS_HERM = 1e-9


@dataclass(frozen=True)
class PartySpec:
    """One party: an input system and an output split into subsystems.

    A single entry in ``output_subdims`` means the output is undivided.
    """

    name: str
    input_dim: int
    output_subdims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "name", str(self.name))
        object.__setattr__(self, "input_dim", int(self.input_dim))
        object.__setattr__(self, "output_subdims", tuple(int(d) for d in self.output_subdims))
        if self.input_dim < 1:
            raise LayoutError(f"party {self.name!r}: input_dim must be >= 1")
        if not self.output_subdims:
            raise LayoutError(f"party {self.name!r}: output_subdims must not be empty")
        if any(d < 1 for d in self.output_subdims):
            raise LayoutError(f"party {self.name!r}: subsystem dims must be >= 1")

    @property
    def output_dim(self) -> int:
        return math.prod(self.output_subdims)

    @property
    def undivided(self) -> bool:
        return len(self.output_subdims) == 1

    def to_json(self) -> dict:
        return {"name": self.name, "input_dim": self.input_dim,
                "output_subdims": list(self.output_subdims)}


@dataclass(frozen=True, order=True)
class InputRef:
    """The input system of a party."""

    party: str

    def __str__(self):
        return f"{self.party}_I"


@dataclass(frozen=True, order=True)
class SubsystemRef:
    """Output subsystem ``index`` (0-based) of ``party``.

    For a party with an undivided output, index 0 is the whole output.
    """

    party: str
    index: int

    def __str__(self):
        return f"{self.party}_O{self.index + 1}"

    def to_json(self) -> list:
        return [self.party, self.index]


FactorRef = Union[InputRef, SubsystemRef]


@dataclass(frozen=True)
class SystemLayout:
    """Ordered parties; the flat factor order is ``A_I A_O1 A_O2 ... B_I ...``."""

    parties: tuple[PartySpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "parties", tuple(self.parties))
        names = [p.name for p in self.parties]
        if len(set(names)) != len(names):
            raise LayoutError(f"party names are not unique: {names}")

    @cached_property
    def factors(self) -> tuple[FactorRef, ...]:
        out: list[FactorRef] = []
        for p in self.parties:
            out.append(InputRef(p.name))
            out.extend(SubsystemRef(p.name, i) for i in range(len(p.output_subdims)))
        return tuple(out)

    @cached_property
    def dims(self) -> tuple[int, ...]:
        out: list[int] = []
        for p in self.parties:
            out.append(p.input_dim)
            out.extend(p.output_subdims)
        return tuple(out)

    @cached_property
    def _positions(self) -> dict:
        return {f: k for k, f in enumerate(self.factors)}

    @property
    def side(self) -> int:
        return math.prod(self.dims)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.parties]

    def party(self, name: str) -> PartySpec:
        for p in self.parties:
            if p.name == name:
                return p
        raise LayoutError(f"unknown party {name!r}")

    def position(self, ref: FactorRef) -> int:
        try:
            return self._positions[ref]
        except KeyError:
            raise LayoutError(f"unknown system {ref!r}") from None

    def dim(self, ref: FactorRef) -> int:
        return self.dims[self.position(ref)]

    def outputs(self, name: str) -> list[SubsystemRef]:
        p = self.party(name)
        return [SubsystemRef(name, i) for i in range(len(p.output_subdims))]

    def party_factors(self, name: str) -> list[FactorRef]:
        return [InputRef(name), *self.outputs(name)]

    def is_whole(self, ref: SubsystemRef) -> bool:
        return self.party(ref.party).undivided

    def with_factor_dims(self, new_dims: dict[int, int]) -> "SystemLayout":
        """Copy of the layout with the factor at each flat position resized."""
        dims = list(self.dims)
        for k, d in new_dims.items():
            dims[k] = d
        parties = []
        k = 0
        for p in self.parties:
            n_out = len(p.output_subdims)
            parties.append(PartySpec(p.name, dims[k], tuple(dims[k + 1:k + 1 + n_out])))
            k += 1 + n_out
        return SystemLayout(tuple(parties))

    def without(self, name: str) -> "SystemLayout":
        self.party(name)
        return SystemLayout(tuple(p for p in self.parties if p.name != name))

    def to_json(self) -> list:
        return [p.to_json() for p in self.parties]

    @classmethod
    def from_json(cls, data, where="parties") -> "SystemLayout":
        if not isinstance(data, list) or not data:
            raise ParseError("expected a non-empty list of parties", where)
        parties = []
        for i, entry in enumerate(data):
            ctx = f"{where}[{i}]"
            if not isinstance(entry, dict):
                raise ParseError("party entry must be an object", ctx)
            try:
                name = entry["name"]
                input_dim = entry["input_dim"]
                subdims = entry["output_subdims"]
            except KeyError as e:
                raise ParseError(f"missing field {e.args[0]!r}", ctx) from None
            if not isinstance(name, str):
                raise ParseError("party name must be a string", f"{ctx}.name")
            if not _is_count(input_dim):
                raise ParseError("input_dim must be a positive integer", f"{ctx}.input_dim")
            if (not isinstance(subdims, list) or not subdims
                    or not all(_is_count(d) for d in subdims)):
                raise ParseError("output_subdims must be a non-empty list of positive integers",
                                 f"{ctx}.output_subdims")
            parties.append(PartySpec(name, input_dim, tuple(subdims)))
        try:
            return cls(tuple(parties))
        except LayoutError as e:
            raise ParseError(str(e), where) from None


def _is_count(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool) and x >= 1


def make_layout(*parties: tuple) -> SystemLayout:
    """``make_layout(("A", 2, [2]), ("B", 2, [2, 2]))``."""
    return SystemLayout(tuple(PartySpec(n, d, tuple(s)) for n, d, s in parties))


@dataclass(frozen=True, eq=False)
class ProcessMatrix:
    layout: SystemLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = tensor.as_matrix(self.matrix)
        if m.shape != (self.layout.side, self.layout.side):
            raise LayoutError(
                f"matrix shape {m.shape} does not match layout side {self.layout.side}")
        object.__setattr__(self, "matrix", m)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.dims

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


# -- validation ---------------------------------------------------------------

@dataclass
class Issue:
    check: str          # "hermiticity" | "psd" | "trace"
    violation: float
    severity: str = "error"

    def __str__(self):
        return f"{self.severity}: {self.check} violated by {self.violation:.3g}"


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)
    trace: complex = 0j
    expected_trace: float = 1.0

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def valid(self) -> bool:
        return not self.errors

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "issues": [{"check": i.check, "violation": i.violation, "severity": i.severity}
                       for i in self.issues],
            "trace": [self.trace.real, self.trace.imag],
            "expected_trace": self.expected_trace,
        }


def expected_trace(layout: SystemLayout) -> int:
    """Trace of a normalised process: the product of all output dimensions."""
    return math.prod(p.output_dim for p in layout.parties)


def validate(w: ProcessMatrix, eps_psd: float = EPS_PSD, eps_trace: float = EPS_TRACE,
             eps_herm: float = EPS_HERM) -> ValidationReport:
    """Check hermiticity, positivity and trace normalisation.

    The trace check is relative to the expected trace.  A deviation up to
    ``10 * eps_trace`` is only a warning.
    """
    m = w.matrix
    report = ValidationReport(trace=w.trace(), expected_trace=float(expected_trace(w.layout)))

    herm = float(np.max(np.abs(m - m.conj().T)))
    if herm > eps_herm:
        report.issues.append(Issue("hermiticity", herm))

    if not tensor.is_psd(m, eps_psd):
        report.issues.append(Issue("psd", -tensor.min_eigenvalue(m)))

    rel = abs(report.trace - report.expected_trace) / report.expected_trace
    if rel > 10 * eps_trace:
        report.issues.append(Issue("trace", rel))
    elif rel > eps_trace:
        report.issues.append(Issue("trace", rel, "warning"))
    return report


# -- reductions ---------------------------------------------------------------

def resolve_targets(layout: SystemLayout, targets: Iterable) -> list[int]:
    """Flat positions for a mix of factor refs and party names (whole party)."""
    positions: list[int] = []
    for t in targets:
        if isinstance(t, (InputRef, SubsystemRef)):
            positions.append(layout.position(t))
        elif isinstance(t, str):
            positions.extend(layout.position(f) for f in layout.party_factors(t))
        else:
            raise LayoutError(f"cannot trace out {t!r}")
    if len(set(positions)) != len(positions):
        raise LayoutError("a system is listed twice")
    return positions


def trace_out(w: ProcessMatrix, targets: Iterable) -> ProcessMatrix:
    """Partial trace over the given systems.

    Traced factors stay in the layout with dimension 1, so subsystem indices
    of the remaining systems do not shift.
    """
    positions = resolve_targets(w.layout, targets)
    if not positions:
        return w
    m = tensor.partial_trace(w.matrix, w.dims, positions)
    return ProcessMatrix(w.layout.with_factor_dims({k: 1 for k in positions}), m)


def assemble(layout: SystemLayout, pieces: Sequence[tuple[Sequence[FactorRef], np.ndarray]]
             ) -> np.ndarray:
    """Tensor the pieces together and bring them into the layout's flat order.

    Each piece is ``(refs, matrix)`` where ``matrix`` lives on the listed
    systems in the listed order.  Every factor of dimension > 1 must be
    covered exactly once; uncovered dimension-1 factors are filled in.
    """
    order: list[int] = []
    mats = []
    for refs, mat in pieces:
        pos = [layout.position(r) for r in refs]
        dims = [layout.dims[k] for k in pos]
        mat = np.asarray(mat, dtype=np.complex128)
        if mat.shape != (math.prod(dims), math.prod(dims)):
            raise ContractViolation(
                f"piece on {[str(r) for r in refs]} has shape {mat.shape}, expected dims {dims}")
        order.extend(pos)
        mats.append(mat)
    if len(set(order)) != len(order):
        dup = sorted({layout.factors[k] for k in order if order.count(k) > 1}, key=str)
        raise ContractViolation(f"systems covered twice: {[str(r) for r in dup]}")
    missing = [k for k in range(len(layout.dims)) if k not in set(order)]
    if any(layout.dims[k] > 1 for k in missing):
        raise ContractViolation(
            f"systems not covered: {[str(layout.factors[k]) for k in missing if layout.dims[k] > 1]}")
    order.extend(missing)
    big = tensor.kron_all(mats)
    cur_dims = [layout.dims[k] for k in order]
    return tensor.reorder_systems(big, cur_dims, order)


# -- procmat-v1 I/O -------------------------------------------------------------

def dumps_header(layout: SystemLayout) -> str:
    return json.dumps(layout.to_json())


def save(w: ProcessMatrix, path) -> None:
    """Write ``w`` as procmat-v1 JSON.

    Floats go through ``repr``, the shortest string that round-trips exactly.
    """
    path = Path(path)
    m = w.matrix
    n = m.shape[0]
    with open(path, "w", encoding="utf-8") as f:
        f.write('{"format": "%s",\n "parties": %s,\n' % (FORMAT_TAG, dumps_header(w.layout)))
        f.write(' "matrix": {"dim": %d, "layout": "row-major", "entries": [\n' % n)
        re_, im_ = m.real.tolist(), m.imag.tolist()
        for i in range(n):
            row = ",".join([f"[{a!r},{b!r}]" for a, b in zip(re_[i], im_[i])])
            f.write(row)
            f.write(",\n" if i < n - 1 else "\n")
        f.write("]}}\n")


_ENTRIES_KEY = re.compile(rb'"entries"\s*:\s*\[')
_ALLOWED_LUT = np.zeros(256, dtype=bool)
_ALLOWED_LUT[list(b"0123456789+-.eE[], \t\r\nNaInfity")] = True


def _split_entries(raw: bytes) -> tuple[bytes, bytes]:
    """Cut the (potentially huge) entries array out of the document.

    The array holds only numbers, brackets and commas, so it ends at the
    last ``]`` before the next ``}`` or ``"``.
    """
    m = _ENTRIES_KEY.search(raw)
    if m is None:
        raise ParseError("missing matrix.entries array", "matrix.entries")
    start = m.end() - 1
    stops = [k for k in (raw.find(b"}", start), raw.find(b'"', start)) if k >= 0]
    if not stops:
        raise ParseError("unterminated entries array", "matrix.entries")
    end = raw.rfind(b"]", start, min(stops)) + 1
    if end <= start + 1:
        raise ParseError("unterminated entries array", "matrix.entries")
    return raw[start:end], raw[:start] + b"[]" + raw[end:]


def _parse_entries(body: bytes, n: int) -> np.ndarray:
    buf = np.frombuffer(body, dtype=np.uint8)
    bad = np.flatnonzero(~_ALLOWED_LUT[buf])
    if bad.size:
        raise ParseError(f"unexpected character {chr(buf[bad[0]])!r}",
                         f"matrix.entries, byte {int(bad[0])}")
    punct = buf[(buf == ord("[")) | (buf == ord("]")) | (buf == ord(","))]
    expected = np.frombuffer(b"[,],", dtype=np.uint8)
    expected = np.concatenate([[ord("[")], np.tile(expected, n * n)[:-1], [ord("]")]])
    if punct.shape != expected.shape or not np.array_equal(punct, expected):
        opens = int(np.count_nonzero(punct == ord("["))) - 1
        if opens != n * n:
            raise ParseError(f"expected {n * n} entries, found {opens}", "matrix.entries")
        raise ParseError("entries must be a list of [re, im] pairs", "matrix.entries")
    del punct, expected
    text = body.translate(None, b"[]").decode("ascii")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        try:
            vals = np.fromstring(text, dtype=np.float64, sep=",")
        except (ValueError, DeprecationWarning):
            raise ParseError("malformed number in entries", "matrix.entries") from None
    if vals.size != 2 * n * n:
        raise ParseError(f"expected {2 * n * n} numbers, found {vals.size}", "matrix.entries")
    bad_idx = np.flatnonzero(~np.isfinite(vals))
    if bad_idx.size:
        k = int(bad_idx[0]) // 2
        raise ParseError("non-finite entry",
                         f"matrix.entries[{k}] (row {k // n}, col {k % n})")
    pairs = vals.reshape(n, n, 2)
    return pairs[..., 0] + 1j * pairs[..., 1]


def loads(raw: bytes | str) -> ProcessMatrix:
    if isinstance(raw, str):
        raw = raw.encode("utf-8")
    body, header_raw = _split_entries(raw)
    try:
        header = json.loads(header_raw)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", f"line {e.lineno}, column {e.colno}") from None
    if not isinstance(header, dict):
        raise ParseError("top level must be an object")
    if header.get("format") != FORMAT_TAG:
        raise ParseError(f"format must be {FORMAT_TAG!r}", "format")
    layout = SystemLayout.from_json(header.get("parties"))
    mat = header.get("matrix")
    if not isinstance(mat, dict):
        raise ParseError("missing matrix object", "matrix")
    n = mat.get("dim")
    if not _is_count(n):
        raise ParseError("dim must be a positive integer", "matrix.dim")
    if mat.get("layout", "row-major") != "row-major":
        raise ParseError("only row-major layout is supported", "matrix.layout")
    if n != layout.side:
        raise ParseError(f"matrix dim {n} does not match layout product {layout.side}",
                         "matrix.dim")
    return ProcessMatrix(layout, _parse_entries(body, n))


def load(path) -> ProcessMatrix:
    with open(path, "rb") as f:
        return loads(f.read())
