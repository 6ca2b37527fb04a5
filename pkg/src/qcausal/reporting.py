"""Human-readable console text and Graphviz DOT for discovery reports."""
from __future__ import annotations

from .discovery import Arrow, DiscoveryReport
from .process import SystemLayout


def _source_text(arrow: Arrow, layout: SystemLayout) -> str:
    if layout.is_whole(arrow.source):
        return f"party {arrow.source.party}"
    return f"subsystem {arrow.source.index + 1} of party {arrow.source.party}"


def console_lines(report: DiscoveryReport, layout: SystemLayout) -> list[str]:
    lines = []
    if report.open_subsystems:
        head = "There are open subsystems: "
        for k, ref in enumerate(report.open_subsystems):
            text = f"{ref.index + 1} of party {ref.party} of dimension {layout.dim(ref)}"
            lines.append((head if k == 0 else " " * len(head)) + text)
    else:
        lines.append("There are no open subsystems.")

    if not report.causally_ordered:
        lines.append("The process is not causally ordered.")
        if report.partial_order:
            lines.append("Sets found before peeling stopped: "
                         + " < ".join("{" + ", ".join(s) + "}" for s in report.partial_order))
        lines.append("Parties that could not be ordered: " + ", ".join(report.unordered))
        return lines

    lines.append("the_sets =")
    for s in reversed(report.causal_order.sets):
        lines.append("   " + " ".join(s))
    lines.append(f"Causal order: {report.causal_order}")

    for arrow in report.arrows:
        lines.append(f"Link from {_source_text(arrow, layout)} to party {arrow.target}.")
    primal = report.primal_arrows()
    secondary = report.secondary_arrows()
    lines.append("Primal_arrows: " + (", ".join(_short(a) for a in primal) or "none"))
    lines.append("Secondary_arrows: " + (", ".join(_short(a) for a in secondary) or "none"))

    if report.markovian:
        lines.append("the process is Markovian")
    else:
        lines.append("the process is not Markovian: the causal arrows above are not "
                     "reliable and no DAG is given")
    return lines


def _short(a: Arrow) -> str:
    return f"{a.source.party}.O{a.source.index + 1}->{a.target}"


def _quote(s: str) -> str:
    s = s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return '"' + s + '"'


def to_dot(report: DiscoveryReport, layout: SystemLayout) -> str:
    """DAG as DOT with nodes and edges in sorted order.

    Parties receiving a state are marked ``state``; last parties ``open output``.
    Without a DAG (non-Markovian input) only the nodes are written.
    """
    dag = report.dag
    first = set(dag.first) if dag else set()
    last = set(dag.last) if dag else set()
    out = ["digraph DAG {"]
    if dag is None:
        out.append("  // no DAG: the process is not Markovian")
    for name in sorted(report.parties):
        notes = [n for n, on in (("state", name in first), ("open output", name in last)) if on]
        label = "\n".join([name, *notes])
        out.append(f"  {_quote(name)} [label={_quote(label)}];")
    edges = sorted(dag.edges if dag else [],
                   key=lambda a: (a.source.party, a.source.index, a.target))
    for a in edges:
        label = "O" if layout.is_whole(a.source) else f"O{a.source.index + 1}"
        out.append(f"  {_quote(a.source.party)} -> {_quote(a.target)} [label={_quote(label)}];")
    out.append("}")
    return "\n".join(out) + "\n"
