"""Command line: ``qcausal {discover,generate,validate,oracle}``.

Exit codes: 0 success, 2 invalid input, 3 internal error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import discovery, generator, oracle, process, reporting
from .errors import ContractViolation, LayoutError, ParseError, RejectedInput

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INTERNAL = 3

log = logging.getLogger("qcausal")


class InputError(Exception):
    """Bad command-line input; maps to exit code 2."""


def _positive(value: str) -> float:
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return x


def _load(path) -> process.ProcessMatrix:
    try:
        return process.load(path)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def sidecar_path(out: Path) -> Path:
    return out.with_name(out.stem + ".truth.json")


# -- commands ---------------------------------------------------------------------

def cmd_discover(args) -> int:
    w = _load(args.file)
    report = discovery.discover(w, eps=args.eps)
    for line in reporting.console_lines(report, w.layout):
        print(line)
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_json(), indent=2) + "\n")
    if args.dot:
        Path(args.dot).write_text(reporting.to_dot(report, w.layout))
    return EXIT_OK


def _dims_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


def cmd_generate(args) -> int:
    out = Path(args.output)
    if args.kind == "markov":
        sources = [x for x in (args.spec, args.preset, args.random) if x is not None]
        if len(sources) != 1:
            raise InputError("markov needs exactly one of --spec, --preset, --random")
        if args.spec:
            try:
                data = json.loads(Path(args.spec).read_text())
            except OSError as e:
                raise InputError(f"cannot read {args.spec}: {e.strerror}") from None
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", f"line {e.lineno}") from None
            spec = generator.DagSpec.from_json(data)
        elif args.preset:
            spec = generator.worked_example_spec()
        else:
            spec = generator.random_dag_spec(args.random, seed=args.seed)
        truth = generator.markovian_process(spec, seed=args.seed)
        w = truth.process
        sidecar = {"kind": "markov", **truth.sidecar()}
    elif args.kind == "comb":
        w = generator.comb_with_memory(args.parties, args.dim, args.memory, seed=args.seed)
        spec = generator.comb_extended_spec(args.parties, args.dim, args.memory)
        sidecar = {"kind": "comb", "seed": args.seed, "rng": generator.RNG_NAME,
                   "memory_dim": args.memory, "latent_dag": spec.to_json(),
                   "causal_order": [[p] for p in w.layout.names]}
    else:
        ab = generator.identity_channel_process(("A", "B"), d=args.dim)
        ba = generator.identity_channel_process(("B", "A"), d=args.dim)
        w = generator.mixture(args.q, ab, ba)
        sidecar = {"kind": "mixture", "q": args.q, "seed": args.seed,
                   "terms": ["A<B identity channel", "B<A identity channel"]}
    process.save(w, out)
    sidecar_path(out).write_text(json.dumps(sidecar, indent=2) + "\n")
    print(f"wrote {out} (side {w.layout.side}) and {sidecar_path(out)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    w = _load(args.file)
    report = process.validate(w, eps_psd=args.eps_psd, eps_trace=args.eps_trace)
    if args.json:
        print(json.dumps(report.to_json()))
        return EXIT_OK
    print("valid" if report.valid else "invalid")
    for issue in report.issues:
        print(f"  {issue}")
    print(f"trace {report.trace.real:.12g} (expected {report.expected_trace:.12g})")
    return EXIT_OK


def cmd_oracle(args) -> int:
    w = _load(args.file)
    for name in (args.sender, args.receiver):
        w.layout.party(name)
    s = oracle.signaling_strength(w, args.sender, args.receiver, n_settings=args.settings,
                                  seed=args.seed)
    print(f"{s:.12g}")
    if s <= args.eps:
        print("no signaling detected within tested family", file=sys.stderr)
    return EXIT_OK


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcausal",
                                     description="Causal discovery on process matrices.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="run causal discovery on a procmat-v1 file")
    p.add_argument("file")
    p.add_argument("--eps", type=_positive, default=discovery.DEFAULT_EPS)
    p.add_argument("--report", metavar="JSON", help="write the report as JSON")
    p.add_argument("--dot", metavar="DOT", help="write the DAG as Graphviz DOT")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("generate", help="write a test process and its ground truth")
    p.add_argument("kind", choices=["markov", "comb", "mixture"])
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--spec", metavar="JSON", help="DagSpec file (markov)")
    p.add_argument("--preset", choices=["worked-example"], help="built-in DagSpec (markov)")
    p.add_argument("--random", type=int, metavar="N", help="random qubit DAG on N parties")
    p.add_argument("--parties", type=int, default=2, help="comb length")
    p.add_argument("--dim", type=int, default=2, help="system dimension (comb, mixture)")
    p.add_argument("--memory", type=int, default=2, help="memory dimension (comb)")
    p.add_argument("--q", type=float, default=0.5, help="weight of A<B (mixture)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check hermiticity, positivity and normalisation")
    p.add_argument("file")
    p.add_argument("--eps-psd", type=_positive, default=process.EPS_PSD)
    p.add_argument("--eps-trace", type=_positive, default=process.EPS_TRACE)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("oracle", help="operational signaling strength between two parties")
    p.add_argument("file")
    p.add_argument("--from", dest="sender", required=True)
    p.add_argument("--to", dest="receiver", required=True)
    p.add_argument("--settings", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=_positive, default=1e-7)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except RejectedInput as e:
        print(f"error: invalid process matrix: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (InputError, ParseError, LayoutError, ContractViolation) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except Exception:  # noqa: BLE001
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
