"""Command-line interface.

Exit codes: 0 satisfiable/entailed, 1 unsatisfiable/not entailed, 2 unknown
within the configured bounds, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import pickle
import sys
from pathlib import Path

from . import automata
from .consistency import summary_text, tbox_setup
from .engine import (
    EngineConfig,
    check_qf_sat,
    check_qf_sat_data,
    entails_rooted_ucq,
    precompile_tbox,
)
from .normalform import normalize_kb
from .parser import ParseError, kb_text, parse_kb, parse_query
from .semantics import (
    interp_from_json,
    interp_from_text,
    is_quasi_forest,
    check_model,
)

OK, NO, UNKNOWN, INPUT_ERROR = 0, 1, 2, 3


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise SystemExit(f"cannot read {path}: {exc}")


def _load_kb(path: str, internal: bool = False):
    try:
        return parse_kb(_read(path), internal=internal)
    except ParseError as exc:
        print(f"{path}:{exc}", file=sys.stderr)
        raise SystemExit(INPUT_ERROR)


def _config(args) -> EngineConfig:
    config = EngineConfig()
    if getattr(args, "time_limit", None):
        config.wall_clock_limit = args.time_limit
    if getattr(args, "subtree_nodes", None):
        config.subtree_extra_nodes = args.subtree_nodes
    if getattr(args, "segment_nodes", None):
        config.max_segment_nodes = args.segment_nodes
    return config


def _emit_dot(kb, directory: str) -> None:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    setup = tbox_setup(normalize_kb(kb).tbox)
    for auto_id, nfa in setup.automata:
        (out / f"{auto_id}.dot").write_text(automata.nfa_to_dot(nfa, auto_id))
        guided = automata.guided_automaton(nfa, setup.ind_t, auto_id)
        (out / f"{auto_id}-guided.dot").write_text(
            automata.nfa_to_dot(guided, f"{auto_id}_guided")
        )
    print(f"wrote automata graphs to {out}", file=sys.stderr)


def cmd_normalize(args) -> int:
    kb = _load_kb(args.kb)
    normalized = normalize_kb(kb)
    if args.emit_dot:
        _emit_dot(kb, args.emit_dot)
    sys.stdout.write(kb_text(normalized))
    return OK


def cmd_check_sat(args) -> int:
    kb = _load_kb(args.kb, internal=args.internal)
    if args.emit_dot:
        _emit_dot(kb, args.emit_dot)
    verdict = check_qf_sat(kb, _config(args))
    print(verdict.status)
    if verdict.status == "sat" and args.emit_certificate:
        Path(args.emit_certificate).write_text(summary_text(verdict.certificate))
        print(f"certificate written to {args.emit_certificate}", file=sys.stderr)
    return verdict.exit_code


def cmd_precompile(args) -> int:
    kb = _load_kb(args.tbox)
    if kb.abox:
        print("precompile expects a pure TBox", file=sys.stderr)
        return INPUT_ERROR
    pre = precompile_tbox(kb.tbox, _config(args))
    payload = {
        "schema": 1,
        "handle": pickle.dumps(pre),
    }
    Path(args.output).write_bytes(pickle.dumps(payload))
    status = "materialized" if pre.materialized else "lazy"
    print(f"precompiled ({status}, {pre.subtree_searches} subtree searches)")
    return OK


def _load_handle(path: str):
    try:
        payload = pickle.loads(Path(path).read_bytes())
        if payload.get("schema") != 1:
            raise ValueError("unsupported handle version")
        return pickle.loads(payload["handle"])
    except (OSError, ValueError, pickle.PickleError) as exc:
        print(f"cannot load handle {path}: {exc}", file=sys.stderr)
        raise SystemExit(INPUT_ERROR)


def cmd_check_sat_data(args) -> int:
    abox_kb = _load_kb(args.abox)
    pre = _load_handle(args.tbox_handle)
    if abox_kb.tbox:
        print("check-sat-data expects assertions only", file=sys.stderr)
        return INPUT_ERROR
    try:
        verdict = check_qf_sat_data(abox_kb.abox, pre)
    except ValueError as exc:
        print(exc, file=sys.stderr)
        return INPUT_ERROR
    print(verdict.status)
    if verdict.status == "sat" and args.emit_certificate:
        Path(args.emit_certificate).write_text(summary_text(verdict.certificate))
    return verdict.exit_code


def cmd_entail(args) -> int:
    kb = _load_kb(args.kb)
    try:
        queries = parse_query(_read(args.query).strip())
    except ParseError as exc:
        print(f"{args.query}:{exc}", file=sys.stderr)
        return INPUT_ERROR
    try:
        verdict = entails_rooted_ucq(kb, queries, _config(args))
    except ValueError as exc:
        print(exc, file=sys.stderr)
        return INPUT_ERROR
    if verdict.entailed is True:
        print("entailed")
        return OK
    if verdict.entailed is None:
        print("unknown")
        return UNKNOWN
    print("not entailed")
    if args.emit_certificate and verdict.summary is not None:
        Path(args.emit_certificate).write_text(summary_text(verdict.summary))
        print(f"countermodel clearing written to {args.emit_certificate}", file=sys.stderr)
    return NO


def cmd_eval(args) -> int:
    kb = _load_kb(args.kb, internal=args.internal)
    text = _read(args.model)
    try:
        if text.lstrip().startswith("{"):
            interp = interp_from_json(text)
        else:
            interp = interp_from_text(text)
    except ValueError as exc:
        print(f"{args.model}: {exc}", file=sys.stderr)
        return INPUT_ERROR
    report = is_quasi_forest(interp, kb.ind_a, kb.ind_t, branching=args.branching)
    satisfied = check_model(interp, kb)
    print(f"quasi-forest: {'yes' if report.ok else 'no'}")
    for clause, detail in report.violations:
        print(f"  violated {clause}: {detail}")
    print(f"model of the knowledge base: {'yes' if satisfied else 'no'}")
    return OK if report.ok and satisfied else NO


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zoiq",
        description="Quasi-forest satisfiability and rooted query entailment",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    norm = sub.add_parser("normalize", help="print the TBox in normal form")
    norm.add_argument("kb")
    norm.add_argument("--emit-dot", metavar="DIR")
    norm.set_defaults(func=cmd_normalize)

    def common(p):
        p.add_argument("--time-limit", type=float, metavar="SECONDS")
        p.add_argument("--subtree-nodes", type=int, metavar="N")
        p.add_argument("--segment-nodes", type=int, metavar="N")

    check = sub.add_parser("check-sat", help="decide satisfiability")
    check.add_argument("kb")
    check.add_argument("--emit-certificate", metavar="FILE")
    check.add_argument("--emit-dot", metavar="DIR")
    check.add_argument("--internal", action="store_true", help=argparse.SUPPRESS)
    common(check)
    check.set_defaults(func=cmd_check_sat)

    pre = sub.add_parser("precompile", help="prepare a TBox for repeated checks")
    pre.add_argument("tbox")
    pre.add_argument("-o", "--output", required=True)
    common(pre)
    pre.set_defaults(func=cmd_precompile)

    data = sub.add_parser("check-sat-data", help="decide with a precompiled TBox")
    data.add_argument("abox")
    data.add_argument("--tbox-handle", required=True)
    data.add_argument("--emit-certificate", metavar="FILE")
    data.set_defaults(func=cmd_check_sat_data)

    entail = sub.add_parser("entail", help="rooted union-of-queries entailment")
    entail.add_argument("kb")
    entail.add_argument("query")
    entail.add_argument("--emit-certificate", metavar="FILE")
    common(entail)
    entail.set_defaults(func=cmd_entail)

    ev = sub.add_parser("eval", help="validate a model file against a knowledge base")
    ev.add_argument("kb")
    ev.add_argument("model")
    ev.add_argument("--branching", type=int)
    ev.add_argument("--internal", action="store_true", help=argparse.SUPPRESS)
    ev.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
