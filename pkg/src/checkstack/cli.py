"""Command-line interface.

Every command prints one JSON object on stdout; human-oriented messages go to
stderr.  Exit codes: 0 success, 1 parse or validation failure, 2 a step or size
budget ran out, 3 the question is undecidable (or not supported) for the
machine's class.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .decide import (
    bounded_search,
    decide_membership_dcsacm,
    decide_membership_kstack,
    intersection_emptiness_reduction,
    noread_dcsacm1_to_2dcm1,
    normalize_dcsacm,
)
from .errors import ResourceError, SignatureError, UndecidableClass
from .machine import (
    ONEWAY,
    MachineError,
    MachineSpec,
    classify_restrictions,
    format_machine,
    parse_machine,
    split_word,
    validate_machine,
)
from .ncm import ncm_emptiness, ncm_membership, to_phase_automaton
from .simulator import accepts_bounded, enumerate_accepted, instruction_traces, run_deterministic
from .stores import CHECKING_STACK, RB_COUNTER
from .transforms import (
    erase_input,
    label_determinize,
    make_lambda_machine,
    restrict_to_lambda,
    twodcm2_to_lambda_ncsacm,
    twoway_counter_to_csacm,
)

EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_UNDECIDABLE = 0, 1, 2, 3

TRANSFORMS = (
    "lambda",
    "normalize",
    "phase",
    "label-determinize",
    "erase-input",
    "restrict-to-lambda",
    "twoway-to-csacm",
    "guess-word",
    "noread-to-2dcm1",
    "intersect",
)


class CommandFailed(Exception):
    def __init__(self, code: int, payload: dict):
        super().__init__(payload.get("reason", ""))
        self.code = code
        self.payload = payload


def budget(default: int) -> int:
    """Default step bound, capped by the CSA_BUDGET_STEPS environment variable."""
    raw = os.environ.get("CSA_BUDGET_STEPS")
    if not raw:
        return default
    try:
        cap = int(raw)
    except ValueError:
        print(f"ignoring non-integer CSA_BUDGET_STEPS={raw!r}", file=sys.stderr)
        return default
    return min(default, cap)


def load(path: str) -> MachineSpec:
    try:
        text = Path(path).read_bytes()
    except OSError as exc:
        raise CommandFailed(EXIT_INVALID, {"verdict": "error", "reason": "io", "diagnostics": [str(exc)]})
    try:
        m = parse_machine(text)
    except MachineError as exc:
        raise CommandFailed(EXIT_INVALID, {"verdict": "error", "reason": "parse", "diagnostics": [str(exc)]})
    diags = validate_machine(m)
    if diags:
        raise CommandFailed(EXIT_INVALID, {"verdict": "invalid", "reason": "validation", "diagnostics": diags})
    return m


def show_word(w: Sequence[str]) -> str:
    if all(len(s) == 1 for s in w):
        return "".join(w)
    return " ".join(w)


def witness(m: MachineSpec, word: Sequence[str], transitions) -> dict:
    traces = instruction_traces(m, transitions)
    return {
        "word": show_word(word),
        "traces": {sid: [str(i) for i in tr] for sid, tr in zip(m.store_ids, traces)},
    }


def is_ncm(m: MachineSpec) -> bool:
    return m.mode == ONEWAY and m.heads == 1 and all(s.kind == RB_COUNTER for s in m.stores)


def is_csacm(m: MachineSpec) -> bool:
    kinds = [s.kind for s in m.stores]
    return CHECKING_STACK in kinds and all(k in (CHECKING_STACK, RB_COUNTER) for k in kinds)


# -- commands ---------------------------------------------------------------------


def cmd_validate(args) -> tuple[int, dict]:
    try:
        m = parse_machine(Path(args.file).read_bytes())
    except OSError as exc:
        return EXIT_INVALID, {"verdict": "error", "reason": "io", "diagnostics": [str(exc)]}
    except MachineError as exc:
        return EXIT_INVALID, {"verdict": "invalid", "reason": "parse", "diagnostics": [str(exc)]}
    diags = validate_machine(m)
    if diags:
        return EXIT_INVALID, {"verdict": "invalid", "diagnostics": diags}
    return EXIT_OK, {"verdict": "valid", "diagnostics": []}


def cmd_run(args) -> tuple[int, dict]:
    m = load(args.file)
    w = split_word(m, args.input)
    steps = args.max_steps if args.max_steps is not None else budget(10_000)
    if m.deterministic:
        res = run_deterministic(m, w, steps, require_input_consumed=args.require_input_consumed)
    else:
        res = accepts_bounded(m, w, steps, require_input_consumed=args.require_input_consumed)
    out = {"verdict": res.verdict, "steps": res.steps_used, "trace": [t.format() for t in res.transitions()]}
    if res.accepted:
        out["witness"] = witness(m, w, res.transitions())
    code = EXIT_BUDGET if res.verdict in ("bound-exceeded", "unknown") else EXIT_OK
    return code, out


def cmd_member(args) -> tuple[int, dict]:
    m = load(args.file)
    w = split_word(m, args.input)
    if is_ncm(m):
        accepted = ncm_membership(m, w)
    elif is_csacm(m):
        if not m.deterministic:
            return EXIT_UNDECIDABLE, {
                "verdict": "error",
                "reason": "undecidable-class",
                "diagnostics": ["membership is undecidable for nondeterministic checking-stack automata"],
            }
        stacks = sum(s.kind == CHECKING_STACK for s in m.stores)
        decide = decide_membership_dcsacm if stacks == 1 else decide_membership_kstack
        accepted = decide(m, w, max_steps=budget(10**7))
    else:
        return EXIT_UNDECIDABLE, {
            "verdict": "error",
            "reason": "unsupported-class",
            "diagnostics": [f"no membership procedure for stores {', '.join(m.kinds())}"],
        }
    out: dict = {"verdict": "accept" if accepted else "reject"}
    if accepted:
        run = accepts_bounded(m, w, budget(10_000), max_configs=200_000)
        if run.accepted:
            out["witness"] = witness(m, w, run.transitions())
            out["trace"] = [t.format() for t in run.transitions()]
    return EXIT_OK, out


def cmd_empty(args) -> tuple[int, dict]:
    m = load(args.file)
    if is_ncm(m):
        v = ncm_emptiness(m)
        out = {"verdict": v.verdict}
        if not v.empty:
            out["witness"] = witness(m, v.word, v.transitions)
            out["trace"] = [t.format() for t in v.transitions]
        return EXIT_OK, out
    if "no-read" in classify_restrictions(m):
        try:
            inst = noread_dcsacm1_to_2dcm1(m)
        except SignatureError as exc:
            return EXIT_UNDECIDABLE, {"verdict": "error", "reason": "unsupported-class", "diagnostics": [str(exc)]}
        found = bounded_search(inst.machine, args.max_len, budget(5_000))
        artifact = {
            "machine": format_machine(inst.machine),
            "sidecar": inst.sidecar(),
            "searched_length": args.max_len,
        }
        if not found.found:
            return EXIT_OK, {"verdict": "unresolved", "reduction_artifact": artifact}
        artifact["instance_witness"] = list(found.witness)
        word = inst.source_word(found.witness)
        run = run_deterministic(m, word, budget(10_000))
        out = {"verdict": "nonempty", "reduction_artifact": artifact}
        if run.accepted:
            out["witness"] = witness(m, word, run.transitions())
        return EXIT_OK, out
    counters = sum(s.kind == RB_COUNTER for s in m.stores)
    reason = "undecidable-class" if is_csacm(m) and counters >= 2 else "unsupported-class"
    return EXIT_UNDECIDABLE, {
        "verdict": "error",
        "reason": reason,
        "diagnostics": [f"no emptiness procedure for {m.mode} machine with stores {', '.join(m.kinds()) or 'none'}"],
    }


def cmd_transform(args) -> tuple[int, dict]:
    m = load(args.input_file)
    artifact: dict = {}
    try:
        if args.kind == "lambda":
            out = make_lambda_machine(m, split_word(m, args.input or ""))
        elif args.kind == "normalize":
            out = normalize_dcsacm(m)
        elif args.kind == "phase":
            out = to_phase_automaton(m)
        elif args.kind == "label-determinize":
            out = label_determinize(m)
        elif args.kind == "erase-input":
            out = erase_input(m)
        elif args.kind == "restrict-to-lambda":
            out = restrict_to_lambda(m)
        elif args.kind == "twoway-to-csacm":
            out = twoway_counter_to_csacm(m, nondet_allowed=True)
        elif args.kind == "guess-word":
            out = twodcm2_to_lambda_ncsacm(m)
        elif args.kind in ("noread-to-2dcm1", "intersect"):
            if args.kind == "intersect":
                if not args.second:
                    return EXIT_INVALID, {"verdict": "error", "reason": "usage", "diagnostics": ["intersect needs two machines"]}
                inst = intersection_emptiness_reduction(m, load(args.second))
            else:
                inst = noread_dcsacm1_to_2dcm1(m)
            out = inst.machine
            side = Path(str(args.output) + ".labels")
            side.write_text(inst.sidecar(), encoding="utf-8")
            artifact = {"path": str(args.output), "sidecar_path": str(side)}
        else:  # argparse restricts the choices
            raise AssertionError(args.kind)
    except UndecidableClass as exc:
        return EXIT_UNDECIDABLE, {"verdict": "error", "reason": "undecidable-class", "diagnostics": [str(exc)]}
    except SignatureError as exc:
        return EXIT_INVALID, {"verdict": "error", "reason": "signature", "diagnostics": [str(exc)]}
    Path(args.output).write_text(format_machine(out), encoding="utf-8")
    result = {"verdict": "ok", "output": str(args.output)}
    if artifact:
        result["reduction_artifact"] = artifact
    return EXIT_OK, result


def cmd_classify(args) -> tuple[int, dict]:
    m = load(args.file)
    return EXIT_OK, {"verdict": "ok", "labels": sorted(classify_restrictions(m))}


def cmd_enumerate(args) -> tuple[int, dict]:
    m = load(args.file)
    steps = args.max_steps if args.max_steps is not None else budget(1_000)
    found = enumerate_accepted(m, args.max_len, steps)
    return EXIT_OK, {"verdict": "ok", "words": sorted(found, key=lambda s: (len(s), s))}


# -- wiring -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="checkstack", description="Checking-stack and counter automata toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="parse and check a machine file")
    s.add_argument("file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("run", help="simulate a machine on one input")
    s.add_argument("file")
    s.add_argument("--input", required=True, help='input word; "" is the empty word')
    s.add_argument("--max-steps", type=int, default=None)
    s.add_argument("--require-input-consumed", action="store_true")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("member", help="decide membership exactly")
    s.add_argument("file")
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_member)

    s = sub.add_parser("empty", help="decide or search emptiness")
    s.add_argument("file")
    s.add_argument("--max-len", type=int, default=8, help="label-word bound for reduction searches")
    s.set_defaults(func=cmd_empty)

    s = sub.add_parser("transform", help="apply a construction and write the result")
    s.add_argument("kind", choices=TRANSFORMS)
    s.add_argument("input_file")
    s.add_argument("second", nargs="?", help="second machine (intersect only)")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--input", default=None, help="word for the lambda transform")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("classify", help="report syntactic restriction labels")
    s.add_argument("file")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("enumerate", help="list accepted words up to a length")
    s.add_argument("file")
    s.add_argument("--max-len", type=int, required=True)
    s.add_argument("--max-steps", type=int, default=None)
    s.set_defaults(func=cmd_enumerate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, payload = args.func(args)
    except CommandFailed as exc:
        code, payload = exc.code, exc.payload
    except ResourceError as exc:
        code, payload = EXIT_BUDGET, {"verdict": "error", "reason": "budget", "diagnostics": [str(exc)]}
    except UndecidableClass as exc:
        code, payload = EXIT_UNDECIDABLE, {"verdict": "error", "reason": "undecidable-class", "diagnostics": [str(exc)]}
    except SignatureError as exc:
        code, payload = EXIT_INVALID, {"verdict": "error", "reason": "signature", "diagnostics": [str(exc)]}
    for line in payload.get("diagnostics", []):
        print(line, file=sys.stderr)
    print(json.dumps(payload, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
