"""Machines over a tuple of stores, their text format, and the step relation."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from .stores import (
    CHECKING_STACK,
    COUNTER_KINDS,
    KINDS,
    MOVE_OPS,
    RB_COUNTER,
    RESERVED,
    STACK_KINDS,
    ZB,
    ZT,
    Instruction,
    StoreConfig,
    StoreError,
    StoreTypeSpec,
    advance_phase,
    apply_instruction,
    initial_config,
    initial_phase,
    read_store,
)

LEFT = "<"
RIGHT = ">"
END_MARKERS = frozenset({LEFT, RIGHT})
ONEWAY = "oneway"
TWOWAY = "twoway"

NO_READ = "no-read"
NO_READ_NO_DECREASE = "no-read/no-decrease"
NO_READ_NO_COUNTER = "no-read/no-counter"
D_CROSSING_CANDIDATE = "d-crossing-candidate"

_TOKEN = re.compile(r"^(?!->$)[^\s|]+$")


class MachineError(ValueError):
    """Raised for syntax errors in machine files and for malformed machines."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Transition:
    src: str
    reads: tuple[str, ...]
    store_reads: tuple[str, ...]
    dst: str
    instructions: tuple[Instruction, ...]
    moves: tuple[int, ...]

    def format(self) -> str:
        return (
            f"trans {self.src} | {' '.join(self.reads)} | {' '.join(self.store_reads)}"
            f" -> {self.dst} | {' '.join(map(str, self.instructions))}"
            f" | {' '.join(_fmt_move(m) for m in self.moves)}"
        )


def _fmt_move(m: int) -> str:
    return "+1" if m == 1 else str(m)


@dataclass(frozen=True)
class MachineSpec:
    name: str
    mode: str
    heads: int
    deterministic: bool
    input_alphabet: tuple[str, ...]
    store_ids: tuple[str, ...]
    stores: tuple[StoreTypeSpec, ...]
    states: tuple[str, ...]
    initial: str
    finals: frozenset[str]
    transitions: tuple[Transition, ...]

    @cached_property
    def index(self) -> dict[tuple, list[Transition]]:
        """Transitions keyed by (state, input reads, store reads)."""
        out: dict[tuple, list[Transition]] = {}
        for t in self.transitions:
            out.setdefault((t.src, t.reads, t.store_reads), []).append(t)
        return out

    @cached_property
    def by_source(self) -> dict[str, list[Transition]]:
        out: dict[str, list[Transition]] = {s: [] for s in self.states}
        for t in self.transitions:
            out.setdefault(t.src, []).append(t)
        return out

    @cached_property
    def transition_number(self) -> dict[Transition, int]:
        return {t: i for i, t in enumerate(self.transitions)}

    def kinds(self) -> tuple[str, ...]:
        return tuple(s.kind for s in self.stores)

    def replace(self, **changes) -> "MachineSpec":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(changes)
        return MachineSpec(**data)


def make_machine(
    name: str,
    stores: Sequence[StoreTypeSpec],
    transitions: Iterable[Transition],
    initial: str,
    finals: Iterable[str],
    input_alphabet: Iterable[str],
    *,
    mode: str = ONEWAY,
    heads: int = 1,
    deterministic: bool | None = None,
    states: Iterable[str] | None = None,
    store_ids: Sequence[str] | None = None,
) -> MachineSpec:
    """Build a spec, collecting states from the transitions when not given.

    ``deterministic=None`` sets the flag from the transition table itself.
    """
    transitions = tuple(dict.fromkeys(transitions))
    finals = frozenset(finals)
    if states is None:
        seen = dict.fromkeys([initial])
        for t in transitions:
            seen.setdefault(t.src)
            seen.setdefault(t.dst)
        for f in sorted(finals):
            seen.setdefault(f)
        states = tuple(seen)
    if store_ids is None:
        store_ids = tuple(f"s{i}" for i in range(len(stores)))
    if deterministic is None:
        deterministic = not _clashes(transitions)
    return MachineSpec(
        name=name,
        mode=mode,
        heads=heads,
        deterministic=deterministic,
        input_alphabet=tuple(input_alphabet),
        store_ids=tuple(store_ids),
        stores=tuple(stores),
        states=tuple(states),
        initial=initial,
        finals=finals,
        transitions=transitions,
    )


def _clashes(transitions: Iterable[Transition]) -> list[tuple[Transition, Transition]]:
    first: dict[tuple, Transition] = {}
    out = []
    for t in transitions:
        key = (t.src, t.reads, t.store_reads)
        if key in first:
            out.append((first[key], t))
        else:
            first[key] = t
    return out


# -- text format ---------------------------------------------------------


def parse_machine(text: str | bytes) -> MachineSpec:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MachineError(f"not UTF-8: {exc}") from None
    header: dict[str, object] = {}
    stores: list[tuple[str, StoreTypeSpec]] = []
    raw_trans: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        args = rest.split()
        if key != "machine" and "machine" not in header:
            raise MachineError("missing machine header", lineno)
        if key == "machine":
            if len(args) != 1 or "machine" in header:
                raise MachineError("expected 'machine <name>' once", lineno)
            header["machine"] = args[0]
        elif key == "mode":
            if args not in ([ONEWAY], [TWOWAY]):
                raise MachineError("mode must be oneway or twoway", lineno)
            header["mode"] = args[0]
        elif key == "heads":
            if len(args) != 1 or not args[0].isdigit() or int(args[0]) < 1:
                raise MachineError("heads must be a positive integer", lineno)
            header["heads"] = int(args[0])
        elif key == "deterministic":
            if args not in (["true"], ["false"]):
                raise MachineError("deterministic must be true or false", lineno)
            header["deterministic"] = args[0] == "true"
        elif key == "input":
            for sym in args:
                if sym in END_MARKERS or sym in RESERVED or not _TOKEN.match(sym):
                    raise MachineError(f"reserved or invalid input symbol {sym!r}", lineno)
            header["input"] = tuple(args)
        elif key == "store":
            stores.append(_parse_store(args, lineno))
        elif key == "states":
            header["states"] = tuple(args)
        elif key == "initial":
            if len(args) != 1:
                raise MachineError("expected one initial state", lineno)
            header["initial"] = args[0]
        elif key == "final":
            header["final"] = frozenset(args)
        elif key == "trans":
            raw_trans.append((lineno, rest))
        else:
            raise MachineError(f"unknown directive {key!r}", lineno)
    if "machine" not in header:
        raise MachineError("missing machine header")
    for required in ("mode", "heads", "deterministic", "input", "states", "initial"):
        if required not in header:
            raise MachineError(f"missing '{required}' directive")
    ids = tuple(i for i, _ in stores)
    if len(set(ids)) != len(ids):
        raise MachineError("duplicate store id")
    specs = tuple(s for _, s in stores)
    states = header["states"]
    m = MachineSpec(
        name=header["machine"],
        mode=header["mode"],
        heads=header["heads"],
        deterministic=header["deterministic"],
        input_alphabet=header["input"],
        store_ids=ids,
        stores=specs,
        states=states,
        initial=header["initial"],
        finals=header.get("final", frozenset()),
        transitions=(),
    )
    trans = tuple(_parse_transition(m, rest, lineno) for lineno, rest in raw_trans)
    if m.initial not in states:
        raise MachineError(f"initial state {m.initial!r} not declared")
    for f in m.finals:
        if f not in states:
            raise MachineError(f"final state {f!r} not declared")
    return m.replace(transitions=trans)


def _parse_store(args: list[str], lineno: int) -> tuple[str, StoreTypeSpec]:
    if len(args) < 2:
        raise MachineError("expected 'store <id> <kind> [alphabet <sym>...]'", lineno)
    sid, kind_tok, rest = args[0], args[1], args[2:]
    bound = 0
    kind = kind_tok
    if kind_tok.startswith("rb_counter:"):
        kind, _, num = kind_tok.partition(":")
        if not num.isdigit():
            raise MachineError(f"bad reversal bound in {kind_tok!r}", lineno)
        bound = int(num)
    if kind not in KINDS:
        raise MachineError(f"unknown store kind {kind_tok!r}", lineno)
    if kind == RB_COUNTER and not kind_tok.startswith("rb_counter:"):
        raise MachineError("rb_counter needs a bound, e.g. rb_counter:1", lineno)
    alphabet: list[str] = []
    if rest:
        if rest[0] != "alphabet":
            raise MachineError(f"unexpected {rest[0]!r} in store line", lineno)
        alphabet = rest[1:]
    if kind in COUNTER_KINDS and alphabet and alphabet != ["c"]:
        raise MachineError("counter alphabet is fixed to {c}", lineno)
    try:
        return sid, StoreTypeSpec(kind, bound, frozenset(alphabet))
    except StoreError as exc:
        raise MachineError(str(exc), lineno) from None


def _parse_transition(m: MachineSpec, rest: str, lineno: int) -> Transition:
    left, arrow, right = rest.partition("->")
    if not arrow:
        raise MachineError("transition needs '->'", lineno)
    lparts = [p.strip() for p in left.split("|")]
    rparts = [p.strip() for p in right.split("|")]
    if len(lparts) != 3 or len(rparts) != 3:
        raise MachineError("transition must be 'src | reads | store reads -> dst | instructions | moves'", lineno)
    src = lparts[0]
    reads = tuple(lparts[1].split())
    sreads = tuple(lparts[2].split())
    dst = rparts[0]
    ins_toks = rparts[1].split()
    move_toks = rparts[2].split()
    for st in (src, dst):
        if st not in m.states:
            raise MachineError(f"state {st!r} not declared", lineno)
    if len(reads) != m.heads or len(move_toks) != m.heads:
        raise MachineError(f"expected {m.heads} head read(s) and move(s)", lineno)
    if len(sreads) != len(m.stores) or len(ins_toks) != len(m.stores):
        raise MachineError(f"expected {len(m.stores)} store read(s) and instruction(s)", lineno)
    for r in reads:
        if r not in END_MARKERS and r not in m.input_alphabet:
            raise MachineError(f"symbol {r!r} not declared", lineno)
    for spec, r in zip(m.stores, sreads):
        if r not in spec.read_symbols:
            raise MachineError(f"store symbol {r!r} not declared for {spec.kind}", lineno)
    instructions = []
    for spec, tok in zip(m.stores, ins_toks):
        try:
            ins = Instruction.parse(tok)
        except StoreError as exc:
            raise MachineError(str(exc), lineno) from None
        if not spec.allows(ins):
            raise MachineError(f"instruction {tok} is illegal for {spec.kind}", lineno)
        instructions.append(ins)
    moves = []
    for tok in move_toks:
        if tok not in ("-1", "0", "+1", "1"):
            raise MachineError(f"bad move {tok!r}", lineno)
        moves.append(int(tok))
    return Transition(src, reads, sreads, dst, tuple(instructions), tuple(moves))


def format_machine(m: MachineSpec) -> str:
    lines = [
        f"machine {m.name}",
        f"mode {m.mode}",
        f"heads {m.heads}",
        f"deterministic {'true' if m.deterministic else 'false'}",
        "input " + " ".join(m.input_alphabet) if m.input_alphabet else "input",
    ]
    for sid, spec in zip(m.store_ids, m.stores):
        line = f"store {sid} {spec.token()}"
        if spec.kind not in COUNTER_KINDS:
            line += " alphabet " + " ".join(sorted(spec.alphabet))
        lines.append(line.rstrip())
    lines.append("states " + " ".join(m.states))
    lines.append(f"initial {m.initial}")
    lines.append("final " + " ".join(sorted(m.finals)) if m.finals else "final")
    lines.extend(t.format() for t in m.transitions)
    return "\n".join(lines) + "\n"


# -- static checks -------------------------------------------------------


def validate_machine(m: MachineSpec) -> list[str]:
    diags: list[str] = []
    if m.mode not in (ONEWAY, TWOWAY):
        diags.append(f"mode: unknown mode {m.mode!r}")
    if m.heads < 1:
        diags.append("heads: need at least one head")
    if len(m.store_ids) != len(m.stores):
        diags.append("stores: id/spec count mismatch")
    states = set(m.states)
    if m.initial not in states:
        diags.append(f"states: initial {m.initial!r} undeclared")
    for f in sorted(m.finals - states):
        diags.append(f"states: final {f!r} undeclared")
    for sym in m.input_alphabet:
        if sym in END_MARKERS or sym in RESERVED or not _TOKEN.match(sym):
            diags.append(f"input: invalid symbol {sym!r}")
    alphabet = set(m.input_alphabet) | END_MARKERS
    for i, t in enumerate(m.transitions):
        where = f"transition {i} ({t.format()})"
        if t.src not in states or t.dst not in states:
            diags.append(f"states: {where} uses an undeclared state")
        if len(t.reads) != m.heads or len(t.moves) != m.heads:
            diags.append(f"arity: {where} head count mismatch")
        if len(t.store_reads) != len(m.stores) or len(t.instructions) != len(m.stores):
            diags.append(f"arity: {where} store count mismatch")
            continue
        for r in t.reads:
            if r not in alphabet:
                diags.append(f"alphabet: {where} reads undeclared {r!r}")
        for spec, r, ins in zip(m.stores, t.store_reads, t.instructions):
            if r not in spec.read_symbols:
                diags.append(f"alphabet: {where} store read {r!r} impossible for {spec.kind}")
            if not spec.allows(ins):
                diags.append(f"instruction: {where} {ins} illegal for {spec.kind}")
        for mv in t.moves:
            if mv not in (-1, 0, 1):
                diags.append(f"mode: {where} bad move {mv}")
            elif m.mode == ONEWAY and mv == -1:
                diags.append(f"mode: {where} moves left in a one-way machine")
    if m.deterministic:
        for a, b in _clashes(m.transitions):
            diags.append(f"determinism: clash between ({a.format()}) and ({b.format()})")
    return diags


def classify_restrictions(m: MachineSpec) -> set[str]:
    """Syntactic no-read labels, exact because each transition names its read symbol."""
    stack_idx = [i for i, s in enumerate(m.stores) if s.kind == CHECKING_STACK]
    counter_idx = [i for i, s in enumerate(m.stores) if s.kind in COUNTER_KINDS]
    early = [t for t in m.transitions if any(r != RIGHT for r in t.reads)]
    no_read = all(t.instructions[i].op not in MOVE_OPS for t in early for i in stack_idx)
    no_dec = no_read and all(t.instructions[i].op != "pop" for t in early for i in counter_idx)
    no_ctr = no_dec and all(t.instructions[i].op == "stay" for t in early for i in counter_idx)
    labels = set()
    if stack_idx and no_read:
        labels.add(NO_READ)
        if no_dec:
            labels.add(NO_READ_NO_DECREASE)
        if no_ctr:
            labels.add(NO_READ_NO_COUNTER)
    if len(stack_idx) == 1 and not m.deterministic:
        labels.add(D_CROSSING_CANDIDATE)
    return labels


# -- dynamics ------------------------------------------------------------


@dataclass(frozen=True)
class Configuration:
    state: str
    heads: tuple[int, ...]
    stores: tuple[StoreConfig, ...]
    phases: tuple = field(default=())


def tape(word: Sequence[str]) -> tuple[str, ...]:
    return (LEFT, *word, RIGHT)


def initial_configuration(m: MachineSpec) -> Configuration:
    return Configuration(
        m.initial,
        (1,) * m.heads,
        tuple(initial_config(s) for s in m.stores),
        tuple(initial_phase(s) for s in m.stores),
    )


def store_reads(c: Configuration) -> tuple[str, ...]:
    return tuple(read_store(s) for s in c.stores)


def step(m: MachineSpec, tp: Sequence[str], c: Configuration) -> list[tuple[Configuration, Transition]]:
    """All successors of ``c`` on the end-marked input ``tp``."""
    reads = tuple(tp[p] for p in c.heads)
    sreads = store_reads(c)
    out = []
    last = len(tp) - 1
    for t in m.index.get((c.state, reads, sreads), ()):
        nc = apply_transition(m, c, t, last)
        if nc is not None:
            out.append((nc, t))
    return out


def apply_transition(m: MachineSpec, c: Configuration, t: Transition, last: int) -> Configuration | None:
    heads = tuple(p + mv for p, mv in zip(c.heads, t.moves))
    if any(p < 0 or p > last for p in heads):
        return None
    try:
        stores = tuple(apply_instruction(s, x, i) for s, x, i in zip(m.stores, c.stores, t.instructions))
        phases = tuple(advance_phase(s, ph, i) for s, ph, i in zip(m.stores, c.phases, t.instructions))
    except StoreError:
        return None
    return Configuration(t.dst, heads, stores, phases)


def is_accepting(m: MachineSpec, c: Configuration, tp: Sequence[str], require_input_consumed: bool = False) -> bool:
    if c.state not in m.finals:
        return False
    return not require_input_consumed or all(p == len(tp) - 1 for p in c.heads)


def split_word(m: MachineSpec, text: str) -> tuple[str, ...]:
    """Turn a CLI word into symbols: characters, or whitespace tokens for multi-character alphabets."""
    if any(len(s) != 1 for s in m.input_alphabet) or any(ch.isspace() for ch in text.strip()):
        return tuple(text.split())
    return tuple(text)


def iter_store_reads(m: MachineSpec, idx: Sequence[int] | None = None) -> Iterator[tuple[str, ...]]:
    """All store-read tuples of the machine, in a fixed order."""
    import itertools

    idx = range(len(m.stores)) if idx is None else idx
    pools = [sorted(m.stores[i].read_symbols) for i in idx]
    return itertools.product(*pools)


def counter_indices(m: MachineSpec) -> list[int]:
    return [i for i, s in enumerate(m.stores) if s.kind in COUNTER_KINDS]


def stack_indices(m: MachineSpec) -> list[int]:
    return [i for i, s in enumerate(m.stores) if s.kind in STACK_KINDS]


__all__ = [
    "LEFT", "RIGHT", "ZB", "ZT", "ONEWAY", "TWOWAY", "MachineError", "MachineSpec",
    "Transition", "Configuration", "make_machine", "parse_machine", "format_machine",
    "validate_machine", "classify_restrictions", "step", "initial_configuration",
    "is_accepting", "tape", "split_word",
]
