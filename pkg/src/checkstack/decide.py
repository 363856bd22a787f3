"""Decision procedures for deterministic checking-stack automata with counters.

The pipeline for membership is: internalise the input into the states
(:func:`make_lambda_machine`), bring the machine into normal form
(:func:`normalize_dcsacm`), decide whether the writing phase runs forever
(:func:`detect_infinite_writing`), and otherwise finish the run with loop
detection over quiet stretches (:func:`decide_lambda_dcsacm`).

A step is *quiet* when it neither decrements a counter nor increments a counter
that is zero.  During a quiet stretch every counter reads the same value, so
the next move is fixed by the state, the tops of stacks still being written,
and the head positions of stacks already being read.  A repeated combination
inside one quiet stretch therefore means the run cycles forever.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import Namer, ResourceError, SignatureError, UndecidableClass
from .machine import (
    LEFT,
    ONEWAY,
    RIGHT,
    TWOWAY,
    Configuration,
    MachineSpec,
    Transition,
    classify_restrictions,
    initial_configuration,
    make_machine,
    step,
    tape,
    validate_machine,
)
from .ncm import DEFAULT_BUDGET, ncm_emptiness, to_phase_automaton
from .stores import (
    CHECKING_STACK,
    COUNTER_KINDS,
    MOVE_OPS,
    POP,
    RB_COUNTER,
    STAY,
    ZB,
    ZT,
    D,
    Instruction,
    S,
    U,
    StoreTypeSpec,
    checking_stack,
    push,
    read_store,
)
from .transforms import label, label_index, labels_to_word, make_lambda_machine

INFINITE = "infinite"
FINITE = "finite"

# -- signatures ----------------------------------------------------------------


def _stack_idx(m: MachineSpec) -> list[int]:
    return [i for i, s in enumerate(m.stores) if s.kind == CHECKING_STACK]


def _counter_idx(m: MachineSpec) -> list[int]:
    return [i for i, s in enumerate(m.stores) if s.kind in COUNTER_KINDS]


def check_csacm(m: MachineSpec, stacks: int | None = 1) -> None:
    """Checking stacks plus reversal-bounded counters; deterministic."""
    diags = validate_machine(m)
    if diags:
        raise SignatureError("; ".join(diags))
    if any(s.kind not in (CHECKING_STACK, RB_COUNTER) for s in m.stores):
        raise SignatureError("stores must be checking stacks and reversal-bounded counters")
    k = len(_stack_idx(m))
    if stacks is not None and k != stacks:
        raise SignatureError(f"expected {stacks} checking stack(s), found {k}")
    if k == 0:
        raise SignatureError("no checking stack")
    if not m.deterministic:
        raise UndecidableClass(
            "membership for nondeterministic checking-stack automata is undecidable; "
            "only deterministic machines are supported"
        )


def is_lambda_form(m: MachineSpec) -> bool:
    return (
        m.mode == ONEWAY
        and m.heads == 1
        and not m.input_alphabet
        and all(t.reads == (RIGHT,) and t.moves == (0,) for t in m.transitions)
    )


def is_normalized(m: MachineSpec) -> bool:
    """Empty-input form, 1-reversal counters, and no stack instruction is a bare stay."""
    if not is_lambda_form(m):
        return False
    if any(s.kind == RB_COUNTER and s.reversal_bound != 1 for s in m.stores):
        return False
    st = _stack_idx(m)
    return all(t.instructions[i].op != "stay" for t in m.transitions for i in st)


def _fresh(symbol: str, taken: Iterable[str]) -> str:
    taken = set(taken)
    cand, n = symbol, 0
    while cand in taken:
        n += 1
        cand = f"{symbol}{n}"
    return cand


# -- normal form -----------------------------------------------------------------

# per-stack annotation modes
W, R, SKIP_D, SKIP_U, SKIP_D2 = "W", "R", "sD", "sU", "sD2"


def normalize_dcsacm(m: MachineSpec) -> MachineSpec:
    """Normal form for deterministic machines with checking stacks and counters.

    The output reads no input, has only 1-reversal counters, pushes on every
    stack at every step while that stack is being written (a filler symbol
    ``$`` stands in for the source's stay steps, and reading skips over it),
    and before accepting it returns every stack head to the bottom and every
    counter to zero.  It accepts the empty word iff ``m`` does.
    """
    check_csacm(m, stacks=None)
    if not is_lambda_form(m):
        m = make_lambda_machine(m, ())
    p = to_phase_automaton(m)
    st = _stack_idx(p)
    ct = _counter_idx(p)
    fillers = {i: _fresh("$", p.stores[i].alphabet) for i in st}
    stores = list(p.stores)
    for i in st:
        stores[i] = checking_stack(p.stores[i].alphabet | {fillers[i]})

    namer = Namer()
    for q in p.states:
        namer(("src", q), q)
    clean = namer("clean", "clean")
    accept = namer("accept", "accept")

    def mode_hint(md) -> str:
        if md[0] == W:
            return f"W{md[1]}{'$' if md[2] else ''}"
        return md[0]

    def name(key) -> str:
        q, modes = key
        return namer(key, f"{q}<{','.join(mode_hint(md) for md in modes)}>")

    def phys_reads(i: int, md) -> list[str]:
        gam = sorted(p.stores[i].alphabet)
        if md[0] == W:
            return [fillers[i] if md[2] else md[1]]
        if md[0] == R:
            return [ZB, *gam, ZT]
        if md[0] == SKIP_D:
            return [ZB, *gam, fillers[i]]
        if md[0] == SKIP_U:
            return [*gam, ZT, fillers[i]]
        return [*gam, fillers[i]]

    start = (p.initial, tuple((W, ZB, False) for _ in st))
    trans: list[Transition] = []
    seen = {start}
    queue = deque([start])
    while queue:
        key = queue.popleft()
        q, modes = key
        src = name(key)
        pools = []
        for j, i in enumerate(st):
            pools.append(phys_reads(i, modes[j]))
        for sreads in itertools.product(*pools):
            for creads in itertools.product((ZB, "c"), repeat=len(ct)):
                reads = [None] * len(p.stores)
                for j, i in enumerate(st):
                    reads[i] = sreads[j]
                for j, i in enumerate(ct):
                    reads[i] = creads[j]
                made = _normal_step(p, q, modes, st, ct, fillers, tuple(reads))
                if made is None:
                    continue
                ins, nxt, src_t = made
                if nxt == "clean":
                    dst = clean
                else:
                    dst = name(nxt)
                    if nxt not in seen:
                        seen.add(nxt)
                        queue.append(nxt)
                trans.append(Transition(src, (RIGHT,), tuple(reads), dst, ins, (0,)))
    trans.extend(_cleanup(stores, st, ct, clean, accept))
    init = clean if p.initial in p.finals else name(start)
    if p.initial in p.finals:
        trans = [t for t in trans if t.src in (clean, accept)]
    return make_machine(
        f"{m.name}_normal",
        stores,
        trans,
        init,
        [accept],
        (),
        deterministic=True,
        store_ids=p.store_ids,
    )


def _normal_step(p, q, modes, st, ct, fillers, reads):
    """One normal-form move from (q, modes) on physical store reads, or None."""
    skip = any(
        (md[0] in (SKIP_D, SKIP_U) and reads[i] == fillers[i]) or md[0] == SKIP_D2 for md, i in zip(modes, st)
    )
    ins: list[Instruction] = [STAY] * len(p.stores)
    new_modes = list(modes)
    if skip:
        for j, i in enumerate(st):
            md, r = modes[j], reads[i]
            filler = r == fillers[i]
            if md[0] == W:
                ins[i] = push(fillers[i])
                new_modes[j] = (W, md[1], True)
            elif md[0] == R:
                ins[i] = S
            elif md[0] == SKIP_D2:
                ins[i] = D
                new_modes[j] = md if filler else (SKIP_D,)
            elif filler:
                ins[i] = D if md[0] == SKIP_D else U
            else:
                ins[i] = S
                new_modes[j] = (R,)
        return tuple(ins), (q, tuple(new_modes)), None
    src_reads = list(reads)
    for j, i in enumerate(st):
        if modes[j][0] == W:
            src_reads[i] = modes[j][1]
    cands = p.index.get((q, (RIGHT,), tuple(src_reads)), ())
    if not cands:
        return None
    t = cands[0]
    for i in ct:
        ins[i] = t.instructions[i]
    for j, i in enumerate(st):
        md, op = modes[j], t.instructions[i]
        if md[0] == W:
            if op.op == "push":
                ins[i], new_modes[j] = op, (W, op.symbol, False)
            elif op.op == "stay":
                ins[i], new_modes[j] = push(fillers[i]), (W, md[1], True)
            elif not md[2]:
                ins[i] = op
                new_modes[j] = (SKIP_D,) if op.op == "D" else (R,)
            elif op.op == "U":
                ins[i], new_modes[j] = U, (R,)
            elif op.op == "S":
                ins[i], new_modes[j] = D, (SKIP_D,)
            else:
                ins[i], new_modes[j] = D, (SKIP_D2,)
        else:
            if op.op not in MOVE_OPS:
                return None
            ins[i] = op
            new_modes[j] = {"D": (SKIP_D,), "U": (SKIP_U,), "S": (R,)}[op.op]
    nxt = "clean" if t.dst in p.finals else (t.dst, tuple(new_modes))
    return tuple(ins), nxt, t


def _cleanup(stores, st, ct, clean, accept) -> list[Transition]:
    """Walk every stack head to the bottom and drain every counter, then accept."""
    out = []
    pools = []
    for i, s in enumerate(stores):
        pools.append(sorted(s.read_symbols))
    for reads in itertools.product(*pools):
        done = all(r == ZB for r in reads)
        ins = []
        for i, r in enumerate(reads):
            if i in st:
                ins.append(S if r == ZB else D)
            else:
                ins.append(STAY if r == ZB else POP)
        out.append(Transition(clean, (RIGHT,), reads, accept if done else clean, tuple(ins), (0,)))
    return out


# -- writing phase -------------------------------------------------------------


@dataclass
class WritingPhaseOutcome:
    verdict: str
    stack_words: tuple[tuple[str, ...], ...] | None = None
    d: int | None = None
    state: str | None = None
    counters: tuple[int, ...] | None = None
    config: Configuration | None = None
    halted: bool = False
    accepted: bool = False
    steps: int = 0

    @property
    def infinite(self) -> bool:
        return self.verdict == INFINITE


def _quiet(m: MachineSpec, t: Transition, ct: Sequence[int]) -> bool:
    for i in ct:
        op = t.instructions[i].op
        if op == "pop" or (op == "push" and t.store_reads[i] == ZB):
            return False
    return True


def _fingerprint(c: Configuration, st: Sequence[int], ct: Sequence[int]) -> tuple:
    parts = []
    for i in st:
        s = c.stores[i]
        parts.append(("W", read_store(s)) if c.phases[i] == "W" else ("R", s.pos))
    return (c.state, tuple(parts), tuple(c.stores[i].count > 0 for i in ct))


def writing_window(m: MachineSpec) -> int:
    """Quiet steps after which a writing phase must have repeated (state, stack tops)."""
    return len(m.states) * math.prod(len(m.stores[i].alphabet) + 1 for i in _stack_idx(m)) + 1


def reading_window(m: MachineSpec, d: int) -> int:
    """Quiet steps after which a reading phase over stacks of height d must repeat."""
    return len(m.states) * math.prod(d + 2 for _ in _stack_idx(m)) + 1


def _outcome_at(m: MachineSpec, c: Configuration, steps: int, **kw) -> WritingPhaseOutcome:
    st, ct = _stack_idx(m), _counter_idx(m)
    words = tuple(c.stores[i].content for i in st)
    return WritingPhaseOutcome(
        FINITE,
        stack_words=words,
        d=len(words[0]) if words else 0,
        state=c.state,
        counters=tuple(c.stores[i].count for i in ct),
        config=c,
        steps=steps,
        **kw,
    )


def _writing_direct(m: MachineSpec, max_steps: int | None) -> WritingPhaseOutcome:
    st, ct = _stack_idx(m), _counter_idx(m)
    tp = tape(())
    c = initial_configuration(m)
    seen: set = set()
    window = writing_window(m)
    n = 0
    while True:
        if c.state in m.finals:
            return _outcome_at(m, c, n, accepted=True)
        succ = step(m, tp, c)
        if not succ:
            return _outcome_at(m, c, n, halted=True)
        nc, t = succ[0]
        if any(t.instructions[i].op in MOVE_OPS for i in st):
            return _outcome_at(m, c, n)
        if _quiet(m, t, ct):
            fp = _fingerprint(c, st, ct)
            if fp in seen:
                return WritingPhaseOutcome(INFINITE, steps=n)
            seen.add(fp)
            assert len(seen) <= window, "quiet window bound violated"
        else:
            seen.clear()
        c = nc
        n += 1
        if max_steps is not None and n > max_steps:
            raise ResourceError(f"writing phase exceeded {max_steps} steps")


def writing_phase_ncm(m: MachineSpec) -> MachineSpec:
    """One-way counter machine over pushed-symbol tuples that accepts iff the writing phase is infinite.

    It follows the writing phase of ``m`` letter by letter (each letter is the
    tuple of symbols pushed in one step), guesses the start of a quiet stretch,
    remembers the (state, stack tops, counter signs) there, and accepts when the
    state and tops recur with only quiet steps in between.
    """
    st, ct = _stack_idx(m), _counter_idx(m)
    tokens = Namer()
    namer = Namer()
    counters = [m.stores[i] for i in ct]

    def name(key) -> str:
        if key == "acc":
            return namer(key, "acc")
        if key[0] == "pre":
            return namer(key, f"{key[1]}/{'.'.join(key[2])}")
        _tag, q, tops, saved = key
        return namer(key, f"{q}/{'.'.join(tops)}/w")

    writing = [t for t in m.transitions if all(t.instructions[i].op not in MOVE_OPS for i in st)]
    by_src: dict[str, list[Transition]] = {}
    for t in writing:
        by_src.setdefault(t.src, []).append(t)

    start = ("pre", m.initial, tuple(ZB for _ in st))
    seen = {start}
    queue = deque([start])
    trans: list[Transition] = []
    while queue:
        key = queue.popleft()
        if key == "acc":
            continue
        _tag, q, tops = key[0], key[1], key[2]
        for t in by_src.get(q, ()):
            if tuple(t.store_reads[i] for i in st) != tops:
                continue
            pushed = tuple(t.instructions[i].symbol if t.instructions[i].op == "push" else "-" for i in st)
            new_tops = tuple(s if s != "-" else old for s, old in zip(pushed, tops))
            tok = tokens(pushed, "x" + "_".join(pushed))
            creads = tuple(t.store_reads[i] for i in ct)
            cins = tuple(t.instructions[i] for i in ct)
            targets = []
            if key[0] == "pre":
                targets.append(("pre", t.dst, new_tops))
                if _quiet(m, t, ct):
                    saved = (q, tops, creads)
                    targets.append("acc" if (t.dst, new_tops) == (q, tops) else ("win", t.dst, new_tops, saved))
            else:
                saved = key[3]
                if creads == saved[2] and _quiet(m, t, ct):
                    targets.append("acc" if (t.dst, new_tops) == saved[:2] else ("win", t.dst, new_tops, saved))
            for nxt in targets:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
                trans.append(Transition(name(key), (tok,), creads, name(nxt), cins, (1,)))
    alphabet = sorted(set(t.reads[0] for t in trans))
    return make_machine(
        f"{m.name}_writing",
        counters,
        trans,
        name(start),
        [name("acc")],
        alphabet,
        deterministic=False,
        states=[name(start)] + sorted({name(k) for k in seen | {"acc"}} - {name(start)}),
        store_ids=[m.store_ids[i] for i in ct],
    )


def detect_infinite_writing(
    m: MachineSpec,
    engine: str = "direct",
    *,
    budget: int = DEFAULT_BUDGET,
    max_steps: int | None = None,
) -> WritingPhaseOutcome:
    """Does the writing phase of the normalized machine ``m`` run forever?

    ``engine="direct"`` simulates with quiet-window loop detection;
    ``engine="ncm"`` builds :func:`writing_phase_ncm` and decides its emptiness.
    A finite outcome carries the stack words and configuration at the moment
    the first stack starts reading (or the machine halts or accepts).
    """
    if not is_normalized(m):
        raise SignatureError("detect_infinite_writing needs a normalized machine")
    if engine == "direct":
        return _writing_direct(m, max_steps)
    if engine != "ncm":
        raise ValueError(f"unknown engine {engine!r}")
    verdict = ncm_emptiness(writing_phase_ncm(m), budget=budget)
    if not verdict.empty:
        return WritingPhaseOutcome(INFINITE)
    out = _writing_direct(m, max_steps)
    if out.infinite:
        raise AssertionError("engines disagree: direct simulation found an infinite writing phase")
    return out


# -- lambda acceptance and membership ---------------------------------------------


def _finish_run(m: MachineSpec, c: Configuration, steps: int, max_steps: int | None) -> bool:
    st, ct = _stack_idx(m), _counter_idx(m)
    tp = tape(())
    seen: set = set()
    d = max((len(c.stores[i].content) for i in st), default=0)
    bound = len(m.states) * math.prod(max(d + 2, len(m.stores[i].alphabet) + 1) for i in st) + 1
    while True:
        if c.state in m.finals:
            return True
        succ = step(m, tp, c)
        if not succ:
            return False
        nc, t = succ[0]
        if _quiet(m, t, ct):
            fp = _fingerprint(c, st, ct)
            if fp in seen:
                return False
            seen.add(fp)
            assert len(seen) <= bound, "quiet window bound violated"
        else:
            seen.clear()
        # stacks still being written keep growing; the bound follows them
        d = max(d, max((len(nc.stores[i].content) for i in st), default=0))
        bound = len(m.states) * math.prod(max(d + 2, len(m.stores[i].alphabet) + 1) for i in st) + 1
        c = nc
        steps += 1
        if max_steps is not None and steps > max_steps:
            raise ResourceError(f"run exceeded {max_steps} steps")


def decide_lambda_dcsacm(m: MachineSpec, *, engine: str = "direct", max_steps: int | None = None) -> bool:
    """Exact test of whether the deterministic machine ``m`` accepts the empty word."""
    check_csacm(m, stacks=None)
    n = normalize_dcsacm(m)
    out = detect_infinite_writing(n, engine, max_steps=max_steps)
    if out.infinite:
        return False
    if out.accepted:
        return True
    if out.halted:
        return False
    return _finish_run(n, out.config, out.steps, max_steps)


def decide_membership_dcsacm(m: MachineSpec, w: Sequence[str], **kw) -> bool:
    """Membership for deterministic (one- or two-way, multi-head) machines with one checking stack."""
    check_csacm(m, stacks=1)
    return decide_lambda_dcsacm(make_lambda_machine(m, tuple(w)), **kw)


def decide_membership_kstack(m: MachineSpec, w: Sequence[str], **kw) -> bool:
    """Membership for deterministic machines with any number of checking stacks."""
    check_csacm(m, stacks=None)
    return decide_lambda_dcsacm(make_lambda_machine(m, tuple(w)), **kw)


# -- no-read reductions to two-way one-counter machines --------------------------


@dataclass
class TwoDcm1Instance:
    """A two-way deterministic one-counter machine plus the meaning of its input symbols."""

    machine: MachineSpec
    mapping: dict[str, object]
    sources: tuple[MachineSpec, ...]

    def sidecar(self) -> str:
        lines = []
        for sym, tr in self.mapping.items():
            if isinstance(tr, tuple):
                parts = ["$" if t is None else t.format() for t in tr]
                lines.append(f"{sym}\t" + "\t".join(parts))
            else:
                lines.append(f"{sym}\t{tr.format()}")
        return "\n".join(lines) + "\n"

    def source_word(self, labels: Sequence[str]) -> tuple[str, ...]:
        """Input word for the (first) source machine spelled by a label word."""
        src = self.sources[0]
        trs = []
        for sym in labels:
            tr = self.mapping[sym]
            if isinstance(tr, tuple):
                tr = tr[0]
                if tr is None:
                    continue
            trs.append(tr)
        return _word_of(trs)

    def component_word(self, labels: Sequence[str], k: int) -> tuple[str, ...]:
        trs = []
        for sym in labels:
            tr = self.mapping[sym]
            tr = tr[k] if isinstance(tr, tuple) else tr
            if tr is not None:
                trs.append(tr)
        return _word_of(trs)


def _word_of(transitions: Sequence[Transition]) -> tuple[str, ...]:
    word: list[str] = []
    parked = None
    for t in transitions:
        if t.moves[0] == 1:
            word.append(t.reads[0])
            parked = None
        else:
            parked = t.reads[0]
    if parked is not None and parked != RIGHT:
        word.append(parked)
    return tuple(word)


def check_noread_dcsacm1(m: MachineSpec) -> tuple[int, int]:
    diags = validate_machine(m)
    if diags:
        raise SignatureError("; ".join(diags))
    kinds = sorted(s.kind for s in m.stores)
    if kinds != [CHECKING_STACK, RB_COUNTER]:
        raise SignatureError("need exactly one checking stack and one reversal-bounded counter")
    if m.mode != ONEWAY or m.heads != 1 or not m.deterministic:
        raise SignatureError("need a deterministic one-way one-head machine")
    if "no-read" not in classify_restrictions(m):
        raise SignatureError("the checking stack is read before the end of the input")
    return _stack_idx(m)[0], _counter_idx(m)[0]


class _Builder:
    """Accumulates transitions of a two-way one-counter machine with named states."""

    def __init__(self) -> None:
        self.namer = Namer()
        self.trans: list[Transition] = []

    def name(self, key) -> str:
        return self.namer(key, "_".join(str(x) for x in _flatten(key) if x is not None) or "s")

    def add(self, src, sym, cread, dst, cins, move) -> None:
        self.trans.append(Transition(self.name(src), (sym,), (cread,), self.name(dst), (cins,), (move,)))


def _flatten(key):
    if isinstance(key, tuple):
        for x in key:
            yield from _flatten(x)
    else:
        yield key


def _replay_phase(b: _Builder, m, si, ci, tag, symbols, after_end, finals_to=None):
    """Left-to-right replay of the writing phase of ``m`` over ``symbols``.

    ``symbols`` maps each input symbol to the transition of ``m`` it stands for
    (or None for symbols this pass skips).  State keys are (tag, q, top,
    parked).  With ``finals_to`` set, reaching a final state of ``m`` jumps to
    ``finals_to(key)``; otherwise the replay carries on through final states.
    ``after_end(q)`` is the key to continue with on the right end-marker, which
    is only allowed once every letter read has also been moved past.
    """
    start = (tag, m.initial, ZB, None)
    seen = {start}
    queue = deque([start])
    while queue:
        key = queue.popleft()
        _tag, q, top, parked = key
        if finals_to is not None and q in m.finals:
            continue
        for sym, t in symbols.items():
            for cread in (ZB, "c"):
                if t is None:
                    b.add(key, sym, cread, key, STAY, 1)
                    continue
                if t.src != q or t.store_reads[si] != top or t.store_reads[ci] != cread:
                    continue
                a, mv = t.reads[0], t.moves[0]
                if parked is not None and parked != a:
                    continue
                if mv == 1 and a == RIGHT:
                    continue
                op = t.instructions[si]
                new_top = op.symbol if op.op == "push" else top
                nxt = (tag, t.dst, new_top, None if mv == 1 else a)
                stop = finals_to is not None and t.dst in m.finals
                b.add(key, sym, cread, finals_to(nxt) if stop else nxt, t.instructions[ci], 1)
                if not stop and nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        if parked in (None, RIGHT):
            for cread in (ZB, "c"):
                b.add(key, RIGHT, cread, after_end(q), STAY, -1)
    return start


def _reading_phase(b: _Builder, m, si, ci, tag, pushed_of, alphabet, on_accept):
    """Two-way simulation of the reading phase of ``m`` over the label tape.

    ``pushed_of(sym)`` is the stack symbol written by the transition a label
    stands for, or None when that transition did not push.  Modes: "L" and "R"
    skip non-pushing labels leftwards/rightwards, "N" sits on a cell.
    """
    keys = [(tag, q, md) for q in m.states if q not in m.finals for md in ("L", "R", "N")]
    for key in keys:
        _tag, q, md = key
        for sym in [LEFT, RIGHT, *alphabet]:
            if sym == LEFT:
                x = ZB
            elif sym == RIGHT:
                x = ZT
            else:
                x = pushed_of(sym)
            if x is None:
                if md in ("L", "R"):
                    for cread in (ZB, "c"):
                        b.add(key, sym, cread, key, STAY, -1 if md == "L" else 1)
                continue
            if (md == "L" and sym == RIGHT) or (md == "R" and sym == LEFT):
                continue
            for cread in (ZB, "c"):
                cands = m.index.get((q, (RIGHT,), _reads(si, ci, x, cread)), ())
                if not cands:
                    continue
                t = cands[0]
                op = t.instructions[si].op
                if op not in MOVE_OPS:
                    continue
                nmd, mv = {"D": ("L", -1), "S": ("N", 0), "U": ("R", 1)}[op]
                nxt = (tag, t.dst, nmd)
                dst = on_accept(nxt) if t.dst in m.finals else nxt
                b.add(key, sym, cread, dst, t.instructions[ci], mv)


def _reads(si, ci, x, cread):
    out = [None, None]
    out[si], out[ci] = x, cread
    return tuple(out)


def noread_dcsacm1_to_2dcm1(m: MachineSpec) -> TwoDcm1Instance:
    """Two-way deterministic one-counter machine with the same emptiness status as ``m``.

    Its input is a word over labels of the stack-writing transitions of ``m``.
    A first left-to-right pass checks that the labels form a run of the writing
    phase, keeping the counter in step.  On the right end-marker it turns back
    and runs the reading phase of ``m``, treating each pushing label as the
    stack cell it wrote and skipping labels that did not push.
    """
    si, ci = check_noread_dcsacm1(m)
    num = m.transition_number
    writers = {label(num[t]): t for t in m.transitions if t.instructions[si].op in ("push", "stay")}
    b = _Builder()
    acc = ("acc",)
    start = _replay_phase(b, m, si, ci, "w", writers, after_end=lambda q: ("r", q, "L"), finals_to=lambda k: acc)

    def pushed_of(sym):
        op = writers[sym].instructions[si]
        return op.symbol if op.op == "push" else None

    _reading_phase(b, m, si, ci, "r", pushed_of, list(writers), on_accept=lambda k: acc)
    init = acc if m.initial in m.finals else start
    finals = [b.name(acc)] if m.finals else []
    machine = _finish_instance(m.name + "_2dcm1", b, init, finals, list(writers), m.stores[ci])
    return TwoDcm1Instance(machine, writers, (m,))


def _finish_instance(name, b, init, finals, alphabet, ctr):
    init_name = b.name(init)
    trans = b.trans
    if finals:
        # the accepting state is a sink; acceptance is immediate
        trans = [t for t in trans if t.src not in finals]
    # keep the reachable part only
    by_src: dict[str, list[Transition]] = {}
    for t in trans:
        by_src.setdefault(t.src, []).append(t)
    seen = {init_name}
    queue = deque([init_name])
    while queue:
        s = queue.popleft()
        for t in by_src.get(s, ()):
            if t.dst not in seen:
                seen.add(t.dst)
                queue.append(t.dst)
    trans = [t for t in trans if t.src in seen]
    return make_machine(
        name,
        [ctr],
        trans,
        init_name,
        [f for f in finals if f in seen],
        alphabet,
        mode=TWOWAY,
        deterministic=True,
        store_ids=["k"],
    )


def make_finals_absorbing(m: MachineSpec) -> MachineSpec:
    """Same language; final states consume any remaining input letter without touching the stores."""
    keep = [t for t in m.transitions if t.src not in m.finals]
    extra = []
    for f in sorted(m.finals):
        for a in m.input_alphabet:
            for reads in itertools.product(*(sorted(s.read_symbols) for s in m.stores)):
                if any(r == ZT for r in reads):
                    continue
                extra.append(Transition(f, (a,), reads, f, tuple(STAY for _ in m.stores), (1,)))
    return make_machine(
        m.name,
        m.stores,
        keep + extra,
        m.initial,
        m.finals,
        m.input_alphabet,
        mode=m.mode,
        heads=m.heads,
        deterministic=m.deterministic,
        states=m.states,
        store_ids=m.store_ids,
    )


def intersection_emptiness_reduction(m1: MachineSpec, m2: MachineSpec) -> TwoDcm1Instance:
    """Two-way deterministic one-counter machine that is empty iff L(m1) and L(m2) are disjoint.

    Input symbols pair a transition of each machine consuming the same letter,
    or one machine's non-moving transition with ``$`` for the other.  The first
    pass replays ``m1`` and its reading phase; after ``m1`` accepts, the
    counter is drained, the head returns to the left end-marker, and a second
    pass does the same for ``m2``.  Final states of both machines are first made
    absorbing so that each can keep consuming input after it has accepted.
    """
    idx1 = check_noread_dcsacm1(m1)
    idx2 = check_noread_dcsacm1(m2)
    a1, a2 = make_finals_absorbing(m1), make_finals_absorbing(m2)
    n1, n2 = a1.transition_number, a2.transition_number
    w1 = [t for t in a1.transitions if t.instructions[idx1[0]].op in ("push", "stay")]
    w2 = [t for t in a2.transitions if t.instructions[idx2[0]].op in ("push", "stay")]
    pairs: dict[str, tuple] = {}
    for r in w1:
        if r.moves[0] == 0:
            pairs[f"{label(n1[r])},$"] = (r, None)
    for s in w2:
        if s.moves[0] == 0:
            pairs[f"$,{label(n2[s])}"] = (None, s)
    for r in w1:
        for s in w2:
            if r.moves[0] == 1 and s.moves[0] == 1 and r.reads[0] == s.reads[0] != RIGHT:
                pairs[f"{label(n1[r])},{label(n2[s])}"] = (r, s)
    alphabet = list(pairs)
    b = _Builder()
    drain, rewind, acc = ("drain",), ("rewind",), ("acc",)
    start1 = _replay_phase(
        b,
        a1,
        *idx1,
        "w1",
        {k: v[0] for k, v in pairs.items()},
        after_end=lambda q: drain if q in a1.finals else ("r1", q, "L"),
    )

    def pushed(k):
        def f(sym):
            t = pairs[sym][k]
            if t is None:
                return None
            idx = idx1 if k == 0 else idx2
            op = t.instructions[idx[0]]
            return op.symbol if op.op == "push" else None

        return f

    _reading_phase(b, a1, *idx1, "r1", pushed(0), alphabet, on_accept=lambda k: drain)
    start2_key = ("w2", a2.initial, ZB, None)
    for sym in [LEFT, RIGHT, *alphabet]:
        b.add(drain, sym, "c", drain, POP, 0)
        b.add(drain, sym, ZB, rewind if sym != LEFT else start2_key, STAY, -1 if sym != LEFT else 1)
        if sym != LEFT:
            b.add(rewind, sym, ZB, rewind, STAY, -1)
    b.add(rewind, LEFT, ZB, start2_key, STAY, 1)
    _replay_phase(
        b,
        a2,
        *idx2,
        "w2",
        {k: v[1] for k, v in pairs.items()},
        after_end=lambda q: acc if q in a2.finals else ("r2", q, "L"),
    )
    _reading_phase(b, a2, *idx2, "r2", pushed(1), alphabet, on_accept=lambda k: acc)
    if a2.initial in a2.finals:
        b.trans = [
            Transition(t.src, t.reads, t.store_reads, b.name(acc), t.instructions, t.moves)
            if t.dst == b.name(start2_key)
            else t
            for t in b.trans
        ]
    init = start1
    if a1.initial in a1.finals:
        init = drain
    l = m1.stores[idx1[1]].reversal_bound + m2.stores[idx2[1]].reversal_bound + 2
    finals = [b.name(acc)] if (m1.finals and m2.finals) else []
    machine = _finish_instance(f"{m1.name}_x_{m2.name}", b, init, finals, alphabet, StoreTypeSpec(RB_COUNTER, l))
    return TwoDcm1Instance(machine, pairs, (m1, m2))


# -- bounded search over two-way instances ----------------------------------------


@dataclass
class SearchOutcome:
    witness: tuple[str, ...] | None
    explored: int
    exhaustive: bool

    @property
    def found(self) -> bool:
        return self.witness is not None


def _prefix_status(m: MachineSpec, prefix: Sequence[str], max_steps: int) -> str:
    """'accept', 'alive' (head reaches the cell after the prefix) or 'dead'."""
    tp = tape(prefix)
    edge = len(prefix) + 1
    c = initial_configuration(m)
    seen = {c}
    for _ in range(max_steps):
        if c.state in m.finals:
            return "accept"
        if c.heads[0] == edge:
            return "alive"
        succ = step(m, tp, c)
        if not succ:
            return "dead"
        c = succ[0][0]
        if c in seen:
            return "dead"
        seen.add(c)
    return "unknown"


def bounded_search(m: MachineSpec, max_len: int = 8, max_steps: int = 5_000, max_nodes: int = 200_000) -> SearchOutcome:
    """Shortest-first search for an accepted word of a one-head deterministic machine.

    A prefix is extended only while the run on it reaches the cell just past
    the prefix, since a run that dies or loops before that point cannot be
    rescued by later symbols.
    """
    if not m.finals:
        return SearchOutcome(None, 0, True)
    alphabet = sorted(m.input_alphabet, key=lambda s: (len(s), s))
    frontier: list[tuple[str, ...]] = [()]
    explored = 0
    exhaustive = True
    for _length in range(max_len + 1):
        nxt: list[tuple[str, ...]] = []
        for p in frontier:
            explored += 1
            if explored > max_nodes:
                return SearchOutcome(None, explored, False)
            status = _prefix_status(m, p, max_steps)
            if status == "unknown":
                exhaustive = False
            if status in ("alive", "accept"):
                verdict = _full_accept(m, p, max_steps)
                if verdict is None:
                    exhaustive = False
                elif verdict:
                    return SearchOutcome(p, explored, True)
                if len(p) < max_len:
                    nxt.extend(p + (a,) for a in alphabet)
        frontier = nxt
    if frontier:
        exhaustive = False
    return SearchOutcome(None, explored, exhaustive)


def _full_accept(m: MachineSpec, word: Sequence[str], max_steps: int) -> bool | None:
    """Run the deterministic machine on ``word``; None when the step budget runs out."""
    tp = tape(word)
    c = initial_configuration(m)
    seen = {c}
    for _ in range(max_steps):
        if c.state in m.finals:
            return True
        succ = step(m, tp, c)
        if not succ:
            return False
        c = succ[0][0]
        if c in seen:
            return False
        seen.add(c)
    return None
