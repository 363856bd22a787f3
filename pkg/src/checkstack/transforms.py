"""Constructions between machine classes.

Each function returns a fresh :class:`MachineSpec`; none of them mutates its
argument.  Label alphabets use ``t<i>`` where ``i`` is the index of the source
transition in ``m.transitions``.
"""

from __future__ import annotations

from collections import Counter, deque
from typing import Iterable, Sequence

from .errors import Namer, SignatureError
from .machine import LEFT, ONEWAY, RIGHT, TWOWAY, MachineSpec, Transition, make_machine, tape
from .stores import (
    CHECKING_STACK,
    COUNTER_KINDS,
    STAY,
    ZB,
    ZT,
    D,
    Instruction,
    S,
    U,
    checking_stack,
    push,
    validate_trace,
)


def label(i: int) -> str:
    return f"t{i}"


def label_index(symbol: str) -> int:
    if not symbol.startswith("t") or not symbol[1:].isdigit():
        raise ValueError(f"not a transition label: {symbol!r}")
    return int(symbol[1:])


def _one_way(m: MachineSpec, what: str) -> None:
    if m.mode != ONEWAY or m.heads != 1:
        raise SignatureError(f"{what} needs a one-way one-head machine")


# -- moving the input word into the finite control ---------------------------


def make_lambda_machine(m: MachineSpec, w: Sequence[str]) -> MachineSpec:
    """Encode ``w`` and all head positions into the states.

    The result is one-way and one-head over the empty alphabet; it accepts the
    empty word iff ``m`` accepts ``w``, and every transition applies exactly the
    store instructions of the source transition it copies.
    """
    tp = tape(w)
    last = len(tp) - 1
    namer = Namer()

    def name(q: str, heads: tuple[int, ...]) -> str:
        return namer((q, heads), f"{q}@{','.join(map(str, heads))}")

    start = (m.initial, (1,) * m.heads)
    seen = {start}
    queue = deque([start])
    trans = []
    while queue:
        q, heads = queue.popleft()
        reads = tuple(tp[p] for p in heads)
        for t in m.by_source.get(q, ()):
            if t.reads != reads:
                continue
            nh = tuple(p + mv for p, mv in zip(heads, t.moves))
            if any(p < 0 or p > last for p in nh):
                continue
            key = (t.dst, nh)
            if key not in seen:
                seen.add(key)
                queue.append(key)
            trans.append(Transition(name(q, heads), (RIGHT,), t.store_reads, name(*key), t.instructions, (0,)))
    order = sorted(seen, key=lambda k: (m.states.index(k[0]), k[1]))
    return make_machine(
        f"{m.name}_lambda",
        m.stores,
        trans,
        name(*start),
        [name(*k) for k in seen if k[0] in m.finals],
        (),
        deterministic=m.deterministic,
        states=[name(*k) for k in order],
        store_ids=m.store_ids,
    )


# -- input-interface transforms ----------------------------------------------


def _pending_product(m: MachineSpec, symbol_of) -> tuple[list[Transition], dict, str]:
    """States (q, parked symbol); ``symbol_of(i, t)`` gives the new input symbol per transition."""
    namer = Namer()

    def name(q, parked):
        hint = q if parked is None else f"{q}^{parked}"
        return namer((q, parked), hint)

    start = (m.initial, None)
    seen = {start}
    queue = deque([start])
    trans = []
    num = m.transition_number
    while queue:
        q, parked = queue.popleft()
        for t in m.by_source.get(q, ()):
            a, mv = t.reads[0], t.moves[0]
            if parked is not None and parked != a:
                continue
            if mv == 1:
                if a == RIGHT:
                    continue
                nxt = (t.dst, None)
            else:
                nxt = (t.dst, a)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
            sym, move = symbol_of(num[t], t)
            trans.append(Transition(name(q, parked), (sym,), t.store_reads, name(*nxt), t.instructions, (move,)))
    names = {k: name(*k) for k in seen}
    return trans, names, name(*start)


def label_determinize(m: MachineSpec) -> MachineSpec:
    """Deterministic machine over transition labels, always moving right.

    A label word is accepted iff it spells an accepting run prefix of ``m`` in
    which consecutive non-moving transitions agree on the letter under the
    head.  A trailing run of non-moving labels is allowed; the letter they read
    becomes the last input letter (or the right end-marker).
    """
    _one_way(m, "label_determinize")
    trans, names, start = _pending_product(m, lambda i, t: (label(i), 1))
    return make_machine(
        f"{m.name}_labels",
        m.stores,
        trans,
        start,
        [n for (q, _p), n in names.items() if q in m.finals],
        [label(i) for i in range(len(m.transitions))],
        deterministic=True,
        states=[start] + sorted(set(names.values()) - {start}),
        store_ids=m.store_ids,
    )


def labels_to_word(m: MachineSpec, labels: Sequence[str]) -> tuple[str, ...]:
    """Input word of ``m`` spelled by a label word of ``label_determinize(m)``."""
    word: list[str] = []
    parked = None
    for sym in labels:
        t = m.transitions[label_index(sym)]
        if t.moves[0] == 1:
            word.append(t.reads[0])
            parked = None
        else:
            parked = t.reads[0]
    if parked is not None and parked != RIGHT:
        word.append(parked)
    return tuple(word)


def word_to_labels(transitions: Iterable[Transition], m: MachineSpec) -> tuple[str, ...]:
    num = m.transition_number
    return tuple(label(num[t]) for t in transitions)


def erase_input(m: MachineSpec) -> MachineSpec:
    """Guess the input letters in the finite control; accepts the empty word iff L(m) is non-empty."""
    _one_way(m, "erase_input")
    trans, names, start = _pending_product(m, lambda i, t: (RIGHT, 0))
    return make_machine(
        f"{m.name}_erased",
        m.stores,
        trans,
        start,
        [n for (q, _p), n in names.items() if q in m.finals],
        (),
        deterministic=False,
        states=[start] + sorted(set(names.values()) - {start}),
        store_ids=m.store_ids,
    )


def restrict_to_lambda(m: MachineSpec) -> MachineSpec:
    """Machine accepting L(m) intersected with the empty word.

    Transitions reading an input letter are removed, so any letter traps the
    run.  If the initial state is final, ``m`` accepts every word without
    moving; then a fresh initial state must first see the right end-marker.
    """
    _one_way(m, "restrict_to_lambda")
    keep = [t for t in m.transitions if t.reads == (RIGHT,)]
    if m.initial not in m.finals:
        return make_machine(
            f"{m.name}_only_lambda",
            m.stores,
            keep,
            m.initial,
            m.finals,
            m.input_alphabet,
            deterministic=m.deterministic,
            states=m.states,
            store_ids=m.store_ids,
        )
    namer = Namer()
    for q in m.states:
        namer(q, q)
    init, acc = namer("init", "lambda_init"), namer("acc", "lambda_acc")
    zeros = tuple(ZB for _ in m.stores)
    t = Transition(init, (RIGHT,), zeros, acc, tuple(STAY for _ in m.stores), (0,))
    return make_machine(
        f"{m.name}_only_lambda",
        m.stores,
        [t],
        init,
        [acc],
        m.input_alphabet,
        deterministic=True,
        states=[init, acc],
        store_ids=m.store_ids,
    )


# -- two-way counter machines onto a checking stack ---------------------------


def _counters_only_twoway(m: MachineSpec, what: str) -> None:
    if m.heads != 1:
        raise SignatureError(f"{what} needs a one-head machine")
    if not m.stores or any(s.kind not in COUNTER_KINDS for s in m.stores):
        raise SignatureError(f"{what} needs a machine whose stores are all counters")


def _stack_read(a: str) -> str:
    return {LEFT: ZB, RIGHT: ZT}.get(a, a)


_HEAD_TO_STACK = {-1: D, 0: S, 1: U}


def _copy_then_simulate(m: MachineSpec, guess: bool) -> MachineSpec:
    sigma = tuple(m.input_alphabet)
    cs = checking_stack(sigma) if sigma else checking_stack(("a",))
    stores = (cs, *m.stores)
    zc = tuple(ZB for _ in m.stores)
    still = tuple(STAY for _ in m.stores)
    namer = Namer()
    sim = {q: namer(("sim", q), q) for q in m.states}
    copy, rew = namer("copy", "copy"), namer("rewind", "rewind")
    trans: list[Transition] = []
    tops = (ZB, *sigma)
    for top in tops:
        for a in sigma:
            reads = (RIGHT,) if guess else (a,)
            trans.append(Transition(copy, reads, (top, *zc), copy, (push(a), *still), (0,) if guess else (1,)))
        if top == ZB:
            trans.append(Transition(copy, (RIGHT,), (ZB, *zc), sim[m.initial], (U, *still), (0,)))
        else:
            trans.append(Transition(copy, (RIGHT,), (top, *zc), rew, (D, *still), (0,)))
    for a in sigma:
        trans.append(Transition(rew, (RIGHT,), (a, *zc), rew, (D, *still), (0,)))
    trans.append(Transition(rew, (RIGHT,), (ZB, *zc), sim[m.initial], (U, *still), (0,)))
    for t in m.transitions:
        trans.append(
            Transition(
                sim[t.src],
                (RIGHT,),
                (_stack_read(t.reads[0]), *t.store_reads),
                sim[t.dst],
                (_HEAD_TO_STACK[t.moves[0]], *t.instructions),
                (0,),
            )
        )
    finals = {sim[q] for q in m.finals}
    if m.initial in m.finals:
        finals.add(copy)
    return make_machine(
        f"{m.name}_{'guess' if guess else 'copy'}",
        stores,
        trans,
        copy,
        finals,
        () if guess else sigma,
        deterministic=not guess and m.deterministic,
        states=[copy, rew, *sim.values()],
        store_ids=("cs", *m.store_ids),
    )


def twoway_counter_to_csacm(m: MachineSpec, nondet_allowed: bool = False) -> MachineSpec:
    """One-way checking-stack machine that copies its input, then runs ``m`` on the stack.

    Stack positions play the tape: the bottom marker stands for the left
    end-marker, the position above the top for the right one, and head moves
    -1/0/+1 become D/S/U.  Counters are copied unchanged.
    """
    _counters_only_twoway(m, "twoway_counter_to_csacm")
    if not m.deterministic and not nondet_allowed:
        raise SignatureError("source is nondeterministic; pass nondet_allowed=True")
    return _copy_then_simulate(m, guess=False)


def twodcm2_to_lambda_ncsacm(m: MachineSpec) -> MachineSpec:
    """Empty-input machine that guesses a word onto its stack and runs ``m`` on it.

    Accepts the empty word iff L(m) is non-empty.  Always nondeterministic.
    """
    _counters_only_twoway(m, "twodcm2_to_lambda_ncsacm")
    if m.mode != TWOWAY:
        raise SignatureError("twodcm2_to_lambda_ncsacm needs a two-way machine")
    return _copy_then_simulate(m, guess=True)


# -- crossing counts ----------------------------------------------------------


def crossing_profile(trace: Sequence[Instruction]) -> Counter:
    """Map boundary i (between cells i and i+1) to the number of head crossings."""
    pushed = sorted({ins.symbol for ins in trace if ins.op == "push"}) or ["a"]
    if not validate_trace(checking_stack(pushed), trace):
        raise ValueError("invalid checking-stack trace")
    pos = 0
    out: Counter = Counter()
    for ins in trace:
        if ins.op == "push":
            pos += 1
        elif ins.op == "D":
            pos -= 1
            out[pos] += 1
        elif ins.op == "U":
            out[pos] += 1
            pos += 1
    return out


def crossing_count(trace: Sequence[Instruction], boundary: int) -> int:
    return crossing_profile(trace)[boundary]


def max_crossings(trace: Sequence[Instruction]) -> int:
    return max(crossing_profile(trace).values(), default=0)


def is_checking_stack_machine(m: MachineSpec) -> bool:
    return any(s.kind == CHECKING_STACK for s in m.stores)
