"""Executable example machines, definitional oracles, and a seeded machine generator."""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .machine import LEFT, RIGHT, ONEWAY, TWOWAY, MachineSpec, Transition, make_machine, parse_machine
from .stores import ZB, ZT, Instruction, StoreTypeSpec, checking_stack, counter


def T(src: str, reads: str, sreads: str, dst: str, ins: str, moves: str) -> Transition:
    """Compact transition literal: ``T("q", "a", "Zb Zb", "p", "push:a stay", "+1")``."""
    return Transition(
        src,
        tuple(reads.split()),
        tuple(sreads.split()),
        dst,
        tuple(Instruction.parse(x) for x in ins.split()),
        tuple(int(x) for x in moves.split()),
    )


def example1_machine() -> MachineSpec:
    """{(a^n #)^n : n >= 1} with one checking stack and one 1-reversal counter.

    The first block is copied to the stack while the counter counts its length.
    Later blocks are matched by sweeping the stack head alternately up to
    ``Zt`` and down to ``Zb``; every ``#`` decrements the counter.
    """
    ts = [
        T("q0", "a", "Zb Zb", "q0", "push:a push:c", "+1"),
        T("q0", "a", "a c", "q0", "push:a push:c", "+1"),
        T("q0", "#", "a c", "chkT", "U pop", "+1"),
        # chkT: head must sit on Zt, i.e. the block just read had length n
        T("chkT", "a", "Zt c", "dn", "D stay", "+1"),
        T("chkT", "a", "Zt Zb", "dn", "D stay", "+1"),
        T("chkT", ">", "Zt Zb", "acc", "S stay", "0"),
        T("dn", "a", "a c", "dn", "D stay", "+1"),
        T("dn", "a", "a Zb", "dn", "D stay", "+1"),
        T("dn", "#", "a c", "chkB", "D pop", "+1"),
        # chkB: head must sit on Zb
        T("chkB", "a", "Zb c", "up", "U stay", "+1"),
        T("chkB", "a", "Zb Zb", "up", "U stay", "+1"),
        T("chkB", ">", "Zb Zb", "acc", "S stay", "0"),
        T("up", "a", "a c", "up", "U stay", "+1"),
        T("up", "a", "a Zb", "up", "U stay", "+1"),
        T("up", "#", "a c", "chkT", "U pop", "+1"),
    ]
    return make_machine(
        "example1",
        [checking_stack({"a"}), counter(1)],
        ts,
        "q0",
        {"acc"},
        ("a", "#"),
        store_ids=("cs", "k"),
        deterministic=True,
    )


def example2_machine() -> MachineSpec:
    """{a^i b^j c^k : i, j >= 1, k = i*j} with one checking stack and one 1-reversal counter.

    The stack holds ``A a^(i-1) T``.  Each ``c`` moves the stack head one cell;
    every half-sweep between the markers ``A`` and ``T`` costs i letters and
    one decrement.
    """
    ts = [
        T("q0", "a", "Zb Zb", "qa", "push:A stay", "+1"),
        T("qa", "a", "A Zb", "qa", "push:a stay", "+1"),
        T("qa", "a", "a Zb", "qa", "push:a stay", "+1"),
        T("qa", "b", "A Zb", "qb", "push:T push:c", "+1"),
        T("qa", "b", "a Zb", "qb", "push:T push:c", "+1"),
        T("qb", "b", "T c", "qb", "stay push:c", "+1"),
        T("qb", "c", "T c", "dn", "D pop", "+1"),
    ]
    for k in ("c", "Zb"):
        ts += [
            T("dn", "c", f"a {k}", "dn", "D stay", "+1"),
            T("up", "c", f"a {k}", "up", "U stay", "+1"),
        ]
    ts += [
        T("dn", "c", "A c", "up", "U pop", "+1"),
        T("up", "c", "T c", "dn", "D pop", "+1"),
        T("dn", ">", "A Zb", "acc", "S stay", "0"),
        T("up", ">", "T Zb", "acc", "S stay", "0"),
    ]
    return make_machine(
        "example2",
        [checking_stack({"A", "a", "T"}), counter(1)],
        ts,
        "q0",
        {"acc"},
        ("a", "b", "c"),
        store_ids=("cs", "k"),
        deterministic=True,
    )


def anbncn_two_stack() -> MachineSpec:
    """{a^n b^n c^n : n >= 1} with two checking stacks and no counters."""
    ts = [
        T("q0", "a", "Zb Zb", "qa", "push:a stay", "+1"),
        T("qa", "a", "a Zb", "qa", "push:a stay", "+1"),
        T("qa", "b", "a Zb", "qb", "D push:b", "+1"),
        T("qb", "b", "a b", "qb", "D push:b", "+1"),
        T("qb", "c", "Zb b", "qc", "S D", "+1"),
        T("qc", "c", "Zb b", "qc", "S D", "+1"),
        T("qc", ">", "Zb Zb", "acc", "S S", "0"),
    ]
    return make_machine(
        "anbncn2",
        [checking_stack({"a"}), checking_stack({"b"})],
        ts,
        "q0",
        {"acc"},
        ("a", "b", "c"),
        store_ids=("s1", "s2"),
        deterministic=True,
    )


def anbn_ncm() -> MachineSpec:
    """{a^n b^n : n >= 1}, one-way, one 1-reversal counter."""
    ts = [
        T("q0", "a", "Zb", "qa", "push:c", "+1"),
        T("qa", "a", "c", "qa", "push:c", "+1"),
        T("qa", "b", "c", "qb", "pop", "+1"),
        T("qb", "b", "c", "qb", "pop", "+1"),
        T("qb", ">", "Zb", "acc", "stay", "0"),
    ]
    return make_machine("anbn_ncm", [counter(1)], ts, "q0", {"acc"}, ("a", "b"), store_ids=("k",))


def inc_then_zero_ncm() -> MachineSpec:
    """Increments once, then demands a zero counter: the empty language."""
    ts = [
        T("q0", "a", "Zb", "q1", "push:c", "+1"),
        T("q1", ">", "Zb", "acc", "stay", "0"),
    ]
    return make_machine("ncm_inc_then_zero", [counter(1)], ts, "q0", {"acc"}, ("a",), store_ids=("k",))


def anbn_2dcm1() -> MachineSpec:
    """{a^n b^n : n >= 1}, two-way, one counter; sweeps back to the left marker before accepting."""
    ts = [
        T("q0", "a", "Zb", "qa", "push:c", "+1"),
        T("qa", "a", "c", "qa", "push:c", "+1"),
        T("qa", "b", "c", "qb", "pop", "+1"),
        T("qb", "b", "c", "qb", "pop", "+1"),
        T("qb", ">", "Zb", "back", "stay", "-1"),
        T("back", "a", "Zb", "back", "stay", "-1"),
        T("back", "b", "Zb", "back", "stay", "-1"),
        T("back", "<", "Zb", "acc", "stay", "0"),
    ]
    return make_machine(
        "anbn_2dcm1", [counter(1)], ts, "q0", {"acc"}, ("a", "b"), mode=TWOWAY, store_ids=("k",)
    )


def anbn_2dcm2() -> MachineSpec:
    """{a^n b^n : n >= 1}, two-way, two counters compared at the right marker."""
    ts = [
        T("q0", "a", "Zb Zb", "qa", "push:c stay", "+1"),
        T("qa", "a", "c Zb", "qa", "push:c stay", "+1"),
        T("qa", "b", "c Zb", "qb", "stay push:c", "+1"),
        T("qb", "b", "c c", "qb", "stay push:c", "+1"),
        T("qb", ">", "c c", "qd", "pop pop", "0"),
        T("qd", ">", "c c", "qd", "pop pop", "0"),
        T("qd", ">", "Zb Zb", "acc", "stay stay", "0"),
    ]
    return make_machine(
        "anbn_2dcm2",
        [counter(1), counter(1)],
        ts,
        "q0",
        {"acc"},
        ("a", "b"),
        mode=TWOWAY,
        store_ids=("k1", "k2"),
    )


def noread_corpus_machine() -> MachineSpec:
    """A no-read DCSACM(1): {a^n b^m : n, m >= 1, m <= n}, checked by reading the stack at the end.

    The counter records n - m (it is decremented while reading b's), and the
    stack holds a^n b^m; at the right marker the head walks down across the
    b-block and the a-block before accepting.
    """
    ts = [
        T("q0", "a", "Zb Zb", "qa", "push:a push:c", "+1"),
        T("qa", "a", "a c", "qa", "push:a push:c", "+1"),
        T("qa", "b", "a c", "qb", "push:b pop", "+1"),
        T("qb", "b", "b c", "qb", "push:b pop", "+1"),
        T("qb", ">", "b c", "rd", "D stay", "0"),
        T("qb", ">", "b Zb", "rd", "D stay", "0"),
    ]
    for k in ("c", "Zb"):
        ts += [
            T("rd", ">", f"b {k}", "rd", "D stay", "0"),
            T("rd", ">", f"a {k}", "rd", "D stay", "0"),
            T("rd", ">", f"Zb {k}", "acc", "S stay", "0"),
        ]
    return make_machine(
        "noread_anbm",
        [checking_stack({"a", "b"}), counter(1)],
        ts,
        "q0",
        {"acc"},
        ("a", "b"),
        store_ids=("cs", "k"),
        deterministic=True,
    )


def ncsacm_guess_machine() -> MachineSpec:
    """Nondeterministic empty-input machine guessing a word for the two-counter {a^n b^n} machine."""
    from .transforms import twodcm2_to_lambda_ncsacm

    return twodcm2_to_lambda_ncsacm(anbn_2dcm2()).replace(name="ncsacm_guess")


def _writer(name: str, steps: list[tuple[str, str]], loop: list[tuple[str, str]] | None) -> MachineSpec:
    """Empty-input machine that performs ``steps`` then repeats ``loop`` forever.

    Each step is (stack instruction, counter instruction).  Store reads are
    computed by running the steps, so the machine is deterministic and every
    transition is enabled exactly when reached.
    """
    ts = []
    top, cnt = ZB, 0
    seq = steps + (loop or [])
    states = [f"q{i}" for i in range(len(seq))] + ["halt"]
    history = []
    for i, (sins, cins) in enumerate(seq):
        history.append((top, "c" if cnt else ZB))
        dst = states[i + 1]
        if loop and i == len(seq) - 1:
            dst = states[len(steps)]
        ts.append(T(states[i], ">", f"{history[-1][0]} {history[-1][1]}", dst, f"{sins} {cins}", "0"))
        if sins.startswith("push:"):
            top = sins[5:]
        cnt += {"push:c": 1, "pop": -1}.get(cins, 0)
    if loop:
        # the loop must see the same reads each time round
        entry = history[len(steps)]
        if (top, "c" if cnt else ZB) != entry or (cnt > 0) != (entry[1] == "c"):
            raise ValueError(f"{name}: loop does not return to its entry reads")
    return make_machine(
        name,
        [checking_stack({"a", "b"}), counter(1)],
        ts,
        "q0",
        set(),
        (),
        store_ids=("cs", "k"),
        deterministic=True,
    )


def infinite_writing_machine(variant: int) -> MachineSpec:
    """Hand-built empty-input machines whose writing phase never ends (variants 0..11).

    ``variant % 4`` picks the loop shape and ``variant // 4 + 1`` the length of
    the lead-in: 0 pushes a forever over a positive counter; 1 stays forever
    without pushing; 2 runs the counter up and back to zero, then alternates
    a/b pushes; 3 keeps incrementing a positive counter while pushing b.
    """
    kind, n = variant % 4, variant // 4 + 1
    up = [("push:a", "push:c")] * n
    if kind == 0:
        return _writer(f"inf_push{n}", up, [("push:a", "stay")])
    if kind == 1:
        return _writer(f"inf_stay{n}", [("push:a", "stay")] * n, [("stay", "stay")])
    if kind == 2:
        down = [("push:b", "pop")] * n
        return _writer(f"inf_alt{n}", up + down, [("push:a", "stay"), ("push:b", "stay")])
    return _writer(f"inf_grow{n}", up + [("push:b", "push:c")], [("push:b", "push:c")])


def preloaded_decrement_machine(n: int) -> MachineSpec:
    """Pushes while counting up n times, then pushes while counting down and halts at zero."""
    return _writer(f"preload{n}", [("push:a", "push:c")] * n + [("push:b", "pop")] * n, None)


CORPUS = {
    "example1": example1_machine,
    "example2": example2_machine,
    "anbncn2": anbncn_two_stack,
    "anbn_ncm": anbn_ncm,
    "ncm_inc_then_zero": inc_then_zero_ncm,
    "anbn_2dcm1": anbn_2dcm1,
    "anbn_2dcm2": anbn_2dcm2,
    "noread_anbm": noread_corpus_machine,
    "ncsacm_guess": ncsacm_guess_machine,
}


def corpus_file(name: str) -> str:
    return resources.files("checkstack").joinpath("data", f"{name}.machine").read_text(encoding="utf-8")


def load_corpus_machine(name: str) -> MachineSpec:
    return parse_machine(corpus_file(name))


def corpus_index() -> dict:
    """The manifest of committed corpus files: file name, class, language, oracle id."""
    text = resources.files("checkstack").joinpath("data", "index.json").read_text(encoding="utf-8")
    return json.loads(text)


# -- oracles -------------------------------------------------------------


def _join(w: Sequence[str] | str) -> str:
    return w if isinstance(w, str) else "".join(w)


def oracle_membership(language_id: str, w: Sequence[str] | str) -> bool:
    s = _join(w)
    if language_id == "example1":
        blocks = s.split("#")
        if len(blocks) < 2 or blocks[-1] != "":
            return False
        blocks = blocks[:-1]
        n = len(blocks)
        return all(b == "a" * n for b in blocks)
    if language_id == "example2":
        m = re.fullmatch(r"(a+)(b+)(c*)", s)
        return bool(m) and len(m.group(3)) == len(m.group(1)) * len(m.group(2))
    if language_id in ("anbn", "anbn_ncm", "anbn_2dcm1", "anbn_2dcm2"):
        n = len(s) // 2
        return n >= 1 and s == "a" * n + "b" * n
    if language_id in ("anbncn", "anbncn2"):
        n = len(s) // 3
        return n >= 1 and s == "a" * n + "b" * n + "c" * n
    if language_id in ("empty", "ncm_inc_then_zero"):
        return False
    if language_id in ("anbm", "noread_anbm"):
        m = re.fullmatch(r"(a+)(b+)", s)
        return bool(m) and len(m.group(2)) <= len(m.group(1))
    raise KeyError(f"unknown language id {language_id!r}")


# -- random machines -----------------------------------------------------


@dataclass(frozen=True)
class Profile:
    """What ``random_machine`` generates.

    ``stacks`` checking stacks followed by ``counters`` rb_counters with bound
    ``reversal_bound``.  ``no_read`` forbids stack reads on input letters.
    """

    stacks: int = 1
    counters: int = 1
    reversal_bound: int = 1
    max_states: int = 3
    max_transitions: int = 12
    deterministic: bool = True
    mode: str = ONEWAY
    alphabet: tuple[str, ...] = ("a", "b")
    stack_alphabet: tuple[str, ...] = ("x", "y")
    no_read: bool = False
    final_prob: float = 0.35


PROFILES = {
    "dcsacm": Profile(),
    "dcsacm2": Profile(counters=2),
    "ncsacm": Profile(deterministic=False),
    "noread-dcsacm1": Profile(no_read=True, max_transitions=14),
    "ncm": Profile(stacks=0, counters=2, reversal_bound=2, max_states=4, deterministic=False),
    "ncm1": Profile(stacks=0, counters=1, reversal_bound=1, max_states=4, deterministic=False),
    "dcm": Profile(stacks=0, counters=2, reversal_bound=2, max_states=4),
    "2dcm1": Profile(stacks=0, counters=1, mode=TWOWAY, max_states=3),
    "kstack": Profile(stacks=2, counters=1),
}


def random_machine(seed: int, profile: Profile | str = "dcsacm") -> MachineSpec:
    """Deterministic in ``seed``: the same seed always yields the same machine."""
    if isinstance(profile, str):
        profile = PROFILES[profile]
    rng = random.Random(seed)
    n_states = rng.randint(2, max(2, profile.max_states))
    states = [f"q{i}" for i in range(n_states)]
    stores: list[StoreTypeSpec] = [checking_stack(profile.stack_alphabet) for _ in range(profile.stacks)]
    stores += [counter(profile.reversal_bound) for _ in range(profile.counters)]
    reads = list(profile.alphabet) + [RIGHT]
    if profile.mode == TWOWAY:
        reads.append(LEFT)
    finals = {s for s in states[1:] if rng.random() < profile.final_prob} or {states[-1]}
    used: set[tuple] = set()
    trans: list[Transition] = []
    n_trans = rng.randint(max(2, profile.max_transitions // 2), profile.max_transitions)
    attempts = 0
    while len(trans) < n_trans and attempts < 50 * n_trans:
        attempts += 1
        src = rng.choice(states)
        a = rng.choice(reads)
        sreads = []
        for s in stores:
            if s.kind == "checking_stack":
                sreads.append(rng.choice(sorted(s.alphabet) + [ZB, ZB, ZT]))
            else:
                sreads.append(rng.choice([ZB, "c"]))
        key = (src, (a,), tuple(sreads))
        if profile.deterministic and key in used:
            continue
        ins = []
        for s, r in zip(stores, sreads):
            if s.kind == "checking_stack":
                reading_ok = not (profile.no_read and a != RIGHT)
                opts = ["push", "push", "stay"] + (["D", "S", "U"] if reading_ok else [])
                op = rng.choice(opts)
                ins.append(Instruction("push", rng.choice(sorted(s.alphabet))) if op == "push" else Instruction(op))
            else:
                opts = ["push", "stay"] + (["pop", "pop"] if r == "c" else [])
                op = rng.choice(opts)
                ins.append(Instruction("push", "c") if op == "push" else Instruction(op))
        if a == RIGHT:
            move = 0 if profile.mode == ONEWAY else rng.choice([0, -1])
        elif a == LEFT:
            move = rng.choice([0, 1])
        else:
            move = rng.choice([1, 1, 0] if profile.mode == ONEWAY else [1, 1, 0, -1])
        dst = rng.choice(states)
        used.add(key)
        trans.append(Transition(src, (a,), tuple(sreads), dst, tuple(ins), (move,)))
    ids = [f"s{i}" for i in range(profile.stacks)] + [f"k{i}" for i in range(profile.counters)]
    m = make_machine(
        f"rand{seed}",
        stores,
        trans,
        states[0],
        finals,
        profile.alphabet,
        mode=profile.mode,
        states=states,
        store_ids=ids,
    )
    if profile.deterministic:
        m = m.replace(deterministic=True)
    return m
