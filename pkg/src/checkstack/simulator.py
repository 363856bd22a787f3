"""Bounded exact execution: the brute-force oracle for every decision procedure."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .machine import (
    Configuration,
    MachineError,
    MachineSpec,
    Transition,
    initial_configuration,
    is_accepting,
    step,
    tape,
    validate_machine,
)
from .stores import COUNTER_KINDS, validate_trace

ACCEPT = "accept"
REJECT = "reject"
BOUND_EXCEEDED = "bound-exceeded"
UNKNOWN = "unknown"


@dataclass
class RunResult:
    verdict: str
    trace: list[tuple[Transition, Configuration]] = field(default_factory=list)
    steps_used: int = 0

    @property
    def accepted(self) -> bool:
        return self.verdict == ACCEPT

    def transitions(self) -> list[Transition]:
        return [t for t, _ in self.trace]


def instruction_traces(m: MachineSpec, transitions: Iterable[Transition]) -> list[list]:
    """Per-store instruction sequences applied along a run."""
    out: list[list] = [[] for _ in m.stores]
    for t in transitions:
        for i, ins in enumerate(t.instructions):
            out[i].append(ins)
    return out


def traces_valid(m: MachineSpec, transitions: Iterable[Transition]) -> bool:
    return all(validate_trace(s, tr) for s, tr in zip(m.stores, instruction_traces(m, transitions)))


def run_deterministic(
    m: MachineSpec,
    word: Sequence[str],
    max_steps: int = 10_000,
    *,
    require_input_consumed: bool = False,
) -> RunResult:
    """Follow the unique run.  A repeated configuration means a non-accepting loop."""
    if not m.deterministic or validate_machine(m):
        raise MachineError("run_deterministic needs a valid deterministic machine")
    tp = tape(word)
    c = initial_configuration(m)
    trace: list[tuple[Transition, Configuration]] = []
    seen = {c}
    for n in range(max_steps + 1):
        if is_accepting(m, c, tp, require_input_consumed):
            return RunResult(ACCEPT, trace, n)
        if n == max_steps:
            break
        succ = step(m, tp, c)
        if not succ:
            return RunResult(REJECT, trace, n)
        c, t = succ[0]
        trace.append((t, c))
        if c in seen:
            return RunResult(REJECT, trace, n + 1)
        seen.add(c)
    return RunResult(BOUND_EXCEEDED, trace, max_steps)


def accepts_bounded(
    m: MachineSpec,
    word: Sequence[str],
    max_steps: int = 1_000,
    *,
    require_input_consumed: bool = False,
    counter_cap: int | None = None,
    max_configs: int | None = None,
) -> RunResult:
    """Breadth-first search over configurations up to depth ``max_steps``.

    ``counter_cap`` prunes configurations whose counters exceed the cap; the
    answer is then an under-approximation, which is all a witness search needs.
    """
    tp = tape(word)
    start = initial_configuration(m)
    parent: dict[Configuration, tuple[Configuration, Transition] | None] = {start: None}
    frontier = deque([(start, 0)])
    ctr = [i for i, s in enumerate(m.stores) if s.kind in COUNTER_KINDS]
    while frontier:
        c, depth = frontier.popleft()
        if is_accepting(m, c, tp, require_input_consumed):
            return RunResult(ACCEPT, _rebuild(parent, c), depth)
        if depth >= max_steps:
            continue
        for nc, t in step(m, tp, c):
            if nc in parent:
                continue
            if counter_cap is not None and any(nc.stores[i].count > counter_cap for i in ctr):
                continue
            parent[nc] = (c, t)
            if max_configs is not None and len(parent) > max_configs:
                return RunResult(UNKNOWN, [], depth)
            frontier.append((nc, depth + 1))
    return RunResult(UNKNOWN, [], max_steps)


def _rebuild(parent, c) -> list[tuple[Transition, Configuration]]:
    out = []
    while parent[c] is not None:
        prev, t = parent[c]
        out.append((t, c))
        c = prev
    out.reverse()
    return out


def words(alphabet: Sequence[str], max_len: int) -> Iterable[tuple[str, ...]]:
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


def enumerate_accepted(
    m: MachineSpec,
    max_len: int,
    max_steps: int = 1_000,
    *,
    require_input_consumed: bool = False,
) -> set[str]:
    """Accepted words up to ``max_len``, joined into strings."""
    if not m.finals:
        return set()
    out = set()
    for w in words(sorted(m.input_alphabet), max_len):
        if accepts_bounded(m, w, max_steps, require_input_consumed=require_input_consumed).accepted:
            out.add("".join(w) if all(len(s) == 1 for s in w) else " ".join(w))
    return out


def replay(m: MachineSpec, word: Sequence[str], transitions: Sequence[Transition]) -> RunResult:
    """Apply a given transition sequence; Accept iff every step is enabled and it ends final."""
    tp = tape(word)
    c = initial_configuration(m)
    trace = []
    for t in transitions:
        nxt = [nc for nc, tt in step(m, tp, c) if tt == t]
        if not nxt:
            return RunResult(REJECT, trace, len(trace))
        c = nxt[0]
        trace.append((t, c))
    verdict = ACCEPT if c.state in m.finals else REJECT
    return RunResult(verdict, trace, len(trace))
