"""Emptiness and membership for one-way reversal-bounded multicounter machines.

Reversal-bounded counters are first split into 1-reversal counters.  A run of
the resulting machine is then a path in a finite graph whose nodes also record,
per counter, where it is in its life cycle (still zero, rising, falling, back
at zero) and which input symbol the head is parked on.  Such a path exists with
balanced counters iff an integer flow with extra linear constraints exists, and
the flow is decomposed back into a run by an Euler walk.
"""

from __future__ import annotations

import itertools
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import LinearConstraint, milp

from .errors import Namer, ResourceError, SignatureError
from .machine import ONEWAY, RIGHT, MachineSpec, Transition, make_machine, validate_machine
from .simulator import accepts_bounded
from .stores import COUNTER_SYMBOL, POP, RB_COUNTER, STAY, ZB, Instruction, StoreTypeSpec, counter

# counter life-cycle modes
Z0, UP, DN, Z1 = 0, 1, 2, 3
_MODE_READ = {Z0: ZB, UP: COUNTER_SYMBOL, DN: COUNTER_SYMBOL, Z1: ZB}

DEFAULT_BUDGET = 20_000


def check_ncm(m: MachineSpec) -> None:
    if m.mode != ONEWAY or m.heads != 1:
        raise SignatureError("NCM procedures need a one-way one-head machine")
    if any(s.kind != RB_COUNTER for s in m.stores):
        raise SignatureError("NCM procedures need reversal-bounded counters only")
    diags = validate_machine(m)
    if diags:
        raise SignatureError("; ".join(diags))


# -- reversal splitting ----------------------------------------------------


def to_phase_automaton(m: MachineSpec) -> MachineSpec:
    """Replace every l-reversal counter by ceil((l+1)/2) one-reversal counters.

    States carry the number of reversals each original counter has made.
    Increments in rising round r go to counter r//2; a decrement takes the
    highest-numbered positive counter, so determinism is preserved.  Other
    stores are copied unchanged.
    """
    rb = [i for i, s in enumerate(m.stores) if s.kind == RB_COUNTER]
    width = {i: m.stores[i].reversal_bound // 2 + 1 for i in rb}
    new_stores: list[StoreTypeSpec] = []
    new_ids: list[str] = []
    slots: dict[int, list[int]] = {}
    for i, (sid, s) in enumerate(zip(m.store_ids, m.stores)):
        if s.kind == RB_COUNTER:
            slots[i] = list(range(len(new_stores), len(new_stores) + width[i]))
            for j in range(width[i]):
                new_stores.append(counter(1))
                new_ids.append(sid if width[i] == 1 else f"{sid}_{j}")
        else:
            slots[i] = [len(new_stores)]
            new_stores.append(s)
            new_ids.append(sid)

    namer = Namer()

    def name(q: str, rounds: tuple[int, ...]) -> str:
        if not rb:
            return q
        return namer((q, rounds), f"{q}[{'.'.join(map(str, rounds))}]")

    start = (m.initial, (0,) * len(rb))
    seen = {start}
    queue = deque([start])
    trans: list[Transition] = []
    while queue:
        q, rounds = queue.popleft()
        for t in m.by_source.get(q, ()):
            for nt_parts in _split_transition(m, t, rb, width, slots, rounds, len(new_stores)):
                sreads, ins, new_rounds = nt_parts
                key = (t.dst, new_rounds)
                if key not in seen:
                    seen.add(key)
                    queue.append(key)
                trans.append(Transition(name(q, rounds), t.reads, sreads, name(*key), ins, t.moves))
    states = [name(*k) for k in sorted(seen, key=lambda k: (m.states.index(k[0]), k[1]))]
    finals = {name(*k) for k in seen if k[0] in m.finals}
    return make_machine(
        m.name + "_1rev" if rb else m.name,
        new_stores,
        trans,
        name(*start),
        finals,
        m.input_alphabet,
        mode=m.mode,
        heads=m.heads,
        deterministic=m.deterministic,
        states=states,
        store_ids=new_ids,
    )


def _split_transition(m, t, rb, width, slots, rounds, n_new):
    """Yield (store reads, instructions, new rounds) for each refinement of ``t``."""
    per_store_options: list[list[tuple[tuple, tuple, int | None]]] = []
    new_rounds = list(rounds)
    for i, s in enumerate(m.stores):
        if s.kind != RB_COUNTER:
            per_store_options.append([((t.store_reads[i],), (t.instructions[i],), None)])
            continue
        k = rb.index(i)
        r = rounds[k]
        w = width[i]
        live = r // 2 + 1 if r % 2 == 0 else (r + 1) // 2  # counters that may be non-zero
        live = min(live, w)
        b = t.store_reads[i]
        op = t.instructions[i].op
        if b == ZB:
            vectors = [(ZB,) * w]
        else:
            vectors = [
                v + (ZB,) * (w - live)
                for v in itertools.product((ZB, COUNTER_SYMBOL), repeat=live)
                if COUNTER_SYMBOL in v
            ]
        opts = []
        for vec in vectors:
            if op == "stay":
                opts.append((vec, (STAY,) * w, r))
            elif op == "push":
                nr = r if r % 2 == 0 else r + 1
                if nr > s.reversal_bound:
                    continue
                ins = [STAY] * w
                ins[nr // 2] = Instruction("push", COUNTER_SYMBOL)
                opts.append((vec, tuple(ins), nr))
            else:
                nr = r + 1 if r % 2 == 0 else r
                if nr > s.reversal_bound:
                    continue
                top = max(j for j, x in enumerate(vec) if x == COUNTER_SYMBOL)
                ins = [STAY] * w
                ins[top] = POP
                opts.append((vec, tuple(ins), nr))
        per_store_options.append(opts)
    for combo in itertools.product(*per_store_options):
        sreads: list[str] = []
        ins: list[Instruction] = []
        nr = list(rounds)
        for i, (vec, inss, r) in enumerate(combo):
            sreads.extend(vec)
            ins.extend(inss)
            if r is not None:
                nr[rb.index(i)] = r
        yield tuple(sreads), tuple(ins), tuple(nr)


# -- flow systems ----------------------------------------------------------


@dataclass
class FlowSystem:
    """Integer feasibility instance over nonnegative variables.

    ``edges`` maps graph variables to (tail, head) node pairs; connectivity of
    the used edges to ``source`` is enforced by the solver when ``source`` is set.
    """

    variables: list[str]
    eq: list[tuple[dict[int, int], int]] = field(default_factory=list)
    ge: list[tuple[dict[int, int], int]] = field(default_factory=list)
    edges: dict[int, tuple[object, object]] = field(default_factory=dict)
    source: object = None
    labels: dict[int, object] = field(default_factory=dict)

    def add_eq(self, coeffs: dict[int, int], rhs: int) -> None:
        self.eq.append(({k: v for k, v in coeffs.items() if v}, rhs))

    def add_ge(self, coeffs: dict[int, int], rhs: int) -> None:
        self.ge.append(({k: v for k, v in coeffs.items() if v}, rhs))

    def dump(self) -> str:
        """Plain-text listing, one constraint per line."""

        def lhs(coeffs):
            if not coeffs:
                return "0"
            return " ".join(f"{'+' if c > 0 else '-'} {abs(c)}*{self.variables[v]}" for v, c in sorted(coeffs.items()))

        lines = [f"# {len(self.variables)} variables, all integer >= 0"]
        lines += [f"{lhs(c)} = {r}" for c, r in self.eq]
        lines += [f"{lhs(c)} >= {r}" for c, r in self.ge]
        return "\n".join(lines) + "\n"

    def satisfied_by(self, x: Sequence[int]) -> bool:
        if any(v < 0 for v in x):
            return False
        ok_eq = all(sum(c * x[v] for v, c in co.items()) == r for co, r in self.eq)
        return ok_eq and all(sum(c * x[v] for v, c in co.items()) >= r for co, r in self.ge)


@dataclass
class FlowResult:
    feasible: bool
    assignment: list[int] | None = None


def solve_flow(fs: FlowSystem, budget: int = DEFAULT_BUDGET) -> FlowResult:
    """Exact nonnegative-integer feasibility.

    Integer programs are solved by branch and bound (HiGHS); every reported
    solution is re-checked in exact integer arithmetic.  When the system is a
    flow with a source, a solution whose used edges split into a part not
    reachable from the source is excluded by branching on "this node set is
    unused" versus "some edge enters it", which is exact and needs no big-M.
    """
    n = len(fs.variables)
    if n > budget or len(fs.eq) + len(fs.ge) > 4 * budget:
        raise ResourceError(f"flow system with {n} variables exceeds budget {budget}")
    stack: list[list[tuple[dict[int, int], int, str]]] = [[]]
    explored = 0
    while stack:
        extra = stack.pop()
        explored += 1
        if explored > 10_000:
            raise ResourceError("connectivity branching did not settle")
        x = _solve_ilp(fs, extra)
        if x is None:
            continue
        if not fs.satisfied_by(x) or not _extra_ok(extra, x):
            raise ResourceError("integer solver returned an inexact solution")
        if fs.source is None:
            return FlowResult(True, x)
        stray = _unreachable_nodes(fs, x)
        if not stray:
            return FlowResult(True, x)
        touching = [v for v, (a, b) in fs.edges.items() if a in stray or b in stray]
        entering = [v for v, (a, b) in fs.edges.items() if a not in stray and b in stray]
        stack.append(extra + [({v: 1 for v in entering}, 1, "ge")])
        stack.append(extra + [({v: 1 for v in touching}, 0, "eq")])
    return FlowResult(False)


def _extra_ok(extra, x) -> bool:
    for co, r, kind in extra:
        val = sum(c * x[v] for v, c in co.items())
        if (kind == "eq" and val != r) or (kind == "ge" and val < r):
            return False
    return True


def _solve_ilp(fs: FlowSystem, extra) -> list[int] | None:
    n = len(fs.variables)
    rows, lb, ub = [], [], []
    for co, r in fs.eq:
        rows.append(co)
        lb.append(r)
        ub.append(r)
    for co, r in fs.ge:
        rows.append(co)
        lb.append(r)
        ub.append(np.inf)
    for co, r, kind in extra:
        rows.append(co)
        lb.append(r)
        ub.append(r if kind == "eq" else np.inf)
    if n == 0:
        ok = all(l <= 0 <= u for l, u in zip(lb, ub))
        return [] if ok else None
    constraints = []
    if rows:
        A = np.zeros((len(rows), n))
        for k, co in enumerate(rows):
            for v, c in co.items():
                A[k, v] = c
        constraints.append(LinearConstraint(A, lb, ub))
    res = milp(np.ones(n), integrality=np.ones(n), bounds=(0, np.inf), constraints=constraints)
    if res.status == 2:
        return None
    if res.status != 0 or res.x is None:
        raise ResourceError(f"integer solver stopped: {res.message}")
    return [int(round(v)) for v in res.x]


def _unreachable_nodes(fs: FlowSystem, x: Sequence[int]) -> set:
    adj = defaultdict(set)
    nodes = set()
    for v, (a, b) in fs.edges.items():
        if x[v] > 0:
            adj[a].add(b)
            adj[b].add(a)
            nodes |= {a, b}
    if not nodes:
        return set()
    seen = {fs.source}
    queue = deque([fs.source])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return nodes - seen


# -- the run graph ----------------------------------------------------------


SINK = ("sink",)


@dataclass(frozen=True)
class Edge:
    src: tuple
    dst: tuple
    transition: int
    delta: tuple[int, ...]


@dataclass
class RunGraph:
    machine: MachineSpec
    start: tuple
    edges: list[Edge]
    targets: list[tuple]


def _counter_steps(mode: int, read: str, op: str) -> list[tuple[int, int]]:
    """(new mode, value delta) options for one 1-reversal counter."""
    if _MODE_READ[mode] != read:
        return []
    if op == "stay":
        return [(mode, 0)]
    if op == "push":
        return [(UP, 1)] if mode in (Z0, UP) else []
    if mode in (UP, DN):
        return [(DN, -1), (Z1, -1)]
    return []


def build_run_graph(p: MachineSpec, end_zero: bool = False) -> RunGraph:
    """Reachable part of (state, counter modes, parked symbol) for a 1-reversal NCM."""
    k = len(p.stores)
    start = (p.initial, (Z0,) * k, None)
    seen = {start}
    queue = deque([start])
    edges: list[Edge] = []
    num = p.transition_number
    while queue:
        node = queue.popleft()
        q, modes, parked = node
        for t in p.by_source.get(q, ()):
            a = t.reads[0]
            if parked is not None and a != parked:
                continue
            if t.moves[0] == 1:
                if a == RIGHT:
                    continue
                new_parked = None
            else:
                new_parked = a
            options = [
                _counter_steps(md, r, ins.op) for md, r, ins in zip(modes, t.store_reads, t.instructions)
            ]
            for combo in itertools.product(*options):
                new_modes = tuple(c[0] for c in combo)
                delta = tuple(c[1] for c in combo)
                nxt = (t.dst, new_modes, new_parked)
                edges.append(Edge(node, nxt, num[t], delta))
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
    targets = [
        n for n in seen if n[0] in p.finals and (not end_zero or all(md in (Z0, Z1) for md in n[1]))
    ]
    # keep only nodes that can reach a target
    back = defaultdict(list)
    for e in edges:
        back[e.dst].append(e.src)
    useful = set(targets)
    queue = deque(targets)
    while queue:
        u = queue.popleft()
        for w in back[u]:
            if w not in useful:
                useful.add(w)
                queue.append(w)
    edges = [e for e in edges if e.src in useful and e.dst in useful]
    targets.sort(key=repr)
    return RunGraph(p, start, edges, targets)


def build_flow_system(
    p: MachineSpec,
    end_zero: bool = False,
    graph: RunGraph | None = None,
    target_modes: tuple[int, ...] | None = None,
) -> FlowSystem:
    """Flow instance for accepting runs ending in nodes with the given counter modes.

    With ``target_modes=None`` the first mode vector among the targets is used
    (``ncm_emptiness`` iterates over all of them).
    """
    if any(s.kind != RB_COUNTER or s.reversal_bound != 1 for s in p.stores):
        raise SignatureError("build_flow_system needs 1-reversal counters; use to_phase_automaton")
    g = graph or build_run_graph(p, end_zero)
    if target_modes is None:
        target_modes = g.targets[0][1] if g.targets else (Z0,) * len(p.stores)
    targets = [t for t in g.targets if t[1] == target_modes]
    fs = FlowSystem([], source=g.start)
    for e in g.edges:
        v = len(fs.variables)
        fs.variables.append(f"x{v}_t{e.transition}")
        fs.edges[v] = (e.src, e.dst)
        fs.labels[v] = e
    for tnode in targets:
        v = len(fs.variables)
        fs.variables.append(f"end{v}")
        fs.edges[v] = (tnode, SINK)
        fs.labels[v] = None
    nodes = {g.start, SINK}
    for a, b in fs.edges.values():
        nodes |= {a, b}
    out_of = defaultdict(dict)
    for v, (a, b) in fs.edges.items():
        out_of[a][v] = out_of[a].get(v, 0) + 1
        out_of[b][v] = out_of[b].get(v, 0) - 1
    for node in sorted(nodes, key=repr):
        rhs = (1 if node == g.start else 0) - (1 if node == SINK else 0)
        fs.add_eq(out_of[node], rhs)
    for i, md in enumerate(target_modes):
        co = {v: e.delta[i] for v, e in fs.labels.items() if e is not None and e.delta[i]}
        if md == DN:
            fs.add_ge(co, 1)
        elif md == Z1:
            fs.add_eq(co, 0)
    return fs


def euler_walk(fs: FlowSystem, x: Sequence[int]) -> list[Edge]:
    """Hierholzer walk from the source using each edge x[v] times; lowest transition first."""
    adj: dict[object, list[int]] = defaultdict(list)
    for v, (a, _b) in fs.edges.items():
        adj[a].extend([v] * x[v])
    for a in adj:
        adj[a].sort(key=lambda v: (_tkey(fs, v), v), reverse=True)
    stack: list[tuple[object, int | None]] = [(fs.source, None)]
    walk: list[int] = []
    while stack:
        node, via = stack[-1]
        if adj[node]:
            v = adj[node].pop()
            stack.append((fs.edges[v][1], v))
        else:
            stack.pop()
            if via is not None:
                walk.append(via)
    walk.reverse()
    return [fs.labels[v] for v in walk if fs.labels[v] is not None]


def _tkey(fs, v):
    e = fs.labels[v]
    return -1 if e is None else e.transition


# -- decisions --------------------------------------------------------------


@dataclass
class EmptinessVerdict:
    empty: bool
    word: tuple[str, ...] | None = None
    transitions: list[Transition] | None = None

    @property
    def verdict(self) -> str:
        return "empty" if self.empty else "nonempty"


def path_word(p: MachineSpec, path: Sequence[Edge]) -> tuple[str, ...]:
    """Input word spelled by a run-graph path, including a letter the head is parked on."""
    word = []
    parked = None
    for e in path:
        t = p.transitions[e.transition]
        if t.moves[0] == 1:
            word.append(t.reads[0])
            parked = None
        else:
            parked = t.reads[0]
    if parked is not None and parked != RIGHT:
        word.append(parked)
    return tuple(word)


def ncm_emptiness(m: MachineSpec, end_zero: bool = False, budget: int = DEFAULT_BUDGET) -> EmptinessVerdict:
    check_ncm(m)
    if not m.finals:
        return EmptinessVerdict(True)
    p = to_phase_automaton(m)
    g = build_run_graph(p, end_zero)
    if not g.targets:
        return EmptinessVerdict(True)
    for modes in sorted({t[1] for t in g.targets}):
        fs = build_flow_system(p, end_zero, g, modes)
        res = solve_flow(fs, budget)
        if not res.feasible:
            continue
        path = euler_walk(fs, res.assignment)
        word = path_word(p, path)
        run = accepts_bounded(m, word, max(len(path), 1))
        if not run.accepted:
            raise AssertionError(f"witness {word!r} failed to replay on {m.name}")
        return EmptinessVerdict(False, word, run.transitions())
    return EmptinessVerdict(True)


def ncm_membership(m: MachineSpec, word: Sequence[str], budget: int = DEFAULT_BUDGET) -> bool:
    from .transforms import make_lambda_machine

    check_ncm(m)
    return not ncm_emptiness(make_lambda_machine(m, tuple(word)), budget=budget).empty
