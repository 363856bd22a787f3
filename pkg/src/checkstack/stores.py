"""Store types: pushdown, counter, reversal-bounded counter, stack, checking stack.

Each store is described by a :class:`StoreTypeSpec`.  Configurations are
immutable :class:`StoreConfig` values and the write function is partial:
undefined moves raise :class:`StoreError` instead of being clamped, so the
simulator can prune dead branches.

Every instruction language used here is prefix-closed, which means checking
each prefix online (``advance_phase``) is enough to guarantee membership of
the whole sequence once a run accepts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

ZB = "Zb"
ZT = "Zt"
HEAD = "↓"
COUNTER_SYMBOL = "c"
RESERVED = frozenset({ZB, ZT, HEAD, "<", ">"})

PUSHDOWN = "pushdown"
COUNTER = "counter"
RB_COUNTER = "rb_counter"
STACK = "stack"
CHECKING_STACK = "checking_stack"
KINDS = (PUSHDOWN, COUNTER, RB_COUNTER, STACK, CHECKING_STACK)
COUNTER_KINDS = frozenset({COUNTER, RB_COUNTER})
STACK_KINDS = frozenset({STACK, CHECKING_STACK})

MOVE_OPS = frozenset({"D", "S", "U"})
WRITE_OPS = frozenset({"push", "pop", "stay"})


class StoreError(ValueError):
    """An instruction is undefined on a configuration, or a value is malformed."""


class Instruction(NamedTuple):
    op: str
    symbol: str | None = None

    def __str__(self) -> str:
        return f"push:{self.symbol}" if self.op == "push" else self.op

    @classmethod
    def parse(cls, token: str) -> "Instruction":
        if token.startswith("push:"):
            sym = token[5:]
            if not sym:
                raise StoreError("push without symbol")
            return cls("push", sym)
        if token in ("pop", "stay", "D", "S", "U"):
            return cls(token)
        raise StoreError(f"unknown instruction {token!r}")


STAY = Instruction("stay")
POP = Instruction("pop")
D = Instruction("D")
S = Instruction("S")
U = Instruction("U")


def push(symbol: str) -> Instruction:
    return Instruction("push", symbol)


@dataclass(frozen=True)
class StoreTypeSpec:
    kind: str
    reversal_bound: int = 0
    alphabet: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise StoreError(f"unknown store kind {self.kind!r}")
        if self.kind in COUNTER_KINDS:
            object.__setattr__(self, "alphabet", frozenset({COUNTER_SYMBOL}))
        else:
            object.__setattr__(self, "alphabet", frozenset(self.alphabet))
        if self.kind == RB_COUNTER and self.reversal_bound < 1:
            raise StoreError("rb_counter needs reversal_bound >= 1")
        if self.kind != RB_COUNTER:
            object.__setattr__(self, "reversal_bound", 0)
        bad = self.alphabet & RESERVED
        if bad:
            raise StoreError(f"reserved symbols in store alphabet: {sorted(bad)}")

    @property
    def read_symbols(self) -> frozenset[str]:
        """Every value ``read_store`` can return for this kind."""
        if self.kind in STACK_KINDS:
            return self.alphabet | {ZB, ZT}
        return self.alphabet | {ZB}

    def allows(self, ins: Instruction) -> bool:
        if ins.op == "push":
            return ins.symbol in self.alphabet
        if ins.op in MOVE_OPS:
            return self.kind in STACK_KINDS
        if ins.op == "pop":
            return self.kind != CHECKING_STACK
        return ins.op == "stay"

    def token(self) -> str:
        if self.kind == RB_COUNTER:
            return f"rb_counter:{self.reversal_bound}"
        return self.kind


def counter(l: int | None = 1) -> StoreTypeSpec:
    if l is None:
        return StoreTypeSpec(COUNTER)
    return StoreTypeSpec(RB_COUNTER, l)


def checking_stack(alphabet: Iterable[str]) -> StoreTypeSpec:
    return StoreTypeSpec(CHECKING_STACK, alphabet=frozenset(alphabet))


@dataclass(frozen=True)
class StoreConfig:
    """One store's contents.

    ``content`` holds the plain symbols above ``Zb`` (and below ``Zt`` for
    stack kinds).  Counters keep their value in ``count`` instead of a unary
    word.  For stack kinds ``pos`` is the number of cells left of the head
    marker, not counting ``Zb``: ``0`` reads ``Zb``, ``len(content)`` is the
    top, ``len(content) + 1`` means the head has moved above ``Zt``.
    """

    kind: str
    content: tuple[str, ...] = ()
    count: int = 0
    pos: int = 0

    def word(self) -> str:
        """Render the configuration word with its markers."""
        if self.kind in COUNTER_KINDS:
            return " ".join([ZB] + [COUNTER_SYMBOL] * self.count)
        if self.kind in STACK_KINDS:
            cells = [ZB, *self.content, ZT]
            return " ".join(cells[: self.pos + 1] + [HEAD] + cells[self.pos + 1 :])
        return " ".join([ZB, *self.content])


def initial_config(spec: StoreTypeSpec) -> StoreConfig:
    return StoreConfig(spec.kind)


def parse_config(spec: StoreTypeSpec, word: str) -> StoreConfig:
    """Parse a space-separated configuration word such as ``"Zb a b ↓ Zt"``."""
    toks = word.split()
    if not toks or toks[0] != ZB:
        raise StoreError(f"configuration must start with {ZB}: {word!r}")
    rest = toks[1:]
    if spec.kind in STACK_KINDS:
        if rest.count(HEAD) != 1 or ZT not in rest:
            raise StoreError(f"malformed stack configuration {word!r}")
        h = rest.index(HEAD)
        cells = rest[:h] + rest[h + 1 :]
        if cells[-1] != ZT or cells.count(ZT) != 1:
            raise StoreError(f"malformed stack configuration {word!r}")
        content = tuple(cells[:-1])
        _check_symbols(spec, content)
        return StoreConfig(spec.kind, content, pos=h)
    if HEAD in rest or ZT in rest:
        raise StoreError(f"markers not allowed in {spec.kind}: {word!r}")
    _check_symbols(spec, tuple(rest))
    if spec.kind in COUNTER_KINDS:
        return StoreConfig(spec.kind, count=len(rest))
    return StoreConfig(spec.kind, tuple(rest))


def _check_symbols(spec: StoreTypeSpec, content: tuple[str, ...]) -> None:
    for sym in content:
        if sym not in spec.alphabet:
            raise StoreError(f"symbol {sym!r} not in store alphabet")


def well_formed(cfg: StoreConfig) -> bool:
    if cfg.kind in COUNTER_KINDS:
        return cfg.count >= 0 and not cfg.content
    if cfg.kind in STACK_KINDS:
        return 0 <= cfg.pos <= len(cfg.content) + 1
    return cfg.count == 0


def read_store(cfg: StoreConfig) -> str:
    if cfg.kind in COUNTER_KINDS:
        if cfg.count < 0:
            raise StoreError("negative counter")
        return COUNTER_SYMBOL if cfg.count else ZB
    if cfg.kind in STACK_KINDS:
        n = len(cfg.content)
        if cfg.pos == 0:
            return ZB
        if cfg.pos <= n:
            return cfg.content[cfg.pos - 1]
        if cfg.pos == n + 1:
            return ZT
        raise StoreError(f"head position {cfg.pos} out of range")
    return cfg.content[-1] if cfg.content else ZB


def apply_instruction(spec: StoreTypeSpec, cfg: StoreConfig, ins: Instruction) -> StoreConfig:
    """The partial write function ``g``."""
    if not spec.allows(ins):
        raise StoreError(f"instruction {ins} not available on {spec.kind}")
    op = ins.op
    if spec.kind in COUNTER_KINDS:
        if op == "push":
            return StoreConfig(cfg.kind, count=cfg.count + 1)
        if op == "pop":
            if cfg.count == 0:
                raise StoreError("pop on empty counter")
            return StoreConfig(cfg.kind, count=cfg.count - 1)
        return cfg
    if spec.kind == PUSHDOWN:
        if op == "push":
            return StoreConfig(cfg.kind, cfg.content + (ins.symbol,))
        if op == "pop":
            if not cfg.content:
                raise StoreError("pop on empty pushdown")
            return StoreConfig(cfg.kind, cfg.content[:-1])
        return cfg
    n = len(cfg.content)
    if op in WRITE_OPS:
        if cfg.pos != n:
            raise StoreError(f"{op} with head inside the stack")
        if op == "push":
            return StoreConfig(cfg.kind, cfg.content + (ins.symbol,), pos=n + 1)
        if op == "pop":
            if n == 0:
                raise StoreError("pop on empty stack")
            return StoreConfig(cfg.kind, cfg.content[:-1], pos=n - 1)
        return cfg
    if op == "D":
        if cfg.pos == 0:
            raise StoreError("D at bottom of stack")
        return StoreConfig(cfg.kind, cfg.content, pos=cfg.pos - 1)
    if op == "U":
        if cfg.pos > n:
            raise StoreError("U above top-of-stack marker")
        return StoreConfig(cfg.kind, cfg.content, pos=cfg.pos + 1)
    return cfg


# Phase trackers.  rb_counter: (rising, reversals); checking_stack: "W"/"R";
# other kinds carry None.
PhaseState = tuple | str | None


def initial_phase(spec: StoreTypeSpec) -> PhaseState:
    if spec.kind == RB_COUNTER:
        return (True, 0)
    if spec.kind == CHECKING_STACK:
        return "W"
    return None


def advance_phase(spec: StoreTypeSpec, ph: PhaseState, ins: Instruction) -> PhaseState:
    """Extend the instruction prefix by ``ins``; raise if it leaves ``L_I``."""
    if not spec.allows(ins):
        raise StoreError(f"instruction {ins} not available on {spec.kind}")
    if spec.kind == RB_COUNTER:
        rising, used = ph
        if ins.op == "stay":
            return ph
        wants_rising = ins.op == "push"
        if wants_rising == rising:
            return ph
        if used + 1 > spec.reversal_bound:
            raise StoreError(f"more than {spec.reversal_bound} reversals")
        return (wants_rising, used + 1)
    if spec.kind == CHECKING_STACK:
        if ins.op in MOVE_OPS:
            return "R"
        if ph == "R":
            raise StoreError("checking stack written after reading began")
        return ph
    return ph


def validate_trace(spec: StoreTypeSpec, trace: Iterable[Instruction]) -> bool:
    ph = initial_phase(spec)
    try:
        for ins in trace:
            ph = advance_phase(spec, ph, ins)
    except StoreError:
        return False
    return True


def reversals(trace: Iterable[Instruction]) -> int:
    """Count alternations between non-decreasing and non-increasing runs."""
    rising, used = True, 0
    for ins in trace:
        if ins.op == "stay":
            continue
        up = ins.op == "push"
        if up != rising:
            rising, used = up, used + 1
    return used
