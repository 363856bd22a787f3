import re

import pytest
from hypothesis import given, strategies as st

from checkstack.stores import (
    CHECKING_STACK,
    PUSHDOWN,
    STACK,
    ZB,
    ZT,
    D,
    Instruction,
    POP,
    S,
    STAY,
    StoreError,
    StoreTypeSpec,
    U,
    apply_instruction,
    checking_stack,
    counter,
    initial_config,
    parse_config,
    push,
    read_store,
    reversals,
    validate_trace,
    well_formed,
)

STACK_SPEC = StoreTypeSpec(STACK, alphabet={"a", "b"})


def run(spec, instructions):
    cfg = initial_config(spec)
    for ins in instructions:
        cfg = apply_instruction(spec, cfg, ins)
    return cfg


def test_instruction_text_round_trip():
    for text in ["push:a", "pop", "stay", "D", "S", "U"]:
        assert str(Instruction.parse(text)) == text


def test_counter_push_pop_and_read():
    spec = counter(1)
    cfg = run(spec, [push("c"), push("c"), POP])
    assert cfg.count == 1 and read_store(cfg) == "c"
    assert read_store(run(spec, [push("c"), POP])) == ZB
    with pytest.raises(StoreError):
        apply_instruction(spec, initial_config(spec), POP)


def test_stack_walks_down_and_up():
    cfg = run(STACK_SPEC, [push("a"), push("b")])
    assert cfg.word() == "Zb a b ↓ Zt"
    down = apply_instruction(STACK_SPEC, cfg, D)
    assert read_store(down) == "a"
    bottom = apply_instruction(STACK_SPEC, down, D)
    assert read_store(bottom) == ZB
    with pytest.raises(StoreError):
        apply_instruction(STACK_SPEC, bottom, D)
    top = apply_instruction(STACK_SPEC, cfg, U)
    assert read_store(top) == ZT
    with pytest.raises(StoreError):
        apply_instruction(STACK_SPEC, top, U)


def test_stack_writes_only_at_top():
    cfg = apply_instruction(STACK_SPEC, run(STACK_SPEC, [push("a")]), D)
    for ins in (push("b"), POP, STAY):
        with pytest.raises(StoreError):
            apply_instruction(STACK_SPEC, cfg, ins)


def test_checking_stack_has_no_pop():
    spec = checking_stack({"a"})
    assert not spec.allows(POP)
    assert not validate_trace(spec, [push("a"), D, push("a")])
    assert validate_trace(spec, [push("a"), STAY, D, S, U])


def test_pushdown_reads_top():
    spec = StoreTypeSpec(PUSHDOWN, alphabet={"x", "y"})
    cfg = run(spec, [push("x"), push("y"), POP])
    assert read_store(cfg) == "x"


def test_reserved_symbols_rejected():
    with pytest.raises(StoreError):
        StoreTypeSpec(CHECKING_STACK, alphabet={"Zt"})


def test_rb_counter_needs_a_bound():
    with pytest.raises(StoreError):
        StoreTypeSpec("rb_counter", 0)


def test_parse_config_round_trip():
    for word in ["Zb ↓ Zt", "Zb a ↓ b Zt", "Zb a b ↓ Zt", "Zb a b Zt ↓"]:
        cfg = parse_config(STACK_SPEC, word)
        assert cfg.word() == word
        assert well_formed(cfg)
    assert parse_config(counter(2), "Zb c c c").count == 3
    with pytest.raises(StoreError):
        parse_config(STACK_SPEC, "a ↓ Zt")


ops = st.sampled_from(["push:a", "push:b", "stay", "D", "S", "U"])


@given(st.lists(ops, max_size=12))
def test_checking_stack_language_is_write_then_read(trace):
    ins = [Instruction.parse(x) for x in trace]
    text = "".join("w" if x.startswith("push") or x == "stay" else "r" for x in trace)
    assert validate_trace(checking_stack({"a", "b"}), ins) == bool(re.fullmatch(r"w*r*", text))


@given(st.lists(ops, max_size=12))
def test_instruction_languages_are_prefix_closed(trace):
    ins = [Instruction.parse(x) for x in trace]
    spec = checking_stack({"a", "b"})
    if validate_trace(spec, ins):
        assert all(validate_trace(spec, ins[:k]) for k in range(len(ins)))


@given(st.lists(st.sampled_from(["push:c", "pop", "stay"]), max_size=14), st.integers(1, 4))
def test_reversal_bound_matches_reversal_count(trace, l):
    ins = [Instruction.parse(x) for x in trace]
    assert validate_trace(counter(l), ins) == (reversals(ins) <= l)


@given(st.lists(st.sampled_from(["push:a", "push:b", "D", "U", "S"]), max_size=10))
def test_stack_head_stays_in_range(trace):
    cfg = initial_config(STACK_SPEC)
    for x in trace:
        try:
            cfg = apply_instruction(STACK_SPEC, cfg, Instruction.parse(x))
        except StoreError:
            continue
        assert well_formed(cfg)
        assert read_store(cfg) in STACK_SPEC.read_symbols
