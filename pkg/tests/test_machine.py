import pytest

from checkstack import corpus
from checkstack.machine import (
    D_CROSSING_CANDIDATE,
    NO_READ,
    NO_READ_NO_COUNTER,
    NO_READ_NO_DECREASE,
    MachineError,
    Transition,
    classify_restrictions,
    format_machine,
    initial_configuration,
    parse_machine,
    split_word,
    step,
    tape,
    validate_machine,
)
from checkstack.stores import POP
from checkstack.transforms import twoway_counter_to_csacm

SMALL = """\
# a one-state machine
machine tiny
mode oneway
heads 1
deterministic true
input a #
store k rb_counter:1
states q acc
initial q
final acc
trans q | a | Zb -> q | push:c | +1
trans q | a | c -> q | push:c | +1
trans q | # | c -> acc | pop | +1
"""


def test_parse_small_machine():
    m = parse_machine(SMALL)
    assert m.input_alphabet == ("a", "#")
    assert m.finals == {"acc"}
    assert len(m.transitions) == 3
    assert validate_machine(m) == []


@pytest.mark.parametrize("name", sorted(corpus.CORPUS))
def test_corpus_round_trip(name):
    m = corpus.CORPUS[name]()
    assert parse_machine(format_machine(m)) == m
    assert validate_machine(m) == []


@pytest.mark.parametrize(
    "text, line",
    [
        ("", None),
        ("mode oneway\n", 1),
        ("machine x\nmode sideways\n", 2),
        ("machine x\nheads 0\n", 2),
        ("machine x\nfrobnicate\n", 2),
        (SMALL.replace("input a #", "input a >"), 6),
        (SMALL.replace("| +1\n", "| +2\n", 1), 11),
        (SMALL.replace("push:c | +1\ntrans q | # ", "push:x | +1\ntrans q | # ", 1), 12),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(MachineError) as err:
        parse_machine(text)
    assert err.value.line == line


def test_undeclared_state_rejected():
    with pytest.raises(MachineError):
        parse_machine(SMALL.replace("final acc", "final nowhere"))


def test_non_utf8_rejected():
    with pytest.raises(MachineError):
        parse_machine(b"machine \xff\n")


def test_determinism_clash_is_reported():
    text = SMALL + "trans q | a | Zb -> acc | stay | +1\n"
    diags = validate_machine(parse_machine(text))
    assert any(d.startswith("determinism:") for d in diags)
    relaxed = parse_machine(text.replace("deterministic true", "deterministic false"))
    assert validate_machine(relaxed) == []


def test_left_move_in_oneway_machine_reported():
    text = SMALL.replace("trans q | # | c -> acc | pop | +1", "trans q | # | c -> acc | pop | -1")
    assert any(d.startswith("mode:") for d in validate_machine(parse_machine(text)))


def test_impossible_store_instruction_reported():
    m = corpus.example1_machine()
    t = m.transitions[0]
    bad = Transition(t.src, t.reads, t.store_reads, t.dst, (POP, t.instructions[1]), t.moves)
    diags = validate_machine(m.replace(transitions=(bad,) + m.transitions[1:]))
    assert any(d.startswith("instruction:") for d in diags)


def test_classify_labels():
    assert classify_restrictions(corpus.noread_corpus_machine()) == {NO_READ}
    converted = twoway_counter_to_csacm(corpus.anbn_2dcm1())
    assert {NO_READ, NO_READ_NO_DECREASE, NO_READ_NO_COUNTER} <= classify_restrictions(converted)
    assert NO_READ not in classify_restrictions(corpus.example1_machine())
    guess = corpus.ncsacm_guess_machine()
    assert D_CROSSING_CANDIDATE in classify_restrictions(guess)
    assert classify_restrictions(corpus.anbn_ncm()) == set()


def test_split_word():
    m = corpus.example1_machine()
    assert split_word(m, "aa#") == ("a", "a", "#")
    assert split_word(m, "") == ()
    labels = corpus.anbn_ncm().replace(input_alphabet=("t0", "t1"))
    assert split_word(labels, "t0 t1 t1") == ("t0", "t1", "t1")


def test_step_from_initial_configuration():
    m = corpus.example1_machine()
    c = initial_configuration(m)
    assert c.heads == (1,)
    succ = step(m, tape(("a", "#")), c)
    assert len(succ) == 1
    nc, t = succ[0]
    assert nc.heads == (2,) and nc.stores[0].content == ("a",)
