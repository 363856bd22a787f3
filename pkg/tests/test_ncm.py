import pytest
from hypothesis import given, settings, strategies as st

from checkstack import corpus
from checkstack.corpus import T
from checkstack.errors import ResourceError, SignatureError
from checkstack.machine import make_machine
from checkstack.ncm import (
    FlowSystem,
    build_flow_system,
    ncm_emptiness,
    ncm_membership,
    solve_flow,
    to_phase_automaton,
)
from checkstack.simulator import accepts_bounded, enumerate_accepted, replay, traces_valid, words
from checkstack.stores import counter


def ncm(ts, finals=("acc",), alphabet=("a", "b"), l=1, k=1):
    return make_machine("t", [counter(l)] * k, ts, "q0", set(finals), alphabet)


def test_solve_trivial_systems():
    one = FlowSystem(["x"])
    one.add_eq({0: 1}, 1)
    assert solve_flow(one).assignment == [1]
    parity = FlowSystem(["x", "y"])
    parity.add_eq({0: 1, 1: -1}, 0)
    parity.add_eq({0: 1, 1: 1}, 1)
    assert not solve_flow(parity).feasible


def test_dump_is_one_constraint_per_line():
    fs = FlowSystem(["x", "y"])
    fs.add_eq({0: 1, 1: -2}, 0)
    fs.add_ge({1: 1}, 3)
    lines = fs.dump().splitlines()
    assert lines[1:] == ["+ 1*x - 2*y = 0", "+ 1*y >= 3"]


def test_size_budget_raises():
    fs = FlowSystem([f"x{i}" for i in range(50)])
    with pytest.raises(ResourceError):
        solve_flow(fs, budget=10)


def test_connectivity_branching_rejects_detached_cycle():
    # source s -> t directly, plus a cycle u <-> v that would pay for the balance row
    fs = FlowSystem(["st", "uv", "vu"], source="s")
    fs.edges = {0: ("s", "t"), 1: ("u", "v"), 2: ("v", "u")}
    fs.add_eq({0: 1}, 1)
    fs.add_eq({1: 1, 2: -1}, 0)
    fs.add_ge({1: 1}, 1)
    assert not solve_flow(fs).feasible
    fs.edges[0] = ("s", "u")
    fs.add_eq({0: 1}, 1)
    assert solve_flow(fs).feasible


def test_single_accepting_transition_forces_its_variable():
    m = ncm([T("q0", "a", "Zb", "acc", "stay", "+1")])
    fs = build_flow_system(to_phase_automaton(m))
    res = solve_flow(fs)
    assert res.feasible and sum(res.assignment) >= 1
    zero = [0] * len(fs.variables)
    assert not fs.satisfied_by(zero)


def test_increment_without_pop_is_infeasible_at_zero():
    m = corpus.inc_then_zero_ncm()
    fs = build_flow_system(to_phase_automaton(m), end_zero=True)
    assert not solve_flow(fs).feasible


def test_anbn_minimal_flow_uses_each_loop_once():
    m = corpus.anbn_ncm()
    v = ncm_emptiness(m)
    assert not v.empty and v.word == ("a", "b")
    # brute force over a, b counts <= 4 agrees that "ab" is the shortest member
    shortest = min((w for w in words(["a", "b"], 4) if accepts_bounded(m, w, 50).accepted), key=len)
    assert v.word == shortest


def test_empty_verdicts():
    assert ncm_emptiness(corpus.inc_then_zero_ncm()).empty
    assert ncm_emptiness(corpus.anbn_ncm().replace(finals=frozenset())).empty


def test_membership():
    m = corpus.anbn_ncm()
    assert ncm_membership(m, tuple("aabb"))
    assert not ncm_membership(m, tuple("aab"))
    assert not ncm_membership(m, ())


def test_rejects_other_store_kinds():
    with pytest.raises(SignatureError):
        ncm_emptiness(corpus.example1_machine())


def test_three_reversals_become_two_counters():
    m = ncm([T("q0", "a", "Zb", "acc", "push:c", "+1")], l=3)
    p = to_phase_automaton(m)
    assert [s.reversal_bound for s in p.stores] == [1, 1]


def test_push_after_pop_unreachable_with_one_reversal():
    ts = [
        T("q0", "a", "Zb", "q1", "push:c", "+1"),
        T("q1", "b", "c", "q2", "pop", "+1"),
        T("q2", "a", "Zb", "q3", "push:c", "+1"),
        T("q3", "b", "c", "acc", "pop", "+1"),
        T("q2", ">", "Zb", "acc", "stay", "0"),
    ]
    m = ncm(ts)
    p = to_phase_automaton(m)
    assert enumerate_accepted(p, 6) == enumerate_accepted(m, 6) == {"ab"}


def test_identity_on_one_reversal_machine():
    m = corpus.anbn_ncm()
    p = to_phase_automaton(m)
    assert len(p.stores) == 1 and len(p.transitions) == len(m.transitions)


@pytest.mark.parametrize("seed", range(40))
def test_phase_automaton_preserves_small_language(seed):
    m = corpus.random_machine(seed, "ncm")
    assert enumerate_accepted(to_phase_automaton(m), 4, 40) == enumerate_accepted(m, 4, 40)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_witnesses_replay(seed):
    m = corpus.random_machine(seed, "ncm1")
    v = ncm_emptiness(m)
    if not v.empty:
        run = replay(m, v.word, v.transitions)
        assert run.accepted and traces_valid(m, v.transitions)


def test_lambda_membership_matches_bfs():
    for seed in range(30):
        m = corpus.random_machine(seed, "ncm")
        assert ncm_membership(m, ()) == accepts_bounded(m, (), 60, counter_cap=20).accepted
