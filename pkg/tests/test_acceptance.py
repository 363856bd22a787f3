"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``.  The exhaustive
sweeps (criteria 2 and 9) take a few minutes on one core.
"""

import random
import time

import pytest

from checkstack import corpus
from checkstack.decide import (
    FINITE,
    bounded_search,
    decide_lambda_dcsacm,
    decide_membership_dcsacm,
    decide_membership_kstack,
    detect_infinite_writing,
    intersection_emptiness_reduction,
    make_finals_absorbing,
    noread_dcsacm1_to_2dcm1,
    normalize_dcsacm,
)
from checkstack.machine import classify_restrictions, is_accepting, initial_configuration, step, tape
from checkstack.ncm import ncm_emptiness
from checkstack.simulator import (
    accepts_bounded,
    enumerate_accepted,
    instruction_traces,
    replay,
    run_deterministic,
    words,
)
from checkstack.stores import MOVE_OPS, validate_trace
from checkstack.transforms import (
    erase_input,
    label_determinize,
    labels_to_word,
    make_lambda_machine,
    restrict_to_lambda,
    twoway_counter_to_csacm,
    word_to_labels,
)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:>2}] {'PASS' if ok else 'FAIL'}: {detail}")

    return emit


def random_word(rng, alphabet, max_len):
    if not alphabet:
        return ()
    return tuple(rng.choice(sorted(alphabet)) for _ in range(rng.randint(0, max_len)))


def exhaustive_membership(m, oracle_id, alphabet, max_len, decide):
    bad = []
    count = 0
    for w in words(alphabet, max_len):
        count += 1
        if decide(m, w) != corpus.oracle_membership(oracle_id, w):
            bad.append("".join(w))
    return count, bad


def test_c01_example1_exact(report):
    start = time.perf_counter()
    count, bad = exhaustive_membership(corpus.example1_machine(), "example1", ("a", "#"), 12, decide_membership_dcsacm)
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 60
    report(1, ok, f"{count} words, {len(bad)} disagreements, {elapsed:.1f}s (limit 60s)")
    assert not bad, bad[:10]
    assert elapsed < 60


def test_c02_example2_exact(report):
    start = time.perf_counter()
    count, bad = exhaustive_membership(
        corpus.example2_machine(), "example2", ("a", "b", "c"), 10, decide_membership_dcsacm
    )
    report(2, not bad, f"{count} words, {len(bad)} disagreements, {time.perf_counter() - start:.1f}s")
    assert not bad, bad[:10]


def test_c03_lambda_machine_equivalence(report):
    rng = random.Random(3)
    pairs = []
    for name in ("example1", "example2", "anbncn2"):
        m = corpus.CORPUS[name]()
        for _ in range(20):
            pairs.append((m, random_word(rng, m.input_alphabet, 8)))
    for seed in range(140):
        m = corpus.random_machine(seed, "dcsacm" if seed % 2 else "dcsacm2")
        pairs.append((m, random_word(rng, m.input_alphabet, 6)))
    decisive = agree = 0
    bad = []
    for m, w in pairs:
        run = run_deterministic(m, w, 10**5)
        if run.verdict not in ("accept", "reject"):
            continue
        decisive += 1
        if decide_lambda_dcsacm(make_lambda_machine(m, w)) == run.accepted:
            agree += 1
        else:
            bad.append((m.name, w))
    report(3, not bad, f"{len(pairs)} pairs, {decisive} decisive, {len(bad)} disagreements")
    assert len(pairs) == 200
    assert not bad, bad


def test_c04_writing_engines_agree(report):
    machines = [normalize_dcsacm(corpus.infinite_writing_machine(v)) for v in range(12)]
    rng = random.Random(4)
    seed = 0
    while len(machines) < 100:
        m = corpus.random_machine(seed, "dcsacm" if seed % 2 else "dcsacm2")
        machines.append(normalize_dcsacm(make_lambda_machine(m, random_word(rng, m.input_alphabet, 4))))
        seed += 1
    bad, infinite = [], 0
    for n in machines:
        direct = detect_infinite_writing(n, "direct").verdict
        via_ncm = detect_infinite_writing(n, "ncm").verdict
        infinite += direct != FINITE
        if direct != via_ncm:
            bad.append(n.name)
    report(4, not bad and infinite >= 10, f"{len(machines)} machines, {infinite} infinite, {len(bad)} disagreements")
    assert infinite >= 10
    assert not bad, bad


def test_c05_ncm_emptiness(report):
    start = time.perf_counter()
    nonempty = replay_failures = contradictions = 0
    for seed in range(200):
        m = corpus.random_machine(seed, "ncm" if seed % 2 else "ncm1")
        v = ncm_emptiness(m)
        if not v.empty:
            nonempty += 1
            if not replay(m, v.word, v.transitions).accepted:
                replay_failures += 1
            continue
        # with counters capped at 8 the configuration space is finite, so a
        # generous depth makes each search exhaustive
        if any(accepts_bounded(m, w, 10**4, counter_cap=8).accepted for w in words(m.input_alphabet, 8)):
            contradictions += 1
    elapsed = time.perf_counter() - start
    ok = not replay_failures and not contradictions and elapsed < 300
    report(
        5,
        ok,
        f"200 machines, {nonempty} nonempty, {replay_failures} witness replay failures, "
        f"{contradictions} empty-but-BFS-witness, {elapsed:.1f}s (limit 300s)",
    )
    assert not replay_failures and not contradictions
    assert elapsed < 300


def test_c06_normal_form_preserves_lambda(report):
    rng = random.Random(6)
    bad = []
    accepted = 0
    for seed in range(100):
        m = corpus.random_machine(seed, "dcsacm" if seed % 2 else "dcsacm2")
        lam = make_lambda_machine(m, random_word(rng, m.input_alphabet, 5))
        before = decide_lambda_dcsacm(lam)
        after = decide_lambda_dcsacm(normalize_dcsacm(lam))
        accepted += before
        if before != after:
            bad.append(m.name)
    report(6, not bad, f"100 machines, {accepted} accept lambda, {len(bad)} changed by normalization")
    assert not bad, bad


# -- criterion 7 ------------------------------------------------------------

STEPS7 = 60
LEN7 = 4


def _label_transfer(m):
    lab = label_determinize(m)
    errors = []
    src = bounded_words(m)
    if src is not None:
        run = accepts_bounded(m, tuple(src), STEPS7)
        labels = word_to_labels(run.transitions(), m)
        if not accepts_bounded(lab, labels, len(labels) + 1).accepted:
            errors.append(("forward", src))
    back = bounded_search(lab, max_len=LEN7 + 2, max_steps=STEPS7)
    if back.found and not accepts_bounded(m, labels_to_word(m, back.witness), STEPS7).accepted:
        errors.append(("back", back.witness))
    return errors


def _erase_transfer(m):
    e = erase_input(m)
    lab = label_determinize(m)
    errors = []
    src = bounded_words(m)
    run = accepts_bounded(e, (), STEPS7)
    if src is not None and not run.accepted:
        errors.append(("forward", src))
    if run.accepted:
        # erase_input and label_determinize share their construction, so the
        # transition at the same index carries the source label
        labels = [lab.transitions[e.transition_number[t]].reads[0] for t in run.transitions()]
        w = labels_to_word(m, labels)
        if not accepts_bounded(m, w, STEPS7).accepted:
            errors.append(("back", w))
    return errors


def bounded_words(m):
    found = enumerate_accepted(m, LEN7, STEPS7)
    return min(found, key=len) if found else None


def _restrict_transfer(m):
    r = restrict_to_lambda(m)
    errors = []
    src = accepts_bounded(m, (), STEPS7).accepted
    got = enumerate_accepted(r, LEN7, STEPS7)
    if src and "" not in got:
        errors.append(("forward", ""))
    for w in got:
        if w != "" or not src:
            errors.append(("back", w))
    return errors


def test_c07_transforms_preserve_emptiness(report):
    violations = {}
    for name, check in (("label_determinize", _label_transfer), ("erase_input", _erase_transfer), ("restrict_to_lambda", _restrict_transfer)):
        bad = []
        for seed in range(100):
            m = corpus.random_machine(seed, "ncsacm" if seed % 2 else "dcsacm")
            errs = check(m)
            bad += [(seed, e) for e in errs]
        violations[name] = bad
    total = sum(len(v) for v in violations.values())
    detail = ", ".join(f"{k}: {len(v)} violations" for k, v in violations.items())
    nonempty = sum(bounded_words(corpus.random_machine(s, "ncsacm" if s % 2 else "dcsacm")) is not None for s in range(100))
    report(7, total == 0, f"100 machines per transform, {nonempty} with a bounded witness; {detail}")
    assert total == 0, violations


def test_c08_twoway_conversion(report):
    src = corpus.anbn_2dcm1()
    out = twoway_counter_to_csacm(src)
    bad = []
    for w in words(src.input_alphabet, 8):
        a = run_deterministic(src, w, 10**5).accepted
        b = run_deterministic(out, w, 10**5).accepted
        if a != b:
            bad.append("".join(w))
    labels = classify_restrictions(out)
    ok = not bad and "no-read/no-counter" in labels
    report(8, ok, f"511 words, {len(bad)} disagreements, labels {sorted(labels)}")
    assert not bad, bad
    assert "no-read/no-counter" in labels


def test_c09_kstack(report):
    start = time.perf_counter()
    count, bad = exhaustive_membership(
        corpus.anbncn_two_stack(), "anbncn", ("a", "b", "c"), 12, decide_membership_kstack
    )
    report(9, not bad, f"{count} words, {len(bad)} disagreements, {time.perf_counter() - start:.1f}s")
    assert not bad, bad[:10]


# -- criterion 10 -----------------------------------------------------------


def _writing_prefix(transitions, si):
    out = []
    for t in transitions:
        if t.instructions[si].op in MOVE_OPS:
            break
        out.append(t)
    return out


def _pair_labels(inst, m1, m2, w):
    """Label word of the intersection instance for a word accepted by both machines."""
    a1, a2 = make_finals_absorbing(m1), make_finals_absorbing(m2)
    si1 = [s.kind for s in m1.stores].index("checking_stack")
    si2 = [s.kind for s in m2.stores].index("checking_stack")
    runs = []
    for a, si in ((a1, si1), (a2, si2)):
        run = run_deterministic(a, w, 10**5, require_input_consumed=True)
        assert run.accepted
        runs.append(_writing_prefix(run.transitions(), si))
    sym_of = {v: k for k, v in inst.mapping.items()}
    out = []
    pos = [0, 0]
    for _letter in list(w) + [None]:
        movers = []
        for k in (0, 1):
            ts = runs[k]
            while pos[k] < len(ts) and ts[pos[k]].moves[0] == 0:
                pair = (ts[pos[k]], None) if k == 0 else (None, ts[pos[k]])
                out.append(sym_of[pair])
                pos[k] += 1
            if pos[k] < len(ts):
                movers.append(ts[pos[k]])
                pos[k] += 1
        if _letter is not None:
            out.append(sym_of[tuple(movers)])
    return tuple(out)


def test_c10_noread_reductions(report):
    bad = []
    found_both = unresolved = empty = 0
    machines = [corpus.random_machine(seed, "noread-dcsacm1") for seed in range(50)]
    si = 0
    for m in machines:
        inst = noread_dcsacm1_to_2dcm1(m)
        src = bounded_search(m, 8)
        tgt = bounded_search(inst.machine, 8)
        if src.found != tgt.found:
            bad.append((m.name, "iff", src.witness, tgt.witness))
        if tgt.found and not run_deterministic(m, inst.source_word(tgt.witness), 10**5).accepted:
            bad.append((m.name, "instance witness does not replay"))
        if src.found:
            run = run_deterministic(m, src.witness, 10**5)
            labels = word_to_labels(_writing_prefix(run.transitions(), si), m)
            if not run_deterministic(inst.machine, labels, 10**5).accepted:
                bad.append((m.name, "source witness does not replay"))
        if src.found and tgt.found:
            found_both += 1
        elif src.exhaustive and tgt.exhaustive and not src.found and not tgt.found:
            empty += 1
        else:
            unresolved += 1

    pair_bad = []
    pair_found = pair_unresolved = pair_empty = 0
    for k in range(25):
        # even k: a machine against itself, so the intersection is as rich as
        # the machine; odd k: two different machines
        m1 = machines[k]
        m2 = m1 if k % 2 == 0 else machines[(7 * k + 3) % 50]
        inst = intersection_emptiness_reduction(m1, m2)
        common = sorted(enumerate_accepted(m1, 8) & enumerate_accepted(m2, 8), key=lambda s: (len(s), s))
        tgt = bounded_search(inst.machine, 8)
        if tgt.found:
            w1, w2 = inst.component_word(tgt.witness, 0), inst.component_word(tgt.witness, 1)
            ok = w1 == w2 and run_deterministic(m1, w1).accepted and run_deterministic(m2, w2).accepted
            if not ok:
                pair_bad.append((k, "instance witness does not replay", tgt.witness))
            if not common:
                pair_bad.append((k, "iff", tgt.witness))
        if common:
            w = tuple(common[0])
            labels = _pair_labels(inst, m1, m2, w)
            if not run_deterministic(inst.machine, labels, 10**5).accepted:
                pair_bad.append((k, "source witness does not replay", w))
            if len(labels) <= 8 and not tgt.found:
                pair_bad.append((k, "iff", w))
        if common or tgt.found:
            pair_found += 1
        elif tgt.exhaustive:
            pair_empty += 1
        else:
            pair_unresolved += 1
    ok = not bad and not pair_bad
    report(
        10,
        ok,
        f"50 machines: {found_both} witnessed on both sides, {empty} with both searches exhausted, {unresolved} unresolved, "
        f"{len(bad)} violations; 25 pairs: {pair_found} witnessed, {pair_empty} exhausted, "
        f"{pair_unresolved} unresolved, {len(pair_bad)} violations",
    )
    assert not bad, bad
    assert not pair_bad, pair_bad


# -- criterion 11 -----------------------------------------------------------


def _random_run(m, w, rng, limit=300):
    tp = tape(w)
    c = initial_configuration(m)
    trans = []
    for _ in range(limit):
        if is_accepting(m, c, tp):
            return trans
        succ = step(m, tp, c)
        if not succ:
            return None
        c, t = rng.choice(succ)
        trans.append(t)
    return None


def test_c11_trace_fuzz(report):
    rng = random.Random(11)
    pool = []
    for name, build in corpus.CORPUS.items():
        m = build()
        accepted = [tuple(w) for w in sorted(enumerate_accepted(m, 6, 200))] if m.input_alphabet else [()]
        pool.append((m, accepted))
    for profile in ("dcsacm", "dcsacm2", "ncsacm", "noread-dcsacm1", "ncm", "ncm1", "kstack", "2dcm1"):
        for seed in range(10):
            pool.append((corpus.random_machine(seed, profile), []))
    runs = failures = attempts = 0
    while runs < 10_000 and attempts < 500_000:
        attempts += 1
        m, accepted = rng.choice(pool)
        if accepted and rng.random() < 0.7:
            w = rng.choice(accepted)
        else:
            w = random_word(rng, m.input_alphabet, 6)
        trans = _random_run(m, w, rng)
        if trans is None:
            continue
        runs += 1
        for spec, tr in zip(m.stores, instruction_traces(m, trans)):
            if not validate_trace(spec, tr):
                failures += 1
                break
    report(11, runs >= 10_000 and not failures, f"{runs} accepting runs ({attempts} attempts), {failures} invalid traces")
    assert runs >= 10_000
    assert failures == 0
