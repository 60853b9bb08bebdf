import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from formgen import lassos, random_formula, random_lasso
from gesynth.compile import build_ge_boolean, build_ge_full
from gesynth.logic import TRUE, Lasso, SignalPartition, eval_lasso, neg, parse_formula, parse_lasso
from gesynth.monitors import MonitorKind, build_monitor
from gesynth.transducer import (Transducer, TransducerError, constant_transducer, forall_value,
                                hopefulness_value, replay, run_transducer_lasso, session_advance,
                                SimulationSession, transducer_from_json, transducer_to_dot, transducer_to_json,
                                verify_ge_on_lassos)

F = Fraction
PQ = SignalPartition(("p",), ("q",))
SCHED = SignalPartition(("req",), ("grant",))
SCHED_PSI = "G F (req & grant) & G F (!req & !grant)"
ALTERNATION = "G F ((X p) & q) & G F ((X !p) & !q)"
TWO = "factor(1/4,p) | factor(1/2,q)"


def mirror_transducer():
    """Two states: after p emit nothing, after !p emit q."""
    return Transducer(PQ, 2, 0, ((0, 1), (0, 1)), (1, 0))


def test_constant_transducer_run():
    t = constant_transducer(PQ, 1)
    x = Lasso(PQ.inputs, (1,), (0, 1, 1))
    w = run_transducer_lasso(t, x)
    assert len(w.loop) == 3
    assert all(a >> 1 == 1 for a in w.prefix + w.loop)


def test_mirror_transducer_on_alternating_input():
    x = parse_lasso("(p -)", PQ.inputs)
    w = run_transducer_lasso(mirror_transducer(), x)
    outs = [w.letter(i) >> 1 for i in range(6)]
    ins = [w.letter(i) & 1 for i in range(6)]
    assert ins == [1, 0, 1, 0, 1, 0]
    assert outs == [0, 1, 0, 1, 0, 1]


def test_run_projects_back_to_input():
    rng = random.Random(30)
    t = mirror_transducer()
    for _ in range(30):
        x = random_lasso(rng, PQ.inputs)
        xi = run_transducer_lasso(t, x).project(PQ.inputs)
        assert [xi.letter(i) for i in _positions(xi, 40)] == [x.letter(i) for i in _positions(x, 40)]


@settings(max_examples=80, deadline=None)
@given(lassos(signals=("p",), max_u=3, max_v=4), st.integers(0, 2 ** 8 - 1))
def test_run_agrees_with_step_simulation(x, code):
    delta = ((code & 1, code >> 1 & 1), (code >> 2 & 1, code >> 3 & 1))
    t = Transducer(PQ, 2, 0, delta, (code >> 4 & 1, code >> 5 & 1))
    w = run_transducer_lasso(t, x)
    steps = 3 * (len(x.prefix) + len(x.loop) * t.n)
    ins = [x.letter(i) for i in _positions(x, steps)]
    outs = t.outputs(ins)
    word = [w.letter(i) for i in _positions(w, steps)]
    assert word == [PQ.merge(i, o) for i, o in zip(ins, outs)]


def _positions(w, n):
    i, out = 0, []
    for _ in range(n):
        out.append(i)
        i = w.nxt(i)
    return out


def test_hopefulness_examples():
    f = parse_formula(SCHED_PSI, SCHED)
    assert hopefulness_value(f, parse_lasso("(req -)", SCHED.inputs), SCHED) == 1
    assert hopefulness_value(f, parse_lasso("(req)", SCHED.inputs), SCHED) == 0
    two = parse_formula(TWO, PQ)
    assert hopefulness_value(two, parse_lasso("(-)", PQ.inputs), PQ) == F(1, 2)


def test_verify_on_lassos_examples():
    f = parse_formula(ALTERNATION, PQ)
    report = verify_ge_on_lassos(mirror_transducer(), build_ge_full(f, PQ), (2, 4))
    assert report.passed and report.checked == 7 * 30
    sched = parse_formula(SCHED_PSI, SCHED)
    always = constant_transducer(SCHED, 1)
    bad = verify_ge_on_lassos(always, build_ge_boolean(sched, SCHED), (2, 4))
    assert not bad.passed
    assert any(str(v.input) == "(req -)" and v.hope == 1 and v.achieved == 0 for v in bad.violations)
    assert verify_ge_on_lassos(always, build_ge_boolean(TRUE, SCHED)).passed
    with pytest.raises(TransducerError):
        verify_ge_on_lassos(always, build_ge_boolean(TRUE, SCHED), (10, 12))


def test_first_letter_cases_of_two_factors():
    """The four first-letter cases of factor(1/4,p) | factor(1/2,q)."""
    two = parse_formula(TWO, PQ)
    expected = {(0, 0): F(0), (0, 1): F(1, 2), (1, 0): F(1, 4), (1, 1): F(1, 2)}
    for (x0, y0), achieved in expected.items():
        x = Lasso(PQ.inputs, (x0,), (0,))
        w = x.zip(Lasso(PQ.outputs, (y0,), (0,)))
        assert eval_lasso(two, w) == achieved
        assert forall_value(neg(two), x, PQ) == F(1, 2)
        assert hopefulness_value(two, x, PQ) == F(1, 2)


def test_forall_and_hopefulness_are_dual():
    rng = random.Random(31)
    for _ in range(40):
        f = random_formula(rng, ("p", "q"), 2)
        x = random_lasso(rng, PQ.inputs)
        assert hopefulness_value(f, x, PQ) == 1 - forall_value(neg(f), x, PQ)


def test_json_round_trip():
    t = mirror_transducer()
    data = json.loads(json.dumps(transducer_to_json(t)))
    back = transducer_from_json(data)
    assert (back.n, back.initial, back.delta, back.label, back.sig) == (t.n, t.initial, t.delta, t.label, t.sig)
    assert "s0 -> s1" in transducer_to_dot(t)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3).flatmap(lambda n: st.tuples(
    st.just(n), st.lists(st.integers(0, n - 1), min_size=2 * n, max_size=2 * n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n), st.integers(0, n - 1))))
def test_json_round_trip_property(args):
    n, flat, label, init = args
    delta = tuple(tuple(flat[2 * s:2 * s + 2]) for s in range(n))
    t = Transducer(PQ, n, init, delta, tuple(label))
    back = transducer_from_json(transducer_to_json(t))
    assert (back.delta, back.label, back.initial) == (t.delta, t.label, t.initial)


def test_json_rejects_bad_machines():
    good = transducer_to_json(mirror_transducer())
    partial = dict(good, delta=good["delta"][:-1])
    with pytest.raises(TransducerError):
        transducer_from_json(partial)
    wide = dict(good, label={"0": "q,r", "1": "-"})
    with pytest.raises(Exception):
        transducer_from_json(wide)
    with pytest.raises(TransducerError):
        Transducer(PQ, 1, 0, ((0, 0),), (2,))
    with pytest.raises(TransducerError):
        Transducer(PQ, 1, 0, ((0, 1),), (0,))
    with pytest.raises(TransducerError):
        transducer_from_json({"inputs": ["p"]})


def test_session_tracks_requests_and_replays():
    sched = parse_formula(SCHED_PSI, SCHED)
    grant_on_req = Transducer(SCHED, 2, 0, ((0, 1), (0, 1)), (0, 1))
    red = build_monitor(sched, MonitorKind("red", 1), SCHED)
    sess = SimulationSession(grant_on_req, [("red@1", red)])
    outs = [session_advance(sess, a)[0] for a in ("-", "req", "-")]
    assert outs == [0, 1, 0]
    x = Lasso(SCHED.inputs, (0, 1, 0), (0,))
    w = run_transducer_lasso(grant_on_req, x)
    assert outs == [w.letter(i) >> 1 for i in range(3)]
    again = replay(grant_on_req, [("red@1", red)], ["-", "req", "-"])
    assert again.log == sess.log and again.state == sess.state
    assert again.monitor_states == sess.monitor_states


def test_red_flag_persists():
    p = parse_formula("p", PQ)
    t = constant_transducer(PQ, 0)
    sess = SimulationSession(t, [("red@1", build_monitor(p, MonitorKind("red", 1), PQ))])
    flags = [session_advance(sess, a)[1]["red@1"] for a in ("-", "p", "p", "-")]
    assert flags == [True] * 4


def test_session_rejects_bad_letters():
    sess = SimulationSession(mirror_transducer())
    with pytest.raises(Exception):
        session_advance(sess, "r")
    with pytest.raises(TransducerError):
        session_advance(sess, 5)
