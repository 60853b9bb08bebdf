import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings

from formgen import all_lassos, lassos, nbws, random_lasso, random_nbw
from gesynth.automata import (AutomatonError, Nbw, accepted_lasso, complement_nbw, degeneralize, dualize,
                              empty_nbw, exists_project, includes, is_empty, is_universal,
                              is_universal_by_complement, lasso_member, live_states, nbw_product, nbw_union,
                              reachable, reduce_nbw, subset_construct, trim, universal_nbw)
from gesynth.compile import at_least, compile_pred_nbw, hope_nbw
from gesynth.logic import Lasso, SignalPartition, eval_lasso, neg, parse_formula, parse_lasso

SCHED = SignalPartition(("req",), ("grant",))
PQ = SignalPartition(("p",), ("q",))
SCHED_PSI = "G F (req & grant) & G F (!req & !grant)"


def sched():
    return parse_formula(SCHED_PSI, SCHED)


def test_product_with_universal_keeps_language():
    rng = random.Random(1)
    a = compile_pred_nbw(sched(), at_least(1), SCHED.signals)
    b = nbw_product(a, universal_nbw(SCHED.signals))
    for _ in range(50):
        w = random_lasso(rng, SCHED.signals)
        assert lasso_member(a, w) == lasso_member(b, w)


def test_product_with_itself():
    rng = random.Random(2)
    a = compile_pred_nbw(sched(), at_least(1), SCHED.signals)
    aa = nbw_product(a, a)
    for _ in range(50):
        w = random_lasso(rng, SCHED.signals)
        assert lasso_member(a, w) == lasso_member(aa, w)


def test_violating_and_hopeful_product():
    psi = sched()
    bad = nbw_product(compile_pred_nbw(neg(psi), at_least(1), SCHED.signals), hope_nbw(psi, 1, SCHED))
    never_grant = parse_lasso("(req -)", SCHED.signals)
    assert eval_lasso(psi, never_grant) == 0
    assert lasso_member(bad, never_grant)
    # the constant request input is hopeless, so it is not in the product either
    assert not lasso_member(bad, parse_lasso("(req)", SCHED.signals))
    ucw = dualize(bad)
    good = parse_lasso("(- req,grant)", SCHED.signals)
    assert eval_lasso(psi, good) == 1
    assert not lasso_member(ucw.dual, good)


def test_union_examples():
    rng = random.Random(3)
    a = compile_pred_nbw(parse_formula("G F p", PQ), at_least(1), PQ.signals)
    one = nbw_union([a])
    with_empty = nbw_union([a, empty_nbw(PQ.signals)])
    for _ in range(40):
        w = random_lasso(rng, PQ.signals)
        assert lasso_member(a, w) == lasso_member(one, w) == lasso_member(with_empty, w)


def test_full_style_union_matches_value_oracles():
    f = parse_formula("factor(1/4,p) | factor(1/2,q)", PQ)
    from gesynth.compile import build_ge_full
    from gesynth.transducer import hopefulness_value
    dual = build_ge_full(f, PQ).dual
    for w in all_lassos(PQ.signals, 1, 2):
        h = hopefulness_value(f, w.project(PQ.inputs), PQ)
        assert lasso_member(dual, w) == (eval_lasso(f, w) < h)


def test_projection_examples():
    a = compile_pred_nbw(parse_formula("G (q <-> p)", PQ), at_least(1), PQ.signals)
    proj = exists_project(a, PQ.inputs)
    assert is_universal(proj)
    rng = random.Random(4)
    from gesynth.transducer import hopefulness_value
    f = parse_formula("G (q <-> p)", PQ)
    for _ in range(20):
        assert hopefulness_value(f, random_lasso(rng, PQ.inputs), PQ) == 1
    unsat = compile_pred_nbw(parse_formula("G q & G !q", PQ), at_least(1), PQ.signals, reduce=False)
    assert is_empty(exists_project(unsat, PQ.inputs))


def test_projection_of_output_free_automaton_relabels_only():
    a = compile_pred_nbw(parse_formula("G F p", PQ), at_least(1), PQ.signals)
    proj = exists_project(a, PQ.inputs)
    for w in all_lassos(PQ.inputs, 1, 3):
        assert lasso_member(proj, w) == lasso_member(a, w.zip(Lasso(PQ.outputs, (), (0,))))


def test_dualize_universal_gives_empty_ucw():
    u = dualize(universal_nbw(("a",)))
    assert not is_empty(u.dual) and is_universal(u.dual)


def test_complement_of_trivial_automata():
    assert is_universal(complement_nbw(empty_nbw(("a",))))
    assert is_empty(complement_nbw(universal_nbw(("a",))))


def test_subset_construction_tracks_reachable_sets():
    a = compile_pred_nbw(parse_formula(SCHED_PSI, SCHED), at_least(1), SCHED.signals)
    proj = exists_project(a, SCHED.inputs)
    d = subset_construct(proj)
    assert d.n <= 2 ** proj.n
    assert all(len(row) == 2 for row in d.delta)
    for n in range(5):
        for u in itertools.product(proj.letters, repeat=n):
            states = set(proj.initial)
            for x in u:
                states = {t for s in states for t in proj.succ(s, x)}
            assert d.macro[d.run(u)] == frozenset(states)


def test_subset_construction_of_deterministic_automaton():
    det = Nbw(("a",), 2, {0}, ({0: (1,), 1: (0,)}, {0: (0,), 1: (1,)}), ({1},))
    d = subset_construct(det)
    assert sorted(d.macro) == [frozenset({0}), frozenset({1})]


def test_live_state_examples():
    assert live_states(universal_nbw(("a",))) == frozenset({0})
    f = compile_pred_nbw(parse_formula("false", PQ), at_least(1), PQ.signals, reduce=False)
    assert not live_states(f)
    g = compile_pred_nbw(parse_formula("p & X G false", PQ), at_least(1), PQ.signals, reduce=False)
    assert not (g.initial & live_states(g))


def test_emptiness_and_universality_examples():
    assert is_empty(empty_nbw(("a",))) and not is_universal(empty_nbw(("a",)))
    assert is_universal(universal_nbw(("a",)))


def test_membership_examples():
    rng = random.Random(5)
    for _ in range(10):
        assert lasso_member(universal_nbw(PQ.signals), random_lasso(rng, PQ.signals))
    f = parse_formula("factor(1/4,p) | factor(1/2,q)", PQ)
    assert lasso_member(compile_pred_nbw(f, at_least(Fraction(1, 2)), PQ.signals),
                        parse_lasso("p,q (-)", PQ.signals))


def test_malformed_automata_rejected():
    with pytest.raises(AutomatonError):
        Nbw(("a",), 1, {0}, ({0: (3,)},))
    with pytest.raises(AutomatonError):
        Nbw(("a",), 1, {0}, ({0: (0,)},), ({2},))
    with pytest.raises(AutomatonError):
        Nbw(tuple("abcdefghi"), 1, {0}, ({},))


# properties ##################################################################

@settings(max_examples=60, deadline=None)
@given(nbws(), lassos(signals=("a",)))
def test_complement_is_exact_negation(a, w):
    assert lasso_member(a, w) != lasso_member(complement_nbw(a), w)


@settings(max_examples=60, deadline=None)
@given(nbws(), nbws(), lassos(signals=("a",)))
def test_product_and_union_are_pointwise(a, b, w):
    ma, mb = lasso_member(a, w), lasso_member(b, w)
    assert lasso_member(nbw_product(a, b), w) == (ma and mb)
    assert lasso_member(nbw_product(a, b, prune=False), w) == (ma and mb)
    assert lasso_member(nbw_union([a, b]), w) == (ma or mb)


@settings(max_examples=60, deadline=None)
@given(nbws(sets=2), lassos(signals=("a",)))
def test_degeneralize_preserves_membership(a, w):
    assert lasso_member(degeneralize(a), w) == lasso_member(a, w)


@settings(max_examples=60, deadline=None)
@given(nbws(sets=2), lassos(signals=("a",)))
def test_reduce_and_trim_preserve_membership(a, w):
    m = lasso_member(a, w)
    assert lasso_member(reduce_nbw(a), w) == m
    assert lasso_member(trim(a), w) == m


@settings(max_examples=60, deadline=None)
@given(nbws(signals=("a", "b"), sets=2))
def test_witness_lasso_is_accepted(a):
    w = accepted_lasso(a)
    assert (w is None) == is_empty(a)
    if w is not None:
        assert lasso_member(a, w)


@settings(max_examples=40, deadline=None)
@given(nbws(), nbws())
def test_inclusion_matches_complement_emptiness(a, b):
    assert includes(a, b) == is_empty(nbw_product(a, complement_nbw(b)))


@settings(max_examples=40, deadline=None)
@given(nbws())
def test_universality_two_routes(a):
    u = is_universal(a)
    assert u == is_universal_by_complement(a)
    if u:
        assert all(lasso_member(a, w) for w in all_lassos(("a",), 2, 3))


@settings(max_examples=40, deadline=None)
@given(nbws(signals=("a", "b"), sets=2))
def test_live_states_have_accepting_futures(a):
    live = live_states(a)
    for q in range(a.n):
        assert (q in live) == (not is_empty(a.with_initial({q})))
    # closed: every live state has a live successor
    for q in live:
        assert a.graph_succ(q) & live
    assert reachable(a) >= set(a.initial)


@settings(max_examples=40, deadline=None)
@given(nbws(signals=("a", "b")), lassos(signals=("a",), max_u=2, max_v=2))
def test_projection_sound_on_brute_force(a, x):
    proj = exists_project(a, ("a",))
    found = False
    for u in itertools.product((0, 1), repeat=len(x.prefix)):
        for v in itertools.product((0, 1), repeat=len(x.loop)):
            if lasso_member(a, x.zip(Lasso(("b",), u, v))):
                found = True
    if found:
        assert lasso_member(proj, x)


def test_ucw_language_as_nbw_complement():
    rng = random.Random(6)
    for _ in range(10):
        a = random_nbw(rng, ("a",), n=3)
        ucw = dualize(a)
        as_nbw = complement_nbw(ucw.dual)
        for _ in range(10):
            w = random_lasso(rng, ("a",))
            assert lasso_member(as_nbw, w) == (not lasso_member(ucw.dual, w))
