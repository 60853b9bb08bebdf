import random

import pytest

from fixtures import ALTERNATION, BOOLEAN_FIXTURES, NONMONOTONE, PQ, PREDICT_NEXT, SCHED, SCHEDULER, TWO_FACTORS
from formgen import all_lassos
from gesynth.automata import Nbw, empty_nbw
from gesynth.compile import (DIFFERENCE, IMPLICATION, GeSpec, build_ag, build_ge_boolean, build_ge_guarantee,
                             build_plain, build_quant_guarantee)
from gesynth.engine import (UNSAFE, CounterContext, EnvStrategy, canonical_env_strategies, check_counterstrategy,
                            counterexample, extract_transducer, find_env_counterstrategy, optimize_ag,
                            optimize_quant_guarantee,
                            search_small_transducer, solve_safety_game, synthesize, ucw_to_safety_game,
                            verify_transducer)
from gesynth.logic import TRUE, eval_lasso, parse_formula
from gesynth.transducer import Transducer, constant_transducer, run_transducer_lasso, verify_ge_on_lassos


def spec_of(text, sig=PQ):
    return build_ge_boolean(parse_formula(text, sig), sig)


def test_empty_dual_gives_a_trivial_game():
    g = ucw_to_safety_game(empty_nbw(PQ.signals), 0, PQ)
    sol = solve_safety_game(g)
    assert sol.wins(g.initial)
    assert UNSAFE not in {t for row in g.moves[g.initial] for t in row}


def test_always_rejecting_dual_is_lost_for_every_k():
    every = Nbw(PQ.signals, 1, {0}, ({a: (0,) for a in range(4)},), ({0},))
    for k in range(4):
        g = ucw_to_safety_game(every, k, PQ)
        assert not solve_safety_game(g).wins(g.initial)


def test_unsafe_sink_is_absorbing():
    g = ucw_to_safety_game(spec_of(SCHEDULER, SCHED).dual, 2, SCHED)
    assert all(t == UNSAFE for row in g.moves[UNSAFE] for t in row)


def test_scheduler_game_is_won_at_small_k():
    spec = spec_of(SCHEDULER, SCHED)
    won = []
    for k in range(5):
        g = ucw_to_safety_game(spec.dual, k, SCHED)
        won.append(solve_safety_game(g).wins(g.initial))
    assert any(won)
    # winning is monotone in k
    first = won.index(True)
    assert all(won[first:])


@pytest.mark.parametrize("sig,text", BOOLEAN_FIXTURES[:12])
def test_winning_regions_grow_with_k(sig, text):
    spec = spec_of(text, sig)
    prev = False
    for k in range(4):
        g = ucw_to_safety_game(spec.dual, k, sig)
        now = solve_safety_game(g).wins(g.initial)
        assert now or not prev
        prev = now


def test_random_playouts_stay_in_the_winning_region():
    rng = random.Random(40)
    for text in (SCHEDULER, ALTERNATION):
        sig = SCHED if text == SCHEDULER else PQ
        g = ucw_to_safety_game(spec_of(text, sig).dual, 1, sig)
        sol = solve_safety_game(g)
        assert sol.wins(g.initial)
        e = g.initial
        for _ in range(10_000):
            i = rng.randrange(1 << sig.n_in)
            e = g.moves[e][i][sol.strategy[e, i]]
            assert sol.wins(e) and e != UNSAFE


def test_extracted_transducer_is_total_and_verified():
    spec = spec_of(ALTERNATION)
    g = ucw_to_safety_game(spec.dual, 0, PQ)
    sol = solve_safety_game(g)
    for minimize in (False, True):
        t = extract_transducer(g, sol, minimize=minimize)
        assert all(len(row) == 2 for row in t.delta)
        assert verify_transducer(t, spec)


def test_scheduler_is_ge_realizable_by_granting_on_request():
    spec = spec_of(SCHEDULER, SCHED)
    v = synthesize(spec)
    assert v.status == "realizable" and v.exit_code == 0
    t = v.transducer
    assert verify_transducer(t, spec)
    assert verify_ge_on_lassos(t, spec, (2, 4)).passed
    for x in all_lassos(SCHED.inputs, 2, 4):
        w = run_transducer_lasso(t, x)
        assert all(w.letter(i) >> 1 == w.letter(i) & 1 for i in range(len(w)))


def test_predict_next_is_refuted_by_two_states():
    spec = spec_of(PREDICT_NEXT)
    v = synthesize(spec)
    assert v.status == "unrealizable" and v.exit_code == 1
    g = v.counterstrategy
    assert g.n <= 2 and check_counterstrategy(g, spec)


def test_counterstrategy_that_flips_the_output():
    spec = spec_of(PREDICT_NEXT)
    # next input is the negation of the last output
    g = EnvStrategy(PQ, 2, (0, 1), ((1, 0), (1, 0)))
    assert CounterContext.build(spec).refutes(g)
    assert check_counterstrategy(g, spec)


def test_alternation_transducer_matches_the_mirror_machine():
    spec = spec_of(ALTERNATION)
    v = synthesize(spec)
    assert v.status == "realizable"
    mirror = Transducer(PQ, 2, 0, ((0, 1), (0, 1)), (1, 0))
    assert verify_transducer(mirror, spec)
    f = parse_formula(ALTERNATION, PQ)
    for x in all_lassos(PQ.inputs, 2, 4):
        assert eval_lasso(f, run_transducer_lasso(v.transducer, x)) == \
            eval_lasso(f, run_transducer_lasso(mirror, x))


def test_game_path_agrees_with_small_search():
    for sig, text in BOOLEAN_FIXTURES:
        spec = spec_of(text, sig)
        a, b = synthesize(spec), synthesize(spec, small_states=0)
        assert a.status == b.status, text
        for v in (a, b):
            if v.transducer is not None:
                assert verify_transducer(v.transducer, spec)
            if v.counterstrategy is not None:
                assert check_counterstrategy(v.counterstrategy, spec)


def test_verify_examples():
    spec = GeSpec("boolean", PQ, empty_nbw(PQ.signals), {"psi": TRUE})
    assert verify_transducer(constant_transducer(PQ, 0), spec)
    strong = parse_formula("G (grant -> req)", SCHED)
    guard = build_quant_guarantee(strong, 1, parse_formula(SCHEDULER, SCHED), SCHED, 1)
    always = constant_transducer(SCHED, 1)
    assert not verify_transducer(always, guard)
    w = counterexample(always, guard)
    assert w is not None and eval_lasso(strong, w) == 0


def test_no_counterstrategy_for_true_or_the_scheduler():
    assert find_env_counterstrategy(spec_of("true"), 3) is None
    assert find_env_counterstrategy(spec_of(SCHEDULER, SCHED), 3) is None


def test_plain_scheduler_is_refuted_by_constant_requests():
    spec = build_plain(parse_formula(SCHEDULER, SCHED), SCHED)
    v = synthesize(spec)
    assert v.status == "unrealizable" and v.counterstrategy.n <= 2
    assert check_counterstrategy(v.counterstrategy, spec)


def test_canonical_strategy_counts():
    assert len(list(canonical_env_strategies(PQ, 1))) == 2
    # two states: state 1 must be reached from state 0 (3 rows), state 1 is free (4 rows),
    # and each of the 4 labelings is kept
    assert len(list(canonical_env_strategies(PQ, 2))) == 3 * 4 * 4


def test_small_search_prefers_the_plain_answer():
    t = search_small_transducer(spec_of("G (q <-> p)"))
    assert t is not None and t.n <= 2


def test_determinacy_smoke():
    for sig, text in BOOLEAN_FIXTURES:
        spec = spec_of(text, sig)
        v = synthesize(spec, k_max=3, m_max=2)
        g = find_env_counterstrategy(spec, 2)
        assert not (v.status == "realizable" and g is not None), text


def test_guarantee_with_true_weak_part_matches_plain():
    f = parse_formula("G (q <-> p)", PQ)
    a = synthesize(build_ge_guarantee(f, TRUE, PQ))
    assert a.status == "realizable"


def test_optimize_ag_examples():
    r = optimize_ag(TRUE, IMPLICATION, PQ)
    assert r.low == r.high == 1
    two = parse_formula(TWO_FACTORS, PQ)
    r = optimize_ag(two, DIFFERENCE, PQ)
    assert r.exact and r.low == 1
    assert verify_transducer(r.transducer, build_ag(two, DIFFERENCE, 1, PQ))
    sched = parse_formula(SCHEDULER, SCHED)
    assert optimize_ag(sched, IMPLICATION, SCHED).low == 1
    nxt = parse_formula(PREDICT_NEXT, PQ)
    r = optimize_ag(nxt, IMPLICATION, PQ)
    assert r.exact and r.low == 0


def test_verdict_json_and_exit_codes_agree():
    for text in (SCHEDULER, PREDICT_NEXT):
        sig = SCHED if text == SCHEDULER else PQ
        v = synthesize(spec_of(text, sig))
        data = v.to_json()
        assert {"realizable": 0, "unrealizable": 1, "unknown": 2}[data["verdict"]] == v.exit_code
        assert ("transducer" in data) == (v.status == "realizable")
        assert ("counterstrategy" in data) == (v.status == "unrealizable")


def test_unknown_when_bounds_are_zero():
    v = synthesize(spec_of(PREDICT_NEXT), k_max=0, m_max=0, small_states=0)
    assert v.status == "unknown" and v.exit_code == 2


def test_quant_guarantee_search_is_lexicographic():
    two = parse_formula(TWO_FACTORS, PQ)
    guard = parse_formula("G (q -> X p)", PQ)
    r = optimize_quant_guarantee(guard, two, PQ)
    # the guard forbids the risky q, so only the trivial weak threshold survives
    assert (r.v1, r.v2) == (1, 0) and r.exact
    assert verify_transducer(r.transducer, build_quant_guarantee(guard, 1, two, PQ, 0))
    r = optimize_quant_guarantee(parse_formula("G q", PQ), parse_formula(NONMONOTONE, PQ), PQ)
    assert (r.v1, r.v2) == (1, 1)
    r = optimize_quant_guarantee(parse_formula(PREDICT_NEXT, PQ), parse_formula("G F q", PQ), PQ)
    assert (r.v1, r.v2) == (0, 1)
    for v1, v2, status in r.probes:
        if (v1, v2) > (r.v1, r.v2) and v1 > r.v1:
            assert status == "unrealizable"
