"""The ten acceptance criteria, each reported as one PASS/FAIL line."""
import itertools
import random
from fractions import Fraction
from pathlib import Path

from acceptance_log import criterion
from fixtures import (ALTERNATION, BOOLEAN_FIXTURES, NONMONOTONE, P2Q, PQ, PREDICT_NEXT, SCHED, SCHEDULER,
                      TWO_FACTORS)
from formgen import all_lassos, random_formula, random_lasso, random_nbw
from gesynth.automata import complement_nbw, is_universal, is_universal_by_complement, lasso_member
from gesynth.cli import run_command
from gesynth.compile import IMPLICATION, PredSpec, build_ag, build_ge_boolean, build_ge_threshold, build_plain, \
    compile_pred_nbw
from gesynth.engine import check_counterstrategy, synthesize, verify_transducer
from gesynth.logic import Lasso, eval_lasso, neg, parse_formula, value_set
from gesynth.monitors import COLORS, MonitorKind, build_monitor
from gesynth.transducer import Transducer, forall_value, ge_condition, hopefulness_value, run_transducer_lasso, \
    verify_ge_on_lassos
from monitor_oracle import mismatches, prefixes

F = Fraction
SPECS = Path(__file__).resolve().parent.parent / "specs"


def test_c1_scheduler_is_ge_realizable_but_not_realizable():
    with criterion(1, "scheduler: GE-realizable, plainly unrealizable, transducer verified"):
        f = parse_formula(SCHEDULER, SCHED)
        spec = build_ge_boolean(f, SCHED)
        v = synthesize(spec)
        assert v.status == "realizable", v.status
        assert verify_transducer(v.transducer, spec)
        assert verify_ge_on_lassos(v.transducer, spec, (2, 4)).passed
        plain = build_plain(f, SCHED)
        p = synthesize(plain)
        assert p.status == "unrealizable", p.status
        assert p.counterstrategy.n <= 2 and check_counterstrategy(p.counterstrategy, plain)


def test_c2_alternation_matches_the_two_state_machine():
    with criterion(2, "alternation: realizable, behaves like the two-state machine on (2,4) lassos"):
        f = parse_formula(ALTERNATION, PQ)
        v = synthesize(build_ge_boolean(f, PQ))
        assert v.status == "realizable", v.status
        # emit q exactly when the last input was !p
        mirror = Transducer(PQ, 2, 0, ((0, 1), (0, 1)), (1, 0))
        checked = 0
        for x in all_lassos(PQ.inputs, 2, 4):
            a = eval_lasso(f, run_transducer_lasso(v.transducer, x))
            b = eval_lasso(f, run_transducer_lasso(mirror, x))
            assert a == b, str(x)
            checked += 1
        assert checked == 7 * 30


def test_c3_predicting_the_next_input_is_refuted():
    with criterion(3, "next-input prediction: refuted by <= 2 states, never green up to length 6"):
        f = parse_formula(PREDICT_NEXT, PQ)
        spec = build_ge_boolean(f, PQ)
        v = synthesize(spec)
        assert v.status == "unrealizable", v.status
        assert v.counterstrategy.n <= 2 and check_counterstrategy(v.counterstrategy, spec)
        green = build_monitor(f, MonitorKind("green"), PQ)
        assert not any(green.accepts(x) for x in prefixes(PQ, 6))


def _good_by_definition(achieved, forall_neg, v):
    return achieved >= v or forall_neg > 1 - v


def test_c4_first_letter_cases_of_two_factors():
    with criterion(4, "two-factor formula: the four first-letter cases, exact"):
        f = parse_formula(TWO_FACTORS, PQ)
        half, quarter = F(1, 2), F(1, 4)
        expected = {
            (0, 0): (F(0), lambda v: v == 0 or v > half),
            (0, 1): (half, lambda v: True),
            (1, 0): (quarter, lambda v: v <= quarter or v > half),
            (1, 1): (half, lambda v: True),
        }
        points = sorted(set(value_set(f)) | {F(1)})
        probes = sorted(set(points) | {(a + b) / 2 for a, b in zip(points, points[1:])})
        assert len(probes) == 7
        for (x0, y0), (achieved, good) in expected.items():
            x = Lasso(PQ.inputs, (x0,), (0,))
            w = x.zip(Lasso(PQ.outputs, (y0,), (0,)))
            assert eval_lasso(f, w) == achieved
            forall_neg = forall_value(neg(f), x, PQ)
            assert forall_neg == half
            for v in probes:
                by_definition = _good_by_definition(achieved, forall_neg, v)
                assert by_definition == good(v), (x0, y0, v)
                assert ge_condition(build_ge_threshold(f, v, PQ), w)[0] == good(v), (x0, y0, v)


def test_c5_hopefulness_is_dual_to_universal_value():
    with criterion(5, "exists/forall duality on 200 formulas x 5 lassos"):
        rng = random.Random(501)
        for k in range(200):
            sig = (PQ, P2Q)[k % 2]
            f = random_formula(rng, sig.signals, 3)
            for _ in range(5):
                x = random_lasso(rng, sig.inputs)
                assert hopefulness_value(f, x, sig) == 1 - forall_value(neg(f), x, sig), (str(x), k)


def test_c6_predicate_automata_match_the_evaluator():
    with criterion(6, "predicate automata vs evaluator on 200 triples x 4 comparators"):
        rng = random.Random(601)
        for _ in range(200):
            f = random_formula(rng, PQ.signals, 3)
            v = rng.choice(value_set(f))
            w = random_lasso(rng, PQ.signals)
            val = eval_lasso(f, w)
            for cmp in (">=", "<", "<=", ">"):
                p = PredSpec(cmp, v)
                assert lasso_member(compile_pred_nbw(f, p, PQ.signals), w) == p.holds(val), (cmp, v, str(w))


def test_c7_threshold_good_enough_is_not_monotone():
    with criterion(7, "non-monotone threshold: realizable at 1, refuted at 1/2"):
        spec_file = str(SPECS / "nonmonotone.spec")
        assert run_command(["synth", spec_file, "--threshold", "1"]) == 0
        assert run_command(["synth", spec_file, "--threshold", "1/2"]) == 1
        f = parse_formula(NONMONOTONE, PQ)
        one = synthesize(build_ge_threshold(f, 1, PQ))
        assert one.status == "realizable"
        spec = build_ge_threshold(f, F(1, 2), PQ)
        v = synthesize(spec)
        # the environment must see the first output before choosing the second input
        assert v.status == "unrealizable" and v.counterstrategy.n == 2
        assert check_counterstrategy(v.counterstrategy, spec)
        # every way of choosing the first output from the first input loses on some input
        for table in itertools.product((0, 1), repeat=2):
            beaten = False
            for x0, x1 in itertools.product((0, 1), repeat=2):
                x = Lasso(PQ.inputs, (x0, x1), (0,))
                w = x.zip(Lasso(PQ.outputs, (table[x0], 0), (0,)))
                if not ge_condition(spec, w)[0]:
                    assert hopefulness_value(f, x, PQ) >= F(1, 2) > eval_lasso(f, w)
                    beaten = True
            assert beaten, table


def test_c8_implication_comb_agrees_with_boolean_ge():
    with criterion(8, "implication comb at 1 agrees with Boolean GE on 20 fixtures"):
        assert len(BOOLEAN_FIXTURES) == 20
        for sig, text in BOOLEAN_FIXTURES:
            f = parse_formula(text, sig)
            a = synthesize(build_ag(f, IMPLICATION, 1, sig))
            b = synthesize(build_ge_boolean(f, sig))
            assert a.status == b.status != "unknown", text


def test_c9_monitors_are_absorbing_and_match_brute_force():
    with criterion(9, "monitors: absorbing, brute-force agreement up to length 3 on 20 formulas"):
        rng = random.Random(901)
        for k in range(20):
            f = random_formula(rng, PQ.signals, 2)
            for v in value_set(f):
                if v == 0:
                    continue
                for color in COLORS:
                    assert build_monitor(f, MonitorKind(color, v), PQ).is_absorbing()
                bad = mismatches(f, PQ, v, 3)
                assert not bad, (k, str(v), bad[:3])


def test_c10_complement_and_universality():
    with criterion(10, "complement and universality on 100 random NBWs x 20 lassos"):
        rng = random.Random(1001)
        exhaustive = list(all_lassos(("a",), 2, 4))
        for _ in range(100):
            a = random_nbw(rng, ("a",), n=rng.randint(1, 3), density=rng.choice((.3, .5, .7)))
            comp = complement_nbw(a)
            for _ in range(20):
                w = random_lasso(rng, ("a",), max_u=3, max_v=4)
                assert lasso_member(a, w) != lasso_member(comp, w), str(w)
            u = is_universal(a)
            assert u == is_universal_by_complement(a)
            if u:
                assert all(lasso_member(a, w) for w in exhaustive)
