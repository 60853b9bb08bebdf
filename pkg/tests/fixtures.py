"""Named formulas reused across suites."""
from gesynth.logic import SignalPartition

PQ = SignalPartition(("p",), ("q",))
SCHED = SignalPartition(("req",), ("grant",))
P2Q = SignalPartition(("p", "r"), ("q",))

SCHEDULER = "G F (req & grant) & G F (!req & !grant)"
PREDICT_NEXT = "G ((X p) <-> q)"
ALTERNATION = "G F ((X p) & q) & G F ((X !p) & !q)"
NONMONOTONE = "(q & X p) | factor(1/2, !q & X !p)"
TWO_FACTORS = "factor(1/4,p) | factor(1/2,q)"

# (signals, formula) pairs in the Boolean fragment
BOOLEAN_FIXTURES = [
    (SCHED, SCHEDULER),
    (PQ, PREDICT_NEXT),
    (PQ, ALTERNATION),
    (PQ, "G (q <-> p)"),
    (PQ, "G (q -> p)"),
    (PQ, "G F q"),
    (PQ, "G F p"),
    (PQ, "G (p -> F q)"),
    (PQ, "F G p -> F G q"),
    (PQ, "G (p -> X q)"),
    (PQ, "G F p -> G F q"),
    (PQ, "G (q -> X !q) & G F q"),
    (PQ, "G (p U q)"),
    (PQ, "F (p & q)"),
    (PQ, "G ((X q) <-> p)"),
    (PQ, "G F p & G q"),
    (PQ, "G (q <-> F p)"),
    (PQ, "false"),
    (PQ, "true"),
    (P2Q, "G ((p & r) -> q) & G (q -> (p | r))"),
]
