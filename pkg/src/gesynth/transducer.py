"""Mealy transducers, their computations on lassos, and exact value oracles."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .automata import Nbw, exists_project, lasso_member, reduce_nbw
from .compile import GeSpec, PredSpec, at_least, compile_pred_nbw, eval_comb
from .logic import (Formula, Lasso, SignalPartition, eval_lasso, format_letter, parse_letter,
                    value_set)


class TransducerError(ValueError):
    pass


@dataclass(eq=False)
class Transducer:
    """``T = <I, O, S, s0, M, tau>``: reading input ``i`` in state ``s`` moves to
    ``M(s, i)`` and emits that state's label."""
    sig: SignalPartition
    n: int
    initial: int
    delta: tuple[tuple[int, ...], ...]  # delta[s][input letter]
    label: tuple[int, ...]  # output letter per state

    def __post_init__(self):
        self.delta = tuple(tuple(r) for r in self.delta)
        self.label = tuple(self.label)
        n_in = 1 << self.sig.n_in
        if not 0 <= self.initial < self.n:
            raise TransducerError("initial state out of range")
        if len(self.delta) != self.n or len(self.label) != self.n:
            raise TransducerError("state count mismatch")
        for s, row in enumerate(self.delta):
            if len(row) != n_in:
                raise TransducerError(f"state {s}: transition function is not total over 2^I")
            if any(not 0 <= t < self.n for t in row):
                raise TransducerError(f"state {s}: transition to an undeclared state")
        if any(not 0 <= o < 1 << len(self.sig.outputs) for o in self.label):
            raise TransducerError("output label outside 2^O")

    def step(self, s: int, i: int) -> tuple[int, int]:
        t = self.delta[s][i]
        return t, self.label[t]

    def outputs(self, word: Sequence[int]) -> list[int]:
        s, out = self.initial, []
        for i in word:
            s, o = self.step(s, i)
            out.append(o)
        return out

    def __repr__(self):
        return f"Transducer(states={self.n}, inputs={self.sig.inputs}, outputs={self.sig.outputs})"


def constant_transducer(sig: SignalPartition, output: int) -> Transducer:
    return Transducer(sig, 1, 0, ((0,) * (1 << sig.n_in),), (output,))


def transducer_nbw(t: Transducer) -> Nbw:
    """Automaton whose language is the set of computations of ``t``."""
    delta = []
    for s in range(t.n):
        row = {}
        for i, nxt in enumerate(t.delta[s]):
            row[t.sig.merge(i, t.label[nxt])] = (nxt,)
        delta.append(row)
    return Nbw(t.sig.signals, t.n, frozenset({t.initial}), tuple(delta), ())


def run_transducer_lasso(t: Transducer, x: Lasso) -> Lasso:
    """The computation ``x (x) f_T(x)`` as a lasso."""
    if tuple(x.signals) != t.sig.inputs:
        raise TransducerError(f"input lasso over {x.signals}, expected {t.sig.inputs}")
    seen: dict[tuple[int, int], int] = {}
    letters: list[int] = []
    s, p = t.initial, 0
    while (s, p) not in seen:
        seen[s, p] = len(letters)
        i = x.letter(p)
        s, o = t.step(s, i)
        letters.append(t.sig.merge(i, o))
        p = x.nxt(p)
    cut = seen[s, p]
    return Lasso(t.sig.signals, tuple(letters[:cut]), tuple(letters[cut:]))


# Value oracles ###############################################################

@lru_cache(maxsize=1024)
def _projected(f: Formula, p: PredSpec, sig: SignalPartition) -> Nbw:
    a = exists_project(compile_pred_nbw(f, p, sig.signals), sig.inputs)
    return reduce_nbw(a) if a.n <= 600 else a


def hopefulness_value(f: Formula, x: Lasso, sig: SignalPartition) -> Fraction:
    """``[[x, EO.f]]``: the best value any output sequence achieves on ``x``."""
    best = Fraction(0)
    for v in value_set(f):
        if v > best and lasso_member(_projected(f, at_least(v), sig), x):
            best = v
    return best


def forall_value(f: Formula, x: Lasso, sig: SignalPartition) -> Fraction:
    """``[[x, AO.f]]``: the worst value over output sequences, as the largest u
    such that no output sequence pushes the value below u."""
    worst = Fraction(0)
    for u in value_set(f):
        if u > worst and not lasso_member(_projected(f, PredSpec("<", u), sig), x):
            worst = u
    return worst


def input_lassos(sig: SignalPartition, max_u: int, max_v: int) -> Iterable[Lasso]:
    letters = range(1 << sig.n_in)
    for lu in range(max_u + 1):
        for lv in range(1, max_v + 1):
            for u in itertools.product(letters, repeat=lu):
                for v in itertools.product(letters, repeat=lv):
                    yield Lasso(sig.inputs, u, v)


def count_input_lassos(sig: SignalPartition, max_u: int, max_v: int) -> int:
    a = 1 << sig.n_in
    return sum(a ** lu for lu in range(max_u + 1)) * sum(a ** lv for lv in range(1, max_v + 1))


@dataclass
class Violation:
    input: Lasso
    hope: Fraction
    achieved: Fraction
    detail: str = ""

    def to_json(self):
        return {"input": str(self.input), "hope": str(self.hope), "achieved": str(self.achieved),
                "detail": self.detail}


def ge_condition(spec: GeSpec, w: Lasso) -> tuple[bool, Fraction, Fraction, str]:
    """Decide whether computation ``w`` meets ``spec``, from the value oracles
    only (no use of ``spec.dual``). Returns (ok, hope, achieved, detail)."""
    sig = spec.sig
    x = w.project(sig.inputs)
    v = spec.variant
    if v in ("guarantee", "quant-guarantee"):
        strong, weak = spec.formulas["strong"], spec.formulas["weak"]
        need = Fraction(1) if v == "guarantee" else spec.bookkeeping["v1"]
        s_val = eval_lasso(strong, w)
        if s_val < need:
            return False, Fraction(0), s_val, f"strong part scored {s_val} < {need}"
        h, g = hopefulness_value(weak, x, sig), eval_lasso(weak, w)
        if v == "guarantee":
            return (h < 1 or g == 1), h, g, "weak part"
        v2 = spec.bookkeeping["v2"]
        ok = g >= h if v2 is None else (h < v2 or g >= v2)
        return ok, h, g, "weak part"
    f = spec.formulas["psi"]
    h, g = hopefulness_value(f, x, sig), eval_lasso(f, w)
    if v == "boolean":
        return (h < 1 or g == 1), h, g, ""
    if v == "threshold":
        return (h < spec.threshold or g >= spec.threshold), h, g, ""
    if v == "full":
        return g >= h, h, g, ""
    if v == "ag":
        score = eval_comb(spec.comb, h, g)
        return score >= spec.threshold, h, g, f"comb={score}"
    raise ValueError(f"unknown variant {v!r}")


@dataclass
class LassoReport:
    checked: int
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self):
        return {"checked": self.checked, "passed": self.passed,
                "violations": [v.to_json() for v in self.violations]}


def verify_ge_on_lassos(t: Transducer, spec: GeSpec, bound: tuple[int, int] = (2, 4),
                        limit: int = 200_000, stop_after: int | None = None) -> LassoReport:
    """Check every input lasso with ``|u| <= bound[0]``, ``|v| <= bound[1]``."""
    total = count_input_lassos(t.sig, *bound)
    if total > limit:
        raise TransducerError(f"bound {bound} gives {total} input lassos (limit {limit})")
    report = LassoReport(0)
    for x in input_lassos(t.sig, *bound):
        w = run_transducer_lasso(t, x)
        ok, h, g, detail = ge_condition(spec, w)
        report.checked += 1
        if not ok:
            report.violations.append(Violation(x, h, g, detail))
            if stop_after and len(report.violations) >= stop_after:
                break
    return report


# Serialization ###############################################################

def transducer_to_json(t: Transducer) -> dict:
    sig = t.sig
    return {
        "inputs": list(sig.inputs),
        "outputs": list(sig.outputs),
        "states": t.n,
        "initial": t.initial,
        "label": {str(s): format_letter(o, sig.outputs) for s, o in enumerate(t.label)},
        "delta": [{"from": s, "input": format_letter(i, sig.inputs), "to": nxt}
                  for s in range(t.n) for i, nxt in enumerate(t.delta[s])],
    }


def transducer_from_json(data: dict) -> Transducer:
    try:
        sig = SignalPartition(tuple(data["inputs"]), tuple(data["outputs"]))
        n = int(data["states"])
        label = [None] * n
        for s, o in data["label"].items():
            s = int(s)
            if not 0 <= s < n:
                raise TransducerError(f"label for undeclared state {s}")
            label[s] = parse_letter(o, sig.outputs)
        if any(o is None for o in label):
            raise TransducerError("every state needs an output label")
        table: list[dict[int, int]] = [dict() for _ in range(n)]
        for e in data["delta"]:
            s, i, to = int(e["from"]), parse_letter(e["input"], sig.inputs), int(e["to"])
            if not 0 <= s < n:
                raise TransducerError(f"transition from undeclared state {s}")
            if i in table[s] and table[s][i] != to:
                raise TransducerError(f"state {s} has two transitions on {e['input']}")
            table[s][i] = to
        width = 1 << sig.n_in
        for s, row in enumerate(table):
            if len(row) != width:
                raise TransducerError(f"state {s}: transition function is not total over 2^I")
        delta = tuple(tuple(row[i] for i in range(width)) for row in table)
        return Transducer(sig, n, int(data["initial"]), delta, tuple(label))
    except (KeyError, TypeError, AttributeError) as e:
        raise TransducerError(f"malformed transducer JSON: {e}") from e
    except ValueError as e:
        if isinstance(e, TransducerError):
            raise
        raise TransducerError(str(e)) from e


def transducer_to_dot(t: Transducer) -> str:
    sig = t.sig
    lines = ["digraph transducer {", "  rankdir=LR;", '  init [shape=point];']
    for s in range(t.n):
        lines.append(f'  s{s} [label="s{s} / {format_letter(t.label[s], sig.outputs)}"];')
    lines.append(f"  init -> s{t.initial};")
    for s in range(t.n):
        groups: dict[int, list[str]] = {}
        for i, nxt in enumerate(t.delta[s]):
            groups.setdefault(nxt, []).append(format_letter(i, sig.inputs))
        for nxt, ins in groups.items():
            lines.append(f'  s{s} -> s{nxt} [label="{" ".join(ins)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def dump_transducer(t: Transducer, path) -> None:
    with open(path, "w") as fh:
        json.dump(transducer_to_json(t), fh, indent=2)


def load_transducer(path) -> Transducer:
    with open(path) as fh:
        return transducer_from_json(json.load(fh))


# Interactive stepping ########################################################

@dataclass
class SimulationSession:
    transducer: Transducer
    monitors: list = field(default_factory=list)  # (name, Dfw) pairs over 2^I
    state: int = -1
    monitor_states: list[int] = field(default_factory=list)
    log: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if self.state < 0:
            self.reset()

    def reset(self):
        self.state = self.transducer.initial
        self.monitor_states = [d.initial for _, d in self.monitors]
        self.log = []

    def flags(self) -> dict[str, bool]:
        return {name: s in d.accepting for (name, d), s in zip(self.monitors, self.monitor_states)}


def session_advance(s: SimulationSession, letter) -> tuple[int, dict[str, bool]]:
    sig = s.transducer.sig
    if isinstance(letter, str):
        letter = parse_letter(letter, sig.inputs)
    if not 0 <= letter < 1 << sig.n_in:
        raise TransducerError(f"input letter {letter} outside 2^I")
    s.state, out = s.transducer.step(s.state, letter)
    s.monitor_states = [d.delta[q][letter] for (_, d), q in zip(s.monitors, s.monitor_states)]
    flags = s.flags()
    s.log.append({"step": len(s.log) + 1, "input": format_letter(letter, sig.inputs),
                  "output": format_letter(out, sig.outputs), "flags": flags})
    return out, flags


def replay(t: Transducer, monitors: list, letters: Sequence) -> SimulationSession:
    sess = SimulationSession(t, list(monitors))
    for a in letters:
        session_advance(sess, a)
    return sess
