"""Green, red and blue prefix monitors over input words.

For a threshold v:

* green@v: some output prefix leaves a residual in which every input
  continuation is v-hopeful (the light-green approximation of green);
* red@v: no continuation, with any outputs, scores v or more;
* blue@v: some output prefix makes every continuation score at least v.

All three are DFAs over 2^I whose accepting states are absorbing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .automata import Dfw, Nbw, ProfileMonoid, _mask, exists_project, live_states, subset_construct
from .compile import at_least, below, compile_pred_nbw, hope_nbw_inputs
from .logic import Formula, SignalPartition, format_letter, pretty

COLORS = ("green", "red", "blue")


@dataclass(frozen=True)
class MonitorKind:
    color: str
    v: Fraction = Fraction(1)

    def __post_init__(self):
        if self.color not in COLORS:
            raise ValueError(f"unknown monitor color {self.color!r}")
        object.__setattr__(self, "v", Fraction(self.v))
        if not 0 < self.v <= 1:
            raise ValueError(f"monitor threshold must lie in (0,1], got {self.v}")

    @property
    def name(self) -> str:
        return f"{self.color}@{self.v}"


def _backward_closure(d: Dfw, targets: set[int]) -> set[int]:
    preds: list[set[int]] = [set() for _ in range(d.n)]
    for s, row in enumerate(d.delta):
        for t in row:
            preds[t].add(s)
    seen = set(targets)
    todo = list(targets)
    while todo:
        t = todo.pop()
        for s in preds[t]:
            if s not in seen:
                seen.add(s)
                todo.append(s)
    return seen


def universal_macros(h: Nbw, macros) -> set[frozenset[int]]:
    """The macro-states of ``h`` from which every infinite word is accepted."""
    monoid = ProfileMonoid(h)
    index: dict[frozenset[int], int] = {}
    order: list[frozenset[int]] = []
    for m in macros:
        if m not in index:
            index[m] = len(order)
            order.append(m)
    succ: list[list[int]] = []
    k = 0
    while k < len(order):
        row = []
        for a in h.letters:
            t = h.post(order[k], a)
            if t not in index:
                index[t] = len(order)
                order.append(t)
            row.append(index[t])
        succ.append(row)
        k += 1
    d = Dfw(h.signals, len(order), 0, tuple(map(tuple, succ)))
    bad = {j for j, m in enumerate(order) if monoid.rejects_some_loop(_mask(m))}
    not_universal = _backward_closure(d, bad)
    return {m for m in index if index[m] not in not_universal}


def green_monitor(f: Formula, v, sig: SignalPartition, close: bool = True) -> Dfw:
    """Light v-green prefixes: some output prefix leaves a residual in which
    every input continuation is v-hopeful.

    Level one is the subset construction of the joint predicate automaton;
    level two tracks, per input prefix, the level-one states of all output
    prefixes. The empty word is classified by unfolding one step: it is green
    iff every one-letter input is. With ``close`` the accepting set is made
    absorbing, as a raised flag stays up.
    """
    a = compile_pred_nbw(f, at_least(v), sig.signals)
    first = subset_construct(a)
    good = universal_macros(exists_project(a, sig.inputs), first.macro)
    green1 = frozenset(s for s, m in enumerate(first.macro) if m in good)
    n_out = 1 << len(sig.outputs)
    START = "start"
    index: dict = {START: 0}
    order: list = [START]
    delta = []
    k = 0
    while k < len(order):
        cur = (first.initial,) if order[k] == START else order[k]
        row = []
        for i in range(1 << sig.n_in):
            nxt = frozenset(first.delta[s][sig.merge(i, o)] for s in cur for o in range(n_out))
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row.append(index[nxt])
        delta.append(tuple(row))
        k += 1
    accepting = {j for j, cur in enumerate(order) if cur != START and cur & green1}
    d = Dfw(sig.inputs, len(order), 0, tuple(delta), frozenset(accepting), tuple(order))
    if close:
        d = d.make_absorbing()
    if all(t in d.accepting for t in d.delta[0]):
        d = d.with_accepting(d.accepting | {0})
    return d


def red_monitor(f: Formula, v, sig: SignalPartition) -> Dfw:
    hope = hope_nbw_inputs(f, Fraction(v), sig)
    d = subset_construct(hope)
    live = live_states(hope)
    return d.with_accepting(s for s, macro in enumerate(d.macro) if not macro & live)


def blue_monitor(f: Formula, v, sig: SignalPartition) -> Dfw:
    low = compile_pred_nbw(f, below(v), sig.signals)
    first = subset_construct(low)
    live = live_states(low)
    blue = frozenset(s for s, macro in enumerate(first.macro) if not macro & live)
    n_out = 1 << len(sig.outputs)
    init = frozenset({first.initial})
    index = {init: 0}
    order = [init]
    delta = []
    k = 0
    while k < len(order):
        cur = order[k]
        row = []
        for i in range(1 << sig.n_in):
            nxt = frozenset(first.delta[s][sig.merge(i, o)] for s in cur for o in range(n_out))
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row.append(index[nxt])
        delta.append(tuple(row))
        k += 1
    accepting = frozenset(j for j, cur in enumerate(order) if cur & blue)
    return Dfw(sig.inputs, len(order), 0, tuple(delta), accepting, tuple(order))


_BUILDERS = {"green": green_monitor, "red": red_monitor, "blue": blue_monitor}


def build_monitor(f: Formula, kind: MonitorKind, sig: SignalPartition) -> Dfw:
    d = _BUILDERS[kind.color](f, kind.v, sig)
    if not d.is_absorbing():
        raise AssertionError(f"{kind.name} monitor is not absorbing")
    return d


@dataclass(eq=False)
class MonitorBundle:
    formula: Formula
    sig: SignalPartition
    monitors: list[tuple[MonitorKind, Dfw]] = field(default_factory=list)

    @classmethod
    def build(cls, f: Formula, sig: SignalPartition, kinds: Sequence[MonitorKind]) -> "MonitorBundle":
        return cls(f, sig, [(k, build_monitor(f, k, sig)) for k in kinds])

    def named(self) -> list[tuple[str, Dfw]]:
        return [(k.name, d) for k, d in self.monitors]

    def to_json(self) -> dict:
        return {"formula": pretty(self.formula), "inputs": list(self.sig.inputs),
                "monitors": [dict(kind=k.name, **dfw_to_json(d)) for k, d in self.monitors]}


def run_monitors(b: MonitorBundle, prefix: Sequence[int]) -> dict[str, bool]:
    width = 1 << b.sig.n_in
    if any(not 0 <= a < width for a in prefix):
        raise ValueError("prefix letter outside 2^I")
    return {k.name: d.accepts(prefix) for k, d in b.monitors}


def dfw_to_json(d: Dfw) -> dict:
    return {"alphabet": [format_letter(a, d.signals) for a in range(1 << len(d.signals))],
            "states": d.n, "initial": d.initial, "accepting": sorted(d.accepting),
            "transitions": [{"from": s, "letter": format_letter(a, d.signals), "to": t}
                            for s, row in enumerate(d.delta) for a, t in enumerate(row)]}


def dfw_to_dot(d: Dfw, name: str = "monitor") -> str:
    lines = [f'digraph "{name}" {{', "  rankdir=LR;", "  init [shape=point];"]
    for s in range(d.n):
        shape = "doublecircle" if s in d.accepting else "circle"
        lines.append(f"  q{s} [shape={shape}];")
    lines.append(f"  init -> q{d.initial};")
    for s, row in enumerate(d.delta):
        groups: dict[int, list[str]] = {}
        for a, t in enumerate(row):
            groups.setdefault(t, []).append(format_letter(a, d.signals))
        for t, ls in groups.items():
            lines.append(f'  q{s} -> q{t} [label="{" ".join(ls)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
