"""Predicate automata for formulas and the specification automata of each
good-enough synthesis variant.

Every variant is represented by its *dual* NBW: the set of computations that
violate the variant's requirement. The specification itself is the universal
co-Büchi reading of that automaton.
"""
from __future__ import annotations

import itertools
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

from .automata import (Nbw, Ucw, cylindrify, dualize, empty_nbw, exists_project, nbw_product,
                       nbw_union, reduce_nbw, trim)
from .logic import (ONE, TRUE, ZERO, Apply, Atom, Const, Eventually, Formula, Globally, Next,
                    SignalPartition, Until, closure, is_boolean, pretty, value_set)

_CMP = {">=": operator.ge, ">": operator.gt, "<=": operator.le, "<": operator.lt, "=": operator.eq}


@dataclass(frozen=True)
class PredSpec:
    comparator: str
    bound: Fraction

    def __post_init__(self):
        if self.comparator not in _CMP:
            raise ValueError(f"unknown comparator {self.comparator!r}")
        object.__setattr__(self, "bound", Fraction(self.bound))
        if not ZERO <= self.bound <= ONE:
            raise ValueError(f"bound {self.bound} outside [0,1]")

    def holds(self, value: Fraction) -> bool:
        return _CMP[self.comparator](value, self.bound)

    def __str__(self):
        return f"{self.comparator}{self.bound}"


def at_least(v) -> PredSpec:
    return PredSpec(">=", Fraction(v))


def below(v) -> PredSpec:
    return PredSpec("<", Fraction(v))


# Value-annotated tableau #####################################################

_TEMPORAL = (Next, Until, Globally, Eventually)


@dataclass(eq=False)
class Tableau:
    """All states of the value-annotated tableau of a formula.

    A state fixes the truth of each atom of the formula and a value for each
    temporal subformula; the values of the remaining subformulas follow. Each
    state reads only letters agreeing with its atoms and moves to the states
    whose values are consistent with the one-step unfolding of its temporal
    subformulas. One Büchi set per Until/F/G subformula rules out claims that
    are never settled.
    """
    formula: Formula
    signals: tuple[str, ...]
    nbw: Nbw  # no initial states; compile_pred_nbw picks them
    values: list[Fraction]  # value of the root formula in each state


@lru_cache(maxsize=256)
def tableau(f: Formula, signals: tuple[str, ...]) -> Tableau:
    nodes = closure(f)
    pos = {g: k for k, g in enumerate(nodes)}
    used = sorted({g.name for g in nodes if isinstance(g, Atom)}, key=signals.index)
    for a in used:
        if a not in signals:
            raise ValueError(f"atom {a!r} is not a declared signal")
    temporal = [g for g in nodes if isinstance(g, _TEMPORAL)]

    def evaluate(bits, tvals):
        vals: list[Fraction | None] = [None] * len(nodes)
        tv = dict(zip(temporal, tvals))
        for k, g in enumerate(nodes):
            if isinstance(g, Const):
                vals[k] = ONE if g.value else ZERO
            elif isinstance(g, Atom):
                vals[k] = ONE if bits[used.index(g.name)] else ZERO
            elif isinstance(g, Apply):
                vals[k] = g.op(*(vals[pos[a]] for a in g.args))
            else:
                vals[k] = tv[g]
        return tuple(vals)

    states = []
    for bits in itertools.product((0, 1), repeat=len(used)):
        for tvals in itertools.product(*(value_set(t) for t in temporal)):
            states.append((bits, evaluate(bits, tvals)))

    def key(vals):
        out = []
        for t in temporal:
            out.append(vals[pos[t.arg]] if isinstance(t, Next) else vals[pos[t]])
        return tuple(out)

    by_key: dict[tuple, list[int]] = {}
    for k, (_, vals) in enumerate(states):
        by_key.setdefault(key(vals), []).append(k)

    def allowed(t, vals):
        claim = vals[pos[t]]
        if isinstance(t, Next):
            return [claim]
        cands = value_set(t)
        if isinstance(t, Until):
            l, r = vals[pos[t.left]], vals[pos[t.right]]
            return [c for c in cands if max(r, min(l, c)) == claim]
        x = vals[pos[t.arg]]
        if isinstance(t, Eventually):
            return [c for c in cands if max(x, c) == claim]
        return [c for c in cands if min(x, c) == claim]

    sig_index = [signals.index(a) for a in used]
    free = [k for k in range(len(signals)) if k not in sig_index]

    def letters_of(bits):
        base = sum(1 << j for j, b in zip(sig_index, bits) if b)
        out = []
        for extra in itertools.product((0, 1), repeat=len(free)):
            out.append(base | sum(1 << j for j, b in zip(free, extra) if b))
        return out

    delta = []
    for bits, vals in states:
        succ = []
        for combo in itertools.product(*(allowed(t, vals) for t in temporal)):
            succ.extend(by_key.get(tuple(combo), ()))
        succ_t = tuple(sorted(succ))
        delta.append({a: succ_t for a in letters_of(bits)} if succ_t else {})

    acceptance = []
    for t in temporal:
        if isinstance(t, Next):
            continue
        if isinstance(t, Until):
            sel = lambda v, t=t: v[pos[t]] <= v[pos[t.right]]
        elif isinstance(t, Eventually):
            sel = lambda v, t=t: v[pos[t]] <= v[pos[t.arg]]
        else:
            sel = lambda v, t=t: v[pos[t]] >= v[pos[t.arg]]
        acceptance.append(frozenset(k for k, (_, vals) in enumerate(states) if sel(vals)))

    labels = tuple(
        ",".join(a if b else "!" + a for a, b in zip(used, bits)) + "|" +
        ",".join(str(vals[pos[t]]) for t in temporal)
        for bits, vals in states)
    annotation = tuple({a: bool(b) for a, b in zip(used, bits)} for bits, _ in states)
    nbw = Nbw(signals, len(states), frozenset(), tuple(delta), tuple(acceptance), labels, annotation)
    root = pos[f]
    return Tableau(f, signals, nbw, [vals[root] for _, vals in states])


def compile_pred_nbw(f: Formula, p: PredSpec, signals: Sequence[str], reduce: bool = True) -> Nbw:
    """NBW over 2^signals accepting exactly the words w with [[w, f]] satisfying ``p``."""
    tab = tableau(f, tuple(signals))
    init = [k for k, v in enumerate(tab.values) if p.holds(v)]
    a = trim(tab.nbw.with_initial(init))
    return _cached_reduce(a) if reduce else a


def _cached_reduce(a: Nbw) -> Nbw:
    return reduce_nbw(a) if a.n <= 600 else a


def hope_nbw(f: Formula, v, sig: SignalPartition) -> Nbw:
    """Input words that are v-hopeful, read over the joint alphabet."""
    proj = exists_project(compile_pred_nbw(f, at_least(v), sig.signals), sig.inputs)
    return cylindrify(_cached_reduce(proj), sig.signals)


@lru_cache(maxsize=512)
def hope_nbw_inputs(f: Formula, v, sig: SignalPartition) -> Nbw:
    return _cached_reduce(exists_project(compile_pred_nbw(f, at_least(v), sig.signals), sig.inputs))


# Comb functions ##############################################################

@dataclass(frozen=True)
class CombSpec:
    kind: str  # impl, diff, ratio, factor, table
    weight: Fraction | None = None
    table: tuple[tuple[tuple[Fraction, Fraction], Fraction], ...] | None = None

    KINDS = ("impl", "diff", "ratio", "factor", "table")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown comb kind {self.kind!r}")
        if self.kind == "factor" and (self.weight is None or not ZERO <= self.weight <= ONE):
            raise ValueError("factor comb needs a weight in [0,1]")
        if self.kind == "table" and self.table is None:
            raise ValueError("table comb needs an explicit map")

    @classmethod
    def from_table(cls, entries: Mapping[tuple, object]) -> "CombSpec":
        items = tuple(sorted(((Fraction(a), Fraction(g)), Fraction(v)) for (a, g), v in entries.items()))
        return cls("table", table=items)

    def __str__(self):
        if self.kind == "factor":
            return f"factor:{self.weight}"
        return self.kind


IMPLICATION = CombSpec("impl")
DIFFERENCE = CombSpec("diff")
RATIO = CombSpec("ratio")


class CombError(ValueError):
    pass


def eval_comb(comb: CombSpec, a, g) -> Fraction:
    """Score the pair (hopefulness level a, achieved value g), with a >= g."""
    a, g = Fraction(a), Fraction(g)
    if a < g:
        raise CombError(f"comb is defined only for a >= g, got a={a}, g={g}")
    if comb.kind == "impl":
        return max(1 - a, g)
    if comb.kind == "diff":
        return 1 - (a - g)
    if comb.kind == "ratio":
        return ONE if a == 0 else g / a
    if comb.kind == "factor":
        return max(comb.weight * (1 - a), g)
    for key, v in comb.table:
        if key == (a, g):
            return v
    raise CombError(f"comb table has no entry for ({a}, {g})")


def comb_pairs(values: Sequence[Fraction]) -> list[tuple[Fraction, Fraction]]:
    return [(a, g) for a in values for g in values if a >= g]


def check_comb(comb: CombSpec, values: Sequence[Fraction]):
    """Raise CombError naming a pair that breaks the monotonicity requirements."""
    pairs = comb_pairs(values)
    score = {}
    for a, g in pairs:
        s = eval_comb(comb, a, g)
        if not ZERO <= s <= ONE:
            raise CombError(f"comb({a},{g}) = {s} outside [0,1]")
        score[a, g] = s
    for (a, g), s in score.items():
        for (a2, g2), s2 in score.items():
            if a2 == a and g2 > g and s2 < s:
                raise CombError(f"comb not monotone in its second argument at ({a},{g}) vs ({a2},{g2})")
            if g2 == g and a2 > a and s2 > s:
                raise CombError(f"comb not antitone in its first argument at ({a},{g}) vs ({a2},{g2})")


def comb_image(comb: CombSpec, values: Sequence[Fraction]) -> list[Fraction]:
    return sorted({eval_comb(comb, a, g) for a, g in comb_pairs(values)})


# Specifications of the synthesis variants ####################################

@dataclass(eq=False)
class GeSpec:
    """A synthesis target: a computation is acceptable iff ``dual`` rejects it."""
    variant: str  # boolean, guarantee, threshold, full, ag, quant-guarantee
    sig: SignalPartition
    dual: Nbw
    formulas: dict[str, Formula] = field(default_factory=dict)
    threshold: Fraction | None = None
    comb: CombSpec | None = None
    bookkeeping: dict = field(default_factory=dict)

    @property
    def ucw(self) -> Ucw:
        return dualize(self.dual)

    @property
    def boolean(self) -> bool:
        return self.variant in ("boolean", "guarantee")

    def describe(self) -> str:
        parts = [f"{k}={pretty(v)}" for k, v in self.formulas.items()]
        if self.threshold is not None:
            parts.append(f"v={self.threshold}")
        if self.comb is not None:
            parts.append(f"comb={self.comb}")
        return f"{self.variant}(" + ", ".join(parts) + ")"


def _require_boolean(f: Formula):
    if not is_boolean(f):
        raise ValueError(f"formula uses quality operators beyond the Boolean ones: {pretty(f)}")


def _threshold_dual(f: Formula, v: Fraction, sig: SignalPartition) -> Nbw:
    low = compile_pred_nbw(f, below(v), sig.signals)
    if low.n == 0:
        return low
    return trim(nbw_product(low, hope_nbw(f, v, sig)))


def build_ge_boolean(f: Formula, sig: SignalPartition) -> GeSpec:
    _require_boolean(f)
    dual = _threshold_dual(f, ONE, sig)
    return GeSpec("boolean", sig, dual, {"psi": f},
                  bookkeeping={"env_form": (None, (f, at_least(ONE)), (f, ONE))})


def build_ge_guarantee(strong: Formula, weak: Formula, sig: SignalPartition) -> GeSpec:
    _require_boolean(strong)
    _require_boolean(weak)
    parts = [compile_pred_nbw(strong, below(ONE), sig.signals), _threshold_dual(weak, ONE, sig)]
    dual = trim(nbw_union(parts))
    form = ((strong, at_least(ONE)), (weak, at_least(ONE)), (weak, ONE))
    return GeSpec("guarantee", sig, dual, {"strong": strong, "weak": weak},
                  bookkeeping={"env_form": form})


def build_ge_threshold(f: Formula, v, sig: SignalPartition) -> GeSpec:
    v = Fraction(v)
    return GeSpec("threshold", sig, _threshold_dual(f, v, sig), {"psi": f}, threshold=v,
                  bookkeeping={"env_form": (None, (f, at_least(v)), (f, v))})


def build_ge_full(f: Formula, sig: SignalPartition) -> GeSpec:
    values = [v for v in value_set(f) if v > 0]
    parts = [_threshold_dual(f, v, sig) for v in values]
    dual = trim(nbw_union(parts)) if parts else empty_nbw(sig.signals)
    book = {"values": values}
    if len(values) == 1:
        book["env_form"] = (None, (f, at_least(values[0])), (f, values[0]))
    return GeSpec("full", sig, dual, {"psi": f}, bookkeeping=book)


def build_ag(f: Formula, comb: CombSpec, v, sig: SignalPartition) -> GeSpec:
    v = Fraction(v)
    values = value_set(f)
    check_comb(comb, values)
    good = [(a, g) for a, g in comb_pairs(values) if eval_comb(comb, a, g) >= v]
    bad = [(a, g) for a, g in comb_pairs(values) if eval_comb(comb, a, g) < v]
    parts = []
    for a, g in bad:
        low = compile_pred_nbw(f, PredSpec("<=", g), sig.signals)
        if low.n == 0:
            continue
        parts.append(trim(nbw_product(hope_nbw(f, a, sig), low)))
    parts = [p for p in parts if p.n]
    dual = trim(nbw_union(parts)) if parts else empty_nbw(sig.signals)
    book = {"good_pairs": good, "bad_pairs": bad}
    if len(bad) == 1:
        a, g = bad[0]
        book["env_form"] = (None, (f, PredSpec(">", g)), (f, a))
    return GeSpec("ag", sig, dual, {"psi": f}, threshold=v, comb=comb, bookkeeping=book)


def build_quant_guarantee(strong: Formula, v1, weak: Formula, sig: SignalPartition, v2=None) -> GeSpec:
    """``strong`` must score at least ``v1``; ``weak`` is handled by the threshold
    variant at ``v2``, or by the full variant when ``v2`` is None."""
    v1 = Fraction(v1)
    inner = build_ge_full(weak, sig) if v2 is None else build_ge_threshold(weak, v2, sig)
    parts = [p for p in (compile_pred_nbw(strong, below(v1), sig.signals), inner.dual) if p.n]
    dual = trim(nbw_union(parts)) if parts else empty_nbw(sig.signals)
    book = {"v1": v1, "v2": None if v2 is None else Fraction(v2)}
    inner_form = inner.bookkeeping.get("env_form")
    if inner_form is not None:
        book["env_form"] = (None if v1 == 0 else (strong, at_least(v1)),) + inner_form[1:]
    return GeSpec("quant-guarantee", sig, dual, {"strong": strong, "weak": weak}, threshold=v1,
                  bookkeeping=book)


def build_plain(f: Formula, sig: SignalPartition) -> GeSpec:
    """Ordinary realizability of a Boolean formula (guarantee with a trivial weak part)."""
    return build_ge_guarantee(f, TRUE, sig)
