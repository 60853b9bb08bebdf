"""Bounded synthesis against the dual automaton of a specification, plus the
search for environment counterstrategies.

The system must keep every run of the dual NBW from visiting its accepting
set more than ``k`` times; tracking the maximal visit count per state turns
this into a finite safety game. An environment strategy whose computations
all lie in the dual language proves that no system can win.
"""
from __future__ import annotations

import itertools
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .automata import (Nbw, ResourceLimit, _good_sccs, accepted_lasso, degeneralize,
                       exists_project, includes, lasso_member, nbw_product, trim)
from .compile import (CombSpec, GeSpec, build_ag, build_quant_guarantee, comb_image, compile_pred_nbw,
                      hope_nbw_inputs)
from .logic import Formula, Lasso, SignalPartition, format_letter, output_order_key, value_set
from .transducer import Transducer, transducer_nbw

log = logging.getLogger(__name__)

UNSAFE = 0


# Safety games ################################################################

@dataclass(eq=False)
class SafetyGame:
    """Environment positions are counter maps; position 0 is the unsafe sink.

    ``moves[e][i][o]`` is the environment position reached from ``e`` when the
    environment plays input ``i`` and the system answers ``o``; the system
    position in between is the pair ``(e, i)``.
    """
    sig: SignalPartition
    k: int
    positions: list[tuple]
    moves: list[tuple[tuple[int, ...], ...]]
    initial: int

    @property
    def unsafe(self) -> frozenset[int]:
        return frozenset({UNSAFE})

    def __len__(self):
        return len(self.positions)


def ucw_to_safety_game(dual: Nbw, k: int, sig: SignalPartition, limit: int = 300_000) -> SafetyGame:
    """Counting construction for the universal co-Büchi automaton dual to ``dual``."""
    d = degeneralize(trim(dual)) if dual.n else dual
    rejecting = [False] * d.n
    if d.n:
        for q in d.acceptance[0]:
            rejecting[q] = True
    n_in, n_out = 1 << sig.n_in, 1 << len(sig.outputs)
    letters = [[sig.merge(i, o) for o in range(n_out)] for i in range(n_in)]
    index: dict[tuple, int] = {("unsafe",): UNSAFE}
    positions: list[tuple] = [("unsafe",)]
    moves: list = [tuple((UNSAFE,) * n_out for _ in range(n_in))]

    def get(counters: dict[int, int]) -> int:
        if any(c > k for c in counters.values()):
            return UNSAFE
        key = tuple(sorted(counters.items()))
        if key not in index:
            index[key] = len(positions)
            positions.append(key)
            moves.append(None)
            if len(positions) > limit:
                raise ResourceLimit(f"safety game for k={k} exceeded {limit} positions")
        return index[key]

    init = get({q: int(rejecting[q]) for q in d.initial})
    todo = deque([init] if init != UNSAFE else [])
    while todo:
        e = todo.popleft()
        if moves[e] is not None:
            continue
        counters = positions[e]
        row = []
        for i in range(n_in):
            col = []
            for letter in letters[i]:
                new: dict[int, int] = {}
                for q, c in counters:
                    for q2 in d.delta[q].get(letter, ()):
                        v = c + rejecting[q2]
                        if v > new.get(q2, -1):
                            new[q2] = v
                t = get(new)
                col.append(t)
                if t != UNSAFE and moves[t] is None:
                    todo.append(t)
            row.append(tuple(col))
        moves[e] = tuple(row)
    return SafetyGame(sig, k, positions, moves, init)


@dataclass
class GameSolution:
    winning: frozenset[int]  # environment positions from which the system wins
    strategy: dict[tuple[int, int], int]  # (e, i) -> output letter

    def wins(self, e: int) -> bool:
        return e in self.winning


def solve_safety_game(g: SafetyGame) -> GameSolution:
    """Environment attractor of the unsafe sink; the rest is winning for the system."""
    n = len(g.positions)
    n_in = 1 << g.sig.n_in
    n_out = 1 << len(g.sig.outputs)
    preds: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    alive = {}
    for e in range(1, n):
        for i in range(n_in):
            for o in range(n_out):
                preds[g.moves[e][i][o]].append((e, i))
            alive[e, i] = n_out
    losing = [False] * n
    losing[UNSAFE] = True
    todo = [UNSAFE]
    while todo:
        t = todo.pop()
        for e, i in preds[t]:
            if losing[e]:
                continue
            alive[e, i] -= 1
            if alive[e, i] == 0:
                losing[e] = True
                todo.append(e)
    winning = frozenset(e for e in range(n) if not losing[e])
    order = sorted(range(n_out), key=lambda o: output_order_key(o, len(g.sig.outputs)))
    strategy = {}
    for e in winning:
        for i in range(n_in):
            for o in order:
                if not losing[g.moves[e][i][o]]:
                    strategy[e, i] = o
                    break
    return GameSolution(winning, strategy)


def extract_transducer(g: SafetyGame, sol: GameSolution, minimize: bool = True) -> Transducer:
    """States: a start state plus every reachable system position ``(e, i)``,
    labelled by the chosen output."""
    sig = g.sig
    n_in = 1 << sig.n_in
    index: dict = {"start": 0}
    order: list = ["start"]
    delta: list[list[int]] = []
    label: list[int] = [0]

    def get(node):
        if node not in index:
            index[node] = len(order)
            order.append(node)
            label.append(sol.strategy[node])
        return index[node]

    k = 0
    while k < len(order):
        node = order[k]
        e = g.initial if node == "start" else g.moves[node[0]][node[1]][sol.strategy[node]]
        delta.append([get((e, i)) for i in range(n_in)])
        k += 1
    t = Transducer(sig, len(order), 0, tuple(map(tuple, delta)), tuple(label))
    return minimize_transducer(t) if minimize else t


def _moore_minimize(t: Transducer) -> Transducer:
    block = {s: t.label[s] for s in range(t.n)}
    while True:
        sig = {s: (block[s],) + tuple(block[x] for x in t.delta[s]) for s in range(t.n)}
        ids: dict[tuple, int] = {}
        new = {s: ids.setdefault(sig[s], len(ids)) for s in range(t.n)}
        if len(ids) == len(set(block.values())):
            block = new
            break
        block = new
    # renumber breadth-first from the initial state
    order = [block[t.initial]]
    rep = {block[t.initial]: t.initial}
    k = 0
    while k < len(order):
        b = order[k]
        for x in t.delta[rep[b]]:
            if block[x] not in rep:
                rep[block[x]] = x
                order.append(block[x])
        k += 1
    num = {b: j for j, b in enumerate(order)}
    delta = tuple(tuple(num[block[x]] for x in t.delta[rep[b]]) for b in order)
    label = tuple(t.label[rep[b]] for b in order)
    return Transducer(t.sig, len(order), 0, delta, label)


def minimize_transducer(t: Transducer) -> Transducer:
    """Moore minimization; the start state's own label is never emitted unless
    the start state is re-entered, so every label is tried for it when not."""
    reentered = any(t.initial in row for row in t.delta)
    if reentered:
        return _moore_minimize(t)
    best = None
    width = len(t.sig.outputs)
    for o in sorted(range(1 << width), key=lambda o: output_order_key(o, width)):
        label = list(t.label)
        label[t.initial] = o
        m = _moore_minimize(Transducer(t.sig, t.n, t.initial, t.delta, tuple(label)))
        if best is None or m.n < best.n:
            best = m
    return best


# Verification ################################################################

def verify_transducer(t: Transducer, spec: GeSpec) -> bool:
    """Exact: no computation of ``t`` lies in the dual language."""
    return counterexample(t, spec) is None


def counterexample(t: Transducer, spec: GeSpec) -> Lasso | None:
    if t.sig != spec.sig:
        raise ValueError("transducer and specification use different signal partitions")
    if spec.dual.n == 0:
        return None
    return accepted_lasso(trim(nbw_product(transducer_nbw(t), spec.dual)))


# Environment strategies ######################################################

@dataclass(eq=False)
class EnvStrategy:
    """Environment transducer: emits ``label[s]`` and moves on the system's answer."""
    sig: SignalPartition
    n: int
    label: tuple[int, ...]
    delta: tuple[tuple[int, ...], ...]  # delta[s][output letter]

    def to_nbw(self) -> Nbw:
        rows = []
        for s in range(self.n):
            rows.append({self.sig.merge(self.label[s], o): (nxt,) for o, nxt in enumerate(self.delta[s])})
        return Nbw(self.sig.signals, self.n, frozenset({0}), tuple(rows), ())

    def inputs_nbw(self) -> Nbw:
        rows = [{self.label[s]: tuple(sorted(set(self.delta[s])))} for s in range(self.n)]
        return Nbw(self.sig.inputs, self.n, frozenset({0}), tuple(rows), ())

    def respond(self, y: Lasso) -> Lasso:
        """The joint computation when the system plays the output lasso ``y``."""
        seen: dict[tuple[int, int], int] = {}
        letters = []
        s, p = 0, 0
        while (s, p) not in seen:
            seen[s, p] = len(letters)
            o = y.letter(p)
            letters.append(self.sig.merge(self.label[s], o))
            s, p = self.delta[s][o], y.nxt(p)
        cut = seen[s, p]
        return Lasso(self.sig.signals, tuple(letters[:cut]), tuple(letters[cut:]))

    def to_json(self) -> dict:
        sig = self.sig
        return {"inputs": list(sig.inputs), "outputs": list(sig.outputs), "states": self.n,
                "initial": 0,
                "label": {str(s): format_letter(i, sig.inputs) for s, i in enumerate(self.label)},
                "delta": [{"from": s, "output": format_letter(o, sig.outputs), "to": t}
                          for s in range(self.n) for o, t in enumerate(self.delta[s])]}

    def __repr__(self):
        return f"EnvStrategy(states={self.n}, label={self.label}, delta={self.delta})"


def canonical_env_strategies(sig: SignalPartition, m: int) -> Iterator[EnvStrategy]:
    """All environment strategies with exactly ``m`` reachable states, each once
    up to renaming (states numbered in breadth-first discovery order)."""
    n_out = 1 << len(sig.outputs)
    cells = m * n_out

    def tables(pos, max_seen, acc):
        if pos == cells:
            if max_seen == m - 1:
                yield tuple(tuple(acc[s * n_out:(s + 1) * n_out]) for s in range(m))
            return
        s = pos // n_out
        if s > max_seen:
            return
        remaining = cells - pos
        if m - 1 - max_seen > remaining:
            return
        for t in range(min(max_seen + 2, m)):
            acc.append(t)
            yield from tables(pos + 1, max(max_seen, t), acc)
            acc.pop()

    for delta in tables(0, 0, []):
        for label in itertools.product(range(1 << sig.n_in), repeat=m):
            yield EnvStrategy(sig, m, label, delta)


@dataclass(eq=False)
class CounterContext:
    """Precomputed automata for checking one specification's counterstrategies.

    The specification must have the shape ``C and (H -> W)``: ``C`` and ``W``
    are value predicates on computations, ``H`` a hopefulness predicate on
    inputs. A strategy ``g`` refutes it iff no computation of ``g`` meets ``C``
    and ``W`` together, and every input word ``g`` produces along a
    computation meeting ``C`` is hopeful.
    """
    sig: SignalPartition
    both: Nbw  # C and W
    strong: Nbw | None  # C, or None when trivially true
    hope: Nbw | None  # H over inputs, or None when every input qualifies
    probes: list[Lasso]

    @classmethod
    def build(cls, spec: GeSpec) -> "CounterContext | None":
        form = spec.bookkeeping.get("env_form")
        if form is None:
            return None
        cond, (wf, wp), (hf, hv) = form
        sig = spec.sig
        w = compile_pred_nbw(wf, wp, sig.signals)
        strong = None
        if cond is not None:
            strong = compile_pred_nbw(cond[0], cond[1], sig.signals)
            both = trim(nbw_product(strong, w))
        else:
            both = w
        hope = hope_nbw_inputs(hf, hv, sig)
        from .automata import is_universal
        try:
            if hope.n and hope.n <= 60 and is_universal(hope):
                hope = None
        except ResourceLimit:
            pass
        probes = [Lasso(sig.outputs, u, v) for u, v in _short_words(1 << len(sig.outputs))]
        return cls(sig, both, strong, hope, probes)

    def refutes(self, g: EnvStrategy) -> bool:
        if not _product_empty(g, self.both):
            return False
        if self.hope is None:
            return True
        if self.strong is None:
            for y in self.probes:
                x = g.respond(y).project(self.sig.inputs)
                if not lasso_member(self.hope, x):
                    return False
            src = g.inputs_nbw()
        else:
            src = trim(exists_project(trim(nbw_product(g.to_nbw(), self.strong)), self.sig.inputs))
            if src.n == 0:
                return True
        return includes(src, self.hope)


def _short_words(n_letters: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    out = []
    for lu in range(2):
        for lv in range(1, 3):
            for u in itertools.product(range(n_letters), repeat=lu):
                for v in itertools.product(range(n_letters), repeat=lv):
                    out.append((u, v))
    return out


def _product_empty(g: EnvStrategy, a: Nbw) -> bool:
    """Whether no computation of ``g`` is accepted by ``a``."""
    if a.n == 0:
        return True
    merge = g.sig.merge
    n_out = 1 << len(g.sig.outputs)
    start = [(0, q) for q in a.initial]
    seen = set(start)
    todo = list(start)
    succ_map: dict[tuple[int, int], list[tuple[int, int]]] = {}
    while todo:
        node = todo.pop()
        s, q = node
        out = []
        for o in range(n_out):
            nxt = g.delta[s][o]
            for q2 in a.delta[q].get(merge(g.label[s], o), ()):
                out.append((nxt, q2))
        succ_map[node] = out
        for x in out:
            if x not in seen:
                seen.add(x)
                todo.append(x)
    accs = [(lambda f: (lambda node: node[1] in f))(f) for f in a.acceptance]
    return not _good_sccs(list(seen), lambda node: succ_map[node], accs)


def find_env_counterstrategy(spec: GeSpec, m_max: int, m_min: int = 1,
                             ctx: CounterContext | None = None) -> EnvStrategy | None:
    ctx = ctx or CounterContext.build(spec)
    if ctx is None:
        return None
    for m in range(m_min, m_max + 1):
        for g in canonical_env_strategies(spec.sig, m):
            if ctx.refutes(g):
                return g
    return None


def check_counterstrategy(g: EnvStrategy, spec: GeSpec) -> bool:
    """Independent certificate: every computation of ``g`` is in the dual language."""
    if spec.dual.n == 0:
        return False
    return includes(trim(g.to_nbw()), spec.dual)


# Small system transducers ###################################################

def _canonical_tables(m: int, width: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    cells = m * width

    def rec(pos, max_seen, acc):
        if pos == cells:
            if max_seen == m - 1:
                yield tuple(tuple(acc[s * width:(s + 1) * width]) for s in range(m))
            return
        if pos // width > max_seen or m - 1 - max_seen > cells - pos:
            return
        for t in range(min(max_seen + 2, m)):
            acc.append(t)
            yield from rec(pos + 1, max(max_seen, t), acc)
            acc.pop()

    yield from rec(0, 0, [])


def mealy_to_transducer(sig: SignalPartition, delta, out) -> Transducer:
    """Convert a Mealy machine (``out[s][i]`` emitted on the move) into a
    transducer whose states remember the last output."""
    n_in = 1 << sig.n_in
    index: dict = {("start", 0): 0}
    order = [("start", 0)]
    rows, label = [], [0]
    k = 0
    while k < len(order):
        s = 0 if order[k][0] == "start" else order[k][0]
        row = []
        for i in range(n_in):
            node = (delta[s][i], out[s][i])
            if node not in index:
                index[node] = len(order)
                order.append(node)
                label.append(node[1])
            row.append(index[node])
        rows.append(tuple(row))
        k += 1
    return Transducer(sig, len(order), 0, tuple(rows), tuple(label))


def search_small_transducer(spec: GeSpec, max_states: int = 2, cap: int = 5_000) -> Transducer | None:
    """Try every Mealy machine with at most ``max_states`` states, smallest
    first, as long as the candidate count stays under ``cap``."""
    sig = spec.sig
    n_in, n_out = 1 << sig.n_in, 1 << len(sig.outputs)
    order = sorted(range(n_out), key=lambda o: output_order_key(o, len(sig.outputs)))
    for m in range(1, max_states + 1):
        if n_out ** (m * n_in) * m ** (m * n_in) > cap:
            break
        for delta in _canonical_tables(m, n_in):
            for outs in itertools.product(order, repeat=m * n_in):
                out = tuple(tuple(outs[s * n_in:(s + 1) * n_in]) for s in range(m))
                t = mealy_to_transducer(sig, delta, out)
                if verify_transducer(t, spec):
                    return minimize_transducer(t)
    return None


# Verdicts ####################################################################

@dataclass
class Verdict:
    status: str  # realizable, unrealizable, unknown
    transducer: Transducer | None = None
    counterstrategy: EnvStrategy | None = None
    k: int | None = None
    m: int | None = None
    k_max: int = 0
    m_max: int = 0
    notes: list[str] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def exit_code(self) -> int:
        return {"realizable": 0, "unrealizable": 1, "unknown": 2}[self.status]

    def to_json(self) -> dict:
        from .transducer import transducer_to_json
        out = {"verdict": self.status, "k": self.k, "m": self.m, "k_max": self.k_max,
               "m_max": self.m_max, "notes": self.notes, "seconds": round(self.seconds, 3)}
        if self.transducer is not None:
            out["transducer"] = transducer_to_json(self.transducer)
        if self.counterstrategy is not None:
            out["counterstrategy"] = self.counterstrategy.to_json()
        return out


def try_bound(spec: GeSpec, k: int, limit: int = 300_000) -> Transducer | None:
    game = ucw_to_safety_game(spec.dual, k, spec.sig, limit)
    sol = solve_safety_game(game)
    if not sol.wins(game.initial):
        return None
    t = extract_transducer(game, sol)
    if not verify_transducer(t, spec):
        raise AssertionError("extracted transducer failed verification")
    return t


def synthesize(spec: GeSpec, k_max: int = 8, m_max: int = 4, game_limit: int = 300_000,
               counter: bool = True, small_states: int = 2) -> Verdict:
    """Alternate bounded synthesis (k = 0, 1, ...) with counterstrategy search
    (m = 1, 2, ...); the first conclusive answer wins. Tiny transducers are
    tried first, which keeps the answers readable when one exists."""
    t0 = time.perf_counter()
    v = Verdict("unknown", k_max=k_max, m_max=m_max)
    if small_states:
        t = search_small_transducer(spec, small_states)
        if t is not None:
            v.status, v.transducer = "realizable", t
            v.notes.append(f"found among transducers with at most {small_states} states")
            v.seconds = time.perf_counter() - t0
            return v
    ctx = CounterContext.build(spec) if counter and m_max > 0 else None
    if counter and ctx is None and m_max > 0:
        v.notes.append("counterstrategy search not available for this specification shape")
    k_alive = True
    for step in range(max(k_max + 1, m_max + 1)):
        if k_alive and step <= k_max:
            try:
                t = try_bound(spec, step, game_limit)
            except ResourceLimit as e:
                v.notes.append(str(e))
                k_alive = False
                t = None
            if t is not None:
                v.status, v.transducer, v.k = "realizable", t, step
                break
        m = step + 1
        if ctx is not None and m <= m_max:
            g = find_env_counterstrategy(spec, m, m_min=m, ctx=ctx)
            if g is not None:
                v.status, v.counterstrategy, v.m = "unrealizable", g, m
                break
    v.seconds = time.perf_counter() - t0
    return v


# AG optimization #############################################################

@dataclass
class AgResult:
    low: Fraction  # largest value known realizable
    high: Fraction  # no value above this is realizable
    transducer: Transducer | None
    probes: list[tuple[Fraction, str]]

    @property
    def exact(self) -> bool:
        return self.low == self.high


def optimize_ag(f: Formula, comb: CombSpec, sig: SignalPartition, k_max: int = 8, m_max: int = 4) -> AgResult:
    """Binary search over the image of ``comb`` for the best achievable value."""
    image = comb_image(comb, value_set(f))
    probes: list[tuple[Fraction, str]] = []
    lo, hi = -1, len(image)  # image[lo] realizable, image[hi:] refuted or unknown
    best_t = None
    refuted: set[int] = set()
    while hi - lo > 1:
        mid = (lo + hi) // 2
        verdict = synthesize(build_ag(f, comb, image[mid], sig), k_max, m_max)
        probes.append((image[mid], verdict.status))
        if verdict.status == "realizable":
            lo, best_t = mid, verdict.transducer
        else:
            if verdict.status == "unrealizable":
                refuted.add(mid)
            hi = mid
    low = image[lo] if lo >= 0 else Fraction(0)
    # values are refuted upward-closed, so the first refuted index caps the answer
    cap = min(refuted) if refuted else len(image)
    high = image[cap - 1] if cap - 1 > lo else low
    return AgResult(low, high, best_t, probes)


@dataclass
class QgResult:
    v1: Fraction | None  # best threshold for the strong part, None if even 0 fails
    v2: Fraction | None  # best weak threshold given v1
    transducer: Transducer | None
    probes: list[tuple[Fraction, Fraction, str]]

    @property
    def exact(self) -> bool:
        """Every value above the reported pair was refuted, not merely left open."""
        return self.v1 is not None and all(s != "unknown" for _, _, s in self.probes)


def optimize_quant_guarantee(strong: Formula, weak: Formula, sig: SignalPartition,
                             k_max: int = 8, m_max: int = 4) -> QgResult:
    """Lexicographic search: the largest v1 for ``strong`` first, then the
    largest v2 for ``weak`` that still works next to it.

    Threshold realizability is not monotone in v2, so both scans walk the value
    sets downward instead of bisecting."""
    probes: list[tuple[Fraction, Fraction, str]] = []

    def attempt(v1, v2):
        verdict = synthesize(build_quant_guarantee(strong, v1, weak, sig, v2), k_max, m_max)
        probes.append((v1, v2, verdict.status))
        return verdict

    zero = Fraction(0)
    best_v1, best_t = None, None
    for v1 in reversed(value_set(strong)):
        verdict = attempt(v1, zero)
        if verdict.status == "realizable":
            best_v1, best_t = v1, verdict.transducer
            break
    if best_v1 is None:
        return QgResult(None, None, None, probes)
    for v2 in reversed(value_set(weak)):
        if v2 == 0:
            return QgResult(best_v1, zero, best_t, probes)
        verdict = attempt(best_v1, v2)
        if verdict.status == "realizable":
            return QgResult(best_v1, v2, verdict.transducer, probes)
    return QgResult(best_v1, zero, best_t, probes)
