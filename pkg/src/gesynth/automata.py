"""Explicit automata over finite alphabets of signal sets.

Letters are bit masks over an automaton's ``signals`` tuple; states are the
integers ``0..n-1``. Acceptance of an :class:`Nbw` is generalized Büchi: a run
is accepting when it visits every set in ``acceptance`` infinitely often (an
empty list accepts every infinite run).
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .logic import Lasso, letter_names


class AutomatonError(ValueError):
    pass


class ResourceLimit(RuntimeError):
    """A construction exceeded its configured size cap."""


MAX_SIGNALS = 8


@dataclass(eq=False)
class Nbw:
    signals: tuple[str, ...]
    n: int
    initial: frozenset[int]
    delta: tuple[dict[int, tuple[int, ...]], ...]
    acceptance: tuple[frozenset[int], ...] = ()
    labels: tuple[str, ...] | None = None
    # per-state partial valuation of signals, used to skip contradictory product pairs
    annotation: tuple[dict[str, bool], ...] | None = None

    def __post_init__(self):
        self.signals = tuple(self.signals)
        if len(self.signals) > MAX_SIGNALS:
            raise AutomatonError(f"explicit alphabets are capped at {MAX_SIGNALS} signals")
        self.initial = frozenset(self.initial)
        self.acceptance = tuple(frozenset(f) for f in self.acceptance)
        if len(self.delta) != self.n:
            raise AutomatonError("transition table size differs from state count")
        top = 1 << len(self.signals)
        for q, row in enumerate(self.delta):
            for a, succ in row.items():
                if not 0 <= a < top:
                    raise AutomatonError(f"letter {a} outside alphabet")
                if any(not 0 <= s < self.n for s in succ):
                    raise AutomatonError(f"transition of state {q} leaves the state space")
        if any(not 0 <= q < self.n for q in self.initial):
            raise AutomatonError("undeclared initial state")
        for f in self.acceptance:
            if any(not 0 <= q < self.n for q in f):
                raise AutomatonError("acceptance set mentions undeclared state")

    @property
    def letters(self) -> range:
        return range(1 << len(self.signals))

    def succ(self, q: int, a: int) -> tuple[int, ...]:
        return self.delta[q].get(a, ())

    def post(self, states: Iterable[int], a: int) -> frozenset[int]:
        out: set[int] = set()
        for q in states:
            out.update(self.delta[q].get(a, ()))
        return frozenset(out)

    def graph_succ(self, q: int) -> set[int]:
        out: set[int] = set()
        for succ in self.delta[q].values():
            out.update(succ)
        return out

    def with_initial(self, initial: Iterable[int]) -> "Nbw":
        return Nbw(self.signals, self.n, frozenset(initial), self.delta, self.acceptance,
                   self.labels, self.annotation)

    def n_transitions(self) -> int:
        return sum(len(s) for row in self.delta for s in row.values())

    def __repr__(self):
        return (f"Nbw(signals={self.signals}, states={self.n}, initial={len(self.initial)}, "
                f"acceptance_sets={len(self.acceptance)})")


@dataclass(eq=False)
class Ucw:
    """Universal co-Büchi reading of ``dual``: accepts exactly what ``dual`` rejects."""
    dual: Nbw

    @property
    def signals(self):
        return self.dual.signals


@dataclass(eq=False)
class Dfw:
    signals: tuple[str, ...]
    n: int
    initial: int
    delta: tuple[tuple[int, ...], ...]
    accepting: frozenset[int] = frozenset()
    macro: tuple | None = None  # macro-state (StateSet) behind each state, when built by subset construction

    def __post_init__(self):
        width = 1 << len(self.signals)
        for row in self.delta:
            if len(row) != width or any(not 0 <= s < self.n for s in row):
                raise AutomatonError("DFW transition function must be total")

    def run(self, word: Sequence[int]) -> int:
        s = self.initial
        for a in word:
            s = self.delta[s][a]
        return s

    def accepts(self, word: Sequence[int]) -> bool:
        return self.run(word) in self.accepting

    def is_absorbing(self) -> bool:
        return all(t in self.accepting for s in self.accepting for t in self.delta[s])

    def with_accepting(self, accepting: Iterable[int]) -> "Dfw":
        return Dfw(self.signals, self.n, self.initial, self.delta, frozenset(accepting), self.macro)

    def make_absorbing(self) -> "Dfw":
        """Redirect accepting states to an accepting sink (prefix-closed reading)."""
        acc = set(self.accepting)
        changed = True
        while changed:
            changed = False
            for s in list(acc):
                for t in self.delta[s]:
                    if t not in acc:
                        acc.add(t)
                        changed = True
        return self.with_accepting(acc)


# Basic automata ##############################################################

def universal_nbw(signals: Sequence[str]) -> Nbw:
    signals = tuple(signals)
    return Nbw(signals, 1, frozenset({0}), ({a: (0,) for a in range(1 << len(signals))},),
               (frozenset({0}),))


def empty_nbw(signals: Sequence[str]) -> Nbw:
    return Nbw(tuple(signals), 0, frozenset(), (), ())


def _require_same(a: Nbw, b: Nbw):
    if a.signals != b.signals:
        raise AutomatonError(f"alphabet mismatch: {a.signals} vs {b.signals}")


def _consistent(x: dict[str, bool] | None, y: dict[str, bool] | None) -> bool:
    if not x or not y:
        return True
    return all(y.get(k, v) == v for k, v in x.items())


def nbw_product(a: Nbw, b: Nbw, prune: bool = True) -> Nbw:
    """Intersection, keeping generalized acceptance (one product copy).

    With ``prune``, pairs whose state annotations disagree on a signal are
    dropped; such pairs have no common letter, so the language is unchanged.
    """
    _require_same(a, b)
    index: dict[tuple[int, int], int] = {}
    order: list[tuple[int, int]] = []

    def get(p):
        if p not in index:
            index[p] = len(order)
            order.append(p)
        return index[p]

    ann_a, ann_b = a.annotation, b.annotation
    use_ann = prune and ann_a is not None and ann_b is not None

    def ok(p, q):
        return not use_ann or _consistent(ann_a[p], ann_b[q])

    init = [get((p, q)) for p in sorted(a.initial) for q in sorted(b.initial) if ok(p, q)]
    delta: list[dict[int, tuple[int, ...]]] = []
    i = 0
    while i < len(order):
        p, q = order[i]
        row = {}
        da, db = a.delta[p], b.delta[q]
        for letter, sa in da.items():
            sb = db.get(letter)
            if not sb:
                continue
            succ = tuple(get((x, y)) for x in sa for y in sb if ok(x, y))
            if succ:
                row[letter] = tuple(sorted(set(succ)))
        delta.append(row)
        i += 1
    acc = tuple(frozenset(k for k, (p, _) in enumerate(order) if p in f) for f in a.acceptance)
    acc += tuple(frozenset(k for k, (_, q) in enumerate(order) if q in f) for f in b.acceptance)
    labels = None
    if a.labels is not None and b.labels is not None:
        labels = tuple(f"({a.labels[p]}, {b.labels[q]})" for p, q in order)
    ann = None
    if ann_a is not None and ann_b is not None:
        ann = tuple({**ann_a[p], **ann_b[q]} for p, q in order)
    return Nbw(a.signals, len(order), frozenset(init), tuple(delta), acc, labels, ann)


def nbw_union(parts: Sequence[Nbw]) -> Nbw:
    """Disjoint union. Components with fewer acceptance sets are padded with
    their whole state space, which leaves each component's language unchanged."""
    if not parts:
        raise AutomatonError("union of an empty list")
    for p in parts[1:]:
        _require_same(parts[0], p)
    k = max(len(p.acceptance) for p in parts)
    offset = 0
    delta: list[dict[int, tuple[int, ...]]] = []
    initial: set[int] = set()
    acc: list[set[int]] = [set() for _ in range(k)]
    labels: list[str] = []
    for ci, p in enumerate(parts):
        for row in p.delta:
            delta.append({a: tuple(s + offset for s in succ) for a, succ in row.items()})
        initial.update(q + offset for q in p.initial)
        sets = list(p.acceptance)
        if p.acceptance:
            sets += [frozenset(range(p.n))] * (k - len(sets))
        else:
            sets = [frozenset(range(p.n))] * k
        for j, f in enumerate(sets):
            acc[j].update(q + offset for q in f)
        labels.extend(f"{ci}:{p.labels[q] if p.labels else q}" for q in range(p.n))
        offset += p.n
    return Nbw(parts[0].signals, offset, frozenset(initial), tuple(delta),
               tuple(frozenset(f) for f in acc), tuple(labels))


def _letter_map(src: Sequence[str], dst: Sequence[str]) -> list[int]:
    """For each letter over ``src``, the letter over ``dst`` keeping shared signals."""
    pos = [(k, dst.index(s)) for k, s in enumerate(src) if s in dst]
    table = []
    for a in range(1 << len(src)):
        b = 0
        for k, j in pos:
            if a >> k & 1:
                b |= 1 << j
        table.append(b)
    return table


def exists_project(a: Nbw, keep: Sequence[str]) -> Nbw:
    """Existential projection onto the signals in ``keep``."""
    keep = tuple(keep)
    if not set(keep) <= set(a.signals):
        raise AutomatonError(f"{keep} is not a sub-alphabet of {a.signals}")
    table = _letter_map(a.signals, keep)
    delta = []
    for row in a.delta:
        new: dict[int, set[int]] = {}
        for letter, succ in row.items():
            new.setdefault(table[letter], set()).update(succ)
        delta.append({b: tuple(sorted(s)) for b, s in new.items()})
    ann = None
    if a.annotation is not None:
        ann = tuple({k: v for k, v in d.items() if k in keep} for d in a.annotation)
    return Nbw(keep, a.n, a.initial, tuple(delta), a.acceptance, a.labels, ann)


def cylindrify(a: Nbw, signals: Sequence[str]) -> Nbw:
    """View ``a`` over a larger alphabet; the extra signals are ignored."""
    signals = tuple(signals)
    if not set(a.signals) <= set(signals):
        raise AutomatonError(f"{a.signals} is not contained in {signals}")
    table = _letter_map(signals, a.signals)
    delta = []
    for row in a.delta:
        delta.append({b: row[table[b]] for b in range(1 << len(signals)) if table[b] in row})
    return Nbw(signals, a.n, a.initial, tuple(delta), a.acceptance, a.labels, a.annotation)


def dualize(a: Nbw) -> Ucw:
    return Ucw(a)


# Graph algorithms ############################################################

def _sccs(nodes: Iterable[int], succ: Callable[[int], Iterable[int]]) -> list[list[int]]:
    """Iterative Tarjan; returns SCCs in reverse topological order."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out: list[list[int]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            pushed = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ(w))))
                    pushed = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if pushed:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def _good_sccs(nodes, succ, acceptance: Sequence[Callable[[int], bool]]) -> list[list[int]]:
    good = []
    for comp in _sccs(nodes, succ):
        if len(comp) == 1 and comp[0] not in set(succ(comp[0])):
            continue
        if all(any(f(q) for q in comp) for f in acceptance):
            good.append(comp)
    return good


def reachable(a: Nbw, start: Iterable[int] | None = None) -> set[int]:
    seen = set(a.initial if start is None else start)
    todo = list(seen)
    while todo:
        q = todo.pop()
        for s in a.graph_succ(q):
            if s not in seen:
                seen.add(s)
                todo.append(s)
    return seen


def live_states(a: Nbw) -> frozenset[int]:
    """States with a nonempty language."""
    succ_cache = [a.graph_succ(q) for q in range(a.n)]
    accs = [f.__contains__ for f in a.acceptance]
    good = _good_sccs(range(a.n), lambda q: succ_cache[q], accs)
    pred: list[list[int]] = [[] for _ in range(a.n)]
    for q in range(a.n):
        for s in succ_cache[q]:
            pred[s].append(q)
    live = {q for comp in good for q in comp}
    todo = list(live)
    while todo:
        q = todo.pop()
        for p in pred[q]:
            if p not in live:
                live.add(p)
                todo.append(p)
    return frozenset(live)


def is_empty(a: Nbw) -> bool:
    return not (live_states(a) & a.initial)


def trim(a: Nbw) -> Nbw:
    """Restrict to states that are reachable and live."""
    keep = reachable(a) & live_states(a)
    return restrict(a, keep)


def restrict(a: Nbw, keep: Iterable[int]) -> Nbw:
    keep = sorted(set(keep))
    ren = {q: k for k, q in enumerate(keep)}
    delta = []
    for q in keep:
        row = {}
        for letter, succ in a.delta[q].items():
            s = tuple(ren[x] for x in succ if x in ren)
            if s:
                row[letter] = s
        delta.append(row)
    return Nbw(a.signals, len(keep), frozenset(ren[q] for q in a.initial if q in ren), tuple(delta),
               tuple(frozenset(ren[q] for q in f if q in ren) for f in a.acceptance),
               tuple(a.labels[q] for q in keep) if a.labels else None,
               tuple(a.annotation[q] for q in keep) if a.annotation else None)


def degeneralize(a: Nbw) -> Nbw:
    """Equivalent automaton with exactly one acceptance set."""
    if len(a.acceptance) == 1:
        return a
    if not a.acceptance:
        return Nbw(a.signals, a.n, a.initial, a.delta, (frozenset(range(a.n)),), a.labels, a.annotation)
    k = len(a.acceptance)
    index: dict[tuple[int, int], int] = {}
    order: list[tuple[int, int]] = []

    def get(p):
        if p not in index:
            index[p] = len(order)
            order.append(p)
        return index[p]

    init = [get((q, 0)) for q in sorted(a.initial)]
    delta = []
    i = 0
    while i < len(order):
        q, j = order[i]
        nj = (j + 1) % k if q in a.acceptance[j] else j
        delta.append({letter: tuple(get((s, nj)) for s in succ) for letter, succ in a.delta[q].items()})
        i += 1
    acc = frozenset(i for i, (q, j) in enumerate(order) if j == k - 1 and q in a.acceptance[k - 1])
    labels = tuple(f"{a.labels[q] if a.labels else q}#{j}" for q, j in order)
    ann = tuple(a.annotation[q] for q, _ in order) if a.annotation else None
    return Nbw(a.signals, len(order), frozenset(init), tuple(delta), (acc,), labels, ann)


def drop_trivial_acceptance(a: Nbw) -> Nbw:
    """Remove acceptance sets that contain every state lying on a cycle."""
    succ_cache = [a.graph_succ(q) for q in range(a.n)]
    cyclic = set()
    for comp in _sccs(range(a.n), lambda q: succ_cache[q]):
        if len(comp) > 1 or comp[0] in succ_cache[comp[0]]:
            cyclic.update(comp)
    acc = tuple(f for f in a.acceptance if not cyclic <= f)
    if len(acc) == len(a.acceptance):
        return a
    if not acc and a.acceptance:
        acc = (frozenset(range(a.n)),)
    return Nbw(a.signals, a.n, a.initial, a.delta, acc, a.labels, a.annotation)


# Membership and witnesses ####################################################

def lasso_member(a: Nbw, w: Lasso) -> bool:
    """Exact membership of ``u v^omega`` via the product with the lasso's loop automaton."""
    if tuple(w.signals) != a.signals:
        raise AutomatonError(f"alphabet mismatch: lasso over {w.signals}, automaton over {a.signals}")
    return _lasso_run_product(a, w, a.initial)


def _lasso_run_product(a: Nbw, w: Lasso, start: Iterable[int]) -> bool:
    m = len(w)
    letters = [w.letter(i) for i in range(m)]
    nxt = [w.nxt(i) for i in range(m)]
    nodes: set[tuple[int, int]] = set()
    todo = [(q, 0) for q in start]
    nodes.update(todo)
    while todo:
        q, i = todo.pop()
        for s in a.delta[q].get(letters[i], ()):
            node = (s, nxt[i])
            if node not in nodes:
                nodes.add(node)
                todo.append(node)

    def succ(node):
        q, i = node
        return [(s, nxt[i]) for s in a.delta[q].get(letters[i], ())]

    accs = [(lambda f: (lambda node: node[0] in f))(f) for f in a.acceptance]
    return bool(_good_sccs(list(nodes), succ, accs))


def accepted_lasso(a: Nbw) -> Lasso | None:
    """Some lasso in L(a), or None when the language is empty."""
    succ_cache = [a.graph_succ(q) for q in range(a.n)]
    good = _good_sccs(range(a.n), lambda q: succ_cache[q], [f.__contains__ for f in a.acceptance])
    if not good:
        return None
    targets = {q: comp_id for comp_id, comp in enumerate(good) for q in comp}
    # BFS over (state) with letters, from initial states
    parent: dict[int, tuple[int, int] | None] = {q: None for q in a.initial}
    queue = deque(sorted(a.initial))
    hit = None
    while queue:
        q = queue.popleft()
        if q in targets:
            hit = q
            break
        for letter, succ in sorted(a.delta[q].items()):
            for s in succ:
                if s not in parent:
                    parent[s] = (q, letter)
                    queue.append(s)
    if hit is None:
        return None
    prefix = []
    q = hit
    while parent[q] is not None:
        p, letter = parent[q]
        prefix.append(letter)
        q = p
    prefix.reverse()
    comp = set(good[targets[hit]])
    # cycle from hit through every acceptance set inside the SCC
    loop: list[int] = []
    cur = hit
    goals = [f & comp for f in a.acceptance] or [frozenset({hit})]
    for goal in goals + [frozenset({hit})]:
        path = _path_within(a, cur, goal, comp, nonempty=(goal == frozenset({hit}) and not loop))
        loop.extend(l for l, _ in path)
        if path:
            cur = path[-1][1]
    if not loop:
        path = _path_within(a, hit, frozenset({hit}), comp, nonempty=True)
        loop = [l for l, _ in path]
    return Lasso(a.signals, tuple(prefix), tuple(loop))


def _path_within(a: Nbw, src: int, goal: frozenset, comp: set, nonempty: bool) -> list[tuple[int, int]]:
    if src in goal and not nonempty:
        return []
    parent: dict[int, tuple[int, int]] = {}
    queue = deque([src])
    seen = {src} if not nonempty else set()
    while queue:
        q = queue.popleft()
        for letter, succ in sorted(a.delta[q].items()):
            for s in succ:
                if s not in comp or s in seen:
                    continue
                seen.add(s)
                parent[s] = (q, letter)
                if s in goal:
                    path = []
                    node = s
                    while True:
                        p, l = parent[node]
                        path.append((l, node))
                        node = p
                        if node == src and (not nonempty or len(path) > 0):
                            break
                    path.reverse()
                    return path
                queue.append(s)
    raise AutomatonError("no path inside SCC")


# Subset construction #########################################################

def subset_construct(a: Nbw, start: Iterable[int] | None = None, limit: int = 200_000) -> Dfw:
    """Deterministic skeleton whose states are reachable macro-states."""
    init = frozenset(a.initial if start is None else start)
    index = {init: 0}
    order = [init]
    delta = []
    i = 0
    while i < len(order):
        s = order[i]
        row = []
        for letter in a.letters:
            t = a.post(s, letter)
            if t not in index:
                index[t] = len(order)
                order.append(t)
                if len(order) > limit:
                    raise ResourceLimit(f"subset construction exceeded {limit} macro-states")
            row.append(index[t])
        delta.append(tuple(row))
        i += 1
    return Dfw(a.signals, len(order), 0, tuple(delta), frozenset(), tuple(order))


# Rank-based complementation ##################################################

def complement_nbw(a: Nbw, limit: int = 500_000) -> Nbw:
    """Rank-based complement (level rankings with ranks up to 2n, plus a breakpoint set)."""
    a = degeneralize(a)
    n = a.n
    acc = a.acceptance[0]
    top = 2 * n
    BOT = -1
    index: dict[tuple, int] = {}
    order: list[tuple] = []

    def get(state):
        if state not in index:
            index[state] = len(order)
            order.append(state)
            if len(order) > limit:
                raise ResourceLimit(f"complement exceeded {limit} states")
        return index[state]

    f0 = tuple(top if q in a.initial else BOT for q in range(n))
    init = get((f0, frozenset()))
    delta = []
    i = 0
    while i < len(order):
        f, obligation = order[i]
        row = {}
        for letter in a.letters:
            bound: dict[int, int] = {}
            for q in range(n):
                if f[q] == BOT:
                    continue
                for s in a.delta[q].get(letter, ()):
                    bound[s] = min(bound.get(s, top), f[q])
            targets = sorted(bound)
            choices = []
            for s in targets:
                opts = range(bound[s] + 1)
                if s in acc:
                    opts = [r for r in opts if r % 2 == 0]
                choices.append(list(opts))
            if obligation:
                o_succ = set()
                for q in obligation:
                    o_succ.update(a.delta[q].get(letter, ()))
            succs = []
            for ranks in itertools.product(*choices):
                g = [BOT] * n
                for s, r in zip(targets, ranks):
                    g[s] = r
                g = tuple(g)
                if obligation:
                    o2 = frozenset(s for s in o_succ if g[s] != BOT and g[s] % 2 == 0)
                else:
                    o2 = frozenset(s for s in targets if g[s] % 2 == 0)
                succs.append(get((g, o2)))
            if succs:
                row[letter] = tuple(sorted(set(succs)))
        delta.append(row)
        i += 1
    final = frozenset(k for k, (_, o) in enumerate(order) if not o)
    return Nbw(a.signals, len(order), frozenset({init}), tuple(delta), (final,))


# Profile (Ramsey) based universality and inclusion ###########################

def _bits(m: int):
    while m:
        low = m & -m
        yield low.bit_length() - 1
        m ^= low


class ProfileMonoid:
    """Transition profiles of all nonempty words.

    A profile maps each source state to the set of states reachable on the
    word and, per acceptance set, those reachable through a visit to that set.
    The word ``u v^omega`` with idempotent profile ``e`` for ``v`` is rejected
    from macro-state ``S`` iff no state of ``S`` reaches, under ``e``, a state
    with an ``e``-loop through every acceptance set; by Ramsey's theorem every
    rejected word has such a witness, which makes the check exact.
    """

    def __init__(self, a: Nbw, limit: int = 200_000):
        self.a = a
        n = a.n
        sets = list(a.acceptance) or [frozenset(range(n))]
        self.k = len(sets)
        self.n = n
        gens = []
        for letter in a.letters:
            prof = [0] * (n * (self.k + 1))
            for q in range(n):
                for s in a.delta[q].get(letter, ()):
                    prof[q] |= 1 << s
                    for j, f in enumerate(sets):
                        if s in f:
                            prof[(j + 1) * n + q] |= 1 << s
            gens.append(tuple(prof))
        self.generators = gens
        seen = set(gens)
        queue = deque(seen)
        while queue:
            p = queue.popleft()
            for g in set(gens):
                c = self.compose(p, g)
                if c not in seen:
                    seen.add(c)
                    queue.append(c)
                    if len(seen) > limit:
                        raise ResourceLimit(f"profile monoid exceeded {limit} elements")
        self.elements = seen
        self.idempotents = [e for e in seen if self.compose(e, e) == e]
        self.witness_masks = sorted({self._good_sources(e) for e in self.idempotents})

    def compose(self, g: tuple, h: tuple) -> tuple:
        n, k = self.n, self.k
        out = [0] * (n * (k + 1))
        for p in range(n):
            reach = g[p]
            if not reach:
                continue
            r = 0
            accs = [0] * k
            for q in _bits(reach):
                r |= h[q]
                for j in range(k):
                    accs[j] |= h[(j + 1) * n + q]
            for j in range(k):
                for q in _bits(g[(j + 1) * n + p]):
                    accs[j] |= h[q]
            out[p] = r
            for j in range(k):
                out[(j + 1) * n + p] = accs[j]
        return tuple(out)

    def _good_sources(self, e: tuple) -> int:
        n, k = self.n, self.k
        loops = 0
        for q in range(n):
            if all(e[(j + 1) * n + q] >> q & 1 for j in range(k)):
                loops |= 1 << q
        sources = 0
        for p in range(n):
            if e[p] & loops:
                sources |= 1 << p
        return sources

    def rejects_some_loop(self, macro_mask: int) -> bool:
        """Some ``v^omega`` (v nonempty) is rejected from every state of the macro-state."""
        return any(not macro_mask & w for w in self.witness_masks)


def _mask(states: Iterable[int]) -> int:
    m = 0
    for q in states:
        m |= 1 << q
    return m


def is_universal(a: Nbw, start: Iterable[int] | None = None, monoid: ProfileMonoid | None = None) -> bool:
    """Whether every infinite word is accepted from ``start`` (default: initial states)."""
    if not a.letters:
        return True
    monoid = monoid or ProfileMonoid(a)
    dfw = subset_construct(a, start)
    return not any(monoid.rejects_some_loop(_mask(s)) for s in dfw.macro)


def is_universal_by_complement(a: Nbw) -> bool:
    return is_empty(complement_nbw(a))


def includes(small: Nbw, big: Nbw, limit: int = 200_000) -> bool:
    """Language inclusion L(small) ⊆ L(big), decided with paired profiles."""
    _require_same(small, big)
    ma = ProfileMonoid(small, limit)
    mb = ProfileMonoid(big, limit)
    gens = list(zip(ma.generators, mb.generators))
    seen = {g for g in gens if any(g[0][:small.n])}
    queue = deque(seen)
    while queue:
        p = queue.popleft()
        for g in gens:
            c = (ma.compose(p[0], g[0]), mb.compose(p[1], g[1]))
            if c not in seen and any(c[0][:small.n]):
                seen.add(c)
                queue.append(c)
                if len(seen) > limit:
                    raise ResourceLimit("paired profile monoid too large")
    witnesses = set()
    for ea, eb in seen:
        if ma.compose(ea, ea) == ea and mb.compose(eb, eb) == eb:
            witnesses.add((ma._good_sources(ea), mb._good_sources(eb)))
    if not witnesses:
        return True
    # joint subset construction over prefixes
    start = (_mask(small.initial), _mask(big.initial))
    seen_pairs = {start}
    todo = [start]
    while todo:
        sa, sb = todo.pop()
        for wa, wb in witnesses:
            if sa & wa and not sb & wb:
                return False
        for letter in small.letters:
            na = _mask(small.post(_bits(sa), letter))
            if not na:
                continue
            nb = _mask(big.post(_bits(sb), letter))
            if (na, nb) not in seen_pairs:
                seen_pairs.add((na, nb))
                todo.append((na, nb))
    return True


# Simulation-based reduction ##################################################

def direct_simulation(a: Nbw) -> list[int]:
    """``sim[q]`` is the bit mask of states that directly simulate ``q``."""
    n = a.n
    full = (1 << n) - 1
    sim = []
    for q in range(n):
        m = full
        for f in a.acceptance:
            if q in f:
                m &= _mask(f)
        sim.append(m)
    succ_mask = [{l: _mask(s) for l, s in a.delta[q].items()} for q in range(n)]
    letters = list(a.letters)
    changed = True
    while changed:
        changed = False
        cache: dict[tuple[int, int], int] = {}

        def pre(letter, target):
            key = (letter, target)
            if key not in cache:
                m = 0
                for r in range(n):
                    if succ_mask[r].get(letter, 0) & target:
                        m |= 1 << r
                cache[key] = m
            return cache[key]

        for q in range(n):
            m = sim[q]
            for letter in letters:
                for s in a.delta[q].get(letter, ()):
                    m &= pre(letter, sim[s])
                    if not m:
                        break
            m |= 1 << q
            if m != sim[q]:
                sim[q] = m
                changed = True
    return sim


def reduce_nbw(a: Nbw) -> Nbw:
    """Trim, quotient by simulation equivalence and prune little brothers."""
    a = trim(a)
    if a.n == 0:
        return a
    sim = direct_simulation(a)
    rep = list(range(a.n))
    for q in range(a.n):
        for r in range(q):
            if sim[q] >> r & 1 and sim[r] >> q & 1:
                rep[q] = rep[r]
                break
    reps = sorted(set(rep))
    ren = {r: k for k, r in enumerate(reps)}

    def strictly_below(x, y):  # x simulated by y, not equivalent
        return sim[x] >> y & 1 and not sim[y] >> x & 1

    def prune(states):
        states = sorted({rep[s] for s in states})
        return [s for s in states if not any(strictly_below(s, t) for t in states if t != s)]

    delta = []
    for r in reps:
        row: dict[int, set[int]] = {}
        for q in range(a.n):
            if rep[q] != r:
                continue
            for letter, succ in a.delta[q].items():
                row.setdefault(letter, set()).update(succ)
        delta.append({l: tuple(ren[s] for s in prune(s)) for l, s in row.items()})
    init = [ren[s] for s in prune(a.initial)]
    acc = tuple(frozenset(ren[rep[q]] for q in f) for f in a.acceptance)
    labels = tuple(a.labels[r] for r in reps) if a.labels else None
    ann = tuple(a.annotation[r] for r in reps) if a.annotation else None
    out = Nbw(a.signals, len(reps), frozenset(init), tuple(delta), acc, labels, ann)
    return trim(out)


def describe_letter(a: Nbw | Dfw, letter: int) -> str:
    return "{" + ",".join(letter_names(letter, a.signals)) + "}"
