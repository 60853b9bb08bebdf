"""Formulas of LTL with quality operators, their parser and exact lasso semantics.

Satisfaction values are exact :class:`fractions.Fraction` instances. Boolean
LTL is the fragment whose quality operators are ``!``, ``&``, ``|`` and ``->``.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


class FormulaError(ValueError):
    """Raised for malformed formulas, unknown signals or bad constants."""

    def __init__(self, message: str, pos: int | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


# Signals and letters ########################################################

@dataclass(frozen=True)
class SignalPartition:
    """Ordered, disjoint input and output signal names.

    Letters are encoded as bit masks over ``signals`` (inputs first), so an
    input letter ``i`` and output letter ``o`` merge into ``i | o << len(inputs)``.
    """
    inputs: tuple[str, ...]
    outputs: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        names = self.inputs + self.outputs
        if len(set(names)) != len(names):
            raise FormulaError(f"signals must be distinct and inputs/outputs disjoint: {names}")

    @property
    def signals(self) -> tuple[str, ...]:
        return self.inputs + self.outputs

    @property
    def n_in(self) -> int:
        return len(self.inputs)

    def input_letters(self) -> range:
        return range(1 << len(self.inputs))

    def output_letters(self) -> range:
        return range(1 << len(self.outputs))

    def joint_letters(self) -> range:
        return range(1 << len(self.signals))

    def merge(self, i: int, o: int) -> int:
        return i | (o << len(self.inputs))

    def split(self, letter: int) -> tuple[int, int]:
        return letter & ((1 << len(self.inputs)) - 1), letter >> len(self.inputs)


def letter_names(letter: int, signals: Sequence[str]) -> list[str]:
    return [s for k, s in enumerate(signals) if letter >> k & 1]


def letter_from_names(names: Iterable[str], signals: Sequence[str]) -> int:
    index = {s: k for k, s in enumerate(signals)}
    letter = 0
    for name in names:
        if name not in index:
            raise FormulaError(f"unknown signal {name!r}; expected one of {list(signals)}")
        letter |= 1 << index[name]
    return letter


def format_letter(letter: int, signals: Sequence[str]) -> str:
    return "{" + ",".join(letter_names(letter, signals)) + "}"


def parse_letter(text: str, signals: Sequence[str]) -> int:
    """Parse ``req,grant``, ``{req,grant}``, ``{}`` or ``-`` into a letter."""
    text = text.strip()
    if text.startswith("{") and text.endswith("}"):
        text = text[1:-1]
    if text in ("", "-"):
        return 0
    return letter_from_names([t.strip() for t in text.split(",") if t.strip()], signals)


def output_order_key(letter: int, width: int) -> tuple[int, ...]:
    """Sort key ordering letters lexicographically by declared signal order."""
    return tuple(letter >> k & 1 for k in range(width))


# Quality operators ##########################################################

@dataclass(frozen=True)
class QualityOp:
    kind: str  # neg, or, and, implies, factor, wavg
    weight: Fraction | None = None

    ARITY = {"neg": 1, "or": 2, "and": 2, "implies": 2, "factor": 1, "wavg": 2}

    def __post_init__(self):
        if self.kind not in self.ARITY:
            raise FormulaError(f"unknown quality operator {self.kind!r}")
        if self.kind in ("factor", "wavg"):
            if self.weight is None or not ZERO <= self.weight <= ONE:
                raise FormulaError(f"{self.kind} weight must be a rational in [0,1], got {self.weight}")

    @property
    def arity(self) -> int:
        return self.ARITY[self.kind]

    @property
    def boolean(self) -> bool:
        return self.kind in ("neg", "or", "and", "implies")

    def __call__(self, *xs: Fraction) -> Fraction:
        k = self.kind
        if k == "neg":
            return 1 - xs[0]
        if k == "or":
            return max(xs)
        if k == "and":
            return min(xs)
        if k == "implies":
            return max(1 - xs[0], xs[1])
        if k == "factor":
            return self.weight * xs[0]
        return self.weight * xs[0] + (1 - self.weight) * xs[1]


NEG = QualityOp("neg")
OR = QualityOp("or")
AND = QualityOp("and")
IMPLIES = QualityOp("implies")


# Abstract syntax ############################################################

class Formula:
    """Base class of formula nodes. Nodes are immutable and hashable."""

    children: tuple["Formula", ...] = ()

    def __and__(self, other):
        return Apply(AND, (self, other))

    def __or__(self, other):
        return Apply(OR, (self, other))

    def __invert__(self):
        return Apply(NEG, (self,))

    def __rshift__(self, other):
        return Apply(IMPLIES, (self, other))

    def __str__(self):
        return pretty(self)


@dataclass(frozen=True, eq=True)
class Const(Formula):
    value: bool

    @property
    def children(self):
        return ()


@dataclass(frozen=True, eq=True)
class Atom(Formula):
    name: str

    @property
    def children(self):
        return ()


@dataclass(frozen=True, eq=True)
class Apply(Formula):
    op: QualityOp
    args: tuple[Formula, ...]

    def __post_init__(self):
        if len(self.args) != self.op.arity:
            raise FormulaError(f"{self.op.kind} expects {self.op.arity} arguments")

    @property
    def children(self):
        return self.args


@dataclass(frozen=True, eq=True)
class Next(Formula):
    arg: Formula

    @property
    def children(self):
        return (self.arg,)


@dataclass(frozen=True, eq=True)
class Until(Formula):
    left: Formula
    right: Formula

    @property
    def children(self):
        return (self.left, self.right)


# G and F keep their own nodes; their values equal !(true U !f) and true U f.
@dataclass(frozen=True, eq=True)
class Globally(Formula):
    arg: Formula

    @property
    def children(self):
        return (self.arg,)


@dataclass(frozen=True, eq=True)
class Eventually(Formula):
    arg: Formula

    @property
    def children(self):
        return (self.arg,)


TRUE = Const(True)
FALSE = Const(False)


def neg(f):
    return Apply(NEG, (f,))


def conj(a, b):
    return Apply(AND, (a, b))


def disj(a, b):
    return Apply(OR, (a, b))


def implies(a, b):
    return Apply(IMPLIES, (a, b))


def iff(a, b):
    return conj(implies(a, b), implies(b, a))


def factor(weight, f):
    return Apply(QualityOp("factor", Fraction(weight)), (f,))


def wavg(weight, a, b):
    return Apply(QualityOp("wavg", Fraction(weight)), (a, b))


def is_boolean(f: Formula) -> bool:
    return all(not isinstance(g, Apply) or g.op.boolean for g in closure(f))


def atoms(f: Formula) -> list[str]:
    return sorted({g.name for g in closure(f) if isinstance(g, Atom)})


def desugar(f: Formula) -> Formula:
    """Rewrite G and F into Until with negation (same satisfaction values)."""
    if isinstance(f, Globally):
        return neg(Until(TRUE, neg(desugar(f.arg))))
    if isinstance(f, Eventually):
        return Until(TRUE, desugar(f.arg))
    if isinstance(f, Apply):
        return Apply(f.op, tuple(desugar(a) for a in f.args))
    if isinstance(f, Next):
        return Next(desugar(f.arg))
    if isinstance(f, Until):
        return Until(desugar(f.left), desugar(f.right))
    return f


@lru_cache(maxsize=4096)
def closure(f: Formula) -> tuple[Formula, ...]:
    """All distinct subformulas of ``f``, children before parents."""
    seen: dict[Formula, None] = {}

    def visit(g):
        if g in seen:
            return
        for c in g.children:
            visit(c)
        seen[g] = None

    visit(f)
    return tuple(seen)


def size(f: Formula) -> int:
    return 1 + sum(size(c) for c in f.children)


@lru_cache(maxsize=4096)
def value_set(f: Formula) -> tuple[Fraction, ...]:
    """Sorted superset of the values ``f`` can take (always contains 0)."""
    if isinstance(f, Const):
        vals = {ONE if f.value else ZERO}
    elif isinstance(f, Atom):
        vals = {ZERO, ONE}
    elif isinstance(f, Apply):
        vals = {f.op(*combo) for combo in itertools.product(*(value_set(a) for a in f.args))}
    elif isinstance(f, (Next, Globally, Eventually)):
        vals = set(value_set(f.arg))
    elif isinstance(f, Until):
        vals = set(value_set(f.left)) | set(value_set(f.right))
    else:
        raise TypeError(f)
    vals.add(ZERO)
    return tuple(sorted(vals))


# Pretty printing and parsing ################################################

def _frac(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


_INFIX = {"and": "&", "or": "|", "implies": "->"}


def pretty(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Next):
        return f"X {_wrap(f.arg)}"
    if isinstance(f, Globally):
        return f"G {_wrap(f.arg)}"
    if isinstance(f, Eventually):
        return f"F {_wrap(f.arg)}"
    if isinstance(f, Until):
        return f"{_wrap(f.left)} U {_wrap(f.right)}"
    op = f.op
    if op.kind == "neg":
        return f"!{_wrap(f.args[0])}"
    if op.kind == "factor":
        return f"factor({_frac(op.weight)}, {pretty(f.args[0])})"
    if op.kind == "wavg":
        return f"wavg({_frac(op.weight)}, {pretty(f.args[0])}, {pretty(f.args[1])})"
    return f"{_wrap(f.args[0])} {_INFIX[op.kind]} {_wrap(f.args[1])}"


def _wrap(f: Formula) -> str:
    s = pretty(f)
    if isinstance(f, (Const, Atom)) or (isinstance(f, Apply) and f.op.kind in ("factor", "wavg")):
        return s
    return f"({s})"


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<id>[A-Za-z_][A-Za-z0-9_.]*)|(?P<op><->|->|[!&|()\,~]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, signals: Iterable[str] | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.signals = None if signals is None else set(signals)

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            raise FormulaError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.implication()
        tok = self.peek()
        if tok[0] != "eof":
            raise FormulaError(f"unexpected token {tok[1]!r}", tok[2])
        return f

    def implication(self):
        left = self.disjunction()
        tok = self.peek()
        if tok[1] == "->":
            self.take()
            return implies(left, self.implication())
        if tok[1] == "<->":
            self.take()
            return iff(left, self.implication())
        return left

    def disjunction(self):
        f = self.conjunction()
        while self.peek()[1] == "|":
            self.take()
            f = disj(f, self.conjunction())
        return f

    def conjunction(self):
        f = self.until()
        while self.peek()[1] == "&":
            self.take()
            f = conj(f, self.until())
        return f

    def until(self):
        left = self.unary()
        if self.peek()[1] == "U":
            self.take()
            return Until(left, self.until())
        return left

    def unary(self):
        kind, val, pos = self.peek()
        if val in ("!", "~"):
            self.take()
            return neg(self.unary())
        if kind == "id" and val in ("X", "G", "F"):
            self.take()
            arg = self.unary()
            return {"X": Next, "G": Globally, "F": Eventually}[val](arg)
        return self.primary()

    def rational(self) -> Fraction:
        kind, val, pos = self.take()
        if kind != "num":
            raise FormulaError(f"expected a rational constant, found {val!r}", pos)
        x = Fraction(val)
        if not ZERO <= x <= ONE:
            raise FormulaError(f"constant {val} outside [0,1]", pos)
        return x

    def primary(self):
        kind, val, pos = self.take()
        if val == "(":
            f = self.implication()
            self.take(")")
            return f
        if kind == "num":
            if val in ("0", "1"):
                return TRUE if val == "1" else FALSE
            raise FormulaError(f"bare constant {val} is not a formula", pos)
        if kind != "id":
            raise FormulaError(f"unexpected token {val or 'end of input'!r}", pos)
        if val == "true":
            return TRUE
        if val == "false":
            return FALSE
        if val in ("factor", "wavg") and self.peek()[1] == "(":
            self.take("(")
            w = self.rational()
            self.take(",")
            a = self.implication()
            if val == "wavg":
                self.take(",")
                b = self.implication()
                self.take(")")
                return wavg(w, a, b)
            self.take(")")
            return factor(w, a)
        if val == "U":
            raise FormulaError("U needs a left operand", pos)
        if self.signals is not None and val not in self.signals:
            raise FormulaError(f"unknown signal {val!r}", pos)
        return Atom(val)


def parse_formula(text: str, sig: SignalPartition | Iterable[str] | None = None) -> Formula:
    """Parse concrete syntax; atoms are checked against ``sig`` when given."""
    signals = sig.signals if isinstance(sig, SignalPartition) else sig
    return _Parser(text, signals).parse()


# Lassos and exact semantics #################################################

@dataclass(frozen=True)
class Lasso:
    """The ultimately periodic word ``prefix . loop^omega`` over ``signals``."""
    signals: tuple[str, ...]
    prefix: tuple[int, ...]
    loop: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "signals", tuple(self.signals))
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "loop", tuple(self.loop))
        if not self.loop:
            raise ValueError("lasso loop must be nonempty")
        top = 1 << len(self.signals)
        if any(not 0 <= a < top for a in self.prefix + self.loop):
            raise ValueError("lasso letter outside alphabet")

    def __len__(self):
        return len(self.prefix) + len(self.loop)

    def letter(self, i: int) -> int:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.loop[(i - len(self.prefix)) % len(self.loop)]

    def nxt(self, i: int) -> int:
        return i + 1 if i + 1 < len(self) else len(self.prefix)

    def unroll(self, prefix_len: int, loop_len: int) -> "Lasso":
        """Same word, re-cut with a longer prefix and a loop that is a multiple."""
        assert prefix_len >= len(self.prefix) and loop_len % len(self.loop) == 0
        return Lasso(self.signals,
                     tuple(self.letter(i) for i in range(prefix_len)),
                     tuple(self.letter(prefix_len + i) for i in range(loop_len)))

    def zip(self, other: "Lasso") -> "Lasso":
        """Merge with a lasso over disjoint signals."""
        if set(self.signals) & set(other.signals):
            raise ValueError("zip needs disjoint signal sets")
        p = max(len(self.prefix), len(other.prefix))
        n = _lcm(len(self.loop), len(other.loop))
        a, b = self.unroll(p, n), other.unroll(p, n)
        shift = len(self.signals)
        return Lasso(self.signals + other.signals,
                     tuple(x | y << shift for x, y in zip(a.prefix, b.prefix)),
                     tuple(x | y << shift for x, y in zip(a.loop, b.loop)))

    def project(self, keep: Sequence[str]) -> "Lasso":
        idx = [self.signals.index(s) for s in keep]

        def pr(a):
            return sum(1 << j for j, k in enumerate(idx) if a >> k & 1)
        return Lasso(tuple(keep), tuple(map(pr, self.prefix)), tuple(map(pr, self.loop)))

    def __str__(self):
        def word(ls):
            return " ".join(",".join(letter_names(a, self.signals)) or "-" for a in ls)
        head = word(self.prefix)
        return (head + " " if head else "") + f"({word(self.loop)})"


def _lcm(a, b):
    from math import gcd
    return a * b // gcd(a, b)


def parse_lasso(text: str, signals: Sequence[str]) -> Lasso:
    """Parse ``req - (req,grant -)``: prefix letters, then the loop in parentheses."""
    m = re.fullmatch(r"\s*([^()]*)\(([^()]*)\)\s*(?:\^\s*w|\^\s*omega)?\s*", text)
    if not m:
        raise FormulaError(f"lasso must look like 'a b (c d)', got {text!r}")
    prefix = [parse_letter(t, signals) for t in m.group(1).split()]
    loop = [parse_letter(t, signals) for t in m.group(2).split()]
    if not loop:
        raise FormulaError("lasso loop must be nonempty")
    return Lasso(tuple(signals), tuple(prefix), tuple(loop))


def eval_lasso(f: Formula, w: Lasso, extra_periods: int = 0) -> Fraction:
    """Exact satisfaction value of ``f`` at position 0 of ``w``."""
    return evaluate_positions(f, w, extra_periods)[f][0]


def evaluate_positions(f: Formula, w: Lasso, extra_periods: int = 0) -> dict[Formula, list[Fraction]]:
    """Values of every subformula at every lasso position.

    Until is evaluated by scanning ``|u| + |v| * (|V(left)| + 1)`` positions:
    on the loop the running minimum of the left operand can only drop
    ``|V(left)|`` times, after which further periods repeat earlier candidates.
    """
    index = {s: k for k, s in enumerate(w.signals)}
    n = len(w)
    succ = [w.nxt(i) for i in range(n)]
    vals: dict[Formula, list[Fraction]] = {}
    for g in closure(f):
        if isinstance(g, Const):
            v = [ONE if g.value else ZERO] * n
        elif isinstance(g, Atom):
            if g.name not in index:
                raise FormulaError(f"signal {g.name!r} not in lasso alphabet {list(w.signals)}")
            k = index[g.name]
            v = [ONE if w.letter(i) >> k & 1 else ZERO for i in range(n)]
        elif isinstance(g, Apply):
            cols = [vals[a] for a in g.args]
            v = [g.op(*(c[i] for c in cols)) for i in range(n)]
        elif isinstance(g, Next):
            a = vals[g.arg]
            v = [a[succ[i]] for i in range(n)]
        elif isinstance(g, (Globally, Eventually)):
            a = vals[g.arg]
            pick = min if isinstance(g, Globally) else max
            looped = pick(a[len(w.prefix):])
            v = [looped] * n
            for i in reversed(range(len(w.prefix))):
                v[i] = pick(a[i], v[i + 1])
        elif isinstance(g, Until):
            left, right = vals[g.left], vals[g.right]
            bound = len(w.prefix) + len(w.loop) * (len(value_set(g.left)) + 1 + extra_periods)
            v = []
            for start in range(n):
                best, run, i = ZERO, ONE, start
                for _ in range(bound):
                    best = max(best, min(right[i], run))
                    run = min(run, left[i])
                    if run <= best:
                        break
                    i = succ[i]
                v.append(best)
        else:
            raise TypeError(g)
        vals[g] = v
    return vals
