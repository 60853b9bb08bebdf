"""Specification files.

::

    # signals
    inputs: req;
    outputs: grant;
    safe := G (grant -> req);
    live := G F (req & grant) & G F (!req & !grant);
    variant: guarantee strong=safe weak=live;

Statements end with ``;`` and may span lines; ``#`` starts a comment.
Variant tags: ``boolean``, ``guarantee``, ``threshold``, ``full``, ``ag``,
``quant-guarantee`` with ``key=value`` parameters (formula names, ``v``,
``v1``, ``v2``, ``comb``).
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .compile import (CombSpec, GeSpec, build_ag, build_ge_boolean, build_ge_full, build_ge_guarantee,
                      build_ge_threshold, build_quant_guarantee)
from .logic import Formula, FormulaError, SignalPartition, is_boolean, parse_formula

VARIANTS = ("boolean", "guarantee", "threshold", "full", "ag", "quant-guarantee")


class SpecError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


@dataclass
class VariantConfig:
    tag: str
    params: dict[str, str] = field(default_factory=dict)


@dataclass
class SpecFile:
    sig: SignalPartition
    formulas: dict[str, Formula]
    variant: VariantConfig
    path: str | None = None

    def formula(self, name: str | None = None) -> Formula:
        if name is None:
            if len(self.formulas) != 1:
                raise SpecError(f"several formulas declared ({', '.join(self.formulas)}); name one")
            return next(iter(self.formulas.values()))
        if name not in self.formulas:
            raise SpecError(f"no formula named {name!r}")
        return self.formulas[name]


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def parse_comb(text: str) -> CombSpec:
    """``impl``, ``diff``, ``ratio``, ``factor:n/d`` or ``table:FILE`` (JSON map
    from ``"a,g"`` to values)."""
    if text in ("impl", "diff", "ratio"):
        return CombSpec(text)
    if text.startswith("factor:"):
        return CombSpec("factor", Fraction(text.split(":", 1)[1]))
    if text.startswith("table:"):
        with open(text.split(":", 1)[1]) as fh:
            raw = json.load(fh)
        entries = {}
        for key, v in raw.items():
            a, g = key.split(",")
            entries[Fraction(a.strip()), Fraction(g.strip())] = Fraction(str(v))
        return CombSpec.from_table(entries)
    raise SpecError(f"unknown comb {text!r}; expected impl, diff, ratio, factor:n/d or table:FILE")


def parse_rational(text: str, what: str = "value") -> Fraction:
    try:
        x = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise SpecError(f"{what} {text!r} is not a rational number") from None
    if not 0 <= x <= 1:
        raise SpecError(f"{what} {text} outside [0,1]")
    return x


def parse_spec_text(text: str, path: str | None = None) -> SpecFile:
    clean = re.sub(r"#[^\n]*", lambda m: " " * len(m.group()), text)
    inputs = outputs = None
    raw_formulas: list[tuple[str, str, int]] = []
    variant = None
    start = 0
    for m in re.finditer(r";", clean):
        stmt_raw = clean[start:m.start()]
        offset = start + len(stmt_raw) - len(stmt_raw.lstrip())
        stmt = stmt_raw.strip()
        start = m.end()
        if not stmt:
            continue
        line, col = _position(text, offset)
        if stmt.startswith("inputs:") or stmt.startswith("outputs:"):
            key, body = stmt.split(":", 1)
            names = [s.strip() for s in body.replace(",", " ").split() if s.strip()]
            for s in names:
                if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_.]*", s):
                    raise SpecError(f"bad signal name {s!r}", line, col)
            if key == "inputs":
                inputs = names
            else:
                outputs = names
        elif stmt.startswith("variant:"):
            words = stmt.split(":", 1)[1].split()
            if not words:
                raise SpecError("variant needs a tag", line, col)
            params = {}
            for w in words[1:]:
                if "=" not in w:
                    raise SpecError(f"variant parameter {w!r} is not key=value", line, col)
                k, v = w.split("=", 1)
                params[k] = v
            if words[0] not in VARIANTS:
                raise SpecError(f"unknown variant {words[0]!r}; expected one of {', '.join(VARIANTS)}", line, col)
            variant = VariantConfig(words[0], params)
        elif ":=" in stmt:
            name, body = stmt.split(":=", 1)
            name = name.strip()
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
                raise SpecError(f"bad formula name {name!r}", line, col)
            body_offset = offset + stmt_raw.strip().index(":=") + 2
            raw_formulas.append((name, body, body_offset))
        else:
            raise SpecError(f"cannot parse statement {stmt[:30]!r}", line, col)
    if clean[start:].strip():
        line, col = _position(text, start + len(clean[start:]) - len(clean[start:].lstrip()))
        raise SpecError("statement is missing its terminating ';'", line, col)
    if inputs is None:
        raise SpecError("missing 'inputs:' declaration", *_position(text, len(text)))
    if outputs is None:
        raise SpecError("missing 'outputs:' declaration", *_position(text, len(text)))
    try:
        sig = SignalPartition(tuple(inputs), tuple(outputs))
    except FormulaError as e:
        raise SpecError(str(e)) from None
    formulas: dict[str, Formula] = {}
    for name, body, off in raw_formulas:
        if name in formulas:
            raise SpecError(f"formula {name!r} declared twice", *_position(text, off))
        try:
            formulas[name] = parse_formula(body, sig)
        except FormulaError as e:
            pos = off + (e.pos or 0)
            raise SpecError(str(e).split(" (at position")[0], *_position(text, pos)) from None
    if not formulas:
        raise SpecError("no formula declared")
    if variant is None:
        only = next(iter(formulas.values()))
        tag = "boolean" if len(formulas) == 1 and is_boolean(only) else "full"
        variant = VariantConfig(tag)
    return SpecFile(sig, formulas, variant, path)


def load_spec_file(path) -> SpecFile:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise SpecError(f"cannot read {path}: {e.strerror}") from None
    return parse_spec_text(text, str(path))


def build_from_config(sf: SpecFile, variant: VariantConfig | None = None) -> GeSpec:
    """Assemble the GeSpec named by the variant stanza (or an override)."""
    vc = variant or sf.variant
    p = vc.params
    sig = sf.sig

    def formula(key):
        return sf.formula(p.get(key)) if key in p or len(sf.formulas) == 1 else sf.formula(p.get(key))

    def number(key, default=None):
        if key not in p:
            if default is None:
                raise SpecError(f"variant {vc.tag} needs {key}=...")
            return default
        return parse_rational(p[key], key)

    tag = vc.tag
    if tag == "boolean":
        return build_ge_boolean(formula("psi"), sig)
    if tag == "guarantee":
        return build_ge_guarantee(sf.formula(p.get("strong")), sf.formula(p.get("weak")), sig)
    if tag == "threshold":
        return build_ge_threshold(formula("psi"), number("v"), sig)
    if tag == "full":
        return build_ge_full(formula("psi"), sig)
    if tag == "ag":
        return build_ag(formula("psi"), parse_comb(p.get("comb", "impl")), number("v", Fraction(1)), sig)
    if tag == "quant-guarantee":
        v2 = parse_rational(p["v2"], "v2") if "v2" in p else None
        return build_quant_guarantee(sf.formula(p.get("strong")), number("v1"), sf.formula(p.get("weak")), sig, v2)
    raise SpecError(f"unknown variant {tag!r}")
