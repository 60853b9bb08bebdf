"""JSON, HOA and DOT renderings of automata."""
from __future__ import annotations

import json

from .automata import AutomatonError, Nbw
from .logic import format_letter, parse_letter


def nbw_to_json(a: Nbw) -> dict:
    return {
        "alphabet": list(a.signals),
        "states": a.n,
        "initial": sorted(a.initial),
        "acceptance": [sorted(f) for f in a.acceptance],
        "transitions": [{"from": q, "letter": format_letter(letter, a.signals), "to": list(succ)}
                        for q, row in enumerate(a.delta) for letter, succ in sorted(row.items())],
        **({"labels": list(a.labels)} if a.labels else {}),
    }


def nbw_from_json(data: dict) -> Nbw:
    try:
        signals = tuple(data["alphabet"])
        n = int(data["states"])
        delta: list[dict[int, set[int]]] = [dict() for _ in range(n)]
        for e in data["transitions"]:
            q = int(e["from"])
            if not 0 <= q < n:
                raise AutomatonError(f"transition from undeclared state {q}")
            delta[q].setdefault(parse_letter(e["letter"], signals), set()).update(int(t) for t in e["to"])
        return Nbw(signals, n, frozenset(data["initial"]),
                   tuple({l: tuple(sorted(s)) for l, s in row.items()} for row in delta),
                   tuple(frozenset(f) for f in data.get("acceptance", [])),
                   tuple(data["labels"]) if "labels" in data else None)
    except (KeyError, TypeError) as e:
        raise AutomatonError(f"malformed automaton JSON: {e}") from e


def nbw_to_hoa(a: Nbw, name: str = "automaton") -> str:
    """HOA v1 with state-based generalized Büchi acceptance and explicit letters."""
    k = len(a.acceptance)
    if k == 0:
        acc = "Acceptance: 0 t\nacc-name: all"
    else:
        acc = f"Acceptance: {k} " + "&".join(f"Inf({j})" for j in range(k))
        acc += f"\nacc-name: generalized-Buchi {k}"
    lines = ["HOA: v1", f'name: "{name}"', f"States: {a.n}"]
    lines += [f"Start: {q}" for q in sorted(a.initial)]
    lines.append(f"AP: {len(a.signals)} " + " ".join(f'"{s}"' for s in a.signals))
    lines.append(acc)
    lines.append("properties: explicit-labels state-acc")
    lines.append("--BODY--")
    for q in range(a.n):
        marks = [str(j) for j, f in enumerate(a.acceptance) if q in f]
        lines.append(f"State: {q}" + (" {" + " ".join(marks) + "}" if marks else ""))
        for letter, succ in sorted(a.delta[q].items()):
            cube = "&".join(("" if letter >> j & 1 else "!") + str(j) for j in range(len(a.signals))) or "t"
            for t in succ:
                lines.append(f"  [{cube}] {t}")
    lines.append("--END--")
    return "\n".join(lines) + "\n"


def nbw_to_dot(a: Nbw, name: str = "nbw") -> str:
    lines = [f'digraph "{name}" {{', "  rankdir=LR;"]
    for q in range(a.n):
        sets = [str(j) for j, f in enumerate(a.acceptance) if q in f]
        label = (a.labels[q] if a.labels else str(q)) + (" {" + ",".join(sets) + "}" if sets else "")
        lines.append(f'  q{q} [label="{label}"];')
    for q in sorted(a.initial):
        lines.append(f"  i{q} [shape=point];\n  i{q} -> q{q};")
    for q, row in enumerate(a.delta):
        edges: dict[int, list[str]] = {}
        for letter, succ in sorted(row.items()):
            for t in succ:
                edges.setdefault(t, []).append(format_letter(letter, a.signals))
        for t, ls in edges.items():
            lines.append(f'  q{q} -> q{t} [label="{" ".join(ls)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
