"""Command-line front end.

Exit codes: 0 realizable or pass, 1 unrealizable or fail, 2 unknown,
3 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .automata import AutomatonError, ResourceLimit
from .compile import CombError
from .engine import counterexample, optimize_ag, optimize_quant_guarantee, synthesize, verify_transducer
from .io import nbw_to_dot, nbw_to_hoa, write_json
from .logic import (Formula, FormulaError, Lasso, SignalPartition, eval_lasso, parse_formula, parse_lasso,
                    pretty, value_set)
from .monitors import COLORS, MonitorBundle, MonitorKind, dfw_to_dot
from .specfile import SpecError, SpecFile, VariantConfig, build_from_config, load_spec_file, parse_comb, \
    parse_rational
from .transducer import (SimulationSession, TransducerError, forall_value, ge_condition, hopefulness_value,
                         load_transducer, run_transducer_lasso, session_advance, transducer_to_dot,
                         verify_ge_on_lassos)

EXIT_OK, EXIT_FAIL, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 3
DEFAULT_SEED = 20240607

log = logging.getLogger("gesynth")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    spec_path: str | None = None
    variant: str | None = None
    threshold: Fraction | None = None
    comb: str | None = None
    k_max: int = 8
    m_max: int = 4
    lasso_u: int = 2
    lasso_v: int = 4
    monitor_v: list[Fraction] = field(default_factory=list)
    out: Path | None = None
    seed: int = DEFAULT_SEED
    hoa: bool = False

    def __post_init__(self):
        if self.threshold is not None and not 0 <= self.threshold <= 1:
            raise UsageError(f"threshold {self.threshold} outside [0,1]")
        for v in self.monitor_v:
            if not 0 < v <= 1:
                raise UsageError(f"monitor threshold {v} outside (0,1]")
        if self.k_max < 0 or self.m_max < 0:
            raise UsageError("--kmax and --mmax must be non-negative")
        if self.lasso_u < 0 or self.lasso_v < 1:
            raise UsageError("lasso bounds must be positive")

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        def rational_list(text):
            return [parse_rational(t.strip(), "monitor threshold") for t in text.split(",") if t.strip()]
        return cls(
            spec_path=getattr(args, "target", None),
            variant=getattr(args, "variant", None),
            threshold=parse_rational(args.threshold, "threshold") if getattr(args, "threshold", None) else None,
            comb=getattr(args, "comb", None),
            k_max=getattr(args, "kmax", 8), m_max=getattr(args, "mmax", 4),
            lasso_u=getattr(args, "lasso_u", None) or 2, lasso_v=getattr(args, "lasso_v", None) or 4,
            monitor_v=rational_list(args.monitor_v) if getattr(args, "monitor_v", None) else [],
            out=Path(args.out) if getattr(args, "out", None) else None,
            seed=getattr(args, "seed", DEFAULT_SEED), hoa=getattr(args, "hoa", False))


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=False))


def _signals(text: str | None) -> tuple[str, ...]:
    return tuple(s.strip() for s in (text or "").split(",") if s.strip())


def _resolve(args) -> tuple[SpecFile | None, Formula, SignalPartition]:
    """A positional target is either a spec file or formula text with
    ``--inputs``/``--outputs``."""
    target = args.target
    if Path(target).is_file():
        sf = load_spec_file(target)
        name = getattr(args, "name", None)
        if name is None and len(sf.formulas) > 1:
            p = sf.variant.params
            name = p.get("psi") or p.get("strong")
        return sf, sf.formula(name), sf.sig
    if args.outputs is None:
        raise UsageError(f"{target!r} is not a file; formula text needs --inputs and --outputs")
    sig = SignalPartition(_signals(args.inputs), _signals(args.outputs))
    return None, parse_formula(target, sig), sig


def _variant_config(sf: SpecFile, cfg: RunConfig) -> VariantConfig:
    base = sf.variant
    tag = cfg.variant or base.tag
    params = dict(base.params) if tag == base.tag else {}
    if tag != base.tag:
        # carry the formula choice across a variant override
        for key in ("psi", "strong", "weak"):
            if key in base.params:
                params[key] = base.params[key]
        if tag in ("boolean", "threshold", "full", "ag") and "psi" not in params and "strong" in base.params:
            params["psi"] = base.params["strong"]
    if cfg.threshold is not None:
        params["v1" if tag == "quant-guarantee" else "v"] = str(cfg.threshold)
    if cfg.comb is not None:
        params["comb"] = cfg.comb
    return VariantConfig(tag, params)


def _kinds(f: Formula, values: list[Fraction], colors: list[str]) -> list[MonitorKind]:
    vs = values or [v for v in value_set(f) if v > 0]
    return [MonitorKind(c, v) for v in vs for c in colors]


def _write_monitors(bundle: MonitorBundle, out: Path) -> None:
    write_json(bundle.to_json(), out / "monitors.json")
    for k, d in bundle.monitors:
        (out / f"monitor_{k.color}_{str(k.v).replace('/', '_')}.dot").write_text(dfw_to_dot(d, k.name))


# Subcommands #################################################################

def cmd_synth(args) -> int:
    cfg = RunConfig.from_args(args)
    sf = load_spec_file(cfg.spec_path)
    vc = _variant_config(sf, cfg)
    spec = build_from_config(sf, vc)
    verdict = synthesize(spec, cfg.k_max, cfg.m_max)
    result = verdict.to_json()
    result["spec"] = spec.describe()
    if verdict.transducer is not None and (args.lasso_u or args.lasso_v):
        result["lasso_report"] = verify_ge_on_lassos(verdict.transducer, spec, (cfg.lasso_u, cfg.lasso_v)).to_json()
    bundle = None
    if cfg.monitor_v:
        if verdict.status != "realizable":
            print(f"warning: monitors attached to a specification that is {verdict.status}; "
                  "green flags assume the residual can be realized", file=sys.stderr)
        f = spec.formulas.get("psi") or spec.formulas.get("strong") or next(iter(spec.formulas.values()))
        bundle = MonitorBundle.build(f, spec.sig, _kinds(f, cfg.monitor_v, list(COLORS)))
        result["monitors"] = [k.name for k, _ in bundle.monitors]
    if cfg.out is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
        write_json(result, cfg.out / "verdict.json")
        if verdict.transducer is not None:
            write_json(result["transducer"], cfg.out / "transducer.json")
            (cfg.out / "transducer.dot").write_text(transducer_to_dot(verdict.transducer))
        if verdict.counterstrategy is not None:
            write_json(result["counterstrategy"], cfg.out / "counterstrategy.json")
        if bundle is not None:
            _write_monitors(bundle, cfg.out)
        if cfg.hoa:
            (cfg.out / "dual.hoa").write_text(nbw_to_hoa(spec.dual, "violations"))
            (cfg.out / "dual.dot").write_text(nbw_to_dot(spec.dual, "violations"))
    elif cfg.hoa:
        raise UsageError("--hoa needs --out")
    _emit(result)
    return verdict.exit_code


def cmd_monitors(args) -> int:
    cfg = RunConfig.from_args(args)
    _, f, sig = _resolve(args)
    colors = [c.strip() for c in args.colors.split(",") if c.strip()]
    for c in colors:
        if c not in COLORS:
            raise UsageError(f"unknown color {c!r}; expected some of {', '.join(COLORS)}")
    bundle = MonitorBundle.build(f, sig, _kinds(f, cfg.monitor_v, colors))
    if cfg.out is not None:
        cfg.out.mkdir(parents=True, exist_ok=True)
        _write_monitors(bundle, cfg.out)
    _emit({"formula": pretty(f), "monitors": [{"kind": k.name, "states": d.n} for k, d in bundle.monitors]})
    return EXIT_OK


def _random_input_lasso(sig: SignalPartition, rng: random.Random, max_u: int, max_v: int) -> Lasso:
    width = 1 << sig.n_in
    u = tuple(rng.randrange(width) for _ in range(rng.randint(0, max_u)))
    v = tuple(rng.randrange(width) for _ in range(rng.randint(1, max_v)))
    return Lasso(sig.inputs, u, v)


def cmd_check(args) -> int:
    cfg = RunConfig.from_args(args)
    sf = load_spec_file(cfg.spec_path)
    spec = build_from_config(sf, _variant_config(sf, cfg))
    t = load_transducer(args.transducer)
    if t.sig != spec.sig:
        raise UsageError(f"transducer signals {t.sig} do not match the specification {spec.sig}")
    exact = verify_transducer(t, spec)
    result = {"spec": spec.describe(), "verified": exact}
    if not exact:
        w = counterexample(t, spec)
        result["counterexample"] = str(w) if w is not None else None
    report = verify_ge_on_lassos(t, spec, (cfg.lasso_u, cfg.lasso_v))
    result["lasso_report"] = report.to_json()
    if args.samples:
        rng = random.Random(cfg.seed)
        bad = []
        for _ in range(args.samples):
            x = _random_input_lasso(t.sig, rng, cfg.lasso_u + 3, cfg.lasso_v + 3)
            ok, h, g, detail = ge_condition(spec, run_transducer_lasso(t, x))
            if not ok:
                bad.append({"input": str(x), "hope": str(h), "achieved": str(g), "detail": detail})
        result["random_samples"] = {"seed": cfg.seed, "checked": args.samples, "violations": bad}
    _emit(result)
    passed = exact and report.passed and not result.get("random_samples", {}).get("violations")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_eval(args) -> int:
    _, f, sig = _resolve(args)
    if args.exists and args.forall:
        raise UsageError("--exists and --forall are exclusive")
    if args.exists or args.forall:
        x = parse_lasso(args.lasso, sig.inputs)
        value = hopefulness_value(f, x, sig) if args.exists else forall_value(f, x, sig)
    else:
        value = eval_lasso(f, parse_lasso(args.lasso, sig.signals))
    print(value)
    return EXIT_OK


def cmd_value_set(args) -> int:
    _, f, _ = _resolve(args)
    print(" ".join(str(v) for v in value_set(f)))
    return EXIT_OK


def cmd_ag_opt(args) -> int:
    cfg = RunConfig.from_args(args)
    sf, f, sig = _resolve(args)
    comb_text = cfg.comb or (sf.variant.params.get("comb") if sf else None) or "impl"
    comb = parse_comb(comb_text)
    res = optimize_ag(f, comb, sig, cfg.k_max, cfg.m_max)
    out = {"formula": pretty(f), "comb": comb_text, "low": str(res.low), "high": str(res.high),
           "exact": res.exact, "probes": [{"v": str(v), "verdict": s} for v, s in res.probes]}
    if res.transducer is not None:
        from .transducer import transducer_to_json
        out["transducer"] = transducer_to_json(res.transducer)
        if cfg.out is not None:
            cfg.out.mkdir(parents=True, exist_ok=True)
            write_json(out["transducer"], cfg.out / "transducer.json")
            (cfg.out / "transducer.dot").write_text(transducer_to_dot(res.transducer))
    _emit(out)
    return EXIT_OK if res.exact else EXIT_UNKNOWN


def cmd_qg_opt(args) -> int:
    cfg = RunConfig.from_args(args)
    sf = load_spec_file(args.spec)
    p = sf.variant.params
    strong = sf.formula(args.strong or p.get("strong"))
    weak = sf.formula(args.weak or p.get("weak"))
    res = optimize_quant_guarantee(strong, weak, sf.sig, cfg.k_max, cfg.m_max)
    out = {"strong": pretty(strong), "weak": pretty(weak),
           "v1": None if res.v1 is None else str(res.v1), "v2": None if res.v2 is None else str(res.v2),
           "exact": res.exact, "probes": [{"v1": str(a), "v2": str(b), "verdict": s} for a, b, s in res.probes]}
    if res.transducer is not None:
        from .transducer import transducer_to_json
        out["transducer"] = transducer_to_json(res.transducer)
    _emit(out)
    if res.v1 is None:
        return EXIT_UNKNOWN if any(s == "unknown" for _, _, s in res.probes) else EXIT_FAIL
    return EXIT_OK if res.exact else EXIT_UNKNOWN


def cmd_simulate(args) -> int:
    cfg = RunConfig.from_args(args)
    t = load_transducer(args.transducer)
    monitors = []
    if args.spec:
        sf = load_spec_file(args.spec)
        if sf.sig != t.sig:
            raise UsageError("transducer and specification disagree on signals")
        p = sf.variant.params
        f = sf.formula(args.name or p.get("psi") or p.get("strong") if len(sf.formulas) > 1 else None)
        bundle = MonitorBundle.build(f, sf.sig, _kinds(f, cfg.monitor_v or [Fraction(1)], list(COLORS)))
        monitors = bundle.named()
    sess = SimulationSession(t, monitors)
    errors = 0
    for raw in sys.stdin:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in ("quit", "exit"):
            break
        if line == "reset":
            sess.reset()
            print(json.dumps({"reset": True}))
            continue
        try:
            session_advance(sess, line)
        except (FormulaError, TransducerError) as e:
            errors += 1
            print(f"error: {e}", file=sys.stderr)
            continue
        print(json.dumps(sess.log[-1], sort_keys=True))
        sys.stdout.flush()
    return EXIT_USAGE if errors else EXIT_OK


# Argument parsing ############################################################

def _add_synthesis_flags(p):
    p.add_argument("--variant", choices=["boolean", "guarantee", "threshold", "full", "ag", "quant-guarantee"])
    p.add_argument("--threshold", metavar="N/D")
    p.add_argument("--comb", metavar="KIND", help="impl, diff, ratio, factor:n/d or table:FILE")
    p.add_argument("--kmax", type=int, default=8)
    p.add_argument("--mmax", type=int, default=4)


def _add_formula_flags(p):
    p.add_argument("target", help="spec file, or formula text together with --inputs/--outputs")
    p.add_argument("--inputs", help="comma-separated input signals")
    p.add_argument("--outputs", help="comma-separated output signals")
    p.add_argument("--name", help="formula name inside a spec file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gesynth", description="Good-enough synthesis for LTL and LTL[F].")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a transducer or a counterstrategy")
    p.add_argument("target", metavar="SPEC")
    _add_synthesis_flags(p)
    p.add_argument("--lasso-u", type=int)
    p.add_argument("--lasso-v", type=int)
    p.add_argument("--monitor-v", metavar="LIST")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--hoa", action="store_true", help="also export the violation automaton")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("monitors", help="build green/red/blue prefix monitors")
    _add_formula_flags(p)
    p.add_argument("--monitor-v", metavar="LIST")
    p.add_argument("--colors", default=",".join(COLORS))
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_monitors)

    p = sub.add_parser("check", help="verify a transducer against a specification")
    p.add_argument("target", metavar="SPEC")
    p.add_argument("transducer", metavar="TRANSDUCER_JSON")
    _add_synthesis_flags(p)
    p.add_argument("--lasso-u", type=int)
    p.add_argument("--lasso-v", type=int)
    p.add_argument("--samples", type=int, default=0, help="extra random input lassos")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("eval", help="satisfaction value of a formula on a lasso")
    _add_formula_flags(p)
    p.add_argument("lasso", help="e.g. 'p - (p,q -)'")
    p.add_argument("--exists", action="store_true", help="maximize over outputs (lasso over inputs)")
    p.add_argument("--forall", action="store_true", help="minimize over outputs (lasso over inputs)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("value-set", help="list the values a formula can take")
    _add_formula_flags(p)
    p.set_defaults(func=cmd_value_set)

    p = sub.add_parser("ag-opt", help="best achievable comb value")
    _add_formula_flags(p)
    p.add_argument("--comb", metavar="KIND")
    p.add_argument("--kmax", type=int, default=8)
    p.add_argument("--mmax", type=int, default=4)
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=cmd_ag_opt)

    p = sub.add_parser("qg-opt", help="best (v1, v2) for a strong and a weak formula, v1 first")
    p.add_argument("spec", metavar="SPEC")
    p.add_argument("--strong", help="name of the strong formula (default: the stanza's strong=)")
    p.add_argument("--weak", help="name of the weak formula (default: the stanza's weak=)")
    p.add_argument("--kmax", type=int, default=8)
    p.add_argument("--mmax", type=int, default=4)
    p.set_defaults(func=cmd_qg_opt)

    p = sub.add_parser("simulate", help="step a transducer, one input letter per line on stdin")
    p.add_argument("transducer", metavar="TRANSDUCER_JSON")
    p.add_argument("--spec", help="spec file whose formula drives the monitors")
    p.add_argument("--name")
    p.add_argument("--monitor-v", metavar="LIST")
    p.set_defaults(func=cmd_simulate)
    return ap


def run_command(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, SpecError, FormulaError, CombError, TransducerError, AutomatonError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceLimit as e:
        print(f"error: resource limit: {e}", file=sys.stderr)
        return EXIT_UNKNOWN
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
