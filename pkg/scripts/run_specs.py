"""Synthesize every spec file under specs/ and print one verdict line each.

Usage: python3 scripts/run_specs.py [--out DIR] [--kmax K] [--mmax M]
"""
import argparse
import json
import sys
import time
from pathlib import Path

from gesynth.engine import synthesize
from gesynth.specfile import build_from_config, load_spec_file

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--specs", type=Path, default=ROOT / "specs")
    ap.add_argument("--out", type=Path, help="write one verdict JSON per spec here")
    ap.add_argument("--kmax", type=int, default=8)
    ap.add_argument("--mmax", type=int, default=4)
    args = ap.parse_args()

    paths = sorted(args.specs.glob("*.spec"))
    if not paths:
        sys.exit(f"no .spec files under {args.specs}")
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
    print(f"{'spec':<24} {'variant':<10} {'verdict':<13} {'k':>3} {'m':>3} {'size':>5} {'secs':>7}")
    for path in paths:
        sf = load_spec_file(path)
        spec = build_from_config(sf)
        t0 = time.perf_counter()
        v = synthesize(spec, args.kmax, args.mmax)
        secs = time.perf_counter() - t0
        size = v.transducer.n if v.transducer else v.counterstrategy.n if v.counterstrategy else "-"
        k = "-" if v.k is None else v.k
        m = "-" if v.m is None else v.m
        print(f"{path.stem:<24} {spec.variant:<10} {v.status:<13} {k:>3} {m:>3} {size:>5} {secs:7.3f}")
        if args.out:
            data = dict(v.to_json(), spec=spec.describe())
            (args.out / f"{path.stem}.json").write_text(json.dumps(data, indent=2) + "\n")


if __name__ == "__main__":
    main()
