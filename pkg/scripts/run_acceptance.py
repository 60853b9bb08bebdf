"""Run the acceptance suite and print only its PASS/FAIL lines.

Exit status is pytest's: 0 when every criterion passes.
"""
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                           str(ROOT / "tests" / "test_acceptance.py")],
                          cwd=ROOT, capture_output=True, text=True)
    lines = [ln for ln in proc.stdout.splitlines() if ln.startswith(("PASS C", "FAIL C"))]
    # each line shows up twice: once live, once in the terminal summary
    for ln in dict.fromkeys(lines):
        print(ln)
    if proc.returncode and not lines:
        print(proc.stdout[-3000:], proc.stderr[-3000:], sep="\n")
    sys.exit(proc.returncode)
