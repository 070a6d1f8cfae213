"""Time the smoke config end to end through the installed entry point.

    python3 scripts/time_smoke.py [--repeat N]
"""

import argparse
import subprocess
import sys
import tempfile
import time
from pathlib import Path

SMOKE = Path(__file__).resolve().parents[1] / "configs" / "smoke.json"
BUDGET = 60.0


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    ns = p.parse_args(argv)
    times = []
    for _ in range(ns.repeat):
        with tempfile.TemporaryDirectory() as out:
            start = time.perf_counter()
            proc = subprocess.run([sys.executable, "-m", "fracsync.cli", "run", str(SMOKE), "--out", out],
                                  capture_output=True, text=True)
            times.append(time.perf_counter() - start)
            if proc.returncode != 0:
                print(proc.stdout + proc.stderr)
                return proc.returncode
    print(f"smoke: best {min(times):.2f}s, worst {max(times):.2f}s, budget {BUDGET:.0f}s")
    return 0 if max(times) < BUDGET else 1


if __name__ == "__main__":
    sys.exit(main())
