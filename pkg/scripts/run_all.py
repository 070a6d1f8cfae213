"""Run every config in configs/ (except the smoke config) and summarize verdicts.

    python3 scripts/run_all.py [--out DIR] [--threads N] [--only NAME ...]
"""

import argparse
import json
import sys
import time
from pathlib import Path

from fracsync import cli

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="fracsync_out")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--only", nargs="+", help="config stems to run")
    ns = p.parse_args(argv)
    configs = sorted((ROOT / "configs").glob("*.json"))
    configs = [c for c in configs if c.stem != "smoke" and (not ns.only or c.stem in ns.only)]
    worst = 0
    for cfg in configs:
        out = Path(ns.out) / cfg.stem
        start = time.perf_counter()
        code = cli.main(["run", str(cfg), "--out", str(out), "--threads", str(ns.threads)])
        manifest = json.loads((out / "manifest.json").read_text()) if (out / "manifest.json").exists() else {}
        print(f"== {cfg.stem}: exit {code}, all_pass={manifest.get('all_pass')}, {time.perf_counter() - start:.1f}s")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
