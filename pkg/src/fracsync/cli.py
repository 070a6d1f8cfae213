"""Command-line runner.

    fracsync run CONFIG.json [--out DIR] [--threads N] [--seed-override S]
    fracsync <experiment> [flags]

Exit codes: 0 all verdicts pass, 1 some verdict failed (artifacts are still
written), 2 invalid configuration, 3 numerical failure during the run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import suite
from .config import DEFAULTS, EXPERIMENTS, ExperimentConfig, load_config, parse_config
from .errors import ConfigError, ExperimentFailure, FracsyncError
from .io import iter_files, save_path, to_jsonable, write_csv, write_json
from .paths import RngSeed, sample_fbm

__all__ = ["main", "execute", "write_artifacts", "resolve_out_dir"]

DEFAULT_OUT = "fracsync_out"


def execute(cfg: ExperimentConfig, threads: int = 1) -> suite.ExperimentResult:
    """Dispatch a validated config to its ensemble driver."""
    s, g, o, name = cfg.system, cfg.grid, cfg.options, cfg.experiment
    if name == "generate-fbm":
        if g.t0 != 0.0 or g.t1 != 1.0:
            raise ConfigError("generate-fbm samples on [0, 1]", "grid")
        law = suite.run_fbm_law(tuple(o["H_list"]), g.n, cfg.trials, cfg.seed)
        reg = suite.run_fbm_regularity(tuple(o["H_list"]), o["regularity_n"], o["regularity_trials"], cfg.seed + 1)
        path = sample_fbm(g, s.H1, RngSeed(cfg.seed, 0))
        sample = suite.Table("path", ["t", "B"], np.column_stack([path.times, path.values]))
        return suite.ExperimentResult(name, law.verdicts + reg.verdicts, law.tables + reg.tables + [sample])
    if name == "fou":
        if g.t0 != 0.0:
            raise ConfigError("the ergodic average runs over [0, T]", "grid.t0")
        return suite.run_ergodic(s.H1, g.t1, g.h, cfg.trials, cfg.seed, s.tail_length)
    if name == "young":
        if g.t0 != 0.0:
            raise ConfigError("the Young experiment runs over [0, T]", "grid.t0")
        return suite.run_young(s.H1, g.n, o["alpha"], cfg.trials, cfg.seed, T=g.t1)
    if name == "equivalence":
        if g.t0 != 0.0:
            raise ConfigError("the equivalence experiment runs over [0, T]", "grid.t0")
        return suite.run_equivalence(
            tuple(tuple(b) for b in o["b_list"]), o["a"], o["c"], s.L, s.H1, g.n, g.t1, o["x0"],
            cfg.trials, cfg.seed, s.tail_length, threads=threads,
        )
    if name == "contraction":
        return suite.run_contraction(s, g, cfg.seed, cfg.trials, threads)
    if name == "pullback":
        return suite.run_pullback(s, g.h, cfg.seed, cfg.trials, tuple(o["start_times"]), o["radius0"], threads)
    burn = o.get("burn_fraction", 0.5)
    if name == "sync-sweep":
        return suite.run_sync_sweep(s, g, list(cfg.kappas), cfg.seed, cfg.trials, threads, burn)
    if name == "averaged-sweep":
        return suite.run_averaged_sweep(s, g, list(cfg.kappas), cfg.seed, cfg.trials, threads, burn)
    if name in ("case-multiplicative", "case-mixed"):
        case = name.split("-", 1)[1]
        return suite.run_case(s, g, list(cfg.kappas), cfg.seed, cfg.trials, case, threads, burn, o.get("rel_tol", 1e-6))
    raise ConfigError(f"unknown experiment {name!r}", "experiment")


def _stem(cfg: ExperimentConfig, kappa) -> str:
    k = "na" if kappa is None else f"{kappa:g}"
    return f"{cfg.experiment}_s{cfg.seed}_k{k}_H{cfg.system.H1:g}-{cfg.system.H2:g}"


def write_artifacts(result: suite.ExperimentResult, cfg: ExperimentConfig, out_dir: Path) -> dict:
    """Write CSV tables, the verdict JSON, the resolved config and the manifest."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for t in result.tables:
        written.append(write_csv(out_dir / f"{_stem(cfg, t.kappa)}_{t.name}.csv", t.header, t.rows))
        if t.name == "path":
            written.append(save_path(out_dir / f"{_stem(cfg, None)}_path.fsync",
                                     sample_fbm(cfg.grid, cfg.system.H1, RngSeed(cfg.seed, 0))))
    verdicts = [v.to_json() for v in result.verdicts]
    written.append(write_json(out_dir / f"{_stem(cfg, None)}_verdicts.json", verdicts))
    written.append(write_json(out_dir / "config.resolved.json", cfg.to_json()))
    manifest = {"experiment": cfg.experiment, "all_pass": result.passed, "files": iter_files(written)}
    write_json(out_dir / "manifest.json", manifest)
    return manifest


def resolve_out_dir(flag: str | None, cfg: ExperimentConfig) -> Path:
    return Path(flag or cfg.output_dir or os.environ.get("FRACSYNC_OUT") or DEFAULT_OUT)


def _add_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="base config file; flags override its fields")
    p.add_argument("--t0", type=float)
    p.add_argument("--t1", type=float)
    p.add_argument("--n", type=int, help="number of grid steps")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--kappas", type=float, nargs="+")
    for key in ("a1", "a2", "H1", "H2", "L", "tail_length"):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
    for key in ("b1", "b2", "c_f", "c_g"):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float, nargs="+")
    p.add_argument("--drift-f", dest="drift_f")
    p.add_argument("--drift-g", dest="drift_g")
    p.add_argument("--H-list", dest="H_list", type=float, nargs="+")
    p.add_argument("--regularity-n", dest="regularity_n", type=int)
    p.add_argument("--regularity-trials", dest="regularity_trials", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--x0", type=float)
    p.add_argument("--start-times", dest="start_times", type=float, nargs="+")
    p.add_argument("--radius0", type=float)
    p.add_argument("--burn-fraction", dest="burn_fraction", type=float)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)


_SYSTEM_KEYS = ("a1", "a2", "H1", "H2", "L", "tail_length", "b1", "b2", "c_f", "c_g", "drift_f", "drift_g")
_OPTION_KEYS = ("H_list", "regularity_n", "regularity_trials", "alpha", "x0", "start_times", "radius0",
                "burn_fraction", "rel_tol")


def _raw_from_flags(experiment: str, ns: argparse.Namespace) -> dict:
    raw: dict = {}
    if ns.config:
        try:
            raw = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load base config: {exc}", "--config") from None
    raw["experiment"] = experiment
    if any(getattr(ns, k) is not None for k in ("t0", "t1", "n")):
        grid = dict(raw.get("grid", DEFAULTS[experiment].get("grid", {})))
        for k in ("t0", "t1", "n"):
            if getattr(ns, k) is not None:
                grid[k] = getattr(ns, k)
        raw["grid"] = grid
    for k in ("trials", "seed", "kappas"):
        if getattr(ns, k) is not None:
            raw[k] = getattr(ns, k)
    for group, keys in (("system", _SYSTEM_KEYS), ("options", _OPTION_KEYS)):
        vals = {k: getattr(ns, k) for k in keys if getattr(ns, k) is not None}
        if vals:
            raw[group] = {**raw.get(group, {}), **vals}
    return raw


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fracsync", description="Synchronization experiments for fBm-driven SDEs.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: $FRACSYNC_OUT or ./fracsync_out)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed-override", dest="seed_override", type=int)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run the experiment named in a JSON config")
    run.add_argument("config")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, parents=[common], help=f"run {name} from flags")
        _add_flags(p)
    return parser


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.threads < 1:
            raise ConfigError("must be at least 1", "--threads")
        if ns.command == "run":
            cfg = load_config(ns.config)
        else:
            cfg = parse_config(_raw_from_flags(ns.command, ns))
        if ns.seed_override is not None:
            if ns.seed_override < 0:
                raise ConfigError("must be nonnegative", "--seed-override")
            cfg = cfg.with_seed(ns.seed_override)
        out_dir = resolve_out_dir(ns.out, cfg)
        result = execute(cfg, ns.threads)
        manifest = write_artifacts(result, cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FracsyncError as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for v in result.verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'}  {v.experiment}  statistic={json.dumps(to_jsonable(v.statistic))}")
    print(f"wrote {len(manifest['files'])} files to {out_dir}")
    if not result.passed:
        print(f"{ExperimentFailure.__name__}: {sum(not v.passed for v in result.verdicts)} verdict(s) failed",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
