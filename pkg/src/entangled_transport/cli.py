"""Command-line driver: `entangled-transport <subcommand> ...`.

Every subcommand accepts a JSON config file plus flag overrides (flags win),
writes data tables and a report into --out, and a sidecar metadata file with
the package version, config hash and wall time.
Exit status: 0 ok, 1 benchmark failures, 2 invalid config, 3 numerical error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import SCHEMA, ExperimentConfig, parse, parse_value, serialize, validate
from .errors import ConfigInvalid, TransportError
from .experiments import reproduce_all, run_experiment

SUBCOMMANDS = {"influence": "influence_map", "evolve": "evolve_slice", "momentum": "momentum",
               "criterion": "criterion", "oracle": "oracle_compare", "bands": "bands",
               "edge": "edge_dispersion", "lattice": "lattice_run", "noon": "noon_run", "run": None}

# convenience flags -> parameter keys
FLAG_KEYS = {"case": "case", "slice": "slice", "t": "t", "travel": "travel", "W": "W", "nx": "nx",
             "ny": "ny", "n_realizations": "n_realizations", "frame": "frame"}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a parameter (value parsed as JSON when possible)")
    p.add_argument("--case")
    p.add_argument("--slice")
    p.add_argument("--t", type=float)
    p.add_argument("--travel", type=float)
    p.add_argument("--W", type=float)
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--n-realizations", dest="n_realizations", type=int)
    p.add_argument("--frame")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="entangled-transport", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, exp in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=f"experiment {exp}" if exp else "run any experiment")
        if exp is None:
            sp.add_argument("--experiment", choices=sorted(SCHEMA))
        _common(sp)
    rp = sub.add_parser("reproduce-all", help="run all benchmarks and write a pass/fail summary")
    rp.add_argument("--out", type=Path, default=Path("reproduce"))
    rp.add_argument("--seed", type=int, default=0)
    rp.add_argument("--quick", action="store_true", help="64x6 lattice with 50 realizations")
    return ap


def config_from_args(args) -> ExperimentConfig:
    raw: dict = {}
    if args.config is not None:
        try:
            raw = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigInvalid(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigInvalid("configuration must be a mapping")
    raw.pop("config_hash", None)  # recomputed after overrides
    exp = SUBCOMMANDS[args.command] or getattr(args, "experiment", None) or raw.get("experiment")
    if exp is None:
        raise ConfigInvalid("missing required key 'experiment'")
    if raw.get("experiment", exp) != exp:
        raise ConfigInvalid(f"config experiment {raw['experiment']!r} does not match subcommand ({exp!r})")
    raw["experiment"] = exp
    params = dict(raw.get("parameters", {}) or {})
    for flag, key in FLAG_KEYS.items():
        val = getattr(args, flag, None)
        if val is not None:
            params[key] = val
    for item in args.set:
        if "=" not in item:
            raise ConfigInvalid(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        if "." in k:
            head, tail = k.split(".", 1)
            block = dict(params.get(head) or {})
            block[tail] = parse_value(v)
            params[head] = block
        else:
            params[k] = parse_value(v)
    raw["parameters"] = params
    out = dict(raw.get("output", {}) or {})
    if args.out is not None:
        out["path"] = str(args.out)
    if args.format is not None:
        out["format"] = args.format
    raw["output"] = out
    if args.seed is not None:
        raw["master_seed"] = args.seed
    return validate(raw)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, cols, data, cfg_hash: str):
    data = np.atleast_2d(np.asarray(data, dtype=float))
    with path.open("w") as fh:
        fh.write(f"# config_hash={cfg_hash}\n")
        fh.write(",".join(cols) + "\n")
        for row in data:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict):
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def execute(cfg: ExperimentConfig) -> list[Path]:
    t0 = time.perf_counter()
    tables, report = run_experiment(cfg)
    wall = time.perf_counter() - t0
    out = Path(cfg.output["path"])
    out.mkdir(parents=True, exist_ok=True)
    h = cfg.hash()
    stem = cfg.experiment
    # artifacts carry only hashed content, so equal hashes give identical bytes
    content = cfg.to_dict()
    content.pop("output")
    files = []
    if cfg.output["format"] == "csv":
        for name, (cols, data) in tables.items():
            f = out / f"{stem}_{name}.csv"
            write_csv(f, cols, data, h)
            files.append(f)
        f = out / f"{stem}_report.json"
        write_json(f, {"config_hash": h, "config": content, "report": report})
        files.append(f)
    else:
        f = out / f"{stem}.json"
        payload = {"config_hash": h, "config": content, "report": report,
                   "tables": {n: {"columns": c, "data": np.asarray(d)} for n, (c, d) in tables.items()}}
        write_json(f, payload)
        files.append(f)
    (out / f"{stem}.config.json").write_text(serialize(cfg))
    write_json(out / f"{stem}.meta.json", {"version": __version__, "config_hash": h,
                                           "wall_time_s": wall, "files": [p.name for p in files]})
    return files


def _print_summary(summary: dict):
    for e in summary["criteria"]:
        m = e["measured"]
        ms = ", ".join(f"{v:.6g}" for v in m) if isinstance(m, list) else (f"{m:.6g}" if isinstance(m, float) else str(m))
        print(f"[{'PASS' if e['pass'] else 'FAIL'}] {e['id']:<9} {e['name']}: {ms} (target {e['target']})")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.command == "reproduce-all":
            summary, timings = reproduce_all(args.seed, args.quick)
            args.out.mkdir(parents=True, exist_ok=True)
            h = hashlib.sha256(json.dumps({"mode": summary["mode"], "seed": args.seed}).encode()).hexdigest()[:16]
            summary = {"config_hash": h, **summary}
            write_json(args.out / "summary.json", summary)
            write_json(args.out / "summary.meta.json", {"version": __version__, "config_hash": h,
                                                        "wall_time_s": timings})
            _print_summary(summary)
            return 0 if summary["all_pass"] else 1
        cfg = config_from_args(args)
        for f in execute(cfg):
            print(f)
        return 0
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TransportError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
