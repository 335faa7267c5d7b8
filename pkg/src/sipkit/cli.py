"""Command-line experiment runner.

``sipkit run --experiment NAME [--seed N] [--config file.json] [--out DIR] [--threads N]``
``sipkit list`` (or ``sipkit --list``)

Exit codes: 0 all checks pass, 1 usage or config error, 2 at least one
golden-number check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

from . import _backend
from .io import write_json

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
_TOP_KEYS = {"experiment", "seed", "out", "threads", "params"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _registry():
    from .experiments import REGISTRY

    return REGISTRY


def _check_type(field: str, value, default):
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, list):
        ok = isinstance(value, list) and (not default or all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value))
    else:
        ok = True
    if not ok:
        raise UsageError(f"field '{field}': expected {type(default).__name__}, got {json.dumps(value)}")
    if isinstance(default, float):
        return float(value)
    return value


def load_config(path: Optional[str]) -> dict:
    """Parse a JSON config; errors carry file, line and column or the offending field."""
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"{path}: cannot read config ({exc.strerror})") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: top level must be a JSON object")
    extra = set(cfg) - _TOP_KEYS
    if extra:
        raise UsageError(f"{path}: unknown field(s) {sorted(extra)}; allowed {sorted(_TOP_KEYS)}")
    if "params" in cfg and not isinstance(cfg["params"], dict):
        raise UsageError(f"{path}: field 'params' must be an object")
    for key in ("seed", "threads"):
        if key in cfg and (not isinstance(cfg[key], int) or isinstance(cfg[key], bool)):
            raise UsageError(f"{path}: field '{key}' must be an integer")
    for key in ("experiment", "out"):
        if key in cfg and not isinstance(cfg[key], str):
            raise UsageError(f"{path}: field '{key}' must be a string")
    return cfg


def resolve(args, cfg: dict):
    reg = _registry()
    name = args.experiment or cfg.get("experiment")
    if not name:
        raise UsageError("no experiment given (use --experiment or the config's 'experiment')")
    if name not in reg:
        raise UsageError(f"unknown experiment {name!r}; choose from {', '.join(reg)}")
    exp = reg[name]
    params = dict(exp.defaults)
    for k, v in cfg.get("params", {}).items():
        if k not in exp.defaults:
            raise UsageError(f"field 'params.{k}': not a parameter of {name}; "
                             f"allowed {sorted(exp.defaults)}")
        params[k] = _check_type(f"params.{k}", v, exp.defaults[k])
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    out = Path(args.out or cfg.get("out") or Path("runs") / name)
    threads = args.threads if args.threads is not None else cfg.get("threads")
    return exp, params, int(seed), out, threads


def run_experiment(exp, params: dict, seed: int, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    checks = exp.run(params, seed, out)
    wall = time.perf_counter() - t0
    summary = {"experiment": exp.name, "seed": seed, "checks": [c.to_dict() for c in checks],
               "wall_time_s": round(wall, 3)}
    write_json(out / "summary.json", summary)
    write_json(out / "config.json", {"experiment": exp.name, "seed": seed, "params": params})
    return summary


def _print_list(stream=None):
    stream = stream or sys.stdout
    reg = _registry()
    width = max(len(n) for n in reg)
    for name, exp in reg.items():
        stream.write(f"{name:<{width}}  {exp.description}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sipkit", description="stochastic inverse problem experiments")
    p.add_argument("--list", action="store_true", help="list experiments and exit")
    p.add_argument("--threads", type=int, default=None, help="worker threads for numerical kernels")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("--experiment", "-e", help="experiment name (see 'sipkit list')")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--config", help="JSON config file")
    r.add_argument("--out", help="output directory (default runs/<experiment>)")
    r.add_argument("--threads", type=int, default=None, dest="run_threads",
                   help="worker threads for numerical kernels")
    sub.add_parser("list", help="list experiments")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list or args.command == "list":
        _print_list()
        return EXIT_OK
    if args.command != "run":
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.run_threads is not None:
        args.threads = args.run_threads
    try:
        cfg = load_config(args.config)
        exp, params, seed, out, threads = resolve(args, cfg)
        if threads is not None and threads < 1:
            raise UsageError("threads must be positive")
    except UsageError as exc:
        sys.stderr.write(f"sipkit: error: {exc}\n")
        return EXIT_USAGE
    _backend.set_threads(threads if threads is not None else (os.cpu_count() or 1))
    summary = run_experiment(exp, params, seed, out)
    failed = [c["name"] for c in summary["checks"] if not c["pass"]]
    for c in summary["checks"]:
        status = "PASS" if c["pass"] else "FAIL"
        sys.stdout.write(f"{status}  {c['name']}: value={c['value']!r} target={c['target']!r} "
                         f"tol={c['tol']!r}\n")
    sys.stdout.write(f"summary written to {out / 'summary.json'} ({summary['wall_time_s']} s)\n")
    if failed:
        sys.stderr.write(f"sipkit: failing checks: {', '.join(failed)}\n")
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
