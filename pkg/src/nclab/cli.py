"""Command-line driver: ``nclab run | list-models | describe-suite``."""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import models as md
from . import operator_core as oc
from . import singular_trace as st
from .suites import DEFAULT_SWEEP, SUITES

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_N = {"circle": 512, "torus2": 24}

DEFAULTS = {
    "model": {"name": "circle", "N": None, "N_sweep": None, "p": None, "m": 1.0},
    "suites": ["exact"],
    "trace": {"profiles": list(st.DEFAULT_PROFILES), "window": None},
    "regulator": {"t_min_factor": None, "t_max": 0.2, "tail": {"k": 2.0, "l": 4}},
    "cycles": {},
    "cycle": None,
    "output": {"format": "json", "path": None},
    "seed": 0,
}

MODEL_DOCS = {
    "circle": "circle: D e_n = n e_n on |n| <= N, generator u (shift), odd, p = 1. Parameters: N >= 8.",
    "torus2": "torus2: flat 2-torus, modes |n|,|m| <= N, D = n sigma_x + m sigma_y, grading sigma_z, "
              "generators u, v, p = 2. Parameters: N >= 4.",
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _parse_list(text: str, cast=str) -> list:
    try:
        return [cast(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse list {text!r}: {exc}") from None


def resolve_config(args) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(user) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = _merge(cfg, user)
    flags = {"name": args.model, "N": args.N, "p": args.p, "m": args.m}
    for key, val in flags.items():
        if val is not None:
            cfg["model"][key] = val
    if args.N_sweep is not None:
        cfg["model"]["N_sweep"] = _parse_list(args.N_sweep, int)
    if args.suites is not None:
        cfg["suites"] = _parse_list(args.suites)
    if args.cycle is not None:
        cfg["cycle"] = args.cycle
    if args.format is not None:
        cfg["output"]["format"] = args.format
    if args.out is not None:
        cfg["output"]["path"] = args.out
    if args.seed is not None:
        cfg["seed"] = args.seed
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    mc = cfg["model"]
    if mc["name"] not in md.MODEL_BUILDERS:
        raise ConfigError(f"unknown model {mc['name']!r}; known: {sorted(md.MODEL_BUILDERS)}")
    expected_p = {"circle": 1, "torus2": 2}[mc["name"]]
    if mc["p"] is not None and mc["p"] != expected_p:
        raise ConfigError(f"model {mc['name']} has p = {expected_p}, got p = {mc['p']}")
    mc["p"] = expected_p
    if mc["N"] is None:
        mc["N"] = DEFAULT_N[mc["name"]]
    if not isinstance(mc["N"], int) or mc["N"] < 1:
        raise ConfigError("N must be a positive integer")
    sweep = mc["N_sweep"]
    if sweep is not None:
        if not sweep or any(not isinstance(n, int) for n in sweep):
            raise ConfigError("N_sweep must be a non-empty list of integers")
        if any(b <= a for a, b in zip(sweep, sweep[1:])):
            raise ConfigError("N_sweep must be strictly increasing")
    if not (isinstance(mc["m"], (int, float)) and mc["m"] > 0):
        raise ConfigError("mass m must be positive")
    mc["m"] = float(mc["m"])
    suites = cfg["suites"]
    if not suites:
        raise ConfigError("suites must be non-empty")
    bad = [s for s in suites if s not in SUITES]
    if bad:
        raise ConfigError(f"unknown suites {bad}; known: {list(SUITES)}")
    profiles = cfg["trace"]["profiles"]
    if not profiles or any(p not in st.PROFILE_SHAPES for p in profiles):
        raise ConfigError(f"trace.profiles must be a non-empty subset of {list(st.PROFILE_SHAPES)}")
    w = cfg["trace"]["window"]
    if w is not None and not (isinstance(w, list) and len(w) == 2 and 0 < w[0] < w[1]):
        raise ConfigError("trace.window must be [lo, hi] with 0 < lo < hi")
    rc = cfg["regulator"]
    if rc["t_min_factor"] is not None and not rc["t_min_factor"] > 0:
        raise ConfigError("regulator.t_min_factor must be positive")
    if not rc["t_max"] > 0:
        raise ConfigError("regulator.t_max must be positive")
    if not (rc["tail"]["k"] > 0 and isinstance(rc["tail"]["l"], int) and rc["tail"]["l"] >= 0):
        raise ConfigError("regulator.tail needs k > 0 and integer l >= 0")
    if cfg["output"]["format"] not in ("json", "csv"):
        raise ConfigError("output.format must be json or csv")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    if cfg["cycle"] is not None:
        from .chern import CYCLES
        if cfg["cycle"] not in CYCLES and cfg["cycle"] not in cfg["cycles"]:
            raise ConfigError(f"unknown cycle {cfg['cycle']!r}")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x) if np.isfinite(x) else str(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _workers(n: int) -> int:
    cap = os.environ.get("NCLAB_THREADS")
    try:
        cap = int(cap) if cap else os.cpu_count() or 1
    except ValueError:
        cap = 1
    return max(1, min(cap, n))


def run_suites(cfg: dict) -> dict:
    names = list(cfg["suites"])
    with ThreadPoolExecutor(max_workers=_workers(len(names))) as pool:
        futures = {name: pool.submit(SUITES[name][0], cfg) for name in names}
        results = {name: futures[name].result() for name in names}
    suites = {}
    for name in sorted(results):
        assertions, data = results[name]
        rows = sorted((a.to_dict() for a in assertions), key=lambda r: r["name"])
        suites[name] = {"assertions": rows, "data": data,
                        "passed": all(r["passed"] for r in rows)}
    return suites


def build_report(cfg: dict, suites: dict) -> dict:
    return {
        "tool": "nclab", "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "config": cfg, "suites": suites,
        "passed": all(s["passed"] for s in suites.values()),
    }


def to_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "name", "value", "expected", "tol", "pass"])
    for sname, s in report["suites"].items():
        for r in s["assertions"]:
            w.writerow([sname, r["name"], repr(float(r["value"])), r["expected"], r["tol"], r["passed"]])
    return buf.getvalue()


def _emit(report: dict, cfg: dict) -> None:
    fmt, path = cfg["output"]["format"], cfg["output"]["path"]
    text = to_csv(report) if fmt == "csv" else json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"nclab: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        suites = run_suites(cfg)
    except oc.NumericFailure as exc:
        print(f"nclab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (oc.DomainError, KeyError) as exc:
        print(f"nclab: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = build_report(cfg, suites)
    _emit(report, cfg)
    for name, s in report["suites"].items():
        failed = [r["name"] for r in s["assertions"] if not r["passed"]]
        status = "PASS" if not failed else "FAIL " + ", ".join(failed)
        print(f"[{name}] {status}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_list_models(args) -> int:
    for name in md.MODEL_BUILDERS:
        print(MODEL_DOCS.get(name, name))
    return EXIT_OK


def cmd_describe_suite(args) -> int:
    if args.name not in SUITES:
        print(f"nclab: unknown suite {args.name!r}; known: {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{args.name}: {SUITES[args.name][1]}")
    if args.name == "pairing":
        print(f"default N sweeps: {DEFAULT_SWEEP}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nclab", description="Numerical checks for index pairings of spectral triples.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run verification suites")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--model")
    run.add_argument("--N", type=int)
    run.add_argument("--N-sweep", dest="N_sweep", help="comma-separated increasing cutoffs")
    run.add_argument("--p", type=int)
    run.add_argument("--m", type=float)
    run.add_argument("--suites", help="comma-separated suite names")
    run.add_argument("--cycle")
    run.add_argument("--out")
    run.add_argument("--format", choices=("json", "csv"))
    run.add_argument("--seed", type=int)
    run.set_defaults(func=cmd_run)
    lm = sub.add_parser("list-models", help="list registered models")
    lm.set_defaults(func=cmd_list_models)
    ds = sub.add_parser("describe-suite", help="document a suite and its gates")
    ds.add_argument("name")
    ds.set_defaults(func=cmd_describe_suite)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
