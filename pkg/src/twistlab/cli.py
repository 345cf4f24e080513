"""Command line: ``twistlab verify|sweep|list-suites|show-config``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import dump_config, load_config
from .errors import ConfigInvalid, ScenarioBuildFailed
from .suites import SUITES, default_config, run_suite, sweep

OUT_ENV = "TWISTLAB_OUT"


def _config(args, suite_name: str | None):
    base = default_config(suite_name) if suite_name else None
    cfg = load_config(args.config, base) if args.config else (base or default_config("homology"))
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    return cfg


def _out_dir(args) -> Path | None:
    d = args.out or os.environ.get(OUT_ENV)
    if not d:
        return None
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_verify(args) -> int:
    cfg = _config(args, args.suite)
    rep = run_suite(cfg, args.suite)
    text = rep.to_json()
    out = _out_dir(args)
    if out is not None:
        (out / f"{args.suite}.json").write_text(text)
    if args.json:
        sys.stdout.write(text)
    else:
        print(f"suite {rep.suite} on {rep.scenario}: {'PASS' if rep.passed else 'FAIL'} ({rep.wall_time:.1f} s)")
        for line in rep.summary_lines():
            print("  " + line)
    return 0 if rep.passed else 1


def cmd_sweep(args) -> int:
    from .suites import METRICS

    if args.metric not in METRICS:
        raise ConfigInvalid(f"unknown metric {args.metric!r}; expected one of {sorted(METRICS)}")
    kind = METRICS[args.metric][0]
    suite_for_kind = {"circle_crossed": "twisted_boundedness", "circle": "character"}[kind]
    cfg = _config(args, suite_for_kind)
    vals = [v for v in (args.values or "").split(",") if v.strip()]
    conv = float if args.param == "t" else int
    try:
        values = [conv(v) for v in vals]
    except ValueError:
        raise ConfigInvalid(f"bad value list {args.values!r}") from None
    text = sweep(cfg, args.param, values, args.metric)
    out = _out_dir(args)
    if out is not None:
        (out / f"sweep_{args.metric}.csv").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_list(args) -> int:
    for name in sorted(SUITES):
        s = SUITES[name]
        print(f"{name:20s} [{', '.join(s.kinds)}]  {s.about}")
    return 0


def cmd_show(args) -> int:
    sys.stdout.write(dump_config(_config(args, args.suite)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twistlab", description="Checks for twisted spectral triples and their local index formulas.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML scenario file")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV})")
    common.add_argument("--json", action="store_true", help="print the JSON report")
    sub = p.add_subparsers(dest="cmd", required=True)
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite")
    v.set_defaults(func=cmd_verify)
    s = sub.add_parser("sweep", parents=[common], help="sweep a parameter and emit CSV")
    s.add_argument("--param", required=True, help="N or t")
    s.add_argument("--values", default="", help="comma separated values")
    s.add_argument("--metric", required=True)
    s.set_defaults(func=cmd_sweep)
    ls = sub.add_parser("list-suites", help="list suites")
    ls.set_defaults(func=cmd_list)
    sc = sub.add_parser("show-config", parents=[common], help="print the resolved config")
    sc.add_argument("suite", nargs="?")
    sc.set_defaults(func=cmd_show)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigInvalid, ScenarioBuildFailed) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
