"""Command-line entry point.

    movanc run <scenario> [-o DIR] [--set key=value]... [--format csv,json]
    movanc suite <dir> [-j N] [-o DIR]
    movanc oracle <scenario> [--set key=value]... [--json]
    movanc validate <scenario> [--set key=value]... [--print]

Exit status: 0 on success, 1 on scenario errors, 2 on divergence.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .engine import run_scenario, run_suite
from .errors import DivergenceError, MovancError
from .io import emit_csv
from .oracle import stage_oracles
from .scenario import dump_scenario, parse_scenario_file

EXIT_OK, EXIT_SCENARIO, EXIT_DIVERGED = 0, 1, 2
OUTPUT_ENV = "MOVANC_OUTPUT_DIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_SCENARIO, f"{self.prog}: error: {message}\n")


def _default_out(name):
    return Path(os.environ.get(OUTPUT_ENV, "movanc-out")) / name


def _fmt_vec(w, limit=8):
    w = np.asarray(w)
    body = ", ".join(f"{v:.4f}" for v in w[:limit])
    return f"[{body}{', ...' if w.size > limit else ''}]"


def _print_summary(log, out=sys.stdout):
    print(f"{log.name} ({log.variant}, rho2={log.rho2:g})", file=out)
    for s in log.stages:
        print(f"  stage {s.index} [{s.start_s:g}, {s.stop_s:g}) s: sigma_y2={s.sigma_y2:.4f} "
              f"sigma_e2={s.sigma_e2:.4g} alpha={s.mean_alpha:.4f} "
              f"max_ma={s.max_sigma_y2_ma:.3f} viol={s.violation_fraction:.2%} "
              f"w={_fmt_vec(s.final_w, 4)}", file=out)


def cmd_run(args):
    sc = parse_scenario_file(args.scenario, args.set)
    log = run_scenario(sc)
    out = Path(args.output) if args.output else _default_out(sc.name or Path(args.scenario).stem)
    formats = tuple(f.strip() for f in args.format.split(","))
    emit_csv(log, out, formats=formats)
    _print_summary(log)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_suite(args):
    files = sorted(Path(args.directory).glob("*.scenario"))
    if not files:
        print(f"no *.scenario files in {args.directory}", file=sys.stderr)
        return EXIT_SCENARIO
    scenarios, status = [], EXIT_OK
    for f in files:
        try:
            scenarios.append((f, parse_scenario_file(f)))
        except MovancError as exc:
            print(f"{f}: {exc}", file=sys.stderr)
            status = EXIT_SCENARIO
    results = run_suite([sc for _, sc in scenarios], parallelism=args.jobs)
    root = Path(args.output) if args.output else Path(os.environ.get(OUTPUT_ENV, "movanc-out"))
    for (f, sc), res in zip(scenarios, results):
        if isinstance(res, Exception):
            print(f"{f}: {res}", file=sys.stderr)
            code = EXIT_DIVERGED if isinstance(res, DivergenceError) else EXIT_SCENARIO
            status = max(status, code)
            continue
        emit_csv(res, root / f.stem)
        _print_summary(res)
    return status


def cmd_oracle(args):
    sc = parse_scenario_file(args.scenario, args.set)
    results = stage_oracles(sc)
    if args.json:
        doc = [{
            "stage": o.index, "start_s": o.start_s, "stop_s": o.stop_s,
            "w_unconstrained": o.w_unconstrained.tolist(),
            "power_unconstrained": o.power_unconstrained,
            "w_constrained": o.solution.w.tolist(), "lambda": o.solution.lam,
            "power_constrained": o.solution.power, "constraint_active": o.solution.active,
            "residual_power": o.solution.residual_power,
            "sigma_d2": o.sigma_d2, "gs": o.gs, "offline_alpha": o.offline_alpha,
        } for o in results]
        print(json.dumps(doc, indent=2))
        return EXIT_OK
    print(f"{sc.name} (rho2={sc.rho2:g}, taps={sc.taps})")
    for o in results:
        print(f"stage {o.index} [{o.start_s:g}, {o.stop_s:g}) s")
        print(f"  unconstrained w = {_fmt_vec(o.w_unconstrained)}  power = {o.power_unconstrained:.6g}")
        print(f"  constrained   w = {_fmt_vec(o.solution.w)}  power = {o.solution.power:.6g}"
              f"  lambda = {o.solution.lam:.6g}")
        print(f"  sigma_d2 = {o.sigma_d2:.6g}  Gs = {o.gs:.6g}  offline alpha = {o.offline_alpha:.6g}")
    return EXIT_OK


def cmd_validate(args):
    sc = parse_scenario_file(args.scenario, args.set)
    if args.print:
        sys.stdout.write(dump_scenario(sc))
    else:
        print(f"{args.scenario}: ok ({sc.variant.name}, {len(sc.stages)} stage(s), "
              f"{sc.duration:g} s at {sc.fs:g} Hz)")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="movanc", description="Power-constrained active noise control simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run one scenario and write trace/weights/summary")
    r.add_argument("scenario")
    r.add_argument("-o", "--output", help=f"output directory (default ${OUTPUT_ENV}/<name>)")
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    r.add_argument("--format", default="csv,json", help="comma list of csv, json")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("suite", help="run every *.scenario in a directory")
    s.add_argument("directory")
    s.add_argument("-j", "--jobs", type=int, default=1)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_suite)

    o = sub.add_parser("oracle", help="print constrained/unconstrained Wiener solutions per stage")
    o.add_argument("scenario")
    o.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    o.add_argument("--json", action="store_true")
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("validate", help="parse and validate a scenario file")
    v.add_argument("scenario")
    v.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    v.add_argument("--print", action="store_true", help="print the normalized scenario")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_SCENARIO
    if getattr(args, "jobs", 1) < 1:
        print("movanc: --jobs must be >= 1", file=sys.stderr)
        return EXIT_SCENARIO
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"movanc: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (MovancError, ValueError) as exc:
        print(f"movanc: {exc}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
