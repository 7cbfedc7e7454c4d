"""Command-line front end.

One command per invocation:

  tune SOURCE     solve per-point widths and write the annotated source,
                  the reduced-precision Python script, and a JSON report
  verify SOURCE   re-run reference vs tuned under a solved width map and
                  print the verification table
  bench           orbit benchmark sweep; writes summary and series CSVs
  export-lp SOURCE
                  write the constraint system in LP format
  run SOURCE      execute at one uniform precision and print the final
                  environment

Exit status is 0 on success, 1 when analysis or verification fails,
2 on usage errors.  Error messages go to standard error prefixed with
the command that raised them.

Artifacts are deterministic: the same invocation writes byte-identical
files.  The one timing field (analysis_seconds) is therefore dropped
from tune's report unless --timings is given; the bench summary keeps
its timing columns because its schema requires them.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import mpfloat
from .constraints import GenError, gen_ilp, gen_refined
from .flow import FlowError, build_links
from .interp import EvalError, analyze_ranges, run_tuned
from .lpfile import export_lp
from .mpfloat import MPDomainError
from .nbody import ExperimentPlan, run_experiment
from .parse import ParseError, parse_program
from .render import MissingWidthError, emit_annotated
from .codegen import emit_mp_code
from .solver import Policy, SolverError
from .tuner import TuneError, TuningConfig, tune, verify

_ERRORS = (ParseError, FlowError, GenError, SolverError, EvalError,
           TuneError, MPDomainError, MissingWidthError, OSError,
           ValueError, RuntimeError)

_SCHEMAS = """\
file formats:
  annotated source   input program with |n| width tags after every literal,
                     variable, operator, and assignment target
  mp script          plain Python over mp(x, n)/mp_sqrt(x, n); running it
                     reproduces the tuned execution bit for bit
  report JSON        method, per-point widths, system sizes, totals, and
                     the verification table
  bench summary CSV  nsb, horizon_years, body, distance_au, tune_seconds,
                     run_seconds
  bench series CSV   step, body, distance_au (step 0 = initial state)
  samples JSON       object {name: value} or list of such objects binding
                     the program's free inputs; strings are exact decimals,
                     numbers are taken at double precision
"""


class _UsageError(Exception):
    pass


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def _load_bindings(path: str) -> tuple[dict, ...]:
    data = json.loads(Path(path).read_text())
    sets = data if isinstance(data, list) else [data]
    out = []
    for i, entry in enumerate(sets):
        if not isinstance(entry, dict):
            raise ValueError(f"samples entry {i} is not an object")
        conv = {}
        for name, v in entry.items():
            if isinstance(v, str):
                conv[name] = v
            elif isinstance(v, bool):
                raise ValueError(f"samples value for {name!r} is a boolean")
            elif isinstance(v, int):
                conv[name] = str(v)
            elif isinstance(v, float):
                conv[name] = mpfloat.from_float(v)
            else:
                raise ValueError(f"samples value for {name!r} is not a number")
        out.append(conv)
    return tuple(out)


def _config(args) -> TuningConfig:
    return TuningConfig(
        method=getattr(args, "method", "ilp"),
        pref=args.pref,
        cond_nsb=args.cond_nsb,
        pmax=args.pmax,
        bindings=_load_bindings(args.samples) if args.samples else (),
    )


def _input_names(cfg: TuningConfig) -> tuple[str, ...]:
    return tuple(sorted({n for b in cfg.bindings for n in b}))


def _report_text(report, timings: bool) -> str:
    raw = json.loads(report.to_json())
    if not timings:
        del raw["analysis_seconds"]
    return json.dumps(raw, sort_keys=True, indent=2) + "\n"


def cmd_tune(args) -> int:
    source = Path(args.source).read_text()
    cfg = _config(args)
    assignment, report = tune(source, cfg)
    prog = parse_program(source, _input_names(cfg))
    widths = assignment.widths()

    base = Path(args.source)
    annotated_path = base.with_suffix(".annotated.pop")
    script_path = base.with_suffix(".mp.txt")
    report_path = Path(args.report) if args.report else base.with_suffix(".report.json")
    annotated_path.write_text(emit_annotated(prog, widths))
    script_path.write_text(emit_mp_code(prog, widths))
    report_path.write_text(_report_text(report, args.timings))
    written = [annotated_path, script_path, report_path]

    if args.emit_lp:
        lp_path = base.with_suffix(".lp")
        lp_path.write_text(_export_text(prog, cfg))
        written.append(lp_path)

    for name in sorted(report.total_bits):
        print(f"total bits ({name}): {report.total_bits[name]}")
    for path in written:
        print(f"wrote {path}")
    if not report.all_passed():
        print("bittune: tune: verification table contains failures; "
              "see the report", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    source = Path(args.source).read_text()
    cfg = _config(args)
    report_path = Path(args.report) if args.report else \
        Path(args.source).with_suffix(".report.json")
    raw = json.loads(report_path.read_text())
    try:
        widths = {int(p): int(n) for p, n in raw["nsb"].items()}
    except (KeyError, AttributeError):
        raise ValueError(f"{report_path} has no nsb width map")

    rows, ref, tuned = verify(source, widths, cfg)
    print(f"{'variable':<16} {'bits':>4} {'error':>13} {'bound':>13}  result")
    for r in rows:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.var:<16} {r.bits:>4} {r.error:>13} {r.bound:>13}  {status}")
    ok = all(r.passed for r in rows) and ref.steps == tuned.steps
    if ref.steps != tuned.steps:
        print(f"control flow diverged: reference ran {ref.steps} steps, "
              f"tuned {tuned.steps}")
    print(f"{sum(r.passed for r in rows)}/{len(rows)} within tolerance")
    return 0 if ok else 1


def cmd_bench(args) -> int:
    for n in args.nsb:
        if not 1 <= n <= args.pref:
            raise _UsageError(f"--nsb value {n} outside [1, {args.pref}]")
    for y in args.years:
        if y < 0:
            raise _UsageError(f"--years value {y:g} is negative")
    plan = ExperimentPlan(
        nsb_values=args.nsb,
        horizons_years=args.years,
        dt=args.dt,
        method=args.method,
        pref=args.pref,
        cond_nsb=args.cond_nsb,
        write_series=not args.no_series,
        out_dir=args.out,
    )
    rows = run_experiment(plan, jobs=args.jobs)
    for r in rows:
        print(f"nsb {r.nsb:>3}  {r.horizon_years:>5g} y  {r.body:<8} "
              f"{r.distance_au:.3e} AU")
    print(f"wrote {Path(args.out) / 'summary.csv'} ({len(rows)} rows)")
    return 0


def _export_text(prog, cfg: TuningConfig, refined: bool = False) -> str:
    links = build_links(prog)
    ranges = analyze_ranges(prog, cfg.pref, cfg.bindings or None,
                            ufp_zero=-cfg.pmax)
    if refined:
        system = gen_refined(prog, ranges, links, cfg.cond_nsb, cfg.pmax)
        return export_lp(system, Policy.const_one(system))
    system = gen_ilp(prog, ranges, links, cfg.cond_nsb, cfg.pmax)
    return export_lp(system)


def cmd_export_lp(args) -> int:
    source = Path(args.source).read_text()
    cfg = _config(args)
    prog = parse_program(source, _input_names(cfg))
    out_path = Path(args.out) if args.out else Path(args.source).with_suffix(".lp")
    out_path.write_text(_export_text(prog, cfg, args.refined))
    print(f"wrote {out_path}")
    return 0


def cmd_run(args) -> int:
    source = Path(args.source).read_text()
    cfg = _config(args)
    if not 1 <= args.bits <= cfg.pmax:
        raise _UsageError(f"--bits {args.bits} outside [1, {cfg.pmax}]")
    prog = parse_program(source, _input_names(cfg))
    widths = dict.fromkeys(range(len(prog.points)), args.bits)
    trace = run_tuned(prog, widths, cfg.bindings[0] if cfg.bindings else None,
                      max_steps=cfg.max_steps)
    for name in sorted(trace.env):
        print(f"{name} = {mpfloat.format_decimal_exact(trace.env[name])}")
    return 0


def _add_precision_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--pref", type=int, default=mpfloat.DEFAULT_PRECISION,
                   help="reference precision in bits (default %(default)s)")
    p.add_argument("--cond-nsb", type=int, default=53,
                   help="width demanded of comparison operands (default %(default)s)")
    p.add_argument("--pmax", type=int, default=500,
                   help="upper bound of every solved width (default %(default)s)")
    p.add_argument("--samples", metavar="PATH",
                   help="JSON input bindings for programs with free variables")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bittune",
        description="Bit-level precision tuning for straight-line and "
                    "loop programs over real arithmetic.",
        epilog=_SCHEMAS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("tune", help="solve widths and write artifacts")
    p.add_argument("source", help="program file")
    p.add_argument("--method", choices=("ilp", "pi"), default="ilp",
                   help="plain integer solve or policy-iteration refinement")
    _add_precision_flags(p)
    p.add_argument("--report", metavar="PATH",
                   help="report destination (default SOURCE.report.json)")
    p.add_argument("--emit-lp", action="store_true",
                   help="also write the solved system as SOURCE.lp")
    p.add_argument("--timings", action="store_true",
                   help="keep analysis_seconds in the report (breaks "
                        "byte-identical reruns)")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("verify", help="check a solved width map")
    p.add_argument("source", help="program file")
    p.add_argument("--report", metavar="PATH",
                   help="report holding the width map (default "
                        "SOURCE.report.json)")
    _add_precision_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run the orbit benchmark sweep")
    p.add_argument("--nsb", type=_int_list, default=(11, 18, 24, 34, 43, 53),
                   metavar="LIST", help="requirement widths, comma separated "
                   "(default 11,18,24,34,43,53)")
    p.add_argument("--years", type=_float_list, default=(10.0,), metavar="LIST",
                   help="horizons in years, comma separated (default 10)")
    p.add_argument("--dt", default="0.01", help="time step (default %(default)s)")
    p.add_argument("--method", choices=("ilp", "pi"), default="ilp")
    p.add_argument("--pref", type=int, default=mpfloat.DEFAULT_PRECISION,
                   help="reference precision in bits (default %(default)s)")
    p.add_argument("--cond-nsb", type=int, default=53,
                   help="width demanded of comparison operands (default %(default)s)")
    p.add_argument("--out", default="bench-results", metavar="DIR",
                   help="output directory (default %(default)s)")
    p.add_argument("--jobs", type=_positive, default=1,
                   help="worker processes for independent cells (default 1)")
    p.add_argument("--no-series", action="store_true",
                   help="skip the per-step series files")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-lp", help="write the constraint system as LP")
    p.add_argument("source", help="program file")
    p.add_argument("--refined", action="store_true",
                   help="export the carry-refined system under the "
                        "constant-one policy instead of the plain one")
    p.add_argument("--out", metavar="PATH",
                   help="destination (default SOURCE.lp)")
    _add_precision_flags(p)
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("run", help="execute at one uniform precision")
    p.add_argument("source", help="program file")
    p.add_argument("--bits", type=int, default=53,
                   help="significand width for every operation (default %(default)s)")
    _add_precision_flags(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return args.func(args)
    except _UsageError as e:
        print(f"bittune: {args.command}: {e}", file=sys.stderr)
        return 2
    except _ERRORS as e:
        print(f"bittune: {args.command}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
