"""Command-line entry point: generate, solve, reschedule, validate, report.

Exit codes: 0 success, 1 violations found, 2 infeasible, 3 usage error,
4 I/O or parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io
from .errors import (
    ConfigError,
    InfeasibleError,
    InputError,
    InstanceError,
    ParseError,
    ScenarioError,
    SizeLimitError,
    UsageError,
)
from .generator import PRESETS, generate, generate_disruptions
from .model import Variant, apply_replacements
from .objective import missed_preferences
from .resched import reschedule
from .solver import Mode, SolverConfig, solve
from .validate import validate, validate_rescheduled

EXIT_OK, EXIT_VIOLATIONS, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3, 4
DEFAULT_LIMIT = {Variant.DAILY: 60.0, Variant.EXTENDED: 60.0, Variant.WEEKLY: 1200.0}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chemosched", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, instance=True):
        if instance:
            p.add_argument("--instance", type=Path, required=True, help="instance fact file")
        p.add_argument("--mode", choices=[v.value for v in Variant], help="problem variant (inferred when omitted)")

    def search(p):
        p.add_argument("--time-limit", type=float, help="seconds (default 60, weekly 1200)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--emit-improvements", action="store_true", help="stream incumbents to stderr")
        p.add_argument("--stall-rounds", type=int,
                       help="stop after this many rounds without improvement (makes runs time-independent)")

    g = sub.add_parser("generate", help="write a synthetic instance, or a disruption set with --old")
    common(g, instance=False)
    g.add_argument("--params", type=Path, help="generator parameter file (key = value lines)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--instance", type=Path, help="instance the disruptions refer to")
    g.add_argument("--old", type=Path, help="schedule to disrupt; switches to disruption output")
    g.add_argument("--unavailable", type=int, default=15, help="unavailable patients")
    g.add_argument("--regimen-changes", type=int, default=0)

    s = sub.add_parser("solve", help="optimize a schedule")
    common(s)
    search(s)
    s.add_argument("--exact", action="store_true", help="complete search with an optimality proof (tiny instances)")
    s.add_argument("--out", type=Path, required=True, help="schedule file; the report goes next to it as .csv")

    r = sub.add_parser("reschedule", help="repair a schedule after disruptions")
    common(r)
    search(r)
    r.add_argument("--old", type=Path, required=True)
    r.add_argument("--disruptions", type=Path, required=True)
    r.add_argument("--out", type=Path, required=True)

    v = sub.add_parser("validate", help="list violated conditions")
    common(v)
    v.add_argument("--schedule", type=Path, required=True)
    v.add_argument("--old", type=Path, help="original schedule, to also check reschedule rules")
    v.add_argument("--disruptions", type=Path)

    rep = sub.add_parser("report", help="phase-2 histogram and cost summary as CSV")
    common(rep)
    rep.add_argument("--schedule", type=Path, required=True)
    rep.add_argument("--out", type=Path, help="CSV path (standard output when omitted)")
    return parser


def _read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _instance(args):
    return io.parse_instance(_read(args.instance), variant=Variant(args.mode) if args.mode else None)


def _config(args, inst, exact: bool = False) -> SolverConfig:
    limit = args.time_limit if args.time_limit is not None else DEFAULT_LIMIT[inst.variant]
    return SolverConfig(
        time_limit=limit, seed=args.seed, workers=args.workers,
        mode=Mode.EXACT if exact else Mode.ANYTIME,
        emit_improvements=args.emit_improvements, max_stall_rounds=args.stall_rounds,
    )


def _progress(args):
    if not args.emit_improvements:
        return None

    def report(elapsed, cost, _schedule):
        print(f"t={elapsed:.3f} cost={cost}", file=sys.stderr, flush=True)

    return report


def cmd_generate(args) -> int:
    if args.old is not None:
        if args.instance is None:
            raise UsageError("--old needs --instance")
        inst = _instance(args)
        old = io.parse_schedule(_read(args.old), inst)
        dis = generate_disruptions(inst, old, args.unavailable, args.regimen_changes, args.seed)
        _write(args.out, io.emit_disruptions(dis))
        return EXIT_OK
    if args.params is not None:
        params = io.parse_params(_read(args.params))
        if args.mode and params.variant is not Variant(args.mode):
            raise UsageError(f"--mode {args.mode} contradicts the parameter file's variant {params.variant.value}")
    else:
        params = PRESETS[args.mode or "daily"]()
    _write(args.out, io.emit_instance(generate(params, args.seed)))
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _instance(args)
    cfg = _config(args, inst, exact=args.exact)
    result = solve(inst, cfg, callback=_progress(args))
    if result.schedule is None:
        print("no feasible schedule found within the time limit", file=sys.stderr)
        return EXIT_INFEASIBLE
    _write(args.out, io.emit_schedule(result.schedule))
    _write(args.out.with_suffix(".csv"), io.emit_report(inst, result.schedule))
    print(f"cost {result.cost} status {result.status}")
    return EXIT_OK


def cmd_reschedule(args) -> int:
    inst = _instance(args)
    old = io.parse_schedule(_read(args.old), inst)
    dis = io.parse_disruptions(_read(args.disruptions))
    cfg = _config(args, inst)
    result = reschedule(inst, old, dis, cfg, callback=_progress(args))
    effective = apply_replacements(inst, dis)
    _write(args.out, io.emit_schedule(result.schedule, predicate="y"))
    extra = [(f"resched_level_{l}", v) for l, v in result.cost.items]
    extra.append(("unnecessary_moves", result.unnecessary_moves))
    _write(args.out.with_suffix(".csv"), io.emit_report(effective, result.schedule, extra))
    print(f"cost {result.cost}")
    print(f"unnecessary moves: {result.unnecessary_moves}")
    print(f"moved registrations: {result.moved}")
    print(f"missed preferences: {missed_preferences(effective, result.schedule)}")
    print(f"proven optimal: {'yes' if result.proven_optimal else 'no'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = _instance(args)
    if (args.old is None) != (args.disruptions is None):
        raise UsageError("--old and --disruptions go together")
    if args.old is not None:
        dis = io.parse_disruptions(_read(args.disruptions))
        old = io.parse_schedule(_read(args.old), inst)
        new = io.parse_schedule(_read(args.schedule), apply_replacements(inst, dis))
        violations = validate_rescheduled(inst, old, new, dis)
    else:
        violations = validate(inst, io.parse_schedule(_read(args.schedule), inst))
    for v in violations:
        print(v)
    if not violations:
        print("valid")
    return EXIT_VIOLATIONS if violations else EXIT_OK


def cmd_report(args) -> int:
    inst = _instance(args)
    text = io.emit_report(inst, io.parse_schedule(_read(args.schedule), inst))
    if args.out is not None:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate, "solve": cmd_solve, "reschedule": cmd_reschedule,
    "validate": cmd_validate, "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InfeasibleError, ScenarioError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, ConfigError, SizeLimitError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, InputError, InstanceError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
