"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 protocol abort / suite failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Sequence

from .adversary import INTERCEPT_RESEND, NONE, TROJAN_HORSE, AdversarySpec
from .analysis import ORACLE_CATALOGUE, ExperimentPlan, oracle_table, run_experiment
from .claims import checklist_document, run_suite

EXIT_OK, EXIT_USAGE, EXIT_ABORT = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _dump_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--output", "-o", help="report file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sqss", description="Semi-quantum secret sharing attack simulator")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    run = sub.add_parser("run", help="run one experiment plan")
    run.add_argument("--protocol", choices=("randomization", "measure-resend"), default="randomization")
    run.add_argument("--N", "-n", dest="n", type=int, default=1000, help="triplets per run")
    run.add_argument("--runs", type=int, default=100)
    run.add_argument("--adversary", choices=(NONE, INTERCEPT_RESEND, TROJAN_HORSE), default=NONE)
    run.add_argument("--m", type=int, default=0, help="forced case-3 triplets (intercept-resend)")
    run.add_argument("--invisible-per-slot", type=int, default=1)
    run.add_argument("--spies-per-slot", type=int, default=1, help="delay spy photons per slot")
    run.add_argument("--solution1", action="store_true", help="case-3 occurrence test")
    run.add_argument("--significance", type=float, default=0.001)
    run.add_argument("--solution2", action="store_true", help="wavelength filter + photon number splitter")
    run.add_argument("--threshold", type=float, default=0.01, help="multi-photon abort threshold")
    run.add_argument("--error-threshold", type=float, default=0.0)
    run.add_argument("--share-probability", type=float, default=0.5)
    run.add_argument("--trace", action="store_true", help="include per-run event logs")
    _add_common(run)

    suite = sub.add_parser("suite", help="run the acceptance claim suite")
    suite.add_argument("--scale", type=float, default=1.0, help="multiply run/sample counts")
    suite.add_argument("--criteria", type=int, nargs="*", help="subset of criteria to run")
    _add_common(suite)

    oracle = sub.add_parser("oracle", help="print an exact outcome distribution")
    oracle.add_argument("name", help=f"one of: {', '.join(ORACLE_CATALOGUE)}")
    return parser


def cmd_run(args) -> int:
    try:
        spec = AdversarySpec(args.adversary, args.m, args.invisible_per_slot, args.spies_per_slot)
        plan = ExperimentPlan(
            protocol=args.protocol, n=args.n, runs=args.runs, adversary=spec,
            solution1=args.solution1, significance=args.significance,
            solution2=args.solution2, multiphoton_threshold=args.threshold,
            error_threshold=args.error_threshold, share_probability=args.share_probability,
            seed=args.seed,
        )
        if args.adversary == INTERCEPT_RESEND and args.protocol != "randomization":
            raise ValueError("intercept-resend targets the randomization-based protocol")
        if args.adversary == TROJAN_HORSE and args.protocol != "measure-resend":
            raise ValueError("the Trojan-horse attack targets the measure-resend protocol")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_experiment(plan)
    if args.format == "json":
        text = _dump_json(report.to_dict(trace=args.trace))
    else:
        text = _dump_csv(report.csv_rows())
    _emit(text, args.output)
    return EXIT_ABORT if report.summary.aborted else EXIT_OK


def cmd_suite(args) -> int:
    if args.scale <= 0:
        raise UsageError("--scale must be positive")
    results = run_suite(args.seed, args.scale, args.criteria)
    if args.format == "json":
        text = _dump_json(checklist_document(results, args.seed, args.scale))
    else:
        text = _dump_csv([
            {**r.to_dict(), "expected": json.dumps(r.expected), "observed": json.dumps(r.observed),
             "tolerance": json.dumps(r.tolerance)}
            for r in results
        ])
    _emit(text, args.output)
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] criterion {r.criterion}: {r.claim}", file=sys.stderr)
    return EXIT_OK if all(r.passed for r in results) else EXIT_ABORT


def cmd_oracle(args) -> int:
    try:
        table = oracle_table(args.name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    sys.stdout.write(_dump_json(table))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"run": cmd_run, "suite": cmd_suite, "oracle": cmd_oracle}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"sqss {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
