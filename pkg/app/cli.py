"""Command-line surface. Results go to stdout, logs to stderr."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from .config import get_settings
from .schemas.solver import (
    COMMANDS,
    FORMATS,
    POTENTIALS,
    HillReport,
    RunConfig,
    ScanReport,
    SolveReport,
    TableReport,
    TrackReport,
)
from .services.errors import SolverError
from .services.figures import export_figure_data
from .services.precision import with_digits
from .services.solver_service import run_hill, run_moments, run_scan, run_solve, run_track, run_wavefunction
from .services.tables import reproduce_table, table_digits

logger = logging.getLogger(__name__)

HEADER_PREFIX = "# coeffzero v1 "
EXIT_OK = 0
EXIT_BELOW_TARGET = 2
EXIT_UNCONVERGED = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _orders(raw: str) -> list[int]:
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coeffzero", description="Bound-state energies from coefficient zeros.")
    parser.add_argument("command", nargs="?", choices=COMMANDS, default="solve")
    parser.add_argument("--potential", choices=POTENTIALS, default="quartic")
    parser.add_argument("--potential-file", help="k coeff / singular g / sigma|alpha|beta v lines")
    parser.add_argument("--g")
    parser.add_argument("--Z2", dest="z2")
    parser.add_argument("--lambda", dest="lam")
    parser.add_argument("--truncation", type=int, help="series truncation for --potential exp")
    parser.add_argument("--alpha")
    parser.add_argument("--beta")
    parser.add_argument("--sigma", type=int, choices=(2, 3, 4))
    parser.add_argument("--parity", choices=("even", "odd"), default="even")
    parser.add_argument("--digits", type=int)
    parser.add_argument("--orders", type=_orders, default=[10, 40, 160])
    parser.add_argument("--emin")
    parser.add_argument("--emax")
    parser.add_argument("--grid", type=int, default=64)
    parser.add_argument("--levels", type=int, default=2, help="levels covered by the default window")
    parser.add_argument("--target-digits", type=int)
    parser.add_argument("--n", dest="momentum_n", type=int, default=60, help="momentum-space order")
    parser.add_argument("--momentum-beta", default="1/2")
    parser.add_argument("--ms0", action="store_true", help="sextic via its missing-moment-free gauge")
    parser.add_argument("--table", type=int, choices=(1, 2, 3, 4))
    parser.add_argument("--figure", type=int, choices=(1, 2, 3))
    parser.add_argument("--x-max", default="4")
    parser.add_argument("--points", type=int, default=81)
    parser.add_argument("--format", choices=FORMATS, default="text")
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--replay", type=Path, help="re-run the configuration stored in an earlier output")
    parser.add_argument("--output", type=Path, help="write results here instead of stdout")
    parser.add_argument("--verbose", "-v", action="count", default=0)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    settings = get_settings()
    if args.replay is not None:
        return read_header(args.replay)
    if args.command == "reproduce-table" and args.table is None:
        raise UsageError("reproduce-table needs --table")
    if args.command == "figure" and args.figure is None:
        raise UsageError("figure needs --figure")
    digits = args.digits
    if digits is None:
        digits = table_digits(args.table) if args.command == "reproduce-table" else settings.digits
    fields = {
        name: getattr(args, name)
        for name in (
            "command", "potential", "potential_file", "g", "z2", "lam", "truncation", "alpha", "beta", "sigma",
            "parity", "orders", "emin", "emax", "grid", "levels", "momentum_n", "momentum_beta", "ms0", "table",
            "figure", "x_max", "points", "format",
        )
    }
    return RunConfig(
        digits=digits,
        jobs=settings.jobs if args.jobs is None else args.jobs,
        target_digits=args.target_digits or settings.target_digits,
        **fields,
    )


def header(config: RunConfig) -> str:
    return HEADER_PREFIX + config.model_dump_json()


def read_header(path: Path) -> RunConfig:
    if not path.is_file():
        raise UsageError(f"replay file not found: {path}")
    text = path.read_text(encoding="utf-8")
    for line in text.splitlines():
        if line.startswith(HEADER_PREFIX):
            return RunConfig.model_validate_json(line[len(HEADER_PREFIX):])
    try:
        document = json.loads(text)
    except json.JSONDecodeError:
        document = None
    if isinstance(document, dict) and "config" in document:
        return RunConfig.model_validate(document["config"])
    raise UsageError(f"{path} carries no coeffzero header")


def _csv(header_row: list[str], rows: list[list]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header_row)
    writer.writerows(rows)
    return buffer.getvalue()


def _render_text(report) -> str:
    lines = []
    if isinstance(report, SolveReport):
        lines.append(f"{report.potential} ({report.parity}, {report.method}, {report.digits} digits)")
        for result in report.results:
            lines.append(f"order {result.order}: {len(result.roots)} roots")
            lines.extend(f"  {root}" for root in result.roots)
    elif isinstance(report, ScanReport):
        lines.append(f"{report.potential} ({report.parity}, sign scan on {report.grid_points} points, {report.digits} digits)")
        lines.extend(f"order {bracket.order}: [{bracket.low}, {bracket.high}]" for bracket in report.brackets)
    elif isinstance(report, TrackReport):
        lines.append(f"{report.potential} ({report.parity}, {report.digits} digits, target {report.target_digits})")
        for trace in report.traces:
            status = "converged" if trace.converged else ("spurious" if trace.spurious else "unconverged")
            lines.append(f"level {trace.level}: {trace.energy}  stable={trace.stabilized_digits}  {status}")
            lines.extend(f"  I={entry.order}: {entry.energy}" for entry in trace.per_order)
        lines.extend(f"dropped I={root.order}: {root.energy}" for root in report.dropped)
    elif isinstance(report, TableReport):
        lines.append(f"Table {report.table}: {report.caption} ({report.digits} digits)")
        for row in report.rows:
            lines.append(
                f"{row.label:<24} {row.parity:<4} {row.computed or '-'}\n"
                f"{'':<24} {'ref':<4} {row.published}  matched {row.matched_digits}/{row.printed_digits}"
                f"{'' if row.converged else '  unconverged'}"
            )
    elif isinstance(report, HillReport):
        lines.append(f"{report.potential} ({report.parity}, Hill order {report.order}, {report.digits} digits)")
        for index, root in enumerate(report.roots):
            lines.append(f"  {root}  agrees with coefficient zeros to {report.agreement_digits[index]} digits")
    return "\n".join(lines) + "\n"


def _render_csv(report) -> str:
    if isinstance(report, SolveReport):
        return _csv(["order", "index", "energy"], [[r.order, i, root] for r in report.results for i, root in enumerate(r.roots)])
    if isinstance(report, ScanReport):
        return _csv(["order", "low", "high"], [[b.order, b.low, b.high] for b in report.brackets])
    if isinstance(report, TrackReport):
        return _csv(
            ["level", "order", "energy", "stabilized_digits", "converged"],
            [[t.level, e.order, e.energy, t.stabilized_digits, t.converged] for t in report.traces for e in t.per_order],
        )
    if isinstance(report, TableReport):
        return _csv(
            ["label", "parity", "order", "computed", "published", "matched_digits", "printed_digits", "converged"],
            [
                [r.label, r.parity, r.order, r.computed or "", r.published, r.matched_digits, r.printed_digits, r.converged]
                for r in report.rows
            ],
        )
    return _csv(
        ["index", "hill_root", "agreement_digits"],
        [[i, root, report.agreement_digits[i]] for i, root in enumerate(report.roots)],
    )


def exit_code(report, target_digits: int) -> int:
    if isinstance(report, TrackReport):
        if not report.traces or not all(trace.converged and not trace.spurious for trace in report.traces):
            return EXIT_UNCONVERGED
        if any(trace.stabilized_digits < target_digits for trace in report.traces):
            return EXIT_BELOW_TARGET
    if isinstance(report, TableReport):
        if not all(row.converged and row.computed for row in report.rows):
            return EXIT_UNCONVERGED
        if any(row.matched_digits < row.printed_digits for row in report.rows):
            return EXIT_BELOW_TARGET
    return EXIT_OK


def execute(config: RunConfig) -> tuple[str, int]:
    """Run one configuration; returns the full output text and the exit code."""
    lead = header(config)
    if config.command in ("wavefunction", "figure"):
        if config.command == "figure":
            body = export_figure_data(config.figure, config)
        else:
            rows = run_wavefunction(config)
            body = _csv(["x", "psi", "energy"], [[row["x"], row["psi"], row["energy"]] for row in rows])
        if config.format == "json":
            return json.dumps({"config": config.model_dump(), "csv": body}, indent=2) + "\n", EXIT_OK
        return f"{lead}\n{body}", EXIT_OK

    if config.command == "reproduce-table":
        report = reproduce_table(config.table, with_digits(config.digits), config.jobs)
    elif config.command == "scan":
        report = run_scan(config)
    elif config.command == "track":
        report = run_track(config)
    elif config.command == "hill":
        report = run_hill(config)
    elif config.command == "moments":
        report = run_moments(config)
    else:
        report = run_solve(config)
    code = exit_code(report, config.target_digits)
    if config.format == "json":
        return json.dumps({"config": config.model_dump(), "report": report.model_dump()}, indent=2) + "\n", code
    body = _render_csv(report) if config.format == "csv" else _render_text(report)
    return f"{lead}\n{body}", code


def configure_logging(verbose: int) -> None:
    level = get_settings().log_level
    if verbose == 1:
        level = "INFO"
    elif verbose > 1:
        level = "DEBUG"
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        config = config_from_args(args)
        output, code = execute(config)
    except (UsageError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.output is not None:
        args.output.write_text(output, encoding="utf-8")
    else:
        sys.stdout.write(output)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
