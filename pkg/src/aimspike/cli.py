"""Command-line front end: solve, table, check, and wavefn subcommands.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 verification mismatch (a table cell off its reference, cross-checks in
disagreement, or the two backends apart on the same problem).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from mpmath import mp

from .engine import PrecisionPolicy, Termination, solve
from .errors import AimSpikeError, ConfigurationError, DomainError
from .oracle import default_grid, fd_eigenvalue, shoot_eigenvalue
from .problem import ProblemSpec
from .symcore import to_big
from .tables import lookup_reference, run_table
from .wavefn import default_radii, node_count, reconstruct

__all__ = ["RunConfig", "main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_MISMATCH = 3

# keys accepted in a key=value config file; identical to the long flag
# names with hyphens replaced by underscores
_CONFIG_KEYS = frozenset([
    "alpha", "lambda", "gamma", "l", "dim", "state", "r0",
    "target_digits", "start_digits", "max_digits", "max_n",
    "format", "out", "backend",
])

_FD_TOLERANCE = 1e-5
# strong couplings leave a large h**2 constant in the raw grids; the
# Richardson value is still good, so only the self-consistency gate widens
_FD_TOLERANCE_STIFF = 1e-3


class _UsageError(Exception):
    """Raised for bad flags so main can map them to exit code 1."""


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract here assigns 2 to
    numerical failures, so usage problems are rethrown and handled in main."""

    def error(self, message):
        raise _UsageError(message)


@dataclass(frozen=True)
class RunConfig:
    """One fully resolved invocation: problem, precision schedule, run
    parameters, and output routing.  Built by merging builtin defaults,
    then a key=value config file, then explicit flags."""

    spec: ProblemSpec
    policy: PrecisionPolicy
    r0: Fraction | None
    n_max: int
    backend: str
    format: str
    out: str | None


def _read_config_file(path: str) -> dict:
    """key=value pairs, one per line, '#' starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}")
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip().replace("-", "_")
        val = val.strip()
        if not sep or not key or not val:
            raise ConfigurationError(
                f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
        if key not in _CONFIG_KEYS:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = val
    return values


def _as_int(value, name: str) -> int:
    try:
        return int(str(value), 10)
    except ValueError:
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")


def _as_fraction(value, name: str) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError):
        raise ConfigurationError(f"{name} must be a number, got {value!r}")


def _build_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags over the config file over builtin defaults."""
    file_values = {}
    if getattr(args, "config", None) is not None:
        file_values = _read_config_file(args.config)

    def pick(key, attr=None):
        cli_val = getattr(args, attr or key, None)
        if cli_val is not None:
            return cli_val
        return file_values.get(key)

    alpha = pick("alpha")
    lam = pick("lambda", "lam")
    if alpha is None:
        raise ConfigurationError("--alpha is required (flag or config file)")
    if lam is None:
        raise ConfigurationError("--lambda is required (flag or config file)")

    gamma = pick("gamma")
    l_val = pick("l")
    dim = pick("dim")
    if gamma is not None and l_val is not None:
        raise ConfigurationError("--gamma and --l are mutually exclusive")
    if dim is not None and l_val is None:
        raise ConfigurationError("--dim only makes sense together with --l")

    state = pick("state")
    state = 0 if state is None else _as_int(state, "--state")
    if l_val is not None:
        spec = ProblemSpec.from_angular(
            _as_fraction(alpha, "--alpha"), _as_fraction(lam, "--lambda"),
            _as_int(l_val, "--l"), 3 if dim is None else _as_int(dim, "--dim"),
            state)
    else:
        spec = ProblemSpec(
            _as_fraction(alpha, "--alpha"), _as_fraction(lam, "--lambda"),
            Fraction(0) if gamma is None else _as_fraction(gamma, "--gamma"),
            state)

    target = pick("target_digits")
    target = 7 if target is None else _as_int(target, "--target-digits")
    start = pick("start_digits")
    max_digits = pick("max_digits")
    policy = PrecisionPolicy(
        start_digits=30 if start is None else _as_int(start, "--start-digits"),
        max_digits=120 if max_digits is None else _as_int(max_digits,
                                                          "--max-digits"),
        target_digits=target)

    r0 = pick("r0")
    if r0 is not None:
        r0 = _as_fraction(r0, "--r0")
        if r0 <= 0:
            raise ConfigurationError(f"--r0 must be positive, got {r0}")
    n_max = pick("max_n")
    n_max = 500 if n_max is None else _as_int(n_max, "--max-n")

    backend = pick("backend") or "symbolic"
    if backend not in ("symbolic", "jet", "both"):
        raise ConfigurationError(f"unknown backend {backend!r}")
    fmt = pick("format") or "text"
    if fmt not in ("text", "json", "csv"):
        raise ConfigurationError(f"unknown format {fmt!r}")

    return RunConfig(spec=spec, policy=policy, r0=r0, n_max=n_max,
                     backend=backend, format=fmt, out=pick("out"))


def _emit(payload: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(payload)
        if not payload.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(
            payload if payload.endswith("\n") else payload + "\n",
            encoding="utf-8")


def _render_record(record: dict, fmt: str) -> str:
    """One flat record as text, JSON, or a single-row RFC 4180 CSV."""
    if fmt == "json":
        return json.dumps(record, indent=2, sort_keys=True)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(record.keys())
        writer.writerow(record.values())
        return buf.getvalue()
    width = max(len(k) for k in record)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in record.items())


def _problem_record(config: RunConfig) -> dict:
    spec = config.spec
    return {
        "alpha": str(spec.alpha),
        "lambda": str(spec.lam),
        "gamma": str(spec.gamma),
        "state": spec.state_index,
    }


def _run_record(config: RunConfig, report, backend: str, wall_ms: int) -> dict:
    record = _problem_record(config)
    record.update({
        "energy": mp.nstr(report.energy, config.policy.target_digits),
        "iterations": report.iterations_used,
        "digits_used": report.digits_used,
        "r0": mp.nstr(report.r0_used, 12),
        "termination": report.termination.value,
        "backend": backend,
        "wall_ms": wall_ms,
    })
    return record


def cmd_solve(args: argparse.Namespace) -> int:
    config = _build_config(args)
    started = time.perf_counter()
    if config.backend == "both":
        report = solve(config.spec, config.r0, config.policy, config.n_max,
                       backend="symbolic")
        report_jet = solve(config.spec, config.r0, config.policy,
                           config.n_max, backend="jet")
        wall_ms = int(round((time.perf_counter() - started) * 1000))
        bad = [r for r in (report, report_jet)
               if r.termination is not Termination.CONVERGED]
        if bad:
            for rep in bad:
                print(f"{rep.backend} backend did not converge "
                      f"({rep.termination.value} after "
                      f"{rep.iterations_used} iterations)", file=sys.stderr)
            return EXIT_NUMERIC
        diff = abs(report.energy - report_jet.energy)
        allowed = (mp.mpf(10) ** (2 - config.policy.target_digits)
                   * max(mp.mpf(1), abs(report.energy)))
        if diff > allowed:
            print("backend mismatch:", file=sys.stderr)
            print(f"  symbolic  {mp.nstr(report.energy, 20)}",
                  file=sys.stderr)
            print(f"  jet       {mp.nstr(report_jet.energy, 20)}",
                  file=sys.stderr)
            print(f"  |diff|    {mp.nstr(diff, 3)}  "
                  f"(allowed {mp.nstr(allowed, 3)})", file=sys.stderr)
            return EXIT_MISMATCH
        record = _run_record(config, report, "both", wall_ms)
    else:
        report = solve(config.spec, config.r0, config.policy, config.n_max,
                       backend=config.backend)
        wall_ms = int(round((time.perf_counter() - started) * 1000))
        record = _run_record(config, report, report.backend, wall_ms)

    _emit(_render_record(record, config.format), config.out)
    return (EXIT_OK if report.termination is Termination.CONVERGED
            else EXIT_NUMERIC)


def _parse_cell_filter(which: int, text: str):
    """--rows tokens: semicolons separate entries; grid 4 entries are
    'lambda,gamma' pairs, the sweep grids take bare column/row labels."""
    tokens = [t.strip() for t in text.split(";") if t.strip()]
    if not tokens:
        raise ConfigurationError("--rows selected nothing")
    if which == 4:
        cells = []
        for token in tokens:
            parts = [p.strip() for p in token.split(",")]
            if len(parts) != 2:
                raise ConfigurationError(
                    f"grid 4 rows look like 'lambda,gamma', got {token!r}")
            cells.append((parts[0], _as_int(parts[1], "gamma")))
        return cells
    labels = []
    for token in tokens:
        labels.extend(p.strip() for p in token.split(",") if p.strip())
    if which == 2:
        return [_as_int(label, "digits column") for label in labels]
    return labels


def cmd_table(args: argparse.Namespace) -> int:
    kwargs = {}
    if args.rows is not None:
        selection = _parse_cell_filter(args.which, args.rows)
        key = {1: "columns", 2: "columns", 3: "rows", 4: "cells"}[args.which]
        kwargs[key] = selection
    if args.max_n is not None:
        kwargs["n_max"] = args.max_n
    report = run_table(args.which, **kwargs)

    fmt = args.format or "text"
    if fmt == "text":
        payload = "\n".join(report.lines())
    else:
        rows = [{
            "label": cell.label,
            "reference": cell.reference,
            "computed": cell.computed,
            "digits_checked": cell.digits_checked,
            "ok": cell.ok,
            "expected_failure": cell.expected_failure,
            "iterations": cell.iterations,
            "termination": cell.termination,
            "note": cell.note,
            "wall_ms": int(round(cell.wall_s * 1000)),
        } for cell in report.cells]
        if fmt == "json":
            payload = json.dumps({
                "table": report.table, "title": report.title,
                "ok": report.ok, "cells": rows,
            }, indent=2, sort_keys=True)
        else:
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\r\n")
            writer.writerow(rows[0].keys())
            for row in rows:
                writer.writerow(row.values())
            payload = buf.getvalue()
    _emit(payload, args.out)
    return EXIT_OK if report.ok else EXIT_MISMATCH


def cmd_check(args: argparse.Namespace) -> int:
    config = _build_config(args)
    spec = config.spec
    started = time.perf_counter()
    backend = "symbolic" if config.backend == "both" else config.backend
    report = solve(spec, config.r0, config.policy, config.n_max,
                   backend=backend)
    if report.termination is not Termination.CONVERGED:
        print(f"iteration did not converge ({report.termination.value} "
              f"after {report.iterations_used} iterations); nothing to "
              "cross-check", file=sys.stderr)
        return EXIT_NUMERIC

    grid = default_grid(spec, points=args.points)
    fd_tol = (_FD_TOLERANCE_STIFF if spec.lam >= 100 else _FD_TOLERANCE)
    e_fd = fd_eigenvalue(spec, grid, which=spec.state_index,
                         tolerance=fd_tol)
    e_aim = report.energy
    center = to_big(e_aim)
    half = max(mp.mpf("0.5"), abs(center) / 200)
    e_shoot = shoot_eigenvalue(spec, grid,
                               bracket=(float(center - half),
                                        float(center + half)))
    wall_ms = int(round((time.perf_counter() - started) * 1000))

    # each oracle is trusted to about five significant figures; agreement
    # inside that bar certifies the iteration, disagreement flags it
    bar = mp.mpf("1e-5") * max(mp.mpf(1), abs(e_aim))
    diff_fd = abs(e_aim - e_fd)
    diff_shoot = abs(e_aim - e_shoot)
    agree = diff_fd <= bar and diff_shoot <= bar

    record = _problem_record(config)
    record.update({
        "aim_energy": mp.nstr(e_aim, max(config.policy.target_digits, 12)),
        "fd_energy": mp.nstr(e_fd, 12),
        "shoot_energy": mp.nstr(e_shoot, 12),
        "aim_fd_diff": mp.nstr(diff_fd, 3),
        "aim_shoot_diff": mp.nstr(diff_shoot, 3),
        "fd_shoot_diff": mp.nstr(abs(e_fd - e_shoot), 3),
        "error_bar": mp.nstr(bar, 3),
        "agree": agree,
        "iterations": report.iterations_used,
        "digits_used": report.digits_used,
        "r0": mp.nstr(report.r0_used, 12),
        "termination": report.termination.value,
        "backend": backend,
        "wall_ms": wall_ms,
    })
    reference = lookup_reference(spec)
    if reference is not None:
        record["reference_energy"] = reference["energy"]
        if reference.get("note"):
            record["reference_note"] = reference["note"]

    payload = _render_record(record, config.format)
    if config.format == "text":
        verdict = ("all three methods agree within the error bar" if agree
                   else "DISAGREEMENT beyond the error bar")
        payload = payload + "\n" + verdict
    _emit(payload, config.out)
    return EXIT_OK if agree else EXIT_MISMATCH


def cmd_wavefn(args: argparse.Namespace) -> int:
    config = _build_config(args)
    backend = "symbolic" if config.backend == "both" else config.backend
    if backend == "jet":
        raise ConfigurationError(
            "eigenfunction reconstruction needs the symbolic backend")
    started = time.perf_counter()
    report = solve(config.spec, config.r0, config.policy, config.n_max,
                   backend=backend)
    if report.termination is not Termination.CONVERGED:
        print(f"iteration did not converge ({report.termination.value} "
              f"after {report.iterations_used} iterations); no "
              "eigenfunction to sample", file=sys.stderr)
        return EXIT_NUMERIC

    if args.radii is not None:
        radii = [to_big(_as_fraction(r, "--radii entry"))
                 for r in args.radii.split(",") if r.strip()]
        if not radii:
            raise ConfigurationError("--radii selected no points")
    else:
        radii = default_radii(config.spec, count=args.points)
    samples = reconstruct(config.spec, report, radii)
    values = samples.normalized()
    nodes = node_count(samples) if len(radii) >= 10 else None
    wall_ms = int(round((time.perf_counter() - started) * 1000))

    fmt = config.format
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["r", "psi"])
        for r, v in zip(samples.radii, values):
            writer.writerow([mp.nstr(r, 12), mp.nstr(v, 12)])
        payload = buf.getvalue()
    elif fmt == "json":
        payload = json.dumps({
            **_problem_record(config),
            "energy": mp.nstr(report.energy, config.policy.target_digits),
            "nodes": nodes,
            "normalization": mp.nstr(samples.normalization, 12),
            "r": [mp.nstr(r, 12) for r in samples.radii],
            "psi": [mp.nstr(v, 12) for v in values],
            "wall_ms": wall_ms,
        }, indent=2, sort_keys=True)
    else:
        head = [
            f"energy         {mp.nstr(report.energy, config.policy.target_digits)}",
            f"nodes          {nodes}",
            f"normalization  {mp.nstr(samples.normalization, 12)}",
            f"samples        {len(radii)}",
        ]
        body = [f"{mp.nstr(r, 12)}  {mp.nstr(v, 12)}"
                for r, v in zip(samples.radii, values)]
        payload = "\n".join(head + body)
    _emit(payload, config.out)
    return EXIT_OK


def _add_problem_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("problem")
    group.add_argument("--alpha", metavar="A",
                       help="exponent of the r**-alpha term (> 0)")
    group.add_argument("--lambda", dest="lam", metavar="L",
                       help="coupling of the r**-alpha term (>= 0)")
    group.add_argument("--gamma", metavar="G",
                       help="centrifugal parameter (>= -1/2; default 0)")
    group.add_argument("--l", type=int, metavar="L",
                       help="angular momentum, alternative to --gamma")
    group.add_argument("--dim", type=int, metavar="D",
                       help="spatial dimension for --l (default 3)")
    group.add_argument("--state", type=int, metavar="K",
                       help="radial excitation index (default 0)")


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("run")
    group.add_argument("--r0", metavar="R",
                       help="evaluation radius (default: problem heuristic)")
    group.add_argument("--target-digits", type=int, metavar="N",
                       help="significant digits to converge to (default 7)")
    group.add_argument("--start-digits", type=int, metavar="N",
                       help="initial working precision (default 30)")
    group.add_argument("--max-digits", type=int, metavar="N",
                       help="working-precision ceiling (default 120)")
    group.add_argument("--max-n", type=int, metavar="N",
                       help="iteration budget (default 500)")
    group.add_argument("--backend", choices=["symbolic", "jet", "both"],
                       help="iteration backend (default symbolic); 'both' "
                            "runs the two and verifies agreement")


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("output")
    group.add_argument("--format", choices=["text", "json", "csv"],
                       help="output format (default text)")
    group.add_argument("--out", metavar="PATH",
                       help="write the output to PATH instead of stdout")
    group.add_argument("--config", metavar="PATH",
                       help="key=value defaults file; explicit flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aimspike",
                     description="Eigenvalues of the spiked radial "
                                 "oscillator by iterated determinants, with "
                                 "cross-checks and reference grids.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p_solve = sub.add_parser(
        "solve", help="find one eigenvalue",
        description="Converge one eigenvalue and report the run.")
    _add_problem_flags(p_solve)
    _add_run_flags(p_solve)
    _add_output_flags(p_solve)
    p_solve.set_defaults(handler=cmd_solve)

    p_table = sub.add_parser(
        "table", help="re-solve an embedded reference grid",
        description="Recompute one of the four embedded reference grids "
                    "and compare cell by cell.")
    p_table.add_argument("which", type=int, choices=[1, 2, 3, 4],
                         help="grid number")
    p_table.add_argument("--rows", metavar="SPEC",
                         help="subset of cells: entries separated by ';', "
                              "grid 4 entries as 'lambda,gamma'")
    p_table.add_argument("--max-n", type=int, metavar="N",
                         help="override the grid's iteration budget")
    _add_output_flags(p_table)
    p_table.set_defaults(handler=cmd_table)

    p_check = sub.add_parser(
        "check", help="cross-check one eigenvalue against two integrators",
        description="Solve, then recompute the level with a "
                    "finite-difference matrix and a shooting integrator, "
                    "and compare all three.")
    _add_problem_flags(p_check)
    _add_run_flags(p_check)
    _add_output_flags(p_check)
    p_check.add_argument("--points", type=int, default=9000, metavar="N",
                         help="oracle grid size (default 9000)")
    p_check.set_defaults(handler=cmd_check)

    p_wavefn = sub.add_parser(
        "wavefn", help="sample the converged eigenfunction",
        description="Solve, reconstruct the eigenfunction from the "
                    "converged iteration state, and emit (r, psi) samples.")
    _add_problem_flags(p_wavefn)
    _add_run_flags(p_wavefn)
    _add_output_flags(p_wavefn)
    p_wavefn.add_argument("--points", type=int, default=200, metavar="N",
                          help="number of sample radii (default 200)")
    p_wavefn.add_argument("--radii", metavar="LIST",
                          help="comma-separated radii overriding --points")
    p_wavefn.set_defaults(handler=cmd_wavefn)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.handler(args)
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AimSpikeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        location = getattr(exc, "location", None)
        if location is not None:
            print(f"  location: r = {mp.nstr(location, 8)}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
