"""``symflux analyze problem.lfd`` — command-line front end."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

from symflux.detsolve import default_dependencies
from symflux.errors import ParseError, SymfluxError, VerificationError
from symflux.parser import parse_problem
from symflux.report import (
    DEFAULT_THETA,
    EMIT_CHOICES,
    AnalysisReport,
    analyze,
    render_text,
    to_json,
)

log = logging.getLogger("symflux")

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code

    def __reduce__(self):
        # raised inside pool workers, so it must survive pickling
        return (_Failure, (self.code, str(self)))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="symflux",
        description="Lie point symmetries of finite difference schemes via their modified equations.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", help="analyze every scheme in a problem file")
    a.add_argument("file", help="problem file (.lfd)")
    a.add_argument("--pde-only", action="store_true", help="analyze the bare PDE, ignoring schemes")
    a.add_argument("--emit", choices=EMIT_CHOICES, default="all")
    a.add_argument("--format", choices=("text", "json"), default="text")
    a.add_argument("--taylor-order", type=int, metavar="N", help="starting Taylor order")
    a.add_argument("--ansatz-degree", type=int, metavar="THETA",
                   help=f"polynomial degree of the ansatz (default {DEFAULT_THETA})")
    a.add_argument("--jobs", type=int, default=1, metavar="N", help="analyze schemes in parallel")
    a.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    a.add_argument("--timings", action="store_true",
                   help="include per-stage wall-clock times (makes output run-dependent)")
    return p


def _setup_logging() -> None:
    level = os.environ.get("SYMFLUX_LOG")
    if level:
        logging.basicConfig(
            level=getattr(logging, level.upper(), logging.INFO),
            format="%(asctime)s %(name)s %(levelname)s: %(message)s",
            stream=sys.stderr,
        )


def _job(args):
    where, name, pde, scheme, deps, kwargs = args
    try:
        return analyze(name, pde, scheme, deps, **kwargs)
    except VerificationError as exc:
        raise _Failure(EXIT_VERIFY, f"{where}: {name}: verification failed: {exc}") from None
    except SymfluxError as exc:
        raise _Failure(EXIT_INPUT, f"{where}: scheme {name}: {exc}") from None


def analyze_file(path: str, opts) -> List[AnalysisReport]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _Failure(EXIT_INPUT, f"cannot read {path}: {exc.strerror}") from None
    try:
        problem = parse_problem(text)
    except ParseError as exc:
        raise _Failure(EXIT_INPUT, f"{path}:{exc}") from None

    theta = opts.ansatz_degree
    if theta is None:
        theta = problem.options.get("ansatz_degree", DEFAULT_THETA)
    taylor = opts.taylor_order
    if taylor is None:
        taylor = problem.options.get("taylor_order")
    if theta < 0 or (taylor is not None and taylor < 1):
        raise _Failure(EXIT_INPUT, "ansatz degree must be >= 0 and Taylor order >= 1")
    kwargs = dict(theta=theta, taylor_order=taylor, emit=opts.emit, timings=opts.timings)

    deps = default_dependencies(opts.pde_only, problem.hints)
    if opts.pde_only:
        jobs = [(path, "pde", problem.pde_rhs, None, deps, kwargs)]
    else:
        if not problem.schemes:
            raise _Failure(EXIT_INPUT, f"{path}: no schemes declared (use --pde-only)")
        jobs = [
            (f"{path}:{s.line}", s.name, problem.pde_rhs, s.expr, deps, kwargs)
            for s in problem.schemes
        ]

    if opts.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=opts.jobs) as pool:
            # map() yields in submission order, so reports follow the file
            return list(pool.map(_job, jobs))
    return [_job(j) for j in jobs]


def run(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    opts = build_parser().parse_args(argv)
    try:
        reports = analyze_file(opts.file, opts)
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    if opts.format == "json":
        header = {
            "file": os.path.basename(opts.file),
            "pde_only": opts.pde_only,
            "emit": opts.emit,
        }
        text = to_json(reports, header)
    else:
        text = render_text(reports)
    if opts.out:
        try:
            with open(opts.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write {opts.out}: {exc.strerror}", file=sys.stderr)
            return EXIT_INPUT
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader went away (e.g. piped into head); not an error
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
