"""Command-line entry point: ``egarmijo generate | solve | bench``.

Exit codes: 0 success, 2 usage, 3 data, 4 solver domain error, 5 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import hermitian
from .bench import SOLVER_NAMES, make_loss, run_bench, run_solver
from .errors import EGError, ParseError, SolverError, ValidationError
from .solver import ArmijoConfig, StopRule
from .tomography import TomographyConfig, generate, load_dataset, save_dataset

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DOMAIN, EXIT_NUMERIC = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _settings(text: str):
    if text == "all":
        return "all"
    kind, _, k = text.partition(":")
    if kind != "random" or not k.isdigit():
        raise argparse.ArgumentTypeError("expected 'all' or 'random:K'")
    return ("random", int(k))


def _state(text: str):
    if text in ("w", "mixed"):
        return text
    if text.startswith("file:"):
        return text
    raise argparse.ArgumentTypeError("expected 'w', 'mixed' or 'file:PATH'")


def _armijo_args(p):
    p.add_argument("--alpha0", type=float, default=10.0)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--max-backtracks", type=int, default=100)
    p.add_argument("--loss", default="ml", help="ml | hedged:LAMBDA | maxent:LAMBDA")
    p.add_argument("--no-timing", action="store_true", help="leave elapsed_s empty so traces are byte-reproducible")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="egarmijo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a synthetic Pauli tomography dataset")
    g.add_argument("--qubits", type=int, required=True)
    g.add_argument("--shots", type=int, default=1000)
    g.add_argument("--settings", type=_settings, default="all", help="all | random:K")
    g.add_argument("--state", type=_state, default="w", help="w | mixed | file:PATH")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="run one solver on a dataset from I/d")
    s.add_argument("--data", required=True)
    s.add_argument("--solver", default="eg-armijo", choices=SOLVER_NAMES)
    s.add_argument("--max-iters", type=int, default=500)
    s.add_argument("--psi-tol", type=float, default=1e-8)
    s.add_argument("--trace", help="CSV path for the iteration trace")
    s.add_argument("--checkpoint", help="JSON path for the final density matrix")
    _armijo_args(s)

    b = sub.add_parser("bench", help="compare solvers over a fixed number of iterations")
    b.add_argument("--data", required=True)
    b.add_argument("--solvers", default=",".join(SOLVER_NAMES))
    b.add_argument("--iters", type=int, default=120)
    b.add_argument("--tol", type=float, default=1e-6, help="gap threshold for the *_to_tol columns")
    b.add_argument("--out-dir", required=True)
    _armijo_args(b)
    return parser


def _load(path):
    try:
        return load_dataset(path)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def _armijo(args) -> ArmijoConfig:
    try:
        return ArmijoConfig(args.alpha0, args.r, args.tau, args.max_backtracks)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _loss(args, data):
    try:
        return make_loss(data, args.loss)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_generate(args) -> int:
    state = args.state
    if state.startswith("file:"):
        with open(state[5:]) as fh:
            state = hermitian.from_json_dict(json.load(fh))
    try:
        cfg = TomographyConfig(args.qubits, args.shots, args.settings, state, args.seed)
        ds = generate(cfg)
    except ValueError as exc:
        if isinstance(exc, EGError):
            raise
        raise UsageError(str(exc)) from exc
    save_dataset(ds, args.out)
    n_settings = len({r.setting for r in ds.records})
    print(f"n={ds.n} d={ds.dim} settings={n_settings} -> {args.out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    data = _load(args.data)
    loss = _loss(args, data)
    cfg = _armijo(args)
    stop = StopRule(args.max_iters, args.psi_tol)
    rho, trace = run_solver(args.solver, loss, cfg, stop)
    if args.trace:
        trace.to_csv(args.trace, timing=not args.no_timing)
    if args.checkpoint:
        with open(args.checkpoint, "w") as fh:
            json.dump(hermitian.to_json_dict(rho.matrix), fh)
            fh.write("\n")
    last = trace.records[-1]
    print(f"{args.solver}: status={trace.status} iters={last.iter} f={last.f_value:.12g} psi={last.psi_gap:.3e}")
    return EXIT_OK


def cmd_bench(args) -> int:
    names = [s.strip() for s in args.solvers.split(",") if s.strip()]
    unknown = [s for s in names if s not in SOLVER_NAMES]
    if unknown or not names:
        raise UsageError(f"unknown solvers {unknown}; choose from {', '.join(SOLVER_NAMES)}")
    data = _load(args.data)
    loss = _loss(args, data)
    result = run_bench(loss, names, args.iters, _armijo(args), args.tol)
    result.write(args.out_dir, timing=not args.no_timing)
    print(f"f*={result.f_star:.15g}")
    print("solver\titers_to_tol\tseconds_to_tol\tfinal_gap\tfinal_psi")
    for row in result.summary_rows(timing=not args.no_timing):
        print("\t".join(row))
    for name, err in result.errors.items():
        print(f"{name}: {err}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValidationError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverError as exc:
        print(f"solver error ({exc.trace.status}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC if exc.trace.status == "numerical-failure" else EXIT_DOMAIN
    except EGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
