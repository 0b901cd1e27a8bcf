"""Command-line front end.

Exit codes: 0 success or affirmative verdict, 1 negative verdict, 2 usage
or input error, 3 unknown.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .commat import CommMatrix, MatrixFormatError, gen_copt, psuc, psuc_prime
from .implsearch import SearchBudget, SearchStatus, SystemSpec, find_implementation
from .quantum import EPS, PhysicalityError, born_probabilities, max_abs_diff, povm_from_json, states_from_json
from .tables import build_table, check_table_consistency, render_csv, render_grid
from .ultraweak import Budget, Certificate, Verdict, check_certificate, majorizes

OK, NEGATIVE, USAGE, UNKNOWN = 0, 1, 2, 3


class InputError(Exception):
    """Bad input file; the message names the file and the offending field."""


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _load(path: str, parse):
    text = _read(path)
    try:
        return parse(text)
    except (MatrixFormatError, PhysicalityError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_matrix(path: str) -> CommMatrix:
    return _load(path, CommMatrix.from_json)


def _load_cert(path: str) -> Certificate:
    def parse(text):
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MatrixFormatError(f"invalid JSON: {exc}") from None
        return Certificate.from_dict(payload)

    return _load(path, parse)


def _system(text: str) -> SystemSpec:
    try:
        return SystemSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _emit(args, payload: dict, text: str) -> None:
    print(json.dumps(payload, indent=2) if args.json else text)


# -- commands --------------------------------------------------------------

def cmd_gen_copt(args) -> int:
    try:
        C = gen_copt(args.n, args.t)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.json:
        print(C.to_json(args.decimal))
    else:
        print(C.pretty(args.decimal))
    return OK


def cmd_psuc(args) -> int:
    C = _load_matrix(args.matrix)
    try:
        p, q = psuc(C), psuc_prime(C)
    except ValueError as exc:
        raise InputError(f"{args.matrix}: {exc}") from None
    fmt = (lambda x: f"{float(x):.12g}") if args.decimal else str
    _emit(args, {"psuc": fmt(p), "psuc_prime": fmt(q)}, f"psuc       {fmt(p)}\npsuc_prime {fmt(q)}")
    return OK


def cmd_majorize(args) -> int:
    N, M = _load_matrix(args.n), _load_matrix(args.m)
    budget = Budget(seed=args.seed)
    if args.delta is not None:
        budget.delta = args.delta
    if args.restarts is not None:
        budget.restarts = args.restarts
    d = majorizes(N, M, budget)
    payload = d.to_dict(args.decimal)
    if d.verdict is Verdict.YES:
        text = f"yes (route: {d.route})\nL =\n{d.certificate.L.pretty(args.decimal)}\nR =\n{d.certificate.R.pretty(args.decimal)}"
    elif d.verdict is Verdict.NO:
        gap = "" if d.gap_bound is None else f", certified gap >= {float(d.gap_bound):.6g}"
        text = f"no (reason: {d.reason.value}{gap})"
    else:
        text = f"unknown (best residual {d.residual:.6g})"
    _emit(args, payload, text)
    return {Verdict.YES: OK, Verdict.NO: NEGATIVE, Verdict.UNKNOWN: UNKNOWN}[d.verdict]


def cmd_verify_impl(args) -> int:
    real = args.real
    states = _load(args.states, lambda s: states_from_json(s, real=real))
    povm = _load(args.povm, lambda s: povm_from_json(s, real=real))
    C = _load_matrix(args.target)
    try:
        P = born_probabilities(states, povm)
    except (PhysicalityError, ValueError) as exc:
        raise InputError(str(exc)) from None
    if P.shape != C.shape:
        raise InputError(f"{args.target}: target is {C.rows}x{C.cols}, setup gives {P.shape[0]}x{P.shape[1]}")
    diff = max_abs_diff(P, C)
    ok = diff <= EPS
    _emit(args, {"match": ok, "max_abs_diff": diff},
          f"{'match' if ok else 'mismatch'} (max |born - target| = {diff:.3g})")
    return OK if ok else NEGATIVE


def cmd_solve_impl(args) -> int:
    C = _load_matrix(args.target)
    budget = SearchBudget(seed=args.seed)
    if args.restarts is not None:
        budget.restarts = args.restarts
    if args.iters is not None:
        budget.iters = args.iters
    v = find_implementation(C, args.system, budget)
    if v.status is SearchStatus.REALIZABLE:
        text = f"realizable ({v.provenance})"
    elif v.status is SearchStatus.IMPOSSIBLE:
        text = f"impossible by {v.theorem.value}: {v.detail}"
    else:
        text = f"unknown (best residual {v.residual:.3g}); {v.detail}"
    _emit(args, v.to_dict(), text)
    return {SearchStatus.REALIZABLE: OK, SearchStatus.IMPOSSIBLE: NEGATIVE, SearchStatus.UNKNOWN: UNKNOWN}[v.status]


def cmd_table(args) -> int:
    if args.nmax < 2:
        raise InputError("--nmax must be at least 2")
    budget = SearchBudget(seed=args.seed, restarts=args.restarts or 4, iters=args.iters or 300)
    table = build_table(args.system, args.nmax, budget)
    violations = check_table_consistency(table)
    if args.csv:
        try:
            Path(args.csv).write_text(render_csv(table))
        except OSError as exc:
            raise InputError(f"{args.csv}: {exc.strerror}") from None
    payload = {**table.to_dict(), "violations": [str(v) for v in violations]}
    text = render_grid(table) + "".join(f"\nviolation: {v}" for v in violations)
    _emit(args, payload, text)
    return NEGATIVE if violations else OK


def cmd_verify_cert(args) -> int:
    M, N, cert = _load_matrix(args.m), _load_matrix(args.n), _load_cert(args.cert)
    try:
        ok = check_certificate(M, N, cert)
    except ValueError as exc:
        raise InputError(f"{args.cert}: {exc}") from None
    _emit(args, {"valid": ok}, "valid: M = L N R" if ok else "invalid: L N R differs from M")
    return OK if ok else NEGATIVE


# -- parser ----------------------------------------------------------------

def _common(defaults: bool) -> argparse.ArgumentParser:
    """Global flags, accepted both before and after the subcommand."""
    p = argparse.ArgumentParser(add_help=False)
    kw = {} if defaults else {"default": argparse.SUPPRESS}
    p.add_argument("--json", action="store_true", help="machine-readable output", **kw)
    p.add_argument("--decimal", action="store_true", help="print 12-digit decimals instead of p/q", **kw)
    p.add_argument("--seed", type=int, help="seed for randomized searches (default 0)",
                   **({"default": 0} if defaults else kw))
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr", **kw)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pik", description=__doc__.splitlines()[0],
                                     parents=[_common(True)])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common(False)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=func)
        return p

    p = add("gen-copt", cmd_gen_copt, "print C^opt_{n,t}")
    p.add_argument("n", type=int)
    p.add_argument("t", type=int, nargs="?", default=1)

    p = add("psuc", cmd_psuc, "success probabilities of a square matrix")
    p.add_argument("matrix", help="matrix JSON file")

    p = add("majorize", cmd_majorize, "decide whether M is ultraweakly majorized by N")
    p.add_argument("--n", required=True, help="matrix JSON file for N")
    p.add_argument("--m", required=True, help="matrix JSON file for M")
    p.add_argument("--delta", type=float, help="branch-and-bound gap tolerance (env PIK_DELTA)")
    p.add_argument("--restarts", type=int, help="alternating-LP restarts (env PIK_RESTARTS)")

    p = add("verify-impl", cmd_verify_impl, "check that states and a POVM reproduce a target")
    p.add_argument("--states", required=True)
    p.add_argument("--povm", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--real", action="store_true", help="require real operators (rebit)")

    p = add("solve-impl", cmd_solve_impl, "search for an implementation of a target matrix")
    p.add_argument("--target", required=True)
    p.add_argument("--system", type=_system, required=True, help="qubit, rebit or qudit:<d>")
    p.add_argument("--restarts", type=int, help="see-saw restarts (env PIK_RESTARTS, default 64)")
    p.add_argument("--iters", type=int, help="see-saw alternations per restart (default 2000)")

    p = add("table", cmd_table, "communication table of a system")
    p.add_argument("--system", type=_system, required=True, help="qubit, rebit or qudit:<d>")
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--csv", help="also write the table as CSV to this path")
    p.add_argument("--restarts", type=int, help="see-saw restarts per unresolved cell (default 4)")
    p.add_argument("--iters", type=int, help="see-saw alternations per restart (default 300)")

    p = add("verify-cert", cmd_verify_cert, "check a certificate M = L N R exactly")
    p.add_argument("--m", required=True)
    p.add_argument("--n", required=True)
    p.add_argument("--cert", required=True)
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE if exc.code else OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"pik {args.command}: error: {exc}", file=sys.stderr)
        return USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
