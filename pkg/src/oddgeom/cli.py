"""Command-line entry point.

Exit codes: 0 valid or found, 1 checked and failed or exhausted, 2 usage or
format error, 3 budget ran out before an answer.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .geometry import (GeometryFormatError, LineSystem, OddGeometryParams, counting_identity,
                       distinct_lines, odd_geometry_check, parse_geometry, serialize_geometry)
from .graphs import gamma_report
from .matrix import MatrixFormatError, parse_matrix, serialize_matrix, verify, zero_pattern
from .search.budget import SearchBudget, SearchStats
from .search.canon import canonical_key
from .search.cnf import GeometryDefect, ModelError, decode_model, encode_signing, parse_dimacs, parse_model
from .search.geometry_search import enumerate_geometries
from .search.signing import PatternMismatch, search_weighing, sign_search

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_TRUNCATED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _flag(x: bool) -> str:
    return "true" if x else "false"


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e.strerror}") from None


def _emit(lines) -> None:
    for line in lines:
        print(line)


def _budget(args) -> SearchBudget:
    try:
        return SearchBudget(args.max_nodes, args.max_seconds, args.threads)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _outcome(found: bool, stats: SearchStats) -> int:
    if found:
        return EXIT_OK
    return EXIT_TRUNCATED if stats.truncated else EXIT_FAIL


def _params(args, ls: LineSystem | None = None) -> OddGeometryParams:
    """Parameters from --n/--k, from --v/--b/--r/--d/--allowed, or read off
    a square uniform geometry."""
    explicit = [args.v, args.b, args.r, args.d]
    if args.n is not None or args.k is not None:
        if args.n is None or args.k is None:
            raise UsageError("--n and --k go together")
        if any(x is not None for x in explicit) or args.allowed:
            raise UsageError("give either --n/--k or --v/--b/--r/--d, not both")
        if not 1 <= args.k <= args.n:
            raise UsageError("need 1 <= k <= n")
        return OddGeometryParams.for_weighing(args.n, args.k)
    if any(x is not None for x in explicit):
        if any(x is None for x in explicit) or not args.allowed:
            raise UsageError("--v, --b, --r, --d and --allowed go together")
        try:
            allowed = frozenset(int(a) for a in args.allowed.split(","))
            return OddGeometryParams(args.v, args.b, args.r, args.d, allowed)
        except ValueError as e:
            raise UsageError(f"bad parameters: {e}") from None
    if ls is not None:
        sizes = set(ls.sizes())
        if ls.v == ls.b and len(sizes) == 1:
            return OddGeometryParams.for_weighing(ls.v, ls.v - sizes.pop())
    raise UsageError("parameters needed: --n/--k or --v/--b/--r/--d/--allowed")


def _weighing_dims(args) -> tuple[int, int]:
    if args.n is None or args.k is None:
        raise UsageError("--n and --k are required")
    if not 1 <= args.k <= args.n:
        raise UsageError("need 1 <= k <= n")
    return args.n, args.k


def cmd_verify(args) -> int:
    m = parse_matrix(_read(args.matrix))
    report = verify(m)
    print(f"n = {m.n}")
    print(f"k = {m.k}")
    _emit(report.lines())
    return EXIT_OK if report.is_valid else EXIT_FAIL


def cmd_pattern(args) -> int:
    m = parse_matrix(_read(args.matrix))
    text = serialize_geometry(zero_pattern(m))
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_analyze(args) -> int:
    ls = parse_geometry(_read(args.geometry))
    params = _params(args, ls)
    print(f"params = {params.v} {params.b} {params.r} {params.d} {','.join(map(str, sorted(params.allowed)))}")
    check = odd_geometry_check(ls, params)
    print(f"axioms_ok = {_flag(check.ok)}")
    print("failed_clauses = " + (",".join(sorted(check.failed_clauses())) or "none"))
    for failure in check.failures:
        print(f"failure = {failure}")
    repeats = distinct_lines(ls)
    print("repeated_lines = " + (" ".join(f"{i},{j}" for i, j in repeats) or "none"))
    lhs, rhs = counting_identity(ls)
    print(f"counting_lhs = {lhs}")
    print(f"counting_rhs = {rhs}")
    print(f"counting_identity_ok = {_flag(lhs == rhs)}")
    ok = check.ok and lhs == rhs
    if "b" in check.failed_clauses() or ls.b != params.b:
        # profiles and the graphs need every intersection in the allowed set
        print("gamma_report = skipped")
        return EXIT_OK if ok else EXIT_FAIL
    report = gamma_report(ls, params)
    profiles_ok = all(p.total == params.b - 1 and p.weighted_sum == params.incidence_sum
                      for p in report.profiles)
    print(f"incidence_sum = {params.incidence_sum}")
    print(f"profiles_ok = {_flag(profiles_ok)}")
    if params.r == 7 and report.triple_coverage_min is not None:
        print(f"triple_coverage_at_least_18 = {_flag(report.triple_coverage_min >= 18)}")
    _emit(report.lines())
    ok = ok and profiles_ok and report.ok
    return EXIT_OK if ok else EXIT_FAIL


def cmd_search_geometry(args) -> int:
    params = _params(args)
    budget = _budget(args)
    if args.emit_limit is not None and args.emit_limit < 1:
        raise UsageError("--emit-limit must be positive")
    found, stats = enumerate_geometries(params, budget, args.emit_limit,
                                        symmetry_breaking=not args.no_symmetry,
                                        split_depth=args.split_depth,
                                        checkpoint=args.checkpoint, resume=args.resume)
    classes = len({canonical_key(ls) for ls in found})
    _emit(stats.lines())
    print(f"isomorphism_classes = {classes}")
    if args.out and found:
        _write(args.out, "\n".join(serialize_geometry(ls) for ls in found))
    _elapsed(stats)
    return _outcome(bool(found), stats)


def cmd_sign(args) -> int:
    n, k = _weighing_dims(args)
    ls = parse_geometry(_read(args.geometry))
    m, stats = sign_search(ls, n, k, _budget(args))
    _emit(stats.lines())
    if m is not None:
        sys.stdout.write(serialize_matrix(m))
        if args.out:
            _write(args.out, serialize_matrix(m))
    _elapsed(stats)
    return _outcome(m is not None, stats)


def cmd_search(args) -> int:
    n, k = _weighing_dims(args)
    budget = _budget(args)
    if args.out:
        # fail on an unwritable path before spending the budget
        parent = Path(args.out).resolve().parent
        if not parent.is_dir() or not os.access(parent, os.W_OK):
            raise UsageError(f"cannot write {args.out}")
    m, stats = search_weighing(n, k, budget)
    _emit(stats.lines())
    if m is not None:
        sys.stdout.write(serialize_matrix(m))
        if args.out:
            _write(args.out, serialize_matrix(m))
    _elapsed(stats)
    return _outcome(m is not None, stats)


def cmd_export_cnf(args) -> int:
    n, k = _weighing_dims(args)
    ls = parse_geometry(_read(args.geometry))
    f = encode_signing(ls, n, k)
    _write(args.out, f.to_dimacs())
    print(f"variables = {f.num_vars}")
    print(f"clauses = {len(f.clauses)}")
    print(f"cell_variables = {len(f.cell_vars)}")
    return EXIT_OK


def cmd_decode(args) -> int:
    n, k = _weighing_dims(args)
    ls = parse_geometry(_read(args.geometry))
    if args.cnf:
        var_map = parse_dimacs(_read(args.cnf)).cell_vars
    else:
        var_map = encode_signing(ls, n, k).cell_vars
    model = parse_model(_read(args.model))
    m = decode_model(var_map, model, ls, n, k)
    sys.stdout.write(serialize_matrix(m))
    report = verify(m)
    _emit(report.lines())
    return EXIT_OK if report.is_valid else EXIT_FAIL


def _elapsed(stats: SearchStats) -> None:
    print(f"elapsed_ms = {round(stats.seconds * 1000)}", file=sys.stderr)


def _add_params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("parameters")
    g.add_argument("--n", type=int, help="matrix order")
    g.add_argument("--k", type=int, help="matrix weight")
    g.add_argument("--v", type=int, help="points")
    g.add_argument("--b", type=int, help="lines")
    g.add_argument("--r", type=int, help="points per line")
    g.add_argument("--d", type=int, help="lines per point")
    g.add_argument("--allowed", help="comma-separated intersection sizes, e.g. 1,3,5,7")


def _add_dims(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="matrix order")
    p.add_argument("--k", type=int, required=True, help="matrix weight")


def _add_budget(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("budget")
    g.add_argument("--max-nodes", type=int, default=1_000_000)
    g.add_argument("--max-seconds", type=float, default=300.0)
    g.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oddgeom", description=__doc__.splitlines()[0])
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress diagnostics")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check a matrix file")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("pattern", help="write the zero pattern of a matrix as a geometry")
    p.add_argument("matrix")
    p.add_argument("-o", "--out", help="geometry file (default: stdout)")
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("analyze", help="axioms, counting identity and graph checks")
    p.add_argument("geometry")
    _add_params(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("search-geometry", help="enumerate geometries")
    _add_params(p)
    _add_budget(p)
    p.add_argument("--emit-limit", type=int)
    p.add_argument("--no-symmetry", action="store_true", help="disable symmetry breaking")
    p.add_argument("--split-depth", type=int, default=2)
    p.add_argument("--checkpoint", help="write pending subtrees here")
    p.add_argument("--resume", help="continue from a checkpoint")
    p.add_argument("-o", "--out", help="write found geometries, blank-line separated")
    p.set_defaults(func=cmd_search_geometry)

    p = sub.add_parser("sign", help="sign a geometry into a weighing matrix")
    p.add_argument("geometry")
    _add_dims(p)
    _add_budget(p)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_sign)

    p = sub.add_parser("search", help="search for a weighing matrix")
    _add_dims(p)
    _add_budget(p)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("export-cnf", help="write the signing problem as DIMACS CNF")
    p.add_argument("geometry")
    _add_dims(p)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_export_cnf)

    p = sub.add_parser("decode", help="turn a solver model into a matrix and verify it")
    p.add_argument("model")
    p.add_argument("geometry")
    _add_dims(p)
    p.add_argument("--cnf", help="read the variable map from this CNF's comments")
    p.set_defaults(func=cmd_decode)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, MatrixFormatError, GeometryFormatError, PatternMismatch,
            GeometryDefect, ModelError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        # constructor checks on parsed data, e.g. inconsistent parameters
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
