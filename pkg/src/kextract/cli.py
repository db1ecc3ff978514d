"""Command-line interface.

Every command prints one JSON object per line with sorted keys.  Exit codes:
0 success, 1 negative verdict, 2 usage or validation error, 3 guard exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import codec
from .balance import is_balanced_exact, is_balanced_full, sampled_balance_estimate
from .circuit import Circuit, build_balance_circuit, evaluate
from .compress import (
    RankCertificate,
    decode_seed_rank,
    encode_seed_rank,
    exists_escaping_advice,
)
from .construct import brute_force_construct, empirical_balance_rate, probabilistic_construct
from .errors import ExhaustedError, GuardExceeded
from .nw import derandomized_construct, design_for, greedy_design
from .params import (
    BoundsInput,
    Params,
    advice_lower_bound,
    as_fraction,
    chernoff_upper_tail,
    existence_log_bound,
    validate,
)
from .table import ColorSet, encode_bits, extract, load_table, save_table

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_GUARD = 3


class UsageError(Exception):
    pass


def emit(obj: dict) -> None:
    print(json.dumps(obj, sort_keys=True))


def load_params(path: str) -> Params:
    try:
        params = Params.load(path)
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot read params {path}: {exc}") from exc
    problems = validate(params)
    if problems:
        raise UsageError("invalid params: " + "; ".join(map(str, problems)))
    return params


def _colors(spec: str, M: int) -> ColorSet:
    items = [int(c) for c in spec.split(",") if c.strip()] if spec else []
    return ColorSet(M, items)


def cmd_gen_table(args) -> int:
    params = load_params(args.params)
    provenance: dict = {"method": args.method, "params": params.to_json(), "rng_seed": None, "tries_used": None}
    if args.method == "random":
        built = probabilistic_construct(params, args.rng_seed, args.max_tries, threads=args.threads)
        table = built.table
        provenance.update(rng_seed=args.rng_seed, tries_used=built.tries_used, max_tries=args.max_tries)
    elif args.method == "brute":
        table = brute_force_construct(params)
        if table is None:
            emit({"result": "none", "method": "brute"})
            return EXIT_NEGATIVE
    else:
        try:
            design_for(params, args.t, args.l, args.r)
        except ExhaustedError as exc:
            raise UsageError(f"design infeasible for N*N1*m = {params.encoded_bits} outputs: {exc}") from exc
        result = derandomized_construct(params, args.t, args.l, args.r, mode=args.mode, threads=args.threads)
        if result is None:
            emit({"result": "none", "method": "nw"})
            return EXIT_NEGATIVE
        table = result.table
        provenance.update(
            t=args.t, l=args.l, r=args.r, mode=args.mode, seed=result.seed_str, seed_index=result.seed_index
        )
    save_table(table, args.out)
    sidecar = Path(str(args.out) + ".json")
    sidecar.write_text(json.dumps(provenance, sort_keys=True) + "\n")
    emit({"result": "ok", "table": str(args.out), "provenance": str(sidecar)})
    return EXIT_OK


def cmd_check(args) -> int:
    table = load_table(args.table)
    scale = as_fraction(args.delta_scale)
    if args.checker == "sample":
        est = sampled_balance_estimate(table, args.samples, args.rng_seed, scale=scale, threads=args.threads)
        emit({"checker": "sample", "verdict": "estimate", **est.to_json()})
        return EXIT_OK if est.violations == 0 else EXIT_NEGATIVE
    checker = is_balanced_exact if args.checker == "exact" else is_balanced_full
    violation = checker(table, scale=scale)
    if violation is None:
        emit({"checker": args.checker, "verdict": "balanced"})
        return EXIT_OK
    emit({"checker": args.checker, "verdict": "violation", "violation": violation.to_json()})
    return EXIT_NEGATIVE


def cmd_extract(args) -> int:
    table = load_table(args.table)
    try:
        color = extract(table, args.x, args.y)
    except IndexError as exc:
        raise UsageError(str(exc)) from exc
    emit({"x": args.x, "y": args.y, "color": color})
    return EXIT_OK


def cmd_bounds(args) -> int:
    if args.bound == "existence":
        params = load_params(args.params)
        try:
            bound = existence_log_bound(params)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        emit({"log_bound": bound.value, "meaningful": bound.meaningful, "certifies": bound.certifies})
    elif args.bound == "advice":
        try:
            inp = BoundsInput(as_fraction(args.sigma), args.h, args.n, args.m)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        res = advice_lower_bound(inp, args.log_coeff)
        emit(
            {
                "main_term": float(res.main_term),
                "main_term_num": res.main_term.numerator,
                "main_term_den": res.main_term.denominator,
                "correction": res.correction,
                "H": inp.H,
            }
        )
    else:
        try:
            value = chernoff_upper_tail(args.mu, args.t)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        emit({"bound": value})
    return EXIT_OK


def cmd_rank(args) -> int:
    table = load_table(args.table)
    colors = _colors(args.colors, table.params.M)
    try:
        if args.action == "encode":
            cert = encode_seed_rank(table, args.x, colors, args.y)
            emit(cert.to_json())
        else:
            space = int(table.histograms()[args.x, colors.to_list()].sum())
            cert = RankCertificate(args.x, colors, args.rank, space)
            emit({"row": args.x, "rank": args.rank, "seed": decode_seed_rank(table, cert)})
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return EXIT_OK


def cmd_advice(args) -> int:
    table = load_table(args.table)
    seed = exists_escaping_advice(table, args.x, _colors(args.colors, table.params.M))
    emit({"row": args.x, "seed": seed})
    return EXIT_OK if seed is not None else EXIT_NEGATIVE


def cmd_circuit(args) -> int:
    if args.action == "build":
        circuit = build_balance_circuit(load_params(args.params))
        circuit.save(args.out)
        emit({"circuit": str(args.out), **circuit.stats()})
        return EXIT_OK
    if args.action == "stats":
        emit(build_balance_circuit(load_params(args.params)).stats())
        return EXIT_OK
    circuit = Circuit.load(args.circuit)
    value = evaluate(circuit, encode_bits(load_table(args.table)))
    emit({"output": value})
    return EXIT_OK if value else EXIT_NEGATIVE


def cmd_design(args) -> int:
    design = greedy_design(args.t, args.l, args.r, args.count)
    if args.out:
        Path(args.out).write_text(json.dumps(design.to_json(), sort_keys=True) + "\n")
    emit(design.to_json())
    return EXIT_OK


def cmd_codec(args) -> int:
    try:
        if args.action == "encode-pair":
            emit({"code": codec.encode_pair(args.x1, args.x2)})
        elif args.action == "decode-pair":
            x1, x2 = codec.decode_pair(args.code)
            emit({"x1": x1, "x2": x2})
        else:
            emit({"doubled": codec.double_bits(args.u)})
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return EXIT_OK


def cmd_bench(args) -> int:
    report = empirical_balance_rate(load_params(args.params), args.trials, args.rng_seed, threads=args.threads)
    emit(report.to_json())
    return EXIT_OK


def cmd_validate(args) -> int:
    params = Params.load(args.params)
    problems = validate(params)
    emit({"valid": not problems, "violations": [str(p) for p in problems]})
    return EXIT_OK if not problems else EXIT_USAGE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kextract", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def threads(p):
        p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")

    p = sub.add_parser("gen-table", help="construct a balanced table")
    p.add_argument("--params", required=True)
    p.add_argument("--method", choices=["random", "brute", "nw"], required=True)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--max-tries", type=int, default=1000)
    p.add_argument("--t", type=int, default=16)
    p.add_argument("--l", type=int, default=4)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--mode", choices=["direct", "circuit"], default="direct")
    p.add_argument("--out", required=True)
    threads(p)
    p.set_defaults(func=cmd_gen_table)

    p = sub.add_parser("check", help="test a table for balance")
    p.add_argument("--table", required=True)
    p.add_argument("--checker", choices=["exact", "full", "sample"], default="exact")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--delta-scale", default="1")
    threads(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("extract", help="read one cell")
    p.add_argument("--table", required=True)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--y", type=int, required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("bounds", help="closed-form bounds")
    bsub = p.add_subparsers(dest="bound", required=True)
    q = bsub.add_parser("existence")
    q.add_argument("--params", required=True)
    q = bsub.add_parser("advice")
    q.add_argument("--sigma", required=True)
    q.add_argument("--h", type=int, required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--log-coeff", type=float, default=1.0)
    q = bsub.add_parser("chernoff")
    q.add_argument("--mu", type=float, required=True)
    q.add_argument("--t", type=float, required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("rank", help="rank certificates of seeds")
    p.add_argument("action", choices=["encode", "decode"])
    p.add_argument("--table", required=True)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--colors", required=True, help="comma-separated colors")
    p.add_argument("--y", type=int)
    p.add_argument("--rank", type=int)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("advice", help="find a seed escaping a color set")
    p.add_argument("action", choices=["find"])
    p.add_argument("--table", required=True)
    p.add_argument("--x", type=int, required=True)
    p.add_argument("--colors", required=True)
    p.set_defaults(func=cmd_advice)

    p = sub.add_parser("circuit", help="the balance-checking circuit")
    p.add_argument("action", choices=["build", "eval", "stats"])
    p.add_argument("--params")
    p.add_argument("--out")
    p.add_argument("--circuit")
    p.add_argument("--table")
    p.set_defaults(func=cmd_circuit)

    p = sub.add_parser("design", help="greedy combinatorial designs")
    p.add_argument("action", choices=["gen"])
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("codec", help="self-delimiting pair code")
    p.add_argument("action", choices=["encode-pair", "decode-pair", "double"])
    p.add_argument("--x1", default="")
    p.add_argument("--x2", default="")
    p.add_argument("--code", default="")
    p.add_argument("--u", default="")
    p.set_defaults(func=cmd_codec)

    p = sub.add_parser("bench", help="empirical balance rate vs the existence bound")
    p.add_argument("--params", required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--rng-seed", type=int, default=0)
    threads(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="check a parameter file")
    p.add_argument("--params", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


_REQUIRED = {
    ("rank", "encode"): ("y",),
    ("rank", "decode"): ("rank",),
    ("circuit", "build"): ("params", "out"),
    ("circuit", "stats"): ("params",),
    ("circuit", "eval"): ("circuit", "table"),
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    missing = [f"--{name}" for name in _REQUIRED.get((args.command, getattr(args, "action", None)), ()) if getattr(args, name) is None]
    if missing:
        parser.error(f"{args.command} {args.action} requires {', '.join(missing)}")
    try:
        return args.func(args)
    except GuardExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ExhaustedError as exc:
        emit({"result": "exhausted", "attempts": exc.attempts, "message": str(exc)})
        return EXIT_NEGATIVE
    except (UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
