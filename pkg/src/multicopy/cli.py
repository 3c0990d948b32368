"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field

from .bounds import chernoff_min, helstrom_channel, statistical_overlap, unanimity_channel
from .ensemble import (
    Ensemble,
    collective_error,
    detailed_balance_gap,
    make_ensemble,
)
from .exact import (
    MAX_EXACT_N,
    MAX_STATIONARITY_N,
    MAX_VERIFY_N,
    completeness_residual,
    exact_error,
    stationarity_check,
    verify_angle_equivalence,
    verify_induction_invariant,
    verify_r_closed_form,
    verify_recursion,
)
from .montecarlo import SimConfig, simulate
from .strategies import (
    BayesState,
    StrategyKind,
    adaptive_angle_closed,
    bayes_step,
    initial_bayes_state,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY_FAILED = 2

BOUNDS_COLUMNS = [
    "n",
    "c",
    "q0",
    "pbar_collective",
    "pbar_unanimity",
    "pbar_majority",
    "chernoff_lambda",
    "statistical_overlap",
]
SWEEP_COLUMNS = BOUNDS_COLUMNS + ["pbar_adaptive_exact"]
ADAPTIVE_COLUMNS = ["r", "phi_given_last0", "phi_given_last1", "p_r", "r_r", "pbar_after_r"]
ENUMERATE_COLUMNS = ["n", "c", "q0", "strategy", "pbar_exact", "pbar_collective"]
SIMULATE_COLUMNS = [
    "n",
    "c",
    "q0",
    "strategy",
    "trials",
    "seed",
    "errors_observed",
    "error_estimate",
    "std_error",
    "ci95_low",
    "ci95_high",
    "exact_reference",
]
VERIFY_COLUMNS = ["check", "status", "max_residual", "tol", "cells"]

DEFAULT_GRID_C = [0.1, 0.3, 0.5, 0.7, 0.9]
DEFAULT_GRID_Q0 = [0.1, 0.25, 0.5, 0.75, 0.9]
DEFAULT_ENUM_CAP = 20


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunSpec:
    command: str
    c: float | None = None
    q0: float | None = None
    n_values: list[int] = field(default_factory=list)
    strategy: str | None = None
    fmt: str = "csv"
    out: str | None = None
    seed: int = 0
    trials: int = 10000
    grid_c: list[float] = field(default_factory=list)
    grid_q0: list[float] = field(default_factory=list)
    enum_cap: int = DEFAULT_ENUM_CAP

    def echo(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None and k != "out"}


def _float_list(text: str) -> list[float]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty grid list")
    try:
        return [float(t) for t in items]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _build_parser() -> _Parser:
    parser = _Parser(prog="multicopy", description="Two-state discrimination from N copies.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, ensemble=True, nrange=True, strategy=False, grids=False):
        if ensemble:
            p.add_argument("--c", type=float, help="overlap |<psi0|psi1>| in [0, 1)")
            p.add_argument("--q0", type=float, help="prior of psi0 in [0, 1]")
        if nrange:
            p.add_argument("--n", type=int, help="number of copies")
            p.add_argument("--n-min", type=int)
            p.add_argument("--n-max", type=int)
        if strategy:
            p.add_argument("--strategy", choices=[k.value for k in StrategyKind])
        if grids:
            p.add_argument("--grid-c", type=_float_list)
            p.add_argument("--grid-q0", type=_float_list)
        p.add_argument("--format", dest="fmt", choices=["csv", "json"], default="csv")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--enum-cap", type=int, default=DEFAULT_ENUM_CAP)

    common(sub.add_parser("bounds", help="closed-form bounds and exact vote errors per N"))
    common(sub.add_parser("adaptive", help="per-round optimal adaptive angles"))
    common(sub.add_parser("enumerate", help="exact error of a strategy by enumeration"), strategy=True)
    p = sub.add_parser("simulate", help="Monte Carlo estimate of a strategy's error")
    common(p, strategy=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    common(sub.add_parser("sweep", help="bounds over a (c, q0, N) grid"), ensemble=False, grids=True)
    common(sub.add_parser("verify", help="run the numerical verification suite"), ensemble=False, grids=True)
    return parser


def _n_values(args, default: tuple[int, int] | None) -> list[int]:
    if args.n is not None and (args.n_min is not None or args.n_max is not None):
        raise UsageError("--n cannot be combined with --n-min/--n-max")
    if args.n is not None:
        lo = hi = args.n
    elif args.n_min is not None or args.n_max is not None:
        lo = args.n_min if args.n_min is not None else 1
        hi = args.n_max if args.n_max is not None else lo
    elif default is not None:
        lo, hi = default
    else:
        raise UsageError("missing --n or --n-min/--n-max")
    if lo < 1 or hi < lo:
        raise UsageError(f"invalid copy range {lo}..{hi}")
    return list(range(lo, hi + 1))


def _check_ensemble(c, q0) -> None:
    if c is None or q0 is None:
        raise UsageError("--c and --q0 are required")
    try:
        make_ensemble(c, q0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def parse_spec(argv: list[str]) -> RunSpec:
    args = _build_parser().parse_args(argv)
    cmd = args.command
    spec = RunSpec(command=cmd, fmt=args.fmt, out=args.out, enum_cap=args.enum_cap)
    if args.enum_cap < 0 or args.enum_cap > MAX_EXACT_N:
        raise UsageError(f"--enum-cap must lie in 0..{MAX_EXACT_N}")

    if cmd in ("sweep", "verify"):
        spec.grid_c = args.grid_c if args.grid_c is not None else list(DEFAULT_GRID_C)
        spec.grid_q0 = args.grid_q0 if args.grid_q0 is not None else list(DEFAULT_GRID_Q0)
        for c in spec.grid_c:
            for q0 in spec.grid_q0:
                _check_ensemble(c, q0)
    else:
        _check_ensemble(args.c, args.q0)
        spec.c, spec.q0 = args.c, args.q0

    if cmd == "verify":
        spec.n_values = _n_values(args, (1, 8))
        if spec.n_values[-1] > MAX_VERIFY_N:
            raise UsageError(f"verify supports N <= {MAX_VERIFY_N}")
    elif cmd == "adaptive" or cmd == "simulate":
        spec.n_values = _n_values(args, None)
        if len(spec.n_values) != 1:
            raise UsageError(f"{cmd} takes a single --n")
    else:
        spec.n_values = _n_values(args, None)

    if cmd == "enumerate" and spec.n_values[-1] > MAX_EXACT_N:
        raise UsageError(f"enumeration supports N <= {MAX_EXACT_N}")
    if cmd in ("enumerate", "simulate"):
        spec.strategy = args.strategy or StrategyKind.ADAPTIVE_BAYES.value
    if cmd == "simulate":
        if args.trials < 1:
            raise UsageError("--trials must be positive")
        if not (0 <= args.seed < 2**64):
            raise UsageError("--seed must be an unsigned 64-bit integer")
        spec.trials, spec.seed = args.trials, args.seed
    return spec


def _bounds_row(e: Ensemble, n: int, enum_cap: int) -> dict:
    exact_ok = n <= enum_cap
    return {
        "n": n,
        "c": e.c,
        "q0": e.q0,
        "pbar_collective": collective_error(e, n),
        "pbar_unanimity": min(e.q0, e.q1) * e.c ** (2 * n),
        "pbar_majority": exact_error(e, StrategyKind.FIXED_MAJORITY, n).error if exact_ok else None,
        "chernoff_lambda": chernoff_min(unanimity_channel(e)).lambda_star,
        "statistical_overlap": statistical_overlap(helstrom_channel(e)),
    }


def cmd_bounds(spec: RunSpec) -> tuple[list[str], list[dict]]:
    e = make_ensemble(spec.c, spec.q0)
    return BOUNDS_COLUMNS, [_bounds_row(e, n, spec.enum_cap) for n in spec.n_values]


def cmd_adaptive(spec: RunSpec) -> tuple[list[str], list[dict]]:
    e = make_ensemble(spec.c, spec.q0)
    (n,) = spec.n_values
    rows = []
    state: BayesState = initial_bayes_state(e)
    for r in range(n):
        # R_r does not depend on the path; follow the favored outcome.
        after = bayes_step(state, e, state.favored)
        rows.append(
            {
                "r": r,
                "phi_given_last0": adaptive_angle_closed(e, r, 0).phi,
                "phi_given_last1": adaptive_angle_closed(e, r, 1).phi,
                "p_r": state.p_favored,
                "r_r": state.big_r(e),
                # Error of guessing the favored state after this round's outcome.
                "pbar_after_r": after.p_unfavored,
            }
        )
        state = after
    return ADAPTIVE_COLUMNS, rows


def cmd_enumerate(spec: RunSpec) -> tuple[list[str], list[dict]]:
    e = make_ensemble(spec.c, spec.q0)
    rows = [
        {
            "n": n,
            "c": e.c,
            "q0": e.q0,
            "strategy": spec.strategy,
            "pbar_exact": exact_error(e, spec.strategy, n).error,
            "pbar_collective": collective_error(e, n),
        }
        for n in spec.n_values
    ]
    return ENUMERATE_COLUMNS, rows


def cmd_simulate(spec: RunSpec) -> tuple[list[str], list[dict]]:
    e = make_ensemble(spec.c, spec.q0)
    (n,) = spec.n_values
    rep = simulate(SimConfig(spec.trials, spec.seed, n, StrategyKind.parse(spec.strategy)), e)
    row = {
        "n": n,
        "c": e.c,
        "q0": e.q0,
        "strategy": rep.strategy,
        "trials": rep.trials,
        "seed": rep.seed,
        "errors_observed": rep.errors_observed,
        "error_estimate": rep.error_estimate,
        "std_error": rep.std_error,
        "ci95_low": rep.ci95[0],
        "ci95_high": rep.ci95[1],
        "exact_reference": rep.exact_reference,
    }
    return SIMULATE_COLUMNS, [row]


def cmd_sweep(spec: RunSpec) -> tuple[list[str], list[dict]]:
    rows = []
    for c in spec.grid_c:
        for q0 in spec.grid_q0:
            e = make_ensemble(c, q0)
            for n in spec.n_values:
                row = _bounds_row(e, n, spec.enum_cap)
                row["pbar_adaptive_exact"] = (
                    exact_error(e, StrategyKind.ADAPTIVE_BAYES, n).error
                    if n <= spec.enum_cap
                    else None
                )
                rows.append(row)
    return SWEEP_COLUMNS, rows


def run_checks(grid_c, grid_q0, n_max: int) -> list[dict]:
    """Evaluate every verification over the grid; one summary row per check."""
    results: dict[str, list] = {}

    def record(name, residual, tol, passed=None):
        worst, tol0, cells, ok = results.get(name, (0.0, tol, 0, True))
        ok = ok and (residual < tol if passed is None else passed)
        results[name] = (max(worst, residual), tol, cells + 1, ok)

    n_stat = min(n_max, MAX_STATIONARITY_N)
    for c in grid_c:
        for q0 in grid_q0:
            e = make_ensemble(c, q0)
            record("induction_invariant", verify_induction_invariant(e, n_max).max_residual, 1e-12)
            record("one_step_recursion", verify_recursion(e, n_max).max_residual, 1e-12)
            record("detailed_balance", detailed_balance_gap(e), 1e-12)
            record("bayes_r_closed_form", verify_r_closed_form(e, n_max).max_residual, 1e-12)
            record("closed_form_equals_bayes", verify_angle_equivalence(e, n_max).max_residual, 1e-10)
            st = stationarity_check(e, n_stat, 1e-3)
            record("stationarity", max(0.0, st.max_improvement), st.allowance, st.passed)
            for kind in (StrategyKind.ADAPTIVE_BAYES, StrategyKind.ADAPTIVE_CLOSED):
                for n in range(1, n_max + 1):
                    gap = abs(exact_error(e, kind, n).error - collective_error(e, n))
                    record("adaptive_equals_collective", gap, 1e-10)
            for n in range(1, n_max + 1):
                gap = abs(exact_error(e, StrategyKind.UNANIMITY, n).error - min(q0, 1 - q0) * c ** (2 * n))
                record("unanimity_exact", gap, 1e-13)
            record("completeness", completeness_residual(e, StrategyKind.ADAPTIVE_BAYES, n_max), 1e-13)
    return [
        {
            "check": name,
            "status": "PASS" if ok else "FAIL",
            "max_residual": worst,
            "tol": tol,
            "cells": cells,
        }
        for name, (worst, tol, cells, ok) in results.items()
    ]


def cmd_verify(spec: RunSpec) -> tuple[list[str], list[dict]]:
    return VERIFY_COLUMNS, run_checks(spec.grid_c, spec.grid_q0, spec.n_values[-1])


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render(columns: list[str], rows: list[dict], spec: RunSpec) -> str:
    if spec.fmt == "json":
        payload = {"spec": spec.echo(), "rows": [{k: row[k] for k in columns} for row in rows]}
        return json.dumps(payload, indent=2) + "\n"
    if spec.command == "verify":
        return "".join(
            " ".join(f"{k}={_fmt(row[k])}" for k in columns) + "\n" for row in rows
        )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[k]) for k in columns])
    return buf.getvalue()


COMMANDS = {
    "bounds": cmd_bounds,
    "adaptive": cmd_adaptive,
    "enumerate": cmd_enumerate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    try:
        spec = parse_spec(list(sys.argv[1:] if argv is None else argv))
    except UsageError as exc:
        print(f"multicopy: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    columns, rows = COMMANDS[spec.command](spec)
    text = render(columns, rows, spec)
    if spec.out:
        with open(spec.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if spec.command == "verify" and any(row["status"] != "PASS" for row in rows):
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def main() -> None:
    sys.exit(run())
