"""Command-line front end.

Exit codes: 0 success, 1 invalid arguments, 2 numerical failure, 3 a
verification check failed.
"""

from __future__ import annotations

import argparse
import io
import math
import sys

import numpy as np

from .core import ModelParams
from .quadrature import GM, QMC, QuadraturePlan
from .series import TruncationPolicy

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3

COLUMNS = {
    "kernel": ("x", "y", "t", "k11", "k12", "k21", "k22", "lambda_used", "tail_bound"),
    "parity-kernel": ("x", "y", "t", "parity", "k", "lambda_used", "tail_bound"),
    "partition": ("beta", "Z", "Z_plus", "Z_minus", "oracle_Z", "rel_err"),
    "trotter-study": ("N", "max_dev", "fitted_slope"),
    "verify": ("criterion", "check", "error", "limit", "passed"),
}


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    def __init__(self, what: str, exc: BaseException):
        super().__init__(f"{what}: {type(exc).__name__}: {exc}")


# ---------------------------------------------------------------- parsing helpers

def _float_list(text: str) -> list:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _int_list(text: str) -> list:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"range must look like a:b:n, got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"range must look like a:b:n, got {text!r}")
    if not (math.isfinite(a) and math.isfinite(b)) or a > b:
        raise argparse.ArgumentTypeError(f"range needs finite a <= b, got {text!r}")
    if not 1 <= n <= 10000:
        raise argparse.ArgumentTypeError(f"range point count must lie in 1..10000, got {n}")
    if n == 1 and a != b:
        raise argparse.ArgumentTypeError("a single-point range needs a == b")
    return np.linspace(a, b, n)


def parse_quad(text: str, seed: int) -> QuadraturePlan:
    """nested:ORDER | qmc:COUNT[:SEED] | gm:S"""
    parts = text.split(":")
    kind = parts[0]
    try:
        nums = [int(p) for p in parts[1:]]
    except ValueError:
        raise UsageError(f"--quad values must be integers, got {text!r}")
    try:
        if kind == "nested" and len(nums) == 1:
            return QuadraturePlan(nested_order=nums[0], seed=seed)
        if kind == "qmc" and len(nums) in (1, 2):
            return QuadraturePlan(high=QMC, qmc_count=nums[0], seed=nums[1] if len(nums) == 2 else seed)
        if kind == "gm" and len(nums) == 1:
            return QuadraturePlan(high=GM, gm_index=nums[0], seed=seed)
    except ValueError as exc:
        raise UsageError(f"--quad {text!r}: {exc}")
    raise UsageError(f"--quad must be nested:ORDER, qmc:COUNT[:SEED] or gm:S, got {text!r}")


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _json_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}" if math.isfinite(v) else "null"
    s = str(v).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


def render(columns, rows, fmt: str) -> str:
    out = io.StringIO()
    if fmt == "csv":
        out.write(",".join(columns) + "\n")
        for row in rows:
            cells = []
            for v in row:
                cell = _fmt(v)
                cells.append(f'"{cell}"' if "," in cell else cell)
            out.write(",".join(cells) + "\n")
    else:
        out.write("[\n")
        for i, row in enumerate(rows):
            body = ", ".join(f'"{c}": {_json_value(v)}' for c, v in zip(columns, row))
            out.write("  {" + body + "}" + (",\n" if i < len(rows) - 1 else "\n"))
        out.write("]\n")
    return out.getvalue()


# ---------------------------------------------------------------- commands

def _params(args, allow_negative_delta: bool = False) -> ModelParams:
    if not math.isfinite(args.g) or args.g < 0:
        raise UsageError(f"--g must be finite and >= 0, got {args.g}")
    if not math.isfinite(args.delta):
        raise UsageError("--delta must be finite")
    if args.delta < 0 and not allow_negative_delta:
        raise UsageError(f"--delta must be >= 0 for this command, got {args.delta} "
                         "(parity-kernel accepts negative values via the parity swap)")
    return ModelParams(args.g, abs(args.delta))


def _policy(args) -> TruncationPolicy:
    if not (args.tol > 0 and math.isfinite(args.tol)):
        raise UsageError(f"--tol must be positive, got {args.tol}")
    if not 0 <= args.lambda_cap <= 200:
        raise UsageError(f"--lambda-cap must lie in 0..200, got {args.lambda_cap}")
    return TruncationPolicy(args.tol, args.lambda_cap)


def _positive(name: str, vals) -> list:
    for v in vals:
        if not (v > 0 and math.isfinite(v)):
            raise UsageError(f"{name} values must be positive, got {v}")
    return vals


def _cutoff(args) -> int:
    if not 8 <= args.fock_cutoff <= 240:
        raise UsageError(f"--fock-cutoff must lie in 8..240, got {args.fock_cutoff}")
    return args.fock_cutoff


def _mesh(args):
    xs, ys = np.meshgrid(args.x_range, args.y_range, indexing="ij")
    return xs.ravel(), ys.ravel()


def cmd_kernel(args):
    from .series import heat_kernel_grid
    params = _params(args)
    policy = _policy(args)
    plan = parse_quad(args.quad, args.seed)
    ts = _positive("--t", args.t)
    xs, ys = _mesh(args)
    rows = []
    for t in ts:
        try:
            res = heat_kernel_grid(xs, ys, t, params, policy, plan)
        except (ArithmeticError, ValueError) as exc:
            raise NumericalFailure(f"heat-kernel series at t={t}", exc)
        for x, y, r in zip(xs, ys, res):
            k = r.value
            rows.append((x, y, t, k.k11, k.k12, k.k21, k.k22, r.lambda_used, r.tail_bound))
    return rows, True


def cmd_parity_kernel(args):
    from .series import parity_kernel_grid, swap_parity_for_negative_delta
    _params(args, allow_negative_delta=True)
    policy = _policy(args)
    plan = parse_quad(args.quad, args.seed)
    ts = _positive("--t", args.t)
    requested = 1 if args.parity == "+" else -1
    parity, params = swap_parity_for_negative_delta(requested, args.g, args.delta)
    xs, ys = _mesh(args)
    rows = []
    for t in ts:
        try:
            res = parity_kernel_grid(xs, ys, t, parity, params, policy, plan)
        except (ArithmeticError, ValueError) as exc:
            raise NumericalFailure(f"parity-kernel series at t={t}", exc)
        for x, y, r in zip(xs, ys, res):
            rows.append((x, y, t, args.parity, r.value, r.lambda_used, r.tail_bound))
    return rows, True


def cmd_partition(args):
    from .oracle import certified_partition
    from .thermo import ThermoPoint, parity_partition, partition_function
    params = _params(args)
    policy = _policy(args)
    plan = parse_quad(args.quad, args.seed)
    betas = _positive("--beta", args.beta)
    n0 = _cutoff(args)
    rows = []
    for beta in betas:
        tp = ThermoPoint(beta, params)
        try:
            z = partition_function(tp, policy, plan).value
            zp = parity_partition(tp, 1, policy, plan).value
            zm = parity_partition(tp, -1, policy, plan).value
        except (ArithmeticError, ValueError) as exc:
            raise NumericalFailure(f"partition series at beta={beta}", exc)
        try:
            oz = float(certified_partition(params, beta, n_start=n0, n_max=max(n0, 240)).value)
        except (ArithmeticError, ValueError) as exc:
            raise NumericalFailure(f"oracle partition at beta={beta}", exc)
        rows.append((beta, z, zp, zm, oz, abs(z - oz) / oz))
    return rows, True


def cmd_trotter_study(args):
    from .oracle import certified_kernel_grid
    from .trotter import N_CAP, convergence_slope, d_n_kernel_grid
    params = _params(args)
    ts = _positive("--t", args.t)
    if len(ts) != 1:
        raise UsageError("trotter-study takes a single --t value")
    t = ts[0]
    steps = args.steps
    for n in steps:
        if not 1 <= n <= N_CAP:
            raise UsageError(f"--steps values must lie in 1..{N_CAP}, got {n}")
    if len(set(steps)) < 2:
        raise UsageError("--steps needs at least two distinct values to fit a slope")
    n0 = _cutoff(args)
    xs, ys = _mesh(args)
    try:
        exact = certified_kernel_grid(params, xs, ys, t, tol=1e-10, n_start=n0, n_max=max(n0, 240)).value
    except (ArithmeticError, ValueError) as exc:
        raise NumericalFailure("oracle heat kernel", exc)
    devs = []
    for n in steps:
        try:
            devs.append(float(np.max(np.abs(d_n_kernel_grid(xs, ys, t, n, params) - exact))))
        except (ArithmeticError, ValueError) as exc:
            raise NumericalFailure(f"Trotter kernel D_{n}", exc)
    slope = convergence_slope(steps, devs)
    return [(n, d, slope) for n, d in zip(steps, devs)], True


def cmd_verify(args):
    from .acceptance import run_suite
    results = run_suite(args.suite)
    rows = []
    for r in results:
        for s in r.subchecks:
            rows.append((r.number, s.label, s.error, s.limit, s.passed))
        print(r.summary_line(), file=sys.stderr)
    return rows, all(r.passed for r in results)


COMMANDS = {
    "kernel": cmd_kernel,
    "parity-kernel": cmd_parity_kernel,
    "partition": cmd_partition,
    "trotter-study": cmd_trotter_study,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rabikernel", description="Heat kernel and partition function of the quantum Rabi model.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("--g", type=float, required=True, help="coupling g >= 0")
            p.add_argument("--delta", type=float, required=True, help="level splitting")
            p.add_argument("--tol", type=float, default=1e-10, help="series truncation tolerance (default 1e-10)")
            p.add_argument("--lambda-cap", type=int, default=60, help="largest series index (default 60)")
            p.add_argument("--quad", default="gm:8", help="nested:ORDER | qmc:COUNT[:SEED] | gm:S (default gm:8)")
            p.add_argument("--seed", type=int, default=0, help="seed for randomized quadrature (default 0)")
            p.add_argument("--fock-cutoff", type=int, default=60, help="starting oracle cutoff, doubled up to 240")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", default=None, help="output file (default stdout)")

    def grid(p):
        p.add_argument("--x-range", type=_range, default=_range("-2:2:5"), help="a:b:n (default -2:2:5)")
        p.add_argument("--y-range", type=_range, default=_range("-2:2:5"), help="a:b:n (default -2:2:5)")

    p = sub.add_parser("kernel", help="matrix heat kernel on a grid")
    common(p)
    grid(p)
    p.add_argument("--t", type=_float_list, required=True, help="comma list of times")

    p = sub.add_parser("parity-kernel", help="scalar kernel of a parity block")
    common(p)
    grid(p)
    p.add_argument("--t", type=_float_list, required=True, help="comma list of times")
    p.add_argument("--parity", choices=("+", "-"), required=True)

    p = sub.add_parser("partition", help="Z, Z_+, Z_- and the oracle Z")
    common(p)
    p.add_argument("--beta", type=_float_list, required=True, help="comma list of inverse temperatures")

    p = sub.add_parser("trotter-study", help="max deviation of D_N from the exact kernel")
    common(p)
    grid(p)
    p.add_argument("--t", type=_float_list, required=True, help="a single time")
    p.add_argument("--steps", type=_int_list, default=[4, 8, 16], help="comma list of step counts (default 4,8,16)")

    p = sub.add_parser("verify", help="run the acceptance checks")
    common(p, model=False)
    p.add_argument("--suite", default="all",
                   choices=("all", "combinatorics", "limits", "series", "partition", "trotter", "parity", "decay"))
    return parser


VALUE_FLAGS = ("--g", "--delta", "--t", "--beta", "--x-range", "--y-range")


def _join_negative_values(argv):
    # argparse reads "-1:1:3" or "-0.5" as an option name, so glue such values onto their flag
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1][1:2].isdigit():
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; fold that into the validation code
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.format not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        rows, ok = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure in {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = render(COLUMNS[args.command], rows, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not ok:
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
