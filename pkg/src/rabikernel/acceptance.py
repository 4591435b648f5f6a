"""The eight acceptance checks, shared by ``rabikernel verify`` and the test suite.

Each check returns a CheckResult holding named sub-checks with their observed
error and limit.  Nothing here is cached, so every call recomputes from scratch.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import combinatorics as cb
from .core import EvalPoint, ModelParams, log_mehler_k0
from .oracle import (PARITY_MINUS, PARITY_PLUS, build_model, certified_kernel_grid, certified_partition,
                     conjugate_kernel, matrix_kernel_grid, oracle_kernel_grid, trotter_matrix_product)
from .quadrature import QuadraturePlan
from .series import (TruncationPolicy, fit_gaussian_envelope, gaussian_envelope, heat_kernel_grid,
                     parity_kernel_grid, phi_lambda_pm)
from .thermo import ThermoPoint, parity_partition, partition_function, trace_partition
from .trotter import convergence_slope, d_n_kernel_grid

PARAM_POINTS = ((0.5, 0.5), (1.0, 0.5), (1.0, 1.0))
TIMES = (0.5, 1.0, 2.0)


@dataclass
class SubCheck:
    label: str
    error: float
    limit: float
    passed: bool
    is_error: bool = True


@dataclass
class CheckResult:
    number: int
    name: str
    subchecks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.subchecks) and all(s.passed for s in self.subchecks)

    @property
    def max_error(self) -> float:
        errs = [s.error for s in self.subchecks if s.is_error]
        return max(errs) if errs else 0.0

    def add(self, label: str, error: float, limit: float, strict: bool = True, is_error: bool = True) -> None:
        error = float(error)
        ok = error < limit if strict else error <= limit
        self.subchecks.append(SubCheck(label, error, limit, bool(ok and math.isfinite(error)), is_error))

    def add_flag(self, label: str, ok: bool) -> None:
        self.subchecks.append(SubCheck(label, 0.0 if ok else 1.0, 0.5, bool(ok), False))

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.name} (max error {self.max_error:.3g}, {self.seconds:.1f}s)"


def _grid(lo: float, hi: float, n: int):
    xs, ys = np.meshgrid(np.linspace(lo, hi, n), np.linspace(lo, hi, n), indexing="ij")
    return xs.ravel(), ys.ravel()


def _rel(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def _kernel_array(results) -> np.ndarray:
    return np.stack([r.value.as_array() for r in results])


# ---------------------------------------------------------------- 1

def check_identities(seed: int = 0) -> CheckResult:
    res = CheckResult(1, "combinatorial identity suite")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)

    err = 0.0
    for k in range(0, 13):
        for tau in (0.3, 0.7):
            for v in (0, 1):
                for w in (0, 1):
                    brute = cb.walsh_hadamard(cb.g_function_table(k, v, w, tau))
                    closed = np.array([cb.fourier_g_hat(k, v, w, tau, rho) for rho in cb.all_bitstrings(k)])
                    err = max(err, _rel(closed, brute))
    res.add("Fourier transform of g_k, k <= 12", err, 1e-10)

    err = 0.0
    for k in range(1, 11):
        for t in (0.7, 1.3):
            for rho in cb.all_bitstrings(k):
                ref = max(1.0, abs(cb.varphi_t(rho, t)))
                for v in (0, 1):
                    lhs = cb.varphi_t(rho + (v,), t)
                    rhs = v * cb.q_number(k + 1, t) + (-1) ** v * cb.varphi_t(rho, t)
                    err = max(err, abs(lhs - rhs) / ref)
                    lhs = cb.varphi_t((v,) + rho, t)
                    rhs = cb.varphi_t(rho, t) * t + (1 - (-1) ** (v + sum(rho))) / 2
                    err = max(err, abs(lhs - rhs) / ref)
                lhs = cb.varphi_t(tuple(reversed(rho)), t)
                err = max(err, abs(lhs - cb.varphi_t_reversed_rhs(rho, t)) / max(1.0, abs(lhs)))
                par = [1 - 2 * c for c in cb.suffix_parities(rho)]
                lhs = sum(p * t ** i for i, p in enumerate(par))
                rhs = cb.q_number(k, t) - 2 * cb.varphi_t(rho, t)
                err = max(err, abs(lhs - rhs) / max(1.0, abs(rhs)))
    res.add("varphi_t transformation formulas (4 items), k <= 10", err, 1e-10)

    err = 0.0
    for m in range(1, 5):
        for _ in range(25):
            a = rng.uniform(-1.0, 1.0, cb.graph_length(m))
            v = tuple(int(b) for b in rng.integers(0, 2, m + 1))
            lhs, rhs = cb.verify_sum_v0(m, a, v)
            err = max(err, abs(lhs - rhs) / abs(rhs))
    res.add("V_0 summation lemma, m <= 4", err, 1e-10)

    err = 0.0
    for k in range(1, 11):
        for _ in range(5):
            A = rng.uniform(-1.0, 1.0, k)
            tau = float(rng.uniform(0.05, 1.0))
            for vw in ((0, 0), (0, 1), (1, 0), (1, 1)):
                lhs, rhs = cb.verify_sum_fg(k, tau, A, vw)
                err = max(err, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    res.add("f_k / g_k double-sum formula, k <= 10", err, 1e-10)

    err = 0.0
    for k in range(1, 13):
        for lam in range(1, k + 1):
            t, s = float(rng.uniform(0.1, 0.9)), float(rng.uniform(0.1, 0.9))
            lhs, rhs = cb.verify_sumexp(k, lam, t, s)
            err = max(err, abs(lhs - rhs) / abs(lhs))
    res.add("exponential sum over fixed-norm strings, k <= 12", err, 1e-10)

    res.seconds = time.perf_counter() - t0
    res.add("runtime (s)", res.seconds, 60.0, is_error=False)
    return res


# ---------------------------------------------------------------- 2

EXAMPLE_V0_3 = [
    (0, 0, 0, 0, 0, 0), (0, 0, 0, 1, 1, 1), (0, 1, 1, 0, 0, 1), (0, 1, 1, 1, 1, 0),
    (1, 0, 1, 0, 1, 0), (1, 0, 1, 1, 0, 1), (1, 1, 0, 0, 1, 1), (1, 1, 0, 1, 0, 0),
]


def check_v0() -> CheckResult:
    res = CheckResult(2, "even-graph set V_0 structure")
    t0 = time.perf_counter()
    for m in range(0, 7):
        n = len(cb.enumerate_V0(m))
        res.add(f"|V_0^({m})| = 2^{m * (m - 1) // 2}", abs(n - 2 ** (m * (m - 1) // 2)), 0.5)
    for m in range(0, 5):
        res.add_flag(f"constructive = brute force, m={m}", cb.enumerate_V0(m) == cb.enumerate_V0_bruteforce(m))
    res.add_flag("m=3 worked example reproduced", cb.enumerate_V0(3) == EXAMPLE_V0_3)
    for m in range(2, 6):
        items = cb.v0_structure(m)
        for item, ok in items.items():
            res.add_flag(f"structure item {item}, m={m}", ok)
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------- 3

def check_limits() -> CheckResult:
    res = CheckResult(3, "closed-form limits")
    t0 = time.perf_counter()
    xs, ys = _grid(-2.0, 2.0, 5)
    delta = 0.7
    err = 0.0
    for t in TIMES:
        got = _kernel_array(heat_kernel_grid(xs, ys, t, ModelParams(0.0, delta), TruncationPolicy(tol=1e-13)))
        k0 = np.exp(log_mehler_k0(xs, ys, t, 0.0))
        want = np.zeros_like(got)
        want[:, 0, 0] = k0 * math.exp(-t * delta)
        want[:, 1, 1] = k0 * math.exp(t * delta)
        err = max(err, float(np.max(np.abs(got - want))))
    res.add("g=0 kernel vs Mehler x diag(e^{-t delta}, e^{t delta})", err, 1e-10)

    err = 0.0
    g = 0.8
    for t in TIMES:
        got = _kernel_array(heat_kernel_grid(xs, ys, t, ModelParams(g, 0.0)))
        u = math.exp(-t)
        c = (1 - u) / (1 + u)
        th = math.sqrt(2.0) * g * c * (xs + ys)
        pre = np.exp(log_mehler_k0(xs, ys, t, g) - 2 * g * g * c)
        want = np.stack([np.stack([pre * np.cosh(th), -pre * np.sinh(th)], -1),
                         np.stack([-pre * np.sinh(th), pre * np.cosh(th)], -1)], 1)
        err = max(err, float(np.max(np.abs(got - want))))
    res.add("delta=0 kernel vs the lambda=0 closed form", err, 1e-12)

    err = 0.0
    for beta in (0.5, 1.0, 2.0):
        for g in (0.5, 1.0):
            z = partition_function(ThermoPoint(beta, ModelParams(g, 0.0))).value
            want = 2 * math.exp(g * g * beta) / (1 - math.exp(-beta))
            err = max(err, abs(z - want) / want)
        for d in (0.5, 1.0):
            z = partition_function(ThermoPoint(beta, ModelParams(0.0, d)), TruncationPolicy(tol=1e-13)).value
            want = 2 * math.cosh(beta * d) / (1 - math.exp(-beta))
            err = max(err, abs(z - want) / want)
    res.add("Z at delta=0 and at g=0", err, 1e-8)
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------- 4

def check_series_vs_oracle(plan: QuadraturePlan | None = None) -> CheckResult:
    res = CheckResult(4, "series kernel vs Fock oracle")
    t0 = time.perf_counter()
    xs, ys = _grid(-2.0, 2.0, 5)
    policy = TruncationPolicy(tol=1e-8)
    for g, d in PARAM_POINTS:
        params = ModelParams(g, d)
        for t in TIMES:
            oracle = certified_kernel_grid(params, xs, ys, t, tol=1e-8)
            res.add_flag(f"oracle certified at n_cut={oracle.n_cut}, g={g}, delta={d}, t={t}", oracle.certified)
            got = _kernel_array(heat_kernel_grid(xs, ys, t, params, policy, plan))
            res.add(f"g={g}, delta={d}, t={t}", np.max(np.abs(got - oracle.value)), 1e-5)
    res.seconds = time.perf_counter() - t0
    res.add("runtime (s)", res.seconds, 600.0, is_error=False)
    return res


# ---------------------------------------------------------------- 5

def check_partition(plan: QuadraturePlan | None = None) -> CheckResult:
    res = CheckResult(5, "partition function consistency")
    t0 = time.perf_counter()
    for g, d in PARAM_POINTS:
        params = ModelParams(g, d)
        for beta in TIMES:
            tp = ThermoPoint(beta, params)
            z = partition_function(tp, plan=plan)
            oz = certified_partition(params, beta)
            res.add_flag(f"oracle Z certified, g={g}, delta={d}, beta={beta}", oz.certified)
            oz = float(oz.value)
            res.add(f"Z rel error g={g}, delta={d}, beta={beta}", abs(z.value - oz) / oz, 1e-4)
            zp = parity_partition(tp, 1, plan=plan)
            zm = parity_partition(tp, -1, plan=plan)
            combined = max(1e-10 * z.value, zp.quad_error + zm.quad_error + z.quad_error + 1e-12 * z.value)
            res.add(f"Z_+ + Z_- - Z, g={g}, delta={d}, beta={beta}",
                    abs(zp.value + zm.value - z.value), combined, strict=False)
            tr = trace_partition(tp, plan=plan)
            res.add(f"trace integral rel error g={g}, delta={d}, beta={beta}", abs(tr - z.value) / z.value, 1e-4)
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------- 6

def check_trotter(params: ModelParams = ModelParams(1.0, 0.5), t: float = 1.0) -> CheckResult:
    res = CheckResult(6, "Trotter convergence")
    t0 = time.perf_counter()
    xs, ys = _grid(-2.0, 2.0, 5)
    exact = certified_kernel_grid(params, xs, ys, t, tol=1e-10)
    res.add_flag("oracle certified", exact.certified)
    ns = (4, 8, 16)
    devs = [float(np.max(np.abs(d_n_kernel_grid(xs, ys, t, n, params) - exact.value))) for n in ns]
    slope = convergence_slope(ns, devs)
    res.add(f"|slope - 1| over N=4,8,16 (slope {slope:.4f})", abs(slope - 1.0), 0.2, strict=False,
            is_error=False)
    n_cut = 100
    err = 0.0
    for n in range(1, 9):
        mat = matrix_kernel_grid(trotter_matrix_product(params, n_cut, t, n), n_cut, xs, ys, True)
        err = max(err, float(np.max(np.abs(d_n_kernel_grid(xs, ys, t, n, params) - mat))))
    res.add("closed-form D_N vs Fock matrix product, N <= 8", err, 1e-6)
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------- 7

def check_parity(plan: QuadraturePlan | None = None) -> CheckResult:
    res = CheckResult(7, "parity decomposition")
    t0 = time.perf_counter()
    xs, ys = _grid(-2.0, 2.0, 5)
    policy = TruncationPolicy(tol=1e-8)
    for g, d in PARAM_POINTS:
        params = ModelParams(g, d)
        full = build_model(params, 120)
        for t in (0.5, 1.0):
            def kern(x, y):
                return oracle_kernel_grid(full, [x], [y], t)[0]
            conj = np.stack([conjugate_kernel(kern, x, y) for x, y in zip(xs, ys)])
            res.add(f"off-diagonal parity blocks, g={g}, delta={d}, t={t}",
                    np.max(np.abs(conj[:, [0, 1], [1, 0]])), 1e-6)
            for parity, which, idx in ((1, PARITY_PLUS, 0), (-1, PARITY_MINUS, 1)):
                oracle = certified_kernel_grid(params, xs, ys, t, which=which, tol=1e-8)
                res.add(f"conjugated diagonal block vs H_{'+' if parity > 0 else '-'} oracle, g={g}, delta={d}, t={t}",
                        np.max(np.abs(conj[:, idx, idx] - oracle.value)), 1e-6)
                got = np.array([r.value for r in parity_kernel_grid(xs, ys, t, parity, params, policy, plan)])
                res.add(f"K_{'+' if parity > 0 else '-'} series vs oracle, g={g}, delta={d}, t={t}",
                        np.max(np.abs(got - oracle.value)), 1e-5)
    err = 0.0
    for lam in range(0, 7):
        for x, y, t in ((0.4, -1.1, 0.7), (1.3, 0.2, 1.5), (-0.8, -0.6, 0.4)):
            for sign in (1, -1):
                a = phi_lambda_pm(EvalPoint(-x, -y, t), lam, 1.0, -sign)
                b = phi_lambda_pm(EvalPoint(x, y, t), lam, 1.0, sign)
                err = max(err, abs(a - b) / abs(b))
    res.add("Phi reflection identity", err, 1e-12)
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------- 8

def check_decay(params: ModelParams = ModelParams(1.0, 0.5), t: float = 1.0) -> CheckResult:
    res = CheckResult(8, "Gaussian decay and transpose symmetry")
    t0 = time.perf_counter()
    xs, ys = _grid(-6.0, 6.0, 13)
    vals = _kernel_array(heat_kernel_grid(xs, ys, t, params, TruncationPolicy(tol=1e-12)))
    a, b = fit_gaussian_envelope(xs, ys, vals)
    res.add_flag(f"fitted decay rate b = {b:.4f} > 0", b > 0)
    env = a * np.exp(-b * (xs ** 2 + ys ** 2))
    res.add("fitted envelope domination (max excess)", float(np.max(np.max(np.abs(vals), axis=(1, 2)) - env)), 0.0,
            strict=False)
    ra, rb = gaussian_envelope(params, t)
    env = ra * np.exp(-rb * (xs ** 2 + ys ** 2))
    res.add("derived envelope domination (max excess)", float(np.max(np.max(np.abs(vals), axis=(1, 2)) - env)), 0.0,
            strict=False)
    # transpose symmetry: evaluate at the swapped points
    swapped = _kernel_array(heat_kernel_grid(ys, xs, t, params, TruncationPolicy(tol=1e-12)))
    res.add("K(x,y) - K(y,x)^T", np.max(np.abs(vals - np.transpose(swapped, (0, 2, 1)))), 1e-8)
    res.seconds = time.perf_counter() - t0
    return res


CHECKS = {
    1: check_identities,
    2: check_v0,
    3: check_limits,
    4: check_series_vs_oracle,
    5: check_partition,
    6: check_trotter,
    7: check_parity,
    8: check_decay,
}

SUITES = {
    "combinatorics": (1, 2),
    "limits": (3,),
    "series": (4,),
    "partition": (5,),
    "trotter": (6,),
    "parity": (7,),
    "decay": (8,),
    "all": tuple(range(1, 9)),
}


def run_suite(name: str = "all") -> list:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return [CHECKS[n]() for n in SUITES[name]]
