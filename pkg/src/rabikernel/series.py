"""Heat-kernel series of the Rabi Hamiltonian and of its parity blocks.

The lambda-th term is an integral over the ordered lambda-simplex of a
positive scalar weight times a hyperbolic rotation by theta_lambda.  The
weight never exceeds exp(2 g^2 tanh(t/2)) and |theta_lambda| never exceeds
sqrt(2) g tanh(t/2) (|x| + |y|), which gives the truncation envelope.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc

from .core import (EvalPoint, Kernel2x2, ModelParams, SimplexPoint, log_mehler_k0,
                   rot_from_cs, with_origin)
from .quadrature import QuadraturePlan, rule_size, simplex_integrate

SQRT2 = math.sqrt(2.0)
MAX_BLOCK = 1 << 22


@dataclass(frozen=True)
class TruncationPolicy:
    tol: float = 1e-10
    lambda_cap: int = 60

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.lambda_cap < 0:
            raise ValueError("lambda_cap must be >= 0")


@dataclass
class SeriesResult:
    value: Kernel2x2 | float
    lambda_used: int
    tail_bound: float
    per_term: list = field(default_factory=list)
    quad_error: float = 0.0
    capped: bool = False


# ---------------------------------------------------------------- integrand pieces

def _coth_half_power(t: float, lam: int) -> float:
    return 1.0 / math.tanh(t / 2.0) if lam % 2 == 0 else math.tanh(t / 2.0)


def theta_coefficients(mu, t: float, g: float):
    """theta_lambda = x P + y Q for a batch of simplex points mu of shape (M, lam)."""
    mu = np.asarray(mu, dtype=float)
    lam = mu.shape[-1]
    if lam == 0:
        c = SQRT2 * g * math.tanh(t / 2.0)
        ones = np.ones(mu.shape[:-1])
        return c * ones, c * ones
    m = with_origin(mu)
    pre = SQRT2 * g / math.sinh(t)  # = 2 sqrt2 g e^{-t} / (1 - e^{-2t})
    sgn = (-1.0) ** np.arange(lam + 1)
    par = (-1.0) ** lam
    gate = 1.0 if lam % 2 else 0.0
    coth_h = 1.0 / math.tanh(t / 2.0)
    sum_x = np.sum(sgn * (np.exp(t * (1 - m)) + np.exp(t * (m - 1))), axis=-1)
    sum_y = np.sum(sgn * (np.exp(-t * m) + np.exp(t * m)), axis=-1)
    P = pre * 2.0 * math.cosh(t) * gate - SQRT2 * g * coth_h + pre * par * sum_x
    Q = -2.0 * pre * gate + SQRT2 * g * coth_h - pre * par * sum_y
    return P, Q


def xi_values(mu, t: float, g: float):
    mu = np.asarray(mu, dtype=float)
    lam = mu.shape[-1]
    c = g * g / math.sinh(t)  # = 2 g^2 e^{-t} / (1 - e^{-2t})
    if lam == 0:
        return np.full(mu.shape[:-1], -4.0 * g * g * math.tanh(t / 2.0))
    m = with_origin(mu)
    sgn = (-1.0) ** np.arange(lam + 1)
    half = np.exp(0.5 * t * (1 - m[..., -1])) - np.exp(0.5 * t * (m[..., -1] - 1))
    first = -c * half ** 2 * (-1.0) ** lam * np.sum(sgn * (np.exp(-t * m) + np.exp(t * m)), axis=-1)
    A = np.exp(t * (1 - m)) + np.exp(t * (m - 1))
    B = np.exp(t * m) + np.exp(-t * m)
    dA = A[..., 1:] - A[..., :-1]   # index beta = 0..lam-1
    dB = B[..., :-1] - B[..., 1:]   # index alpha = 0..lam-1
    # sum over alpha < beta with beta - alpha odd, via parity-split prefix sums of dB
    even = dB.copy()
    even[..., 1::2] = 0.0
    odd = dB - even
    ce = np.cumsum(even, axis=-1)
    co = np.cumsum(odd, axis=-1)
    second = np.zeros(mu.shape[:-1])
    for beta in range(1, lam):
        pref = co[..., beta - 1] if beta % 2 == 0 else ce[..., beta - 1]
        second = second + dA[..., beta] * pref
    return first - c * second


def log_weight(mu, t: float, g: float):
    """Log of the scalar weight of the lambda-term, prefactor included."""
    mu = np.asarray(mu, dtype=float)
    lam = mu.shape[-1]
    if lam == 0:
        return np.full(mu.shape[:-1], -2.0 * g * g * math.tanh(t / 2.0))
    out = -2.0 * g * g * _coth_half_power(t, lam) + xi_values(mu, t, g)
    if lam % 2 == 0:
        out = out + 4.0 * g * g * np.cosh(t * (1 - mu[..., -1])) / math.sinh(t)
    return out


def theta_lambda(p: EvalPoint, mu: SimplexPoint, g: float) -> float:
    P, Q = theta_coefficients(np.asarray(mu.mu, dtype=float)[None, :], p.t, g)
    return float(p.x * P[0] + p.y * Q[0])


def xi_lambda(mu: SimplexPoint, t: float, g: float) -> float:
    return float(xi_values(np.asarray(mu.mu, dtype=float)[None, :], t, g)[0])


def scalar_exponent(mu: SimplexPoint, t: float, g: float) -> float:
    return float(log_weight(np.asarray(mu.mu, dtype=float)[None, :], t, g)[0])


def scalar_exponent_split(mu: SimplexPoint, t: float, g: float) -> float:
    """Same exponent rebuilt as phi(s) + sigma_lambda(s) + xi_lambda with s = mu_lambda."""
    lam = mu.lam
    s = mu.last
    e = math.exp
    d2 = -math.expm1(-2 * t)
    phi = (-4 * g * g * (1 + e(-2 * t)) / d2
           + 2 * g * g * e(-s * t) * (1 + e(t * (2 * s - 1))) / (-math.expm1(-t))
           + 2 * g * g * e(-s * t) * (1 - e(t * (s - 1))) * (1 - e(-s * t)) * (1 + e(t * (2 * s - 1))) / d2)
    sq = (1 - e(t * (s - 1))) ** 2
    sigma = (-4 * g * g * e(-t * s) * sq / d2 * (1 - (-1) ** lam) / 2
             + 2 * g * g * e(-t * s) * sq * (e(t * s) + e(-t * s)) / d2)
    return phi + sigma + xi_lambda(mu, t, g)


# ---------------------------------------------------------------- envelope

def theta_bound_rate(t: float, g: float) -> float:
    """|theta_lambda| <= rate * (|x| + |y|) for every lambda and mu."""
    return SQRT2 * g * math.tanh(t / 2.0)


def log_envelope(xs, ys, t: float, g: float):
    """log E with |entries of lambda-term| <= E (t delta)^lambda / lambda!."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    th = theta_bound_rate(t, g) * (np.abs(xs) + np.abs(ys))
    return log_mehler_k0(xs, ys, t, g) + 2.0 * g * g * math.tanh(t / 2.0) + th


def poisson_tail(L: int, z: float) -> float:
    """sum_{lam > L} z^lam / lam!"""
    if z == 0.0:
        return 0.0
    return math.exp(z) * float(gammainc(L + 1, z))


def choose_lambda(log_env: float, tail, policy: TruncationPolicy):
    """Smallest L with exp(log_env) * tail(L) < tol, or the cap.

    Returns (L, tail_bound, capped).
    """
    env = math.exp(log_env)
    L = 0
    while True:
        bound = env * tail(L)
        if bound < policy.tol:
            return L, bound, False
        if L >= policy.lambda_cap:
            return L, bound, True
        L += 1


def gaussian_envelope(params: ModelParams, t: float) -> tuple:
    """Constants (a, b) with |K_R(x,y,t) entries| <= a exp(-b (x^2 + y^2)) for all x, y."""
    g, d = params.g, params.delta
    th = math.tanh(t / 2.0)
    log_a = g * g * t + 6.0 * g * g * th + t * d - 0.5 * math.log(math.pi * -math.expm1(-2 * t))
    return math.exp(log_a), th / 4.0


def fit_gaussian_envelope(xs, ys, values) -> tuple:
    """Least-squares Gaussian fit of max |entries|, then lifted so it dominates every sample."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    mags = np.asarray(values, dtype=float).reshape(len(xs), -1)
    mag = np.max(np.abs(mags), axis=1)
    r2 = xs ** 2 + ys ** 2
    keep = mag > 0
    slope, _ = np.polyfit(r2[keep], np.log(mag[keep]), 1)
    b = -slope
    log_a = np.max(np.log(mag[keep]) + b * r2[keep])
    return math.exp(log_a) * (1.0 + 1e-12), b


# ---------------------------------------------------------------- term integrals

def _cs_integrals(xs, ys, t: float, g: float, lam: int, log_scale, rule):
    """Per point, integrals of exp(log_scale + log w) * (cosh theta, sinh theta).

    Returns (C, S, errC, errS), each of shape (P,).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    log_scale = np.asarray(log_scale, dtype=float)
    P = xs.size
    C = np.empty(P)
    S = np.empty(P)
    eC = np.empty(P)
    eS = np.empty(P)
    n_nodes = rule_size(lam, rule)
    block = max(1, MAX_BLOCK // max(1, n_nodes))
    for lo in range(0, P, block):
        sl = slice(lo, min(P, lo + block))
        bx, by, bl = xs[sl], ys[sl], log_scale[sl]

        def f(mu, bx=bx, by=by, bl=bl):
            Pc, Qc = theta_coefficients(mu, t, g)
            lw = log_weight(mu, t, g)
            th = Pc[:, None] * bx[None, :] + Qc[:, None] * by[None, :]
            base = lw[:, None] + bl[None, :] - math.log(2.0)
            a = np.exp(base + th)
            b = np.exp(base - th)
            return np.stack([a + b, a - b], axis=-1)

        val, err = simplex_integrate(f, lam, rule)
        C[sl], S[sl] = val[:, 0], val[:, 1]
        eC[sl], eS[sl] = err[:, 0], err[:, 1]
    return C, S, eC, eS


def _log_power(z: float, lam: int) -> float:
    if lam == 0:
        return 0.0
    return lam * math.log(z) if z > 0 else -math.inf


# ---------------------------------------------------------------- heat kernel

def heat_kernel_grid(xs, ys, t: float, params: ModelParams, policy: TruncationPolicy | None = None,
                     plan: QuadraturePlan | None = None) -> list:
    """Series heat kernel at the paired points (xs[i], ys[i]) for one time t."""
    policy = policy or TruncationPolicy()
    plan = plan or QuadraturePlan()
    EvalPoint(0.0, 0.0, t)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    g, z = params.g, t * params.delta
    lk0 = log_mehler_k0(xs, ys, t, g)
    lenv = log_envelope(xs, ys, t, g)
    picks = [choose_lambda(float(le), lambda L: poisson_tail(L, z), policy) for le in lenv]
    Ls = np.array([p[0] for p in picks])
    terms = [[] for _ in range(xs.size)]
    qerr = np.zeros(xs.size)
    for lam in range(int(Ls.max()) + 1):
        idx = np.nonzero(Ls >= lam)[0]
        if lam == 0:
            c0 = SQRT2 * g * math.tanh(t / 2.0)
            th = c0 * (xs[idx] + ys[idx])
            base = lk0[idx] - 2.0 * g * g * math.tanh(t / 2.0) - math.log(2.0)
            a, b = np.exp(base + th), np.exp(base - th)
            C, S, eC, eS = a + b, a - b, 0.0 * a, 0.0 * a
        else:
            scale = lk0[idx] + _log_power(z, lam)
            C, S, eC, eS = _cs_integrals(xs[idx], ys[idx], t, g, lam, scale, plan.rule_for(lam))
        mats = rot_from_cs(C, S, lam)
        for n, i in enumerate(idx):
            terms[i].append(mats[n])
        qerr[idx] += np.maximum(eC, eS)
    out = []
    for i in range(xs.size):
        total = np.zeros((2, 2))
        for m in terms[i]:
            total = total + m
        L, tail, capped = picks[i]
        if capped:
            warnings.warn(f"lambda_cap reached at x={xs[i]}, y={ys[i]}, t={t}: tail bound {tail:.3g}")
        out.append(SeriesResult(Kernel2x2.from_array(total), L, tail, terms[i], float(qerr[i]), capped))
    return out


def heat_kernel(p: EvalPoint, params: ModelParams, policy: TruncationPolicy | None = None,
                plan: QuadraturePlan | None = None) -> SeriesResult:
    return heat_kernel_grid([p.x], [p.y], p.t, params, policy, plan)[0]


# ---------------------------------------------------------------- parity kernels

def phi_lambda_pm(p: EvalPoint, lam: int, g: float, sign: int, rule=None) -> float:
    """Phi^{+/-}_lambda(x, y, t): prefactor times the simplex integral of exp(E +/- theta)."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if lam == 0:
        th = SQRT2 * g * math.tanh(p.t / 2.0) * (p.x + p.y)
        return math.exp(-2.0 * g * g * math.tanh(p.t / 2.0) + sign * th)
    rule = rule or QuadraturePlan().rule_for(lam)
    C, S, _, _ = _cs_integrals([p.x], [p.y], p.t, g, lam, [0.0], rule)
    return float(C[0] + sign * S[0])


def swap_parity_for_negative_delta(parity: int, g: float, delta: float) -> tuple:
    """H_{+/-} at -delta is H_{-/+} at delta; returns (parity, ModelParams with delta >= 0)."""
    if parity not in (1, -1):
        raise ValueError("parity must be +1 or -1")
    if delta < 0:
        return -parity, ModelParams(g, -delta)
    return parity, ModelParams(g, delta)


def parity_kernel_grid(xs, ys, t: float, parity: int, params: ModelParams,
                       policy: TruncationPolicy | None = None, plan: QuadraturePlan | None = None) -> list:
    """Scalar kernels of H_{+/-} = a^dag a + g(a + a^dag) +/- delta T at paired points."""
    if parity not in (1, -1):
        raise ValueError("parity must be +1 or -1")
    policy = policy or TruncationPolicy()
    plan = plan or QuadraturePlan()
    EvalPoint(0.0, 0.0, t)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    g, z = params.g, t * params.delta
    lk_same = log_mehler_k0(xs, ys, t, g)
    lk_refl = log_mehler_k0(xs, -ys, t, g)
    lenv = (np.maximum(lk_same, lk_refl) + 2.0 * g * g * math.tanh(t / 2.0)
            + theta_bound_rate(t, g) * (np.abs(xs) + np.abs(ys)))
    picks = [choose_lambda(float(le), lambda L: poisson_tail(L, z), policy) for le in lenv]
    Ls = np.array([p[0] for p in picks])
    terms = [[] for _ in range(xs.size)]
    qerr = np.zeros(xs.size)
    for lam in range(int(Ls.max()) + 1):
        idx = np.nonzero(Ls >= lam)[0]
        if lam % 2 == 0:
            # K0(x,y) (t delta)^lam Phi^-_lam(x,y)
            yy, lk, sgn, weight = ys[idx], lk_same[idx], -1.0, 1.0
        else:
            # -/+ K0(x,-y) (t delta)^lam Phi^+_lam(x,-y)
            yy, lk, sgn, weight = -ys[idx], lk_refl[idx], 1.0, -float(parity)
        if lam == 0:
            th = SQRT2 * g * math.tanh(t / 2.0) * (xs[idx] + yy)
            vals = np.exp(lk - 2.0 * g * g * math.tanh(t / 2.0) + sgn * th)
            err = 0.0 * vals
        else:
            C, S, eC, eS = _cs_integrals(xs[idx], yy, t, g, lam, lk + _log_power(z, lam), plan.rule_for(lam))
            vals = C + sgn * S
            err = eC + eS
        for n, i in enumerate(idx):
            terms[i].append(weight * float(vals[n]))
        qerr[idx] += err
    out = []
    for i in range(xs.size):
        total = 0.0
        for v in terms[i]:
            total = total + v
        L, tail, capped = picks[i]
        if capped:
            warnings.warn(f"lambda_cap reached at x={xs[i]}, y={ys[i]}, t={t}: tail bound {tail:.3g}")
        out.append(SeriesResult(total, L, tail, terms[i], float(qerr[i]), capped))
    return out


def parity_kernel(p: EvalPoint, parity: int, params: ModelParams, policy: TruncationPolicy | None = None,
                  plan: QuadraturePlan | None = None) -> SeriesResult:
    return parity_kernel_grid([p.x], [p.y], p.t, parity, params, policy, plan)[0]
