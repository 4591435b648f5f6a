"""Partition functions of the Rabi model and of its two parity blocks.

Both are even/odd simplex series in beta * delta sharing the integrand
pieces of the heat-kernel series with t := beta.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import ModelParams, SimplexPoint, with_origin
from .quadrature import QuadraturePlan, simplex_integrate
from .series import TruncationPolicy, heat_kernel_grid, poisson_tail, xi_values

LOG_MAX = 700.0


@dataclass(frozen=True)
class ThermoPoint:
    beta: float
    params: ModelParams

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be strictly positive, got {self.beta}")


@dataclass
class ThermoResult:
    value: float
    lambda_used: int
    tail_bound: float
    quad_error: float
    even_block: float = 0.0
    odd_block: float = 0.0


def psi_values(mu, t: float, g: float, sign: int):
    """psi^{+/-}_lambda for a batch of simplex points of shape (M, lam), lam >= 1."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    mu = np.asarray(mu, dtype=float)
    if mu.shape[-1] < 1:
        raise ValueError("psi needs lam >= 1")
    m = with_origin(mu)
    sg = (-1.0) ** np.arange(m.shape[-1])
    bracket = np.sum(sg * (np.exp(t * (0.5 - m)) + sign * np.exp(t * (m - 0.5))), axis=-1)
    return g * g / math.sinh(t) * bracket ** 2


def psi_lambda_pm(mu: SimplexPoint, t: float, g: float, sign: int) -> float:
    return float(psi_values(np.asarray(mu.mu, dtype=float)[None, :], t, g, sign)[0])


def _even_integrand(beta, g):
    def f(mu):
        return np.exp(4.0 * g * g * np.cosh(beta * (1.0 - mu[:, -1])) / math.sinh(beta)
                      + xi_values(mu, beta, g) + psi_values(mu, beta, g, -1))
    return f


def _odd_integrand(beta, g):
    def f(mu):
        return np.exp(xi_values(mu, beta, g) + psi_values(mu, beta, g, 1))
    return f


def _blocks(tp: ThermoPoint, policy: TruncationPolicy, plan: QuadraturePlan, want_odd: bool):
    """Even and odd blocks with truncation data.

    even = e^{g^2 b}/(1 - e^{-b}) [1 + e^{-2g^2 coth(b/2)} sum_l (b d)^{2l} I_even(2l)]
    odd  = e^{g^2 b}/(1 + e^{-b}) e^{-2g^2 tanh(b/2)} sum_l (b d)^{2l+1} I_odd(2l+1)
    """
    b = tp.beta
    g, d = tp.params.g, tp.params.delta
    z = b * d
    th = math.tanh(b / 2.0)
    log_even_pre = g * g * b - math.log(-math.expm1(-b))
    log_odd_pre = g * g * b - math.log1p(math.exp(-b))
    if log_even_pre + 4.0 * g * g * th + z > LOG_MAX:
        raise OverflowError(f"partition function overflows at beta={b}, g={g}, delta={d}")
    # every even term is at most e^{even_pre} e^{4 g^2 tanh(b/2)} z^{2l}/(2l)!, odd ones e^{odd_pre} z^{2l+1}/(2l+1)!
    env_even = math.exp(log_even_pre + 4.0 * g * g * th)
    env_odd = math.exp(log_odd_pre) if want_odd else 0.0
    L = 0
    while True:
        bound = env_even * poisson_tail(2 * L, z) + env_odd * poisson_tail(2 * L + 1, z)
        if bound < policy.tol or L >= policy.lambda_cap:
            break
        L += 1
    capped = bound >= policy.tol
    if capped:
        warnings.warn(f"lambda_cap reached for beta={b}: tail bound {bound:.3g}")
    ev = 1.0
    qerr_e = 0.0
    if z > 0:
        for m in range(1, L + 1):
            lam = 2 * m
            val, err = simplex_integrate(_even_integrand(b, g), lam, plan.rule_for(lam))
            scale = math.exp(lam * math.log(z) - 2.0 * g * g / th)
            ev += scale * float(val)
            qerr_e += scale * float(err)
    even = math.exp(log_even_pre) * ev
    qerr = math.exp(log_even_pre) * qerr_e
    odd = 0.0
    if want_odd and z > 0:
        acc = 0.0
        qerr_o = 0.0
        for m in range(0, L + 1):
            lam = 2 * m + 1
            val, err = simplex_integrate(_odd_integrand(b, g), lam, plan.rule_for(lam))
            scale = math.exp(lam * math.log(z))
            acc += scale * float(val)
            qerr_o += scale * float(err)
        pre = math.exp(log_odd_pre - 2.0 * g * g * th)
        odd = pre * acc
        qerr += pre * qerr_o
    return even, odd, L, bound, qerr


def partition_function(tp: ThermoPoint, policy: TruncationPolicy | None = None,
                       plan: QuadraturePlan | None = None) -> ThermoResult:
    """Z_R(beta) = 2 * even block."""
    even, _, L, bound, qerr = _blocks(tp, policy or TruncationPolicy(), plan or QuadraturePlan(), False)
    return ThermoResult(2.0 * even, 2 * L, 2.0 * bound, 2.0 * qerr, even, 0.0)


def parity_partition(tp: ThermoPoint, parity: int, policy: TruncationPolicy | None = None,
                     plan: QuadraturePlan | None = None) -> ThermoResult:
    """Z_+ = even - odd and Z_- = even + odd."""
    if parity not in (1, -1):
        raise ValueError("parity must be +1 or -1")
    even, odd, L, bound, qerr = _blocks(tp, policy or TruncationPolicy(), plan or QuadraturePlan(), True)
    return ThermoResult(even - parity * odd, 2 * L + 1, bound, qerr, even, odd)


def trace_partition(tp: ThermoPoint, policy: TruncationPolicy | None = None,
                    plan: QuadraturePlan | None = None, nodes: int = 48) -> float:
    """Integral of tr K_R(x, x, beta) over x by Gauss-Hermite in the scaled variable.

    The diagonal kernel decays like exp(-tanh(beta/2) x^2), which sets the scale.
    """
    a = math.tanh(tp.beta / 2.0)
    z, w = np.polynomial.hermite.hermgauss(nodes)
    xs = z / math.sqrt(a)
    res = heat_kernel_grid(xs, xs, tp.beta, tp.params, policy, plan)
    tr = np.array([r.value.k11 + r.value.k22 for r in res])
    return float(np.sum(w * np.exp(z * z) * tr) / math.sqrt(a))
