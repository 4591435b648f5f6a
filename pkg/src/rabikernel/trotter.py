"""Exact N-step Trotter kernel D_N(x, y, t) of the Rabi Hamiltonian.

D_N is a sum over sign paths s in Z_2^N of a 2x2 word matrix times a scalar
Gaussian integral I_N.  Both have closed forms; the path sum is enumerated
in vectorised chunks and grouped by the endpoint pair (s(1), s(N)), which
fixes the word matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EvalPoint, Kernel2x2, ModelParams, log_mehler_k0

N_CAP = 22
CHUNK = 1 << 15

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])


# ---------------------------------------------------------------- tridiagonal algebra

def chebyshev_u_at(n: int, u: float) -> float:
    """U_n(-(1 + u^2) / (2u)) in closed form."""
    return (-1) ** n * (1 - u ** (2 * (n + 1))) / (u ** n * (1 - u * u))


def chebyshev_u_recurrence(n: int, z: float) -> float:
    a, b = 1.0, 2.0 * z
    if n == 0:
        return a
    for _ in range(n - 1):
        a, b = b, 2.0 * z * b - a
    return b


@dataclass(frozen=True)
class TridiagState:
    """The (N-1)x(N-1) matrix with 1 + u^2 on the diagonal and -u beside it."""

    N: int
    u: float

    def __post_init__(self):
        if self.N < 1 or not 0 < self.u < 1:
            raise ValueError("need N >= 1 and 0 < u < 1")

    @property
    def detA(self) -> float:
        return (1 - self.u ** (2 * self.N)) / (1 - self.u ** 2)

    def matrix(self) -> np.ndarray:
        n = self.N - 1
        u = self.u
        return (np.diag(np.full(n, 1 + u * u)) + np.diag(np.full(n - 1, -u), 1)
                + np.diag(np.full(n - 1, -u), -1)) if n > 0 else np.zeros((0, 0))

    def inv_entry(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        u, N = self.u, self.N
        return (u ** (j - i) * (1 - u ** (2 * i)) * (1 - u ** (2 * (N - j)))
                / ((1 - u ** (2 * N)) * (1 - u * u)))

    def inverse(self) -> np.ndarray:
        n = self.N - 1
        i = np.arange(1, n + 1)
        lo = np.minimum.outer(i, i)
        hi = np.maximum.outer(i, i)
        u, N = self.u, self.N
        return (u ** (hi - lo) * (1 - u ** (2 * lo)) * (1 - u ** (2 * (N - hi)))
                / ((1 - u ** (2 * N)) * (1 - u * u)))


def lambda_coeffs(N: int, u: float) -> np.ndarray:
    """Lambda^{(j)}(u) for j = 1..N (index j - 1)."""
    j = np.arange(1, N + 1)
    return u ** (j - 1) * (1 - u ** (2 * (N - j) + 1))


def omega_matrix(N: int, u: float) -> np.ndarray:
    """Symmetric (N-1)x(N-1) array of Omega^{(min(i,j), max(i,j))}(u)."""
    i = np.arange(1, N)
    lo = np.minimum.outer(i, i)
    hi = np.maximum.outer(i, i)
    return u ** (hi - lo) * (1 - u ** (2 * lo)) * (1 - u ** (2 * (N - hi)))


def eta(s) -> np.ndarray:
    sg = 1 - 2 * np.asarray(s, dtype=int)
    return sg[..., :-1] + sg[..., 1:]


# ---------------------------------------------------------------- scalar factor I_N

def _log_i_n(xs, ys, u: float, signs: np.ndarray, g: float) -> np.ndarray:
    """log I_N for a batch of sign vectors (B, N) and points (P,); returns (B, P)."""
    N = signs.shape[1]
    uN2 = u ** (2 * N)
    lam = lambda_coeffs(N, u)
    lin_c = math.sqrt(2.0) * g * (1 - u) / (1 - uN2)
    lin = lin_c * ((signs @ lam)[:, None] * xs[None, :] + (signs @ lam[::-1])[:, None] * ys[None, :])
    if N > 1:
        e = signs[:, :-1] + signs[:, 1:]
        q = np.einsum("bi,ij,bj->b", e, omega_matrix(N, u), e)
    else:
        q = np.zeros(signs.shape[0])
    quad = g * g * (1 - u) ** 2 / (2 * (1 + u) ** 2 * (1 - uN2)) * q - 2 * N * g * g * (1 - u) / (1 + u)
    t = -N * math.log(u)
    return log_mehler_k0(xs, ys, t, g)[None, :] + lin + quad[:, None]


def i_n_scalar(x: float, y: float, u: float, s, g: float) -> float:
    """I_N(x, y, u, s) with u the per-step factor exp(-t/N)."""
    signs = (1 - 2 * np.asarray(s, dtype=float))[None, :]
    return float(np.exp(_log_i_n(np.array([x], float), np.array([y], float), u, signs, g))[0, 0])


# ---------------------------------------------------------------- word matrix G_N

def m_matrix(i: int, j: int) -> np.ndarray:
    """M_ij = (-1)^{i+j} (1, e_i)^T (1, e_j) with e = (-1)^{1-s}.

    The (-1)^{i+j} carries the sign of the (1 - u^{2 delta}) factors of g_k,
    whose count has the parity of s(1) + s(k).
    """
    a = -1.0 if i == 0 else 1.0
    b = -1.0 if j == 0 else 1.0
    return (-1.0) ** (i + j) * np.array([[1.0, b], [a, a * b]])


def g_scalar(u: float, s, delta: float) -> float:
    s = list(s)
    k = len(s)
    tau = u ** (2 * delta)
    val = 1.0
    for i in range(k - 1):
        val *= 1 + (-1) ** (s[i] - s[i + 1]) * tau
    return val / (u ** ((k - 1) * delta) * 2 ** k)


def g_n_matrix(u: float, s, delta: float) -> Kernel2x2:
    s = list(s)
    mat = g_scalar(u, s, delta) * m_matrix(s[0], s[-1]) @ np.diag([u ** delta, u ** -delta])
    return Kernel2x2.from_array(mat)


def g_n_product(u: float, s, delta: float) -> Kernel2x2:
    """The defining ordered product 2^{-k} prod_i (I + (-1)^{1-s(i)} sigma_x) u^{delta sigma_z}."""
    d = np.diag([u ** delta, u ** -delta])
    out = np.eye(2)
    for si in s:
        out = out @ (0.5 * (np.eye(2) + (-1) ** (1 - si) * SIGMA_X)) @ d
    return Kernel2x2.from_array(out)


# ---------------------------------------------------------------- D_N

def d_n_kernel_grid(xs, ys, t: float, N: int, params: ModelParams) -> np.ndarray:
    """D_N at paired points; returns an array of shape (P, 2, 2)."""
    if not 1 <= N <= N_CAP:
        cost = 2 ** N * N
        raise ValueError(f"N = {N} outside 1..{N_CAP}; the path sum would need ~{cost:.3g} operations")
    EvalPoint(0.0, 0.0, t)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    g, delta = params.g, params.delta
    u = math.exp(-t / N)
    tau = u ** (2 * delta)
    log_plus = math.log1p(tau)
    log_minus = math.log1p(-tau) if tau < 1 else -math.inf
    base = -(N - 1) * delta * math.log(u) - N * math.log(2.0)
    P = xs.size
    # running log-sum-exp per endpoint class (s1, sN) and point
    run_max = np.full((4, P), -math.inf)
    run_sum = np.zeros((4, P))
    total = 2 ** N
    for lo in range(0, total, CHUNK):
        idx = np.arange(lo, min(total, lo + CHUNK))
        bits = ((idx[:, None] >> np.arange(N - 1, -1, -1)[None, :]) & 1).astype(np.int8)
        signs = 1.0 - 2.0 * bits
        flips = np.count_nonzero(bits[:, 1:] != bits[:, :-1], axis=1) if N > 1 else np.zeros(len(idx), int)
        with np.errstate(invalid="ignore"):
            lg = base + (N - 1 - flips) * log_plus + np.where(flips > 0, flips * log_minus, 0.0)
        lv = _log_i_n(xs, ys, u, signs, g) + lg[:, None]
        cls = 2 * bits[:, 0].astype(int) + bits[:, -1].astype(int)
        for c in range(4):
            sel = lv[cls == c]
            if sel.shape[0] == 0:
                continue
            m = np.max(sel, axis=0)
            new_max = np.maximum(run_max[c], m)
            finite = np.isfinite(new_max)
            scale_old = np.where(finite, np.exp(np.where(finite, run_max[c] - new_max, 0.0)), 0.0)
            add = np.where(finite, np.sum(np.exp(sel - np.where(finite, new_max, 0.0)), axis=0), 0.0)
            run_sum[c] = run_sum[c] * scale_old + add
            run_max[c] = new_max
    out = np.zeros((P, 2, 2))
    dvec = np.array([u ** delta, u ** -delta])
    for c in range(4):
        weight = np.where(np.isfinite(run_max[c]), run_sum[c] * np.exp(np.where(np.isfinite(run_max[c]), run_max[c], 0.0)), 0.0)
        out += weight[:, None, None] * (m_matrix(c // 2, c % 2) * dvec[None, :])[None]
    return out


def d_n_kernel(p: EvalPoint, N: int, params: ModelParams) -> Kernel2x2:
    return Kernel2x2.from_array(d_n_kernel_grid([p.x], [p.y], p.t, N, params)[0])


def convergence_slope(ns, deviations) -> float:
    """Least-squares slope of log(deviation) against log(N), sign flipped."""
    slope, _ = np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(deviations, float)), 1)
    return float(-slope)
