"""Ground truth from the truncated Fock representation.

The full model lives on span{|n> (x) e_s}, index 2n + s with s = 0 the
sigma_z = +1 state.  Parity models act on span{|n>} alone.  Position-space
kernels come from the normalized Hermite functions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import EvalPoint, Kernel2x2, ModelParams

FULL = "full"
PARITY_PLUS = "parity+"
PARITY_MINUS = "parity-"
WHICH = (FULL, PARITY_PLUS, PARITY_MINUS)

DEFAULT_CUTOFF = 60
MAX_CUTOFF = 240


class EigensolverError(ArithmeticError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3g})")
        self.residual = residual


class CutoffWarning(UserWarning):
    pass


# ---------------------------------------------------------------- Hermite functions

def hermite_table(n_max: int, x) -> np.ndarray:
    """phi_0..phi_{n_max} at x; shape (n_max + 1,) + shape(x)."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_phi(n: int, x):
    return hermite_table(n, x)[n]


# ---------------------------------------------------------------- Hamiltonians

def fock_hamiltonian(params: ModelParams, n_cut: int, which: str = FULL, delta_sign: float = 1.0) -> np.ndarray:
    """Real symmetric truncation of H_R (which='full') or H_+/- (parity).

    ``delta_sign = 0`` drops the splitting term, which gives b^dag b - g^2 for
    the full model.
    """
    if which not in WHICH:
        raise ValueError(f"which must be one of {WHICH}")
    g, d = params.g, params.delta * delta_sign
    n = n_cut + 1
    off = g * np.sqrt(np.arange(1, n))
    if which == FULL:
        H = np.zeros((2 * n, 2 * n))
        k = np.arange(n)
        H[2 * k, 2 * k] = k + d
        H[2 * k + 1, 2 * k + 1] = k - d
        # a + a^dag connects n, n+1 and sigma_x flips the spin
        i = np.arange(n - 1)
        H[2 * i, 2 * (i + 1) + 1] = off
        H[2 * i + 1, 2 * (i + 1)] = off
        H[2 * (i + 1) + 1, 2 * i] = off
        H[2 * (i + 1), 2 * i + 1] = off
        return H
    sign = 1.0 if which == PARITY_PLUS else -1.0
    k = np.arange(n)
    return np.diag(k + sign * d * (-1.0) ** k) + np.diag(off, 1) + np.diag(off, -1)


@dataclass(frozen=True)
class SpectralModel:
    params: ModelParams
    n_cut: int
    which: str
    hamiltonian: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.n_cut + 1

    @property
    def is_full(self) -> bool:
        return self.which == FULL


def build_model(params: ModelParams, n_cut: int = DEFAULT_CUTOFF, which: str = FULL) -> SpectralModel:
    if n_cut < 8:
        raise ValueError(f"n_cut must be >= 8, got {n_cut}")
    H = fock_hamiltonian(params, n_cut, which)
    if np.max(np.abs(H - H.T)) > 1e-14:
        raise ValueError("assembled Hamiltonian is not symmetric")
    try:
        E, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigensolver did not converge: {exc}", math.inf) from exc
    scale = max(1.0, float(np.linalg.norm(H, 2)))
    residual = float(np.max(np.linalg.norm(H @ V - V * E, axis=0)))
    if residual > 1e-10 * scale:
        raise EigensolverError("eigenpair residual above 1e-10 ||H||", residual)
    ortho = float(np.max(np.abs(V.T @ V - np.eye(len(E)))))
    if ortho > 1e-10:
        raise EigensolverError("eigenvectors not orthonormal", ortho)
    for arr in (H, E, V):
        arr.setflags(write=False)
    return SpectralModel(params, n_cut, which, H, E, V)


# ---------------------------------------------------------------- position kernels

def matrix_kernel_grid(M: np.ndarray, n_cut: int, xs, ys, spin: bool) -> np.ndarray:
    """Position kernel sum_{n,m} phi_n(x) M[n., m.] phi_m(y) at paired points.

    Shape (P, 2, 2) when ``spin`` else (P,).
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    hx = hermite_table(n_cut, xs)
    hy = hermite_table(n_cut, ys)
    n = n_cut + 1
    if spin:
        Mr = M.reshape(n, 2, n, 2)
        return np.einsum("np,nsmr,mp->psr", hx, Mr, hy, optimize=True)
    return np.einsum("np,nm,mp->p", hx, M, hy, optimize=True)


def oracle_kernel_grid(model: SpectralModel, xs, ys, t: float) -> np.ndarray:
    EvalPoint(0.0, 0.0, t)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    n = model.n_modes
    w = np.exp(-t * model.eigenvalues)
    hx = hermite_table(model.n_cut, xs)
    hy = hermite_table(model.n_cut, ys)
    V = model.eigenvectors
    if model.is_full:
        Vr = V.reshape(n, 2, -1)
        px = np.einsum("np,nsk->psk", hx, Vr, optimize=True)
        py = np.einsum("np,nsk->psk", hy, Vr, optimize=True)
        return np.einsum("psk,k,prk->psr", px, w, py, optimize=True)
    px = hx.T @ V
    py = hy.T @ V
    return np.einsum("pk,k,pk->p", px, w, py, optimize=True)


def oracle_heat_kernel(model: SpectralModel, p: EvalPoint):
    val = oracle_kernel_grid(model, [p.x], [p.y], p.t)[0]
    return Kernel2x2.from_array(val) if model.is_full else float(val)


@dataclass
class Certified:
    """An oracle observable with its cutoff-doubling change."""

    value: np.ndarray
    n_cut: int
    change: float
    certified: bool


def _certify(evaluate, params: ModelParams, which: str, tol: float, n_start: int, n_max: int) -> Certified:
    n = n_start
    prev = evaluate(build_model(params, n, which))
    while True:
        n2 = 2 * n
        if n2 > n_max:
            warnings.warn(f"oracle cutoff {n} not certified to {tol:g} (cap {n_max})", CutoffWarning)
            return Certified(prev, n, math.inf, False)
        cur = evaluate(build_model(params, n2, which))
        change = float(np.max(np.abs(np.asarray(cur) - np.asarray(prev))))
        if change < tol:
            return Certified(cur, n2, change, True)
        prev, n = cur, n2


def certified_kernel_grid(params: ModelParams, xs, ys, t: float, which: str = FULL, tol: float = 1e-8,
                          n_start: int = DEFAULT_CUTOFF, n_max: int = MAX_CUTOFF) -> Certified:
    """Oracle kernel with the cutoff doubled until successive values agree to tol."""
    return _certify(lambda m: oracle_kernel_grid(m, xs, ys, t), params, which, tol, n_start, n_max)


def oracle_partition(model: SpectralModel, beta: float) -> float:
    if not beta > 0:
        raise ValueError("beta must be positive")
    return float(np.sum(np.exp(-beta * model.eigenvalues)))


def certified_partition(params: ModelParams, beta: float, which: str = FULL, tol: float = 1e-10,
                        n_start: int = DEFAULT_CUTOFF, n_max: int = MAX_CUTOFF) -> Certified:
    """sum_n exp(-beta E_n) with the cutoff doubled until the relative change is below tol."""
    n = n_start
    prev = oracle_partition(build_model(params, n, which), beta)
    while 2 * n <= n_max:
        n *= 2
        value = oracle_partition(build_model(params, n, which), beta)
        change = abs(value - prev) / abs(value)
        if change < tol:
            return Certified(np.array(value), n, change, True)
        prev = value
    warnings.warn(f"partition cutoff {n} not certified to {tol:g}", CutoffWarning)
    return Certified(np.array(prev), n, math.inf, False)


# ---------------------------------------------------------------- Trotter mirror

def trotter_matrix_product(params: ModelParams, n_cut: int, t: float, N: int) -> np.ndarray:
    """(exp(-t(b^dag b - g^2)/N) exp(-t delta sigma_z / N))^N in the truncated Fock basis."""
    if n_cut < 8:
        raise ValueError(f"n_cut must be >= 8, got {n_cut}")
    if N < 1:
        raise ValueError("N must be >= 1")
    EvalPoint(0.0, 0.0, t)
    A = fock_hamiltonian(params, n_cut, FULL, delta_sign=0.0)
    n = n_cut + 1
    sz = np.tile([1.0, -1.0], n)
    step = expm(-t / N * A) * np.exp(-t / N * params.delta * sz)[None, :]
    return np.linalg.matrix_power(step, N)


def propagator(model: SpectralModel, t: float) -> np.ndarray:
    V = model.eigenvectors
    return (V * np.exp(-t * model.eigenvalues)) @ V.T


# ---------------------------------------------------------------- parity structure

def parity_transform(n_cut: int) -> np.ndarray:
    """C U in the Fock (x) spin basis: per mode n the block (1/2)[[1+p, 1-p], [1-p, 1+p]], p = (-1)^n."""
    n = n_cut + 1
    W = np.zeros((2 * n, 2 * n))
    for k in range(n):
        p = (-1.0) ** k
        W[2 * k:2 * k + 2, 2 * k:2 * k + 2] = 0.5 * np.array([[1 + p, 1 - p], [1 - p, 1 + p]])
    return W


def parity_blocks(H: np.ndarray, n_cut: int):
    """(CU)^dag H CU split into (++, +-, -+, --) Fock blocks."""
    W = parity_transform(n_cut)
    n = n_cut + 1
    Hc = (W.T @ H @ W).reshape(n, 2, n, 2)
    return Hc[:, 0, :, 0], Hc[:, 0, :, 1], Hc[:, 1, :, 0], Hc[:, 1, :, 1]


def conjugate_kernel(kernel, x: float, y: float) -> np.ndarray:
    """Position-space (CU)^dag K CU at (x, y), with T acting as reflection.

    ``kernel(x, y)`` returns a 2x2 array.
    """
    E = np.ones((2, 2))
    F = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return 0.25 * (E @ kernel(x, y) @ E + F @ kernel(-x, y) @ E
                   + E @ kernel(x, -y) @ F + F @ kernel(-x, -y) @ F)
