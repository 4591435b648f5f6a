"""Shared types and the closed-form building blocks of the Rabi heat kernel.

Conventions: the oscillator frequency is fixed to 1, the spin basis is
ordered (up, down) with sigma_z = diag(1, -1), and u = exp(-t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    g: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.g) and math.isfinite(self.delta)):
            raise ValueError("g and delta must be finite")
        if self.g < 0:
            raise ValueError(f"coupling g must be >= 0, got {self.g}")
        if self.delta < 0:
            raise ValueError(
                f"delta must be >= 0, got {self.delta}; "
                "use series.swap_parity_for_negative_delta for the parity swap")


@dataclass(frozen=True)
class EvalPoint:
    x: float
    y: float
    t: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("x and y must be finite")
        if not (self.t > 0 and math.isfinite(self.t)):
            raise ValueError(f"t must be strictly positive, got {self.t}")


@dataclass(frozen=True)
class Kernel2x2:
    k11: float
    k12: float
    k21: float
    k22: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.k11, self.k12, self.k21, self.k22)):
            raise ValueError(f"non-finite kernel entry in {self}")

    @classmethod
    def from_array(cls, a) -> "Kernel2x2":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0, 0]), float(a[0, 1]), float(a[1, 0]), float(a[1, 1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.k11, self.k12], [self.k21, self.k22]])

    def transpose(self) -> "Kernel2x2":
        return Kernel2x2(self.k11, self.k21, self.k12, self.k22)

    def __matmul__(self, other: "Kernel2x2") -> "Kernel2x2":
        return Kernel2x2.from_array(self.as_array() @ other.as_array())

    def max_abs_diff(self, other) -> float:
        other = other.as_array() if isinstance(other, Kernel2x2) else np.asarray(other)
        return float(np.max(np.abs(self.as_array() - other)))


@dataclass(frozen=True)
class SimplexPoint:
    """Ordered point 0 <= mu_1 <= ... <= mu_lam <= 1; lam = 0 is the empty tuple."""

    mu: tuple

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        object.__setattr__(self, "mu", mu)
        prev = 0.0
        for m in mu:
            if not (prev <= m <= 1.0):
                raise ValueError(f"simplex point must satisfy 0 <= mu_1 <= ... <= 1, got {mu}")
            prev = m

    @property
    def lam(self) -> int:
        return len(self.mu)

    def with_origin(self) -> np.ndarray:
        """(mu_0, mu_1, ..., mu_lam) with mu_0 = 0."""
        return with_origin(np.asarray(self.mu, dtype=float)[None, :])[0]

    @property
    def last(self) -> float:
        return self.mu[-1] if self.mu else 0.0


def with_origin(mu: np.ndarray) -> np.ndarray:
    """Prepend the mu_0 = 0 column to a batch of simplex points of shape (M, lam)."""
    mu = np.asarray(mu, dtype=float)
    return np.concatenate([np.zeros(mu.shape[:-1] + (1,)), mu], axis=-1)


def log_mehler_k0(x, y, t: float, g: float):
    """Logarithm of K0(x, y, t; g); vectorised over x and y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    one_m_u2 = -math.expm1(-2.0 * t)
    u = math.exp(-t)
    quad = -(1.0 + u * u) * (x * x + y * y) / (2.0 * one_m_u2) + 2.0 * u * x * y / one_m_u2
    return g * g * t - 0.5 * math.log(math.pi * one_m_u2) + quad


def mehler_k0(p: EvalPoint, g: float) -> float:
    val = math.exp(float(log_mehler_k0(p.x, p.y, p.t, g)))
    if not math.isfinite(val):
        raise OverflowError(f"K0 overflow at {p}")
    return val


def scaled_cosh_sinh(log_scale, theta):
    """Return (e^L cosh(theta), e^L sinh(theta)) without forming cosh of a huge argument."""
    log_scale = np.asarray(log_scale, dtype=float)
    theta = np.asarray(theta, dtype=float)
    a = np.exp(log_scale + theta - math.log(2.0))
    b = np.exp(log_scale - theta - math.log(2.0))
    return a + b, a - b


def rot_even(theta: float) -> Kernel2x2:
    c, s = math.cosh(theta), math.sinh(theta)
    return Kernel2x2(c, -s, -s, c)


def rot_odd(theta: float) -> Kernel2x2:
    c, s = math.cosh(theta), math.sinh(theta)
    return Kernel2x2(-c, s, -s, c)


def rot_from_cs(c, s, lam: int) -> np.ndarray:
    """Stack the even/odd rotation pattern from precomputed cosh/sinh parts.

    Returns an array of shape c.shape + (2, 2).
    """
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.empty(c.shape + (2, 2))
    if lam % 2 == 0:
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
    else:
        out[..., 0, 0] = -c
        out[..., 0, 1] = s
    out[..., 1, 0] = -s
    out[..., 1, 1] = c
    return out


def single_step_kernel(p: EvalPoint, params: ModelParams) -> Kernel2x2:
    """Kernel of exp(-t(b^dag b - g^2)) exp(-t delta sigma_z), with b = a + g sigma_x."""
    g, d, t = params.g, params.delta, p.t
    th = math.tanh(t / 2.0)
    base = float(log_mehler_k0(p.x, p.y, t, g)) - 2.0 * g * g * th
    alpha = th * math.sqrt(2.0) * g * (p.x + p.y)
    # column j picks up u^{delta} for up and u^{-delta} for down
    c_up, s_up = scaled_cosh_sinh(base - t * d, alpha)
    c_dn, s_dn = scaled_cosh_sinh(base + t * d, alpha)
    return Kernel2x2(float(c_up), float(-s_dn), float(-s_up), float(c_dn))
