"""Integration over the ordered simplex 0 <= mu_1 <= ... <= mu_lam <= 1.

Integrands are vectorised: ``f(mu)`` receives an array of shape (M, lam) and
returns an array whose leading axis has length M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

NESTED = "nested-gauss"
QMC = "sorted-qmc"
GM = "grundmann-moller"
QMC_BATCHES = 16


@dataclass(frozen=True)
class SimplexRule:
    """mode: nested-gauss (order = points per level), sorted-qmc (order = sample
    count, seed used), grundmann-moller (order = s, exact to degree 2s + 1)."""

    mode: str = NESTED
    order: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (NESTED, QMC, GM):
            raise ValueError(f"unknown simplex rule mode {self.mode!r}")
        if self.mode == NESTED and self.order < 1:
            raise ValueError("nested order must be >= 1")
        if self.mode == GM and not 1 <= self.order <= 12:
            raise ValueError("grundmann-moller index s must lie in 1..12")
        if self.mode == QMC:
            n = self.order
            if n < QMC_BATCHES or n & (n - 1):
                raise ValueError(f"qmc sample count must be a power of two >= {QMC_BATCHES}, got {n}")


@dataclass(frozen=True)
class QuadraturePlan:
    """Which rule to use for each simplex dimension.

    Dimensions up to ``crossover`` use nested Gauss (nested_order=None means 16
    per level, 10 at lam = 5).  Above it ``high`` selects grundmann-moller
    (index gm_index, lowered to gm_index - 2 past lam = 10 where the terms are
    tiny) or sorted-qmc.
    """

    nested_order: int | None = None
    high: str = GM
    gm_index: int = 8
    qmc_count: int = 2 ** 16
    seed: int = 0
    crossover: int = 5

    def __post_init__(self):
        if not 0 <= self.crossover <= 5:
            raise ValueError("crossover must lie in 0..5 (nested rules are capped at lam = 5)")
        if self.high not in (GM, QMC):
            raise ValueError(f"high-dimension rule must be {GM} or {QMC}")
        SimplexRule(QMC, self.qmc_count, self.seed)
        SimplexRule(GM, self.gm_index)
        if self.nested_order is not None:
            SimplexRule(NESTED, self.nested_order)

    def rule_for(self, lam: int) -> SimplexRule:
        if lam <= self.crossover:
            order = self.nested_order or (10 if lam == 5 else 16)
            return SimplexRule(NESTED, order)
        if self.high == GM:
            s = self.gm_index if lam <= 10 else max(2, self.gm_index - 2)
            return SimplexRule(GM, s)
        return SimplexRule(QMC, self.qmc_count, self.seed * 1009 + lam)


@lru_cache(maxsize=64)
def _gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=32)
def nested_nodes(lam: int, order: int):
    """Iterated Gauss-Legendre nodes on the ordered simplex.

    The outer variable is mu_lam on [0, 1]; each inner mu_i lives on [0, mu_{i+1}].
    """
    if lam > 5:
        raise ValueError(f"nested rule restricted to lam <= 5, got {lam}")
    x, w = _gauss01(order)
    pts = np.zeros((1, 0))
    wts = np.ones(1)
    for _ in range(lam):
        upper = pts[:, :1] if pts.shape[1] else np.ones((pts.shape[0], 1))
        new = x[None, :] * upper  # (P, order)
        pts = np.concatenate([new.reshape(-1, 1), np.repeat(pts, order, axis=0)], axis=1)
        wts = (wts[:, None] * w[None, :] * upper).reshape(-1)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=64)
def gm_nodes(lam: int, s: int):
    """Grundmann-Moller rule of degree 2s + 1 mapped onto the ordered simplex.

    Barycentric points b_0..b_lam become mu_k = b_1 + ... + b_k (unit Jacobian).
    """
    d = 2 * s + 1
    pts = []
    wts = []
    for i in range(s + 1):
        w = (-1) ** i * 2.0 ** (-2 * s) * (d + lam - 2 * i) ** d / (
            math.factorial(i) * math.factorial(d + lam - i))
        denom = d + lam - 2 * i
        for beta in _compositions(s - i, lam + 1):
            pts.append([(2 * b + 1) / denom for b in beta[1:]])
            wts.append(w)
    mu = np.cumsum(np.array(pts, dtype=float).reshape(len(pts), lam), axis=1)
    np.clip(mu, 0.0, 1.0, out=mu)
    wts = np.array(wts)
    mu.setflags(write=False)
    wts.setflags(write=False)
    return mu, wts


def qmc_batches(lam: int, count: int, seed: int):
    """16 independently scrambled Sobol batches, each sorted into the simplex."""
    per = count // QMC_BATCHES
    children = np.random.SeedSequence(seed).spawn(QMC_BATCHES)
    out = []
    for child in children:
        eng = qmc.Sobol(d=lam, scramble=True, seed=np.random.default_rng(child))
        out.append(np.sort(eng.random(per), axis=1))
    return out


def _check_finite(vals, mu):
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals.reshape(vals.shape[0], -1)))[0][0]
        raise FloatingPointError(f"non-finite integrand at mu = {mu[bad].tolist()}")


def _weighted_sum(vals, w):
    return np.tensordot(w, vals, axes=(0, 0))


def simplex_integrate(f, lam: int, rule: SimplexRule):
    """Return (value, error_estimate) of the simplex integral of f."""
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if lam == 0:
        mu = np.zeros((1, 0))
        vals = np.asarray(f(mu), dtype=float)
        _check_finite(vals, mu)
        return vals[0], np.zeros_like(vals[0])
    if rule.mode == NESTED:
        if lam > 5:
            raise ValueError(f"nested rule restricted to lam <= 5, got {lam}")
        pts, w = nested_nodes(lam, rule.order)
        vals = np.asarray(f(pts), dtype=float)
        _check_finite(vals, pts)
        value = _weighted_sum(vals, w)
        pts2, w2 = nested_nodes(lam, max(1, rule.order // 2))
        vals2 = np.asarray(f(pts2), dtype=float)
        _check_finite(vals2, pts2)
        err = np.abs(value - _weighted_sum(vals2, w2))
        return value, err
    if rule.mode == GM:
        pts, w = gm_nodes(lam, rule.order)
        vals = np.asarray(f(pts), dtype=float)
        _check_finite(vals, pts)
        value = _weighted_sum(vals, w)
        pts2, w2 = gm_nodes(lam, max(0, rule.order - 1))
        vals2 = np.asarray(f(pts2), dtype=float)
        _check_finite(vals2, pts2)
        err = np.abs(value - _weighted_sum(vals2, w2))
        return value, err
    fact = math.factorial(lam)
    means = []
    for pts in qmc_batches(lam, rule.order, rule.seed):
        vals = np.asarray(f(pts), dtype=float)
        _check_finite(vals, pts)
        means.append(vals.mean(axis=0))
    means = np.stack(means)
    value = means.mean(axis=0) / fact
    err = means.std(axis=0, ddof=1) / math.sqrt(QMC_BATCHES) / fact
    return value, err


def rule_size(lam: int, rule: SimplexRule) -> int:
    """Number of integrand samples per evaluation pass."""
    if lam == 0:
        return 1
    if rule.mode == NESTED:
        return rule.order ** lam
    if rule.mode == GM:
        return math.comb(rule.order + lam + 1, lam + 1)
    return rule.order // QMC_BATCHES
