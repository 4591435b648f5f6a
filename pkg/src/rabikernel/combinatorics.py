"""Harmonic analysis on Z_2^k behind the heat-kernel series.

Bit strings are tuples of 0/1 with position 1 first.  Functions taking a
parameter ``t`` work for floats and for ``fractions.Fraction`` (exact mode).
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Sequence

import numpy as np


# ---------------------------------------------------------------- bit strings

def all_bitstrings(k: int):
    return itertools.product((0, 1), repeat=k)


def norm(rho: Sequence[int]) -> int:
    return sum(rho)


def ones_positions(rho: Sequence[int]) -> list:
    """1-based positions j_1 < ... < j_|rho| of the ones."""
    return [i + 1 for i, b in enumerate(rho) if b]


def bits_to_int(s: Sequence[int]) -> int:
    """s(1) is the most significant bit."""
    out = 0
    for b in s:
        out = (out << 1) | b
    return out


def int_to_bits(n: int, k: int) -> tuple:
    return tuple((n >> (k - 1 - i)) & 1 for i in range(k))


def bit_matrix(k: int) -> np.ndarray:
    """All of Z_2^k as a (2^k, k) int array, row index = bits_to_int(row)."""
    idx = np.arange(2 ** k)[:, None]
    return ((idx >> np.arange(k - 1, -1, -1)[None, :]) & 1).astype(np.int8)


# ---------------------------------------------------------------- q-numbers

def q_number(i: int, t):
    if t == 1:
        return type(t)(i) if isinstance(t, Fraction) else float(i)
    return (1 - t ** i) / (1 - t)


# ---------------------------------------------------------------- varphi

def varphi(rho: Sequence[int]) -> int:
    js = ones_positions(rho)
    return sum(j if (len(js) - 1 - n) % 2 == 0 else -j for n, j in enumerate(js))


def suffix_parities(rho: Sequence[int]) -> list:
    """Parity of sum_{j >= i} rho_j for i = 1..k; the coefficients of varphi_t."""
    out = [0] * len(rho)
    acc = 0
    for i in range(len(rho) - 1, -1, -1):
        acc ^= rho[i]
        out[i] = acc
    return out


def varphi_t(rho: Sequence[int], t):
    zero = Fraction(0) if isinstance(t, Fraction) else 0.0
    return sum((t ** i for i, c in enumerate(suffix_parities(rho)) if c), zero)


def varphi_t_positions(rho: Sequence[int], t):
    """Ones-position form: sum_i (-1)^{i-1} [j_{|rho|+1-i}]_t."""
    js = ones_positions(rho)
    zero = Fraction(0) if isinstance(t, Fraction) else 0.0
    return sum(((-1) ** i * q_number(j, t) for i, j in enumerate(reversed(js))), zero)


def varphi_t_product(rho: Sequence[int], t):
    """Third form: sum_i [i]_t rho_i prod_{j > i} (1 - 2 rho_j)."""
    total = Fraction(0) if isinstance(t, Fraction) else 0.0
    sign = 1
    for i in range(len(rho), 0, -1):
        if rho[i - 1]:
            total += sign * q_number(i, t)
            sign = -sign
    return total


def varphi_poly(rho: Sequence[int]) -> list:
    """Integer coefficients of varphi_t as a polynomial in t (lowest degree first)."""
    return suffix_parities(rho)


# ---------------------------------------------------------------- Fourier analysis

def walsh_hadamard(values) -> np.ndarray:
    """f_hat(rho) = sum_s f(s) (-1)^{(s|rho)}, both indexed by bits_to_int."""
    a = np.array(values, dtype=float)
    n = a.shape[0]
    k = n.bit_length() - 1
    if 2 ** k != n:
        raise ValueError("length must be a power of two")
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.stack([a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]], axis=1).reshape(n)
        h *= 2
    return a


def g_function(k: int, v: int, w: int, tau: float, s: Sequence[int]) -> float:
    """g_k^{(v,w)}(s) with tau standing for u^{2 delta}."""
    if k == 0:
        return 1.0 + (-1) ** (v + w) * tau
    val = (1 + (-1) ** (v + s[0]) * tau) * (1 + (-1) ** (w + s[-1]) * tau)
    for i in range(k - 1):
        val *= 1 + (-1) ** (s[i] + s[i + 1]) * tau
    return val / 2 ** k


def g_function_table(k: int, v: int, w: int, tau: float) -> np.ndarray:
    if k == 0:
        return np.array([1.0 + (-1) ** (v + w) * tau])
    s = bit_matrix(k).astype(int)
    sg = 1 - 2 * s
    val = (1 + (-1) ** v * sg[:, 0] * tau) * (1 + (-1) ** w * sg[:, -1] * tau)
    val = val * np.prod(1 + sg[:, :-1] * sg[:, 1:] * tau, axis=1)
    return val / 2 ** k


def fourier_g_hat(k: int, v: int, w: int, tau: float, rho: Sequence[int]) -> float:
    if len(rho) != k:
        raise ValueError("rho must have length k")
    ph = varphi(rho)
    return (-1) ** (v * norm(rho)) * (tau ** ph + (-1) ** (v + w) * tau ** (k + 1 - ph))


def varphi_hat(rho: Sequence[int]) -> int:
    """Fourier transform of s -> varphi_k(s)."""
    k = len(rho)
    if not any(rho):
        return k * 2 ** (k - 1)
    first = rho.index(1)
    if all(rho[first:]):
        return -2 ** (k - 1)
    return 0


# ---------------------------------------------------------------- partition of Z_2^N

def partition_class(s: Sequence[int]) -> tuple:
    """(i, j, k) with s in A^{i,j}_{k,N}: k is where the final constant run starts."""
    n = len(s)
    k = n
    while k > 1 and s[k - 2] == s[n - 1]:
        k -= 1
    return s[0], s[n - 1], k


def partition_set(i: int, j: int, k: int, n: int) -> list:
    if k == 1:
        return [tuple([i] * n)] if i == j else []
    if k == 2:
        return [tuple([i] + [j] * (n - 1))] if i != j else []
    if k > n:
        return []
    out = []
    for mid in all_bitstrings(k - 3):
        out.append((i,) + mid + (1 - j,) + (j,) * (n - k + 1))
    return out


# ---------------------------------------------------------------- graph vectors

def graph_length(m: int) -> int:
    return m * (m + 1) // 2


def edge_list(m: int) -> list:
    """Index layout: loops (0, i) for i = 1..m, then edges (i, j), i < j, lexicographic."""
    return [(0, i) for i in range(1, m + 1)] + list(itertools.combinations(range(1, m + 1), 2))


def degrees(r: Sequence[int], m: int) -> list:
    deg = [0] * m
    for bit, (a, b) in zip(r, edge_list(m)):
        if bit:
            if a == 0:
                deg[b - 1] += 1
            else:
                deg[a - 1] += 1
                deg[b - 1] += 1
    return deg


def in_V(r: Sequence[int], m: int, rho: Sequence[int] | None = None) -> bool:
    rho = rho or (0,) * m
    return all((d - p) % 2 == 0 for d, p in zip(degrees(r, m), rho))


def enumerate_V0(m: int) -> list:
    """All even graph vectors on m vertices, sorted lexicographically.

    Built from the free edge part: the loops are then forced by parity.
    """
    edges = edge_list(m)[m:]
    out = []
    for e in all_bitstrings(len(edges)):
        deg = [0] * m
        for bit, (a, b) in zip(e, edges):
            if bit:
                deg[a - 1] += 1
                deg[b - 1] += 1
        out.append(tuple(d % 2 for d in deg) + e)
    return sorted(out)


def enumerate_V0_bruteforce(m: int) -> list:
    n = graph_length(m)
    if n == 0:
        return [()]
    r = bit_matrix(n)
    inc = np.zeros((n, m), dtype=np.int64)
    for col, (a, b) in enumerate(edge_list(m)):
        if a:
            inc[col, a - 1] = 1
        inc[col, b - 1] = 1
    even = np.all((r.astype(np.int64) @ inc) % 2 == 0, axis=1)
    return [tuple(int(b) for b in row) for row in r[even]]


def sigma_rho(rho: Sequence[int], r: Sequence[int]) -> tuple:
    m = len(rho)
    if len(r) != graph_length(m):
        raise ValueError("graph vector length does not match rho")
    return tuple((a + b) % 2 for a, b in zip(r, tuple(rho) + (0,) * (len(r) - m)))


def p1(r, m):
    return tuple(r[:m])


def p2(r, m):
    return tuple(r[m:])


def q1(r, m):
    return tuple(r[m:2 * m - 1])


def q2(r, m):
    return tuple(r[2 * m - 1:])


# ---------------------------------------------------------------- summation identities

def verify_sum_v0(m: int, a: Sequence[float], v: Sequence[int]) -> tuple:
    """Both sides of the V_0 summation lemma.

    ``a`` is indexed like a graph vector (loops then edges), ``v`` = (v_0, ..., v_m).
    """
    a = list(map(float, a))
    if len(a) != graph_length(m) or len(v) != m + 1:
        raise ValueError("shape mismatch")
    lhs = 0.0
    for r in enumerate_V0(m):
        term = 1.0
        for i in range(m):
            sgn = (-1) ** (v[0] + v[i + 1])
            # T^{(r)} loop factor times (1 + sgn tanh^{1-2r}), written without dividing
            if r[i]:
                term *= math.sinh(a[i]) + sgn * math.cosh(a[i])
            else:
                term *= math.cosh(a[i]) + sgn * math.sinh(a[i])
        for idx in range(m, len(a)):
            term *= math.sinh(a[idx]) if r[idx] else math.cosh(a[idx])
        lhs += term
    expo = 0.0
    for bit_idx, (i, j) in enumerate(edge_list(m)):
        expo += (-1) ** (v[i] + v[j]) * a[bit_idx]
    return lhs, math.exp(expo)


def fg_recurrence(tau: float, A: Sequence[float]) -> tuple:
    f, g = 1.0, tau
    for a in A:
        f, g = f + a * g, tau * (g + a * f)
    return f, g


def fg_bruteforce(tau: float, A: Sequence[float]) -> tuple:
    k = len(A)
    f = g = 0.0
    for rho in all_bitstrings(k):
        w = math.prod(a for a, b in zip(A, rho) if b)
        ph = varphi(rho)
        f += tau ** ph * w
        g += tau ** (k + 1 - ph) * w
    return f, g


def verify_sum_fg(k: int, tau: float, A: Sequence[float], vw: tuple) -> tuple:
    if len(A) != k:
        raise ValueError("A must have length k")
    sign = (-1) ** (vw[0] + vw[1])
    f, g = fg_bruteforce(tau, A)
    lhs = f + sign * g
    rhs = 0.0
    for ell in range(k + 1):
        inner = 0.0
        for js in itertools.combinations(range(1, k + 1), ell):
            bounds = (0,) + js + (k,)
            prod = 1.0
            for i in range(ell + 1):
                ci = sign * (-1) ** (ell - i)
                for n in range(bounds[i] + 1, bounds[i + 1] + 1):
                    prod *= 1 + ci * A[n - 1]
            inner += prod
        rhs += (1 + tau) ** (k - ell) * (1 - tau) ** ell * (1 + sign * (-1) ** ell * tau) * inner
    return lhs, rhs / 2 ** k


def verify_sumexp(k: int, lam: int, t: float, s: float) -> tuple:
    if not 1 <= lam <= k:
        raise ValueError("need 1 <= lam <= k")
    lhs = 0.0
    for ones in itertools.combinations(range(k), lam):
        rho = [0] * k
        for i in ones:
            rho[i] = 1
        lhs += math.exp(sum(t ** j * varphi_t(rho[:j], s) for j in range(1, k + 1)))
    rhs = 0.0
    for idx in itertools.combinations(range(1, k + 1), lam):
        i = (0,) + idx + (k + 1,)
        expo = 0.0
        for al in range(lam + 1):
            for be in range(al + 1, lam + 1, 2):
                expo += (t ** i[be] * s ** i[al] * q_number(i[al + 1] - i[al], s)
                         * q_number(i[be + 1] - i[be], t))
        rhs += math.exp(expo)
    return lhs, rhs


# ---------------------------------------------------------------- structure of V_0

def v0_structure(m: int) -> dict:
    """Check the five structural properties of V_0^{(m)} exhaustively (m >= 2).

    Returns a dict of item number -> bool.
    """
    if m < 2:
        raise ValueError("structure checks need m >= 2")
    V = enumerate_V0(m)
    Vset = set(V)
    n_edges = m * (m - 1) // 2
    out = {}
    # (1) p2 is a bijection onto Z_2^{m(m-1)/2}
    out[1] = sorted(p2(r, m) for r in V) == sorted(all_bitstrings(n_edges))
    # (2) p1 hits exactly the even-weight strings
    evens = {rho for rho in all_bitstrings(m) if sum(rho) % 2 == 0}
    out[2] = all(sum(p1(r, m)) % 2 == 0 for r in V) and {p1(r, m) for r in V} == evens
    # (3) V_0^{(m-1)} = p2 of the loop-free part
    out[3] = sorted(p2(r, m) for r in V if not any(p1(r, m))) == enumerate_V0(m - 1)
    # (4) and (5), fibre by fibre over q2
    ok4 = ok5 = True
    for v in all_bitstrings((m - 1) * (m - 2) // 2):
        fibre = [r for r in V if q2(r, m) == v]
        ps = [p1(r, m) for r in fibre]
        qs = [q1(r, m) for r in fibre]
        ok4 &= len(set(ps)) == len(fibre) and set(ps) == evens
        ok4 &= len(set(qs)) == len(fibre) and set(qs) == set(all_bitstrings(m - 1))
        base = [r for r in fibre if not any(p1(r, m))]
        if len(base) != 1:
            ok5 = False
            continue
        q0 = q1(base[0], m)
        for r in fibre:
            shifted = tuple((a + b) % 2 for a, b in zip(q0, r[1:m]))
            ok5 &= q1(r, m) == shifted
    out[4] = bool(ok4)
    out[5] = bool(ok5) and all(r in Vset for r in V)
    return out


def varphi_t_reversed_rhs(rho: Sequence[int], t):
    """Right side of the reversal formula: (-1)^|rho| t^k varphi(rho; 1/t) + [|rho| odd] [k+1]_t."""
    k = len(rho)
    n = norm(rho)
    return (-1) ** n * t ** k * varphi_t(rho, 1 / t) + (n % 2) * q_number(k + 1, t)
