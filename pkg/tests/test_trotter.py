import math

import numpy as np
import pytest
from scipy.integrate import quad

from rabikernel.core import EvalPoint, ModelParams, mehler_k0, single_step_kernel
from rabikernel.oracle import trotter_matrix_product, matrix_kernel_grid
from rabikernel.trotter import (N_CAP, TridiagState, chebyshev_u_at, chebyshev_u_recurrence, convergence_slope,
                                d_n_kernel, d_n_kernel_grid, eta, g_n_matrix, g_n_product, g_scalar, i_n_scalar,
                                lambda_coeffs, m_matrix, omega_matrix)


def _bits(n, k):
    return [(n >> (k - 1 - i)) & 1 for i in range(k)]


@pytest.mark.parametrize("u", [0.1, 0.5, 0.93])
def test_chebyshev(u):
    z = -(1 + u * u) / (2 * u)
    for n in range(0, 12):
        assert chebyshev_u_at(n, u) == pytest.approx(chebyshev_u_recurrence(n, z), rel=1e-10)
    assert chebyshev_u_recurrence(0, z) == 1.0
    assert chebyshev_u_recurrence(1, z) == 2 * z


def test_tridiagonal_determinant_and_inverse():
    for N in (2, 3, 7, 20, 64):
        for u in (0.2, 0.8):
            st = TridiagState(N, u)
            A = st.matrix()
            assert np.linalg.det(A) == pytest.approx(st.detA, rel=1e-10)
            # det A = (-u)^{N-1} U_{N-1}
            assert st.detA == pytest.approx((-u) ** (N - 1) * chebyshev_u_at(N - 1, u), rel=1e-10)
            inv = st.inverse()
            assert np.allclose(A @ inv, np.eye(N - 1), atol=1e-10)
            assert st.inv_entry(1, N - 1) == pytest.approx(inv[0, -1], rel=1e-12)
            assert np.allclose(omega_matrix(N, u), inv * (1 - u ** (2 * N)) * (1 - u * u), atol=1e-14)
    assert TridiagState(1, 0.5).matrix().shape == (0, 0)
    with pytest.raises(ValueError):
        TridiagState(3, 1.0)


def test_lambda_and_eta():
    assert lambda_coeffs(1, 0.3) == pytest.approx([0.7])
    assert lambda_coeffs(3, 0.5) == pytest.approx([1 - 0.5 ** 5, 0.5 * (1 - 0.5 ** 3), 0.25 * 0.5])
    assert eta([0, 0, 1, 1, 0]).tolist() == [2, 0, -2, 0]


def test_i1_is_the_shifted_mehler_kernel():
    t, g = 0.8, 0.6
    u = math.exp(-t)
    for s in (0, 1):
        p = EvalPoint(0.3, -0.5, t)
        kernel = single_step_kernel(p, ModelParams(g, 0.0)).as_array()
        # spin eigenstates of sigma_x: (1, +1)/sqrt2 for s = 1 and (1, -1)/sqrt2 for s = 0
        v = np.array([1.0, 1.0 if s == 1 else -1.0]) / math.sqrt(2)
        assert i_n_scalar(p.x, p.y, u, [s], g) == pytest.approx(v @ kernel @ v, rel=1e-13)


@pytest.mark.parametrize("s", [(0, 0), (0, 1), (1, 0), (1, 1, 0), (0, 1, 0)])
def test_i_n_composes(s):
    # I_N(x, y) = integral of I_1(x, z_1) I_1(z_1, z_2) ... I_1(z_{N-1}, y)
    t1, g = 0.4, 0.7
    u = math.exp(-t1)
    x, y = 0.3, -0.2
    if len(s) == 2:
        val, _ = quad(lambda z: i_n_scalar(x, z, u, [s[0]], g) * i_n_scalar(z, y, u, [s[1]], g), -12, 12,
                      epsabs=1e-13, epsrel=1e-12)
    else:
        val, _ = quad(lambda z: i_n_scalar(x, z, u, s[:2], g) * i_n_scalar(z, y, u, [s[2]], g), -12, 12,
                      epsabs=1e-13, epsrel=1e-12)
    assert i_n_scalar(x, y, u, s, g) == pytest.approx(val, rel=1e-9)


def test_i_n_complement_symmetry():
    u, g = 0.7, 0.5
    for n in range(16):
        s = _bits(n, 4)
        comp = [1 - b for b in s]
        assert i_n_scalar(0.4, -0.9, u, comp, g) == pytest.approx(i_n_scalar(-0.4, 0.9, u, s, g), rel=1e-12)


def test_m_matrix():
    assert m_matrix(0, 0).tolist() == [[1, -1], [-1, 1]]
    assert m_matrix(0, 1).tolist() == [[-1, -1], [1, 1]]
    assert m_matrix(1, 1).tolist() == [[1, 1], [1, 1]]


@pytest.mark.parametrize("k", range(1, 11))
def test_word_matrix_matches_product(k):
    u, delta = 0.8, 0.7
    for n in range(2 ** k):
        s = _bits(n, k)
        assert g_n_matrix(u, s, delta).max_abs_diff(g_n_product(u, s, delta).as_array()) < 1e-14


def test_word_matrix_examples():
    u, delta = 0.6, 0.4
    tau = u ** (2 * delta)
    assert g_scalar(u, [0, 1], delta) == pytest.approx((1 - tau) / (4 * u ** delta))
    assert g_scalar(u, [1, 1], delta) == pytest.approx((1 + tau) / (4 * u ** delta))
    for s in ([0] * 5, [1] * 5):
        assert g_scalar(u, s, delta) == pytest.approx((1 + tau) ** 4 / (32 * u ** (4 * delta)))


def test_d1_is_the_single_step():
    params = ModelParams(0.8, 0.6)
    for p in (EvalPoint(0.2, 0.4, 0.5), EvalPoint(-1.0, 0.7, 1.5)):
        assert d_n_kernel(p, 1, params).max_abs_diff(single_step_kernel(p, params).as_array()) < 1e-14


@pytest.mark.parametrize("N", [2, 3, 5, 8])
def test_d_n_matches_fock_product(N):
    params = ModelParams(0.7, 0.5)
    xs = np.array([0.0, 0.6, -1.1])
    ys = np.array([0.2, -0.4, 0.9])
    M = trotter_matrix_product(params, 90, 1.0, N)
    ref = matrix_kernel_grid(M, 90, xs, ys, True)
    assert np.max(np.abs(d_n_kernel_grid(xs, ys, 1.0, N, params) - ref)) < 1e-10


def test_d_n_without_coupling():
    params = ModelParams(0.0, 0.9)
    p = EvalPoint(0.3, 0.1, 1.2)
    k0 = mehler_k0(p, 0.0)
    want = np.diag([k0 * math.exp(-1.08), k0 * math.exp(1.08)])
    for N in (1, 4, 9):
        assert d_n_kernel(p, N, params).max_abs_diff(want) < 1e-13


def test_d_n_cap():
    with pytest.raises(ValueError, match="operations"):
        d_n_kernel(EvalPoint(0, 0, 1), N_CAP + 1, ModelParams(1, 1))
    with pytest.raises(ValueError):
        d_n_kernel(EvalPoint(0, 0, 1), 0, ModelParams(1, 1))


def test_convergence_slope():
    ns = [4, 8, 16]
    assert convergence_slope(ns, [3.0 / n for n in ns]) == pytest.approx(1.0)
    assert convergence_slope(ns, [1.0 / n ** 2 for n in ns]) == pytest.approx(2.0)
