import math
import warnings

import numpy as np
import pytest

from rabikernel.core import EvalPoint, ModelParams, SimplexPoint, mehler_k0, single_step_kernel
from rabikernel.oracle import PARITY_MINUS, PARITY_PLUS, build_model, fock_hamiltonian, oracle_kernel_grid
from rabikernel.series import (TruncationPolicy, fit_gaussian_envelope, gaussian_envelope, heat_kernel,
                               heat_kernel_grid, parity_kernel, parity_kernel_grid, phi_lambda_pm,
                               poisson_tail, scalar_exponent, scalar_exponent_split, swap_parity_for_negative_delta,
                               theta_bound_rate, theta_coefficients, theta_lambda)


def _random_simplex(rng, lam):
    return SimplexPoint(tuple(np.sort(rng.uniform(0, 1, lam))))


def test_theta_at_lambda_zero():
    p = EvalPoint(0.4, -1.1, 0.9)
    th = theta_lambda(p, SimplexPoint(()), 0.7)
    assert th == pytest.approx(math.sqrt(2) * 0.7 * math.tanh(0.45) * (0.4 - 1.1), rel=1e-14)


def test_theta_lambda_continuous_in_lambda():
    # a zero-length excursion at the end reproduces the shorter word
    p = EvalPoint(0.3, 0.8, 1.2)
    for lam in range(0, 4):
        mu = _random_simplex(np.random.default_rng(lam), lam)
        longer = SimplexPoint(mu.mu + (1.0, 1.0))
        assert theta_lambda(p, longer, 0.6) == pytest.approx(theta_lambda(p, mu, 0.6), rel=1e-12, abs=1e-12)


def test_theta_bound():
    rng = np.random.default_rng(0)
    for lam in range(1, 9):
        mu = np.sort(rng.uniform(0, 1, (200, lam)), axis=1)
        for t in (0.2, 1.0, 4.0):
            P, Q = theta_coefficients(mu, t, 0.9)
            rate = theta_bound_rate(t, 0.9)
            assert np.all(np.abs(P) <= rate * (1 + 1e-12)) and np.all(np.abs(Q) <= rate * (1 + 1e-12))


def test_split_exponent_matches():
    rng = np.random.default_rng(1)
    for lam in range(1, 8):
        for t in (0.3, 1.5):
            mu = _random_simplex(rng, lam)
            assert scalar_exponent_split(mu, t, 0.8) == pytest.approx(scalar_exponent(mu, t, 0.8), rel=1e-10, abs=1e-12)


def test_poisson_tail():
    for L in range(0, 12):
        for z in (0.1, 1.0, 3.5):
            direct = math.fsum(z ** k / math.factorial(k) for k in range(L + 1, 80))
            assert poisson_tail(L, z) == pytest.approx(direct, rel=1e-12)
    assert poisson_tail(3, 0.0) == 0.0


def test_zero_delta_is_single_step():
    params = ModelParams(0.9, 0.0)
    xs = np.array([0.0, 0.5, -1.2, 2.0])
    ys = np.array([0.3, -0.4, 0.7, 1.5])
    for t in (0.4, 2.0):
        res = heat_kernel_grid(xs, ys, t, params)
        for x, y, r in zip(xs, ys, res):
            assert r.lambda_used == 0 and r.tail_bound == 0.0
            ref = single_step_kernel(EvalPoint(x, y, t), params)
            assert r.value.max_abs_diff(ref.as_array()) < 1e-15


def test_zero_coupling_is_diagonal():
    p = EvalPoint(0.2, -0.6, 1.0)
    res = heat_kernel(p, ModelParams(0.0, 0.7))
    k0 = mehler_k0(p, 0.0)
    assert res.value.as_array() == pytest.approx(np.diag([k0 * math.exp(-0.7), k0 * math.exp(0.7)]), rel=1e-9, abs=1e-14)


def test_series_matches_oracle_at_a_point():
    params = ModelParams(0.6, 0.8)
    model = build_model(params, 80)
    xs, ys = np.array([0.1, -0.7]), np.array([0.5, 1.0])
    res = heat_kernel_grid(xs, ys, 1.0, params, TruncationPolicy(tol=1e-11))
    ref = oracle_kernel_grid(model, xs, ys, 1.0)
    for r, m in zip(res, ref):
        assert r.value.max_abs_diff(m) < 1e-8
        assert r.tail_bound < 1e-11


def test_transpose_symmetry():
    params = ModelParams(0.7, 0.5)
    a = heat_kernel(EvalPoint(0.3, -0.9, 0.8), params).value
    b = heat_kernel(EvalPoint(-0.9, 0.3, 0.8), params).value
    assert a.max_abs_diff(b.transpose().as_array()) < 1e-12


def test_parity_kernels_match_oracle():
    params = ModelParams(0.5, 0.6)
    xs, ys = np.array([0.2, -0.5]), np.array([0.4, 0.9])
    for parity, which in ((1, PARITY_PLUS), (-1, PARITY_MINUS)):
        model = build_model(params, 80, which)
        ref = oracle_kernel_grid(model, xs, ys, 0.9)
        res = parity_kernel_grid(xs, ys, 0.9, parity, params)
        assert np.allclose([r.value for r in res], ref, rtol=0, atol=1e-8)


def test_phi_reflection():
    # Phi^-_0(x, y) Phi^+_0(x, y) does not depend on the sign of theta
    p = EvalPoint(0.4, 0.3, 1.0)
    q = EvalPoint(-0.4, -0.3, 1.0)
    for lam in (0, 1, 2, 3):
        assert phi_lambda_pm(p, lam, 0.5, 1) == pytest.approx(phi_lambda_pm(q, lam, 0.5, -1), rel=1e-12)
    with pytest.raises(ValueError):
        phi_lambda_pm(p, 1, 0.5, 0)


def test_negative_delta_swap():
    assert swap_parity_for_negative_delta(1, 0.5, -0.3) == (-1, ModelParams(0.5, 0.3))
    assert swap_parity_for_negative_delta(-1, 0.5, 0.3) == (-1, ModelParams(0.5, 0.3))
    params = ModelParams(0.5, 0.4)
    h_neg = fock_hamiltonian(params, 40, PARITY_PLUS, delta_sign=-1.0)
    assert np.array_equal(h_neg, fock_hamiltonian(params, 40, PARITY_MINUS))


def test_capped_series_warns():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        res = heat_kernel(EvalPoint(0.0, 0.0, 2.0), ModelParams(0.5, 2.0), TruncationPolicy(1e-12, 2))
    assert res.capped and res.lambda_used == 2 and res.tail_bound > 1e-12
    assert any("lambda_cap" in str(w.message) for w in rec)
    with pytest.warns(UserWarning):
        parity_kernel(EvalPoint(0.0, 0.0, 2.0), 1, ModelParams(0.5, 2.0), TruncationPolicy(1e-12, 1))


def test_policy_validation():
    with pytest.raises(ValueError):
        TruncationPolicy(tol=0.0)
    with pytest.raises(ValueError):
        TruncationPolicy(lambda_cap=-1)
    with pytest.raises(ValueError):
        heat_kernel_grid([0.0], [0.0], 0.0, ModelParams(1.0, 1.0))


def test_gaussian_envelopes_dominate():
    params = ModelParams(0.6, 0.5)
    g = np.linspace(-4, 4, 9)
    X, Y = np.meshgrid(g, g)
    xs, ys = X.ravel(), Y.ravel()
    vals = np.array([r.value.as_array() for r in heat_kernel_grid(xs, ys, 1.0, params)])
    mags = np.abs(vals).reshape(len(xs), -1).max(axis=1)
    a, b = gaussian_envelope(params, 1.0)
    assert np.all(mags <= a * np.exp(-b * (xs ** 2 + ys ** 2)))
    a2, b2 = fit_gaussian_envelope(xs, ys, vals)
    assert b2 > 0 and np.all(mags <= a2 * np.exp(-b2 * (xs ** 2 + ys ** 2)))
