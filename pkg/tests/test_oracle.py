import math

import numpy as np
import pytest

from rabikernel.core import EvalPoint, ModelParams, mehler_k0, single_step_kernel
from rabikernel.oracle import (FULL, PARITY_MINUS, PARITY_PLUS, CutoffWarning, build_model, certified_kernel_grid,
                               certified_partition, conjugate_kernel, fock_hamiltonian, hermite_phi, hermite_table,
                               matrix_kernel_grid, oracle_heat_kernel, oracle_kernel_grid, oracle_partition,
                               parity_blocks, propagator, trotter_matrix_product)
from rabikernel.trotter import convergence_slope


def test_hermite_low_orders():
    x = np.array([-1.3, 0.0, 0.4, 2.2])
    c = math.pi ** -0.25 * np.exp(-x * x / 2)
    assert hermite_phi(0, x) == pytest.approx(c)
    assert hermite_phi(1, x) == pytest.approx(math.sqrt(2) * x * c)
    assert hermite_phi(2, x) == pytest.approx((2 * x * x - 1) / math.sqrt(2) * c)
    with pytest.raises(ValueError):
        hermite_table(-1, 0.0)


def test_hermite_orthonormal_and_finite():
    z, w = np.polynomial.hermite.hermgauss(120)
    tab = hermite_table(60, z) * np.exp(z * z / 2)
    gram = (tab * w) @ tab.T
    assert np.max(np.abs(gram - np.eye(61))) < 1e-11
    big = hermite_table(200, np.linspace(-10, 10, 201))
    assert np.all(np.isfinite(big)) and np.max(np.abs(big)) < 1.0


def test_spectrum_special_cases():
    m = build_model(ModelParams(0.7, 0.0), 60)
    low = np.sort(m.eigenvalues)[:10]
    assert low == pytest.approx(np.repeat(np.arange(5), 2) - 0.49, abs=1e-9)
    m = build_model(ModelParams(0.0, 0.3), 20)
    assert np.sort(m.eigenvalues) == pytest.approx(np.sort(np.concatenate([np.arange(21) + 0.3, np.arange(21) - 0.3])))


def test_low_spectrum_converges_with_cutoff():
    params = ModelParams(1.0, 0.8)
    a = np.sort(build_model(params, 40).eigenvalues)[:10]
    b = np.sort(build_model(params, 80).eigenvalues)[:10]
    assert np.max(np.abs(a - b)) < 1e-8


def test_parity_spectra_split_the_full_one():
    params = ModelParams(0.6, 0.9)
    full = np.sort(build_model(params, 60).eigenvalues)[:20]
    plus = build_model(params, 60, PARITY_PLUS).eigenvalues
    minus = build_model(params, 60, PARITY_MINUS).eigenvalues
    assert np.sort(np.concatenate([plus, minus]))[:20] == pytest.approx(full, abs=1e-9)


def test_model_validation_and_immutability():
    with pytest.raises(ValueError):
        build_model(ModelParams(1, 1), 7)
    m = build_model(ModelParams(1, 1), 10)
    assert m.n_modes == 11 and m.is_full
    with pytest.raises(ValueError):
        m.eigenvalues[0] = 0.0


def test_mehler_case():
    params = ModelParams(0.0, 0.0)
    model = build_model(params, 80)
    xs, ys = np.array([0.0, 0.5, -1.0]), np.array([0.3, -0.8, -1.2])
    vals = oracle_kernel_grid(model, xs, ys, 1.0)
    for x, y, v in zip(xs, ys, vals):
        k0 = mehler_k0(EvalPoint(x, y, 1.0), 0.0)
        assert v == pytest.approx(np.eye(2) * k0, abs=1e-12)


def test_long_time_ground_state_dominance():
    model = build_model(ModelParams(0.8, 0.5), 80)
    k = np.argmin(model.eigenvalues)
    v = model.eigenvectors[:, k].reshape(-1, 2)
    x, y = 0.3, -0.4
    psi_x = hermite_table(model.n_cut, x) @ v
    psi_y = hermite_table(model.n_cut, y) @ v
    want = math.exp(-10 * model.eigenvalues[k]) * np.outer(psi_x, psi_y)
    got = oracle_heat_kernel(model, EvalPoint(x, y, 10.0)).as_array()
    gap = np.sort(model.eigenvalues)[1] - model.eigenvalues[k]
    assert np.max(np.abs(got - want)) <= np.max(np.abs(want)) * 2 * math.exp(-10 * gap) + 1e-15


def test_kernel_transpose_symmetry():
    model = build_model(ModelParams(0.9, 0.4), 60)
    a = oracle_heat_kernel(model, EvalPoint(0.4, -0.7, 0.6)).as_array()
    b = oracle_heat_kernel(model, EvalPoint(-0.7, 0.4, 0.6)).as_array()
    assert np.max(np.abs(a - b.T)) < 1e-14


def test_partition_closed_forms():
    b = 0.8
    z = oracle_partition(build_model(ModelParams(0.0, 0.6), 120), b)
    assert z == pytest.approx(2 * math.cosh(b * 0.6) / (1 - math.exp(-b)), rel=1e-12)
    z = oracle_partition(build_model(ModelParams(0.5, 0.0), 120), b)
    assert z == pytest.approx(2 * math.exp(0.25 * b) / (1 - math.exp(-b)), rel=1e-12)
    zp = oracle_partition(build_model(ModelParams(0.0, 0.6), 121, PARITY_PLUS), b)
    assert zp == pytest.approx((math.exp(-0.6 * b) + math.exp(-b * 0.4)) / (1 - math.exp(-2 * b)), rel=1e-12)
    with pytest.raises(ValueError):
        oracle_partition(build_model(ModelParams(0, 0), 10), 0.0)


def test_full_partition_is_sum_of_parity_blocks():
    params = ModelParams(0.7, 0.9)
    full = certified_partition(params, 1.3)
    plus = certified_partition(params, 1.3, PARITY_PLUS)
    minus = certified_partition(params, 1.3, PARITY_MINUS)
    assert full.certified and plus.certified and minus.certified
    assert float(full.value) == pytest.approx(float(plus.value) + float(minus.value), rel=1e-11)


def test_trotter_single_step():
    params = ModelParams(0.6, 0.7)
    M = trotter_matrix_product(params, 100, 0.9, 1)
    xs, ys = np.array([0.1, -0.6]), np.array([0.4, 0.8])
    got = matrix_kernel_grid(M, 100, xs, ys, True)
    for x, y, v in zip(xs, ys, got):
        assert single_step_kernel(EvalPoint(x, y, 0.9), params).max_abs_diff(v) < 1e-8


def test_trotter_exact_without_tunnelling():
    params = ModelParams(0.8, 0.0)
    model = build_model(params, 50)
    for N in (1, 3):
        assert np.max(np.abs(trotter_matrix_product(params, 50, 1.1, N) - propagator(model, 1.1))) < 1e-11


def test_trotter_first_order_in_operator_norm():
    params = ModelParams(0.5, 0.5)
    model = build_model(params, 40)
    ref = propagator(model, 1.0)
    ns = [4, 8, 16, 32]
    devs = [np.linalg.norm(trotter_matrix_product(params, 40, 1.0, n) - ref, 2) for n in ns]
    assert 0.9 <= convergence_slope(ns, devs) <= 1.1
    with pytest.raises(ValueError):
        trotter_matrix_product(params, 40, 1.0, 0)


def test_parity_blocks_decouple():
    params = ModelParams(0.9, 0.7)
    n = 30
    pp, pm, mp, mm = parity_blocks(fock_hamiltonian(params, n, FULL), n)
    assert np.max(np.abs(pm)) == 0.0 and np.max(np.abs(mp)) == 0.0
    assert np.array_equal(pp, fock_hamiltonian(params, n, PARITY_PLUS))
    assert np.array_equal(mm, fock_hamiltonian(params, n, PARITY_MINUS))


def test_position_conjugation_gives_parity_kernels():
    params = ModelParams(0.6, 0.8)
    full = build_model(params, 80)
    plus = build_model(params, 80, PARITY_PLUS)
    minus = build_model(params, 80, PARITY_MINUS)
    kern = lambda x, y: oracle_kernel_grid(full, [x], [y], 0.7)[0]
    c = conjugate_kernel(kern, 0.3, -0.5)
    assert c[0, 0] == pytest.approx(oracle_kernel_grid(plus, [0.3], [-0.5], 0.7)[0], abs=1e-12)
    assert c[1, 1] == pytest.approx(oracle_kernel_grid(minus, [0.3], [-0.5], 0.7)[0], abs=1e-12)
    assert abs(c[0, 1]) < 1e-12 and abs(c[1, 0]) < 1e-12


def test_completeness_and_semigroup():
    n = 40
    z, w = np.polynomial.hermite.hermgauss(80)
    ident = matrix_kernel_grid(np.eye(n + 1), n, np.repeat(0.4, z.size), z, False)
    assert np.sum(w * np.exp(z * z) * ident * hermite_phi(3, z)) == pytest.approx(float(hermite_phi(3, 0.4)), rel=1e-10)
    model = build_model(ModelParams(0.5, 0.5), n)
    assert np.allclose(propagator(model, 0.3) @ propagator(model, 0.5), propagator(model, 0.8), atol=1e-13)


def test_certification():
    params = ModelParams(0.5, 0.5)
    res = certified_kernel_grid(params, [0.1], [0.2], 1.0)
    assert res.certified and res.change < 1e-8
    with pytest.warns(CutoffWarning):
        res = certified_kernel_grid(params, [0.1], [0.2], 1.0, n_start=20, n_max=30)
    assert not res.certified and res.n_cut == 20
