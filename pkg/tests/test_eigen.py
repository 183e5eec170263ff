import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

import kle
from oracles import brownian_sturm_liouville, exponential_eigenvalues


def test_diag_matrix():
    lam, V = kle.solve_symmetric_eigen(np.diag([2.0, 1.0]))
    np.testing.assert_array_equal(lam, [2.0, 1.0])
    np.testing.assert_allclose(np.abs(V), np.eye(2))


def test_swap_matrix():
    lam, V = kle.solve_symmetric_eigen([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(lam, [1.0, -1.0], atol=1e-15)
    np.testing.assert_allclose(np.abs(V[:, 0]), [2**-0.5, 2**-0.5], atol=1e-15)
    np.testing.assert_allclose(abs(V[:, 1] @ [1, -1]) / np.sqrt(2), 1.0, atol=1e-15)


def test_random_reconstruction():
    rng = np.random.default_rng(8)
    A = rng.standard_normal((8, 8))
    A = A + A.T
    lam, V = kle.solve_symmetric_eigen(A)
    assert np.linalg.norm(A - V @ np.diag(lam) @ V.T) <= 1e-10 * np.linalg.norm(A)
    np.testing.assert_allclose(V.T @ V, np.eye(8), atol=1e-10)
    assert np.all(np.diff(lam) <= 0)


def test_non_symmetric_rejected():
    with pytest.raises(kle.InvalidArgumentError):
        kle.solve_symmetric_eigen([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(kle.NumericError):
        kle.solve_symmetric_eigen([[np.nan, 0.0], [0.0, 1.0]])


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(-10, 10)))
def test_reconstruction_property(M):
    A = M + M.T
    lam, V = kle.solve_symmetric_eigen(A)
    scale = max(np.linalg.norm(A), 1e-300)
    assert np.linalg.norm(A - (V * lam) @ V.T) <= 1e-8 * scale + 1e-300
    np.testing.assert_allclose(V.T @ V, np.eye(6), atol=1e-10)
    # sign convention: largest-magnitude component positive
    idx = np.argmax(np.abs(V), axis=0)
    assert np.all(V[idx, np.arange(6)] > 0)


def test_constant_kernel_rank_one():
    rule = kle.make_trapezoid((0, 1), 51)
    dec = kle.nystrom_eigen(kle.Constant(1.0), rule, 3)
    np.testing.assert_allclose(dec.lambdas, [1.0, 0.0, 0.0], atol=1e-13)
    np.testing.assert_allclose(dec.eigvecs[:, 0], 1.0, atol=1e-12)


def test_brownian_eigenvalues(brownian_dec_2000):
    exact = np.array([kle.BrownianMin.exact_eigenvalue(k) for k in range(1, 6)])
    np.testing.assert_allclose(exact, [0.405285, 0.045032, 0.016211, 0.008271, 0.005004], atol=5e-7)
    np.testing.assert_allclose(brownian_dec_2000.lambdas[:5], exact, rtol=1e-3)


def test_brownian_closed_form_agrees_with_bvp():
    exact = np.array([kle.BrownianMin.exact_eigenvalue(k) for k in range(1, 6)])
    np.testing.assert_allclose(brownian_sturm_liouville(5), exact, rtol=1e-5)


def test_exponential_matches_golden(exp_dec_2000, golden_exp_ell1):
    np.testing.assert_allclose(exp_dec_2000.lambdas[:20], golden_exp_ell1, rtol=1e-12)


def test_golden_matches_analytic(golden_exp_ell1):
    np.testing.assert_allclose(golden_exp_ell1, exponential_eigenvalues(1.0, 20), rtol=1e-4)


def test_w_orthonormal_and_residual(exp_dec_500, unit_trap_500):
    dec, rule = exp_dec_500, unit_trap_500
    V, w, lam = dec.eigvecs, rule.weights, dec.lambdas
    np.testing.assert_allclose(V.T @ (w[:, None] * V), np.eye(dec.m), atol=1e-10)
    C = kle.kernel_matrix(dec.spec, rule).entries
    resid = np.linalg.norm(C @ (w[:, None] * V) - V * lam, axis=0)
    assert np.max(resid) <= 1e-8 * max(lam[0], 1.0)
    assert np.all(np.diff(lam) <= 0) and lam[-1] >= 0


@pytest.mark.parametrize("n", [50, 500])
@pytest.mark.parametrize(
    "spec", [kle.Exponential(1.0, 1.0), kle.Exponential(0.5, 1 / 16), kle.Constant(2.0), kle.BrownianMin()]
)
def test_discrete_trace_identity(spec, n):
    rule = kle.make_trapezoid((0, 1), n)
    dec = kle.nystrom_eigen(spec, rule)
    diag_sum = float(np.sum(rule.weights * spec.diagonal(rule.nodes)))
    assert abs(np.sum(dec.lambdas) - diag_sum) <= 1e-10 * diag_sum


def test_inadmissible_kernel_errors():
    with pytest.raises(kle.InadmissibleKernelError):
        kle.nystrom_eigen(kle.Custom(lambda x, y: -1.0), kle.make_trapezoid((0, 1), 10))
    # indefinite: cos(pi(x+y)) has eigenvalues of both signs
    with pytest.raises(kle.InadmissibleKernelError):
        kle.nystrom_eigen(kle.Custom(lambda x, y: np.cos(np.pi * (x + y))), kle.make_trapezoid((0, 1), 30))


def test_m_bounds():
    rule = kle.make_trapezoid((0, 1), 5)
    with pytest.raises(kle.InvalidArgumentError):
        kle.nystrom_eigen(kle.Exponential(), rule, 6)


def test_extension_at_nodes(exp_dec_500, unit_trap_500):
    for k in (0, 17, 250, 499):
        for i in (0, 4, 30):
            x = unit_trap_500.nodes[k]
            assert kle.nystrom_extend(exp_dec_500, i, x) == pytest.approx(exp_dec_500.eigvecs[k, i], rel=1e-10)


def test_extension_formula_reproduces_nodes_when_forced_off_grid(exp_dec_500, unit_trap_500):
    # evaluate the extension sum itself at a node (no snapping) for a well-resolved mode
    dec, rule = exp_dec_500, unit_trap_500
    i, k = 3, 123
    direct = np.sum(rule.weights * dec.spec(rule.nodes[k], rule.nodes) * dec.eigvecs[:, i]) / dec.lambdas[i]
    assert direct == pytest.approx(dec.eigvecs[k, i], rel=1e-10)


def test_extension_constant_kernel():
    dec = kle.nystrom_eigen(kle.Constant(1.0), kle.make_trapezoid((0, 1), 51), 2)
    xs = np.linspace(0, 1, 37)
    np.testing.assert_allclose(kle.nystrom_extend(dec, 0, xs), 1.0, atol=1e-12)
    with pytest.raises(kle.DegenerateModeError):
        kle.nystrom_extend(dec, 1, 0.123)


def test_extension_brownian_mode(brownian_dec_2000):
    assert kle.nystrom_extend(brownian_dec_2000, 0, 0.5) == pytest.approx(np.sqrt(2) * np.sin(np.pi / 4), abs=1e-3)
    xs = np.linspace(0.0005, 0.9995, 23)
    got = kle.nystrom_extend(brownian_dec_2000, 1, xs)
    exact = kle.BrownianMin.exact_eigenfunction(2, xs)
    np.testing.assert_allclose(got * np.sign(got @ exact), exact, atol=2e-3)


def test_extension_out_of_domain(exp_dec_500):
    with pytest.raises(kle.InvalidArgumentError):
        kle.nystrom_extend(exp_dec_500, 0, 1.2)
    with pytest.raises(kle.InvalidArgumentError):
        kle.nystrom_extend(exp_dec_500, 600, 0.5)


def test_deterministic_signs():
    rule = kle.make_gauss_legendre((0, 1), 60)
    a = kle.nystrom_eigen(kle.Exponential(1, 0.3), rule, 10)
    b = kle.nystrom_eigen(kle.Exponential(1, 0.3), rule, 10)
    np.testing.assert_array_equal(a.eigvecs, b.eigvecs)
    idx = np.argmax(np.abs(a.eigvecs), axis=0)
    assert np.all(a.eigvecs[idx, np.arange(10)] > 0)


def test_gauss_rule_spectrum_close_to_analytic():
    dec = kle.nystrom_eigen(kle.Exponential(1, 1), kle.make_gauss_legendre((0, 1), 400), 5)
    # the kink on the diagonal limits Gauss-Legendre to low order as well
    np.testing.assert_allclose(dec.lambdas, exponential_eigenvalues(1.0, 5), rtol=1e-3)


def test_refinement_error_decreases(golden_exp_ell1):
    errs = []
    for n in (50, 100, 200, 400, 800):
        lam = kle.nystrom_eigen(kle.Exponential(1, 1), kle.make_trapezoid((0, 1), n), 10).lambdas
        errs.append(np.abs(lam - golden_exp_ell1[:10]) / golden_exp_ell1[:10])
    errs = np.array(errs)
    assert np.all(errs[1:] <= errs[:-1])


def test_higher_modes_need_finer_grid(golden_exp_ell1):
    lam = kle.nystrom_eigen(kle.Exponential(1, 1), kle.make_trapezoid((0, 1), 100), 10).lambdas
    err = np.abs(lam - golden_exp_ell1[:10]) / golden_exp_ell1[:10]
    assert err[9] > err[4]


def test_csv_export(tmp_path):
    rule = kle.make_trapezoid((0, 1), 4)
    dec = kle.nystrom_eigen(kle.Exponential(), rule, 2)
    dec.to_csv(tmp_path / "dec.csv")
    lines = (tmp_path / "dec.csv").read_text().splitlines()
    assert lines[0] == "index,lambda,v_at_node_1,v_at_node_2,v_at_node_3,v_at_node_4"
    row = lines[1].split(",")
    assert row[0] == "1" and float(row[1]) == dec.lambdas[0]
    assert [float(v) for v in row[2:]] == dec.eigvecs[:, 0].tolist()
