import math

import numpy as np
import pytest

from banach_ar1.estimation import (
    EigenGapError,
    TruncationRankError,
    TruncationRule,
    eigen_decompose,
    empirical_covariance,
    empirical_cross_covariance,
    fit_estimator,
    gap_coefficients,
    max_inverse_gap,
    plug_in_predict,
    prediction_error_besov,
    sign_align,
    truncation_order,
)
from banach_ar1.model import SpectralOperator, Trajectory, build_covariance, build_noise_covariance, build_rho, simulate_trajectory
from banach_ar1.wavelet import WaveletBasisSpec

from oracles import oracle_estimator

SPEC = WaveletBasisSpec(order=10, coarse_level=2, max_level=10)


def paper_model(modes):
    from banach_ar1.model import ModelParams

    p = ModelParams(gamma=1.21, beta_exponent=0.6, modes=modes, grid_len=2048)
    cov = build_covariance(p)
    rho = build_rho(p)
    noise = build_noise_covariance(p, cov, rho)
    return cov, rho, noise


class TestEmpiricalMoments:
    def test_constant_trajectory_gives_rank_one(self):
        x = np.array([1.0, -2.0, 0.5])
        traj = Trajectory(states=np.tile(x, (6, 1)))
        cov = empirical_covariance(traj)
        assert np.abs(cov.matrix - np.outer(x, x)).max() < 1e-14
        values = np.linalg.eigvalsh(cov.matrix)[::-1]
        assert values[0] == pytest.approx(float(x @ x), rel=1e-12)
        assert np.abs(values[1:]).max() < 1e-12

    def test_two_state_examples(self):
        e1 = np.array([1.0, 0.0, 0.0])
        e2 = np.array([0.0, 1.0, 0.0])
        traj = Trajectory(states=np.stack([e1, e2]))
        cov = empirical_covariance(traj)
        assert np.allclose(cov.matrix, np.diag([0.5, 0.5, 0.0]))
        cross = empirical_cross_covariance(traj)
        expected = np.zeros((3, 3))
        expected[1, 0] = 1.0
        assert np.array_equal(cross.matrix, expected)

    def test_matches_brute_force_double_loop(self):
        rng = np.random.default_rng(21)
        x = rng.standard_normal((7, 4))
        traj = Trajectory(states=x)
        cov = empirical_covariance(traj).matrix
        cross = empirical_cross_covariance(traj).matrix
        cov_ref = np.zeros((4, 4))
        cross_ref = np.zeros((4, 4))
        for i in range(7):
            cov_ref += np.outer(x[i], x[i]) / 7
        for i in range(6):
            cross_ref += np.outer(x[i + 1], x[i]) / 6
        assert np.abs(cov - cov_ref).max() < 1e-12
        assert np.abs(cross - cross_ref).max() < 1e-12

    def test_noiseless_cross_covariance_factors_through_rho(self):
        # over aligned windows the cross-covariance of a noiseless path is
        # exactly rho times the covariance of the inputs
        _, rho, _ = paper_model(4)
        zero = SpectralOperator(np.zeros((4, 4)), symmetric=True)
        rng = np.random.default_rng(2)
        traj = simulate_trajectory(12, rho, zero, rng.standard_normal(4), rng)
        n = len(traj)
        cross = empirical_cross_covariance(traj).matrix
        inputs_cov = empirical_covariance(traj.head(n - 1)).matrix
        assert np.abs(cross - rho.matrix @ inputs_cov).max() < 1e-10

    def test_too_short(self):
        with pytest.raises(ValueError):
            empirical_covariance(Trajectory(states=np.zeros((1, 3))))


class TestEigenDecompose:
    def test_permuted_diagonal(self):
        dec = eigen_decompose(SpectralOperator(np.diag([3.0, 1.0, 2.0]), symmetric=True))
        assert np.array_equal(dec.values, [3.0, 2.0, 1.0])
        expected_cols = [0, 2, 1]
        for rank, col in enumerate(expected_cols):
            assert abs(abs(dec.vectors[col, rank]) - 1.0) < 1e-14

    def test_textbook_two_by_two(self):
        dec = eigen_decompose(SpectralOperator(np.array([[2.0, 1.0], [1.0, 2.0]]), symmetric=True))
        assert np.allclose(dec.values, [3.0, 1.0])
        inv_sqrt2 = 1 / math.sqrt(2)
        assert np.abs(np.abs(dec.vectors[:, 0]) - inv_sqrt2).max() < 1e-14
        assert np.abs(np.abs(dec.vectors[:, 1]) - inv_sqrt2).max() < 1e-14

    def test_reconstruction_and_order(self):
        rng = np.random.default_rng(17)
        m = rng.standard_normal((6, 6))
        m = m + m.T
        dec = eigen_decompose(SpectralOperator(m, symmetric=True))
        recon = dec.vectors @ np.diag(dec.values) @ dec.vectors.T
        assert np.abs(recon - m).max() < 1e-10
        assert (np.diff(dec.values) <= 1e-12).all()

    def test_flags_near_degenerate_gaps(self):
        dec = eigen_decompose(SpectralOperator(np.diag([1.0, 0.5, 0.5 - 1e-12]), symmetric=True))
        assert dec.near_degenerate == [2]

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            eigen_decompose(SpectralOperator(np.array([[0.0, 1.0], [0.0, 0.0]])))


class TestSignAlign:
    def test_keeps_matching_orientation(self):
        v = np.array([1.0, 2.0])
        assert np.array_equal(sign_align(v, v), v)

    def test_flips_opposed_reference(self):
        v = np.array([1.0, 2.0])
        assert np.array_equal(sign_align(-v, v), -v)

    def test_tie_resolves_positive(self):
        e1 = np.array([1.0, 0.0])
        e2 = np.array([0.0, 1.0])
        assert np.array_equal(sign_align(e1, e2), e2)

    def test_idempotent(self):
        rng = np.random.default_rng(33)
        for _ in range(50):
            v, r = rng.standard_normal(5), rng.standard_normal(5)
            once = sign_align(v, r)
            assert np.array_equal(sign_align(v, once), once)


class TestTruncationOrder:
    def test_log_ceiling_values(self):
        rule = TruncationRule.log_ceil()
        assert truncation_order(2500, rule) == 8
        assert truncation_order(3, rule) == 2

    def test_fixed_rule(self):
        assert truncation_order(10, TruncationRule.fixed(5)) == 5
        assert truncation_order(10**6, TruncationRule.fixed(5)) == 5

    def test_clamped_to_p_max(self):
        assert truncation_order(2500, TruncationRule.log_ceil(), p_max=4) == 4
        assert truncation_order(2500, TruncationRule.fixed(100), p_max=7) == 7


class TestGapQuantities:
    def test_first_coefficient(self):
        a = gap_coefficients(np.array([1.0, 0.5, 0.25]), 1)
        assert a[0] == pytest.approx(4 * math.sqrt(2), rel=1e-14)

    def test_second_takes_worse_gap(self):
        a = gap_coefficients(np.array([1.0, 0.5, 0.25]), 2)
        assert a[1] == pytest.approx(8 * math.sqrt(2), rel=1e-14)

    def test_zero_gap_errors(self):
        with pytest.raises(EigenGapError):
            gap_coefficients(np.array([1.0, 1.0, 0.5]), 2)

    def test_max_inverse_gap_values(self):
        values = np.array([1.0, 0.5, 0.25])
        assert max_inverse_gap(values, 2) == pytest.approx(4.0)
        assert max_inverse_gap(values, 1) == pytest.approx(2.0)

    def test_max_inverse_gap_nondecreasing_in_k(self):
        values = 1.0 / np.arange(1.0, 12.0) ** 2
        sups = [max_inverse_gap(values, k) for k in range(1, 10)]
        assert all(a <= b for a, b in zip(sups, sups[1:]))


class TestFitEstimator:
    def test_noiseless_exact_recovery(self):
        _, rho, _ = paper_model(5)
        zero = SpectralOperator(np.zeros((5, 5)), symmetric=True)
        rng = np.random.default_rng(99)
        traj = simulate_trajectory(100, rho, zero, rng.standard_normal(5), rng)
        state = fit_estimator(traj.head(100), TruncationRule.fixed(5))
        assert np.abs(state.rho_hat - rho.matrix).max() < 1e-8

    def test_zero_trajectory_is_degenerate(self):
        traj = Trajectory(states=np.zeros((10, 4)))
        with pytest.raises(TruncationRankError):
            fit_estimator(traj, TruncationRule.fixed(2))

    def test_matches_dense_composition(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((6, 3))
        state = fit_estimator(Trajectory(states=x), TruncationRule.fixed(2))
        inputs, outputs = x[:-1], x[1:]
        cov = inputs.T @ inputs / 5
        cross = outputs.T @ inputs / 5
        lam, u = np.linalg.eigh(cov)
        lam, u = lam[::-1], u[:, ::-1]
        u_k = u[:, :2]
        dense = u_k @ u_k.T @ cross @ u_k @ np.diag(1 / lam[:2]) @ u_k.T
        assert np.abs(state.rho_hat - dense).max() < 1e-10

    def test_matches_literal_sum_oracle_on_random_instances(self):
        rng = np.random.default_rng(1234)
        for _ in range(100):
            p = int(rng.integers(2, 7))
            n = int(rng.integers(p + 2, 51))
            k = int(rng.integers(1, p + 1))
            x = rng.standard_normal((n, p))
            state = fit_estimator(Trajectory(states=x), TruncationRule.fixed(k))
            assert state.k_n == k
            assert np.abs(state.rho_hat - oracle_estimator(x, k)).max() < 1e-10

    def test_rank_bounded_by_truncation(self):
        rng = np.random.default_rng(77)
        x = rng.standard_normal((40, 8))
        for k in (1, 3, 5):
            state = fit_estimator(Trajectory(states=x), TruncationRule.fixed(k))
            rank = int((np.linalg.svd(state.rho_hat, compute_uv=False) > 1e-10).sum())
            assert rank <= k

    def test_full_truncation_reduces_to_plain_inverse(self):
        rng = np.random.default_rng(15)
        x = rng.standard_normal((30, 4))
        state = fit_estimator(Trajectory(states=x), TruncationRule.fixed(4))
        inputs, outputs = x[:-1], x[1:]
        cov = inputs.T @ inputs / 29
        cross = outputs.T @ inputs / 29
        assert np.abs(state.rho_hat - cross @ np.linalg.inv(cov)).max() < 1e-9

    def test_snapshot_regime_fewer_samples_than_modes(self):
        rng = np.random.default_rng(50)
        x = rng.standard_normal((5, 9))
        state = fit_estimator(Trajectory(states=x), TruncationRule.fixed(3))
        gram = state.eigenvectors.T @ state.eigenvectors
        assert np.abs(gram - np.eye(9)).max() < 1e-10
        assert (state.eigenvalues[4:] == 0).all()
        assert np.abs(state.rho_hat - oracle_estimator(x, 3)).max() < 1e-10

    def test_log_rule_stores_matching_order(self):
        rng = np.random.default_rng(42)
        x = rng.standard_normal((200, 10))
        state = fit_estimator(Trajectory(states=x), TruncationRule.log_ceil())
        assert state.k_n == math.ceil(math.log(200))


class TestPrediction:
    def test_zero_estimator_predicts_zero(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((12, 3))
        state = fit_estimator(Trajectory(states=x), TruncationRule.fixed(2))
        state.rho_hat = np.zeros((3, 3))
        assert np.array_equal(plug_in_predict(state, np.ones(3)), np.zeros(3))

    def test_projection_identity_on_span(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((12, 3))
        state = fit_estimator(Trajectory(states=x), TruncationRule.fixed(2))
        u_k = state.eigenvectors[:, :2]
        state.rho_hat = u_k @ u_k.T
        v = u_k @ np.array([0.3, -1.2])
        assert np.abs(plug_in_predict(state, v) - v).max() < 1e-12

    def test_matches_matrix_vector_product(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((9, 4))
        state = fit_estimator(Trajectory(states=x), TruncationRule.fixed(3))
        v = rng.standard_normal(4)
        assert np.allclose(plug_in_predict(state, v), state.rho_hat @ v)

    def test_dimension_mismatch(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((9, 4))
        state = fit_estimator(Trajectory(states=x), TruncationRule.fixed(2))
        with pytest.raises(ValueError, match="dimension"):
            plug_in_predict(state, np.ones(5))


class TestPredictionError:
    def test_identical_inputs_give_zero(self):
        v = np.array([0.4, -0.1, 0.2, 0.0, 0.05])
        assert prediction_error_besov(v, v, 2048, SPEC) == 0.0

    def test_zero_prediction_reduces_to_truth_norm(self):
        from banach_ar1.model import evaluate_on_grid
        from banach_ar1.wavelet import besov_sup_norm, dwt_forward

        v = np.array([0.4, -0.1, 0.2])
        expected = besov_sup_norm(dwt_forward(evaluate_on_grid(v, 2048), SPEC))
        assert prediction_error_besov(v, np.zeros(3), 2048, SPEC) == pytest.approx(expected, rel=1e-14)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(31)
        for _ in range(25):
            a, b, c = rng.standard_normal((3, 6))
            ac = prediction_error_besov(a, c, 512, WaveletBasisSpec(order=4, coarse_level=2, max_level=8))
            ab = prediction_error_besov(a, b, 512, WaveletBasisSpec(order=4, coarse_level=2, max_level=8))
            bc = prediction_error_besov(b, c, 512, WaveletBasisSpec(order=4, coarse_level=2, max_level=8))
            assert ac <= ab + bc + 1e-12
