import numpy as np
import pytest

from drci import (
    BasisSpec,
    DegenerateStatisticError,
    Sample,
    compute_B,
    compute_I,
    compute_sigma,
    fit_conditional,
    fit_unconditional,
    influence_matrix,
    rank_transform,
    run_test,
    statistic_forms,
)
from drci.statistic import normal_cdf, normal_quantile
from conftest import random_sample

CONST_ONLY = BasisSpec(u_terms=[(0, 0, 0)], v_terms=[(0, 0, 0)])


def fits(sample, spec, method="separable"):
    r_fit = fit_unconditional(sample, spec, method=method)
    return r_fit, fit_conditional(sample, spec, r_fit, method=method)


class TestRawStatistic:
    def test_zero_for_constant_fit(self, small_sample):
        r_fit, pi_fit = fits(small_sample, CONST_ONLY)
        assert compute_I(small_sample, CONST_ONLY, r_fit, pi_fit) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_both_forms_agree(self, seed, spec222):
        sample = random_sample(100, seed=seed)
        r_fit, pi_fit = fits(sample, spec222)
        i_def, i_equiv = statistic_forms(sample, spec222, r_fit, pi_fit)
        assert abs(i_def - i_equiv) <= 1e-10 * (1 + abs(i_def))

    def test_matches_pointwise_oracle(self, spec222):
        from drci import eval_pi, eval_r

        sample = random_sample(30, seed=90)
        r_fit, pi_fit = fits(sample, spec222)
        total = 0.0
        for t in range(sample.n):
            r_t = eval_r(r_fit, sample.y[t], sample.z[t])
            pi_t = eval_pi(pi_fit, sample.x[t], sample.y[t], sample.z[t])
            total += (pi_t - 1.0) ** 2 * r_t
        oracle = total / (2 * sample.n)
        got = compute_I(sample, spec222, r_fit, pi_fit)
        assert got == pytest.approx(oracle, rel=1e-10)


def influence_oracle(sample, spec, r_fit):
    """Literal double-loop version of the influence rows."""
    from drci.basis import u_matrix, v_matrix
    from drci.ratios import _v_design

    n = sample.n
    V, v_tr = _v_design(sample, spec)
    U = r_fit.basis_rows(sample.y, sample.z)
    r = U @ r_fit.gamma
    sigma_inv = np.linalg.inv(r_fit.sigma_mat)
    cross = V.T @ U / n

    rows = np.empty((n, len(spec.v_terms)))
    for i in range(n):
        term1 = np.zeros(len(spec.v_terms))
        for j in range(n):
            raw = v_matrix(spec.v_terms, sample.x[i][None, :], sample.y[j][None, :],
                           sample.z[i][None, :])
            term1 += v_tr.apply(raw)[0]
        term1 /= n
        w_i = np.zeros(len(spec.u_terms))
        for j in range(n):
            raw = u_matrix(spec.u_terms, sample.y[j][None, :], sample.z[i][None, :])
            w_i += r_fit.transform.apply(raw)[0]
        w_i /= n
        term2 = cross @ sigma_inv @ w_i
        term3 = (V * r[:, None]).mean(axis=0)
        term4 = V[i] * r[i]
        rows[i] = term1 - term2 + term3 - term4
    return rows


class TestInfluence:
    def test_constant_bases_annihilate(self, small_sample):
        r_fit = fit_unconditional(small_sample, CONST_ONLY)
        rows = influence_matrix(small_sample, CONST_ONLY, r_fit)
        np.testing.assert_allclose(rows, 0.0, atol=1e-12)

    def test_matches_double_loop_oracle(self, spec222):
        sample = random_sample(10, seed=77)
        r_fit = fit_unconditional(sample, spec222)
        fast = influence_matrix(sample, spec222, r_fit)
        brute = influence_oracle(sample, spec222, r_fit)
        np.testing.assert_allclose(fast, brute, rtol=1e-12, atol=1e-12)

    def test_separable_first_term_matches_pairwise(self, spec222):
        sample = random_sample(25, seed=78)
        r_fit = fit_unconditional(sample, spec222)
        fast = influence_matrix(sample, spec222, r_fit, method="separable")
        brute = influence_matrix(sample, spec222, r_fit, method="pairwise")
        np.testing.assert_allclose(fast, brute, rtol=1e-12, atol=1e-12)


class TestBiasAndVariance:
    def test_zero_influence_gives_zero_bias(self, small_sample, spec222):
        _, pi_fit = fits(small_sample, spec222)
        assert compute_B(np.zeros((small_sample.n, len(spec222.v_terms))), pi_fit) == 0.0

    def test_bias_matches_explicit_inverse(self, spec222):
        sample = random_sample(10, seed=50)
        r_fit, pi_fit = fits(sample, spec222)
        rows = influence_matrix(sample, spec222, r_fit)
        h_inv = np.linalg.inv(pi_fit.h_mat)
        oracle = sum(rows[i] @ h_inv @ rows[i] for i in range(sample.n))
        oracle /= 2 * sample.n ** 2
        assert compute_B(rows, pi_fit) == pytest.approx(oracle, rel=1e-12)

    def test_bias_nonnegative_for_definite_gram(self, spec222):
        sample = random_sample(100, seed=51)
        r_fit, pi_fit = fits(sample, spec222)
        if pi_fit.solver.eigvals.min() > 0:
            rows = influence_matrix(sample, spec222, r_fit)
            assert compute_B(rows, pi_fit) >= 0.0

    def test_sigma_matches_double_loop(self, spec222):
        sample = random_sample(12, seed=52)
        r_fit, pi_fit = fits(sample, spec222)
        rows = influence_matrix(sample, spec222, r_fit)
        h_inv = np.linalg.inv(pi_fit.h_mat)
        n = sample.n
        total = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    total += float(rows[i] @ h_inv @ rows[j]) ** 2
        oracle = np.sqrt(2.0 / (n * (n - 1)) * total)
        assert compute_sigma(rows, pi_fit) == pytest.approx(oracle, rel=1e-12)
        assert compute_sigma(rows, pi_fit, method="pairwise") == pytest.approx(oracle, rel=1e-12)

    def test_sigma_invariant_to_row_permutation(self, rng, spec222):
        sample = random_sample(30, seed=53)
        r_fit, pi_fit = fits(sample, spec222)
        rows = influence_matrix(sample, spec222, r_fit)
        perm = rng.permutation(sample.n)
        assert compute_sigma(rows[perm], pi_fit) == pytest.approx(
            compute_sigma(rows, pi_fit), rel=1e-12)

    def test_zero_influence_is_degenerate(self, small_sample, spec222):
        _, pi_fit = fits(small_sample, spec222)
        with pytest.raises(DegenerateStatisticError):
            compute_sigma(np.zeros((small_sample.n, len(spec222.v_terms))), pi_fit)


class TestNormalHelpers:
    def test_quantile_cdf_round_trip(self):
        for p in (0.01, 0.05, 0.5, 0.95, 0.999):
            assert normal_cdf(normal_quantile(p)) == pytest.approx(p, abs=1e-12)

    def test_cdf_against_erfc(self):
        import math

        for t in (-3.0, -0.5, 0.0, 1.2, 4.0):
            assert normal_cdf(t) == pytest.approx(0.5 * math.erfc(-t / math.sqrt(2)), abs=1e-15)


class TestRunTest:
    def test_null_size_on_independent_data(self, spec222):
        rejections = 0
        reps = 300
        for seed in range(reps):
            gen = np.random.default_rng(400_000 + seed)
            sample = Sample(x=gen.standard_normal(500), y=gen.standard_normal(500),
                            z=gen.standard_normal(500))
            rejections += run_test(sample, spec222).reject
        assert 0.02 <= rejections / reps <= 0.10

    def test_power_on_strong_dependence(self, spec222):
        rejections = 0
        for seed in range(50):
            gen = np.random.default_rng(500_000 + seed)
            x = gen.standard_normal(500)
            y = x + 0.3 * gen.standard_normal(500)
            z = gen.standard_normal(500)
            rejections += run_test(Sample(x=x, y=y, z=z), spec222).reject
        assert rejections / 50 >= 0.9

    def test_rank_invariance_is_bitwise(self, spec222):
        gen = np.random.default_rng(42)
        x, y, z = gen.standard_normal((3, 150))
        base = run_test(Sample(x, y, z), spec222)
        mapped = run_test(Sample(np.exp(x), 3 * y - 1, np.arctan(z)), spec222)
        assert base.t_stat == mapped.t_stat
        assert base.p_value == mapped.p_value

    def test_statistic_invariant_under_basis_recombination(self, rng, spec222):
        sample = random_sample(120, seed=88)
        base = run_test(sample, spec222)
        k0, k = len(spec222.u_terms), len(spec222.v_terms)
        mixed = spec222.with_mixing(
            u_mix=np.eye(k0) + 0.3 * rng.standard_normal((k0, k0)),
            v_mix=np.eye(k) + 0.3 * rng.standard_normal((k, k)),
        )
        other = run_test(sample, mixed)
        assert other.t_stat == pytest.approx(base.t_stat, rel=1e-8)

    def test_decision_matches_p_value(self, spec222):
        sample = random_sample(150, seed=4)
        for alpha in (0.01, 0.05, 0.2, 0.8):
            res = run_test(sample, spec222, alpha=alpha)
            assert res.reject == (res.p_value < alpha)
            assert res.reject == (res.t_stat > normal_quantile(1 - alpha))

    def test_result_records_sample_size_and_spec(self, spec222):
        sample = random_sample(80, seed=6)
        res = run_test(sample, spec222)
        assert res.n == 80
        assert res.spec is spec222
        assert 0.0 <= res.p_value <= 1.0

    def test_rank_disabled_differs_on_skewed_data(self, spec222):
        gen = np.random.default_rng(11)
        sample = Sample(*np.exp(gen.standard_normal((3, 120))))
        ranked = run_test(sample, spec222, rank_transform=True)
        raw = run_test(sample, spec222, rank_transform=False)
        assert ranked.t_stat != raw.t_stat

    def test_explicit_rank_transform_matches_internal(self, spec222):
        gen = np.random.default_rng(12)
        sample = Sample(*gen.standard_normal((3, 100)))
        pre = rank_transform(sample)
        a = run_test(sample, spec222, rank_transform=True)
        b = run_test(pre, spec222, rank_transform=False)
        assert a.t_stat == pytest.approx(b.t_stat, rel=1e-12)
