import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drci import BasisSpec, ConfigurationError, Monomial, candidate_grid, eval_u, eval_v
from drci.basis import u_cross_rows, u_pair_mean, v_cross_rows, v_pair_mean


def naive_term(term, x=None, y=0.0, z=0.0):
    out = 1.0
    if x is not None:
        out *= float(x) ** term.ex
    out *= float(y) ** term.ey
    out *= float(z) ** term.ez
    return out


class TestMonomial:
    def test_rejects_negative_exponents(self):
        with pytest.raises(ConfigurationError):
            Monomial(-1, 0, 0)

    def test_constant_term(self):
        assert Monomial(0, 0, 0).is_constant
        assert not Monomial(1, 0, 0).is_constant

    def test_str_is_readable(self):
        assert str(Monomial(0, 0, 0)) == "1"
        assert str(Monomial(2, 1, 0)) == "x^2*y"


class TestBasisSpec:
    def test_requires_constant(self):
        with pytest.raises(ConfigurationError, match="constant"):
            BasisSpec(u_terms=[(0, 1, 0)], v_terms=[(0, 0, 0), (0, 1, 0)])

    def test_rejects_duplicates(self):
        with pytest.raises(ConfigurationError, match="duplicate"):
            BasisSpec(u_terms=[(0, 0, 0), (0, 1, 0), (0, 1, 0)],
                      v_terms=[(0, 0, 0), (0, 1, 0)])

    def test_first_stage_cannot_involve_x(self):
        with pytest.raises(ConfigurationError, match="involve x"):
            BasisSpec(u_terms=[(0, 0, 0), (1, 1, 0)], v_terms=[(0, 0, 0), (1, 1, 0)])

    def test_first_stage_terms_must_be_in_v(self):
        with pytest.raises(ConfigurationError, match="missing"):
            BasisSpec(u_terms=[(0, 0, 0), (0, 2, 0)],
                      v_terms=[(0, 0, 0), (0, 1, 0)])

    def test_tensor_shape(self):
        spec = BasisSpec.tensor(4, 2, 2)
        assert len(spec.v_terms) == 45
        assert len(spec.u_terms) == 4


class TestEvalU:
    def test_constant_term_is_one(self):
        spec = BasisSpec.tensor(1, 1, 1)
        vals = eval_u(spec, y=0.37, z=0.91)
        assert vals[0] == 1.0

    def test_four_term_pool_values(self):
        spec = BasisSpec.tensor(1, 1, 1)
        vals = eval_u(spec, y=0.2, z=0.5)
        # order: 1, z, y, yz
        by_term = dict(zip(spec.u_terms, vals))
        assert by_term[Monomial(0, 0, 0)] == 1.0
        assert by_term[Monomial(0, 1, 0)] == pytest.approx(0.2)
        assert by_term[Monomial(0, 0, 1)] == pytest.approx(0.5)
        assert by_term[Monomial(0, 1, 1)] == pytest.approx(0.1)

    def test_matches_per_term_oracle_at_random_points(self, rng):
        spec = BasisSpec.tensor(2, 2, 2)
        for _ in range(10):
            y, z = rng.random(2)
            vals = eval_u(spec, y, z)
            expected = [naive_term(t, y=y, z=z) for t in spec.u_terms]
            np.testing.assert_allclose(vals, expected, rtol=2e-15)


class TestEvalV:
    def test_single_monomial(self):
        spec = BasisSpec(u_terms=[(0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1)],
                         v_terms=[(0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1), (2, 1, 0)])
        vals = eval_v(spec, x=0.5, y=0.2, z=0.9)
        assert vals[-1] == pytest.approx(0.05)

    def test_constant_term(self, spec222):
        assert eval_v(spec222, 0.3, 0.8, 0.1)[0] == 1.0

    def test_matches_per_term_oracle(self, rng):
        spec = BasisSpec.tensor(3, 2, 2)
        for _ in range(10):
            x, y, z = rng.random(3)
            vals = eval_v(spec, x, y, z)
            expected = [naive_term(t, x=x, y=y, z=z) for t in spec.v_terms]
            np.testing.assert_allclose(vals, expected, rtol=2e-15)

    def test_shared_terms_agree_with_eval_u(self, rng, spec222):
        y, z = rng.random(2)
        u_vals = eval_u(spec222, y, z)
        v_vals = eval_v(spec222, x=rng.random(), y=y, z=z)
        v_map = dict(zip(spec222.v_terms, v_vals))
        for term, val in zip(spec222.u_terms, u_vals):
            assert v_map[term] == val


@given(
    x=st.floats(0.01, 1.0), y=st.floats(0.01, 1.0), z=st.floats(0.01, 1.0),
    ex=st.integers(0, 4), ey=st.integers(0, 3), ez=st.integers(0, 3),
)
@settings(max_examples=50, deadline=None)
def test_eval_v_single_term_property(x, y, z, ex, ey, ez):
    spec = BasisSpec(
        u_terms=[(0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1)],
        v_terms=[(0, 0, 0), (0, 1, 0), (0, 0, 1), (0, 1, 1), (1 + ex, ey, ez)],
    )
    got = eval_v(spec, x, y, z)[-1]
    assert got == pytest.approx(x ** (1 + ex) * y ** ey * z ** ez, rel=1e-12)


class TestCandidateGrid:
    def test_paper_pool_dimensions(self):
        grid = candidate_grid(4, 2, 2)
        assert len(grid) == 16
        assert max(len(c.v_terms) for c in grid) == 45

    def test_single_family(self):
        grid = candidate_grid(1, 1, 1)
        assert len(grid) == 1
        assert len(grid[0].v_terms) == 8

    def test_all_candidates_valid(self):
        for cand in candidate_grid(4, 2, 2):
            v_set = set(cand.v_terms)
            assert all(t in v_set for t in cand.u_terms)
            assert any(t.is_constant for t in cand.u_terms)

    @pytest.mark.parametrize("bad", [(4, 0, 2), (4, 2, 0), (0, 2, 2)])
    def test_rejects_degrees_below_one(self, bad):
        with pytest.raises(ConfigurationError):
            candidate_grid(*bad)


class TestPairMeans:
    @pytest.mark.parametrize("n", [10, 50])
    def test_u_pair_mean_fast_equals_pairwise(self, n, rng):
        y, z = rng.random((2, n))
        terms = BasisSpec.tensor(1, 2, 2).u_terms
        fast = u_pair_mean(terms, y, z, method="separable")
        brute = u_pair_mean(terms, y, z, method="pairwise")
        np.testing.assert_allclose(fast, brute, rtol=1e-12)

    @pytest.mark.parametrize("n", [10, 50])
    def test_v_pair_mean_fast_equals_pairwise(self, n, rng):
        x, y, z = rng.random((3, n))
        terms = BasisSpec.tensor(2, 2, 2).v_terms
        fast = v_pair_mean(terms, x, y, z, method="separable")
        brute = v_pair_mean(terms, x, y, z, method="pairwise")
        np.testing.assert_allclose(fast, brute, rtol=1e-12)

    def test_cross_rows_fast_equals_pairwise(self, rng):
        n = 20
        x, y, z = rng.random((3, n))
        v_terms = BasisSpec.tensor(2, 2, 2).v_terms
        u_terms = BasisSpec.tensor(1, 1, 1).u_terms
        np.testing.assert_allclose(
            v_cross_rows(v_terms, x, y, z, method="separable"),
            v_cross_rows(v_terms, x, y, z, method="pairwise"),
            rtol=1e-12,
        )
        np.testing.assert_allclose(
            u_cross_rows(u_terms, y, z, method="separable"),
            u_cross_rows(u_terms, y, z, method="pairwise"),
            rtol=1e-12,
        )

    def test_pair_mean_of_constant_is_one(self, rng):
        y, z = rng.random((2, 15))
        terms = (Monomial(0, 0, 0),)
        assert u_pair_mean(terms, y, z)[0] == pytest.approx(1.0)
