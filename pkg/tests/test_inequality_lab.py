import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphere_ineq.errors import DomainError, NegativePotentialError
from sphere_ineq.inequality_lab import (
    ConstantsTable,
    Family,
    Flavor,
    alt_trace_check,
    b_p,
    build_family,
    compare_constants,
    density,
    galerkin_operator,
    gn_ratio,
    min_degree_for,
    random_field,
    random_potential,
    theorem1_ratio,
    theorem1_ratios,
    variational_step_check,
)
from sphere_ineq.sphere_basis import (
    FOUR_PI,
    SpectralCoeffs,
    build_rule,
    eigenvalues,
    flat_index,
    n_harmonics,
    synthesize,
)


def eigenspace_family(n, m, flavor="scalar"):
    """Members Y_n^k / sqrt(m^2 + Lambda_n), k = 1..2n+1."""
    C = np.zeros((2 * n + 1, n_harmonics(n)))
    for k in range(1, 2 * n + 2):
        C[k - 1, flat_index(n, k)] = 1.0 / math.sqrt(m * m + n * (n + 1))
    return Family(m, Flavor(flavor), C, n)


class TestBp:
    def test_values(self):
        assert b_p(2.0) == pytest.approx(FOUR_PI**-0.5, rel=1e-15)
        assert b_p(1.0) == 1.0
        assert b_p(3.0) == pytest.approx((2.0 / FOUR_PI) ** (2.0 / 3.0), rel=1e-14)
        assert b_p(3.0) == pytest.approx(0.2936838654966136, rel=1e-14)

    def test_continuous_at_one(self):
        assert b_p(1.0 + 1e-10) == pytest.approx(1.0, abs=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            b_p(0.9)


class TestFamily:
    def test_min_degree(self):
        assert [min_degree_for(s) for s in (1, 3, 4, 8, 9, 15, 16, 64)] == [1, 1, 2, 2, 3, 3, 4, 8]

    def test_identity_single(self):
        for m in (0.5, 2.0):
            f = build_family(m, 1)
            assert f.members[0].entries == {(1, 1): pytest.approx(1.0 / math.sqrt(m * m + 2.0))}

    @pytest.mark.parametrize("seed", range(10))
    def test_gram(self, seed):
        for size in (1, 5, 30):
            assert build_family(0.7, size, "scalar", seed).gram_residual() <= 1e-10

    def test_zero_mean(self):
        f = build_family(1.0, 8, "scalar", 3)
        assert np.all(f.coeffs[:, 0] == 0.0)
        assert all(c.zero_mean for c in f.members)

    def test_deterministic(self):
        a = build_family(1.0, 12, "vector", 5)
        b = build_family(1.0, 12, "vector", 5)
        assert np.array_equal(a.coeffs, b.coeffs)

    def test_size_overflow(self):
        with pytest.raises(DomainError):
            build_family(1.0, 9, max_degree=2)
        with pytest.raises(DomainError):
            build_family(0.0, 1)

    def test_vector_rot_orthonormality(self):
        # u_j = w_1^k / sqrt(m^2 + 2); L^2 part by quadrature, rot part spectrally
        m = 1.3
        fam = build_family(m, 3, "vector")
        rule = build_rule(6)
        Gt, Gp = rule.gradient_basis(1)
        Wt, Wp = Gp / math.sqrt(2.0), -Gt / math.sqrt(2.0)
        Ut, Up = Wt @ fam.coeffs.T, Wp @ fam.coeffs.T
        l2 = Ut.T @ (rule.weights[:, None] * Ut) + Up.T @ (rule.weights[:, None] * Up)
        rot = (fam.coeffs * eigenvalues(1)) @ fam.coeffs.T
        assert np.abs(m * m * l2 + rot - np.eye(3)).max() <= 1e-13
        assert np.allclose(fam.coeffs[:, 1:], np.eye(3) / math.sqrt(m * m + 2.0))

    def test_text_roundtrip(self):
        fam = build_family(1.5, 5, "vector", 3)
        text = fam.to_text()
        assert text.splitlines()[0] == "m=1.5 flavor=vector n=5"
        back = Family.from_text(text)
        assert back.flavor is Flavor.VECTOR and back.m == 1.5
        assert np.array_equal(back.coeffs, fam.coeffs)


class TestDensity:
    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_scalar_eigenspace_constant(self, n):
        m = 0.8
        rho = density(eigenspace_family(n, m), build_rule(2 * n)).values
        want = (2 * n + 1) / (FOUR_PI * (m * m + n * (n + 1)))
        assert rho.std() <= 1e-10 * rho.mean()
        assert rho.mean() == pytest.approx(want, rel=1e-13)

    def test_vector_eigenspace_constant(self):
        rho = density(eigenspace_family(1, 1.0, "vector"), build_rule(4)).values
        assert rho.std() <= 1e-10 * rho.mean()
        assert rho.mean() == pytest.approx(3 / (FOUR_PI * 3.0), rel=1e-13)

    def test_single_member(self):
        fam = build_family(1.0, 1, "scalar", 4, max_degree=3)
        rule = build_rule(6)
        phi1 = synthesize(fam.members[0], rule)
        assert np.allclose(density(fam, rule).values, phi1**2, rtol=1e-13)

    @pytest.mark.parametrize("flavor", ["scalar", "vector"])
    def test_integral(self, flavor):
        fam = build_family(0.9, 20, flavor, 11)
        d = density(fam)
        assert np.all(d.values >= 0)
        spectral = math.fsum(fam.l2_norms2())
        assert d.integral == pytest.approx(spectral, rel=1e-10)

    def test_degree_warning(self):
        from sphere_ineq.sphere_basis import DegreeMismatchWarning

        with pytest.warns(DegreeMismatchWarning):
            density(build_family(1.0, 8), build_rule(2))


class TestFamilyBound:
    def test_p1_exact(self):
        fam = build_family(2.0, 8, "scalar", 1)
        r = theorem1_ratio(fam, 1.0)
        assert r.quad_error == 0.0
        assert r.value == pytest.approx(math.fsum(fam.l2_norms2()) * 4.0 / 8, rel=1e-14)
        assert r.value <= 1.0

    def test_degree_one_eigenspace(self):
        # rho = 1/(4 pi): ||rho||_2 = (4 pi)^{-1/2}, bound (4 pi)^{-1/2} sqrt(3)
        r = theorem1_ratio(build_family(1.0, 3), 2.0)
        assert r.value == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-13)

    def test_pipeline_seed42(self):
        r = theorem1_ratio(build_family(2.0, 16, "scalar", 42), 4.0)
        assert r.value <= 1.0 + r.quad_error
        assert r.value == pytest.approx(0.4597360229082073, rel=1e-10)

    def test_batch_matches_single(self):
        fam = build_family(1.0, 8, "vector", 2)
        batch = theorem1_ratios(fam, [1.0, 2.0, 3.0])
        for p, r in batch.items():
            assert r.value == pytest.approx(theorem1_ratio(fam, p).value, rel=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(
        m=st.floats(0.2, 8.0),
        size=st.integers(1, 40),
        seed=st.integers(0, 10**6),
        p=st.sampled_from([1.0, 1.5, 2.0, 3.0, 4.0]),
        flavor=st.sampled_from(["scalar", "vector"]),
    )
    def test_bound_holds(self, m, size, seed, p, flavor):
        r = theorem1_ratio(build_family(m, size, flavor, seed), p)
        assert r.holds()

    def test_domain(self):
        with pytest.raises(DomainError):
            theorem1_ratio(build_family(1.0, 1), 0.5)


class TestGN:
    def test_q2_is_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            assert gn_ratio(random_field(6, rng), 2.0).value == pytest.approx(1.0, abs=1e-12)

    def test_y11_q4_analytic(self):
        c = SpectralCoeffs({(1, 1): 1.0})
        lhs = ((3 / FOUR_PI) ** 2 * FOUR_PI / 5) ** 0.25
        rhs = FOUR_PI**-0.25 * math.sqrt(2.0) * 2.0**0.25
        assert gn_ratio(c, 4.0).value == pytest.approx(lhs / rhs, rel=1e-12)

    def test_random_q10(self):
        rng = np.random.default_rng(10)
        worst = max(gn_ratio(random_field(8, rng), 10.0).value for _ in range(100))
        assert worst <= 1.0

    def test_errors(self):
        with pytest.raises(DomainError):
            gn_ratio(SpectralCoeffs({(1, 1): 0.0}), 4.0)
        with pytest.raises(DomainError):
            gn_ratio(SpectralCoeffs({(0, 1): 1.0, (1, 1): 1.0}), 4.0)
        with pytest.raises(DomainError):
            gn_ratio(SpectralCoeffs({(1, 1): 1.0}), 1.5)


class TestTrace:
    def test_constant_potential_saturates(self):
        V = SpectralCoeffs({(0, 1): 2.5 * math.sqrt(FOUR_PI)})
        for p in (1.5, 2.0, 3.0):
            t = alt_trace_check(1.0, p, V, 6)
            assert t.lhs == pytest.approx(t.rhs, rel=1e-10)

    def test_shifted_potential_against_frobenius(self):
        V = SpectralCoeffs({(0, 1): math.sqrt(FOUR_PI), (1, 1): 0.5})
        t = alt_trace_check(1.0, 2.0, V, 6)
        assert t.holds and t.lhs < t.rhs
        # Tr K^2 = ||K||_F^2 on an independent, finer rule
        K = galerkin_operator(1.0, V, 6, build_rule(40)).matrix
        assert t.lhs == pytest.approx(float(np.sum(K * K)), rel=1e-12)

    def test_r_one_cyclicity(self):
        V = SpectralCoeffs({(0, 1): math.sqrt(FOUR_PI), (2, 3): 0.4})
        t = alt_trace_check(0.7, math.inf, V, 5)
        assert t.r == 1.0
        assert t.lhs == pytest.approx(t.rhs, rel=1e-12)

    @pytest.mark.parametrize("flavor", ["scalar", "vector"])
    def test_random_potentials(self, flavor):
        rng = np.random.default_rng(12)
        for _ in range(5):
            V = random_potential(3, rng)
            for p in (3.0, 2.0, 1.5):
                assert alt_trace_check(1.1, p, V, 6, flavor=flavor).holds

    def test_operator_psd_symmetric(self):
        V = random_potential(2, np.random.default_rng(1))
        K = galerkin_operator(1.0, V, 5, build_rule(20))
        assert np.abs(K.matrix - K.matrix.T).max() <= 1e-12
        assert np.linalg.eigvalsh(K.matrix).min() >= -1e-10
        assert K.dimension == 35

    def test_errors(self):
        with pytest.raises(NegativePotentialError):
            alt_trace_check(1.0, 2.0, SpectralCoeffs({(1, 1): 1.0}), 4)
        V = SpectralCoeffs({(0, 1): 1.0})
        with pytest.raises(DomainError):
            alt_trace_check(1.0, 2.0, V, 20)
        with pytest.raises(DomainError):
            alt_trace_check(1.0, 1.0, V, 4)


class TestVariational:
    def test_full_dimension_is_trace(self):
        V = random_potential(2, np.random.default_rng(3))
        L = 4
        fam = build_family(1.2, n_harmonics(L) - 1, "scalar", 9, L)
        sq, es = variational_step_check(fam, V)
        assert sq == pytest.approx(es, rel=1e-12)

    def test_single_member(self):
        V = SpectralCoeffs({(0, 1): math.sqrt(FOUR_PI), (1, 2): 0.3, (2, 1): 0.2})
        fam = build_family(1.0, 1)
        sq, lam_max = variational_step_check(fam, V, max_degree=4)
        assert sq <= lam_max * (1 + 1e-8)

    def test_zero_potential(self):
        sq, es = variational_step_check(build_family(1.0, 3), SpectralCoeffs({}))
        assert (sq, es) == (0.0, 0.0)

    def test_degree_check(self):
        with pytest.raises(DomainError):
            variational_step_check(build_family(1.0, 20), SpectralCoeffs({}), max_degree=2)


class TestRandomInputs:
    def test_potential_positive_everywhere(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            V = random_potential(4, rng)
            assert V.max_degree == 8
            assert synthesize(V, build_rule(60)).min() >= 1e-6 * (1 - 1e-6)

    def test_field_zero_mean(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            c = random_field(8, rng)
            assert c.zero_mean and 1 <= c.max_degree <= 8


class TestConstants:
    def test_ladyzhenskaya(self):
        t = compare_constants(4.0)
        assert t.ladyzhenskaya == pytest.approx(1.0 / math.pi, rel=1e-14)
        assert compare_constants(6.0).ladyzhenskaya is None

    def test_q2(self):
        t = compare_constants(2.0)
        assert t.gn_sphere == pytest.approx(1.0, rel=1e-15)
        assert t.plane == pytest.approx(1.0, rel=1e-15)
        # the gradient-only routes reduce to 2^{-1/2} at q = 2
        assert t.beckner_route == pytest.approx(2**-0.5, rel=1e-15)
        assert t.zero_mean_route == pytest.approx(2**-0.5, rel=1e-15)
        assert t.route_comparison

    def test_q10(self):
        t = compare_constants(10.0)
        assert 2**-0.2 == pytest.approx(0.8706, abs=1e-4)
        assert t.route_comparison
        assert t.zero_mean_route < t.beckner_route
        assert t.asymptote == pytest.approx(math.sqrt(10 / (8 * math.pi)), rel=1e-15)

    @pytest.mark.parametrize("q", [2.0, 3.0, 4.0, 10.0, 50.0])
    def test_orderings(self, q):
        t = compare_constants(q)
        assert t.plane <= t.gn_sphere * (1 + 1e-15)
        assert t.zero_mean_route <= t.beckner_route * (1 + 1e-15)

    def test_row(self):
        row = compare_constants(4.0).row()
        assert list(row) == list(ConstantsTable.FIELDS)

    def test_domain(self):
        with pytest.raises(DomainError):
            compare_constants(1.5)
