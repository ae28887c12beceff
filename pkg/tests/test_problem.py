from fractions import Fraction

import pytest
from mpmath import mp, mpf, workdps

from aimspike.errors import ConfigurationError, DomainError
from aimspike.problem import (
    Ansatz,
    ProblemSpec,
    Regime,
    ansatz_for,
    build_pair,
    build_soft,
    build_supersingular,
    effective_potential,
    exact_alpha2,
    gamma_from_angular,
    r0_heuristic,
)
from aimspike.symcore import precision, sf_eval


def test_gamma_from_angular():
    assert gamma_from_angular(0, 3) == 0
    assert gamma_from_angular(1, 1) == 0
    assert gamma_from_angular(2, 5) == 3
    assert gamma_from_angular(0, 2) == Fraction(-1, 2)
    with pytest.raises(ConfigurationError):
        gamma_from_angular(-1, 3)
    with pytest.raises(ConfigurationError):
        gamma_from_angular(0, 0)


class TestProblemSpec:
    def test_regime_tags(self):
        assert ProblemSpec(1, 0, 0).regime is Regime.SOFT
        assert ProblemSpec(2, 1, 0).regime is Regime.CRITICAL
        assert ProblemSpec(4, 1, 0).regime is Regime.SUPERSINGULAR

    def test_decimal_inputs_stay_exact(self):
        s = ProblemSpec(4, 0.1, 0)
        assert s.lam == Fraction(1, 10)
        s2 = ProblemSpec("3/2", "1e-6", Fraction(1, 2))
        assert s2.alpha == Fraction(3, 2)
        assert s2.lam == Fraction(1, 10 ** 6)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            ProblemSpec(0, 1, 0)
        with pytest.raises(ConfigurationError):
            ProblemSpec(1, -1, 0)
        with pytest.raises(ConfigurationError):
            ProblemSpec(1, 0, -1)
        with pytest.raises(ConfigurationError):
            ProblemSpec(1, 0, 0, -2)
        with pytest.raises(ConfigurationError):
            ProblemSpec(1, 0, 0, state_index=1.5)

    def test_m_and_with_state(self):
        s = ProblemSpec(4, 1, 0)
        assert s.m == 1
        assert ProblemSpec(3, 1, 0).m == Fraction(1, 2)
        assert s.with_state(2).state_index == 2

    def test_from_angular(self):
        s = ProblemSpec.from_angular(4, 1, l=2, n_dim=5)
        assert s.gamma == 3


class TestBuilders:
    def test_supersingular_alpha4(self):
        # coefficients adopt the precision active at build time
        with precision(30):
            lam0, s0 = build_supersingular(ProblemSpec(4, 0.1, 0))
            root = mp.sqrt(mpf(1) / 10)
            assert lam0.exponents() == [Fraction(-2), Fraction(-1), Fraction(1)]
            assert abs(lam0.terms[Fraction(-2)].coeffs[0] + 2 * root) < mpf(10) ** -28
            assert lam0.terms[Fraction(-1)].coeffs[0] == -2
            assert lam0.terms[Fraction(1)].coeffs[0] == 2
            # (2g+1-m)(2g+1+m) = 0 at gamma=0, m=1: no r^-2 term in s0
            assert s0.exponents() == [Fraction(-1), Fraction(0)]
            assert abs(s0.terms[Fraction(-1)].coeffs[0] - 2 * root) < mpf(10) ** -28
            assert s0.terms[Fraction(0)].coeffs == [mpf(3), mpf(-1)]

    def test_supersingular_fractional_m(self):
        _, s0 = build_supersingular(ProblemSpec(3, 0.1, 2))
        with precision(30):
            assert s0.terms[Fraction(0)].coeffs[0] == mpf(5) / 2
            assert s0.terms[Fraction(-2)].coeffs[0] == mpf("6.1875")
            assert Fraction(-1, 2) in s0.terms

    def test_supersingular_rejections(self):
        with pytest.raises(ConfigurationError):
            build_supersingular(ProblemSpec(4, 0, 0))
        with pytest.raises(ConfigurationError):
            build_supersingular(ProblemSpec(1, 1, 0))

    def test_soft_pairs(self):
        lam0, s0 = build_soft(ProblemSpec(1, 0, 0))
        assert lam0.terms[Fraction(1)].coeffs == [mpf(2)]
        assert lam0.terms[Fraction(-1)].coeffs == [mpf(-2)]
        assert s0.exponents() == [Fraction(0)]
        assert s0.terms[Fraction(0)].coeffs == [mpf(3), mpf(-1)]

        _, s0 = build_soft(ProblemSpec(1, 0.01, 0))
        assert s0.terms[Fraction(-1)].coeffs == [mpf(1) / 100]

        _, s0 = build_soft(ProblemSpec(Fraction(3, 2), 1, 1))
        assert s0.terms[Fraction(0)].coeffs == [mpf(5), mpf(-1)]
        assert s0.terms[Fraction(-3, 2)].coeffs == [mpf(1)]

    def test_soft_rejects_high_alpha(self):
        with pytest.raises(ConfigurationError):
            build_soft(ProblemSpec(2, 1, 0))

    def test_dispatch(self):
        with pytest.raises(ConfigurationError):
            build_pair(ProblemSpec(2, 1, 0))
        lam0, s0 = build_pair(ProblemSpec(4, 0, 1))
        assert s0.terms[Fraction(0)].coeffs == [mpf(5), mpf(-1)]  # plain oscillator
        lam0s, _ = build_pair(ProblemSpec(4, 0.1, 0))
        assert Fraction(-2) in lam0s.terms


class TestExactAlpha2:
    def test_values(self):
        with precision(30):
            assert exact_alpha2(ProblemSpec(2, 0, 0, 0)) == 3
            assert exact_alpha2(ProblemSpec(2, 0, 0, 2)) == 11
            assert abs(exact_alpha2(ProblemSpec(2, 2, 0, 0)) - 5) < mpf(10) ** -28

    def test_monotone(self):
        with precision(30):
            base = exact_alpha2(ProblemSpec(2, 1, 1, 1))
            assert exact_alpha2(ProblemSpec(2, 2, 1, 1)) > base
            assert exact_alpha2(ProblemSpec(2, 1, 2, 1)) > base
            assert exact_alpha2(ProblemSpec(2, 1, 1, 2)) > base

    def test_rejects_other_alpha(self):
        with pytest.raises(ConfigurationError):
            exact_alpha2(ProblemSpec(1, 1, 0))


class TestPotentialAndR0:
    def test_potential_values(self):
        with precision(30):
            assert abs(effective_potential(ProblemSpec(4, 0.1, 0), 1) - mpf("1.1")) < mpf(10) ** -28
            assert effective_potential(ProblemSpec(1, 1, 0), 1) == 2
            assert abs(effective_potential(ProblemSpec(3, 0.1, 2), 1) - mpf("7.1")) < mpf(10) ** -28
        with pytest.raises(DomainError):
            effective_potential(ProblemSpec(1, 1, 0), 0)

    def test_r0_clamps_small_coupling(self):
        with precision(20):
            assert r0_heuristic(ProblemSpec(1, 0, 0)) == 3
            assert r0_heuristic(ProblemSpec(4, 0.1, 0)) == 3

    def test_r0_follows_deep_spike(self):
        with precision(20):
            r0 = r0_heuristic(ProblemSpec(4, 1000, 0))
            assert abs(r0 - mpf(2000) ** (mpf(1) / 6)) < mpf("1e-3")

    def test_r0_at_least_three(self):
        with precision(20):
            for spec in [ProblemSpec(1, 1000, 0), ProblemSpec(3, 1, 2), ProblemSpec(5, 10, 1)]:
                assert r0_heuristic(spec) >= 3


class TestAnsatz:
    def test_shapes(self):
        a = ansatz_for(ProblemSpec(1, 0, 0))
        assert a.regime is Regime.SOFT
        assert a.prefactor_exponent == 1
        b = ansatz_for(ProblemSpec(4, 0.1, 0))
        assert b.regime is Regime.SUPERSINGULAR
        assert b.prefactor_exponent == 1  # (m+1)/2 with m=1
        with precision(20):
            assert abs(b.spike_coefficient() - mp.sqrt(mpf("0.1"))) < mpf(10) ** -18
        # lam = 0 degenerates to the soft form even for alpha > 2
        c = ansatz_for(ProblemSpec(4, 0, 2))
        assert c.regime is Regime.SOFT
        assert c.prefactor_exponent == 3

    def test_soft_peak(self):
        with precision(20):
            a = ansatz_for(ProblemSpec(1, 0, 0))
            assert abs(a.maximizer() - 1) < mpf("1e-15")
            assert abs(a.psi(1) - mp.exp(mpf(-1) / 2)) < mpf(10) ** -18

    def test_psi_rejects_origin(self):
        a = ansatz_for(ProblemSpec(1, 0, 0))
        with precision(20):
            with pytest.raises(DomainError):
                a.log_psi(0)


def _dlog_derivative(ansatz: Ansatz, r: mpf) -> mpf:
    with workdps(mp.dps * 2 + 20):
        h = mpf(10) ** (-mp.dps // 3)
        return (ansatz.dlog_psi(r + h) - ansatz.dlog_psi(r - h)) / (2 * h)


@pytest.mark.parametrize(
    "spec",
    [
        ProblemSpec(1, 0.5, 0),
        ProblemSpec(Fraction(3, 2), 2, 1),
        ProblemSpec(1, 0, Fraction(-1, 2)),
        ProblemSpec(4, 0.1, 0),
        ProblemSpec(3, 0.1, 2),
        ProblemSpec(6, 100, 1),
    ],
)
def test_pair_matches_transformed_equation(spec):
    """lam0 = -2 (log psi_a)' and s0 = V - E - psi_a''/psi_a, pointwise.

    This pins the builders to the original eigenvalue equation through the
    ansatz, rather than to their own formulas.
    """
    with precision(60):
        lam0, s0 = build_pair(spec)
        a = ansatz_for(spec)
        for r in [mpf("0.7"), mpf("1.3"), mpf(3)]:
            for e in [mpf(0), mpf("4.25")]:
                d = a.dlog_psi(r)
                want_lam0 = -2 * d
                got_lam0 = sf_eval(lam0, r)(e)
                assert abs(got_lam0 - want_lam0) < mpf(10) ** -20 * (1 + abs(want_lam0))
                curvature = d * d + _dlog_derivative(a, r)
                want_s0 = effective_potential(spec, r) - e - curvature
                got_s0 = sf_eval(s0, r)(e)
                assert abs(got_s0 - want_s0) < mpf(10) ** -20 * (1 + abs(want_s0))
