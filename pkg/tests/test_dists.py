"""Oracle and property tests for the exact distribution machinery."""

import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from shallowprep import dists


def test_damped_binomial_frozen_point():
    """Hand computation for m = k = 2: raw masses 1/2 and 1/16."""
    dist = dists.damped_binomial(2, 2)
    assert dist.lam == Fraction(16, 9)
    assert dist.s == (Fraction(8, 9), Fraction(1, 9))
    assert sum(dist.s) == 1


def test_damped_binomial_weight_one_is_deterministic():
    for m in (1, 2, 5, 9):
        dist = dists.damped_binomial(m, 1)
        assert dist.lam == 1
        assert dist.s == (Fraction(1),)


def test_damped_binomial_domain():
    with pytest.raises(dists.DomainError):
        dists.damped_binomial(2, 3)
    with pytest.raises(dists.DomainError):
        dists.damped_binomial(3, 0)


def test_string_prob_splits_weight_mass():
    dist = dists.damped_binomial(4, 2)
    assert dist.string_prob(1) * 4 == dist.pmf(1)
    assert dist.string_prob(2) * 6 == dist.pmf(2)
    assert dist.string_prob(3) == 0


@given(
    st.integers(1, 40).flatmap(
        lambda m: st.tuples(st.just(m), st.integers(1, min(m, 8)))
    )
)
def test_normalizer_bounds(point):
    """The normalizer always sits in [k^2/(k+1), k]."""
    m, k = point
    lam = dists.damped_binomial(m, k).lam
    assert Fraction(k * k, k + 1) <= lam <= k


def test_occupancy_pmf_frozen_point():
    assert dists.occupancy_pmf(4, 2, 2) == {1: Fraction(1, 3), 2: Fraction(2, 3)}


@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 16))
def test_occupancy_closed_form_matches_enumeration(m, ell, k):
    """The closed form agrees with brute-force string enumeration."""
    n = m * ell
    assume(k <= n)
    closed = dists.occupancy_pmf(n, k, ell)
    enumerated = dists.occupancy_pmf_enumerated(n, k, ell)
    for j in set(closed) | set(enumerated):
        assert closed.get(j, Fraction(0)) == enumerated.get(j, Fraction(0))


def test_occupancy_pmf_domain():
    with pytest.raises(dists.DomainError):
        dists.occupancy_pmf(5, 1, 2)
    with pytest.raises(dists.DomainError):
        dists.occupancy_pmf(4, 5, 2)


def test_hybrid_hit_prob_frozen_points():
    assert dists.hybrid_hit_prob(2, 2, 1, 2) == Fraction(1, 9)
    assert dists.hybrid_hit_prob(2, 2, 2, 2) == Fraction(64, 81)


def test_hybrid_hit_prob_domain():
    with pytest.raises(dists.DomainError):
        dists.hybrid_hit_prob(2, 2, 0, 2)
    with pytest.raises(dists.DomainError):
        dists.hybrid_hit_prob(2, 3, 1, 2)
    with pytest.raises(dists.DomainError):
        dists.hybrid_hit_prob(4, 2, 3, 2)


def test_ratio_report_frozen_sums():
    with pytest.warns(UserWarning):
        assert dists.ratio_report(4, 2, 2).R == Fraction(123, 32)
    with pytest.warns(UserWarning):
        assert dists.ratio_report(8, 2, 4).R == Fraction(531, 224)


def test_ratio_report_checked_regime():
    """At ell >= k^3 the per-weight ratio bound is actually enforced."""
    model = dists.ratio_report(8, 1, 8)
    assert model.bound_checked
    assert model.bound_violations == ()
    assert model.R == 1


def test_ratio_sum_tables_frozen():
    # cap 1 samples always weigh 1, so the single-bucket ratio is exactly 1
    assert dists.ratio_sum_tables(4, 1, 2) == {0: Fraction(0), 1: Fraction(1)}
    # cap 2 on 2-bit buckets: one sample weighs 1 with mass 8/9, so R_1 = 9/8
    tables = dists.ratio_sum_tables(4, 2, 2)
    assert tables[0] == 0
    assert tables[1] == Fraction(9, 8)
    assert tables[2] == Fraction(123, 32)


def test_ratio_sum_tables_domain():
    with pytest.raises(dists.DomainError):
        dists.ratio_sum_tables(5, 1, 2)
    with pytest.raises(dists.DomainError):
        dists.ratio_sum_tables(4, 3, 2)


def test_symmetric_R_matches_table_mix():
    eta = (0.0, math.sqrt(1.0 / 3.0), math.sqrt(2.0 / 3.0))
    with pytest.warns(UserWarning):
        total, tables = dists.symmetric_R(4, 2, 2, eta)
    expected = float(tables[1]) / 3.0 + 2.0 * float(tables[2]) / 3.0
    assert abs(total - expected) < 1e-12
    assert abs(total - 2.9375) < 1e-12


def test_symmetric_R_rejects_unnormalized():
    with pytest.raises(dists.DomainError):
        dists.symmetric_R(4, 1, 2, (0.5, 0.5))


def test_truncation_and_trailing_mass():
    assert dists.damped_truncation_mass(2, 1) == Fraction(3, 4)
    assert dists.trailing_zero_mass(5, 1, 6) == Fraction(5, 6)
    assert dists.trailing_zero_mass(7, 2, 8) == Fraction(3, 4)


def test_kept_weight_masses_normalize():
    masses = dists.kept_weight_masses(3, 2)
    assert sum(masses.values()) == 1
    assert set(masses) == {0, 1, 2}


def test_transcendental_brackets_are_tight_and_sound():
    """The series brackets sit on the correct side and within float error."""
    e2 = float(dists.e_squared_lower())
    assert e2 <= math.exp(2.0) <= e2 + 1e-9
    tf = float(dists.two_e_fourth_lower())
    assert tf <= 2.0 * math.exp(4.0) <= tf + 1e-7
    up = float(dists.exp_neg_upper(Fraction(2)))
    assert math.exp(-2.0) <= up <= math.exp(-2.0) + 1e-9


@given(
    st.integers(1, 24).flatmap(
        lambda m: st.tuples(st.just(m), st.integers(1, min(m, 5)))
    )
)
def test_hit_floor_property(point):
    """Hitting total weight k with k samples is at least (k/(k+1))^k likely."""
    m, k = point
    assert dists.hybrid_hit_prob(m, k, k, k) >= Fraction(k, k + 1) ** k


@given(
    st.integers(1, 12).flatmap(
        lambda m: st.tuples(st.just(m), st.integers(1, min(m, 4)))
    )
)
def test_domination_property(point):
    """Damped masses never exceed four times the matching binomial masses."""
    m, k = point
    dist = dists.damped_binomial(m, k)
    for j in range(1, k + 1):
        assert dist.pmf(j) <= 4 * dists.binomial_pmf(m, Fraction(1, m), j)
