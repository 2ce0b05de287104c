"""Tests for the quadratic extension arithmetic layer."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lmtool.qext import (
    BaseFieldSpec,
    FElement,
    Q2,
    QuadExtension,
    classify_extensions,
    eisenstein_params,
    inverse_different,
    is_square_q2,
    lambda_delta,
    val2,
)

EXT_RU3 = eisenstein_params(3).extension          # t = 2, pi0 = -2
EXT_RU3_PAPERSIGN = QuadExtension.ru(-2, -2)      # t = -2, pi0 = -2
EXT_RP2 = QuadExtension.rp_from_sqrt(2)           # pi^2 = 2, pi0 = -2
EXT_RPM2 = QuadExtension.rp_from_sqrt(-2)         # pi^2 = -2, pi0 = 2


def test_val2_basics():
    assert val2(8) == 3
    assert val2(Fraction(3, 4)) == -2
    assert val2(Fraction(-6)) == 1


def test_square_classes_q2():
    assert is_square_q2(Fraction(1))
    assert is_square_q2(Fraction(4))
    assert is_square_q2(Fraction(9, 25))
    assert is_square_q2(Fraction(17))
    assert not is_square_q2(Fraction(3))
    assert not is_square_q2(Fraction(-1))
    assert not is_square_q2(Fraction(2))
    assert not is_square_q2(Fraction(5))


def test_census_q2_counts():
    c = classify_extensions(Q2)
    assert c.square_classes == 8
    assert (c.total, c.rp, c.ru, c.unramified, c.ru_matched) == (7, 4, 2, 1, 2)
    reps = dict(c.representatives)
    assert sorted(reps) == [2, 3, 5, 6, 7, 10, 14]
    assert sum(1 for v in reps.values() if v == "RP") == 4
    assert sum(1 for v in reps.values() if v == "RU") == 2
    # every representative is a 2-adic nonsquare and the classes are distinct
    for r in reps:
        assert not is_square_q2(r)
    for a in reps:
        for b in reps:
            if a != b:
                assert not is_square_q2(Fraction(a, b))


def test_census_generic_formulas():
    base = BaseFieldSpec(e=2, f=1, mode="generic-parameters")
    c = classify_extensions(base)
    assert c.square_classes == 2**4
    assert c.total == 15
    assert c.rp == 8
    assert c.ru == 6
    assert c.ru_matched == 2
    base2 = BaseFieldSpec(e=1, f=2, mode="generic-parameters")
    c2 = classify_extensions(base2)
    assert (c2.total, c2.rp, c2.ru, c2.ru_matched) == (15, 8, 6, 6)


def test_eisenstein_params_theta3():
    p = eisenstein_params(3)
    assert p.level == 1 and p.i == 1
    assert p.u == 1
    assert p.t == 2 and p.pi0 == -2
    assert p.ord_t == 1
    ext = p.extension
    assert ext.theta == 3
    assert ext.epsilon == 2


def test_eisenstein_params_theta_minus1():
    p = eisenstein_params(-1)
    assert p.t == 2 and p.pi0 == 2
    assert p.extension.theta == -1


def test_eisenstein_params_rejects_squares():
    with pytest.raises(ValueError, match="square class trivial"):
        eisenstein_params(1)
    with pytest.raises(ValueError, match="square class trivial"):
        eisenstein_params(9)
    with pytest.raises(ValueError, match="square class trivial"):
        eisenstein_params(17)


def test_eisenstein_params_rejects_unramified():
    with pytest.raises(ValueError, match="unramified"):
        eisenstein_params(5)
    with pytest.raises(ValueError, match="unit"):
        eisenstein_params(2)


def test_minimal_polynomial_identities():
    for ext in (EXT_RU3, EXT_RU3_PAPERSIGN, EXT_RP2, EXT_RPM2):
        pi = ext.pi()
        lhs = pi * pi - ext.t * pi + ext.from_base(ext.pi0)
        assert lhs.is_zero()
        assert pi.conj() == ext.pibar()
        assert (pi + pi.conj()).a == ext.t
        assert (pi * pi.conj()).a == ext.pi0
        assert (pi * pi.conj()).b == 0


def test_sqrt_theta_identities():
    for ext in (EXT_RU3, EXT_RU3_PAPERSIGN):
        s = ext.sqrt_theta()
        sq = s * s
        assert sq.b == 0 and sq.a == ext.theta
        # t*sqrt(theta) = t - 2*pi = conj(pi) - pi
        lhs = s * ext.t
        rhs = ext.pibar() - ext.pi()
        assert lhs == rhs


def test_theta_value():
    assert EXT_RU3.theta == 3
    assert EXT_RU3_PAPERSIGN.theta == 3
    assert EXT_RP2.theta is None


def test_valuations():
    pi = EXT_RU3.pi()
    assert pi.valuation() == Fraction(1, 2)
    assert EXT_RU3.from_base(2).valuation() == 1
    assert (pi * pi).valuation() == 1
    assert EXT_RU3.from_base(0).valuation() == float("inf")


def test_inverse_different_exponents():
    assert inverse_different(EXT_RU3).exponent == Fraction(-1)
    assert inverse_different(EXT_RP2).exponent == Fraction(-3, 2)
    assert inverse_different(EXT_RPM2).exponent == Fraction(-3, 2)


def test_lambda_delta_values():
    ld = lambda_delta(EXT_RU3)
    assert ld.delta == Fraction(-1, 2)
    assert (ld.lam + ld.lam.conj()) == EXT_RU3.one()
    ld2 = lambda_delta(EXT_RP2)
    assert ld2.delta == Fraction(-1)
    assert (ld2.lam + ld2.lam.conj()) == EXT_RP2.one()


def test_serialization_roundtrip():
    for ext in (EXT_RU3, EXT_RP2):
        again = QuadExtension.from_dict(ext.to_dict())
        assert again.ext_type == ext.ext_type
        assert again.t == ext.t and again.pi0 == ext.pi0
    x = FElement(EXT_RU3, Fraction(3, 4), Fraction(-5, 2))
    y = FElement.from_dict(EXT_RU3, x.to_dict())
    assert x == y


def test_extension_validation_errors():
    with pytest.raises(ValueError):
        QuadExtension.ru(0, 2)
    with pytest.raises(ValueError):
        QuadExtension.rp(2, Q2).__class__("RP", Fraction(1), Fraction(2))
    with pytest.raises(ValueError):
        QuadExtension.ru(2, 4)        # pi0 valuation 2
    with pytest.raises(ValueError):
        QuadExtension.ru(4, 2)        # t valuation 2
    with pytest.raises(ValueError):
        QuadExtension.rp(1)           # pi0 must be a uniformizer times unit


rationals = st.fractions(
    min_value=-100, max_value=100, max_denominator=64
)


def felements(ext):
    return st.builds(lambda a, b: FElement(ext, a, b), rationals, rationals)


@settings(max_examples=150, deadline=None)
@given(x=felements(EXT_RU3), y=felements(EXT_RU3))
def test_conj_is_ring_involution(x, y):
    assert x.conj().conj() == x
    assert (x + y).conj() == x.conj() + y.conj()
    assert (x * y).conj() == x.conj() * y.conj()


@settings(max_examples=150, deadline=None)
@given(x=felements(EXT_RP2), y=felements(EXT_RP2))
def test_conj_is_ring_involution_rp(x, y):
    assert (x * y).conj() == x.conj() * y.conj()


@settings(max_examples=150, deadline=None)
@given(x=felements(EXT_RU3))
def test_norm_trace_match_char_poly(x):
    # x^2 - Tr(x) x + N(x) = 0
    lhs = x * x - x.trace() * x + EXT_RU3.from_base(x.norm())
    assert lhs.is_zero()
    assert x.norm() == (x * x.conj()).a
    assert (x * x.conj()).b == 0
    assert x.trace() == (x + x.conj()).a


@settings(max_examples=150, deadline=None)
@given(x=felements(EXT_RU3), y=felements(EXT_RU3))
def test_valuation_is_multiplicative_and_ultrametric(x, y):
    if x.is_zero() or y.is_zero():
        return
    assert (x * y).valuation() == x.valuation() + y.valuation()
    s = x + y
    if not s.is_zero():
        assert s.valuation() >= min(x.valuation(), y.valuation())


@settings(max_examples=100, deadline=None)
@given(x=felements(EXT_RU3))
def test_inverse(x):
    if x.is_zero():
        return
    assert x * x.inverse() == EXT_RU3.one()
