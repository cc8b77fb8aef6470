"""Field, order, valuation and truncation behaviour of the formal scalars."""

from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from gnsdeform.scalars import (
    CRational,
    FormalScalar,
    IndeterminateError,
    ScalarDomainError,
    ZERO,
    ONE,
    I_UNIT,
    agree_below,
    as_scalar,
    const,
    distance_valuation,
    lam,
    make_series,
)


def test_make_series_merges_duplicates():
    s = make_series([(1, 1), (1, 2)])
    assert s == make_series([(1, 3)])
    assert str(s) == "(3)*lam"


def test_make_series_zero():
    s = make_series([(0, 0)])
    assert s.is_zero
    assert s.valuation() is None


def test_make_series_rational_exponents():
    s = make_series([(-1, 1), (F(1, 2), 1)])
    assert s.terms[0][0] == F(-1)
    assert s.terms[1][0] == F(1, 2)


def test_make_series_drops_terms_at_or_above_trunc():
    s = make_series([(0, 1), (2, 5)], trunc=2)
    assert [e for e, _ in s.terms] == [0]
    assert s.trunc == 2


def test_difference_of_squares_with_half_exponent():
    a = ONE + lam(F(1, 2))
    b = ONE - lam(F(1, 2))
    assert a * b == ONE - lam()


def test_laurent_inverse_monomial():
    assert lam(-1) * lam() == ONE


def test_truncation_propagation_mul():
    a = make_series([(0, 1), (1, 1)], trunc=2)  # 1 + lam + O(lam^2)
    b = make_series([(0, 1)], trunc=1)          # 1 + O(lam)
    prod = a * b
    assert prod.trunc == 1
    # no discrepancy below order 1 against the untruncated product
    exact = (ONE + lam()) * ONE
    assert agree_below(prod, exact, 1)


def test_inverse_examples():
    assert lam().inverse(5) == lam(-1)
    inv = (ONE - lam()).inverse(4)
    assert [(e, c.re) for e, c in inv.terms] == [(0, 1), (1, 1), (2, 1), (3, 1)]
    assert inv.trunc == 4
    assert agree_below((ONE - lam()) * inv, ONE, 4)
    assert const(2).inverse(3) == const(F(1, 2))


def test_inverse_errors():
    with pytest.raises(ZeroDivisionError):
        ZERO.inverse(3)
    hidden = make_series([], trunc=4)
    with pytest.raises(IndeterminateError):
        hidden.inverse(2)


def test_conj():
    assert (I_UNIT * lam()).conj() == -(I_UNIT * lam())
    s = ONE + lam()
    assert s.conj() == s


def test_valuation_and_ultrametric_example():
    s = lam(2) + lam(3)
    assert s.valuation() == 2
    assert ZERO.valuation() is None
    assert distance_valuation(lam(), lam() + lam(3)) == 3


def test_valuation_indeterminate():
    with pytest.raises(IndeterminateError):
        make_series([], trunc=5).valuation()


def test_order_is_non_archimedean():
    assert lam() > ZERO
    assert ONE - 1000 * lam() > ZERO
    assert lam(-1) > const(10**6)
    # lam is below every positive rational
    assert lam() < const(F(1, 10**9))


def test_compare_rejects_complex():
    with pytest.raises(ScalarDomainError):
        I_UNIT.compare(ZERO)


def test_compare_indeterminate():
    a = make_series([(0, 1)], trunc=1)
    b = make_series([(0, 1)], trunc=2)
    with pytest.raises(IndeterminateError):
        a.compare(b)


def test_sqrt_examples():
    assert (const(4) * lam(2)).sqrt(6) == 2 * lam()
    assert lam().sqrt(4) == lam(F(1, 2))
    s = (ONE + lam()).sqrt(3)
    assert [(e, c.re) for e, c in s.terms] == [(0, 1), (1, F(1, 2)), (2, F(-1, 8))]
    assert agree_below(s * s, ONE + lam(), 3)


def test_sqrt_errors():
    with pytest.raises(ScalarDomainError):
        (-lam()).sqrt(3)
    with pytest.raises(ScalarDomainError):
        ZERO.sqrt(3)
    with pytest.raises(ScalarDomainError):
        const(2).sqrt(3)  # sqrt(2) leaves the rationals


def test_evaluate():
    v, exact = (ONE + 2 * lam()).evaluate(F(1, 10))
    assert exact and v == CRational(F(6, 5))
    v, exact = lam(F(1, 2)).evaluate(F(1, 4))
    assert exact and v == CRational(F(1, 2))
    v, exact = make_series([(0, 1), (1, 1)], trunc=2).evaluate(F(1, 10))
    assert not exact and v == CRational(F(11, 10))
    with pytest.raises(ScalarDomainError):
        lam(F(1, 2)).evaluate(F(1, 3))


def test_evaluate_negative_exponent():
    v, exact = lam(-2).evaluate(F(1, 2))
    assert exact and v == CRational(4)


def test_json_round_trip():
    s = make_series([(F(-1, 2), CRational(F(1, 3), F(-2, 5))), (2, 7)], trunc=F(7, 2))
    assert FormalScalar.from_json(s.to_json()) == s
    assert FormalScalar.from_json(ZERO.to_json()) == ZERO


# -- randomized field/order laws ----------------------------------------------

coeffs = st.fractions(min_value=-30, max_value=30, max_denominator=8)
exponents = st.fractions(min_value=-3, max_value=3, max_denominator=2)


@st.composite
def scalars(draw, real=False, nonzero=False):
    n = draw(st.integers(min_value=0, max_value=4))
    pairs = []
    for _ in range(n):
        e = draw(exponents)
        re = draw(coeffs)
        im = F(0) if real else draw(coeffs)
        pairs.append((e, CRational(re, im)))
    s = make_series(pairs)
    if nonzero and s.is_zero:
        s = s + ONE
    return s


@settings(max_examples=200, deadline=None)
@given(scalars(), scalars(), scalars())
def test_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert a + ZERO == a
    assert a * ONE == a
    assert a + (-a) == ZERO


@settings(max_examples=100, deadline=None)
@given(scalars(nonzero=True))
def test_inverse_round_trip(a):
    inv = a.inverse(a.valuation() + 10)
    assert agree_below(a * inv, ONE, 10)


@settings(max_examples=100, deadline=None)
@given(scalars(real=True, nonzero=True), scalars(real=True, nonzero=True))
def test_order_axioms(a, b):
    sa, sb = a.compare(ZERO), b.compare(ZERO)
    if sa > 0 and sb > 0:
        assert (a + b).compare(ZERO) > 0
        assert (a * b).compare(ZERO) > 0
    # trichotomy
    assert a.compare(ZERO) in (-1, 1) or a.is_zero


@settings(max_examples=200, deadline=None)
@given(scalars(real=True), scalars(real=True))
def test_abs_value_laws(a, b):
    # |ab| = |a||b| in exponent form, and the ultrametric triangle law
    if a.is_zero or b.is_zero:
        assert (a * b).is_zero
        return
    oa, ob = a.valuation(), b.valuation()
    assert (a * b).valuation() == oa + ob
    s = a + b
    if not s.is_zero:
        assert s.valuation() >= min(oa, ob)
        if oa != ob:
            assert s.valuation() == min(oa, ob)


@settings(max_examples=100, deadline=None)
@given(scalars(), scalars())
def test_conj_is_automorphism(a, b):
    assert (a * b).conj() == a.conj() * b.conj()
    assert (a + b).conj() == a.conj() + b.conj()
    assert a.conj().conj() == a


def test_lambda_powers_escape_every_order():
    # for every rational q there is n with o(lam^n) > q
    for q in [F(0), F(7, 2), F(100), F(999, 7)]:
        n = int(q) + 1
        assert (lam() ** n).valuation() > q


@settings(max_examples=100, deadline=None)
@given(scalars(), scalars(), st.integers(min_value=1, max_value=20))
def test_evaluate_is_ring_homomorphism(a, b, denom):
    hbar = F(1, denom)
    # integer exponents only, to stay within exact roots for arbitrary hbar
    ai = make_series([(e.numerator, c) for e, c in a.terms if e.denominator == 1])
    bi = make_series([(e.numerator, c) for e, c in b.terms if e.denominator == 1])
    va, _ = ai.evaluate(hbar)
    vb, _ = bi.evaluate(hbar)
    vab, _ = (ai * bi).evaluate(hbar)
    vs, _ = (ai + bi).evaluate(hbar)
    assert vab == va * vb
    assert vs == va + vb
