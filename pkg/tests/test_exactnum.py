"""Tests for the exact-arithmetic foundation.

Oracle policy: Laurent/Taylor data for Gamma is checked against direct
mpmath evaluation at nearby points (an independent implementation);
constants are checked against independently computed high-precision
values; algebraic identities are exercised with hypothesis.
"""

import mpmath
import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from resurgentqm.exactnum import (
    BigComplex, BigFloat, ConstantPoly, EPoly, GammaLaurent, GSeries,
    LogLaurentSeries, bernoulli_number, constant_eval, gamma_laurent,
    rat, rat_from_str, rat_to_str, series_reverse,
)

# ---------------------------------------------------------------- rationals


def test_rat_str_roundtrip():
    q = rat(-35, 105)
    s = rat_to_str(q)
    assert s == "-1/3"          # lowest terms, sign on numerator
    assert rat_from_str(s) == q
    assert rat_from_str("7") == 7


def test_rat_lowest_terms():
    q = rat(6, 4)
    assert q.numerator == 3 and q.denominator == 2


@given(st.integers(-10**6, 10**6), st.integers(1, 10**6))
def test_rat_roundtrip_random(p, q):
    x = rat(p, q)
    assert rat_from_str(rat_to_str(x)) == x


def test_bernoulli():
    assert bernoulli_number(0) == 1
    assert bernoulli_number(1) == mpq(-1, 2)
    assert bernoulli_number(2) == mpq(1, 6)
    assert bernoulli_number(8) == mpq(-1, 30)
    assert bernoulli_number(10) == mpq(5, 66)
    assert bernoulli_number(12) == mpq(-691, 2730)
    assert bernoulli_number(7) == 0


# ---------------------------------------------------------------- ConstantPoly

rationals = st.builds(lambda p, q: mpq(p, q),
                      st.integers(-50, 50), st.integers(1, 20))


def small_constpoly():
    mono = st.tuples(st.integers(0, 2),
                     st.tuples(*[st.integers(0, 1)] * 6))
    return st.dictionaries(mono, rationals, max_size=4).map(ConstantPoly)


def test_constpoly_basic():
    g = ConstantPoly.gamma_const()
    z2 = ConstantPoly.zeta(2)
    p = g * g * 3 + z2 * mpq(1, 2)
    assert p.terms[(2, (0, 0, 0, 0, 0, 0))] == 3
    assert p.terms[(0, (1, 0, 0, 0, 0, 0))] == mpq(1, 2)
    assert (p - p) == ConstantPoly()
    assert not (p - p)


def test_constpoly_pi_canonicalization():
    # pi^2 -> 6 zeta2, pi^4 -> 90 zeta4, pi^6 -> 945 zeta6
    assert ConstantPoly.pi_power(2) == ConstantPoly.zeta(2) * 6
    assert ConstantPoly.pi_power(4) == ConstantPoly.zeta(4) * 90
    assert ConstantPoly.pi_power(6) == ConstantPoly.zeta(6) * 945
    with pytest.raises(ValueError):
        ConstantPoly.pi_power(3)
    # numeric confirmation at 60 digits
    for n in (2, 4, 6):
        v = constant_eval(ConstantPoly.pi_power(n), 256)
        with mpmath.workprec(256):
            assert abs(v.value - mpmath.pi ** n) < mpmath.mpf(2) ** -240


def test_constpoly_zeta_range():
    ConstantPoly.zeta(7)
    with pytest.raises(ValueError):
        ConstantPoly.zeta(8)


def test_constpoly_weights():
    # (3/2) gamma^2 + zeta2/2 is weight-homogeneous of weight 2
    p = ConstantPoly.gamma_const(2) * mpq(3, 2) + ConstantPoly.zeta(2) * mpq(1, 2)
    assert p.monomial_weights() == {2}
    # (8/3) gamma^3 + 2 gamma zeta2 + (1/3) zeta3 has weight 3
    q = (ConstantPoly.gamma_const(3) * mpq(8, 3)
         + ConstantPoly.gamma_const() * ConstantPoly.zeta(2) * 2
         + ConstantPoly.zeta(3) * mpq(1, 3))
    assert q.monomial_weights() == {3}


@settings(max_examples=60)
@given(small_constpoly(), small_constpoly(), small_constpoly())
def test_constpoly_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@settings(max_examples=30)
@given(small_constpoly())
def test_constpoly_json_roundtrip(p):
    assert ConstantPoly.from_json(p.to_json()) == p


def test_constant_eval_gamma():
    # Euler's constant by an independent oracle: gamma = -Gamma'(1), via
    # high-precision numerical differentiation of log Gamma.
    v = constant_eval(ConstantPoly.gamma_const(), 333)  # ~100 digits
    with mpmath.workprec(400):
        oracle = -mpmath.diff(mpmath.loggamma, mpmath.mpf(1))
        assert abs(v.value - oracle) < mpmath.mpf(2) ** -330
    assert v.to_str(10).startswith("0.577215664")


def test_constant_eval_table_entry():
    # weight-3 four-instanton constant: (8/3)g^3 + 2 g z2 + z3/3 ~ 2.829
    p = (ConstantPoly.gamma_const(3) * mpq(8, 3)
         + ConstantPoly.gamma_const() * ConstantPoly.zeta(2) * 2
         + ConstantPoly.zeta(3) * mpq(1, 3))
    v = constant_eval(p, 128)
    assert 2.7 < float(v.value) < 2.9


# ---------------------------------------------------------------- EPoly


def test_epoly_basic():
    p = EPoly([rat(25, 4), 0, 35], 1)      # 35 E^3 + 25/4 E
    assert p.coeff(3) == 35
    assert p.coeff(1) == mpq(25, 4)
    assert p.max_power == 3
    q = p * p
    assert q.coeff(6) == 35 * 35
    assert q.coeff(2) == mpq(625, 16)
    assert q.coeff(4) == 2 * 35 * mpq(25, 4)


def test_epoly_trim_and_laurent():
    p = EPoly([0, 1, 0], -1)
    assert p.min_power == 0 and p.coeffs == (mpq(1),)
    lp = EPoly([1, 0, 2], -2)               # E^-2 + 2
    assert lp.is_laurent()
    assert lp.coeff(-2) == 1 and lp.coeff(0) == 2
    assert (lp * EPoly([1], 2)).min_power == 0


def test_epoly_deriv_and_subst():
    p = EPoly([0, 0, 0, 1], 0)              # E^3
    assert p.deriv() == EPoly([0, 0, 3], 0)
    # E -> 2X + 1: (2X+1)^3 = 8X^3 + 12X^2 + 6X + 1
    s = p.subst_linear(2, 1)
    assert s == EPoly([1, 6, 12, 8], 0)


# ---------------------------------------------------------------- GSeries


def test_gseries_arith_and_truncation():
    # f = E + g*(3E^2 + 1/4)
    f = GSeries([EPoly([0, 1]), EPoly([rat(1, 4), 0, 3])], 0)
    g2 = f * f
    assert g2.truncation_order == 1
    assert g2.coeff(0) == EPoly([0, 0, 1])
    assert g2.coeff(1) == EPoly([0, rat(1, 2), 0, 6])


def test_gseries_min_power_reserved():
    a = GSeries([EPoly.const(rat(1, 3)), EPoly(), EPoly([0, 0, 17])], -1)
    assert a.min_g_power == -1
    assert a.coeff(-1) == EPoly.const(rat(1, 3))
    assert a.truncation_order == 1


def test_gseries_subst_E():
    # B(E,g) = E + g(3E^2+1/4) at E = 1/2 - g gives B to O(g^2)
    B = GSeries([EPoly([0, 1]), EPoly([rat(1, 4), 0, 3])], 0)
    E = GSeries([EPoly.const(rat(1, 2)), EPoly.const(-1)], 0)
    out = B.subst_E(E)
    assert out.coeff(0) == EPoly.const(rat(1, 2))
    assert out.coeff(1) == EPoly.const(-1 + rat(3, 4) + rat(1, 4))


def test_gseries_json_roundtrip():
    f = GSeries([EPoly([0, 1]), EPoly([rat(1, 4), 0, 3])], 0)
    data = f.to_json()
    assert data["min_g_power"] == 0
    assert GSeries.from_json(data) == f


# ---------------------------------------------------------------- LogLaurent


def test_logseries_invariants():
    LogLaurentSeries({(0, 1, 3): rat(175, 16)})        # E^0 log term is fine
    LogLaurentSeries({(-7, 0, 7): 1})
    with pytest.raises(ValueError):
        LogLaurentSeries({(0, 2, 0): 1})
    with pytest.raises(ValueError):
        LogLaurentSeries({(0, 0, -2): 1})
    with pytest.raises(ValueError):
        LogLaurentSeries({(-8, 0, 0): 1})
    with pytest.raises(ValueError):
        LogLaurentSeries({(-1, 1, 0): 1})


def test_logseries_numeric_and_json():
    # 2E ln(Eg/2) - 2E at E=3, g=1/10
    s = LogLaurentSeries({(1, 1, 0): 2, (1, 0, 0): -2})
    v = s.eval_numeric(3, rat(1, 10))
    with mpmath.workprec(200):
        expect = 6 * mpmath.log(mpmath.mpf(3) / 20) - 6
        assert abs(v - expect) < 1e-40
    assert LogLaurentSeries.from_json(s.to_json()) == s


# ---------------------------------------------------------------- GammaLaurent


def _gamma_laurent_numeric_check(center, order, h=mpq(1, 10**8), prec=400):
    gl = gamma_laurent(center, order)
    with mpmath.workprec(prec):
        z = mpmath.mpf(center) + mpmath.mpf(h.numerator) / mpmath.mpf(h.denominator)
        direct = mpmath.gamma(z)
        approx = gl.eval_numeric(z, prec)
        # truncation error ~ h^(order+1)
        tol = mpmath.mpf(h.numerator / h.denominator) ** (order + 1) * 10
        assert abs(direct - approx) < tol, (center, order, direct, approx)


def test_gamma_laurent_center0():
    gl = gamma_laurent(0, 1)
    assert gl.residue() == ConstantPoly.rational(1)
    assert gl.coeff(0) == -ConstantPoly.gamma_const()
    expect = (ConstantPoly.gamma_const(2) + ConstantPoly.zeta(2)) * mpq(1, 2)
    assert gl.coeff(1) == expect
    _gamma_laurent_numeric_check(0, 1)


def test_gamma_laurent_center_minus1():
    gl = gamma_laurent(-1, 0)
    assert gl.residue() == ConstantPoly.rational(-1)
    assert gl.coeff(0) == ConstantPoly.gamma_const() - 1
    _gamma_laurent_numeric_check(-1, 0)


@pytest.mark.parametrize("center", [0, -1, -2, -3, -5])
def test_gamma_laurent_residues(center):
    gl = gamma_laurent(center, 2)
    n = -center
    fact = 1
    for k in range(2, n + 1):
        fact *= k
    assert gl.residue() == ConstantPoly.rational(rat((-1) ** n, fact))
    _gamma_laurent_numeric_check(center, 2)


def test_gamma_laurent_deep_order_numeric():
    _gamma_laurent_numeric_check(-2, 5, h=mpq(1, 10**6))


def test_gamma_laurent_errors():
    with pytest.raises(ValueError):
        gamma_laurent(1, 2)
    with pytest.raises(ValueError):
        gamma_laurent(0, 7)     # would need zeta(8)


# ---------------------------------------------------------------- floats


def test_bigfloat_min_precision_rule():
    a = BigFloat("1.5", 256)
    b = BigFloat("2.25", 128)
    c = a * b
    assert c.prec == 128
    assert (a + 1).prec == 256          # exact operands keep precision
    assert (a * rat(1, 3)).prec == 256
    with pytest.raises(ValueError):
        BigFloat("1.0", 32)


def test_bigfloat_values():
    x = BigFloat.from_rational(rat(1, 3), 333)
    assert x.to_str(12).startswith("0.3333333333")
    y = x.sqrt()
    with mpmath.workprec(333):
        assert abs(y.value ** 2 - x.value) < mpmath.mpf(2) ** -320


def test_bigcomplex():
    z = BigComplex(1j, 128)
    w = z * z
    assert w.real.value == -1
    assert w.prec == 128
    assert abs(BigComplex(3 + 4j, 128)).value == 5


# ---------------------------------------------------------------- reversion


def catalan(n):
    c = [rat(1)]
    for i in range(n):
        c.append(c[-1] * 2 * (2 * i + 1) / (i + 2))
    return c


def test_series_reverse_identity():
    f = GSeries([0, 1, 0, 0], 0)
    h = series_reverse(f)
    assert h.coeff(1) == EPoly.const(1)
    assert all(not h.coeff(i) for i in (2, 3))


def test_series_reverse_catalan():
    # inverse of x + x^2 has coefficients (-1)^(n+1) * Catalan(n-1)
    n = 9
    f = GSeries([0, 1, 1] + [0] * (n - 2), 0)
    h = series_reverse(f)
    cat = catalan(n)
    for k in range(1, n + 1):
        assert h.coeff(k).coeff(0) == (-1) ** (k + 1) * cat[k - 1], k
    # and compose back: f(h(x)) = x
    comp = _compose_univariate(f, h)
    assert comp.coeff(1) == EPoly.const(1)
    assert all(not comp.coeff(i) for i in range(2, n + 1))


def _compose_univariate(f, h):
    out = GSeries.zero(f.truncation_order)
    pw = GSeries.const(1, f.truncation_order)
    for i in range(f.truncation_order + 1):
        c = f.coeff(i).coeff(0)
        if c:
            out = out + pw * c
        pw = pw * h
    return out


@settings(max_examples=40, deadline=None)
@given(st.lists(rationals, min_size=2, max_size=6))
def test_series_reverse_involution(cs):
    if not cs[0]:
        cs[0] = mpq(1)
    n = len(cs) + 1
    f = GSeries([0] + cs + [0] * (n - len(cs) - 1), 0)
    h = series_reverse(f)
    back = series_reverse(h)
    for k in range(1, n + 1):
        assert back.coeff(k) == f.coeff(k)


def test_series_reverse_errors():
    with pytest.raises(ValueError):
        series_reverse(GSeries([1, 1], 0))          # constant term
    with pytest.raises(ValueError):
        series_reverse(GSeries([0, 0, 1], 0))       # no linear term
    with pytest.raises(ValueError):
        series_reverse(GSeries([EPoly(), EPoly([0, 1])], 0))   # non-constant


def test_gseries_g_scale_and_recip():
    # f = 1 + 2g + 3g^2 E
    f = GSeries([EPoly.const(1), EPoly.const(2), EPoly([0, 3])], 0)
    s = f.g_scale(mpq(-1, 2))
    assert s.coeff(1) == EPoly.const(-1)
    assert s.coeff(2) == EPoly([0, mpq(3, 4)])
    r = f.recip()
    prod = (f * r).truncate(f.truncation_order)
    assert prod.coeff(0) == EPoly.const(1)
    assert all(not prod.coeff(i) for i in range(1, 3))
    with pytest.raises(ValueError):
        GSeries([EPoly(), EPoly.const(1)], 0).recip()          # zero head
    with pytest.raises(ValueError):
        GSeries([EPoly([0, 1]), EPoly.const(1)], 0).recip()    # E-dependent head
