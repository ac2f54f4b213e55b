"""WKB tunneling series and regularized contour integrals.

The decaying Riccati solution S(q) = sum_k g^k S_k(q) of

    g S'(q) - S(q)^2 + U(q)^2 - 2 g E = 0          (2V = U^2, + optional tilt)

is expanded at fixed gE.  Contour integrals (1/g) oint g^k S_k around the
classically forbidden region produce, per order in g, Laurent polynomials in
E plus single powers of ln(Eg/2).  Three independent regularizations are
implemented and must agree:

* Subtraction: expand in powers of 2gE, reduce each term to a Beta-type
  integral, continue the summation index n -> n + eta, drop the bare 1/eta
  poles and keep finite parts.  Works for the whole S_k tower.
* EpsilonSplit: split the integration range at a formal distance eps from
  the wells, expand each region, and check that every power of eps and
  ln(eps) cancels exactly in the sum.  Double-well geometry.
* MellinResidue: closed Gamma-function form of the Mellin transform of the
  two leading WKB orders; residues at integer points give the same series.

The instanton function A(E,g) then follows by subtracting, once per well,
the large-argument expansion of ln Gamma(1/2 - B) combined with the
B ln(-g/2C) factor of the quantization condition; every logarithm must
cancel in that step, which the assembly verifies term by term.
"""

import functools

import mpmath
from gmpy2 import mpq

from .exactnum import (BigFloat, ConstantPoly, EPoly, GSeries,
                       LogLaurentSeries, QONE, QZERO, bernoulli_number,
                       gamma_laurent, rat)
from .potentials import PotentialSpec, InstantonGeometry, geometry
from .perturbation import b_function

__all__ = ["WkbTerm", "RegularizedIntegral", "wkb_terms",
           "contour_integral_subtraction", "contour_integral_eps",
           "mellin_closed_form", "MellinForm", "gamma_asymptotics",
           "a_function", "symmetric_order_g"]


# ----------------------------------------------------------------------
# a small commutative ring of the constants that appear in intermediate
# regularized expressions: gamma, zeta(2..7), ln 2, ln(Eg/2), ln g and
# half-integer powers of pi via sqrt(pi).  Keys are exponent tuples
# (gamma, z2, z3, z4, z5, z6, z7, ln2, L, lng, sqrtpi); values mpq.
# Everything transcendental must cancel before a result is reported, so
# the ring only ever holds tiny polynomials.

_NSLOT = 11
_ZERO_KEY = (0,) * _NSLOT
_SLOT_GAMMA, _SLOT_LN2, _SLOT_L, _SLOT_LNG, _SLOT_SQRTPI = 0, 7, 8, 9, 10


class _Sym:
    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = dict(terms) if terms else {}

    @classmethod
    def rational(cls, q):
        q = mpq(q)
        return cls({_ZERO_KEY: q} if q else None)

    @classmethod
    def unit(cls, slot, q=1):
        key = tuple(1 if i == slot else 0 for i in range(_NSLOT))
        return cls({key: mpq(q)})

    def __bool__(self):
        return bool(self.terms)

    def __add__(self, other):
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k, QZERO) + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return _Sym(out)

    def __neg__(self):
        return _Sym({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, mpq) or isinstance(other, int):
            q = mpq(other)
            if not q:
                return _Sym()
            return _Sym({k: c * q for k, c in self.terms.items()})
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                s = out.get(k, QZERO) + c1 * c2
                if s:
                    out[k] = s
                else:
                    out.pop(k, None)
        return _Sym(out)

    __rmul__ = __mul__

    def scale_sqrtpi(self, n):
        """Multiply by sqrt(pi)^n (n may be negative)."""
        return _Sym({tuple(e + (n if i == _SLOT_SQRTPI else 0)
                           for i, e in enumerate(k)): c
                     for k, c in self.terms.items()})

    def rational_part(self):
        return self.terms.get(_ZERO_KEY, QZERO)

    def slot_coeff(self, slot):
        """Coefficient of the first power of one symbol, others zero."""
        key = tuple(1 if i == slot else 0 for i in range(_NSLOT))
        return self.terms.get(key, QZERO)

    def is_rational(self):
        return all(k == _ZERO_KEY for k in self.terms)

    def pure_log_parts(self):
        """Split into (rational, L-coeff) and assert nothing else remains."""
        lkey = tuple(1 if i == _SLOT_L else 0 for i in range(_NSLOT))
        rat_c = self.terms.get(_ZERO_KEY, QZERO)
        l_c = self.terms.get(lkey, QZERO)
        leftover = {k: c for k, c in self.terms.items()
                    if k not in (_ZERO_KEY, lkey)}
        if leftover:
            raise ArithmeticError(
                "transcendental constants failed to cancel: %r" % (leftover,))
        return rat_c, l_c

    def __repr__(self):
        return "_Sym(%r)" % (self.terms,)


def _sym_from_constantpoly(cp):
    """Convert an exactnum ConstantPoly (gamma/zeta ring) into _Sym."""
    out = {}
    for key, c in cp.terms.items():
        gexp, zetas = key
        full = (gexp,) + tuple(zetas[:6]) + (0, 0, 0, 0)
        if len(zetas) > 6 and any(zetas[6:]):
            raise ValueError("zeta weight outside supported ring")
        out[full] = c
    return _Sym(out)


# η-jets: truncated Laurent series in the continuation parameter, with
# _Sym coefficients.  Window [-2, +2] is enough for single poles hit by
# at most one more finite-order factor.

_ETA_LO, _ETA_HI = -2, 2


class _EtaJet:
    __slots__ = ("c",)

    def __init__(self, coeffs=None):
        self.c = dict(coeffs) if coeffs else {}

    @classmethod
    def const(cls, sym):
        return cls({0: sym} if sym else None)

    def __mul__(self, other):
        out = {}
        for p1, s1 in self.c.items():
            for p2, s2 in other.c.items():
                p = p1 + p2
                if p > _ETA_HI:
                    continue
                if p < _ETA_LO:
                    raise ArithmeticError("eta pole deeper than expected")
                prod = s1 * s2
                if p in out:
                    out[p] = out[p] + prod
                else:
                    out[p] = prod
        return _EtaJet(out)

    def coeff(self, p):
        return self.c.get(p, _Sym())

    def __repr__(self):
        return "_EtaJet(%r)" % (self.c,)


def _psi_values(x2, order):
    """[psi(x), psi'(x), ...] up to order-1 derivatives, x = x2/2 > 0.

    x2 is twice the argument, so integers and half-integers share a code
    path.  Base values at 1 and 1/2 are gamma/zeta/ln2 combinations; the
    rest follows from psi^(j)(x+1) = psi^(j)(x) + (-1)^j j! / x^(j+1).
    """
    if x2 <= 0:
        raise ValueError("polygamma values need a positive argument")
    out = []
    for j in range(order):
        if j >= 7:
            raise ValueError("zeta weight above 7 required")
        if x2 % 2 == 0:
            if j == 0:
                acc = -_Sym.unit(_SLOT_GAMMA)
            else:
                acc = _Sym.unit(j, mpq((-1) ** (j + 1)) * _fact(j))
            for i in range(1, x2 // 2):
                acc = acc + _Sym.rational(mpq((-1) ** j) * _fact(j) *
                                          mpq(1, i) ** (j + 1))
        else:
            if j == 0:
                acc = -_Sym.unit(_SLOT_GAMMA) - _Sym.unit(_SLOT_LN2, 2)
            else:
                acc = _Sym.unit(j, mpq((-1) ** (j + 1)) * _fact(j) *
                                (mpq(2) ** (j + 1) - 1))
            for i in range((x2 - 1) // 2):
                h = mpq(1, 2) + i
                acc = acc + _Sym.rational(mpq((-1) ** j) * _fact(j) /
                                          h ** (j + 1))
        out.append(acc)
    return out


def _fact(n):
    f = mpq(1)
    for i in range(2, n + 1):
        f *= i
    return f


@functools.lru_cache(maxsize=None)
def _gamma_jet(x2, b, jet_len=4):
    """Expansion of Gamma(x + b*eta) as an _EtaJet; x = x2/2.

    Positive x: Taylor series via polygamma values.  Non-positive integer
    x: Laurent series with a 1/eta pole from the exactnum gamma_laurent
    table.  Negative half-integers reduce to positive ones through the
    functional equation.  Gamma(1/2) factors are tracked as sqrt(pi).
    """
    b = mpq(b)
    if x2 % 2 == 0:
        x = x2 // 2
        if x > 0:
            return _taylor_gamma_jet(x2, b, jet_len)
        gl = gamma_laurent(x, jet_len)
        out = {}
        # Gamma(center + w) with w = b*eta
        for k in range(-1, gl.order + 1):
            cp = gl.coeff(k)
            if not cp:
                continue
            sym = _sym_from_constantpoly(cp)
            if k == -1:
                if b == 0:
                    raise ZeroDivisionError("Gamma evaluated at a pole")
                out[-1] = sym * (1 / b)
            else:
                out[k] = out.get(k, _Sym()) + sym * b ** k
        return _EtaJet(out)
    # half-integer argument: always regular
    if x2 > 0:
        return _taylor_gamma_jet(x2, b, jet_len)
    # Gamma(x) = Gamma(x + n) / prod_{i=0}^{n-1} (x + i), shift to 1/2
    n = (1 - x2) // 2
    shifted = _taylor_gamma_jet(1, b, jet_len)
    denom = _EtaJet.const(_Sym.rational(1))
    for i in range(n):
        lin = _EtaJet({0: _Sym.rational(mpq(x2, 2) + i), 1: _Sym.rational(b)})
        denom = denom * lin
    return shifted * _jet_reciprocal(denom, jet_len)


def _taylor_gamma_jet(x2, b, jet_len):
    """Gamma(x + b eta) for x = x2/2 > 0 via exp of the psi series."""
    psis = _psi_values(x2, jet_len)
    # Gamma(x) itself: rational for integers, rational*sqrt(pi) for halves
    if x2 % 2 == 0:
        g0 = _Sym.rational(_fact(x2 // 2 - 1))
    else:
        q = QONE
        h = mpq(1, 2)
        while 2 * h < x2:
            q *= h
            h += 1
        g0 = _Sym.rational(q).scale_sqrtpi(1)
    # exp( sum_j psi^{(j-1)}(x) (b eta)^j / j! )
    log_c = [_Sym()] + [psis[j - 1] * (b ** j / _fact(j))
                        for j in range(1, jet_len)]
    expo = [_Sym.rational(1)] + [_Sym() for _ in range(jet_len - 1)]
    for n in range(1, jet_len):
        acc = _Sym()
        for k in range(1, n + 1):
            acc = acc + log_c[k] * mpq(k) * expo[n - k]
        expo[n] = acc * mpq(1, n)
    return _EtaJet({i: g0 * e for i, e in enumerate(expo) if e})


def _jet_reciprocal(jet, jet_len=4):
    """1/jet for a jet whose eta^0 head is a single-monomial constant.

    Heads of Gamma jets are rational times a power of sqrt(pi), so the
    inverse head is the reciprocal monomial; the rest follows from the
    usual series recursion x_n = -x_0 * sum_{k>=1} c_k x_{n-k}.
    """
    if any(p < 0 for p in jet.c):
        raise ArithmeticError("reciprocal of a singular jet")
    c0 = jet.coeff(0)
    if len(c0.terms) != 1:
        raise ArithmeticError("reciprocal needs a monomial head")
    (hkey, hc), = c0.terms.items()
    if any(e and i != _SLOT_SQRTPI for i, e in enumerate(hkey)):
        raise ArithmeticError("non-constant head in jet reciprocal")
    inv0 = _Sym({tuple(-e for e in hkey): 1 / hc})
    out = {0: inv0}
    for n in range(1, jet_len):
        acc = _Sym()
        for k in range(1, n + 1):
            ck = jet.coeff(k)
            if ck and (n - k) in out:
                acc = acc + ck * out[n - k]
        if acc:
            out[n] = (inv0 * acc) * mpq(-1)
    return _EtaJet(out)


def _exp_log_jet(coeff_sym, jet_len=4):
    """exp(eta * coeff_sym) as a jet (used for x^eta factors)."""
    out = {0: _Sym.rational(1)}
    pw = _Sym.rational(1)
    f = mpq(1)
    for n in range(1, jet_len):
        pw = pw * coeff_sym
        f *= n
        out[n] = pw * (1 / f)
    return _EtaJet(out)


# ----------------------------------------------------------------------
# Riccati chain in the two-well coordinate.
#
# Monomial representation: c * u^a * tau^t * rho^(h/2) * (u^2-2gE)^(-d/2)
# with u = U(q), rho = U'^2 = 1 - 4 u^m, and tau = q - 1/2 for the m = 1
# tilt (Fokker-Planck).  For m = 1 the identity U' = -2 tau removes rho
# entirely; the remaining tau^2 reduce to 1/4 - u.

class WkbTerm:
    """One even order S_k of the WKB expansion, as reduced monomials.

    monomials maps (a, t, h, d) -> rational coefficient, for
    u^a tau^t rho^(h/2) (u^2-2gE)^(-d/2); m and the tilt strength are
    carried along so the contour machinery knows the geometry.
    """

    __slots__ = ("k", "m", "tilt", "monomials")

    def __init__(self, k, m, tilt, monomials):
        self.k = int(k)
        self.m = int(m)
        self.tilt = mpq(tilt)
        self.monomials = {key: mpq(c) for key, c in monomials.items() if c}

    def __repr__(self):
        return "WkbTerm(k=%d, m=%d, %d monomials)" % (
            self.k, self.m, len(self.monomials))


class RegularizedIntegral:
    """Value of (1/g) oint g^k S_k under one regularization method."""

    __slots__ = ("value", "method", "dropped_pole_count")

    def __init__(self, value, method, dropped_pole_count=0):
        if method not in ("Subtraction", "EpsilonSplit", "MellinResidue"):
            raise ValueError("unknown method %r" % (method,))
        self.value = value
        self.method = method
        self.dropped_pole_count = int(dropped_pole_count)

    def __repr__(self):
        return ("RegularizedIntegral(%s, dropped=%d, %r)"
                % (self.method, self.dropped_pole_count, self.value))


def _mono_reduce(m, mono):
    """Canonicalize one (a, t, h, d) -> coeff dict entry for geometry m."""
    out = {}

    def push(a, t, h, d, c):
        if not c:
            return
        if m == 1:
            # rho^(1/2) = U' = -2 tau exactly
            while h > 0:
                c *= -2
                t += 1
                h -= 1
            while t >= 2:
                # tau^2 = 1/4 - u
                key_c = c
                push(a, t - 2, h, d, key_c * mpq(1, 4))
                push(a + 1, t - 2, h, d, -key_c)
                return
        else:
            if t:
                raise ValueError("tilt only supported in m=1 geometry")
            while h >= 2:
                # rho = 1 - 4 u^m
                push(a, t, h - 2, d, c)
                push(a + m, t, h - 2, d, -4 * c)
                return
        key = (a, t, h, d)
        out[key] = out.get(key, QZERO) + c

    (a, t, h, d), c = mono
    push(a, t, h, d, c)
    return out


def _mono_mul(m, ma, mb):
    """Product of two monomial dicts."""
    out = {}
    for (a1, t1, h1, d1), c1 in ma.items():
        for (a2, t2, h2, d2), c2 in mb.items():
            red = _mono_reduce(m, ((a1 + a2, t1 + t2, h1 + h2, d1 + d2),
                                   c1 * c2))
            for k, c in red.items():
                s = out.get(k, QZERO) + c
                if s:
                    out[k] = s
                else:
                    out.pop(k, None)
    return out


def _mono_dq(m, mono_dict):
    """d/dq of a monomial dict.

    d/dq acts as U' d/du on functions of u, plus the explicit tau and F
    dependences; U' = rho^(1/2) (h += 1), dtau/dq = 1, dF/dq = 2u U'.
    """
    out = {}

    def add(entry):
        for k, c in entry.items():
            s = out.get(k, QZERO) + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)

    for (a, t, h, d), c in mono_dict.items():
        if a:
            add(_mono_reduce(m, ((a - 1, t, h + 1, d), c * a)))
        if t:
            add(_mono_reduce(m, ((a, t - 1, h, d), c * t)))
        if h:
            # (rho^(h/2))' = (h/2) rho^(h/2-1) rho'(u) * U'
            #             = (h/2) (-4m u^(m-1)) rho^((h-1)/2) ... wait:
            # rho^(h/2-1) * U' = rho^(h/2-1+1/2) = rho^((h-1)/2)
            add(_mono_reduce(m, ((a + m - 1, t, h - 1, d),
                                 c * mpq(h, 2) * (-4 * m))))
        if d:
            add(_mono_reduce(m, ((a + 1, t, h + 1, d + 2), c * (-d))))
    return out


def _family_geometry_m(p):
    fam = p.family
    if fam in ("DoubleWell", "FokkerPlanck", "BrokenSymmetric"):
        return 1
    if fam == "PeriodicCosine":
        return 2
    if fam == "SymmetricClass":
        return p.params["m"]
    raise ValueError("no two-well WKB chain for family %s" % fam)


def _family_tilt(p):
    if p.family == "FokkerPlanck":
        return mpq(-p.params.get("j", -1))
    if p.family == "BrokenSymmetric":
        return p.params["eta"]
    return QZERO


def _riccati_chain(p, k_max):
    """S_0 .. S_{k_max} as monomial dicts (all k, odd ones included)."""
    m = _family_geometry_m(p)
    tilt = _family_tilt(p)
    chain = [{(0, 0, 0, -1): QONE}]          # S_0 = F^(1/2)
    half_inv = {(0, 0, 0, 1): mpq(1, 2)}     # F^(-1/2)/2
    for k in range(1, k_max + 1):
        rhs = _mono_dq(m, chain[k - 1])
        for j in range(1, k):
            prod = _mono_mul(m, chain[j], chain[k - j])
            for key, c in prod.items():
                s = rhs.get(key, QZERO) - c
                if s:
                    rhs[key] = s
                else:
                    rhs.pop(key, None)
        if k == 1 and tilt:
            key = (0, 1, 0, 0)
            rhs[key] = rhs.get(key, QZERO) + 2 * tilt
        chain.append(_mono_mul(m, rhs, half_inv))
    return chain


def wkb_terms(p, k_max):
    """Even WKB orders S_0, S_2, ..., S_{k_max} for a two-well family.

    The odd orders are total derivatives (plus odd-parity tilt terms) whose
    contour integrals vanish; asking for them is a usage error.  S_10 and
    beyond are never needed for the published tables, so k_max is capped.
    """
    k_max = int(k_max)
    if k_max % 2:
        raise ValueError("odd WKB order %d requested; odd terms integrate "
                         "to zero and are excluded" % k_max)
    if k_max > 8:
        raise ValueError("k_max > 8 not supported by the public interface")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    m = _family_geometry_m(p)
    tilt = _family_tilt(p)
    chain = _riccati_chain(p, k_max)
    return [WkbTerm(k, m, tilt, chain[k]) for k in range(0, k_max + 1, 2)]


# ----------------------------------------------------------------------
# Method (i): subtraction at a continued summation index.

def _contour_monomials(t):
    """Surviving integrand monomials of oint dq: parity-even ones only.

    tau- or U'-odd pieces integrate to zero over the symmetric cycle; the
    mixed tau*rho^(1/2) pairs were already reduced away for m = 1.
    """
    out = {}
    for (a, tt, h, d), c in t.monomials.items():
        if (tt + h) % 2:
            continue
        if tt:
            raise AssertionError("unreduced tau power survived")
        out[(a, h, d)] = out.get((a, h, d), QZERO) + c
    return out


def _contour_subtraction_raw(t, L_max):
    """Core of the subtraction method: dict {(p,q,r): mpq} and pole count."""
    if t.m not in (1, 2):
        raise ValueError("exact contour reduction needs m in {1, 2}")
    m = t.m
    L_max = int(L_max)
    dropped = 0
    acc = {}

    def add(p, q, r, c):
        key = (p, q, r)
        s = acc.get(key, QZERO) + c
        if s:
            acc[key] = s
        else:
            acc.pop(key, None)

    # finite parts of the continued terms are collected per (n, r) cell;
    # with a tilt the gamma / ln 2 content cancels only across monomials,
    # not within a single one
    cells = {}
    for (a, h, d), c in _contour_monomials(t).items():
        if d % 2 == 0:
            # integer F-power: a meromorphic piece with no branch cut.
            # These only arise with a tilt, carry odd tilt-parity at even
            # WKB order, and their barrier content cancels pairwise under
            # the mirror map q -> 1-q, tilt -> -tilt.
            continue
        b2 = h - 1                       # twice the rho exponent after measure
        n_max = L_max - (t.k - 1)
        # negative n contribute only where the Beta pole cancels the 1/n!
        # zero: a - d - 2n + 1 <= 0
        n_min = min(0, -((d - a - 1) // 2))
        for n in range(n_min, n_max + 1):
            A1 = a - d - 2 * n + 1       # Beta argument numerator (A+1)
            pole = (A1 % m == 0) and (A1 // m) <= 0
            if not pole:
                if n >= 0:
                    # plain convergent term, no continuation needed
                    val = _j_regular(m, A1, b2) * _r_coeff(d, n)
                    if val:
                        add(n, 0, t.k - 1 + n, 4 * c * val * mpq(2) ** n)
                continue
            # continued term: R_{n+eta}(d) * J(A - 2 eta, B) * (2gE)^(n+eta)
            jet = _term_jet(m, d, n, A1, b2)
            if jet.coeff(-1):
                dropped += 1
            finite = jet.coeff(0)
            if not finite:
                continue
            key = (n, t.k - 1 + n)
            pref = 4 * c * mpq(2) ** n
            cells[key] = cells.get(key, _Sym()) + finite * pref
    for (n, r), s in cells.items():
        rat_c, l_c = s.pure_log_parts()
        if l_c:
            add(n, 1, r, l_c)
        if rat_c:
            add(n, 0, r, rat_c)
    return acc, dropped


def contour_integral_subtraction(t, L_max):
    """(1/g) oint g^k S_k by index continuation, up to g-order L_max.

    Each monomial u^a rho^(h/2) F^(-d/2) expands in powers of 2gE; the
    resulting u-integrals are Beta-type and continue meromorphically in the
    index.  Shifting n -> n + eta and discarding the bare 1/eta poles keeps
    exactly the finite parts and the ln(Eg/2) terms; negative n, where the
    continued 1/n! zero meets a Beta pole, supplies the 1/E Laurent head.
    """
    acc, dropped = _contour_subtraction_raw(t, L_max)
    return RegularizedIntegral(LogLaurentSeries(acc), "Subtraction", dropped)


def _r_coeff(d, n):
    """R_n(d) = Gamma(n + d/2) / (n! Gamma(d/2)) for integer n >= 0."""
    num = QONE
    x = mpq(d, 2)
    for i in range(n):
        num *= x + i
    return num / _fact(n)


def _j_regular(m, A1, b2):
    """J = int_0^{u0} u^A rho^(b2/2) du at a regular index.

    Equals (1/m) 4^(-A1/m) Gamma(A1/m) Gamma(b2/2+1) / Gamma(A1/m+b2/2+1);
    rational for m in {1, 2} with the arguments this module produces.
    """
    if (2 * A1) % m:
        raise ValueError("irrational quadrature constant for m=%d" % m)
    x = mpq(A1, m)
    y = mpq(b2 + 2, 2)                    # B + 1 with B = b2/2
    val = _gamma_ratio_rational(x, y)
    scale = mpq(2) ** ((-2 * A1) // m)    # 4^(-A1/m)
    return mpq(1, m) * scale * val


def _gamma_ratio_rational(x, y):
    """Gamma(x)Gamma(y)/Gamma(x+y) when it is rational (possibly 0).

    Arguments are rationals with denominator 1 or 2, away from poles of the
    numerator.  Both are walked to the base points 1 or 1/2 through the
    recurrence; the sqrt(pi) factors from half-integer bases must cancel.
    """
    x, y, s = mpq(x), mpq(y), mpq(x) + mpq(y)
    if s.denominator == 1 and s <= 0:
        return QZERO                      # 1/Gamma at a pole
    if (x.denominator == 1 and x <= 0) or (y.denominator == 1 and y <= 0):
        raise ZeroDivisionError("Gamma pole in a regular-index ratio")

    def reduce_to_base(z):
        fac = QONE
        while z > 1:
            z -= 1
            fac *= z
        while z < mpq(1, 2):
            fac /= z
            z += 1
        return z, fac

    def base_val(b):
        # (rational part, sqrt(pi) power)
        if b == 1:
            return QONE, 0
        if b == mpq(1, 2):
            return QONE, 1
        raise AssertionError("unexpected base %s" % (b,))

    bx, fx = reduce_to_base(x)
    by, fy = reduce_to_base(y)
    bs, fs = reduce_to_base(s)
    vx, px = base_val(bx)
    vy, py = base_val(by)
    vs, ps = base_val(bs)
    if px + py - ps != 0:
        raise ValueError("sqrt(pi) does not cancel: irrational ratio")
    return fx * vx * fy * vy / (fs * vs)


def _term_jet(m, d, n, A1, b2):
    """eta-jet of R_{n+eta}(d) * J(A(n+eta), b2/2) * (2gE)^eta * 2^-shift.

    All eta dependence is collected here: the continued factorials, the
    Beta-integral Gamma functions (including the 4^(2eta/m) scale), and the
    (2gE)^eta factor whose logarithm recombines into ln(Eg/2) + 2 ln 2.
    """
    # R_{n+eta}(d): Gamma(n + eta + d/2) / (Gamma(n + 1 + eta) Gamma(d/2))
    num = _gamma_jet(2 * n + d, 1)
    den_a = _gamma_jet(2 * (n + 1), 1)
    den_b = _gamma_jet(d, 0)              # Gamma(d/2), eta-free
    r_jet = num * _jet_reciprocal_sym(den_a) * _jet_reciprocal_sym(den_b)

    # J factor: (1/m) 4^(-(A1 - 2 eta)/m) Gamma((A1-2eta)/m) Gamma(b2/2+1)
    #            / Gamma((A1-2eta)/m + b2/2 + 1)
    scale = _exp_log_jet(_Sym.unit(_SLOT_LN2, mpq(4, m)))
    g1 = _gamma_jet(2 * A1 // m, mpq(-2, m))
    g2 = _gamma_jet(b2 + 2, 0)
    g3 = _gamma_jet(2 * A1 // m + b2 + 2, mpq(-2, m))
    j_jet = scale * g1 * g2 * _jet_reciprocal_sym(g3)
    j_pref = _Sym.rational(mpq(1, m) * mpq(2) ** ((-2 * A1) // m))

    # (2gE)^eta -> exp(eta (L + 2 ln 2))
    e_jet = _exp_log_jet(_Sym.unit(_SLOT_L) + _Sym.unit(_SLOT_LN2, 2))

    total = r_jet * j_jet * e_jet
    return _EtaJet({p: s * j_pref for p, s in total.c.items()})


def _jet_reciprocal_sym(jet):
    """Reciprocal allowing a 1/eta pole in the *input* (gives a zero head)."""
    if any(p < 0 for p in jet.c):
        # 1/Gamma at a pole: invert the Laurent series (head eta^-1)
        pole = jet.coeff(-1)
        if not pole.is_rational():
            raise ArithmeticError("non-rational pole residue")
        shifted = _EtaJet({p + 1: s for p, s in jet.c.items()})
        inv = _jet_reciprocal(shifted, jet_len=_ETA_HI + 2)
        return _EtaJet({p + 1: s for p, s in inv.c.items()})
    return _jet_reciprocal(jet, jet_len=_ETA_HI + 2)


# ----------------------------------------------------------------------
# Method (ii): epsilon-split of the double-well integration range.
#
# The cycle integral 2 int_0^1 dq splits at a formal distance eps from the
# turning points.  In (eps, 1-eps) the integrand expands in a := 2gE and
# integrates through partial fractions in w = q - 1/2.  In (0, eps) the
# factorization q^2(1-q)^2 - a = (q^2 - a)(1 + q^3(q-2)/(q^2-a)) reduces
# everything to int q^P (q^2-a)^(s) dq with half-integer s, done by exact
# recursions.  Bookkeeping ring: a-power, eps-power, ln(eps), the branch
# symbol Lam = ln(a) (reported as ln(Eg/2) + 2 ln 2), ln 2, and the formal
# square root SQ = (-a)^(1/2) from the q = 0 boundary.  Everything except
# the a-powers and Lam must cancel in the combined result.

_EPS_KEEP = 2          # positive eps powers retained (and checked) per term


class _EpsRing:
    """dict {(n, e, le, lam, l2, sq): mpq} with n the a-power, e the
    eps-power, and 0/1 exponents for ln(eps), Lam, ln2, SQ."""

    __slots__ = ("t",)

    def __init__(self, t=None):
        self.t = dict(t) if t else {}

    def add_term(self, key, c):
        if not c:
            return
        s = self.t.get(key, QZERO) + c
        if s:
            self.t[key] = s
        else:
            del self.t[key]

    def __add__(self, other):
        out = _EpsRing(self.t)
        for k, c in other.t.items():
            out.add_term(k, c)
        return out

    def scale(self, c):
        c = mpq(c)
        return _EpsRing({k: v * c for k, v in self.t.items()} if c else None)

    def shift_a(self, dn):
        return _EpsRing({(n + dn, e, le, lam, l2, sq): c
                         for (n, e, le, lam, l2, sq), c in self.t.items()})

    def mul_series(self, series, n_cap):
        """Multiply by sum_j series[j] * a^j, truncating a-powers at n_cap."""
        out = _EpsRing()
        for (n, e, le, lam, l2, sq), c in self.t.items():
            for j, cj in enumerate(series):
                if not cj:
                    continue
                if n + j > n_cap:
                    break
                out.add_term((n + j, e, le, lam, l2, sq), c * cj)
        return out


def _binom_q(top, k):
    """Binomial coefficient with rational (possibly half-integer) top."""
    num = QONE
    t = mpq(top)
    for i in range(k):
        num *= (t - i)
    return num / _fact(k)


def _sq_reduce(s2):
    """(-a)^(s2/2) for odd s2 -> (a-power shift, sign, SQ parity 1)."""
    # (-a)^(s2/2) = SQ^(s2) = SQ * (SQ^2)^((s2-1)/2) = SQ * (-a)^((s2-1)/2)
    half = (s2 - 1) // 2
    return half, mpq((-1) ** (half % 2)), 1


def _f_at_eps(s2, jx, n_cap):
    """(eps^2 - a)^(s2/2) expanded for a << eps^2, as an _EpsRing."""
    out = _EpsRing()
    for j in range(jx + 1):
        c = _binom_q(mpq(s2, 2), j) * mpq((-1) ** (j % 2))
        out.add_term((j, s2 - 2 * j, 0, 0, 0, 0), c)
    return out


class _EdgeTable:
    """Memoized exact antiderivatives int_0^eps q^P (q^2-a)^(s2/2) dq."""

    def __init__(self, jx, n_cap, eps_keep=_EPS_KEEP):
        self.jx = jx
        self.n_cap = n_cap
        self.eps_keep = eps_keep
        self.memo = {}

    def _clip(self, ring):
        out = _EpsRing()
        for key, c in ring.t.items():
            n, e = key[0], key[1]
            if n > self.n_cap + self.jx or e > self.eps_keep:
                continue
            out.add_term(key, c)
        return out

    def get(self, P, s2):
        key = (P, s2)
        if key not in self.memo:
            self.memo[key] = self._clip(self._compute(P, s2))
        return self.memo[key]

    def _compute(self, P, s2):
        if s2 % 2 == 0:
            raise AssertionError("edge exponent must be half-integer")
        if P < 0:
            raise AssertionError("negative q-power at the well")
        if P % 2 == 1:
            # substitute t = q^2 and expand t^((P-1)/2) about t - a
            K = (P - 1) // 2
            out = _EpsRing()
            for i in range(K + 1):
                ex = mpq(s2, 2) + i + 1
                c = _binom_q(K, i) * mpq(1, 2) / ex
                # a^(K-i) [ (eps^2-a)^ex - (-a)^ex ] with 2*ex = s2+2i+2
                upper = _f_at_eps(s2 + 2 * (i + 1), self.jx, self.n_cap)
                out = out + upper.shift_a(K - i).scale(c)
                sh, sg, _ = _sq_reduce(s2 + 2 * (i + 1))
                out.add_term((K - i + sh, 0, 0, 0, 0, 1), -c * sg)
            return out
        if P >= 2:
            # parts: [q^(P-1) F^(s/2+1)/(s2+2)] - (P-1)/(s2+2) int q^(P-2) F^(..+1)
            inv = mpq(1, s2 + 2)
            bound = _f_at_eps(s2 + 2, self.jx, self.n_cap)
            bound = _EpsRing({(n, e + (P - 1), le, lam, l2, sq): c
                              for (n, e, le, lam, l2, sq), c in bound.t.items()})
            rec = self.get(P - 2, s2 + 2)
            return bound.scale(inv) + rec.scale(-(P - 1) * inv)
        # P == 0
        if s2 == -1:
            # int (q^2-a)^(-1/2) = ln(q + sqrt(q^2-a)); at eps expand the
            # root, at 0 the value is ln(SQ) = Lam/2
            out = _EpsRing()
            out.add_term((0, 0, 1, 0, 0, 0), QONE)        # ln eps
            out.add_term((0, 0, 0, 0, 1, 0), QONE)        # ln 2
            # ln((1 + sqrt(1 - a/eps^2))/2) as a series in x = a/eps^2
            half_root = [QONE] + [_binom_q(mpq(1, 2), j) * mpq((-1) ** (j % 2),
                                                               2)
                                  for j in range(1, self.jx + 1)]
            # y := (1+rt)/2 - 1 = sum_{j>=1} ...
            y = half_root[1:]
            logser = _log1p_series(y, self.jx)
            for j, cj in enumerate(logser, start=1):
                if cj:
                    out.add_term((j, -2 * j, 0, 0, 0, 0), cj)
            out.add_term((0, 0, 0, 1, 0, 0), mpq(-1, 2))  # -Lam/2
            return out
        if s2 > 0:
            # upward: int F^(s) = [ q F^(s) - s2 a int F^(s-1) ] / (1+s2)
            inv = mpq(1, 1 + s2)
            bound = _f_at_eps(s2, self.jx, self.n_cap)
            bound = _EpsRing({(n, e + 1, le, lam, l2, sq): c
                              for (n, e, le, lam, l2, sq), c in bound.t.items()})
            rec = self.get(0, s2 - 2).shift_a(1)
            return (bound + rec.scale(-s2)).scale(inv)
        # downward: int F^(s) = [ q F^(s+1) - (s2+3) int F^(s+1) ] / ((s2+2) a)
        inv = mpq(1, s2 + 2)
        bound = _f_at_eps(s2 + 2, self.jx, self.n_cap)
        bound = _EpsRing({(n, e + 1, le, lam, l2, sq): c
                          for (n, e, le, lam, l2, sq), c in bound.t.items()})
        rec = self.get(0, s2 + 2)
        total = bound + rec.scale(-(s2 + 3))
        return total.scale(inv).shift_a(-1)


def _log1p_series(y, nmax):
    """Coefficients of ln(1 + sum_j y[j-1] x^j) as a power series in x."""
    # y is the list of coefficients of x^1..x^len(y)
    comp = [QZERO] * (nmax + 1)
    pw = [QZERO] * (nmax + 1)
    pw[0] = QONE
    out = [QZERO] * (nmax + 1)
    for i in range(1, nmax + 1):
        # pw = y(x)^i
        new = [QZERO] * (nmax + 1)
        for a_, ca in enumerate(pw):
            if not ca:
                continue
            for b_, cb in enumerate(y, start=1):
                if a_ + b_ > nmax:
                    break
                new[a_ + b_] += ca * cb
        pw = new
        sgn = mpq((-1) ** (i + 1), i)
        for idx in range(nmax + 1):
            if pw[idx]:
                out[idx] += sgn * pw[idx]
    del comp
    return out[1:]


def _middle_u_int(p, n_cap):
    """4 int_0^{1/2-eps} (1/4 - w^2)^p dw as an _EpsRing (exact in eps)."""
    out = _EpsRing()
    if p >= 0:
        for i in range(p + 1):
            c = _binom_q(p, i) * mpq((-1) ** (i % 2)) * mpq(4) ** (i - p)
            # 4 * (1/2 - eps)^(2i+1) / (2i+1)
            for j in range(2 * i + 2):
                cc = 4 * c / (2 * i + 1) * _binom_q(2 * i + 1, j) * \
                    mpq(1, 2) ** (2 * i + 1 - j) * mpq((-1) ** (j % 2))
                if j <= _EPS_KEEP:
                    out.add_term((0, j, 0, 0, 0, 0), cc)
        return out
    nu = -p
    for k in range(1, nu + 1):
        ck = _binom_q(2 * nu - k - 1, nu - k)
        if k == 1:
            # minus side: -ln eps - ln 2 ; plus side: ln 2 + ln(1-eps)
            out.add_term((0, 0, 1, 0, 0, 0), -4 * ck)
            for j in range(1, _EPS_KEEP + 1):
                out.add_term((0, j, 0, 0, 0, 0), -4 * ck * mpq(1, j))
        else:
            inv = mpq(1, k - 1)
            out.add_term((0, 1 - k, 0, 0, 0, 0), 4 * ck * inv)
            # eps^(1-k) - (1-eps)^(1-k), the 2^(k-1) endpoint pieces cancel;
            # the j = 0 term of the binomial series is a genuine constant
            for j in range(0, _EPS_KEEP + 1):
                out.add_term((0, j, 0, 0, 0, 0),
                             -4 * ck * inv * _binom_q(k - 2 + j, j))
    return out


def contour_integral_eps(t, L_max, fault=None):
    """(1/g) oint g^k S_k by the split-range method, double-well geometry.

    The result must be eps-free: any surviving power of eps or ln(eps)
    raises, which is also how the deliberate sign-fault mode demonstrates
    that the check is real.  fault in {None, 'middle', 'edges'}.
    """
    if t.m != 1 or t.tilt:
        raise ValueError("epsilon-split needs the plain double-well geometry")
    L_max = int(L_max)
    n_max = L_max - (t.k - 1)
    if n_max < 0:
        return RegularizedIntegral(LogLaurentSeries({}), "EpsilonSplit", 0)

    monos = _contour_monomials(t)
    total = _EpsRing()

    # ---- middle region ------------------------------------------------
    middle = _EpsRing()
    for (a, h, d), c in monos.items():
        if h:
            raise AssertionError("rho power survived m=1 reduction")
        for j in range(n_max + 1):
            rc = _r_coeff(d, j) * c
            if not rc:
                continue
            middle = middle + _middle_u_int(a - d - 2 * j, n_max) \
                .shift_a(j).scale(rc)
    if fault == "middle":
        middle = middle.scale(-1)
    total = total + middle

    # ---- well regions -------------------------------------------------
    d_max = max((d for (a, h, d) in monos), default=1)
    # completeness of the a^n cells needs the binomial expansion taken to
    # j <= 2 n + d - a - 1 for every monomial; pad by a safe margin
    j_edge = 2 * n_max + max(d_max, 0) + 2
    jx = n_max + (d_max + 2 * j_edge) // 2 + 2
    table = _EdgeTable(jx, n_max)
    edges = _EpsRing()
    for (a, h, d), c in monos.items():
        for j in range(j_edge + 1):
            rj = _r_coeff(d, j) * mpq((-1) ** (j % 2)) * c
            if not rj:
                continue
            # q^(a+3j) (1-q)^a (q-2)^j (q^2-a)^(-d/2-j)
            s2 = -d - 2 * j
            poly = {0: QONE}
            for _ in range(a):
                poly = _poly_mul(poly, {0: QONE, 1: -QONE})
            for _ in range(j):
                poly = _poly_mul(poly, {0: mpq(-2), 1: QONE})
            for pw, cc in poly.items():
                if not cc:
                    continue
                edges = edges + table.get(a + 3 * j + pw, s2) \
                    .scale(4 * rj * cc)
    if fault == "edges":
        edges = edges.scale(-1)
    total = total + edges

    # ---- cancellation checks and conversion ---------------------------
    acc = {}
    dropped = 0
    for (n, e, le, lam, l2, sq), c in total.t.items():
        if n > n_max:
            continue
        if sq:
            # odd powers of sqrt(-2gE): the endcap pieces between q = 0 and
            # the turning point, which the period integral excludes -- the
            # split-range analogue of the dropped continuation poles
            if e or le:
                raise ArithmeticError("eps-dependent branch-root term")
            dropped += 1
            continue
        if e or le:
            raise ArithmeticError(
                "residual eps dependence (n=%d, eps^%d, lneps^%d): %s"
                % (n, e, le, c))
        r = t.k - 1 + n
        pref = c * mpq(2) ** n
        if lam:
            # Lam = ln(Eg/2) + 2 ln 2
            key = (n, 1, r)
            acc[key] = acc.get(key, QZERO) + pref
            key2 = (n, 0, r, "ln2")
            acc[key2] = acc.get(key2, QZERO) + 2 * pref
        elif l2:
            key2 = (n, 0, r, "ln2")
            acc[key2] = acc.get(key2, QZERO) + pref
        else:
            key = (n, 0, r)
            acc[key] = acc.get(key, QZERO) + pref
    out = {}
    for key, c in acc.items():
        if len(key) == 4:
            if c:
                raise ArithmeticError("ln 2 failed to cancel at %s" % (key,))
            continue
        if c:
            out[key] = c
    return RegularizedIntegral(LogLaurentSeries(out), "EpsilonSplit", dropped)


def _poly_mul(pa, pb):
    out = {}
    for x, cx in pa.items():
        for y, cy in pb.items():
            out[x + y] = out.get(x + y, QZERO) + cx * cy
    return out


# ----------------------------------------------------------------------
# Method (iii): Mellin representation of the two leading WKB orders.

class MellinForm:
    """Closed Gamma-ratio form of a Mellin transform, with exact residues.

    __call__(s, g=1.0) evaluates the closed form numerically away from the
    integer poles; residue(n) returns the exact contribution picked up at
    s = n as a LogLaurentSeries, using 1/(n-s) -> E^n and the double-pole
    counterpart -> E^n ln E, with ln E + ln g - ln 2 recombined to a single
    ln(Eg/2) slot (the recombination is asserted, not assumed).
    """

    def __init__(self, m, which):
        m = int(m)
        if m < 1:
            raise ValueError("m must be a positive integer")
        if which not in ("I0", "I2"):
            raise ValueError("which must be 'I0' or 'I2'")
        self.m = m
        self.which = which

    def __call__(self, s, g=1.0):
        m = mpmath.mpf(self.m)
        s = mpmath.mpmathify(s)
        g = mpmath.mpmathify(g)
        gam = mpmath.gamma
        if self.which == "I0":
            return (1 / m * g ** (s - 1)
                    * mpmath.mpf(2) ** (s * (1 + 4 / m) + 2 - 4 / m)
                    * gam(-s) * gam(mpmath.mpf(3) / 2) / gam(mpmath.mpf(3) / 2 - s)
                    * gam(mpmath.mpf(1) / 2) * gam(2 / m * (1 - s))
                    / gam(mpmath.mpf(1) / 2 + 2 / m * (1 - s)))
        return (1 / m * g ** (s + 1)
                * mpmath.mpf(2) ** (s * (1 + 4 / m) + 4 / m - 1)
                * gam(-s) * gam(mpmath.mpf(-3) / 2) / gam(mpmath.mpf(-3) / 2 - s)
                * gam(mpmath.mpf(3) / 2) * gam(-2 / m * (1 + s))
                / gam(mpmath.mpf(3) / 2 - 2 / m * (1 + s)))

    def residue(self, n):
        """Exact residue contribution at integer s = n as LogLaurentSeries."""
        if int(n) != n:
            raise ValueError("residues live at integer points only")
        n = int(n)
        m = self.m
        if m not in (1, 2):
            raise ValueError("exact residues need m in {1, 2}")
        if self.which == "I0":
            fourm = (4 * (n - 1)) % m
            if fourm:
                raise AssertionError("non-integral power of 2")
            pref = mpq(1, m) * mpq(2) ** (n + (4 * n - 4) // m + 2)
            jet = _gamma_jet(-2 * n, -1)
            jet = jet * _jet_reciprocal_sym(_gamma_jet(3 - 2 * n, -1))
            jet = jet * _gamma_jet(3, 0)
            jet = jet * _gamma_jet(1, 0)
            jet = jet * _gamma_jet((4 // m) * (1 - n), mpq(-2, m))
            jet = jet * _jet_reciprocal_sym(
                _gamma_jet(1 + (4 // m) * (1 - n), mpq(-2, m)))
            r_pow = n - 1
        else:
            pref = mpq(1, m) * mpq(2) ** (n + (4 * n + 4) // m - 1)
            jet = _gamma_jet(-2 * n, -1)
            jet = jet * _gamma_jet(-3, 0)
            jet = jet * _jet_reciprocal_sym(_gamma_jet(-3 - 2 * n, -1))
            jet = jet * _gamma_jet(3, 0)
            jet = jet * _gamma_jet(-(4 // m) * (1 + n), mpq(-2, m))
            jet = jet * _jet_reciprocal_sym(
                _gamma_jet(3 - (4 // m) * (1 + n), mpq(-2, m)))
            r_pow = n + 1
        # scale factors carrying w-dependence: g^w, 2^((1+4/m) w)
        jet = jet * _exp_log_jet(_Sym.unit(_SLOT_LNG)
                                 + _Sym.unit(_SLOT_LN2, 1 + mpq(4, m)))
        c2 = jet.coeff(-2)
        c1 = jet.coeff(-1)
        out = {}
        if c2:
            if not c2.is_rational():
                raise ArithmeticError("double-pole residue is not rational")
        q_log = -c2.rational_part() if c2 else QZERO
        minus_c1 = -c1
        lng_c = minus_c1.slot_coeff(_SLOT_LNG)
        ln2_c = minus_c1.slot_coeff(_SLOT_LN2)
        if lng_c != q_log or ln2_c != -q_log:
            raise ArithmeticError(
                "logarithms do not recombine into ln(Eg/2): "
                "lnE %s, lng %s, ln2 %s" % (q_log, lng_c, ln2_c))
        rest = minus_c1 - _Sym.unit(_SLOT_LNG, lng_c) \
            - _Sym.unit(_SLOT_LN2, ln2_c)
        if not rest.is_rational():
            raise ArithmeticError("transcendental constants in residue: %r"
                                  % (rest,))
        p_const = rest.rational_part()
        if q_log:
            out[(n, 1, r_pow)] = pref * q_log
        if p_const:
            out[(n, 0, r_pow)] = pref * p_const
        return LogLaurentSeries(out)


def mellin_closed_form(m, which):
    """Mellin closed form for the leading (I0) or subleading (I2) order."""
    return MellinForm(m, which)


# ----------------------------------------------------------------------
# ln Gamma(1/2 + z) at large z, exact coefficients.

def gamma_asymptotics(order):
    """Coefficients c_1..c_order with ln Gamma(1/2+z) ~ z ln z - z
    + ln(2 pi)/2 + sum_n c_n z^(1-2n).  c_1 = -1/24, c_2 = 7/2880, ...
    """
    order = int(order)
    if order < 1:
        raise ValueError("order must be >= 1")
    if order > 8:
        raise ValueError("order capped at 8")
    return [_gamma_tail_coeff(n) for n in range(1, order + 1)]


def _gamma_tail_coeff(n):
    # B_{2n}(1/2) / (2n (2n-1)) with B_{2n}(1/2) = (2^(1-2n) - 1) B_{2n}
    b = bernoulli_number(2 * n)
    return (mpq(2) ** (1 - 2 * n) - 1) * b / (2 * n * (2 * n - 1))


# ----------------------------------------------------------------------
# Assembly of the instanton A(E, g) function.

_AFUN_CACHE = {}


def _family_key(p):
    return (p.family, tuple(sorted((k, str(v)) for k, v in p.params.items())))


def _efloor(ep, floor):
    d = {pw: c for pw, c in ep.to_dict().items() if pw >= floor}
    return EPoly.from_dict(d)


def _geom_inv(delta, floor):
    """(E + delta)^(-1) as a Laurent series down to E^floor."""
    out = {}
    pw = QONE
    for i in range(-floor):
        out[-1 - i] = pw
        pw *= -delta
        if not delta:
            break
    return EPoly.from_dict(out)


def _log_shift(delta, floor):
    """ln(1 + delta/E) as a Laurent series down to E^floor."""
    out = {}
    for i in range(1, -floor + 1):
        c = mpq((-1) ** ((i + 1) % 2)) * delta ** i / i
        if c:
            out[-i] = c
    return EPoly.from_dict(out)


def a_function(p, order):
    """Instanton function A(E, g) as an exact GSeries with a 1/g head.

    Assembled as the even-order contour integrals minus, for each well, the
    large-B expansion of the quantization condition's Gamma factor combined
    with its B ln(-g/2C) term.  Both the ln(Eg/2) cancellation and the
    Laurent-tail cancellation are checked term by term; what survives is a
    polynomial in E at every order in g.
    """
    order = int(order)
    if order < 1:
        raise ValueError("order must be >= 1")
    key = (_family_key(p), order)
    if key in _AFUN_CACHE:
        return _AFUN_CACHE[key]

    if p.family == "RadialQuartic":
        j = p.params.get("j", 0)
        base = a_function(PotentialSpec.fokker_planck(j=j), order)
        cs = [c.subst_linear(mpq(1, 2), 0) for c in base.coeffs]
        out = GSeries(cs, -1, order).g_scale(-1)
        _AFUN_CACHE[key] = out
        return out
    if p.family == "SymmetricClass":
        # the canonical m = 1 and m = 2 members are the double well and the
        # cosine well; deeper wells have no polynomial-well B-function here
        m = _family_geometry_m(p)
        if m == 1:
            return a_function(PotentialSpec.double_well(), order)
        if m == 2:
            return a_function(PotentialSpec.periodic_cosine(), order)
        raise ValueError("exact A-assembly needs m in {1, 2}")

    m = _family_geometry_m(p)
    if m not in (1, 2):
        raise ValueError("exact A-assembly needs m in {1, 2}")
    tilt = _family_tilt(p)
    if p.family == "BrokenSymmetric":
        raise ValueError("no exact A-assembly for the broken-symmetric "
                         "family; use the leading-order geometry instead")

    K = order + 1
    K -= K % 2
    chain = _riccati_chain(p, K)
    contour = {}
    for k in range(0, K + 1, 2):
        raw, _ = _contour_subtraction_raw(WkbTerm(k, m, tilt, chain[k]), order)
        for kk, c in raw.items():
            s = contour.get(kk, QZERO) + c
            if s:
                contour[kk] = s
            else:
                contour.pop(kk, None)

    # each well subtracts the asymptotics of its own quantization-condition
    # Gamma factor.  The tilted wells are mirror images (tilt -> -tilt), so
    # they carry different perturbative index functions, plus a half-unit
    # shift because their levels sit at integers rather than half-integers.
    if p.family == "FokkerPlanck":
        jpar = p.params.get("j", -1)
        half = EPoly.const(mpq(1, 2))
        x1 = b_function(p, order) + half
        if jpar:
            x2 = b_function(PotentialSpec.fokker_planck(j=-jpar), order) + half
        else:
            x2 = x1
        xs = (x1, x2)
    else:
        B = b_function(p, order)
        xs = (B, B)
    e_poly = EPoly([QZERO, QONE], 0)
    wells = []
    for X in xs:
        head = (X.coeff(0) - e_poly).to_dict()
        if any(pw != 0 for pw in head):
            raise ArithmeticError("well index function does not start at E")
        wells.append((X, head.get(0, QZERO)))
    floor = -(3 * order + 12)
    n_tail = K // 2 + 1

    # ---- assemble the per-well subtraction ----------------------------
    g_plain = {r: EPoly() for r in range(0, order + 1)}
    g_logc = {r: EPoly() for r in range(0, order + 1)}
    for bdelta, delta in wells:
        b_minus_e = bdelta - e_poly - EPoly.const(delta)
        for r, c in bdelta.items():
            g_logc[r] = g_logc[r] + c
        inv = _geom_inv(delta, floor)
        z = b_minus_e * inv
        z = GSeries([_efloor(c, floor) for c in z.coeffs],
                    z.min_g_power, z.truncation_order)
        # ln((B+delta)/E) = ln(1 + delta/E) + ln(1 + z)
        ln_series = GSeries.zero(order) + _log_shift(delta, floor)
        zp = GSeries.const(1, order)
        for i in range(1, order + 1):
            zp = zp * z
            zp = GSeries([_efloor(c, floor) for c in zp.coeffs],
                         zp.min_g_power, zp.truncation_order).truncate(order)
            if all(not c for c in zp.coeffs):
                break
            ln_series = ln_series + zp * EPoly.const(mpq((-1) ** ((i + 1) % 2), i))
        ln_series = ln_series.truncate(order)
        piece = (bdelta * ln_series).truncate(order) - bdelta
        # Laurent tail: sum_n c_n (B+delta)^(1-2n)
        for n in range(1, n_tail + 1):
            cn = _gamma_tail_coeff(n)
            head = inv
            for _ in range(2 * n - 2):
                head = _efloor(head * inv, floor)
            tail = GSeries.const(1, order)
            binser = GSeries.const(1, order)
            for i in range(1, order + 1):
                binser = binser * z
                binser = GSeries([_efloor(c, floor) for c in binser.coeffs],
                                 binser.min_g_power,
                                 binser.truncation_order).truncate(order)
                if all(not c for c in binser.coeffs):
                    break
                tail = tail + binser * EPoly.const(_binom_q(1 - 2 * n, i))
            piece = piece + (tail * head).truncate(order) * EPoly.const(cn)
        piece = piece.truncate(order)
        for r, c in piece.items():
            if r >= 0:
                g_plain[r] = g_plain[r] + _efloor(c, floor)

    # ---- subtract and check cancellations -----------------------------
    rows = {}
    for (pw, q, r), c in contour.items():
        rows.setdefault((q, r), {})[pw] = c
    out_rows = []
    for r in range(-1, order + 1):
        log_row = EPoly.from_dict(rows.get((1, r), {}))
        if r >= 0:
            log_row = log_row - g_logc[r]
        if log_row:
            raise ArithmeticError(
                "non-cancelling logarithm at order g^%d: %r" % (r, log_row))
        plain = EPoly.from_dict(rows.get((0, r), {}))
        if r >= 0:
            plain = plain - g_plain[r]
        kept = {}
        for pw, c in plain.to_dict().items():
            if pw < 0:
                if pw > r - K - 1:
                    raise ArithmeticError(
                        "uncancelled Laurent term E^%d at order g^%d" % (pw, r))
                continue   # residual of neglected higher WKB orders
            kept[pw] = c
        out_rows.append(EPoly.from_dict(kept))
    result = GSeries(out_rows, -1, order)
    _AFUN_CACHE[key] = result
    return result


# ----------------------------------------------------------------------
# Order-g coefficients for a general symmetric potential, by regularized
# quadrature.

def symmetric_order_g(geom, digits=40):
    """(a22, a20): the E^2 and E^0 coefficients of the order-g term of A.

    a22 = (1/2 + ln C)(-alpha2/2 + 3 alpha1^2/8) - tilde_a22 with the
    regularized integral tilde_a22; a20 comes from the matching square-root
    integral minus the B-function feedback P/24.  Conventions: geom stores
    rho = 1 - sum_k alpha_k u^k, while the closed formulas below use the
    opposite sign, so the stored values are negated on entry.
    """
    alphas = tuple(mpq(a) for a in geom.rho_alpha)
    nz = [i for i, a in enumerate(alphas) if a]
    if not nz or alphas[nz[0]] != 4:
        raise ValueError("geometry is not in the symmetric class")
    m = nz[0] + 1
    a1 = -alphas[0]
    a2 = -(alphas[1] if len(alphas) > 1 else QZERO)
    P = -a2 / 2 + 3 * a1 * a1 / 8

    # series of the two subtracted integrands about u = 0
    imax = 420
    s22 = {1: a1 / 2, 2: -P}
    s20 = {1: -a1 / 2, 2: -(a2 / 2 - a1 * a1 / 8)}
    for i in range(1, imax + 1):
        c_m = _binom_q(2 * i, i)                       # from (1-4u^m)^(-1/2)
        c_p = _binom_q(mpq(1, 2), i) * mpq(-4) ** i    # from (1-4u^m)^(1/2)
        s22[m * i] = s22.get(m * i, QZERO) + c_m
        s20[m * i] = s20.get(m * i, QZERO) + c_p
    for j in (1, 2):
        if s22.get(j) or s20.get(j):
            raise ArithmeticError(
                "regularized integrand diverges at the origin "
                "(u^%d subtraction failed)" % j)

    prec = int(digits * 3.4) + 60
    with mpmath.workprec(prec):
        def q2f(q):
            q = mpq(q)
            return mpmath.mpf(int(q.numerator)) / mpmath.mpf(int(q.denominator))

        # the turning point of 1 - 4 u^m is known in closed form; recompute
        # it at working precision rather than trusting the stored digits
        u0 = mpmath.mpf(4) ** (mpmath.mpf(-1) / m)
        cval = geom.prefactor_C.value \
            if isinstance(geom.prefactor_C, BigFloat) \
            else q2f(geom.prefactor_C)
        ln_c = mpmath.log(cval)
        uc = u0 / 2
        a1f, a2f, pf = q2f(a1), q2f(a2), q2f(P)

        def series_sum(table):
            acc = mpmath.mpf(0)
            for j, cj in sorted(table.items()):
                if j <= 2 or not cj:
                    continue
                acc += q2f(cj) * uc ** (j - 2) / (j - 2)
            return acc

        def quad_tail(kind):
            tc = mpmath.sqrt(1 - uc / u0)

            def f(t):
                w = 1 - t * t
                u = u0 * w
                s = mpmath.mpf(0)
                for i_ in range(m):
                    s += w ** i_
                rt = t * mpmath.sqrt(s)        # sqrt(rho) at u = u0 (1 - t^2)
                if kind == 22:
                    val = 1 / rt - 1 + a1f / 2 * u - pf * u * u
                else:
                    val = rt - 1 - a1f / 2 * u - (a2f / 2 - a1f * a1f / 8) * u * u
                return val / u ** 3 * 2 * u0 * t

            return mpmath.quad(f, [0, tc])

        i22 = series_sum(s22) + quad_tail(22)
        i20 = series_sum(s20) + quad_tail(20)
        at22 = 2 * i22 - 1 / u0 ** 2 + a1f / u0 + 2 * pf * mpmath.log(u0)
        a22_val = (mpmath.mpf(1) / 2 + ln_c) * pf - at22
        log_c20 = a2f / 8 - a1f * a1f / 32
        a20_val = i20 / 2 - 1 / (4 * u0 ** 2) - a1f / (4 * u0) \
            + log_c20 * (ln_c - mpmath.mpf(8) / 3 + 2 * mpmath.log(u0)) \
            - pf / 24
        return (BigFloat(a22_val, prec), BigFloat(a20_val, prec))
