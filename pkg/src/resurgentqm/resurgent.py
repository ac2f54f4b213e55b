"""Trans-series solutions of generalized quantization conditions.

The quantization condition for a symmetric double well, written for one
parity sector and pushed beyond leading order, determines the energy as a
formal trans-series: a perturbative series plus an infinite tower of
instanton sectors, each carrying powers of the nonperturbative factor
xi(g) = exp(-1/6g)/sqrt(pi*g) and of the formal logarithm chi = ln(-2/g).
This module solves that condition exactly, order by order in the instanton
number, with coefficients in the ring Q[gamma, zeta(2)..zeta(7)]:

* ``transeries_solve`` turns the exact B(E,g) and A(E,g) series into the
  coefficient tower e_{N,nkl} of a :class:`TransSeries`;
* ``leading_coefficients`` gives the g^0 tower at every instanton order in
  closed form from the leading condition alone (an independent route);
* ``realize`` evaluates a trans-series numerically under the analytic
  continuation ln(-2/g) -> ln(2/g) + i pi, reporting the imaginary part
  that is discarded (it cancels against lateral Borel sums);
* ``imag_two_instanton`` extracts the two-instanton imaginary part that
  drives the large-order growth of the perturbative series;
* ``leading_fredholm`` builds the leading-order spectral determinants for
  all supported potential families (symmetric, asymmetric, broken-symmetry,
  Fokker-Planck, periodic cosine and O(2)/O(nu) resonances), the cosine one
  through its 2x2 transfer-matrix reduction;
* ``angular_integral`` evaluates the angular factor that appears in the
  rotor/resonance determinants, with its branch fixed on the negative arc;
* ``fp_closed_levels`` builds the finite closed linear system that makes
  some levels of the tilted Fokker-Planck family algebraic in g.

Internally the solver works in a small commutative ring: polynomials in the
central formal symbol chi whose coefficients are g-truncated series over
ConstantPoly.  Division only ever happens by perturbative units (nonzero
rational head, no chi, no gamma/zeta), which the Newton-style reversion
guarantees.  All stored coefficients are reduced to a canonical zeta basis
in which products of even zeta values collapse to a single even zeta (or a
power of zeta(2) above weight six), so exact comparisons are literal.
"""

import math

import mpmath
from gmpy2 import mpq

from .exactnum import (
    QZERO, QONE, ConstantPoly, EPoly, GSeries, BigFloat, BigComplex,
    bernoulli_number, constant_eval, rat_to_str, rat_from_str,
)
from .potentials import PotentialSpec
from .perturbation import b_function
from .wkb import a_function

__all__ = [
    "TransSeries", "SpectralFunction", "RealizationReport",
    "LeadingTower", "ImaginaryPartSeries", "ClosedLevels",
    "DivergentIntegral",
    "transeries_solve", "leading_coefficients", "realize",
    "imag_two_instanton", "leading_fredholm", "angular_integral",
    "fp_closed_levels",
]

_HALF = mpq(1, 2)
_ACTION_HEAD = mpq(1, 3)     # the 1/g coefficient of A(E,g) in this normalization


# ----------------------------------------------------------------------
# canonical zeta basis

def _zeta_canonical(cp):
    """Collapse products of even zeta values inside every monomial.

    zeta(2)^a zeta(4)^b zeta(6)^c is a rational multiple of pi^(2a+4b+6c);
    the canonical representative is the single generator zeta(w) for total
    even weight w <= 6, and zeta(2)^(w/2) above that.  Odd zeta values and
    gamma are untouched.  This makes exact equality of coefficients litmus
    for exact equality of numbers.
    """
    out = ConstantPoly()
    for (ge, ze), q in cp.terms.items():
        a2, z3, a4, z5, a6, z7 = ze
        w = 2 * a2 + 4 * a4 + 6 * a6
        if w == 0 or (a2 + a4 + a6) == 1 and w <= 6:
            out = out + ConstantPoly({(ge, ze): q})
            continue
        # pi^w = 6^a2 * 90^a4 * 945^a6 * (this monomial's even part)
        piw = q / (mpq(6) ** a2 * mpq(90) ** a4 * mpq(945) ** a6)
        if w <= 6:
            factor = {2: mpq(6), 4: mpq(90), 6: mpq(945)}[w]
            newz = [0, z3, 0, z5, 0, z7]
            newz[w - 2] = 1
        else:
            factor = mpq(6) ** (w // 2)          # pi^w = 6^(w/2) zeta(2)^(w/2)
            newz = [w // 2, z3, 0, z5, 0, z7]
        out = out + ConstantPoly({(ge, tuple(newz)): piw * factor})
    return out


def _zeta_elem(k):
    """zeta(k) as a ConstantPoly; even k beyond 6 via Bernoulli numbers."""
    if k <= 7:
        return ConstantPoly.zeta(k)
    if k % 2:
        raise ValueError(
            "zeta(%d) is outside the exact constant ring Q[gamma,zeta2..zeta7]" % k)
    m = k // 2
    # zeta(2m) = (-1)^(m+1) B_{2m} (2 pi)^{2m} / (2 (2m)!), pi^{2m} = 6^m zeta2^m
    q = bernoulli_number(k) * mpq(2) ** k / (2 * math.factorial(k))
    if m % 2 == 0:
        q = -q
    return ConstantPoly({(0, (m, 0, 0, 0, 0, 0)): q * mpq(6) ** m})


# ----------------------------------------------------------------------
# the solver's working ring: chi-polynomials over truncated g-series

class _ChiPoly:
    """Element of Q[gamma,zeta][chi][[g]] truncated at g^order.

    ``terms`` maps (chi_power, g_power) -> ConstantPoly.  chi is central and
    formal; no relation is ever imposed on it.
    """

    __slots__ = ("order", "terms")

    def __init__(self, order, terms=None):
        self.order = order
        clean = {}
        if terms:
            for (k, l), c in terms.items():
                if l <= order and c:
                    clean[(k, l)] = c
        self.terms = clean

    @classmethod
    def rational(cls, q, order):
        q = mpq(q)
        return cls(order, {(0, 0): ConstantPoly.rational(q)} if q else None)

    @classmethod
    def from_gseries(cls, gs, order):
        terms = {}
        for r, c in gs.items():
            if r < 0:
                raise ValueError("negative g-power cannot enter the solver ring")
            if not c.is_constant():
                raise ValueError("E-dependent coefficient cannot enter the solver ring")
            if r <= order:
                terms[(0, r)] = ConstantPoly.rational(c.coeff(0))
        return cls(order, terms)

    def is_zero(self):
        return not self.terms

    def __add__(self, other):
        out = dict(self.terms)
        for key, c in other.terms.items():
            s = out.get(key)
            s = c if s is None else s + c
            if s:
                out[key] = s
            else:
                out.pop(key, None)
        res = _ChiPoly(self.order)
        res.terms = out
        return res

    def __sub__(self, other):
        return self + other.scale(-1)

    def __mul__(self, other):
        L = self.order
        out = {}
        for (k1, l1), c1 in self.terms.items():
            for (k2, l2), c2 in other.terms.items():
                l = l1 + l2
                if l > L:
                    continue
                key = (k1 + k2, l)
                p = c1 * c2
                s = out.get(key)
                s = p if s is None else s + p
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        res = _ChiPoly(L)
        res.terms = out
        return res

    def scale(self, c):
        """Multiply by a ConstantPoly or rational scalar."""
        if not isinstance(c, ConstantPoly):
            c = ConstantPoly.rational(c)
        if not c:
            return _ChiPoly(self.order)
        out = {}
        for key, v in self.terms.items():
            p = v * c
            if p:
                out[key] = p
        res = _ChiPoly(self.order)
        res.terms = out
        return res

    def g_shift(self, r):
        res = _ChiPoly(self.order)
        res.terms = {(k, l + r): c for (k, l), c in self.terms.items()
                     if l + r <= self.order}
        return res

    def unit_inverse(self):
        """Inverse of a perturbative unit (rational g^0 head, nothing else at g^0)."""
        head = None
        for (k, l), c in self.terms.items():
            if l == 0:
                if k != 0 or not c.is_rational():
                    raise ArithmeticError(
                        "division requires a perturbative unit head (rational, log-free)")
                head = c.rational_part()
        if not head:
            raise ArithmeticError("division by a series with vanishing g^0 head")
        c0 = 1 / head
        # u = head (1 - v) with v supported on g >= 1
        v = _ChiPoly(self.order)
        v.terms = {key: c * (-c0) for key, c in self.terms.items() if key[1] > 0}
        acc = _ChiPoly.rational(1, self.order)
        pw = _ChiPoly.rational(1, self.order)
        for _ in range(self.order):
            pw = pw * v
            if pw.is_zero():
                break
            acc = acc + pw
        return acc.scale(c0)

    def exp(self):
        """exp of an element with no g^0 part (so the series terminates)."""
        if any(l == 0 for (_, l) in self.terms):
            raise ArithmeticError("exponential needs a vanishing g^0 part")
        acc = _ChiPoly.rational(1, self.order)
        pw = _ChiPoly.rational(1, self.order)
        f = QONE
        for j in range(1, self.order + 1):
            pw = pw * self
            if pw.is_zero():
                break
            f = f * j
            acc = acc + pw.scale(1 / f)
        return acc


def _czero(order):
    return _ChiPoly(order)


# -- series in a nilpotent expansion variable over _ChiPoly ------------
# Plain lists indexed by the power; the length fixes the truncation.

def _bmul(a, b, order):
    n = len(a)
    out = [_czero(order) for _ in range(n)]
    for i, ai in enumerate(a):
        if ai.is_zero():
            continue
        for j, bj in enumerate(b):
            if i + j >= n:
                break
            if not bj.is_zero():
                out[i + j] = out[i + j] + ai * bj
    return out


def _bcompose(outer, inner, order):
    """outer(inner(x)) for lists of _ChiPoly; inner[0] must vanish."""
    n = len(inner)
    if not inner[0].is_zero():
        raise ValueError("composition needs a vanishing constant term")
    acc = [_czero(order) for _ in range(n)]
    acc[0] = outer[0]
    pw = [_czero(order) for _ in range(n)]
    pw[0] = _ChiPoly.rational(1, order)
    for m in range(1, len(outer)):
        pw = _bmul(pw, inner, order)
        cm = outer[m]
        if cm.is_zero():
            continue
        for i in range(n):
            if not pw[i].is_zero():
                acc[i] = acc[i] + pw[i] * cm
    return acc


def _bexp(arg, order):
    """exp of a list with arg[0] = 0; exact because the variable is nilpotent."""
    n = len(arg)
    if not arg[0].is_zero():
        raise ValueError("series exponential needs a vanishing constant term")
    acc = [_czero(order) for _ in range(n)]
    acc[0] = _ChiPoly.rational(1, order)
    pw = list(acc)
    f = QONE
    for j in range(1, n):
        pw = _bmul(pw, arg, order)
        f = f * j
        inv = 1 / f
        for i in range(n):
            if not pw[i].is_zero():
                acc[i] = acc[i] + pw[i].scale(inv)
    return acc


def _brevert(h, order):
    """Compositional inverse of h (h[0]=0, h[1] a perturbative unit).

    Solved order by order: each new coefficient comes from one composition
    and one division by h[1], which is the only division in the solver.
    """
    n = len(h)
    if not h[0].is_zero():
        raise ValueError("reversion needs a vanishing constant term")
    inv1 = h[1].unit_inverse()
    t = [_czero(order) for _ in range(n)]
    t[1] = inv1
    for m in range(2, n):
        resid = _bcompose(h, t, order)[m]
        t[m] = resid.scale(-1) * inv1
    return t


# ----------------------------------------------------------------------
# TransSeries

class TransSeries:
    """Exact trans-series data for one level of the double-well family.

    The term stored under (n, k, l) multiplies

        (2/g)^(N n) * (-eps * xi(g))^n * chi^k * g^l,

    with xi(g) = exp(-1/6g)/sqrt(pi g), chi the formal logarithm ln(-2/g),
    and eps = +1/-1 the parity sector.  ``perturbative`` holds the rational
    coefficients of the instanton-free series, starting at g^0.
    """

    __slots__ = ("N", "parity", "perturbative", "instanton", "n_max", "l_max")

    def __init__(self, N, parity, perturbative, instanton, n_max=None, l_max=None):
        if parity not in ("+", "-"):
            raise ValueError("parity must be '+' or '-'")
        self.N = int(N)
        self.parity = parity
        self.perturbative = tuple(mpq(c) for c in perturbative)
        inst = {}
        for (n, k, l), c in instanton.items():
            if not isinstance(c, ConstantPoly):
                c = ConstantPoly.rational(c)
            if not c:
                continue
            if n < 1 or l < 0 or not 0 <= k <= n - 1:
                raise ValueError(
                    "instanton key (n=%d, k=%d, l=%d) violates the log-power bound"
                    % (n, k, l))
            inst[(int(n), int(k), int(l))] = c
        self.instanton = inst
        self.n_max = n_max if n_max is not None else max(
            (n for n, _, _ in inst), default=0)
        self.l_max = l_max if l_max is not None else max(
            [len(self.perturbative) - 1] + [l for _, _, l in inst])
        for n in range(1, self.n_max + 1):
            top = inst.get((n, n - 1, 0))
            if top is not None and not top.is_rational():
                raise ValueError(
                    "top log coefficient at instanton order %d must be rational" % n)

    def coeff(self, n, k, l):
        return self.instanton.get((n, k, l), ConstantPoly())

    def log_series(self, n, k):
        """Coefficients of chi^k at instanton order n, listed by g-power."""
        return [self.coeff(n, k, l) for l in range(self.l_max + 1)]

    def with_parity(self, parity):
        return TransSeries(self.N, parity, self.perturbative, self.instanton,
                           self.n_max, self.l_max)

    def to_json(self):
        return {
            "N": self.N,
            "parity": self.parity,
            "perturbative": [rat_to_str(c) for c in self.perturbative],
            "instanton": [
                {"n": n, "k": k, "l": l, "coeff": self.instanton[(n, k, l)].to_json()}
                for (n, k, l) in sorted(self.instanton)
            ],
        }

    @classmethod
    def from_json(cls, data):
        inst = {}
        for entry in data["instanton"]:
            key = (int(entry["n"]), int(entry["k"]), int(entry["l"]))
            inst[key] = ConstantPoly.from_json(entry["coeff"])
        return cls(data["N"], data["parity"],
                   [rat_from_str(s) for s in data["perturbative"]], inst)

    def __repr__(self):
        return "TransSeries(N=%d, parity=%s, %d instanton terms, l<=%d)" % (
            self.N, self.parity, len(self.instanton), self.l_max)


# ----------------------------------------------------------------------
# the trans-series solver

def _perturbative_branch(B, target, order):
    """Rational g-series E(g) with B(E(g), g) = target, by Newton iteration."""
    E = GSeries.const(target, order)
    steps = 1
    while (1 << steps) <= order + 1:
        steps += 1
    for _ in range(steps + 1):
        err = B.subst_E(E) - target
        if all(not c for _, c in err.items()):
            break
        corr = err * B.deriv_E().subst_E(E).recip()
        E = (E - corr).truncate(order)
    resid = B.subst_E(E) - target
    if any(c for _, c in resid.items()):
        raise AssertionError("perturbative branch failed to converge")
    return E


def _dense_epoly(p):
    if p.min_power < 0:
        raise ValueError("Laurent coefficient where a polynomial was expected")
    return [p.coeff(i) for i in range(p.max_power + 1)]


def transeries_solve(B, A, N, n_max, l_max, parity="+"):
    """Solve the parity quantization condition as a formal trans-series.

    ``B`` and ``A`` are the exact quantization and instanton functions of the
    double-well family (GSeries in g with polynomial E-coefficients; A starts
    at 1/(3g)).  The condition for parity eps, written for the shifted
    variable b = B - (N + 1/2), is

        b * (1+b) * ... * (N+b)
            = sigma * Gamma(1-b) * exp(b*chi) * exp(-Abar/2),

    with sigma = -eps (2/g)^N xi(g) and Abar = A - 1/(3g).  The solver
    expands E = E0(g) + delta(b), eliminates b by series reversion in sigma,
    and reads off the exact coefficients e_{N,nkl} of the trans-series.
    Division happens only by perturbative units; chi stays formal.
    """
    N = int(N)
    n_max = int(n_max)
    l_max = int(l_max)
    if N < 0:
        raise ValueError("level index must be >= 0")
    if n_max < 1 or l_max < 0:
        raise ValueError("need n_max >= 1 and l_max >= 0")
    if B.min_g_power != 0 or B.coeff(0) != EPoly([0, 1]):
        raise ValueError("B must be a power series in g starting with E")
    if B.truncation_order < l_max:
        raise ValueError("B series stops at g^%d, need g^%d"
                         % (B.truncation_order, l_max))
    if A.truncation_order < l_max:
        raise ValueError("A series stops at g^%d, need g^%d"
                         % (A.truncation_order, l_max))
    head = A.coeff(-1)
    if not (head.is_constant() and head.coeff(0) == _ACTION_HEAD):
        raise ValueError("A must carry the action head 1/(3g) of this family")

    L = l_max
    target = N + _HALF
    E0 = _perturbative_branch(B, target, L)
    pert = [E0.coeff(l).coeff(0) for l in range(L + 1)]

    # Taylor coefficients of B around the perturbative branch
    fs = [None]
    D = B
    fact = QONE
    for m in range(1, n_max + 1):
        D = D.deriv_E()
        fact = fact * m
        fs.append(_ChiPoly.from_gseries(D.subst_E(E0) * (1 / fact), L))
    fs[0] = _czero(L)
    delta = _brevert(fs, L)                      # E(b) - E0 as a series in b

    blen = n_max                                  # factor series goes to b^(n_max-1)
    Eb = [_czero(L) for _ in range(blen)]
    Eb[0] = _ChiPoly.from_gseries(E0, L)
    for m in range(1, blen):
        Eb[m] = delta[m] if m < len(delta) else _czero(L)

    # Abar(E(b))/2, rows of A with the 1/(3g) head removed
    S = [_czero(L) for _ in range(blen)]
    for r in range(0, min(A.truncation_order, L) + 1):
        row = A.coeff(r)
        if row.is_zero():
            continue
        acc = [_czero(L) for _ in range(blen)]
        for c in reversed(_dense_epoly(row)):
            acc = _bmul(acc, Eb, L)
            acc[0] = acc[0] + _ChiPoly.rational(c, L)
        for i in range(blen):
            S[i] = S[i] + acc[i].g_shift(r)
    S = [s.scale(_HALF) for s in S]

    # assemble  b * prod(k+b) * Gamma(1-b)^{-1} * e^{-b chi} * e^{Abar/2}
    expo = [_czero(L) for _ in range(blen)]
    if blen > 1:
        gam_chi = _ChiPoly(L)
        gam_chi.terms = {(1, 0): ConstantPoly.rational(-1),
                         (0, 0): -ConstantPoly.gamma_const()}
        expo[1] = gam_chi + S[1]
    for j in range(2, blen):
        expo[j] = _ChiPoly(L, {(0, 0): _zeta_elem(j) * mpq(-1, j)}) + S[j]
    factor = _bexp(expo, L)
    unit = S[0].exp()
    factor = [f * unit for f in factor]

    poly = [QONE]                                # prod_{k=1..N} (k + b)
    for k in range(1, N + 1):
        poly = [k * poly[i] + (poly[i - 1] if i else QZERO)
                for i in range(len(poly))] + [poly[-1]]
    pseries = [_ChiPoly.rational(poly[i], L) if i < len(poly) else _czero(L)
               for i in range(blen)]
    factor = _bmul(pseries, factor, L)

    H = [_czero(L)] + factor[: n_max]            # the explicit leading b
    bsigma = _brevert(H, L)

    shift = _bcompose(delta + [_czero(L)] * (n_max + 1 - len(delta)), bsigma, L)
    if not shift[0].is_zero():
        raise AssertionError("instanton shift acquired a sigma-free part")

    inst = {}
    for n in range(1, n_max + 1):
        for (k, l), c in shift[n].terms.items():
            if k > n - 1:
                raise AssertionError("log power %d exceeds bound at order %d" % (k, n))
            canon = _zeta_canonical(c)
            if canon:
                inst[(n, k, l)] = canon
    return TransSeries(N, parity, pert, inst, n_max, l_max)


# ----------------------------------------------------------------------
# leading instanton coefficients in closed form

class LeadingTower(list):
    """List of the g^0 coefficients at one instanton order, top log first.

    ``verified`` records whether the order lies in the range that has been
    checked against independently published values.
    """

    def __init__(self, values, verified):
        super().__init__(values)
        self.verified = verified


def leading_coefficients(n):
    """The tower e_{0,nk0}, k = n-1 .. 0, from the leading condition alone.

    At g^0 the quantization condition collapses to b e^{-b(gamma+chi)} times
    the zeta tail of ln Gamma(1-b), so Lagrange inversion gives the full
    chi-polynomial at instanton order n as

        (1/n) [b^(n-1)] exp( n (gamma+chi) b + n sum_{k>=2} zeta(k) b^k / k ).

    Orders up to 8 are cross-checked against published values; order 9 is
    computable in the ring (its even zeta(8) reduces to zeta(2)^4) but is
    flagged unverified; order 10 would need zeta(9) and raises.
    """
    n = int(n)
    if n < 1:
        raise ValueError("instanton order must be >= 1")
    order = n - 1

    def ymul(a, b):
        out = [dict() for _ in range(order + 1)]
        for i, ai in enumerate(a):
            for j, bj in enumerate(b):
                if i + j > order:
                    break
                tgt = out[i + j]
                for k1, c1 in ai.items():
                    for k2, c2 in bj.items():
                        k = k1 + k2
                        s = tgt.get(k)
                        p = c1 * c2
                        tgt[k] = p if s is None else s + p
        return out

    arg = [dict() for _ in range(order + 1)]
    if order >= 1:
        arg[1] = {1: ConstantPoly.rational(n),
                  0: ConstantPoly.gamma_const() * n}
    for k in range(2, order + 1):
        arg[k] = {0: _zeta_elem(k) * mpq(n, k)}
    acc = [dict() for _ in range(order + 1)]
    acc[0] = {0: ConstantPoly.rational(1)}
    pw = [d.copy() for d in acc]
    f = QONE
    for j in range(1, order + 1):
        pw = ymul(pw, arg)
        f = f * j
        for i in range(order + 1):
            for k, c in pw[i].items():
                add = c * (1 / f)
                s = acc[i].get(k)
                acc[i][k] = add if s is None else s + add
    top = acc[order]
    values = []
    for k in range(n - 1, -1, -1):
        c = top.get(k, ConstantPoly()) * mpq(1, n)
        values.append(_zeta_canonical(c))
    return LeadingTower(values, verified=(n <= 8))


# ----------------------------------------------------------------------
# numerical realization

class RealizationReport:
    """What the analytic continuation discarded, order by order."""

    __slots__ = ("imag_discarded", "by_order", "continuation")

    def __init__(self, imag_discarded, by_order, continuation):
        self.imag_discarded = imag_discarded
        self.by_order = by_order
        self.continuation = continuation

    def __repr__(self):
        return "RealizationReport(imag=%s, orders=%s)" % (
            self.imag_discarded.to_str(6), sorted(self.by_order))


def _to_mpf(g):
    if isinstance(g, BigFloat):
        return g.value
    if isinstance(g, type(QZERO)):
        return mpmath.mpf(g.numerator) / mpmath.mpf(g.denominator)
    return mpmath.mpf(g)


def realize(ts, g, digits=40):
    """Evaluate a trans-series at positive coupling.

    The formal logarithm is continued as ln(-2/g) -> ln(2/g) + i pi; the
    real part is returned and the imaginary part generated by the i pi is
    reported separately (physically it cancels against the lateral Borel
    sum of the perturbative series, so discarding it is the point).
    """
    prec = max(64, int(round((digits + 10) * 3.3219281)))
    eps = 1 if ts.parity == "+" else -1
    with mpmath.workprec(prec):
        gv = _to_mpf(g)
        if not gv > 0:
            raise ValueError("realization needs g > 0")
        xi = mpmath.exp(-1 / (6 * gv)) / mpmath.sqrt(mpmath.pi * gv)
        chi = mpmath.mpc(mpmath.log(2 / gv), mpmath.pi)
        total = mpmath.mpc(0)
        for l, c in enumerate(ts.perturbative):
            total += mpmath.mpf(c.numerator) / mpmath.mpf(c.denominator) * gv ** l
        by_order = {}
        for n in range(1, ts.n_max + 1):
            block = mpmath.mpc(0)
            for (nn, k, l), c in ts.instanton.items():
                if nn != n:
                    continue
                v = constant_eval(c, prec).value
                block += v * chi ** k * gv ** l
            if block:
                term = (2 / gv) ** (ts.N * n) * (-eps * xi) ** n * block
                by_order[n] = BigComplex(term, prec)
                total += term
        return (BigFloat(total.real, prec),
                RealizationReport(BigFloat(total.imag, prec), by_order,
                                  "ln(-2/g) -> ln(2/g) + i*pi"))


# ----------------------------------------------------------------------
# two-instanton imaginary part

class ImaginaryPartSeries:
    """Series data for the two-instanton imaginary part of a level.

    Represents +/- (2/g)^(2N) (exp(-1/3g)/g) * sum_l c_l g^l; the overall
    sign is the lateral-summation ambiguity, so only the magnitude carries
    meaning on its own.
    """

    __slots__ = ("N", "coefficients")

    def __init__(self, N, coefficients):
        self.N = int(N)
        self.coefficients = tuple(mpq(c) for c in coefficients)

    def evaluate(self, g, digits=30):
        """Magnitude of the imaginary part at coupling g (positive branch)."""
        prec = max(64, int(round((digits + 10) * 3.3219281)))
        with mpmath.workprec(prec):
            gv = _to_mpf(g)
            s = mpmath.mpf(0)
            for l, c in enumerate(self.coefficients):
                s += mpmath.mpf(c.numerator) / mpmath.mpf(c.denominator) * gv ** l
            val = (2 / gv) ** (2 * self.N) * mpmath.exp(-1 / (3 * gv)) / gv * s
            return BigFloat(val, prec)

    def __repr__(self):
        return "ImaginaryPartSeries(N=%d, %d terms)" % (self.N, len(self.coefficients))


def imag_two_instanton(N, order):
    """Two-instanton imaginary part for double-well level N, to g^order.

    The coefficients are exactly the chi-series of the two-instanton block;
    the continuation chi -> ln(2/g) + i pi turns pi * xi(g)^2 into
    exp(-1/3g)/g, which is the returned prefactor convention.
    """
    p = PotentialSpec.double_well()
    ts = transeries_solve(b_function(p, order), a_function(p, order),
                          N, 2, order)
    coeffs = []
    for l in range(order + 1):
        c = ts.coeff(2, 1, l)
        if not c.is_rational():
            raise AssertionError("two-instanton log series must be rational")
        coeffs.append(c.rational_part())
    return ImaginaryPartSeries(N, coeffs)


# ----------------------------------------------------------------------
# leading-order spectral determinants

_FAMILIES = ("symmetric", "asymmetric", "broken", "fokker_planck",
             "cosine", "o2", "onu")


class SpectralFunction:
    """Leading-order spectral determinant Delta(E) for one family.

    Callable at complex E.  ``lam`` and ``mu`` are the family's instanton
    fugacity and fugacity base; every complex power of a negative base is
    taken with an explicitly recorded branch of the logarithm (upper sheet
    for the double-well-like families, lower sheet in the cosine sector,
    matching the sign conventions of the quantization conditions they
    expand).
    """

    __slots__ = ("family", "params", "lam", "mu", "prec", "_fn", "_extra")

    def __init__(self, family, params, lam, mu, prec, fn, extra=None):
        self.family = family
        self.params = dict(params)
        self.lam = lam
        self.mu = mu
        self.prec = prec
        self._fn = fn
        self._extra = extra or {}

    def __call__(self, E):
        with mpmath.workprec(self.prec):
            if isinstance(E, (BigComplex, BigFloat)):
                E = E.value
            return BigComplex(self._fn(mpmath.mpc(E)), self.prec)

    def transfer_matrix_det(self, E):
        """Cosine only: det(1 - lam Gamma(1/2-E) mu^E M) for the 2x2 Ising
        transfer matrix M; equals Gamma(1/2-E) * Delta(E)."""
        fn = self._extra.get("transfer")
        if fn is None:
            raise ValueError("transfer-matrix form exists only for the cosine family")
        with mpmath.workprec(self.prec):
            if isinstance(E, (BigComplex, BigFloat)):
                E = E.value
            return BigComplex(fn(mpmath.mpc(E)), self.prec)

    def __repr__(self):
        return "SpectralFunction(%s, %s)" % (
            self.family, {k: str(v) for k, v in self.params.items()})


def leading_fredholm(family, params, digits=40):
    """Build the leading multi-instanton spectral determinant of a family.

    Families and their parameters (g always required):

    * ``symmetric``      C (default 1), a (default 1/3)
    * ``asymmetric``     omega >= 1, C (default 1), a (default 1/3)
    * ``broken``         eta, C (default 1), a (default 1/3)
    * ``fokker_planck``  (C = 1, a = 1/3 fixed)
    * ``cosine``         phi; the determinant is built from the 2x2
                          transfer matrix over instanton/anti-instanton signs
    * ``o2``             l (angular momentum), g < 0
    * ``onu``            j = l + nu/2 - 1, g < 0

    The zeros of the returned callable are the leading-order energy levels
    (resonances for the negative-coupling families).
    """
    fam = str(family).lower()
    if fam not in _FAMILIES:
        raise ValueError("unknown family %r; expected one of %s" % (family, _FAMILIES))
    params = dict(params)
    if "g" not in params:
        raise ValueError("params must contain the coupling g")
    prec = max(64, int(round((digits + 10) * 3.3219281)))

    with mpmath.workprec(prec):
        g = _to_mpf(params["g"])
        if fam in ("o2", "onu"):
            if not g < 0:
                raise ValueError("resonance families need g < 0")
        elif not g > 0:
            raise ValueError("family %s needs g > 0" % fam)

        def rg(name, default=None):
            if name in params:
                return _to_mpf(params[name])
            if default is None:
                raise ValueError("family %s needs parameter %s" % (fam, name))
            return mpmath.mpf(default)

        if fam == "symmetric":
            C, a = rg("C", 1), rg("a", mpmath.mpf(1) / 3)
            lam = mpmath.exp(-a / g) / (2 * mpmath.pi)
            logmu = mpmath.mpc(mpmath.log(2 * C / g), mpmath.pi)

            def fn(E, lam=lam, logmu=logmu):
                return 1 / mpmath.gamma(mpmath.mpf(1) / 2 - E) ** 2 \
                    + mpmath.exp(2 * E * logmu) * lam
            return SpectralFunction(fam, params, lam, mpmath.exp(logmu), prec, fn)

        if fam == "asymmetric":
            omega = rg("omega")
            if not omega >= 1:
                raise ValueError("asymmetric family needs omega >= 1")
            C, a = rg("C", 1), rg("a", mpmath.mpf(1) / 3)
            lam = mpmath.exp(-a / g) / (2 * mpmath.pi)
            logmu1 = mpmath.mpc(mpmath.log(2 * C / g), mpmath.pi)
            logmu2 = mpmath.mpc(mpmath.log(2 * C / (omega * g)), mpmath.pi)

            def fn(E, lam=lam, m1=logmu1, m2=logmu2, w=omega):
                h = mpmath.mpf(1) / 2
                return 1 / (mpmath.gamma(h - E / w) * mpmath.gamma(h - E)) \
                    + mpmath.exp(E * m1 + (E / w) * m2) * lam
            return SpectralFunction(fam, params, lam,
                                    (mpmath.exp(logmu1), mpmath.exp(logmu2)), prec, fn)

        if fam == "broken":
            eta = rg("eta")
            C, a = rg("C", 1), rg("a", mpmath.mpf(1) / 3)
            lam = mpmath.exp(-a / g) / (2 * mpmath.pi)
            logmu = mpmath.mpc(mpmath.log(2 * C / g), mpmath.pi)

            def fn(E, lam=lam, logmu=logmu, eta=eta):
                h = mpmath.mpf(1) / 2
                return 1 / (mpmath.gamma(h - E) * mpmath.gamma(h + eta - E)) \
                    + mpmath.exp((2 * E - eta) * logmu) * lam
            return SpectralFunction(fam, params, lam, mpmath.exp(logmu), prec, fn)

        if fam == "fokker_planck":
            lam = mpmath.exp(-1 / (3 * g)) / (2 * mpmath.pi)
            logmu = mpmath.mpc(mpmath.log(2 / g), mpmath.pi)

            def fn(E, lam=lam, logmu=logmu):
                return 1 / (mpmath.gamma(-E) * mpmath.gamma(1 - E)) \
                    + mpmath.exp(2 * E * logmu) * lam
            return SpectralFunction(fam, params, lam, mpmath.exp(logmu), prec, fn)

        if fam == "cosine":
            phi = rg("phi")
            lam = mpmath.exp(-1 / (2 * g)) / mpmath.sqrt(2 * mpmath.pi)
            logmu = mpmath.log(2 / g)
            # (-2/g)^E on the lower sheet, fixed by the branch choice
            # ln(eps_i eps_{i+1}) = -(i pi/2)(1 - eps_i eps_{i+1})
            loneg = mpmath.mpc(logmu, -mpmath.pi)

            def fn(E, lam=lam, logmu=logmu, loneg=loneg, phi=phi):
                h = mpmath.mpf(1) / 2
                return 1 / mpmath.gamma(h - E) \
                    - 2 * mpmath.cos(phi) * lam * mpmath.exp(E * logmu) \
                    + lam ** 2 * mpmath.exp(E * (logmu + loneg)) \
                    / mpmath.gamma(h + E)

            def transfer(E, lam=lam, logmu=logmu, phi=phi):
                h = mpmath.mpf(1) / 2
                t = lam * mpmath.gamma(h - E) * mpmath.exp(E * logmu)
                off = mpmath.exp(-1j * mpmath.pi * (E - h))
                return (1 - t * mpmath.exp(1j * phi)) \
                    * (1 - t * mpmath.exp(-1j * phi)) - t ** 2 * off ** 2
            return SpectralFunction(fam, params, lam, mpmath.exp(logmu), prec,
                                    fn, {"transfer": transfer})

        # o2 / onu resonances, g < 0
        j = rg("l") if fam == "o2" else rg("j")
        if fam == "o2" and j != mpmath.floor(j):
            raise ValueError("o2 family needs integer angular momentum l")
        lam = -1j * mpmath.exp(1 / (3 * g))
        logmu = mpmath.log(-2 / g)

        def fn(E, j=j, logmu=logmu, g=g):
            return 1 / mpmath.gamma((j + 1 - E) / 2) \
                - 1j * mpmath.exp(E * logmu) \
                * mpmath.exp(1j * mpmath.pi * (E + j + 1) / 2) \
                * mpmath.exp(1 / (3 * g)) / mpmath.gamma((j + 1 + E) / 2)
        return SpectralFunction(fam, params, lam, -4 / g, prec, fn)


# ----------------------------------------------------------------------
# the angular integral of the rotor/resonance sectors

class DivergentIntegral(ArithmeticError):
    """Signed-infinity report for a Gamma pole of the angular integral.

    ``location`` is the offending value of s, ``residue`` the coefficient R
    in I(s) ~ R/(s - location), so the sign of the divergence on each side
    of the pole can be read off.
    """

    def __init__(self, message, location, residue):
        super().__init__(message)
        self.location = location
        self.residue = residue


def angular_integral(s, l, mu=2, digits=40):
    """Angular factor (mu/2)^(s+1) e^{i pi (s+l)/2} Gamma((l-s)/2)/Gamma((s+l)/2+1).

    This is the closed form of the phase-average of e^{i l phi} (cos phi)^s
    (times the mu-dependent radial factor), with the branch on the negative
    arc fixed as (cos phi)^s = |cos phi|^s e^{i pi s}.  The equivalent
    reflection form, manifestly even in l, is

        -(mu/2)^(s+1) (pi/sin pi s) (1 + (-1)^l e^{i pi s})
            / [Gamma((s-l)/2+1) Gamma((s+l)/2+1)],

    and both are evaluated and compared whenever s is away from integers.
    A pole of Gamma((l-s)/2), i.e. s = l + 2m with m >= 0, makes the
    integral diverge; that raises :class:`DivergentIntegral` carrying the
    residue so the sign of the infinity is recoverable.
    """
    l = int(l)
    prec = max(64, int(round((digits + 10) * 3.3219281)))
    with mpmath.workprec(prec):
        s = mpmath.mpc(s)
        muv = mpmath.mpc(mu)
        z = (l - s) / 2
        tol = mpmath.mpf(2) ** (-prec // 2)
        if abs(s.imag) < tol:
            zr = z.real
            nearest = mpmath.floor(zr + mpmath.mpf(1) / 2)
            if nearest <= 0 and abs(zr - nearest) < tol:
                m = int(-nearest)
                k = (muv / 2) ** (s + 1) * mpmath.exp(1j * mpmath.pi * (s + l) / 2) \
                    / mpmath.gamma((s + l) / 2 + 1)
                residue = BigComplex(-2 * (-1) ** m / mpmath.factorial(m) * k, prec)
                raise DivergentIntegral(
                    "angular integral diverges: Gamma((l-s)/2) pole at s = %d + 2*%d"
                    % (l, m), BigComplex(s, prec), residue)
        val = (muv / 2) ** (s + 1) * mpmath.exp(1j * mpmath.pi * (s + l) / 2) \
            * mpmath.gamma(z) / mpmath.gamma((s + l) / 2 + 1)
        sin = mpmath.sin(mpmath.pi * s)
        if abs(sin) > mpmath.mpf(1) / 4:
            alt = -(muv / 2) ** (s + 1) * (mpmath.pi / sin) \
                * (1 + (-1) ** l * mpmath.exp(1j * mpmath.pi * s)) \
                / (mpmath.gamma((s - l) / 2 + 1) * mpmath.gamma((s + l) / 2 + 1))
            if abs(alt - val) > mpmath.mpf(2) ** (-prec + 24) * (1 + abs(val)):
                raise ArithmeticError("angular integral forms disagree")
        return BigComplex(val, prec)


# ----------------------------------------------------------------------
# closed levels of the tilted Fokker-Planck family

class ClosedLevels:
    """Finite algebraic spectrum data for tilt parameter j = -N-1.

    ``char_poly`` is the monic characteristic condition, a GSeries whose
    g^r coefficient is a polynomial in E; ``size`` is N+1.
    """

    __slots__ = ("j", "size", "char_poly")

    def __init__(self, j, size, char_poly):
        self.j = j
        self.size = size
        self.char_poly = char_poly

    def roots(self, g=0, digits=40):
        """All size roots of the condition at numeric coupling g."""
        prec = max(64, int(round((digits + 10) * 3.3219281)))
        with mpmath.workprec(prec):
            gv = _to_mpf(g)
            coeffs = []
            for p in range(self.size, -1, -1):
                acc = mpmath.mpf(0)
                for r, row in self.char_poly.items():
                    c = row.coeff(p)
                    if c:
                        acc += mpmath.mpf(c.numerator) / mpmath.mpf(c.denominator) \
                            * gv ** r
                coeffs.append(acc)
            return [BigComplex(r, prec)
                    for r in mpmath.polyroots(coeffs, maxsteps=200, extraprec=prec)]

    def __repr__(self):
        return "ClosedLevels(j=%d, size=%d)" % (self.j, self.size)


def fp_closed_levels(j, W_coeffs):
    """Characteristic condition of the closed level system at negative integer tilt.

    For the tilted Fokker-Planck family the level recursion closes when the
    tilt j equals -N-1: the scaled amplitude vector satisfies an
    (N+1)x(N+1) linear system whose matrix has superdiagonal
    -(n+1)(j+1+n) and lower band 2^k g^(k-1) W_k, where W_k are the Taylor
    coefficients of the drift function about its zero (the standard quartic
    normalization has W_1 = 1/2).  The energy must be an eigenvalue, so it
    solves a degree-(N+1) polynomial whose g-dependence is itself
    polynomial; at g = 0 the roots sit at (1 - |j| + 2k) sqrt(2 W_1).
    """
    j = mpq(j)
    if j.denominator != 1 or j >= 0:
        raise ValueError("closed level systems need a negative integer tilt j")
    j = int(j)
    N = -j - 1
    W = [mpq(c) for c in W_coeffs]
    if len(W) < N:
        raise ValueError("need %d drift coefficients for j = %d, got %d"
                         % (N, j, len(W)))
    dim = N + 1
    gmax = max(N - 1, 0)

    def entry(r, c):
        # (matrix - E) entry as an EPoly-in-E per g-power dict
        if c == r + 1:
            return {0: EPoly.const(-(r + 1) * (j + 1 + r))}
        if c == r:
            return {0: EPoly([0, -1])}
        if c < r:
            k = r - c
            return {k - 1: EPoly.const(mpq(2) ** k * W[k - 1])}
        return {}

    def dmul(a, b):
        out = {}
        for ra, pa in a.items():
            for rb, pb in b.items():
                r = ra + rb
                p = pa * pb
                out[r] = out.get(r, EPoly()) + p
        return {r: p for r, p in out.items() if p}

    def dadd(a, b):
        out = dict(a)
        for r, p in b.items():
            out[r] = out.get(r, EPoly()) + p
        return {r: p for r, p in out.items() if p}

    def dscale(a, q):
        return {r: p * q for r, p in a.items()}

    # the transpose is upper Hessenberg: leading principal minors by the
    # standard last-column expansion
    minors = [{0: EPoly.const(1)}]
    for m in range(1, dim + 1):
        acc = dmul(entry(m - 1, m - 1), minors[m - 1])
        prod = {0: EPoly.const(1)}
        sign = 1
        for k in range(m - 1, 0, -1):
            prod = dmul(prod, entry(k, k - 1))
            sign = -sign
            term = dmul(entry(k - 1, m - 1), prod)
            acc = dadd(acc, dscale(term, sign))
        minors.append(acc)
    det = minors[dim]
    if dim % 2:
        det = dscale(det, -1)                    # monic in E

    rows = [det.get(r, EPoly()) for r in range(gmax + 1)]
    char = GSeries(rows, 0, gmax)
    if char.coeff(0).coeff(dim) != 1:
        raise AssertionError("characteristic condition failed to come out monic")
    return ClosedLevels(j, dim, char)
