"""Exact arithmetic foundation.

Everything downstream (perturbation series, WKB contour integrals,
trans-series towers) is built on four exact containers plus a pair of
precision-tracked floats:

* big rationals (gmpy2.mpq, always lowest terms),
* ``ConstantPoly`` -- the ring Q[gamma, zeta(2)..zeta(7)] in which
  multi-instanton coefficients live,
* ``EPoly``/``GSeries`` -- (Laurent) polynomials in the energy E with a
  truncated power series in the coupling g on top,
* ``LogLaurentSeries`` -- sums of  c * E^p * ln(E g/2)^q * g^r  produced by
  the contour-integral machinery,
* ``GammaLaurent`` -- Laurent expansions of Gamma about non-positive
  integers, used by the eta-regularization of divergent integrals.

Even powers of pi never appear as such: they are canonicalized into the
zeta basis (pi^2 = 6 zeta(2), pi^4 = 90 zeta(4), pi^6 = 945 zeta(6)) so
exact cancellations are visible as literal zero coefficients.

Floats are deliberately dumb wrappers around mpmath at an explicit binary
precision; combining two values takes the *minimum* of the operand
precisions, so accuracy claims are always conservative.
"""

import mpmath
from gmpy2 import mpq, mpz

__all__ = [
    "QZERO", "QONE", "rat", "rat_to_str", "rat_from_str",
    "ConstantPoly", "EPoly", "GSeries", "LogLaurentSeries", "GammaLaurent",
    "BigFloat", "BigComplex",
    "series_reverse", "gamma_laurent", "constant_eval",
    "bernoulli_number",
]

QZERO = mpq(0)
QONE = mpq(1)


def rat(a, b=None):
    """Rational constructor; rat(3,4) or rat("3/4") or rat(2)."""
    if b is None:
        return mpq(a)
    return mpq(a, b)


def rat_to_str(q):
    q = mpq(q)
    return "%s/%s" % (q.numerator, q.denominator)


def rat_from_str(s):
    s = s.strip()
    if "/" in s:
        num, den = s.split("/")
        return mpq(mpz(num), mpz(den))
    return mpq(mpz(s))


# ----------------------------------------------------------------------
# Bernoulli numbers (exact).  Needed by the Gamma asymptotics and by a few
# oracle tests; tiny indices only, so the naive recurrence is fine.

_BERNOULLI_CACHE = {0: QONE, 1: mpq(-1, 2)}


def bernoulli_number(n):
    """B_n with B_1 = -1/2, as an exact rational."""
    if n in _BERNOULLI_CACHE:
        return _BERNOULLI_CACHE[n]
    if n % 2 == 1:
        _BERNOULLI_CACHE[n] = QZERO
        return QZERO
    # sum_{k=0}^{n} C(n+1,k) B_k = 0  for n >= 1
    for m in range(2, n + 1):
        if m in _BERNOULLI_CACHE:
            continue
        acc = QZERO
        binom = mpq(1)
        for k in range(m):
            acc += binom * bernoulli_number(k)
            binom = binom * (m + 1 - k) / (k + 1)
        _BERNOULLI_CACHE[m] = -acc / (m + 1)
    return _BERNOULLI_CACHE[n]


# ----------------------------------------------------------------------
# ConstantPoly: the ring Q[gamma, zeta2..zeta7]

_NZETA = 6          # zeta(2) .. zeta(7)
_ZZERO = (0,) * _NZETA

# pi^{2n} = _PI_EVEN[2n] * zeta(2n):  zeta(2)=pi^2/6, zeta(4)=pi^4/90, zeta(6)=pi^6/945
_PI_EVEN = {2: (mpq(6), 2), 4: (mpq(90), 4), 6: (mpq(945), 6)}


class ConstantPoly:
    """Polynomial in Euler's gamma and zeta(2)..zeta(7) over Q.

    ``terms`` maps (gamma_exponent, (z2,...,z7)) -> BigRational.  The zero
    polynomial has an empty mapping.  Instances are treated as immutable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        if terms is None:
            terms = {}
        clean = {}
        for key, c in terms.items():
            cq = mpq(c)
            if cq:
                ge, ze = key
                clean[(int(ge), tuple(int(z) for z in ze))] = cq
        self.terms = clean

    # -- constructors ---------------------------------------------------
    @classmethod
    def rational(cls, q):
        q = mpq(q)
        return cls({(0, _ZZERO): q}) if q else cls()

    @classmethod
    def gamma_const(cls, power=1):
        return cls({(power, _ZZERO): QONE})

    @classmethod
    def zeta(cls, k, power=1):
        if not 2 <= k <= 7:
            raise ValueError("zeta(%d) outside supported ring Q[gamma,zeta2..zeta7]" % k)
        z = [0] * _NZETA
        z[k - 2] = power
        return cls({(0, tuple(z)): QONE})

    @classmethod
    def pi_power(cls, n):
        """pi^n rewritten in the zeta basis; only even n up to 6 exist here."""
        if n == 0:
            return cls.rational(1)
        if n not in _PI_EVEN:
            raise ValueError("pi^%d is not representable in the zeta basis" % n)
        factor, k = _PI_EVEN[n]
        return cls.zeta(k) * factor

    # -- ring structure -------------------------------------------------
    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, type(QZERO))):
            other = ConstantPoly.rational(other)
        if not isinstance(other, ConstantPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __neg__(self):
        return ConstantPoly({k: -c for k, c in self.terms.items()})

    def __add__(self, other):
        if isinstance(other, (int, type(QZERO))):
            other = ConstantPoly.rational(other)
        if not isinstance(other, ConstantPoly):
            return NotImplemented
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k, QZERO) + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        res = ConstantPoly.__new__(ConstantPoly)
        res.terms = out
        return res

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, ConstantPoly)
                       else ConstantPoly.rational(other).__neg__())

    def __rsub__(self, other):
        return ConstantPoly.rational(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, type(QZERO))):
            q = mpq(other)
            if not q:
                return ConstantPoly()
            res = ConstantPoly.__new__(ConstantPoly)
            res.terms = {k: c * q for k, c in self.terms.items()}
            return res
        if not isinstance(other, ConstantPoly):
            return NotImplemented
        out = {}
        for (g1, z1), c1 in self.terms.items():
            for (g2, z2), c2 in other.terms.items():
                key = (g1 + g2, tuple(a + b for a, b in zip(z1, z2)))
                s = out.get(key, QZERO) + c1 * c2
                if s:
                    out[key] = s
                else:
                    out.pop(key, None)
        res = ConstantPoly.__new__(ConstantPoly)
        res.terms = out
        return res

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative power of ConstantPoly")
        acc = ConstantPoly.rational(1)
        base = self
        while n:
            if n & 1:
                acc = acc * base
            base = base * base
            n >>= 1
        return acc

    # -- queries --------------------------------------------------------
    def is_rational(self):
        return all(k == (0, _ZZERO) for k in self.terms)

    def rational_part(self):
        return self.terms.get((0, _ZZERO), QZERO)

    def monomial_weights(self):
        """Transcendentality weights: gamma counts 1, zeta(k) counts k."""
        out = set()
        for (ge, ze) in self.terms:
            out.add(ge + sum((i + 2) * e for i, e in enumerate(ze)))
        return out

    def __repr__(self):
        if not self.terms:
            return "ConstantPoly(0)"
        bits = []
        for (ge, ze), c in sorted(self.terms.items()):
            mono = []
            if ge:
                mono.append("γ^%d" % ge if ge > 1 else "γ")
            for i, e in enumerate(ze):
                if e:
                    mono.append("ζ%d^%d" % (i + 2, e) if e > 1 else "ζ%d" % (i + 2))
            head = "*".join(mono) if mono else "1"
            bits.append("(%s)%s" % (c, "*" + head if mono else ""))
        return " + ".join(bits)

    # -- serialization --------------------------------------------------
    def to_json(self):
        out = []
        for (ge, ze), c in sorted(self.terms.items()):
            out.append({"gamma": ge, "zeta": list(ze), "coeff": rat_to_str(c)})
        return out

    @classmethod
    def from_json(cls, data):
        terms = {}
        for entry in data:
            key = (int(entry["gamma"]), tuple(int(z) for z in entry["zeta"]))
            terms[key] = rat_from_str(entry["coeff"])
        return cls(terms)


# ----------------------------------------------------------------------
# EPoly: (Laurent) polynomial in E over Q


class EPoly:
    """Polynomial in E with rational coefficients, optionally Laurent.

    Stored as a tuple of coefficients starting at ``min_power``; both ends
    trimmed of zeros (the zero polynomial is the empty tuple at power 0).
    """

    __slots__ = ("min_power", "coeffs")

    def __init__(self, coeffs=(), min_power=0):
        cs = [mpq(c) for c in coeffs]
        lo = 0
        while cs and not cs[0]:
            cs.pop(0)
            lo += 1
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = tuple(cs)
        self.min_power = (min_power + lo) if cs else 0

    @classmethod
    def const(cls, q):
        return cls((mpq(q),), 0)

    @classmethod
    def from_dict(cls, d):
        if not d:
            return cls()
        lo = min(d)
        hi = max(d)
        return cls([d.get(i, QZERO) for i in range(lo, hi + 1)], lo)

    def to_dict(self):
        return {self.min_power + i: c for i, c in enumerate(self.coeffs) if c}

    @property
    def max_power(self):
        return self.min_power + len(self.coeffs) - 1 if self.coeffs else 0

    def is_laurent(self):
        return self.min_power < 0

    def is_zero(self):
        return not self.coeffs

    def is_constant(self):
        return not self.coeffs or (self.min_power == 0 and len(self.coeffs) == 1)

    def coeff(self, p):
        i = p - self.min_power
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return QZERO

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, (int, type(QZERO))):
            other = EPoly.const(other)
        if not isinstance(other, EPoly):
            return NotImplemented
        return self.min_power == other.min_power and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.min_power, self.coeffs))

    def __neg__(self):
        return EPoly([-c for c in self.coeffs], self.min_power)

    def __add__(self, other):
        if isinstance(other, (int, type(QZERO))):
            other = EPoly.const(other)
        if not isinstance(other, EPoly):
            return NotImplemented
        d = self.to_dict()
        for p, c in other.to_dict().items():
            d[p] = d.get(p, QZERO) + c
        return EPoly.from_dict(d)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, type(QZERO))):
            other = EPoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return EPoly.const(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, type(QZERO))):
            q = mpq(other)
            return EPoly([c * q for c in self.coeffs], self.min_power)
        if not isinstance(other, EPoly):
            return NotImplemented
        if not self.coeffs or not other.coeffs:
            return EPoly()
        n, m = len(self.coeffs), len(other.coeffs)
        out = [QZERO] * (n + m - 1)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(other.coeffs):
                if b:
                    out[i + j] += a * b
        return EPoly(out, self.min_power + other.min_power)

    __rmul__ = __mul__

    def shift(self, k):
        """Multiply by E^k."""
        return EPoly(self.coeffs, self.min_power + k)

    def deriv(self):
        """d/dE."""
        d = {}
        for p, c in self.to_dict().items():
            if p:
                d[p - 1] = d.get(p - 1, QZERO) + p * c
        return EPoly.from_dict(d)

    def eval_rational(self, x):
        x = mpq(x)
        acc = QZERO
        for p, c in self.to_dict().items():
            acc += c * x ** p
        return acc

    def subst_linear(self, a, b):
        """E -> a*X + b, returning the polynomial in X (Horner).  Requires
        a polynomial (no Laurent part)."""
        if self.min_power < 0:
            raise ValueError("cannot shift a Laurent polynomial")
        a = mpq(a)
        b = mpq(b)
        acc = EPoly()
        lin = EPoly([b, a], 0)
        for c in reversed(self.coeffs):
            acc = acc * lin + EPoly.const(c)
        for _ in range(self.min_power):   # stored coeffs start at E^min_power
            acc = acc * lin
        return acc

    def __repr__(self):
        if not self.coeffs:
            return "EPoly(0)"
        bits = ["(%s)E^%d" % (c, self.min_power + i)
                for i, c in enumerate(self.coeffs) if c]
        return " + ".join(bits)


# ----------------------------------------------------------------------
# GSeries: truncated power series in g with EPoly coefficients


class GSeries:
    """Truncated series  sum_{r=min_g_power}^{truncation_order} P_r(E) g^r.

    ``coeffs[i]`` is the EPoly at power min_g_power + i.  min_g_power = -1
    is reserved for instanton A-functions (the a/g term); everything else
    starts at 0 or higher.
    """

    __slots__ = ("min_g_power", "coeffs", "truncation_order")

    def __init__(self, coeffs, min_g_power=0, truncation_order=None):
        cs = [c if isinstance(c, EPoly) else EPoly.const(c) for c in coeffs]
        if truncation_order is None:
            truncation_order = min_g_power + len(cs) - 1
        want = truncation_order - min_g_power + 1
        if len(cs) != want:
            raise ValueError("coefficient count %d inconsistent with orders [%d..%d]"
                             % (len(cs), min_g_power, truncation_order))
        self.coeffs = tuple(cs)
        self.min_g_power = min_g_power
        self.truncation_order = truncation_order

    @classmethod
    def zero(cls, truncation_order, min_g_power=0):
        n = truncation_order - min_g_power + 1
        return cls([EPoly()] * n, min_g_power, truncation_order)

    @classmethod
    def const(cls, q, truncation_order):
        z = cls.zero(truncation_order)
        return z + q

    def coeff(self, r):
        i = r - self.min_g_power
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return EPoly()

    def items(self):
        for i, c in enumerate(self.coeffs):
            if c:
                yield self.min_g_power + i, c

    def __eq__(self, other):
        if not isinstance(other, GSeries):
            return NotImplemented
        lo = min(self.min_g_power, other.min_g_power)
        hi = min(self.truncation_order, other.truncation_order)
        return all(self.coeff(r) == other.coeff(r) for r in range(lo, hi + 1))

    def __neg__(self):
        return GSeries([-c for c in self.coeffs], self.min_g_power,
                       self.truncation_order)

    def _binop_bounds(self, other):
        lo = min(self.min_g_power, other.min_g_power)
        hi = min(self.truncation_order, other.truncation_order)
        return lo, hi

    def __add__(self, other):
        if isinstance(other, (int, type(QZERO), EPoly)):
            add = other if isinstance(other, EPoly) else EPoly.const(other)
            cs = list(self.coeffs)
            i = 0 - self.min_g_power
            if not 0 <= i < len(cs):
                raise ValueError("series does not reach g^0")
            cs[i] = cs[i] + add
            return GSeries(cs, self.min_g_power, self.truncation_order)
        if not isinstance(other, GSeries):
            return NotImplemented
        lo, hi = self._binop_bounds(other)
        return GSeries([self.coeff(r) + other.coeff(r) for r in range(lo, hi + 1)],
                       lo, hi)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, GSeries):
            return self + (-other)
        return self + (-other if isinstance(other, EPoly) else -mpq(other))

    def __mul__(self, other):
        if isinstance(other, (int, type(QZERO), EPoly)):
            f = other if isinstance(other, EPoly) else EPoly.const(other)
            return GSeries([c * f for c in self.coeffs], self.min_g_power,
                           self.truncation_order)
        if not isinstance(other, GSeries):
            return NotImplemented
        # truncation: results valid to min(hi1 + lo2, hi2 + lo1)
        lo = self.min_g_power + other.min_g_power
        hi = min(self.truncation_order + other.min_g_power,
                 other.truncation_order + self.min_g_power)
        out = [EPoly() for _ in range(hi - lo + 1)]
        for r1, c1 in self.items():
            for r2, c2 in other.items():
                r = r1 + r2
                if r <= hi:
                    out[r - lo] = out[r - lo] + c1 * c2
        return GSeries(out, lo, hi)

    __rmul__ = __mul__

    def g_shift(self, k):
        return GSeries(self.coeffs, self.min_g_power + k, self.truncation_order + k)

    def g_scale(self, s):
        """Substitute g -> s*g for a rational s."""
        s = mpq(s)
        return GSeries([c * s ** (self.min_g_power + i)
                        for i, c in enumerate(self.coeffs)],
                       self.min_g_power, self.truncation_order)

    def recip(self):
        """Multiplicative inverse as a truncated series.

        Requires min_g_power == 0 and a nonzero constant (E-free) head;
        computed by Newton iteration, so the cost is a few series products.
        """
        if self.min_g_power != 0:
            raise ValueError("reciprocal needs a series starting at g^0")
        head = self.coeff(0)
        if head.is_zero() or not head.is_constant():
            raise ValueError("reciprocal needs an invertible constant head")
        hi = self.truncation_order
        r = GSeries.const(1 / head.coeff(0), hi)
        steps = 1
        while (1 << steps) <= hi + 1:
            steps += 1
        for _ in range(steps):
            r = (r * (GSeries.const(2, hi) - (self * r).truncate(hi))).truncate(hi)
        return r.pad(hi)

    def truncate(self, order):
        if order >= self.truncation_order:
            return self
        n = order - self.min_g_power + 1
        if n <= 0:
            return GSeries.zero(order, order)
        return GSeries(self.coeffs[:n], self.min_g_power, order)

    def pad(self, order):
        """Extend truncation order, asserting the tail is genuinely zero
        (use only when higher coefficients are known to vanish)."""
        if order <= self.truncation_order:
            return self
        cs = list(self.coeffs) + [EPoly()] * (order - self.truncation_order)
        return GSeries(cs, self.min_g_power, order)

    def subst_E(self, series):
        """Substitute E -> series (a GSeries) into the EPoly coefficients.

        Used to evaluate B(E,g) on a perturbative energy branch.  Requires
        polynomial coefficients.  The E-powers of ``series`` are cached, so
        cost is one series product per distinct power."""
        hi = min(self.truncation_order, series.truncation_order)
        out = GSeries.zero(hi)
        powers = {0: GSeries.const(1, hi), 1: series.truncate(hi)}

        def epow(p):
            if p not in powers:
                powers[p] = epow(p - 1) * powers[1]
                powers[p] = powers[p].pad(hi) if powers[p].truncation_order < hi else powers[p].truncate(hi)
            return powers[p]

        for r, poly in self.items():
            if r > hi:
                continue
            if poly.min_power < 0:
                raise ValueError("Laurent coefficient in composition")
            for p, c in poly.to_dict().items():
                out = out + (epow(p) * c).g_shift(r).truncate(hi)
        return out

    def deriv_E(self):
        return GSeries([c.deriv() for c in self.coeffs], self.min_g_power,
                       self.truncation_order)

    def eval_rational(self, E, g):
        E = mpq(E)
        g = mpq(g)
        acc = QZERO
        for r, poly in self.items():
            acc += poly.eval_rational(E) * g ** r
        return acc

    def max_E_degree(self):
        return max((c.max_power for c in self.coeffs if c), default=0)

    def __repr__(self):
        bits = ["g^%d*[%r]" % (r, c) for r, c in self.items()]
        return "GSeries(" + (" + ".join(bits) if bits else "0") + \
            ", O(g^%d))" % (self.truncation_order + 1)

    # -- serialization --------------------------------------------------
    def to_json(self):
        rows = []
        for c in self.coeffs:
            if c.min_power < 0:
                raise ValueError("Laurent E-coefficients have no JSON form here")
            row = [QZERO] * (c.max_power + 1) if c else []
            for p, v in c.to_dict().items():
                row[p] = v
            rows.append([rat_to_str(v) for v in row])
        return {"min_g_power": self.min_g_power, "coeffs": rows}

    @classmethod
    def from_json(cls, data):
        lo = int(data["min_g_power"])
        cs = [EPoly([rat_from_str(s) for s in row], 0) for row in data["coeffs"]]
        return cls(cs, lo)


# ----------------------------------------------------------------------
# LogLaurentSeries: sums of c * E^p * ln(E g / 2)^q * g^r


_LOGLAURENT_MIN_P = -7   # deepest E-pole that legitimately occurs (order-16 WKB)


class LogLaurentSeries:
    """Finite sum  c_{pqr} E^p ln(Eg/2)^q g^r  with rational coefficients.

    q is 0 or 1 (no squared logs survive in any contour integral); g-powers
    reach down to -1 (the classical action term); E-poles are capped at
    E^-7 -- anything deeper signals a runaway recursion and is rejected.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None, check=True):
        clean = {}
        if terms:
            for (p, q, r), c in terms.items():
                cq = mpq(c)
                if not cq:
                    continue
                key = (int(p), int(q), int(r))
                clean[key] = cq
        if check:
            for (p, q, r) in clean:
                if q not in (0, 1):
                    raise ValueError("log power %d outside {0,1} at term %s" % (q, ((p, q, r),)))
                if r < -1:
                    raise ValueError("g-power %d < -1 at term %s" % (r, ((p, q, r),)))
                if p < _LOGLAURENT_MIN_P:
                    raise ValueError("E-pole E^%d deeper than E^%d — runaway recursion?"
                                     % (p, _LOGLAURENT_MIN_P))
                if q == 1 and (p < 0 or r < 0):
                    raise ValueError("log term with negative E- or g-power: %s" % ((p, q, r),))
        self.terms = clean

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, LogLaurentSeries):
            return NotImplemented
        return self.terms == other.terms

    def __neg__(self):
        return LogLaurentSeries({k: -c for k, c in self.terms.items()}, check=False)

    def __add__(self, other):
        if not isinstance(other, LogLaurentSeries):
            return NotImplemented
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k, QZERO) + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        res = LogLaurentSeries.__new__(LogLaurentSeries)
        res.terms = out
        return res

    def __sub__(self, other):
        return self + (-other)

    def scale(self, q):
        q = mpq(q)
        if not q:
            return LogLaurentSeries()
        return LogLaurentSeries({k: c * q for k, c in self.terms.items()}, check=False)

    def mono_mul(self, dp=0, dr=0):
        """Multiply by E^dp g^dr."""
        return LogLaurentSeries({(p + dp, q, r + dr): c
                                 for (p, q, r), c in self.terms.items()})

    def coeff(self, p, q, r):
        return self.terms.get((p, q, r), QZERO)

    def filter_g(self, r):
        return LogLaurentSeries({k: c for k, c in self.terms.items() if k[2] == r},
                                check=False)

    def g_orders(self):
        return sorted({r for (_, _, r) in self.terms})

    def has_log(self):
        return any(q == 1 for (_, q, _) in self.terms)

    def eval_numeric(self, E, g, prec=200):
        """Numeric value at given E, g (for cross-validation only)."""
        with mpmath.workprec(prec):
            Ef = mpmath.mpf(E) if not isinstance(E, mpq) else mpmath.mpf(E.numerator) / mpmath.mpf(E.denominator)
            gf = mpmath.mpf(g) if not isinstance(g, mpq) else mpmath.mpf(g.numerator) / mpmath.mpf(g.denominator)
            ln = mpmath.log(Ef * gf / 2)
            acc = mpmath.mpf(0)
            for (p, q, r), c in self.terms.items():
                acc += mpmath.mpf(c.numerator) / mpmath.mpf(c.denominator) * \
                    Ef ** p * ln ** q * gf ** r
            return acc

    def __repr__(self):
        if not self.terms:
            return "LogLaurentSeries(0)"
        bits = []
        for (p, q, r), c in sorted(self.terms.items(), key=lambda kv: (kv[0][2], kv[0][0], kv[0][1])):
            s = "(%s)" % c
            if p:
                s += "*E^%d" % p
            if q:
                s += "*ln(Eg/2)"
            if r:
                s += "*g^%d" % r
            bits.append(s)
        return " + ".join(bits)

    def to_json(self):
        out = []
        for (p, q, r), c in sorted(self.terms.items()):
            out.append({"p": p, "q": q, "r": r, "coeff": rat_to_str(c)})
        return out

    @classmethod
    def from_json(cls, data):
        return cls({(int(e["p"]), int(e["q"]), int(e["r"])): rat_from_str(e["coeff"])
                    for e in data})


# ----------------------------------------------------------------------
# GammaLaurent and gamma_laurent()


class GammaLaurent:
    """Laurent expansion of Gamma(z) about a non-positive integer center.

    coefficients[0] multiplies 1/(z-center); coefficients[k] multiplies
    (z-center)^(k-1) for k >= 1.  All coefficients are ConstantPoly.
    """

    __slots__ = ("center", "coefficients")

    def __init__(self, center, coefficients):
        self.center = int(center)
        self.coefficients = tuple(coefficients)

    @property
    def order(self):
        return len(self.coefficients) - 2

    def residue(self):
        return self.coefficients[0]

    def coeff(self, k):
        """Coefficient of (z-center)^k, k >= -1."""
        return self.coefficients[k + 1]

    def eval_numeric(self, z, prec=200):
        with mpmath.workprec(prec):
            w = mpmath.mpf(z) - self.center
            acc = mpmath.mpf(0)
            for i, c in enumerate(self.coefficients):
                acc += constant_eval(c, prec).value * w ** (i - 1)
            return acc


def _gamma_one_plus_series(nterms):
    """Taylor coefficients of Gamma(1+w) up to w^(nterms-1), as ConstantPoly.

    From ln Gamma(1+w) = -gamma w + sum_{k>=2} (-1)^k zeta(k) w^k / k,
    exponentiated.  Needs zeta(k) for k up to nterms-1."""
    if nterms - 1 > 7:
        raise ValueError("expansion to w^%d needs zeta(%d) — outside the "
                         "supported constant ring" % (nterms - 1, nterms - 1))
    log_c = [ConstantPoly() for _ in range(nterms)]
    if nterms > 1:
        log_c[1] = -ConstantPoly.gamma_const()
    for k in range(2, nterms):
        log_c[k] = ConstantPoly.zeta(k) * (mpq((-1) ** k, k))
    # exp of a series with zero constant term:  E' = L' E
    out = [ConstantPoly.rational(1)] + [ConstantPoly() for _ in range(nterms - 1)]
    for n in range(1, nterms):
        acc = ConstantPoly()
        for k in range(1, n + 1):
            acc = acc + log_c[k] * (k * 1) * out[n - k]
        out[n] = acc * mpq(1, n)
    return out


def gamma_laurent(center, order):
    """Laurent expansion of Gamma(z) about z = center (a non-positive integer),
    up to (z-center)^order.

    Built from the Taylor series of Gamma(1+w) at w = z + |center| together
    with the functional equation: Gamma(z) = Gamma(1+w) / [w * prod_{j=1}^{n}(w-j)]
    where n = -center and w = z - center.
    """
    center = int(center)
    if center > 0:
        raise ValueError("no pole at positive center %d; expand directly instead" % center)
    if order < 0:
        raise ValueError("order must be >= 0")
    n = -center
    gam = _gamma_one_plus_series(order + 2)  # coefficients in w

    # 1 / prod_{j=1}^{n} (w - j) as a power series in w, to w^(order+1):
    # each factor 1/(w-j) = -(1/j) sum_k (w/j)^k
    series = [QZERO] * (order + 2)
    series[0] = QONE
    for j in range(1, n + 1):
        new = [QZERO] * (order + 2)
        geo = [mpq(-1, j) * mpq(1, j) ** k for k in range(order + 2)]
        for a in range(order + 2):
            if not series[a]:
                continue
            for b in range(order + 2 - a):
                new[a + b] += series[a] * geo[b]
        series = new
    inv = series

    # multiply Gamma(1+w) coefficients by inv -> analytic part /w gives Laurent
    prod = [ConstantPoly() for _ in range(order + 2)]
    for a, ga in enumerate(gam):
        if a > order + 1:
            break
        for b in range(order + 2 - a):
            if inv[b]:
                prod[a + b] = prod[a + b] + ga * inv[b]
    # Gamma(z) = prod(w)/w : coefficient of w^k in prod becomes (z-center)^(k-1)
    return GammaLaurent(center, prod[:order + 2])


# ----------------------------------------------------------------------
# Precision-tracked floats

_MIN_PREC = 64


def _to_mp(x, prec):
    if isinstance(x, mpq):
        with mpmath.workprec(prec):
            return mpmath.mpf(x.numerator) / mpmath.mpf(x.denominator)
    with mpmath.workprec(prec):
        return mpmath.mpf(x)


class BigFloat:
    """A real number at an explicit binary precision.

    Arithmetic between two BigFloats is carried out at (and tagged with)
    the minimum of the two precisions; exact operands (ints, rationals)
    adopt the float's precision.
    """

    __slots__ = ("value", "prec")

    def __init__(self, value, prec):
        if prec < _MIN_PREC:
            raise ValueError("precision %d below minimum %d bits" % (prec, _MIN_PREC))
        self.prec = int(prec)
        if isinstance(value, mpmath.mpf):
            self.value = value
        else:
            self.value = _to_mp(value, self.prec)

    @classmethod
    def from_rational(cls, q, prec):
        return cls(mpq(q), prec)

    @classmethod
    def from_str(cls, s, prec):
        with mpmath.workprec(prec):
            return cls(mpmath.mpf(s), prec)

    @property
    def digits(self):
        return int(self.prec * 0.3010299956639812)

    def _coerce(self, other):
        if isinstance(other, BigFloat):
            return other.value, min(self.prec, other.prec)
        if isinstance(other, (int, mpz, type(QZERO))):
            return _to_mp(mpq(other), self.prec), self.prec
        return None, None

    def _binop(self, other, fn):
        ov, prec = self._coerce(other)
        if ov is None:
            return NotImplemented
        with mpmath.workprec(prec):
            return BigFloat(fn(self.value, ov), prec)

    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)
    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binop(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binop(other, lambda a, b: a * b)
    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binop(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binop(other, lambda a, b: b / a)

    def __neg__(self):
        return BigFloat(-self.value, self.prec)

    def __abs__(self):
        return BigFloat(abs(self.value), self.prec)

    def __pow__(self, n):
        with mpmath.workprec(self.prec):
            return BigFloat(self.value ** n, self.prec)

    def sqrt(self):
        with mpmath.workprec(self.prec):
            return BigFloat(mpmath.sqrt(self.value), self.prec)

    def log(self):
        with mpmath.workprec(self.prec):
            return BigFloat(mpmath.log(self.value), self.prec)

    def exp(self):
        with mpmath.workprec(self.prec):
            return BigFloat(mpmath.exp(self.value), self.prec)

    def __float__(self):
        return float(self.value)

    def __lt__(self, other):
        return self.value < (other.value if isinstance(other, BigFloat) else other)

    def __le__(self, other):
        return self.value <= (other.value if isinstance(other, BigFloat) else other)

    def __gt__(self, other):
        return self.value > (other.value if isinstance(other, BigFloat) else other)

    def __ge__(self, other):
        return self.value >= (other.value if isinstance(other, BigFloat) else other)

    def __eq__(self, other):
        if isinstance(other, BigFloat):
            return self.value == other.value
        return self.value == other

    def to_str(self, digits=None):
        d = digits if digits is not None else self.digits
        with mpmath.workprec(self.prec):
            return mpmath.nstr(self.value, d, strip_zeros=False)

    def __repr__(self):
        return "BigFloat(%s, prec=%d)" % (self.to_str(min(self.digits, 30)), self.prec)


class BigComplex:
    """Complex companion of BigFloat with the same precision discipline."""

    __slots__ = ("value", "prec")

    def __init__(self, value, prec):
        if prec < _MIN_PREC:
            raise ValueError("precision %d below minimum %d bits" % (prec, _MIN_PREC))
        self.prec = int(prec)
        with mpmath.workprec(self.prec):
            self.value = mpmath.mpc(value)

    @property
    def real(self):
        return BigFloat(self.value.real, self.prec)

    @property
    def imag(self):
        return BigFloat(self.value.imag, self.prec)

    def _coerce(self, other):
        if isinstance(other, (BigComplex, BigFloat)):
            return other.value, min(self.prec, other.prec)
        if isinstance(other, (int, mpz, type(QZERO), complex)):
            return other if isinstance(other, complex) else _to_mp(mpq(other), self.prec), self.prec
        return None, None

    def _binop(self, other, fn):
        ov, prec = self._coerce(other)
        if ov is None:
            return NotImplemented
        with mpmath.workprec(prec):
            return BigComplex(fn(self.value, ov), prec)

    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)
    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binop(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binop(other, lambda a, b: a * b)
    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binop(other, lambda a, b: a / b)

    def __neg__(self):
        return BigComplex(-self.value, self.prec)

    def __abs__(self):
        with mpmath.workprec(self.prec):
            return BigFloat(abs(self.value), self.prec)

    def __repr__(self):
        with mpmath.workprec(min(self.prec, 120)):
            return "BigComplex(%s, prec=%d)" % (mpmath.nstr(self.value, 20), self.prec)


# ----------------------------------------------------------------------
# series_reverse and constant_eval


def series_reverse(f):
    """Compositional inverse of a univariate truncated series.

    ``f`` is a GSeries in one formal variable whose coefficients must be
    constants (degree-0 EPolys), with zero constant term and invertible
    (nonzero rational) linear term.  Returns h with f(h(x)) = x up to the
    truncation order.
    """
    if not isinstance(f, GSeries):
        raise TypeError("series_reverse expects a GSeries")
    if f.min_g_power < 0 or (f.min_g_power == 0 and f.coeff(0)):
        raise ValueError("constant term must vanish")
    for _, c in f.items():
        if not c.is_constant():
            raise ValueError("not invertible: non-constant coefficient in univariate reversion")
    a1 = f.coeff(1).coeff(0)
    if not a1:
        raise ValueError("not invertible")
    n = f.truncation_order
    fc = [f.coeff(i).coeff(0) for i in range(n + 1)]

    # Newton iteration h <- h - (f(h) - x)/f'(h), doubling correct orders
    hc = [QZERO, 1 / a1] + [QZERO] * (n - 1)
    fpc = [(i + 1) * fc[i + 1] for i in range(n)]

    def compose(pc, hc):
        # pc(h(x)) truncated at order n, by Horner
        acc = [QZERO] * (n + 1)
        for c in reversed(pc):
            # acc = acc*h + c
            new = [QZERO] * (n + 1)
            for i, a in enumerate(acc):
                if not a:
                    continue
                for j, b in enumerate(hc):
                    if i + j <= n and b:
                        new[i + j] += a * b
            new[0] += c
            acc = new
        return acc

    correct = 1
    while correct < n:
        fh = compose(fc, hc)
        fph = compose(fpc, hc)
        # err = f(h) - x
        fh[1] -= 1
        # delta = err / f'(h)  (power series division)
        inv0 = 1 / fph[0]
        delta = [QZERO] * (n + 1)
        for i in range(n + 1):
            s = fh[i]
            for j in range(i):
                s -= delta[j] * fph[i - j]
            delta[i] = s * inv0
        hc = [hc[i] - delta[i] for i in range(n + 1)]
        correct *= 2
    return GSeries([EPoly.const(c) for c in hc], 0, n)


_ZETA_CACHE = {}


def constant_eval(c, precision):
    """Numeric value of a ConstantPoly at the requested binary precision."""
    if precision < _MIN_PREC:
        raise ValueError("precision %d below minimum %d bits" % (precision, _MIN_PREC))
    work = precision + 16
    with mpmath.workprec(work):
        gamma_v = +mpmath.euler
        acc = mpmath.mpf(0)
        for (ge, ze), q in c.terms.items():
            v = mpmath.mpf(q.numerator) / mpmath.mpf(q.denominator)
            if ge:
                v *= gamma_v ** ge
            for i, e in enumerate(ze):
                if e:
                    key = (i + 2, work)
                    if key not in _ZETA_CACHE:
                        _ZETA_CACHE[key] = mpmath.zeta(i + 2)
                    v *= _ZETA_CACHE[key] ** e
            acc += v
    return BigFloat(acc, precision)
