"""Catalog of potential families and their instanton geometry.

Families (all in the convention where the harmonic frequency at the origin
is 1 and the coupling g plays the role of hbar):

* DoubleWell          V(q) = q^2 (1-q)^2 / 2
* PeriodicCosine      H = -(g/2) d^2/dq^2 + (1 - cos 4q)/(16 g)
* RadialQuartic       radial quartic oscillator, parameters (j, coupling sign)
* FokkerPlanck        V(p) = (p^2 - 1/4)^2/2 + g j p   (canonical j = -1)
* SymmetricClass      symmetric wells with U'^2 = rho(u) = 1 - 4 u^m
* AsymmetricWells     two degenerate minima with curvatures 1 and omega^2 > 1
* BrokenSymmetric     symmetric V plus an O(g) symmetry-breaking tilt

The geometry object carries the classical data every instanton formula
needs: the action constant a, the tunneling prefactor C (or C_omega for
asymmetric wells), the barrier parameterization rho(u) = U'^2 as a function
of u = U(q), and its zero u0.
"""

import mpmath
from gmpy2 import mpq

from .exactnum import BigFloat, QONE, QZERO, rat

__all__ = ["PotentialSpec", "InstantonGeometry", "instanton_action",
           "prefactor_C", "prefactor_C_omega", "rho_expansion"]

_FAMILIES = ("DoubleWell", "PeriodicCosine", "RadialQuartic", "FokkerPlanck",
             "SymmetricClass", "AsymmetricWells", "BrokenSymmetric")


class PotentialSpec:
    """A potential family plus its parameters."""

    def __init__(self, family, **params):
        if family not in _FAMILIES:
            raise ValueError("unknown family %r" % (family,))
        self.family = family
        self.params = params
        if family == "SymmetricClass":
            m = params.get("m")
            if not isinstance(m, int) or m < 1:
                raise ValueError("SymmetricClass needs a positive integer m")
        if family == "AsymmetricWells":
            # omega = 1 is admitted as a consistency limit against the
            # symmetric prefactor; genuinely asymmetric wells have omega > 1
            if mpq(params.get("omega", 0)) < 1:
                raise ValueError("AsymmetricWells needs omega >= 1")
            if "v_coeffs" not in params:
                raise ValueError("AsymmetricWells needs polynomial coefficients v_coeffs")
        if family == "BrokenSymmetric" and mpq(params.get("eta", 0)) <= 0:
            raise ValueError("BrokenSymmetric needs eta > 0")

    # convenient constructors
    @classmethod
    def double_well(cls):
        return cls("DoubleWell")

    @classmethod
    def periodic_cosine(cls):
        return cls("PeriodicCosine")

    @classmethod
    def radial_quartic(cls, j=0, sign=+1):
        return cls("RadialQuartic", j=mpq(j), sign=int(sign))

    @classmethod
    def fokker_planck(cls, j=-1):
        return cls("FokkerPlanck", j=mpq(j))

    @classmethod
    def symmetric_class(cls, m):
        return cls("SymmetricClass", m=int(m))

    @classmethod
    def asymmetric_wells(cls, omega, v_coeffs, q0):
        return cls("AsymmetricWells", omega=mpq(omega),
                   v_coeffs=tuple(mpq(c) for c in v_coeffs), q0=mpq(q0))

    @classmethod
    def broken_symmetric(cls, eta):
        return cls("BrokenSymmetric", eta=mpq(eta))

    def __repr__(self):
        if self.params:
            inner = ", ".join("%s=%s" % kv for kv in sorted(self.params.items()))
            return "PotentialSpec(%s, %s)" % (self.family, inner)
        return "PotentialSpec(%s)" % self.family

    def to_json(self):
        params = {}
        for k, v in self.params.items():
            if isinstance(v, mpq):
                params[k] = (int(v) if v.denominator == 1
                             else "%s/%s" % (v.numerator, v.denominator))
            elif isinstance(v, tuple):
                params[k] = ["%s/%s" % (c.numerator, c.denominator) for c in v]
            else:
                params[k] = v
        return {"family": self.family, "params": params}

    @classmethod
    def from_json(cls, data):
        family = data["family"]
        params = {}
        for k, v in data.get("params", {}).items():
            if isinstance(v, str) and "/" in v:
                params[k] = mpq(v)
            elif isinstance(v, list):
                params[k] = tuple(mpq(c) for c in v)
            else:
                params[k] = v
        return cls(family, **params)

    # classical potential data -----------------------------------------
    def v_exact(self, q):
        """Exact rational V(q) for polynomial families."""
        q = mpq(q)
        if self.family in ("DoubleWell", "BrokenSymmetric"):
            return q * q * (1 - q) * (1 - q) / 2
        if self.family == "FokkerPlanck":
            # in well coordinates q = p + 1/2 the classical part is the
            # same double well
            return q * q * (1 - q) * (1 - q) / 2
        if self.family == "AsymmetricWells":
            acc = QZERO
            for c in reversed(self.params["v_coeffs"]):
                acc = acc * q + c
            return acc
        raise ValueError("no exact polynomial potential for %s" % self.family)

    def q0(self):
        """Location of the second minimum (or period cell boundary)."""
        if self.family in ("DoubleWell", "FokkerPlanck", "BrokenSymmetric"):
            return mpq(1)
        if self.family == "AsymmetricWells":
            return self.params["q0"]
        if self.family == "PeriodicCosine":
            return mpmath.pi / 2      # not rational; only used numerically
        raise ValueError("q0 undefined for %s" % self.family)


class InstantonGeometry:
    """Classical tunneling data for a potential family."""

    def __init__(self, action_a, prefactor_C, omega, rho_alpha, u0):
        self.action_a = action_a
        self.prefactor_C = prefactor_C
        self.omega = omega
        self.rho_alpha = tuple(rho_alpha)
        self.u0 = u0

    def __repr__(self):
        return ("InstantonGeometry(a=%s, C=%s, omega=%s, alpha=%s, u0=%s)"
                % (self.action_a, self.prefactor_C, self.omega,
                   self.rho_alpha, self.u0))


# ----------------------------------------------------------------------
# rho(u) = U'^2 as a function of u = U(q) = sqrt(2V)


def rho_expansion(p, nterms=6):
    """Coefficients (alpha_1, alpha_2, ...) of rho(u) = 1 - sum_k alpha_k u^k.

    For SymmetricClass(m) this is exact: alpha_m = 4, others 0.  For
    polynomial families it is computed by series inversion of u = U(q)
    about the origin (exact rational arithmetic).
    """
    fam = p.family
    if fam in ("DoubleWell", "FokkerPlanck", "BrokenSymmetric"):
        return tuple([rat(4)] + [QZERO] * (nterms - 1))
    if fam == "PeriodicCosine":
        # U = sin(2q)/2, U' = cos 2q, U'^2 = 1 - 4u^2
        out = [QZERO] * nterms
        if nterms >= 2:
            out[1] = rat(4)
        return tuple(out)
    if fam == "SymmetricClass":
        m = p.params["m"]
        out = [QZERO] * nterms
        if m <= nterms:
            out[m - 1] = rat(4)
        return tuple(out)
    if fam == "AsymmetricWells":
        return _rho_from_polynomial(p, nterms)
    raise ValueError("rho expansion undefined for %s" % fam)


def _poly_eval_series(coeffs, series, order):
    """Compose polynomial (coefficient list, ascending) with a power series
    given as list of rationals [c0, c1, ...] truncated at ``order``."""
    acc = [QZERO] * (order + 1)
    for c in reversed(coeffs):
        # acc = acc * series + c
        new = [QZERO] * (order + 1)
        for i, a in enumerate(acc):
            if not a:
                continue
            for j, b in enumerate(series):
                if i + j <= order and b:
                    new[i + j] += a * b
        new[0] += c
        acc = new
    return acc


def _rho_from_polynomial(p, nterms):
    """U'^2 re-expanded in u for a polynomial V with V = q^2/2 + O(q^3)."""
    order = nterms + 2
    v = list(p.params["v_coeffs"]) + [QZERO] * (order + 3)
    # U(q) = sqrt(2V) = q * sqrt(1 + w(q)), with 2V = q^2 (1 + w)
    w = [2 * v[k + 2] for k in range(order + 1)]
    if w[0] != 1:
        raise ValueError("potential must start as q^2/2")
    w0 = [c for c in w]
    w0[0] = QZERO
    # sqrt(1 + w0) by Newton on series: s = 1 + w0/2 - w0^2/8 + ...
    s = [QONE] + [QZERO] * order
    for _ in range(order.bit_length() + 2):
        # s <- (s + (1+w0)/s)/2 ; series reciprocal then average
        inv = [QZERO] * (order + 1)
        inv[0] = 1 / s[0]
        for i in range(1, order + 1):
            acc = QZERO
            for j in range(1, i + 1):
                acc += s[j] * inv[i - j]
            inv[i] = -acc * inv[0]
        rhs = [QZERO] * (order + 1)
        target = [QONE] + w0[1:order + 1]
        for i in range(order + 1):
            acc = QZERO
            for j in range(i + 1):
                acc += target[j] * inv[i - j]
            rhs[i] = acc
        s = [(s[i] + rhs[i]) / 2 for i in range(order + 1)]
    # u(q) = q * s(q)  => series coefficients of u in q, starting at q^1
    u_of_q = [QZERO] + s[:order]
    # invert to q(u)
    q_of_u = _series_invert(u_of_q, order)
    # U'(q) = d/dq [q s(q)]
    up = [(i + 1) * u_of_q[i + 1] for i in range(order)]
    up2 = _poly_mul_trunc(up, up, order)
    # rho(u) = U'^2 evaluated at q = q(u)
    rho = _poly_eval_series(up2, q_of_u, order)
    alphas = [-rho[k] for k in range(1, nterms + 1)]
    return tuple(alphas)


def _poly_mul_trunc(a, b, order):
    out = [QZERO] * (order + 1)
    for i, x in enumerate(a):
        if not x or i > order:
            continue
        for j, y in enumerate(b):
            if i + j <= order and y:
                out[i + j] += x * y
    return out


def _series_invert(f, order):
    """Compositional inverse of f = f1 q + f2 q^2 + ... (f1 invertible)."""
    f1 = f[1]
    h = [QZERO, 1 / f1] + [QZERO] * (order - 1)
    for k in range(2, order + 1):
        # coefficient of u^k in f(h(u)) must vanish
        comp = _poly_eval_series(f, h, k)
        h[k] = -comp[k] / f1
    return h


# ----------------------------------------------------------------------
# quadrature helpers


def _quad(f, a, b, prec):
    # endpoints may arrive as exact rationals; convert at working precision
    with mpmath.workprec(prec + 40):
        ends = [mpmath.mpf(x.numerator) / mpmath.mpf(x.denominator)
                if isinstance(x, mpq) else x for x in (a, b)]
        val = mpmath.quad(f, ends)
    return val


def _self_converged(f, a, b, digits):
    """Adaptive quadrature with a doubling-precision convergence check."""
    prec = int(digits * 3.4) + 60
    v1 = _quad(f, a, b, prec)
    v2 = _quad(f, a, b, prec * 2)
    with mpmath.workprec(prec):
        if abs(v1 - v2) > mpmath.mpf(10) ** (-(digits + 5)) * (1 + abs(v2)):
            raise ArithmeticError("quadrature failed to converge to %d digits" % digits)
    return v2, prec


# ----------------------------------------------------------------------
# operations


def instanton_action(p, digits=40):
    """The action constant a of the family's spectral formulas.

    For the symmetric families this is a = 2 * int_0^{q0} sqrt(2V) dq (the
    exponent of the squared tunneling factor, e.g. e^{-a/g} with a = 1/3
    for the double well); for the periodic cosine we return the action of
    a single instanton, 1/2, which is the constant the band formulas use.
    Exact rationals where closed forms exist, BigFloat otherwise.
    """
    fam = p.family
    if fam in ("DoubleWell", "FokkerPlanck", "BrokenSymmetric"):
        return mpq(1, 3)
    if fam == "PeriodicCosine":
        return mpq(1, 2)
    if fam == "RadialQuartic":
        # 2 int_0^{1/sqrt 2} r sqrt(1 - 2 r^2) dr doubled = 1/3
        return mpq(1, 3)
    if fam == "SymmetricClass":
        # a = 4 int_0^{u0} u rho^{-1/2} du, exact via the Beta function for
        # m in {1,2}; quadrature otherwise
        m = p.params["m"]
        if m == 1:
            return mpq(1, 3)
        if m == 2:
            return mpq(1)

        def integrand(t):
            # u = u0 (1 - t^2) and 1 - w^m = t^2 s(w), s = 1 + w + ... + w^(m-1):
            # the t factors cancel analytically, leaving a smooth integrand
            u0 = mpmath.mpf(4) ** (mpmath.mpf(-1) / m)
            w = 1 - t * t
            s = sum(w ** j for j in range(m))
            return 2 * u0 * u0 * w / mpmath.sqrt(s)

        val, prec = _self_converged(integrand, 0, 1, digits)
        with mpmath.workprec(prec):
            return BigFloat(4 * val, int(digits * 3.32))
    if fam == "AsymmetricWells":
        q0 = p.params["q0"]
        pcs = _factor_double_zeros(p)

        def integrand(q):
            # sqrt(2V) = q (q0 - q) sqrt(P) with the double zeros pulled out
            # exactly, so rounding can never push the radicand negative
            return q * (_torf(q0) - q) * mpmath.sqrt(_horner(pcs, q))

        val, prec = _self_converged(integrand, 0, q0, digits)
        with mpmath.workprec(prec):
            return BigFloat(2 * val, int(digits * 3.32))
    raise ValueError("no instanton action for family %s" % fam)


def _check_degenerate(p):
    """Both wells must actually touch zero (degenerate minima)."""
    v0 = p.v_exact(0)
    vq0 = p.v_exact(p.params["q0"])
    if v0 != 0 or vq0 != 0:
        raise ValueError("potential minima not degenerate at 0 and q0: "
                         "V(0)=%s, V(q0)=%s" % (v0, vq0))


def _torf(c):
    """Exact rational -> mpf at the current working precision."""
    return mpmath.mpf(c.numerator) / mpmath.mpf(c.denominator)


def _horner(cs, x):
    acc = mpmath.mpf(0)
    for c in reversed(cs):
        acc = acc * x + _torf(c)
    return acc


def _factor_double_zeros(p):
    """Exact coefficients of P in 2V(q) = q^2 (q0 - q)^2 P(q).

    Works entirely in rational arithmetic; raises if V or V' fails to
    vanish at either well, since then the minima are not both quadratic
    touchdowns and the factorization (hence the tunneling formulas) breaks.
    """
    _check_degenerate(p)
    q0 = p.params["q0"]
    cs = [2 * c for c in p.params["v_coeffs"]]
    if cs[0] != 0 or (len(cs) > 1 and cs[1] != 0):
        raise ValueError("potential must have a quadratic minimum at q = 0")
    cs = cs[2:]
    for _ in range(2):
        # synthetic division by (q - q0); remainder must vanish exactly
        out = [mpq(0)] * (len(cs) - 1)
        acc = mpq(0)
        for k in range(len(cs) - 1, -1, -1):
            acc = cs[k] + q0 * acc
            if k > 0:
                out[k - 1] = acc
        if acc != 0:
            raise ValueError("V and V' must both vanish at q0; "
                             "division remainder %s" % acc)
        cs = out
    # divided by (q - q0)^2 = (q0 - q)^2, so no sign flip is needed
    return cs


def prefactor_C(p, digits=40):
    """Tunneling prefactor C from ln C = 2 int_0^{u0} (du/u)(rho^{-1/2}-1) + 2 ln u0.

    Exact value 1 for the double-well/cosine representatives (shown by the
    substitution t = sqrt(rho)); quadrature for other members.
    """
    fam = p.family
    if fam in ("DoubleWell", "FokkerPlanck", "BrokenSymmetric", "PeriodicCosine"):
        return QONE
    if fam == "SymmetricClass":
        m = p.params["m"]
        if m in (1, 2):
            return QONE
        # substitution u = u0 (1 - t^2): rho = 1 - (1-t^2)^m exactly and the
        # u0 factors cancel out of (du/u)

        def integrand(t):
            # with s = 1 + w + ... + w^(m-1) the difference 1/sqrt(1-w^m) - 1
            # times 2t/w reduces exactly to 2 w^(m-1) / (sqrt(s) (1 + t sqrt(s)))
            w = 1 - t * t
            s = sum(w ** j for j in range(m))
            rs = mpmath.sqrt(s)
            return 2 * w ** (m - 1) / (rs * (1 + t * rs))

        val, prec = _self_converged(integrand, 0, 1, digits)
        with mpmath.workprec(prec):
            u0 = mpmath.mpf(4) ** (mpmath.mpf(-1) / m)
            lnC = 2 * val + 2 * mpmath.log(u0)
            return BigFloat(mpmath.exp(lnC), int(digits * 3.32))
    if fam == "AsymmetricWells":
        raise ValueError("asymmetric wells use prefactor_C_omega")
    raise ValueError("no symmetric prefactor for family %s" % fam)


def prefactor_C_omega(p, digits=40):
    """Asymmetric-well prefactor

        C_omega = q0^2 omega^{2/(1+omega)}
                  * exp{ (2 omega/(1+omega)) int_0^{q0} [ 1/sqrt(2V)
                         - 1/q - 1/(omega (q0-q)) ] dq }.

    The two subtractions make the integrand finite at both wells; if the
    curvatures do not match (wrong well data) the integral diverges and the
    convergence check trips.
    """
    if p.family != "AsymmetricWells":
        raise ValueError("prefactor_C_omega needs an AsymmetricWells spec")
    _check_degenerate(p)
    omega = p.params["omega"]
    coeffs = p.params["v_coeffs"]
    q0 = p.params["q0"]
    pcs = _factor_double_zeros(p)

    def integrand(q):
        # convert the exact data at whatever precision the quadrature runs at;
        # sqrt(2V) = q (q0 - q) sqrt(P) keeps the radicand positive near the wells
        om = _torf(omega)
        q0f = _torf(q0)
        u = q * (q0f - q) * mpmath.sqrt(_horner(pcs, q))
        return 1 / u - 1 / q - 1 / (om * (q0f - q))

    try:
        val, prec = _self_converged(integrand, 0, q0, digits)
    except ArithmeticError as exc:
        raise ArithmeticError("regularized integrand did not converge — "
                              "check well locations/curvatures") from exc
    with mpmath.workprec(prec):
        om = mpmath.mpf(omega.numerator) / mpmath.mpf(omega.denominator)
        q0f = mpmath.mpf(q0.numerator) / mpmath.mpf(q0.denominator)
        lnC = (2 * om / (1 + om)) * val
        C = q0f ** 2 * om ** (2 / (1 + om)) * mpmath.exp(lnC)
        return BigFloat(C, int(digits * 3.32))


def geometry(p, digits=40):
    """Bundle the classical data for a family."""
    fam = p.family
    alphas = None
    u0 = None
    omega = QONE
    if fam in ("DoubleWell", "FokkerPlanck", "BrokenSymmetric"):
        alphas = rho_expansion(p)
        u0 = mpq(1, 4)
    elif fam == "PeriodicCosine":
        alphas = rho_expansion(p)
        u0 = mpq(1, 2)
    elif fam == "SymmetricClass":
        m = p.params["m"]
        alphas = rho_expansion(p)
        if m == 1:
            u0 = mpq(1, 4)
        elif m == 2:
            u0 = mpq(1, 2)
        else:
            u0 = BigFloat(mpmath.mpf(4) ** (mpmath.mpf(-1) / m), 128)
    elif fam == "AsymmetricWells":
        omega = p.params["omega"]
        alphas = rho_expansion(p)
        return InstantonGeometry(instanton_action(p, digits),
                                 prefactor_C_omega(p, digits),
                                 omega, alphas, None)
    else:
        raise ValueError("no geometry for %s" % fam)
    return InstantonGeometry(instanton_action(p, digits), prefactor_C(p, digits),
                             omega, alphas, u0)
