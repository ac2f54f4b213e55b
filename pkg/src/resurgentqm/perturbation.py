"""Perturbation series with a symbolic level index.

The central object is E(B, g): the perturbative energy as a power series
in g whose coefficients are exact polynomials in the quantization variable
B (equal to N + 1/2, N, or 2N + j + 1 at the N-th level, depending on the
family).  It is generated by a wave-function recursion in a harmonic basis
around one well, with the index kept symbolic, so a single run covers every
level at once.  Series reversion then gives the perturbative quantization
function B(E, g), and fixing the index gives plain level series E_N(g).

Two basis engines cover the catalog:

* scaled Hermite functions H_{N+m}(x) e^{-x^2/2} with q = sqrt(g) x for the
  well-at-the-origin families (double well, tilted wells, periodic cosine),
* Laguerre functions L_{N+m}^{(j)}(y) e^{-y/2} for the radial quartic
  oscillator, where the radial equation in x = g y becomes
  -2y d^2 - 2(j+1) d + y/2 + g y^2 acting on functions of y.

Everything is exact rational arithmetic; no floating point enters.
"""

import math

from gmpy2 import mpq

from .exactnum import EPoly, GSeries, QONE, QZERO
from .potentials import PotentialSpec

__all__ = ["PerturbativeFamily", "energy_vs_index", "b_function",
           "level_series", "duality_check", "DualityReport"]

_HALF = mpq(1, 2)


class PerturbativeFamily:
    """A potential together with its quantization bookkeeping.

    ``quantization_offset`` is the value B takes at level N = 0 and
    ``index_step`` the increment per level, so B(N) = offset + step * N.
    """

    _OFFSETS = {
        "DoubleWell": (_HALF, 1),
        "PeriodicCosine": (_HALF, 1),
        "AsymmetricWells": (_HALF, 1),
        "BrokenSymmetric": (_HALF, 1),
        "FokkerPlanck": (QZERO, 1),
    }

    def __init__(self, potential, truncation_order=None):
        self.potential = potential
        fam = potential.family
        if fam == "RadialQuartic":
            self.quantization_offset = mpq(potential.params["j"]) + 1
            self.index_step = 2
        elif fam in self._OFFSETS:
            self.quantization_offset, self.index_step = self._OFFSETS[fam]
        else:
            raise ValueError("no perturbative quantization data for %s" % fam)
        self.truncation_order = truncation_order

    def index_value(self, N):
        """B at the N-th level."""
        if N < 0:
            raise ValueError("level index must be >= 0")
        return self.quantization_offset + self.index_step * N

    def __repr__(self):
        return ("PerturbativeFamily(%r, offset=%s, step=%s, order=%s)"
                % (self.potential, self.quantization_offset,
                   self.index_step, self.truncation_order))


# ----------------------------------------------------------------------
# scaled perturbation operators


def _hermite_ops(p, order_g):
    """Perturbation monomials per power of lambda = sqrt(g).

    Returns (ops, e0_shift) where ops[d] is a tuple of (x_power, coeff)
    acting at order lambda^d, and e0_shift is an exact constant added to
    the unperturbed energy (from a q-independent part of the potential).
    """
    fam = p.family
    if fam == "DoubleWell":
        return {1: ((3, mpq(-1)),), 2: ((4, _HALF),)}, QZERO
    if fam == "FokkerPlanck":
        # V = q^2 (1-q)^2 / 2 + g * eta * (q - 1/2) with eta = -j; the
        # eta*(q - 1/2) tilt contributes a lambda*x operator and an exact
        # constant -eta/2
        eta = -mpq(p.params["j"])
        return {1: ((3, mpq(-1)), (1, eta)), 2: ((4, _HALF),)}, -eta / 2
    if fam == "BrokenSymmetric":
        # V = q^2 (1-q)^2 / 2 + g * eta * q
        eta = mpq(p.params["eta"])
        return {1: ((3, mpq(-1)), (1, eta)), 2: ((4, _HALF),)}, QZERO
    if fam == "PeriodicCosine":
        # (1 - cos 4q) / (16 g) expanded with q = sqrt(g) x
        ops = {}
        k = 2
        while 2 * (k - 1) <= 2 * order_g:
            c = mpq((-1) ** (k + 1) * 4 ** (2 * k), 16 * math.factorial(2 * k))
            ops[2 * (k - 1)] = ((2 * k, c),)
            k += 1
        return ops, QZERO
    if fam == "AsymmetricWells":
        cs = p.params["v_coeffs"]
        if len(cs) < 3 or cs[0] != 0 or cs[1] != 0 or cs[2] != _HALF:
            raise ValueError("perturbation engine needs V = q^2/2 + O(q^3) "
                             "about the origin well")
        ops = {}
        for r in range(3, len(cs)):
            if cs[r]:
                ops[r - 2] = ((r, cs[r]),)
        return ops, QZERO
    raise ValueError("no perturbative expansion for family %s" % fam)


def _hermite_series(ops, e0_shift, order_g, index):
    """Rayleigh-Schrodinger recursion in the basis H_{N+m}(x) e^{-x^2/2}.

    With index None the coefficients are EPoly in the engine variable
    B = N + 1/2; otherwise index is the numeric level N and coefficients
    are plain rationals.  Returns the list [E_0, E_1, ...] of g-coefficients.
    """
    symbolic = index is None
    if symbolic:
        zero = EPoly()

        def ladder(m):
            # N + m = B + (m - 1/2)
            return EPoly([mpq(m) - _HALF, QONE])
        e_zero = EPoly([e0_shift, QONE])        # B + shift
    else:
        N = mpq(index)
        zero = QZERO

        def ladder(m):
            return N + m
        e_zero = N + _HALF + e0_shift
    min_m = None if symbolic else -int(index)

    def apply_x(vec):
        # x H_n = H_{n+1}/2 + n H_{n-1}
        out = {}
        for m, c in vec.items():
            out[m + 1] = out.get(m + 1, zero) + c * _HALF
            down = c * ladder(m)
            if down:
                out[m - 1] = out.get(m - 1, zero) + down
        return {m: c for m, c in out.items()
                if c and (min_m is None or m >= min_m)}

    max_x = max(xp for monos in ops.values() for xp, _ in monos)
    K = 2 * order_g
    psi = [{0: QONE if not symbolic else EPoly.const(1)}]
    E = [zero]                                  # E[k] = lambda^k coefficient

    for k in range(1, K + 1):
        # W = sum_d V_d psi_{k-d}
        W = {}
        for d, monos in ops.items():
            if d > k:
                continue
            src = psi[k - d]
            if not src:
                continue
            xp = {0: src}
            for r in range(1, max_x + 1):
                xp[r] = apply_x(xp[r - 1])
            for r, coeff in monos:
                for m, c in xp[r].items():
                    W[m] = W.get(m, zero) + c * coeff
        # solvability at m = 0 fixes E_k (the normalization c_{k,0} = 0
        # removes the usual back-reaction sum)
        E.append(W.get(0, zero))
        new = {}
        for m, c in W.items():
            if m == 0:
                continue
            acc = -c
            for i in range(1, k):
                e = E[i]
                if e:
                    prev = psi[k - i].get(m)
                    if prev is not None:
                        acc = acc + e * prev
            if acc:
                new[m] = acc * mpq(1, m)
        psi.append(new)

    for k in range(1, K + 1, 2):
        if E[k]:
            raise AssertionError("odd half-order energy term survived at "
                                 "lambda^%d" % k)
    out = [e_zero] + [E[2 * l] for l in range(1, order_g + 1)]
    return out


def _laguerre_series(j, order_g, index):
    """Same recursion in the basis L_{N+m}^{(j)}(y) e^{-y/2}.

    The unperturbed operator has eigenvalue B + 2m on the (N+m)-th basis
    function, B = 2N + j + 1, and the perturbation is +g y^2 via
    y L_n = (2n+j+1) L_n - (n+1) L_{n+1} - (n+j) L_{n-1}.
    """
    j = mpq(j)
    symbolic = index is None
    if symbolic:
        zero = EPoly()

        def diag(m):
            return EPoly([2 * m, QONE])             # B + 2m

        def up(m):
            return EPoly([(1 - j) / 2 + m, _HALF])  # N + m + 1

        def down(m):
            return EPoly([(j - 1) / 2 + m, _HALF])  # N + m + j
        e_zero = EPoly([QZERO, QONE])
    else:
        N = mpq(index)
        zero = QZERO

        def diag(m):
            return 2 * N + j + 1 + 2 * m

        def up(m):
            return N + m + 1

        def down(m):
            return N + m + j
        e_zero = 2 * N + j + 1
    min_m = None if symbolic else -int(index)

    def apply_y(vec):
        out = {}
        for m, c in vec.items():
            out[m] = out.get(m, zero) + c * diag(m)
            cu = c * up(m)
            if cu:
                out[m + 1] = out.get(m + 1, zero) - cu
            cd = c * down(m)
            if cd:
                out[m - 1] = out.get(m - 1, zero) - cd
        return {m: c for m, c in out.items()
                if c and (min_m is None or m >= min_m)}

    psi = [{0: QONE if not symbolic else EPoly.const(1)}]
    E = [zero]
    for k in range(1, order_g + 1):
        W = apply_y(apply_y(psi[k - 1]))
        E.append(W.get(0, zero))
        new = {}
        for m, c in W.items():
            if m == 0:
                continue
            acc = -c
            for i in range(1, k):
                e = E[i]
                if e:
                    prev = psi[k - i].get(m)
                    if prev is not None:
                        acc = acc + e * prev
            if acc:
                new[m] = acc * mpq(1, 2 * m)
        psi.append(new)
    return [e_zero] + E[1:]


# ----------------------------------------------------------------------
# public operations


def energy_vs_index(p, order):
    """E(B, g) as a GSeries with EPoly-in-B coefficients, to g^order.

    B is the family's quantization variable: substituting B = N + 1/2
    (double well et al.), B = N (Fokker-Planck) or B = 2N + j + 1 (radial
    quartic) reproduces the Rayleigh-Schrodinger series of the N-th level.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    fam = p.family
    if fam == "RadialQuartic":
        coeffs = _laguerre_series(p.params["j"], order, None)
        return GSeries(coeffs, 0)
    ops, shift = _hermite_ops(p, order)
    coeffs = _hermite_series(ops, shift, order, None)
    if fam == "FokkerPlanck":
        # engine variable is N + 1/2; the published index is B = N
        coeffs = [c.subst_linear(1, _HALF) for c in coeffs]
    return GSeries(coeffs, 0)


def b_function(p, order):
    """B(E, g): the series reversion of energy_vs_index, exact in E."""
    F = energy_vs_index(p, order)
    ident = GSeries([EPoly([0, 1])] + [EPoly()] * order, 0)
    G = ident
    steps = 1
    while (1 << steps) <= order + 1:
        steps += 1
    for _ in range(steps):
        err = F.subst_E(G) - ident
        if all(not c for _, c in err.items()):
            break
        G = (G - err * F.deriv_E().subst_E(G).recip()).truncate(order)
    resid = F.subst_E(G) - ident
    if any(c for _, c in resid.items()):
        raise AssertionError("series reversion failed to converge")
    return G


def level_series(p, N, order):
    """Rational coefficients of E_N(g) through g^order."""
    if N < 0:
        raise ValueError("level index must be >= 0")
    if p.family == "RadialQuartic":
        return _laguerre_series(p.params["j"], order, N)
    ops, shift = _hermite_ops(p, order)
    return _hermite_series(ops, shift, order, N)


class DualityReport:
    """Outcome of the radial-vs-double-well correspondence check."""

    def __init__(self, ok, order, first_mismatch=None):
        self.ok = ok
        self.order = order
        self.first_mismatch = first_mismatch    # (g_power, E_power, got, want)

    def __bool__(self):
        return self.ok

    def __repr__(self):
        if self.ok:
            return "DualityReport(ok, order=%d)" % self.order
        return ("DualityReport(MISMATCH at g^%d E^%d: %s != %s)"
                % (self.first_mismatch[0], self.first_mismatch[1],
                   self.first_mismatch[2], self.first_mismatch[3]))


def duality_check(order, tamper=None):
    """Verify B_radial(E, g, j=0) = 2 B_dw(E/2, -g) coefficient by coefficient.

    Both sides are computed independently (Laguerre vs Hermite engine).
    ``tamper=(g_power, E_power, delta)`` injects a fault for testing the
    mismatch reporting.
    """
    bnu = b_function(PotentialSpec.radial_quartic(j=0), order)
    bdw = b_function(PotentialSpec.double_well(), order)
    # 2 * B_dw(E/2, -g)
    rhs = GSeries([c.subst_linear(_HALF, 0) * 2 for c in bdw.coeffs],
                  0).g_scale(-1)
    if tamper is not None:
        r0, p0, delta = tamper
        cs = list(bnu.coeffs)
        cs[r0] = cs[r0] + EPoly([mpq(delta)], p0)
        bnu = GSeries(cs, 0)
    for r in range(order + 1):
        diff = bnu.coeff(r) - rhs.coeff(r)
        if diff:
            p0 = min(diff.to_dict())
            return DualityReport(False, order,
                                 (r, p0, bnu.coeff(r).coeff(p0),
                                  rhs.coeff(r).coeff(p0)))
    return DualityReport(True, order)
