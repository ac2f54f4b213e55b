import mpmath
import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from resurgentqm.exactnum import BigFloat, EPoly
from resurgentqm.potentials import InstantonGeometry, PotentialSpec, geometry
from resurgentqm.perturbation import b_function
from resurgentqm.wkb import (MellinForm, a_function, contour_integral_eps,
                             contour_integral_subtraction, gamma_asymptotics,
                             mellin_closed_form, symmetric_order_g, wkb_terms)


# ----------------------------------------------------------------------
# Frozen contour-integral tables for the double well, (E-power, log-power,
# g-power) -> value, all orders through g^8.  Every cell was triple-checked:
# index continuation, the epsilon-split, and (for S0/S2) Mellin residues
# agree exactly, which is also how a handful of published misprints in
# these tables were settled.

DW_S = {
    0: {
        (0, 0, -1): mpq(1, 3),
        (1, 0, 0): mpq(-2), (1, 1, 0): mpq(2),
        (2, 0, 1): mpq(17), (2, 1, 1): mpq(6),
        (3, 0, 2): mpq(236), (3, 1, 2): mpq(70),
        (4, 0, 3): mpq(49843, 12), (4, 1, 3): mpq(1155),
        (5, 0, 4): mpq(335183, 4), (5, 1, 4): mpq(45045, 2),
        (6, 0, 5): mpq(11056741, 6), (6, 1, 5): mpq(969969, 2),
        (7, 0, 6): mpq(515954137, 12), (7, 1, 6): mpq(22309287, 2),
        (8, 0, 7): mpq(469212586743, 448), (8, 1, 7): mpq(2151252675, 8),
        (9, 0, 8): mpq(70860581490397, 2688), (9, 1, 8): mpq(214886239425, 32),
    },
    2: {
        (-1, 0, 0): mpq(-1, 12),
        (0, 0, 1): mpq(11, 6), (0, 1, 1): mpq(1, 2),
        (1, 0, 2): mpq(605, 12), (1, 1, 2): mpq(25, 2),
        (2, 0, 3): mpq(4522, 3), (2, 1, 3): mpq(735, 2),
        (3, 0, 4): mpq(743439, 16), (3, 1, 4): mpq(45045, 4),
        (4, 0, 5): mpq(69706241, 48), (4, 1, 5): mpq(2807805, 8),
        (5, 0, 6): mpq(1097340517, 24), (5, 1, 6): mpq(88267179, 8),
        (6, 0, 7): mpq(69402310265, 48), (6, 1, 7): mpq(2788660875, 8),
        (7, 0, 8): mpq(82167014713033, 1792), (7, 1, 8): mpq(353522522925, 32),
    },
    4: {
        (-3, 0, 0): mpq(7, 1440),
        (-2, 0, 1): mpq(-11, 480),
        (-1, 0, 2): mpq(101, 480),
        (0, 0, 3): mpq(17473, 288), (0, 1, 3): mpq(175, 16),
        (1, 0, 4): mpq(616601, 128), (1, 1, 4): mpq(31185, 32),
        (2, 0, 5): mpq(544644431, 1920), (2, 1, 5): mpq(1924923, 32),
        (3, 0, 6): mpq(83125560313, 5760), (3, 1, 6): mpq(100553453, 32),
        (4, 0, 7): mpq(645115861327, 960), (4, 1, 7): mpq(9526065549, 64),
        (5, 0, 8): mpq(60366482211337, 2048),
        (5, 1, 8): mpq(1691601686775, 256),
    },
    6: {
        (-5, 0, 0): mpq(-31, 20160),
        (-4, 0, 1): mpq(87, 4480),
        (-3, 0, 2): mpq(359, 40320),
        (-2, 0, 3): mpq(-15, 128),
        (-1, 0, 4): mpq(2515, 256),
        (0, 0, 5): mpq(59665081, 7680), (0, 1, 5): mpq(159159, 128),
        (1, 0, 6): mpq(25285094891, 23040), (1, 1, 6): mpq(25746721, 128),
        (2, 0, 7): mpq(5392814329807, 53760), (2, 1, 7): mpq(2506538463, 128),
        (3, 0, 8): mpq(1884561008165335, 258048),
        (3, 1, 8): mpq(758382964625, 512),
    },
    8: {
        (-7, 0, 0): mpq(127, 107520),
        (-6, 0, 1): mpq(-7381, 322560),
        (-5, 0, 2): mpq(217, 9216),
        (-4, 0, 3): mpq(-3377, 215040),
        (-3, 0, 4): mpq(2195, 12288),
        (-2, 0, 5): mpq(-593329, 61440),
        (-1, 0, 6): mpq(33344883, 20480),
        (0, 0, 7): mpq(5827886716943, 2580480), (0, 1, 7): mpq(692049787, 2048),
        (1, 0, 8): mpq(9724807577177167, 20643840),
        (1, 1, 8): mpq(663834081625, 8192),
    },
}

DW_DROPPED = {0: 9, 2: 32, 4: 60, 6: 72, 8: 58}

# cosine-well counterparts through g^6
PC_S = {
    0: {
        (0, 0, -1): mpq(1),
        (1, 0, 0): mpq(-2), (1, 1, 0): mpq(2),
        (2, 0, 1): mpq(3), (2, 1, 1): mpq(2),
        (3, 0, 2): mpq(12), (3, 1, 2): mpq(6),
        (4, 0, 3): mpq(665, 12), (4, 1, 3): mpq(25),
        (5, 0, 4): mpq(3437, 12), (5, 1, 4): mpq(245, 2),
        (6, 0, 5): mpq(15981, 10), (6, 1, 5): mpq(1323, 2),
        (7, 0, 6): mpq(188287, 20), (7, 1, 6): mpq(7623, 2),
    },
    2: {
        (-1, 0, 0): mpq(-1, 12),
        (0, 0, 1): mpq(5, 6), (0, 1, 1): mpq(1, 2),
        (1, 0, 2): mpq(77, 12), (1, 1, 2): mpq(5, 2),
        (2, 0, 3): mpq(47), (2, 1, 3): mpq(35, 2),
        (3, 0, 4): mpq(17165, 48), (3, 1, 4): mpq(525, 4),
        (4, 0, 5): mpq(133021, 48), (4, 1, 5): mpq(8085, 8),
        (5, 0, 6): mpq(867601, 40), (5, 1, 6): mpq(63063, 8),
    },
}


def _poly(d):
    return EPoly.from_dict({p: mpq(*v) if isinstance(v, tuple) else mpq(v)
                            for p, v in d.items()})


# A(E, g) for the double well through g^8 (1/3g head at row -1)
A_DW = {
    -1: {0: (1, 3)},
    1: {2: 17, 0: (19, 12)},
    2: {3: 227, 1: (187, 4)},
    3: {4: (47431, 12), 2: (34121, 24), 0: (28829, 576)},
    4: {5: (317629, 4), 3: (264725, 6), 1: (842909, 192)},
    5: {6: (26145967, 15), 4: (16601579, 12), 2: (63996919, 240),
        0: (6167719, 960)},
    6: {7: (812725953, 20), 5: (3490889111, 80), 3: (4398906487, 320),
        1: (1280980929, 1280)},
    7: {8: (443323117271, 448), 6: (265222473925, 192),
        4: (4948336000477, 7680), 2: (10166658134543, 107520),
        0: (3228992367577, 1720320)},
    8: {9: (22315986340103, 896), 7: (4909541135621, 112),
        5: (29042282605297, 1024), 3: (150256193628587, 21504),
        1: (296261222204009, 688128)},
}

A_PC = {
    -1: {0: 1},
    1: {2: 3, 0: (3, 4)},
    2: {3: 11, 1: (23, 4)},
    3: {4: (199, 4), 2: (341, 8), 0: (215, 64)},
    4: {5: (1021, 4), 3: 326, 1: (4487, 64)},
}

# tilted-well family: rows are polynomials in the tilt j, even in j
# (keys are (E-power, j-power))
A_FP_POLY = {
    -1: {(0, 0): mpq(1, 3)},
    1: {(2, 0): mpq(17), (0, 0): mpq(19, 12), (0, 2): mpq(-3, 4)},
    2: {(3, 0): mpq(227), (1, 0): mpq(187, 4), (1, 2): mpq(-77, 4)},
    3: {(4, 0): mpq(47431, 12), (2, 0): mpq(34121, 24),
        (2, 2): mpq(-3717, 8), (0, 0): mpq(28829, 576),
        (0, 2): mpq(-1281, 32), (0, 4): mpq(341, 64)},
    4: {(5, 0): mpq(317629, 4), (3, 0): mpq(264725, 6),
        (3, 2): mpq(-35560, 3), (1, 0): mpq(842909, 192),
        (1, 2): mpq(-253045, 96), (1, 4): mpq(19215, 64)},
}


def _fp_row(r, j):
    j = mpq(j)
    out = {}
    for (ep, jp), c in A_FP_POLY[r].items():
        out[ep] = out.get(ep, mpq(0)) + c * j ** jp
    return EPoly.from_dict(out)


_DW_TERMS = {t.k: t for t in wkb_terms(PotentialSpec.double_well(), 8)}


# ----------------------------------------------------------------------
# WKB chain plumbing

def test_wkb_terms_structure():
    terms = wkb_terms(PotentialSpec.double_well(), 8)
    assert [t.k for t in terms] == [0, 2, 4, 6, 8]
    s0 = terms[0]
    assert s0.monomials == {(0, 0, 0, -1): mpq(1)}
    assert s0.m == 1 and not s0.tilt


def test_wkb_terms_rejects_bad_orders():
    p = PotentialSpec.double_well()
    with pytest.raises(ValueError):
        wkb_terms(p, 3)
    with pytest.raises(ValueError):
        wkb_terms(p, 10)
    with pytest.raises(ValueError):
        wkb_terms(p, -2)


def test_subtraction_rejects_deep_wells():
    t = wkb_terms(PotentialSpec.symmetric_class(3), 0)[0]
    with pytest.raises(ValueError):
        contour_integral_subtraction(t, 2)


# ----------------------------------------------------------------------
# Method (i) against the frozen tables

def test_dw_subtraction_tables():
    for k, t in _DW_TERMS.items():
        res = contour_integral_subtraction(t, 8)
        assert res.method == "Subtraction"
        assert res.value.terms == DW_S[k], "S%d" % k
        assert res.dropped_pole_count == DW_DROPPED[k]


def test_pc_subtraction_tables():
    terms = wkb_terms(PotentialSpec.periodic_cosine(), 2)
    for t in terms:
        res = contour_integral_subtraction(t, 6)
        assert res.value.terms == PC_S[t.k], "S%d" % t.k


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([0, 2, 4, 6, 8]), st.integers(min_value=0, max_value=8))
def test_subtraction_truncation_and_diagonal(k, L):
    """Tables live on p = r - k + 1 and truncate row-by-row in g."""
    res = contour_integral_subtraction(_DW_TERMS[k], L)
    expect = {key: v for key, v in DW_S[k].items() if key[2] <= L}
    assert res.value.terms == expect
    for (p, q, r) in res.value.terms:
        assert p == r - k + 1
        assert q in (0, 1)
        if q:
            assert p >= 0 and r >= 0


def test_laurent_heads_match_gamma_tail():
    # the 1/E heads of S_2, S_4, ... are twice the ln Gamma(1/2+z) tail
    tail = gamma_asymptotics(4)
    for k in (2, 4, 6, 8):
        assert DW_S[k][(1 - k, 0, 0)] == 2 * tail[k // 2 - 1]


def test_log_cells_are_twice_b_function():
    # ln(Eg/2) coefficients across all orders assemble to 2 B(E, g)
    collected = {}
    for k, table in DW_S.items():
        for (p, q, r), v in table.items():
            if q:
                collected[(r, p)] = v
    B = b_function(PotentialSpec.double_well(), 8)
    expect = {}
    for r, row in B.items():
        for p, c in row.to_dict().items():
            expect[(r, p)] = 2 * c
    assert collected == expect


# ----------------------------------------------------------------------
# Method (ii): the epsilon-split must reproduce method (i) exactly, and
# its internal cancellation checks must really bite.

def test_eps_split_agrees_low_orders():
    for k in (0, 2, 4):
        r1 = contour_integral_subtraction(_DW_TERMS[k], 8)
        r2 = contour_integral_eps(_DW_TERMS[k], 8)
        assert r2.method == "EpsilonSplit"
        assert r1.value.terms == r2.value.terms, "S%d" % k
        assert r2.dropped_pole_count == 9


def test_eps_split_agrees_high_orders():
    for k in (6, 8):
        r1 = contour_integral_subtraction(_DW_TERMS[k], 8)
        r2 = contour_integral_eps(_DW_TERMS[k], 8)
        assert r1.value.terms == r2.value.terms, "S%d" % k
        assert r2.dropped_pole_count == 9


def test_eps_split_fault_injection():
    for fault in ("middle", "edges"):
        with pytest.raises(ArithmeticError):
            contour_integral_eps(_DW_TERMS[2], 4, fault=fault)


def test_eps_split_geometry_guards():
    pc = wkb_terms(PotentialSpec.periodic_cosine(), 2)
    with pytest.raises(ValueError):
        contour_integral_eps(pc[1], 4)
    fp = wkb_terms(PotentialSpec.fokker_planck(j=-1), 2)
    with pytest.raises(ValueError):
        contour_integral_eps(fp[1], 4)


# ----------------------------------------------------------------------
# Method (iii): Mellin residues

def _residue_sum(form, lo, hi):
    acc = {}
    for n in range(lo, hi + 1):
        for key, c in form.residue(n).terms.items():
            acc[key] = acc.get(key, mpq(0)) + c
    return {k: v for k, v in acc.items() if v}


def test_mellin_residues_reproduce_tables():
    assert _residue_sum(mellin_closed_form(1, "I0"), 0, 9) == DW_S[0]
    assert _residue_sum(mellin_closed_form(1, "I2"), -1, 7) == DW_S[2]
    assert _residue_sum(mellin_closed_form(2, "I0"), 0, 7) == PC_S[0]
    assert _residue_sum(mellin_closed_form(2, "I2"), -1, 5) == PC_S[2]


def test_mellin_closed_form_matches_residues_numerically():
    # minus the counterclockwise contour integral of the closed form times
    # E^s around s = n equals the exact residue series
    E = mpmath.mpf("0.37")
    g = mpmath.mpf("0.81")
    L = mpmath.log(E * g / 2)
    for m, which, n in ((1, "I0", 0), (1, "I0", 2), (1, "I2", 1),
                        (2, "I0", 2)):
        form = mellin_closed_form(m, which)

        def around(th):
            s = n + mpmath.mpf("0.25") * mpmath.exp(1j * th)
            ds = mpmath.mpf("0.25") * 1j * mpmath.exp(1j * th)
            return form(s, g=g) * mpmath.power(E, s) * ds / (2j * mpmath.pi)

        num = mpmath.quad(around, [0, 2 * mpmath.pi])
        val = mpmath.mpf(0)
        for (p, q, r), c in form.residue(n).terms.items():
            val += (mpmath.mpf(int(c.numerator)) / int(c.denominator)
                    * E ** p * L ** q * g ** r)
        assert abs(num + val) < 1e-10 * (1 + abs(val))


def test_mellin_anchor_and_errors():
    form = mellin_closed_form(1, "I0")
    assert form.residue(0).terms == {(0, 0, -1): mpq(1, 3)}
    with pytest.raises(ValueError):
        form.residue(mpq(1, 2))
    with pytest.raises(ValueError):
        mellin_closed_form(1, "I4")
    with pytest.raises(ValueError):
        mellin_closed_form(0, "I0")
    deep = mellin_closed_form(3, "I0")
    assert mpmath.isfinite(deep(0.4))    # numeric form exists for any m
    with pytest.raises(ValueError):
        deep.residue(1)                  # exact residues do not


# ----------------------------------------------------------------------
# ln Gamma(1/2+z) tail

def test_gamma_asymptotics_values():
    assert gamma_asymptotics(4) == [mpq(-1, 24), mpq(7, 2880),
                                    mpq(-31, 40320), mpq(127, 215040)]
    assert len(gamma_asymptotics(8)) == 8
    with pytest.raises(ValueError):
        gamma_asymptotics(0)
    with pytest.raises(ValueError):
        gamma_asymptotics(9)


def test_gamma_asymptotics_numeric():
    with mpmath.workdps(40):
        z = mpmath.mpf(20)
        approx = z * mpmath.log(z) - z + mpmath.log(2 * mpmath.pi) / 2
        for n, c in enumerate(gamma_asymptotics(6), start=1):
            approx += mpmath.mpf(int(c.numerator)) / int(c.denominator) \
                * z ** (1 - 2 * n)
        err = abs(mpmath.loggamma(z + mpmath.mpf(1) / 2) - approx)
        assert err < mpmath.mpf(10) ** -18


# ----------------------------------------------------------------------
# the assembled A(E, g)

def _assert_rows(series, table, label):
    got = {r: c for r, c in series.items() if c}
    expect = {r: _poly(row) for r, row in table.items()}
    assert got == expect, label


def test_a_function_double_well():
    A = a_function(PotentialSpec.double_well(), 8)
    _assert_rows(A, A_DW, "A double well")


def test_a_function_periodic_cosine():
    A = a_function(PotentialSpec.periodic_cosine(), 4)
    _assert_rows(A, A_PC, "A cosine well")


def test_a_function_tilted_family():
    for j in (-1, 0, 2, mpq(1, 2)):
        A = a_function(PotentialSpec.fokker_planck(j=j), 4)
        for r, c in A.items():
            assert c == _fp_row(r, j), "j=%s g^%d" % (j, r)


def test_a_function_tilted_literal():
    # the supersymmetric point, where the ground level is exact
    A = a_function(PotentialSpec.fokker_planck(j=-1), 4)
    expect = {
        -1: {0: (1, 3)},
        1: {2: 17, 0: (5, 6)},
        2: {3: 227, 1: (55, 2)},
        3: {4: (47431, 12), 2: (11485, 12), 0: (1105, 72)},
        4: {5: (317629, 4), 3: (64535, 2), 1: (4109, 2)},
    }
    _assert_rows(A, expect, "A supersymmetric tilt")


def test_a_function_untilted_equals_double_well():
    A0 = a_function(PotentialSpec.fokker_planck(j=0), 6)
    Adw = a_function(PotentialSpec.double_well(), 6)
    for r, c in Adw.items():
        assert A0.coeff(r) == c, "g^%d" % r


def test_a_function_radial_map():
    for j in (0, 2, mpq(1, 2)):
        A = a_function(PotentialSpec.radial_quartic(j=j), 4)
        for r, c in A.items():
            expect = _fp_row(r, j).subst_linear(mpq(1, 2), 0) \
                * mpq((-1) ** (r % 2))
            assert c == expect, "radial j=%s g^%d" % (j, r)


def test_a_function_radial_literal():
    # spot values at j = 2 read off the angular-polynomial table
    A = a_function(PotentialSpec.radial_quartic(j=2), 4)
    assert A.coeff(-1) == _poly({0: (-1, 3)})
    assert A.coeff(3) == _poly({4: (-47431, 192), 2: (10483, 96),
                                0: (14299, 576)})
    assert A.coeff(4) == _poly({5: (317629, 128), 3: (-6585, 16),
                                1: (-86377, 128)})


def test_a_function_symmetric_delegation():
    A1 = a_function(PotentialSpec.symmetric_class(1), 3)
    Adw = a_function(PotentialSpec.double_well(), 3)
    for r, c in Adw.items():
        assert A1.coeff(r) == c
    A2 = a_function(PotentialSpec.symmetric_class(2), 3)
    Apc = a_function(PotentialSpec.periodic_cosine(), 3)
    for r, c in Apc.items():
        assert A2.coeff(r) == c


def test_a_function_guards():
    with pytest.raises(ValueError):
        a_function(PotentialSpec.symmetric_class(3), 2)
    with pytest.raises(ValueError):
        a_function(PotentialSpec.broken_symmetric(mpq(1, 10)), 2)
    with pytest.raises(ValueError):
        a_function(PotentialSpec.double_well(), 0)


# ----------------------------------------------------------------------
# order-g coefficients for the general symmetric class

def test_symmetric_order_g_double_well():
    a22, a20 = symmetric_order_g(geometry(PotentialSpec.double_well()))
    assert isinstance(a22, BigFloat)
    with mpmath.workdps(50):
        assert abs(a22.value - 17) < mpmath.mpf(10) ** -30
        assert abs(a20.value - mpmath.mpf(19) / 12) < mpmath.mpf(10) ** -30


def test_symmetric_order_g_cosine():
    a22, a20 = symmetric_order_g(geometry(PotentialSpec.periodic_cosine()))
    with mpmath.workdps(50):
        assert abs(a22.value - 3) < mpmath.mpf(10) ** -30
        assert abs(a20.value - mpmath.mpf(3) / 4) < mpmath.mpf(10) ** -30


def test_symmetric_order_g_cubic_member_stable():
    geom = geometry(PotentialSpec.symmetric_class(3))
    lo = symmetric_order_g(geom, digits=30)
    hi = symmetric_order_g(geom, digits=45)
    with mpmath.workdps(50):
        for a, b in zip(lo, hi):
            assert abs(a.value - b.value) < mpmath.mpf(10) ** -25


def test_symmetric_order_g_guards():
    g = geometry(PotentialSpec.double_well())
    alphas = list(g.rho_alpha) + [mpq(0)]
    bad_head = InstantonGeometry(g.action_a, g.prefactor_C, g.omega,
                                 [mpq(5)] + alphas[1:], g.u0)
    with pytest.raises(ValueError):
        symmetric_order_g(bad_head)
    tampered = InstantonGeometry(g.action_a, g.prefactor_C, g.omega,
                                 [alphas[0], alphas[1] + 1] + alphas[2:],
                                 g.u0)
    with pytest.raises(ArithmeticError):
        symmetric_order_g(tampered)
