import math
import random
from fractions import Fraction
from math import factorial

import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from conftest import control_pairs, piecewise, random_controls, random_piecewise
from oracles import xi_family_sympy, xi_recursive_sympy
from stlc_oracle.freelie import X0, X1, X2, build_hall_basis, family
from stlc_oracle.signals import (
    ControlPair,
    PiecewisePoly,
    SignalError,
    iterated_primitive,
    norm,
    norm_info,
    scaling_probe,
    sqrt_decimal,
    xi,
    xi_closed_form,
    xi_ipp,
)

F = Fraction
FAMILIES = ("M1", "M2", "W1", "W2", "C")


def example_controls(z, eps):
    """Piecewise-constant pair on [0, 4 eps] driving x3 to z eps^2."""
    r = F(math.isqrt(abs(z.numerator)), math.isqrt(z.denominator))
    assert r * r == abs(z)
    sg = 1 if z > 0 else -1
    breaks = [0, eps, 2 * eps, 3 * eps, 4 * eps]
    return ControlPair(PiecewisePoly.steps(breaks, [r, 0, -r, 0]),
                       PiecewisePoly.steps(breaks, [0, sg * r, 0, -sg * r]))


def ones(T=1):
    return ControlPair(PiecewisePoly.constant(1, T), PiecewisePoly.constant(1, T))


# ---------------------------------------------------------------------------
# PiecewisePoly basics
# ---------------------------------------------------------------------------

def test_canonical_merge_and_errors():
    p = PiecewisePoly([0, 1, 2, 3], [(1,), (1,), (0, 1)])
    assert p.breaks == (0, 2, 3)
    with pytest.raises(SignalError):
        PiecewisePoly([0, 1, 1], [(1,), (2,)])
    with pytest.raises(SignalError):
        PiecewisePoly([1, 2], [(1,)])
    with pytest.raises(SignalError):
        ControlPair(PiecewisePoly.constant(1, 1), PiecewisePoly.constant(1, 2))


@given(piecewise(), piecewise())
def test_ring_operations_pointwise(a, b):
    for t in (F(1, 16), F(5, 16), F(11, 16), F(15, 16)):
        assert (a + b)(t) == a(t) + b(t)
        assert (a * b)(t) == a(t) * b(t)
        assert (a - b)(t) == a(t) - b(t)


# ---------------------------------------------------------------------------
# iterated primitives
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("j", range(7))
def test_primitive_of_one(j):
    u = PiecewisePoly.constant(1, 3)
    uj = iterated_primitive(u, j)
    for t in (F(1, 3), F(2), F(3)):
        assert uj(t) == t ** j / factorial(j)


def test_example_control_primitive_returns_to_zero():
    eps = F(1, 5)
    cp = example_controls(F(1), eps)
    assert iterated_primitive(cp.u, 1)(4 * eps) == 0
    assert iterated_primitive(cp.v, 1)(4 * eps) == 0


@given(piecewise(), st.integers(0, 4))
def test_derivative_of_primitive_round_trip(u, j):
    up = iterated_primitive(u, j + 1)
    assert up.is_continuous()
    d = up.derivative()
    uj = iterated_primitive(u, j)
    for a, b, _ in uj.pieces:
        mid = (a + b) / 2
        assert d(mid) == uj(mid)


def test_negative_order_rejected():
    with pytest.raises(SignalError):
        iterated_primitive(PiecewisePoly.constant(1, 1), -1)


# ---------------------------------------------------------------------------
# xi
# ---------------------------------------------------------------------------

@given(control_pairs(), st.integers(0, 4))
def test_generator_and_m_family_values(cp, j):
    for t in (F(1, 3), F(7, 8), F(1)):
        assert xi(X0, t, cp) == t
        assert xi(family("M1", j), t, cp) == iterated_primitive(cp.u, j + 1)(t)
        assert xi(family("M2", j), t, cp) == iterated_primitive(cp.v, j + 1)(t)


def test_small_values_on_ones():
    cp = ones()
    assert xi(family("W1", 1), 1, cp) == F(1, 6)
    assert xi(family("C", 0), 1, cp) == xi_closed_form("C", 0, 0, 1, cp)
    assert xi_closed_form("W2", 1, 2, F(1, 2), cp) == F(1, 2) ** 5 / 120


def test_xi_matches_closed_forms_on_random_pairs():
    rng = random.Random(11)
    checked = 0
    for _ in range(50):
        cp = random_controls(rng)
        t = F(rng.randint(1, 8), 8)
        for kind in FAMILIES:
            for j in range(0 if kind in ("M1", "M2", "C") else 1, 7):
                for l in range(0, 7 - j):
                    assert xi(family(kind, j, l), t, cp) == xi_closed_form(kind, j, l, t, cp), (kind, j, l)
                    checked += 1
    assert checked > 50 * 5 * 10


@pytest.mark.parametrize("kind", FAMILIES)
def test_closed_forms_against_sympy(kind):
    s = sp.Symbol("s")
    u_expr, v_expr = 1 - 3 * s + s ** 2, sp.Rational(2, 3) + s
    cp = ControlPair(PiecewisePoly.polynomial([1, -3, 1], 2), PiecewisePoly.polynomial([F(2, 3), 1], 2))
    for j in range(0 if kind in ("M1", "M2", "C") else 1, 5):
        for l in range(0, 3):
            t = F(3, 2)
            assert xi_closed_form(kind, j, l, t, cp) == xi_family_sympy(kind, j, l, t, u_expr, v_expr)


def test_recursion_against_sympy_on_hall_basis():
    s = sp.Symbol("s")
    u_expr, v_expr = 2 - s, 1 + s - s ** 2
    cp = ControlPair(PiecewisePoly.polynomial([2, -1], 2), PiecewisePoly.polynomial([1, 1, -1], 2))
    rng = random.Random(3)
    for b in build_hall_basis(4):
        expr = xi_recursive_sympy(b, u_expr, v_expr)
        for _ in range(10):
            t = F(rng.randint(0, 32), 16)
            want = sp.Rational(expr.subs(s, sp.Rational(t.numerator, t.denominator)))
            assert xi(b, t, cp) == F(int(want.p), int(want.q)), str(b)


def test_cached_function_agrees_with_pointwise_values():
    rng = random.Random(8)
    cp = random_controls(rng)
    sess = cp.session()
    for b in build_hall_basis(4):
        fn = sess.function(b)
        for _ in range(10):
            t = F(rng.randint(0, 64), 64)
            fresh = ControlPair(cp.u, cp.v)
            assert fn(t) == xi(b, t, fresh)


def test_xi_errors():
    cp = ones()
    with pytest.raises(SignalError):
        xi(X1, 2, cp)
    with pytest.raises(SignalError):
        xi_closed_form("Q", 0, 0, 1, cp)
    with pytest.raises(SignalError):
        xi_closed_form("W1", 0, 0, 1, cp)


# ---------------------------------------------------------------------------
# integration by parts
# ---------------------------------------------------------------------------

def test_ipp_small_cases():
    rng = random.Random(4)
    cp = random_controls(rng)
    t = F(7, 8)
    for j, l, N in [(1, 0, 0), (3, 0, 1), (2, 1, -1)]:
        boundary, rem = xi_ipp(j, l, N, t, cp)
        assert len(boundary) == N + 1
        assert sum(boundary) + rem == xi_closed_form("C", j, l, t, cp)


def test_ipp_identity_all_admissible():
    rng = random.Random(9)
    for _ in range(6):
        cp = random_controls(rng)
        t = F(rng.randint(1, 8), 8)
        for j in range(8):
            for l in range(3):
                for N in range(-1, (j + 1) // 2):
                    boundary, rem = xi_ipp(j, l, N, t, cp)
                    assert sum(boundary) + rem == xi(family("C", j, l), t, cp), (j, l, N)


def test_ipp_precondition():
    with pytest.raises(SignalError):
        xi_ipp(1, 0, 1, 1, ones())
    with pytest.raises(SignalError):
        xi_ipp(3, 0, 0, 0, ones())


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def test_norm_examples():
    assert norm(PiecewisePoly.polynomial([0, 2, -1], 2), "L1") == F(4, 3)
    assert norm(PiecewisePoly.polynomial([0, 1, -1], 2), "L1") == 1
    assert norm(PiecewisePoly.polynomial([-2, 0, 1], 1), "Linf") == 2
    u = PiecewisePoly.constant(1, F(5, 3))
    assert (u * u).integral() == F(5, 3)
    assert norm(u, "L2") == pytest.approx(math.sqrt(5 / 3), rel=1e-15)
    assert sqrt_decimal(F(2)).to_eng_string().startswith("1.41421356237309504880168872420969807")


def test_example_controls_sup_bound():
    for z in (F(1), F(4), F(-9, 4), F(1, 16)):
        cp = example_controls(z, F(1, 3))
        r = sp.sqrt(sp.Rational(abs(z.numerator), z.denominator))
        assert max(norm(cp.u, "Linf"), norm(cp.v, "Linf")) <= r


def test_l1_exact_with_rational_roots_and_flag_otherwise():
    v, exact = norm_info(PiecewisePoly.polynomial([-1, 0, 4], 1), "L1")
    assert exact and v == 1
    v, exact = norm_info(PiecewisePoly.polynomial([-2, 0, 1], 2), "L1")
    assert not exact
    r = math.sqrt(2)
    assert v == pytest.approx((2 * r - r ** 3 / 3) + ((8 / 3 - 4) - (r ** 3 / 3 - 2 * r)), rel=1e-12)


def test_general_lp_matches_closed_form():
    u = PiecewisePoly.identity(1)
    for p in (3, 1.5, 7):
        assert norm(u, "Lp", p=p) == pytest.approx((1 / (p + 1)) ** (1 / p), rel=1e-12)


def test_sobolev_norm_and_junction_error():
    u = PiecewisePoly.polynomial([0, 0, 1], 1)
    assert norm(u, "Wmp", m=2, p=1) == F(1, 3) + 1 + 2
    assert norm(u, "Wmp", m=1, p=math.inf) == 1 + 2
    step = PiecewisePoly.steps([0, 1, 2], [0, 1])
    with pytest.raises(SignalError):
        norm(step, "Wmp", m=1, p=1)
    assert norm(step, "Wmp", m=0, p=1) == 1


@pytest.mark.parametrize("p", [1, 2, math.inf])
def test_primitive_chain_inequality(p):
    rng = random.Random(int(p if p != math.inf else 99))
    for _ in range(8):
        T = F(rng.randint(1, 3), rng.randint(1, 2))
        u = random_piecewise(rng, horizon=T)
        for j in range(7):
            for j0 in range(j + 1):
                lhs = norm(iterated_primitive(u, j), "Lp", p=p)
                rhs_factor = T ** (j - j0) / factorial(j - j0)
                base = norm(iterated_primitive(u, j0), "Lp", p=p)
                if p == 2:
                    # compare squares exactly
                    lhs2 = (iterated_primitive(u, j) ** 2).integral()
                    base2 = (iterated_primitive(u, j0) ** 2).integral()
                    assert lhs2 <= rhs_factor ** 2 * base2
                else:
                    assert lhs <= rhs_factor * base


# ---------------------------------------------------------------------------
# scaling probe
# ---------------------------------------------------------------------------

SWEEP = [F(1, 2 ** i) for i in range(1, 7)]


def test_scaling_probe_w1():
    rep = scaling_probe(lambda t: ones(t), family("W1", 1), SWEEP, {"kind": "W1", "j0": 1, "p": 1})
    assert rep.exponent == pytest.approx(3.0, abs=1e-9)
    assert rep.bound_exponent == pytest.approx(3.0, abs=1e-9)
    assert rep.values[0] == SWEEP[0] ** 3 / 6
    assert rep.c_fit > 0


def test_scaling_probe_m1_and_c():
    assert scaling_probe(lambda t: ones(t), family("M1", 1), SWEEP).exponent == pytest.approx(2.0, abs=1e-9)
    rep = scaling_probe(lambda t: ones(t), family("C", 0), SWEEP,
                        {"kind": "C", "k": 1, "kprime": 0, "p": 1, "q": math.inf})
    assert rep.exponent == pytest.approx(2.0, abs=1e-9)
    rep = scaling_probe(lambda t: ones(t), family("C", 1), SWEEP)
    assert rep.exponent == pytest.approx(3.0, abs=1e-9)
    assert rep.values[0] == xi_family_sympy("C", 1, 0, SWEEP[0], sp.Integer(1), sp.Integer(1))


def test_scaling_probe_errors():
    with pytest.raises(SignalError):
        scaling_probe(lambda t: ones(t), family("W1", 1), SWEEP[:3])
    zero = lambda t: ControlPair(PiecewisePoly.constant(0, t), PiecewisePoly.constant(0, t))
    with pytest.raises(SignalError):
        scaling_probe(zero, family("W1", 1), SWEEP)
