import pickle
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import E, JET_VARS, exprs
from symflux.errors import KernelError, LaurentError
from symflux.symkernel import (
    H,
    NU,
    TAU,
    T,
    U,
    X,
    ZERO,
    Expr,
    GridSample,
    JetVar,
    coefficient_symbol,
    collect,
    diff_partial,
    split_by_var,
    step_grade,
    substitute,
    total_derivative,
)

wx, w2x, wt = JetVar(1, 0), JetVar(2, 0), JetVar(0, 1)


def v(x):
    return Expr.var(x)


class TestConstruction:
    def test_zero_is_falsy_and_empty(self):
        assert not ZERO
        assert len(ZERO) == 0
        assert Expr.const(0) == ZERO

    def test_cancellation_removes_terms(self):
        e = v(U) * 2 - v(U) - v(U)
        assert e.is_zero()
        assert e.terms == {}

    def test_constants_compare_with_numbers(self):
        assert Expr.const(Fraction(3, 2)) == Fraction(3, 2)
        assert Expr.const(1) == 1

    def test_canonical_form_independent_of_operation_order(self):
        a = (v(X) + v(U)) * (v(X) - v(U))
        b = v(X) * v(X) - v(U) ** 2
        assert a == b
        assert hash(a) == hash(b)

    def test_laurent_exponents_only_on_steps(self):
        assert (v(H) ** -2) * (v(H) ** 2) == 1
        with pytest.raises(LaurentError):
            v(U) ** -1
        with pytest.raises(LaurentError):
            v(U) / v(X)

    def test_division_by_step_monomial(self):
        e = (v(U) * v(H)) / (v(H) * 2)
        assert e == v(U) * Fraction(1, 2)

    def test_jet_identity_is_cached(self):
        assert JetVar(2, 1) is JetVar(2, 1)
        assert JetVar(2, 1).name == "u_xxt"
        assert (JetVar(2, 1).x_order, JetVar(2, 1).t_order, JetVar(2, 1).order) == (2, 1, 3)

    def test_grid_sample_offsets(self):
        s = GridSample(Fraction(1, 2), 0)
        assert s.p == Fraction(1, 2) and s.q == 0
        assert s.name == "u[1/2,0]"
        with pytest.raises(KernelError):
            GridSample(Fraction(1, 3), 0)

    def test_pickle_round_trip(self):
        e = E("u_x*u[1/2,0]/h^2 + nu*x^3") + Expr.var(coefficient_symbol("a_1_0"))
        assert pickle.loads(pickle.dumps(e)) == e


class TestDisplay:
    @pytest.mark.parametrize(
        "text, shown",
        [
            ("u^2/2", "1/2*u^2"),
            ("nu*u_xxxx", "nu*u_xxxx"),
            ("x*t*u_x", "x*t*u_x"),
            ("1/h^2", "h^-2"),
            ("u - x", "-x + u"),
            ("0", "0"),
        ],
    )
    def test_rendering(self, text, shown):
        assert str(E(text)) == shown

    def test_graded_order_puts_jets_last(self):
        # x < t < u < nu < h < tau < coefficients < jets
        e = v(wx) + v(TAU) + v(H) + v(NU) + v(U) + v(T) + v(X)
        assert str(e) == "x + t + u + nu + h + tau + u_x"

    def test_jets_ordered_by_total_then_x_order(self):
        e = v(JetVar(0, 2)) + v(JetVar(2, 0)) + v(JetVar(1, 1)) + v(JetVar(0, 1)) + v(wx)
        assert str(e) == "u_t + u_x + u_tt + u_xt + u_xx"


class TestCollect:
    def test_regrouping(self):
        e = v(U) * v(wx) ** 2 + v(X) * v(wx) ** 2 + v(wt)
        out = collect(e, [wx, wt])
        assert out == {((wx, 2),): v(U) + v(X), ((wt, 1),): Expr.const(1)}

    def test_zero(self):
        assert collect(ZERO, [wx]) == {}

    def test_split_by_var(self):
        parts = split_by_var(E("u^2*x + u + 3"), U)
        assert parts == {2: v(X), 1: Expr.const(1), 0: Expr.const(3)}

    def test_step_grade(self):
        ((m, _),) = E("tau^2*h^-1*u").terms.items()
        assert step_grade(m) == (2, -1)


class TestDerivatives:
    def test_partial(self):
        assert diff_partial(E("x^3*u + u_x^2"), X) == E("3*x^2*u")
        assert diff_partial(E("x^3*u + u_x^2"), wx) == E("2*u_x")

    def test_partial_of_negative_step_power_refused(self):
        with pytest.raises(LaurentError):
            diff_partial(E("u/h"), H)

    def test_total_derivative_basic(self):
        assert total_derivative(E("u^2"), "x") == E("2*u*u_x")
        assert total_derivative(E("x*u_x"), "x") == E("u_x + x*u_xx")
        assert total_derivative(E("t*u"), "t") == E("u + t*u_t")
        assert total_derivative(E("nu*h*tau"), "x") == ZERO

    def test_substitute(self):
        assert substitute(E("u_t^2 + u"), wt, E("u_xx")) == E("u_xx^2 + u")


@settings(max_examples=100, deadline=None)
@given(exprs(), exprs(), exprs())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == ZERO
    assert a * 1 == a


@settings(max_examples=100, deadline=None)
@given(exprs(laurent=False), exprs(laurent=False), st.sampled_from(["x", "t"]))
def test_leibniz(a, b, axis):
    lhs = total_derivative(a * b, axis)
    rhs = total_derivative(a, axis) * b + a * total_derivative(b, axis)
    assert lhs == rhs


@settings(max_examples=100, deadline=None)
@given(exprs(pool=JET_VARS, laurent=False))
def test_total_derivatives_commute(a):
    assert total_derivative(total_derivative(a, "x"), "t") == total_derivative(
        total_derivative(a, "t"), "x"
    )


@settings(max_examples=100, deadline=None)
@given(exprs(laurent=False), st.sampled_from([X, U, NU, wx]))
def test_taylor_reconstruction(e, var):
    """e equals sum_k (d^k e / dv^k)|_{v=0} v^k / k!."""
    rebuilt = ZERO
    d = e
    fact = 1
    for k in range(e.degree_in(var) + 1):
        if k:
            fact *= k
        rebuilt = rebuilt + substitute(d, var, ZERO) * v(var) ** k * Fraction(1, fact)
        d = diff_partial(d, var)
    assert rebuilt == e
