"""Shared oracle data and random generators for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

from hypothesis import strategies as st

from symflux.detsolve import LieGenerator
from symflux.parser import parse_expression, parse_problem
from symflux.prolong import operator
from symflux.symkernel import H, NU, TAU, T, U, X, Expr, JetVar, total_derivative

ROOT = Path(__file__).resolve().parent.parent
PROBLEMS = ROOT / "problems"
BURGERS_FILE = PROBLEMS / "burgers.lfd"


def burgers_problem():
    return parse_problem(BURGERS_FILE.read_text())


def E(text: str) -> Expr:
    return parse_expression(text)


def Dx(e: Expr, n: int = 1) -> Expr:
    for _ in range(n):
        e = total_derivative(e, "x")
    return e


# -- hand-written generator lists (oracles) -------------------------------


def gen(**parts) -> LieGenerator:
    return LieGenerator(operator(**parts))


def burgers_continuous_algebra():
    """Six-parameter algebra of the viscous Burgers equation."""
    return [
        gen(xi1="1"),
        gen(xi2="1"),
        gen(xi1="x", xi2="2*t", eta="-u"),
        gen(xi1="x*t", xi2="t^2", eta="-u*t + x"),
        gen(xi1="t", eta="1"),
        gen(xi2="-t", eta="u", chi="nu"),
    ]


def scheme_algebra():
    """Four-dimensional algebra shared by the three discretisations."""
    return [
        gen(xi1="1"),
        gen(xi2="1"),
        gen(xi1="x", xi2="2*t", eta="-u", zeta1="h", zeta2="2*tau"),
        gen(xi1="x", eta="u", zeta1="h", chi="2*nu"),
    ]


# -- closure functions g1, g2, g3 built by x-derivatives only -------------


def burgers_g():
    """g1 = -(u^2/2)_x + nu u_xx, g2 = (-g1 u)_x + nu (g1)_xx,
    g3 = -(g1^2 + u g2)_x + nu (g2)_xx."""
    u = Expr.var(U)
    nu = Expr.var(NU)
    g1 = -Dx(u * u * Fraction(1, 2)) + nu * Dx(u, 2)
    g2 = Dx(-(g1 * u)) + nu * Dx(g1, 2)
    g3 = -Dx(g1 * g1 + u * g2) + nu * Dx(g2, 2)
    return g1, g2, g3


def displays():
    """The three modified equations written out by hand, as full left sides."""
    u = Expr.var(U)
    nu = Expr.var(NU)
    h = Expr.var(H)
    tau = Expr.var(TAU)
    g1, g2, g3 = burgers_g()
    pde = Expr.var(JetVar(0, 1)) + Dx(u * u) * Fraction(1, 2) - nu * Dx(u, 2)
    space = h ** 2 * (Dx(u * u, 3) * Fraction(1, 12) - nu * Dx(u, 4) * Fraction(1, 12))
    ftcs = pde + tau * g2 * Fraction(1, 2) + space
    lw = pde + tau ** 2 * g3 * Fraction(1, 6) + space
    cn = (
        pde
        + tau ** 2
        * (
            g3 * Fraction(1, 6)
            + Dx(g1 * g1 + u * g2) * Fraction(1, 4)
            - nu * Dx(g2, 2) * Fraction(1, 4)
        )
        + h ** 2 * (Dx(u * u * Fraction(1, 2), 3) * Fraction(1, 6) - nu * Dx(u, 4) * Fraction(1, 12))
    )
    return {"ftcs": ftcs, "lax_wendroff": lw, "crank_nicolson": cn}


# -- random expressions -----------------------------------------------------

RING_VARS = [X, T, U, NU, H, TAU, JetVar(1, 0), JetVar(2, 0), JetVar(0, 1), JetVar(1, 1)]
JET_VARS = [X, T, U, NU, JetVar(1, 0), JetVar(2, 0), JetVar(0, 1), JetVar(1, 1), JetVar(0, 2)]


def random_expr(rng: random.Random, pool=RING_VARS, terms=4, max_exp=2, laurent=True) -> Expr:
    out = Expr()
    for _ in range(rng.randint(0, terms)):
        mono = {}
        for v in rng.sample(pool, rng.randint(0, 3)):
            lo = -1 if laurent and v in (H, TAU) else 0
            k = rng.randint(lo, max_exp)
            if k:
                mono[v] = k
        coeff = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
        out = out + Expr.monomial(mono, coeff)
    return out


@st.composite
def exprs(draw, pool=RING_VARS, laurent=True):
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    return random_expr(random.Random(seed), pool, laurent=laurent)


def random_sparse_system(rng: random.Random, max_rows=6, max_cols=7):
    ncols = rng.randint(1, max_cols)
    rows = []
    for _ in range(rng.randint(0, max_rows)):
        row = {}
        for c in range(ncols):
            if rng.random() < 0.4:
                v = Fraction(rng.randint(-5, 5), rng.randint(1, 3))
                if v:
                    row[c] = v
        rows.append(row)
    return ncols, rows
