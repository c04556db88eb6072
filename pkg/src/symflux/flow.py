"""Closed-form one-parameter groups of affine generators.

For a generator whose components are affine in ``z = (x, t, u, h, tau, nu)``
the flow solves ``dz/da = A z + b`` with ``z(0) = z0``.  When the coupling
graph of ``A`` (off-diagonal entries) is acyclic the system can be
integrated one coordinate at a time; every coordinate of the result is a
finite sum ``sum_k c_k(z0) * a^n_k * exp(lam_k * a)`` with rational ``lam_k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Dict, List, Optional, Tuple

from gmpy2 import mpq

from symflux.detsolve import LieGenerator
from symflux.prolong import COMPONENTS, InfinitesimalSet
from symflux.symkernel import H, NU, TAU, T, U, X, Expr, mono_degree

COORDS = (X, T, U, H, TAU, NU)
COORD_NAMES = ("x", "t", "u", "h", "tau", "nu")
# component name -> coordinate index
_COMP_INDEX = {"xi1": 0, "xi2": 1, "eta": 2, "zeta1": 3, "zeta2": 4, "chi": 5}

# a^n * exp(lam*a) -> coefficient (an Expr in the initial coordinates)
ExpPoly = Dict[Tuple[int, mpq], Expr]


@dataclass(frozen=True)
class AffineFlow:
    """``coords[name]`` is the transformed coordinate as an exp-polynomial."""

    coords: Dict[str, ExpPoly]

    def render(self, name: str) -> str:
        return render_exppoly(self.coords[name])

    def lines(self) -> List[str]:
        return [f"{n}* = {self.render(n)}" for n in COORD_NAMES]

    def evaluate(self, a: float, point: Dict[str, float]) -> Dict[str, float]:
        """Numerical value of the flow at parameter ``a`` (for checks)."""
        import math

        out = {}
        for n, poly in self.coords.items():
            total = 0.0
            for (k, lam), coef in poly.items():
                total += _eval_expr(coef, point) * a ** k * math.exp(float(lam) * a)
            out[n] = total
        return out


def _eval_expr(e: Expr, point: Dict[str, float]) -> float:
    total = 0.0
    for m, c in e.terms.items():
        term = float(c)
        for v, k in m:
            term *= point[COORD_NAMES[COORDS.index(v)]] ** k
        total += term
    return total


def affine_parts(inf: InfinitesimalSet) -> Optional[Tuple[List[List[mpq]], List[mpq]]]:
    """``(A, b)`` if every component is affine in the coordinates, else None."""
    n = len(COORDS)
    A = [[mpq(0)] * n for _ in range(n)]
    b = [mpq(0)] * n
    for name in COMPONENTS:
        i = _COMP_INDEX[name]
        for m, c in getattr(inf, name).terms.items():
            if mono_degree(m) > 1 or any(e < 0 for _, e in m):
                return None
            if not m:
                b[i] = c
                continue
            (v, _), = m
            if v not in COORDS:
                return None
            A[i][COORDS.index(v)] = c
    return A, b


def _toposort(A) -> Optional[List[int]]:
    n = len(A)
    deps = {i: {j for j in range(n) if j != i and A[i][j]} for i in range(n)}
    order, done = [], set()
    while len(order) < n:
        ready = [i for i in range(n) if i not in done and deps[i] <= done]
        if not ready:
            return None
        for i in ready:
            order.append(i)
            done.add(i)
    return order


def _add(p: ExpPoly, key, coef: Expr):
    if not coef:
        return
    cur = p.get(key)
    new = coef if cur is None else cur + coef
    if new:
        p[key] = new
    else:
        p.pop(key, None)


def _solve_scalar(lam: mpq, z0: Expr, forcing: ExpPoly) -> ExpPoly:
    """Solve z' = lam z + f(a), z(0) = z0, with f an exp-polynomial."""
    out: ExpPoly = {}
    _add(out, (0, lam), z0)
    for (k, mu), c in forcing.items():
        if mu == lam:
            # int_0^a exp(lam (a-s)) s^k exp(lam s) ds = a^(k+1)/(k+1) exp(lam a)
            _add(out, (k + 1, lam), c.scale(mpq(1, k + 1)))
            continue
        d = mu - lam
        # exp(lam a) * int_0^a s^k exp(d s) ds
        for j in range(k + 1):
            w = mpq((-1) ** j * factorial(k), factorial(k - j)) / d ** (j + 1)
            _add(out, (k - j, mu), c.scale(w))
        _add(out, (0, lam), c.scale(-mpq((-1) ** k * factorial(k)) / d ** (k + 1)))
    return out


def affine_flow(g) -> Optional[AffineFlow]:
    """Closed-form flow, or None when ``g`` is not affine (or its linear part
    couples coordinates cyclically)."""
    inf = g.inf if isinstance(g, LieGenerator) else g
    parts = affine_parts(inf)
    if parts is None:
        return None
    A, b = parts
    order = _toposort(A)
    if order is None:
        return None
    sol: Dict[int, ExpPoly] = {}
    for i in order:
        forcing: ExpPoly = {}
        if b[i]:
            _add(forcing, (0, mpq(0)), Expr.const(b[i]))
        for j in range(len(COORDS)):
            if j != i and A[i][j]:
                for key, c in sol[j].items():
                    _add(forcing, key, c.scale(A[i][j]))
        sol[i] = _solve_scalar(A[i][i], Expr.var(COORDS[i]), forcing)
    return AffineFlow({COORD_NAMES[i]: sol[i] for i in range(len(COORDS))})


def render_exppoly(p: ExpPoly) -> str:
    if not p:
        return "0"
    out = []
    for (k, lam), coef in sorted(p.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        factors = []
        if k:
            factors.append("a" if k == 1 else f"a^{k}")
        if lam:
            arg = "a" if lam == 1 else ("-a" if lam == -1 else f"{lam}*a")
            factors.append(f"exp({arg})")
        text = str(coef)
        neg = False
        if len(coef) == 1:
            (m, c), = coef.terms.items()
            if c < 0:
                neg = True
                text = str(coef.scale(-1))
        if factors:
            if text == "1":
                text = "*".join(factors)
            elif len(coef) > 1:
                text = f"({text})*" + "*".join(factors)
            else:
                text = text + "*" + "*".join(factors)
        if not out:
            out.append("-" + text if neg else text)
        else:
            out.append((" - " if neg else " + ") + text)
    return "".join(out)

