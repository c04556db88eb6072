"""Differential approximation (modified equation) of a difference scheme.

Pipeline: Taylor-expand every grid sample, substitute into the scheme to get
the Gamma-form, then replace each t-bearing derivative in the error terms by
its pure-x equivalent on the solution manifold of ``u_t = Q`` (Pi-form), and
keep only the leading error grading in ``(tau, h)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

from symflux.errors import ReductionError, SchemeError
from symflux.symkernel import (
    H,
    TAU,
    U,
    ZERO,
    Expr,
    GridSample,
    JetVar,
    collect,
    filter_terms,
    is_sample,
    jets_of,
    max_x_order,
    step_grade,
    substitute_many,
    symbol,
    total_derivative,
)

log = logging.getLogger(__name__)

Grade = Tuple[int, int]  # (tau exponent, h exponent)

TAYLOR_CAP = 8
WT = JetVar(0, 1)


def shift_expand(s: GridSample, order: int) -> Expr:
    """Taylor polynomial of u(x + p h, t + q tau) through total order ``order``."""
    if order < 1:
        raise ValueError("Taylor order must be >= 1")
    ph = symbol(H) * s.p
    qt = symbol(TAU) * s.q
    out = symbol(U)
    for a in range(order + 1):
        for b in range(order + 1 - a):
            if a + b == 0 or (a and not s.p) or (b and not s.q):
                continue
            coef = ph ** a * qt ** b / (factorial(a) * factorial(b))
            out = out + coef * Expr.var(JetVar(a, b))
    return out


def laurent_depth(scheme: Expr) -> int:
    """Largest drop in (tau, h)-degree a scheme coefficient can cause."""
    depth = 0
    for m in scheme.terms:
        a, b = step_grade(m)
        depth = max(depth, -(a + b))
    return depth


def _samples(e: Expr):
    return sorted(v for v in e.variables() if is_sample(v))


def gamma_form(scheme: Expr, order: int) -> Expr:
    """Substitute Taylor expansions of order ``order`` into ``scheme``.

    The result is truncated to the (tau, h)-degrees that are exact at this
    order.  Raises SchemeError if negative powers of h or tau survive.
    """
    depth = laurent_depth(scheme)
    mapping = {s: shift_expand(s, order) for s in _samples(scheme)}
    g = substitute_many(scheme, mapping)
    window = order - depth

    def exact(m):
        a, b = step_grade(m)
        return a + b <= window

    g = filter_terms(g, exact)
    bad = [m for m in g.terms if min(step_grade(m)) < 0]
    if bad:
        a, b = step_grade(bad[0])
        parts = []
        if a < 0:
            parts.append(f"tau^{a}")
        if b < 0:
            parts.append(f"h^{b}")
        raise SchemeError(
            "residual negative power " + "*".join(parts)
            + " after Taylor expansion (inconsistent scheme)"
        )
    return g


class Closure:
    """Pure-x expressions for every t-derivative on the manifold ``u_t = Q``.

    ``g(k)`` is d^k u/dt^k written with x-derivatives only; ``jet(a, b)`` is
    ``D_x^a g(b)``.  Results are memoised.
    """

    def __init__(self, pde_rhs: Expr):
        for v in jets_of(pde_rhs):
            if v.t_order:
                raise SchemeError(f"right-hand side contains t-derivative {v.name}")
        self.pde_rhs = pde_rhs
        self._g: Dict[int, Expr] = {1: pde_rhs}
        self._jets: Dict[Tuple[int, int], Expr] = {}

    def g(self, k: int) -> Expr:
        if k < 1:
            raise ValueError("closure order must be >= 1")
        if k not in self._g:
            prev = self.g(k - 1)
            self._g[k] = self.eliminate(total_derivative(prev, "t"))
        return self._g[k]

    def jet(self, a: int, b: int) -> Expr:
        key = (a, b)
        hit = self._jets.get(key)
        if hit is None:
            if b == 0:
                hit = Expr.var(JetVar(a, 0))
            elif a == 0:
                hit = self.g(b)
            else:
                hit = total_derivative(self.jet(a - 1, b), "x")
            self._jets[key] = hit
        return hit

    def eliminate(self, e: Expr) -> Expr:
        """Replace every t-bearing jet variable of ``e`` by its pure-x form."""
        tj = sorted(v for v in jets_of(e) if v.t_order)
        if not tj:
            return e
        out = substitute_many(e, {v: self.jet(v.x_order, v.t_order) for v in tj})
        if any(v.t_order for v in jets_of(out)):
            raise ReductionError("t-derivative survived elimination")
        return out


def t_closure(pde_rhs: Expr, k: int) -> Expr:
    return Closure(pde_rhs).g(k)


@dataclass(frozen=True)
class DifferentialApproximation:
    """Modified equation ``pde_part + error_part = 0`` in Pi-form."""

    pde_rhs: Expr
    error_part: Expr
    retained_grading: FrozenSet[Grade] = frozenset()
    taylor_order: Optional[int] = None
    name: str = "pde"
    closure: Closure = field(default=None, compare=False, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.closure is None:
            object.__setattr__(self, "closure", Closure(self.pde_rhs))
        for m in self.error_part.terms:
            if min(step_grade(m)) < 0:
                raise SchemeError("negative power of h or tau in differential approximation")
        if any(v.t_order for v in jets_of(self.error_part)):
            raise SchemeError("error part is not in Pi-form")

    @classmethod
    def continuous(cls, pde_rhs: Expr, name: str = "pde") -> "DifferentialApproximation":
        return cls(pde_rhs, ZERO, frozenset(), None, name)

    @property
    def pde_part(self) -> Expr:
        return Expr.var(WT) - self.pde_rhs

    def full(self) -> Expr:
        return self.pde_part + self.error_part

    def by_grade(self) -> Dict[Grade, Expr]:
        """Error part grouped by (tau, h) exponents; values are free of h, tau."""
        out = {}
        for key, val in collect(self.error_part, [TAU, H]).items():
            out[step_grade(key)] = val
        return dict(sorted(out.items()))

    def minimal_gradings(self) -> Tuple[Optional[int], Optional[int]]:
        """Smallest pure tau exponent and smallest pure h exponent in the error."""
        grades = self.by_grade()
        pt = [a for a, b in grades if b == 0]
        ph = [b for a, b in grades if a == 0]
        return (min(pt) if pt else None, min(ph) if ph else None)

    def highest_x_order(self) -> int:
        return max(max_x_order(self.full()), 1)


def leading_grades(grades: Iterable[Grade]) -> FrozenSet[Grade]:
    """The first-differential-approximation grades among nonzero ``grades``.

    Pure tau^m and h^n at their minimal exponents, plus mixed tau^a h^b with
    a/m + b/n <= 1 (same order when tau scales like h^(n/m)).
    """
    grades = set(grades)
    if not grades:
        return frozenset()
    mt = min((a for a, b in grades if b == 0), default=None)
    nh = min((b for a, b in grades if a == 0), default=None)

    def weight(a, b):
        w = Fraction(0)
        for k, lead in ((a, mt), (b, nh)):
            if k:
                if lead is None:
                    return None
                w += Fraction(k, lead)
        return w

    kept = frozenset(g for g in grades if (w := weight(*g)) is not None and w <= 1)
    if not kept:
        low = min(a + b for a, b in grades)
        kept = frozenset(g for g in grades if a_b_sum(g) == low)
    return kept


def a_b_sum(g: Grade) -> int:
    return g[0] + g[1]


def split_gamma(gamma: Expr, pde_rhs: Expr) -> Tuple[Expr, Expr]:
    """Normalise the Gamma-form so its step-free part is ``u_t - Q``.

    Returns ``(normalised gamma, error terms)``.
    """
    lead = filter_terms(gamma, lambda m: step_grade(m) == (0, 0))
    target = Expr.var(WT) - pde_rhs
    c = lead.terms.get(((WT, 1),))
    if c is None or lead != target.scale(c):
        raise SchemeError(
            f"scheme does not approximate u_t = {pde_rhs}: leading part is {lead}"
        )
    if c != 1:
        gamma = gamma.scale(1 / c)
    return gamma, filter_terms(gamma, lambda m: step_grade(m) != (0, 0))


def pi_form(
    gamma: Expr,
    pde_rhs: Expr,
    grading: Optional[Iterable[Grade]] = None,
    *,
    closure: Optional[Closure] = None,
    exact_degree: Optional[int] = None,
    taylor_order: Optional[int] = None,
    name: str = "scheme",
) -> DifferentialApproximation:
    """Eliminate t-derivatives from the error terms of ``gamma``.

    With ``grading=None`` the leading grades are detected; ``exact_degree``
    bounds the (tau, h)-degree up to which ``gamma`` is trustworthy.
    """
    closure = closure or Closure(pde_rhs)
    _, err = split_gamma(gamma, pde_rhs)
    parts: Dict[Grade, Expr] = {}
    for key, val in collect(err, [TAU, H]).items():
        parts[step_grade(key)] = val
    if grading is not None:
        keep = frozenset(grading)
        conv = {g: closure.eliminate(parts[g]) for g in sorted(keep) if g in parts}
    else:
        conv = {}
        for g in sorted(parts, key=lambda g: (a_b_sum(g), g)):
            if exact_degree is not None and a_b_sum(g) > exact_degree:
                continue
            c = closure.eliminate(parts[g])
            if c:
                conv[g] = c
        keep = leading_grades(conv)
    error = ZERO
    for g in sorted(keep):
        val = conv.get(g)
        if val:
            error = error + val * Expr.monomial({TAU: g[0], H: g[1]})
    return DifferentialApproximation(
        pde_rhs, error, frozenset(keep), taylor_order, name, closure
    )


def differential_approximation(
    scheme: Expr,
    pde_rhs: Expr,
    *,
    taylor_order: Optional[int] = None,
    grading: Optional[Iterable[Grade]] = None,
    name: str = "scheme",
) -> DifferentialApproximation:
    """Gamma-form then Pi-form, raising the Taylor order until the retained
    grading is exact (cap ``TAYLOR_CAP`` unless a larger order is requested)."""
    depth = laurent_depth(scheme)
    n = taylor_order if taylor_order is not None else depth + 2
    cap = max(TAYLOR_CAP, n)
    closure = Closure(pde_rhs)
    if grading is not None:
        grading = frozenset(grading)
    while True:
        gamma = gamma_form(scheme, n)
        window = n - depth
        if window < 0:
            n += 1
            continue
        gamma, _ = split_gamma(gamma, pde_rhs)
        da = pi_form(gamma, pde_rhs, grading, closure=closure, exact_degree=window,
                     taylor_order=n, name=name)
        if _closed(da, grading, window) or n >= cap:
            if grading is not None and max((a_b_sum(g) for g in grading), default=0) > window:
                raise SchemeError(
                    f"requested grading needs Taylor order above the cap {cap}"
                )
            log.info("scheme %s: Taylor order %d, grading %s", name, n, sorted(da.retained_grading))
            return da
        n += 1


def _closed(da: DifferentialApproximation, grading, window: int) -> bool:
    if grading is not None:
        return max((a_b_sum(g) for g in grading), default=0) <= window
    mt, nh = da.minimal_gradings()
    return mt is not None and nh is not None and max(mt, nh) <= window
