"""Prolonged infinitesimal operators and the invariance residual.

An operator acts on the variables ``(x, t, u, h, tau, nu)`` through the
components ``(xi1, xi2, eta, zeta1, zeta2, chi)`` and on jet variables through
the prolongation coefficients (``sigma``) built recursively from total
derivatives.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Dict, Iterator, Optional

from symflux.errors import KernelError, ReductionError
from symflux.modeq import DifferentialApproximation
from symflux.symkernel import (
    H,
    NU,
    TAU,
    T,
    U,
    X,
    ZERO,
    Expr,
    JetVar,
    diff_partial,
    is_coefficient,
    is_jet,
    jets_of,
    substitute_many,
    total_derivative,
)

COMPONENTS = ("xi1", "xi2", "eta", "zeta1", "zeta2", "chi")
# variable each component moves
COMPONENT_VARS = {"xi1": X, "xi2": T, "eta": U, "zeta1": H, "zeta2": TAU, "chi": NU}
ALLOWED = {
    "xi1": {X, T, U},
    "xi2": {X, T, U},
    "eta": {X, T, U},
    "zeta1": {X, T, U, H, TAU},
    "zeta2": {X, T, U, H, TAU},
    "chi": {X, T, U, H, TAU, NU},
}


@dataclass(frozen=True)
class InfinitesimalSet:
    """Components of a point-transformation generator."""

    xi1: Expr = ZERO
    xi2: Expr = ZERO
    eta: Expr = ZERO
    zeta1: Expr = ZERO
    zeta2: Expr = ZERO
    chi: Expr = ZERO

    def __post_init__(self):
        for name in COMPONENTS:
            comp = getattr(self, name)
            for v in comp.variables():
                if is_coefficient(v):
                    continue
                if is_jet(v):
                    raise KernelError(f"{name} depends on jet variable {v.name}")
                if v not in ALLOWED[name]:
                    raise KernelError(f"{name} may not depend on {v.name}")

    @classmethod
    def from_strings(cls, **parts: str) -> "InfinitesimalSet":
        from symflux.parser import parse_expression

        return cls(**{k: parse_expression(v) for k, v in parts.items()})

    def components(self) -> Dict[str, Expr]:
        return {name: getattr(self, name) for name in COMPONENTS}

    def __add__(self, other: "InfinitesimalSet") -> "InfinitesimalSet":
        return InfinitesimalSet(*(getattr(self, n) + getattr(other, n) for n in COMPONENTS))

    def scale(self, c) -> "InfinitesimalSet":
        return InfinitesimalSet(*(getattr(self, n).scale(c) for n in COMPONENTS))

    def is_zero(self) -> bool:
        return all(getattr(self, n).is_zero() for n in COMPONENTS)


def _step(inf_d, prev: Expr, jet_a: int, jet_b: int, axis) -> Expr:
    """One prolongation step from the coefficient of u_(a,b) along ``axis``.

    ``inf_d[axis]`` holds (D_axis xi1, D_axis xi2).
    """
    d1, d2 = inf_d[axis]
    out = total_derivative(prev, axis)
    if d1:
        out = out - _jet_expr(jet_a + 1, jet_b) * d1
    if d2:
        out = out - _jet_expr(jet_a, jet_b + 1) * d2
    return out


def _jet_expr(a: int, b: int) -> Expr:
    return Expr.var(JetVar(a, b))


class SigmaTable(Mapping):
    """Prolongation coefficients keyed by JetVar, computed on demand.

    Canonical path: x-steps up to ``(a, 0)`` then t-steps up to ``(a, b)``.
    """

    def __init__(self, inf: InfinitesimalSet, max_order: int):
        if max_order < 1:
            raise ValueError("max_order must be >= 1")
        self.inf = inf
        self.max_order = max_order
        self._d = {
            "x": (total_derivative(inf.xi1, "x"), total_derivative(inf.xi2, "x")),
            "t": (total_derivative(inf.xi1, "t"), total_derivative(inf.xi2, "t")),
        }
        self._cache: Dict[tuple, Expr] = {(0, 0): inf.eta}

    def coefficient(self, a: int, b: int) -> Expr:
        key = (a, b)
        hit = self._cache.get(key)
        if hit is None:
            if b == 0:
                hit = _step(self._d, self.coefficient(a - 1, 0), a - 1, 0, "x")
            else:
                hit = _step(self._d, self.coefficient(a, b - 1), a, b - 1, "t")
            self._cache[key] = hit
        return hit

    def __getitem__(self, v: JetVar) -> Expr:
        if not isinstance(v, JetVar):
            raise KeyError(v)
        if v.order > self.max_order:
            raise KeyError(f"no prolongation coefficient for {v.name} (max order {self.max_order})")
        return self.coefficient(v.x_order, v.t_order)

    def __iter__(self) -> Iterator[JetVar]:
        for n in range(1, self.max_order + 1):
            for a in range(n + 1):
                yield JetVar(a, n - a)

    def __len__(self) -> int:
        n = self.max_order
        return (n + 1) * (n + 2) // 2 - 1

    def via_path(self, a: int, b: int, first: str) -> Expr:
        """Coefficient of u_(a,b) built with all ``first``-axis steps done first."""
        cur = self.inf.eta
        ca = cb = 0
        order = ["x"] * a + ["t"] * b if first == "x" else ["t"] * b + ["x"] * a
        for axis in order:
            cur = _step(self._d, cur, ca, cb, axis)
            if axis == "x":
                ca += 1
            else:
                cb += 1
        return cur


def sigma_table(inf: InfinitesimalSet, max_order: int) -> SigmaTable:
    return SigmaTable(inf, max_order)


def apply_prolonged(inf: InfinitesimalSet, sig: Mapping, target: Expr) -> Expr:
    """Apply the prolonged operator to ``target``."""
    out = ZERO
    for name, var in COMPONENT_VARS.items():
        comp = getattr(inf, name)
        if comp:
            d = diff_partial(target, var)
            if d:
                out = out + comp * d
    for v in sorted(jets_of(target)):
        try:
            s = sig[v]
        except KeyError:
            raise KernelError(f"missing prolongation coefficient for {v.name}") from None
        if s:
            out = out + s * diff_partial(target, v)
    return out


class _Reducer:
    """Elimination of t-bearing jets on the manifold of a Pi-form.

    Each t-jet is written as ``S0 + S1``: ``S0`` from the unperturbed equation
    ``u_t = Q`` and ``S1`` the part linear in the error terms.  Products of
    two error contributions are dropped.
    """

    def __init__(self, da: DifferentialApproximation):
        self.da = da
        self.closure = da.closure
        self.err = da.error_part
        self._s1: Dict[tuple, Expr] = {}

    def s0(self, a: int, b: int) -> Expr:
        return self.closure.jet(a, b)

    def s1(self, a: int, b: int) -> Expr:
        if not self.err:
            return ZERO
        key = (a, b)
        hit = self._s1.get(key)
        if hit is not None:
            return hit
        if a:
            hit = total_derivative(self.s1(a - 1, b), "x")
        elif b == 1:
            hit = -self.err
        else:
            prev0 = self.s0(0, b - 1)
            prev1 = self.s1(0, b - 1)
            hit = self.closure.eliminate(total_derivative(prev1, "t"))
            # variation of D_t(prev0) through u_t -> Q - E
            for v in sorted(prev0.variables()):
                if v == U:
                    k = 0
                elif is_jet(v):
                    k = v.x_order
                else:
                    continue
                d = diff_partial(prev0, v)
                if d:
                    hit = hit + d * self.s1(k, 1)
        self._s1[key] = hit
        return hit

    def reduce(self, e: Expr, error_order: int) -> Expr:
        tj = sorted(v for v in jets_of(e) if v.t_order)
        if not tj:
            return e
        lead = {v: self.s0(v.x_order, v.t_order) for v in tj}
        out = substitute_many(e, lead)
        if error_order == 0 and self.err:
            for v in tj:
                d = diff_partial(e, v)
                if d:
                    out = out + substitute_many(d, lead) * self.s1(v.x_order, v.t_order)
        if any(v.t_order for v in jets_of(out)):
            raise ReductionError("t-derivative survived manifold reduction")
        return out


def _reducer(da: DifferentialApproximation) -> _Reducer:
    r = da.__dict__.get("_reducer")
    if r is None:
        r = _Reducer(da)
        object.__setattr__(da, "_reducer", r)
    return r


def manifold_reduce(residual: Expr, da: DifferentialApproximation) -> Expr:
    """Restrict ``residual`` to the solution manifold of ``da``.

    Every t-bearing jet is replaced by its pure-x expression; contributions
    second order in the error part are dropped.
    """
    return _reducer(da).reduce(residual, 0)


def invariance_residual(
    inf: InfinitesimalSet, da: DifferentialApproximation, sig: Optional[SigmaTable] = None
) -> Expr:
    """Prolonged operator applied to ``da`` and reduced on its manifold."""
    full = da.full()
    order = max((v.order for v in jets_of(full)), default=1)
    sig = sig or sigma_table(inf, order)
    r = _reducer(da)
    main = apply_prolonged(inf, sig, da.pde_part)
    out = r.reduce(main, 0)
    if da.error_part:
        out = out + r.reduce(apply_prolonged(inf, sig, da.error_part), 1)
    return out


def operator(**parts) -> InfinitesimalSet:
    """Shorthand: ``operator(xi1="x", eta="-u")``."""
    return InfinitesimalSet.from_strings(**parts)

