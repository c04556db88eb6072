"""Polynomial ansatz, determining system and exact nullspace.

The infinitesimals are replaced by complete polynomials of degree ``theta``
with unknown coefficients.  The invariance residual is then linear in those
coefficients, and collecting it over every monomial in the remaining
variables gives a homogeneous linear system solved over the rationals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import comb
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from gmpy2 import mpq

from symflux.errors import KernelError, VerificationError
from symflux.modeq import DifferentialApproximation
from symflux.prolong import COMPONENTS, InfinitesimalSet, invariance_residual
from symflux.symkernel import (
    BUILTIN_BY_NAME,
    ZERO,
    BaseSymbol,
    Expr,
    Monomial,
    coefficient_symbol,
    is_coefficient,
    mono_to_string,
    term_sort_key,
)

log = logging.getLogger(__name__)

Vector = List[mpq]
SparseRow = Dict[int, mpq]

COEFF_PREFIX = {"xi1": "a", "xi2": "b", "eta": "c", "zeta1": "e", "zeta2": "f", "chi": "g"}


@dataclass
class Ansatz:
    inf: InfinitesimalSet
    coeffs: List[BaseSymbol]
    # per coefficient: (component name, monomial it multiplies)
    layout: List[Tuple[str, Expr]]

    def instantiate(self, values: Sequence) -> InfinitesimalSet:
        parts: Dict[str, Expr] = {n: ZERO for n in COMPONENTS}
        for (comp, mono), val in zip(self.layout, values):
            if val:
                parts[comp] = parts[comp] + mono.scale(val)
        return InfinitesimalSet(**parts)


def _monomials(deps: Sequence[str], theta: int):
    """Exponent tuples over ``deps`` of total degree <= theta, graded order."""
    n = len(deps)
    for d in range(theta + 1):
        exps = []
        for combo in combinations_with_replacement(range(n), d):
            e = [0] * n
            for i in combo:
                e[i] += 1
            exps.append(tuple(e))
        yield from sorted(exps, reverse=True)


def build_ansatz(deps: Mapping[str, Optional[Sequence[str]]], theta: int) -> Ansatz:
    """Complete degree-``theta`` polynomial for each component.

    ``deps[name] = None`` (or a missing key) fixes that component to zero.
    """
    if theta < 0:
        raise ValueError("ansatz degree must be >= 0")
    parts = {}
    coeffs: List[BaseSymbol] = []
    layout: List[Tuple[str, Expr]] = []
    for name in COMPONENTS:
        dep = deps.get(name)
        if dep is None:
            parts[name] = ZERO
            continue
        vars_ = [BUILTIN_BY_NAME[v] for v in dep]
        comp = ZERO
        for exps in _monomials(dep, theta):
            label = COEFF_PREFIX[name] + ("_" + "_".join(map(str, exps)) if exps else "")
            c = coefficient_symbol(label)
            mono = Expr.monomial(dict(zip(vars_, exps)))
            comp = comp + Expr.var(c) * mono
            coeffs.append(c)
            layout.append((name, mono))
        parts[name] = comp
    return Ansatz(InfinitesimalSet(**parts), coeffs, layout)


def ansatz_size(deps: Mapping[str, Optional[Sequence[str]]], theta: int) -> int:
    return sum(comb(len(d) + theta, theta) for d in deps.values() if d is not None)


@dataclass
class LinearSystem:
    """Homogeneous system ``rows . c = 0``; each row tagged by its monomial."""

    ncols: int
    rows: List[SparseRow] = field(default_factory=list)
    row_tags: List[Monomial] = field(default_factory=list)

    def apply(self, v: Sequence) -> List[mpq]:
        return [sum((c * v[j] for j, c in row.items()), mpq(0)) for row in self.rows]


def determining_system(residual: Expr, coeffs: Sequence[BaseSymbol]) -> LinearSystem:
    """One row per monomial in the non-coefficient variables."""
    index = {c: i for i, c in enumerate(coeffs)}
    rows: Dict[Monomial, SparseRow] = {}
    for m, c in residual.terms.items():
        col = None
        rest = []
        for v, e in m:
            if is_coefficient(v):
                if col is not None or e != 1 or v not in index:
                    raise KernelError(f"residual is not linear in the coefficients: {mono_to_string(m)}")
                col = index[v]
            else:
                rest.append((v, e))
        if col is None:
            raise KernelError(f"residual has a coefficient-free term {mono_to_string(m)}")
        row = rows.setdefault(tuple(rest), {})
        n = row.get(col, 0) + c
        if n:
            row[col] = n
        else:
            del row[col]
    system = LinearSystem(len(coeffs))
    for tag in sorted(rows, key=term_sort_key):
        if rows[tag]:
            system.rows.append(rows[tag])
            system.row_tags.append(tag)
    return system


def rref(rows: Sequence[SparseRow]) -> Dict[int, SparseRow]:
    """Reduced row echelon form as ``{pivot column: row}``; pivots are 1."""
    piv: Dict[int, SparseRow] = {}
    for src in rows:
        r = dict(src)
        while True:
            hits = [c for c in r if c in piv]
            if not hits:
                break
            c = min(hits)
            f = r[c]
            for k, v in piv[c].items():
                n = r.get(k, 0) - f * v
                if n:
                    r[k] = n
                else:
                    r.pop(k, None)
        if not r:
            continue
        lead = min(r)
        inv = 1 / r[lead]
        piv[lead] = {k: v * inv for k, v in r.items()}
    # back substitution
    for c in sorted(piv, reverse=True):
        prow = piv[c]
        for c2 in piv:
            if c2 < c:
                row = piv[c2]
                f = row.get(c)
                if f:
                    for k, v in prow.items():
                        n = row.get(k, 0) - f * v
                        if n:
                            row[k] = n
                        else:
                            row.pop(k, None)
    return dict(sorted(piv.items()))


def nullspace(system: LinearSystem) -> List[Vector]:
    """Canonical basis: one vector per free column, 1 in that column."""
    piv = rref(system.rows)
    basis = []
    for f in range(system.ncols):
        if f in piv:
            continue
        v = [mpq(0)] * system.ncols
        v[f] = mpq(1)
        for p, row in piv.items():
            val = row.get(f)
            if val:
                v[p] = -val
        basis.append(v)
    return basis


def rank(system: LinearSystem) -> int:
    return len(rref(system.rows))


@dataclass
class LieGenerator:
    inf: InfinitesimalSet
    label: str = ""
    # number of terms left in the recomputed invariance residual (0 = certified)
    certificate: Optional[int] = None

    def operator_string(self) -> str:
        return operator_string(self.inf)

    def coordinates(self) -> Dict[Tuple[int, Monomial], mpq]:
        out = {}
        for i, name in enumerate(COMPONENTS):
            for m, c in getattr(self.inf, name).terms.items():
                out[(i, m)] = c
        return out


_DERIV = {"xi1": "x", "xi2": "t", "eta": "u", "zeta1": "h", "zeta2": "tau", "chi": "nu"}


def operator_string(inf: InfinitesimalSet) -> str:
    """Render as ``x*d/dx + 2*t*d/dt - u*d/du``."""
    out = ""
    for name in COMPONENTS:
        comp = getattr(inf, name)
        if not comp:
            continue
        d = f"d/d{_DERIV[name]}"
        neg = False
        if len(comp) == 1:
            (m, c), = comp.terms.items()
            neg = c < 0
            mag = comp.scale(-1) if neg else comp
            text = d if mag == 1 else f"{mag}*{d}"
        else:
            text = f"({comp})*{d}"
        if not out:
            out = "-" + text if neg else text
        else:
            out += (" - " if neg else " + ") + text
    return out or "0"


def _normalise(inf: InfinitesimalSet) -> InfinitesimalSet:
    """Integer coefficients, content 1, positive leading coefficient."""
    from math import gcd, lcm

    coords = []
    for name in COMPONENTS:
        coords.extend(c for _, c in getattr(inf, name).sorted_terms())
    if not coords:
        return inf
    den = 1
    for c in coords:
        den = lcm(den, int(c.denominator))
    ints = [int(c * den) for c in coords]
    g = 0
    for k in ints:
        g = gcd(g, k)
    factor = mpq(den, g)
    if ints[0] < 0:
        factor = -factor
    return inf.scale(factor)


def verify_generator(inf: InfinitesimalSet, da: DifferentialApproximation) -> int:
    return len(invariance_residual(inf, da))


def generators_from_basis(
    basis: Sequence[Vector], ansatz: Ansatz, da: DifferentialApproximation, *, verify: bool = True
) -> List[LieGenerator]:
    gens = []
    for k, vec in enumerate(basis, 1):
        inf = _normalise(ansatz.instantiate(vec))
        cert = None
        if verify:
            cert = verify_generator(inf, da)
            if cert:
                raise VerificationError(
                    f"generator {operator_string(inf)} leaves {cert} residual terms"
                )
        gens.append(LieGenerator(inf, f"X{k}", cert))
    return gens


def _coordinate_rows(gens: Sequence[LieGenerator], index: Dict) -> List[SparseRow]:
    rows = []
    for g in gens:
        rows.append({index[k]: v for k, v in g.coordinates().items()})
    return rows


def span_equal(a: Sequence[LieGenerator], b: Sequence[LieGenerator]) -> bool:
    """Do the two generator lists span the same vector space?"""
    keys = set()
    for g in list(a) + list(b):
        keys.update(g.coordinates())
    index = {k: i for i, k in enumerate(sorted(keys, key=lambda k: (k[0], term_sort_key(k[1]))))}
    ra = rref(_coordinate_rows(a, index))
    rb = rref(_coordinate_rows(b, index))
    return ra == rb


def span_contains(big: Sequence[LieGenerator], small: Sequence[LieGenerator]) -> bool:
    keys = set()
    for g in list(big) + list(small):
        keys.update(g.coordinates())
    index = {k: i for i, k in enumerate(sorted(keys, key=lambda k: (k[0], term_sort_key(k[1]))))}
    return len(rref(_coordinate_rows(list(big) + list(small), index))) == len(
        rref(_coordinate_rows(big, index))
    )


def default_dependencies(pde_only: bool, hints: Optional[Mapping] = None) -> Dict[str, Optional[Tuple[str, ...]]]:
    """Dependency sets for the ansatz.

    For the bare PDE the step sizes are absent: zeta components are fixed to
    zero and chi loses its h, tau arguments.
    """
    from symflux.parser import DEFAULT_DEPENDENCIES

    hints = hints or {}
    out: Dict[str, Optional[Tuple[str, ...]]] = {}
    for name, default in DEFAULT_DEPENDENCIES.items():
        dep = default
        if name in hints:
            dep = tuple(v for v in default if v in hints[name])
        if pde_only:
            if name in ("zeta1", "zeta2"):
                dep = None
            else:
                dep = tuple(v for v in dep if v not in ("h", "tau"))
        out[name] = dep
    return out


@dataclass
class SymmetryResult:
    ansatz: Ansatz
    system: LinearSystem
    basis: List[Vector]
    generators: List[LieGenerator]
    residual_terms: int


def solve_symmetries(
    da: DifferentialApproximation,
    deps: Mapping[str, Optional[Sequence[str]]],
    theta: int,
    *,
    verify: bool = True,
) -> SymmetryResult:
    """Full pipeline: ansatz, residual, determining system, nullspace, generators."""
    ansatz = build_ansatz(deps, theta)
    log.info("%s: ansatz with %d coefficients", da.name, len(ansatz.coeffs))
    residual = invariance_residual(ansatz.inf, da)
    log.info("%s: residual with %d terms", da.name, len(residual))
    system = determining_system(residual, ansatz.coeffs)
    basis = nullspace(system)
    log.info("%s: %d rows, nullity %d", da.name, len(system.rows), len(basis))
    gens = generators_from_basis(basis, ansatz, da, verify=verify)
    return SymmetryResult(ansatz, system, basis, gens, len(residual))
