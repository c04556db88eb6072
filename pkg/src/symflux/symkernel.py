"""Exact polynomial kernel for jet-space computations.

Every expression handled by the package is a distributed multivariate
polynomial with exact rational coefficients over a small, fixed universe of
variables:

* the built-in symbols ``x, t, u, nu, h, tau``;
* coefficient symbols allocated by the ansatz builder;
* jet variables ``u_x, u_t, u_xx, u_xt, ...`` standing for partial
  derivatives of ``u``;
* grid samples ``u[p,q]`` (only inside finite difference schemes).

Variables are small ``int`` subclasses whose integer value encodes the
canonical ordering (built-ins < coefficients < samples < jets, jets ordered
by total order then x-order), so monomials are plain sorted tuples of
``(variable, exponent)`` pairs and hashing/comparison stay at C speed.

Negative exponents are only legal on ``h`` and ``tau``.
"""

from __future__ import annotations

import threading
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, Mapping, Tuple, Union

from gmpy2 import mpq

from symflux.errors import KernelError, LaurentError

Monomial = Tuple[Tuple[int, int], ...]
Number = Union[int, Fraction, "mpq"]

_COEFF_BASE = 1 << 20
_SAMPLE_BASE = 1 << 48
_JET_BASE = 1 << 56
_SAMPLE_OFF = 1 << 11


class Var(int):
    """A variable of the polynomial ring.  Subclasses decide the naming."""

    __slots__ = ()

    @property
    def name(self) -> str:  # pragma: no cover - overridden
        raise NotImplementedError

    def __repr__(self) -> str:
        return self.name

    __str__ = __repr__


class BaseSymbol(Var):
    """Built-in scalar symbol or ansatz coefficient symbol."""

    __slots__ = ()
    _names: Dict[int, str] = {}

    def __getnewargs__(self):
        return (int(self),)

    @property
    def name(self) -> str:
        return BaseSymbol._names[int(self)]

    @property
    def is_coefficient(self) -> bool:
        return _COEFF_BASE <= self < _SAMPLE_BASE


def _builtin(code: int, name: str) -> BaseSymbol:
    BaseSymbol._names[code] = name
    return BaseSymbol(code)


X = _builtin(0, "x")
T = _builtin(1, "t")
U = _builtin(2, "u")
NU = _builtin(3, "nu")
H = _builtin(4, "h")
TAU = _builtin(5, "tau")

BUILTINS = (X, T, U, NU, H, TAU)
BUILTIN_BY_NAME = {s.name: s for s in BUILTINS}
LAURENT_SYMBOLS = frozenset((H, TAU))

_coeff_by_name: Dict[str, BaseSymbol] = {}
_coeff_lock = threading.Lock()


def coefficient_symbol(name: str) -> BaseSymbol:
    """The coefficient symbol called ``name`` (interned: same name, same symbol).

    Ids are handed out in order of first use, so coefficients of one ansatz
    sort in the order the ansatz created them.
    """
    with _coeff_lock:
        sym = _coeff_by_name.get(name)
        if sym is None:
            code = _COEFF_BASE + len(_coeff_by_name)
            BaseSymbol._names[code] = name
            sym = _coeff_by_name[name] = BaseSymbol(code)
    return sym


class JetVar(Var):
    """Pure derivative index ``(a, b)`` standing for d^(a+b) u / dx^a dt^b."""

    __slots__ = ()
    _cache: Dict[Tuple[int, int], "JetVar"] = {}

    def __new__(cls, x_order: int, t_order: int = 0):
        key = (x_order, t_order)
        hit = cls._cache.get(key)
        if hit is not None:
            return hit
        if x_order < 0 or t_order < 0 or x_order + t_order == 0:
            raise KernelError(f"invalid jet variable orders {key}")
        obj = int.__new__(cls, _JET_BASE + ((x_order + t_order) << 16) + x_order)
        cls._cache[key] = obj
        return obj

    def __getnewargs__(self):
        return (self.x_order, self.t_order)

    @property
    def x_order(self) -> int:
        return (self - _JET_BASE) & 0xFFFF

    @property
    def t_order(self) -> int:
        return ((self - _JET_BASE) >> 16) - self.x_order

    @property
    def order(self) -> int:
        return (self - _JET_BASE) >> 16

    @property
    def name(self) -> str:
        return "u_" + "x" * self.x_order + "t" * self.t_order


class GridSample(Var):
    """Grid value u(x + p*h, t + q*tau); offsets are halves or integers."""

    __slots__ = ()

    def __new__(cls, p, q=0):
        p, q = Fraction(p), Fraction(q)
        if (2 * p).denominator != 1 or (2 * q).denominator != 1:
            raise KernelError(f"grid offsets must be integers or halves, got {p}, {q}")
        p2, q2 = int(2 * p), int(2 * q)
        if not (-_SAMPLE_OFF < p2 < _SAMPLE_OFF and -_SAMPLE_OFF < q2 < _SAMPLE_OFF):
            raise KernelError("grid offset out of range")
        return int.__new__(cls, _SAMPLE_BASE + ((p2 + _SAMPLE_OFF) << 12) + q2 + _SAMPLE_OFF)

    def __getnewargs__(self):
        return (self.p, self.q)

    @property
    def p(self) -> Fraction:
        return Fraction(((self - _SAMPLE_BASE) >> 12) - _SAMPLE_OFF, 2)

    @property
    def q(self) -> Fraction:
        return Fraction(((self - _SAMPLE_BASE) & 0xFFF) - _SAMPLE_OFF, 2)

    @property
    def name(self) -> str:
        return f"u[{self.p},{self.q}]"


def is_jet(v: int) -> bool:
    return v >= _JET_BASE


def is_sample(v: int) -> bool:
    return _SAMPLE_BASE <= v < _JET_BASE


def is_coefficient(v: int) -> bool:
    return _COEFF_BASE <= v < _SAMPLE_BASE


def to_q(c) -> mpq:
    if isinstance(c, (int, Fraction)) or type(c) is type(mpq(0)):
        return mpq(c)
    raise TypeError(f"not an exact rational: {c!r}")


_ZERO = mpq(0)
_ONE = mpq(1)


@lru_cache(maxsize=1 << 20)
def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        n = d.get(v, 0) + e
        if n:
            d[v] = n
        else:
            del d[v]
    return tuple(sorted(d.items()))


def mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


class Expr:
    """Immutable canonical polynomial: ``{monomial: nonzero mpq}``.

    The constructor trusts its argument; build expressions with the factory
    helpers or arithmetic operators.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Dict[Monomial, mpq] | None = None):
        self.terms = terms if terms is not None else {}
        self._hash = None

    # construction -------------------------------------------------------
    @staticmethod
    def const(c) -> "Expr":
        c = to_q(c)
        return Expr({(): c}) if c else Expr()

    @staticmethod
    def var(v: Var, exp: int = 1) -> "Expr":
        if exp < 0 and v not in LAURENT_SYMBOLS:
            raise LaurentError(f"negative exponent on {v.name}")
        if exp == 0:
            return Expr({(): _ONE})
        return Expr({((v, exp),): _ONE})

    @staticmethod
    def monomial(mono: Mapping[Var, int], coeff=1) -> "Expr":
        c = to_q(coeff)
        if not c:
            return Expr()
        for v, e in mono.items():
            if e < 0 and v not in LAURENT_SYMBOLS:
                raise LaurentError(f"negative exponent on {v.name}")
        m = tuple(sorted((v, e) for v, e in mono.items() if e))
        return Expr({m: c})

    # predicates ---------------------------------------------------------
    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_value(self) -> mpq:
        return self.terms.get((), _ZERO)

    def __len__(self) -> int:
        return len(self.terms)

    def variables(self) -> set:
        return {v for m in self.terms for v, _ in m}

    def degree_in(self, v: Var) -> int:
        return max((dict(m).get(v, 0) for m in self.terms), default=0)

    def min_degree_in(self, v: Var) -> int:
        return min((dict(m).get(v, 0) for m in self.terms), default=0)

    # arithmetic ---------------------------------------------------------
    def __add__(self, other) -> "Expr":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not other.terms:
            return self
        if not self.terms:
            return other
        if len(other.terms) > len(self.terms):
            self, other = other, self
        res = dict(self.terms)
        for m, c in other.terms.items():
            n = res.get(m)
            if n is None:
                res[m] = c
            else:
                n = n + c
                if n:
                    res[m] = n
                else:
                    del res[m]
        return Expr(res)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Expr":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "Expr":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def scale(self, c) -> "Expr":
        c = to_q(c)
        if not c:
            return Expr()
        if c == 1:
            return self
        return Expr({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other) -> "Expr":
        if not isinstance(other, Expr):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        a, b = self.terms, other.terms
        if not a or not b:
            return Expr()
        if len(b) == 1 and () in b:
            return self.scale(b[()])
        if len(a) == 1 and () in a:
            return other.scale(a[()])
        res: Dict[Monomial, mpq] = {}
        get = res.get
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                m = mono_mul(m1, m2)
                n = get(m)
                res[m] = c1 * c2 if n is None else n + c1 * c2
        return Expr({m: c for m, c in res.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Expr":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse_monomial() ** (-k)
        result = Expr.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def inverse_monomial(self) -> "Expr":
        """Inverse of a single-term expression whose variables are h/tau only."""
        if len(self.terms) != 1:
            raise LaurentError(f"cannot invert non-monomial {self}")
        (m, c), = self.terms.items()
        for v, _ in m:
            if v not in LAURENT_SYMBOLS:
                raise LaurentError(f"cannot invert {Var.__repr__(v)}: only h and tau may carry negative powers")
        return Expr({tuple((v, -e) for v, e in m): 1 / c})

    def __truediv__(self, other) -> "Expr":
        if isinstance(other, Expr):
            return self * other.inverse_monomial()
        c = to_q(other)
        if not c:
            raise ZeroDivisionError("division of expression by zero")
        return self.scale(1 / c)

    # comparison ---------------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, Expr):
            return self.terms == other.terms
        try:
            other = Expr.const(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # display ------------------------------------------------------------
    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda mc: term_sort_key(mc[0]))

    def __str__(self) -> str:
        return to_string(self)

    def __repr__(self) -> str:
        return f"Expr({to_string(self)!r})"

    def __reduce__(self):
        return (Expr, ({m: mpq(c) for m, c in self.terms.items()},))


def _coerce(x):
    if isinstance(x, Expr):
        return x
    try:
        return Expr.const(x)
    except TypeError:
        return NotImplemented


def var_name(v: int) -> str:
    if is_jet(v):
        return JetVar.__dict__["name"].fget(v)  # type: ignore[arg-type]
    if is_sample(v):
        return GridSample.__dict__["name"].fget(v)  # type: ignore[arg-type]
    return BaseSymbol._names[int(v)]


def term_sort_key(m: Monomial):
    """Graded lexicographic key: total degree first, then variable order."""
    return (mono_degree(m), m)


def mono_to_string(m: Monomial) -> str:
    parts = []
    for v, e in m:
        n = var_name(v)
        parts.append(n if e == 1 else f"{n}^{e}")
    return "*".join(parts)


def to_string(e: Expr) -> str:
    if not e.terms:
        return "0"
    out = []
    for i, (m, c) in enumerate(e.sorted_terms()):
        neg = c < 0
        a = -c if neg else c
        body = mono_to_string(m)
        if not body:
            text = str(a)
        elif a == 1:
            text = body
        else:
            text = f"{a}*{body}"
        if i == 0:
            out.append("-" + text if neg else text)
        else:
            out.append((" - " if neg else " + ") + text)
    return "".join(out)


def symbol(v: Var) -> Expr:
    return Expr.var(v)


def const(c) -> Expr:
    return Expr.const(c)


ZERO = Expr()
ONE = Expr.const(1)


# ---------------------------------------------------------------------------
# high-level operations


def add(a: Expr, b: Expr) -> Expr:
    return a + b


def mul(a: Expr, b: Expr) -> Expr:
    return a * b


def diff_partial(e: Expr, v: Var) -> Expr:
    """Formal partial derivative, every other variable held constant."""
    res: Dict[Monomial, mpq] = {}
    laurent = v in LAURENT_SYMBOLS
    for m, c in e.terms.items():
        for i, (w, k) in enumerate(m):
            if w == v:
                if laurent and k < 0:
                    raise LaurentError(
                        f"differentiation in {var_name(v)} of an expression with negative powers"
                    )
                nm = m[:i] + m[i + 1:] if k == 1 else m[:i] + ((w, k - 1),) + m[i + 1:]
                res[nm] = res.get(nm, _ZERO) + c * k
                break
    return Expr({m: c for m, c in res.items() if c})


def _promote(v: int, axis: int):
    """Target of d/d(axis) acting on variable ``v``: None if constant, axis var if explicit."""
    if v == axis:
        return v
    if v == U:
        return JetVar(1, 0) if axis == X else JetVar(0, 1)
    if v >= _JET_BASE:
        a = (v - _JET_BASE) & 0xFFFF
        b = ((v - _JET_BASE) >> 16) - a
        return JetVar(a + 1, b) if axis == X else JetVar(a, b + 1)
    if _SAMPLE_BASE <= v:
        raise KernelError("total derivative of a grid sample is undefined; Taylor-expand first")
    return None


@lru_cache(maxsize=1 << 18)
def _dmono(m: Monomial, axis: int):
    out = []
    for i, (v, k) in enumerate(m):
        target = _promote(v, axis)
        if target is None:
            continue
        d = dict(m)
        if k == 1:
            del d[v]
        else:
            d[v] = k - 1
        if target != v:
            d[target] = d.get(target, 0) + 1
        out.append((tuple(sorted(d.items())), k))
    return tuple(out)


def _axis(axis) -> int:
    if axis in ("x", X):
        return X
    if axis in ("t", T):
        return T
    raise KernelError(f"unknown axis {axis!r}")


def total_derivative(e: Expr, axis) -> Expr:
    """Total derivative D_x or D_t acting through u and every jet variable."""
    ax = _axis(axis)
    res: Dict[Monomial, mpq] = {}
    get = res.get
    for m, c in e.terms.items():
        for nm, k in _dmono(m, ax):
            n = get(nm)
            res[nm] = c * k if n is None else n + c * k
    return Expr({m: c for m, c in res.items() if c})


def total_derivative_n(e: Expr, axis, n: int) -> Expr:
    for _ in range(n):
        e = total_derivative(e, axis)
    return e


def split_by_var(e: Expr, v: Var) -> Dict[int, Expr]:
    """Group ``e`` by the exponent of ``v``: ``e == sum(v**k * part)``."""
    groups: Dict[int, Dict[Monomial, mpq]] = {}
    for m, c in e.terms.items():
        k = 0
        rest = m
        for i, (w, j) in enumerate(m):
            if w == v:
                k = j
                rest = m[:i] + m[i + 1:]
                break
        groups.setdefault(k, {})[rest] = c
    return {k: Expr(d) for k, d in groups.items()}


def substitute(e: Expr, v: Var, r: Expr) -> Expr:
    """Replace every occurrence of ``v`` by ``r``."""
    groups = split_by_var(e, v)
    if len(groups) == 1 and 0 in groups:
        return e
    result = groups.pop(0, ZERO)
    if any(k < 0 for k in groups):
        if len(r.terms) != 1:
            raise LaurentError(
                f"{var_name(v)} carries negative powers; replacement must be a single monomial"
            )
    powers: Dict[int, Expr] = {}
    for k in sorted(groups):
        if k not in powers:
            powers[k] = r ** k
        result = result + groups[k] * powers[k]
    return result


def substitute_many(e: Expr, mapping: Mapping[Var, Expr]) -> Expr:
    """Sequential substitution; replacements must not contain mapped variables."""
    for v, r in mapping.items():
        e = substitute(e, v, r)
    return e


def collect(e: Expr, vars: Iterable[Var]) -> Dict[Monomial, Expr]:
    """Group ``e`` by monomials over ``vars``; values are free of ``vars``."""
    vs = frozenset(vars)
    groups: Dict[Monomial, Dict[Monomial, mpq]] = {}
    for m, c in e.terms.items():
        key = tuple(p for p in m if p[0] in vs)
        rest = tuple(p for p in m if p[0] not in vs)
        groups.setdefault(key, {})[rest] = c
    return {k: Expr(d) for k, d in groups.items()}


def filter_terms(e: Expr, pred) -> Expr:
    """Keep the terms whose monomial satisfies ``pred``."""
    return Expr({m: c for m, c in e.terms.items() if pred(m)})


def step_grade(m: Monomial) -> Tuple[int, int]:
    """(tau exponent, h exponent) of a monomial."""
    a = b = 0
    for v, k in m:
        if v == TAU:
            a = k
        elif v == H:
            b = k
        elif v > TAU:
            break
    return a, b


def jets_of(e: Expr) -> set:
    return {v for v in e.variables() if is_jet(v)}


def max_x_order(e: Expr) -> int:
    return max((v.x_order for v in jets_of(e)), default=0)
