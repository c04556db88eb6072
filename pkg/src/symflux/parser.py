"""Reader for problem files.

A problem file declares the PDE in evolution form, one or more schemes,
optional dependency hints for the infinitesimals, and options::

    # viscous Burgers
    pde u_t = -u*u_x + nu*u_xx
    scheme ftcs {
        (u[0,1] - u[0,0])/tau + (u[1,0]^2/2 - u[-1,0]^2/2)/(2*h)
        - nu*(u[1,0] - 2*u[0,0] + u[-1,0])/h^2 = 0
    }
    hint xi2 depends (t)
    option ansatz_degree = 3

Expressions use ``+ - * / ^``, parentheses, integer or decimal literals, the
symbols ``x t u nu h tau``, derivatives ``u_x, u_xxt, ...`` and grid samples
``u[p,q]`` whose offsets may be halves (``u[-1/2,0]``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Tuple

from symflux.errors import LaurentError, ParseError
from symflux.symkernel import (
    BUILTIN_BY_NAME,
    Expr,
    GridSample,
    JetVar,
)

INFINITESIMALS = ("xi1", "xi2", "eta", "zeta1", "zeta2", "chi")

# Most permissive dependency sets; hints may only shrink them.
DEFAULT_DEPENDENCIES: Dict[str, Tuple[str, ...]] = {
    "xi1": ("x", "t"),
    "xi2": ("t",),
    "eta": ("x", "t", "u"),
    "zeta1": ("x", "t", "u", "h", "tau"),
    "zeta2": ("x", "t", "u", "h", "tau"),
    "chi": ("x", "t", "u", "h", "tau", "nu"),
}

OPTIONS = ("taylor_order", "ansatz_degree")
MAX_EXPONENT = 64

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()\[\]{}=,])
    """,
    re.VERBOSE,
)
_JET_NAME = re.compile(r"u_([xt]+)\Z")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


@dataclass(frozen=True)
class Scheme:
    name: str
    expr: Expr
    line: int = 0


@dataclass(frozen=True)
class Problem:
    pde_rhs: Expr
    schemes: Tuple[Scheme, ...] = ()
    hints: Dict[str, FrozenSet[str]] = field(default_factory=dict)
    options: Dict[str, int] = field(default_factory=dict)

    def scheme(self, name: str) -> Scheme:
        for s in self.schemes:
            if s.name == name:
                return s
        raise KeyError(name)

    def dependencies(self) -> Dict[str, Tuple[str, ...]]:
        """Default dependency sets restricted by the hints."""
        out = {}
        for inf, default in DEFAULT_DEPENDENCIES.items():
            hint = self.hints.get(inf)
            out[inf] = default if hint is None else tuple(v for v in default if v in hint)
        return out


class _Parser:
    def __init__(self, text: str, *, allow_samples=True, allow_t_jets=True):
        self.tokens = tokenize(text)
        self.i = 0
        self.allow_samples = allow_samples
        self.allow_t_jets = allow_t_jets

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            raise self.error(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    # expressions
    def expr(self) -> Expr:
        out = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            rhs = self.term()
            out = out + rhs if op == "+" else out - rhs
        return out

    def term(self) -> Expr:
        out = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance()
            rhs = self.unary()
            if op.text == "*":
                out = out * rhs
            else:
                if rhs.is_zero():
                    raise self.error("division by zero", op)
                try:
                    out = out / rhs
                except LaurentError:
                    raise self.error(
                        "can only divide by a constant times powers of h and tau", op
                    ) from None
        return out

    def unary(self) -> Expr:
        if self.at("-"):
            self.advance()
            return -self.unary()
        if self.at("+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at("^"):
            op = self.advance()
            k = self.exponent()
            try:
                return base ** k
            except LaurentError:
                raise self.error("negative powers are only allowed on h and tau", op) from None
        return base

    def exponent(self) -> int:
        paren = self.at("(")
        if paren:
            self.advance()
        sign = 1
        if self.at("-"):
            self.advance()
            sign = -1
        tok = self.expect_kind("num", "integer exponent")
        if not tok.text.isdigit():
            raise self.error("exponent must be an integer", tok)
        if int(tok.text) > MAX_EXPONENT:
            raise self.error(f"exponent larger than {MAX_EXPONENT}", tok)
        if paren:
            self.expect(")")
        return sign * int(tok.text)

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Expr.const(Fraction(tok.text))
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            self.advance()
            if tok.text == "u" and self.at("["):
                return Expr.var(self.sample(tok))
            if tok.text in BUILTIN_BY_NAME:
                return Expr.var(BUILTIN_BY_NAME[tok.text])
            m = _JET_NAME.match(tok.text)
            if m:
                letters = m.group(1)
                jet = JetVar(letters.count("x"), letters.count("t"))
                if jet.t_order and not self.allow_t_jets:
                    raise self.error(
                        f"t-derivative {tok.text} not allowed in the evolution right-hand side", tok
                    )
                return Expr.var(jet)
            raise self.error(f"unknown identifier {tok.text!r}", tok)
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")

    def sample(self, start: Token) -> GridSample:
        if not self.allow_samples:
            raise self.error("grid samples are only allowed inside schemes", start)
        self.expect("[")
        p = self.offset()
        self.expect(",")
        q = self.offset()
        self.expect("]")
        try:
            return GridSample(p, q)
        except Exception as exc:
            raise self.error(f"malformed offset: {exc}", start) from None

    def offset(self) -> Fraction:
        sign = 1
        if self.at("-") or self.at("+"):
            sign = -1 if self.advance().text == "-" else 1
        tok = self.expect_kind("num", "integer offset")
        if not tok.text.isdigit():
            raise self.error("malformed offset: expected integer or p/2", tok)
        val = Fraction(int(tok.text))
        if self.at("/"):
            self.advance()
            den = self.expect_kind("num", "offset denominator")
            if den.text not in ("1", "2"):
                raise self.error("malformed offset: denominator must be 1 or 2", den)
            val /= int(den.text)
        return sign * val

    # declarations
    def problem(self) -> Problem:
        pde = None
        schemes: List[Scheme] = []
        hints: Dict[str, FrozenSet[str]] = {}
        options: Dict[str, int] = {}
        while self.tok.kind != "eof":
            tok = self.tok
            if self.at("pde"):
                if pde is not None:
                    raise self.error("duplicate pde declaration")
                pde = self.pde_decl()
            elif self.at("scheme"):
                s = self.scheme_decl()
                if any(o.name == s.name for o in schemes):
                    raise self.error(f"duplicate scheme name {s.name!r}", tok)
                schemes.append(s)
            elif self.at("hint"):
                name, deps = self.hint_decl()
                hints[name] = deps
            elif self.at("option"):
                name, value = self.option_decl()
                options[name] = value
            else:
                raise self.error(f"expected declaration, found {tok.text!r}")
        if pde is None:
            raise ParseError("missing pde declaration", 1, 1)
        return Problem(pde, tuple(schemes), hints, options)

    def pde_decl(self) -> Expr:
        self.expect("pde")
        self.expect("u_t")
        self.expect("=")
        self.allow_samples, self.allow_t_jets = False, False
        rhs = self.expr()
        self.allow_samples, self.allow_t_jets = True, True
        return rhs

    def scheme_decl(self) -> Scheme:
        start = self.expect("scheme")
        name = self.expect_kind("ident", "scheme name").text
        self.expect("{")
        e = self.expr()
        self.expect("=")
        zero = self.expect_kind("num", "0")
        if Fraction(zero.text) != 0:
            raise self.error("scheme must be written as expr = 0", zero)
        self.expect("}")
        return Scheme(name, e, start.line)

    def hint_decl(self):
        self.expect("hint")
        tok = self.expect_kind("ident", "infinitesimal name")
        if tok.text not in INFINITESIMALS:
            raise self.error(
                f"unknown infinitesimal {tok.text!r}; expected one of {', '.join(INFINITESIMALS)}", tok
            )
        self.expect("depends")
        self.expect("(")
        deps = []
        while not self.at(")"):
            v = self.expect_kind("ident", "variable name")
            if v.text not in DEFAULT_DEPENDENCIES[tok.text]:
                raise self.error(
                    f"{tok.text} may only depend on {', '.join(DEFAULT_DEPENDENCIES[tok.text])}", v
                )
            deps.append(v.text)
            if not self.at(")"):
                self.expect(",")
        self.expect(")")
        return tok.text, frozenset(deps)

    def option_decl(self):
        self.expect("option")
        tok = self.expect_kind("ident", "option name")
        if tok.text not in OPTIONS:
            raise self.error(f"unknown option {tok.text!r}", tok)
        self.expect("=")
        val = self.expect_kind("num", "integer")
        if not val.text.isdigit():
            raise self.error("option value must be an integer", val)
        return tok.text, int(val.text)


def parse_expression(text: str) -> Expr:
    """Parse a single expression (samples and any jet variable allowed)."""
    p = _Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r}")
    return e


def parse_problem(text: str) -> Problem:
    return _Parser(text).problem()


__all__ = [
    "DEFAULT_DEPENDENCIES",
    "INFINITESIMALS",
    "Problem",
    "Scheme",
    "parse_expression",
    "parse_problem",
    "tokenize",
]
