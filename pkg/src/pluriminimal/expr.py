"""Entire holomorphic functions of several complex variables as immutable trees.

Expressions are built from complex constants, variables, sums, products,
non-negative integer powers and the entire functions exp, sin, cos. No
division exists, so every expression is holomorphic on all of C^m.

Text form::

    expr   := term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := base ('^' uint)?
    base   := 'z' uint | number | '(' expr ')' | func '(' expr ')' | '-' base
    func   := exp | sin | cos
    number := decimal | decimal 'i' | '(' decimal ('+'|'-') decimal 'i' ')'

Variables are 1-indexed in text and 0-indexed in the tree. Note that unary
minus binds tighter than '^', so ``-z1^2`` means ``(-z1)^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple, Union

import numpy as np

from .exact import (
    GaussRational,
    ONE,
    ZERO,
    Poly,
    poly_add,
    poly_const,
    poly_mul,
    poly_pow,
    poly_scale,
    poly_var,
)

FUNCTIONS = ("exp", "sin", "cos")


class ExprError(ValueError):
    """Invalid expression construction."""


class ParseError(ExprError):
    def __init__(self, message: str, pos: int, text: str = ""):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos
        self.text = text


class NumericDomainError(ArithmeticError):
    """Evaluation overflowed to a non-finite value."""


def _terminating(q: Fraction) -> bool:
    d = q.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    return d == 1


# -- nodes -------------------------------------------------------------------


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: GaussRational

    def __post_init__(self):
        v = GaussRational.coerce(self.value)
        if not (_terminating(v.re) and _terminating(v.im)):
            raise ExprError(f"constant {v} is not a terminating decimal")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class Var(Node):
    index: int


@dataclass(frozen=True)
class Add(Node):
    terms: Tuple[Node, ...]


@dataclass(frozen=True)
class Mul(Node):
    factors: Tuple[Node, ...]


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int

    def __post_init__(self):
        if self.exponent < 0:
            raise ExprError("negative exponent")


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class Func(Node):
    name: str
    arg: Node

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ExprError(f"unknown function {self.name!r}")


def _max_var(node: Node) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Const):
        return -1
    if isinstance(node, (Add, Mul)):
        children = node.terms if isinstance(node, Add) else node.factors
        return max((_max_var(c) for c in children), default=-1)
    if isinstance(node, (Pow,)):
        return _max_var(node.base)
    return _max_var(node.arg)


# -- constant folding ----------------------------------------------------------


def fold(node: Node) -> Node:
    """Basic constant folding into a canonical tree without Neg nodes."""
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Neg):
        return _negate(fold(node.arg))
    if isinstance(node, Add):
        terms = []
        c = ZERO
        for t in map(fold, node.terms):
            parts = t.terms if isinstance(t, Add) else (t,)
            for p in parts:
                if isinstance(p, Const):
                    c = c + p.value
                else:
                    terms.append(p)
        terms = _collect_terms(terms)
        if c:
            terms.append(Const(c))
        if not terms:
            return Const(ZERO)
        return terms[0] if len(terms) == 1 else Add(tuple(terms))
    if isinstance(node, Mul):
        factors = []
        c = ONE
        for f in map(fold, node.factors):
            parts = f.factors if isinstance(f, Mul) else (f,)
            for p in parts:
                if isinstance(p, Const):
                    c = c * p.value
                else:
                    factors.append(p)
        if not c:
            return Const(ZERO)
        factors = _collect_powers(factors)
        if c != ONE:
            factors.insert(0, Const(c))
        if not factors:
            return Const(ONE)
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))
    if isinstance(node, Pow):
        base = fold(node.base)
        k = node.exponent
        if k == 0:
            return Const(ONE)
        if k == 1:
            return base
        if isinstance(base, Const):
            return Const(base.value**k)
        if isinstance(base, Pow):
            return Pow(base.base, base.exponent * k)
        return Pow(base, k)
    if isinstance(node, Func):
        arg = fold(node.arg)
        if isinstance(arg, Const) and not arg.value:
            return Const(ZERO if node.name == "sin" else ONE)
        return Func(node.name, arg)
    raise TypeError(f"unknown node {node!r}")


def _collect_powers(factors):
    """Merge factors with equal bases, b^j * b^k -> b^(j+k), in first-seen order."""
    order, exps = [], {}
    for f in factors:
        base, k = (f.base, f.exponent) if isinstance(f, Pow) else (f, 1)
        if base not in exps:
            order.append(base)
            exps[base] = 0
        exps[base] += k
    return [b if exps[b] == 1 else Pow(b, exps[b]) for b in order]


def _split_coefficient(term: Node):
    if isinstance(term, Mul) and isinstance(term.factors[0], Const):
        rest = term.factors[1:]
        return term.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return ONE, term


def _collect_terms(terms):
    """Combine c1*t + c2*t -> (c1 + c2)*t for non-constant terms, in first-seen order."""
    order, coef = [], {}
    for t in terms:
        c, rest = _split_coefficient(t)
        if rest not in coef:
            order.append(rest)
            coef[rest] = ZERO
        coef[rest] = coef[rest] + c
    out = []
    for rest in order:
        c = coef[rest]
        if not c:
            continue
        if c == ONE:
            out.append(rest)
        else:
            tail = rest.factors if isinstance(rest, Mul) else (rest,)
            out.append(Mul((Const(c),) + tuple(tail)))
    return out


def _negate(node: Node) -> Node:
    if isinstance(node, Const):
        return Const(-node.value)
    if isinstance(node, Mul) and isinstance(node.factors[0], Const):
        c = -node.factors[0].value
        rest = node.factors[1:]
        if c == ONE:
            return rest[0] if len(rest) == 1 else Mul(rest)
        return Mul((Const(c),) + rest)
    if isinstance(node, Mul):
        return Mul((Const(-ONE),) + node.factors)
    return Mul((Const(-ONE), node))


# -- printing ----------------------------------------------------------------


def _decimal(q: Fraction) -> str:
    num, den = abs(q.numerator), q.denominator
    k = 0
    while 10**k % den:
        k += 1
    digits = str(num * (10**k // den)).rjust(k + 1, "0")
    if k == 0:
        return digits
    s = digits[:-k] + "." + digits[-k:]
    return s.rstrip("0").rstrip(".")


def _const_positive(v: GaussRational) -> str:
    """Text for a constant with non-negative sign in the printing order."""
    if v.im == 0:
        return _decimal(v.re)
    if v.re == 0:
        return _decimal(v.im) + "i"
    sign = "-" if v.im < 0 else "+"
    return f"({_decimal(v.re)}{sign}{_decimal(v.im)}i)"


def _print_base(node: Node) -> str:
    if isinstance(node, Var):
        return f"z{node.index + 1}"
    if isinstance(node, Const):
        v = node.value
        if v.is_negative():
            return f"(-{_const_positive(-v)})"
        return _const_positive(v)
    if isinstance(node, Func):
        return f"{node.name}({_print_expr(node.arg)})"
    return f"({_print_expr(node)})"


def _print_factor(node: Node) -> str:
    if isinstance(node, Pow):
        return f"{_print_base(node.base)}^{node.exponent}"
    return _print_base(node)


def _print_term(node: Node) -> str:
    """Print a term; a leading minus is allowed."""
    if isinstance(node, Const) and node.value.is_negative():
        return "-" + _const_positive(-node.value)
    if isinstance(node, Mul):
        first, rest = node.factors[0], node.factors[1:]
        if isinstance(first, Const):
            v = first.value
            if v == -ONE:
                head = "-" + _print_base(rest[0])
                rest = rest[1:]
            elif v.is_negative():
                head = "-" + _const_positive(-v)
            else:
                head = _const_positive(v)
        else:
            head = _print_factor(first)
        return "*".join([head] + [_print_factor(f) for f in rest])
    if isinstance(node, Neg):
        return "-" + _print_base(node.arg)
    if isinstance(node, Add):
        return f"({_print_expr(node)})"
    return _print_factor(node)


def _split_sign(node: Node) -> Tuple[bool, Node]:
    if isinstance(node, Neg):
        return True, node.arg
    if isinstance(node, Const) and node.value.is_negative():
        return True, Const(-node.value)
    if (
        isinstance(node, Mul)
        and isinstance(node.factors[0], Const)
        and node.factors[0].value.is_negative()
    ):
        return True, _negate(node)
    return False, node


def _print_expr(node: Node) -> str:
    if not isinstance(node, Add):
        return _print_term(node)
    out = [_print_term(node.terms[0])]
    for t in node.terms[1:]:
        neg, body = _split_sign(t)
        inner = _print_term(body)
        if neg and inner.startswith("-"):
            inner = f"({inner})"
        out.append((" - " if neg else " + ") + inner)
    return "".join(out)


# -- parsing -----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, arity: int):
        self.text = text
        self.pos = 0
        self.arity = arity

    def error(self, msg, pos=None):
        return ParseError(msg, self.pos if pos is None else pos, self.text)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def eat(self, ch: str):
        if self.peek() != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def parse(self) -> Node:
        node = self.expr()
        if self.peek():
            raise self.error(f"unexpected {self.peek()!r}")
        return node

    def expr(self) -> Node:
        terms = [self.term()]
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            t = self.term()
            terms.append(t if op == "+" else Neg(t))
        return terms[0] if len(terms) == 1 else Add(tuple(terms))

    def term(self) -> Node:
        factors = [self.factor()]
        while self.peek() == "*":
            self.pos += 1
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else Mul(tuple(factors))

    def factor(self) -> Node:
        base = self.base()
        if self.peek() == "^":
            self.pos += 1
            if self.peek() == "-":
                raise self.error("negative exponent")
            start = self.pos
            k = self.uint()
            if k is None:
                raise self.error("expected non-negative integer exponent", start)
            return Pow(base, k)
        return base

    def uint(self):
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        return int(self.text[start : self.pos]) if self.pos > start else None

    def decimal(self):
        self.skip()
        start = self.pos
        t = self.text
        while self.pos < len(t) and t[self.pos].isdigit():
            self.pos += 1
        if self.pos < len(t) and t[self.pos] == ".":
            self.pos += 1
            while self.pos < len(t) and t[self.pos].isdigit():
                self.pos += 1
        lit = t[start : self.pos]
        if not lit or lit == "." or not any(ch.isdigit() for ch in lit):
            self.pos = start
            return None
        return Fraction(lit)

    def number(self):
        """Real or imaginary literal, or None if no digits here."""
        q = self.decimal()
        if q is None:
            return None
        if self.pos < len(self.text) and self.text[self.pos] == "i":
            self.pos += 1
            return GaussRational(0, q)
        return GaussRational(q)

    def complex_literal(self):
        """Try '(' decimal ('+'|'-') decimal 'i' ')'; restore position on failure."""
        start = self.pos
        self.pos += 1
        a = self.decimal()
        if a is not None and self.peek() in ("+", "-"):
            sign = 1 if self.text[self.pos] == "+" else -1
            self.pos += 1
            b = self.decimal()
            if b is not None and self.text[self.pos : self.pos + 1] == "i":
                self.pos += 1
                if self.peek() == ")":
                    self.pos += 1
                    return GaussRational(a, sign * b)
        self.pos = start
        return None

    def base(self) -> Node:
        ch = self.peek()
        start = self.pos
        if ch == "-":
            self.pos += 1
            return Neg(self.base())
        if ch == "(":
            lit = self.complex_literal()
            if lit is not None:
                return Const(lit)
            self.pos += 1
            node = self.expr()
            self.eat(")")
            return node
        if ch == "z":
            self.pos += 1
            if not self.text[self.pos : self.pos + 1].isdigit():
                raise self.error("expected variable index")
            j = self.uint()
            if not 1 <= j <= self.arity:
                raise self.error(
                    f"variable index z{j} out of range for arity {self.arity}", start
                )
            return Var(j - 1)
        for name in FUNCTIONS:
            if self.text.startswith(name, self.pos):
                self.pos += len(name)
                self.eat("(")
                arg = self.expr()
                self.eat(")")
                return Func(name, arg)
        if ch.isdigit() or ch == ".":
            v = self.number()
            if v is not None:
                return Const(v)
        if not ch:
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {ch!r}")


# -- public wrapper --------------------------------------------------------------

Number = Union[int, float, complex, Fraction, GaussRational]


def _lift(x, arity: int) -> "HoloExpr":
    if isinstance(x, HoloExpr):
        if x.arity != arity:
            raise ExprError(f"arity mismatch: {x.arity} vs {arity}")
        return x
    return HoloExpr(Const(GaussRational.coerce(x)), arity)


@dataclass(frozen=True)
class HoloExpr:
    """An entire function of ``arity`` complex variables."""

    root: Node
    arity: int

    def __post_init__(self):
        if self.arity < 1:
            raise ExprError("arity must be >= 1")
        if _max_var(self.root) >= self.arity:
            raise ExprError(
                f"variable index out of range for arity {self.arity}"
            )

    @classmethod
    def const(cls, c: Number, arity: int) -> "HoloExpr":
        return cls(Const(GaussRational.coerce(c)), arity)

    @classmethod
    def var(cls, j: int, arity: int) -> "HoloExpr":
        """Variable z_{j+1} (0-based ``j``)."""
        return cls(Var(j), arity)

    def __str__(self):
        return _print_expr(self.root)

    def __repr__(self):
        return f"HoloExpr({str(self)!r}, arity={self.arity})"

    def _wrap(self, node: Node) -> "HoloExpr":
        return HoloExpr(fold(node), self.arity)

    def __add__(self, other):
        return self._wrap(Add((self.root, _lift(other, self.arity).root)))

    def __radd__(self, other):
        return self._wrap(Add((_lift(other, self.arity).root, self.root)))

    def __sub__(self, other):
        return self._wrap(Add((self.root, Neg(_lift(other, self.arity).root))))

    def __rsub__(self, other):
        return self._wrap(Add((_lift(other, self.arity).root, Neg(self.root))))

    def __mul__(self, other):
        return self._wrap(Mul((self.root, _lift(other, self.arity).root)))

    def __rmul__(self, other):
        return self._wrap(Mul((_lift(other, self.arity).root, self.root)))

    def __neg__(self):
        return self._wrap(Neg(self.root))

    def __pow__(self, k: int):
        return self._wrap(Pow(self.root, int(k)))

    def apply(self, name: str) -> "HoloExpr":
        return self._wrap(Func(name, self.root))

    def is_zero(self) -> bool:
        r = fold(self.root)
        return isinstance(r, Const) and not r.value

    def is_polynomial(self) -> bool:
        return _is_poly(self.root)

    def diff(self, j: int) -> "HoloExpr":
        return differentiate(self, j)

    def __call__(self, z) -> np.ndarray:
        return evaluate(self, z)


def parse(text: str, arity: int) -> HoloExpr:
    """Parse expression text into a folded :class:`HoloExpr` of the given arity."""
    if arity < 1:
        raise ExprError("arity must be >= 1")
    try:
        node = _Parser(text, arity).parse()
    except ExprError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), 0, text) from None
    return HoloExpr(fold(node), arity)


# -- symbolic operations ---------------------------------------------------------


def _d(node: Node, j: int) -> Node:
    if isinstance(node, Const):
        return Const(ZERO)
    if isinstance(node, Var):
        return Const(ONE if node.index == j else ZERO)
    if isinstance(node, Add):
        return Add(tuple(_d(t, j) for t in node.terms))
    if isinstance(node, Mul):
        fs = node.factors
        return Add(
            tuple(
                Mul(fs[:i] + (_d(fs[i], j),) + fs[i + 1 :]) for i in range(len(fs))
            )
        )
    if isinstance(node, Pow):
        k = node.exponent
        return Mul((Const(GaussRational(k)), Pow(node.base, k - 1), _d(node.base, j)))
    if isinstance(node, Neg):
        return Neg(_d(node.arg, j))
    du = _d(node.arg, j)
    if node.name == "exp":
        return Mul((node, du))
    if node.name == "sin":
        return Mul((Func("cos", node.arg), du))
    return Neg(Mul((Func("sin", node.arg), du)))


def differentiate(e: HoloExpr, j: int) -> HoloExpr:
    """Symbolic partial derivative with respect to z_{j+1} (0-based ``j``)."""
    if not 0 <= j < e.arity:
        raise ExprError(f"variable index {j} out of range for arity {e.arity}")
    return HoloExpr(fold(_d(e.root, j)), e.arity)


def _subst(node: Node, args: Sequence[Node]) -> Node:
    if isinstance(node, Var):
        return args[node.index]
    if isinstance(node, Const):
        return node
    if isinstance(node, Add):
        return Add(tuple(_subst(t, args) for t in node.terms))
    if isinstance(node, Mul):
        return Mul(tuple(_subst(t, args) for t in node.factors))
    if isinstance(node, Pow):
        return Pow(_subst(node.base, args), node.exponent)
    if isinstance(node, Neg):
        return Neg(_subst(node.arg, args))
    return Func(node.name, _subst(node.arg, args))


def compose(e: HoloExpr, args: Sequence[HoloExpr]) -> HoloExpr:
    """Substitute ``args[j]`` for z_{j+1}; the result has the arity of the args."""
    if len(args) != e.arity:
        raise ExprError(f"need {e.arity} arguments, got {len(args)}")
    arities = {a.arity for a in args}
    if len(arities) != 1:
        raise ExprError("composition arguments must share one arity")
    return HoloExpr(fold(_subst(e.root, [a.root for a in args])), arities.pop())


def _is_poly(node: Node) -> bool:
    if isinstance(node, Func):
        return False
    if isinstance(node, (Const, Var)):
        return True
    if isinstance(node, Add):
        return all(map(_is_poly, node.terms))
    if isinstance(node, Mul):
        return all(map(_is_poly, node.factors))
    if isinstance(node, Pow):
        return _is_poly(node.base)
    return _is_poly(node.arg)


def _poly(node: Node, m: int) -> Poly:
    if isinstance(node, Const):
        return poly_const(node.value, m)
    if isinstance(node, Var):
        return poly_var(node.index, m)
    if isinstance(node, Add):
        out: Poly = {}
        for t in node.terms:
            out = poly_add(out, _poly(t, m))
        return out
    if isinstance(node, Mul):
        out = poly_const(1, m)
        for f in node.factors:
            out = poly_mul(out, _poly(f, m))
        return out
    if isinstance(node, Pow):
        return poly_pow(_poly(node.base, m), node.exponent, m)
    if isinstance(node, Neg):
        return poly_scale(_poly(node.arg, m), -1)
    raise ExprError(f"{node.name} is not polynomial")


def to_polynomial(e: HoloExpr) -> Poly:
    """Exact expanded coefficients; raises ExprError for transcendental terms."""
    if not e.is_polynomial():
        raise ExprError("expression is not a polynomial")
    return _poly(e.root, e.arity)


def from_polynomial(p: Poly, arity: int) -> HoloExpr:
    terms = []
    for k in sorted(p, key=lambda k: (sum(k), tuple(-x for x in k))):
        factors = [Const(p[k])]
        for j, a in enumerate(k):
            if a:
                factors.append(Pow(Var(j), a))
        terms.append(Mul(tuple(factors)))
    return HoloExpr(fold(Add(tuple(terms))) if terms else Const(ZERO), arity)


# -- numeric evaluation ----------------------------------------------------------

_NUMPY_FUNCS = {"exp": np.exp, "sin": np.sin, "cos": np.cos}


def _as_points(z, arity: int) -> Tuple[np.ndarray, bool]:
    Z = np.asarray(z, dtype=complex)
    single = Z.ndim == 1
    Z = np.atleast_2d(Z)
    if Z.shape[-1] != arity:
        raise ExprError(f"points must have {arity} coordinates, got {Z.shape[-1]}")
    return Z, single


def _eval(node: Node, Z: np.ndarray) -> np.ndarray:
    if isinstance(node, Const):
        return np.full(Z.shape[0], complex(node.value))
    if isinstance(node, Var):
        return Z[:, node.index]
    if isinstance(node, Add):
        out = _eval(node.terms[0], Z)
        for t in node.terms[1:]:
            out = out + _eval(t, Z)
        return out
    if isinstance(node, Mul):
        out = _eval(node.factors[0], Z)
        for f in node.factors[1:]:
            out = out * _eval(f, Z)
        return out
    if isinstance(node, Pow):
        b = _eval(node.base, Z)
        out = np.ones_like(b)
        for _ in range(node.exponent):
            out = out * b
        return out
    if isinstance(node, Neg):
        return -_eval(node.arg, Z)
    return _NUMPY_FUNCS[node.name](_eval(node.arg, Z))


def evaluate(e: HoloExpr, z) -> np.ndarray:
    """Values at one point (shape (m,)) or a batch of points (shape (N, m))."""
    Z, single = _as_points(z, e.arity)
    with np.errstate(all="ignore"):
        v = _eval(e.root, Z)
    if not np.all(np.isfinite(v)):
        raise NumericDomainError(f"non-finite value evaluating {e}")
    return v[0] if single else v


def evaluate_mp(e: HoloExpr, z, dps: int = 50):
    """High-precision value at one point using mpmath (returns an mpc)."""
    import mpmath

    with mpmath.workdps(dps):
        zz = [mpmath.mpc(complex(c)) for c in np.asarray(z, complex)]

        def const(v: GaussRational):
            re = mpmath.mpf(v.re.numerator) / v.re.denominator
            im = mpmath.mpf(v.im.numerator) / v.im.denominator
            return mpmath.mpc(re, im)

        def walk(node: Node):
            if isinstance(node, Const):
                return const(node.value)
            if isinstance(node, Var):
                return zz[node.index]
            if isinstance(node, Add):
                return mpmath.fsum(walk(t) for t in node.terms)
            if isinstance(node, Mul):
                out = mpmath.mpc(1)
                for f in node.factors:
                    out *= walk(f)
                return out
            if isinstance(node, Pow):
                return walk(node.base) ** node.exponent
            if isinstance(node, Neg):
                return -walk(node.arg)
            return getattr(mpmath, node.name)(walk(node.arg))

        return +walk(e.root)
