"""Sparse multivariate polynomials over the fixed variable universe (t, x, u, z, w).

Polynomials are stored as a map from exponent vectors to float coefficients.
Exponents are exact integers, coefficients are float64; terms whose
coefficient falls below ``COEF_EPS`` after arithmetic are dropped, so the
zero polynomial has an empty term map.  All values are immutable and all
operations are pure, which makes them safe to share between threads.
"""

from __future__ import annotations

import math
import re
from typing import Iterator, Mapping

VARIABLES: tuple[str, ...] = ("t", "x", "u", "z", "w")
VAR_INDEX: dict[str, int] = {name: i for i, name in enumerate(VARIABLES)}
NVARS = len(VARIABLES)

# Coefficients smaller than this in magnitude are treated as round-off noise.
COEF_EPS = 1e-14

Monomial = tuple[int, ...]

CONST_MONOMIAL: Monomial = (0,) * NVARS


class ClearTooSmall(ValueError):
    """The clearing exponent cannot absorb the denominator powers."""


class MissingAssignment(ValueError):
    """A variable with nonzero exponent has no value in the evaluation point."""


class PolynomialParseError(ValueError):
    """The polynomial text does not conform to the grammar."""


def monomial_degree(m: Monomial) -> int:
    return sum(m)


def grlex_key(m: Monomial):
    """Sort key for graded lexicographic order, variable order (t, x, u, z, w)."""
    return (sum(m), tuple(-e for e in m))


def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(ea + eb for ea, eb in zip(a, b))


def format_monomial(m: Monomial, variables: tuple[str, ...] = VARIABLES) -> str:
    parts = []
    for name, e in zip(variables, m):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts) if parts else "1"


def _format_coefficient(c: float) -> str:
    if c == int(c) and abs(c) < 1e15:
        return str(int(c))
    return repr(c)


class Polynomial:
    """Immutable sparse polynomial in the variables (t, x, u, z, w)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, float] | None = None):
        data: dict[Monomial, float] = {}
        if terms:
            for mono, coef in terms.items():
                if len(mono) != NVARS:
                    raise ValueError(f"exponent vector {mono} must have length {NVARS}")
                if any(e < 0 or e != int(e) for e in mono):
                    raise ValueError(f"exponents must be non-negative integers: {mono}")
                c = float(coef)
                if abs(c) >= COEF_EPS:
                    data[tuple(int(e) for e in mono)] = c
        object.__setattr__(self, "_terms", data)

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls()

    @classmethod
    def constant(cls, c: float) -> "Polynomial":
        return cls({CONST_MONOMIAL: c})

    @classmethod
    def variable(cls, name: str) -> "Polynomial":
        if name not in VAR_INDEX:
            raise ValueError(f"unknown variable {name!r}, universe is {VARIABLES}")
        mono = tuple(1 if i == VAR_INDEX[name] else 0 for i in range(NVARS))
        return cls({mono: 1.0})

    # -- inspection ----------------------------------------------------

    @property
    def terms(self) -> dict[Monomial, float]:
        return dict(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def items(self) -> Iterator[tuple[Monomial, float]]:
        """Terms in ascending graded lex order (deterministic)."""
        return iter(sorted(self._terms.items(), key=lambda kv: grlex_key(kv[0])))

    @property
    def total_degree(self) -> int:
        if not self._terms:
            return 0
        return max(sum(m) for m in self._terms)

    def degree_in(self, var: str) -> int:
        i = VAR_INDEX[var]
        if not self._terms:
            return 0
        return max(m[i] for m in self._terms)

    def variables_used(self) -> set[str]:
        used: set[str] = set()
        for m in self._terms:
            for i, e in enumerate(m):
                if e > 0:
                    used.add(VARIABLES[i])
        return used

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other) -> "Polynomial":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0.0) + c
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return _coerce(other) + (-self)

    def __mul__(self, other) -> "Polynomial":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict[Monomial, float] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                m = monomial_mul(ma, mb)
                out[m] = out.get(m, 0.0) + ca * cb
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if not isinstance(n, int) or n < 0:
            raise ValueError("powers must be non-negative integers")
        result = Polynomial.constant(1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- calculus and substitution --------------------------------------

    def differentiate(self, var: str) -> "Polynomial":
        """Formal partial derivative with respect to ``var``."""
        i = VAR_INDEX[var]
        out: dict[Monomial, float] = {}
        for m, c in self._terms.items():
            if m[i] == 0:
                continue
            dm = list(m)
            dm[i] -= 1
            out[tuple(dm)] = out.get(tuple(dm), 0.0) + c * m[i]
        return Polynomial(out)

    def substitute(self, var: str, replacement: "Polynomial") -> "Polynomial":
        """Replace every occurrence of ``var`` by an arbitrary polynomial."""
        i = VAR_INDEX[var]
        # cache powers of the replacement up to the degree actually used
        max_e = self.degree_in(var)
        powers = [Polynomial.constant(1.0)]
        for _ in range(max_e):
            powers.append(powers[-1] * replacement)
        out = Polynomial.zero()
        for m, c in self._terms.items():
            rest = list(m)
            e = rest[i]
            rest[i] = 0
            out = out + Polynomial({tuple(rest): c}) * powers[e]
        return out

    def substitute_ratio(self, var: str, num: str, den: str, clear: int) -> "Polynomial":
        """Return den**clear * self with ``var`` replaced by num/den.

        ``clear`` must be at least the degree of the polynomial in ``var`` so
        the result has no rational terms.
        """
        k = self.degree_in(var)
        if clear < k:
            raise ClearTooSmall(f"clear={clear} is below degree {k} in {var!r}")
        i = VAR_INDEX[var]
        i_num = VAR_INDEX[num]
        i_den = VAR_INDEX[den]
        out: dict[Monomial, float] = {}
        for m, c in self._terms.items():
            if m[i_num] or m[i_den]:
                if m[i]:
                    raise ValueError(f"{var!r} term also contains {num!r} or {den!r}")
            e = m[i]
            nm = list(m)
            nm[i] = 0
            nm[i_num] += e
            nm[i_den] += clear - e
            nm = tuple(nm)
            out[nm] = out.get(nm, 0.0) + c
        return Polynomial(out)

    def evaluate(self, point: Mapping[str, float]):
        """Evaluate at a point given as a name -> value map.

        Values may be scalars or numpy arrays (broadcast elementwise).
        """
        total = 0.0
        for m, c in self._terms.items():
            term = c
            for i, e in enumerate(m):
                if e == 0:
                    continue
                name = VARIABLES[i]
                if name not in point:
                    raise MissingAssignment(f"no value for variable {name!r}")
                term = term * point[name] ** e
            total = total + term
        return total

    def __call__(self, **point):
        return self.evaluate(point)

    # -- comparison and display ------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float)):
            other = Polynomial.constant(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __str__(self) -> str:
        return format_polynomial(self)

    def __repr__(self) -> str:
        return f"Polynomial({format_polynomial(self)!r})"


def _coerce(value) -> Polynomial:
    if isinstance(value, Polynomial):
        return value
    if isinstance(value, (int, float)):
        return Polynomial.constant(float(value))
    return NotImplemented


def format_polynomial(p: Polynomial) -> str:
    """Human-readable text form; highest-degree terms first."""
    if p.is_zero:
        return "0"
    pieces = []
    ordered = sorted(p.terms.items(), key=lambda kv: grlex_key(kv[0]), reverse=True)
    for k, (mono, coef) in enumerate(ordered):
        mono_txt = format_monomial(mono)
        mag = abs(coef)
        if mono_txt == "1":
            body = _format_coefficient(mag)
        elif mag == 1.0:
            body = mono_txt
        else:
            body = f"{_format_coefficient(mag)}*{mono_txt}"
        if k == 0:
            pieces.append(body if coef >= 0 else f"-{body}")
        else:
            pieces.append(f"+ {body}" if coef >= 0 else f"- {body}")
    return " ".join(pieces)


# -- parsing ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise PolynomialParseError(f"unexpected character at {text[pos:pos + 10]!r}")
        pos = m.end()
        for kind in ("number", "name", "op"):
            val = m.group(kind)
            if val is not None:
                tokens.append((kind, val))
                break
    return tokens


class _Parser:
    """Recursive descent for the grammar: +, -, *, ^ (integer powers), parentheses."""

    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expr(self) -> Polynomial:
        kind, val = self.peek()
        negate = False
        if kind == "op" and val in "+-":
            self.take()
            negate = val == "-"
        result = self.term()
        if negate:
            result = -result
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                result = result + rhs if val == "+" else result - rhs
            else:
                return result

    def term(self) -> Polynomial:
        result = self.factor()
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                result = result * self.factor()
            else:
                return result

    def factor(self) -> Polynomial:
        base = self.primary()
        kind, val = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val = self.take()
            if kind != "number" or not val.isdigit():
                raise PolynomialParseError(f"expected integer power, got {val!r}")
            return base ** int(val)
        return base

    def primary(self) -> Polynomial:
        kind, val = self.take()
        if kind == "number":
            return Polynomial.constant(float(val))
        if kind == "name":
            if val not in VAR_INDEX:
                raise PolynomialParseError(f"unknown variable {val!r}, universe is {VARIABLES}")
            return Polynomial.variable(val)
        if kind == "op" and val == "(":
            inner = self.expr()
            kind, val = self.take()
            if val != ")":
                raise PolynomialParseError("unbalanced parenthesis")
            return inner
        if kind == "op" and val == "-":
            return -self.factor()
        raise PolynomialParseError(f"unexpected token {val!r}")


def parse_polynomial(text: str) -> Polynomial:
    """Parse text like ``"(t - x^3)^2 * u"`` into a Polynomial."""
    tokens = _tokenize(text)
    if not tokens:
        raise PolynomialParseError("empty polynomial text")
    parser = _Parser(tokens)
    result = parser.expr()
    if parser.pos != len(tokens):
        raise PolynomialParseError(f"trailing input near {parser.peek()[1]!r}")
    return result


# Shorthand generators for the whole universe, e.g. T, X, U, Z, W.
T = Polynomial.variable("t")
X = Polynomial.variable("x")
U = Polynomial.variable("u")
Z = Polynomial.variable("z")
W = Polynomial.variable("w")
ONE = Polynomial.constant(1.0)
