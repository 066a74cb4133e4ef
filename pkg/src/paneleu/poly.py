"""Exact sparse multivariate polynomial arithmetic over named indeterminates.

A polynomial is a mapping from monomials to rational coefficients
(:class:`fractions.Fraction`); zero coefficients are never stored and the
empty monomial denotes the constant 1.  Every value is immutable after
construction, so polynomials can be shared freely across threads.

Indeterminates carry their meaning in the type itself: intercepts ``t0i``,
edge coefficients ``tji``, error symbols ``ei``, error variances ``psii``,
augmented intercepts ``t0ip`` (intercept plus error, kept atomic until the
error-reduction step) and two auxiliary kinds used while rewriting
structural equations.  A fixed total order over indeterminates induces a
graded lexicographic order on monomials, which makes every serialization
deterministic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .errors import SchemaError, SelfReferenceError

Rational = Fraction | int


class Kind(IntEnum):
    """Indeterminate kinds, in canonical rank order."""

    INTERCEPT = 0
    AUG_INTERCEPT = 1
    EDGE = 2
    POLY_COEF = 3
    ERROR = 4
    VARIANCE = 5
    VARIABLE = 6


@dataclass(frozen=True, slots=True)
class Indeterminate:
    """A named symbol, uniquely identified by (kind, vertex, parent, tag).

    ``parent`` is set exactly for edge coefficients; ``tag`` (an exponent
    vector over lower-numbered vertices) exactly for polynomial-equation
    coefficients.
    """

    kind: Kind
    vertex: int
    parent: int | None = None
    tag: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if (self.parent is not None) != (self.kind is Kind.EDGE):
            raise ValueError("parent is present iff kind is EDGE")
        if (self.tag is not None) != (self.kind is Kind.POLY_COEF):
            raise ValueError("tag is present iff kind is POLY_COEF")

    def sort_key(self) -> tuple:
        return (int(self.kind), self.vertex, self.parent or 0, self.tag or ())

    def __lt__(self, other: "Indeterminate") -> bool:
        return self.sort_key() < other.sort_key()

    @property
    def name(self) -> str:
        v = self.vertex
        if self.kind is Kind.INTERCEPT:
            return f"t0{v}" if v <= 9 else f"t0_{v}"
        if self.kind is Kind.AUG_INTERCEPT:
            return (f"t0{v}" if v <= 9 else f"t0_{v}") + "p"
        if self.kind is Kind.EDGE:
            p = self.parent
            return f"t{p}{v}" if p <= 9 and v <= 9 else f"t{p}_{v}"
        if self.kind is Kind.POLY_COEF:
            tag = self.tag or ()
            if v <= 9 and all(t <= 9 for t in tag):
                return f"t{v}a" + "".join(str(t) for t in tag)
            return f"t{v}a[" + ",".join(str(t) for t in tag) + "]"
        if self.kind is Kind.ERROR:
            return f"e{v}"
        if self.kind is Kind.VARIANCE:
            return f"psi{v}"
        return f"y{v}"

    def __str__(self) -> str:
        return self.name


def intercept(vertex: int) -> Indeterminate:
    return Indeterminate(Kind.INTERCEPT, vertex)


def aug_intercept(vertex: int) -> Indeterminate:
    return Indeterminate(Kind.AUG_INTERCEPT, vertex)


def edge_coef(parent: int, child: int) -> Indeterminate:
    return Indeterminate(Kind.EDGE, child, parent=parent)


def poly_coef(vertex: int, exponents: Iterable[int]) -> Indeterminate:
    return Indeterminate(Kind.POLY_COEF, vertex, tag=tuple(exponents))


def error(vertex: int) -> Indeterminate:
    return Indeterminate(Kind.ERROR, vertex)


def variance(vertex: int) -> Indeterminate:
    return Indeterminate(Kind.VARIANCE, vertex)


def variable(vertex: int) -> Indeterminate:
    return Indeterminate(Kind.VARIABLE, vertex)


_SYMBOL_PATTERNS: tuple[tuple[re.Pattern[str], Kind], ...] = (
    (re.compile(r"psi(\d+)$"), Kind.VARIANCE),
    (re.compile(r"e(\d+)$"), Kind.ERROR),
    (re.compile(r"y(\d+)$"), Kind.VARIABLE),
    (re.compile(r"t0(\d)p$"), Kind.AUG_INTERCEPT),
    (re.compile(r"t0_(\d+)p$"), Kind.AUG_INTERCEPT),
    (re.compile(r"t0(\d)$"), Kind.INTERCEPT),
    (re.compile(r"t0_(\d+)$"), Kind.INTERCEPT),
)


def parse_symbol(name: str) -> Indeterminate:
    """Parse a canonical symbol name back into an indeterminate."""
    for pattern, kind in _SYMBOL_PATTERNS:
        m = pattern.fullmatch(name)
        if m:
            return Indeterminate(kind, int(m.group(1)))
    m = re.fullmatch(r"t(\d)a(\d+)$", name)
    if m:
        return poly_coef(int(m.group(1)), (int(c) for c in m.group(2)))
    m = re.fullmatch(r"t(\d+)a\[([0-9,]*)\]$", name)
    if m:
        parts = [p for p in m.group(2).split(",") if p]
        return poly_coef(int(m.group(1)), (int(p) for p in parts))
    m = re.fullmatch(r"t([1-9])(\d)$", name)
    if m:
        return edge_coef(int(m.group(1)), int(m.group(2)))
    m = re.fullmatch(r"t([1-9]\d*)_(\d+)$", name)
    if m:
        return edge_coef(int(m.group(1)), int(m.group(2)))
    raise SchemaError(f"unknown symbol: {name!r}")


@dataclass(frozen=True, slots=True)
class Monomial:
    """A product of indeterminate powers; the empty product is 1.

    ``factors`` is sorted by indeterminate order and never stores zero
    exponents, so structural equality is semantic equality.
    """

    factors: tuple[tuple[Indeterminate, int], ...] = ()

    @staticmethod
    def of(powers: Mapping[Indeterminate, int] | Iterable[tuple[Indeterminate, int]]) -> "Monomial":
        items = powers.items() if isinstance(powers, Mapping) else powers
        merged: dict[Indeterminate, int] = {}
        for ind, exp in items:
            if exp < 0:
                raise ValueError("negative exponent")
            if exp:
                merged[ind] = merged.get(ind, 0) + exp
        return Monomial(tuple(sorted(merged.items(), key=lambda kv: kv[0].sort_key())))

    @staticmethod
    def symbol(ind: Indeterminate, exp: int = 1) -> "Monomial":
        return Monomial.of([(ind, exp)])

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.factors)

    @property
    def is_one(self) -> bool:
        return not self.factors

    def exponent(self, ind: Indeterminate) -> int:
        for sym, exp in self.factors:
            if sym == ind:
                return exp
        return 0

    def indeterminates(self) -> tuple[Indeterminate, ...]:
        return tuple(sym for sym, _ in self.factors)

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial.of(list(self.factors) + list(other.factors))

    def __pow__(self, n: int) -> "Monomial":
        if n < 0:
            raise ValueError("negative exponent")
        return Monomial(tuple((sym, exp * n) for sym, exp in self.factors)) if n else Monomial()

    def grade_key(self) -> tuple:
        """Sort key whose ascending order is descending graded-lex order."""
        return (-self.degree, tuple((sym.sort_key(), -exp) for sym, exp in self.factors))

    def __lt__(self, other: "Monomial") -> bool:
        # Graded lexicographic: total degree first, then the earlier
        # indeterminate with the higher exponent wins.
        return self.grade_key() > other.grade_key()

    def text(self, sep: str = " * ") -> str:
        if not self.factors:
            return "1"
        parts = []
        for sym, exp in self.factors:
            parts.append(sym.name if exp == 1 else f"{sym.name}^{exp}")
        return sep.join(parts)

    def __str__(self) -> str:
        return self.text()


ONE = Monomial()


class Polynomial:
    """Immutable sparse polynomial with exact rational coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, Rational] | None = None):
        clean: dict[Monomial, Fraction] = {}
        if terms:
            for mono, coeff in terms.items():
                c = Fraction(coeff)
                if c:
                    clean[mono] = c
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name: str, value) -> None:
        raise AttributeError("Polynomial is immutable")

    @staticmethod
    def zero() -> "Polynomial":
        return Polynomial()

    @staticmethod
    def const(value: Rational) -> "Polynomial":
        return Polynomial({ONE: Fraction(value)})

    @staticmethod
    def symbol(ind: Indeterminate) -> "Polynomial":
        return Polynomial({Monomial.symbol(ind): Fraction(1)})

    @staticmethod
    def term(mono: Monomial, coeff: Rational = 1) -> "Polynomial":
        return Polynomial({mono: Fraction(coeff)})

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def coefficient(self, mono: Monomial) -> Fraction:
        return self._terms.get(mono, Fraction(0))

    def terms(self) -> Iterator[tuple[Monomial, Fraction]]:
        """Iterate terms in descending graded-lex order."""
        for mono in sorted(self._terms, key=Monomial.grade_key):
            yield mono, self._terms[mono]

    def items(self) -> Iterator[tuple[Monomial, Fraction]]:
        """Iterate terms in arbitrary order (no sorting cost)."""
        return iter(self._terms.items())

    def monomials(self) -> tuple[Monomial, ...]:
        return tuple(sorted(self._terms, key=Monomial.grade_key))

    def indeterminates(self) -> tuple[Indeterminate, ...]:
        seen = {sym for mono in self._terms for sym in mono.indeterminates()}
        return tuple(sorted(seen, key=Indeterminate.sort_key))

    def contains(self, ind: Indeterminate) -> bool:
        return any(mono.exponent(ind) for mono in self._terms)

    def contains_kind(self, kind: Kind) -> bool:
        return any(sym.kind is kind for mono in self._terms for sym in mono.indeterminates())

    def total_degree(self) -> int:
        return max((mono.degree for mono in self._terms), default=0)

    def max_exponent(self, ind: Indeterminate) -> int:
        return max((mono.exponent(ind) for mono in self._terms), default=0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    __hash__ = None  # mutable-looking container semantics; not hashable

    def __add__(self, other: "Polynomial | Rational") -> "Polynomial":
        other = _coerce(other)
        out = dict(self._terms)
        for mono, coeff in other._terms.items():
            out[mono] = out.get(mono, Fraction(0)) + coeff
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({mono: -coeff for mono, coeff in self._terms.items()})

    def __sub__(self, other: "Polynomial | Rational") -> "Polynomial":
        return self + (-_coerce(other))

    def __rsub__(self, other: "Polynomial | Rational") -> "Polynomial":
        return _coerce(other) + (-self)

    def __mul__(self, other: "Polynomial | Rational") -> "Polynomial":
        other = _coerce(other)
        if not self._terms or not other._terms:
            return Polynomial()
        out: dict[Monomial, Fraction] = {}
        for mono_a, coeff_a in self._terms.items():
            for mono_b, coeff_b in other._terms.items():
                mono = mono_a * mono_b
                out[mono] = out.get(mono, Fraction(0)) + coeff_a * coeff_b
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if n < 0:
            raise ValueError("negative power")
        result = Polynomial.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def substitute(self, target: Indeterminate, replacement: "Polynomial") -> "Polynomial":
        """Replace every occurrence of ``target**k`` by ``replacement**k``."""
        if replacement.contains(target):
            raise SelfReferenceError(f"replacement for {target.name} contains {target.name}")
        if not self.contains(target):
            return self
        powers: dict[int, Polynomial] = {1: replacement}
        out: dict[Monomial, Fraction] = {}
        for mono, coeff in self._terms.items():
            k = mono.exponent(target)
            if not k:
                out[mono] = out.get(mono, Fraction(0)) + coeff
                continue
            rest = Monomial(tuple((s, e) for s, e in mono.factors if s != target))
            if k not in powers:
                powers[k] = replacement**k
            for rep_mono, rep_coeff in powers[k]._terms.items():
                combined = rest * rep_mono
                out[combined] = out.get(combined, Fraction(0)) + coeff * rep_coeff
        return Polynomial(out)

    def evaluate(self, assignment: Mapping[Indeterminate, Rational]) -> Fraction:
        total = Fraction(0)
        for mono, coeff in self._terms.items():
            value = coeff
            for sym, exp in mono.factors:
                if sym not in assignment:
                    raise KeyError(f"no value for {sym.name}")
                value *= Fraction(assignment[sym]) ** exp
            total += value
        return total

    def evaluate_partial(self, assignment: Mapping[Indeterminate, Rational]) -> "Polynomial":
        out: dict[Monomial, Fraction] = {}
        for mono, coeff in self._terms.items():
            value = coeff
            kept: list[tuple[Indeterminate, int]] = []
            for sym, exp in mono.factors:
                if sym in assignment:
                    value *= Fraction(assignment[sym]) ** exp
                else:
                    kept.append((sym, exp))
            rest = Monomial(tuple(kept))
            out[rest] = out.get(rest, Fraction(0)) + value
        return Polynomial(out)

    def text(self) -> str:
        """Canonical text form, terms in descending graded-lex order."""
        if not self._terms:
            return "0"
        pieces: list[str] = []
        for i, (mono, coeff) in enumerate(self.terms()):
            mag = abs(coeff)
            if mono.is_one:
                body = str(mag)
            elif mag == 1:
                body = mono.text()
            else:
                body = f"{mag} * {mono.text()}"
            if i == 0:
                pieces.append(body if coeff > 0 else f"-{body}")
            else:
                pieces.append(f"+ {body}" if coeff > 0 else f"- {body}")
        return " ".join(pieces)

    def __str__(self) -> str:
        return self.text()

    def __repr__(self) -> str:
        return f"Polynomial({self.text()})"

    @staticmethod
    def parse(source: str) -> "Polynomial":
        return _parse_polynomial(source)


def _coerce(value: "Polynomial | Rational") -> Polynomial:
    if isinstance(value, Polynomial):
        return value
    return Polynomial.const(value)


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+|\.\d+)?)|(?P<name>[A-Za-z][A-Za-z0-9_\[\],]*)|(?P<op>[-+*^()]))"
)


def _tokenize(source: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if not m:
            raise SchemaError(f"cannot tokenize polynomial at: {source[pos:pos + 20]!r}")
        tokens.append(m.group(m.lastgroup))
        pos = m.end()
    return tokens


def _parse_rational(token: str) -> Fraction:
    return Fraction(token)


def _parse_polynomial(source: str) -> Polynomial:
    """Parse the canonical text grammar (terms joined by + / -)."""
    tokens = _tokenize(source)
    if not tokens:
        raise SchemaError("empty polynomial text")
    terms: dict[Monomial, Fraction] = {}
    i = 0
    sign = 1
    while i < len(tokens):
        tok = tokens[i]
        if tok == "+":
            sign = 1
            i += 1
            continue
        if tok == "-":
            sign = -sign
            i += 1
            continue
        coeff = Fraction(sign)
        powers: list[tuple[Indeterminate, int]] = []
        expect_factor = True
        while i < len(tokens):
            tok = tokens[i]
            if tok in "+-" and not expect_factor:
                break
            if tok == "*":
                i += 1
                expect_factor = True
                continue
            if re.fullmatch(r"\d+(?:/\d+|\.\d+)?", tok):
                coeff *= _parse_rational(tok)
                i += 1
                expect_factor = False
                continue
            sym = parse_symbol(tok)
            exp = 1
            i += 1
            if i + 1 < len(tokens) and tokens[i] == "^":
                exp = int(tokens[i + 1])
                i += 2
            elif i < len(tokens) and tokens[i] == "^":
                raise SchemaError("dangling exponent")
            powers.append((sym, exp))
            expect_factor = False
        mono = Monomial.of(powers)
        terms[mono] = terms.get(mono, Fraction(0)) + coeff
        sign = 1
    return Polynomial(terms)
