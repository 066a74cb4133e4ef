"""Conditional-expected-utility compilation.

The utility factorization is first distributed into vertex-exponent
monomials y^a with coefficients k_J * prod(rho_{j,a_j}); each y^a is then
replaced by the product of powered path expansions, and finally error
symbols reduce to variance symbols under a configurable moment rule.  The
result is kept in two layers: a symbolic master (exponent vector, theta/psi
monomial, integer count) whose weight/coefficient symbols stay unevaluated,
and per-policy numeric polynomials obtained by substituting the agreed
weight and coefficient values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from . import poly
from .errors import NotLinearError, SchemaError
from .model import SemModel, UtilitySpec
from .paths import RootedPath, enumerate_rooted_paths, expand_variable, expand_variable_general
from .poly import Kind, Monomial, Polynomial

ERROR_POLICIES = ("truncate", "gaussian")


def error_moment(policy: str, k: int) -> tuple[int, int] | None:
    """E(e^k | psi) as (integer factor, psi power), or None when it vanishes.

    ``truncate`` zeroes every power above two; ``gaussian`` applies the
    normal moment identity E(e^{2j}) = (2j-1)!! psi^j.
    """
    if k == 0:
        return (1, 0)
    if k == 1:
        return None
    if k == 2:
        return (1, 1)
    if policy == "truncate":
        return None
    if policy == "gaussian":
        if k % 2:
            return None
        half = k // 2
        return (math.factorial(k) // (math.factorial(half) * 2**half), half)
    raise SchemaError(f"unknown error-moment policy {policy!r}")


def reduce_errors(p: Polynomial, policy: str = "truncate") -> Polynomial:
    """Expand augmented intercepts and take expectations over the errors.

    Errors are mutually independent with mean zero, so a monomial's error
    part factorizes and each power maps through :func:`error_moment`.  The
    result contains only intercept/edge/coefficient and variance symbols.
    """
    for symbol in p.indeterminates():
        if symbol.kind is Kind.AUG_INTERCEPT:
            base = Polynomial.symbol(poly.intercept(symbol.vertex)) + Polynomial.symbol(
                poly.error(symbol.vertex)
            )
            p = p.substitute(symbol, base)
    out: dict[Monomial, Fraction] = {}
    for mono, coeff in p.items():
        kept: list[tuple[poly.Indeterminate, int]] = []
        factor = Fraction(1)
        dead = False
        for sym, exp in mono.factors:
            if sym.kind is Kind.ERROR:
                reduced = error_moment(policy, exp)
                if reduced is None:
                    dead = True
                    break
                weight, psi_power = reduced
                factor *= weight
                if psi_power:
                    kept.append((poly.variance(sym.vertex), psi_power))
            else:
                kept.append((sym, exp))
        if dead:
            continue
        reduced_mono = Monomial.of(kept)
        out[reduced_mono] = out.get(reduced_mono, Fraction(0)) + coeff * factor
    return Polynomial(out)


@dataclass(frozen=True)
class UtilityMonomialForm:
    """The utility distributed into vertex-exponent monomials y^a.

    Each exponent vector ``a`` (one slot per vertex) carries the implied
    coefficient k_J * prod(rho_{j,a_j}) with J the support of ``a``.
    """

    spec: UtilitySpec
    vertices: tuple[int, ...]
    exponents: tuple[tuple[int, ...], ...]

    def support(self, a: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(v for v, e in zip(self.vertices, a) if e)

    def coefficient_value(self, a: tuple[int, ...], policy: str) -> Fraction:
        support = self.support(a)
        value = self.spec.weights[support][policy]
        for v, e in zip(self.vertices, a):
            if e:
                value *= self.spec.coefficients[(v, e)][policy]
        return value

    def coefficient_symbols(self, a: tuple[int, ...]) -> tuple[str, ...]:
        support = self.support(a)
        labels = [self.spec.weight_label(support)]
        labels += [self.spec.coefficient_label(v, e) for v, e in zip(self.vertices, a) if e]
        return tuple(labels)


def expand_utility(spec: UtilitySpec, vertices: tuple[int, ...]) -> UtilityMonomialForm:
    """Distribute the agreed factorization into exponent vectors over vertices."""
    index = {v: i for i, v in enumerate(vertices)}
    exponents: list[tuple[int, ...]] = []
    for ids in spec.weights:
        for v in ids:
            if v not in spec.degrees:
                raise SchemaError(f"utility {spec.name}: no degree declared for vertex {v}")
        ranges = [range(1, spec.degrees[v] + 1) for v in ids]
        for choice in itertools.product(*ranges):
            a = [0] * len(vertices)
            for v, e in zip(ids, choice):
                a[index[v]] = e
            exponents.append(tuple(a))
    exponents.sort(key=lambda a: (len([e for e in a if e]), tuple(v for v, e in zip(vertices, a) if e), a))
    return UtilityMonomialForm(spec=spec, vertices=vertices, exponents=tuple(exponents))


def raise_expansion(model: SemModel, a: tuple[int, ...]) -> Polynomial:
    """The product over vertices of the powered path expansions, prod Y_i^{a_i}."""
    if len(a) != len(model.dag.vertices):
        raise ValueError("exponent vector length must match the vertex count")
    out = Polynomial.const(1)
    for v, exp in zip(model.dag.vertices, a):
        if exp:
            out = out * expand_variable(model, v) ** exp
    return out


@dataclass(frozen=True)
class PathTuple:
    """An unordered tuple of rooted paths with its permutation count."""

    paths: tuple[RootedPath, ...]
    permutations: int

    def monomial(self) -> Monomial:
        mono = Monomial()
        for path in self.paths:
            mono = mono * path.monomial()
        return mono


def _multiset_permutations(counts: list[int]) -> int:
    total = math.factorial(sum(counts))
    for c in counts:
        total //= math.factorial(c)
    return total


def tuple_expansion(model: SemModel, a: tuple[int, ...]) -> tuple[PathTuple, ...]:
    """Enumerate the unordered path tuples behind ``raise_expansion``.

    For each vertex with a_i > 0, choose an unordered multiset of a_i rooted
    paths ending there; the permutation count is the product over vertices
    of the number of distinct orderings of each multiset.  Summing
    ``permutations * monomial`` over the result equals ``raise_expansion``.
    """
    per_vertex: list[list[tuple[tuple[RootedPath, ...], int]]] = []
    for v, exp in zip(model.dag.vertices, a):
        if not exp:
            continue
        paths = enumerate_rooted_paths(model.dag, v)
        options: list[tuple[tuple[RootedPath, ...], int]] = []
        for combo in itertools.combinations_with_replacement(paths, exp):
            counts = [combo.count(p) for p in dict.fromkeys(combo)]
            options.append((combo, _multiset_permutations(counts)))
        per_vertex.append(options)
    out: list[PathTuple] = []
    for parts in itertools.product(*per_vertex):
        paths = tuple(itertools.chain.from_iterable(combo for combo, _ in parts))
        n_p = math.prod(n for _, n in parts)
        out.append(PathTuple(paths=paths, permutations=n_p))
    return tuple(out)


@dataclass(frozen=True)
class MasterTerm:
    """One monomial of the symbolic master polynomial.

    ``coefficient`` is the exact integer arising from path combinatorics and
    error reduction; the weight/coefficient symbols implied by ``a`` stay
    unevaluated.
    """

    a: tuple[int, ...]
    monomial: Monomial
    coefficient: Fraction
    symbols: tuple[str, ...]

    def text(self) -> str:
        parts = list(self.symbols)
        if not self.monomial.is_one:
            parts.append(self.monomial.text())
        body = " * ".join(parts)
        if self.coefficient == 1:
            return body
        return f"{self.coefficient} * {body}"


@dataclass(frozen=True)
class TermProvenance:
    tuples: tuple[PathTuple, ...]


@dataclass(frozen=True)
class CeuReport:
    """A compiled conditional expected utility for one utility class."""

    model: SemModel
    utility: str
    error_policy: str
    form: UtilityMonomialForm
    master: tuple[MasterTerm, ...]
    per_policy: dict[str, Polynomial]
    provenance: dict[tuple[tuple[int, ...], Monomial], TermProvenance] | None = None

    @property
    def monomial_count(self) -> int:
        return len(self.master)


def _utility_form(model: SemModel, utility: str | None) -> UtilityMonomialForm:
    spec = model.utility(utility)
    return expand_utility(spec, model.dag.vertices)


def compile_ceu(
    model: SemModel,
    utility: str | None = None,
    error_policy: str = "truncate",
    provenance: bool = False,
) -> CeuReport:
    """Compile the full report: symbolic master plus per-policy numeric polynomials."""
    if error_policy not in ERROR_POLICIES:
        raise SchemaError(f"unknown error-moment policy {error_policy!r}")
    form = _utility_form(model, utility)
    expansions: dict[int, Polynomial] = {}
    for v in model.dag.vertices:
        expansions[v] = expand_variable(model, v)
    master: list[MasterTerm] = []
    tracked: dict[tuple[tuple[int, ...], Monomial], TermProvenance] | None = (
        {} if provenance else None
    )
    for a in form.exponents:
        raised = Polynomial.const(1)
        for v, exp in zip(model.dag.vertices, a):
            if exp:
                raised = raised * expansions[v] ** exp
        reduced = reduce_errors(raised, error_policy)
        for mono, coeff in reduced.terms():
            master.append(
                MasterTerm(
                    a=a,
                    monomial=mono,
                    coefficient=coeff,
                    symbols=form.coefficient_symbols(a),
                )
            )
        if tracked is not None:
            for path_tuple in tuple_expansion(model, a):
                contribution = reduce_errors(
                    Polynomial.term(path_tuple.monomial()), error_policy
                )
                for mono, _ in contribution.terms():
                    key = (a, mono)
                    seen = tracked.get(key)
                    tuples = (seen.tuples if seen else ()) + (path_tuple,)
                    tracked[key] = TermProvenance(tuples=tuples)
    per_policy: dict[str, Polynomial] = {}
    for policy in model.policies:
        acc: dict[Monomial, Fraction] = {}
        for term in master:
            value = term.coefficient * form.coefficient_value(term.a, policy)
            if value:
                acc[term.monomial] = acc.get(term.monomial, Fraction(0)) + value
        per_policy[policy] = Polynomial(acc)
    return CeuReport(
        model=model,
        utility=form.spec.name,
        error_policy=error_policy,
        form=form,
        master=tuple(master),
        per_policy=per_policy,
        provenance=tracked,
    )


def build_ceu(
    model: SemModel,
    policy: str,
    error_policy: str = "truncate",
    utility: str | None = None,
) -> Polynomial:
    """The numeric CEU polynomial of one policy (path-monomial track)."""
    if not model.is_linear:
        raise NotLinearError("model has polynomial equations; use build_ceu_general")
    report = compile_ceu(model, utility=utility, error_policy=error_policy)
    if policy not in report.per_policy:
        raise SchemaError(f"unknown policy {policy!r}")
    return report.per_policy[policy]


def build_ceu_general(
    model: SemModel,
    policy: str,
    error_policy: str = "truncate",
    utility: str | None = None,
) -> Polynomial:
    """The numeric CEU polynomial of one policy via backward substitution.

    Handles polynomial equations; on linear models the output equals
    :func:`build_ceu`.
    """
    if policy not in model.policies:
        raise SchemaError(f"unknown policy {policy!r}")
    form = _utility_form(model, utility)
    expansions: dict[int, Polynomial] = {
        v: expand_variable_general(model, v) for v in model.dag.vertices
    }
    out = Polynomial.zero()
    for a in form.exponents:
        raised = Polynomial.const(1)
        for v, exp in zip(model.dag.vertices, a):
            if exp:
                raised = raised * expansions[v] ** exp
        out = out + form.coefficient_value(a, policy) * reduce_errors(raised, error_policy)
    return out
