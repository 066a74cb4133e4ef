"""Rooted paths and algebraic substitution of structural equations.

For a linear model every variable rewrites as the sum of its rooted-path
monomials: each directed path ending at the target contributes the
augmented intercept of its root times the product of its edge
coefficients.  The generic track instead substitutes equations backwards
one vertex at a time and works for polynomial equations too; on linear
models both tracks agree once augmented intercepts are expanded.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import poly
from .errors import NotLinearError
from .model import Dag, SemModel
from .poly import Monomial, Polynomial


@dataclass(frozen=True)
class RootedPath:
    """A directed path, stored as its root plus the ordered edge chain."""

    root: int
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        prev = self.root
        for i, j in self.edges:
            if i != prev:
                raise ValueError(f"edge ({i},{j}) does not chain from {prev}")
            prev = j
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("path edges must be distinct")

    @property
    def target(self) -> int:
        return self.edges[-1][1] if self.edges else self.root

    @property
    def length(self) -> int:
        return len(self.edges)

    def monomial(self) -> Monomial:
        """The path monomial: augmented root intercept times edge coefficients."""
        powers = [(poly.aug_intercept(self.root), 1)]
        powers += [(poly.edge_coef(i, j), 1) for i, j in self.edges]
        return Monomial.of(powers)

    def text(self) -> str:
        inner = ",".join([str(self.root)] + [f"({i},{j})" for i, j in self.edges])
        return f"({inner})"

    def __str__(self) -> str:
        return self.text()


def enumerate_rooted_paths(dag: Dag, target: int) -> tuple[RootedPath, ...]:
    """All directed paths ending at ``target``, in (root, edge-list) order."""
    if target not in dag.vertices:
        raise ValueError(f"unknown vertex {target}")
    found: list[RootedPath] = []

    def walk(vertex: int, suffix: tuple[tuple[int, int], ...]) -> None:
        found.append(RootedPath(root=vertex, edges=suffix))
        for parent in dag.parents(vertex):
            walk(parent, ((parent, vertex),) + suffix)

    walk(target, ())
    found.sort(key=lambda p: (p.root, p.edges))
    return tuple(found)


def _require_linear(model: SemModel) -> None:
    for v in model.dag.vertices:
        if model.equations[v].kind != "linear":
            raise NotLinearError(f"vertex {v}: equation is not linear")


def expand_variable(model: SemModel, target: int) -> Polynomial:
    """Rewrite a variable of a linear model as its sum of path monomials."""
    _require_linear(model)
    terms = {path.monomial(): 1 for path in enumerate_rooted_paths(model.dag, target)}
    return Polynomial(terms)


def conditional_mean(model: SemModel, target: int) -> Polynomial:
    """Mean of the target given all parameters: identical to the path expansion."""
    return expand_variable(model, target)


def equation_polynomial(model: SemModel, vertex: int) -> Polynomial:
    """The right-hand side of a structural equation, error term included."""
    eq = model.equations[vertex]
    out = Polynomial.symbol(poly.error(vertex))
    if eq.kind == "linear":
        out = out + Polynomial.symbol(poly.intercept(vertex))
        for parent in eq.parents:
            out = out + Polynomial.symbol(poly.edge_coef(parent, vertex)) * Polynomial.symbol(
                poly.variable(parent)
            )
        return out
    for exponents in eq.terms:
        term = Polynomial.symbol(eq.coefficient(exponents))
        for j, exp in enumerate(exponents, start=1):
            if exp:
                term = term * Polynomial.symbol(poly.variable(j)) ** exp
        out = out + term
    return out


def expand_variable_general(model: SemModel, target: int) -> Polynomial:
    """Backward-substitute equations to express the target in parameters and errors.

    Works for polynomial equations; substitution runs in reverse topological
    order so every placeholder disappears.
    """
    out = equation_polynomial(model, target)
    for v in range(target - 1, 0, -1):
        placeholder = poly.variable(v)
        if out.contains(placeholder):
            out = out.substitute(placeholder, equation_polynomial(model, v))
    return out
