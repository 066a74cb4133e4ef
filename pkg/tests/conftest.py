"""Shared fixtures and independent oracles used across the test suite."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest

import paneleu
from paneleu import poly
from paneleu.model import SemModel, parse_model
from paneleu.poly import Monomial, Polynomial


@pytest.fixture(scope="session")
def food_model() -> SemModel:
    return paneleu.load_model(paneleu.bundled_model_path())


def chain_model_document() -> dict:
    """Two-variable chain with quadratic marginal utilities (a_i, -b_i form)."""
    return {
        "vertices": [1, 2],
        "edges": [[1, 2]],
        "equations": [
            {"vertex": 1, "kind": "linear"},
            {"vertex": 2, "kind": "linear"},
        ],
        "panels": {"1": "G1", "2": "G2"},
        "utility": {
            "type": "additive",
            "degrees": {"1": 2, "2": 2},
            "weights": {"1": 0.5, "2": 0.5},
            "coefficients": {
                "1": {"1": 3, "2": -0.5},
                "2": {"1": 2, "2": -0.25},
            },
        },
        "policies": ["d0"],
        "moments": {
            "mode": "mean_variance",
            "entries": {
                "t01": {"mean": 1, "variance": 1},
                "t02": {"mean": 2, "variance": 1},
                "t12": {"mean": 0.5, "variance": 0.25},
                "psi1": {"mean": 1},
                "psi2": {"mean": 2},
            },
        },
    }


@pytest.fixture()
def chain_model() -> SemModel:
    return parse_model(chain_model_document())


def random_dag_edges(rng: random.Random, m: int, density: float) -> list[list[int]]:
    return [[i, j] for i in range(1, m) for j in range(i + 1, m + 1) if rng.random() < density]


def random_linear_document(
    rng: random.Random,
    max_vertices: int = 8,
    density: float | None = None,
    policies: tuple[str, ...] = ("p0", "p1"),
    utility_kind: str | None = None,
    max_degree: int = 2,
) -> dict:
    """A random linear model document with per-vertex panels.

    Means and variances are small dyadics so float evaluation stays exact
    enough for tight comparisons.
    """
    m = rng.randint(1, max_vertices)
    if density is None:
        density = rng.random()
    edges = random_dag_edges(rng, m, density)
    kind = utility_kind or rng.choice(("additive", "multilinear"))
    vertices = list(range(1, m + 1))
    degrees = {str(v): rng.randint(1, max_degree) for v in vertices}
    if kind == "additive":
        sets = [(v,) for v in rng.sample(vertices, k=rng.randint(1, m))]
    else:
        sets = {(v,) for v in rng.sample(vertices, k=rng.randint(1, m))}
        for _ in range(rng.randint(0, 2)):
            size = rng.randint(1, min(2, m))
            sets.add(tuple(sorted(rng.sample(vertices, k=size))))
        sets = sorted(sets)
    weights = {
        "".join(str(v) for v in ids): {p: rng.choice([0.25, 0.5, 1, 2]) for p in policies}
        for ids in sets
    }
    coefficients = {
        str(v): {
            str(j): {p: rng.choice([-2, -1, -0.5, 0.5, 1, 2]) for p in policies}
            for j in range(1, int(degrees[str(v)]) + 1)
        }
        for v in vertices
    }
    entries: dict = {}
    for v in vertices:
        entries[f"t0{v}"] = {
            "mean": rng.choice([-1.5, -1, -0.5, 0, 0.5, 1, 1.5]),
            "variance": rng.choice([0, 0.25, 1]),
        }
        entries[f"psi{v}"] = {"mean": rng.choice([0, 0.25, 1]), "variance": 0}
    for i, j in edges:
        entries[f"t{i}{j}" if i <= 9 and j <= 9 else f"t{i}_{j}"] = {
            "mean": rng.choice([-1, -0.5, 0.5, 1]),
            "variance": rng.choice([0, 0.25]),
        }
    return {
        "vertices": vertices,
        "edges": edges,
        "equations": [{"vertex": v, "kind": "linear"} for v in vertices],
        "panels": {str(v): f"G{v}" for v in vertices},
        "utility": {
            "type": kind,
            "degrees": degrees,
            "weights": weights,
            "coefficients": coefficients,
        },
        "policies": list(policies),
        "moments": {"mode": "mean_variance", "entries": entries},
    }


def random_linear_model(rng: random.Random, **kwargs) -> SemModel:
    return parse_model(random_linear_document(rng, **kwargs))


def random_polynomial(
    rng: random.Random,
    symbols: list[poly.Indeterminate],
    max_terms: int = 4,
    max_degree: int = 3,
) -> Polynomial:
    terms: dict[Monomial, Fraction] = {}
    for _ in range(rng.randint(0, max_terms)):
        powers = []
        for _ in range(rng.randint(0, max_degree)):
            powers.append((rng.choice(symbols), 1))
        mono = Monomial.of(powers)
        coeff = Fraction(rng.randint(-4, 4), rng.choice([1, 2, 4]))
        terms[mono] = terms.get(mono, Fraction(0)) + coeff
    return Polynomial(terms)


def brute_force_paths(edges: set[tuple[int, int]], vertices: list[int], target: int) -> set:
    """Independent path enumeration: check every vertex sequence ending at target."""
    found = set()
    others = [v for v in vertices if v != target]
    for size in range(0, len(others) + 1):
        for subset in itertools.permutations(others, size):
            seq = list(subset) + [target]
            if all((seq[k], seq[k + 1]) in edges for k in range(len(seq) - 1)):
                found.add(tuple(seq))
    return found


def rewrite_errors_to_aug(p: Polynomial) -> Polynomial:
    """Fold every t0i + ei pair into the augmented intercept symbol."""
    for symbol in p.indeterminates():
        if symbol.kind is poly.Kind.ERROR:
            v = symbol.vertex
            p = p.substitute(
                symbol,
                Polynomial.symbol(poly.aug_intercept(v)) - Polynomial.symbol(poly.intercept(v)),
            )
    return p


def cross_track_check(rng: random.Random) -> None:
    """One random-model round of the three cross-track equalities.

    Raises AssertionError on any mismatch: path expansion vs backward
    substitution, tuple enumeration vs powered expansion, and factored
    scoring vs direct enumeration over independent-across-panel atoms.
    """
    import itertools

    from paneleu.ceu import compile_ceu, raise_expansion, tuple_expansion
    from paneleu.evaluate import score
    from paneleu.model import MomentTable, UtilitySpec
    from paneleu.paths import enumerate_rooted_paths, expand_variable, expand_variable_general
    from paneleu.poly import Polynomial as P
    from paneleu.separability import derive_adequacy

    model = random_linear_model(rng, max_vertices=8)
    policies = model.policies

    # Track one: every vertex's path expansion equals backward substitution.
    for target in model.dag.vertices:
        assert rewrite_errors_to_aug(expand_variable_general(model, target)) == expand_variable(
            model, target
        )

    # Restrict the utility to vertices with modest path counts so the
    # enumeration oracles stay exact and fast; every graph keeps at least
    # its first vertex (a root has exactly one path).
    path_counts = {v: len(enumerate_rooted_paths(model.dag, v)) for v in model.dag.vertices}
    usable = [v for v in model.dag.vertices if path_counts[v] <= 10]
    chosen = rng.sample(usable, k=min(len(usable), rng.randint(1, 3)))
    sets = [(v,) for v in chosen]
    if len(chosen) >= 2 and rng.random() < 0.5:
        sets.append(tuple(sorted(rng.sample(chosen, k=2))))
    spec = UtilitySpec(
        name="probe",
        kind="multilinear",
        degrees={v: rng.randint(1, 2) for v in chosen},
        weights={
            ids: {p: Fraction(rng.choice([1, 2, -1]), 2) for p in policies} for ids in sets
        },
        coefficients={
            (v, j): {p: Fraction(rng.choice([-2, -1, 1, 2]), 2) for p in policies}
            for v in chosen
            for j in range(1, 3)
        },
    )
    probe = model.with_utility(spec)

    # Track two: unordered tuple enumeration equals the powered expansion.
    report = compile_ceu(probe, "probe", error_policy="gaussian")
    for a in report.form.exponents:
        by_pow = raise_expansion(probe, a)
        total = P.zero()
        for t in tuple_expansion(probe, a):
            total = total + P.term(t.monomial(), t.permutations)
        assert total == by_pow

    # Track three: factored score equals direct enumeration over discrete
    # independent-across-panel parameter distributions.
    adequacy = derive_adequacy(report)
    symbols = list(probe.parameter_symbols()) + [poly.variance(v) for v in probe.dag.vertices]
    by_panel: dict[str, list] = {}
    for s in symbols:
        by_panel.setdefault(probe.panels[s.vertex], []).append(s)
    atoms = {
        panel: [
            (Fraction(1, 2), {s: Fraction(rng.randint(-2, 2), 2) for s in owned}),
            (Fraction(1, 2), {s: Fraction(rng.randint(-2, 2), 2) for s in owned}),
        ]
        for panel, owned in by_panel.items()
    }

    def panel_expectation(panel: str, mono: Monomial) -> Fraction:
        total = Fraction(0)
        for w, values in atoms[panel]:
            term = Fraction(1)
            for s, e in mono.factors:
                term *= values[s] ** e
            total += w * term
        return total

    direct_entries = {
        req.monomial.text(sep=" "): {
            p: panel_expectation(req.panel, req.monomial) for p in policies
        }
        for req in adequacy.summaries
    }
    table = MomentTable(mode="direct", direct=direct_entries)
    board = score(report, adequacy, moments=table, closure="direct")
    panel_names = sorted(atoms)
    for policy in policies:
        total = Fraction(0)
        for combo in itertools.product(*(atoms[p] for p in panel_names)):
            weight = Fraction(1)
            assignment: dict = {}
            for w, values in combo:
                weight *= w
                assignment.update(values)
            total += weight * report.per_policy[policy].evaluate(assignment)
        assert abs(board.values[policy] - float(total)) <= 1e-9 * max(1.0, abs(float(total)))


def utility_polynomial(model: SemModel, utility: str, policy: str) -> Polynomial:
    """u(y, d) as an explicit polynomial in the variable placeholders.

    Built directly from the declared factorization (weights times products
    of marginal utilities); independent of the compiler's monomial form.
    """
    spec = model.utility(utility)
    marginals: dict[int, Polynomial] = {}
    for v in model.dag.vertices:
        acc = Polynomial.zero()
        for j in range(1, spec.degrees.get(v, 0) + 1):
            acc = acc + Polynomial.term(
                Monomial.symbol(poly.variable(v), j), spec.coefficients[(v, j)][policy]
            )
        marginals[v] = acc
    total = Polynomial.zero()
    for ids, table in spec.weights.items():
        product = Polynomial.const(table[policy])
        for v in ids:
            product = product * marginals[v]
        total = total + product
    return total
