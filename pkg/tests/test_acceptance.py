"""Acceptance suite: one test per gate, each printing a pass line.

Every expected value here is frozen from the published reference tables
for the bundled food-security model or computed by the independent
oracles defined in conftest.  Tolerances are stated inline.
"""

from __future__ import annotations

import math
import random
import time

import pytest

from conftest import cross_track_check
from paneleu import poly
from paneleu.ceu import compile_ceu, raise_expansion, tuple_expansion
from paneleu.evaluate import (
    gaussian_moment,
    mc_oracle,
    normalize_utility,
    score,
)
from paneleu.model import parse_model
from paneleu.paths import RootedPath, expand_variable
from paneleu.poly import Polynomial
from paneleu.separability import derive_adequacy

# The 36 monomials of the additive-class CEU, in canonical text form.
ADDITIVE_MASTER_TERMS = {
    "k1 * r11 * t01",
    "k1 * r12 * t01^2",
    "k1 * r12 * psi1",
    "k2 * r21 * t02",
    "k2 * r21 * t01 * t12",
    "k2 * r22 * t02^2",
    "k2 * r22 * psi2",
    "k2 * r22 * t01^2 * t12^2",
    "k2 * r22 * t12^2 * psi1",
    "2 * k2 * r22 * t01 * t02 * t12",
    "k3 * r31 * t03",
    "k3 * r31 * t02 * t23",
    "k3 * r31 * t01 * t12 * t23",
    "k3 * r31 * t01 * t13",
    "k3 * r32 * t03^2",
    "k3 * r32 * psi3",
    "k3 * r32 * t01^2 * t13^2",
    "k3 * r32 * t13^2 * psi1",
    "k3 * r32 * t02^2 * t23^2",
    "2 * k3 * r32 * t01 * t03 * t12 * t23",
    "k3 * r32 * t23^2 * psi2",
    "k3 * r32 * t12^2 * t23^2 * psi1",
    "k3 * r32 * t01^2 * t12^2 * t23^2",
    "2 * k3 * r32 * t02 * t03 * t23",
    "2 * k3 * r32 * t01 * t03 * t13",
    "2 * k3 * r32 * t12 * t13 * t23 * psi1",
    "2 * k3 * r32 * t01 * t02 * t13 * t23",
    "2 * k3 * r32 * t01^2 * t12 * t13 * t23",
    "2 * k3 * r32 * t01 * t02 * t12 * t23^2",
    "k4 * r41 * t04",
    "k4 * r41 * t01 * t14",
    "k4 * r42 * t04^2",
    "k4 * r42 * psi4",
    "k4 * r42 * t01^2 * t14^2",
    "k4 * r42 * t14^2 * psi1",
    "2 * k4 * r42 * t01 * t04 * t14",
}

# The 24 moment-independence conditions of the additive class.
ADDITIVE_CONDITIONS = {
    "E(t01 t12) = E(t01) E(t12)",
    "E(t01^2 t12^2) = E(t01^2) E(t12^2)",
    "E(t12^2 psi1) = E(psi1) E(t12^2)",
    "E(t01 t02 t12) = E(t01) E(t02 t12)",
    "E(t02 t23) = E(t02) E(t23)",
    "E(t01 t12 t23) = E(t01) E(t12) E(t23)",
    "E(t01 t13) = E(t01) E(t13)",
    "E(t01^2 t13^2) = E(t01^2) E(t13^2)",
    "E(t13^2 psi1) = E(psi1) E(t13^2)",
    "E(t02^2 t23^2) = E(t02^2) E(t23^2)",
    "E(t01 t03 t12 t23) = E(t01) E(t12) E(t03 t23)",
    "E(t23^2 psi2) = E(psi2) E(t23^2)",
    "E(t12^2 t23^2 psi1) = E(psi1) E(t12^2) E(t23^2)",
    "E(t01^2 t12^2 t23^2) = E(t01^2) E(t12^2) E(t23^2)",
    "E(t02 t03 t23) = E(t02) E(t03 t23)",
    "E(t01 t03 t13) = E(t01) E(t03 t13)",
    "E(t12 t13 t23 psi1) = E(psi1) E(t12) E(t13 t23)",
    "E(t01 t02 t13 t23) = E(t01) E(t02) E(t13 t23)",
    "E(t01 t02 t12 t23^2) = E(t01) E(t02 t12) E(t23^2)",
    "E(t01^2 t12 t13 t23) = E(t01^2) E(t12) E(t13 t23)",
    "E(t01 t14) = E(t01) E(t14)",
    "E(t01^2 t14^2) = E(t01^2) E(t14^2)",
    "E(t14^2 psi1) = E(psi1) E(t14^2)",
    "E(t01 t04 t14) = E(t01) E(t04 t14)",
}

# Unordered path tuples for two copies of vertex 2 and two of vertex 4,
# with the permutation count of each tuple.
P2 = RootedPath(2)
P12 = RootedPath(1, ((1, 2),))
P4 = RootedPath(4)
P14 = RootedPath(1, ((1, 4),))
EXPECTED_TUPLES = {
    (frozenset({(P2, 2)}), frozenset({(P4, 2)})): 1,
    (frozenset({(P12, 1), (P2, 1)}), frozenset({(P4, 2)})): 2,
    (frozenset({(P12, 2)}), frozenset({(P4, 2)})): 1,
    (frozenset({(P2, 2)}), frozenset({(P14, 1), (P4, 1)})): 2,
    (frozenset({(P12, 1), (P2, 1)}), frozenset({(P14, 1), (P4, 1)})): 4,
    (frozenset({(P12, 2)}), frozenset({(P14, 1), (P4, 1)})): 2,
    (frozenset({(P2, 2)}), frozenset({(P14, 2)})): 1,
    (frozenset({(P12, 1), (P2, 1)}), frozenset({(P14, 2)})): 2,
    (frozenset({(P12, 2)}), frozenset({(P14, 2)})): 1,
}


def announce(name: str, ok: bool) -> None:
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}", flush=True)


def test_additive_master_terms_match_reference(food_model):
    started = time.monotonic()
    report = compile_ceu(food_model, "u1")
    elapsed = time.monotonic() - started
    texts = {t.text() for t in report.master}
    ok = texts == ADDITIVE_MASTER_TERMS and report.monomial_count == 36 and elapsed < 1.0
    announce("additive CEU reproduces the 36 reference monomials (<1s)", ok)
    assert report.monomial_count == 36
    assert texts == ADDITIVE_MASTER_TERMS
    assert elapsed < 1.0


def test_multilinear_monomial_count(food_model):
    started = time.monotonic()
    report = compile_ceu(food_model, "u2")
    elapsed = time.monotonic() - started
    ok = report.monomial_count == 3869 and elapsed < 30.0
    announce("multilinear CEU has exactly 3869 monomials (<30s)", ok)
    assert report.monomial_count == 3869
    assert elapsed < 30.0
    # Independent recount through the backward-substitution track with an
    # inline reduction rule (errors to zero, squares to variances).
    from paneleu.ceu import expand_utility
    from paneleu.paths import expand_variable_general
    from paneleu.poly import Kind, Monomial

    form = expand_utility(food_model.utility("u2"), food_model.dag.vertices)
    expansions = {v: expand_variable_general(food_model, v) for v in food_model.dag.vertices}
    recounted = set()
    for a in form.exponents:
        raised = Polynomial.const(1)
        for v, exp in zip(food_model.dag.vertices, a):
            if exp:
                raised = raised * expansions[v] ** exp
        for mono, _ in raised.items():
            kept = []
            dead = False
            for sym, exp in mono.factors:
                if sym.kind is Kind.ERROR:
                    if exp == 2:
                        kept.append((poly.variance(sym.vertex), 1))
                    else:
                        dead = True
                        break
                else:
                    kept.append((sym, exp))
            if not dead:
                recounted.add((a, Monomial.of(kept)))
    assert len(recounted) == 3869


def test_additive_conditions_match_reference(food_model):
    adequacy = derive_adequacy(compile_ceu(food_model, "u1"))
    texts = {c.text() for c in adequacy.conditions}
    ok = texts == ADDITIVE_CONDITIONS
    announce("additive class requires exactly the 24 reference conditions", ok)
    assert len(adequacy.conditions) == 24
    assert texts == ADDITIVE_CONDITIONS


def test_two_by_two_tuple_provenance(food_model):
    a = (0, 2, 0, 2)
    tuples = tuple_expansion(food_model, a)
    found = {}
    for t in tuples:
        paths2 = frozenset(
            (p, t.paths.count(p)) for p in t.paths if p.target == 2
        )
        paths4 = frozenset(
            (p, t.paths.count(p)) for p in t.paths if p.target == 4
        )
        found[(paths2, paths4)] = t.permutations
    coefficients_ok = found == EXPECTED_TUPLES
    total = Polynomial.zero()
    for t in tuples:
        total = total + Polynomial.term(t.monomial(), t.permutations)
    identity_ok = total == raise_expansion(food_model, a) and len(total) == 9
    announce("nine tuples with permutation counts 1,2,1,2,4,2,1,2,1", coefficients_ok and identity_ok)
    assert coefficients_ok
    assert identity_ok


def test_displayed_expansions(food_model):
    y3 = expand_variable(food_model, 3)
    expected_y3 = Polynomial.parse("t03p + t13 * t01p + t23 * t02p + t23 * t12 * t01p")
    y4_squared = expand_variable(food_model, 4) ** 2
    expected_y4_squared = Polynomial.parse("t04p^2 + t01p^2 * t14^2 + 2 * t01p * t14 * t04p")
    ok = y3 == expected_y3 and y4_squared == expected_y4_squared
    announce("displayed third-variable and squared-fourth expansions match", ok)
    assert y3 == expected_y3
    assert y4_squared == expected_y4_squared


def test_oracle_equivalence_and_recommendation(food_model):
    started = time.monotonic()
    samples = 1_000_000
    raw_boards = {}
    normalized_values = {}
    for utility in ("u1", "u2"):
        report = compile_ceu(food_model, utility, error_policy="gaussian")
        board = score(report, derive_adequacy(report), closure="gaussian")
        raw_boards[utility] = board
        normalization = normalize_utility(food_model, utility)
        derived = food_model.with_utility(normalization.spec)
        norm_report = compile_ceu(derived, normalization.spec.name, error_policy="gaussian")
        norm_board = score(norm_report, derive_adequacy(norm_report), closure="gaussian")
        normalized_values[utility] = {
            p: norm_board.values[p] + normalization.constant[p] for p in food_model.policies
        }
        for policy in food_model.policies:
            raw = mc_oracle(food_model, policy, samples=samples, seed=1, utility=utility)
            assert abs(board.values[policy] - raw.estimate) <= 3 * raw.stderr, (
                f"{utility}/{policy}: raw score {board.values[policy]} vs "
                f"{raw.estimate} +/- {raw.stderr}"
            )
            scaled = mc_oracle(
                food_model, policy, samples=samples, seed=1, utility=utility,
                normalization=normalization,
            )
            assert abs(normalized_values[utility][policy] - scaled.estimate) <= 3 * scaled.stderr
    elapsed = time.monotonic() - started
    argmax_ok = (
        raw_boards["u1"].ranking[0] == "d0"
        and max(normalized_values["u1"], key=normalized_values["u1"].get) == "d0"
        and max(normalized_values["u2"], key=normalized_values["u2"].get) == "d0"
    )
    announce(
        f"oracle within 3 se for both classes and the recommendation is d0 ({elapsed:.0f}s)",
        argmax_ok and elapsed < 120,
    )
    assert argmax_ok
    assert elapsed < 120


def test_cross_track_random_models():
    rng = random.Random(52_2025)
    for _ in range(200):
        cross_track_check(rng)
    announce("cross-track checks hold on 200 random linear models", True)


def test_example_regressions():
    # Two-variable chain with quadratic marginal utilities: ten CEU terms
    # including the doubled cross term carrying the second-degree
    # coefficient of the child.
    chain = parse_model({
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
            "weights": {"1": 1, "2": 1},
            "coefficients": {"1": {"1": 1, "2": -1}, "2": {"1": 1, "2": -1}},
        },
        "policies": ["d0"],
        "moments": {
            "mode": "mean_variance",
            "entries": {
                "t01": {"mean": 0, "variance": 1},
                "t02": {"mean": 0, "variance": 1},
                "t12": {"mean": 0, "variance": 1},
                "psi1": {"mean": 1},
                "psi2": {"mean": 1},
            },
        },
    })
    report = compile_ceu(chain)
    expected_master = {
        "k1 * r11 * t01",
        "k1 * r12 * t01^2",
        "k1 * r12 * psi1",
        "k2 * r21 * t02",
        "k2 * r21 * t01 * t12",
        "k2 * r22 * t02^2",
        "k2 * r22 * t01^2 * t12^2",
        "k2 * r22 * t12^2 * psi1",
        "k2 * r22 * psi2",
        "2 * k2 * r22 * t01 * t02 * t12",
    }
    master_ok = {t.text() for t in report.master} == expected_master
    # With r22 = -1 the numeric CEU carries the cross term with weight -2.
    cross = poly.Monomial.of(
        [(poly.intercept(1), 1), (poly.intercept(2), 1), (poly.edge_coef(1, 2), 1)]
    )
    sign_ok = report.per_policy["d0"].coefficient(cross) == -2

    adequacy = derive_adequacy(report)
    conditions_ok = {c.text() for c in adequacy.conditions} == {
        "E(t01 t12) = E(t01) E(t12)",
        "E(t01^2 t12^2) = E(t01^2) E(t12^2)",
        "E(t12^2 psi1) = E(psi1) E(t12^2)",
        "E(t01 t02 t12) = E(t01) E(t02 t12)",
    }

    # Second-order product expansion: E(a^2 b^2) under independence equals
    # the four-term mean/variance identity.
    m1, v1 = 1.5, 0.25
    m2, v2 = -2.5, 4.0
    expansion_ok = gaussian_moment(m1, v1, 2) * gaussian_moment(m2, v2, 2) == (
        m1**2 * m2**2 + m1**2 * v2 + m2**2 * v1 + v1 * v2
    )
    announce(
        "chain CEU, its four conditions and the 2x2 moment expansion hold",
        master_ok and sign_ok and conditions_ok and expansion_ok,
    )
    assert master_ok
    assert sign_ok
    assert conditions_ok
    assert expansion_ok
