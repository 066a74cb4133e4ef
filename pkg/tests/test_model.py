"""Document parsing, validation diagnostics and serialization round trips."""

from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest

from conftest import chain_model_document, random_linear_document
from paneleu import poly
from paneleu.errors import CycleError, MissingValueError, OwnershipError, SchemaError
from paneleu.model import (
    parse_model,
    parse_monomial_text,
    to_document,
    validate_topology,
)


def food_document(food_model):
    return to_document(food_model)


class TestParse:
    def test_food_structure(self, food_model):
        assert food_model.dag.vertices == (1, 2, 3, 4)
        assert food_model.dag.parents(3) == (1, 2)
        assert food_model.dag.parents(1) == ()
        assert food_model.is_linear
        assert set(food_model.utilities) == {"u1", "u2"}
        assert food_model.policies == ("d0", "d1", "d2")
        assert food_model.panels[3] == "G3"

    def test_exact_values(self, food_model):
        u1 = food_model.utility("u1")
        assert u1.weights[(1,)]["d0"] == Fraction(1, 4)
        assert u1.coefficients[(3, 2)]["d1"] == Fraction(1, 2)
        entry = food_model.moments.entries["t01"]
        assert entry.mean["d0"] == Fraction(3, 2)
        assert entry.variance["d2"] == 1

    def test_single_vertex(self):
        doc = {
            "vertices": [1],
            "edges": [],
            "equations": [{"vertex": 1, "kind": "linear"}],
            "panels": {"1": "G1"},
            "utility": {
                "type": "additive",
                "degrees": {"1": 1},
                "weights": {"1": 1},
                "coefficients": {"1": {"1": 1}},
            },
            "policies": ["d0"],
            "moments": {
                "mode": "mean_variance",
                "entries": {"t01": {"mean": 0}, "psi1": {"mean": 1}},
            },
        }
        model = parse_model(doc)
        assert model.dag.parents(1) == ()

    def test_order_violation_rejected(self):
        doc = chain_model_document()
        doc["vertices"] = [1, 2]
        doc["edges"] = [[2, 1]]
        with pytest.raises(CycleError):
            parse_model(doc)

    def test_missing_key(self):
        with pytest.raises(SchemaError):
            parse_model({"vertices": [1]})

    def test_unknown_policy_value(self):
        doc = chain_model_document()
        doc["moments"]["entries"]["t01"]["mean"] = {"dX": 1}
        with pytest.raises(SchemaError):
            parse_model(doc)

    def test_vertices_must_be_consecutive(self):
        doc = chain_model_document()
        doc["vertices"] = [1, 3]
        with pytest.raises(SchemaError):
            parse_model(doc)

    def test_unowned_vertex(self):
        doc = chain_model_document()
        del doc["panels"]["2"]
        with pytest.raises(OwnershipError):
            parse_model(doc)

    def test_incomplete_policy_table(self):
        doc = chain_model_document()
        doc["policies"] = ["d0", "d1"]
        doc["utility"]["weights"]["1"] = {"d0": 0.5}
        with pytest.raises(MissingValueError):
            parse_model(doc)


class TestDiagnostics:
    def test_known_good_is_clean(self, food_model):
        assert validate_topology(food_model) == []

    def test_missing_error_variance(self):
        doc = chain_model_document()
        del doc["moments"]["entries"]["psi2"]
        model = parse_model(doc, strict=False)
        diagnostics = validate_topology(model)
        assert any("vertex 2: error variance undeclared" in d for d in diagnostics)

    def test_weight_without_coefficients(self):
        doc = chain_model_document()
        doc["utility"] = {
            "type": "multilinear",
            "degrees": {"1": 2, "2": 2},
            "weights": {"1": 0.5, "12": 0.25},
            "coefficients": {"1": {"1": 1, "2": 1}},
        }
        model = parse_model(doc, strict=False)
        diagnostics = validate_topology(model)
        assert any("r21 undeclared" in d for d in diagnostics)

    def test_edge_order_diagnostic(self):
        doc = chain_model_document()
        doc["edges"] = [[2, 1]]
        model = parse_model(doc, strict=False)
        assert any("parent must precede child" in d for d in validate_topology(model))


class TestRoundTrip:
    def test_food_round_trip(self, food_model):
        doc = to_document(food_model)
        again = parse_model(json.loads(json.dumps(doc), parse_float=Fraction))
        assert again == food_model

    def test_random_round_trip(self):
        rng = random.Random(99)
        for _ in range(25):
            doc = random_linear_document(rng, max_vertices=6)
            model = parse_model(doc)
            again = parse_model(json.loads(json.dumps(to_document(model)), parse_float=Fraction))
            assert again == model


class TestOwnership:
    def test_partition_covers_universe(self, food_model):
        seen: dict[str, set] = {}
        for symbol in food_model.parameter_symbols():
            seen.setdefault(food_model.owner(symbol), set()).add(symbol)
        for v in food_model.dag.vertices:
            seen.setdefault(food_model.owner(poly.variance(v)), set()).add(poly.variance(v))
        everything = set().union(*seen.values())
        assert len(everything) == sum(len(owned) for owned in seen.values())
        assert {s.name for s in everything} == set(food_model.moments.entries)

    def test_owner_of_unknown_vertex(self, food_model):
        with pytest.raises(OwnershipError):
            food_model.owner(poly.intercept(9))


class TestMonomialText:
    def test_parse_monomial_variants(self):
        a = parse_monomial_text("t02 t12")
        b = parse_monomial_text("t02*t12")
        assert a == b
        assert parse_monomial_text("t01^2").exponent(poly.intercept(1)) == 2
        assert parse_monomial_text("1").is_one
