"""Model documents: parsing, validation and the in-memory SemModel.

A model document is a JSON object with top-level keys ``vertices``,
``edges``, ``equations``, ``panels``, ``utility``, ``policies`` and
``moments``.  Vertex ids must be 1..m listed in topological order (an edge
may only point from a lower id to a higher one); symbol names follow the
``t<parent><child>`` / ``t0<vertex>`` / ``psi<vertex>`` convention used
throughout the engine.

``utility`` is either a single specification object or a mapping from
utility-class names to specifications, so one document can bundle several
agreed utility classes over the same graph.  Numeric values may be plain
numbers (policy independent) or mappings from policy id to number; they are
kept as exact rationals until evaluation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from . import poly
from .errors import CycleError, MissingValueError, OwnershipError, SchemaError
from .poly import Indeterminate, Monomial

PolicyValues = dict[str, Fraction]


@dataclass(frozen=True)
class Dag:
    """Vertices 1..m in topological order plus the directed edge set."""

    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    def parents(self, vertex: int) -> tuple[int, ...]:
        return tuple(sorted(p for p, c in self.edges if c == vertex))

    def children(self, vertex: int) -> tuple[int, ...]:
        return tuple(sorted(c for p, c in self.edges if p == vertex))


@dataclass(frozen=True)
class LinearEquation:
    """Y_v = t0v + sum of tjv * Yj over declared parents + ev."""

    vertex: int
    parents: tuple[int, ...]

    kind = "linear"


@dataclass(frozen=True)
class PolynomialEquation:
    """Y_v = sum over exponent vectors a of t<v>a * Y_[v-1]^a + ev.

    Each exponent vector has length v-1 and indexes only lower-numbered
    vertices.
    """

    vertex: int
    terms: tuple[tuple[int, ...], ...]

    kind = "polynomial"

    def coefficient(self, exponents: tuple[int, ...]) -> Indeterminate:
        return poly.poly_coef(self.vertex, exponents)


StructuralEquation = LinearEquation | PolynomialEquation


@dataclass(frozen=True)
class UtilitySpec:
    """One agreed utility class: factorization type, degrees, weights, coefficients.

    ``weights`` maps a sorted vertex tuple I to per-policy criterion weights
    k_I; ``coefficients`` maps (vertex, degree) to per-policy marginal
    utility coefficients.  Marginal utilities have zero intercept.
    """

    name: str
    kind: str  # "additive" | "multilinear"
    degrees: dict[int, int]
    weights: dict[tuple[int, ...], PolicyValues]
    coefficients: dict[tuple[int, int], PolicyValues]

    def weight_label(self, index_set: tuple[int, ...]) -> str:
        if all(v <= 9 for v in index_set):
            return "k" + "".join(str(v) for v in index_set)
        return "k" + ",".join(str(v) for v in index_set)

    def coefficient_label(self, vertex: int, degree: int) -> str:
        if vertex <= 9 and degree <= 9:
            return f"r{vertex}{degree}"
        return f"r{vertex}_{degree}"


@dataclass(frozen=True)
class MomentEntry:
    mean: PolicyValues
    variance: PolicyValues


@dataclass(frozen=True)
class MomentTable:
    """Panel deliveries: either direct monomial expectations or mean/variance pairs.

    In ``mean_variance`` mode ``entries`` is keyed by symbol name; in
    ``direct`` mode ``direct`` is keyed by the canonical space-joined text
    of a within-panel monomial.
    """

    mode: str  # "mean_variance" | "direct"
    entries: dict[str, MomentEntry] = field(default_factory=dict)
    direct: dict[str, PolicyValues] = field(default_factory=dict)

    def merged(self, overrides: "MomentTable") -> "MomentTable":
        if overrides.mode != self.mode:
            raise SchemaError(
                f"override mode {overrides.mode!r} does not match table mode {self.mode!r}"
            )
        entries = dict(self.entries)
        entries.update(overrides.entries)
        direct = dict(self.direct)
        direct.update(overrides.direct)
        return MomentTable(self.mode, entries, direct)


@dataclass(frozen=True)
class SemModel:
    """A validated model: DAG, equations, panel ownership, utilities, policies, moments."""

    dag: Dag
    equations: dict[int, StructuralEquation]
    panels: dict[int, str]
    utilities: dict[str, UtilitySpec]
    policies: tuple[str, ...]
    moments: MomentTable

    @property
    def is_linear(self) -> bool:
        return all(eq.kind == "linear" for eq in self.equations.values())

    def utility(self, name: str | None = None) -> UtilitySpec:
        if name is None:
            return next(iter(self.utilities.values()))
        if name not in self.utilities:
            raise SchemaError(
                f"unknown utility class {name!r}; declared: {', '.join(self.utilities)}"
            )
        return self.utilities[name]

    def panel_order(self) -> tuple[str, ...]:
        first_vertex: dict[str, int] = {}
        for v in self.dag.vertices:
            first_vertex.setdefault(self.panels[v], v)
        return tuple(sorted(first_vertex, key=lambda p: first_vertex[p]))

    def owner(self, symbol: Indeterminate) -> str:
        if symbol.vertex not in self.panels:
            raise OwnershipError(f"symbol {symbol.name} has no owning panel")
        return self.panels[symbol.vertex]

    def with_utility(self, spec: UtilitySpec) -> "SemModel":
        """A copy of the model with one utility class added or replaced."""
        import dataclasses

        utilities = dict(self.utilities)
        utilities[spec.name] = spec
        return dataclasses.replace(self, utilities=utilities)

    def parameter_symbols(self) -> tuple[Indeterminate, ...]:
        """Every intercept/edge/poly-coefficient symbol of the equations, in order."""
        symbols: list[Indeterminate] = []
        for v in self.dag.vertices:
            eq = self.equations[v]
            if eq.kind == "linear":
                symbols.append(poly.intercept(v))
                symbols.extend(poly.edge_coef(p, v) for p in eq.parents)
            else:
                symbols.extend(eq.coefficient(a) for a in eq.terms)
        return tuple(sorted(symbols, key=Indeterminate.sort_key))


def _as_fraction(value: Any, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (int, float, Fraction, str)):
        raise SchemaError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, float):
        # repr(float) is the shortest decimal, so document literals survive.
        return Fraction(repr(value))
    try:
        return Fraction(value)
    except ValueError as exc:
        raise SchemaError(f"{where}: expected a number, got {value!r}") from exc


def _per_policy(value: Any, policies: tuple[str, ...], where: str) -> PolicyValues:
    if isinstance(value, Mapping):
        out: PolicyValues = {}
        for policy, entry in value.items():
            if policy not in policies:
                raise SchemaError(f"{where}: unknown policy {policy!r}")
            out[policy] = _as_fraction(entry, f"{where}[{policy}]")
        return out
    constant = _as_fraction(value, where)
    return {policy: constant for policy in policies}


def _parse_weight_key(key: str, vertices: tuple[int, ...], where: str) -> tuple[int, ...]:
    raw = str(key)
    if "," in raw:
        parts = [p for p in raw.split(",") if p]
    else:
        parts = list(raw)
    try:
        ids = tuple(sorted(int(p) for p in parts))
    except ValueError as exc:
        raise SchemaError(f"{where}: malformed index set {key!r}") from exc
    if not ids or len(set(ids)) != len(ids):
        raise SchemaError(f"{where}: malformed index set {key!r}")
    for v in ids:
        if v not in vertices:
            raise SchemaError(f"{where}: index set {key!r} references unknown vertex {v}")
    return ids


def _parse_utility(name: str, raw: Mapping, vertices: tuple[int, ...], policies: tuple[str, ...]) -> UtilitySpec:
    where = f"utility {name}"
    if not isinstance(raw, Mapping):
        raise SchemaError(f"{where}: expected an object")
    kind = raw.get("type")
    if kind not in ("additive", "multilinear"):
        raise SchemaError(f"{where}: type must be 'additive' or 'multilinear'")
    degrees_raw = raw.get("degrees")
    if not isinstance(degrees_raw, Mapping):
        raise SchemaError(f"{where}: missing degrees")
    degrees: dict[int, int] = {}
    for key, value in degrees_raw.items():
        try:
            v = int(key)
        except ValueError as exc:
            raise SchemaError(f"{where}: bad degree key {key!r}") from exc
        if v not in vertices:
            raise SchemaError(f"{where}: degree for unknown vertex {v}")
        if not isinstance(value, int) or value < 1:
            raise SchemaError(f"{where}: degree of vertex {v} must be an integer >= 1")
        degrees[v] = value
    weights_raw = raw.get("weights")
    if not isinstance(weights_raw, Mapping) or not weights_raw:
        raise SchemaError(f"{where}: missing weights")
    weights: dict[tuple[int, ...], PolicyValues] = {}
    for key, value in weights_raw.items():
        ids = _parse_weight_key(key, vertices, f"{where}.weights")
        if kind == "additive" and len(ids) != 1:
            raise SchemaError(f"{where}: additive weights must be singletons, got {key!r}")
        if ids in weights:
            raise SchemaError(f"{where}: duplicate weight index set {key!r}")
        weights[ids] = _per_policy(value, policies, f"{where}.weights[{key}]")
    coefficients: dict[tuple[int, int], PolicyValues] = {}
    coeff_raw = raw.get("coefficients", {})
    if not isinstance(coeff_raw, Mapping):
        raise SchemaError(f"{where}: coefficients must be an object")
    for key, table in coeff_raw.items():
        try:
            v = int(key)
        except ValueError as exc:
            raise SchemaError(f"{where}: bad coefficient key {key!r}") from exc
        if v not in vertices:
            raise SchemaError(f"{where}: coefficients for unknown vertex {v}")
        if not isinstance(table, Mapping):
            raise SchemaError(f"{where}: coefficients of vertex {v} must map degree to value")
        for deg_key, value in table.items():
            try:
                j = int(deg_key)
            except ValueError as exc:
                raise SchemaError(f"{where}: bad coefficient degree {deg_key!r}") from exc
            if j < 1:
                raise SchemaError(f"{where}: coefficient degree must be >= 1")
            coefficients[(v, j)] = _per_policy(
                value, policies, f"{where}.coefficients[{v}][{j}]"
            )
    return UtilitySpec(name=name, kind=kind, degrees=degrees, weights=weights, coefficients=coefficients)


def parse_moments(raw: Mapping, policies: tuple[str, ...]) -> MomentTable:
    """Parse a moments section (also used for score-request overrides)."""
    if not isinstance(raw, Mapping):
        raise SchemaError("moments: expected an object")
    mode = raw.get("mode")
    if mode not in ("mean_variance", "direct"):
        raise SchemaError("moments: mode must be 'mean_variance' or 'direct'")
    entries_raw = raw.get("entries", {})
    if not isinstance(entries_raw, Mapping):
        raise SchemaError("moments: entries must be an object")
    if mode == "direct":
        direct: dict[str, PolicyValues] = {}
        for key, value in entries_raw.items():
            mono = parse_monomial_text(str(key))
            direct[mono.text(sep=" ")] = _per_policy(value, policies, f"moments[{key}]")
        return MomentTable(mode="direct", direct=direct)
    entries: dict[str, MomentEntry] = {}
    for key, value in entries_raw.items():
        symbol = poly.parse_symbol(str(key))
        if not isinstance(value, Mapping):
            raise SchemaError(f"moments[{key}]: expected an object with mean/variance")
        mean = _per_policy(value.get("mean", 0), policies, f"moments[{key}].mean")
        variance = _per_policy(value.get("variance", 0), policies, f"moments[{key}].variance")
        for policy, var in variance.items():
            if var < 0:
                raise SchemaError(f"moments[{key}].variance[{policy}]: negative variance")
        entries[symbol.name] = MomentEntry(mean=mean, variance=variance)
    return MomentTable(mode="mean_variance", entries=entries)


def parse_monomial_text(text: str) -> Monomial:
    """Parse a monomial given as space- or asterisk-separated symbol powers."""
    cleaned = text.replace("*", " ").strip()
    if not cleaned or cleaned == "1":
        return Monomial()
    powers: list[tuple[Indeterminate, int]] = []
    for token in cleaned.split():
        if "^" in token:
            sym_name, _, exp_text = token.partition("^")
            try:
                exp = int(exp_text)
            except ValueError as exc:
                raise SchemaError(f"bad exponent in monomial token {token!r}") from exc
        else:
            sym_name, exp = token, 1
        if exp < 1:
            raise SchemaError(f"bad exponent in monomial token {token!r}")
        powers.append((poly.parse_symbol(sym_name), exp))
    return Monomial.of(powers)


def parse_model(document: Mapping, *, strict: bool = True) -> SemModel:
    """Build a SemModel from a document, checking every structural invariant.

    With ``strict`` (the default) the first violation raises its typed
    error; with ``strict=False`` the model is built leniently so that
    :func:`validate_topology` can report all diagnostics at once.
    """
    if not isinstance(document, Mapping):
        raise SchemaError("model document must be a JSON object")
    for key in ("vertices", "edges", "equations", "panels", "utility", "policies", "moments"):
        if key not in document:
            raise SchemaError(f"missing top-level key {key!r}")

    vertices_raw = document["vertices"]
    if not isinstance(vertices_raw, list) or not all(isinstance(v, int) for v in vertices_raw):
        raise SchemaError("vertices must be a list of integers")
    vertices = tuple(vertices_raw)
    if vertices != tuple(range(1, len(vertices) + 1)):
        raise SchemaError("vertices must be exactly 1..m in increasing order")

    edges_raw = document["edges"]
    if not isinstance(edges_raw, list):
        raise SchemaError("edges must be a list of [parent, child] pairs")
    edges: list[tuple[int, int]] = []
    for item in edges_raw:
        if (
            not isinstance(item, list)
            or len(item) != 2
            or not all(isinstance(x, int) for x in item)
        ):
            raise SchemaError(f"edges: bad entry {item!r}")
        edges.append((item[0], item[1]))
    if len(set(edges)) != len(edges):
        raise SchemaError("edges: duplicate edge")
    dag = Dag(vertices=vertices, edges=tuple(edges))

    policies_raw = document["policies"]
    if (
        not isinstance(policies_raw, list)
        or not policies_raw
        or not all(isinstance(p, str) for p in policies_raw)
    ):
        raise SchemaError("policies must be a non-empty list of policy ids")
    if len(set(policies_raw)) != len(policies_raw):
        raise SchemaError("policies: duplicate policy id")
    policies = tuple(policies_raw)

    equations_raw = document["equations"]
    if not isinstance(equations_raw, list):
        raise SchemaError("equations must be a list")
    equations: dict[int, StructuralEquation] = {}
    for item in equations_raw:
        if not isinstance(item, Mapping) or "vertex" not in item:
            raise SchemaError(f"equations: bad entry {item!r}")
        v = item["vertex"]
        if v not in vertices:
            raise SchemaError(f"equations: unknown vertex {v}")
        if v in equations:
            raise SchemaError(f"equations: duplicate equation for vertex {v}")
        kind = item.get("kind", "linear")
        if kind == "linear":
            equations[v] = LinearEquation(vertex=v, parents=dag.parents(v))
        elif kind == "polynomial":
            terms_raw = item.get("terms")
            if not isinstance(terms_raw, list) or not terms_raw:
                raise SchemaError(f"equations[{v}]: polynomial form needs a non-empty terms list")
            terms: list[tuple[int, ...]] = []
            for t in terms_raw:
                if not isinstance(t, list) or not all(isinstance(x, int) and x >= 0 for x in t):
                    raise SchemaError(f"equations[{v}]: bad exponent vector {t!r}")
                if len(t) != v - 1:
                    raise SchemaError(
                        f"equations[{v}]: exponent vectors must have length {v - 1}"
                    )
                terms.append(tuple(t))
            if len(set(terms)) != len(terms):
                raise SchemaError(f"equations[{v}]: duplicate exponent vector")
            equations[v] = PolynomialEquation(vertex=v, terms=tuple(terms))
        else:
            raise SchemaError(f"equations[{v}]: unknown kind {kind!r}")
    for v in vertices:
        if v not in equations:
            raise SchemaError(f"equations: no equation for vertex {v}")

    panels_raw = document["panels"]
    if not isinstance(panels_raw, Mapping):
        raise SchemaError("panels must map vertex id to panel id")
    panels: dict[int, str] = {}
    for key, value in panels_raw.items():
        try:
            v = int(key)
        except ValueError as exc:
            raise SchemaError(f"panels: bad vertex key {key!r}") from exc
        if v not in vertices:
            raise SchemaError(f"panels: unknown vertex {v}")
        if not isinstance(value, str) or not value:
            raise SchemaError(f"panels[{v}]: panel id must be a non-empty string")
        panels[v] = value

    utility_raw = document["utility"]
    if not isinstance(utility_raw, Mapping) or not utility_raw:
        raise SchemaError("utility must be a specification object or a mapping of named ones")
    if "type" in utility_raw:
        named = {"default": utility_raw}
    else:
        named = dict(utility_raw)
    utilities: dict[str, UtilitySpec] = {}
    for name, raw_spec in named.items():
        utilities[str(name)] = _parse_utility(str(name), raw_spec, vertices, policies)

    moments = parse_moments(document["moments"], policies)

    model = SemModel(
        dag=dag,
        equations=equations,
        panels=panels,
        utilities=utilities,
        policies=policies,
        moments=moments,
    )
    if strict:
        diagnostics = validate_topology(model)
        if diagnostics:
            _raise_first(diagnostics)
    return model


def _raise_first(diagnostics: list[str]) -> None:
    by_prefix = (
        ("cycle:", CycleError),
        ("ownership:", OwnershipError),
        ("missing:", MissingValueError),
    )
    for prefix, error in by_prefix:
        for message in diagnostics:
            if message.startswith(prefix):
                raise error(message[len(prefix):].strip())
    raise SchemaError(diagnostics[0])


def validate_topology(model: SemModel) -> list[str]:
    """Return human-readable diagnostics; empty iff every invariant holds.

    Messages are prefixed with a severity class (``cycle:``, ``ownership:``,
    ``missing:``) so strict parsing can map them to typed errors.
    """
    out: list[str] = []
    vertex_set = set(model.dag.vertices)
    for parent, child in model.dag.edges:
        if parent not in vertex_set or child not in vertex_set:
            out.append(f"cycle: edge ({parent},{child}): endpoint is not a declared vertex")
        elif parent >= child:
            out.append(
                f"cycle: edge ({parent},{child}): parent must precede child in vertex order"
            )
    for v in model.dag.vertices:
        eq = model.equations.get(v)
        if eq is None:
            out.append(f"missing: vertex {v}: no structural equation")
            continue
        if eq.kind == "polynomial":
            support = {j + 1 for a in eq.terms for j, exp in enumerate(a) if exp}
            declared = set(model.dag.parents(v))
            for j in sorted(support - declared):
                out.append(f"cycle: vertex {v}: equation uses vertex {j} without edge ({j},{v})")
            for j in sorted(declared - support):
                out.append(f"missing: vertex {v}: declared parent {j} unused by the equation")
    for v in model.dag.vertices:
        if v not in model.panels:
            out.append(f"ownership: vertex {v}: no panel assigned")
    for name, spec in model.utilities.items():
        referenced = sorted({v for ids in spec.weights for v in ids})
        for v in referenced:
            if v not in spec.degrees:
                out.append(f"missing: utility {name}: no degree declared for vertex {v}")
                continue
            for j in range(1, spec.degrees[v] + 1):
                table = spec.coefficients.get((v, j))
                if table is None:
                    out.append(
                        f"missing: utility {name}: coefficient "
                        f"{spec.coefficient_label(v, j)} undeclared"
                    )
                    continue
                for policy in model.policies:
                    if policy not in table:
                        out.append(
                            f"missing: utility {name}: coefficient "
                            f"{spec.coefficient_label(v, j)} has no value for policy {policy}"
                        )
        for ids, table in spec.weights.items():
            for policy in model.policies:
                if policy not in table:
                    out.append(
                        f"missing: utility {name}: weight {spec.weight_label(ids)} "
                        f"has no value for policy {policy}"
                    )
    if model.moments.mode == "mean_variance":
        for v in model.dag.vertices:
            if poly.variance(v).name not in model.moments.entries:
                out.append(f"missing: vertex {v}: error variance undeclared")
        for symbol in model.parameter_symbols():
            if symbol.name not in model.moments.entries:
                out.append(f"missing: parameter {symbol.name}: no moment entry")
        for name, entry in model.moments.entries.items():
            symbol = poly.parse_symbol(name)
            if symbol.vertex not in vertex_set:
                out.append(f"ownership: moment entry {name}: unknown vertex {symbol.vertex}")
            for policy in model.policies:
                if policy not in entry.mean:
                    out.append(f"missing: moment entry {name}: no mean for policy {policy}")
    else:
        for key in model.moments.direct:
            mono = parse_monomial_text(key)
            owners = {s.vertex for s in mono.indeterminates()}
            if not owners <= vertex_set:
                out.append(f"ownership: moment entry {key}: unknown vertex")
            elif len({model.panels.get(s.vertex) for s in mono.indeterminates()}) > 1:
                out.append(f"ownership: moment entry {key}: spans more than one panel")
    return out


def load_model(path: str | Path, *, strict: bool = True) -> SemModel:
    """Load and parse a model document from a JSON file."""
    with open(path, "r", encoding="utf-8") as handle:
        document = json.load(handle, parse_float=Fraction)
    return parse_model(document, strict=strict)


def loads_model(text: str | bytes, *, strict: bool = True) -> SemModel:
    """Parse a model document from JSON text, keeping numbers exact."""
    document = json.loads(text, parse_float=Fraction)
    return parse_model(document, strict=strict)


def _number(value: Fraction) -> int | float:
    return int(value) if value.denominator == 1 else float(value)


def _values_out(values: PolicyValues, policies: tuple[str, ...]) -> Any:
    rendered = {policy: values[policy] for policy in policies if policy in values}
    distinct = set(rendered.values())
    if len(rendered) == len(policies) and len(distinct) == 1:
        return _number(next(iter(distinct)))
    return {policy: _number(v) for policy, v in rendered.items()}


def to_document(model: SemModel) -> dict:
    """Serialize a model back to its document form (parse round-trips)."""
    equations = []
    for v in model.dag.vertices:
        eq = model.equations[v]
        if eq.kind == "linear":
            equations.append({"vertex": v, "kind": "linear"})
        else:
            equations.append({"vertex": v, "kind": "polynomial", "terms": [list(a) for a in eq.terms]})
    utilities: dict[str, Any] = {}
    for name, spec in model.utilities.items():
        weights = {
            spec.weight_label(ids)[1:]: _values_out(table, model.policies)
            for ids, table in sorted(spec.weights.items(), key=lambda kv: (len(kv[0]), kv[0]))
        }
        coefficients: dict[str, dict[str, Any]] = {}
        for (v, j), table in sorted(spec.coefficients.items()):
            coefficients.setdefault(str(v), {})[str(j)] = _values_out(table, model.policies)
        utilities[name] = {
            "type": spec.kind,
            "degrees": {str(v): d for v, d in sorted(spec.degrees.items())},
            "weights": weights,
            "coefficients": coefficients,
        }
    if model.moments.mode == "mean_variance":
        entries: dict[str, Any] = {}
        for name in sorted(
            model.moments.entries, key=lambda n: poly.parse_symbol(n).sort_key()
        ):
            entry = model.moments.entries[name]
            rendered: dict[str, Any] = {"mean": _values_out(entry.mean, model.policies)}
            if any(entry.variance.values()):
                rendered["variance"] = _values_out(entry.variance, model.policies)
            entries[name] = rendered
        moments: dict[str, Any] = {"mode": "mean_variance", "entries": entries}
    else:
        moments = {
            "mode": "direct",
            "entries": {
                key: _values_out(values, model.policies)
                for key, values in sorted(model.moments.direct.items())
            },
        }
    return {
        "vertices": list(model.dag.vertices),
        "edges": [list(e) for e in model.dag.edges],
        "equations": equations,
        "panels": {str(v): model.panels[v] for v in model.dag.vertices if v in model.panels},
        "utility": utilities,
        "policies": list(model.policies),
        "moments": moments,
    }
