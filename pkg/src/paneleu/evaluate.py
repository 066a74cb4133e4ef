"""Turning panel deliveries into expected-utility scores and rankings.

Scores evaluate the compiled per-policy CEU polynomials: each monomial's
expectation is the product of its within-panel factor expectations (the
factorization the adequacy conditions assert), and factors resolve from
the moment table either directly or through a moment closure over
delivered means and variances.  A vectorized Monte Carlo oracle provides
an independent check by simulating the structural equations forward.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import poly
from .ceu import CeuReport, reduce_errors
from .errors import (
    MissingSummaryError,
    NegativeVarianceError,
    SchemaError,
)
from .model import MomentTable, SemModel, UtilitySpec
from .paths import expand_variable
from .poly import Monomial
from .separability import AdequacySpec, partition_by_panel

CLOSURES = ("gaussian", "direct")


def gaussian_moment(mean: float, variance: float, k: int) -> float:
    """k-th non-central moment of a normal distribution.

    Uses the recursion M_k = mean * M_{k-1} + (k-1) * variance * M_{k-2}.
    """
    if variance < 0:
        raise NegativeVarianceError(f"negative variance {variance}")
    if k < 0:
        raise ValueError("moment order must be non-negative")
    if k == 0:
        return 1.0
    prev2, prev1 = 1.0, float(mean)
    for order in range(2, k + 1):
        prev2, prev1 = prev1, mean * prev1 + (order - 1) * variance * prev2
    return prev1


def _closed_moment(closure: str, mean: float, variance: float, k: int) -> float | None:
    """Moment under the chosen closure; None when the closure cannot supply it."""
    if closure == "gaussian":
        return gaussian_moment(mean, variance, k)
    if closure == "direct":
        if k == 0:
            return 1.0
        if k == 1:
            return float(mean)
        if k == 2:
            if variance < 0:
                raise NegativeVarianceError(f"negative variance {variance}")
            return mean * mean + variance
        return None
    raise SchemaError(f"unknown moment closure {closure!r}")


@dataclass(frozen=True)
class ScoreBoard:
    """Per-policy EU values plus the implied ranking and tie groups."""

    utility: str
    error_policy: str
    closure: str
    values: dict[str, float]
    ranking: tuple[str, ...]
    ties: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class MarginalNormalization:
    """Affine rescale of one marginal utility onto [0, 1] over its range."""

    vertex: int
    low: float
    high: float
    scale: float
    shift: float


@dataclass(frozen=True)
class UtilityNormalization:
    """A candidate normalization making every marginal utility live in [0, 1].

    Attribute ranges are the envelope over policies of mean +/- spread
    standard deviations of each variable under the delivered moments; the
    folded weights and scaled coefficients express the normalized utility
    in the same factorized form, up to a per-policy additive constant.
    """

    utility: str
    spread: float
    marginals: dict[int, MarginalNormalization]
    constant: dict[str, float]
    spec: "UtilitySpec"


def rank_policies(values: dict[str, float]) -> tuple[tuple[str, ...], tuple[tuple[str, ...], ...]]:
    ranking = tuple(sorted(values, key=lambda p: (-values[p], p)))
    ties: list[tuple[str, ...]] = []
    group: list[str] = []
    for policy in ranking:
        if group and values[policy] == values[group[-1]]:
            group.append(policy)
        else:
            if len(group) > 1:
                ties.append(tuple(group))
            group = [policy]
    if len(group) > 1:
        ties.append(tuple(group))
    return ranking, tuple(ties)


def _factor_expectation(
    panel: str,
    factor: Monomial,
    policy: str,
    moments: MomentTable,
    closure: str,
) -> float:
    if moments.mode == "direct":
        key = factor.text(sep=" ")
        table = moments.direct.get(key)
        if table is None or policy not in table:
            raise MissingSummaryError(panel, key, policy, "no direct entry")
        return float(table[policy])
    value = 1.0
    for sym, exp in factor.factors:
        entry = moments.entries.get(sym.name)
        if entry is None or policy not in entry.mean:
            raise MissingSummaryError(panel, factor.text(sep=" "), policy, f"no moments for {sym.name}")
        mean = float(entry.mean[policy])
        var = float(entry.variance.get(policy, 0))
        moment = _closed_moment(closure, mean, var, exp)
        if moment is None:
            raise MissingSummaryError(
                panel,
                factor.text(sep=" "),
                policy,
                f"{sym.name}^{exp} needs a direct delivery under the {closure} closure",
            )
        value *= moment
    return value


def score(
    report: CeuReport,
    adequacy: AdequacySpec,
    moments: MomentTable | None = None,
    closure: str = "gaussian",
) -> ScoreBoard:
    """Evaluate every policy's EU from panel deliveries and rank the policies.

    Monomial expectations factor across panels per the adequacy conditions;
    within-panel factors resolve from the moment table (joint entries in
    direct mode, closures over means and variances otherwise).  Summation
    over monomials is compensated.
    """
    if closure not in CLOSURES:
        raise SchemaError(f"unknown moment closure {closure!r}")
    model = report.model
    table = moments if moments is not None else model.moments
    # Surface unresolvable requirements before any arithmetic.
    for requirement in adequacy.summaries:
        for policy in requirement.policies:
            _factor_expectation(requirement.panel, requirement.monomial, policy, table, closure)
    panel_order = model.panel_order()
    values: dict[str, float] = {}
    for policy in model.policies:
        contributions: list[float] = []
        for mono, coeff in report.per_policy[policy].terms():
            expectation = 1.0
            for factor in partition_by_panel(mono, model.panels, panel_order):
                expectation *= _factor_expectation(
                    factor.panel, factor.monomial, policy, table, closure
                )
            contributions.append(float(coeff) * expectation)
        values[policy] = math.fsum(contributions)
    ranking, ties = rank_policies(values)
    return ScoreBoard(
        utility=report.utility,
        error_policy=report.error_policy,
        closure=closure,
        values=values,
        ranking=ranking,
        ties=ties,
    )


# Plausible attribute range: mean +/- 2 sd covers ~95% of a normal variable.
DEFAULT_SPREAD = 2.0


def _monomial_expectation(mono: Monomial, policy: str, table: MomentTable) -> float:
    value = 1.0
    for sym, exp in mono.factors:
        entry = table.entries[sym.name]
        value *= gaussian_moment(
            float(entry.mean[policy]), float(entry.variance.get(policy, 0)), exp
        )
    return value


def attribute_ranges(
    model: SemModel, spread: float = DEFAULT_SPREAD
) -> dict[int, tuple[float, float]]:
    """Per-vertex envelope over policies of mean +/- spread sd of the variable.

    First and second moments propagate exactly through the path expansion
    with normal moment closure over the delivered means and variances.
    """
    if model.moments.mode != "mean_variance":
        raise SchemaError("attribute ranges need a mean_variance moment table")
    out: dict[int, tuple[float, float]] = {}
    for v in model.dag.vertices:
        expansion = expand_variable(model, v)
        first = reduce_errors(expansion, "gaussian")
        second = reduce_errors(expansion**2, "gaussian")
        lows: list[float] = []
        highs: list[float] = []
        for policy in model.policies:
            mean = math.fsum(
                float(c) * _monomial_expectation(mono, policy, model.moments)
                for mono, c in first.items()
            )
            raw_second = math.fsum(
                float(c) * _monomial_expectation(mono, policy, model.moments)
                for mono, c in second.items()
            )
            sd = math.sqrt(max(raw_second - mean * mean, 0.0))
            lows.append(mean - spread * sd)
            highs.append(mean + spread * sd)
        out[v] = (min(lows), max(highs))
    return out


def _marginal_extrema(
    spec, vertex: int, policy: str, low: float, high: float
) -> tuple[float, float]:
    degree = spec.degrees[vertex]
    coeffs = [float(spec.coefficients[(vertex, j)][policy]) for j in range(1, degree + 1)]

    def value(y: float) -> float:
        return math.fsum(c * y ** (j + 1) for j, c in enumerate(coeffs))

    candidates = [low, high]
    # Stationary points: roots of the derivative inside the range.
    derivative = [c * (j + 1) for j, c in enumerate(coeffs)]
    if len(derivative) > 1:
        roots = np.roots(list(reversed(derivative)))
        for root in roots:
            if abs(root.imag) < 1e-12 and low < root.real < high:
                candidates.append(float(root.real))
    values = [value(y) for y in candidates]
    return min(values), max(values)


def normalize_utility(
    model: SemModel, utility: str | None = None, spread: float = DEFAULT_SPREAD
) -> UtilityNormalization:
    """Rescale each marginal utility onto [0, 1] over its attribute range.

    The normalized utility keeps the agreed factorization: scaled
    coefficients replace the delivered ones and weights fold the affine
    shifts down onto every subset of each agreed index set, leaving a
    per-policy constant.  Marginal extrema are evaluated at the first
    policy's coefficients, which the document shares across policies.
    """
    spec = model.utility(utility)
    ranges = attribute_ranges(model, spread)
    reference = model.policies[0]
    marginals: dict[int, MarginalNormalization] = {}
    referenced = sorted({v for ids in spec.weights for v in ids})
    for v in referenced:
        low, high = ranges[v]
        lo_u, hi_u = _marginal_extrema(spec, v, reference, low, high)
        if hi_u - lo_u <= 0:
            scale, shift = 1.0, 0.0
        else:
            scale = 1.0 / (hi_u - lo_u)
            shift = -lo_u / (hi_u - lo_u)
        marginals[v] = MarginalNormalization(
            vertex=v, low=low, high=high, scale=scale, shift=shift
        )
    folded: dict[tuple[int, ...], dict[str, Fraction]] = {}
    constant = {policy: 0.0 for policy in model.policies}
    for ids, table in spec.weights.items():
        for size in range(0, len(ids) + 1):
            for subset in itertools.combinations(ids, size):
                shift_product = math.prod(
                    marginals[v].shift for v in ids if v not in subset
                )
                if not shift_product:
                    continue
                if subset:
                    target = folded.setdefault(subset, {p: Fraction(0) for p in model.policies})
                    for policy in model.policies:
                        target[policy] += table[policy] * Fraction(repr(shift_product))
                else:
                    for policy in model.policies:
                        constant[policy] += float(table[policy]) * shift_product
    coefficients = {
        (v, j): {
            policy: value * Fraction(repr(marginals[v].scale))
            for policy, value in table.items()
        }
        for (v, j), table in spec.coefficients.items()
        if v in marginals
    }
    normalized = UtilitySpec(
        name=f"{spec.name}.normalized",
        kind=spec.kind if all(len(ids) == 1 for ids in folded) else "multilinear",
        degrees=dict(spec.degrees),
        weights=folded,
        coefficients=coefficients,
    )
    return UtilityNormalization(
        utility=spec.name,
        spread=spread,
        marginals=marginals,
        constant=constant,
        spec=normalized,
    )


@dataclass(frozen=True)
class OracleEstimate:
    policy: str
    estimate: float
    stderr: float
    samples: int
    seed: int


def mc_oracle(
    model: SemModel,
    policy: str,
    samples: int,
    seed: int,
    utility: str | None = None,
    moments: MomentTable | None = None,
    chunk: int = 1 << 16,
    normalization: UtilityNormalization | None = None,
) -> OracleEstimate:
    """Monte Carlo estimate of a policy's EU by forward simulation.

    Parameters draw as independent normals from the delivered means and
    variances; errors draw as normals with the realized variance symbols.
    The stream is counter-based (Philox), consumed in fixed-size chunks, so
    a fixed seed and sample count reproduce the estimate exactly.  With a
    normalization the per-sample marginal utilities are rescaled before the
    agreed weights combine them, so the estimate targets the normalized EU
    through the declared factorization rather than the folded one.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    table = moments if moments is not None else model.moments
    if table.mode != "mean_variance":
        raise SchemaError("the oracle needs a mean_variance moment table")
    if policy not in model.policies:
        raise SchemaError(f"unknown policy {policy!r}")
    spec = model.utility(utility)

    def entry(name: str) -> tuple[float, float]:
        found = table.entries.get(name)
        if found is None or policy not in found.mean:
            raise MissingSummaryError("?", name, policy, "no moments for simulation")
        mean = float(found.mean[policy])
        var = float(found.variance.get(policy, 0))
        if var < 0:
            raise NegativeVarianceError(f"{name}: negative variance {var}")
        return mean, var

    param_symbols = list(model.parameter_symbols())
    psi_symbols = [poly.variance(v) for v in model.dag.vertices]
    param_stats = [entry(s.name) for s in param_symbols]
    psi_stats = [entry(s.name) for s in psi_symbols]

    weight_values = {ids: float(tbl[policy]) for ids, tbl in spec.weights.items()}
    coeff_values = {key: float(tbl[policy]) for key, tbl in spec.coefficients.items()}

    rng = np.random.Generator(np.random.Philox(key=seed))
    total = 0.0
    total_sq = 0.0
    done = 0
    m = len(model.dag.vertices)
    while done < samples:
        n = min(chunk, samples - done)
        draws = rng.standard_normal((n, len(param_symbols) + len(psi_symbols) + m))
        params = {}
        for idx, sym in enumerate(param_symbols):
            mean, var = param_stats[idx]
            params[sym] = mean + math.sqrt(var) * draws[:, idx]
        base = len(param_symbols)
        psis = []
        for idx, (mean, var) in enumerate(psi_stats):
            realized = mean + math.sqrt(var) * draws[:, base + idx]
            if np.any(realized < 0):
                raise NegativeVarianceError(
                    f"psi{model.dag.vertices[idx]}: simulation produced a negative variance"
                )
            psis.append(realized)
        base += len(psi_symbols)
        values: dict[int, np.ndarray] = {}
        for pos, v in enumerate(model.dag.vertices):
            noise = np.sqrt(psis[pos]) * draws[:, base + pos]
            eq = model.equations[v]
            if eq.kind == "linear":
                acc = params[poly.intercept(v)] + noise
                for parent in eq.parents:
                    acc = acc + params[poly.edge_coef(parent, v)] * values[parent]
            else:
                acc = noise.copy()
                for exponents in eq.terms:
                    term = params[eq.coefficient(exponents)].copy()
                    for j, exp in enumerate(exponents, start=1):
                        if exp:
                            term *= values[j] ** exp
                    acc = acc + term
            values[v] = acc
        marginal: dict[int, np.ndarray] = {}
        for v in model.dag.vertices:
            if any(v in ids for ids in spec.weights):
                acc = np.zeros(n)
                for j in range(1, spec.degrees[v] + 1):
                    acc = acc + coeff_values[(v, j)] * values[v] ** j
                if normalization is not None:
                    affine = normalization.marginals[v]
                    acc = affine.scale * acc + affine.shift
                marginal[v] = acc
        u = np.zeros(n)
        for ids, k_value in weight_values.items():
            product = np.full(n, k_value)
            for v in ids:
                product = product * marginal[v]
            u = u + product
        total += float(np.sum(u))
        total_sq += float(np.sum(u * u))
        done += n
    mean = total / samples
    if samples > 1:
        var = max((total_sq - samples * mean * mean) / (samples - 1), 0.0)
        stderr = math.sqrt(var / samples)
    else:
        stderr = float("inf")
    return OracleEstimate(policy=policy, estimate=mean, stderr=stderr, samples=samples, seed=seed)
