"""Adequacy requirements derived from a compiled CEU.

Every CEU monomial splits into within-panel factors under the ownership
map.  Factors are the summaries panels must deliver; monomials touching
two or more panels additionally yield a moment-independence condition
stating that the cross-panel expectation factorizes into the product of
the per-panel factor expectations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ceu import CeuReport
from .errors import OwnershipError
from .model import SemModel
from .poly import Indeterminate, Monomial


@dataclass(frozen=True)
class PanelFactor:
    """The within-panel part of a CEU monomial."""

    panel: str
    monomial: Monomial


@dataclass(frozen=True)
class SummaryRequirement:
    """One expectation a panel must deliver, with the policies that need it."""

    panel: str
    monomial: Monomial
    policies: tuple[str, ...]


@dataclass(frozen=True)
class IndependenceCondition:
    """A cross-panel monomial and its required factorization."""

    monomial: Monomial
    factors: tuple[PanelFactor, ...]
    source_terms: tuple[int, ...]  # indices into the master term list

    def text(self) -> str:
        lhs = self.monomial.text(sep=" ")
        rhs = " ".join(f"E({f.monomial.text(sep=' ')})" for f in self.factors)
        return f"E({lhs}) = {rhs}"


@dataclass(frozen=True)
class AdequacySpec:
    """Everything the collective must provide for scores to be computable."""

    utility: str
    error_policy: str
    summaries: tuple[SummaryRequirement, ...]
    conditions: tuple[IndependenceCondition, ...]
    max_orders: dict[str, int]  # symbol name -> greatest exponent required
    panel_orders: dict[str, dict[str, int]]  # panel -> symbol -> exponent
    assumes_quasi_independence: bool = True


@dataclass(frozen=True)
class OrderVectors:
    """Greatest exponent each parameter reaches, globally and per panel."""

    global_orders: dict[str, int]
    panel_orders: dict[str, dict[str, int]]


def max_orders(spec: AdequacySpec) -> OrderVectors:
    """Recompute the maximal moment orders from a derived adequacy spec.

    Conditions and summaries jointly cover every CEU monomial, so the
    result bounds every exponent the independence conditions mention.
    """
    global_orders: dict[str, int] = {}
    panel_orders: dict[str, dict[str, int]] = {}

    def absorb(panel: str, monomial: Monomial) -> None:
        for sym, exp in monomial.factors:
            if exp > global_orders.get(sym.name, 0):
                global_orders[sym.name] = exp
            table = panel_orders.setdefault(panel, {})
            if exp > table.get(sym.name, 0):
                table[sym.name] = exp

    for condition in spec.conditions:
        for factor in condition.factors:
            absorb(factor.panel, factor.monomial)
    for summary in spec.summaries:
        absorb(summary.panel, summary.monomial)
    return OrderVectors(
        global_orders=dict(sorted(global_orders.items())),
        panel_orders={p: dict(sorted(t.items())) for p, t in sorted(panel_orders.items())},
    )


def partition_by_panel(
    monomial: Monomial, ownership: dict[int, str], panel_order: tuple[str, ...] | None = None
) -> tuple[PanelFactor, ...]:
    """Split a monomial into its per-panel factors.

    The factors multiply back to the monomial; order follows
    ``panel_order`` when given, else first appearance by vertex.
    """
    grouped: dict[str, list[tuple[Indeterminate, int]]] = {}
    for sym, exp in monomial.factors:
        panel = ownership.get(sym.vertex)
        if panel is None:
            raise OwnershipError(f"symbol {sym.name} has no owning panel")
        grouped.setdefault(panel, []).append((sym, exp))
    if panel_order is None:
        ordered = list(grouped)
    else:
        ordered = [p for p in panel_order if p in grouped]
        ordered += [p for p in grouped if p not in ordered]
    return tuple(PanelFactor(panel=p, monomial=Monomial.of(grouped[p])) for p in ordered)


def derive_adequacy(report: CeuReport, ownership: dict[int, str] | None = None) -> AdequacySpec:
    """Derive summaries, independence conditions and moment orders from a CEU."""
    model: SemModel = report.model
    panels = ownership if ownership is not None else model.panels
    panel_order = model.panel_order() if ownership is None else tuple(dict.fromkeys(panels.values()))

    needed: dict[tuple[str, Monomial], set[str]] = {}
    for policy, polynomial in report.per_policy.items():
        for mono, _ in polynomial.terms():
            for factor in partition_by_panel(mono, panels, panel_order):
                needed.setdefault((factor.panel, factor.monomial), set()).add(policy)

    sources: dict[Monomial, list[int]] = {}
    for index, term in enumerate(report.master):
        sources.setdefault(term.monomial, []).append(index)

    conditions: list[IndependenceCondition] = []
    for mono in sorted(sources, key=Monomial.grade_key):
        factors = partition_by_panel(mono, panels, panel_order)
        if len(factors) < 2:
            continue
        conditions.append(
            IndependenceCondition(
                monomial=mono, factors=factors, source_terms=tuple(sources[mono])
            )
        )

    rank = {p: i for i, p in enumerate(panel_order)}
    summaries = tuple(
        SummaryRequirement(panel=panel, monomial=mono, policies=tuple(sorted(policies)))
        for (panel, mono), policies in sorted(
            needed.items(), key=lambda kv: (rank.get(kv[0][0], len(rank)), kv[0][1].grade_key())
        )
    )

    max_orders: dict[str, int] = {}
    panel_orders: dict[str, dict[str, int]] = {}
    for mono in sources:
        for sym, exp in mono.factors:
            name = sym.name
            panel = panels[sym.vertex]
            if exp > max_orders.get(name, 0):
                max_orders[name] = exp
            per_panel = panel_orders.setdefault(panel, {})
            if exp > per_panel.get(name, 0):
                per_panel[name] = exp
    max_orders = {
        sym.name: max_orders[sym.name]
        for sym in sorted(
            (s for m in sources for s in m.indeterminates()), key=Indeterminate.sort_key
        )
        if sym.name in max_orders
    }
    panel_orders = {
        panel: dict(sorted(table.items(), key=lambda kv: kv[0]))
        for panel, table in sorted(panel_orders.items(), key=lambda kv: rank.get(kv[0], len(rank)))
    }

    return AdequacySpec(
        utility=report.utility,
        error_policy=report.error_policy,
        summaries=summaries,
        conditions=tuple(conditions),
        max_orders=max_orders,
        panel_orders=panel_orders,
    )
