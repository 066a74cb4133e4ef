"""Report construction and rendering shared by the CLI and the service.

Every report is first built as a plain dict with a stable key order and a
``version`` field; the JSON form is exactly ``json.dumps(report, indent=2)``
plus a trailing newline, so CLI output and service responses are
byte-identical.  The table form renders the same dict as aligned text.
"""

from __future__ import annotations

import json
from typing import Any

from .ceu import CeuReport, compile_ceu
from .errors import SchemaError
from .evaluate import (
    DEFAULT_SPREAD,
    OracleEstimate,
    ScoreBoard,
    UtilityNormalization,
    mc_oracle,
    normalize_utility,
    rank_policies,
    score,
)
from .model import MomentTable, SemModel, validate_topology
from .paths import enumerate_rooted_paths
from .separability import AdequacySpec, derive_adequacy

VERSION = 1


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def _rational(value) -> str:
    return str(value)


def make_validate_report(model: SemModel) -> dict:
    diagnostics = validate_topology(model)
    return {
        "version": VERSION,
        "kind": "validate",
        "valid": not diagnostics,
        "diagnostics": diagnostics,
    }


def make_paths_report(model: SemModel) -> dict:
    vertices: dict[str, Any] = {}
    for v in model.dag.vertices:
        rows = []
        for path in enumerate_rooted_paths(model.dag, v):
            rows.append({"path": path.text(), "monomial": path.monomial().text()})
        vertices[str(v)] = rows
    return {"version": VERSION, "kind": "paths", "vertices": vertices}


def _compiled(model: SemModel, utility: str | None, error_policy: str, provenance: bool = False) -> CeuReport:
    return compile_ceu(model, utility=utility, error_policy=error_policy, provenance=provenance)


def make_compile_report(
    model: SemModel,
    utility: str | None = None,
    error_policy: str = "truncate",
    policy: str | None = None,
    provenance: bool = False,
) -> dict:
    report = _compiled(model, utility, error_policy, provenance)
    master = []
    for term in report.master:
        row: dict[str, Any] = {
            "coefficient": _rational(term.coefficient),
            "symbols": list(term.symbols),
            "monomial": term.monomial.text(),
            "text": term.text(),
        }
        if provenance and report.provenance is not None:
            tracked = report.provenance.get((term.a, term.monomial))
            if tracked is not None:
                row["tuples"] = [
                    {
                        "paths": [p.text() for p in t.paths],
                        "permutations": t.permutations,
                    }
                    for t in tracked.tuples
                ]
        master.append(row)
    policies = [policy] if policy else list(model.policies)
    numeric: dict[str, Any] = {}
    for pid in policies:
        if pid not in report.per_policy:
            raise SchemaError(f"unknown policy {pid!r}")
        numeric[pid] = [
            {"coefficient": _rational(coeff), "monomial": mono.text()}
            for mono, coeff in report.per_policy[pid].terms()
        ]
    return {
        "version": VERSION,
        "kind": "compile",
        "utility": report.utility,
        "error_policy": report.error_policy,
        "monomials": report.monomial_count,
        "master": master,
        "policies": numeric,
    }


def _conditions_rows(adequacy: AdequacySpec) -> list[dict]:
    return [
        {
            "monomial": c.monomial.text(sep=" "),
            "factors": [
                {"panel": f.panel, "monomial": f.monomial.text(sep=" ")} for f in c.factors
            ],
            "sources": list(c.source_terms),
            "text": c.text(),
        }
        for c in adequacy.conditions
    ]


def make_independences_report(
    model: SemModel, utility: str | None = None, error_policy: str = "truncate"
) -> dict:
    adequacy = derive_adequacy(_compiled(model, utility, error_policy))
    return {
        "version": VERSION,
        "kind": "independences",
        "utility": adequacy.utility,
        "error_policy": adequacy.error_policy,
        "assumes_quasi_independence": adequacy.assumes_quasi_independence,
        "count": len(adequacy.conditions),
        "conditions": _conditions_rows(adequacy),
    }


def _summaries_rows(adequacy: AdequacySpec) -> list[dict]:
    return [
        {
            "panel": s.panel,
            "monomial": s.monomial.text(sep=" "),
            "policies": list(s.policies),
        }
        for s in adequacy.summaries
    ]


def make_summaries_report(
    model: SemModel, utility: str | None = None, error_policy: str = "truncate"
) -> dict:
    adequacy = derive_adequacy(_compiled(model, utility, error_policy))
    return {
        "version": VERSION,
        "kind": "summaries",
        "utility": adequacy.utility,
        "error_policy": adequacy.error_policy,
        "count": len(adequacy.summaries),
        "summaries": _summaries_rows(adequacy),
        "max_orders": adequacy.max_orders,
        "panel_orders": adequacy.panel_orders,
    }


def make_adequacy_report(
    model: SemModel, utility: str | None = None, error_policy: str = "truncate"
) -> dict:
    """Composite report served by the adequacy endpoint."""
    return {
        "version": VERSION,
        "kind": "adequacy",
        "independences": make_independences_report(model, utility, error_policy),
        "summaries": make_summaries_report(model, utility, error_policy),
    }


def _board_dict(board: ScoreBoard, kind: str) -> dict:
    return {
        "version": VERSION,
        "kind": kind,
        "utility": board.utility,
        "error_policy": board.error_policy,
        "closure": board.closure,
        "scores": {policy: board.values[policy] for policy in sorted(board.values)},
        "ranking": list(board.ranking),
        "ties": [list(group) for group in board.ties],
    }


def _normalized_section(
    model: SemModel,
    utility: str | None,
    error_policy: str,
    closure: str,
    moments: MomentTable | None,
    spread: float,
) -> dict | None:
    """Scores under the recorded [0, 1]-marginal normalization convention.

    Ranges derive from the document's own moment table so that what-if
    overrides re-score a fixed utility instead of moving the yardstick.
    """
    if model.moments.mode != "mean_variance":
        return None
    normalization: UtilityNormalization = normalize_utility(model, utility, spread)
    derived = model.with_utility(normalization.spec)
    report = compile_ceu(derived, normalization.spec.name, error_policy=error_policy)
    adequacy = derive_adequacy(report)
    board = score(report, adequacy, moments=moments, closure=closure)
    values = {
        policy: board.values[policy] + normalization.constant[policy]
        for policy in model.policies
    }
    ranking, ties = rank_policies(values)
    return {
        "spread": normalization.spread,
        "scores": {policy: values[policy] for policy in sorted(values)},
        "ranking": list(ranking),
        "ties": [list(group) for group in ties],
        "constant": {p: normalization.constant[p] for p in sorted(normalization.constant)},
        "ranges": {
            str(v): {"low": m.low, "high": m.high, "scale": m.scale, "shift": m.shift}
            for v, m in sorted(normalization.marginals.items())
        },
    }


def make_score_report(
    model: SemModel,
    utility: str | None = None,
    error_policy: str = "truncate",
    closure: str = "gaussian",
    moments: MomentTable | None = None,
    kind: str = "score",
    spread: float = DEFAULT_SPREAD,
) -> dict:
    report = _compiled(model, utility, error_policy)
    adequacy = derive_adequacy(report)
    board = score(report, adequacy, moments=moments, closure=closure)
    out = _board_dict(board, kind)
    normalized = _normalized_section(model, utility, error_policy, closure, moments, spread)
    if normalized is not None:
        out["normalized"] = normalized
    # The headline ordering: normalized when the convention is available
    # (multilinear scores are only comparable on the [0,1] scale), else raw.
    out["recommendation"] = normalized["ranking"] if normalized else out["ranking"]
    return out


def make_oracle_report(
    model: SemModel,
    utility: str | None = None,
    policy: str | None = None,
    samples: int = 100_000,
    seed: int = 0,
    spread: float = DEFAULT_SPREAD,
) -> dict:
    policies = [policy] if policy else list(model.policies)
    normalization = (
        normalize_utility(model, utility, spread)
        if model.moments.mode == "mean_variance"
        else None
    )
    estimates: dict[str, Any] = {}
    for pid in policies:
        result: OracleEstimate = mc_oracle(model, pid, samples=samples, seed=seed, utility=utility)
        row: dict[str, Any] = {"estimate": result.estimate, "stderr": result.stderr}
        if normalization is not None:
            scaled = mc_oracle(
                model, pid, samples=samples, seed=seed, utility=utility,
                normalization=normalization,
            )
            row["normalized"] = {"estimate": scaled.estimate, "stderr": scaled.stderr}
        estimates[pid] = row
    spec = model.utility(utility)
    return {
        "version": VERSION,
        "kind": "oracle",
        "utility": spec.name,
        "samples": samples,
        "seed": seed,
        "estimates": estimates,
    }


def render_text(report: dict) -> str:
    """Human-readable rendering of a report dict."""
    kind = report.get("kind")
    lines: list[str] = []
    if kind == "validate":
        if report["valid"]:
            return ""
        return "\n".join(report["diagnostics"]) + "\n"
    if kind == "paths":
        for vertex, rows in report["vertices"].items():
            lines.append(f"vertex {vertex}:")
            for row in rows:
                lines.append(f"  {row['path']} -> {row['monomial']}")
        return "\n".join(lines) + "\n"
    if kind == "compile":
        lines.append(f"utility: {report['utility']}")
        lines.append(f"error policy: {report['error_policy']}")
        lines.append(f"monomials: {report['monomials']}")
        for row in report["master"]:
            lines.append(row["text"])
            for t in row.get("tuples", []):
                lines.append(f"    {t['permutations']} x ({', '.join(t['paths'])})")
        for policy, rows in report["policies"].items():
            lines.append(f"policy {policy}:")
            for row in rows:
                coeff = row["coefficient"]
                prefix = "" if coeff == "1" else f"{coeff} * "
                lines.append(f"  {prefix}{row['monomial']}")
        return "\n".join(lines) + "\n"
    if kind == "independences":
        for row in report["conditions"]:
            lines.append(row["text"])
        return "\n".join(lines) + "\n" if lines else ""
    if kind == "summaries":
        for row in report["summaries"]:
            policies = ", ".join(row["policies"])
            lines.append(f"{row['panel']}: E({row['monomial']}) [{policies}]")
        return "\n".join(lines) + "\n" if lines else ""
    if kind == "adequacy":
        text = render_text(report["summaries"])
        text += render_text(report["independences"])
        return text
    if kind in ("score", "rank"):
        lines.append(f"utility: {report['utility']}")
        lines.append(f"error policy: {report['error_policy']}")
        lines.append(f"closure: {report['closure']}")
        normalized = report.get("normalized")
        if kind == "rank":
            headline = normalized["scores"] if normalized else report["scores"]
            for position, policy in enumerate(report["recommendation"], start=1):
                lines.append(f"{position}. {policy}  {headline[policy]!r}")
            if normalized:
                lines.append("(normalized scores; raw expected utilities below)")
                for policy in report["scores"]:
                    lines.append(f"  {policy}: {report['scores'][policy]!r}")
                lines.append("  raw ranking: " + " > ".join(report["ranking"]))
        else:
            for policy in report["scores"]:
                lines.append(f"{policy}: {report['scores'][policy]!r}")
            lines.append("ranking: " + " > ".join(report["ranking"]))
            for group in report["ties"]:
                lines.append("tie: " + " = ".join(group))
            if normalized:
                lines.append(
                    f"normalized (marginals on [0,1], spread {normalized['spread']!r}):"
                )
                for policy in normalized["scores"]:
                    lines.append(f"  {policy}: {normalized['scores'][policy]!r}")
                lines.append("  ranking: " + " > ".join(normalized["ranking"]))
                for group in normalized["ties"]:
                    lines.append("  tie: " + " = ".join(group))
        return "\n".join(lines) + "\n"
    if kind == "oracle":
        lines.append(f"utility: {report['utility']}")
        lines.append(f"samples: {report['samples']}")
        lines.append(f"seed: {report['seed']}")
        for policy, row in report["estimates"].items():
            lines.append(f"{policy}: {row['estimate']!r} +/- {row['stderr']!r}")
            if "normalized" in row:
                n = row["normalized"]
                lines.append(f"  normalized: {n['estimate']!r} +/- {n['stderr']!r}")
        return "\n".join(lines) + "\n"
    return to_json(report)
