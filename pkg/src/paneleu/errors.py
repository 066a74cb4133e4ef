"""Typed errors shared across the engine, each mapped to a CLI exit code."""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all errors raised by the engine."""

    exit_code = 1


class SchemaError(EngineError):
    """The model document is malformed or violates the document schema."""

    exit_code = 3


class CycleError(EngineError):
    """The declared edges violate the acyclic / topological-order requirement."""

    exit_code = 4


class OwnershipError(EngineError):
    """A symbol cannot be resolved to exactly one owning panel."""

    exit_code = 5


class MissingValueError(EngineError):
    """A per-policy table lacks a value a declared component requires."""

    exit_code = 6


class NotLinearError(EngineError):
    """An operation restricted to linear structural equations met a polynomial one."""

    exit_code = 7


class SelfReferenceError(EngineError):
    """A substitution replacement contains the symbol being substituted."""

    exit_code = 8


class MissingSummaryError(EngineError):
    """A required panel summary cannot be resolved from the moment table."""

    exit_code = 9

    def __init__(self, panel: str, monomial: str, policy: str, detail: str = ""):
        self.panel = panel
        self.monomial = monomial
        self.policy = policy
        msg = f"panel {panel}: summary E({monomial}) unresolved for policy {policy}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NegativeVarianceError(EngineError):
    """A variance-like quantity is negative."""

    exit_code = 10
