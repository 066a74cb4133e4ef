"""Expected-utility compiler and scoring engine for panel-distributed decision models."""

from importlib import resources

from .ceu import (
    CeuReport,
    build_ceu,
    build_ceu_general,
    compile_ceu,
    error_moment,
    expand_utility,
    raise_expansion,
    reduce_errors,
    tuple_expansion,
)
from .errors import (
    CycleError,
    EngineError,
    MissingSummaryError,
    MissingValueError,
    NegativeVarianceError,
    NotLinearError,
    OwnershipError,
    SchemaError,
    SelfReferenceError,
)
from .evaluate import (
    ScoreBoard,
    UtilityNormalization,
    attribute_ranges,
    gaussian_moment,
    mc_oracle,
    normalize_utility,
    rank_policies,
    score,
)
from .model import (
    Dag,
    MomentTable,
    SemModel,
    load_model,
    loads_model,
    parse_model,
    to_document,
    validate_topology,
)
from .paths import (
    RootedPath,
    conditional_mean,
    enumerate_rooted_paths,
    expand_variable,
    expand_variable_general,
)
from .poly import Indeterminate, Kind, Monomial, Polynomial
from .separability import (
    AdequacySpec,
    IndependenceCondition,
    PanelFactor,
    SummaryRequirement,
    derive_adequacy,
    max_orders,
    partition_by_panel,
)

__version__ = "0.1.0"


def bundled_model_path(name: str = "food_security") -> str:
    """Path of a bundled example model document."""
    return str(resources.files("paneleu.data").joinpath(f"{name}.json"))
