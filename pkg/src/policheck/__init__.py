"""Compliance checking for data-usage policies.

A policy (a union of conjunctive concepts over names, existential
restrictions, and integer-interval restrictions) complies with a consent
policy when it is subsumed by it, relative to a small structural knowledge
base and a vocabulary ontology queried as an oracle.  The package provides
the decision engine, an independent reference checker used as ground truth,
parsers for the on-disk formats, synthetic benchmark generators, and a CLI.
"""

from .engine import (
    BatchResult,
    BatchSummary,
    CheckStats,
    Engine,
    EngineConfig,
    EngineStats,
    build_engine,
)
from .errors import (
    GenerationError,
    OracleFailure,
    ParseError,
    PolicheckError,
    ResourceLimitError,
    SignatureViolation,
)
from .model import (
    BOT,
    Bottom,
    Conj,
    Exists,
    FullConcept,
    Interval,
    IntervalAtom,
    KBPartition,
    MainKB,
    Name,
    PLSOInstance,
    Signature,
    SimpleConcept,
    ViolationReport,
    conj,
    conjuncts,
    merge_partition,
    partition,
    signature,
    union,
    validate_instance,
)
from .normalize import (
    NormalizationStats,
    is_interval_safe,
    normalize,
    normalize_full,
    split_intervals,
)
from .oracle import (
    BruteForceOracle,
    BuiltinOracle,
    ExternalOracle,
    HornAxiom,
    OracleHandle,
    OracleOntology,
    OracleQuery,
    QueryCache,
    brute_force_query,
    saturate,
)
from .refcheck import PointedModel, build_canonical, eval_concept, ref_decide
from .sts import sts_check
from .syntax import (
    parse_main_kb,
    parse_oracle_ontology,
    parse_policy,
    serialize_main_kb,
    serialize_oracle_ontology,
    serialize_policy,
)

__version__ = "0.1.0"
