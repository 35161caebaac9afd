"""Time-sliced causal fault diagnosis over expert knowledge bases.

Public surface: the knowledge-base model (parse/serialize/validate/compile),
the signal gateway (readings → evidence snapshots), the inference engine
(slices, cubic graphs, expansion, ranking, session, prediction), and DOT
export.
"""

from .algebra import (
    ArcLiteral,
    EventExpression,
    Product,
    RootLiteral,
    conjoin,
    eval_expression,
)
from .dot import export_dot
from .engine import (
    CubicGraph,
    DiagnosisReport,
    DiagnosisSession,
    HypothesisResult,
    LinkEdge,
    SliceGraph,
    check_valid,
    expand,
    merge_cubic,
    predict,
    rank_hypotheses,
    simplify,
)
from .errors import (
    ConflictingDefinitionError,
    CycleLimitError,
    DucgError,
    DuplicateVariableError,
    EmptyHypothesisSpaceError,
    InconsistentNormalRowError,
    InvalidKnowledgeBaseError,
    KBParseError,
    KBSyntaxError,
    MalformedLineError,
    MissingParameterError,
    NoAbnormalEvidenceError,
    OutOfRangeError,
    RootMismatchError,
    UnknownMeasurePointError,
    UnknownReferenceError,
)
from .kb import (
    CausalArc,
    Condition,
    ConditionLiteral,
    KnowledgeBase,
    StateDef,
    SubDUCG,
    Variable,
    Violation,
    compile_kb,
    complete_normal_rows,
    completed_intensity,
    decompose,
    parse_kb,
    serialize_kb,
    validate_kb,
)
from .signals import (
    EvidenceSnapshot,
    Reading,
    ingest_tick,
    iter_reading_groups,
    map_reading,
    parse_signal_record,
)

__version__ = "0.1.0"

__all__ = [
    "ArcLiteral",
    "CausalArc",
    "Condition",
    "ConditionLiteral",
    "ConflictingDefinitionError",
    "CubicGraph",
    "CycleLimitError",
    "DiagnosisReport",
    "DiagnosisSession",
    "DucgError",
    "DuplicateVariableError",
    "EmptyHypothesisSpaceError",
    "EventExpression",
    "EvidenceSnapshot",
    "HypothesisResult",
    "InconsistentNormalRowError",
    "InvalidKnowledgeBaseError",
    "KBParseError",
    "KBSyntaxError",
    "KnowledgeBase",
    "LinkEdge",
    "MalformedLineError",
    "MissingParameterError",
    "NoAbnormalEvidenceError",
    "OutOfRangeError",
    "Product",
    "Reading",
    "RootLiteral",
    "RootMismatchError",
    "SliceGraph",
    "StateDef",
    "SubDUCG",
    "UnknownMeasurePointError",
    "UnknownReferenceError",
    "Variable",
    "Violation",
    "check_valid",
    "compile_kb",
    "complete_normal_rows",
    "completed_intensity",
    "conjoin",
    "decompose",
    "eval_expression",
    "expand",
    "export_dot",
    "ingest_tick",
    "iter_reading_groups",
    "main",
    "map_reading",
    "merge_cubic",
    "parse_kb",
    "parse_signal_record",
    "predict",
    "rank_hypotheses",
    "serialize_kb",
    "simplify",
    "validate_kb",
]

from .cli import main  # noqa: E402  (CLI pulls in everything above)
