"""Toolchain for three-part text reasoning annotations.

Parse operator expressions over question spans, ground their arguments in
passage spans, derive and execute answers, manage the annotation workflow
with quorum validation, and score answer and reasoning-process predictions.
"""

from .lang import (
    ArityError,
    KindMismatchError,
    Passage,
    Question,
    REGISTRY,
    ResultKind,
    Span,
    SpanNotInQuestionError,
    SpanSource,
    TrmrError,
    TrmrSyntaxError,
    TrmrTree,
    UnknownOperatorError,
    parse_trmr,
    serialize_trmr,
    trees_equal,
    typecheck,
)
from .grounding import (
    Condition,
    DateValue,
    GroundedItem,
    Grounding,
    GroundingEntry,
    NumberValue,
    ParsedValue,
    PercentValue,
    Polarity,
    UnknownSuperlativeError,
    UnparseableConditionError,
    UnparseableValueError,
    ValueKind,
    extract_value,
    locate_occurrences,
    parse_condition,
    span_at,
    superlative_polarity,
)
from .derivation import (
    AmbiguousDateError,
    AmbiguousSelectionError,
    Answer,
    DateAnswer,
    DerivationError,
    DerivationPlan,
    DerivationStep,
    MissingSlotError,
    NumberAnswer,
    SpanAnswer,
    StepInput,
    UnitMismatchError,
    auto_derive,
    execute,
    reexecute,
    required_slots,
)
from .dataset import (
    AnnotationRecord,
    Corpus,
    DuplicateIdError,
    IntegrityError,
    RecordStatus,
    SchemaError,
    ValidationVerdict,
    compute_stats,
    export_corpus,
    import_drop,
    load_corpus,
)
from .scoring import Metrics, Prediction, QuestionMismatchError, ScoreRow, score_corpus, score_prediction
from .service import (
    AnnotationStore,
    Issue,
    ServiceConfig,
    WorkerProfile,
    aggregate_votes,
    validate_annotation,
)

__version__ = "0.1.0"
