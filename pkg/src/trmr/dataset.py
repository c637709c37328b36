"""Corpus persistence: DROP-format import, canonical record files, statistics.

The canonical corpus file is line-delimited JSON sorted by id (passages,
then questions, then annotation records by question id), which keeps diffs
reviewable and exports byte-stable. Loading is strict: every stored span is
verified against its source text and referential integrity is enforced.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any

from .derivation import (
    Answer,
    DateAnswer,
    DerivationPlan,
    DerivationStep,
    NumberAnswer,
    SpanAnswer,
    StepInput,
    StepOutput,
)
from .grounding import (
    DateValue,
    GroundedItem,
    Grounding,
    GroundingEntry,
    NumberValue,
    ParsedValue,
    PercentValue,
    format_number,
    parse_number,
)
from .lang import Passage, Question, Span, SpanSource, TrmrError, TrmrTree


class SchemaError(TrmrError):
    """Input data does not match the expected shape; the message carries the path."""


class DuplicateIdError(TrmrError):
    """An id occurs more than once within its collection."""


class IntegrityError(TrmrError):
    """Stored offsets or references do not match the corpus texts."""


class RecordStatus(str, Enum):
    DRAFT = "draft"
    SUBMITTED = "submitted"
    IN_VALIDATION = "in_validation"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    NEEDS_REVISION = "needs_revision"


#: Legal workflow transitions; needs_revision reopens as a draft.
STATUS_TRANSITIONS: dict[RecordStatus, frozenset[RecordStatus]] = {
    RecordStatus.DRAFT: frozenset({RecordStatus.SUBMITTED}),
    RecordStatus.SUBMITTED: frozenset({RecordStatus.IN_VALIDATION}),
    RecordStatus.IN_VALIDATION: frozenset(
        {RecordStatus.ACCEPTED, RecordStatus.REJECTED, RecordStatus.NEEDS_REVISION}
    ),
    RecordStatus.ACCEPTED: frozenset(),
    RecordStatus.REJECTED: frozenset(),
    RecordStatus.NEEDS_REVISION: frozenset({RecordStatus.DRAFT}),
}


@dataclass(frozen=True)
class ValidationVerdict:
    record_id: str
    validator_id: str
    verdict: str  # "valid" | "invalid"
    note: str | None = None

    def __post_init__(self) -> None:
        if self.verdict not in ("valid", "invalid"):
            raise ValueError(f"verdict must be 'valid' or 'invalid', got {self.verdict!r}")


@dataclass
class AnnotationRecord:
    """One question's annotation bundle plus its workflow state."""

    id: str
    question_id: str
    annotator_id: str
    tree: TrmrTree
    grounding: Grounding
    plan: DerivationPlan | None = None
    status: RecordStatus = RecordStatus.DRAFT
    consistency: bool | None = None
    verdicts: tuple[ValidationVerdict, ...] = ()
    version: int = 0
    sampled_for_validation: bool = True


@dataclass
class Corpus:
    passages: dict[str, Passage] = field(default_factory=dict)
    questions: dict[str, Question] = field(default_factory=dict)
    records: dict[str, AnnotationRecord] = field(default_factory=dict)

    def validate_references(self) -> None:
        for q in self.questions.values():
            if q.passage_id not in self.passages:
                raise IntegrityError(f"question {q.id}: unknown passage {q.passage_id}")
        for r in self.records.values():
            if r.question_id not in self.questions:
                raise IntegrityError(f"record {r.id}: unknown question {r.question_id}")

    def passage_for(self, question: Question) -> Passage:
        return self.passages[question.passage_id]


# --- DROP import ------------------------------------------------------------

_MONTH_NAMES = {
    name: i
    for i, name in enumerate(
        "january february march april may june july august september october november december".split(),
        start=1,
    )
}


def _drop_month(value: str, path: str) -> int:
    v = value.strip().lower()
    if v in _MONTH_NAMES:
        return _MONTH_NAMES[v]
    if v.isdigit() and 1 <= int(v) <= 12:
        return int(v)
    raise SchemaError(f"{path}: unreadable month {value!r}")


def normalize_drop_answer(obj: Any, path: str) -> Answer:
    """Convert a DROP answer object (number | spans | date) to an Answer."""
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: answer must be an object")
    number = str(obj.get("number", "") or "").strip()
    spans = obj.get("spans") or []
    date = obj.get("date") or {}
    populated = [bool(number), bool(spans), any(str(v).strip() for v in date.values())]
    if sum(populated) == 0:
        raise SchemaError(f"{path}: answer has no populated variant")
    if sum(populated) > 1:
        raise SchemaError(f"{path}: answer populates more than one variant")
    if number:
        try:
            return NumberAnswer(Fraction(number.replace(",", "")))
        except (ValueError, ZeroDivisionError) as err:
            raise SchemaError(f"{path}: unreadable number {number!r}") from err
    if spans:
        if not all(isinstance(s, str) and s for s in spans):
            raise SchemaError(f"{path}: spans must be non-empty strings")
        return SpanAnswer(tuple(spans))
    year = str(date.get("year", "") or "").strip()
    month = str(date.get("month", "") or "").strip()
    day = str(date.get("day", "") or "").strip()
    return DateAnswer(
        int(year) if year else None,
        _drop_month(month, path) if month else None,
        int(day) if day else None,
    )


def import_drop(path: str | Path) -> Corpus:
    """Import a DROP-style file into a corpus with no annotation records."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must map passage ids to entries")
    corpus = Corpus()
    for passage_id, entry in data.items():
        if not isinstance(entry, dict) or not isinstance(entry.get("passage"), str) or not entry["passage"]:
            raise SchemaError(f"{passage_id}: entry needs a non-empty 'passage' text")
        if passage_id in corpus.passages:
            raise DuplicateIdError(f"duplicate passage id {passage_id}")
        corpus.passages[passage_id] = Passage(passage_id, entry["passage"])
        qa_pairs = entry.get("qa_pairs")
        if not isinstance(qa_pairs, list):
            raise SchemaError(f"{passage_id}: entry needs a 'qa_pairs' list")
        for i, qa in enumerate(qa_pairs):
            where = f"{passage_id}.qa_pairs[{i}]"
            if not isinstance(qa, dict):
                raise SchemaError(f"{where}: must be an object")
            query_id = qa.get("query_id")
            if not isinstance(query_id, str) or not query_id:
                raise SchemaError(f"{where}: missing query_id")
            if query_id in corpus.questions:
                raise DuplicateIdError(f"duplicate query_id {query_id}")
            question = qa.get("question")
            if not isinstance(question, str) or not question:
                raise SchemaError(f"{where}: missing question text")
            if "answer" not in qa:
                raise SchemaError(f"{where}: missing answer")
            answer = normalize_drop_answer(qa["answer"], f"{where}.answer")
            corpus.questions[query_id] = Question(query_id, passage_id, question, answer)
    return corpus


# --- canonical JSON codecs --------------------------------------------------


def encode_span(span: Span) -> dict:
    return {"start": span.start, "end": span.end, "text": span.text}


def decode_span(obj: Any, source: SpanSource, path: str) -> Span:
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: span must be an object")
    try:
        return Span(source, int(obj["start"]), int(obj["end"]), str(obj["text"]))
    except (KeyError, TypeError, ValueError) as err:
        raise SchemaError(f"{path}: bad span: {err}") from err


def encode_tree(tree: TrmrTree) -> dict:
    args = []
    for arg in tree.args:
        if isinstance(arg, TrmrTree):
            args.append({"kind": "op", "node": encode_tree(arg)})
        else:
            args.append({"kind": "span", **encode_span(arg)})
    return {"op": tree.op, "args": args}


def decode_tree(obj: Any, path: str = "tree") -> TrmrTree:
    if not isinstance(obj, dict) or "op" not in obj or not isinstance(obj.get("args"), list):
        raise SchemaError(f"{path}: tree node needs 'op' and 'args'")
    args: list[TrmrTree | Span] = []
    for i, arg in enumerate(obj["args"]):
        where = f"{path}.args[{i}]"
        if not isinstance(arg, dict) or "kind" not in arg:
            raise SchemaError(f"{where}: argument needs a 'kind'")
        if arg["kind"] == "op":
            args.append(decode_tree(arg.get("node"), where))
        elif arg["kind"] == "span":
            args.append(decode_span(arg, SpanSource.QUESTION, where))
        else:
            raise SchemaError(f"{where}: unknown argument kind {arg['kind']!r}")
    return TrmrTree(str(obj["op"]), tuple(args))


def encode_value(value: ParsedValue) -> dict:
    if isinstance(value, NumberValue):
        return {"kind": "number", "value": format_number(value.value), "unit": value.unit}
    if isinstance(value, PercentValue):
        return {"kind": "percent", "value": format_number(value.value)}
    return {"kind": "date", "year": value.year, "month": value.month, "day": value.day}


def decode_value(obj: Any, path: str) -> ParsedValue:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError(f"{path}: parsed value needs a 'kind'")
    try:
        if obj["kind"] == "number":
            return NumberValue(parse_number(obj["value"]), obj.get("unit"))
        if obj["kind"] == "percent":
            return PercentValue(parse_number(obj["value"]))
        if obj["kind"] == "date":
            return DateValue(
                int(obj["year"]),
                int(obj["month"]) if obj.get("month") is not None else None,
                int(obj["day"]) if obj.get("day") is not None else None,
            )
    except (KeyError, TypeError, ValueError) as err:
        raise SchemaError(f"{path}: bad parsed value: {err}") from err
    raise SchemaError(f"{path}: unknown value kind {obj['kind']!r}")


def encode_answer(answer: Answer) -> dict:
    if isinstance(answer, NumberAnswer):
        return {"kind": "number", "value": format_number(answer.value)}
    if isinstance(answer, SpanAnswer):
        return {"kind": "spans", "texts": list(answer.texts)}
    return {"kind": "date", "year": answer.year, "month": answer.month, "day": answer.day}


def decode_answer(obj: Any, path: str) -> Answer:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError(f"{path}: answer needs a 'kind'")
    try:
        if obj["kind"] == "number":
            return NumberAnswer(parse_number(obj["value"]))
        if obj["kind"] == "spans":
            return SpanAnswer(tuple(obj["texts"]))
        if obj["kind"] == "date":
            return DateAnswer(
                int(obj["year"]) if obj.get("year") is not None else None,
                int(obj["month"]) if obj.get("month") is not None else None,
                int(obj["day"]) if obj.get("day") is not None else None,
            )
    except (KeyError, TypeError, ValueError) as err:
        raise SchemaError(f"{path}: bad answer: {err}") from err
    raise SchemaError(f"{path}: unknown answer kind {obj['kind']!r}")


def encode_item(item: GroundedItem) -> dict:
    return {
        "value_span": encode_span(item.value_span),
        "parsed": encode_value(item.parsed) if item.parsed is not None else None,
        "key_span": encode_span(item.key_span) if item.key_span is not None else None,
    }


def decode_item(obj: Any, path: str) -> GroundedItem:
    if not isinstance(obj, dict) or "value_span" not in obj:
        raise SchemaError(f"{path}: grounded item needs a value_span")
    return GroundedItem(
        decode_span(obj["value_span"], SpanSource.PASSAGE, f"{path}.value_span"),
        decode_value(obj["parsed"], f"{path}.parsed") if obj.get("parsed") is not None else None,
        decode_span(obj["key_span"], SpanSource.PASSAGE, f"{path}.key_span")
        if obj.get("key_span") is not None
        else None,
    )


def encode_grounding(grounding: Grounding) -> list[dict]:
    return [
        {"path": list(entry.path), "slot": entry.slot, "items": [encode_item(i) for i in entry.items]}
        for entry in grounding.entries
    ]


def decode_grounding(obj: Any, path: str = "grounding") -> Grounding:
    if not isinstance(obj, list):
        raise SchemaError(f"{path}: grounding must be a list of entries")
    entries = []
    for i, entry in enumerate(obj):
        where = f"{path}[{i}]"
        if not isinstance(entry, dict) or "slot" not in entry or not isinstance(entry.get("items"), list):
            raise SchemaError(f"{where}: entry needs 'path', 'slot', and 'items'")
        entries.append(
            GroundingEntry(
                tuple(int(x) for x in entry.get("path", [])),
                str(entry["slot"]),
                tuple(decode_item(item, f"{where}.items[{j}]") for j, item in enumerate(entry["items"])),
            )
        )
    try:
        return Grounding(entries)
    except ValueError as err:
        raise SchemaError(f"{path}: {err}") from err


def encode_step_input(inp: StepInput) -> dict:
    out: dict[str, Any] = {"role": inp.role, "label": inp.label}
    if inp.step is not None:
        out["step"] = inp.step
    elif isinstance(inp.value, str):
        out["text"] = inp.value
    else:
        out["value"] = encode_value(inp.value)  # type: ignore[arg-type]
    return out


def decode_step_input(obj: Any, path: str) -> StepInput:
    if not isinstance(obj, dict) or "role" not in obj or "label" not in obj:
        raise SchemaError(f"{path}: step input needs 'role' and 'label'")
    role, label = str(obj["role"]), str(obj["label"])
    if "step" in obj and obj["step"] is not None:
        return StepInput(role, label, step=int(obj["step"]))
    if "text" in obj and obj["text"] is not None:
        return StepInput(role, label, value=str(obj["text"]))
    if "value" in obj and obj["value"] is not None:
        return StepInput(role, label, value=decode_value(obj["value"], f"{path}.value"))
    raise SchemaError(f"{path}: step input needs one of 'step', 'text', 'value'")


def encode_output(output: StepOutput) -> dict:
    if isinstance(output, tuple):
        return {"kind": "texts", "texts": list(output)}
    if isinstance(output, str):
        return {"kind": "text", "text": output}
    return {"kind": "value", "value": encode_value(output)}


def decode_output(obj: Any, path: str) -> StepOutput:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SchemaError(f"{path}: step output needs a 'kind'")
    if obj["kind"] == "texts":
        return tuple(str(t) for t in obj.get("texts", []))
    if obj["kind"] == "text":
        return str(obj["text"])
    if obj["kind"] == "value":
        return decode_value(obj["value"], f"{path}.value")
    raise SchemaError(f"{path}: unknown output kind {obj['kind']!r}")


def encode_plan(plan: DerivationPlan) -> dict:
    return {
        "steps": [
            {
                "op": step.op,
                "path": list(step.path),
                "inputs": [encode_step_input(i) for i in step.inputs],
                "output": encode_output(step.output),
                "rendered": step.rendered,
            }
            for step in plan.steps
        ],
        "final": encode_answer(plan.final),
        "warnings": list(plan.warnings),
    }


def decode_plan(obj: Any, path: str = "plan") -> DerivationPlan:
    if not isinstance(obj, dict) or not isinstance(obj.get("steps"), list) or "final" not in obj:
        raise SchemaError(f"{path}: plan needs 'steps' and 'final'")
    steps = []
    for i, step in enumerate(obj["steps"]):
        where = f"{path}.steps[{i}]"
        if not isinstance(step, dict) or "op" not in step:
            raise SchemaError(f"{where}: step needs an 'op'")
        steps.append(
            DerivationStep(
                str(step["op"]),
                tuple(int(x) for x in step.get("path", [])),
                tuple(decode_step_input(inp, f"{where}.inputs[{j}]") for j, inp in enumerate(step.get("inputs", []))),
                decode_output(step.get("output"), f"{where}.output"),
                str(step.get("rendered", "")),
            )
        )
    return DerivationPlan(
        tuple(steps),
        decode_answer(obj["final"], f"{path}.final"),
        tuple(str(w) for w in obj.get("warnings", [])),
    )


def encode_record(record: AnnotationRecord) -> dict:
    return {
        "id": record.id,
        "question_id": record.question_id,
        "annotator_id": record.annotator_id,
        "status": record.status.value,
        "consistency": record.consistency,
        "version": record.version,
        "sampled_for_validation": record.sampled_for_validation,
        "tree": encode_tree(record.tree),
        "grounding": encode_grounding(record.grounding),
        "plan": encode_plan(record.plan) if record.plan is not None else None,
        "verdicts": [
            {"validator_id": v.validator_id, "verdict": v.verdict, "note": v.note} for v in record.verdicts
        ],
    }


def decode_record(obj: Any, path: str = "record") -> AnnotationRecord:
    if not isinstance(obj, dict):
        raise SchemaError(f"{path}: record must be an object")
    for key in ("id", "question_id", "annotator_id", "tree", "grounding"):
        if key not in obj:
            raise SchemaError(f"{path}: record needs {key!r}")
    try:
        status = RecordStatus(obj.get("status", "draft"))
    except ValueError as err:
        raise SchemaError(f"{path}: unknown status {obj.get('status')!r}") from err
    record_id = str(obj["id"])
    verdicts = []
    for i, v in enumerate(obj.get("verdicts", [])):
        where = f"{path}.verdicts[{i}]"
        if not isinstance(v, dict) or "validator_id" not in v or "verdict" not in v:
            raise SchemaError(f"{where}: verdict needs 'validator_id' and 'verdict'")
        try:
            verdicts.append(
                ValidationVerdict(record_id, str(v["validator_id"]), str(v["verdict"]), v.get("note"))
            )
        except ValueError as err:
            raise SchemaError(f"{where}: {err}") from err
    return AnnotationRecord(
        id=record_id,
        question_id=str(obj["question_id"]),
        annotator_id=str(obj["annotator_id"]),
        tree=decode_tree(obj["tree"], f"{path}.tree"),
        grounding=decode_grounding(obj["grounding"], f"{path}.grounding"),
        plan=decode_plan(obj["plan"], f"{path}.plan") if obj.get("plan") is not None else None,
        status=status,
        consistency=obj.get("consistency"),
        verdicts=tuple(verdicts),
        version=int(obj.get("version", 0)),
        sampled_for_validation=bool(obj.get("sampled_for_validation", True)),
    )


# --- corpus export / load ---------------------------------------------------


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def export_corpus(corpus: Corpus, path: str | Path | None = None) -> str:
    """Serialize a corpus to the canonical line-delimited form; optionally write it."""
    lines = []
    for pid in sorted(corpus.passages):
        p = corpus.passages[pid]
        lines.append(_dump_line({"kind": "passage", "id": p.id, "text": p.text}))
    for qid in sorted(corpus.questions):
        q = corpus.questions[qid]
        lines.append(
            _dump_line(
                {
                    "kind": "question",
                    "id": q.id,
                    "passage_id": q.passage_id,
                    "text": q.text,
                    "answer": encode_answer(q.answer) if q.answer is not None else None,
                }
            )
        )
    for rid in sorted(corpus.records, key=lambda r: (corpus.records[r].question_id, r)):
        lines.append(_dump_line({"kind": "record", **encode_record(corpus.records[rid])}))
    content = "\n".join(lines) + ("\n" if lines else "")
    if path is not None:
        Path(path).write_text(content, encoding="utf-8")
    return content


def check_record_integrity(record: AnnotationRecord, question: Question, passage: Passage) -> None:
    """Verify that every stored span matches its source text exactly."""
    for leaf in record.tree.leaves():
        if leaf.end > len(question.text) or question.text[leaf.start:leaf.end] != leaf.text:
            raise IntegrityError(
                f"record {record.id}: tree span [{leaf.start}, {leaf.end}) does not match question text"
            )
    for span in record.grounding.spans():
        if span.end > len(passage.text) or passage.text[span.start:span.end] != span.text:
            raise IntegrityError(
                f"record {record.id}: grounded span [{span.start}, {span.end}) does not match passage text"
            )


def load_corpus(path: str | Path) -> Corpus:
    """Load a canonical corpus file, enforcing span and reference integrity."""
    corpus = Corpus()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        where = f"{path}:{lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as err:
            raise SchemaError(f"{where}: not valid JSON: {err}") from err
        kind = obj.get("kind")
        if kind == "passage":
            if obj["id"] in corpus.passages:
                raise DuplicateIdError(f"{where}: duplicate passage id {obj['id']}")
            corpus.passages[obj["id"]] = Passage(obj["id"], obj["text"])
        elif kind == "question":
            if obj["id"] in corpus.questions:
                raise DuplicateIdError(f"{where}: duplicate question id {obj['id']}")
            corpus.questions[obj["id"]] = Question(
                obj["id"],
                obj["passage_id"],
                obj["text"],
                decode_answer(obj["answer"], f"{where}.answer") if obj.get("answer") is not None else None,
            )
        elif kind == "record":
            record = decode_record(obj, where)
            if record.id in corpus.records:
                raise DuplicateIdError(f"{where}: duplicate record id {record.id}")
            corpus.records[record.id] = record
        else:
            raise SchemaError(f"{where}: unknown line kind {kind!r}")
    corpus.validate_references()
    for record in corpus.records.values():
        question = corpus.questions[record.question_id]
        check_record_integrity(record, question, corpus.passage_for(question))
    return corpus


# --- statistics -------------------------------------------------------------


@dataclass(frozen=True)
class OperatorStats:
    records: int
    accepted: int
    rejected: int
    pending: int
    inconsistent: int
    acceptance: float | None  # None when no record is decided


@dataclass(frozen=True)
class CorpusStats:
    records: int
    accepted: int
    rejected: int
    pending: int
    inconsistent: int
    acceptance: float | None
    consistency_flag_rate: float | None
    per_operator: dict[str, OperatorStats]


def _bucket(records: list[AnnotationRecord]) -> tuple[int, int, int, int, float | None]:
    accepted = sum(1 for r in records if r.status is RecordStatus.ACCEPTED)
    rejected = sum(1 for r in records if r.status is RecordStatus.REJECTED)
    pending = len(records) - accepted - rejected
    decided = accepted + rejected
    acceptance = accepted / decided if decided else None
    return accepted, rejected, pending, sum(1 for r in records if r.consistency is False), acceptance


def compute_stats(corpus: Corpus) -> CorpusStats:
    """Per-operator record counts, acceptance under the quorum outcomes, and
    consistency-flag rates. Rates are None (undefined) on empty buckets."""
    records = list(corpus.records.values())
    by_op: dict[str, list[AnnotationRecord]] = {}
    for r in records:
        by_op.setdefault(r.tree.op, []).append(r)
    per_operator = {}
    for op in sorted(by_op):
        accepted, rejected, pending, inconsistent, acceptance = _bucket(by_op[op])
        per_operator[op] = OperatorStats(len(by_op[op]), accepted, rejected, pending, inconsistent, acceptance)
    accepted, rejected, pending, inconsistent, acceptance = _bucket(records)
    flagged = [r for r in records if r.consistency is not None]
    rate = (sum(1 for r in flagged if r.consistency is False) / len(flagged)) if flagged else None
    return CorpusStats(
        len(records), accepted, rejected, pending, inconsistent, acceptance, rate, per_operator
    )


def stats_to_json(stats: CorpusStats, by_operator: bool = True) -> dict:
    out: dict[str, Any] = {
        "records": stats.records,
        "accepted": stats.accepted,
        "rejected": stats.rejected,
        "pending": stats.pending,
        "inconsistent": stats.inconsistent,
        "acceptance": stats.acceptance,
        "consistency_flag_rate": stats.consistency_flag_rate,
    }
    if by_operator:
        out["per_operator"] = {
            op: {
                "records": s.records,
                "accepted": s.accepted,
                "rejected": s.rejected,
                "pending": s.pending,
                "inconsistent": s.inconsistent,
                "acceptance": s.acceptance,
            }
            for op, s in stats.per_operator.items()
        }
    return out
