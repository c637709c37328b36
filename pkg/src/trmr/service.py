"""Workflow backend for three-step annotation: tasks, validation, quorum, QC.

State is an in-memory corpus plus worker profiles, mutated only under a lock
and persisted as an append-only event log (submissions, verdicts, status
changes) that replays to the same state. Task assignment is atomic: no two
annotators receive the same open question, and a worker never validates
their own record.
"""

from __future__ import annotations

import json
import random
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

from .dataset import (
    AnnotationRecord,
    Corpus,
    RecordStatus,
    STATUS_TRANSITIONS,
    ValidationVerdict,
    decode_grounding,
    decode_plan,
    decode_record,
    decode_tree,
    encode_answer,
    encode_plan,
    encode_record,
)
from .derivation import (
    DerivationError,
    DerivationPlan,
    auto_derive,
    concrete_slots,
    execute,
    reexecute,
    required_slots,
)
from .grounding import Grounding, UnparseableValueError
from .lang import (
    KindMismatchError,
    Passage,
    Question,
    TrmrError,
    TrmrTree,
    typecheck,
)
from .scoring import answers_match


class UnknownWorkerError(TrmrError):
    pass


class NotQualifiedError(TrmrError):
    pass


class NoTasksAvailableError(TrmrError):
    pass


class DuplicateValidatorError(TrmrError):
    pass


class SelfValidationError(TrmrError):
    pass


class VersionConflictError(TrmrError):
    pass


class InvalidTransitionError(TrmrError):
    pass


class SubmissionBlockedError(TrmrError):
    """Submission refused because structural validation rules failed."""

    def __init__(self, issues: list["Issue"]):
        self.issues = issues
        super().__init__("; ".join(f"{i.rule}: {i.message}" for i in issues))


class WorkerRole(str, Enum):
    ANNOTATOR = "annotator"
    VALIDATOR = "validator"


class WorkerStatus(str, Enum):
    TRAINING = "training"
    QUALIFIED = "qualified"
    RETRAINING = "retraining"


@dataclass
class WorkerProfile:
    worker_id: str
    role: WorkerRole
    qualification_score: float = 0.0
    status: WorkerStatus = WorkerStatus.TRAINING


@dataclass(frozen=True)
class Issue:
    """One validation finding; issues are data, not failures."""

    rule: str  # V1..V5
    message: str
    path: tuple[int, ...] | None = None
    slot: str | None = None


def qualification_outcome(test_results: list[bool], theta: float) -> tuple[float, WorkerStatus]:
    """Pass fraction and the resulting status; the threshold is inclusive."""
    score = (sum(1 for r in test_results if r) / len(test_results)) if test_results else 0.0
    status = WorkerStatus.QUALIFIED if score >= theta else WorkerStatus.RETRAINING
    return score, status


def aggregate_votes(
    verdicts: list[ValidationVerdict] | tuple[ValidationVerdict, ...],
    vote_target: int = 3,
    majority: int = 2,
    early_accept: bool = False,
) -> str:
    """Quorum decision over one record's verdicts: accepted, rejected, or pending.

    A pure function of the verdict multiset. With the defaults, a record is
    accepted iff at least 2 of 3 validators marked it valid; early
    termination at a reached majority is off by default so that collected
    statistics reflect the full three-vote protocol.
    """
    seen: set[str] = set()
    record_ids = {v.record_id for v in verdicts}
    if len(record_ids) > 1:
        raise ValueError(f"verdicts reference multiple records: {sorted(record_ids)}")
    valid = invalid = 0
    for verdict in verdicts:
        if verdict.validator_id in seen:
            raise DuplicateValidatorError(f"validator {verdict.validator_id} voted more than once")
        seen.add(verdict.validator_id)
        if verdict.verdict == "valid":
            valid += 1
        else:
            invalid += 1
    if early_accept:
        if valid >= majority:
            return "accepted"
        if invalid >= majority:
            return "rejected"
    if len(verdicts) < vote_target:
        return "pending"
    if valid >= majority:
        return "accepted"
    if invalid >= majority:
        return "rejected"
    return "pending"


#: Rules whose failure blocks acceptance; a reproducibility mismatch (V4) is
#: recorded as a consistency flag instead.
HARD_RULES = frozenset({"V1", "V2", "V3", "V5"})


def validate_annotation(record: AnnotationRecord, question: Question, passage: Passage) -> list[Issue]:
    """Apply the annotation validation rules; an empty list means all pass.

    V1 tree leaves match the question at their offsets; V2 grounded spans
    match the passage; V3 the tree typechecks and the grounding addresses
    real nodes and slots; V4 re-executing the derivation reproduces the gold
    answer; V5 every required slot is grounded.
    """
    issues: list[Issue] = []
    for leaf in record.tree.leaves():
        if leaf.end > len(question.text) or question.text[leaf.start:leaf.end] != leaf.text:
            issues.append(
                Issue("V1", f"tree span [{leaf.start}, {leaf.end}) does not match the question text {leaf.text!r}")
            )
    for span in record.grounding.spans():
        if span.end > len(passage.text) or passage.text[span.start:span.end] != span.text:
            issues.append(
                Issue("V2", f"grounded span [{span.start}, {span.end}) does not match the passage text {span.text!r}")
            )
    try:
        typecheck(record.tree)
    except KindMismatchError as err:
        issues.append(Issue("V3", str(err)))
    slot_names: dict[tuple[int, ...], set[str]] = {}
    for path, node in record.tree.walk():
        slot_names[path] = {spec.name for spec in concrete_slots(node)}
    for entry in record.grounding.entries:
        known = slot_names.get(entry.path)
        if known is None:
            issues.append(Issue("V3", f"grounding addresses a nonexistent node {list(entry.path)}", entry.path))
        elif entry.slot not in known:
            issues.append(
                Issue("V3", f"operator at {list(entry.path)} has no slot {entry.slot!r}", entry.path, entry.slot)
            )
    for path, slot, _kind in required_slots(record.tree):
        if not record.grounding.get(path, slot):
            issues.append(Issue("V5", f"required slot {slot!r} is empty", path, slot))
    if question.answer is not None:
        if record.plan is None:
            issues.append(Issue("V4", "record has no derivation to check against the gold answer"))
        else:
            try:
                derived = execute(record.plan)
            except (DerivationError, UnparseableValueError, TrmrError) as err:
                issues.append(Issue("V4", f"derivation failed to execute: {err}"))
            else:
                if not answers_match(derived, question.answer):
                    issues.append(Issue("V4", "executing the derivation does not reproduce the gold answer"))
    order = {"V1": 1, "V2": 2, "V3": 3, "V4": 4, "V5": 5}
    issues.sort(key=lambda i: order[i.rule])
    return issues


def issue_to_json(issue: Issue) -> dict:
    return {
        "rule": issue.rule,
        "message": issue.message,
        "path": list(issue.path) if issue.path is not None else None,
        "slot": issue.slot,
    }


@dataclass(frozen=True)
class ServiceConfig:
    theta: float = 0.8
    sample_rate: float = 1.0
    vote_target: int = 3
    majority: int = 2
    early_accept: bool = False
    gold_visible_to_validators: bool = True
    seed: int | None = None


class AnnotationStore:
    """Mutable workflow state over a corpus, with event-log persistence."""

    def __init__(self, corpus: Corpus, config: ServiceConfig = ServiceConfig(), log_path: str | Path | None = None):
        self.corpus = corpus
        self.config = config
        self.workers: dict[str, WorkerProfile] = {}
        self.assignments: dict[str, str] = {}  # question_id -> annotator_id
        self._lock = threading.RLock()
        self._rng = random.Random(config.seed)
        self._log_path = Path(log_path) if log_path is not None else None
        self._replaying = False
        if self._log_path is not None and self._log_path.exists():
            self._replay()

    # -- persistence ---------------------------------------------------------

    def _log(self, event: dict[str, Any]) -> None:
        if self._replaying or self._log_path is None:
            return
        with self._log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")

    def _replay(self) -> None:
        assert self._log_path is not None
        self._replaying = True
        try:
            for line in self._log_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                event = json.loads(line)
                kind = event["event"]
                if kind == "worker_registered":
                    self.workers[event["worker_id"]] = WorkerProfile(
                        event["worker_id"], WorkerRole(event["role"])
                    )
                elif kind == "qualification_updated":
                    worker = self.workers[event["worker_id"]]
                    worker.qualification_score = float(event["score"])
                    worker.status = WorkerStatus(event["status"])
                elif kind == "task_assigned":
                    self.assignments[event["question_id"]] = event["worker_id"]
                elif kind == "record_saved":
                    record = decode_record(event["record"])
                    self.corpus.records[record.id] = record
                elif kind == "verdict_recorded":
                    record = self.corpus.records[event["record_id"]]
                    record.verdicts = record.verdicts + (
                        ValidationVerdict(
                            event["record_id"], event["validator_id"], event["verdict"], event.get("note")
                        ),
                    )
                elif kind == "status_changed":
                    record = self.corpus.records[event["record_id"]]
                    record.status = RecordStatus(event["status"])
                    record.consistency = event.get("consistency")
        finally:
            self._replaying = False

    # -- workers -------------------------------------------------------------

    def register_worker(self, worker_id: str, role: str) -> WorkerProfile:
        with self._lock:
            if worker_id in self.workers:
                raise VersionConflictError(f"worker {worker_id} already registered")
            profile = WorkerProfile(worker_id, WorkerRole(role))
            self.workers[worker_id] = profile
            self._log({"event": "worker_registered", "worker_id": worker_id, "role": profile.role.value})
            return profile

    def update_qualification(self, worker_id: str, test_results: list[bool]) -> WorkerProfile:
        with self._lock:
            profile = self.workers.get(worker_id)
            if profile is None:
                raise UnknownWorkerError(f"unknown worker {worker_id}")
            score, status = qualification_outcome(test_results, self.config.theta)
            profile.qualification_score = score
            profile.status = status
            self._log(
                {
                    "event": "qualification_updated",
                    "worker_id": worker_id,
                    "score": score,
                    "status": status.value,
                }
            )
            return profile

    def _require_qualified(self, worker_id: str) -> WorkerProfile:
        profile = self.workers.get(worker_id)
        if profile is None:
            raise UnknownWorkerError(f"unknown worker {worker_id}")
        if profile.status is not WorkerStatus.QUALIFIED:
            raise NotQualifiedError(f"worker {worker_id} is {profile.status.value} and receives no tasks")
        return profile

    # -- tasks ----------------------------------------------------------------

    def next_task(self, worker_id: str) -> dict:
        """Assign the next task: an open question, or a sampled record to validate."""
        with self._lock:
            profile = self._require_qualified(worker_id)
            if profile.role is WorkerRole.ANNOTATOR:
                return self._next_annotation_task(worker_id)
            return self._next_validation_task(worker_id)

    def _next_annotation_task(self, worker_id: str) -> dict:
        annotated = {r.question_id for r in self.corpus.records.values()}
        for qid in sorted(self.corpus.questions):
            if qid in annotated:
                continue
            assignee = self.assignments.get(qid)
            if assignee is not None and assignee != worker_id:
                continue
            if assignee is None:
                self.assignments[qid] = worker_id
                self._log({"event": "task_assigned", "worker_id": worker_id, "question_id": qid})
            question = self.corpus.questions[qid]
            return {
                "kind": "annotate",
                "question": self._question_json(question),
                "passage": self._passage_json(self.corpus.passage_for(question)),
            }
        raise NoTasksAvailableError("no unannotated questions are open")

    def _next_validation_task(self, worker_id: str) -> dict:
        eligible = []
        for rid in sorted(self.corpus.records):
            record = self.corpus.records[rid]
            if record.status not in (RecordStatus.SUBMITTED, RecordStatus.IN_VALIDATION):
                continue
            if not record.sampled_for_validation:
                continue
            if record.annotator_id == worker_id:
                continue
            if any(v.validator_id == worker_id for v in record.verdicts):
                continue
            eligible.append(record)
        if not eligible:
            raise NoTasksAvailableError("no submitted records are awaiting this validator")
        record = self._rng.choice(eligible)
        question = self.corpus.questions[record.question_id]
        task = {
            "kind": "validate",
            "record": encode_record(record),
            "question": self._question_json(question, include_gold=self.config.gold_visible_to_validators),
            "passage": self._passage_json(self.corpus.passage_for(question)),
        }
        return task

    def _question_json(self, question: Question, include_gold: bool = True) -> dict:
        out = {"id": question.id, "passage_id": question.passage_id, "text": question.text}
        if include_gold and question.answer is not None:
            out["answer"] = encode_answer(question.answer)
        return out

    @staticmethod
    def _passage_json(passage: Passage) -> dict:
        return {"id": passage.id, "text": passage.text}

    # -- records --------------------------------------------------------------

    def get_record(self, record_id: str) -> AnnotationRecord:
        record = self.corpus.records.get(record_id)
        if record is None:
            raise KeyError(f"unknown record {record_id}")
        return record

    def get_question(self, question_id: str) -> Question:
        question = self.corpus.questions.get(question_id)
        if question is None:
            raise KeyError(f"unknown question {question_id}")
        return question

    def _new_record_id(self) -> str:
        n = len(self.corpus.records)
        while f"rec-{n:04d}" in self.corpus.records:
            n += 1
        return f"rec-{n:04d}"

    def save_record(
        self,
        question_id: str,
        annotator_id: str,
        tree: TrmrTree,
        grounding: Grounding,
        plan: DerivationPlan | None,
        submit: bool,
        record_id: str | None = None,
        version: int | None = None,
    ) -> tuple[AnnotationRecord, list[Issue]]:
        """Create or update a draft; optionally submit it.

        Updates use compare-and-set on the record version. Submission runs the
        validation rules: structural failures (V1/V2/V3/V5) block it, while a
        gold-answer mismatch (V4) only clears the consistency flag.
        """
        with self._lock:
            question = self.get_question(question_id)
            passage = self.corpus.passage_for(question)
            if record_id is None:
                record = AnnotationRecord(
                    id=self._new_record_id(),
                    question_id=question_id,
                    annotator_id=annotator_id,
                    tree=tree,
                    grounding=grounding,
                    plan=plan,
                )
            else:
                existing = self.get_record(record_id)
                if version is None or existing.version != version:
                    raise VersionConflictError(
                        f"record {record_id} is at version {existing.version}, not {version}"
                    )
                if existing.question_id != question_id:
                    raise InvalidTransitionError("a record cannot move to a different question")
                if existing.status is RecordStatus.NEEDS_REVISION:
                    self._change_status(existing, RecordStatus.DRAFT)
                elif existing.status is not RecordStatus.DRAFT:
                    raise InvalidTransitionError(f"record {record_id} is {existing.status.value}, not editable")
                record = existing
                record.tree = tree
                record.grounding = grounding
                record.plan = plan
                record.annotator_id = annotator_id
            issues: list[Issue] = []
            if submit:
                issues = validate_annotation(record, question, passage)
                hard = [i for i in issues if i.rule in HARD_RULES]
                if hard:
                    raise SubmissionBlockedError(hard)
                record.status = RecordStatus.SUBMITTED
                record.consistency = not any(i.rule == "V4" for i in issues) if question.answer is not None else None
                record.sampled_for_validation = self._rng.random() < self.config.sample_rate
            record.version += 1
            self.corpus.records[record.id] = record
            self._log({"event": "record_saved", "record": encode_record(record)})
            return record, issues

    def derive_preview(
        self,
        record_id: str,
        tree: TrmrTree | None = None,
        grounding: Grounding | None = None,
        plan: DerivationPlan | None = None,
    ) -> DerivationPlan:
        """Build or re-execute a derivation preview without persisting it.

        With an explicit plan (possibly with edited inputs), the plan is
        re-executed; otherwise a fresh derivation is generated from the
        record's (or supplied) tree and grounding.
        """
        with self._lock:
            record = self.get_record(record_id)
            question = self.get_question(record.question_id)
            if plan is not None:
                return reexecute(plan)
            return auto_derive(tree or record.tree, grounding or record.grounding, question)

    # -- verdicts -------------------------------------------------------------

    def add_verdict(self, record_id: str, validator_id: str, verdict: str, note: str | None = None) -> AnnotationRecord:
        with self._lock:
            profile = self._require_qualified(validator_id)
            if profile.role is not WorkerRole.VALIDATOR:
                raise NotQualifiedError(f"worker {validator_id} is not a validator")
            record = self.get_record(record_id)
            if record.annotator_id == validator_id:
                raise SelfValidationError("a worker never validates their own annotation")
            if record.status not in (RecordStatus.SUBMITTED, RecordStatus.IN_VALIDATION):
                raise InvalidTransitionError(f"record {record_id} is {record.status.value}, not open for validation")
            if any(v.validator_id == validator_id for v in record.verdicts):
                raise DuplicateValidatorError(f"validator {validator_id} already voted on {record_id}")
            if record.status is RecordStatus.SUBMITTED:
                self._change_status(record, RecordStatus.IN_VALIDATION)
            record.verdicts = record.verdicts + (ValidationVerdict(record_id, validator_id, verdict, note),)
            self._log(
                {
                    "event": "verdict_recorded",
                    "record_id": record_id,
                    "validator_id": validator_id,
                    "verdict": verdict,
                    "note": note,
                }
            )
            decision = aggregate_votes(
                record.verdicts,
                vote_target=self.config.vote_target,
                majority=self.config.majority,
                early_accept=self.config.early_accept,
            )
            if decision == "accepted":
                question = self.get_question(record.question_id)
                passage = self.corpus.passage_for(question)
                hard = [i for i in validate_annotation(record, question, passage) if i.rule in HARD_RULES]
                self._change_status(record, RecordStatus.NEEDS_REVISION if hard else RecordStatus.ACCEPTED)
            elif decision == "rejected":
                self._change_status(record, RecordStatus.REJECTED)
            return record

    def _change_status(self, record: AnnotationRecord, new: RecordStatus) -> None:
        if new not in STATUS_TRANSITIONS[record.status]:
            raise InvalidTransitionError(f"cannot move record {record.id} from {record.status.value} to {new.value}")
        record.status = new
        self._log(
            {
                "event": "status_changed",
                "record_id": record.id,
                "status": new.value,
                "consistency": record.consistency,
            }
        )


def decode_annotation_payload(
    obj: dict,
) -> tuple[str, str, TrmrTree, Grounding, DerivationPlan | None, bool, str | None, int | None]:
    """Unpack a POST /annotations body in the canonical structured form."""
    from .dataset import SchemaError

    for key in ("question_id", "annotator_id", "tree", "grounding"):
        if key not in obj:
            raise SchemaError(f"annotation payload needs {key!r}")
    return (
        str(obj["question_id"]),
        str(obj["annotator_id"]),
        decode_tree(obj["tree"]),
        decode_grounding(obj["grounding"]),
        decode_plan(obj["plan"]) if obj.get("plan") is not None else None,
        bool(obj.get("submit", False)),
        str(obj["id"]) if obj.get("id") is not None else None,
        int(obj["version"]) if obj.get("version") is not None else None,
    )
