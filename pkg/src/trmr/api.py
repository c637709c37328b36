"""HTTP endpoints over the annotation store.

All request and response bodies use the same canonical structured JSON as
the corpus files, so the wire format and the file format never drift apart.
"""

from __future__ import annotations

from typing import Any

from fastapi import Body, FastAPI, Query, Request
from fastapi.responses import JSONResponse

from .dataset import (
    DuplicateIdError,
    SchemaError,
    compute_stats,
    decode_grounding,
    decode_plan,
    decode_tree,
    encode_plan,
    encode_record,
    stats_to_json,
)
from .derivation import AmbiguousDateError, AmbiguousSelectionError, DerivationError, MissingSlotError
from .grounding import UnknownSuperlativeError, UnparseableConditionError, UnparseableValueError
from .lang import ArityError, KindMismatchError, SpanNotInQuestionError, TrmrError, TrmrSyntaxError, UnknownOperatorError
from .service import (
    AnnotationStore,
    DuplicateValidatorError,
    InvalidTransitionError,
    NoTasksAvailableError,
    NotQualifiedError,
    SelfValidationError,
    SubmissionBlockedError,
    UnknownWorkerError,
    VersionConflictError,
    decode_annotation_payload,
    issue_to_json,
)

_STATUS_BY_ERROR: list[tuple[type[Exception], int]] = [
    (SubmissionBlockedError, 422),
    (NoTasksAvailableError, 404),
    (UnknownWorkerError, 404),
    (NotQualifiedError, 403),
    (SelfValidationError, 403),
    (DuplicateValidatorError, 409),
    (VersionConflictError, 409),
    (InvalidTransitionError, 409),
    (DuplicateIdError, 409),
    (SchemaError, 400),
    (UnknownOperatorError, 400),
    (ArityError, 400),
    (KindMismatchError, 400),
    (TrmrSyntaxError, 400),
    (SpanNotInQuestionError, 400),
    (UnparseableValueError, 400),
    (UnparseableConditionError, 400),
    (UnknownSuperlativeError, 400),
    (MissingSlotError, 409),
    (AmbiguousDateError, 409),
    (AmbiguousSelectionError, 409),
    (DerivationError, 409),
]


def _error_response(err: Exception) -> JSONResponse:
    status = 500
    for cls, code in _STATUS_BY_ERROR:
        if isinstance(err, cls):
            status = code
            break
    body: dict[str, Any] = {"error": type(err).__name__, "detail": str(err)}
    if isinstance(err, SubmissionBlockedError):
        body["issues"] = [issue_to_json(i) for i in err.issues]
    return JSONResponse(status_code=status, content=body)


def create_app(store: AnnotationStore) -> FastAPI:
    app = FastAPI(title="annotation service")

    @app.exception_handler(TrmrError)
    async def _trmr_error(_request: Request, err: TrmrError) -> JSONResponse:
        return _error_response(err)

    @app.exception_handler(KeyError)
    async def _key_error(_request: Request, err: KeyError) -> JSONResponse:
        return JSONResponse(status_code=404, content={"error": "NotFound", "detail": str(err)})

    @app.get("/tasks/next")
    def next_task(worker: str = Query(...)) -> dict:
        return store.next_task(worker)

    @app.get("/questions/{question_id}")
    def get_question(question_id: str) -> dict:
        question = store.get_question(question_id)
        return {
            "question": store._question_json(question),
            "passage": store._passage_json(store.corpus.passage_for(question)),
        }

    @app.post("/annotations")
    def post_annotation(payload: dict = Body(...)) -> dict:
        question_id, annotator_id, tree, grounding, plan, submit, record_id, version = (
            decode_annotation_payload(payload)
        )
        record, issues = store.save_record(
            question_id, annotator_id, tree, grounding, plan, submit, record_id, version
        )
        return {"record": encode_record(record), "issues": [issue_to_json(i) for i in issues]}

    @app.post("/annotations/{record_id}/derive")
    def derive(record_id: str, payload: dict | None = Body(default=None)) -> dict:
        payload = payload or {}
        tree = decode_tree(payload["tree"]) if payload.get("tree") is not None else None
        grounding = decode_grounding(payload["grounding"]) if payload.get("grounding") is not None else None
        plan = decode_plan(payload["plan"]) if payload.get("plan") is not None else None
        preview = store.derive_preview(record_id, tree, grounding, plan)
        return {"plan": encode_plan(preview)}

    @app.post("/verdicts")
    def post_verdict(payload: dict = Body(...)) -> dict:
        for key in ("record_id", "validator_id", "verdict"):
            if key not in payload:
                raise SchemaError(f"verdict payload needs {key!r}")
        record = store.add_verdict(
            str(payload["record_id"]),
            str(payload["validator_id"]),
            str(payload["verdict"]),
            payload.get("note"),
        )
        return {"record": encode_record(record)}

    @app.get("/records/{record_id}")
    def get_record(record_id: str) -> dict:
        return {"record": encode_record(store.get_record(record_id))}

    @app.get("/stats")
    def get_stats() -> dict:
        return stats_to_json(compute_stats(store.corpus))

    @app.post("/workers")
    def register_worker(payload: dict = Body(...)) -> dict:
        for key in ("worker_id", "role"):
            if key not in payload:
                raise SchemaError(f"worker payload needs {key!r}")
        profile = store.register_worker(str(payload["worker_id"]), str(payload["role"]))
        return _worker_json(profile)

    @app.post("/workers/{worker_id}/qualification")
    def qualify_worker(worker_id: str, payload: dict = Body(...)) -> dict:
        results = payload.get("results")
        if not isinstance(results, list) or not all(isinstance(r, bool) for r in results):
            raise SchemaError("qualification payload needs a 'results' list of booleans")
        return _worker_json(store.update_qualification(worker_id, results))

    @app.get("/workers/{worker_id}")
    def get_worker(worker_id: str) -> dict:
        profile = store.workers.get(worker_id)
        if profile is None:
            raise UnknownWorkerError(f"unknown worker {worker_id}")
        return _worker_json(profile)

    return app


def _worker_json(profile) -> dict:
    return {
        "worker_id": profile.worker_id,
        "role": profile.role.value,
        "qualification_score": profile.qualification_score,
        "status": profile.status.value,
    }
