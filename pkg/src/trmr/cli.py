"""Command-line interface: corpus import/export, stats, scoring, parsing,
record execution, validation, and the annotation service.

Every subcommand prints a machine-readable JSON report on standard output.
Exit codes: 0 on success, 2 when validation finds issues, 1 on errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .dataset import (
    encode_answer,
    encode_tree,
    export_corpus,
    import_drop,
    load_corpus,
    compute_stats,
    stats_to_json,
)
from .derivation import execute
from .lang import TrmrError, parse_trmr, serialize_trmr, typecheck
from .scoring import Prediction, score_corpus
from .service import AnnotationStore, ServiceConfig, issue_to_json, validate_annotation


def _emit(obj: dict) -> None:
    print(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True))


def _env(name: str, cast, fallback):
    raw = os.environ.get(name)
    if raw is None:
        return fallback
    return cast(raw)


def cmd_import(args: argparse.Namespace) -> int:
    corpus = import_drop(args.drop_file)
    export_corpus(corpus, args.output)
    _emit({"passages": len(corpus.passages), "questions": len(corpus.questions), "records": 0,
           "output": str(args.output)})
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    content = export_corpus(corpus, args.output)
    if args.output is None:
        sys.stdout.write(content)
    else:
        _emit({"output": str(args.output), "lines": content.count("\n")})
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    _emit(stats_to_json(compute_stats(corpus), by_operator=args.by_operator))
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    from .dataset import decode_answer, decode_grounding, decode_tree, SchemaError

    corpus = load_corpus(args.corpus)
    predictions = []
    for lineno, line in enumerate(Path(args.pred_file).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        where = f"{args.pred_file}:{lineno}"
        for key in ("question_id", "answer", "tree", "grounding"):
            if key not in obj:
                raise SchemaError(f"{where}: prediction needs {key!r}")
        predictions.append(
            Prediction(
                str(obj["question_id"]),
                decode_answer(obj["answer"], where),
                decode_tree(obj["tree"], where),
                decode_grounding(obj["grounding"], where),
            )
        )
    metrics = score_corpus(predictions, corpus)
    _emit(
        {
            "predictions": len(predictions),
            "answer_em": metrics.answer_em,
            "answer_f1": metrics.answer_f1,
            "tree_exact": metrics.tree_exact,
            "grounding_f1": metrics.grounding_f1,
            "per_operator": {
                op: {"count": count, "accuracy": accuracy}
                for op, (count, accuracy) in metrics.per_operator.items()
            },
        }
    )
    return 0


def cmd_parse(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    question = corpus.questions.get(args.question)
    if question is None:
        raise TrmrError(f"unknown question {args.question}")
    tree = parse_trmr(args.expr, question)
    _emit(
        {
            "question_id": question.id,
            "tree": encode_tree(tree),
            "result_kind": typecheck(tree).value,
            "serialized": serialize_trmr(tree),
        }
    )
    return 0


def cmd_exec(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    record = corpus.records.get(args.record_id)
    if record is None:
        raise TrmrError(f"unknown record {args.record_id}")
    if record.plan is None:
        raise TrmrError(f"record {args.record_id} has no derivation")
    answer = execute(record.plan)
    _emit(
        {
            "record_id": record.id,
            "answer": encode_answer(answer),
            "steps": record.plan.rendered_lines(),
            "warnings": list(record.plan.warnings),
        }
    )
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    report = []
    total_issues = 0
    for record_id in sorted(corpus.records):
        record = corpus.records[record_id]
        question = corpus.questions[record.question_id]
        issues = validate_annotation(record, question, corpus.passage_for(question))
        total_issues += len(issues)
        report.append({"record_id": record_id, "issues": [issue_to_json(i) for i in issues]})
    _emit({"records": len(report), "issues": total_issues, "report": report})
    return 2 if total_issues else 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app

    corpus = load_corpus(args.corpus)
    config = ServiceConfig(
        theta=args.theta,
        sample_rate=args.sample_rate,
        early_accept=args.early_accept,
        gold_visible_to_validators=not args.hide_gold,
        seed=args.seed,
    )
    log_path = args.log if args.log is not None else f"{args.corpus}.events.jsonl"
    store = AnnotationStore(corpus, config, log_path=log_path)
    app = create_app(store)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trmr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="import a DROP-style file into a corpus")
    p.add_argument("drop_file")
    p.add_argument("-o", "--output", required=True, help="corpus file to write")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("export", help="re-export a corpus in canonical form")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", default=None, help="destination (default: stdout)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("corpus")
    p.add_argument("--by-operator", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("score", help="score a prediction file against a corpus")
    p.add_argument("pred_file")
    p.add_argument("corpus")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("parse", help="parse an expression against a question")
    p.add_argument("expr")
    p.add_argument("--question", required=True, help="question id")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("exec", help="execute a record's derivation")
    p.add_argument("record_id")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_exec)

    p = sub.add_parser("validate", help="run the validation rules over every record")
    p.add_argument("corpus")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--corpus", default=_env("TRMR_CORPUS", str, None))
    p.add_argument("--host", default=_env("TRMR_HOST", str, "127.0.0.1"))
    p.add_argument("--port", type=int, default=_env("TRMR_PORT", int, 8000))
    p.add_argument("--theta", type=float, default=_env("TRMR_THETA", float, 0.8),
                   help="qualification threshold (inclusive)")
    p.add_argument("--sample-rate", type=float, default=_env("TRMR_SAMPLE_RATE", float, 1.0),
                   help="fraction of submitted records sampled for validation")
    p.add_argument("--early-accept", action="store_true",
                   default=_env("TRMR_EARLY_ACCEPT", lambda s: s == "1", False),
                   help="decide as soon as a majority of matching votes is reached")
    p.add_argument("--hide-gold", action="store_true",
                   default=_env("TRMR_HIDE_GOLD", lambda s: s == "1", False),
                   help="do not show validators the gold answer")
    p.add_argument("--log", default=_env("TRMR_LOG", str, None), help="event log path")
    p.add_argument("--seed", type=int, default=_env("TRMR_SEED", int, None))
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve" and not args.corpus:
        print(json.dumps({"error": "UsageError", "detail": "serve needs --corpus (or TRMR_CORPUS)"}))
        return 1
    try:
        return args.func(args)
    except TrmrError as err:
        print(json.dumps({"error": type(err).__name__, "detail": str(err)}, ensure_ascii=False))
        return 1


if __name__ == "__main__":
    sys.exit(main())
