from __future__ import annotations

import json

import pytest

from trmr.cli import main
from trmr.dataset import encode_answer, encode_grounding, encode_tree, export_corpus

from fixture_corpus import build_fixture_corpus
from test_dataset import MINIMAL_DROP, write_drop


@pytest.fixture()
def corpus_file(tmp_path) -> str:
    path = tmp_path / "corpus.jsonl"
    export_corpus(build_fixture_corpus(n_records=4, n_rejected=1), path)
    return str(path)


def run(capsys, *argv: str) -> tuple[int, dict]:
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


class TestCli:
    def test_import(self, tmp_path, capsys):
        drop = write_drop(tmp_path, MINIMAL_DROP)
        out = tmp_path / "c.jsonl"
        code, body = run(capsys, "import", drop, "-o", str(out))
        assert code == 0
        assert (body["passages"], body["questions"], body["records"]) == (1, 1, 0)
        assert out.exists()

    def test_export_stdout_round_trips(self, corpus_file, capsys):
        code = main(["export", corpus_file])
        assert code == 0
        out = capsys.readouterr().out
        assert out == open(corpus_file, encoding="utf-8").read()

    def test_stats(self, corpus_file, capsys):
        code, body = run(capsys, "stats", corpus_file, "--by-operator")
        assert code == 0
        assert body["records"] == 4
        assert body["accepted"] == 3 and body["rejected"] == 1
        assert "per_operator" in body

    def test_parse(self, corpus_file, capsys):
        code, body = run(capsys, "parse", "more(people, households)", "--question", "q-0000",
                         "--corpus", corpus_file)
        assert code == 0
        assert body["result_kind"] == "number"
        assert body["serialized"] == "more(people, households)"

    def test_exec(self, corpus_file, capsys):
        code, body = run(capsys, "exec", "rec-0000", "--corpus", corpus_file)
        assert code == 0
        assert body["answer"] == {"kind": "number", "value": "800"}
        assert len(body["steps"]) == 1

    def test_validate_clean_corpus_exits_zero(self, corpus_file, capsys):
        code, body = run(capsys, "validate", corpus_file)
        assert code == 0
        assert body["issues"] == 0

    def test_validate_dirty_corpus_exits_two(self, tmp_path, capsys):
        corpus = build_fixture_corpus(n_records=2, n_rejected=0)
        record = corpus.records["rec-0000"]
        from trmr.grounding import Grounding

        record.grounding = Grounding([])
        record.plan = None
        path = tmp_path / "dirty.jsonl"
        export_corpus(corpus, path)
        code, body = run(capsys, "validate", str(path))
        assert code == 2
        assert body["issues"] >= 1

    def test_score_perfect_predictions(self, corpus_file, tmp_path, capsys):
        corpus = build_fixture_corpus(n_records=4, n_rejected=1)
        lines = []
        for record in corpus.records.values():
            lines.append(json.dumps({
                "question_id": record.question_id,
                "answer": encode_answer(record.plan.final),
                "tree": encode_tree(record.tree),
                "grounding": encode_grounding(record.grounding),
            }))
        pred = tmp_path / "pred.jsonl"
        pred.write_text("\n".join(lines) + "\n", encoding="utf-8")
        code, body = run(capsys, "score", str(pred), corpus_file)
        assert code == 0
        assert body["answer_em"] == 1.0
        assert body["tree_exact"] == 1.0
        assert body["grounding_f1"] == 1.0

    def test_domain_error_exits_one(self, corpus_file, capsys):
        code, body = run(capsys, "exec", "rec-9999", "--corpus", corpus_file)
        assert code == 1
        assert "error" in body
