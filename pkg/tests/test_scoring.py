from __future__ import annotations

from fractions import Fraction

import pytest

from trmr.derivation import DateAnswer, NumberAnswer, SpanAnswer
from trmr.grounding import Grounding
from trmr.scoring import (
    NUMBER_TOLERANCE,
    Prediction,
    QuestionMismatchError,
    answer_f1,
    answers_match,
    normalize_text,
    score_corpus,
    score_prediction,
)

from fixture_corpus import build_fixture_corpus


def gold_prediction(record) -> Prediction:
    return Prediction(record.question_id, record.plan.final, record.tree, record.grounding)


class TestNormalization:
    def test_lowercase_articles_punctuation(self):
        assert normalize_text("The  Battle, of Vittorio!") == "battle of vittorio"

    def test_span_equality_after_normalization(self):
        assert answers_match(SpanAnswer(("the Riots",)), SpanAnswer(("riots",)))

    def test_span_order_is_irrelevant(self):
        assert answers_match(SpanAnswer(("White", "Black")), SpanAnswer(("Black", "White")))


class TestAnswerEquality:
    def test_number_tolerance_boundary(self):
        gold = NumberAnswer(Fraction(2))
        assert answers_match(NumberAnswer(Fraction(2) + NUMBER_TOLERANCE), gold)
        assert not answers_match(NumberAnswer(Fraction(2) + 2 * NUMBER_TOLERANCE), gold)

    def test_float_inputs_accepted(self):
        assert answers_match(NumberAnswer(Fraction(2.0000001)), NumberAnswer(Fraction(2)))

    def test_date_by_populated_components(self):
        assert answers_match(DateAnswer(1915, 1, 5), DateAnswer(1915, 1, 5))
        assert not answers_match(DateAnswer(1915, 1), DateAnswer(1915, 1, 5))

    def test_kind_mismatch_is_zero(self):
        assert not answers_match(NumberAnswer(Fraction(2)), SpanAnswer(("2",)))


class TestF1:
    def test_identical_spans(self):
        assert answer_f1(SpanAnswer(("the riots began",)), SpanAnswer(("the riots began",))) == 1.0

    def test_partial_overlap(self):
        score = answer_f1(SpanAnswer(("riots began",)), SpanAnswer(("the riots",)))
        assert 0.0 < score < 1.0

    def test_disjoint(self):
        assert answer_f1(SpanAnswer(("alpha",)), SpanAnswer(("beta",))) == 0.0

    def test_numbers_fall_back_to_em(self):
        assert answer_f1(NumberAnswer(Fraction(2)), NumberAnswer(Fraction(2))) == 1.0
        assert answer_f1(NumberAnswer(Fraction(3)), NumberAnswer(Fraction(2))) == 0.0


class TestScorePrediction:
    def test_gold_against_itself_is_all_ones(self):
        corpus = build_fixture_corpus(n_records=17, n_rejected=0)
        for record in corpus.records.values():
            row = score_prediction(gold_prediction(record), record)
            assert (row.answer_em, row.answer_f1, row.tree_exact, row.grounding_f1) == (1.0, 1.0, 1.0, 1.0)

    def test_same_answer_different_tree(self):
        corpus = build_fixture_corpus(n_records=2, n_rejected=0)
        records = sorted(corpus.records.values(), key=lambda r: r.id)
        a, b = records[0], records[1]
        pred = Prediction(a.question_id, a.plan.final, b.tree, a.grounding)
        row = score_prediction(pred, a)
        assert row.answer_em == 1.0
        assert row.tree_exact == 0.0

    def test_question_mismatch(self):
        corpus = build_fixture_corpus(n_records=2, n_rejected=0)
        records = sorted(corpus.records.values(), key=lambda r: r.id)
        pred = gold_prediction(records[0])
        with pytest.raises(QuestionMismatchError):
            score_prediction(pred, records[1])

    def test_grounding_f1_degrades_with_missing_spans(self):
        corpus = build_fixture_corpus(n_records=1, n_rejected=0)
        record = next(iter(corpus.records.values()))
        pred = Prediction(record.question_id, record.plan.final, record.tree, Grounding())
        row = score_prediction(pred, record)
        assert row.grounding_f1 == 0.0


class TestScoreCorpus:
    def test_perfect_predictions(self):
        corpus = build_fixture_corpus(n_records=17, n_rejected=0)
        predictions = [gold_prediction(r) for r in corpus.records.values()]
        metrics = score_corpus(predictions, corpus)
        assert metrics.answer_em == 1.0
        assert metrics.answer_f1 == 1.0
        assert metrics.tree_exact == 1.0
        assert metrics.grounding_f1 == 1.0
        assert len(metrics.per_operator) == 17
        assert all(count == 1 and acc == 1.0 for count, acc in metrics.per_operator.values())

    def test_fractions_stay_in_range(self):
        corpus = build_fixture_corpus(n_records=4, n_rejected=0)
        records = sorted(corpus.records.values(), key=lambda r: r.id)
        predictions = [gold_prediction(r) for r in records[:2]] + [
            Prediction(r.question_id, NumberAnswer(Fraction(10**9)), r.tree, r.grounding) for r in records[2:]
        ]
        metrics = score_corpus(predictions, corpus)
        for value in (metrics.answer_em, metrics.answer_f1, metrics.tree_exact, metrics.grounding_f1):
            assert 0.0 <= value <= 1.0

    def test_unknown_question_rejected(self):
        corpus = build_fixture_corpus(n_records=1, n_rejected=0)
        record = next(iter(corpus.records.values()))
        pred = Prediction("q-9999", record.plan.final, record.tree, record.grounding)
        with pytest.raises(QuestionMismatchError):
            score_corpus([pred], corpus)
