"""Scoring of predicted answers and reasoning structures against gold records.

Answers are compared after normalization (numbers within an absolute 1e-6,
span texts lowercased with articles and punctuation stripped, dates by their
populated components). The reasoning side is scored separately: exact tree
match on operator structure and leaf texts, and span-set F1 on grounding
offsets. No combined score is defined; the parts are reported side by side.
"""

from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .dataset import AnnotationRecord, Corpus
from .derivation import Answer, DateAnswer, NumberAnswer, SpanAnswer
from .grounding import Grounding
from .lang import TrmrError, TrmrTree, trees_equal

#: Absolute tolerance for numeric answer equality.
NUMBER_TOLERANCE = Fraction(1, 10**6)

_PUNCT = set(string.punctuation)
_ARTICLES = {"a", "an", "the"}


class QuestionMismatchError(TrmrError):
    """Prediction and gold record reference different questions."""


@dataclass(frozen=True)
class Prediction:
    question_id: str
    answer: Answer
    tree: TrmrTree
    grounding: Grounding


@dataclass(frozen=True)
class ScoreRow:
    answer_em: float
    answer_f1: float
    tree_exact: float
    grounding_f1: float


@dataclass(frozen=True)
class Metrics:
    answer_em: float
    answer_f1: float
    tree_exact: float
    grounding_f1: float
    per_operator: dict[str, tuple[int, float]]  # operator -> (count, answer accuracy)


def normalize_text(text: str) -> str:
    """Lowercase, drop punctuation and articles, collapse whitespace."""
    lowered = "".join(ch for ch in text.lower() if ch not in _PUNCT)
    tokens = [t for t in lowered.split() if t not in _ARTICLES]
    return " ".join(tokens)


def _tokens(answer: SpanAnswer) -> list[str]:
    out: list[str] = []
    for text in answer.texts:
        out.extend(normalize_text(text).split())
    return out


def answers_match(pred: Answer, gold: Answer) -> bool:
    """Exact match under normalization; the building block of answer_em."""
    if isinstance(pred, NumberAnswer) and isinstance(gold, NumberAnswer):
        return abs(Fraction(pred.value) - Fraction(gold.value)) <= NUMBER_TOLERANCE
    if isinstance(pred, SpanAnswer) and isinstance(gold, SpanAnswer):
        return sorted(normalize_text(t) for t in pred.texts) == sorted(normalize_text(t) for t in gold.texts)
    if isinstance(pred, DateAnswer) and isinstance(gold, DateAnswer):
        return (pred.year, pred.month, pred.day) == (gold.year, gold.month, gold.day)
    return False


def answer_f1(pred: Answer, gold: Answer) -> float:
    """Bag-of-words F1 for span answers; falls back to exact match otherwise."""
    if isinstance(pred, SpanAnswer) and isinstance(gold, SpanAnswer):
        pred_tokens, gold_tokens = _tokens(pred), _tokens(gold)
        if not pred_tokens or not gold_tokens:
            return float(pred_tokens == gold_tokens)
        common = Counter(pred_tokens) & Counter(gold_tokens)
        same = sum(common.values())
        if same == 0:
            return 0.0
        precision = same / len(pred_tokens)
        recall = same / len(gold_tokens)
        return 2 * precision * recall / (precision + recall)
    return float(answers_match(pred, gold))


def grounding_f1(pred: Grounding, gold: Grounding) -> float:
    """Span-set F1 by exact offsets over all grounded value and key spans."""
    pred_set = {(s.start, s.end) for s in pred.spans()}
    gold_set = {(s.start, s.end) for s in gold.spans()}
    if not pred_set and not gold_set:
        return 1.0
    if not pred_set or not gold_set:
        return 0.0
    overlap = len(pred_set & gold_set)
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_set)
    recall = overlap / len(gold_set)
    return 2 * precision * recall / (precision + recall)


def gold_answer_of(record: AnnotationRecord) -> Answer:
    if record.plan is None:
        raise ValueError(f"record {record.id} has no derivation to score against")
    return record.plan.final


def score_prediction(pred: Prediction, gold: AnnotationRecord) -> ScoreRow:
    """Score one prediction against one gold annotation record.

    The answer is compared to the record's derived final answer; the tree is
    compared up to span offsets; grounding by exact-offset span-set F1.
    """
    if pred.question_id != gold.question_id:
        raise QuestionMismatchError(
            f"prediction is for question {pred.question_id}, gold record for {gold.question_id}"
        )
    return ScoreRow(
        answer_em=float(answers_match(pred.answer, gold_answer_of(gold))),
        answer_f1=answer_f1(pred.answer, gold_answer_of(gold)),
        tree_exact=float(trees_equal(pred.tree, gold.tree)),
        grounding_f1=grounding_f1(pred.grounding, gold.grounding),
    )


def score_corpus(predictions: list[Prediction], corpus: Corpus) -> Metrics:
    """Aggregate scores over a prediction set, matched to records by question id."""
    by_question = {r.question_id: r for r in corpus.records.values()}
    rows: list[tuple[str, ScoreRow]] = []
    for pred in predictions:
        gold = by_question.get(pred.question_id)
        if gold is None:
            raise QuestionMismatchError(f"no gold record for question {pred.question_id}")
        rows.append((gold.tree.op, score_prediction(pred, gold)))
    if not rows:
        return Metrics(0.0, 0.0, 0.0, 0.0, {})
    per_operator: dict[str, tuple[int, float]] = {}
    for op in sorted({op for op, _ in rows}):
        op_rows = [row for o, row in rows if o == op]
        per_operator[op] = (len(op_rows), sum(r.answer_em for r in op_rows) / len(op_rows))
    n = len(rows)
    return Metrics(
        answer_em=sum(r.answer_em for _, r in rows) / n,
        answer_f1=sum(r.answer_f1 for _, r in rows) / n,
        tree_exact=sum(r.tree_exact for _, r in rows) / n,
        grounding_f1=sum(r.grounding_f1 for _, r in rows) / n,
        per_operator=per_operator,
    )
