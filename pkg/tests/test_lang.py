from __future__ import annotations

import random
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trmr.lang import (
    ArityError,
    KindMismatchError,
    MultipleOccurrencesWarning,
    Question,
    REGISTRY,
    ResultKind,
    Span,
    SpanNotInQuestionError,
    SpanSource,
    TrmrSyntaxError,
    TrmrTree,
    UnknownOperatorError,
    parse_trmr,
    serialize_trmr,
    trees_equal,
    typecheck,
)

from golden_rows import GOLDEN_ROWS


def q(text: str, qid: str = "q") -> Question:
    return Question(qid, "p", text)


def qspan(question: Question, text: str) -> Span:
    start = question.text.find(text)
    assert start >= 0
    return Span(SpanSource.QUESTION, start, start + len(text), text)


class TestRegistry:
    def test_exactly_seventeen_operators(self):
        assert len(REGISTRY) == 17

    def test_every_operator_has_signature_kind_and_slots(self):
        for name, sig in REGISTRY.items():
            assert sig.name == name
            assert sig.min_arity >= 1
            assert isinstance(sig.result_kind, ResultKind)
            assert sig.grounding_slots, name

    def test_result_kind_families(self):
        numbers = {"more", "less", "cu", "completion-more", "completion-less", "after",
                   "before", "sum", "count", "time-span"}
        entities = {"more-select", "less-select", "after-select", "before-select", "sort"}
        for name in numbers:
            assert REGISTRY[name].result_kind is ResultKind.NUMBER
        for name in entities:
            assert REGISTRY[name].result_kind is ResultKind.ENTITY
        assert REGISTRY["span"].result_kind is ResultKind.SPAN
        assert REGISTRY["filter"].result_kind is ResultKind.SPAN_LIST


class TestParse:
    def test_two_arg_parse(self):
        question = q("How many more people were there than households?")
        tree = parse_trmr("more(people, households)", question)
        assert tree.op == "more"
        assert [a.text for a in tree.args] == ["people", "households"]
        for leaf, text in zip(tree.args, ["people", "households"]):
            assert question.text[leaf.start:leaf.end] == text

    def test_nested_parse(self):
        question = q("How many field goals over 40 yards were made?")
        tree = parse_trmr("count(filter(over 40 yards, field goals))", question)
        assert tree.op == "count"
        inner = tree.args[0]
        assert isinstance(inner, TrmrTree) and inner.op == "filter"
        assert [a.text for a in inner.args] == ["over 40 yards", "field goals"]

    def test_arity_error(self):
        with pytest.raises(ArityError):
            parse_trmr("more(people)", q("How many more people?"))

    def test_unknown_operator(self):
        with pytest.raises(UnknownOperatorError):
            parse_trmr("maximum(people, households)", q("people households"))

    def test_span_not_in_question(self):
        with pytest.raises(SpanNotInQuestionError):
            parse_trmr("more(zebras, households)", q("How many more people than households?"))

    def test_syntax_errors(self):
        question = q("a b c")
        with pytest.raises(TrmrSyntaxError):
            parse_trmr("more(a, b", question)
        with pytest.raises(TrmrSyntaxError):
            parse_trmr("more(a,, b)", question)
        with pytest.raises(TrmrSyntaxError):
            parse_trmr("", question)
        with pytest.raises(TrmrSyntaxError):
            parse_trmr("more(a, b) trailing", question)

    def test_quoted_argument_with_comma(self):
        question = q("What happened on January 5, 1915 exactly?")
        tree = parse_trmr('span("January 5, 1915")', question)
        assert tree.args[0].text == "January 5, 1915"

    def test_doubled_quotes_inside_quoted_argument(self):
        question = q('He said "stop" twice.')
        tree = parse_trmr('span("""stop""")', question)
        assert tree.args[0].text == '"stop"'

    def test_first_occurrence_warns_when_ambiguous(self):
        question = q("the cat the dog")
        with pytest.warns(MultipleOccurrencesWarning):
            tree = parse_trmr("span(the)", question)
        assert (tree.args[0].start, tree.args[0].end) == (0, 3)

    def test_case_sensitive_matching(self):
        with pytest.raises(SpanNotInQuestionError):
            parse_trmr("cu(White)", q("How many percent were not white?"))

    def test_condition_slot_rejects_nested_operation(self):
        question = q("Which groups are larger than 21%?")
        with pytest.raises(KindMismatchError):
            parse_trmr("filter(span(groups), groups)", question)


class TestSerialize:
    def test_plain(self):
        question = q("Which racial group made up the smallest percentage of the population?")
        tree = parse_trmr("sort(smallest, racial group)", question)
        assert serialize_trmr(tree) == "sort(smallest, racial group)"

    def test_quoting_comma(self):
        question = q("What happened on January 5, 1915 exactly?")
        span = qspan(question, "January 5, 1915")
        tree = TrmrTree("span", (span,))
        assert serialize_trmr(tree) == 'span("January 5, 1915")'

    def test_quoting_parens_and_whitespace(self):
        question = q("values (approx) and  padded  text here")
        tree = TrmrTree("span", (qspan(question, "(approx)"),))
        assert serialize_trmr(tree) == 'span("(approx)")'
        padded = TrmrTree("span", (qspan(question, " padded "),))
        assert serialize_trmr(padded) == 'span(" padded ")'

    def test_round_trip_of_nested_tree(self):
        question = q("How many field goals over 40 yards were made?")
        tree = parse_trmr("count(filter(over 40 yards, field goals))", question)
        assert trees_equal(parse_trmr(serialize_trmr(tree), question), tree)


class TestTreeInvariants:
    def test_leaves_must_be_question_spans(self):
        with pytest.raises(ValueError):
            TrmrTree("span", (Span(SpanSource.PASSAGE, 0, 4, "text"),))

    def test_span_offsets_validated(self):
        with pytest.raises(ValueError):
            Span(SpanSource.QUESTION, 5, 5, "")
        with pytest.raises(ValueError):
            Span(SpanSource.QUESTION, -1, 3, "abc")

    def test_variadic_sum_minimum_two(self):
        question = q("either Asian or Pacific Islander")
        with pytest.raises(ArityError):
            TrmrTree("sum", (qspan(question, "Asian"),))
        three = TrmrTree(
            "sum",
            (qspan(question, "Asian"), qspan(question, "Pacific"), qspan(question, "Islander")),
        )
        assert len(three.args) == 3


class TestTypecheck:
    def test_count_over_filter_is_number(self):
        question = q("How many field goals over 40 yards were made?")
        tree = parse_trmr("count(filter(over 40 yards, field goals))", question)
        assert typecheck(tree) is ResultKind.NUMBER

    def test_arithmetic_over_spans_is_number(self):
        tree = parse_trmr("more(people, households)", q("more people than households"))
        assert typecheck(tree) is ResultKind.NUMBER

    def test_filter_rejects_number_child(self):
        question = q("Which groups in percent are larger than 21% of groups?")
        cond = qspan(question, "larger than 21%")
        inner = TrmrTree("count", (qspan(question, "groups"),))
        tree = TrmrTree("filter", (cond, inner))
        with pytest.raises(KindMismatchError):
            typecheck(tree)

    def test_arithmetic_rejects_span_list_child(self):
        question = q("How many more groups larger than 21% than households?")
        inner = TrmrTree("filter", (qspan(question, "larger than 21%"), qspan(question, "groups")))
        tree = TrmrTree("more", (inner, qspan(question, "households")))
        with pytest.raises(KindMismatchError):
            typecheck(tree)

    def test_count_rejects_number_child(self):
        question = q("How many times did Manning throw?")
        inner = TrmrTree("count", (qspan(question, "times"),))
        with pytest.raises(KindMismatchError):
            typecheck(TrmrTree("count", (inner,)))

    def test_select_rejects_nested_children(self):
        question = q("Who has more people in it, Iraq or Iran?")
        inner = TrmrTree("count", (qspan(question, "people"),))
        tree = TrmrTree("more-select", (inner, qspan(question, "Iran")))
        with pytest.raises(KindMismatchError):
            typecheck(tree)

    def test_arithmetic_accepts_count_child(self):
        question = q("How many more times did Manning throw than 40 yards plays?")
        inner = TrmrTree("count", (qspan(question, "times"),))
        tree = TrmrTree("more", (inner, qspan(question, "40 yards plays")))
        assert typecheck(tree) is ResultKind.NUMBER


class TestGoldenRows:
    @pytest.mark.parametrize("row", GOLDEN_ROWS, ids=[r["op"] for r in GOLDEN_ROWS])
    def test_row_parses_and_serializes_identically(self, row):
        question = q(row["question"], qid=f"q-{row['op']}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MultipleOccurrencesWarning)
            tree = parse_trmr(row["parse"], question)
        assert tree.op == row["op"]
        assert [a.text for a in tree.args] == row["args"]
        assert serialize_trmr(tree) == row["parse"]

    def test_covers_all_operators(self):
        assert {row["op"] for row in GOLDEN_ROWS} == set(REGISTRY)


# --- property-based round trip ----------------------------------------------

LEAF_ALPHABET = "abcdefghij XYZ0123456789,()\""

#: Operators whose ordinary arguments may hold number-kind children.
NUMBER_CHILD_OPS = ("more", "less", "sum", "cu", "completion-more", "completion-less", "count")


def random_shape(rng: random.Random, texts: list[str], op: str | None = None, depth: int = 0):
    """Random kind-correct tree shape; leaf texts are collected into ``texts``."""
    if op is None:
        op = rng.choice(sorted(REGISTRY))
    sig = REGISTRY[op]
    arity = sig.min_arity if sig.max_arity is not None else rng.randint(2, 4)
    args = []
    for i in range(arity):
        child_op = None
        if sig.arg_kind(i).value == "ordinary" and depth < 2 and rng.random() < 0.3:
            if op == "count":
                child_op = "filter"
            elif op in NUMBER_CHILD_OPS:
                child_op = rng.choice(NUMBER_CHILD_OPS)
        if child_op is not None:
            args.append(random_shape(rng, texts, child_op, depth + 1))
        else:
            n = rng.randint(1, 12)
            text = "".join(rng.choice(LEAF_ALPHABET) for _ in range(n))
            if not text.strip():
                text = "x" + text
            texts.append(text)
            args.append(("LEAF", text))
    return ("NODE", op, args)


def materialize(shape, question: Question) -> TrmrTree:
    _, op, args = shape
    built: list = []
    for arg in args:
        if arg[0] == "LEAF":
            text = arg[1]
            start = question.text.find(text)
            assert start >= 0, text
            built.append(Span(SpanSource.QUESTION, start, start + len(text), text))
        else:
            built.append(materialize(arg, question))
    return TrmrTree(op, tuple(built))


def build_round_trip_case(rng: random.Random):
    texts: list[str] = []
    shape = random_shape(rng, texts)
    question = Question("q", "p", " | ".join(texts) if texts else "empty")
    return materialize(shape, question), question


def test_random_round_trip_small_sample():
    rng = random.Random(4217)
    for _ in range(300):
        tree, question = build_round_trip_case(rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MultipleOccurrencesWarning)
            reparsed = parse_trmr(serialize_trmr(tree), question)
        assert trees_equal(reparsed, tree)


@settings(max_examples=150, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_round_trip_property(seed):
    rng = random.Random(seed)
    tree, question = build_round_trip_case(rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MultipleOccurrencesWarning)
        reparsed = parse_trmr(serialize_trmr(tree), question)
    assert trees_equal(reparsed, tree)


def test_parser_spans_always_match_question_text():
    rng = random.Random(99)
    for _ in range(100):
        tree, question = build_round_trip_case(rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", MultipleOccurrencesWarning)
            reparsed = parse_trmr(serialize_trmr(tree), question)
        for leaf in reparsed.leaves():
            assert question.text[leaf.start:leaf.end] == leaf.text
