"""Operator expressions over question spans: registry, parser, serializer, typechecker.

An expression is a tree of operators drawn from a fixed 17-entry registry.
Every leaf argument is a span of the question text; two operators (sort,
filter) reserve their first argument for a superlative or condition phrase.
The textual grammar is:

    expr = NAME "(" arg { "," arg } ")"
    arg  = expr | SPANTEXT | QUOTED

SPANTEXT is any run of characters without commas, parentheses, or double
quotes; QUOTED is double-quoted with embedded quotes doubled. Argument texts
that contain a comma, parenthesis, quote, or leading/trailing whitespace are
always emitted quoted by the serializer.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterator, Union

if TYPE_CHECKING:
    from .derivation import Answer


class TrmrError(Exception):
    """Base class for all toolchain errors."""


class UnknownOperatorError(TrmrError):
    """Operator name is not in the registry."""


class ArityError(TrmrError):
    """Argument count does not satisfy the operator's arity."""


class SpanNotInQuestionError(TrmrError):
    """A leaf argument text does not occur in the question."""


class TrmrSyntaxError(TrmrError):
    """Malformed expression text (unbalanced parentheses, empty argument, ...)."""


class KindMismatchError(TrmrError):
    """A child expression's result kind is unusable in its argument position."""


class MultipleOccurrencesWarning(UserWarning):
    """A leaf text occurs more than once in the question; the first match was used."""


class SpanSource(str, Enum):
    QUESTION = "question"
    PASSAGE = "passage"


class SlotArgKind(str, Enum):
    """Kind of a syntactic argument position."""

    ORDINARY = "ordinary"
    SUPERLATIVE = "superlative"
    CONDITION = "condition"


class ResultKind(str, Enum):
    """What evaluating an operator yields."""

    NUMBER = "number"
    ENTITY = "entity"
    SPAN = "span"
    SPAN_LIST = "span_list"


class SlotKind(str, Enum):
    """Expected shape of the grounded items an execution slot reads."""

    NUMBER = "number"            # exactly one numeric value
    NUMBERS = "numbers"          # one or more numeric values, summed
    PERCENT = "percent"          # a percentage (plain numbers accepted)
    DATE = "date"                # exactly one date
    SPAN = "span"                # exactly one passage span, value not needed
    SPANS = "spans"              # passage spans, values not needed (counting)
    NUMBER_ITEMS = "number_items"  # (key span, numeric value) pairs


@dataclass(frozen=True)
class Span:
    """A character span of a question or passage.

    Offsets are 0-based, end-exclusive. ``text`` caches the substring and is
    verified against the source text by the parser and by record validation;
    the span itself only knows its offsets.
    """

    source: SpanSource
    start: int
    end: int
    text: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"span offsets must satisfy 0 <= start < end, got [{self.start}, {self.end})")


@dataclass(frozen=True)
class SlotSpec:
    """One named input an operator reads at execution time.

    ``arg_index`` ties the slot to a syntactic argument position; such a slot
    is not read (and not required) when that argument is a nested expression,
    because the value then comes from the child step. ``per_arg`` marks a
    template expanded to one slot per argument for variadic operators.
    """

    name: str
    kind: SlotKind
    required: bool = True
    arg_index: int | None = None
    per_arg: bool = False


@dataclass(frozen=True)
class OperatorSig:
    name: str
    min_arity: int
    max_arity: int | None  # None = variadic
    slot_kinds: tuple[SlotArgKind, ...]  # per argument; variadic ops repeat the last entry
    result_kind: ResultKind
    grounding_slots: tuple[SlotSpec, ...]

    def arg_kind(self, index: int) -> SlotArgKind:
        if index < len(self.slot_kinds):
            return self.slot_kinds[index]
        return self.slot_kinds[-1]

    def accepts_arity(self, count: int) -> bool:
        if count < self.min_arity:
            return False
        return self.max_arity is None or count <= self.max_arity


_ORD = SlotArgKind.ORDINARY


def _sig(
    name: str,
    arity: tuple[int, int | None],
    result: ResultKind,
    slots: tuple[SlotSpec, ...],
    slot_kinds: tuple[SlotArgKind, ...] | None = None,
) -> OperatorSig:
    lo, hi = arity
    kinds = slot_kinds if slot_kinds is not None else tuple([_ORD] * lo)
    return OperatorSig(name, lo, hi, kinds, result, slots)


#: The full operator registry. Names, arities, and argument roles follow the
#: operator templates; result kinds and slot tables drive typechecking and
#: derivation.
REGISTRY: dict[str, OperatorSig] = {
    sig.name: sig
    for sig in (
        _sig("more", (2, 2), ResultKind.NUMBER, (
            SlotSpec("arg1", SlotKind.NUMBERS, arg_index=0),
            SlotSpec("arg2", SlotKind.NUMBERS, arg_index=1),
        )),
        _sig("more-select", (2, 2), ResultKind.ENTITY, (
            SlotSpec("arg1", SlotKind.NUMBER, arg_index=0),
            SlotSpec("arg2", SlotKind.NUMBER, arg_index=1),
        )),
        _sig("less", (2, 2), ResultKind.NUMBER, (
            SlotSpec("arg1", SlotKind.NUMBERS, arg_index=0),
            SlotSpec("arg2", SlotKind.NUMBERS, arg_index=1),
        )),
        _sig("less-select", (2, 2), ResultKind.ENTITY, (
            SlotSpec("arg1", SlotKind.NUMBER, arg_index=0),
            SlotSpec("arg2", SlotKind.NUMBER, arg_index=1),
        )),
        _sig("cu", (1, 1), ResultKind.NUMBER, (
            SlotSpec("part", SlotKind.PERCENT, arg_index=0),
            SlotSpec("whole", SlotKind.PERCENT, required=False),
        )),
        _sig("completion-more", (1, 1), ResultKind.NUMBER, (
            SlotSpec("target", SlotKind.NUMBERS, arg_index=0),
            SlotSpec("complement", SlotKind.NUMBERS),
        )),
        _sig("completion-less", (1, 1), ResultKind.NUMBER, (
            SlotSpec("target", SlotKind.NUMBERS, arg_index=0),
            SlotSpec("complement", SlotKind.NUMBERS),
        )),
        _sig("after", (2, 2), ResultKind.NUMBER, (
            SlotSpec("arg1", SlotKind.DATE, arg_index=0),
            SlotSpec("arg2", SlotKind.DATE, arg_index=1),
        )),
        _sig("after-select", (2, 2), ResultKind.ENTITY, (
            SlotSpec("arg1", SlotKind.DATE, arg_index=0),
            SlotSpec("arg2", SlotKind.DATE, arg_index=1),
        )),
        _sig("before", (2, 2), ResultKind.NUMBER, (
            SlotSpec("arg1", SlotKind.DATE, arg_index=0),
            SlotSpec("arg2", SlotKind.DATE, arg_index=1),
        )),
        _sig("before-select", (2, 2), ResultKind.ENTITY, (
            SlotSpec("arg1", SlotKind.DATE, arg_index=0),
            SlotSpec("arg2", SlotKind.DATE, arg_index=1),
        )),
        _sig("sum", (2, None), ResultKind.NUMBER, (
            SlotSpec("arg", SlotKind.NUMBERS, per_arg=True),
        )),
        _sig("count", (1, 1), ResultKind.NUMBER, (
            SlotSpec("items", SlotKind.SPANS, arg_index=0),
        )),
        _sig("time-span", (1, 1), ResultKind.NUMBER, (
            SlotSpec("start", SlotKind.DATE),
            SlotSpec("end", SlotKind.DATE),
        )),
        _sig("span", (1, 1), ResultKind.SPAN, (
            SlotSpec("item", SlotKind.SPAN, arg_index=0),
        )),
        _sig("sort", (2, 2), ResultKind.ENTITY, (
            SlotSpec("items", SlotKind.NUMBER_ITEMS, arg_index=1),
        ), slot_kinds=(SlotArgKind.SUPERLATIVE, _ORD)),
        _sig("filter", (2, 2), ResultKind.SPAN_LIST, (
            SlotSpec("items", SlotKind.NUMBER_ITEMS, arg_index=1),
        ), slot_kinds=(SlotArgKind.CONDITION, _ORD)),
    )
}

#: Operators whose ordinary argument slots hold numeric values and therefore
#: accept number-kind child expressions.
NUMERIC_SLOT_OPS = frozenset({"more", "less", "sum", "cu", "completion-more", "completion-less"})

TreeArg = Union["TrmrTree", Span]


@dataclass(frozen=True)
class TrmrTree:
    """A parsed operator expression.

    Construction enforces the structural invariants: the operator exists, the
    argument count satisfies its arity, superlative/condition positions hold
    spans, and every leaf is a question span. Result-kind compatibility of
    nested children is checked separately by :func:`typecheck`.
    """

    op: str
    args: tuple[TreeArg, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))
        sig = REGISTRY.get(self.op)
        if sig is None:
            raise UnknownOperatorError(f"unknown operator {self.op!r}")
        if not sig.accepts_arity(len(self.args)):
            bound = f"at least {sig.min_arity}" if sig.max_arity is None else str(sig.min_arity)
            raise ArityError(f"{self.op} takes {bound} argument(s), got {len(self.args)}")
        for i, arg in enumerate(self.args):
            kind = sig.arg_kind(i)
            if kind is not _ORD and not isinstance(arg, Span):
                raise KindMismatchError(
                    f"{self.op} argument {i + 1} is a {kind.value} slot and must be a question span"
                )
            if isinstance(arg, Span) and arg.source is not SpanSource.QUESTION:
                raise ValueError(f"{self.op} argument {i + 1}: tree leaves must be question spans")

    def signature(self) -> OperatorSig:
        return REGISTRY[self.op]

    def walk(self, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], "TrmrTree"]]:
        """Yield (path, node) pairs, children before parents."""
        for i, arg in enumerate(self.args):
            if isinstance(arg, TrmrTree):
                yield from arg.walk(path + (i,))
        yield path, self

    def node_at(self, path: tuple[int, ...]) -> "TrmrTree":
        node = self
        for i in path:
            arg = node.args[i]
            if not isinstance(arg, TrmrTree):
                raise KeyError(f"path {path} does not address a node")
            node = arg
        return node

    def leaves(self) -> Iterator[Span]:
        for arg in self.args:
            if isinstance(arg, TrmrTree):
                yield from arg.leaves()
            else:
                yield arg


@dataclass(frozen=True)
class Passage:
    id: str
    text: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("passage text must be non-empty")


@dataclass(frozen=True)
class Question:
    id: str
    passage_id: str
    text: str
    answer: "Answer | None" = None

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("question text must be non-empty")


def trees_equal(a: TrmrTree, b: TrmrTree) -> bool:
    """Structural equality on operator names, argument order, and leaf texts.

    Leaf offsets are ignored so that re-parsing a serialized tree, which may
    re-anchor a repeated text at a different occurrence, still compares equal.
    """
    if a.op != b.op or len(a.args) != len(b.args):
        return False
    for x, y in zip(a.args, b.args):
        if isinstance(x, TrmrTree) != isinstance(y, TrmrTree):
            return False
        if isinstance(x, TrmrTree):
            if not trees_equal(x, y):  # type: ignore[arg-type]
                return False
        elif x.text != y.text:  # type: ignore[union-attr]
            return False
    return True


_SPECIAL = set(',()"')


def _needs_quoting(text: str) -> bool:
    return bool(_SPECIAL & set(text)) or text != text.strip() or not text


def _quote(text: str) -> str:
    return '"' + text.replace('"', '""') + '"'


def serialize_trmr(tree: TrmrTree) -> str:
    """Render a tree back to expression text; re-parsing reproduces the tree."""
    parts = []
    for arg in tree.args:
        if isinstance(arg, TrmrTree):
            parts.append(serialize_trmr(arg))
        elif _needs_quoting(arg.text):
            parts.append(_quote(arg.text))
        else:
            parts.append(arg.text)
    return f"{tree.op}({', '.join(parts)})"


def anchor_in_question(text: str, question: Question) -> Span:
    """Anchor a leaf text at its first occurrence in the question.

    Warns via :class:`MultipleOccurrencesWarning` when the text occurs more
    than once; the serialized record format stores explicit offsets, so the
    choice is recoverable.
    """
    start = question.text.find(text)
    if start < 0:
        raise SpanNotInQuestionError(f"argument text {text!r} does not occur in question {question.id}")
    if question.text.find(text, start + 1) >= 0:
        warnings.warn(
            f"text {text!r} occurs more than once in question {question.id}; using the first occurrence",
            MultipleOccurrencesWarning,
            stacklevel=2,
        )
    return Span(SpanSource.QUESTION, start, start + len(text), text)


class _Parser:
    def __init__(self, text: str, question: Question):
        self.text = text
        self.question = question
        self.pos = 0

    def parse(self) -> TrmrTree:
        self._skip_ws()
        tree = self._parse_op()
        self._skip_ws()
        if self.pos != len(self.text):
            raise TrmrSyntaxError(f"unexpected trailing text at offset {self.pos}")
        return tree

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _parse_op(self) -> TrmrTree:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] != "(":
            self.pos += 1
        if self.pos >= len(self.text):
            raise TrmrSyntaxError("expected '(' after operator name")
        name = self.text[start:self.pos].strip()
        if name not in REGISTRY:
            raise UnknownOperatorError(f"unknown operator {name!r}")
        self.pos += 1  # consume "("
        args: list[TreeArg] = []
        while True:
            args.append(self._parse_arg())
            self._skip_ws()
            if self.pos >= len(self.text):
                raise TrmrSyntaxError("unbalanced parentheses: expression ended inside an argument list")
            ch = self.text[self.pos]
            if ch == ",":
                self.pos += 1
                continue
            if ch == ")":
                self.pos += 1
                return TrmrTree(name, tuple(args))
            raise TrmrSyntaxError(f"expected ',' or ')' at offset {self.pos}")

    def _parse_arg(self) -> TreeArg:
        self._skip_ws()
        if self.pos >= len(self.text):
            raise TrmrSyntaxError("unbalanced parentheses: expected an argument")
        if self.text[self.pos] == '"':
            return self._parse_quoted()
        # Look ahead to the first structural character to decide between a
        # nested expression and plain span text.
        i = self.pos
        while i < len(self.text) and self.text[i] not in ",()":
            i += 1
        if i < len(self.text) and self.text[i] == "(":
            return self._parse_op()
        text = self.text[self.pos:i].strip()
        if not text:
            raise TrmrSyntaxError(f"empty argument at offset {self.pos}")
        self.pos = i
        return anchor_in_question(text, self.question)

    def _parse_quoted(self) -> Span:
        assert self.text[self.pos] == '"'
        self.pos += 1
        chunks: list[str] = []
        while True:
            if self.pos >= len(self.text):
                raise TrmrSyntaxError("unterminated quoted argument")
            ch = self.text[self.pos]
            if ch == '"':
                if self.pos + 1 < len(self.text) and self.text[self.pos + 1] == '"':
                    chunks.append('"')
                    self.pos += 2
                    continue
                self.pos += 1
                break
            chunks.append(ch)
            self.pos += 1
        text = "".join(chunks)
        if not text:
            raise TrmrSyntaxError("empty quoted argument")
        return anchor_in_question(text, self.question)


def parse_trmr(text: str, question: Question) -> TrmrTree:
    """Parse expression text against a question, anchoring every leaf span.

    Raises UnknownOperatorError, ArityError, SpanNotInQuestionError, or
    TrmrSyntaxError; the returned tree satisfies all structural invariants.
    """
    if not text or not text.strip():
        raise TrmrSyntaxError("empty expression")
    return _Parser(text, question).parse()


def typecheck(tree: TrmrTree) -> ResultKind:
    """Return the root's result kind, rejecting incompatible nesting.

    Span leaves are always acceptable (they are grounded at execution time).
    A nested child is legal only where the argument position can consume its
    result kind: count accepts a span-list child, and operators with numeric
    value slots accept number-kind children. Date slots and the span/select/
    sort/filter item positions admit no nesting.
    """
    sig = tree.signature()
    for i, arg in enumerate(tree.args):
        if not isinstance(arg, TrmrTree):
            continue
        child_kind = typecheck(arg)
        if tree.op == "count":
            if child_kind is not ResultKind.SPAN_LIST:
                raise KindMismatchError(
                    f"count needs a groundable item set; {arg.op} yields {child_kind.value}"
                )
        elif tree.op in NUMERIC_SLOT_OPS:
            if child_kind is not ResultKind.NUMBER:
                raise KindMismatchError(
                    f"{tree.op} argument {i + 1} needs a number; {arg.op} yields {child_kind.value}"
                )
        else:
            raise KindMismatchError(f"{tree.op} does not accept nested operations in argument {i + 1}")
    return sig.result_kind
