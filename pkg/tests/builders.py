"""Small construction helpers shared by the test modules."""

from __future__ import annotations

from trmr.grounding import GroundedItem, Grounding, GroundingEntry
from trmr.lang import Passage, Question, Span, SpanSource


class PassageBuilder:
    """Assemble a passage from pieces while tracking exact span offsets."""

    def __init__(self, pid: str = "p"):
        self.pid = pid
        self._parts: list[str] = []
        self._pos = 0
        self.spans: dict[str, tuple[int, int]] = {}

    def add(self, text: str, tag: str | None = None) -> "PassageBuilder":
        if tag is not None:
            self.spans[tag] = (self._pos, self._pos + len(text))
        self._parts.append(text)
        self._pos += len(text)
        return self

    def build(self) -> Passage:
        return Passage(self.pid, "".join(self._parts))

    def span(self, tag: str) -> Span:
        start, end = self.spans[tag]
        text = "".join(self._parts)[start:end]
        return Span(SpanSource.PASSAGE, start, end, text)


def question_of(text: str, qid: str = "q", answer=None) -> Question:
    return Question(qid, "p", text, answer)


def qspan(question: Question, text: str) -> Span:
    start = question.text.find(text)
    assert start >= 0, f"{text!r} not in question"
    return Span(SpanSource.QUESTION, start, start + len(text), text)


def grounding_of(*entries: tuple[tuple[int, ...], str, list[GroundedItem]]) -> Grounding:
    return Grounding([GroundingEntry(path, slot, tuple(items)) for path, slot, items in entries])


def value_items(builder: PassageBuilder, *tags: str, keys: dict[str, str] | None = None) -> list[GroundedItem]:
    keys = keys or {}
    return [
        GroundedItem(builder.span(tag), key_span=builder.span(keys[tag]) if tag in keys else None)
        for tag in tags
    ]
