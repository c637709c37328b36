"""Span location and normalization of span texts into typed values.

Execution needs numbers, percents, dates, filter conditions, and superlative
polarity; all of them are re-parsed from span text on demand rather than
trusted from stored fields. The value lexicon is deliberately closed:
numerals with optional thousands commas and decimals, a "%" suffix,
hyphenated "<n>-<unit>" forms, trailing unit words, English number words
zero through twenty, and month-name dates. Anything else is unparseable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date as _date
from enum import Enum
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Union

from .lang import Passage, Question, Span, SpanSource, TrmrError


class UnparseableValueError(TrmrError):
    """Span text does not match the supported value lexicon."""


class UnparseableConditionError(TrmrError):
    """Condition text has no known comparator phrase or threshold."""


class UnknownSuperlativeError(TrmrError):
    """Superlative text is not in the polarity lexicon."""


class ValueKind(str, Enum):
    """What kind of value the caller expects a span text to denote."""

    NUMBER = "number"
    DATE = "date"


class Polarity(str, Enum):
    MAX = "max"
    MIN = "min"


@dataclass(frozen=True)
class NumberValue:
    value: Fraction
    unit: str | None = None


@dataclass(frozen=True)
class PercentValue:
    value: Fraction


@dataclass(frozen=True)
class DateValue:
    year: int
    month: int | None = None
    day: int | None = None

    def __post_init__(self) -> None:
        if self.month is not None and not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")
        if self.day is not None:
            if self.month is None:
                raise ValueError("a date with a day must also have a month")
            if not 1 <= self.day <= 31:
                raise ValueError(f"day out of range: {self.day}")


ParsedValue = Union[NumberValue, PercentValue, DateValue]


@dataclass(frozen=True)
class GroundedItem:
    """A grounded passage span, optionally paired with the entity it belongs to."""

    value_span: Span
    parsed: ParsedValue | None = None
    key_span: Span | None = None

    def __post_init__(self) -> None:
        if self.value_span.source is not SpanSource.PASSAGE:
            raise ValueError("grounded value spans must come from the passage")
        if self.key_span is not None and self.key_span.source is not SpanSource.PASSAGE:
            raise ValueError("grounded key spans must come from the passage")

    @property
    def key_text(self) -> str:
        return self.key_span.text if self.key_span is not None else self.value_span.text


@dataclass(frozen=True)
class GroundingEntry:
    path: tuple[int, ...]
    slot: str
    items: tuple[GroundedItem, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "path", tuple(self.path))
        object.__setattr__(self, "items", tuple(self.items))


@dataclass(frozen=True, init=False)
class Grounding:
    """Slot-to-passage-span assignments for one expression tree.

    Entries are keyed by (node path, slot name); construction sorts them
    canonically and rejects duplicate keys.
    """

    entries: tuple[GroundingEntry, ...]

    def __init__(self, entries: tuple[GroundingEntry, ...] | list[GroundingEntry] = ()):
        ordered = sorted(entries, key=lambda e: (e.path, e.slot))
        keys = [(e.path, e.slot) for e in ordered]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (path, slot) grounding entry")
        object.__setattr__(self, "entries", tuple(ordered))

    def get(self, path: tuple[int, ...], slot: str) -> tuple[GroundedItem, ...]:
        for entry in self.entries:
            if entry.path == tuple(path) and entry.slot == slot:
                return entry.items
        return ()

    def spans(self) -> list[Span]:
        out = []
        for entry in self.entries:
            for item in entry.items:
                out.append(item.value_span)
                if item.key_span is not None:
                    out.append(item.key_span)
        return out


@dataclass(frozen=True)
class Condition:
    comparator: str  # one of > >= < <= =
    threshold: Fraction
    unit: str | None = None

    def holds(self, value: Fraction) -> bool:
        if self.comparator == ">":
            return value > self.threshold
        if self.comparator == ">=":
            return value >= self.threshold
        if self.comparator == "<":
            return value < self.threshold
        if self.comparator == "<=":
            return value <= self.threshold
        if self.comparator == "=":
            return value == self.threshold
        raise ValueError(f"unknown comparator {self.comparator!r}")


def locate_occurrences(needle: str, source: Question | Passage) -> list[Span]:
    """All non-overlapping exact occurrences of ``needle``, left to right."""
    if not needle:
        raise ValueError("needle must be non-empty")
    kind = SpanSource.QUESTION if isinstance(source, Question) else SpanSource.PASSAGE
    spans = []
    start = source.text.find(needle)
    while start >= 0:
        spans.append(Span(kind, start, start + len(needle), needle))
        start = source.text.find(needle, start + len(needle))
    return spans


def span_at(source: Question | Passage, start: int, end: int) -> Span:
    """Build a span directly from offsets, caching the source substring."""
    if not (0 <= start < end <= len(source.text)):
        raise ValueError(f"offsets [{start}, {end}) out of range for text of length {len(source.text)}")
    kind = SpanSource.QUESTION if isinstance(source, Question) else SpanSource.PASSAGE
    return Span(kind, start, end, source.text[start:end])


# --- value extraction -------------------------------------------------------

_NUMERAL = r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?"
_UNIT = r"[A-Za-z]+(?:[ \-][A-Za-z]+)*"

_PERCENT_RE = re.compile(rf"^({_NUMERAL})\s*%$")
_PLAIN_RE = re.compile(rf"^({_NUMERAL})$")
_UNIT_RE = re.compile(rf"^({_NUMERAL})[ \-]({_UNIT})\.?$")

_NUMBER_WORDS = {
    w: i
    for i, w in enumerate(
        "zero one two three four five six seven eight nine ten eleven twelve thirteen "
        "fourteen fifteen sixteen seventeen eighteen nineteen twenty".split()
    )
}

_MONTHS = {}
for _i, _name in enumerate(
    "january february march april may june july august september october november december".split(),
    start=1,
):
    _MONTHS[_name] = _i
    _MONTHS[_name[:3]] = _i
_MONTHS["sept"] = 9

_MONTH = r"[A-Za-z]+\.?"
_DATE_MDY_RE = re.compile(rf"^({_MONTH})\s+(\d{{1,2}})(?:,\s*|\s+)(\d{{3,4}})$")
_DATE_DMY_RE = re.compile(rf"^(\d{{1,2}})\s+({_MONTH})(?:,\s*|\s+)(\d{{3,4}})$")
_DATE_MY_RE = re.compile(rf"^({_MONTH})(?:,\s*|\s+)(\d{{3,4}})$")
_DATE_Y_RE = re.compile(r"^(\d{3,4})$")


def _to_fraction(numeral: str) -> Fraction:
    return Fraction(numeral.replace(",", ""))


def _month_number(name: str) -> int | None:
    return _MONTHS.get(name.rstrip(".").lower())


def _parse_date(text: str) -> DateValue | None:
    m = _DATE_MDY_RE.match(text)
    if m:
        month = _month_number(m.group(1))
        if month is None:
            return None
        return _checked_date(int(m.group(3)), month, int(m.group(2)))
    m = _DATE_DMY_RE.match(text)
    if m:
        month = _month_number(m.group(2))
        if month is None:
            return None
        return _checked_date(int(m.group(3)), month, int(m.group(1)))
    m = _DATE_MY_RE.match(text)
    if m:
        month = _month_number(m.group(1))
        if month is None:
            return None
        return DateValue(int(m.group(2)), month)
    m = _DATE_Y_RE.match(text)
    if m:
        return DateValue(int(m.group(1)))
    return None


def _checked_date(year: int, month: int, day: int) -> DateValue | None:
    try:
        _date(year, month, day)
    except ValueError:
        return None
    return DateValue(year, month, day)


def extract_value(text: str, expected: ValueKind = ValueKind.NUMBER) -> ParsedValue:
    """Normalize a span text into a typed value of the expected kind.

    The same digits can denote a year or a quantity ("1915"), so the caller
    states what the slot needs; a date is returned only when requested.
    """
    stripped = text.strip()
    if expected is ValueKind.DATE:
        parsed = _parse_date(stripped)
        if parsed is None:
            raise UnparseableValueError(f"cannot read a date from {text!r}")
        return parsed
    m = _PERCENT_RE.match(stripped)
    if m:
        return PercentValue(_to_fraction(m.group(1)))
    m = _PLAIN_RE.match(stripped)
    if m:
        return NumberValue(_to_fraction(m.group(1)))
    m = _UNIT_RE.match(stripped)
    if m:
        return NumberValue(_to_fraction(m.group(1)), m.group(2))
    word = _NUMBER_WORDS.get(stripped.lower())
    if word is not None:
        return NumberValue(Fraction(word))
    raise UnparseableValueError(f"cannot read a number from {text!r}")


def numeric(value: ParsedValue) -> Fraction:
    """Magnitude of a numeric value; dates have none."""
    if isinstance(value, (NumberValue, PercentValue)):
        return value.value
    raise UnparseableValueError("expected a numeric value, got a date")


def unit_of(value: ParsedValue) -> str | None:
    if isinstance(value, PercentValue):
        return "%"
    if isinstance(value, NumberValue):
        return value.unit
    return None


def _canonical_unit(unit: str) -> str:
    u = unit.strip().rstrip(".").lower()
    if u in ("percent", "percents", "%"):
        return "%"
    if u.endswith("s") and not u.endswith("ss") and len(u) > 2:
        u = u[:-1]
    return u


def units_compatible(a: str | None, b: str | None) -> bool:
    """Units are carried, never converted; only an inflectional mismatch is forgiven."""
    if a is None or b is None:
        return True
    return _canonical_unit(a) == _canonical_unit(b)


# --- exact decimal rendering ------------------------------------------------


def format_number(x: Fraction | int) -> str:
    """Render a number as an exact decimal string (no binary-float drift).

    Values parsed from text always have power-of-ten denominators, so the
    expansion terminates; anything else falls back to "p/q".
    """
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    den = x.denominator
    exp2 = exp5 = 0
    while den % 2 == 0:
        den //= 2
        exp2 += 1
    while den % 5 == 0:
        den //= 5
        exp5 += 1
    if den != 1:
        return f"{x.numerator}/{x.denominator}"
    places = max(exp2, exp5)
    scaled = abs(x.numerator) * 10 ** places // x.denominator
    digits = str(scaled).rjust(places + 1, "0")
    whole, frac = digits[:-places], digits[-places:].rstrip("0")
    sign = "-" if x.numerator < 0 else ""
    return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"


def parse_number(text: str) -> Fraction:
    """Inverse of :func:`format_number`."""
    return Fraction(text)


def format_value(value: ParsedValue) -> str:
    if isinstance(value, PercentValue):
        return f"{format_number(value.value)}%"
    if isinstance(value, NumberValue):
        base = format_number(value.value)
        return f"{base} {value.unit}" if value.unit else base
    parts = [f"{value.year:04d}"]
    if value.month is not None:
        parts.append(f"{value.month:02d}")
    if value.day is not None:
        parts.append(f"{value.day:02d}")
    return "-".join(parts)


# --- lexicons ---------------------------------------------------------------


def load_lexicon(path: str | Path) -> dict[str, str]:
    """Read a phrase-TAB-tag lexicon file, skipping blanks and # comments."""
    table: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'phrase<TAB>tag'")
        phrase, tag = line.split("\t", 1)
        table[phrase.strip().lower()] = tag.strip()
    return table


def _default_lexicon(name: str) -> dict[str, str]:
    with resources.as_file(resources.files("trmr.data").joinpath(name)) as path:
        return load_lexicon(path)


_DEFAULT_SUPERLATIVES: dict[str, str] | None = None
_DEFAULT_COMPARATORS: dict[str, str] | None = None


def default_superlatives() -> dict[str, str]:
    global _DEFAULT_SUPERLATIVES
    if _DEFAULT_SUPERLATIVES is None:
        _DEFAULT_SUPERLATIVES = _default_lexicon("superlatives.txt")
    return _DEFAULT_SUPERLATIVES


def default_comparators() -> dict[str, str]:
    global _DEFAULT_COMPARATORS
    if _DEFAULT_COMPARATORS is None:
        _DEFAULT_COMPARATORS = _default_lexicon("comparators.txt")
    return _DEFAULT_COMPARATORS


def superlative_polarity(text: str, lexicon: dict[str, str] | None = None) -> Polarity:
    """Whether a superlative phrase selects the maximum or minimum item."""
    table = lexicon if lexicon is not None else default_superlatives()
    tag = table.get(text.strip().lower())
    if tag is None:
        raise UnknownSuperlativeError(f"superlative {text!r} is not in the lexicon")
    return Polarity(tag)


def parse_condition(text: str, lexicon: dict[str, str] | None = None) -> Condition:
    """Parse a filter condition phrase into comparator, threshold, and unit."""
    table = lexicon if lexicon is not None else default_comparators()
    lowered = text.strip().lower()
    for phrase in sorted(table, key=len, reverse=True):
        if lowered.startswith(phrase) and (len(lowered) == len(phrase) or lowered[len(phrase)].isspace()):
            rest = text.strip()[len(phrase):].strip()
            if not rest:
                raise UnparseableConditionError(f"condition {text!r} has no threshold")
            try:
                value = extract_value(rest, ValueKind.NUMBER)
            except UnparseableValueError as err:
                raise UnparseableConditionError(f"condition {text!r}: {err}") from err
            return Condition(table[phrase], numeric(value), unit_of(value))
    raise UnparseableConditionError(f"condition {text!r} has no known comparator phrase")
