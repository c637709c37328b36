"""Answer derivation: turn a tree plus grounding into an executable plan.

A plan has one step per tree node, children before parents. Each step records
its labeled inputs (parsed values, span texts, or references to earlier
steps), its output, and a rendered one-line summary. Execution recomputes
every step from its recorded inputs, so an annotator may edit input values
and re-execute without re-grounding.

Numeric work uses exact fractions end to end: sums and differences of
decimal-parsed values never drift.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date as _date
from fractions import Fraction
from typing import Union

from .grounding import (
    Condition,
    DateValue,
    Grounding,
    NumberValue,
    ParsedValue,
    PercentValue,
    UnparseableValueError,
    ValueKind,
    extract_value,
    format_number,
    format_value,
    numeric,
    parse_condition,
    superlative_polarity,
    unit_of,
    units_compatible,
    Polarity,
)
from .lang import (
    Question,
    SlotKind,
    SlotSpec,
    Span,
    TrmrError,
    TrmrTree,
    typecheck,
)


class DerivationError(TrmrError):
    """Base for execution-time failures; carries the failing node path."""

    def __init__(self, message: str, path: tuple[int, ...] | None = None):
        self.path = path
        super().__init__(message if path is None else f"at node {list(path)}: {message}")


class MissingSlotError(DerivationError):
    """A required grounding slot has no items."""


class UnitMismatchError(DerivationError):
    """Values with conflicting non-empty units were combined or compared."""


class AmbiguousDateError(DerivationError):
    """Date precision is insufficient for the requested computation."""


class AmbiguousSelectionError(DerivationError):
    """A selection or superlative tied; no silent pick is made."""


class EmptyAnswerError(DerivationError):
    """The final step produced an empty span list."""


@dataclass(frozen=True)
class NumberAnswer:
    value: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class SpanAnswer:
    texts: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "texts", tuple(self.texts))
        if not self.texts:
            raise EmptyAnswerError("a span answer must contain at least one text")


@dataclass(frozen=True)
class DateAnswer:
    year: int | None = None
    month: int | None = None
    day: int | None = None

    def __post_init__(self) -> None:
        if self.year is None and self.month is None and self.day is None:
            raise ValueError("a date answer must populate at least one component")


Answer = Union[NumberAnswer, SpanAnswer, DateAnswer]

StepOutput = Union[ParsedValue, str, tuple[str, ...]]


@dataclass(frozen=True)
class StepInput:
    """One labeled input of a derivation step.

    ``role`` is what the executor reads (slot or operand name); ``label`` is
    the display name (for item lists, the entity the value belongs to).
    Exactly one of ``value`` and ``step`` is set; ``step`` references the
    output of an earlier step.
    """

    role: str
    label: str
    value: ParsedValue | str | None = None
    step: int | None = None

    def __post_init__(self) -> None:
        if (self.value is None) == (self.step is None):
            raise ValueError("a step input carries either a value or a step reference")


@dataclass(frozen=True)
class DerivationStep:
    op: str
    path: tuple[int, ...]
    inputs: tuple[StepInput, ...]
    output: StepOutput
    rendered: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "path", tuple(self.path))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if isinstance(self.output, (list, tuple)):
            object.__setattr__(self, "output", tuple(self.output))


@dataclass(frozen=True)
class DerivationPlan:
    steps: tuple[DerivationStep, ...]
    final: Answer
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    def rendered_lines(self) -> list[str]:
        return [step.rendered for step in self.steps]


# --- slot enumeration -------------------------------------------------------


def concrete_slots(node: TrmrTree) -> list[SlotSpec]:
    """The slot list for one node, with variadic templates expanded."""
    out: list[SlotSpec] = []
    for spec in node.signature().grounding_slots:
        if spec.per_arg:
            for i in range(len(node.args)):
                out.append(replace(spec, name=f"{spec.name}{i + 1}", arg_index=i, per_arg=False))
        else:
            out.append(spec)
    return out


def required_slots(tree: TrmrTree) -> list[tuple[tuple[int, ...], str, SlotKind]]:
    """Every grounding slot execution will read, children before parents.

    Slots tied to an argument position are skipped when that argument is a
    nested expression: the value comes from the child step instead.
    """
    out = []
    for path, node in tree.walk():
        for spec in concrete_slots(node):
            if not spec.required:
                continue
            if spec.arg_index is not None and isinstance(node.args[spec.arg_index], TrmrTree):
                continue
            out.append((path, spec.name, spec.kind))
    return out


# --- date arithmetic --------------------------------------------------------


def _complete_date(value: DateValue, path: tuple[int, ...]) -> _date:
    """Day-level completion for difference computations: missing day becomes 1."""
    if value.month is None:
        raise AmbiguousDateError(
            f"date {format_value(value)} has no month; day counting needs at least month precision", path
        )
    return _date(value.year, value.month, value.day if value.day is not None else 1)


def days_between(start: DateValue, end: DateValue, path: tuple[int, ...] = ()) -> int:
    return _complete_date(end, path).toordinal() - _complete_date(start, path).toordinal()


def compare_dates(a: DateValue, b: DateValue, path: tuple[int, ...] = ()) -> int:
    """Order two possibly partial dates: -1, 0, or 1.

    No component is ever defaulted here; if the populated components cannot
    decide the order, the comparison is ambiguous. 0 is returned only when
    both dates agree at identical precision.
    """
    if a.year != b.year:
        return -1 if a.year < b.year else 1
    if a.month is None or b.month is None:
        if a.month is None and b.month is None:
            return 0
        raise AmbiguousDateError(
            f"cannot order {format_value(a)} and {format_value(b)}: month precision differs", path
        )
    if a.month != b.month:
        return -1 if a.month < b.month else 1
    if a.day is None or b.day is None:
        if a.day is None and b.day is None:
            return 0
        raise AmbiguousDateError(
            f"cannot order {format_value(a)} and {format_value(b)}: day precision differs", path
        )
    if a.day != b.day:
        return -1 if a.day < b.day else 1
    return 0


def _months_between(start: DateValue, end: DateValue, path: tuple[int, ...]) -> int:
    if start.month is None or end.month is None:
        raise AmbiguousDateError("a month span needs month precision on both dates", path)
    months = (end.year - start.year) * 12 + (end.month - start.month)
    if start.day is not None and end.day is not None and end.day < start.day:
        months -= 1
    return months


def _years_between(start: DateValue, end: DateValue, path: tuple[int, ...]) -> int:
    years = end.year - start.year
    if start.month is not None and end.month is not None:
        if end.month < start.month:
            years -= 1
        elif end.month == start.month and start.day is not None and end.day is not None and end.day < start.day:
            years -= 1
    return years


def time_unit_for_question(question: Question | None) -> str:
    """Unit keyword for a duration answer; defaults to days."""
    if question is not None:
        lowered = question.text.lower()
        if "year" in lowered:
            return "years"
        if "month" in lowered:
            return "months"
    return "days"


# --- input construction -----------------------------------------------------


def _parse_item_value(text: str, kind: SlotKind, path: tuple[int, ...]) -> ParsedValue:
    expected = ValueKind.DATE if kind is SlotKind.DATE else ValueKind.NUMBER
    try:
        return extract_value(text, expected)
    except UnparseableValueError as err:
        raise UnparseableValueError(f"at node {list(path)}: {err}") from err


def _build_inputs(
    node: TrmrTree,
    path: tuple[int, ...],
    grounding: Grounding,
    question: Question | None,
    step_index: dict[tuple[int, ...], int],
) -> list[StepInput]:
    inputs: list[StepInput] = []
    if node.op == "filter":
        inputs.append(StepInput("condition", "condition", value=node.args[0].text))  # type: ignore[union-attr]
    elif node.op == "sort":
        inputs.append(StepInput("superlative", "superlative", value=node.args[0].text))  # type: ignore[union-attr]
    elif node.op == "time-span":
        inputs.append(StepInput("unit", "unit", value=time_unit_for_question(question)))
    is_select = node.op.endswith("-select")
    for spec in concrete_slots(node):
        if spec.arg_index is not None and isinstance(node.args[spec.arg_index], TrmrTree):
            child = path + (spec.arg_index,)
            inputs.append(StepInput(spec.name, spec.name, step=step_index[child]))
            continue
        items = grounding.get(path, spec.name)
        if not items:
            if spec.required:
                raise MissingSlotError(f"required slot {spec.name!r} is not grounded", path)
            continue
        if spec.kind in (SlotKind.NUMBER, SlotKind.DATE) and len(items) > 1:
            message = f"slot {spec.name!r} needs exactly one value, got {len(items)}"
            if spec.kind is SlotKind.DATE:
                raise AmbiguousDateError(message, path)
            raise AmbiguousSelectionError(message, path)
        if spec.kind is SlotKind.SPAN and len(items) > 1:
            raise AmbiguousSelectionError(f"slot {spec.name!r} needs exactly one span, got {len(items)}", path)
        for item in items:
            if spec.kind in (SlotKind.SPAN, SlotKind.SPANS):
                role = "item" if spec.kind is SlotKind.SPANS else spec.name
                inputs.append(StepInput(role, item.value_span.text, value=item.value_span.text))
                continue
            value = _parse_item_value(item.value_span.text, spec.kind, path)
            if spec.kind is SlotKind.NUMBER_ITEMS:
                inputs.append(StepInput("item", item.key_text, value=value))
            elif is_select:
                arg = node.args[spec.arg_index] if spec.arg_index is not None else None
                display = item.key_span.text if item.key_span is not None else (
                    arg.text if isinstance(arg, Span) else item.value_span.text
                )
                inputs.append(StepInput(spec.name, display, value=value))
            else:
                inputs.append(StepInput(spec.name, spec.name, value=value))
    return inputs


# --- step computation -------------------------------------------------------


def _resolve(inp: StepInput, outputs: list[StepOutput], path: tuple[int, ...]) -> StepOutput:
    if inp.step is not None:
        if not 0 <= inp.step < len(outputs):
            raise DerivationError(f"input {inp.label!r} references step {inp.step + 1} which has not run", path)
        return outputs[inp.step]
    assert inp.value is not None
    return inp.value


def _as_numeric(value: StepOutput, label: str, path: tuple[int, ...]) -> tuple[Fraction, str | None]:
    if isinstance(value, (NumberValue, PercentValue)):
        return numeric(value), unit_of(value)
    raise DerivationError(f"input {label!r} is not numeric", path)


def _merge_unit(a: str | None, b: str | None, path: tuple[int, ...]) -> str | None:
    if not units_compatible(a, b):
        raise UnitMismatchError(f"units {a!r} and {b!r} conflict", path)
    return a if a is not None else b


def _sum_role(
    inputs: list[tuple[StepInput, StepOutput]],
    role: str,
    path: tuple[int, ...],
    required: bool = True,
) -> tuple[Fraction, str | None] | None:
    total = Fraction(0)
    unit: str | None = None
    seen = False
    for inp, value in inputs:
        if inp.role != role:
            continue
        v, u = _as_numeric(value, inp.label, path)
        unit = _merge_unit(unit, u, path)
        total += v
        seen = True
    if not seen:
        if required:
            raise MissingSlotError(f"no input for {role!r}", path)
        return None
    return total, unit


def _single_role(
    inputs: list[tuple[StepInput, StepOutput]], role: str, path: tuple[int, ...]
) -> tuple[StepInput, StepOutput]:
    found = [(inp, value) for inp, value in inputs if inp.role == role]
    if not found:
        raise MissingSlotError(f"no input for {role!r}", path)
    if len(found) > 1:
        raise DerivationError(f"expected exactly one input for {role!r}, got {len(found)}", path)
    return found[0]


def _single_date(inputs: list[tuple[StepInput, StepOutput]], role: str, path: tuple[int, ...]) -> DateValue:
    dates = [(inp, value) for inp, value in inputs if inp.role == role]
    if not dates:
        raise MissingSlotError(f"no input for {role!r}", path)
    if len(dates) > 1:
        raise AmbiguousDateError(f"slot {role!r} needs exactly one date, got {len(dates)}", path)
    _, value = dates[0]
    if not isinstance(value, DateValue):
        raise DerivationError(f"input for {role!r} is not a date", path)
    return value


def _number_items(
    inputs: list[tuple[StepInput, StepOutput]], path: tuple[int, ...]
) -> list[tuple[str, Fraction, str | None]]:
    items = []
    for inp, value in inputs:
        if inp.role != "item":
            continue
        v, u = _as_numeric(value, inp.label, path)
        items.append((inp.label, v, u))
    return items


def _compute_step(
    op: str,
    inputs: list[tuple[StepInput, StepOutput]],
    path: tuple[int, ...],
) -> tuple[StepOutput, list[str]]:
    warnings: list[str] = []

    def warn_if_negative(value: Fraction) -> None:
        if value < 0:
            warnings.append(
                f"{op} at node {list(path)} produced a negative result ({format_number(value)}); "
                "check the argument order"
            )

    if op in ("more", "less"):
        a, unit_a = _sum_role(inputs, "arg1", path)
        b, unit_b = _sum_role(inputs, "arg2", path)
        _merge_unit(unit_a, unit_b, path)
        value = a - b if op == "more" else b - a
        return NumberValue(value, unit_a or unit_b), warnings
    if op == "sum":
        total = Fraction(0)
        unit: str | None = None
        seen = False
        for inp, value in inputs:
            v, u = _as_numeric(value, inp.label, path)
            unit = _merge_unit(unit, u, path)
            total += v
            seen = True
        if not seen:
            raise MissingSlotError("sum has no inputs", path)
        return NumberValue(total, unit), warnings
    if op == "cu":
        part, part_unit = _sum_role(inputs, "part", path)
        whole_pair = _sum_role(inputs, "whole", path, required=False)
        if whole_pair is None:
            whole = Fraction(100)
        else:
            whole, whole_unit = whole_pair
            _merge_unit(part_unit, whole_unit, path)
        return NumberValue(whole - part), warnings
    if op in ("completion-more", "completion-less"):
        target, unit_t = _sum_role(inputs, "target", path)
        complement, unit_c = _sum_role(inputs, "complement", path)
        _merge_unit(unit_t, unit_c, path)
        value = target - complement if op == "completion-more" else complement - target
        warn_if_negative(value)
        return NumberValue(value, unit_t or unit_c), warnings
    if op in ("after", "before"):
        d1 = _single_date(inputs, "arg1", path)
        d2 = _single_date(inputs, "arg2", path)
        days = days_between(d1, d2, path) if op == "after" else days_between(d2, d1, path)
        warn_if_negative(Fraction(days))
        return NumberValue(Fraction(days), "days"), warnings
    if op in ("after-select", "before-select"):
        in1, v1 = _single_role(inputs, "arg1", path)
        in2, v2 = _single_role(inputs, "arg2", path)
        if not isinstance(v1, DateValue) or not isinstance(v2, DateValue):
            raise DerivationError(f"{op} needs dates on both sides", path)
        order = compare_dates(v1, v2, path)
        if order == 0:
            raise AmbiguousSelectionError(f"{op}: both dates are equal", path)
        later = in1.label if order > 0 else in2.label
        earlier = in1.label if order < 0 else in2.label
        return (later if op == "after-select" else earlier), warnings
    if op in ("more-select", "less-select"):
        in1, v1 = _single_role(inputs, "arg1", path)
        in2, v2 = _single_role(inputs, "arg2", path)
        a, unit_a = _as_numeric(v1, in1.label, path)
        b, unit_b = _as_numeric(v2, in2.label, path)
        _merge_unit(unit_a, unit_b, path)
        if a == b:
            raise AmbiguousSelectionError(f"{op}: both values equal {format_number(a)}", path)
        larger = in1.label if a > b else in2.label
        smaller = in1.label if a < b else in2.label
        return (larger if op == "more-select" else smaller), warnings
    if op == "count":
        refs = [(inp, value) for inp, value in inputs if inp.step is not None or inp.role == "items"]
        if refs:
            _, value = refs[0]
            if not isinstance(value, tuple):
                raise DerivationError("count needs an item list", path)
            return NumberValue(Fraction(len(value))), warnings
        n = sum(1 for inp, _ in inputs if inp.role == "item")
        if n == 0:
            raise MissingSlotError("count has no grounded items", path)
        return NumberValue(Fraction(n)), warnings
    if op == "time-span":
        _, unit_value = _single_role(inputs, "unit", path)
        unit_name = unit_value if isinstance(unit_value, str) else "days"
        start = _single_date(inputs, "start", path)
        end = _single_date(inputs, "end", path)
        if unit_name == "years":
            span = _years_between(start, end, path)
        elif unit_name == "months":
            span = _months_between(start, end, path)
        else:
            span = days_between(start, end, path)
        return NumberValue(Fraction(span), unit_name), warnings
    if op == "span":
        _, value = _single_role(inputs, "item", path)
        if not isinstance(value, str):
            raise DerivationError("span needs a passage span text", path)
        return value, warnings
    if op == "sort":
        _, sup = _single_role(inputs, "superlative", path)
        polarity = superlative_polarity(str(sup))
        items = _number_items(inputs, path)
        if not items:
            raise MissingSlotError("sort has no grounded items", path)
        unit = None
        for _, _, u in items:
            unit = _merge_unit(unit, u, path)
        extreme = (max if polarity is Polarity.MAX else min)(v for _, v, _ in items)
        winners = [label for label, v, _ in items if v == extreme]
        if len(winners) > 1:
            raise AmbiguousSelectionError(
                f"sort: {len(winners)} items tie at {format_number(extreme)}", path
            )
        return winners[0], warnings
    if op == "filter":
        _, cond_text = _single_role(inputs, "condition", path)
        condition = _condition_from(cond_text, path)
        items = _number_items(inputs, path)
        kept = []
        for label, v, u in items:
            if not units_compatible(u, condition.unit):
                raise UnitMismatchError(f"item {label!r} unit {u!r} conflicts with condition unit {condition.unit!r}", path)
            if condition.holds(v):
                kept.append(label)
        return tuple(kept), warnings
    raise DerivationError(f"no execution semantics for operator {op!r}", path)


def _condition_from(value: StepOutput, path: tuple[int, ...]) -> Condition:
    if not isinstance(value, str):
        raise DerivationError("filter needs a condition text", path)
    return parse_condition(value)


# --- rendering and answers --------------------------------------------------


def _format_output(output: StepOutput) -> str:
    if isinstance(output, tuple):
        return "[" + ", ".join(output) + "]"
    if isinstance(output, str):
        return output
    return format_value(output)


def _format_input(inp: StepInput) -> str:
    if inp.step is not None:
        return f"{inp.label}=#{inp.step + 1}"
    if isinstance(inp.value, str) and inp.value == inp.label:
        return inp.label
    assert inp.value is not None
    value_text = inp.value if isinstance(inp.value, str) else format_value(inp.value)
    return f"{inp.label}={value_text}"


def _render_step(op: str, inputs: list[StepInput], output: StepOutput) -> str:
    return f"{op}: {', '.join(_format_input(i) for i in inputs)} → {_format_output(output)}"


def to_answer(output: StepOutput) -> Answer:
    if isinstance(output, (NumberValue, PercentValue)):
        return NumberAnswer(numeric(output))
    if isinstance(output, DateValue):
        return DateAnswer(output.year, output.month, output.day)
    if isinstance(output, str):
        return SpanAnswer((output,))
    return SpanAnswer(output)


# --- public operations ------------------------------------------------------


def auto_derive(tree: TrmrTree, grounding: Grounding, question: Question | None = None) -> DerivationPlan:
    """Generate the execution plan for a tree over its grounding.

    The plan evaluates the tree bottom-up with one step per node and is
    deterministic given its inputs. The question, when provided, only selects
    the reporting unit for durations.
    """
    typecheck(tree)
    steps: list[DerivationStep] = []
    outputs: list[StepOutput] = []
    step_index: dict[tuple[int, ...], int] = {}
    warnings: list[str] = []
    for path, node in tree.walk():
        inputs = _build_inputs(node, path, grounding, question, step_index)
        resolved = [(inp, _resolve(inp, outputs, path)) for inp in inputs]
        output, step_warnings = _compute_step(node.op, resolved, path)
        steps.append(DerivationStep(node.op, path, tuple(inputs), output, _render_step(node.op, inputs, output)))
        outputs.append(output)
        step_index[path] = len(steps) - 1
        warnings.extend(step_warnings)
    return DerivationPlan(tuple(steps), to_answer(outputs[-1]), tuple(warnings))


def reexecute(plan: DerivationPlan) -> DerivationPlan:
    """Recompute every step from its recorded inputs.

    Returns a plan with refreshed outputs, rendered lines, final answer, and
    warnings; annotator edits to step inputs are honored.
    """
    steps: list[DerivationStep] = []
    outputs: list[StepOutput] = []
    warnings: list[str] = []
    for k, step in enumerate(plan.steps):
        for inp in step.inputs:
            if inp.step is not None and inp.step >= k:
                raise DerivationError(f"step {k + 1} references step {inp.step + 1}", step.path)
        resolved = [(inp, _resolve(inp, outputs, step.path)) for inp in step.inputs]
        output, step_warnings = _compute_step(step.op, resolved, step.path)
        steps.append(replace(step, output=output, rendered=_render_step(step.op, list(step.inputs), output)))
        outputs.append(output)
        warnings.extend(step_warnings)
    if not steps:
        raise DerivationError("plan has no steps")
    return DerivationPlan(tuple(steps), to_answer(outputs[-1]), tuple(warnings))


def execute(plan: DerivationPlan) -> Answer:
    """Re-evaluate a plan and return its final answer."""
    return reexecute(plan).final


def edit_step_input(plan: DerivationPlan, step: int, input_index: int, value: ParsedValue | str) -> DerivationPlan:
    """Return a plan with one literal input replaced (annotator edit), re-executed."""
    target = plan.steps[step]
    inputs = list(target.inputs)
    if inputs[input_index].step is not None:
        raise ValueError("step references cannot be edited; edit the referenced step instead")
    inputs[input_index] = replace(inputs[input_index], value=value)
    steps = list(plan.steps)
    steps[step] = replace(target, inputs=tuple(inputs))
    return reexecute(DerivationPlan(tuple(steps), plan.final, plan.warnings))
