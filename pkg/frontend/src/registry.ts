// Client-side mirror of the server's operator registry: everything the
// wizard needs for local pre-checks (the server remains the source of truth
// for real validation).

export type ArgKind = "ordinary" | "superlative" | "condition";
export type ResultKind = "number" | "entity" | "span" | "span_list";
export type SlotKind =
  | "number"
  | "numbers"
  | "percent"
  | "date"
  | "span"
  | "spans"
  | "number_items";

export interface SlotSpec {
  name: string;
  kind: SlotKind;
  required: boolean;
  argIndex: number | null;
  perArg: boolean;
}

export interface OperatorSig {
  name: string;
  minArity: number;
  maxArity: number | null;
  argKinds: ArgKind[]; // variadic operators repeat the last entry
  resultKind: ResultKind;
  slots: SlotSpec[];
}

function slot(
  name: string,
  kind: SlotKind,
  options: Partial<Pick<SlotSpec, "required" | "argIndex" | "perArg">> = {},
): SlotSpec {
  return { name, kind, required: true, argIndex: null, perArg: false, ...options };
}

function sig(
  name: string,
  minArity: number,
  maxArity: number | null,
  resultKind: ResultKind,
  slots: SlotSpec[],
  argKinds?: ArgKind[],
): OperatorSig {
  return {
    name,
    minArity,
    maxArity,
    argKinds: argKinds ?? Array(minArity).fill("ordinary"),
    resultKind,
    slots,
  };
}

export const REGISTRY: Record<string, OperatorSig> = Object.fromEntries(
  [
    sig("more", 2, 2, "number", [
      slot("arg1", "numbers", { argIndex: 0 }),
      slot("arg2", "numbers", { argIndex: 1 }),
    ]),
    sig("more-select", 2, 2, "entity", [
      slot("arg1", "number", { argIndex: 0 }),
      slot("arg2", "number", { argIndex: 1 }),
    ]),
    sig("less", 2, 2, "number", [
      slot("arg1", "numbers", { argIndex: 0 }),
      slot("arg2", "numbers", { argIndex: 1 }),
    ]),
    sig("less-select", 2, 2, "entity", [
      slot("arg1", "number", { argIndex: 0 }),
      slot("arg2", "number", { argIndex: 1 }),
    ]),
    sig("cu", 1, 1, "number", [
      slot("part", "percent", { argIndex: 0 }),
      slot("whole", "percent", { required: false }),
    ]),
    sig("completion-more", 1, 1, "number", [
      slot("target", "numbers", { argIndex: 0 }),
      slot("complement", "numbers"),
    ]),
    sig("completion-less", 1, 1, "number", [
      slot("target", "numbers", { argIndex: 0 }),
      slot("complement", "numbers"),
    ]),
    sig("after", 2, 2, "number", [
      slot("arg1", "date", { argIndex: 0 }),
      slot("arg2", "date", { argIndex: 1 }),
    ]),
    sig("after-select", 2, 2, "entity", [
      slot("arg1", "date", { argIndex: 0 }),
      slot("arg2", "date", { argIndex: 1 }),
    ]),
    sig("before", 2, 2, "number", [
      slot("arg1", "date", { argIndex: 0 }),
      slot("arg2", "date", { argIndex: 1 }),
    ]),
    sig("before-select", 2, 2, "entity", [
      slot("arg1", "date", { argIndex: 0 }),
      slot("arg2", "date", { argIndex: 1 }),
    ]),
    sig("sum", 2, null, "number", [slot("arg", "numbers", { perArg: true })]),
    sig("count", 1, 1, "number", [slot("items", "spans", { argIndex: 0 })]),
    sig("time-span", 1, 1, "number", [slot("start", "date"), slot("end", "date")]),
    sig("span", 1, 1, "span", [slot("item", "span", { argIndex: 0 })]),
    sig("sort", 2, 2, "entity", [slot("items", "number_items", { argIndex: 1 })], [
      "superlative",
      "ordinary",
    ]),
    sig("filter", 2, 2, "span_list", [slot("items", "number_items", { argIndex: 1 })], [
      "condition",
      "ordinary",
    ]),
  ].map((s) => [s.name, s]),
);

export const OPERATOR_NAMES = Object.keys(REGISTRY);

export function argKindAt(sig: OperatorSig, index: number): ArgKind {
  return index < sig.argKinds.length ? sig.argKinds[index] : sig.argKinds[sig.argKinds.length - 1];
}

/** Operators whose ordinary slots may hold number-kind child expressions. */
export const NUMERIC_SLOT_OPS = new Set([
  "more",
  "less",
  "sum",
  "cu",
  "completion-more",
  "completion-less",
]);
