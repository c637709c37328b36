// Tree construction and the local pre-checks that gate wizard navigation.
// These mirror the server rules closely enough to block bad steps early;
// the server re-validates everything on submit.

import { NUMERIC_SLOT_OPS, REGISTRY, SlotKind, argKindAt } from "./registry";
import { SpanSelection, TreeArg, TreeNode } from "./types";

export interface CheckResult {
  ok: boolean;
  reason?: string;
}

export function spanArg(selection: SpanSelection): TreeArg {
  if (selection.source !== "question") {
    throw new Error("tree arguments must be question spans");
  }
  return { kind: "span", start: selection.start, end: selection.end, text: selection.text };
}

export function arity(node: TreeNode): CheckResult {
  const sig = REGISTRY[node.op];
  if (!sig) return { ok: false, reason: `unknown operator ${node.op}` };
  if (node.args.length < sig.minArity) {
    return { ok: false, reason: `${node.op} needs ${sig.minArity} argument(s), has ${node.args.length}` };
  }
  if (sig.maxArity !== null && node.args.length > sig.maxArity) {
    return { ok: false, reason: `${node.op} takes at most ${sig.maxArity} argument(s)` };
  }
  return { ok: true };
}

/** Result kind of a complete tree, or a reason why it does not typecheck. */
export function typecheckLocal(node: TreeNode): { kind?: string; error?: string } {
  const sig = REGISTRY[node.op];
  if (!sig) return { error: `unknown operator ${node.op}` };
  const arityCheck = arity(node);
  if (!arityCheck.ok) return { error: arityCheck.reason };
  for (let i = 0; i < node.args.length; i++) {
    const arg = node.args[i];
    const kindAt = argKindAt(sig, i);
    if (kindAt !== "ordinary" && arg.kind !== "span") {
      return { error: `${node.op} argument ${i + 1} must be a question span (${kindAt} slot)` };
    }
    if (arg.kind === "op") {
      const child = typecheckLocal(arg.node);
      if (child.error) return child;
      if (node.op === "count") {
        if (child.kind !== "span_list") {
          return { error: `count needs a groundable item set; ${arg.node.op} yields ${child.kind}` };
        }
      } else if (NUMERIC_SLOT_OPS.has(node.op)) {
        if (child.kind !== "number") {
          return { error: `${node.op} argument ${i + 1} needs a number; ${arg.node.op} yields ${child.kind}` };
        }
      } else {
        return { error: `${node.op} does not accept nested operations` };
      }
    }
  }
  return { kind: sig.resultKind };
}

export interface SlotRequirement {
  path: number[];
  slot: string;
  kind: SlotKind;
}

function walkPostOrder(node: TreeNode, path: number[], out: { path: number[]; node: TreeNode }[]): void {
  node.args.forEach((arg, i) => {
    if (arg.kind === "op") walkPostOrder(arg.node, [...path, i], out);
  });
  out.push({ path, node });
}

/** Every slot the executor will read — one per ordinary argument for
 * variadic operators, skipping slots whose argument is a nested expression. */
export function requiredSlots(tree: TreeNode): SlotRequirement[] {
  const nodes: { path: number[]; node: TreeNode }[] = [];
  walkPostOrder(tree, [], nodes);
  const out: SlotRequirement[] = [];
  for (const { path, node } of nodes) {
    const sig = REGISTRY[node.op];
    if (!sig) continue;
    for (const spec of sig.slots) {
      if (spec.perArg) {
        node.args.forEach((arg, i) => {
          if (arg.kind !== "op") out.push({ path, slot: `${spec.name}${i + 1}`, kind: spec.kind });
        });
        continue;
      }
      if (!spec.required) continue;
      if (spec.argIndex !== null && node.args[spec.argIndex]?.kind === "op") continue;
      out.push({ path, slot: spec.name, kind: spec.kind });
    }
  }
  return out;
}

const NEEDS_QUOTES = /[,()"]/;

function quoteIfNeeded(text: string): string {
  if (NEEDS_QUOTES.test(text) || text !== text.trim() || text === "") {
    return `"${text.replace(/"/g, '""')}"`;
  }
  return text;
}

/** Display-only rendering of the working expression. */
export function serialize(node: TreeNode): string {
  const parts = node.args.map((arg) =>
    arg.kind === "op" ? serialize(arg.node) : quoteIfNeeded(arg.text),
  );
  return `${node.op}(${parts.join(", ")})`;
}

export function pathsEqual(a: number[], b: number[]): boolean {
  return a.length === b.length && a.every((x, i) => x === b[i]);
}
