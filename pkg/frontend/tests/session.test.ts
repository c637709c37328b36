// Wizard gating rules, exercised against a stubbed service.

import { describe, expect, it } from "vitest";

import { ServiceApi } from "../src/api";
import { selectionOf, nudge } from "../src/selection";
import { AnnotationSession } from "../src/session";
import { requiredSlots, serialize, typecheckLocal } from "../src/trmr";
import { Task, WirePlan } from "../src/types";

const QUESTION = "How many field goals over 40 yards were made?";
const PASSAGE = "Akers hit a 44-yard FG. Gould hit a 48-yard FG. Akers hit a 23-yard FG.";

function fakeTask(): Task {
  return {
    kind: "annotate",
    question: { id: "q-1", passage_id: "p-1", text: QUESTION },
    passage: { id: "p-1", text: PASSAGE },
  };
}

function fakePlan(finalValue: string): WirePlan {
  return {
    steps: [
      {
        op: "filter",
        path: [0],
        inputs: [
          { role: "condition", label: "condition", text: "over 40 yards" },
          { role: "item", label: "44-yard FG", value: { kind: "number", value: "44", unit: "yard" } },
        ],
        output: { kind: "texts", texts: ["44-yard FG"] },
        rendered: "filter: ...",
      },
      {
        op: "count",
        path: [],
        inputs: [{ role: "items", label: "items", step: 0 }],
        output: { kind: "value", value: { kind: "number", value: finalValue, unit: null } },
        rendered: "count: ...",
      },
    ],
    final: { kind: "number", value: finalValue },
    warnings: [],
  };
}

function fakeApi(overrides: Partial<Record<string, unknown>> = {}): ServiceApi {
  const api = {
    calls: [] as string[],
    async nextTask() {
      return fakeTask();
    },
    async postAnnotation(payload: { submit: boolean }) {
      api.calls.push(payload.submit ? "submit" : "draft");
      return {
        record: {
          id: "rec-0000",
          version: api.calls.length,
          status: payload.submit ? "submitted" : "draft",
          consistency: payload.submit ? true : null,
        },
        issues: [],
      };
    },
    async derive(_id: string, body: { plan?: WirePlan }) {
      api.calls.push(body.plan ? "derive-edited" : "derive");
      return { plan: body.plan ? fakePlan("3") : fakePlan("2") };
    },
    ...overrides,
  };
  return api as unknown as ServiceApi;
}

async function sessionAtStep1(): Promise<AnnotationSession> {
  const session = new AnnotationSession(fakeApi(), "ann-1");
  await session.start();
  return session;
}

function buildFigureTree(session: AnnotationSession): void {
  session.chooseOperator("filter");
  session.addQuestionSpan(selectionOf("question", QUESTION, "over 40 yards"));
  session.addQuestionSpan(selectionOf("question", QUESTION, "field goals"));
  session.wrapWith("count");
}

describe("step 1: problem parsing", () => {
  it("builds the nested tree from operator choices and highlights", async () => {
    const session = await sessionAtStep1();
    buildFigureTree(session);
    expect(session.expressionPreview()).toBe("count(filter(over 40 yards, field goals))");
    expect(session.treeCheck().ok).toBe(true);
  });

  it("blocks step 2 while the arity is unmet", async () => {
    const session = await sessionAtStep1();
    session.chooseOperator("filter");
    session.addQuestionSpan(selectionOf("question", QUESTION, "over 40 yards"));
    const gate = session.goToStep(2);
    expect(gate.ok).toBe(false);
    expect(gate.reason).toMatch(/needs 2 argument/);
    expect(session.step).toBe(1);
  });

  it("blocks step 2 on kind mismatches", async () => {
    const session = await sessionAtStep1();
    session.chooseOperator("count");
    session.addQuestionSpan(selectionOf("question", QUESTION, "field goals"));
    session.wrapWith("count"); // count over count: number, not an item set
    const gate = session.goToStep(2);
    expect(gate.ok).toBe(false);
    expect(gate.reason).toMatch(/groundable item set/);
  });

  it("never accepts passage spans or free text as tree arguments", async () => {
    const session = await sessionAtStep1();
    session.chooseOperator("span");
    expect(() =>
      session.addQuestionSpan(selectionOf("passage", PASSAGE, "44-yard FG")),
    ).toThrow(/question spans/);
  });

  it("accepts overlapping question spans for two arguments", async () => {
    const session = await sessionAtStep1();
    session.chooseOperator("more");
    session.addQuestionSpan(selectionOf("question", QUESTION, "field goals over 40"));
    session.addQuestionSpan(selectionOf("question", QUESTION, "over 40 yards"));
    expect(session.treeCheck().ok).toBe(true);
  });

  it("rejects extra arguments beyond the arity", async () => {
    const session = await sessionAtStep1();
    session.chooseOperator("cu");
    session.addQuestionSpan(selectionOf("question", QUESTION, "field goals"));
    expect(() => session.addQuestionSpan(selectionOf("question", QUESTION, "40 yards"))).toThrow(
      /all its arguments/,
    );
  });
});

describe("step 2: information retrieval", () => {
  async function sessionAtStep2(): Promise<AnnotationSession> {
    const session = await sessionAtStep1();
    buildFigureTree(session);
    expect(session.goToStep(2).ok).toBe(true);
    return session;
  }

  it("lists only the slots execution will read", async () => {
    const session = await sessionAtStep2();
    expect(session.requiredSlots()).toEqual([{ path: [0], slot: "items", kind: "number_items" }]);
  });

  it("fills a slot from passage highlights and reports the count", async () => {
    const session = await sessionAtStep2();
    session.addGroundingItem(
      [0],
      "items",
      selectionOf("passage", PASSAGE, "44-yard"),
      selectionOf("passage", PASSAGE, "44-yard FG"),
    );
    session.addGroundingItem([0], "items", selectionOf("passage", PASSAGE, "48-yard"));
    session.addGroundingItem([0], "items", selectionOf("passage", PASSAGE, "23-yard"));
    expect(session.slotItems([0], "items")).toHaveLength(3);
    expect(session.groundingCheck().ok).toBe(true);
  });

  it("blocks step 3 until every required slot is non-empty", async () => {
    const session = await sessionAtStep2();
    const gate = session.goToStep(3);
    expect(gate.ok).toBe(false);
    expect(gate.reason).toMatch(/items/);
    session.addGroundingItem([0], "items", selectionOf("passage", PASSAGE, "44-yard"));
    expect(session.goToStep(3).ok).toBe(true);
  });

  it("keeps offsets bound at selection time", async () => {
    const session = await sessionAtStep2();
    const selection = selectionOf("passage", PASSAGE, "48-yard");
    session.addGroundingItem([0], "items", selection);
    const stored = session.slotItems([0], "items")[0].value_span;
    expect(stored).toEqual({ start: selection.start, end: selection.end, text: "48-yard" });
    expect(PASSAGE.slice(stored.start, stored.end)).toBe("48-yard");
  });

  it("rejects question-side highlights for grounding", async () => {
    const session = await sessionAtStep2();
    expect(() =>
      session.addGroundingItem([0], "items", selectionOf("question", QUESTION, "field goals")),
    ).toThrow(/passage highlights/);
  });
});

describe("step 3: derivation review", () => {
  async function sessionAtStep3(): Promise<AnnotationSession> {
    const session = await sessionAtStep1();
    buildFigureTree(session);
    session.goToStep(2);
    session.addGroundingItem([0], "items", selectionOf("passage", PASSAGE, "44-yard"));
    expect(session.goToStep(3).ok).toBe(true);
    return session;
  }

  it("fetches the server preview and submits", async () => {
    const session = await sessionAtStep3();
    const plan = await session.fetchPreview();
    expect(plan.final).toEqual({ kind: "number", value: "2" });
    const result = await session.submit();
    expect(result.blocked).toBe(false);
    expect(result.record.status).toBe("submitted");
    expect(session.dirty).toBe(false);
  });

  it("recomputes the final answer when an input is edited", async () => {
    const session = await sessionAtStep3();
    await session.fetchPreview();
    const plan = await session.editPreviewInput(0, 1, { kind: "number", value: "99", unit: "yard" });
    expect(plan.final).toEqual({ kind: "number", value: "3" });
  });

  it("refuses to edit step references (operator structure is fixed)", async () => {
    const session = await sessionAtStep3();
    await session.fetchPreview();
    await expect(
      session.editPreviewInput(1, 0, { kind: "number", value: "1", unit: null }),
    ).rejects.toThrow(/references/);
  });

  it("surfaces blocked submissions with their rule ids", async () => {
    const { ApiError } = await import("../src/api");
    const session = new AnnotationSession(
      fakeApi({
        async postAnnotation(payload: { submit: boolean }) {
          if (!payload.submit) return { record: { id: "rec-0000", version: 1 }, issues: [] };
          throw new ApiError(422, {
            error: "SubmissionBlockedError",
            issues: [{ rule: "V5", message: "required slot 'items' is empty", path: [0], slot: "items" }],
          });
        },
      }) as ServiceApi,
      "ann-1",
    );
    await session.start();
    buildFigureTree(session);
    session.goToStep(2);
    session.addGroundingItem([0], "items", selectionOf("passage", PASSAGE, "44-yard"));
    session.goToStep(3);
    await session.fetchPreview();
    const result = await session.submit();
    expect(result.blocked).toBe(true);
    expect(result.issues.map((i) => i.rule)).toEqual(["V5"]);
  });
});

describe("navigation", () => {
  it("is monotone and resets downstream artifacts when returning to step 1", async () => {
    const session = await sessionAtStep1();
    buildFigureTree(session);
    session.goToStep(2);
    session.addGroundingItem([0], "items", selectionOf("passage", PASSAGE, "44-yard"));
    session.goToStep(3);
    await session.fetchPreview();
    // declined confirmation keeps everything
    expect(session.goToStep(1, () => false).ok).toBe(false);
    expect(session.step).toBe(3);
    expect(session.preview).not.toBeNull();
    // confirmed reset clears grounding and preview, tree survives
    expect(session.goToStep(1, () => true).ok).toBe(true);
    expect(session.step).toBe(1);
    expect(session.grounding).toEqual([]);
    expect(session.preview).toBeNull();
    expect(session.tree).not.toBeNull();
  });

  it("cannot jump from step 1 straight to step 3", async () => {
    const session = await sessionAtStep1();
    buildFigureTree(session);
    const gate = session.goToStep(3);
    expect(gate.ok).toBe(false);
    expect(session.step).toBe(1);
  });
});

describe("local mirrors", () => {
  it("typechecks the flagship shapes like the server", () => {
    const span = (text: string) => ({ kind: "span" as const, start: 0, end: text.length, text });
    expect(
      typecheckLocal({ op: "count", args: [{ kind: "op", node: { op: "filter", args: [span("over 40"), span("goals")] } }] }).kind,
    ).toBe("number");
    expect(
      typecheckLocal({ op: "filter", args: [span("over 40"), { kind: "op", node: { op: "count", args: [span("goals")] } }] }).error,
    ).toMatch(/nested operations/);
    expect(typecheckLocal({ op: "more", args: [span("a")] }).error).toMatch(/needs 2/);
  });

  it("expands variadic slots and honors nested-argument suppression", () => {
    const span = (text: string) => ({ kind: "span" as const, start: 0, end: text.length, text });
    const sum = { op: "sum", args: [span("a"), span("b"), span("c")] };
    expect(requiredSlots(sum).map((r) => r.slot)).toEqual(["arg1", "arg2", "arg3"]);
    const completion = { op: "completion-more", args: [span("Bears")] };
    expect(requiredSlots(completion).map((r) => r.slot)).toEqual(["target", "complement"]);
  });

  it("serializes with the quoting rules", () => {
    const span = (text: string) => ({ kind: "span" as const, start: 0, end: text.length, text });
    expect(serialize({ op: "span", args: [span("January 5, 1915")] })).toBe('span("January 5, 1915")');
    expect(serialize({ op: "sort", args: [span("smallest"), span("racial group")] })).toBe(
      "sort(smallest, racial group)",
    );
  });

  it("nudges selection edges within bounds", () => {
    const base = selectionOf("question", QUESTION, "field goals");
    const wider = nudge(base, QUESTION, "end", 1);
    expect(wider.text).toBe("field goals ");
    expect(nudge(base, QUESTION, "start", -1).text).toBe(" field goals");
    const clamped = nudge(selectionOf("question", QUESTION, "How"), QUESTION, "start", -1);
    expect(clamped.text).toBe("How");
  });
});
