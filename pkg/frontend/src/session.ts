// The three-step annotation wizard state machine.
//
// Step 1 builds the operator expression from registry choices and
// highlighted question spans; step 2 fills each required grounding slot
// from passage highlights; step 3 reviews the server-generated derivation,
// applies input edits server-side, and submits. A step is reachable only
// when the previous step's artifact passes its local check, and going back
// to step 1 resets everything downstream (with confirmation).

import { AnnotationPayload, ApiError, ServiceApi } from "./api";
import { REGISTRY, argKindAt } from "./registry";
import {
  CheckResult,
  pathsEqual,
  requiredSlots,
  serialize,
  spanArg,
  SlotRequirement,
  typecheckLocal,
} from "./trmr";
import {
  SpanSelection,
  Task,
  TreeNode,
  WireGroundingEntry,
  WireIssue,
  WirePlan,
  WireRecord,
  WireValue,
} from "./types";

export type Step = 1 | 2 | 3;

export interface SubmitResult {
  record: WireRecord;
  issues: WireIssue[];
  blocked: boolean;
}

export class AnnotationSession {
  step: Step = 1;
  task: Task | null = null;
  tree: TreeNode | null = null;
  grounding: WireGroundingEntry[] = [];
  preview: WirePlan | null = null;
  dirty = false;
  recordId: string | null = null;
  version: number | null = null;
  lastIssues: WireIssue[] = [];

  constructor(
    private api: ServiceApi,
    private workerId: string,
  ) {}

  async start(): Promise<Task> {
    const task = await this.api.nextTask(this.workerId);
    if (task.kind !== "annotate") throw new Error("session expects an annotation task");
    this.task = task;
    this.step = 1;
    this.tree = null;
    this.grounding = [];
    this.preview = null;
    this.recordId = null;
    this.version = null;
    this.dirty = false;
    return task;
  }

  get questionText(): string {
    if (!this.task || this.task.kind !== "annotate") throw new Error("no active task");
    return this.task.question.text;
  }

  get passageText(): string {
    if (!this.task || this.task.kind !== "annotate") throw new Error("no active task");
    return this.task.passage.text;
  }

  // -- step 1: problem parsing ------------------------------------------------

  /** Start a fresh expression with the chosen operator. */
  chooseOperator(op: string): void {
    this.assertStep(1);
    if (!REGISTRY[op]) throw new Error(`unknown operator ${op}`);
    this.tree = { op, args: [] };
    this.dirty = true;
  }

  /** Wrap the current (complete) expression as the first argument of a new operator. */
  wrapWith(op: string): void {
    this.assertStep(1);
    const sig = REGISTRY[op];
    if (!sig) throw new Error(`unknown operator ${op}`);
    if (!this.tree) throw new Error("nothing to wrap yet");
    if (argKindAt(sig, 0) !== "ordinary") {
      throw new Error(`${op} cannot take an expression as its first argument`);
    }
    this.tree = { op, args: [{ kind: "op", node: this.tree }] };
    this.dirty = true;
  }

  /** Fill the next open argument with a highlighted question span.
   * Free-text arguments are impossible: only selections are accepted. */
  addQuestionSpan(selection: SpanSelection): void {
    this.assertStep(1);
    if (!this.tree) throw new Error("choose an operator first");
    const sig = REGISTRY[this.tree.op];
    if (sig.maxArity !== null && this.tree.args.length >= sig.maxArity) {
      throw new Error(`${this.tree.op} already has all its arguments`);
    }
    this.tree = { ...this.tree, args: [...this.tree.args, spanArg(selection)] };
    this.dirty = true;
  }

  resetTree(): void {
    this.assertStep(1);
    this.tree = null;
    this.dirty = true;
  }

  expressionPreview(): string {
    return this.tree ? serialize(this.tree) : "";
  }

  treeCheck(): CheckResult {
    if (!this.tree) return { ok: false, reason: "no expression yet" };
    const result = typecheckLocal(this.tree);
    return result.error ? { ok: false, reason: result.error } : { ok: true };
  }

  // -- step 2: information retrieval -------------------------------------------

  requiredSlots(): SlotRequirement[] {
    if (!this.tree) return [];
    return requiredSlots(this.tree);
  }

  slotItems(path: number[], slot: string): WireGroundingEntry["items"] {
    const entry = this.grounding.find((e) => pathsEqual(e.path, path) && e.slot === slot);
    return entry ? entry.items : [];
  }

  /** Add a passage highlight (plus optional entity highlight) to a slot. */
  addGroundingItem(
    path: number[],
    slot: string,
    valueSelection: SpanSelection,
    keySelection?: SpanSelection,
  ): void {
    this.assertStep(2);
    if (valueSelection.source !== "passage" || (keySelection && keySelection.source !== "passage")) {
      throw new Error("grounded spans must be passage highlights");
    }
    const known = this.requiredSlots().some((r) => pathsEqual(r.path, path) && r.slot === slot);
    const optional = this.optionalSlots().some((r) => pathsEqual(r.path, path) && r.slot === slot);
    if (!known && !optional) throw new Error(`no slot ${slot} at node [${path.join(".")}]`);
    const item = {
      value_span: { start: valueSelection.start, end: valueSelection.end, text: valueSelection.text },
      parsed: null,
      key_span: keySelection
        ? { start: keySelection.start, end: keySelection.end, text: keySelection.text }
        : null,
    };
    const existing = this.grounding.find((e) => pathsEqual(e.path, path) && e.slot === slot);
    if (existing) {
      existing.items = [...existing.items, item];
    } else {
      this.grounding = [...this.grounding, { path, slot, items: [item] }];
    }
    this.dirty = true;
  }

  removeGroundingItem(path: number[], slot: string, index: number): void {
    this.assertStep(2);
    const entry = this.grounding.find((e) => pathsEqual(e.path, path) && e.slot === slot);
    if (!entry) return;
    entry.items = entry.items.filter((_, i) => i !== index);
    this.grounding = this.grounding.filter((e) => e.items.length > 0);
    this.dirty = true;
  }

  optionalSlots(): SlotRequirement[] {
    if (!this.tree) return [];
    const out: SlotRequirement[] = [];
    const visit = (node: TreeNode, path: number[]) => {
      node.args.forEach((arg, i) => {
        if (arg.kind === "op") visit(arg.node, [...path, i]);
      });
      for (const spec of REGISTRY[node.op]?.slots ?? []) {
        if (!spec.perArg && !spec.required) out.push({ path, slot: spec.name, kind: spec.kind });
      }
    };
    visit(this.tree, []);
    return out;
  }

  groundingCheck(): CheckResult {
    const missing = this.requiredSlots().filter(
      (r) => this.slotItems(r.path, r.slot).length === 0,
    );
    if (missing.length) {
      const names = missing.map((m) => m.slot).join(", ");
      return { ok: false, reason: `required slot(s) still empty: ${names}` };
    }
    return { ok: true };
  }

  // -- navigation ---------------------------------------------------------------

  /** Move between steps; forward moves are gated, moving back to step 1
   * resets downstream artifacts after confirmation. */
  goToStep(target: Step, confirmReset: () => boolean = () => true): CheckResult {
    if (target === this.step) return { ok: true };
    if (target > this.step) {
      if (target >= 2) {
        const tree = this.treeCheck();
        if (!tree.ok) return tree;
      }
      if (target >= 3) {
        if (this.step < 2) return { ok: false, reason: "finish information retrieval first" };
        const grounding = this.groundingCheck();
        if (!grounding.ok) return grounding;
      }
      this.step = target;
      return { ok: true };
    }
    if (target === 1) {
      if (!confirmReset()) return { ok: false, reason: "reset not confirmed" };
      this.grounding = [];
      this.preview = null;
      this.step = 1;
      this.dirty = true;
      return { ok: true };
    }
    this.step = target;
    return { ok: true };
  }

  // -- step 3: answer derivation --------------------------------------------------

  private payload(submit: boolean): AnnotationPayload {
    if (!this.task || this.task.kind !== "annotate" || !this.tree) {
      throw new Error("no annotation in progress");
    }
    const body: AnnotationPayload = {
      question_id: this.task.question.id,
      annotator_id: this.workerId,
      tree: this.tree,
      grounding: this.grounding,
      plan: this.preview,
      submit,
    };
    if (this.recordId !== null && this.version !== null) {
      body.id = this.recordId;
      body.version = this.version;
    }
    return body;
  }

  private async saveDraft(): Promise<void> {
    const { record } = await this.api.postAnnotation(this.payload(false));
    this.recordId = record.id;
    this.version = record.version;
  }

  /** Fetch the server-generated derivation for the current tree + grounding. */
  async fetchPreview(): Promise<WirePlan> {
    this.assertStep(3);
    await this.saveDraft();
    const { plan } = await this.api.derive(this.recordId!, {
      tree: this.tree!,
      grounding: this.grounding,
    });
    this.preview = plan;
    return plan;
  }

  /** Edit one literal step input; the server re-executes and the preview
   * (including the final answer) refreshes. Operator structure is fixed. */
  async editPreviewInput(stepIndex: number, inputIndex: number, value: WireValue): Promise<WirePlan> {
    this.assertStep(3);
    if (!this.preview) throw new Error("fetch the derivation preview first");
    const input = this.preview.steps[stepIndex]?.inputs[inputIndex];
    if (!input) throw new Error("no such step input");
    if (input.step !== undefined && input.step !== null) {
      throw new Error("step references cannot be edited");
    }
    const edited: WirePlan = JSON.parse(JSON.stringify(this.preview));
    const target = edited.steps[stepIndex].inputs[inputIndex];
    delete target.text;
    target.value = value;
    const { plan } = await this.api.derive(this.recordId!, { plan: edited });
    this.preview = plan;
    this.dirty = true;
    return plan;
  }

  /** Submit the record. Structural failures come back as blocked submissions;
   * a gold-answer mismatch is allowed through with consistency=false. */
  async submit(): Promise<SubmitResult> {
    this.assertStep(3);
    if (!this.preview) throw new Error("fetch the derivation preview first");
    try {
      const { record, issues } = await this.api.postAnnotation(this.payload(true));
      this.recordId = record.id;
      this.version = record.version;
      this.lastIssues = issues;
      this.dirty = false;
      return { record, issues, blocked: false };
    } catch (err) {
      if (err instanceof ApiError && err.status === 422 && err.body.issues) {
        this.lastIssues = err.body.issues;
        return { record: null as unknown as WireRecord, issues: err.body.issues, blocked: true };
      }
      throw err;
    }
  }

  private assertStep(expected: Step): void {
    if (this.step !== expected) {
      throw new Error(`this action belongs to step ${expected}, current step is ${this.step}`);
    }
  }
}
