// DOM wiring for the wizard. All offsets come from captureDomSelection or
// keyboard nudges; there is no way to type a span by hand.

import { ApiError, ServiceApi } from "./api";
import { OPERATOR_NAMES } from "./registry";
import { captureDomSelection, Edge, nudge } from "./selection";
import { AnnotationSession } from "./session";
import { SpanSelection, WireIssue } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  node.append(...children);
  return node;
}

export class WizardView {
  private session: AnnotationSession;
  private root: HTMLElement;
  private currentSelection: SpanSelection | null = null;
  private pendingKey: SpanSelection | null = null;
  private status = "";

  constructor(api: ServiceApi, root: HTMLElement, workerId: string) {
    this.session = new AnnotationSession(api, workerId);
    this.root = root;
    document.addEventListener("keydown", (event) => this.onKey(event));
  }

  async start(): Promise<void> {
    try {
      await this.session.start();
      this.status = "";
    } catch (err) {
      this.status = err instanceof ApiError ? `no task: ${err.message}` : String(err);
    }
    this.render();
  }

  private onKey(event: KeyboardEvent): void {
    if (!this.currentSelection) return;
    const keymap: Record<string, [Edge, -1 | 1]> = {
      ArrowLeft: ["end", -1],
      ArrowRight: ["end", 1],
      ArrowUp: ["start", -1],
      ArrowDown: ["start", 1],
    };
    const move = keymap[event.key];
    if (!move || !event.shiftKey) return;
    event.preventDefault();
    const text =
      this.currentSelection.source === "question" ? this.session.questionText : this.session.passageText;
    this.currentSelection = nudge(this.currentSelection, text, move[0], move[1]);
    this.render();
  }

  private capture(source: "question" | "passage"): void {
    const container = this.root.querySelector<HTMLElement>(`[data-text="${source}"]`);
    if (!container) return;
    const text = source === "question" ? this.session.questionText : this.session.passageText;
    const selection = captureDomSelection(source, container, text);
    if (selection) {
      this.currentSelection = selection;
      this.render();
    }
  }

  private issueList(issues: WireIssue[]): HTMLElement {
    const list = el("ul", { class: "issues" });
    for (const issue of issues) {
      list.append(el("li", {}, `${issue.rule}: ${issue.message}`));
    }
    return list;
  }

  private render(): void {
    this.root.replaceChildren();
    if (!this.session.task) {
      this.root.append(el("p", {}, this.status || "loading task..."));
      return;
    }
    const stepBar = el("div", { class: "steps" });
    const labels = ["1 · problem parsing", "2 · information retrieval", "3 · answer derivation"];
    labels.forEach((label, i) => {
      const button = el("button", { class: this.session.step === i + 1 ? "active" : "" }, label);
      button.onclick = () => {
        const result = this.session.goToStep((i + 1) as 1 | 2 | 3, () =>
          window.confirm("Going back to step 1 clears grounding and the derivation. Continue?"),
        );
        this.status = result.ok ? "" : result.reason ?? "";
        if (result.ok && this.session.step === 3) void this.refreshPreview();
        this.render();
      };
      stepBar.append(button);
    });
    this.root.append(stepBar);

    const question = el("div", { class: "panel" });
    question.append(el("h3", {}, "Question"));
    const questionText = el("div", { "data-text": "question", class: "selectable" }, this.session.questionText);
    questionText.onmouseup = () => this.capture("question");
    question.append(questionText);
    this.root.append(question);

    if (this.session.step === 1) this.renderStep1();
    if (this.session.step === 2) this.renderStep2();
    if (this.session.step === 3) this.renderStep3();

    if (this.currentSelection) {
      this.root.append(
        el(
          "p",
          { class: "selection" },
          `selection (${this.currentSelection.source}): "${this.currentSelection.text}" ` +
            `[${this.currentSelection.start}, ${this.currentSelection.end}) — shift+arrows adjust`,
        ),
      );
    }
    if (this.status) this.root.append(el("p", { class: "status" }, this.status));
  }

  private renderStep1(): void {
    const palette = el("div", { class: "palette" });
    for (const op of OPERATOR_NAMES) {
      const choose = el("button", {}, op);
      choose.onclick = () => {
        try {
          if (this.session.tree) this.session.wrapWith(op);
          else this.session.chooseOperator(op);
          this.status = "";
        } catch (err) {
          this.status = String(err);
        }
        this.render();
      };
      palette.append(choose);
    }
    const addSpan = el("button", { class: "primary" }, "add highlighted span as argument");
    addSpan.onclick = () => {
      if (!this.currentSelection || this.currentSelection.source !== "question") {
        this.status = "highlight part of the question first";
      } else {
        try {
          this.session.addQuestionSpan(this.currentSelection);
          this.currentSelection = null;
          this.status = "";
        } catch (err) {
          this.status = String(err);
        }
      }
      this.render();
    };
    const reset = el("button", {}, "reset expression");
    reset.onclick = () => {
      this.session.resetTree();
      this.render();
    };
    const check = this.session.treeCheck();
    this.root.append(
      el("div", { class: "panel" },
        el("h3", {}, "Operators (first click starts, later clicks wrap)"),
        palette,
        el("p", { class: "expr" }, this.session.expressionPreview() || "(empty)"),
        addSpan,
        reset,
        el("p", { class: check.ok ? "ok" : "blocked" }, check.ok ? "expression complete" : check.reason ?? ""),
      ),
    );
  }

  private renderStep2(): void {
    const passage = el("div", { class: "panel" });
    passage.append(el("h3", {}, "Passage"));
    const passageText = el("div", { "data-text": "passage", class: "selectable" }, this.session.passageText);
    passageText.onmouseup = () => this.capture("passage");
    passage.append(passageText);
    this.root.append(passage);

    const slots = el("div", { class: "panel" }, el("h3", {}, "Required slots"));
    for (const requirement of this.session.requiredSlots()) {
      const items = this.session.slotItems(requirement.path, requirement.slot);
      const row = el(
        "div",
        { class: "slot" },
        el(
          "span",
          {},
          `[${requirement.path.join(".") || "root"}] ${requirement.slot} (${requirement.kind}): ${items.length} item(s)`,
        ),
      );
      const useAsKey = el("button", {}, "hold as entity");
      useAsKey.onclick = () => {
        if (this.currentSelection?.source === "passage") {
          this.pendingKey = this.currentSelection;
          this.currentSelection = null;
          this.status = `entity span held: "${this.pendingKey.text}"`;
        } else {
          this.status = "highlight the entity in the passage first";
        }
        this.render();
      };
      const add = el("button", { class: "primary" }, "add highlighted value");
      add.onclick = () => {
        if (this.currentSelection?.source !== "passage") {
          this.status = "highlight the value in the passage first";
        } else {
          try {
            this.session.addGroundingItem(
              requirement.path,
              requirement.slot,
              this.currentSelection,
              this.pendingKey ?? undefined,
            );
            this.currentSelection = null;
            this.pendingKey = null;
            this.status = "";
          } catch (err) {
            this.status = String(err);
          }
        }
        this.render();
      };
      row.append(useAsKey, add);
      items.forEach((item, index) => {
        const remove = el("button", { class: "small" }, `remove "${item.value_span.text}"`);
        remove.onclick = () => {
          this.session.removeGroundingItem(requirement.path, requirement.slot, index);
          this.render();
        };
        row.append(remove);
      });
      slots.append(row);
    }
    const check = this.session.groundingCheck();
    slots.append(el("p", { class: check.ok ? "ok" : "blocked" }, check.ok ? "all slots filled" : check.reason ?? ""));
    this.root.append(slots);
  }

  private async refreshPreview(): Promise<void> {
    try {
      await this.session.fetchPreview();
      this.status = "";
    } catch (err) {
      this.status = err instanceof ApiError ? `derivation failed: ${err.message}` : String(err);
    }
    this.render();
  }

  private renderStep3(): void {
    const panel = el("div", { class: "panel" }, el("h3", {}, "Derivation"));
    const plan = this.session.preview;
    if (!plan) {
      panel.append(el("p", {}, "generating derivation..."));
      this.root.append(panel);
      return;
    }
    plan.steps.forEach((step, stepIndex) => {
      const line = el("div", { class: "step" }, el("code", {}, step.rendered));
      step.inputs.forEach((input, inputIndex) => {
        if (input.value && (input.value.kind === "number" || input.value.kind === "percent")) {
          const field = el("input", { value: input.value.value, size: "6" }) as HTMLInputElement;
          field.onchange = () => {
            const base = input.value!;
            const next =
              base.kind === "number"
                ? { kind: "number" as const, value: field.value, unit: base.unit }
                : { kind: "percent" as const, value: field.value };
            void this.session
              .editPreviewInput(stepIndex, inputIndex, next)
              .then(() => {
                this.status = "";
                this.render();
              })
              .catch((err) => {
                this.status = `edit rejected: ${err.message}`;
                this.render();
              });
          };
          line.append(el("label", {}, ` ${input.label}: `), field);
        }
      });
      panel.append(line);
    });
    panel.append(el("p", { class: "final" }, `final: ${JSON.stringify(plan.final)}`));
    for (const warning of plan.warnings) panel.append(el("p", { class: "warning" }, warning));
    const submit = el("button", { class: "primary" }, "submit annotation");
    submit.onclick = () => {
      void this.session
        .submit()
        .then((result) => {
          if (result.blocked) {
            this.status = "submission blocked; fix the issues below";
          } else {
            this.status = `submitted as ${result.record.id} (consistency: ${result.record.consistency})`;
          }
          this.render();
          if (this.session.lastIssues.length) this.root.append(this.issueList(this.session.lastIssues));
        })
        .catch((err) => {
          this.status = String(err);
          this.render();
        });
    };
    panel.append(submit);
    this.root.append(panel);
  }
}

export class ValidatorView {
  constructor(
    private api: ServiceApi,
    private root: HTMLElement,
    private workerId: string,
  ) {}

  async start(): Promise<void> {
    this.root.replaceChildren();
    let task;
    try {
      task = await this.api.nextTask(this.workerId);
    } catch (err) {
      this.root.append(el("p", {}, err instanceof ApiError ? `no task: ${err.message}` : String(err)));
      return;
    }
    if (task.kind !== "validate") {
      this.root.append(el("p", {}, "no records awaiting validation"));
      return;
    }
    const record = task.record;
    this.root.append(
      el("div", { class: "panel" },
        el("h3", {}, `Validate ${record.id}`),
        el("p", {}, el("strong", {}, "Question: "), task.question.text),
        el("p", { class: "selectable" }, task.passage.text),
        el("p", {}, el("code", {}, JSON.stringify(record.tree))),
        ...(record.plan ? record.plan.steps.map((s) => el("p", {}, el("code", {}, s.rendered))) : []),
      ),
    );
    for (const verdict of ["valid", "invalid"] as const) {
      const button = el("button", { class: verdict === "valid" ? "primary" : "" }, verdict);
      button.onclick = () => {
        void this.api
          .postVerdict({ record_id: record.id, validator_id: this.workerId, verdict })
          .then(({ record: updated }) => {
            this.root.append(el("p", {}, `recorded; record is now ${updated.status}`));
          })
          .catch((err) => this.root.append(el("p", { class: "status" }, String(err))));
      };
      this.root.append(button);
    }
  }
}
