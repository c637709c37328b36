// Wire types mirroring the service's canonical structured JSON.

export interface SpanLit {
  start: number;
  end: number;
  text: string;
}

export type TreeArg = { kind: "span" } & SpanLit | { kind: "op"; node: TreeNode };

export interface TreeNode {
  op: string;
  args: TreeArg[];
}

export type WireValue =
  | { kind: "number"; value: string; unit: string | null }
  | { kind: "percent"; value: string }
  | { kind: "date"; year: number; month: number | null; day: number | null };

export interface WireItem {
  value_span: SpanLit;
  parsed: WireValue | null;
  key_span: SpanLit | null;
}

export interface WireGroundingEntry {
  path: number[];
  slot: string;
  items: WireItem[];
}

export interface WireStepInput {
  role: string;
  label: string;
  step?: number;
  text?: string;
  value?: WireValue;
}

export type WireOutput =
  | { kind: "texts"; texts: string[] }
  | { kind: "text"; text: string }
  | { kind: "value"; value: WireValue };

export interface WireStep {
  op: string;
  path: number[];
  inputs: WireStepInput[];
  output: WireOutput;
  rendered: string;
}

export type WireAnswer =
  | { kind: "number"; value: string }
  | { kind: "spans"; texts: string[] }
  | { kind: "date"; year: number | null; month: number | null; day: number | null };

export interface WirePlan {
  steps: WireStep[];
  final: WireAnswer;
  warnings: string[];
}

export interface WireQuestion {
  id: string;
  passage_id: string;
  text: string;
  answer?: WireAnswer;
}

export interface WirePassage {
  id: string;
  text: string;
}

export interface WireRecord {
  id: string;
  question_id: string;
  annotator_id: string;
  status: string;
  consistency: boolean | null;
  version: number;
  sampled_for_validation: boolean;
  tree: TreeNode;
  grounding: WireGroundingEntry[];
  plan: WirePlan | null;
  verdicts: { validator_id: string; verdict: string; note: string | null }[];
}

export interface WireIssue {
  rule: string;
  message: string;
  path: number[] | null;
  slot: string | null;
}

export type Task =
  | { kind: "annotate"; question: WireQuestion; passage: WirePassage }
  | { kind: "validate"; record: WireRecord; question: WireQuestion; passage: WirePassage };

/** A highlighted region; offsets always come from the rendered text, never typed. */
export interface SpanSelection {
  source: "question" | "passage";
  start: number;
  end: number;
  text: string;
}
