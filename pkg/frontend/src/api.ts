// Typed client for the annotation service; all bodies use the canonical
// structured JSON.

import {
  Task,
  TreeNode,
  WireGroundingEntry,
  WireIssue,
  WirePassage,
  WirePlan,
  WireQuestion,
  WireRecord,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: { error?: string; detail?: string; issues?: WireIssue[] },
  ) {
    super(body.detail ?? body.error ?? `HTTP ${status}`);
  }
}

export interface AnnotationPayload {
  question_id: string;
  annotator_id: string;
  tree: TreeNode;
  grounding: WireGroundingEntry[];
  plan: WirePlan | null;
  submit: boolean;
  id?: string;
  version?: number;
}

export interface WorkerInfo {
  worker_id: string;
  role: string;
  qualification_score: number;
  status: string;
}

export class ServiceApi {
  constructor(
    private baseUrl = "",
    private fetchImpl: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) throw new ApiError(response.status, payload);
    return payload as T;
  }

  nextTask(worker: string): Promise<Task> {
    return this.request("GET", `/tasks/next?worker=${encodeURIComponent(worker)}`);
  }

  getQuestion(id: string): Promise<{ question: WireQuestion; passage: WirePassage }> {
    return this.request("GET", `/questions/${encodeURIComponent(id)}`);
  }

  postAnnotation(payload: AnnotationPayload): Promise<{ record: WireRecord; issues: WireIssue[] }> {
    return this.request("POST", "/annotations", payload);
  }

  derive(
    recordId: string,
    body: { plan?: WirePlan; tree?: TreeNode; grounding?: WireGroundingEntry[] } = {},
  ): Promise<{ plan: WirePlan }> {
    return this.request("POST", `/annotations/${encodeURIComponent(recordId)}/derive`, body);
  }

  postVerdict(body: {
    record_id: string;
    validator_id: string;
    verdict: "valid" | "invalid";
    note?: string;
  }): Promise<{ record: WireRecord }> {
    return this.request("POST", "/verdicts", body);
  }

  getRecord(id: string): Promise<{ record: WireRecord }> {
    return this.request("GET", `/records/${encodeURIComponent(id)}`);
  }

  getStats(): Promise<Record<string, unknown>> {
    return this.request("GET", "/stats");
  }

  registerWorker(workerId: string, role: "annotator" | "validator"): Promise<WorkerInfo> {
    return this.request("POST", "/workers", { worker_id: workerId, role });
  }

  qualifyWorker(workerId: string, results: boolean[]): Promise<WorkerInfo> {
    return this.request("POST", `/workers/${encodeURIComponent(workerId)}/qualification`, { results });
  }
}
