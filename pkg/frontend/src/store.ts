import { ReviewApi, ServiceUnreachable, VersionConflict } from "./api.js";
import type { Candidate, DecisionBody, TaskDetail, TaskSummary } from "./types.js";

export interface DecisionForm {
  action: "accept" | "reject" | "manual";
  featureKey: string | null;
  manualText: string;
  reason: string;
  author: string;
}

export function emptyForm(): DecisionForm {
  return { action: "accept", featureKey: null, manualText: "", reason: "", author: "" };
}

/** Pending tasks first, then by scan pair and object. */
export function orderTasks(tasks: TaskSummary[]): TaskSummary[] {
  return [...tasks].sort(
    (a, b) =>
      Number(a.status !== "pending") - Number(b.status !== "pending") ||
      a.scan_pair_id.localeCompare(b.scan_pair_id) ||
      a.object_id - b.object_id,
  );
}

/** Candidates a reviewer may still accept; rejected ones never reappear. */
export function selectableCandidates(detail: TaskDetail): Candidate[] {
  return detail.candidates.filter((c) => !c.rejected);
}

export type StoreEvent =
  | { kind: "tasks"; tasks: TaskSummary[] }
  | { kind: "detail"; detail: TaskDetail; form: DecisionForm }
  | { kind: "error"; message: string; retryable: boolean }
  | { kind: "conflict"; detail: TaskDetail; form: DecisionForm }
  | { kind: "busy"; busy: boolean };

export class ReviewStore {
  tasks: TaskSummary[] = [];
  detail: TaskDetail | null = null;
  form: DecisionForm = emptyForm();
  private listeners: ((event: StoreEvent) => void)[] = [];

  constructor(private api: ReviewApi) {}

  subscribe(listener: (event: StoreEvent) => void): void {
    this.listeners.push(listener);
  }

  private emit(event: StoreEvent): void {
    for (const listener of this.listeners) listener(event);
  }

  async refreshTasks(): Promise<void> {
    try {
      this.tasks = orderTasks(await this.api.listTasks());
      this.emit({ kind: "tasks", tasks: this.tasks });
    } catch (err) {
      if (err instanceof ServiceUnreachable) {
        this.emit({ kind: "error", message: err.message, retryable: true });
        return;
      }
      throw err;
    }
  }

  async openTask(taskId: string): Promise<void> {
    try {
      this.detail = await this.api.getTask(taskId);
      this.form = emptyForm();
      this.emit({ kind: "detail", detail: this.detail, form: this.form });
    } catch (err) {
      if (err instanceof ServiceUnreachable) {
        this.emit({ kind: "error", message: err.message, retryable: true });
        return;
      }
      throw err;
    }
  }

  setForm(update: Partial<DecisionForm>): void {
    this.form = { ...this.form, ...update };
  }

  /** Optimistic submission: on success re-render from the server's new
   * resolution; on a version conflict reload the task but keep the form. */
  async submit(): Promise<"ok" | "conflict" | "invalid" | "error"> {
    if (this.detail === null) return "invalid";
    const form = this.form;
    if (form.action === "manual" && form.manualText.trim() === "") {
      this.emit({ kind: "error", message: "manual feature text must be non-empty", retryable: false });
      return "invalid";
    }
    if ((form.action === "accept" || form.action === "reject") && !form.featureKey) {
      this.emit({ kind: "error", message: `${form.action} needs a selected feature`, retryable: false });
      return "invalid";
    }
    const body: DecisionBody = {
      action: form.action,
      version: this.detail.version,
      author: form.author || undefined,
    };
    if (form.action === "manual") body.manual_text = form.manualText;
    else body.feature_key = form.featureKey!;
    if (form.action === "reject") body.reason = form.reason;
    this.emit({ kind: "busy", busy: true });
    try {
      this.detail = await this.api.submitDecision(this.detail.task_id, body);
      this.form = emptyForm();
      this.emit({ kind: "detail", detail: this.detail, form: this.form });
      await this.refreshTasks();
      return "ok";
    } catch (err) {
      if (err instanceof VersionConflict) {
        // reload the task at the new version; the half-written form survives
        this.detail = await this.api.getTask(this.detail.task_id);
        this.emit({ kind: "conflict", detail: this.detail, form: this.form });
        return "conflict";
      }
      if (err instanceof ServiceUnreachable) {
        this.emit({ kind: "error", message: err.message, retryable: true });
        return "error";
      }
      throw err;
    } finally {
      this.emit({ kind: "busy", busy: false });
    }
  }

  async regenerate(): Promise<void> {
    try {
      const result = await this.api.regen();
      this.emit({
        kind: "error",
        message: `re-resolved features: ${result.queries} queries over ${result.tasks} tasks`,
        retryable: false,
      });
      await this.refreshTasks();
      if (this.detail) await this.openTask(this.detail.task_id);
    } catch (err) {
      if (err instanceof ServiceUnreachable) {
        this.emit({ kind: "error", message: err.message, retryable: true });
        return;
      }
      throw err;
    }
  }
}
