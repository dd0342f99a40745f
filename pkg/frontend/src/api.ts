import type { DecisionBody, RegenResult, TaskDetail, TaskSummary } from "./types.js";

export class ServiceUnreachable extends Error {
  constructor(cause: unknown) {
    super(`review service unreachable: ${cause instanceof Error ? cause.message : cause}`);
    this.name = "ServiceUnreachable";
  }
}

export class VersionConflict extends Error {
  currentVersion: number;
  constructor(currentVersion: number) {
    super(`decision based on a stale version (current ${currentVersion})`);
    this.name = "VersionConflict";
    this.currentVersion = currentVersion;
  }
}

export class RequestRejected extends Error {
  status: number;
  constructor(status: number, detail: string) {
    super(detail);
    this.name = "RequestRejected";
    this.status = status;
  }
}

export class ReviewApi {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new ServiceUnreachable(err);
    }
    return response;
  }

  private async json<T>(response: Response): Promise<T> {
    if (response.status === 409) {
      const body = await response.json();
      throw new VersionConflict(body.detail?.current_version ?? -1);
    }
    if (!response.ok) {
      let detail = `${response.status}`;
      try {
        const body = await response.json();
        detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
      } catch {
        // non-JSON error body; keep the status code
      }
      throw new RequestRejected(response.status, detail);
    }
    return (await response.json()) as T;
  }

  async listTasks(status?: string): Promise<TaskSummary[]> {
    const query = status ? `?status=${encodeURIComponent(status)}` : "";
    return this.json(await this.request(`/tasks${query}`));
  }

  async getTask(taskId: string): Promise<TaskDetail> {
    return this.json(await this.request(`/tasks/${encodeURIComponent(taskId)}`));
  }

  async submitDecision(taskId: string, body: DecisionBody): Promise<TaskDetail> {
    return this.json(
      await this.request(`/tasks/${encodeURIComponent(taskId)}/decision`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }

  async regen(): Promise<RegenResult> {
    return this.json(await this.request("/regen", { method: "POST" }));
  }
}
