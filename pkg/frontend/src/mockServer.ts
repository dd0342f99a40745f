// In-memory stand-in for the review service, faithful to the HTTP contract:
// optimistic versions, 409 on stale decisions, 422 on empty manual text,
// status recomputation after decisions, and query regeneration. Used by the
// vitest suites only.

import type { Candidate, TaskDetail, TaskSummary } from "./types.js";

interface MockTask {
  detail: TaskDetail;
  queries: string[];
}

function candidate(kind: string, fragment: string, preview: string): Candidate {
  return {
    feature_key: `${kind}:-:${fragment}`,
    kind,
    text_fragment: fragment,
    landmark_label: null,
    rejected: false,
    reject_reason: "",
    preview,
  };
}

const SCHEMATIC = [
  {
    key: "wall_1",
    label: "wall",
    corners: [[0, 0], [6, 0], [6, 0.1], [0, 0.1]] as [number, number][],
    wall: true,
    landmark: false,
    target: false,
  },
  {
    key: "table_5",
    label: "table",
    corners: [[1, 1], [2, 1], [2, 2], [1, 2]] as [number, number][],
    wall: false,
    landmark: true,
    target: false,
  },
  {
    key: "chair_3",
    label: "chair",
    corners: [[3, 1], [3.4, 1], [3.4, 1.4], [3, 1.4]] as [number, number][],
    wall: false,
    landmark: false,
    target: true,
  },
];

export function makeTasks(): Map<string, MockTask> {
  const base = {
    scan_pair_id: "figpair",
    object: {
      center: [3.2, 1.2, 0.45] as [number, number, number],
      half_extents: [0.2, 0.2, 0.45] as [number, number, number],
      yaw: 0,
      attributes: { color: ["blue"] },
    },
    schematic: SCHEMATIC,
    manual_text: null,
    accepted_key: null,
  };
  const tasks = new Map<string, MockTask>();
  tasks.set("figpair:table_5", {
    detail: {
      ...base,
      task_id: "figpair:table_5",
      object_id: 5,
      key: "table_5",
      label: "table",
      status: "auto_resolved",
      version: 0,
      candidates: [candidate("landmark_self", "table", "What change happened to the table?")],
      resolved_preview: "What change happened to the table?",
    },
    queries: ["What change happened to the table?"],
  });
  tasks.set("figpair:chair_3", {
    detail: {
      ...base,
      task_id: "figpair:chair_3",
      object_id: 3,
      key: "chair_3",
      label: "chair",
      status: "pending",
      version: 0,
      candidates: [],
      resolved_preview: null,
    },
    queries: [],
  });
  return tasks;
}

function recompute(task: MockTask): void {
  const detail = task.detail;
  if (detail.manual_text) {
    detail.status = "human_resolved";
    detail.resolved_preview = `How has the ${detail.label} ${detail.manual_text} been altered?`;
  } else if (detail.accepted_key) {
    detail.status = "human_resolved";
    const chosen = detail.candidates.find((c) => c.feature_key === detail.accepted_key);
    detail.resolved_preview = chosen ? chosen.preview : null;
  } else {
    const surviving = detail.candidates.filter((c) => !c.rejected);
    if (surviving.length === 1) {
      detail.status = "auto_resolved";
      detail.resolved_preview = surviving[0].preview;
    } else {
      detail.status = "pending";
      detail.resolved_preview = null;
    }
  }
}

export class MockServer {
  tasks = makeTasks();
  down = false;
  regenCount = 0;

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    if (this.down) throw new TypeError("fetch failed");
    const url = typeof input === "string" ? input : input.toString();
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    if (path.startsWith("/tasks") && (!init || !init.method || init.method === "GET")) {
      const match = path.match(/^\/tasks\/([^/?]+)$/);
      if (match) {
        const task = this.tasks.get(decodeURIComponent(match[1]));
        if (!task) return json({ detail: "no such task" }, 404);
        return json(task.detail);
      }
      const status = new URL(url, "http://mock").searchParams.get("status");
      const summaries: TaskSummary[] = [...this.tasks.values()]
        .map(({ detail }) => ({
          task_id: detail.task_id,
          scan_pair_id: detail.scan_pair_id,
          object_id: detail.object_id,
          key: detail.key,
          label: detail.label,
          status: detail.status,
          version: detail.version,
        }))
        .filter((t) => !status || t.status === status);
      return json(summaries);
    }
    const decision = path.match(/^\/tasks\/([^/]+)\/decision$/);
    if (decision && init?.method === "POST") {
      const task = this.tasks.get(decodeURIComponent(decision[1]));
      if (!task) return json({ detail: "no such task" }, 404);
      const body = JSON.parse(String(init.body));
      if (body.action === "manual" && !(body.manual_text ?? "").trim()) {
        return json({ detail: "manual feature text must be non-empty" }, 422);
      }
      if (body.version !== task.detail.version) {
        return json({ detail: { error: "version conflict", current_version: task.detail.version } }, 409);
      }
      if (body.action === "manual") {
        task.detail.manual_text = body.manual_text;
        task.detail.accepted_key = null;
      } else if (body.action === "accept") {
        task.detail.accepted_key = body.feature_key;
        task.detail.manual_text = null;
      } else {
        const target = task.detail.candidates.find((c) => c.feature_key === body.feature_key);
        if (target) {
          target.rejected = true;
          target.reject_reason = body.reason ?? "";
        }
        if (task.detail.accepted_key === body.feature_key) task.detail.accepted_key = null;
      }
      task.detail.version += 1;
      recompute(task);
      return json(task.detail);
    }
    if (path === "/regen" && init?.method === "POST") {
      this.regenCount += 1;
      let queries = 0;
      for (const task of this.tasks.values()) {
        task.queries = task.detail.resolved_preview ? [task.detail.resolved_preview] : [];
        queries += task.queries.length;
      }
      return json({ queries, tasks: this.tasks.size });
    }
    return json({ detail: "not found" }, 404);
  };
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}
