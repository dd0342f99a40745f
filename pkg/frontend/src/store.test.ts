import { beforeEach, describe, expect, it } from "vitest";

import { ReviewApi } from "./api.js";
import { MockServer } from "./mockServer.js";
import { ReviewStore, orderTasks, selectableCandidates } from "./store.js";
import type { StoreEvent, DecisionForm } from "./store.js";
import type { TaskSummary } from "./types.js";

function summary(key: string, status: TaskSummary["status"], pair = "p1", oid = 1): TaskSummary {
  return {
    task_id: `${pair}:${key}`,
    scan_pair_id: pair,
    object_id: oid,
    key,
    label: key.split("_")[0],
    status,
    version: 0,
  };
}

describe("orderTasks", () => {
  it("puts pending first, then sorts by scan pair", () => {
    const tasks = [
      summary("a_1", "auto_resolved", "p2", 1),
      summary("b_2", "pending", "p2", 2),
      summary("c_3", "human_resolved", "p1", 3),
      summary("d_4", "pending", "p1", 4),
    ];
    const ordered = orderTasks(tasks).map((t) => t.key);
    expect(ordered).toEqual(["d_4", "b_2", "c_3", "a_1"]);
  });
});

describe("ReviewStore", () => {
  let server: MockServer;
  let store: ReviewStore;
  let events: StoreEvent[];

  beforeEach(() => {
    server = new MockServer();
    store = new ReviewStore(new ReviewApi("", server.fetch));
    events = [];
    store.subscribe((e) => events.push(e));
  });

  it("loads and orders tasks", async () => {
    await store.refreshTasks();
    expect(store.tasks.map((t) => t.key)).toEqual(["chair_3", "table_5"]);
  });

  it("shows a retryable error banner when the service is down", async () => {
    server.down = true;
    await store.refreshTasks();
    const error = events.find((e) => e.kind === "error");
    expect(error && error.kind === "error" && error.retryable).toBe(true);
    expect(store.tasks).toEqual([]);
  });

  it("refuses an empty manual feature without calling the server", async () => {
    await store.openTask("figpair:chair_3");
    store.setForm({ action: "manual", manualText: "   " });
    const outcome = await store.submit();
    expect(outcome).toBe("invalid");
    expect(store.detail?.version).toBe(0);
  });

  it("manual feature resolves the task and regenerates its query", async () => {
    await store.openTask("figpair:chair_3");
    store.setForm({ action: "manual", manualText: "between the blue and the orange chair" });
    const outcome = await store.submit();
    expect(outcome).toBe("ok");
    expect(store.detail?.status).toBe("human_resolved");
    expect(store.detail?.resolved_preview).toContain("between the blue and the orange chair");
    await store.regenerate();
    const queries = server.tasks.get("figpair:chair_3")!.queries;
    expect(queries).toHaveLength(1);
    expect(queries[0]).toContain("between the blue and the orange chair");
  });

  it("rejecting the sole feature flips the task to pending and drops its query", async () => {
    await store.openTask("figpair:table_5");
    const [only] = selectableCandidates(store.detail!);
    store.setForm({ action: "reject", featureKey: only.feature_key, reason: "not recognizable" });
    const outcome = await store.submit();
    expect(outcome).toBe("ok");
    expect(store.detail?.status).toBe("pending");
    // the rejected feature never reappears among selectable candidates
    expect(selectableCandidates(store.detail!)).toHaveLength(0);
    await store.regenerate();
    expect(server.tasks.get("figpair:table_5")!.queries).toEqual([]);
  });

  it("a version conflict reloads the task and preserves the draft form", async () => {
    await store.openTask("figpair:chair_3");
    // another reviewer slips in a decision
    const other = new ReviewStore(new ReviewApi("", server.fetch));
    await other.openTask("figpair:chair_3");
    other.setForm({ action: "manual", manualText: "the chair by the door" });
    expect(await other.submit()).toBe("ok");

    store.setForm({ action: "manual", manualText: "between the blue and the orange chair" });
    const outcome = await store.submit();
    expect(outcome).toBe("conflict");
    const conflict = events.find((e) => e.kind === "conflict");
    expect(conflict).toBeDefined();
    if (conflict && conflict.kind === "conflict") {
      const form: DecisionForm = conflict.form;
      expect(form.manualText).toBe("between the blue and the orange chair");
      expect(conflict.detail.version).toBe(1);
    }
    // resubmitting at the fresh version succeeds
    expect(await store.submit()).toBe("ok");
    expect(store.detail?.resolved_preview).toContain("between the blue and the orange chair");
  });

  it("accepting a candidate re-renders the preview from the server resolution", async () => {
    await store.openTask("figpair:table_5");
    const [only] = selectableCandidates(store.detail!);
    store.setForm({ action: "accept", featureKey: only.feature_key });
    expect(await store.submit()).toBe("ok");
    expect(store.detail?.status).toBe("human_resolved");
    expect(store.detail?.resolved_preview).toBe("What change happened to the table?");
  });

  it("accept without a selected feature is invalid", async () => {
    await store.openTask("figpair:table_5");
    store.setForm({ action: "accept", featureKey: null });
    expect(await store.submit()).toBe("invalid");
  });
});
