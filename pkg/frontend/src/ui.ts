import type { StoreEvent } from "./store.js";
import { ReviewStore, selectableCandidates } from "./store.js";
import { drawSchematic } from "./renderer.js";
import type { TaskDetail, TaskSummary } from "./types.js";

// Plain-DOM wiring: a task list, a detail panel with the scene schematic and
// candidate features, and the decision form. All state changes round-trip
// through the API via the store.

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ReviewUi {
  private banner: HTMLDivElement;
  private listPanel: HTMLDivElement;
  private detailPanel: HTMLDivElement;

  constructor(
    private root: HTMLElement,
    private store: ReviewStore,
  ) {
    this.banner = el("div", "banner hidden");
    this.listPanel = el("div", "task-list");
    this.detailPanel = el("div", "task-detail");
    const columns = el("div", "columns");
    columns.append(this.listPanel, this.detailPanel);
    root.append(this.banner, columns);
    store.subscribe((event) => this.onEvent(event));
  }

  start(): void {
    void this.store.refreshTasks();
  }

  private onEvent(event: StoreEvent): void {
    switch (event.kind) {
      case "tasks":
        this.renderList(event.tasks);
        break;
      case "detail":
        this.hideBanner();
        this.renderDetail(event.detail);
        break;
      case "conflict":
        this.showBanner(
          "someone else reviewed this task first; it was reloaded and your draft kept",
          false,
        );
        this.renderDetail(event.detail, true);
        break;
      case "error":
        this.showBanner(event.message, event.retryable);
        break;
      case "busy":
        this.root.classList.toggle("busy", event.busy);
        break;
    }
  }

  private showBanner(message: string, retryable: boolean): void {
    this.banner.replaceChildren();
    this.banner.classList.remove("hidden");
    this.banner.append(el("span", undefined, message));
    if (retryable) {
      const retry = el("button", "retry", "retry");
      retry.addEventListener("click", () => {
        this.hideBanner();
        this.start();
      });
      this.banner.append(retry);
    }
  }

  private hideBanner(): void {
    this.banner.classList.add("hidden");
  }

  private renderList(tasks: TaskSummary[]): void {
    this.listPanel.replaceChildren();
    const header = el("div", "list-header");
    header.append(el("h2", undefined, `review tasks (${tasks.length})`));
    const regen = el("button", "regen", "re-resolve queries");
    regen.addEventListener("click", () => void this.store.regenerate());
    header.append(regen);
    this.listPanel.append(header);
    if (tasks.length === 0) {
      this.listPanel.append(el("p", "empty-state", "nothing to review"));
      return;
    }
    for (const task of tasks) {
      const row = el("button", `task-row status-${task.status}`);
      row.dataset.taskId = task.task_id;
      row.append(
        el("span", "key", task.key),
        el("span", "pair", task.scan_pair_id),
        el("span", "status", task.status.replace("_", " ")),
      );
      row.addEventListener("click", () => void this.store.openTask(task.task_id));
      this.listPanel.append(row);
    }
  }

  private renderDetail(detail: TaskDetail, keepForm = false): void {
    this.detailPanel.replaceChildren();
    const title = el("h2", undefined, `${detail.key} — ${detail.status.replace("_", " ")}`);
    this.detailPanel.append(title);

    const canvas = el("canvas", "schematic");
    canvas.width = 420;
    canvas.height = 330;
    this.detailPanel.append(canvas);
    drawSchematic(canvas, detail.schematic);

    if (detail.resolved_preview) {
      const preview = el("div", "resolved-preview");
      preview.append(el("strong", undefined, "current query: "), el("em", undefined, detail.resolved_preview));
      this.detailPanel.append(preview);
    }

    const candidates = el("div", "candidates");
    candidates.append(el("h3", undefined, "candidate features"));
    const selectable = selectableCandidates(detail);
    if (selectable.length === 0) {
      candidates.append(el("p", "empty-state", "no automatic features left — add a manual one"));
    }
    for (const candidate of selectable) {
      const row = el("div", "candidate");
      const pick = el("input") as HTMLInputElement;
      pick.type = "radio";
      pick.name = "candidate";
      pick.value = candidate.feature_key;
      pick.id = `cand-${candidate.feature_key}`;
      if (!keepForm || this.store.form.featureKey === candidate.feature_key) {
        pick.checked = this.store.form.featureKey === candidate.feature_key;
      }
      pick.addEventListener("change", () => this.store.setForm({ featureKey: candidate.feature_key }));
      const label = el("label");
      label.htmlFor = pick.id;
      label.append(
        el("span", "kind", candidate.kind),
        el("span", "fragment", candidate.text_fragment),
        el("em", "preview", candidate.preview),
      );
      row.append(pick, label);
      candidates.append(row);
    }
    this.detailPanel.append(candidates);

    const form = el("div", "decision-form");
    const actions = el("div", "actions");
    for (const action of ["accept", "reject", "manual"] as const) {
      const button = el("button", `action-${action}`, action);
      if (this.store.form.action === action) button.classList.add("selected");
      button.addEventListener("click", () => {
        this.store.setForm({ action });
        this.renderDetail(detail, true);
      });
      actions.append(button);
    }
    form.append(actions);

    if (this.store.form.action === "manual") {
      const manual = el("textarea", "manual-text") as HTMLTextAreaElement;
      manual.placeholder = "distinctive feature, e.g. between the blue and the orange chair";
      manual.value = this.store.form.manualText;
      manual.addEventListener("input", () => this.store.setForm({ manualText: manual.value }));
      form.append(manual);
    }
    if (this.store.form.action === "reject") {
      const reason = el("input", "reject-reason") as HTMLInputElement;
      reason.placeholder = "why this feature fails";
      reason.value = this.store.form.reason;
      reason.addEventListener("input", () => this.store.setForm({ reason: reason.value }));
      form.append(reason);
    }
    const submit = el("button", "submit", "submit decision");
    submit.addEventListener("click", () => void this.store.submit());
    form.append(submit);
    this.detailPanel.append(form);
  }
}
