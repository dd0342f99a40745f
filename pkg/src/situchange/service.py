"""HTTP review API: list feature-review tasks, submit decisions with
optimistic versioning, and retrigger query resolution."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .config import PipelineConfig
from .features import (
    FeatureCandidate,
    FeatureKind,
    NeedsReview,
    QueryTask,
    Tense,
    find_landmarks,
    render_query,
    resolve_feature,
)
from .geometry import obb_footprint
from .pipeline import Pipeline, read_jsonl
from .review import ReviewStore, Decision, StoreLock, VersionConflict
from .scene.io import pair_from_dict


class DecisionBody(BaseModel):
    action: str  # accept | reject | manual
    version: int
    feature_key: Optional[str] = None
    manual_text: Optional[str] = None
    reason: str = ""
    author: str = ""


class ReviewService:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.pipeline = Pipeline(config)
        self.out_dir = Path(config.out_dir)
        self.store = ReviewStore(self.out_dir / "review_log.jsonl")
        self._load()

    def _load(self) -> None:
        tasks_path = self.out_dir / "review_tasks.json"
        if not tasks_path.exists():
            raise FileNotFoundError(
                f"{tasks_path} missing; run the queries stage before serving review"
            )
        data = json.loads(tasks_path.read_text("utf-8"))
        self.tasks = {t["task_id"]: t for t in data["tasks"]}
        _, pair_records = read_jsonl(self.pipeline.artifact("ingest"), "ingest")
        self.pairs = {p["pair_id"]: pair_from_dict(p) for p in pair_records}

    def _candidates(self, task: dict) -> list[FeatureCandidate]:
        return [
            FeatureCandidate(
                object_id=task["object_id"],
                label=task["label"],
                kind=FeatureKind(c["kind"]),
                text_fragment=c["text_fragment"],
                tense=Tense(task["tense"]),
                landmark_id=c.get("landmark_id"),
                landmark_label=c.get("landmark_label"),
            )
            for c in task["candidates"]
        ]

    def _status_and_resolution(self, task: dict):
        review = self.store.get(task["task_id"])
        resolved = resolve_feature(
            task["object_id"], self._candidates(task), review, label=task["label"]
        )
        if isinstance(resolved, NeedsReview):
            return "pending", None
        if review is not None and review.human_resolved:
            return "human_resolved", resolved
        return "auto_resolved", resolved

    def list_tasks(self, status: str | None = None) -> list[dict]:
        out = []
        for task in self.tasks.values():
            current, _ = self._status_and_resolution(task)
            if status and current != status:
                continue
            out.append(
                {
                    "task_id": task["task_id"],
                    "scan_pair_id": task["scan_pair_id"],
                    "object_id": task["object_id"],
                    "key": task["key"],
                    "label": task["label"],
                    "status": current,
                    "version": self.store.version_of(task["task_id"]),
                }
            )
        out.sort(key=lambda t: (t["scan_pair_id"], t["object_id"]))
        return out

    def task_detail(self, task_id: str) -> dict:
        task = self.tasks.get(task_id)
        if task is None:
            raise KeyError(task_id)
        pair = self.pairs[task["scan_pair_id"]]
        scan = pair.curr if pair.curr.get(task["object_id"]) else pair.prev
        landmarks = find_landmarks(scan, self.config.queries)
        schematic = []
        for obj in sorted(scan.objects, key=lambda o: o.id):
            schematic.append(
                {
                    "key": obj.key,
                    "label": obj.label,
                    "corners": [[round(float(x), 4), round(float(y), 4)] for x, y in obb_footprint(obj.obb)],
                    "wall": obj.label == "wall",
                    "landmark": obj.id in landmarks,
                    "target": obj.id == task["object_id"],
                }
            )
        review = self.store.get(task_id)
        rejected = dict(review.rejected) if review else {}
        tense = Tense(task["tense"])
        candidates = []
        for cand in self._candidates(task):
            candidates.append(
                {
                    "feature_key": cand.feature_key,
                    "kind": cand.kind.value,
                    "text_fragment": cand.text_fragment,
                    "landmark_label": cand.landmark_label,
                    "rejected": cand.feature_key in rejected,
                    "reject_reason": rejected.get(cand.feature_key, ""),
                    "preview": render_query(
                        task["object_id"], cand, tense, QueryTask.DESCRIPTION, task["n_same_label"]
                    ),
                }
            )
        status, resolved = self._status_and_resolution(task)
        resolved_preview = None
        if resolved is not None:
            resolved_preview = render_query(
                task["object_id"], resolved, tense, QueryTask.DESCRIPTION, task["n_same_label"]
            )
        obj = scan.get(task["object_id"])
        return {
            "task_id": task_id,
            "scan_pair_id": task["scan_pair_id"],
            "object_id": task["object_id"],
            "key": task["key"],
            "label": task["label"],
            "status": status,
            "version": self.store.version_of(task_id),
            "object": {
                "center": list(obj.obb.center),
                "half_extents": list(obj.obb.half_extents),
                "yaw": obj.obb.yaw,
                "attributes": {k: list(v) for k, v in obj.attributes.items()},
            },
            "schematic": schematic,
            "candidates": candidates,
            "manual_text": review.manual_text if review else None,
            "accepted_key": review.accepted_key if review else None,
            "resolved_preview": resolved_preview,
        }

    def decide(self, task_id: str, body: DecisionBody) -> dict:
        if task_id not in self.tasks:
            raise KeyError(task_id)
        decision = Decision(
            task_id=task_id,
            action=body.action,
            base_version=body.version,
            feature_key=body.feature_key,
            manual_text=body.manual_text,
            reason=body.reason,
            author=body.author,
        )
        self.store.submit(decision)
        return self.task_detail(task_id)

    def regen(self) -> dict:
        n_queries, n_tasks = self.pipeline.gen_queries()
        self._load()
        return {"queries": n_queries, "tasks": n_tasks}


def build_app(service: ReviewService) -> FastAPI:
    app = FastAPI(title="feature review")

    @app.get("/tasks")
    def get_tasks(status: Optional[str] = None):
        return service.list_tasks(status)

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str):
        try:
            return service.task_detail(task_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no task '{task_id}'")

    @app.post("/tasks/{task_id}/decision")
    def post_decision(task_id: str, body: DecisionBody):
        if body.action == "manual" and not (body.manual_text or "").strip():
            raise HTTPException(status_code=422, detail="manual feature text must be non-empty")
        if body.action in ("accept", "reject") and not body.feature_key:
            raise HTTPException(status_code=422, detail=f"{body.action} needs feature_key")
        try:
            return service.decide(task_id, body)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no task '{task_id}'")
        except VersionConflict as e:
            raise HTTPException(
                status_code=409,
                detail={"error": "version conflict", "current_version": e.current_version},
            )

    @app.post("/regen")
    def post_regen():
        return service.regen()

    return app


def serve_review(config: PipelineConfig, bind: str = "127.0.0.1:8321") -> None:
    """Run the review API; refuses to start when another writer holds the lock."""
    import uvicorn

    host, _, port = bind.partition(":")
    service = ReviewService(config)
    lock = StoreLock(Path(config.out_dir) / "review_log.lock")
    lock.acquire()
    try:
        app = build_app(service)
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8321), log_level="warning")
    finally:
        lock.release()
