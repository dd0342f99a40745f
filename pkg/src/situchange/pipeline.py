"""Pipeline stages over on-disk JSONL artifacts.

Every artifact starts with a header line carrying the stage name and the run's
config fingerprint. Stages are pure functions of (inputs, config): rerunning
with unchanged inputs rewrites byte-identical files. LLM-dependent expansions
degrade to deterministic templates, flagged "template_only", so the whole
pipeline runs offline.
"""

from __future__ import annotations

import json
import os
import zlib
from pathlib import Path
from typing import Callable, Iterable, Optional

from .config import PipelineConfig
from .context import build_context
from .evaluate import EvalReport, ExactMatchRater, LongFormItem, evaluate_run
from .features import resolve_pair_queries
from .qa import QAItem, dataset_stats, generate_qa, stats_table, verify_qa, Verified
from .review import ReviewStore
from .scene.io import canonical_dumps, iter_split, pair_from_dict, pair_to_dict
from .scene.model import ScanPair
from .situations import (
    Situation,
    SituationCategory,
    expand_descriptive_offline,
    sample_situation_batch,
)
from .geometry import ObserverPose


class StageDependencyError(Exception):
    def __init__(self, artifact: str, producer: str):
        super().__init__(f"missing artifact '{artifact}'; run the '{producer}' stage first")
        self.artifact = artifact
        self.producer = producer


ARTIFACTS = {
    "ingest": "pairs.jsonl",
    "situations": "situations.jsonl",
    "context": "contexts.jsonl",
    "queries": "queries_description.jsonl",
    "queries_rearrangement": "queries_rearrangement.jsonl",
    "review_tasks": "review_tasks.json",
    "qa": "qa.jsonl",
    "stats": "stats.json",
}

STAGE_ORDER = ("ingest", "situations", "context", "queries", "qa", "stats")


def write_jsonl(path: Path, stage: str, fingerprint: str, records: Iterable[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + f".tmp{os.getpid()}")
    with tmp.open("w", encoding="utf-8") as fh:
        fh.write(canonical_dumps({"_header": {"artifact": stage, "config_fingerprint": fingerprint, "format": 1}}))
        for record in records:
            fh.write(canonical_dumps(record))
    os.replace(tmp, path)


def read_jsonl(path: Path, producer: str) -> tuple[dict, list[dict]]:
    if not path.exists():
        raise StageDependencyError(str(path), producer)
    header: dict = {}
    records: list[dict] = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            value = json.loads(line)
            if "_header" in value:
                header = value["_header"]
            else:
                records.append(value)
    return header, records


def _derive_seed(base: int, *parts: str) -> int:
    h = base & 0xFFFFFFFF
    for part in parts:
        h = zlib.crc32(part.encode("utf-8"), h)
    return h


def situation_to_dict(s: Situation, pair_id: str, template_only: bool) -> dict:
    return {
        "scan_pair_id": pair_id,
        "situation_id": s.situation_id,
        "category": s.category.value,
        "anchor": s.anchor_id,
        "pose": {
            "position": list(s.pose.position),
            "yaw": s.pose.yaw,
            "eye_height": s.pose.eye_height,
            "head_tilt_deg": s.pose.head_tilt_deg,
        },
        "brief_text": s.brief_text,
        "descriptive_text": s.descriptive_text,
        "reference_ids": list(s.reference_ids),
        "template_only": template_only,
    }


def situation_from_dict(d: dict) -> Situation:
    pose = d["pose"]
    return Situation(
        situation_id=d["situation_id"],
        category=SituationCategory(d["category"]),
        anchor_id=d["anchor"],
        pose=ObserverPose(
            position=tuple(pose["position"]),
            yaw=pose["yaw"],
            eye_height=pose["eye_height"],
            head_tilt_deg=pose["head_tilt_deg"],
        ),
        brief_text=d["brief_text"],
        descriptive_text=d.get("descriptive_text"),
        reference_ids=tuple(d.get("reference_ids", ())),
    )


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out_dir = Path(config.out_dir)
        self.fingerprint = config.fingerprint()

    def artifact(self, name: str) -> Path:
        return self.out_dir / ARTIFACTS[name]

    # -- stages -------------------------------------------------------------

    def ingest(self, pairs_source: str | Path) -> int:
        """Load, validate, and canonicalize scan pairs from a split manifest
        (JSONL of manifest paths or inline pairs) or a directory of manifests."""
        source = Path(pairs_source)
        if source.is_dir():
            pairs = [
                pair_from_dict(json.loads(p.read_text("utf-8")), base_dir=p.parent)
                for p in sorted(source.glob("*.pair.json"))
            ]
        else:
            pairs = list(iter_split(source))
        write_jsonl(
            self.artifact("ingest"), "ingest", self.fingerprint,
            (pair_to_dict(p, inline=True) for p in pairs),
        )
        return len(pairs)

    def load_pairs(self) -> list[ScanPair]:
        _, records = read_jsonl(self.artifact("ingest"), "ingest")
        return [pair_from_dict(r) for r in records]

    def sample_situations(self) -> int:
        pairs = self.load_pairs()
        records = []
        for pair in pairs:
            seed = _derive_seed(self.config.seed, "situations", pair.pair_id)
            batch = sample_situation_batch(
                pair.curr, seed, self.config.sampler, self.config.geometry,
                id_prefix=f"{pair.pair_id}:",
            )
            for situ in batch:
                text, refs = expand_descriptive_offline(pair.curr, situ, self.config.geometry)
                situ = Situation(
                    situation_id=situ.situation_id,
                    category=situ.category,
                    anchor_id=situ.anchor_id,
                    pose=situ.pose,
                    brief_text=situ.brief_text,
                    descriptive_text=text,
                    reference_ids=refs,
                )
                records.append(situation_to_dict(situ, pair.pair_id, template_only=True))
        write_jsonl(self.artifact("situations"), "situations", self.fingerprint, records)
        return len(records)

    def load_situations(self) -> list[tuple[str, Situation]]:
        _, records = read_jsonl(self.artifact("situations"), "situations")
        return [(r["scan_pair_id"], situation_from_dict(r)) for r in records]

    def build_contexts(self) -> int:
        pairs = {p.pair_id: p for p in self.load_pairs()}
        situations = self.load_situations()
        records = []
        for pair_id, situ in situations:
            ctx = build_context(pairs[pair_id], situ, self.config.geometry, self.config.qa.step_m)
            records.append(
                {
                    "scan_pair_id": pair_id,
                    "situation_id": situ.situation_id,
                    "brief": ctx.brief_text,
                    "groups": ctx.to_payload(self.config.geometry),
                    "step_m": ctx.step_m,
                    "notes": list(ctx.notes),
                }
            )
        write_jsonl(self.artifact("context"), "context", self.fingerprint, records)
        return len(records)

    def gen_queries(self) -> tuple[int, int]:
        """Resolve features against the review log and emit per-task queries
        plus the review-task store."""
        pairs = self.load_pairs()
        store = ReviewStore(self.out_dir / "review_log.jsonl")
        desc_rows: list[dict] = []
        rearr_rows: list[dict] = []
        tasks: list[dict] = []
        for pair in pairs:
            rows, pair_tasks = resolve_pair_queries(
                pair, store.get, self.config.queries, self.config.geometry
            )
            for row in rows:
                record = {
                    "scan_pair_id": row.scan_pair_id,
                    "object_id": row.object_id,
                    "feature_kind": row.feature_kind,
                    "tense": row.tense,
                    "query": row.query,
                }
                (desc_rows if row.task == "description" else rearr_rows).append(record)
            for task in pair_tasks:
                tasks.append(
                    {
                        "task_id": task.task_id,
                        "scan_pair_id": task.scan_pair_id,
                        "object_id": task.object_id,
                        "key": task.key,
                        "label": task.label,
                        "tense": task.tense.value,
                        "n_same_label": task.n_same_label,
                        "status": task.status,
                        "version": store.version_of(task.task_id),
                        "candidates": [
                            {
                                "feature_key": c.feature_key,
                                "kind": c.kind.value,
                                "text_fragment": c.text_fragment,
                                "landmark_id": c.landmark_id,
                                "landmark_label": c.landmark_label,
                            }
                            for c in task.candidates
                        ],
                    }
                )
        write_jsonl(self.artifact("queries"), "queries", self.fingerprint, desc_rows)
        write_jsonl(
            self.artifact("queries_rearrangement"), "queries", self.fingerprint, rearr_rows
        )
        tasks_path = self.out_dir / ARTIFACTS["review_tasks"]
        tmp = tasks_path.with_suffix(f".tmp{os.getpid()}")
        tmp.write_text(
            canonical_dumps({"config_fingerprint": self.fingerprint, "tasks": tasks}), "utf-8"
        )
        os.replace(tmp, tasks_path)
        return len(desc_rows) + len(rearr_rows), len(tasks)

    def gen_qa(self) -> int:
        pairs = {p.pair_id: p for p in self.load_pairs()}
        situations = self.load_situations()
        records = []
        for pair_id, situ in situations:
            pair = pairs[pair_id]
            seed = _derive_seed(self.config.seed, "qa", pair_id, situ.situation_id)
            items = generate_qa(
                pair, situ, None, seed, self.config.qa, self.config.geometry
            )
            for item in items:
                verdict = verify_qa(item, pair, situ, None, self.config.geometry, self.config.qa)
                if isinstance(verdict, Verified):
                    records.append(item.to_dict())
        write_jsonl(self.artifact("qa"), "qa", self.fingerprint, records)
        return len(records)

    def load_qa(self) -> list[QAItem]:
        _, records = read_jsonl(self.artifact("qa"), "qa")
        return [QAItem.from_dict(r) for r in records]

    def compute_stats(self) -> dict:
        items = self.load_qa()
        _, desc = read_jsonl(self.artifact("queries"), "queries")
        _, rearr = read_jsonl(self.artifact("queries_rearrangement"), "queries")
        stats = dataset_stats(
            items,
            description_queries=[r["query"] for r in desc],
            rearrangement_queries=[r["query"] for r in rearr],
        )
        stats["config_fingerprint"] = self.fingerprint
        path = self.out_dir / ARTIFACTS["stats"]
        tmp = path.with_suffix(f".tmp{os.getpid()}")
        tmp.write_text(canonical_dumps(stats), "utf-8")
        os.replace(tmp, path)
        (self.out_dir / "stats.txt").write_text(stats_table(stats), "utf-8")
        return stats

    def run(self, stages: Iterable[str], pairs_source: str | Path | None = None) -> dict[str, object]:
        """Run stages in pipeline order; each checks its input artifacts."""
        results: dict[str, object] = {}
        order = [s for s in STAGE_ORDER if s in set(stages)]
        for stage in order:
            if stage == "ingest":
                if pairs_source is None:
                    raise ValueError("ingest requires a pairs source")
                results["ingest"] = self.ingest(pairs_source)
            elif stage == "situations":
                results["situations"] = self.sample_situations()
            elif stage == "context":
                results["context"] = self.build_contexts()
            elif stage == "queries":
                results["queries"] = self.gen_queries()
            elif stage == "qa":
                results["qa"] = self.gen_qa()
            elif stage == "stats":
                results["stats"] = self.compute_stats()
        return results

    # -- evaluation -----------------------------------------------------------

    def evaluate(
        self,
        predictions_path: str | Path,
        rater=None,
        longform_path: str | Path | None = None,
        human_scores_path: str | Path | None = None,
    ) -> EvalReport:
        items = self.load_qa()
        predictions: dict[str, str] = {}
        with Path(predictions_path).open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if "_header" in record:
                    continue
                predictions[record["item_id"]] = record["response"]
        longform: list[LongFormItem] = []
        if longform_path is not None and Path(longform_path).exists():
            _, records = read_jsonl(Path(longform_path), "longform")
            longform = [LongFormItem.from_dict(r) for r in records]
        human_scores = None
        if human_scores_path is not None:
            human_scores = {
                k: int(v)
                for k, v in json.loads(Path(human_scores_path).read_text("utf-8")).items()
            }
        report = evaluate_run(
            items,
            predictions,
            rater or ExactMatchRater(),
            longform_items=longform,
            human_scores=human_scores,
            config_fingerprint=self.fingerprint,
        )
        report_path = self.out_dir / "report.json"
        tmp = report_path.with_suffix(f".tmp{os.getpid()}")
        tmp.write_text(canonical_dumps(report.to_dict()), "utf-8")
        os.replace(tmp, report_path)
        (self.out_dir / "report.txt").write_text(report.to_text(), "utf-8")
        return report
