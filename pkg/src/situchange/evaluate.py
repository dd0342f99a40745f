"""Run-level evaluation: scores predictions against a dataset and assembles a
report (per-type correctness, relative-error means, text overlap, optional
rank correlation against human scores)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Protocol, Sequence

from .metrics import (
    CiderScorer,
    MetricError,
    correctness_score,
    rel_score,
    spearman,
    text_overlap,
)
from .parsing import normalize_text, parse_distance_m
from .qa import QAItem, QAType


@dataclass(frozen=True)
class LongFormItem:
    item_id: str
    scan_pair_id: str
    situation_id: str
    task: str  # description | rearrangement
    query: str
    text: str

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "scan_pair_id": self.scan_pair_id,
            "situation_id": self.situation_id,
            "task": self.task,
            "query": self.query,
            "text": self.text,
        }

    @staticmethod
    def from_dict(d: dict) -> "LongFormItem":
        return LongFormItem(
            item_id=d["item_id"],
            scan_pair_id=d["scan_pair_id"],
            situation_id=d["situation_id"],
            task=d["task"],
            query=d["query"],
            text=d["text"],
        )


class Rater(Protocol):
    def rate(self, question: str, ground_truth: str, response: str, rubric: str) -> int: ...


class ExactMatchRater:
    """Deterministic offline rater: 5 on a normalized exact match, else 1."""

    model_id = "exact-match"

    def rate(self, question: str, ground_truth: str, response: str, rubric: str) -> int:
        return 5 if normalize_text(ground_truth) == normalize_text(response) else 1


class JudgeRater:
    """Adapter putting a prompt-gateway judge behind the Rater protocol."""

    _RUBRICS = {
        "general": "judge_general",
        "direction": "judge_direction",
        "longform": "judge_longform",
    }

    def __init__(self, gateway):
        self.gateway = gateway
        self.model_id = gateway.config.model

    def rate(self, question: str, ground_truth: str, response: str, rubric: str) -> int:
        return self.gateway.judge(question, ground_truth, response, self._RUBRICS[rubric])


_DIRECTION_TYPES = (QAType.EGO_DIRECTION_PRE, QAType.EGO_DIRECTION_POST)


@dataclass
class EvalReport:
    per_type_correctness: dict[str, float] = field(default_factory=dict)
    per_type_rel: dict[str, float] = field(default_factory=dict)
    text_metrics: dict[str, dict[str, float]] = field(default_factory=dict)
    longform_correctness: dict[str, float] = field(default_factory=dict)
    spearman_vs_human: Optional[float] = None
    spearman_note: str = ""
    counts: dict[str, int] = field(default_factory=dict)
    unparsed_numeric: int = 0
    missing_predictions: int = 0
    judge_model: str = ""
    config_fingerprint: str = ""

    def validate(self) -> None:
        for name, value in {**self.per_type_correctness, **self.longform_correctness}.items():
            if not (0.0 <= value <= 100.0):
                raise MetricError(f"correctness for {name} out of [0, 100]: {value}")
        for name, value in self.per_type_rel.items():
            if not (0.0 <= value <= 1.0):
                raise MetricError(f"rel score for {name} out of [0, 1]: {value}")
        if self.spearman_vs_human is not None and not (-1.0 <= self.spearman_vs_human <= 1.0):
            raise MetricError(f"spearman out of [-1, 1]: {self.spearman_vs_human}")

    def to_dict(self) -> dict:
        return {
            "per_type_correctness": self.per_type_correctness,
            "per_type_rel": self.per_type_rel,
            "text_metrics": self.text_metrics,
            "longform_correctness": self.longform_correctness,
            "spearman_vs_human": self.spearman_vs_human,
            "spearman_note": self.spearman_note,
            "counts": self.counts,
            "unparsed_numeric": self.unparsed_numeric,
            "missing_predictions": self.missing_predictions,
            "judge_model": self.judge_model,
            "config_fingerprint": self.config_fingerprint,
        }

    def to_text(self) -> str:
        lines = [f"judge: {self.judge_model}   config: {self.config_fingerprint}"]
        if self.per_type_correctness:
            lines.append("")
            lines.append(f"{'QA type (judged)':24s} {'C%':>8s}")
            for name in sorted(self.per_type_correctness):
                lines.append(f"{name:24s} {self.per_type_correctness[name]:8.2f}")
        if self.per_type_rel:
            lines.append("")
            lines.append(f"{'QA type (numeric)':24s} {'REL':>8s}")
            for name in sorted(self.per_type_rel):
                lines.append(f"{name:24s} {self.per_type_rel[name]:8.4f}")
        if self.text_metrics:
            lines.append("")
            lines.append(f"{'long-form task':24s} {'bleu4':>8s} {'rougeL':>8s} {'cider':>8s} {'C%':>8s}")
            for task in sorted(self.text_metrics):
                m = self.text_metrics[task]
                c = self.longform_correctness.get(task, 0.0)
                lines.append(f"{task:24s} {m['bleu4']:8.4f} {m['rougeL']:8.4f} {m['cider']:8.4f} {c:8.2f}")
        if self.spearman_vs_human is not None:
            lines.append("")
            lines.append(f"spearman vs human: {self.spearman_vs_human:.4f}")
        elif self.spearman_note:
            lines.append("")
            lines.append(f"spearman vs human: n/a ({self.spearman_note})")
        lines.append("")
        lines.append(
            f"missing predictions: {self.missing_predictions}   unparseable numeric: {self.unparsed_numeric}"
        )
        return "\n".join(lines) + "\n"


def evaluate_run(
    qa_items: Sequence[QAItem],
    predictions: Mapping[str, str],
    rater: Rater,
    longform_items: Sequence[LongFormItem] = (),
    human_scores: Mapping[str, int] | None = None,
    config_fingerprint: str = "",
) -> EvalReport:
    """Score a prediction set.

    Distance and displacement answers are parsed and scored with the revised
    relative-error metric; other QA types and long-form texts go through the
    rater (judge or exact match). Missing predictions take minimum scores;
    predictions without a dataset item are an error.
    """
    known_ids = {i.item_id for i in qa_items} | {i.item_id for i in longform_items}
    orphans = sorted(set(predictions) - known_ids)
    if orphans:
        raise ValueError(f"predictions reference unknown item ids: {orphans[:5]}")

    report = EvalReport(judge_model=getattr(rater, "model_id", ""), config_fingerprint=config_fingerprint)
    ratings_by_type: dict[str, list[int]] = {}
    rels_by_type: dict[str, list[float]] = {}
    item_ratings: dict[str, int] = {}

    for item in qa_items:
        response = predictions.get(item.item_id)
        if item.qa_type.numeric:
            d_gt = parse_distance_m(item.answer)
            if d_gt is None:
                # malformed dataset answers count as unparseable, scored 0
                report.unparsed_numeric += 1
                rels_by_type.setdefault(item.qa_type.value, []).append(0.0)
                continue
            if response is None:
                report.missing_predictions += 1
                rels_by_type.setdefault(item.qa_type.value, []).append(0.0)
                continue
            d_pred = parse_distance_m(response)
            if d_pred is None or d_pred < 0:
                report.unparsed_numeric += 1
                rels_by_type.setdefault(item.qa_type.value, []).append(0.0)
                continue
            rels_by_type.setdefault(item.qa_type.value, []).append(rel_score(d_gt, d_pred))
            continue
        if response is None:
            report.missing_predictions += 1
            rating = 1
        else:
            rubric = "direction" if item.qa_type in _DIRECTION_TYPES else "general"
            rating = rater.rate(item.question, item.answer, response, rubric)
        ratings_by_type.setdefault(item.qa_type.value, []).append(rating)
        item_ratings[item.item_id] = rating

    by_task: dict[str, list[LongFormItem]] = {}
    for item in longform_items:
        by_task.setdefault(item.task, []).append(item)
    for task, items in sorted(by_task.items()):
        scorer = CiderScorer([[i.text] for i in items])
        sums = {"bleu4": 0.0, "rougeL": 0.0, "cider": 0.0}
        ratings: list[int] = []
        for item in items:
            response = predictions.get(item.item_id)
            if response is None:
                report.missing_predictions += 1
                ratings.append(1)
                item_ratings[item.item_id] = 1
                continue
            overlap = text_overlap(response, [item.text], scorer)
            for k in sums:
                sums[k] += overlap[k]
            rating = rater.rate(item.query, item.text, response, "longform")
            ratings.append(rating)
            item_ratings[item.item_id] = rating
        n = len(items)
        report.text_metrics[task] = {k: v / n for k, v in sums.items()}
        report.longform_correctness[task] = correctness_score(ratings)

    for qa_type, ratings in ratings_by_type.items():
        report.per_type_correctness[qa_type] = correctness_score(ratings)
    for qa_type, rels in rels_by_type.items():
        report.per_type_rel[qa_type] = sum(rels) / len(rels)

    if human_scores:
        shared = sorted(set(item_ratings) & set(human_scores))
        if len(shared) >= 2:
            try:
                report.spearman_vs_human = spearman(
                    [item_ratings[i] for i in shared], [human_scores[i] for i in shared]
                )
            except MetricError as e:
                report.spearman_note = str(e)
        else:
            report.spearman_note = f"only {len(shared)} overlapping rated items"

    report.counts = {
        "qa_items": len(qa_items),
        "longform_items": len(longform_items),
        "predictions": len(predictions),
    }
    report.validate()
    return report
