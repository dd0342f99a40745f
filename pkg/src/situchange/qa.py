"""The nine QA types with object-centric provenance, ground-truth verification,
downsampling axes, and dataset statistics.

Templates are the ground-truth generator: every item carries the object ids
and parameters needed to recompute its answer, so verification never parses
question text.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from .config import GeometryConfig, QAConfig
from .context import ContextRecord, classify_changes
from .geometry import (
    Bucket,
    egocentric_position,
    proximity_bucket,
    round_distance,
    route_obstacles,
    scan_vertical_relations,
)
from .parsing import number_word, parse_distance_m, pluralize
from .scene.model import ChangeKind, ObjectInstance, ScanPair, SceneScan
from .situations import Situation


class QAType(str, Enum):
    AFFORDANCE = "affordance"
    ATTRIBUTE = "attribute"
    EXISTENCE = "existence"
    COUNTING = "counting"
    WARNING = "warning"
    ALLO_RELATIONSHIP = "allo_relationship"
    ALLO_DISPLACEMENT = "allo_displacement"
    EGO_DIRECTION_PRE = "ego_direction_pre"
    EGO_DIRECTION_POST = "ego_direction_post"
    EGO_DISTANCE_PRE = "ego_distance_pre"
    EGO_DISTANCE_POST = "ego_distance_post"

    @property
    def type_tag(self) -> str:
        return _TYPE_TAGS[self]

    @property
    def group(self) -> str:
        if self in (
            QAType.WARNING,
            QAType.EGO_DIRECTION_PRE,
            QAType.EGO_DIRECTION_POST,
            QAType.EGO_DISTANCE_PRE,
            QAType.EGO_DISTANCE_POST,
        ):
            return "egocentric"
        if self in (QAType.ALLO_RELATIONSHIP, QAType.ALLO_DISPLACEMENT):
            return "allocentric"
        return "general"

    @property
    def numeric(self) -> bool:
        return self in (QAType.ALLO_DISPLACEMENT, QAType.EGO_DISTANCE_PRE, QAType.EGO_DISTANCE_POST)


_TYPE_TAGS = {
    QAType.AFFORDANCE: "Affordance",
    QAType.ATTRIBUTE: "Attribute",
    QAType.EXISTENCE: "Existence",
    QAType.COUNTING: "Counting",
    QAType.WARNING: "Warning",
    QAType.ALLO_RELATIONSHIP: "Allocentric Relationship",
    QAType.ALLO_DISPLACEMENT: "Allocentric Displacement",
    QAType.EGO_DIRECTION_PRE: "Egocentric Direction Old",
    QAType.EGO_DIRECTION_POST: "Egocentric Direction",
    QAType.EGO_DISTANCE_PRE: "Egocentric Distance Old",
    QAType.EGO_DISTANCE_POST: "Egocentric Distance",
}

_TAG_TO_TYPE = {tag: t for t, tag in _TYPE_TAGS.items()}


@dataclass(frozen=True)
class OCoT:
    object_ids: tuple[int, ...]
    type_tag: str
    params: dict = field(default_factory=dict, hash=False, compare=False)


@dataclass(frozen=True)
class QAItem:
    item_id: str
    scan_pair_id: str
    situation_id: str
    qa_type: QAType
    question: str
    answer: str
    ocot: OCoT

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "scan_pair_id": self.scan_pair_id,
            "situation_id": self.situation_id,
            "qa_type": self.qa_type.value,
            "question": self.question,
            "answer": self.answer,
            "ocot": {
                "object_ids": list(self.ocot.object_ids),
                "type_tag": self.ocot.type_tag,
                "params": self.ocot.params,
            },
        }

    @staticmethod
    def from_dict(d: dict) -> "QAItem":
        return QAItem(
            item_id=d["item_id"],
            scan_pair_id=d["scan_pair_id"],
            situation_id=d["situation_id"],
            qa_type=QAType(d["qa_type"]),
            question=d["question"],
            answer=d["answer"],
            ocot=OCoT(
                object_ids=tuple(d["ocot"]["object_ids"]),
                type_tag=d["ocot"]["type_tag"],
                params=d["ocot"].get("params", {}),
            ),
        )


@dataclass(frozen=True)
class Verified:
    pass


@dataclass(frozen=True)
class Rejected:
    reason: str


_BUCKET_PHRASE = {
    Bucket.FRONT: "in front of me",
    Bucket.LEFT: "to my left",
    Bucket.RIGHT: "to my right",
    Bucket.BACK: "behind me",
}

_SKIP_LABELS = ("wall", "ceiling", "floor")


def _label_counts(scan: SceneScan) -> dict[str, int]:
    counts: dict[str, int] = {}
    for o in scan.objects:
        counts[o.label] = counts.get(o.label, 0) + 1
    return counts


def _capfirst(text: str) -> str:
    return text[:1].upper() + text[1:]


def _format_m(dist: float, cfg: GeometryConfig) -> str:
    return f"{round_distance(dist, cfg):.1f} m"


def _attr_answer(tags: Sequence[str]) -> str:
    return _capfirst(" and ".join(tags))


def _aligned_prev_center(pair: ScanPair, oid: int):
    obj = pair.prev.get(oid)
    return None if obj is None else pair.alignment.apply(obj.obb.center)


def _changed_label_unique(pair: ScanPair, oid: int) -> bool:
    """True when exactly one changed object carries this label (so 'the changed
    <label>' grounds unambiguously)."""
    groups = classify_changes(pair)
    changed_ids = [i for g in ("rigid", "added", "removed", "non_rigid") for i in groups[g]]
    label = None
    obj = pair.curr.get(oid) or pair.prev.get(oid)
    if obj is None:
        return False
    label = obj.label
    same = 0
    for cid in changed_ids:
        other = pair.curr.get(cid) or pair.prev.get(cid)
        if other is not None and other.label == label:
            same += 1
    return same == 1


def _warning_routes(pair: ScanPair, situation: Situation, cfg: GeometryConfig):
    """(target, obstacle ids) per unchanged unique-label target, id order."""
    counts = _label_counts(pair.curr)
    groups = classify_changes(pair)
    unchanged = set(groups["unchanged"])
    out = []
    for target in sorted(pair.curr.objects, key=lambda o: o.id):
        if target.label in _SKIP_LABELS or counts[target.label] != 1 or target.id not in unchanged:
            continue
        out.append((target, route_obstacles(situation.pose, target, pair, cfg)))
    return out


def generate_qa(
    pair: ScanPair,
    situation: Situation,
    context: ContextRecord | None = None,
    rng_seed: int = 0,
    qa_cfg: QAConfig | None = None,
    geom: GeometryConfig | None = None,
) -> list[QAItem]:
    """Deterministic template instantiation of all nine QA types.

    Types without source data in the scene are skipped. Every item carries the
    ids and parameters its answer was computed from.
    """
    qa_cfg = qa_cfg or QAConfig()
    geom = geom or GeometryConfig()
    rng = random.Random(rng_seed)
    observer = situation.pose
    curr = pair.curr
    counts = _label_counts(curr)
    groups = classify_changes(pair)
    items: list[tuple[QAType, str, str, OCoT]] = []

    # Egocentric distance and direction: previous location prioritized for
    # changed objects, current location for them and a few unchanged anchors.
    for oid in groups["rigid"]:
        obj = curr.get(oid)
        if obj is None or obj.label in _SKIP_LABELS or not _changed_label_unique(pair, oid):
            continue
        ref = f"the changed {obj.label}"
        old_center = _aligned_prev_center(pair, oid)
        if old_center is not None:
            hour, dist = egocentric_position(observer, old_center)
            items.append(
                (
                    QAType.EGO_DISTANCE_PRE,
                    f"How far was {ref} from me?",
                    _format_m(dist, geom),
                    OCoT((oid,), QAType.EGO_DISTANCE_PRE.type_tag),
                )
            )
            items.append(
                (
                    QAType.EGO_DIRECTION_PRE,
                    f"Which direction was {ref} relative to me?",
                    f"{hour} o'clock",
                    OCoT((oid,), QAType.EGO_DIRECTION_PRE.type_tag),
                )
            )
        hour, dist = egocentric_position(observer, obj)
        items.append(
            (
                QAType.EGO_DISTANCE_POST,
                f"How far is {ref} from me?",
                _format_m(dist, geom),
                OCoT((oid,), QAType.EGO_DISTANCE_POST.type_tag),
            )
        )
        items.append(
            (
                QAType.EGO_DIRECTION_POST,
                f"Which direction is {ref} relative to me?",
                f"{hour} o'clock",
                OCoT((oid,), QAType.EGO_DIRECTION_POST.type_tag),
            )
        )

    unique_unchanged = [
        oid for oid in groups["unchanged"]
        if (o := curr.get(oid)) is not None
        and o.label not in _SKIP_LABELS
        and counts[o.label] == 1
    ]
    for oid in rng.sample(unique_unchanged, min(2, len(unique_unchanged))):
        obj = curr.get(oid)
        hour, dist = egocentric_position(observer, obj)
        items.append(
            (
                QAType.EGO_DISTANCE_POST,
                f"How far is the {obj.label} from me?",
                _format_m(dist, geom),
                OCoT((oid,), QAType.EGO_DISTANCE_POST.type_tag),
            )
        )
        items.append(
            (
                QAType.EGO_DIRECTION_POST,
                f"Which direction is the {obj.label} relative to me?",
                f"{hour} o'clock",
                OCoT((oid,), QAType.EGO_DIRECTION_POST.type_tag),
            )
        )

    # Warning: routes to unique-label unchanged targets
    asked_clear = False
    for target, obstacles in _warning_routes(pair, situation, geom):
        question = f"Are there any changed objects on my familiar route to the {target.label}?"
        if len(obstacles) == 1:
            blocker = curr.get(obstacles[0])
            items.append(
                (
                    QAType.WARNING,
                    question,
                    f"A {blocker.label}",
                    OCoT((target.id, blocker.id), QAType.WARNING.type_tag, {"target": target.id}),
                )
            )
        elif not obstacles and not asked_clear:
            asked_clear = True
            items.append(
                (
                    QAType.WARNING,
                    question,
                    "No",
                    OCoT((target.id,), QAType.WARNING.type_tag, {"target": target.id}),
                )
            )

    # Allocentric displacement
    for oid in groups["rigid"]:
        obj = curr.get(oid)
        if obj is None or obj.label in _SKIP_LABELS or not _changed_label_unique(pair, oid):
            continue
        old_center = _aligned_prev_center(pair, oid)
        if old_center is None:
            continue
        move = math.dist(old_center, obj.obb.center)
        if round_distance(move, geom) <= 0:
            continue
        items.append(
            (
                QAType.ALLO_DISPLACEMENT,
                f"How far was the changed {obj.label} moved?",
                _format_m(move, geom),
                OCoT((oid,), QAType.ALLO_DISPLACEMENT.type_tag),
            )
        )

    # Allocentric relationship from current support relations
    relations = scan_vertical_relations(curr.objects, geom)
    rel_candidates = []
    for rel in sorted(relations, key=lambda r: (r.subject_id, r.object_id)):
        subject = curr.get(rel.subject_id)
        supporter = curr.get(rel.object_id)
        if subject.label in _SKIP_LABELS:
            continue
        if counts[subject.label] == 1:
            ref = f"the {subject.label}"
        else:
            color = subject.attributes.get("color", ())
            if color and sum(
                1 for o in curr.objects if o.label == subject.label and color[0] in o.attributes.get("color", ())
            ) == 1:
                ref = f"the {color[0]} {subject.label}"
            else:
                continue
        rel_candidates.append((rel, ref, subject, supporter))
    k = min(qa_cfg.max_relationship, len(rel_candidates))
    for rel, ref, subject, supporter in (rng.sample(rel_candidates, k) if k else []):
        items.append(
            (
                QAType.ALLO_RELATIONSHIP,
                f"Where is {ref}?",
                _capfirst(f"{rel.kind.value} the {supporter.label}"),
                OCoT(
                    (subject.id, supporter.id),
                    QAType.ALLO_RELATIONSHIP.type_tag,
                    {"subject": subject.id},
                ),
            )
        )

    # Counting per proximity bucket
    bucket_members: dict[tuple[str, str], list[int]] = {}
    for obj in sorted(curr.objects, key=lambda o: o.id):
        if obj.label in _SKIP_LABELS:
            continue
        hour, _ = egocentric_position(observer, obj)
        bucket = proximity_bucket(hour).value
        bucket_members.setdefault((obj.label, bucket), []).append(obj.id)
    count_candidates = sorted(bucket_members.items())
    k = min(qa_cfg.max_counting, len(count_candidates))
    for (label, bucket), ids in (rng.sample(count_candidates, k) if k else []):
        items.append(
            (
                QAType.COUNTING,
                f"How many {pluralize(label)} are there {_BUCKET_PHRASE[Bucket(bucket)]}?",
                number_word(len(ids)),
                OCoT(tuple(ids), QAType.COUNTING.type_tag, {"label": label, "bucket": bucket}),
            )
        )

    # Existence: removed labels now absent, added labels, plus one absent probe
    prev_counts = _label_counts(pair.prev)
    existence_labels: list[tuple[str, str, tuple[int, ...]]] = []
    for oid in groups["removed"]:
        obj = pair.prev.get(oid)
        if obj is not None and obj.label not in _SKIP_LABELS and counts.get(obj.label, 0) == 0:
            existence_labels.append((obj.label, "No", ()))
    for oid in groups["added"]:
        obj = curr.get(oid)
        if obj is not None and obj.label not in _SKIP_LABELS:
            matching = tuple(o.id for o in curr.objects if o.label == obj.label)
            existence_labels.append((obj.label, "Yes", matching))
    for probe in qa_cfg.absent_probe_labels:
        if counts.get(probe, 0) == 0 and prev_counts.get(probe, 0) == 0:
            existence_labels.append((probe, "No", ()))
            break
    seen_labels: set[str] = set()
    for label, answer, ids in existence_labels:
        if label in seen_labels:
            continue
        seen_labels.add(label)
        items.append(
            (
                QAType.EXISTENCE,
                f"Is there any {label} in the room?",
                answer,
                OCoT(ids, QAType.EXISTENCE.type_tag, {"label": label}),
            )
        )

    # Attribute
    attr_candidates = []
    for obj in sorted(curr.objects, key=lambda o: o.id):
        if obj.label in _SKIP_LABELS or not obj.attributes:
            continue
        if counts[obj.label] == 1:
            ref = f"the {obj.label}"
            banned: tuple[str, ...] = ()
        else:
            color = obj.attributes.get("color", ())
            material = obj.attributes.get("material", ())
            if not color or not material:
                continue
            combo_unique = (
                sum(
                    1
                    for o in curr.objects
                    if o.label == obj.label
                    and color[0] in o.attributes.get("color", ())
                    and material[0] in o.attributes.get("material", ())
                )
                == 1
            )
            if not combo_unique:
                continue
            ref = f"the {color[0]} {material[0]} {obj.label}"
            banned = ("color", "material")
        for facet in ("state", "color", "material", "shape", "size"):
            if facet in banned or not obj.attributes.get(facet):
                continue
            attr_candidates.append((obj, ref, facet))
            break
    k = min(qa_cfg.max_attribute, len(attr_candidates))
    for obj, ref, facet in (rng.sample(attr_candidates, k) if k else []):
        facet_name = "status" if facet == "state" else facet
        items.append(
            (
                QAType.ATTRIBUTE,
                f"What is the {facet_name} of {ref}?",
                _attr_answer(obj.attributes[facet]),
                OCoT((obj.id,), QAType.ATTRIBUTE.type_tag, {"object": obj.id, "facet": facet}),
            )
        )

    # Affordance
    purpose_labels: dict[str, list[str]] = {}
    for label, purpose in qa_cfg.affordances:
        purpose_labels.setdefault(purpose, []).append(label)
    afford_candidates = []
    for purpose in sorted(purpose_labels):
        labels = purpose_labels[purpose]
        matching = [o for o in curr.objects if o.label in labels]
        if matching:
            afford_candidates.append((purpose, matching))
    k = min(2, len(afford_candidates))
    for purpose, matching in (rng.sample(afford_candidates, k) if k else []):
        answer = _affordance_answer(matching)
        items.append(
            (
                QAType.AFFORDANCE,
                f"Is there something to {purpose} in this room?",
                answer,
                OCoT(tuple(sorted(o.id for o in matching)), QAType.AFFORDANCE.type_tag, {"purpose": purpose}),
            )
        )

    out = []
    for idx, (qa_type, question, answer, ocot) in enumerate(items):
        if not qa_type.numeric and len(answer.split()) > 5:
            continue
        out.append(
            QAItem(
                item_id=f"{pair.pair_id}|{situation.situation_id}|{idx:03d}",
                scan_pair_id=pair.pair_id,
                situation_id=situation.situation_id,
                qa_type=qa_type,
                question=question,
                answer=answer,
                ocot=ocot,
            )
        )
    return out


def _affordance_answer(matching: Sequence[ObjectInstance]) -> str:
    by_label: dict[str, int] = {}
    for o in matching:
        by_label[o.label] = by_label.get(o.label, 0) + 1
    label = max(sorted(by_label), key=lambda l: by_label[l])
    n = by_label[label]
    if n == 1:
        return f"A {label}"
    return f"{number_word(n)} {pluralize(label)}"


def verify_qa(
    item: QAItem,
    pair: ScanPair,
    situation: Situation,
    context: ContextRecord | None = None,
    geom: GeometryConfig | None = None,
    qa_cfg: QAConfig | None = None,
) -> Verified | Rejected:
    """Recompute the answer from ground truth via the item's ids and type tag.

    The recomputation path is selected only by (qa_type, ocot); question text
    is never consulted. Numeric answers match within output rounding,
    categorical answers exactly.
    """
    geom = geom or GeometryConfig()
    qa_cfg = qa_cfg or QAConfig()
    if item.ocot.type_tag not in _TAG_TO_TYPE:
        raise ValueError(f"unknown type tag '{item.ocot.type_tag}'")
    if _TAG_TO_TYPE[item.ocot.type_tag] != item.qa_type:
        return Rejected(f"type tag '{item.ocot.type_tag}' does not match qa_type '{item.qa_type.value}'")
    observer = situation.pose
    t = item.qa_type
    ids = item.ocot.object_ids
    params = item.ocot.params

    def numeric_match(expected_raw: float) -> Verified | Rejected:
        parsed = parse_distance_m(item.answer)
        if parsed is None:
            return Rejected("indeterminate: unparseable numeric answer")
        if abs(parsed - round_distance(expected_raw, geom)) < 1e-9:
            return Verified()
        return Rejected(f"mismatch: expected {_format_m(expected_raw, geom)}, answer '{item.answer}'")

    def categorical_match(expected: str) -> Verified | Rejected:
        if item.answer == expected:
            return Verified()
        return Rejected(f"mismatch: expected '{expected}', answer '{item.answer}'")

    if t in (QAType.EGO_DISTANCE_PRE, QAType.EGO_DISTANCE_POST, QAType.EGO_DIRECTION_PRE, QAType.EGO_DIRECTION_POST):
        if len(ids) != 1:
            return Rejected("indeterminate: egocentric item must reference one object")
        oid = ids[0]
        if t in (QAType.EGO_DISTANCE_PRE, QAType.EGO_DIRECTION_PRE):
            center = _aligned_prev_center(pair, oid)
        else:
            obj = pair.curr.get(oid)
            center = None if obj is None else obj.obb.center
        if center is None:
            return Rejected("indeterminate: object not present in the referenced scan")
        hour, dist = egocentric_position(observer, center)
        if t in (QAType.EGO_DISTANCE_PRE, QAType.EGO_DISTANCE_POST):
            return numeric_match(dist)
        return categorical_match(f"{hour} o'clock")

    if t == QAType.ALLO_DISPLACEMENT:
        if len(ids) != 1:
            return Rejected("indeterminate: displacement item must reference one object")
        old_center = _aligned_prev_center(pair, ids[0])
        obj = pair.curr.get(ids[0])
        if old_center is None or obj is None:
            return Rejected("indeterminate: object missing from one of the scans")
        return numeric_match(math.dist(old_center, obj.obb.center))

    if t == QAType.WARNING:
        target_id = params.get("target")
        target = pair.curr.get(target_id) if target_id is not None else None
        if target is None:
            return Rejected("indeterminate: warning target missing")
        obstacles = route_obstacles(observer, target, pair, geom)
        if tuple([target_id] + obstacles) != ids:
            return Rejected("mismatch: recomputed obstacle set differs from provenance")
        if not obstacles:
            return categorical_match("No")
        blocker = pair.curr.get(obstacles[0])
        return categorical_match(f"A {blocker.label}")

    if t == QAType.ALLO_RELATIONSHIP:
        if len(ids) != 2:
            return Rejected("indeterminate: relationship item must reference two objects")
        subject = pair.curr.get(ids[0])
        supporter = pair.curr.get(ids[1])
        if subject is None or supporter is None:
            return Rejected("indeterminate: relation endpoints missing")
        from .geometry import vertical_relation

        rel = vertical_relation(subject, supporter, geom)
        if rel is None:
            return Rejected("indeterminate: no support relation between referenced objects")
        return categorical_match(_capfirst(f"{rel.kind.value} the {supporter.label}"))

    if t == QAType.COUNTING:
        label = params.get("label")
        bucket = params.get("bucket")
        if not label or not bucket:
            return Rejected("indeterminate: counting item lacks label/bucket provenance")
        matching = []
        for obj in pair.curr.objects:
            if obj.label != label:
                continue
            hour, _ = egocentric_position(observer, obj)
            if proximity_bucket(hour).value == bucket:
                matching.append(obj.id)
        if tuple(sorted(matching)) != tuple(sorted(ids)):
            return Rejected("mismatch: recomputed member set differs from provenance")
        return categorical_match(number_word(len(matching)))

    if t == QAType.EXISTENCE:
        label = params.get("label")
        if not label:
            return Rejected("indeterminate: existence item lacks label provenance")
        present = any(o.label == label for o in pair.curr.objects)
        return categorical_match("Yes" if present else "No")

    if t == QAType.ATTRIBUTE:
        oid = params.get("object")
        facet = params.get("facet")
        obj = pair.curr.get(oid) if oid is not None else None
        if obj is None or not facet:
            return Rejected("indeterminate: attribute item lacks object/facet provenance")
        tags = obj.attributes.get(facet, ())
        if not tags:
            return Rejected("indeterminate: referenced facet has no tags")
        return categorical_match(_attr_answer(tags))

    if t == QAType.AFFORDANCE:
        purpose = params.get("purpose")
        if not purpose:
            return Rejected("indeterminate: affordance item lacks purpose provenance")
        labels = [label for label, p in qa_cfg.affordances if p == purpose]
        matching = [o for o in pair.curr.objects if o.label in labels]
        if tuple(sorted(o.id for o in matching)) != tuple(sorted(ids)):
            return Rejected("mismatch: recomputed affordance set differs from provenance")
        if not matching:
            return categorical_match("No")
        return categorical_match(_affordance_answer(matching))

    return Rejected(f"indeterminate: unhandled type {t.value}")


class DownsampleAxis(str, Enum):
    SAMPLE = "sample"
    SITUATION = "situation"
    SCAN_PAIR = "scan_pair"


def downsample_dataset(
    items: Sequence[QAItem],
    axis: DownsampleAxis | str,
    fraction: float,
    seed: int = 0,
) -> list[QAItem]:
    """Randomly keep a fraction of the dataset along one axis.

    sample drops individual items; situation and scan_pair drop whole units
    with all dependent items. Original item order is preserved; fraction=1 is
    the identity.
    """
    axis = DownsampleAxis(axis)
    if not (0.0 < fraction <= 1.0):
        raise ValueError("fraction must be in (0, 1]")
    if fraction == 1.0:
        return list(items)
    rng = random.Random(seed)
    if axis == DownsampleAxis.SAMPLE:
        k = int(len(items) * fraction)
        if k == 0:
            raise ValueError("fraction too small: no items would survive")
        keep_idx = sorted(rng.sample(range(len(items)), k))
        return [items[i] for i in keep_idx]
    if axis == DownsampleAxis.SITUATION:
        keys = sorted({(i.scan_pair_id, i.situation_id) for i in items})
    else:
        keys = sorted({i.scan_pair_id for i in items})
    k = int(len(keys) * fraction)
    if k == 0:
        raise ValueError("fraction too small: no units would survive")
    kept = set(rng.sample(keys, k))
    if axis == DownsampleAxis.SITUATION:
        return [i for i in items if (i.scan_pair_id, i.situation_id) in kept]
    return [i for i in items if i.scan_pair_id in kept]


def _word_stats(texts: Iterable[str]) -> dict:
    lengths = [len(t.split()) for t in texts]
    if not lengths:
        return {"count": 0, "mean": 0.0, "std": 0.0}
    mean = sum(lengths) / len(lengths)
    var = sum((x - mean) ** 2 for x in lengths) / len(lengths)
    return {"count": len(lengths), "mean": round(mean, 2), "std": round(math.sqrt(var), 2)}


def dataset_stats(
    items: Sequence[QAItem],
    description_queries: Sequence[str] = (),
    rearrangement_queries: Sequence[str] = (),
) -> dict:
    """Per-type and grouped shares plus word-length statistics per task."""
    per_type: dict[str, int] = {t.value: 0 for t in QAType}
    for item in items:
        per_type[item.qa_type.value] += 1
    total = len(items)
    shares = {k: (100.0 * v / total if total else 0.0) for k, v in per_type.items()}
    group_counts = {"egocentric": 0, "allocentric": 0, "general": 0}
    for item in items:
        group_counts[item.qa_type.group] += 1
    group_shares = {k: (100.0 * v / total if total else 0.0) for k, v in group_counts.items()}
    return {
        "n_items": total,
        "n_scan_pairs": len({i.scan_pair_id for i in items}),
        "n_situations": len({(i.scan_pair_id, i.situation_id) for i in items}),
        "per_type_counts": per_type,
        "per_type_shares": {k: round(v, 2) for k, v in shares.items()},
        "group_counts": group_counts,
        "group_shares": {k: round(v, 2) for k, v in group_shares.items()},
        "word_lengths": {
            "qa_question": _word_stats(i.question for i in items),
            "qa_answer": _word_stats(i.answer for i in items),
            "description_query": _word_stats(description_queries),
            "rearrangement_query": _word_stats(rearrangement_queries),
        },
    }


def stats_table(stats: dict) -> str:
    """Plain-text rendering of a stats report."""
    lines = []
    lines.append(f"items: {stats['n_items']}   scan pairs: {stats['n_scan_pairs']}   situations: {stats['n_situations']}")
    lines.append("")
    lines.append(f"{'type':22s} {'count':>7s} {'share%':>8s}")
    for name, count in sorted(stats["per_type_counts"].items()):
        lines.append(f"{name:22s} {count:7d} {stats['per_type_shares'][name]:8.2f}")
    lines.append("")
    lines.append(f"{'group':22s} {'count':>7s} {'share%':>8s}")
    for name, count in sorted(stats["group_counts"].items()):
        lines.append(f"{name:22s} {count:7d} {stats['group_shares'][name]:8.2f}")
    lines.append("")
    lines.append(f"{'task':22s} {'count':>7s} {'mean':>7s} {'std':>7s}")
    for name, ws in stats["word_lengths"].items():
        lines.append(f"{name:22s} {ws['count']:7d} {ws['mean']:7.2f} {ws['std']:7.2f}")
    return "\n".join(lines) + "\n"
