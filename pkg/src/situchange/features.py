"""Distinctive features that uniquely identify changed objects, and the
queries rendered from them.

A feature is a predicate (unique color, nearest/farthest to a landmark,
vertical relation to a landmark, or reviewer-authored text) matching exactly
one object within its category. Rendering is deterministic: three surface
paraphrases per feature kind, cycled by a content hash, never containing
instance ids.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .config import GeometryConfig, QueryConfig
from .geometry import scan_vertical_relations
from .scene.model import ChangeKind, ObjectInstance, ScanPair, SceneScan


class FeatureKind(str, Enum):
    LANDMARK_SELF = "landmark_self"
    DISTINCTIVE_COLOR = "distinctive_color"
    EXTREMITY_NEAREST = "extremity_nearest"
    EXTREMITY_FARTHEST = "extremity_farthest"
    VERTICAL_TO_LANDMARK = "vertical_to_landmark"
    MANUAL = "manual"


class Tense(str, Enum):
    PAST = "past"
    PRESENT = "present"


class QueryTask(str, Enum):
    DESCRIPTION = "description"
    REARRANGEMENT = "rearrangement"


@dataclass(frozen=True)
class FeatureCandidate:
    object_id: int
    label: str
    kind: FeatureKind
    text_fragment: str
    tense: Tense
    landmark_id: Optional[int] = None
    landmark_label: Optional[str] = None

    @property
    def feature_key(self) -> str:
        return f"{self.kind.value}:{self.landmark_id if self.landmark_id is not None else '-'}:{self.text_fragment}"


@dataclass(frozen=True)
class NeedsReview:
    object_id: int
    surviving: tuple[FeatureCandidate, ...] = ()


def find_landmarks(scan: SceneScan, cfg: QueryConfig | None = None) -> set[int]:
    """Objects whose label is unique in the scene, minus low-salience labels."""
    cfg = cfg or QueryConfig()
    counts: dict[str, int] = {}
    for o in scan.objects:
        counts[o.label] = counts.get(o.label, 0) + 1
    return {
        o.id
        for o in scan.objects
        if counts[o.label] == 1 and o.label not in cfg.landmark_blacklist
    }


def _center_dist(a: ObjectInstance, b: ObjectInstance) -> float:
    return math.hypot(a.obb.center[0] - b.obb.center[0], a.obb.center[1] - b.obb.center[1])


def candidate_features(
    object_id: int,
    scan: SceneScan,
    landmarks: set[int],
    geom: GeometryConfig | None = None,
    tense: Tense = Tense.PRESENT,
) -> list[FeatureCandidate]:
    """All automatically derivable features whose predicate matches exactly
    this object among same-label instances."""
    geom = geom or GeometryConfig()
    obj = scan.get(object_id)
    if obj is None:
        raise KeyError(f"object {object_id} not in scan {scan.scan_id}")
    same_label = [o for o in scan.objects if o.label == obj.label]
    out: list[FeatureCandidate] = []

    if object_id in landmarks:
        out.append(
            FeatureCandidate(object_id, obj.label, FeatureKind.LANDMARK_SELF, obj.label, tense)
        )

    for color in obj.attributes.get("color", ()):
        if all(color not in o.attributes.get("color", ()) for o in same_label if o.id != object_id):
            out.append(
                FeatureCandidate(object_id, obj.label, FeatureKind.DISTINCTIVE_COLOR, color, tense)
            )
            break

    relations = scan_vertical_relations(scan.objects, geom)
    landmark_objs = sorted((scan.get(lid) for lid in landmarks), key=lambda o: o.id)
    for rel in sorted(relations, key=lambda r: (r.subject_id, r.object_id)):
        if rel.subject_id == object_id and rel.object_id in landmarks and rel.object_id != object_id:
            if _unique_relation(relations, same_label, subject_role=True, kind=rel.kind, other=rel.object_id, object_id=object_id):
                other = scan.get(rel.object_id)
                out.append(
                    FeatureCandidate(
                        object_id, obj.label, FeatureKind.VERTICAL_TO_LANDMARK,
                        f"{rel.kind.value} the {other.label}", tense,
                        landmark_id=other.id, landmark_label=other.label,
                    )
                )
        elif rel.object_id == object_id and rel.subject_id in landmarks and rel.subject_id != object_id:
            if _unique_relation(relations, same_label, subject_role=False, kind=rel.kind, other=rel.subject_id, object_id=object_id):
                other = scan.get(rel.subject_id)
                out.append(
                    FeatureCandidate(
                        object_id, obj.label, FeatureKind.VERTICAL_TO_LANDMARK,
                        f"with the {other.label} on it", tense,
                        landmark_id=other.id, landmark_label=other.label,
                    )
                )

    if len(same_label) >= 2:
        for lm in landmark_objs:
            if lm.id == object_id or lm.label == obj.label:
                continue
            dists = sorted((_center_dist(o, lm), o.id) for o in same_label)
            if dists[0][1] == object_id and dists[0][0] < dists[1][0] - 1e-9:
                out.append(
                    FeatureCandidate(
                        object_id, obj.label, FeatureKind.EXTREMITY_NEAREST,
                        f"nearest to the {lm.label}", tense,
                        landmark_id=lm.id, landmark_label=lm.label,
                    )
                )
            if dists[-1][1] == object_id and dists[-1][0] > dists[-2][0] + 1e-9:
                out.append(
                    FeatureCandidate(
                        object_id, obj.label, FeatureKind.EXTREMITY_FARTHEST,
                        f"farthest from the {lm.label}", tense,
                        landmark_id=lm.id, landmark_label=lm.label,
                    )
                )
    return out


def _unique_relation(relations, same_label, subject_role: bool, kind, other: int, object_id: int) -> bool:
    matched = set()
    for rel in relations:
        if rel.kind != kind:
            continue
        if subject_role and rel.object_id == other:
            matched.add(rel.subject_id)
        elif not subject_role and rel.subject_id == other:
            matched.add(rel.object_id)
    same_ids = {o.id for o in same_label}
    return matched & same_ids == {object_id}


_PRIORITY: tuple[tuple[FeatureKind, ...], ...] = (
    (FeatureKind.LANDMARK_SELF,),
    (FeatureKind.DISTINCTIVE_COLOR,),
    (FeatureKind.VERTICAL_TO_LANDMARK,),
    (FeatureKind.EXTREMITY_NEAREST, FeatureKind.EXTREMITY_FARTHEST),
)


def resolve_feature(
    object_id: int,
    candidates: Sequence[FeatureCandidate],
    review=None,
    label: str | None = None,
) -> FeatureCandidate | NeedsReview:
    """Pick the single feature for an object.

    A human-resolved review wins outright (manual text or an accepted
    candidate). Otherwise rejected candidates are dropped and the highest
    priority class (landmark > color > vertical > extremity) is taken; the
    object needs review unless that class holds exactly one survivor.
    `label` names the object when the candidate list is empty (manual-only).
    """
    if review is not None and getattr(review, "manual_text", None):
        if candidates:
            label = candidates[0].label
        return FeatureCandidate(
            object_id, label or "object", FeatureKind.MANUAL, review.manual_text, Tense.PRESENT
        )
    rejected = set(getattr(review, "rejected_keys", ()) or ())
    accepted = getattr(review, "accepted_key", None)
    if accepted:
        for cand in candidates:
            if cand.feature_key == accepted and cand.feature_key not in rejected:
                return cand
    survivors = [c for c in candidates if c.feature_key not in rejected]
    for klass in _PRIORITY:
        in_class = [c for c in survivors if c.kind in klass]
        if in_class:
            if len(in_class) == 1:
                return in_class[0]
            return NeedsReview(object_id, tuple(survivors))
    return NeedsReview(object_id, tuple(survivors))


# Paraphrase tables. Order within each list is part of the rendering contract:
# the content hash picks the index, so reordering changes emitted datasets.
_DESCRIPTION_TEMPLATES: dict[FeatureKind, tuple[str, str, str]] = {
    FeatureKind.LANDMARK_SELF: (
        "What changes have occurred to {ref}?",
        "What change happened to {ref}?",
        "How has {ref} changed?",
    ),
    FeatureKind.EXTREMITY_NEAREST: (
        "What alterations occurred to {ref}?",
        "What changes have been made to {ref}?",
        "How has {ref} been altered?",
    ),
    FeatureKind.EXTREMITY_FARTHEST: (
        "What alterations occurred to {ref}?",
        "What changes have been made to {ref}?",
        "How has {ref} been altered?",
    ),
}
_DESCRIPTION_DEFAULT = (
    "What changes have been made to {ref}?",
    "How has {ref} been altered?",
    "Could you describe what modifications were applied to {ref}?",
)
_REARRANGEMENT_TEMPLATES = (
    "How should I move {ref} back to its original position?",
    "What steps are needed to return {ref} to its previous position?",
    "How can I restore {ref} to where it was?",
)


def _ref_phrase(feature: FeatureCandidate, tense: Tense, n_same_label: int) -> str:
    label = feature.label
    if feature.kind == FeatureKind.LANDMARK_SELF:
        return f"the {label}"
    if feature.kind == FeatureKind.DISTINCTIVE_COLOR:
        return f"the {feature.text_fragment} {label}"
    if feature.kind == FeatureKind.MANUAL:
        return f"the {label} {feature.text_fragment}"
    if feature.kind in (FeatureKind.EXTREMITY_NEAREST, FeatureKind.EXTREMITY_FARTHEST):
        if feature.kind == FeatureKind.EXTREMITY_NEAREST:
            degree = "nearer" if n_same_label == 2 else "nearest"
            prep = "to"
        else:
            degree = "farther" if n_same_label == 2 else "farthest"
            prep = "from"
        verb = "stood" if tense == Tense.PAST else "is"
        return f"the {label} that {verb} {degree} {prep} the {feature.landmark_label}"
    # vertical relation
    if feature.text_fragment.startswith("with the"):
        if tense == Tense.PAST:
            return f"the {label} that had the {feature.landmark_label} on it"
        return f"the {label} {feature.text_fragment}"
    verb = "was" if tense == Tense.PAST else "is"
    return f"the {label} that {verb} {feature.text_fragment}"


def render_query(
    object_id: int,
    feature: FeatureCandidate,
    tense: Tense,
    task: QueryTask,
    n_same_label: int = 1,
    variant: int | None = None,
) -> str:
    """Template-rendered query; paraphrase chosen by a stable content hash."""
    ref = _ref_phrase(feature, tense, n_same_label)
    if task == QueryTask.DESCRIPTION:
        templates = _DESCRIPTION_TEMPLATES.get(feature.kind, _DESCRIPTION_DEFAULT)
    else:
        templates = _REARRANGEMENT_TEMPLATES
    if variant is None:
        variant = zlib.crc32(f"{feature.label}|{feature.kind.value}|{task.value}".encode()) % 3
    query = templates[variant % 3].format(ref=ref)
    return query[0].upper() + query[1:]


@dataclass(frozen=True)
class QueryRow:
    scan_pair_id: str
    object_id: int
    feature_kind: str
    tense: str
    task: str
    query: str


@dataclass
class ReviewTask:
    task_id: str
    scan_pair_id: str
    object_id: int
    key: str
    label: str
    tense: Tense
    n_same_label: int
    candidates: list[FeatureCandidate]
    status: str  # auto_resolved | pending | human_resolved


def resolve_pair_queries(
    pair: ScanPair,
    review_lookup=None,
    query_cfg: QueryConfig | None = None,
    geom: GeometryConfig | None = None,
) -> tuple[list[QueryRow], list[ReviewTask]]:
    """Queries plus review tasks for every changed object of a pair.

    Features come from the current scan when the object still exists there
    (present tense) and from the previous scan otherwise (past tense).
    Rearrangement queries are emitted for rigid changes only.
    """
    query_cfg = query_cfg or QueryConfig()
    geom = geom or GeometryConfig()
    rows: list[QueryRow] = []
    tasks: list[ReviewTask] = []
    landmark_cache: dict[str, set[int]] = {}

    changed: list[tuple[int, ChangeKind]] = []
    seen: set[int] = set()
    for ch in pair.changes:
        oid = ch.object_id_curr if ch.object_id_curr is not None else ch.object_id_prev
        if oid is not None and oid not in seen:
            changed.append((oid, ch.kind))
            seen.add(oid)

    for oid, kind in sorted(changed):
        in_curr = pair.curr.get(oid) is not None
        scan = pair.curr if in_curr else pair.prev
        tense = Tense.PRESENT if in_curr else Tense.PAST
        if scan.scan_id not in landmark_cache:
            landmark_cache[scan.scan_id] = find_landmarks(scan, query_cfg)
        landmarks = landmark_cache[scan.scan_id]
        obj = scan.get(oid)
        candidates = candidate_features(oid, scan, landmarks, geom, tense)
        task_id = f"{pair.pair_id}:{obj.key}"
        review = review_lookup(task_id) if review_lookup is not None else None
        resolved = resolve_feature(oid, candidates, review, label=obj.label)
        n_same = sum(1 for o in scan.objects if o.label == obj.label)
        if isinstance(resolved, NeedsReview):
            status = "pending"
        elif resolved.kind == FeatureKind.MANUAL or (
            review is not None and getattr(review, "accepted_key", None)
        ):
            status = "human_resolved"
        else:
            status = "auto_resolved"
        tasks.append(
            ReviewTask(
                task_id=task_id,
                scan_pair_id=pair.pair_id,
                object_id=oid,
                key=obj.key,
                label=obj.label,
                tense=tense,
                n_same_label=n_same,
                candidates=candidates,
                status=status,
            )
        )
        if isinstance(resolved, NeedsReview):
            continue
        query_tasks = [QueryTask.DESCRIPTION]
        if kind == ChangeKind.RIGID:
            query_tasks.append(QueryTask.REARRANGEMENT)
        for qt in query_tasks:
            rows.append(
                QueryRow(
                    scan_pair_id=pair.pair_id,
                    object_id=oid,
                    feature_kind=resolved.kind.value,
                    tense=tense.value,
                    task=qt.value,
                    query=render_query(oid, resolved, tense, qt, n_same),
                )
            )
    return rows, tasks
