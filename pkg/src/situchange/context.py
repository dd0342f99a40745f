"""Structured change context per situation: egocentric locations old/new,
vertical relations, move distances, return vectors, and route warnings.

Serialized payloads use the exact string shapes consumed by the long-form
generation prompt ("H o'clock, D.Dm" locations, comma-joined relations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .config import GeometryConfig
from .geometry import (
    GeometryError,
    ObserverPose,
    clock_hour_of_angle,
    displacement,
    egocentric_position,
    format_location,
    round_distance,
    route_obstacles,
    scan_vertical_relations,
)
from .scene.model import ChangeKind, ChangeRecord, ObjectInstance, ScanPair, SceneScan
from .situations import Situation

GROUPS = ("removed", "added", "rigid", "non_rigid", "unchanged")

_GROUP_OF_KIND = {
    ChangeKind.REMOVED: "removed",
    ChangeKind.ADDED: "added",
    ChangeKind.RIGID: "rigid",
    ChangeKind.NONRIGID: "non_rigid",
}


def classify_changes(pair: ScanPair) -> dict[str, list[int]]:
    """Partition every object id in either scan into the five change groups."""
    groups: dict[str, list[int]] = {g: [] for g in GROUPS}
    named: set[int] = set()
    for ch in pair.changes:
        group = _GROUP_OF_KIND[ch.kind]
        for oid in (ch.object_id_prev, ch.object_id_curr):
            if oid is not None and oid not in named:
                groups[group].append(oid)
                named.add(oid)
    all_ids = {o.id for o in pair.prev.objects} | {o.id for o in pair.curr.objects}
    groups["unchanged"] = sorted(all_ids - named)
    for g in GROUPS:
        groups[g] = sorted(groups[g])
    return groups


@dataclass
class ContextEntry:
    key: str
    group: str
    attributes: dict[str, tuple[str, ...]] = field(default_factory=dict)
    location: Optional[tuple[int, float]] = None
    location_old: Optional[tuple[int, float]] = None
    allocentric: tuple[str, ...] = ()
    allocentric_old: tuple[str, ...] = ()
    move_distance: Optional[float] = None
    return_vec: Optional[tuple[int, float]] = None
    warning_targets: tuple[str, ...] = ()
    caption: str = ""
    instruction: str = ""


@dataclass
class ContextRecord:
    scan_pair_id: str
    situation_id: str
    brief_text: str
    groups: dict[str, dict[str, ContextEntry]]
    step_m: float = 0.65
    # the return clock frame carries the observer's yaw to the object's position
    notes: tuple[str, ...] = ("return frame: observer yaw at object location",)

    def entry_for(self, object_id: int) -> Optional[ContextEntry]:
        suffix = f"_{object_id}"
        for entries in self.groups.values():
            for key, entry in entries.items():
                if key.endswith(suffix):
                    return entry
        return None

    def to_payload(self, cfg: GeometryConfig | None = None) -> dict:
        cfg = cfg or GeometryConfig()
        payload: dict[str, dict] = {}
        for group in ("removed", "added", "rigid", "non_rigid", "unchanged"):
            entries = self.groups.get(group, {})
            if not entries:
                continue
            rendered: dict[str, dict] = {}
            for key, e in entries.items():
                item: dict = {}
                if e.attributes:
                    flat = []
                    for facet in ("material", "color", "shape", "size", "state"):
                        flat.extend(e.attributes.get(facet, ()))
                    if flat:
                        item["attributes"] = flat
                if e.location is not None:
                    item["location"] = format_location(*e.location, cfg=cfg)
                if e.location_old is not None:
                    item["location_old"] = format_location(*e.location_old, cfg=cfg)
                if e.move_distance is not None:
                    item["move_distance"] = f"{round_distance(e.move_distance, cfg):.1f}m"
                if e.return_vec is not None:
                    item["return"] = format_location(*e.return_vec, cfg=cfg)
                if e.allocentric:
                    item["allocentric"] = ", ".join(e.allocentric)
                if e.allocentric_old:
                    item["allocentric_old"] = ", ".join(e.allocentric_old)
                if e.warning_targets:
                    item["Warning"] = list(e.warning_targets)
                if e.caption:
                    item["Caption"] = e.caption
                if e.instruction:
                    item["Instruction"] = e.instruction
                rendered[key] = item
            payload[group] = rendered
        return payload


def return_vector(
    change: ChangeRecord, situation: Situation, pair: ScanPair
) -> tuple[int, float]:
    """Clock direction and distance restoring a rigid change, in the frame of an
    observer standing at the object's current location with their own yaw."""
    if change.kind != ChangeKind.RIGID:
        raise GeometryError("return_vector is defined for rigid changes only")
    prev_obj = pair.prev.get(change.object_id_prev)
    curr_obj = pair.curr.get(change.object_id_curr)
    if prev_obj is None or curr_obj is None:
        raise GeometryError("rigid change ids must resolve in both scans")
    old = pair.alignment.apply(prev_obj.obb.center)
    vx = old[0] - curr_obj.obb.center[0]
    vy = old[1] - curr_obj.obb.center[1]
    dist = math.hypot(vx, vy)
    if dist < 1e-12:
        return 12, 0.0
    yaw = situation.pose.yaw
    fx, fy = math.cos(yaw), math.sin(yaw)
    signed = math.atan2(fx * vy - fy * vx, fx * vx + fy * vy)
    return clock_hour_of_angle(-signed), dist


def _landmark_targets(scan: SceneScan) -> list[ObjectInstance]:
    counts: dict[str, int] = {}
    for o in scan.objects:
        counts[o.label] = counts.get(o.label, 0) + 1
    return [o for o in scan.objects if counts[o.label] == 1 and o.label != "wall"]


def build_context(
    pair: ScanPair,
    situation: Situation,
    cfg: GeometryConfig | None = None,
    step_m: float = 0.65,
) -> ContextRecord:
    """Assemble the per-object change context for one situation on a pair."""
    cfg = cfg or GeometryConfig()
    observer = situation.pose
    groups_ids = classify_changes(pair)
    rel_curr = _relation_strings(pair.curr, cfg)
    rel_prev = _relation_strings(pair.prev, cfg)

    entries: dict[str, dict[str, ContextEntry]] = {g: {} for g in GROUPS}
    change_by_id: dict[int, ChangeRecord] = {}
    for ch in pair.changes:
        for oid in (ch.object_id_prev, ch.object_id_curr):
            if oid is not None:
                change_by_id[oid] = ch

    for group in GROUPS:
        for oid in groups_ids[group]:
            curr_obj = pair.curr.get(oid)
            prev_obj = pair.prev.get(oid)
            obj = curr_obj or prev_obj
            if obj is None or obj.label == "wall":
                continue
            e = ContextEntry(key=obj.key, group=group, attributes=dict(obj.attributes))
            if curr_obj is not None:
                e.location = egocentric_position(observer, curr_obj)
                e.allocentric = tuple(rel_curr.get(oid, ()))
            if prev_obj is not None and group in ("removed", "rigid"):
                mapped = pair.alignment.apply(prev_obj.obb.center)
                e.location_old = egocentric_position(observer, mapped)
                e.allocentric_old = tuple(rel_prev.get(oid, ()))
            if group == "unchanged" and prev_obj is not None:
                old_rel = tuple(rel_prev.get(oid, ()))
                if old_rel and old_rel != e.allocentric:
                    e.allocentric_old = old_rel
            ch = change_by_id.get(oid)
            if ch is not None:
                if ch.kind == ChangeKind.RIGID:
                    move = displacement(ch, pair)
                    if round_distance(move, cfg) > 0:
                        e.move_distance = move
                        e.return_vec = return_vector(ch, situation, pair)
                if ch.human_fields is not None:
                    e.caption = ch.human_fields.description
                    e.instruction = ch.human_fields.rearrangement
            entries[group][obj.key] = e

    # route warnings: which changed objects block the path to each unique-label
    # unchanged target
    unchanged_ids = set(groups_ids["unchanged"])
    for target in sorted(_landmark_targets(pair.curr), key=lambda o: o.id):
        if target.id not in unchanged_ids:
            continue
        for oid in route_obstacles(observer, target, pair, cfg):
            entry = _find_entry(entries, oid)
            if entry is not None:
                entry.warning_targets = entry.warning_targets + (target.key,)

    return ContextRecord(
        scan_pair_id=pair.pair_id,
        situation_id=situation.situation_id,
        brief_text=situation.brief_text,
        groups=entries,
        step_m=step_m,
    )


def _find_entry(entries: dict[str, dict[str, ContextEntry]], object_id: int) -> Optional[ContextEntry]:
    suffix = f"_{object_id}"
    for group_entries in entries.values():
        for key, entry in group_entries.items():
            if key.endswith(suffix):
                return entry
    return None


def _relation_strings(scan: SceneScan, cfg: GeometryConfig) -> dict[int, list[str]]:
    """Relation sentences indexed by participant id (both subject and supporter)."""
    out: dict[int, list[str]] = {}
    key_of = {o.id: o.key for o in scan.objects}
    for rel in scan_vertical_relations(scan.objects, cfg):
        text = f"{key_of[rel.subject_id]} {rel.kind.value} {key_of[rel.object_id]}"
        out.setdefault(rel.subject_id, []).append(text)
        out.setdefault(rel.object_id, []).append(text)
    return out


def steps_phrase(distance_m: float, step_m: float = 0.65) -> str:
    """Distance rendered in steps (half-step resolution), for rearrangement text."""
    steps = max(0.5, round(distance_m / step_m * 2) / 2)
    if steps == 1:
        return "one step"
    if steps == int(steps):
        return f"{int(steps)} steps"
    return f"{steps} steps"
