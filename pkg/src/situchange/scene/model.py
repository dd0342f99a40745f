"""Scene data model: objects, scans, change records, and pair-level validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional

import numpy as np

ATTRIBUTE_FACETS = ("color", "material", "shape", "size", "state")

UNIT_NORMAL_TOL = 1e-6
ALIGNMENT_TOL = 1e-6


class SceneError(Exception):
    """Base error for scene construction and IO."""


class ParseError(SceneError):
    def __init__(self, message: str, byte_offset: int | None = None):
        self.byte_offset = byte_offset
        if byte_offset is not None:
            message = f"parse error at byte {byte_offset}: {message}"
        super().__init__(message)


class ValidationError(SceneError):
    def __init__(self, findings: list["Finding"]):
        self.findings = findings
        super().__init__("; ".join(f"{f.code}: {f.message}" for f in findings))


@dataclass(frozen=True)
class Obb:
    """Gravity-aligned oriented box: center, half extents (meters), yaw about +Z (radians)."""

    center: tuple[float, float, float]
    half_extents: tuple[float, float, float]
    yaw: float = 0.0

    @property
    def bottom(self) -> float:
        return self.center[2] - self.half_extents[2]

    @property
    def top(self) -> float:
        return self.center[2] + self.half_extents[2]

    @property
    def height(self) -> float:
        return 2.0 * self.half_extents[2]


@dataclass(frozen=True)
class ObjectInstance:
    id: int
    label: str
    obb: Obb
    # facet -> tags; facets restricted to ATTRIBUTE_FACETS
    attributes: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    # (K, 6) array of surface points with unit normals, or None
    samples: Optional[np.ndarray] = None

    @property
    def key(self) -> str:
        return f"{self.label}_{self.id}"

    def flat_attributes(self) -> list[str]:
        out: list[str] = []
        for facet in ("material", "color", "shape", "size", "state"):
            out.extend(self.attributes.get(facet, ()))
        return out


@dataclass(frozen=True)
class StandableGrid:
    """Occupancy grid of walkable floor; cells[r, c] True means standable."""

    origin: tuple[float, float]
    cell_size: float
    cells: np.ndarray  # bool (rows, cols)

    def cell_center(self, r: int, c: int) -> tuple[float, float]:
        return (
            self.origin[0] + (c + 0.5) * self.cell_size,
            self.origin[1] + (r + 0.5) * self.cell_size,
        )

    def standable_at(self, x: float, y: float) -> bool:
        c = int(math.floor((x - self.origin[0]) / self.cell_size))
        r = int(math.floor((y - self.origin[1]) / self.cell_size))
        if r < 0 or c < 0 or r >= self.cells.shape[0] or c >= self.cells.shape[1]:
            return False
        return bool(self.cells[r, c])

    def standable_points(self) -> list[tuple[float, float]]:
        rows, cols = np.nonzero(self.cells)
        return [self.cell_center(int(r), int(c)) for r, c in zip(rows, cols)]


@dataclass(frozen=True)
class SceneScan:
    scan_id: str
    objects: tuple[ObjectInstance, ...]
    floor_height: float = 0.0
    standable: Optional[StandableGrid] = None

    @property
    def walls(self) -> tuple[int, ...]:
        return tuple(o.id for o in self.objects if o.label == "wall")

    def get(self, object_id: int) -> Optional[ObjectInstance]:
        return self._index().get(object_id)

    def _index(self) -> dict[int, ObjectInstance]:
        idx = getattr(self, "_idx_cache", None)
        if idx is None:
            idx = {o.id: o for o in self.objects}
            object.__setattr__(self, "_idx_cache", idx)
        return idx


class ChangeKind(str, Enum):
    RIGID = "rigid"
    REMOVED = "removed"
    ADDED = "added"
    NONRIGID = "nonrigid"


@dataclass(frozen=True)
class RigidMotion:
    """Motion in the aligned (current) frame: rotation about the object center, then translation."""

    yaw: float
    translation: tuple[float, float, float]


@dataclass(frozen=True)
class HumanFields:
    reason: str = ""
    warning: str = ""
    description: str = ""
    rearrangement: str = ""


@dataclass(frozen=True)
class ChangeRecord:
    kind: ChangeKind
    object_id_prev: Optional[int] = None
    object_id_curr: Optional[int] = None
    rigid_transform: Optional[RigidMotion] = None
    human_fields: Optional[HumanFields] = None


@dataclass(frozen=True)
class Alignment:
    """Rigid transform mapping previous-scan coordinates into current-scan coordinates."""

    yaw: float = 0.0
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def apply(self, point: Iterable[float]) -> tuple[float, float, float]:
        x, y, z = point
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        tx, ty, tz = self.translation
        return (c * x - s * y + tx, s * x + c * y + ty, z + tz)


@dataclass(frozen=True)
class ScanPair:
    pair_id: str
    prev: SceneScan
    curr: SceneScan
    alignment: Alignment = field(default_factory=Alignment)
    changes: tuple[ChangeRecord, ...] = ()

    def change_for(self, object_id: int) -> Optional[ChangeRecord]:
        for ch in self.changes:
            if object_id in (ch.object_id_prev, ch.object_id_curr):
                return ch
        return None


@dataclass(frozen=True)
class Finding:
    code: str
    message: str
    object_id: Optional[int] = None


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def ok(self) -> bool:
        return not self.findings


def _floor_standing(obj: ObjectInstance, floor_height: float) -> bool:
    return obj.obb.bottom <= floor_height + 0.1


def _validate_scan(scan: SceneScan, findings: list[Finding]) -> None:
    seen: set[int] = set()
    for obj in scan.objects:
        if obj.id <= 0:
            findings.append(Finding("BAD_ID", f"object id {obj.id} not positive", obj.id))
        if obj.id in seen:
            findings.append(Finding("DUP_ID", f"duplicate object id {obj.id} in {scan.scan_id}", obj.id))
        seen.add(obj.id)
        if any(h <= 0 for h in obj.obb.half_extents):
            findings.append(
                Finding("BAD_HALF_EXTENT", f"{obj.key} half_extents must be strictly positive", obj.id)
            )
        for facet in obj.attributes:
            if facet not in ATTRIBUTE_FACETS:
                findings.append(Finding("BAD_FACET", f"{obj.key} unknown attribute facet '{facet}'", obj.id))
        if obj.samples is not None:
            if obj.samples.ndim != 2 or obj.samples.shape[1] != 6:
                findings.append(Finding("BAD_SAMPLES", f"{obj.key} samples must be (K, 6)", obj.id))
            else:
                norms = np.linalg.norm(obj.samples[:, 3:6], axis=1)
                if np.any(np.abs(norms - 1.0) > UNIT_NORMAL_TOL):
                    findings.append(Finding("BAD_NORMAL", f"{obj.key} sample normals not unit length", obj.id))
    if scan.standable is not None:
        from ..geometry import obb_footprint, points_in_footprint

        points = np.asarray(scan.standable.standable_points())
        if len(points):
            for obj in scan.objects:
                if not _floor_standing(obj, scan.floor_height):
                    continue
                hit = points_in_footprint(points, obb_footprint(obj.obb))
                if hit.any():
                    x, y = points[int(np.argmax(hit))]
                    findings.append(
                        Finding(
                            "STANDABLE_OVERLAP",
                            f"standable cell ({x:.2f}, {y:.2f}) inside footprint of {obj.key}",
                            obj.id,
                        )
                    )
                    break


def validate_pair(pair: ScanPair) -> ValidationReport:
    """Check every type invariant; findings are data, nothing raises, input untouched."""
    findings: list[Finding] = []
    _validate_scan(pair.prev, findings)
    _validate_scan(pair.curr, findings)
    prev_ids = {o.id for o in pair.prev.objects}
    curr_ids = {o.id for o in pair.curr.objects}
    for ch in pair.changes:
        kind = ch.kind
        if kind == ChangeKind.REMOVED:
            if ch.object_id_curr is not None:
                findings.append(Finding("EXTRA_ID", "removed change must not carry a current id"))
            if ch.object_id_prev is None:
                findings.append(Finding("MISSING_ID", "removed change missing previous id"))
        elif kind == ChangeKind.ADDED:
            if ch.object_id_prev is not None:
                findings.append(Finding("EXTRA_ID", "added change must not carry a previous id"))
            if ch.object_id_curr is None:
                findings.append(Finding("MISSING_ID", "added change missing current id"))
        else:
            if ch.object_id_prev is None or ch.object_id_curr is None:
                findings.append(Finding("MISSING_ID", f"{kind.value} change requires both ids"))
            if kind == ChangeKind.RIGID and ch.rigid_transform is None:
                findings.append(Finding("MISSING_TRANSFORM", "rigid change missing transform", ch.object_id_curr))
        if ch.object_id_prev is not None and ch.object_id_prev not in prev_ids:
            findings.append(Finding("DANGLING_CHANGE", f"change references absent prev id {ch.object_id_prev}", ch.object_id_prev))
        if ch.object_id_curr is not None and ch.object_id_curr not in curr_ids:
            findings.append(Finding("DANGLING_CHANGE", f"change references absent curr id {ch.object_id_curr}", ch.object_id_curr))
    return ValidationReport(tuple(findings))
