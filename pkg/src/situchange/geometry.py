"""Egocentric and allocentric spatial primitives.

Conventions: yaw angles are standard math angles in the floor plane
(counterclockwise from +X); clock hours increase clockwise with 12 straight
ahead; all distances in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .config import GeometryConfig
from .scene.model import Alignment, ChangeKind, ChangeRecord, Obb, ObjectInstance, ScanPair


class GeometryError(Exception):
    pass


@dataclass(frozen=True)
class ObserverPose:
    """Embodied observer: position (z is eye height above the floor), facing yaw, head tilt."""

    position: tuple[float, float, float]
    yaw: float
    eye_height: float
    head_tilt_deg: float = 0.0

    def __post_init__(self):
        if self.eye_height <= 0:
            raise GeometryError("eye_height must be positive")
        if abs(self.head_tilt_deg) > 30.0:
            raise GeometryError("head tilt must stay within ±30 degrees")

    @property
    def standing_point(self) -> tuple[float, float]:
        return (self.position[0], self.position[1])


class VerticalKind(str, Enum):
    STANDING_ON = "standing on"
    LYING_ON = "lying on"
    SUPPORTED_BY = "supported by"
    HANGING_ON = "hanging on"
    ATTACHED_TO = "attached to"


@dataclass(frozen=True)
class VerticalRelation:
    subject_id: int
    object_id: int
    kind: VerticalKind


class Bucket(str, Enum):
    FRONT = "front"
    LEFT = "left"
    RIGHT = "right"
    BACK = "back"


# ---------------------------------------------------------------------------
# Footprint helpers (2D convex polygons, counterclockwise corners)

def obb_footprint(obb: Obb) -> np.ndarray:
    """Four floor-plane corners of the box, shape (4, 2)."""
    cx, cy = obb.center[0], obb.center[1]
    hx, hy = obb.half_extents[0], obb.half_extents[1]
    c, s = math.cos(obb.yaw), math.sin(obb.yaw)
    local = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([cx, cy])


def point_in_footprint(x: float, y: float, corners: np.ndarray, eps: float = 1e-12) -> bool:
    p = np.array([x, y])
    n = len(corners)
    sign = 0.0
    for i in range(n):
        a, b = corners[i], corners[(i + 1) % n]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if abs(cross) <= eps:
            continue
        if sign == 0.0:
            sign = math.copysign(1.0, cross)
        elif math.copysign(1.0, cross) != sign:
            return False
    return True


def points_in_footprint(points: np.ndarray, corners: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Vectorized convex containment test for an (N, 2) array of points."""
    inside = np.ones(len(points), dtype=bool)
    n = len(corners)
    for i in range(n):
        a, b = corners[i], corners[(i + 1) % n]
        cross = (b[0] - a[0]) * (points[:, 1] - a[1]) - (b[1] - a[1]) * (points[:, 0] - a[0])
        inside &= cross >= -eps
    return inside


def point_to_footprint_distance(x: float, y: float, corners: np.ndarray) -> float:
    """Euclidean distance from a point to a convex polygon (0 inside)."""
    if point_in_footprint(x, y, corners):
        return 0.0
    p = np.array([x, y])
    best = math.inf
    n = len(corners)
    for i in range(n):
        a, b = corners[i], corners[(i + 1) % n]
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0 else max(0.0, min(1.0, float((p - a) @ ab) / denom))
        best = min(best, float(np.linalg.norm(p - (a + t * ab))))
    return best


def footprints_intersect(a: np.ndarray, b: np.ndarray, eps: float = 1e-12) -> bool:
    """Separating-axis test for two convex polygons."""
    for poly1, poly2 in ((a, b), (b, a)):
        n = len(poly1)
        for i in range(n):
            edge = poly1[(i + 1) % n] - poly1[i]
            axis = np.array([-edge[1], edge[0]])
            p1 = poly1 @ axis
            p2 = poly2 @ axis
            if p1.max() < p2.min() - eps or p2.max() < p1.min() - eps:
                return False
    return True


def footprint_overlap_area(a: np.ndarray, b: np.ndarray) -> float:
    """Area of intersection of two convex polygons (Sutherland–Hodgman clip)."""
    poly = [tuple(p) for p in a]
    for i in range(len(b)):
        if not poly:
            return 0.0
        cp1, cp2 = b[i], b[(i + 1) % len(b)]
        inp = poly
        poly = []

        def inside(p):
            return (cp2[0] - cp1[0]) * (p[1] - cp1[1]) - (cp2[1] - cp1[1]) * (p[0] - cp1[0]) >= 0

        def intersect(p, q):
            dc = (cp1[0] - cp2[0], cp1[1] - cp2[1])
            dp = (p[0] - q[0], p[1] - q[1])
            n1 = cp1[0] * cp2[1] - cp1[1] * cp2[0]
            n2 = p[0] * q[1] - p[1] * q[0]
            denom = dc[0] * dp[1] - dc[1] * dp[0]
            if denom == 0:
                return q
            return ((n1 * dp[0] - n2 * dc[0]) / denom, (n1 * dp[1] - n2 * dc[1]) / denom)

        s = inp[-1]
        for e in inp:
            if inside(e):
                if not inside(s):
                    poly.append(intersect(s, e))
                poly.append(e)
            elif inside(s):
                poly.append(intersect(s, e))
            s = e
    if len(poly) < 3:
        return 0.0
    area = 0.0
    for i in range(len(poly)):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % len(poly)]
        area += x1 * y2 - x2 * y1
    return abs(area) / 2.0


def footprint_area(corners: np.ndarray) -> float:
    area = 0.0
    n = len(corners)
    for i in range(n):
        x1, y1 = corners[i]
        x2, y2 = corners[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    return abs(area) / 2.0


# ---------------------------------------------------------------------------
# Egocentric primitives

def clock_hour_of_angle(clockwise_rad: float) -> int:
    """Quantize a clockwise bearing to 1..12 (12 = straight ahead, half-up rounding)."""
    cw = clockwise_rad % (2.0 * math.pi)
    hour = int(math.floor(cw / (math.pi / 6.0) + 0.5)) % 12
    return 12 if hour == 0 else hour


def egocentric_position(
    observer: ObserverPose, target: ObjectInstance | Sequence[float]
) -> tuple[int, float]:
    """Clock hour and horizontal distance from the observer's standing point to the target center."""
    if isinstance(target, ObjectInstance):
        tx, ty = target.obb.center[0], target.obb.center[1]
    else:
        tx, ty = target[0], target[1]
    ox, oy = observer.standing_point
    vx, vy = tx - ox, ty - oy
    dist = math.hypot(vx, vy)
    fx, fy = math.cos(observer.yaw), math.sin(observer.yaw)
    # signed angle from facing to target, counterclockwise positive
    signed = math.atan2(fx * vy - fy * vx, fx * vx + fy * vy)
    return clock_hour_of_angle(-signed), dist


_BUCKETS = {
    11: Bucket.FRONT, 12: Bucket.FRONT, 1: Bucket.FRONT,
    8: Bucket.LEFT, 9: Bucket.LEFT, 10: Bucket.LEFT,
    2: Bucket.RIGHT, 3: Bucket.RIGHT, 4: Bucket.RIGHT,
    5: Bucket.BACK, 6: Bucket.BACK, 7: Bucket.BACK,
}


def proximity_bucket(hour: int) -> Bucket:
    """front: 11–1, left: 8–10, right: 2–4, back: 5–7."""
    if hour not in _BUCKETS:
        raise GeometryError(f"clock hour must be 1..12, got {hour}")
    return _BUCKETS[hour]


def round_distance(dist: float, cfg: GeometryConfig | None = None) -> float:
    step = (cfg or GeometryConfig()).distance_round_m
    return round(math.floor(dist / step + 0.5) * step, 6)


def format_location(hour: int, dist: float, cfg: GeometryConfig | None = None) -> str:
    return f"{hour} o'clock, {round_distance(dist, cfg):.1f}m"


# ---------------------------------------------------------------------------
# Allocentric primitives

def vertical_relation(
    a: ObjectInstance, b: ObjectInstance, cfg: GeometryConfig | None = None
) -> Optional[VerticalRelation]:
    """Support relation of a on b, if their boxes are in contact.

    On-top contact requires the bottom of a within the contact gap of b's top
    and sufficient footprint overlap; standing vs lying splits on a's
    height-to-footprint aspect; partial overlap degrades to supported_by.
    Wall/door supporters abut via a vertical face instead; subjects embedded
    in the supporter's footprint read attached, others hanging. Subjects near
    the supporter's base (e.g. furniture pushed against a wall) are excluded.
    """
    cfg = cfg or GeometryConfig()
    if a.id == b.id:
        raise GeometryError("vertical_relation requires distinct objects")
    fa, fb = obb_footprint(a.obb), obb_footprint(b.obb)
    gap = a.obb.bottom - b.obb.top
    if abs(gap) <= cfg.contact_gap_m:
        overlap = footprint_overlap_area(fa, fb)
        frac = overlap / footprint_area(fa)
        if frac >= cfg.overlap_frac:
            aspect = a.obb.half_extents[2] / max(a.obb.half_extents[0], a.obb.half_extents[1])
            kind = VerticalKind.STANDING_ON if aspect >= cfg.lying_aspect else VerticalKind.LYING_ON
            return VerticalRelation(a.id, b.id, kind)
        if frac > 0.0:
            return VerticalRelation(a.id, b.id, VerticalKind.SUPPORTED_BY)
        return None
    if b.label in ("wall", "door"):
        # vertical spans must overlap and a must sit above the supporter's base third
        if a.obb.bottom < b.obb.top and a.obb.top > b.obb.bottom:
            if a.obb.center[2] >= b.obb.bottom + b.obb.height / 3.0:
                dist = _footprint_gap(fa, fb)
                if dist <= cfg.contact_gap_m:
                    cx, cy = a.obb.center[0], a.obb.center[1]
                    if point_in_footprint(cx, cy, fb):
                        return VerticalRelation(a.id, b.id, VerticalKind.ATTACHED_TO)
                    return VerticalRelation(a.id, b.id, VerticalKind.HANGING_ON)
    return None


def _footprint_gap(a: np.ndarray, b: np.ndarray) -> float:
    if footprints_intersect(a, b):
        return 0.0
    best = math.inf
    for p in a:
        best = min(best, point_to_footprint_distance(p[0], p[1], b))
    for p in b:
        best = min(best, point_to_footprint_distance(p[0], p[1], a))
    return best


def scan_vertical_relations(
    objects: Sequence[ObjectInstance], cfg: GeometryConfig | None = None
) -> list[VerticalRelation]:
    """All pairwise support relations in a scan, subject id ascending."""
    out = []
    for a in objects:
        for b in objects:
            if a.id == b.id:
                continue
            rel = vertical_relation(a, b, cfg)
            if rel is not None:
                out.append(rel)
    return out


def dominant_normal(
    obj: ObjectInstance, cfg: GeometryConfig | None = None, min_samples: int = 32
) -> Optional[tuple[np.ndarray, float]]:
    """Largest 10-degree horizontal cluster of sample normals, with its share of all samples.

    Returns None when no horizontal bin reaches the dominance threshold; raises
    when the object carries no (or too few) surface samples.
    """
    cfg = cfg or GeometryConfig()
    if obj.samples is None or len(obj.samples) < min_samples:
        raise GeometryError(f"{obj.key}: dominant_normal needs at least {min_samples} sampled normals")
    normals = obj.samples[:, 3:6]
    total = len(normals)
    vertical_lim = math.sqrt(0.5)
    horizontal = normals[np.abs(normals[:, 2]) < vertical_lim]
    if len(horizontal) == 0:
        return None
    az = np.degrees(np.arctan2(horizontal[:, 1], horizontal[:, 0])) % 360.0
    bins = (az // 10.0).astype(int)
    counts = np.bincount(bins, minlength=36)
    best = int(np.argmax(counts))
    frac = counts[best] / total
    if frac < cfg.dominant_frac:
        return None
    members = horizontal[bins == best]
    mean = members[:, :2].sum(axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0:
        return None
    direction = np.array([mean[0] / norm, mean[1] / norm, 0.0])
    return direction, float(frac)


def displacement(change: ChangeRecord, pair: ScanPair) -> float:
    """Distance between the alignment-mapped previous center and the current center."""
    if change.kind != ChangeKind.RIGID:
        raise GeometryError(f"displacement is defined for rigid changes, not {change.kind.value}")
    prev_obj = pair.prev.get(change.object_id_prev) if change.object_id_prev else None
    curr_obj = pair.curr.get(change.object_id_curr) if change.object_id_curr else None
    if prev_obj is None or curr_obj is None:
        raise GeometryError("rigid change ids must resolve in both scans")
    mapped = pair.alignment.apply(prev_obj.obb.center)
    return float(math.dist(mapped, curr_obj.obb.center))


def route_obstacles(
    observer: ObserverPose,
    target: ObjectInstance,
    pair: ScanPair,
    cfg: GeometryConfig | None = None,
) -> list[int]:
    """Changed (rigid or added) objects blocking the straight corridor to the target.

    The corridor is the observer-to-target floor segment dilated to the
    configured width; hits are ordered by distance from the observer.
    """
    cfg = cfg or GeometryConfig()
    if pair.curr.get(target.id) is None:
        raise GeometryError(f"target {target.key} not present in current scan")
    ox, oy = observer.standing_point
    tx, ty = target.obb.center[0], target.obb.center[1]
    dx, dy = tx - ox, ty - oy
    length = math.hypot(dx, dy)
    if length < 1e-9:
        return []
    ux, uy = dx / length, dy / length
    px, py = -uy * cfg.corridor_width_m / 2.0, ux * cfg.corridor_width_m / 2.0
    corridor = np.array(
        [
            [ox + px, oy + py],
            [tx + px, ty + py],
            [tx - px, ty - py],
            [ox - px, oy - py],
        ]
    )
    changed_ids: set[int] = set()
    for ch in pair.changes:
        if ch.kind in (ChangeKind.RIGID, ChangeKind.ADDED) and ch.object_id_curr is not None:
            changed_ids.add(ch.object_id_curr)
    hits: list[tuple[float, int]] = []
    for oid in changed_ids:
        if oid == target.id:
            continue
        obj = pair.curr.get(oid)
        if obj is None:
            continue
        if footprints_intersect(obb_footprint(obj.obb), corridor):
            d = math.hypot(obj.obb.center[0] - ox, obj.obb.center[1] - oy)
            hits.append((d, oid))
    return [oid for _, oid in sorted(hits)]
