"""Sampling of embodied situations: sitting, standing, and interacting.

Sitting uses seat-group rules (seat point, backrest-derived facing, frontal
clearance for large seats); interacting stands a person 0.3–0.5 m off the
anchor's dominant-normal face, facing it; standing picks a walkable point and
anchors to the nearest object. All sampling is deterministic per seed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .config import GeometryConfig, SamplerConfig
from .geometry import (
    Bucket,
    GeometryError,
    ObserverPose,
    dominant_normal,
    egocentric_position,
    obb_footprint,
    point_to_footprint_distance,
    proximity_bucket,
)
from .scene.model import ObjectInstance, SceneScan


class SamplerError(Exception):
    pass


class NoEligibleAnchor(SamplerError):
    pass


class NoStandableFloor(SamplerError):
    pass


class ClearanceUnsatisfiable(SamplerError):
    pass


class SituationCategory(str, Enum):
    SITTING = "sitting"
    STANDING = "standing"
    INTERACTING = "interacting"


@dataclass(frozen=True)
class Situation:
    situation_id: str
    category: SituationCategory
    anchor_id: int
    pose: ObserverPose
    brief_text: str
    descriptive_text: Optional[str] = None
    reference_ids: tuple[int, ...] = ()


def sample_eye_pose(category: SituationCategory | str, rng_seed: int) -> tuple[float, float]:
    """Eye height (cm) and head tilt (degrees) for a situation category."""
    rng = random.Random(rng_seed)
    return _draw_eye_pose(SituationCategory(category), rng)


def _draw_eye_pose(category: SituationCategory, rng: random.Random) -> tuple[float, float]:
    if category == SituationCategory.SITTING:
        height_cm = rng.uniform(71.5, 81.5)
    else:
        height_cm = rng.uniform(147.0, 167.0)
    tilt = rng.uniform(-30.0, 30.0)
    return height_cm, tilt


def _room_centroid(scan: SceneScan) -> tuple[float, float]:
    pts = [o.obb.center[:2] for o in scan.objects if o.label != "wall"]
    if not pts:
        pts = [o.obb.center[:2] for o in scan.objects]
    if not pts:
        return (0.0, 0.0)
    return (sum(p[0] for p in pts) / len(pts), sum(p[1] for p in pts) / len(pts))


def _seat_group(label: str, cfg: SamplerConfig) -> Optional[tuple[bool, bool]]:
    """(is_large, has_backrest) for seat labels, None for non-seats."""
    if label in cfg.seats_large_with_back:
        return True, True
    if label in cfg.seats_small_with_back:
        return False, True
    if label in cfg.seats_large_no_back:
        return True, False
    if label in cfg.seats_small_no_back:
        return False, False
    return None


def _backrest_facing(
    seat: ObjectInstance, scan: SceneScan, cfg: SamplerConfig
) -> Optional[tuple[float, float]]:
    """Unit facing direction implied by a backrest (surface normals, else a wall
    within reach); None when the seat has neither."""
    if seat.samples is not None:
        normals = seat.samples[:, 3:6]
        zs = seat.samples[:, 2]
        horizontal = normals[(np.abs(normals[:, 2]) < math.sqrt(0.5)) & (zs > seat.obb.center[2])]
        if len(horizontal) >= 4:
            mean = horizontal[:, :2].sum(axis=0)
            norm = np.linalg.norm(mean)
            if norm > 0:
                return (float(mean[0] / norm), float(mean[1] / norm))
    fp = obb_footprint(seat.obb)
    cx, cy = seat.obb.center[0], seat.obb.center[1]
    best = None
    for obj in scan.objects:
        if obj.label != "wall":
            continue
        wall_fp = obb_footprint(obj.obb)
        gap = min(point_to_footprint_distance(p[0], p[1], wall_fp) for p in fp)
        if gap <= cfg.backrest_wall_dist_m and (best is None or gap < best[0]):
            wx, wy = obj.obb.center[0], obj.obb.center[1]
            away = (cx - wx, cy - wy)
            norm = math.hypot(*away)
            if norm > 0:
                best = (gap, (away[0] / norm, away[1] / norm))
    return best[1] if best else None


def _ray_exit_distance(origin: tuple[float, float], direction: tuple[float, float], corners: np.ndarray) -> float:
    """Distance from an interior origin to where the ray leaves a convex polygon."""
    ox, oy = origin
    dx, dy = direction
    t_exit = 0.0
    n = len(corners)
    for i in range(n):
        a, b = corners[i], corners[(i + 1) % n]
        ex, ey = b[0] - a[0], b[1] - a[1]
        denom = dx * ey - dy * ex
        if abs(denom) < 1e-12:
            continue
        t = ((a[0] - ox) * ey - (a[1] - oy) * ex) / denom
        u = ((a[0] - ox) * dy - (a[1] - oy) * dx) / denom
        if t > 0 and -1e-9 <= u <= 1 + 1e-9:
            t_exit = max(t_exit, t)
    return t_exit


def _clearance_free(
    point: tuple[float, float],
    facing: tuple[float, float],
    seat: ObjectInstance,
    scan: SceneScan,
    min_clear: float,
) -> bool:
    fp = obb_footprint(seat.obb)
    exit_t = _ray_exit_distance(point, facing, fp)
    probes = [exit_t + min_clear * f for f in (0.2, 0.5, 1.0)]
    others = [obb_footprint(o.obb) for o in scan.objects if o.id != seat.id and o.obb.bottom <= scan.floor_height + 1.2]
    for t in probes:
        px, py = point[0] + facing[0] * t, point[1] + facing[1] * t
        for other in others:
            if point_to_footprint_distance(px, py, other) == 0.0:
                return False
    return True


def _pose(x: float, y: float, yaw: float, eye_cm: float, tilt: float, floor: float) -> ObserverPose:
    eye_m = eye_cm / 100.0
    return ObserverPose(position=(x, y, floor + eye_m), yaw=yaw, eye_height=eye_m, head_tilt_deg=tilt)


def sample_situation(
    scan: SceneScan,
    category: SituationCategory | str,
    rng_seed: int,
    cfg: SamplerConfig | None = None,
    geom: GeometryConfig | None = None,
    exclude_anchor_ids: frozenset[int] = frozenset(),
    situation_id: str = "",
) -> Situation:
    """Sample one situation of the given category; deterministic for fixed inputs."""
    cfg = cfg or SamplerConfig()
    geom = geom or GeometryConfig()
    category = SituationCategory(category)
    rng = random.Random(rng_seed)
    eye_cm, tilt = _draw_eye_pose(category, rng)

    if category == SituationCategory.SITTING:
        return _sample_sitting(scan, rng, eye_cm, tilt, cfg, exclude_anchor_ids, situation_id)
    if category == SituationCategory.INTERACTING:
        return _sample_interacting(scan, rng, eye_cm, tilt, cfg, geom, exclude_anchor_ids, situation_id)
    return _sample_standing(scan, rng, eye_cm, tilt, cfg, geom, exclude_anchor_ids, situation_id)


def _sample_sitting(scan, rng, eye_cm, tilt, cfg, exclude, situation_id) -> Situation:
    seats = [
        o for o in scan.objects
        if _seat_group(o.label, cfg) is not None and o.id not in exclude
    ]
    if not seats:
        raise NoEligibleAnchor("no seat-labeled object available for sitting")
    seat = rng.choice(sorted(seats, key=lambda o: o.id))
    is_large, _has_back = _seat_group(seat.label, cfg)
    facing = _backrest_facing(seat, scan, cfg)
    if facing is None:
        cx, cy = _room_centroid(scan)
        v = (cx - seat.obb.center[0], cy - seat.obb.center[1])
        norm = math.hypot(*v)
        facing = (v[0] / norm, v[1] / norm) if norm > 1e-9 else (1.0, 0.0)
        point = (seat.obb.center[0], seat.obb.center[1])
    elif not is_large:
        point = (seat.obb.center[0], seat.obb.center[1])
    else:
        fp = obb_footprint(seat.obb)
        reach = _ray_exit_distance((seat.obb.center[0], seat.obb.center[1]), facing, fp)
        point = None
        for _ in range(64):
            u = rng.uniform(0.0, 0.5) * reach
            cand = (seat.obb.center[0] + facing[0] * u, seat.obb.center[1] + facing[1] * u)
            if _clearance_free(cand, facing, seat, scan, cfg.seat_clearance_min_m):
                point = cand
                break
        if point is None:
            raise ClearanceUnsatisfiable(f"no seat point on {seat.key} with open space in front")
    yaw = math.atan2(facing[1], facing[0])
    pose = _pose(point[0], point[1], yaw, eye_cm, tilt, scan.floor_height)
    return Situation(
        situation_id=situation_id,
        category=SituationCategory.SITTING,
        anchor_id=seat.id,
        pose=pose,
        brief_text=f"sitting on {seat.key}",
    )


def _sample_interacting(scan, rng, eye_cm, tilt, cfg, geom, exclude, situation_id) -> Situation:
    if scan.standable is None or not scan.standable.cells.any():
        raise NoStandableFloor("interacting requires a standable-floor grid")
    eligible = []
    for o in sorted(scan.objects, key=lambda o: o.id):
        if o.label == "wall" or o.id in exclude or o.samples is None or len(o.samples) < 32:
            continue
        dom = dominant_normal(o, geom)
        if dom is not None:
            eligible.append((o, dom[0]))
    if not eligible:
        raise NoEligibleAnchor("no object with a dominant horizontal normal")
    obj, dom = rng.choice(eligible)
    fp = obb_footprint(obj.obb)
    cx, cy = obj.obb.center[0], obj.obb.center[1]
    max_angle = math.radians(cfg.interact_angle_deg)
    for _ in range(200):
        phi = rng.uniform(-max_angle, max_angle)
        c, s = math.cos(phi), math.sin(phi)
        dirx, diry = c * dom[0] - s * dom[1], s * dom[0] + c * dom[1]
        u = rng.uniform(cfg.interact_dist_min_m, cfg.interact_dist_max_m)
        exit_t = _ray_exit_distance((cx, cy), (dirx, diry), fp)
        px, py = cx + dirx * (exit_t + u), cy + diry * (exit_t + u)
        if not scan.standable.standable_at(px, py):
            continue
        dist = point_to_footprint_distance(px, py, fp)
        if not (cfg.interact_dist_min_m <= dist <= cfg.interact_dist_max_m):
            continue
        yaw = math.atan2(cy - py, cx - px)
        pose = _pose(px, py, yaw, eye_cm, tilt, scan.floor_height)
        return Situation(
            situation_id=situation_id,
            category=SituationCategory.INTERACTING,
            anchor_id=obj.id,
            pose=pose,
            brief_text=f"interacting with {obj.key}",
        )
    raise ClearanceUnsatisfiable(f"no standable point 0.3-0.5 m off {obj.key}")


def _sample_standing(scan, rng, eye_cm, tilt, cfg, geom, exclude, situation_id) -> Situation:
    if scan.standable is None or not scan.standable.cells.any():
        raise NoStandableFloor("standing requires a standable-floor grid")
    points = scan.standable.standable_points()
    candidates = [o for o in scan.objects if o.label != "wall"]
    if not candidates:
        raise NoEligibleAnchor("scene has no anchorable object")
    for _ in range(200):
        px, py = rng.choice(points)
        jitter = scan.standable.cell_size * 0.3
        px += rng.uniform(-jitter, jitter)
        py += rng.uniform(-jitter, jitter)
        anchor = min(
            candidates,
            key=lambda o: (point_to_footprint_distance(px, py, obb_footprint(o.obb)), o.id),
        )
        if anchor.id in exclude:
            continue
        yaw = rng.uniform(-math.pi, math.pi)
        pose = _pose(px, py, yaw, eye_cm, tilt, scan.floor_height)
        hour, _ = egocentric_position(pose, anchor)
        return Situation(
            situation_id=situation_id,
            category=SituationCategory.STANDING,
            anchor_id=anchor.id,
            pose=pose,
            brief_text=f"standing with {anchor.key} {hour} o'clock",
        )
    raise NoEligibleAnchor("could not find a standing point with an unused anchor")


def sample_situation_batch(
    scan: SceneScan,
    seed: int,
    cfg: SamplerConfig | None = None,
    geom: GeometryConfig | None = None,
    id_prefix: str = "",
) -> list[Situation]:
    """Sample the configured number of situations per category.

    Anchors are unique across the batch; standing may reuse an anchor in sparse
    scenes provided the clock orientation differs. Categories that run out of
    eligible anchors or floor space yield fewer situations rather than failing.
    """
    cfg = cfg or SamplerConfig()
    geom = geom or GeometryConfig()
    master = random.Random(seed)
    used_anchors: set[int] = set()
    standing_pairs: set[tuple[int, int]] = set()
    out: list[Situation] = []
    plan = [
        (SituationCategory.SITTING, cfg.count_sitting),
        (SituationCategory.INTERACTING, cfg.count_interacting),
        (SituationCategory.STANDING, cfg.count_standing),
    ]
    idx = 0
    for category, count in plan:
        for _ in range(count):
            placed = False
            for _attempt in range(24):
                sub_seed = master.randrange(2**32)
                sid = f"{id_prefix}s{idx:03d}"
                try:
                    if category == SituationCategory.STANDING:
                        situ = sample_situation(scan, category, sub_seed, cfg, geom, situation_id=sid)
                        hour, _ = egocentric_position(situ.pose, scan.get(situ.anchor_id))
                        if situ.anchor_id in used_anchors:
                            # reuse is a sparse-scene fallback and still needs a fresh orientation
                            if _attempt < 16 or (situ.anchor_id, hour) in standing_pairs:
                                continue
                        standing_pairs.add((situ.anchor_id, hour))
                    else:
                        situ = sample_situation(
                            scan, category, sub_seed, cfg, geom,
                            exclude_anchor_ids=frozenset(used_anchors), situation_id=sid,
                        )
                except NoEligibleAnchor:
                    break
                except NoStandableFloor:
                    break
                except ClearanceUnsatisfiable:
                    # a different draw may pick a seat with open frontage
                    continue
                used_anchors.add(situ.anchor_id)
                out.append(situ)
                idx += 1
                placed = True
                break
            if not placed:
                continue
    return out


def build_situation_payload(
    scan: SceneScan,
    situation: Situation,
    cfg: SamplerConfig | None = None,
    geom: GeometryConfig | None = None,
) -> dict:
    """Per-object location/attribute map used to expand a brief situation.

    Entries are keyed "label_id" with a coarse location string
    ("<bucket>[, within arm reach]"); a sitting anchor reads "below".
    """
    cfg = cfg or SamplerConfig()
    geom = geom or GeometryConfig()
    objects: dict[str, dict] = {}
    for obj in sorted(scan.objects, key=lambda o: o.id):
        if obj.label in ("wall", "ceiling", "floor"):
            continue
        hour, dist = egocentric_position(situation.pose, obj)
        if dist > cfg.payload_radius_m:
            continue
        entry: dict = {}
        flat = obj.flat_attributes()
        if flat:
            entry["attributes"] = flat
        if situation.category == SituationCategory.SITTING and obj.id == situation.anchor_id:
            entry["location"] = "below"
        else:
            location = proximity_bucket(hour).value
            if dist <= geom.arm_reach_m:
                location += ", within arm reach"
            entry["location"] = location
        objects[obj.key] = entry
    return {"brief": situation.brief_text, "category": situation.category.value, "objects": objects}


_BUCKET_PHRASE = {
    Bucket.FRONT: "in front",
    Bucket.LEFT: "to the left",
    Bucket.RIGHT: "to the right",
    Bucket.BACK: "behind",
}

_CATEGORY_VERB = {
    SituationCategory.SITTING: "Sitting on the",
    SituationCategory.STANDING: "Standing near the",
    SituationCategory.INTERACTING: "Interacting with the",
}


def expand_descriptive_offline(
    scan: SceneScan,
    situation: Situation,
    geom: GeometryConfig | None = None,
) -> tuple[str, tuple[int, ...]]:
    """Deterministic template fallback for the descriptive situation when no
    completion backend is configured; always names two reference objects."""
    geom = geom or GeometryConfig()
    anchor = scan.get(situation.anchor_id)
    others = []
    for obj in scan.objects:
        if obj.id == situation.anchor_id or obj.label in ("wall", "ceiling", "floor"):
            continue
        hour, dist = egocentric_position(situation.pose, obj)
        others.append((dist, obj, hour))
    if not others:
        return (f"{_CATEGORY_VERB[situation.category]} {anchor.label}.", (anchor.id,))
    dist, other, hour = min(others, key=lambda t: (t[0], t[1].id))
    phrase = _BUCKET_PHRASE[proximity_bucket(hour)]
    reach = " within arm reach" if dist <= geom.arm_reach_m else ""
    text = f"{_CATEGORY_VERB[situation.category]} {anchor.label}, with the {other.label} {phrase}{reach}."
    return text, (anchor.id, other.id)
