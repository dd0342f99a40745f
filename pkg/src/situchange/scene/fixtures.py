"""Deterministic synthetic scan pairs for desk-scale tests.

Scenes are rectangular rooms with four walls, a few furniture pieces (some
stacked, some with surface samples for normal-based rules), a walkable-floor
grid, and a random rigid alignment between the two snapshots. Identical seeds
give byte-identical serializations.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from ..geometry import footprints_intersect, obb_footprint, points_in_footprint
from .model import (
    Alignment,
    ChangeKind,
    ChangeRecord,
    HumanFields,
    Obb,
    ObjectInstance,
    RigidMotion,
    ScanPair,
    SceneScan,
    StandableGrid,
)


class FixtureError(Exception):
    pass


@dataclass(frozen=True)
class FixtureSpec:
    n_objects: int = 8
    n_changes: int = 2
    extents: tuple[float, float] = (6.5, 5.5)
    cell_size: float = 0.1


# label -> (half_extents, facet attributes, labels it may stack on)
_CATALOG: dict[str, tuple[tuple[float, float, float], dict[str, tuple[str, ...]], tuple[str, ...] | None]] = {
    "table": ((0.6, 0.4, 0.37), {"material": ("wooden",), "shape": ("rectangular",)}, None),
    "chair": ((0.22, 0.22, 0.45), {"material": ("wooden",)}, None),
    "sofa": ((0.9, 0.4, 0.4), {"material": ("fabric",), "size": ("wide",)}, None),
    "counter": ((0.6, 0.3, 0.45), {"material": ("stone",), "shape": ("rectangular",)}, None),
    "bed": ((0.8, 0.6, 0.25), {"state": ("messy",)}, None),
    "monitor": ((0.28, 0.05, 0.25), {"state": ("off",)}, ("table", "counter", "nightstand")),
    "blanket": ((0.35, 0.25, 0.02), {"material": ("wool",)}, ("bed", "sofa")),
    "nightstand": ((0.25, 0.2, 0.3), {"material": ("wooden",)}, None),
    "lamp": ((0.1, 0.1, 0.35), {"state": ("off",)}, ("table", "nightstand", "counter")),
    "basket": ((0.18, 0.18, 0.15), {"size": ("big",)}, None),
    "cabinet": ((0.4, 0.25, 0.6), {"material": ("wooden",)}, None),
    "stool": ((0.18, 0.18, 0.23), {}, None),
    "cup": ((0.04, 0.04, 0.05), {}, ("table", "counter", "nightstand")),
}

# Labels whose yaw is aligned so a box face points at the room center and which
# carry surface samples (face normals for interaction, top normals for seating).
_FACE_SAMPLED = ("counter", "cabinet")
_SEAT_SAMPLED = ("sofa",)
_TOP_SAMPLED = ("bed",)

_LABEL_SEQUENCE = (
    "bed", "sofa", "counter", "table", "chair", "chair", "monitor", "blanket",
    "nightstand", "lamp", "chair", "basket", "cabinet", "stool", "cup",
)

_PALETTE = ("blue", "orange", "red", "green", "white", "black", "gray", "brown")

_CHANGE_PATTERN = (ChangeKind.RIGID, ChangeKind.RIGID, ChangeKind.REMOVED, ChangeKind.ADDED, ChangeKind.NONRIGID)

_WALL_THICKNESS = 0.05
_WALL_HEIGHT = 2.5
_MAX_ATTEMPTS = 1000


def _front_axis(yaw: float) -> tuple[float, float]:
    """World direction of the box-local -y axis (the 'front' face normal)."""
    return (math.sin(yaw), -math.cos(yaw))


def _yaw_facing(from_xy: tuple[float, float], to_xy: tuple[float, float]) -> float:
    """Yaw putting the box front face normal on the from->to direction."""
    fx, fy = to_xy[0] - from_xy[0], to_xy[1] - from_xy[1]
    return math.atan2(fx, -fy)


def _surface_samples(obb: Obb, n_front: int, n_top: int, rng: random.Random, back_face: bool = False) -> np.ndarray:
    """Points with unit normals on the front (or back) vertical face plus the top face.

    Face normals always point along the front axis, so a backrest's inner
    surface (back_face=True) faces the same way a sitter would.
    """
    cx, cy, cz = obb.center
    hx, hy, hz = obb.half_extents
    c, s = math.cos(obb.yaw), math.sin(obb.yaw)
    fx, fy = _front_axis(obb.yaw)
    face_off = -hy if back_face else hy
    rows = []
    for _ in range(n_front):
        u = rng.uniform(-0.8, 0.8) * hx
        v = rng.uniform(0.1, 0.9) * hz if back_face else rng.uniform(-0.8, 0.8) * hz
        rows.append([cx + fx * face_off + c * u, cy + fy * face_off + s * u, cz + v, fx, fy, 0.0])
    for _ in range(n_top):
        u = rng.uniform(-0.8, 0.8) * hx
        v = rng.uniform(-0.8, 0.8) * hy
        rows.append([cx + c * u - s * v, cy + s * u + c * v, cz + hz, 0.0, 0.0, 1.0])
    arr = np.asarray(rows, dtype=float)
    arr.flags.writeable = False
    return arr


def _frontage_strip(obb: Obb, depth: float = 0.75) -> np.ndarray:
    """Keep-out rectangle in front of a face-aligned object so a person can
    approach it (interaction point or seat frontage)."""
    cx, cy, _ = obb.center
    hx, hy, _ = obb.half_extents
    c, s = math.cos(obb.yaw), math.sin(obb.yaw)
    fx, fy = _front_axis(obb.yaw)
    base = np.array([cx + fx * hy, cy + fy * hy])
    tangent = np.array([c, s]) * hx
    forward = np.array([fx, fy]) * depth
    return np.array([base + tangent, base - tangent, base - tangent + forward, base + tangent + forward])


def _walls(extents: tuple[float, float]) -> list[ObjectInstance]:
    w, l = extents
    t = _WALL_THICKNESS
    hz = _WALL_HEIGHT / 2.0
    specs = [
        ((w / 2.0, -t, hz), (w / 2.0 + t, t, hz)),
        ((w / 2.0, l + t, hz), (w / 2.0 + t, t, hz)),
        ((-t, l / 2.0, hz), (t, l / 2.0 + t, hz)),
        ((w + t, l / 2.0, hz), (t, l / 2.0 + t, hz)),
    ]
    return [
        ObjectInstance(id=i + 1, label="wall", obb=Obb(center=c, half_extents=h))
        for i, (c, h) in enumerate(specs)
    ]


def _place_on_floor(
    rng: random.Random,
    half: tuple[float, float, float],
    extents: tuple[float, float],
    taken: list[np.ndarray],
    face_room_center: bool = False,
    yaw_around: float | None = None,
    frontage: list[np.ndarray] | None = None,
) -> Obb:
    """Rejection-sample a non-overlapping floor pose.

    `taken` blocks the footprint itself; when `frontage` is given, the approach
    strip in front of the object must also stay clear of `frontage` polygons.
    `yaw_around` restricts orientation to a small band around a base yaw.
    """
    w, l = extents
    # diagonal reach keeps the footprint inside the room at any yaw
    margin = math.hypot(half[0], half[1]) + 0.05
    if w <= 2 * margin or l <= 2 * margin:
        raise FixtureError("room extents too small for the requested objects")
    for _ in range(_MAX_ATTEMPTS):
        x = rng.uniform(margin, w - margin)
        y = rng.uniform(margin, l - margin)
        if yaw_around is not None:
            yaw = yaw_around + rng.uniform(-0.4, 0.4)
        elif face_room_center:
            yaw = _yaw_facing((x, y), (w / 2.0, l / 2.0))
        else:
            yaw = rng.uniform(-math.pi, math.pi)
        obb = Obb(center=(x, y, half[2]), half_extents=half, yaw=yaw)
        fp = obb_footprint(obb)
        if any(footprints_intersect(fp, other) for other in taken):
            continue
        if frontage is not None:
            strip = _frontage_strip(obb)
            if any(footprints_intersect(strip, other) for other in frontage):
                continue
        return obb
    raise FixtureError("objects cannot be packed without overlap after 1000 attempts")


def _standable_grid(
    objects: list[ObjectInstance], extents: tuple[float, float], cell: float, floor_height: float
) -> StandableGrid:
    w, l = extents
    cols = int(w / cell)
    rows = int(l / cell)
    xs = (np.arange(cols) + 0.5) * cell
    ys = (np.arange(rows) + 0.5) * cell
    gx, gy = np.meshgrid(xs, ys)
    points = np.column_stack([gx.ravel(), gy.ravel()])
    blocked = np.zeros(len(points), dtype=bool)
    for o in objects:
        if o.obb.bottom <= floor_height + 0.1:
            blocked |= points_in_footprint(points, obb_footprint(o.obb))
    cells = (~blocked).reshape(rows, cols)
    cells.flags.writeable = False
    return StandableGrid(origin=(0.0, 0.0), cell_size=cell, cells=cells)


def _transform_samples(samples: np.ndarray | None, rot_yaw: float, pivot, translation) -> np.ndarray | None:
    if samples is None:
        return None
    c, s = math.cos(rot_yaw), math.sin(rot_yaw)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    pts = (samples[:, :3] - pivot) @ rot.T + pivot + translation
    nrm = samples[:, 3:6] @ rot.T
    out = np.hstack([pts, nrm])
    out.flags.writeable = False
    return out


def _inverse_align(obj: ObjectInstance, alignment: Alignment) -> ObjectInstance:
    """Express an object given in current coordinates in the previous frame."""
    ayaw = alignment.yaw
    tx, ty, tz = alignment.translation
    c, s = math.cos(-ayaw), math.sin(-ayaw)

    def inv(p):
        x, y, z = p[0] - tx, p[1] - ty, p[2] - tz
        return (c * x - s * y, s * x + c * y, z)

    samples = None
    if obj.samples is not None:
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        pts = (obj.samples[:, :3] - np.array([tx, ty, tz])) @ rot.T
        nrm = obj.samples[:, 3:6] @ rot.T
        samples = np.hstack([pts, nrm])
        samples.flags.writeable = False
    return ObjectInstance(
        id=obj.id,
        label=obj.label,
        obb=Obb(center=inv(obj.obb.center), half_extents=obj.obb.half_extents, yaw=obj.obb.yaw - ayaw),
        attributes=obj.attributes,
        samples=samples,
    )


def _human_fields(kind: ChangeKind, label: str) -> HumanFields:
    if kind == ChangeKind.RIGID:
        return HumanFields(
            reason=f"Someone moved the {label} while tidying up.",
            warning=f"The {label} may now block a familiar path.",
            description=f"The {label} has been moved to a new spot in the room.",
            rearrangement=f"Slide the {label} back to where it stood before.",
        )
    if kind == ChangeKind.REMOVED:
        return HumanFields(
            reason=f"The {label} was likely taken out of the room.",
            description=f"The {label} that used to be here is gone.",
        )
    return HumanFields(
        reason=f"The {label} was used and left in a different shape.",
        description=f"The {label} looks different but has not moved.",
        rearrangement=f"Straighten the {label} out.",
    )


def make_fixture(seed: int, spec: FixtureSpec = FixtureSpec()) -> ScanPair:
    """Generate a validated scan pair; deterministic for a fixed (seed, spec)."""
    if spec.n_changes > spec.n_objects:
        raise FixtureError("n_changes must not exceed n_objects")
    if spec.extents[0] <= 0 or spec.extents[1] <= 0:
        raise FixtureError("room extents must be positive")
    rng = random.Random(seed)

    walls = _walls(spec.extents)
    base: list[ObjectInstance] = list(walls)
    color_counters: dict[str, int] = {}
    supports_children: dict[int, list[int]] = {}
    keepout: list[np.ndarray] = []  # reserved approach strips, objects stay out
    frontage_labels = _FACE_SAMPLED + _SEAT_SAMPLED
    next_id = 10

    for i in range(spec.n_objects):
        label = _LABEL_SEQUENCE[i % len(_LABEL_SEQUENCE)]
        half, facets, stack_on = _CATALOG[label]
        color = _PALETTE[color_counters.get(label, 0) % len(_PALETTE)]
        color_counters[label] = color_counters.get(label, 0) + 1
        attributes = dict(facets)
        attributes["color"] = (color,)

        support = None
        if stack_on:
            for candidate in base:
                if candidate.label in stack_on and candidate.id not in supports_children:
                    if candidate.obb.half_extents[0] > half[0] and candidate.obb.half_extents[1] > half[1]:
                        support = candidate
                        break
        if support is not None:
            sx, sy, _ = support.obb.center
            max_off = (
                min(support.obb.half_extents[0], support.obb.half_extents[1])
                - max(half[0], half[1])
            ) * 0.5
            off_u = rng.uniform(-max_off, max_off)
            off_v = rng.uniform(-max_off, max_off)
            c, s = math.cos(support.obb.yaw), math.sin(support.obb.yaw)
            obb = Obb(
                center=(sx + c * off_u - s * off_v, sy + s * off_u + c * off_v, support.obb.top + 0.005 + half[2]),
                half_extents=half,
                yaw=support.obb.yaw,
            )
            supports_children.setdefault(support.id, []).append(next_id)
        else:
            occupied = [obb_footprint(o.obb) for o in base if o.obb.bottom <= 0.1]
            obb = _place_on_floor(
                rng, half, spec.extents, occupied + keepout,
                face_room_center=label in frontage_labels,
                frontage=occupied if label in frontage_labels else None,
            )
            if label in frontage_labels:
                keepout.append(_frontage_strip(obb))

        samples = None
        if label in _FACE_SAMPLED:
            samples = _surface_samples(obb, n_front=40, n_top=8, rng=rng)
        elif label in _SEAT_SAMPLED:
            samples = _surface_samples(obb, n_front=16, n_top=32, rng=rng, back_face=True)
        elif label in _TOP_SAMPLED:
            samples = _surface_samples(obb, n_front=0, n_top=40, rng=rng)

        base.append(ObjectInstance(id=next_id, label=label, obb=obb, attributes=attributes, samples=samples))
        next_id += 1

    movable = [
        o for o in base
        if o.label != "wall" and o.id not in supports_children and o.obb.bottom <= 0.1
    ]
    kinds = [_CHANGE_PATTERN[i % len(_CHANGE_PATTERN)] for i in range(spec.n_changes)]
    n_targets = sum(1 for k in kinds if k != ChangeKind.ADDED)
    if n_targets > len(movable):
        raise FixtureError("not enough standalone objects to host the requested changes")
    targets = rng.sample(sorted(movable, key=lambda o: o.id), n_targets)

    curr_objects = {o.id: o for o in base}
    changes: list[ChangeRecord] = []
    target_iter = iter(targets)
    for kind in kinds:
        if kind == ChangeKind.RIGID:
            obj = next(target_iter)
            occupied = [
                obb_footprint(o.obb)
                for oid, o in sorted(curr_objects.items())
                if oid != obj.id and o.obb.bottom <= 0.1
            ]
            has_front = obj.label in frontage_labels
            if has_front:
                # moved furniture with an approach side settles facing the room;
                # a clear strip is mandatory for interactables, best-effort for seats
                try:
                    new_obb = _place_on_floor(
                        rng, obj.obb.half_extents, spec.extents, occupied + keepout,
                        face_room_center=True, frontage=occupied,
                    )
                except FixtureError:
                    if obj.label in _FACE_SAMPLED:
                        raise
                    new_obb = _place_on_floor(
                        rng, obj.obb.half_extents, spec.extents, occupied + keepout,
                        face_room_center=True,
                    )
                keepout.append(_frontage_strip(new_obb))
            else:
                new_obb = _place_on_floor(
                    rng, obj.obb.half_extents, spec.extents, occupied + keepout,
                    yaw_around=obj.obb.yaw,
                )
            dyaw = new_obb.yaw - obj.obb.yaw
            translation = tuple(n - o for n, o in zip(new_obb.center, obj.obb.center))
            curr_objects[obj.id] = ObjectInstance(
                id=obj.id, label=obj.label, obb=new_obb, attributes=obj.attributes,
                samples=_transform_samples(
                    obj.samples, dyaw, np.asarray(obj.obb.center), np.asarray(translation)
                ),
            )
            changes.append(
                ChangeRecord(
                    kind=kind,
                    object_id_prev=obj.id,
                    object_id_curr=obj.id,
                    rigid_transform=RigidMotion(yaw=dyaw, translation=translation),
                    human_fields=_human_fields(kind, obj.label),
                )
            )
        elif kind == ChangeKind.REMOVED:
            obj = next(target_iter)
            del curr_objects[obj.id]
            changes.append(
                ChangeRecord(kind=kind, object_id_prev=obj.id, human_fields=_human_fields(kind, obj.label))
            )
        elif kind == ChangeKind.ADDED:
            label = "basket"
            half, facets, _ = _CATALOG[label]
            color = _PALETTE[color_counters.get(label, 0) % len(_PALETTE)]
            color_counters[label] = color_counters.get(label, 0) + 1
            occupied = [obb_footprint(o.obb) for _, o in sorted(curr_objects.items()) if o.obb.bottom <= 0.1]
            obb = _place_on_floor(rng, half, spec.extents, occupied + keepout)
            new_obj = ObjectInstance(
                id=next_id, label=label, obb=obb,
                attributes={**facets, "color": (color,)},
            )
            curr_objects[next_id] = new_obj
            changes.append(ChangeRecord(kind=kind, object_id_curr=next_id))
            next_id += 1
        else:  # NONRIGID: deformed in place, center and footprint area preserved
            obj = next(target_iter)
            hx, hy, hz = obj.obb.half_extents
            scale = rng.uniform(0.85, 0.95)
            new_half = (hx * scale, hy / scale, hz)
            new_obb = Obb(
                center=(obj.obb.center[0], obj.obb.center[1], obj.obb.bottom + new_half[2]),
                half_extents=new_half,
                yaw=obj.obb.yaw,
            )
            curr_objects[obj.id] = ObjectInstance(
                id=obj.id, label=obj.label, obb=new_obb, attributes=obj.attributes, samples=None
            )
            changes.append(
                ChangeRecord(
                    kind=kind, object_id_prev=obj.id, object_id_curr=obj.id,
                    human_fields=_human_fields(kind, obj.label),
                )
            )

    alignment = Alignment(
        yaw=rng.uniform(-math.pi, math.pi),
        translation=(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.0),
    )
    curr_list = [curr_objects[oid] for oid in sorted(curr_objects)]
    prev_list = [_inverse_align(o, alignment) for o in base]

    curr = SceneScan(
        scan_id=f"fx{seed}b",
        objects=tuple(curr_list),
        floor_height=0.0,
        standable=_standable_grid(curr_list, spec.extents, spec.cell_size, 0.0),
    )
    prev = SceneScan(scan_id=f"fx{seed}a", objects=tuple(prev_list), floor_height=0.0)
    return ScanPair(
        pair_id=f"fixture-{seed}",
        prev=prev,
        curr=curr,
        alignment=alignment,
        changes=tuple(changes),
    )


def make_fixture_batch(n_pairs: int, seed: int = 0, spec: FixtureSpec = FixtureSpec()) -> list[ScanPair]:
    return [make_fixture(seed * 1000 + i, spec) for i in range(n_pairs)]
