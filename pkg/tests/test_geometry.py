import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from situchange.config import GeometryConfig
from situchange.geometry import (
    Bucket,
    GeometryError,
    ObserverPose,
    displacement,
    dominant_normal,
    egocentric_position,
    format_location,
    obb_footprint,
    point_to_footprint_distance,
    proximity_bucket,
    route_obstacles,
    vertical_relation,
    VerticalKind,
)
from situchange.scene.model import (
    Alignment,
    ChangeKind,
    ChangeRecord,
    Obb,
    ObjectInstance,
    RigidMotion,
)

from conftest import box, pair_of, scene


def pose(x, y, yaw, eye=1.6):
    return ObserverPose(position=(x, y, eye), yaw=yaw, eye_height=eye)


def signed_angle_oracle(observer, target_xy):
    """Independent bearing computation: clockwise angle via atan2 on the two
    planar vectors, then explicit half-up quantization."""
    fx, fy = math.cos(observer.yaw), math.sin(observer.yaw)
    vx = target_xy[0] - observer.position[0]
    vy = target_xy[1] - observer.position[1]
    ccw = math.atan2(fx * vy - fy * vx, fx * vx + fy * vy)
    cw_deg = (-math.degrees(ccw)) % 360.0
    hour = int(math.floor(cw_deg / 30.0 + 0.5)) % 12
    return 12 if hour == 0 else hour


class TestEgocentricPosition:
    def test_directly_ahead(self):
        hour, dist = egocentric_position(pose(0, 0, math.pi / 2), (0.0, 2.0))
        assert (hour, dist) == (12, pytest.approx(2.0))

    def test_ninety_clockwise(self):
        hour, dist = egocentric_position(pose(0, 0, math.pi / 2), (1.0, 0.0))
        assert (hour, dist) == (3, pytest.approx(1.0))

    def test_facing_negative_x(self):
        # derived via the signed-angle oracle
        observer = pose(1, 1, math.pi)
        assert signed_angle_oracle(observer, (1.0, 2.0)) == 3
        hour, dist = egocentric_position(observer, (1.0, 2.0))
        assert (hour, dist) == (3, pytest.approx(1.0))

    def test_agrees_with_oracle_randomized(self):
        rng = random.Random(0)
        for _ in range(2000):
            observer = pose(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-7, 7))
            target = (rng.uniform(-5, 5), rng.uniform(-5, 5))
            hour, _ = egocentric_position(observer, target)
            assert hour == signed_angle_oracle(observer, target)

    def test_rotation_translation_invariance(self):
        rng = random.Random(1)
        for _ in range(2000):
            ox, oy = rng.uniform(-5, 5), rng.uniform(-5, 5)
            yaw = rng.uniform(-7, 7)
            tx, ty = rng.uniform(-5, 5), rng.uniform(-5, 5)
            base = egocentric_position(pose(ox, oy, yaw), (tx, ty))
            rot = rng.uniform(-7, 7)
            dx, dy = rng.uniform(-9, 9), rng.uniform(-9, 9)
            c, s = math.cos(rot), math.sin(rot)

            def move(px, py):
                return (c * px - s * py + dx, s * px + c * py + dy)

            moved = egocentric_position(pose(*move(ox, oy), yaw + rot), move(tx, ty))
            assert moved[0] == base[0]
            assert abs(moved[1] - base[1]) < 1e-9


class TestProximityBucket:
    def test_published_mapping(self):
        # front 11-1, left 8-10, right 2-4, back 5-7
        assert proximity_bucket(12) == Bucket.FRONT
        assert proximity_bucket(9) == Bucket.LEFT
        assert proximity_bucket(6) == Bucket.BACK

    def test_all_twelve_hours(self):
        expected = {
            11: "front", 12: "front", 1: "front",
            8: "left", 9: "left", 10: "left",
            2: "right", 3: "right", 4: "right",
            5: "back", 6: "back", 7: "back",
        }
        for hour, bucket in expected.items():
            assert proximity_bucket(hour).value == bucket

    def test_rejects_bad_hour(self):
        with pytest.raises(GeometryError):
            proximity_bucket(0)

    def test_agrees_with_angle_ranges(self):
        # brute-force check: bucket via composed ops equals direct angle-range test
        rng = random.Random(2)
        for _ in range(2000):
            observer = pose(0, 0, rng.uniform(-7, 7))
            target = (rng.uniform(-5, 5), rng.uniform(-5, 5))
            if math.hypot(*target) < 1e-6:
                continue
            hour, _ = egocentric_position(observer, target)
            bucket = proximity_bucket(hour)
            fx, fy = math.cos(observer.yaw), math.sin(observer.yaw)
            ccw = math.atan2(fx * target[1] - fy * target[0], fx * target[0] + fy * target[1])
            cw = (-math.degrees(ccw)) % 360.0
            if cw >= 315 or cw < 45:
                assert bucket == Bucket.FRONT
            elif cw < 135:
                assert bucket == Bucket.RIGHT
            elif cw < 225:
                assert bucket == Bucket.BACK
            else:
                assert bucket == Bucket.LEFT


class TestVerticalRelation:
    def test_cup_standing_on_table(self):
        table = box(1, "table", 0, 0, 0.6, 0.4, 0.37)
        cup = box(2, "cup", 0.1, 0.1, 0.04, 0.04, 0.05, bottom=0.745)
        rel = vertical_relation(cup, table)
        assert rel is not None and rel.kind == VerticalKind.STANDING_ON

    def test_blanket_lying_on_bed(self):
        bed = box(1, "bed", 0, 0, 0.8, 0.6, 0.25)
        blanket = box(2, "blanket", 0, 0, 0.4, 0.3, 0.02, bottom=0.505)
        rel = vertical_relation(blanket, bed)
        assert rel is not None and rel.kind == VerticalKind.LYING_ON

    def test_separated_boxes_none(self):
        a = box(1, "chair", 0, 0, 0.2, 0.2, 0.4)
        b = box(2, "chair", 1.5, 0, 0.2, 0.2, 0.4)
        assert vertical_relation(a, b) is None

    def test_partial_overlap_supported_by(self):
        # overhanging board: only 0.07 of its 0.4 depth rests on the table
        table = box(1, "table", 0, 0, 0.6, 0.4, 0.37)
        board = box(2, "monitor", 0.73, 0, 0.2, 0.05, 0.2, bottom=0.745)
        rel = vertical_relation(board, table)
        assert rel is not None and rel.kind == VerticalKind.SUPPORTED_BY

    def test_picture_hanging_on_wall(self):
        wall = box(1, "wall", 0, 0, 2.0, 0.05, 1.25)
        picture = box(2, "picture", 0.3, 0.08, 0.2, 0.02, 0.15, bottom=1.2)
        rel = vertical_relation(picture, wall)
        assert rel is not None and rel.kind == VerticalKind.HANGING_ON

    def test_window_attached_to_wall(self):
        wall = box(1, "wall", 0, 0, 2.0, 0.05, 1.25)
        window = box(2, "window", 0.5, 0.0, 0.4, 0.02, 0.4, bottom=1.0)
        rel = vertical_relation(window, wall)
        assert rel is not None and rel.kind == VerticalKind.ATTACHED_TO

    def test_chair_next_to_wall_is_not_hanging(self):
        wall = box(1, "wall", 0, 0, 2.0, 0.05, 1.25)
        chair = box(2, "chair", 0.3, 0.26, 0.2, 0.2, 0.45)
        assert vertical_relation(chair, wall) is None

    def test_antisymmetric(self):
        table = box(1, "table", 0, 0, 0.6, 0.4, 0.37)
        cup = box(2, "cup", 0.1, 0.1, 0.04, 0.04, 0.05, bottom=0.745)
        assert vertical_relation(cup, table) is not None
        assert vertical_relation(table, cup) is None

    def test_same_object_rejected(self):
        table = box(1, "table", 0, 0, 0.6, 0.4, 0.37)
        with pytest.raises(GeometryError):
            vertical_relation(table, table)


def _sampled(oid, label, normals, cx=0.0, cy=0.0):
    samples = np.array([[cx, cy, 0.5, nx, ny, nz] for nx, ny, nz in normals])
    return ObjectInstance(
        id=oid,
        label=label,
        obb=Obb(center=(cx, cy, 0.5), half_extents=(0.3, 0.3, 0.5)),
        attributes={},
        samples=samples,
    )


class TestDominantNormal:
    def test_planar_patch(self):
        obj = _sampled(1, "counter", [(1.0, 0.0, 0.0)] * 40)
        direction, frac = dominant_normal(obj)
        assert frac == pytest.approx(1.0)
        assert direction == pytest.approx([1.0, 0.0, 0.0])

    def test_hemisphere_rejected(self):
        rng = random.Random(3)
        normals = []
        for _ in range(200):
            # uniform on the hemisphere
            z = rng.uniform(0, 1)
            phi = rng.uniform(0, 2 * math.pi)
            r = math.sqrt(1 - z * z)
            normals.append((r * math.cos(phi), r * math.sin(phi), z))
        assert dominant_normal(_sampled(1, "clutter", normals)) is None

    def test_seventy_thirty_split(self):
        # derived by counting bins on the constructed sample set
        normals = [(1.0, 0.0, 0.0)] * 70 + [(0.0, 0.0, 1.0)] * 30
        direction, frac = dominant_normal(_sampled(1, "counter", normals))
        assert frac == pytest.approx(0.7)
        assert direction == pytest.approx([1.0, 0.0, 0.0])

    def test_requires_samples(self):
        plain = box(1, "counter", 0, 0, 0.5, 0.3, 0.45)
        with pytest.raises(GeometryError):
            dominant_normal(plain)

    def test_requires_enough_samples(self):
        obj = _sampled(1, "counter", [(1.0, 0.0, 0.0)] * 8)
        with pytest.raises(GeometryError):
            dominant_normal(obj)


class TestDisplacement:
    def _pair(self, prev_center, curr_center, alignment=None):
        prev_obj = ObjectInstance(1, "chair", Obb(prev_center, (0.2, 0.2, 0.4)))
        curr_obj = ObjectInstance(1, "chair", Obb(curr_center, (0.2, 0.2, 0.4)))
        change = ChangeRecord(
            kind=ChangeKind.RIGID,
            object_id_prev=1,
            object_id_curr=1,
            rigid_transform=RigidMotion(0.0, (0, 0, 0)),
        )
        return pair_of(scene("a", prev_obj), scene("b", curr_obj), [change], alignment), change

    def test_identical_centers(self):
        pair, change = self._pair((1, 1, 0.4), (1, 1, 0.4))
        assert displacement(change, pair) == 0.0

    def test_published_point_six_meters(self):
        pair, change = self._pair((1, 1, 0.4), (2.6, 1, 0.4))
        assert displacement(change, pair) == pytest.approx(1.6)

    def test_three_four_five(self):
        pair, change = self._pair((0, 0, 0.4), (0.3, 0.4, 0.4))
        assert displacement(change, pair) == pytest.approx(0.5)

    def test_respects_alignment(self):
        align = Alignment(yaw=math.pi / 2, translation=(0, 0, 0))
        # prev (1, 0) maps to (0, 1); curr at (0, 1) -> no displacement
        pair, change = self._pair((1, 0, 0.4), (0, 1, 0.4), align)
        assert displacement(change, pair) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_non_rigid(self):
        pair, _ = self._pair((1, 1, 0.4), (1, 1, 0.4))
        removed = ChangeRecord(kind=ChangeKind.REMOVED, object_id_prev=1)
        with pytest.raises(GeometryError):
            displacement(removed, pair)


class TestRouteObstacles:
    def _scene(self, chair_xy):
        bed = box(30, "bed", 4.0, 0.0, 0.8, 0.6, 0.25)
        chair_prev = box(31, "chair", 0.0, 2.0, 0.2, 0.2, 0.45)
        chair_curr = box(31, "chair", *chair_xy, 0.2, 0.2, 0.45)
        change = ChangeRecord(
            kind=ChangeKind.RIGID, object_id_prev=31, object_id_curr=31,
            rigid_transform=RigidMotion(0.0, (chair_xy[0], chair_xy[1] - 2.0, 0.0)),
        )
        return (
            pair_of(scene("a", bed, chair_prev), scene("b", bed, chair_curr), [change]),
            bed,
        )

    def test_moved_chair_blocks_route(self):
        pair, bed = self._scene((2.0, 0.0))
        observer = pose(0, 0, 0)
        assert route_obstacles(observer, bed, pair) == [31]

    def test_clear_corridor(self):
        pair, bed = self._scene((2.0, 3.0))
        observer = pose(0, 0, 0)
        assert route_obstacles(observer, bed, pair) == []

    def test_target_excluded_and_order(self):
        bed = box(30, "bed", 4.0, 0.0, 0.8, 0.6, 0.25)
        near = box(31, "chair", 1.0, 0.1, 0.2, 0.2, 0.45)
        far = box(32, "basket", 2.5, -0.1, 0.18, 0.18, 0.15)
        changes = [
            ChangeRecord(kind=ChangeKind.ADDED, object_id_curr=32),
            ChangeRecord(
                kind=ChangeKind.RIGID, object_id_prev=31, object_id_curr=31,
                rigid_transform=RigidMotion(0.0, (0.0, 0.0, 0.0)),
            ),
        ]
        prev = scene("a", bed, near)
        curr = scene("b", bed, near, far)
        pair = pair_of(prev, curr, changes)
        assert route_obstacles(pose(0, 0, 0), bed, pair) == [31, 32]

    def test_unchanged_objects_ignored(self):
        bed = box(30, "bed", 4.0, 0.0, 0.8, 0.6, 0.25)
        table = box(33, "table", 2.0, 0.0, 0.6, 0.4, 0.37)
        pair = pair_of(scene("a", bed, table), scene("b", bed, table))
        assert route_obstacles(pose(0, 0, 0), bed, pair) == []


def test_format_location_rounding():
    assert format_location(4, 0.44) == "4 o'clock, 0.4m"
    assert format_location(11, 0.75) == "11 o'clock, 0.8m"
    assert format_location(12, 2.0) == "12 o'clock, 2.0m"


def test_point_to_footprint_distance():
    fp = obb_footprint(Obb((0, 0, 0.5), (1.0, 0.5, 0.5)))
    assert point_to_footprint_distance(0.0, 0.0, fp) == 0.0
    assert point_to_footprint_distance(2.0, 0.0, fp) == pytest.approx(1.0)
    assert point_to_footprint_distance(0.0, 1.5, fp) == pytest.approx(1.0)


@given(
    st.floats(-5, 5), st.floats(-5, 5), st.floats(-7, 7),
    st.floats(-5, 5), st.floats(-5, 5),
)
@settings(max_examples=200, deadline=None)
def test_distance_is_planar_euclidean(ox, oy, yaw, tx, ty):
    _, dist = egocentric_position(pose(ox, oy, yaw), (tx, ty))
    assert dist == pytest.approx(math.hypot(tx - ox, ty - oy))
