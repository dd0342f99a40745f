import math

import numpy as np
import pytest

from situchange.config import GeometryConfig, SamplerConfig
from situchange.geometry import (
    dominant_normal,
    egocentric_position,
    obb_footprint,
    point_in_footprint,
    point_to_footprint_distance,
)
from situchange.scene.fixtures import FixtureSpec, make_fixture
from situchange.situations import (
    ClearanceUnsatisfiable,
    NoEligibleAnchor,
    NoStandableFloor,
    SituationCategory,
    build_situation_payload,
    expand_descriptive_offline,
    sample_eye_pose,
    sample_situation,
    sample_situation_batch,
)

from conftest import box, scene


class TestEyePose:
    def test_standing_band(self):
        for seed in range(200):
            height, tilt = sample_eye_pose("standing", seed)
            assert 147.0 <= height <= 167.0
            assert -30.0 <= tilt <= 30.0

    def test_sitting_band(self):
        for seed in range(200):
            height, _ = sample_eye_pose("sitting", seed)
            assert 71.5 <= height <= 81.5

    def test_interacting_uses_standing_band(self):
        heights = [sample_eye_pose("interacting", s)[0] for s in range(100)]
        assert all(147.0 <= h <= 167.0 for h in heights)

    def test_deterministic(self):
        assert sample_eye_pose("sitting", 5) == sample_eye_pose("sitting", 5)


class TestSitting:
    def test_seat_point_inside_footprint(self, fixture_pair):
        scan = fixture_pair.curr
        successes = 0
        for seed in range(20):
            try:
                situ = sample_situation(scan, "sitting", seed)
            except ClearanceUnsatisfiable:
                continue  # legitimate for a large seat with blocked frontage
            successes += 1
            seat = scan.get(situ.anchor_id)
            fp = obb_footprint(seat.obb)
            assert point_in_footprint(situ.pose.position[0], situ.pose.position[1], fp)
        assert successes > 10

    def test_sofa_faces_away_from_backrest(self, fixture_pair):
        scan = fixture_pair.curr
        sofa = next(o for o in scan.objects if o.label == "sofa")
        for seed in range(40):
            try:
                situ = sample_situation(scan, "sitting", seed)
            except ClearanceUnsatisfiable:
                continue
            if situ.anchor_id != sofa.id:
                continue
            # backrest normals point the way the sitter faces
            normals = sofa.samples[:, 3:6]
            horiz = normals[np.abs(normals[:, 2]) < 0.7]
            mean = horiz[:, :2].mean(axis=0)
            mean /= np.linalg.norm(mean)
            facing = np.array([math.cos(situ.pose.yaw), math.sin(situ.pose.yaw)])
            assert float(facing @ mean) > 0.99

    def test_no_seat_raises(self):
        bare = scene("s", box(1, "table", 1, 1, 0.6, 0.4, 0.37))
        with pytest.raises(NoEligibleAnchor):
            sample_situation(bare, "sitting", 0)

    def test_eye_height_matches_category(self, fixture_pair):
        situ = sample_situation(fixture_pair.curr, "sitting", 3)
        assert 0.715 <= situ.pose.eye_height <= 0.815

    def test_brief_text(self, fixture_pair):
        situ = sample_situation(fixture_pair.curr, "sitting", 3)
        anchor = fixture_pair.curr.get(situ.anchor_id)
        assert situ.brief_text == f"sitting on {anchor.key}"


class TestInteracting:
    def test_distance_and_angle_contract(self, fixture_pair):
        scan = fixture_pair.curr
        cfg = SamplerConfig()
        for seed in range(30):
            situ = sample_situation(scan, "interacting", seed)
            anchor = scan.get(situ.anchor_id)
            fp = obb_footprint(anchor.obb)
            px, py = situ.pose.position[0], situ.pose.position[1]
            dist = point_to_footprint_distance(px, py, fp)
            assert cfg.interact_dist_min_m <= dist <= cfg.interact_dist_max_m
            direction, _ = dominant_normal(anchor)
            to_center = np.array([anchor.obb.center[0] - px, anchor.obb.center[1] - py])
            to_center /= np.linalg.norm(to_center)
            cos_err = float(to_center @ (-direction[:2]))
            assert cos_err >= math.cos(math.radians(cfg.interact_angle_deg)) - 1e-9

    def test_yaw_points_at_anchor(self, fixture_pair):
        situ = sample_situation(fixture_pair.curr, "interacting", 5)
        anchor = fixture_pair.curr.get(situ.anchor_id)
        px, py = situ.pose.position[0], situ.pose.position[1]
        expected = math.atan2(anchor.obb.center[1] - py, anchor.obb.center[0] - px)
        assert situ.pose.yaw == pytest.approx(expected)

    def test_point_is_standable(self, fixture_pair):
        scan = fixture_pair.curr
        situ = sample_situation(scan, "interacting", 9)
        assert scan.standable.standable_at(situ.pose.position[0], situ.pose.position[1])

    def test_requires_standable_floor(self, fixture_pair):
        bare = scene("s", *fixture_pair.curr.objects)
        with pytest.raises(NoStandableFloor):
            sample_situation(bare, "interacting", 0)

    def test_requires_interactable(self, fixture_pair):
        objs = [o for o in fixture_pair.curr.objects if o.samples is None]
        bare = scene("s", *objs, standable=fixture_pair.curr.standable)
        with pytest.raises(NoEligibleAnchor):
            sample_situation(bare, "interacting", 0)


class TestStanding:
    def test_anchor_is_argmin_bruteforce(self, fixture_pair):
        scan = fixture_pair.curr
        for seed in range(20):
            situ = sample_situation(scan, "standing", seed)
            px, py = situ.pose.position[0], situ.pose.position[1]
            best = min(
                (o for o in scan.objects if o.label != "wall"),
                key=lambda o: (point_to_footprint_distance(px, py, obb_footprint(o.obb)), o.id),
            )
            assert situ.anchor_id == best.id

    def test_brief_text_clock_phrase(self, fixture_pair):
        situ = sample_situation(fixture_pair.curr, "standing", 4)
        anchor = fixture_pair.curr.get(situ.anchor_id)
        hour, _ = egocentric_position(situ.pose, anchor)
        assert situ.brief_text == f"standing with {anchor.key} {hour} o'clock"


def test_determinism(fixture_pair):
    a = sample_situation(fixture_pair.curr, "sitting", 12)
    b = sample_situation(fixture_pair.curr, "sitting", 12)
    assert a == b


def test_batch_anchor_uniqueness(fixture_pairs_10):
    for pair in fixture_pairs_10:
        batch = sample_situation_batch(pair.curr, seed=17)
        non_standing = [s for s in batch if s.category != SituationCategory.STANDING]
        anchors = [s.anchor_id for s in non_standing]
        assert len(anchors) == len(set(anchors))
        standing = [s for s in batch if s.category == SituationCategory.STANDING]
        pairs = [
            (s.anchor_id, egocentric_position(s.pose, pair.curr.get(s.anchor_id))[0])
            for s in standing
        ]
        assert len(pairs) == len(set(pairs))


def test_batch_deterministic(fixture_pair):
    a = sample_situation_batch(fixture_pair.curr, seed=9)
    b = sample_situation_batch(fixture_pair.curr, seed=9)
    assert a == b


class TestPayload:
    def test_anchor_below_when_sitting(self, fixture_pair):
        situ = sample_situation(fixture_pair.curr, "sitting", 3)
        payload = build_situation_payload(fixture_pair.curr, situ)
        anchor = fixture_pair.curr.get(situ.anchor_id)
        assert payload["objects"][anchor.key]["location"] == "below"

    def test_reach_tag_inside_arm_reach(self):
        # backrest samples make the chair face +Y deterministically
        samples = np.array([[0.0, -0.22, 0.7, 0.0, 1.0, 0.0]] * 16)
        seat = box(1, "chair", 0, 0, 0.22, 0.22, 0.45, color="blue")
        seat = type(seat)(id=1, label="chair", obb=seat.obb, attributes=seat.attributes, samples=samples)
        table = box(2, "table", 0, 0.5, 0.3, 0.2, 0.37, material="wooden")
        far = box(3, "basket", 0, -3.0, 0.18, 0.18, 0.15)
        scan = scene("s", seat, table, far)
        situ = sample_situation(scan, "sitting", 1)
        assert situ.anchor_id == 1
        payload = build_situation_payload(scan, situ)
        assert payload["objects"]["table_2"]["location"] == "front, within arm reach"
        assert payload["objects"]["basket_3"]["location"] == "back"

    def test_attributes_flattened(self, fixture_pair):
        situ = sample_situation(fixture_pair.curr, "sitting", 3)
        payload = build_situation_payload(fixture_pair.curr, situ)
        table = next(o for o in fixture_pair.curr.objects if o.label == "table")
        entry = payload["objects"][table.key]
        assert entry["attributes"] == table.flat_attributes()

    def test_walls_excluded_and_radius(self, fixture_pair):
        situ = sample_situation(fixture_pair.curr, "standing", 2)
        payload = build_situation_payload(fixture_pair.curr, situ)
        assert not any(k.startswith("wall") for k in payload["objects"])


def test_descriptive_offline_names_two_objects(fixture_pair):
    situ = sample_situation(fixture_pair.curr, "sitting", 3)
    text, refs = expand_descriptive_offline(fixture_pair.curr, situ)
    assert len(refs) == 2
    assert refs[0] == situ.anchor_id
    other = fixture_pair.curr.get(refs[1])
    assert other.label in text
