import math
import re

import pytest

from situchange.config import QueryConfig
from situchange.features import (
    FeatureCandidate,
    FeatureKind,
    NeedsReview,
    QueryTask,
    Tense,
    candidate_features,
    find_landmarks,
    render_query,
    resolve_feature,
    resolve_pair_queries,
)
from situchange.review import ReviewState
from situchange.scene.model import ChangeKind, ChangeRecord, RigidMotion

from conftest import box, pair_of, scene


def three_chair_scene():
    """One landmark table, a blacklisted unique cup, and three chairs of which
    the middle one has no automatic distinctive feature."""
    table = box(5, "table", 0, 0, 0.6, 0.4, 0.37, material="wooden")
    cup = box(9, "cup", 0.1, 0.1, 0.04, 0.04, 0.05, bottom=0.745)
    chair_near = box(1, "chair", 0.8, 1.2, 0.2, 0.2, 0.45, color="blue")
    chair_mid = box(3, "chair", 2.0, 1.2, 0.2, 0.2, 0.45, color="blue")
    chair_far = box(2, "chair", 3.2, 1.2, 0.2, 0.2, 0.45, color="orange")
    return scene("fig5", table, cup, chair_near, chair_mid, chair_far)


class TestFindLandmarks:
    def test_unique_table_promoted(self):
        scan = three_chair_scene()
        landmarks = find_landmarks(scan)
        assert 5 in landmarks

    def test_duplicate_labels_excluded(self):
        scan = scene(
            "s",
            box(1, "table", 0, 0, 0.6, 0.4, 0.37),
            box(2, "table", 3, 0, 0.6, 0.4, 0.37),
        )
        assert find_landmarks(scan) == set()

    def test_blacklisted_cup_excluded(self):
        scan = three_chair_scene()
        assert 9 not in find_landmarks(scan)
        # with an empty blacklist the cup would qualify
        assert 9 in find_landmarks(scan, QueryConfig(landmark_blacklist=()))


class TestCandidateFeatures:
    def test_nearest_chair(self):
        scan = three_chair_scene()
        landmarks = find_landmarks(scan)
        cands = candidate_features(1, scan, landmarks)
        kinds = {c.kind for c in cands}
        assert kinds == {FeatureKind.EXTREMITY_NEAREST}
        assert cands[0].text_fragment == "nearest to the table"

    def test_middle_chair_empty(self):
        scan = three_chair_scene()
        cands = candidate_features(3, scan, find_landmarks(scan))
        assert cands == []

    def test_distinctive_color(self):
        scan = three_chair_scene()
        cands = candidate_features(2, scan, find_landmarks(scan))
        kinds = {c.kind for c in cands}
        assert FeatureKind.DISTINCTIVE_COLOR in kinds
        color = next(c for c in cands if c.kind == FeatureKind.DISTINCTIVE_COLOR)
        assert color.text_fragment == "orange"

    def test_landmark_self(self):
        scan = three_chair_scene()
        cands = candidate_features(5, scan, find_landmarks(scan))
        assert any(c.kind == FeatureKind.LANDMARK_SELF for c in cands)

    def test_vertical_to_landmark(self):
        table = box(5, "table", 0, 0, 0.6, 0.4, 0.37)
        monitor = box(8, "monitor", 0, 0, 0.25, 0.05, 0.25, bottom=0.745)
        desk_a = box(11, "desk", 3, 0, 0.5, 0.4, 0.37)
        desk_b = box(12, "desk", 3, 2, 0.5, 0.4, 0.37)
        lamp = box(13, "lamp", 3, 0, 0.1, 0.1, 0.3, bottom=0.745)
        scan = scene("s", table, monitor, desk_a, desk_b, lamp)
        landmarks = find_landmarks(scan)
        cands = candidate_features(11, scan, landmarks)
        vertical = [c for c in cands if c.kind == FeatureKind.VERTICAL_TO_LANDMARK]
        assert vertical and vertical[0].text_fragment == "with the lamp on it"

    def test_uniqueness_brute_force(self, fixture_pairs_10):
        # every emitted predicate must match exactly one same-label instance
        for pair in fixture_pairs_10:
            scan = pair.curr
            landmarks = find_landmarks(scan)
            for obj in scan.objects:
                if obj.label == "wall":
                    continue
                for cand in candidate_features(obj.id, scan, landmarks):
                    assert _predicate_matches(cand, scan, landmarks) == {obj.id}, cand


def _predicate_matches(cand, scan, landmarks):
    """Re-evaluate a feature predicate over all same-label instances."""
    same = [o for o in scan.objects if o.label == cand.label]
    if cand.kind == FeatureKind.LANDMARK_SELF:
        return {o.id for o in same if o.id in landmarks}
    if cand.kind == FeatureKind.DISTINCTIVE_COLOR:
        return {o.id for o in same if cand.text_fragment in o.attributes.get("color", ())}
    if cand.kind in (FeatureKind.EXTREMITY_NEAREST, FeatureKind.EXTREMITY_FARTHEST):
        lm = scan.get(cand.landmark_id)

        def dist(o):
            return math.hypot(
                o.obb.center[0] - lm.obb.center[0], o.obb.center[1] - lm.obb.center[1]
            )

        ranked = sorted(same, key=dist)
        pick = ranked[0] if cand.kind == FeatureKind.EXTREMITY_NEAREST else ranked[-1]
        return {pick.id}
    if cand.kind == FeatureKind.VERTICAL_TO_LANDMARK:
        from situchange.geometry import vertical_relation

        matched = set()
        lm = scan.get(cand.landmark_id)
        for o in same:
            if o.id == lm.id:
                continue
            if cand.text_fragment.startswith("with the"):
                rel = vertical_relation(lm, o)
            else:
                rel = vertical_relation(o, lm)
            if rel is not None and rel.kind.value in cand.text_fragment or (
                cand.text_fragment.startswith("with the") and rel is not None
            ):
                matched.add(o.id)
        return matched
    raise AssertionError(f"unexpected kind {cand.kind}")


class TestResolveFeature:
    def test_landmark_priority(self):
        scan = three_chair_scene()
        cands = candidate_features(5, scan, find_landmarks(scan))
        resolved = resolve_feature(5, cands)
        assert resolved.kind == FeatureKind.LANDMARK_SELF

    def test_empty_needs_review(self):
        assert isinstance(resolve_feature(3, []), NeedsReview)

    def test_all_rejected_needs_review(self):
        scan = three_chair_scene()
        cands = candidate_features(1, scan, find_landmarks(scan))
        review = ReviewState("t", rejected={c.feature_key: "bad" for c in cands})
        assert isinstance(resolve_feature(1, cands, review), NeedsReview)

    def test_manual_wins(self):
        scan = three_chair_scene()
        cands = candidate_features(3, scan, find_landmarks(scan))
        review = ReviewState("t", manual_text="between the blue and the orange chair")
        resolved = resolve_feature(3, cands, review, label="chair")
        assert resolved.kind == FeatureKind.MANUAL
        assert resolved.label == "chair"
        assert resolved.text_fragment == "between the blue and the orange chair"

    def test_accept_selects_candidate(self):
        scan = three_chair_scene()
        cands = candidate_features(2, scan, find_landmarks(scan))
        target = next(c for c in cands if c.kind == FeatureKind.EXTREMITY_FARTHEST)
        review = ReviewState("t", accepted_key=target.feature_key)
        assert resolve_feature(2, cands, review) == target

    def test_rejection_is_monotone(self):
        scan = three_chair_scene()
        cands = candidate_features(2, scan, find_landmarks(scan))
        resolved = resolve_feature(2, cands)
        assert resolved.kind == FeatureKind.DISTINCTIVE_COLOR
        review = ReviewState("t", rejected={resolved.feature_key: "too subtle"})
        after = resolve_feature(2, cands, review)
        assert not isinstance(after, NeedsReview)
        assert after.kind == FeatureKind.EXTREMITY_FARTHEST
        # the rejected feature never comes back
        assert after.feature_key != resolved.feature_key

    def test_ambiguous_top_class_needs_review(self):
        a = FeatureCandidate(1, "chair", FeatureKind.EXTREMITY_NEAREST, "nearest to the table", Tense.PRESENT, 5, "table")
        b = FeatureCandidate(1, "chair", FeatureKind.EXTREMITY_FARTHEST, "farthest from the sofa", Tense.PRESENT, 6, "sofa")
        assert isinstance(resolve_feature(1, [a, b]), NeedsReview)


class TestRenderQuery:
    def test_landmark_table_direct_query(self):
        feature = FeatureCandidate(5, "table", FeatureKind.LANDMARK_SELF, "table", Tense.PRESENT)
        query = render_query(5, feature, Tense.PRESENT, QueryTask.DESCRIPTION, 1)
        assert query == "What change happened to the table?"

    def test_nightstand_farther_past_comparative(self):
        feature = FeatureCandidate(
            8, "nightstand", FeatureKind.EXTREMITY_FARTHEST, "farthest from the wardrobe",
            Tense.PAST, landmark_id=20, landmark_label="wardrobe",
        )
        query = render_query(8, feature, Tense.PAST, QueryTask.DESCRIPTION, 2)
        assert query == "What changes have been made to the nightstand that stood farther from the wardrobe?"

    def test_desk_nearest_present_superlative(self):
        feature = FeatureCandidate(
            5, "desk", FeatureKind.EXTREMITY_NEAREST, "nearest to the wardrobe",
            Tense.PRESENT, landmark_id=20, landmark_label="wardrobe",
        )
        query = render_query(5, feature, Tense.PRESENT, QueryTask.DESCRIPTION, 3)
        assert "desk that is nearest to the wardrobe" in query

    def test_manual_feature_text(self):
        feature = FeatureCandidate(
            3, "chair", FeatureKind.MANUAL, "between the blue and the orange chair", Tense.PRESENT
        )
        query = render_query(3, feature, Tense.PRESENT, QueryTask.DESCRIPTION, 3)
        assert "between the blue and the orange chair" in query

    def test_no_instance_ids_in_queries(self, fixture_pairs_10):
        for pair in fixture_pairs_10:
            rows, _ = resolve_pair_queries(pair)
            for row in rows:
                assert not re.search(r"_\d", row.query), row.query

    def test_paraphrase_variants_differ(self):
        feature = FeatureCandidate(5, "table", FeatureKind.LANDMARK_SELF, "table", Tense.PRESENT)
        queries = {
            render_query(5, feature, Tense.PRESENT, QueryTask.DESCRIPTION, 1, variant=v)
            for v in range(3)
        }
        assert len(queries) == 3

    def test_rearrangement_query(self):
        feature = FeatureCandidate(5, "table", FeatureKind.LANDMARK_SELF, "table", Tense.PRESENT)
        query = render_query(5, feature, Tense.PRESENT, QueryTask.REARRANGEMENT, 1)
        assert "the table" in query and query.endswith("?")


class TestPairQueries:
    def _pair(self):
        # chair_1 moves but stays the chair nearest to the table in both scans
        scan = three_chair_scene()
        chair_moved = box(1, "chair", 0.5, 2.0, 0.2, 0.2, 0.45, color="blue")
        curr_objs = [chair_moved if o.id == 1 else o for o in scan.objects]
        curr = scene("fig5b", *curr_objs)
        changes = [
            ChangeRecord(
                kind=ChangeKind.RIGID, object_id_prev=1, object_id_curr=1,
                rigid_transform=RigidMotion(0.0, (-0.3, 0.8, 0.0)),
            ),
            ChangeRecord(kind=ChangeKind.NONRIGID, object_id_prev=3, object_id_curr=3),
            ChangeRecord(
                kind=ChangeKind.RIGID, object_id_prev=5, object_id_curr=5,
                rigid_transform=RigidMotion(0.0, (0.0, 0.0, 0.0)),
            ),
        ]
        return pair_of(scan, curr, changes)

    def test_three_cases(self):
        rows, tasks = resolve_pair_queries(self._pair())
        by_id = {t.object_id: t for t in tasks}
        assert by_id[5].status == "auto_resolved"  # landmark table
        assert by_id[3].status == "pending"  # middle chair
        assert by_id[1].status == "auto_resolved"
        table_query = next(r for r in rows if r.object_id == 5 and r.task == "description")
        assert table_query.query == "What change happened to the table?"
        assert not any(r.object_id == 3 for r in rows)

    def test_rearrangement_only_for_rigid(self):
        rows, _ = resolve_pair_queries(self._pair())
        rearr_ids = {r.object_id for r in rows if r.task == "rearrangement"}
        assert rearr_ids == {1, 5}

    def test_removed_object_uses_past_tense(self):
        scan = three_chair_scene()
        curr = scene("b", *[o for o in scan.objects if o.id != 2])
        change = ChangeRecord(kind=ChangeKind.REMOVED, object_id_prev=2)
        rows, tasks = resolve_pair_queries(pair_of(scan, curr, [change]))
        task = next(t for t in tasks if t.object_id == 2)
        assert task.tense == Tense.PAST
        row = next(r for r in rows if r.object_id == 2)
        assert row.tense == "past"
