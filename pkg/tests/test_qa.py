import json
import random
import re

import pytest

from situchange.parsing import NUMBER_WORDS, parse_clock_hour, parse_count, parse_distance_m
from situchange.qa import (
    DownsampleAxis,
    OCoT,
    QAItem,
    QAType,
    Rejected,
    Verified,
    dataset_stats,
    downsample_dataset,
    generate_qa,
    stats_table,
    verify_qa,
)
from situchange.situations import sample_situation_batch


@pytest.fixture(scope="module")
def generated(fixture_pairs_10):
    out = []
    for pair in fixture_pairs_10:
        situations = sample_situation_batch(pair.curr, seed=11, id_prefix=f"{pair.pair_id}:")
        for situ in situations:
            items = generate_qa(pair, situ, rng_seed=3)
            out.append((pair, situ, items))
    return out


def mutate_answer(item: QAItem, rng: random.Random) -> str:
    """Flip the decisive token of an answer."""
    answer = item.answer
    m = re.search(r"(\d+(?:\.\d+)?)", answer)
    if item.qa_type.numeric and m:
        value = float(m.group(1))
        return answer.replace(m.group(1), f"{value + 0.1:.1f}", 1)
    if item.qa_type in (QAType.EGO_DIRECTION_PRE, QAType.EGO_DIRECTION_POST):
        hour = parse_clock_hour(answer)
        return f"{(hour + 2) % 12 + 1} o'clock"
    if answer in ("Yes", "No"):
        return "No" if answer == "Yes" else "Yes"
    count = parse_count(answer.split()[0])
    if count is not None and item.qa_type == QAType.COUNTING:
        return NUMBER_WORDS[(count + 1) % 12].capitalize()
    words = answer.split()
    idx = rng.randrange(len(words))
    words[idx] = "flamingo"
    return " ".join(words)


class TestGeneration:
    def test_self_consistency(self, generated):
        total = 0
        for pair, situ, items in generated:
            for item in items:
                total += 1
                verdict = verify_qa(item, pair, situ)
                assert isinstance(verdict, Verified), (item, verdict)
        assert total > 500

    def test_all_types_covered(self, generated):
        seen = {item.qa_type for _, _, items in generated for item in items}
        assert seen == set(QAType)

    def test_answers_within_five_words(self, generated):
        for _, _, items in generated:
            for item in items:
                if not item.qa_type.numeric:
                    assert len(item.answer.split()) <= 5

    def test_deterministic(self, fixture_pair):
        batch = sample_situation_batch(fixture_pair.curr, seed=4, id_prefix="d:")
        a = generate_qa(fixture_pair, batch[0], rng_seed=9)
        b = generate_qa(fixture_pair, batch[0], rng_seed=9)
        assert a == b

    def test_ocot_ids_exist(self, generated):
        for pair, _, items in generated:
            known = {o.id for o in pair.prev.objects} | {o.id for o in pair.curr.objects}
            for item in items:
                assert set(item.ocot.object_ids) <= known

    def test_type_tags_match(self, generated):
        for _, _, items in generated:
            for item in items:
                assert item.ocot.type_tag == item.qa_type.type_tag

    def test_round_trip_dict(self, generated):
        pair, situ, items = generated[0]
        for item in items:
            assert QAItem.from_dict(json.loads(json.dumps(item.to_dict()))) == item


class TestVerification:
    def test_corruption_sensitivity(self, generated):
        rng = random.Random(0)
        flat = [(pair, situ, item) for pair, situ, items in generated for item in items]
        mutated = 0
        for pair, situ, item in flat:
            if mutated >= 300:
                break
            bad_answer = mutate_answer(item, rng)
            if bad_answer == item.answer:
                continue
            mutated += 1
            bad = QAItem(
                item_id=item.item_id,
                scan_pair_id=item.scan_pair_id,
                situation_id=item.situation_id,
                qa_type=item.qa_type,
                question=item.question,
                answer=bad_answer,
                ocot=item.ocot,
            )
            assert isinstance(verify_qa(bad, pair, situ), Rejected), bad
        assert mutated >= 300

    def test_question_text_never_consulted(self, generated):
        # provenance-only recomputation: scrambling the question changes nothing
        pair, situ, items = generated[0]
        for item in items:
            scrambled = QAItem(
                item_id=item.item_id,
                scan_pair_id=item.scan_pair_id,
                situation_id=item.situation_id,
                qa_type=item.qa_type,
                question="zzz scrambled zzz",
                answer=item.answer,
                ocot=item.ocot,
            )
            assert isinstance(verify_qa(scrambled, pair, situ), Verified)

    def test_unknown_type_tag_raises(self, generated):
        pair, situ, items = generated[0]
        item = items[0]
        bad = QAItem(
            item_id=item.item_id,
            scan_pair_id=item.scan_pair_id,
            situation_id=item.situation_id,
            qa_type=item.qa_type,
            question=item.question,
            answer=item.answer,
            ocot=OCoT(item.ocot.object_ids, "Bogus Tag", item.ocot.params),
        )
        with pytest.raises(ValueError):
            verify_qa(bad, pair, situ)

    def test_missing_object_indeterminate(self, generated):
        pair, situ, items = generated[0]
        item = next(i for i in items if i.qa_type.value.startswith("ego_"))
        bad = QAItem(
            item_id=item.item_id,
            scan_pair_id=item.scan_pair_id,
            situation_id=item.situation_id,
            qa_type=item.qa_type,
            question=item.question,
            answer=item.answer,
            ocot=OCoT((9999,), item.ocot.type_tag, item.ocot.params),
        )
        verdict = verify_qa(bad, pair, situ)
        assert isinstance(verdict, Rejected) and "indeterminate" in verdict.reason


@pytest.fixture(scope="module")
def flat_items(generated):
    return [item for _, _, items in generated for item in items]


class TestDownsampling:
    def test_fraction_one_identity(self, flat_items):
        for axis in DownsampleAxis:
            assert downsample_dataset(flat_items, axis, 1.0, seed=3) == list(flat_items)

    def test_sample_axis_count(self, flat_items):
        kept = downsample_dataset(flat_items, "sample", 0.5, seed=1)
        assert len(kept) == int(len(flat_items) * 0.5)

    def test_scan_pair_closure(self, flat_items):
        kept = downsample_dataset(flat_items, "scan_pair", 0.5, seed=2)
        all_pairs = {i.scan_pair_id for i in flat_items}
        surviving = {i.scan_pair_id for i in kept}
        assert len(surviving) == int(len(all_pairs) * 0.5)
        # closure: all items of surviving pairs remain
        expected = [i for i in flat_items if i.scan_pair_id in surviving]
        assert kept == expected

    def test_situation_closure(self, flat_items):
        kept = downsample_dataset(flat_items, "situation", 0.4, seed=5)
        surviving = {(i.scan_pair_id, i.situation_id) for i in kept}
        for item in flat_items:
            key = (item.scan_pair_id, item.situation_id)
            in_kept = item in kept
            assert in_kept == (key in surviving)

    def test_order_preserved(self, flat_items):
        kept = downsample_dataset(flat_items, "sample", 0.3, seed=7)
        positions = [flat_items.index(i) for i in kept]
        assert positions == sorted(positions)

    def test_deterministic(self, flat_items):
        a = downsample_dataset(flat_items, "situation", 0.5, seed=9)
        b = downsample_dataset(flat_items, "situation", 0.5, seed=9)
        assert a == b

    def test_empty_result_refused(self, flat_items):
        with pytest.raises(ValueError):
            downsample_dataset(flat_items[:3], "scan_pair", 0.05, seed=0)

    def test_bad_fraction(self, flat_items):
        with pytest.raises(ValueError):
            downsample_dataset(flat_items, "sample", 0.0, seed=0)
        with pytest.raises(ValueError):
            downsample_dataset(flat_items, "sample", 1.5, seed=0)


def _item(qa_type, pair_id="p", situ="s", question="q?", answer="One"):
    return QAItem(
        item_id=f"{pair_id}|{situ}|{qa_type.value}",
        scan_pair_id=pair_id,
        situation_id=situ,
        qa_type=qa_type,
        question=question,
        answer=answer,
        ocot=OCoT((), qa_type.type_tag),
    )


class TestStats:
    def test_hand_counted_shares(self):
        items = [
            _item(QAType.COUNTING, situ="a"),
            _item(QAType.COUNTING, situ="b"),
            _item(QAType.WARNING, situ="a", answer="No"),
            _item(QAType.ALLO_DISPLACEMENT, situ="b", answer="1.6 m"),
        ]
        stats = dataset_stats(items)
        assert stats["per_type_shares"]["counting"] == 50.0
        assert stats["group_shares"] == {"egocentric": 25.0, "allocentric": 25.0, "general": 50.0}
        assert stats["n_items"] == 4
        assert stats["n_situations"] == 2

    def test_group_shares_sum_to_100(self, flat_items):
        stats = dataset_stats(flat_items)
        assert sum(stats["group_shares"].values()) == pytest.approx(100.0, abs=0.05)

    def test_word_lengths(self):
        items = [_item(QAType.EXISTENCE, question="Is there any sofa in the room?", answer="No")]
        stats = dataset_stats(items, description_queries=["What change happened to the table?"])
        assert stats["word_lengths"]["qa_question"]["mean"] == 7.0
        assert stats["word_lengths"]["qa_answer"]["mean"] == 1.0
        assert stats["word_lengths"]["description_query"]["count"] == 1

    def test_table_renders(self, flat_items):
        text = stats_table(dataset_stats(flat_items))
        assert "counting" in text and "group" in text


class TestParsing:
    def test_distances(self):
        assert parse_distance_m("1.6 m") == 1.6
        assert parse_distance_m("1.6m") == 1.6
        assert parse_distance_m("160 cm") == pytest.approx(1.6)
        assert parse_distance_m("about 2 meters away") == 2.0
        assert parse_distance_m("no number here") is None

    def test_clock(self):
        assert parse_clock_hour("11 o'clock") == 11
        assert parse_clock_hour("eleven o'clock") == 11
        assert parse_clock_hour("It is at your 3 o'clock") == 3
        assert parse_clock_hour("13 o'clock") is None

    def test_count(self):
        assert parse_count("One") == 1
        assert parse_count("two") == 2
        assert parse_count("7") == 7
