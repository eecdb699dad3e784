"""Domain model: validation invariants and canonical serialization."""

import dataclasses

import pytest
from hypothesis import given
from hypothesis import strategies as st

from storyribbons.model import (
    Chapter,
    EntityAppearance,
    EntityKind,
    Evidence,
    EvidenceVariant,
    Ratings,
    Scene,
    SchemaVersionError,
    SerializationError,
    canonical_json_bytes,
    deserialize,
    q4,
    serialize,
    slugify,
    validate,
)
from tests.conftest import tiny_story


def test_q4_quantizes_to_four_decimals():
    assert q4(0.123456) == 0.1235
    assert q4(1.0) == 1.0
    assert q4(-0.00004) == -0.0


def test_slugify_basic():
    assert slugify("Jane Bennet") == "jane-bennet"
    assert slugify("  Mr. Darcy!! ") == "mr-darcy"
    assert slugify("???") == "x"


def test_valid_story_has_no_violations():
    story, texts = tiny_story()
    assert validate(story, texts) == []


def test_validate_catches_scene_gap():
    story, texts = tiny_story()
    story.scenes[1].line_start = 4
    msgs = [str(x) for x in validate(story, texts)]
    assert any("gap or overlap" in m for m in msgs)


def test_validate_catches_partition_not_covering_chapter():
    story, texts = tiny_story()
    story.scenes[1].line_end = 4
    msgs = [str(x) for x in validate(story, texts)]
    assert any("must end at chapter length" in m for m in msgs)


def test_validate_catches_unresolved_location():
    story, texts = tiny_story()
    story.scenes[0].location_id = "nowhere"
    msgs = [str(x) for x in validate(story, texts)]
    assert any("does not resolve" in m for m in msgs)


def test_validate_catches_unverified_quote_text():
    story, texts = tiny_story()
    story.scenes[0].appearances[0].evidence = Evidence(
        EvidenceVariant.QUOTE, "this sentence is nowhere in the text", True
    )
    msgs = [str(x) for x in validate(story, texts)]
    assert any("not a substring" in m for m in msgs)


def test_validate_requires_quotes_marked_verified():
    story, texts = tiny_story()
    ev = story.scenes[0].appearances[0].evidence
    story.scenes[0].appearances[0].evidence = Evidence(EvidenceVariant.QUOTE, ev.text, False)
    msgs = [str(x) for x in validate(story, texts)]
    assert any("must be verified" in m for m in msgs)


def test_validate_rejects_verified_explanation():
    story, texts = tiny_story()
    story.characters[1].representative_quote = Evidence(
        EvidenceVariant.EXPLANATION, "some reasoning", True
    )
    msgs = [str(x) for x in validate(story, texts)]
    assert any("must not be marked verified" in m for m in msgs)


def test_validate_catches_alias_collision():
    story, texts = tiny_story()
    story.characters[1].aliases.append("Mara")
    msgs = [str(x) for x in validate(story, texts)]
    assert any("also maps to" in m for m in msgs)


def test_validate_catches_boundary_explanation_rules():
    story, texts = tiny_story()
    story.scenes[0].boundary_explanation = "should be empty"
    story.scenes[1].boundary_explanation = ""
    msgs = [str(x) for x in validate(story, texts)]
    assert any("must have an empty boundary explanation" in m for m in msgs)
    assert any("required for scene_index > 0" in m for m in msgs)


def test_validate_catches_count_mismatch():
    story, texts = tiny_story()
    story.chapter_summaries[0].character_counts["mara"] = 99
    msgs = [str(x) for x in validate(story, texts)]
    assert any("character_counts do not match" in m for m in msgs)


def test_validate_catches_interaction_without_co_occurrence():
    story, texts = tiny_story()
    story.chapter_summaries[0].interactions[0] = dataclasses.replace(
        story.chapter_summaries[0].interactions[0], a="gate", b="mara"
    )
    msgs = [str(x) for x in validate(story, texts)]
    assert any("never co-occurs" in m for m in msgs)


def test_validate_catches_bad_color_and_ratings():
    story, texts = tiny_story()
    story.characters[0].color = "red"
    story.scenes[0].ratings = Ratings(1.5, 0.0, 0.0)
    msgs = [str(x) for x in validate(story, texts)]
    assert any("is not #RRGGBB" in m for m in msgs)
    assert any("importance out of [0, 1]" in m for m in msgs)


def test_validate_catches_missing_scene_for_chapter():
    story, texts = tiny_story()
    story.scenes = [s for s in story.scenes if s.chapter_index != 1]
    msgs = [str(x) for x in validate(story, texts)]
    assert any("at least one scene" in m for m in msgs)


def test_validate_catches_duplicate_ids():
    story, texts = tiny_story()
    story.themes.append(dataclasses.replace(story.themes[0]))
    msgs = [str(x) for x in validate(story, texts)]
    assert any("duplicate entity id" in m for m in msgs)


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------


def test_serialize_is_byte_stable():
    story, _ = tiny_story()
    assert serialize(story) == serialize(tiny_story()[0])


def test_serialize_round_trips():
    story, _ = tiny_story()
    again = deserialize(serialize(story))
    assert again == story
    assert serialize(again) == serialize(story)


def test_canonical_json_shape():
    data = canonical_json_bytes({"b": 1, "a": [True, 0.5, "x"], "c": {}})
    text = data.decode("utf-8")
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert "0.5000" in text
    assert "true" in text


def test_canonical_json_escapes_nothing_needlessly():
    data = canonical_json_bytes({"q": "curly ’ stays"})
    assert "’".encode("utf-8") in data


def test_deserialize_rejects_bad_bytes():
    with pytest.raises(SerializationError) as err:
        deserialize(b'{"schema_version": 1, "meta": ')
    assert "line" in str(err.value)


def test_deserialize_rejects_wrong_schema_version():
    story, _ = tiny_story()
    data = serialize(story).replace(b'"schema_version": 1', b'"schema_version": 99')
    with pytest.raises(SchemaVersionError):
        deserialize(data)


def test_deserialize_rejects_missing_fields():
    with pytest.raises(SerializationError):
        deserialize(b'{"schema_version": 1, "meta": {"id": "x"}}')


def test_pipeline_log_is_outside_equality_and_bytes():
    story, _ = tiny_story()
    other, _ = tiny_story()
    other.pipeline_log.quotes_checked = 41
    other.pipeline_log.flag("step", "detail")
    assert story == other
    assert serialize(story) == serialize(other)
    assert b"pipeline_log" not in serialize(story)
    assert b"quotes_checked" not in serialize(story)


@given(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False))
def test_q4_floats_survive_canonical_round_trip(x):
    import json

    emitted = canonical_json_bytes({"v": q4(x)})
    assert json.loads(emitted)["v"] == q4(x)


@given(
    st.dictionaries(
        st.text(min_size=1, max_size=8),
        st.one_of(st.integers(-5, 5), st.booleans(), st.text(max_size=6), st.none()),
        max_size=6,
    )
)
def test_canonical_json_is_deterministic_and_parseable(obj):
    import json

    a = canonical_json_bytes(obj)
    b = canonical_json_bytes(dict(reversed(list(obj.items()))))
    assert a == b
    assert json.loads(a) == obj


def test_scene_lookup_helper():
    story, _ = tiny_story()
    assert len(story.scenes_of_chapter(0)) == 2
    assert len(story.scenes_of_chapter(1)) == 1
    assert story.scenes_of_chapter(7) == []


def test_chapter_line_count_property():
    assert Chapter(0, "t", 10, 25).line_count == 15
