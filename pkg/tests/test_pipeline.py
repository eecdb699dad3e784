"""Pipeline behavior: partition repair, draft parsing, and failure fallbacks."""

from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from storyribbons.gateway import Gateway
from storyribbons.model import (
    Chapter,
    EntityKind,
    EvidenceVariant,
    ProvenanceLog,
    validate,
)
from storyribbons.pipeline import (
    PipelineError,
    fallback_draft,
    parse_scene_drafts,
    repair_partition,
    run_pipeline,
)

from conftest import write_fixture, write_story_dir

# ---------------------------------------------------------------------------
# repair_partition
# ---------------------------------------------------------------------------


def test_repair_clean_partition_untouched():
    ranges, kept, repairs = repair_partition([(1, 5), (5, 11)], 10)
    assert ranges == [(1, 5), (5, 11)]
    assert kept == [0, 1]
    assert repairs == []


def test_repair_gap_and_short_tail():
    ranges, kept, repairs = repair_partition([(1, 10), (12, 20)], 20)
    assert ranges == [(1, 12), (12, 21)]
    assert kept == [0, 1]
    assert len(repairs) == 2


def test_repair_head_forced_to_one():
    ranges, kept, repairs = repair_partition([(3, 11)], 10)
    assert ranges == [(1, 11)]
    assert kept == [0]
    assert any("chapter head" in note for note in repairs)


def test_repair_overlap_favors_earlier_scene():
    ranges, kept, _ = repair_partition([(1, 6), (4, 11)], 10)
    assert ranges == [(1, 6), (6, 11)]
    assert kept == [0, 1]


def test_repair_drops_fully_covered_range():
    ranges, kept, repairs = repair_partition([(1, 11), (4, 9)], 10)
    assert ranges == [(1, 11)]
    assert kept == [0]
    assert any("fully covered" in note for note in repairs)


def test_repair_drops_empty_and_closes_gap():
    ranges, kept, _ = repair_partition([(1, 5), (7, 7), (7, 11)], 10)
    assert ranges == [(1, 7), (7, 11)]
    assert kept == [0, 2]


def test_repair_clips_out_of_bounds():
    ranges, kept, repairs = repair_partition([(0, 25)], 10)
    assert ranges == [(1, 11)]
    assert kept == [0]
    assert any("clipped" in note for note in repairs)


def test_repair_nothing_salvageable():
    ranges, kept, repairs = repair_partition([(5, 5), (9, 2)], 10)
    assert ranges == []
    assert kept == []
    assert repairs


@given(
    st.integers(min_value=1, max_value=400).flatmap(
        lambda n: st.tuples(
            st.just(n),
            st.lists(
                st.tuples(
                    st.integers(min_value=-5, max_value=n + 6),
                    st.integers(min_value=-5, max_value=n + 6),
                ),
                min_size=1,
                max_size=12,
            ),
        )
    )
)
def test_repair_always_partitions(case):
    line_count, proposed = case
    ranges, kept, _ = repair_partition(proposed, line_count)
    assert len(ranges) == len(kept)
    assert kept == sorted(kept) and len(set(kept)) == len(kept)
    if not ranges:
        return
    assert ranges[0][0] == 1
    assert ranges[-1][1] == line_count + 1
    for (s, e), (s2, _) in zip(ranges, ranges[1:]):
        assert e == s2
    for s, e in ranges:
        assert 1 <= s < e <= line_count + 1


# ---------------------------------------------------------------------------
# parse_scene_drafts
# ---------------------------------------------------------------------------


def _scene(title, start, end, boundary=None, location="Dock"):
    item = {
        "title": title,
        "summary": f"{title} happens.",
        "line_start": start,
        "line_end": end,
        "location": location,
    }
    if boundary is not None:
        item["boundary_explanation"] = boundary
    return item


def test_parse_zero_scenes_falls_back():
    log = ProvenanceLog()
    chapter = Chapter(2, "Storm", 0, 40)
    drafts = parse_scene_drafts(chapter, {"scenes": []}, log)
    assert len(drafts) == 1
    assert (drafts[0].line_start, drafts[0].line_end) == (1, 41)
    assert drafts[0].title == "Storm"
    assert drafts[0].location_name == "Unknown"
    assert any("zero scenes" in e["detail"] for e in log.events)


def test_fallback_draft_untitled_chapter():
    assert fallback_draft(Chapter(0, "", 0, 9)).title == "Chapter"


def test_parse_first_scene_explanation_cleared():
    log = ProvenanceLog()
    chapter = Chapter(0, "One", 0, 10)
    drafts = parse_scene_drafts(
        chapter,
        {"scenes": [_scene("A", 1, 6, boundary="should vanish"), _scene("B", 6, 11, boundary="B starts")]},
        log,
    )
    assert drafts[0].boundary_explanation == ""
    assert drafts[1].boundary_explanation == "B starts"
    assert log.events == []


def test_parse_missing_later_explanation_placeholder():
    log = ProvenanceLog()
    chapter = Chapter(1, "Two", 0, 10)
    drafts = parse_scene_drafts(chapter, {"scenes": [_scene("A", 1, 6), _scene("B", 6, 11)]}, log)
    assert drafts[1].boundary_explanation == "(no boundary explanation provided)"
    assert any("missing boundary explanation" in e["detail"] for e in log.events)


def test_parse_blank_location_becomes_unknown():
    log = ProvenanceLog()
    drafts = parse_scene_drafts(
        Chapter(0, "One", 0, 5), {"scenes": [_scene("A", 1, 6, location="  ")]}, log
    )
    assert drafts[0].location_name == "Unknown"


def test_parse_repairs_are_flagged_per_chapter():
    log = ProvenanceLog()
    parse_scene_drafts(Chapter(3, "Four", 0, 20), {"scenes": [_scene("A", 1, 10), _scene("B", 12, 20)]}, log)
    details = [e["detail"] for e in log.events]
    assert any(d.startswith("ch3:") and "gap" in d for d in details)
    assert any(d.startswith("ch3:") and "chapter tail" in d for d in details)


# ---------------------------------------------------------------------------
# Ad-hoc fixture story for end-to-end failure paths
# ---------------------------------------------------------------------------

CH0 = (
    "CHAPTER ONE\n"
    "Rega walked the sea road before the bell.\n"
    '"The tide keeps its own books," said Rega.\n'
    "Salt dried on the rail in thin maps.\n"
    "Ved waited by the boathouse with a coil of rope.\n"
    "The gulls argued over scraps of net."
)
CH1 = (
    "CHAPTER TWO\n"
    "Ved rowed out at first light.\n"
    '"Row until the bell buoy," said Ved.\n'
    "Rega watched from the pier rail.\n"
    "The fog closed over the water."
)

STORY_ID = "sea-road"


def build_clean_fixtures(root: Path) -> None:
    fx = root / STORY_ID
    write_fixture(fx, "scene_split/ch0", {"scenes": [
        {"title": "Sea road", "summary": "Rega walks out early.", "line_start": 1,
         "line_end": 4, "location": "sea road"},
        {"title": "Boathouse", "summary": "Ved waits with rope.", "line_start": 4,
         "line_end": 7, "location": "boathouse",
         "boundary_explanation": "Ved appears by the boathouse."},
    ]})
    write_fixture(fx, "scene_split/ch1", {"scenes": [
        {"title": "First light", "summary": "Ved rows out; Rega watches.", "line_start": 1,
         "line_end": 6, "location": "the pier"},
    ]})
    ratings = {"importance": 0.5, "conflict": 0.25, "sentiment": 0.1}
    write_fixture(fx, "scene_detail/ch0/s0/character", {"ratings": ratings, "appearances": [
        {"name": "Rega", "sentiment": 0.2, "emotion": "calm",
         "quote": '"The tide keeps its own books," said Rega.'},
    ]})
    write_fixture(fx, "scene_detail/ch0/s0/theme", {"ratings": ratings, "appearances": [
        {"name": "Tide", "sentiment": 0.1},
    ]})
    write_fixture(fx, "scene_detail/ch0/s1/character", {"ratings": ratings, "appearances": [
        {"name": "Ved", "sentiment": 0.0, "emotion": "patient",
         "quote": "Ved waited by the boathouse with a coil of rope."},
    ]})
    write_fixture(fx, "scene_detail/ch0/s1/theme", {"ratings": ratings, "appearances": []})
    write_fixture(fx, "scene_detail/ch1/s0/character", {"ratings": ratings, "appearances": [
        {"name": "Ved", "sentiment": 0.3, "emotion": "driven",
         "quote": '"Row until the bell buoy," said Ved.'},
        {"name": "Rega", "sentiment": -0.1, "emotion": "watchful"},
    ]})
    write_fixture(fx, "scene_detail/ch1/s0/theme", {"ratings": ratings, "appearances": [
        {"name": "tide", "sentiment": 0.3, "emotion": "n/a",
         "quote": "The fog closed over the water."},
    ]})
    write_fixture(fx, "quote_fix/ch0/s0/a1", {"explanation": "The tide governs the morning routine."})
    write_fixture(fx, "quote_fix/ch1/s0/a1", {"explanation": "Rega keeps vigil without a word."})
    write_fixture(fx, "entity_dedup/characters", {"groups": [["Rega"], ["Ved"]]})
    write_fixture(fx, "entity_dedup/locations", {"groups": [["sea road"], ["boathouse"], ["the pier"]]})
    write_fixture(fx, "group_dedup", {"groups": [["Crew"]]})
    write_fixture(fx, "chapter_summary/ch0", {"summary": "Rega opens the day on the sea road.", "ratings": ratings})
    write_fixture(fx, "chapter_summary/ch1", {"summary": "Ved rows into the fog.", "ratings": ratings})
    write_fixture(fx, "interaction/ch1/rega--ved", {"summary": "Rega watches Ved row out."})
    write_fixture(fx, "char_profile/rega", {
        "group": "Crew", "color": "#AA3355", "color_explanation": "Red for the early riser.",
        "quote": '"The tide keeps its own books," said Rega.'})
    write_fixture(fx, "char_profile/ved", {
        "group": "Crew", "color": "#3355AA", "color_explanation": "Blue for the rower.",
        "quote": '"Row until the bell buoy," said Ved.'})
    write_fixture(fx, "loc_profile/sea-road", {"quote": "Salt dried on the rail in thin maps."})
    write_fixture(fx, "loc_profile/boathouse", {"quote": "Ved waited by the boathouse with a coil of rope."})
    write_fixture(fx, "loc_profile/the-pier", {"quote": "Rega watched from the pier rail."})
    write_fixture(fx, "theme_colors", {"colors": [{"name": "Tide", "color": "#336699"}]})


@pytest.fixture()
def adhoc(tmp_path):
    story_dir = write_story_dir(tmp_path, STORY_ID, [CH0, CH1])
    fixtures = tmp_path / "fixtures"
    build_clean_fixtures(fixtures)
    return story_dir, fixtures


def gw(fixtures: Path) -> Gateway:
    return Gateway.fixture(fixtures, story_id=STORY_ID)


def test_clean_run_assembles_valid_story(adhoc, tmp_path):
    story_dir, fixtures = adhoc
    story = run_pipeline(story_dir, gw(fixtures), target="both", write=True)

    texts = {0: CH0, 1: CH1}
    assert validate(story, texts) == []
    assert [c.entity_id for c in story.characters] == ["rega", "ved"]
    assert [l.entity_id for l in story.locations] == ["sea-road", "boathouse", "the-pier"]
    assert [t.name for t in story.themes] == ["Tide"]  # first spelling wins over "tide"
    assert len(story.scenes) == 3
    # Persisted ranges are 0-based and chapter-local.
    assert (story.scenes[0].line_start, story.scenes[0].line_end) == (0, 3)
    assert (story.scenes[1].line_start, story.scenes[1].line_end) == (3, 6)
    assert (story.scenes[2].line_start, story.scenes[2].line_end) == (0, 5)

    log = story.pipeline_log
    # 4 scene candidates + 2 character reps + 3 location reps were present.
    assert log.quotes_checked == 9
    assert log.quotes_replaced == 0
    assert log.loop_runs == {"quote_verification": 1, "entity_dedup": 1, "group_dedup": 1}
    assert (story_dir / "story.json").exists()
    assert (story_dir / "provenance.json").exists()

    absent = story.scenes[0].appearances[1]
    assert absent.kind == EntityKind.THEME
    assert absent.evidence.variant == EvidenceVariant.EXPLANATION
    assert absent.evidence.text == "The tide governs the morning routine."


def test_scene_split_failure_needs_allow_partial(adhoc):
    story_dir, fixtures = adhoc
    (fixtures / STORY_ID / "scene_split" / "ch1.json").unlink()
    with pytest.raises(PipelineError) as err:
        run_pipeline(story_dir, gw(fixtures), write=False)
    assert any("scene_split/ch1" in f for f in err.value.failures)


def test_scene_split_failure_fallback_with_allow_partial(adhoc):
    story_dir, fixtures = adhoc
    (fixtures / STORY_ID / "scene_split" / "ch1.json").unlink()
    story = run_pipeline(story_dir, gw(fixtures), allow_partial=True, write=False)
    assert validate(story, {0: CH0, 1: CH1}) == []
    ch1_scenes = [s for s in story.scenes if s.chapter_index == 1]
    assert len(ch1_scenes) == 1
    assert (ch1_scenes[0].line_start, ch1_scenes[0].line_end) == (0, 5)
    details = [e["detail"] for e in story.pipeline_log.events]
    assert any("fallback single scene" in d for d in details)
    assert any(d.startswith("partial result: 1 failed steps") for d in details)


def test_detail_failure_drops_appearances_with_allow_partial(adhoc):
    story_dir, fixtures = adhoc
    (fixtures / STORY_ID / "scene_detail" / "ch0" / "s0" / "character.json").unlink()
    with pytest.raises(PipelineError):
        run_pipeline(story_dir, gw(fixtures), write=False)
    story = run_pipeline(story_dir, gw(fixtures), allow_partial=True, write=False)
    assert validate(story, {0: CH0, 1: CH1}) == []
    first = story.scenes[0]
    assert [a.kind for a in first.appearances] == [EntityKind.THEME]
    assert first.ratings.importance == 0.0
    assert story.pipeline_log.quotes_checked == 8


def test_dedup_failure_uses_identity_fallback(adhoc):
    story_dir, fixtures = adhoc
    (fixtures / STORY_ID / "entity_dedup" / "characters.json").unlink()
    story = run_pipeline(story_dir, gw(fixtures), write=False)
    assert [c.canonical_name for c in story.characters] == ["Rega", "Ved"]
    details = [e["detail"] for e in story.pipeline_log.events]
    assert any("identity fallback" in d for d in details)


def test_quote_fix_failure_keeps_emotion_phrase(adhoc):
    story_dir, fixtures = adhoc
    (fixtures / STORY_ID / "quote_fix" / "ch1" / "s0" / "a1.json").unlink()
    story = run_pipeline(story_dir, gw(fixtures), write=False)
    rega = [a for s in story.scenes if s.chapter_index == 1 for a in s.appearances if a.entity_id == "rega"]
    assert rega[0].evidence.variant == EvidenceVariant.EXPLANATION
    assert rega[0].evidence.text == "watchful"
    assert not rega[0].evidence.verified


def test_interaction_failure_degrades_without_error(adhoc):
    story_dir, fixtures = adhoc
    (fixtures / STORY_ID / "interaction" / "ch1" / "rega--ved.json").unlink()
    story = run_pipeline(story_dir, gw(fixtures), write=False)
    inter = story.chapter_summaries[1].interactions
    assert [(i.a, i.b, i.summary) for i in inter] == [("rega", "ved", "")]
    assert any("interaction rega--ved unavailable" in e["detail"] for e in story.pipeline_log.events)


def test_chapter_summary_failure_needs_allow_partial(adhoc):
    story_dir, fixtures = adhoc
    (fixtures / STORY_ID / "chapter_summary" / "ch0.json").unlink()
    with pytest.raises(PipelineError):
        run_pipeline(story_dir, gw(fixtures), write=False)
    story = run_pipeline(story_dir, gw(fixtures), allow_partial=True, write=False)
    assert story.chapter_summaries[0].summary == ""
    assert story.chapter_summaries[0].ratings.importance == 0.0


def test_missing_char_profile_degrades_entry(adhoc):
    story_dir, fixtures = adhoc
    (fixtures / STORY_ID / "char_profile" / "ved.json").unlink()
    (fixtures / STORY_ID / "quote_fix" / "character").mkdir(parents=True, exist_ok=True)
    write_fixture(fixtures / STORY_ID, "quote_fix/character/ved", {"explanation": "Ved is all motion, no talk."})
    story = run_pipeline(story_dir, gw(fixtures), write=False)
    ved = [c for c in story.characters if c.entity_id == "ved"][0]
    assert ved.color == "#808080"
    assert ved.representative_quote.variant == EvidenceVariant.EXPLANATION
    assert ved.representative_quote.text == "Ved is all motion, no talk."
    labels = {g.group_id: g.label for g in story.groups}
    assert labels[ved.group_id] == "Ungrouped"
    # Absent rep candidate must not touch the counters.
    assert story.pipeline_log.quotes_checked == 8


def test_missing_profile_and_fix_uses_placeholder(adhoc):
    story_dir, fixtures = adhoc
    (fixtures / STORY_ID / "char_profile" / "ved.json").unlink()
    story = run_pipeline(story_dir, gw(fixtures), write=False)
    ved = [c for c in story.characters if c.entity_id == "ved"][0]
    assert ved.representative_quote.text == "No verified quote found for Ved."


def test_theme_palette_failure_falls_back_distinct(adhoc):
    story_dir, fixtures = adhoc
    (fixtures / STORY_ID / "theme_colors.json").unlink()
    story = run_pipeline(story_dir, gw(fixtures), write=False)
    assert story.themes[0].color == "#808080"


def test_fabricated_candidate_is_replaced(adhoc):
    story_dir, fixtures = adhoc
    detail = fixtures / STORY_ID / "scene_detail" / "ch0" / "s0" / "character.json"
    import json as _json

    obj = _json.loads(detail.read_text())
    obj["appearances"][0]["quote"] = '"Nothing of the kind was ever said," said Rega.'
    detail.write_text(_json.dumps(obj))
    write_fixture(fixtures / STORY_ID, "quote_fix/ch0/s0/a0", {"explanation": "Rega sets the tone without speaking."})
    story = run_pipeline(story_dir, gw(fixtures), write=False)
    log = story.pipeline_log
    assert log.quotes_checked == 9
    assert log.quotes_replaced == 1
    rega = story.scenes[0].appearances[0]
    assert rega.evidence.variant == EvidenceVariant.EXPLANATION
    assert any("failed the exact-match check" in e["detail"] for e in log.events)


def test_line_count_mismatch_fails_fast(adhoc):
    story_dir, fixtures = adhoc
    import json as _json

    index_path = story_dir / "chapters.json"
    obj = _json.loads(index_path.read_text())
    obj["chapters"][0]["line_end"] += 2
    index_path.write_text(_json.dumps(obj))
    with pytest.raises(PipelineError, match="lines"):
        run_pipeline(story_dir, gw(fixtures), write=False)


def test_character_only_target_skips_themes(adhoc):
    story_dir, fixtures = adhoc
    story = run_pipeline(story_dir, gw(fixtures), target="characters", write=False)
    assert story.themes == []
    assert all(a.kind == EntityKind.CHARACTER for s in story.scenes for a in s.appearances)


def test_unknown_target_rejected(adhoc):
    story_dir, fixtures = adhoc
    with pytest.raises(ValueError, match="target"):
        run_pipeline(story_dir, gw(fixtures), target="plot", write=False)


def test_bundled_sample_runs_without_writing(repo_data_dir, repo_fixtures_dir):
    story_dir = repo_data_dir / "metamorphosis-sample"
    before = (story_dir / "story.json").read_bytes()
    story = run_pipeline(
        story_dir,
        Gateway.fixture(repo_fixtures_dir, story_id="metamorphosis-sample"),
        write=False,
    )
    assert validate(story) == []
    assert (story_dir / "story.json").read_bytes() == before
