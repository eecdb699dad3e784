"""Statistics, quote accuracy, and boundary classification."""

from __future__ import annotations

import re

from hypothesis import given, strategies as st

from storyribbons.analytics import (
    BOUNDARY_LABELS,
    classify_boundaries,
    heuristic_label,
    quote_accuracy,
    scene_length_stats,
    stats_table,
    story_stats,
)
from storyribbons.gateway import AuthError
from storyribbons.model import ProvenanceLog

from test_gateway import ScriptedProvider, make_gateway


class TagRecorder(ScriptedProvider):
    def __init__(self, script):
        super().__init__(script)
        self.tags: list[str] = []

    def send(self, request, messages):
        self.tags.append(request.tag)
        return super().send(request, messages)


def test_story_stats_counts_verified_quotes_only(keep_story):
    stats = story_stats(keep_story)
    assert stats == {
        "lines": 11,
        "chapters": 2,
        "scenes": 3,
        "characters": 2,
        "locations": 3,
        "themes": 1,
        "quotes": 5,  # 2 scene quotes + 1 character rep + 2 location reps
    }


def test_quote_accuracy_simple_cases():
    assert quote_accuracy(ProvenanceLog()) is None
    assert quote_accuracy(ProvenanceLog(quotes_checked=100, quotes_replaced=3)) == 0.97
    assert quote_accuracy(ProvenanceLog(quotes_checked=50, quotes_replaced=0)) == 1.0
    assert quote_accuracy(ProvenanceLog(quotes_checked=4, quotes_replaced=4)) == 0.0


@given(st.integers(min_value=1, max_value=10_000), st.data())
def test_quote_accuracy_monotone_in_replacements(checked, data):
    fewer = data.draw(st.integers(min_value=0, max_value=checked))
    more = data.draw(st.integers(min_value=fewer, max_value=checked))
    a = quote_accuracy(ProvenanceLog(quotes_checked=checked, quotes_replaced=fewer))
    b = quote_accuracy(ProvenanceLog(quotes_checked=checked, quotes_replaced=more))
    assert 0.0 <= b <= a <= 1.0


def test_scene_length_stats(keep_story):
    stats = scene_length_stats(keep_story)
    assert stats["mean"] == round(11 / 3, 1)
    assert stats["min"] == 2
    assert stats["max"] == 6
    assert stats["histogram"] == {2: 1, 3: 1, 6: 1}


def test_scene_length_stats_empty():
    import dataclasses

    from conftest import tiny_story

    story, _ = tiny_story()
    story = dataclasses.replace(story, scenes=[])
    assert scene_length_stats(story) == {"mean": 0.0, "min": 0, "max": 0, "histogram": {}}


# ---------------------------------------------------------------------------
# Boundary labels
# ---------------------------------------------------------------------------


def test_heuristic_label_reference_phrases():
    assert heuristic_label("The conversation shifts to their future political strategies") == "focus_shift"
    assert heuristic_label("K. returns to the office the next day") == "time_change"
    assert heuristic_label("Emma formulates a plan for Harriet's future.") == "character_action"


def test_heuristic_label_priority_and_casefold():
    # Time phrases outrank location phrases when both occur.
    assert heuristic_label("THE NEXT DAY they walk to the office.") == "time_change"
    assert heuristic_label("They walk to the office.") == "location_change"


def test_heuristic_label_whole_words_only():
    assert heuristic_label("He gave his returnship a thought.") is None


def test_heuristic_label_no_match():
    assert heuristic_label("Birds.") is None


def test_classify_empty():
    assert classify_boundaries([]) == {}


def test_classify_all_heuristic():
    dist = classify_boundaries([
        "The next day begins early.",
        "They go to the docks.",
        "Anna arrives with news.",
        "The focus turns elsewhere.",
    ])
    assert set(dist) == set(BOUNDARY_LABELS)
    assert abs(sum(dist.values()) - 1.0) < 1e-9
    assert dist["other"] == 0.0
    assert dist["time_change"] == 0.25


def test_classify_unresolved_without_gateway_buckets_other():
    dist = classify_boundaries(["Birds.", "The next day begins."])
    assert dist["other"] == 0.5
    assert dist["time_change"] == 0.5


def test_classify_unresolved_uses_one_batch_call():
    provider = TagRecorder(['{"labels": ["focus_shift", "other"]}'])
    gateway = make_gateway(provider)
    dist = classify_boundaries(["Birds.", "Stones.", "The next day begins."], gateway)
    assert gateway.call_count == 1
    assert dist["focus_shift"] == 1 / 3
    assert dist["other"] == 1 / 3
    assert dist["time_change"] == 1 / 3
    assert re.fullmatch(r"boundary_labels/[0-9a-f]{12}", provider.tags[0])


def test_classify_gateway_error_falls_back_to_other():
    provider = ScriptedProvider([AuthError("no key")])
    gateway = make_gateway(provider)
    dist = classify_boundaries(["Birds."], gateway)
    assert dist["other"] == 1.0


@given(st.lists(st.sampled_from([
    "The next day begins early.",
    "They go to the docks.",
    "Anna arrives with news.",
    "Birds.",
    "The conversation shifts to money.",
]), min_size=1, max_size=30))
def test_classify_distribution_sums_to_one(explanations):
    dist = classify_boundaries(explanations)
    assert set(dist) == set(BOUNDARY_LABELS)
    assert abs(sum(dist.values()) - 1.0) < 1e-9
    assert all(v >= 0 for v in dist.values())


def test_stats_table_shape(keep_story):
    table = stats_table([("tiny-keep", story_stats(keep_story))])
    lines = table.splitlines()
    assert len(lines) == 3
    assert lines[0].split() == ["story", "lines", "chapters", "scenes", "characters", "locations", "themes", "quotes"]
    assert lines[2].split() == ["tiny-keep", "11", "2", "3", "2", "3", "1", "5"]
    assert set(lines[1]) <= {"-", " "}
