"""Prompt text for every pipeline and service call.

Builders return (system, user) message pairs. Wording here can evolve freely:
fixture playback is keyed by request tag, never by prompt content.
"""

from __future__ import annotations

import json

_JSON_ONLY = "Reply with a single JSON object and nothing else."

SCENE_DEFINITION = (
    "A scene is a contiguous block of lines delimited primarily by a change of "
    "story location. Start a new scene when the action moves to a different "
    "place; strong shifts of time or focus may also warrant one."
)


def format_numbered(numbered: list[tuple[int, str]]) -> str:
    return "\n".join(f"{no:>5}| {text}" for no, text in numbered)


def scene_split(chapter_title: str, numbered_text: str) -> tuple[str, str]:
    system = (
        "You split book chapters into scenes. "
        + SCENE_DEFINITION
        + " Line ranges are 1-based and end-exclusive, and every chapter line "
        "belongs to exactly one scene. For every scene after the first, explain "
        "why it started a new scene. "
        + _JSON_ONLY
    )
    user = (
        f"Chapter: {chapter_title}\n\n"
        "Split the chapter below into scenes. Return JSON of the form\n"
        '{"scenes": [{"title": str, "summary": str, "line_start": int, '
        '"line_end": int, "location": str, "boundary_explanation": str}]}\n'
        "where boundary_explanation is omitted for the first scene.\n\n"
        f"{numbered_text}"
    )
    return system, user


def scene_detail(kind: str, scene_title: str, scene_text: str) -> tuple[str, str]:
    """kind is "character" or "theme"; one call per scene per kind."""
    noun = "characters" if kind == "character" else "themes"
    system = (
        f"You analyze one scene of a story and list the {noun} present. "
        "For each, give sentiment in [-1, 1], a short emotion phrase, and a "
        "direct quote copied verbatim from the scene text (omit the quote if "
        "none fits). Also rate the scene itself: importance and conflict in "
        "[0, 1], sentiment in [-1, 1]. " + _JSON_ONLY
    )
    user = (
        f"Scene: {scene_title}\n\n"
        'Return JSON: {"ratings": {"importance": x, "conflict": x, "sentiment": x}, '
        '"appearances": [{"name": str, "sentiment": x, "emotion": str, "quote": str}]}\n\n'
        f"{scene_text}"
    )
    return system, user


def quote_explanation(entity_name: str, emotion: str, scene_text: str) -> tuple[str, str]:
    system = (
        "The quote proposed for an entity could not be found in the text. "
        "Write one brief sentence explaining the entity's emotions in this "
        "scene instead. " + _JSON_ONLY
    )
    user = (
        f"Entity: {entity_name}\nReported emotion: {emotion}\n\n"
        'Return JSON: {"explanation": str}\n\n'
        f"Scene text:\n{scene_text}"
    )
    return system, user


def dedup(kind: str, names: list[str]) -> tuple[str, str]:
    system = (
        f"You group duplicate {kind} names that refer to the same {kind}. "
        "Every input name must appear in exactly one group; do not add names "
        "of your own. " + _JSON_ONLY
    )
    user = (
        'Return JSON: {"groups": [[name, ...], ...]}\n\n'
        f"Names:\n{json.dumps(names, ensure_ascii=False, indent=2)}"
    )
    return system, user


def chapter_summary(chapter_title: str, scene_summaries: list[str]) -> tuple[str, str]:
    system = (
        "You summarize a chapter from its scene summaries and rate it: "
        "importance and conflict in [0, 1], sentiment in [-1, 1]. " + _JSON_ONLY
    )
    joined = "\n".join(f"- {s}" for s in scene_summaries)
    user = (
        f"Chapter: {chapter_title}\n\n"
        'Return JSON: {"summary": str, "ratings": {"importance": x, "conflict": x, "sentiment": x}}\n\n'
        f"Scene summaries:\n{joined}"
    )
    return system, user


def interaction(a_name: str, b_name: str, scene_summaries: list[str]) -> tuple[str, str]:
    system = (
        "You describe, in one or two sentences, how two characters interact "
        "within one chapter. " + _JSON_ONLY
    )
    joined = "\n".join(f"- {s}" for s in scene_summaries)
    user = (
        f"Characters: {a_name} and {b_name}\n\n"
        'Return JSON: {"summary": str}\n\n'
        f"Shared scenes:\n{joined}"
    )
    return system, user


def character_profile(name: str, aliases: list[str], mentions: list[str]) -> tuple[str, str]:
    system = (
        "You profile one character of a story: a semantic group label (e.g. a "
        "family or faction), a unique hex color with a short explanation tied "
        "to the character, and one representative quote about the character "
        "copied verbatim from the excerpts. " + _JSON_ONLY
    )
    joined = "\n".join(f"- {m}" for m in mentions)
    user = (
        f"Character: {name} (also known as: {', '.join(aliases)})\n\n"
        'Return JSON: {"group": str, "color": "#RRGGBB", "color_explanation": str, "quote": str}\n\n'
        f"Excerpts:\n{joined}"
    )
    return system, user


def location_profile(name: str, mentions: list[str]) -> tuple[str, str]:
    system = (
        "You pick one representative quote about a story location, copied "
        "verbatim from the excerpts. " + _JSON_ONLY
    )
    joined = "\n".join(f"- {m}" for m in mentions)
    user = (
        f"Location: {name}\n\n"
        'Return JSON: {"quote": str}\n\n'
        f"Excerpts:\n{joined}"
    )
    return system, user


def theme_colors(names: list[str]) -> tuple[str, str]:
    system = (
        "You assign each theme a distinct hex color that evokes it. " + _JSON_ONLY
    )
    user = (
        'Return JSON: {"colors": [{"name": str, "color": "#RRGGBB"}]}\n\n'
        f"Themes:\n{json.dumps(names, ensure_ascii=False, indent=2)}"
    )
    return system, user


def boundary_labels(explanations: list[str]) -> tuple[str, str]:
    system = (
        "You label reasons for starting a new scene with exactly one of: "
        "location_change, character_change, focus_shift, character_action, "
        "time_change, other. Return one label per input, in order. " + _JSON_ONLY
    )
    user = (
        'Return JSON: {"labels": [label, ...]}\n\n'
        f"Explanations:\n{json.dumps(explanations, ensure_ascii=False, indent=2)}"
    )
    return system, user


def ask_story(question: str, chapter_summaries: list[tuple[int, str]]) -> tuple[str, str]:
    system = (
        "Given a reader's question about a story, identify the most relevant "
        "chapter and explain why it answers the question. " + _JSON_ONLY
    )
    joined = "\n".join(f"[{i}] {s}" for i, s in chapter_summaries)
    user = (
        f"Question: {question}\n\n"
        'Return JSON: {"chapter_index": int, "explanation": str}\n\n'
        f"Chapter summaries:\n{joined}"
    )
    return system, user


def ask_text(question: str, scoped_text: str) -> tuple[str, str]:
    system = (
        "Answer the reader's question using only the story text provided. "
        + _JSON_ONLY
    )
    user = (
        f"Question: {question}\n\n"
        'Return JSON: {"answer": str}\n\n'
        f"Text:\n{scoped_text}"
    )
    return system, user


def rank_by_trait(trait: str, scenes: list[dict]) -> tuple[str, str]:
    system = (
        "For each scene, rank the listed entities by how strongly they express "
        "the given trait, strongest first, with a one-line justification each. "
        "Use every listed entity_id exactly once per scene and no others. "
        + _JSON_ONLY
    )
    user = (
        f"Trait: {trait}\n\n"
        'Return JSON: {"per_scene": [{"chapter_index": int, "scene_index": int, '
        '"ranked": [{"entity_id": str, "justification": str}]}]}\n\n'
        f"Scenes:\n{json.dumps(scenes, ensure_ascii=False, indent=2)}"
    )
    return system, user


def categorize_by_color(attribute: str, entities: list[dict]) -> tuple[str, str]:
    system = (
        "Invent a small set of discrete categories (at most 8) for the given "
        "attribute, give each a distinct hex color, and assign every entity to "
        "exactly one category with a short explanation. " + _JSON_ONLY
    )
    user = (
        f"Attribute: {attribute}\n\n"
        'Return JSON: {"categories": [{"label": str, "color": "#RRGGBB"}], '
        '"assignments": [{"entity_id": str, "label": str, "explanation": str}]}\n\n'
        f"Entities:\n{json.dumps(entities, ensure_ascii=False, indent=2)}"
    )
    return system, user
