"""Evaluation measures over finished stories.

Output statistics, quote accuracy, scene-length distributions, and the
five-way scene-boundary taxonomy. Everything here is recomputed from
StoryData; nothing is read back from the provenance log except where the
measure is explicitly about the log (quote accuracy).
"""

from __future__ import annotations

import hashlib
import json
import re
from importlib import resources

from .gateway import Gateway, GatewayError, LlmRequest
from .model import EvidenceVariant, ProvenanceLog, StoryData
from . import prompts

BOUNDARY_LABELS = [
    "location_change",
    "character_change",
    "focus_shift",
    "character_action",
    "time_change",
    "other",
]

STAT_COLUMNS = ["lines", "chapters", "scenes", "characters", "locations", "themes", "quotes"]

_keyword_patterns: list[tuple[str, list[re.Pattern]]] | None = None


def _load_keyword_patterns() -> list[tuple[str, list[re.Pattern]]]:
    """Priority-ordered (label, compiled phrase patterns), from the data file."""
    global _keyword_patterns
    if _keyword_patterns is None:
        raw = resources.files("storyribbons.data").joinpath("boundary_keywords.json").read_text("utf-8")
        data = json.loads(raw)
        _keyword_patterns = [
            (
                label,
                [re.compile(r"\b" + re.escape(phrase) + r"\b") for phrase in data["keywords"][label]],
            )
            for label in data["priority"]
        ]
    return _keyword_patterns


def story_stats(story: StoryData) -> dict[str, int]:
    quotes = sum(
        1
        for s in story.scenes
        for a in s.appearances
        if a.evidence.variant == EvidenceVariant.QUOTE
    )
    quotes += sum(1 for c in story.characters if c.representative_quote.variant == EvidenceVariant.QUOTE)
    quotes += sum(1 for l in story.locations if l.representative_quote.variant == EvidenceVariant.QUOTE)
    return {
        "lines": story.meta.line_count,
        "chapters": len(story.chapters),
        "scenes": len(story.scenes),
        "characters": len(story.characters),
        "locations": len(story.locations),
        "themes": len(story.themes),
        "quotes": quotes,
    }


def quote_accuracy(log: ProvenanceLog) -> float | None:
    """Fraction of checked quotes that survived verification; None if none checked."""
    if log.quotes_checked <= 0:
        return None
    return (log.quotes_checked - log.quotes_replaced) / log.quotes_checked


def scene_length_stats(story: StoryData) -> dict:
    lengths = [s.line_end - s.line_start for s in story.scenes]
    if not lengths:
        return {"mean": 0.0, "min": 0, "max": 0, "histogram": {}}
    histogram: dict[int, int] = {}
    for n in sorted(lengths):
        histogram[n] = histogram.get(n, 0) + 1
    return {
        "mean": round(sum(lengths) / len(lengths), 1),
        "min": min(lengths),
        "max": max(lengths),
        "histogram": histogram,
    }


def heuristic_label(explanation: str) -> str | None:
    """First keyword-list label (in priority order) with a phrase match."""
    text = explanation.casefold()
    for label, patterns in _load_keyword_patterns():
        if any(p.search(text) for p in patterns):
            return label
    return None


def classify_boundaries(
    explanations: list[str], gateway: Gateway | None = None
) -> dict[str, float]:
    """Distribution over the six boundary labels; sums to 1 for non-empty input.

    Keyword heuristics first; anything unresolved goes to the extraction model
    in one batch, or to "other" when no gateway is available.
    """
    if not explanations:
        return {}
    labels: list[str | None] = [heuristic_label(e) for e in explanations]
    unresolved = [i for i, label in enumerate(labels) if label is None]

    if unresolved and gateway is not None:
        batch = [explanations[i] for i in unresolved]
        digest = hashlib.sha256(json.dumps(batch, ensure_ascii=False).encode()).hexdigest()[:12]
        system, user = prompts.boundary_labels(batch)
        try:
            resp = gateway.complete(
                LlmRequest.chat(f"boundary_labels/{digest}", system, user, "boundary_labels")
            )
            answered = [str(x) for x in resp.parsed["labels"]]
        except GatewayError:
            answered = []
        for slot, label in zip(unresolved, answered):
            labels[slot] = label if label in BOUNDARY_LABELS else "other"
    for i in unresolved:
        if labels[i] is None:
            labels[i] = "other"

    total = len(labels)
    return {label: labels.count(label) / total for label in BOUNDARY_LABELS}


def stats_table(rows: list[tuple[str, dict[str, int]]]) -> str:
    """Fixed-width table: one row per story plus a header."""
    header = ["story"] + STAT_COLUMNS
    body = [[sid] + [str(stats[c]) for c in STAT_COLUMNS] for sid, stats in rows]
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(header, widths)),
        "  ".join("-" * w for w in widths),
    ]
    lines += ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in body]
    return "\n".join(lines)


__all__ = [
    "BOUNDARY_LABELS",
    "STAT_COLUMNS",
    "classify_boundaries",
    "heuristic_label",
    "quote_accuracy",
    "scene_length_stats",
    "stats_table",
    "story_stats",
]
