"""Canonical domain types and the serialized story-data schema.

Everything the pipeline produces, the analytics read, and the service ships
lives in one `StoryData` artifact. Serialization is canonical (sorted keys,
4-decimal floats) so golden-file comparisons are byte-stable across runs and
platforms.
"""

from __future__ import annotations

import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum

SCHEMA_VERSION = 1

_ID_RE = re.compile(r"[a-z0-9-]+")
_COLOR_RE = re.compile(r"#[0-9a-fA-F]{6}")


class Genre(str, Enum):
    NOVEL = "novel"
    PLAY = "play"
    POEM = "poem"
    NONFICTION = "nonfiction"
    LLM_GENERATED = "llm_generated"


class EntityKind(str, Enum):
    CHARACTER = "character"
    THEME = "theme"


class EvidenceVariant(str, Enum):
    QUOTE = "quote"
    EXPLANATION = "explanation"


def q4(x: float) -> float:
    """Quantize to 4 decimal places, the precision of the persisted format."""
    return round(float(x), 4)


def slugify(name: str) -> str:
    """Lowercase slug usable as an entity or story id."""
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return slug or "x"


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass
class StoryMeta:
    id: str
    title: str
    author: str
    genre: Genre
    source: str
    line_count: int


@dataclass
class Chapter:
    """Story-global, 0-based, end-exclusive line range."""

    index: int
    title: str
    line_start: int
    line_end: int

    @property
    def line_count(self) -> int:
        return self.line_end - self.line_start


@dataclass
class Ratings:
    importance: float
    conflict: float
    sentiment: float


@dataclass
class Evidence:
    variant: EvidenceVariant
    text: str
    verified: bool


@dataclass
class EntityAppearance:
    entity_id: str
    kind: EntityKind
    sentiment: float
    emotion: str
    evidence: Evidence


@dataclass
class Scene:
    """Chapter-local, 0-based, end-exclusive line range within its chapter."""

    chapter_index: int
    scene_index: int
    title: str
    summary: str
    location_id: str
    boundary_explanation: str
    line_start: int
    line_end: int
    ratings: Ratings
    appearances: list[EntityAppearance] = field(default_factory=list)


@dataclass
class CharacterEntry:
    entity_id: str
    canonical_name: str
    aliases: list[str]
    group_id: str
    color: str
    color_explanation: str
    representative_quote: Evidence


@dataclass
class LocationEntry:
    entity_id: str
    canonical_name: str
    aliases: list[str]
    first_appearance: tuple[int, int]
    representative_quote: Evidence


@dataclass
class ThemeEntry:
    entity_id: str
    name: str
    color: str


@dataclass
class Interaction:
    a: str
    b: str
    summary: str


@dataclass
class ChapterSummary:
    chapter_index: int
    summary: str
    ratings: Ratings
    length_norm: float
    character_counts: dict[str, int]
    location_counts: dict[str, int]
    interactions: list[Interaction] = field(default_factory=list)


@dataclass
class Group:
    group_id: str
    label: str


@dataclass
class ProvenanceLog:
    """Correction-loop bookkeeping for one pipeline run.

    Timings are wall-clock and therefore live here, outside the canonical
    story artifact, so repeated runs stay byte-identical.
    """

    quotes_checked: int = 0
    quotes_replaced: int = 0
    alias_merges: list[tuple[str, str]] = field(default_factory=list)
    group_merges: list[tuple[str, str]] = field(default_factory=list)
    model_ids: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    loop_runs: dict[str, int] = field(default_factory=dict)
    events: list[dict[str, str]] = field(default_factory=list)

    def flag(self, step: str, detail: str) -> None:
        self.events.append({"step": step, "detail": detail})

    def to_obj(self) -> dict:
        return {
            "quotes_checked": self.quotes_checked,
            "quotes_replaced": self.quotes_replaced,
            "alias_merges": [list(m) for m in self.alias_merges],
            "group_merges": [list(m) for m in self.group_merges],
            "model_ids": dict(self.model_ids),
            "timings": {k: q4(v) for k, v in self.timings.items()},
            "loop_runs": dict(self.loop_runs),
            "events": list(self.events),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "ProvenanceLog":
        return cls(
            quotes_checked=int(obj.get("quotes_checked", 0)),
            quotes_replaced=int(obj.get("quotes_replaced", 0)),
            alias_merges=[tuple(m) for m in obj.get("alias_merges", [])],
            group_merges=[tuple(m) for m in obj.get("group_merges", [])],
            model_ids=dict(obj.get("model_ids", {})),
            timings={k: float(v) for k, v in obj.get("timings", {}).items()},
            loop_runs={k: int(v) for k, v in obj.get("loop_runs", {}).items()},
            events=list(obj.get("events", [])),
        )


@dataclass
class StoryData:
    meta: StoryMeta
    chapters: list[Chapter]
    chapter_summaries: list[ChapterSummary]
    scenes: list[Scene]
    characters: list[CharacterEntry]
    groups: list[Group]
    locations: list[LocationEntry]
    themes: list[ThemeEntry]
    # Excluded from canonical serialization and equality: carries wall-clock
    # timings, persisted separately as provenance.json.
    pipeline_log: ProvenanceLog = field(default_factory=ProvenanceLog, compare=False)

    def scenes_of_chapter(self, chapter_index: int) -> list[Scene]:
        return [s for s in self.scenes if s.chapter_index == chapter_index]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass
class Violation:
    type_name: str
    ref: str
    message: str

    def __str__(self) -> str:
        return f"{self.type_name}[{self.ref}]: {self.message}"


def _check_evidence(
    ev: Evidence,
    ref: str,
    chapter_text: str | None,
    out: list[Violation],
) -> None:
    if ev.variant == EvidenceVariant.QUOTE:
        if not ev.verified:
            out.append(Violation("Evidence", ref, "quote evidence must be verified"))
        if chapter_text is not None and ev.text not in chapter_text:
            out.append(Violation("Evidence", ref, "unverified quote: text is not a substring of the chapter"))
    else:
        if ev.verified:
            out.append(Violation("Evidence", ref, "explanation evidence must not be marked verified"))


def validate(story: StoryData, chapter_texts: dict[int, str] | None = None) -> list[Violation]:
    """Check every structural invariant; returns an empty list iff all hold.

    `chapter_texts` (chapter index -> raw text) enables the quote-substring
    checks; without it only structural invariants are verified.
    """
    v: list[Violation] = []
    meta = story.meta

    if not _ID_RE.fullmatch(meta.id or ""):
        v.append(Violation("StoryMeta", meta.id, "id must be a non-empty lowercase [a-z0-9-]+ slug"))
    if meta.line_count < 0:
        v.append(Violation("StoryMeta", meta.id, "line_count must be >= 0"))

    # Chapters: ordered, in-bounds, contiguous.
    for i, ch in enumerate(story.chapters):
        ref = f"chapter {ch.index}"
        if ch.index != i:
            v.append(Violation("Chapter", ref, f"expected index {i} at position {i}"))
        if not (0 <= ch.line_start < ch.line_end <= meta.line_count):
            v.append(Violation("Chapter", ref, "line range out of story bounds"))
        if i > 0 and ch.line_start != story.chapters[i - 1].line_end:
            v.append(Violation("Chapter", ref, "chapters must be contiguous"))

    character_ids = {c.entity_id for c in story.characters}
    theme_ids = {t.entity_id for t in story.themes}
    location_ids = {l.entity_id for l in story.locations}
    group_ids = {g.group_id for g in story.groups}

    # Scenes: a partition of each chapter, with resolvable references.
    by_chapter: dict[int, list[Scene]] = defaultdict(list)
    for s in story.scenes:
        by_chapter[s.chapter_index].append(s)
    for ch in story.chapters:
        scenes = by_chapter.get(ch.index, [])
        ref = f"chapter {ch.index}"
        if not scenes:
            v.append(Violation("StoryData", ref, "every chapter must have at least one scene"))
            continue
        expected_start = 0
        for j, s in enumerate(scenes):
            sref = f"ch{ch.index}/s{s.scene_index}"
            if s.scene_index != j:
                v.append(Violation("Scene", sref, f"expected scene_index {j} at position {j}"))
            if s.line_start >= s.line_end:
                v.append(Violation("Scene", sref, "scene line range is empty or inverted"))
            if s.line_start != expected_start:
                v.append(Violation("Scene", sref, "scene partition has a gap or overlap"))
            expected_start = s.line_end
        if scenes[-1].line_end != ch.line_count:
            v.append(Violation("Scene", f"ch{ch.index}/s{scenes[-1].scene_index}",
                               f"scene partition must end at chapter length {ch.line_count}"))
    for idx in by_chapter:
        if idx not in {c.index for c in story.chapters}:
            v.append(Violation("Scene", f"chapter {idx}", "scene references unknown chapter"))

    for s in story.scenes:
        sref = f"ch{s.chapter_index}/s{s.scene_index}"
        if s.location_id not in location_ids:
            v.append(Violation("Scene", sref, f"location_id {s.location_id!r} does not resolve"))
        if s.scene_index == 0 and s.boundary_explanation:
            v.append(Violation("Scene", sref, "first scene of a chapter must have an empty boundary explanation"))
        if s.scene_index > 0 and not s.boundary_explanation:
            v.append(Violation("Scene", sref, "boundary_explanation required for scene_index > 0"))
        _check_ratings(s.ratings, sref, v)
        chapter_text = None if chapter_texts is None else chapter_texts.get(s.chapter_index)
        for a in s.appearances:
            aref = f"{sref}/{a.entity_id}"
            pool = character_ids if a.kind == EntityKind.CHARACTER else theme_ids
            if a.entity_id not in pool:
                v.append(Violation("EntityAppearance", aref, f"{a.kind.value} id does not resolve"))
            if not -1.0 <= a.sentiment <= 1.0:
                v.append(Violation("EntityAppearance", aref, "sentiment out of [-1, 1]"))
            _check_evidence(a.evidence, aref, chapter_text, v)

    # Characters: canonical-in-aliases, alias injectivity, parseable color.
    seen_alias: dict[str, str] = {}
    for c in story.characters:
        ref = c.entity_id
        if c.canonical_name not in c.aliases:
            v.append(Violation("CharacterEntry", ref, "canonical_name must be one of its aliases"))
        if not _COLOR_RE.fullmatch(c.color):
            v.append(Violation("CharacterEntry", ref, f"color {c.color!r} is not #RRGGBB"))
        if c.group_id not in group_ids:
            v.append(Violation("CharacterEntry", ref, f"group_id {c.group_id!r} does not resolve"))
        for alias in c.aliases:
            if alias in seen_alias and seen_alias[alias] != c.entity_id:
                v.append(Violation("CharacterEntry", ref, f"alias {alias!r} also maps to {seen_alias[alias]}"))
            seen_alias[alias] = c.entity_id
        any_text = None
        if chapter_texts is not None:
            any_text = "\n\n".join(chapter_texts.values())
        _check_evidence(c.representative_quote, f"{ref}/quote", any_text, v)

    scene_lookup = {(s.chapter_index, s.scene_index): s for s in story.scenes}
    seen_loc_alias: dict[str, str] = {}
    for l in story.locations:
        ref = l.entity_id
        for alias in l.aliases:
            if alias in seen_loc_alias and seen_loc_alias[alias] != l.entity_id:
                v.append(Violation("LocationEntry", ref, f"alias {alias!r} also maps to {seen_loc_alias[alias]}"))
            seen_loc_alias[alias] = l.entity_id
        fa = tuple(l.first_appearance)
        at = scene_lookup.get(fa)
        if at is None:
            v.append(Violation("LocationEntry", ref, f"first_appearance {fa} is not an existing scene"))
        elif at.location_id != l.entity_id:
            v.append(Violation("LocationEntry", ref, "first_appearance scene is not set in this location"))
        any_text = None
        if chapter_texts is not None:
            any_text = "\n\n".join(chapter_texts.values())
        _check_evidence(l.representative_quote, f"{ref}/quote", any_text, v)

    for t in story.themes:
        if not t.name:
            v.append(Violation("ThemeEntry", t.entity_id, "name must be non-empty"))
        if not _COLOR_RE.fullmatch(t.color):
            v.append(Violation("ThemeEntry", t.entity_id, f"color {t.color!r} is not #RRGGBB"))

    for name, ids in (
        ("CharacterEntry", [c.entity_id for c in story.characters]),
        ("LocationEntry", [l.entity_id for l in story.locations]),
        ("ThemeEntry", [t.entity_id for t in story.themes]),
        ("Group", [g.group_id for g in story.groups]),
    ):
        dupes = {i for i in ids if ids.count(i) > 1}
        for d in sorted(dupes):
            v.append(Violation(name, d, "duplicate entity id"))

    # Chapter summaries: locally recomputable counts must match stored values.
    summarized = set()
    for cs in story.chapter_summaries:
        ref = f"summary ch{cs.chapter_index}"
        summarized.add(cs.chapter_index)
        _check_ratings(cs.ratings, ref, v)
        if not 0.0 <= cs.length_norm <= 1.0:
            v.append(Violation("ChapterSummary", ref, "length_norm out of [0, 1]"))
        scenes = by_chapter.get(cs.chapter_index, [])
        char_counts: dict[str, int] = defaultdict(int)
        loc_counts: dict[str, int] = defaultdict(int)
        co_present: dict[str, set[str]] = defaultdict(set)
        for s in scenes:
            present = {a.entity_id for a in s.appearances if a.kind == EntityKind.CHARACTER}
            for eid in present:
                char_counts[eid] += 1
            loc_counts[s.location_id] += 1
            for eid in present:
                co_present[eid] |= present - {eid}
        if dict(char_counts) != dict(cs.character_counts):
            v.append(Violation("ChapterSummary", ref, "character_counts do not match scene data"))
        if dict(loc_counts) != dict(cs.location_counts):
            v.append(Violation("ChapterSummary", ref, "location_counts do not match scene data"))
        for inter in cs.interactions:
            iref = f"{ref}/{inter.a}--{inter.b}"
            if not inter.a < inter.b:
                v.append(Violation("ChapterSummary", iref, "interaction pair must be ordered a < b"))
            if inter.b not in co_present.get(inter.a, set()):
                v.append(Violation("ChapterSummary", iref, "interaction pair never co-occurs in a scene"))
    for ch in story.chapters:
        if ch.index not in summarized:
            v.append(Violation("ChapterSummary", f"chapter {ch.index}", "missing chapter summary"))

    if story.pipeline_log.quotes_replaced > story.pipeline_log.quotes_checked:
        v.append(Violation("ProvenanceLog", meta.id, "quotes_replaced exceeds quotes_checked"))

    return v


def _check_ratings(r: Ratings, ref: str, out: list[Violation]) -> None:
    if not 0.0 <= r.importance <= 1.0:
        out.append(Violation("Ratings", ref, "importance out of [0, 1]"))
    if not 0.0 <= r.conflict <= 1.0:
        out.append(Violation("Ratings", ref, "conflict out of [0, 1]"))
    if not -1.0 <= r.sentiment <= 1.0:
        out.append(Violation("Ratings", ref, "sentiment out of [-1, 1]"))


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------


class SerializationError(ValueError):
    """Malformed story-data bytes (carries line/column when available)."""


class SchemaVersionError(SerializationError):
    """The artifact was written with an unsupported schema version."""


def _emit(value, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(value.items())
        for i, (k, item) in enumerate(items):
            out.append(f'{pad}  {json.dumps(k, ensure_ascii=False)}: ')
            _emit(item, indent + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(value, list):
        if not value:
            out.append("[]")
            return
        out.append("[\n")
        for i, item in enumerate(value):
            out.append(pad + "  ")
            _emit(item, indent + 1, out)
            out.append(",\n" if i < len(value) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, float):
        out.append(f"{value:.4f}")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif value is None:
        out.append("null")
    else:
        raise TypeError(f"cannot canonically serialize {type(value).__name__}")


def canonical_json_bytes(obj) -> bytes:
    """Deterministic JSON: sorted keys, 2-space indent, floats at 4 decimals."""
    parts: list[str] = []
    _emit(obj, 0, parts)
    parts.append("\n")
    return "".join(parts).encode("utf-8")


def _ratings_to_obj(r: Ratings) -> dict:
    return {"importance": q4(r.importance), "conflict": q4(r.conflict), "sentiment": q4(r.sentiment)}


def _evidence_to_obj(e: Evidence) -> dict:
    return {"variant": e.variant.value, "text": e.text, "verified": e.verified}


def story_to_obj(story: StoryData) -> dict:
    """Plain-JSON form of a story (excluding the provenance log)."""
    return {
        "schema_version": SCHEMA_VERSION,
        "meta": {
            "id": story.meta.id,
            "title": story.meta.title,
            "author": story.meta.author,
            "genre": story.meta.genre.value,
            "source": story.meta.source,
            "line_count": story.meta.line_count,
        },
        "chapters": [
            {"index": c.index, "title": c.title, "line_start": c.line_start, "line_end": c.line_end}
            for c in story.chapters
        ],
        "chapter_summaries": [
            {
                "chapter_index": cs.chapter_index,
                "summary": cs.summary,
                "ratings": _ratings_to_obj(cs.ratings),
                "length_norm": q4(cs.length_norm),
                "character_counts": dict(cs.character_counts),
                "location_counts": dict(cs.location_counts),
                "interactions": [{"a": i.a, "b": i.b, "summary": i.summary} for i in cs.interactions],
            }
            for cs in story.chapter_summaries
        ],
        "scenes": [
            {
                "chapter_index": s.chapter_index,
                "scene_index": s.scene_index,
                "title": s.title,
                "summary": s.summary,
                "location_id": s.location_id,
                "boundary_explanation": s.boundary_explanation,
                "line_start": s.line_start,
                "line_end": s.line_end,
                "ratings": _ratings_to_obj(s.ratings),
                "appearances": [
                    {
                        "entity_id": a.entity_id,
                        "kind": a.kind.value,
                        "sentiment": q4(a.sentiment),
                        "emotion": a.emotion,
                        "evidence": _evidence_to_obj(a.evidence),
                    }
                    for a in s.appearances
                ],
            }
            for s in story.scenes
        ],
        "characters": [
            {
                "entity_id": c.entity_id,
                "canonical_name": c.canonical_name,
                "aliases": list(c.aliases),
                "group_id": c.group_id,
                "color": c.color,
                "color_explanation": c.color_explanation,
                "representative_quote": _evidence_to_obj(c.representative_quote),
            }
            for c in story.characters
        ],
        "groups": [{"group_id": g.group_id, "label": g.label} for g in story.groups],
        "locations": [
            {
                "entity_id": l.entity_id,
                "canonical_name": l.canonical_name,
                "aliases": list(l.aliases),
                "first_appearance": list(l.first_appearance),
                "representative_quote": _evidence_to_obj(l.representative_quote),
            }
            for l in story.locations
        ],
        "themes": [{"entity_id": t.entity_id, "name": t.name, "color": t.color} for t in story.themes],
    }


def serialize(story: StoryData) -> bytes:
    return canonical_json_bytes(story_to_obj(story))


def _ratings_from_obj(obj: dict) -> Ratings:
    return Ratings(float(obj["importance"]), float(obj["conflict"]), float(obj["sentiment"]))


def _evidence_from_obj(obj: dict) -> Evidence:
    return Evidence(EvidenceVariant(obj["variant"]), obj["text"], bool(obj["verified"]))


def story_from_obj(obj: dict) -> StoryData:
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION}")
    try:
        meta = obj["meta"]
        return StoryData(
            meta=StoryMeta(
                id=meta["id"],
                title=meta["title"],
                author=meta["author"],
                genre=Genre(meta["genre"]),
                source=meta["source"],
                line_count=int(meta["line_count"]),
            ),
            chapters=[
                Chapter(int(c["index"]), c["title"], int(c["line_start"]), int(c["line_end"]))
                for c in obj["chapters"]
            ],
            chapter_summaries=[
                ChapterSummary(
                    chapter_index=int(cs["chapter_index"]),
                    summary=cs["summary"],
                    ratings=_ratings_from_obj(cs["ratings"]),
                    length_norm=float(cs["length_norm"]),
                    character_counts={k: int(n) for k, n in cs["character_counts"].items()},
                    location_counts={k: int(n) for k, n in cs["location_counts"].items()},
                    interactions=[Interaction(i["a"], i["b"], i["summary"]) for i in cs["interactions"]],
                )
                for cs in obj["chapter_summaries"]
            ],
            scenes=[
                Scene(
                    chapter_index=int(s["chapter_index"]),
                    scene_index=int(s["scene_index"]),
                    title=s["title"],
                    summary=s["summary"],
                    location_id=s["location_id"],
                    boundary_explanation=s["boundary_explanation"],
                    line_start=int(s["line_start"]),
                    line_end=int(s["line_end"]),
                    ratings=_ratings_from_obj(s["ratings"]),
                    appearances=[
                        EntityAppearance(
                            entity_id=a["entity_id"],
                            kind=EntityKind(a["kind"]),
                            sentiment=float(a["sentiment"]),
                            emotion=a["emotion"],
                            evidence=_evidence_from_obj(a["evidence"]),
                        )
                        for a in s["appearances"]
                    ],
                )
                for s in obj["scenes"]
            ],
            characters=[
                CharacterEntry(
                    entity_id=c["entity_id"],
                    canonical_name=c["canonical_name"],
                    aliases=list(c["aliases"]),
                    group_id=c["group_id"],
                    color=c["color"],
                    color_explanation=c["color_explanation"],
                    representative_quote=_evidence_from_obj(c["representative_quote"]),
                )
                for c in obj["characters"]
            ],
            groups=[Group(g["group_id"], g["label"]) for g in obj["groups"]],
            locations=[
                LocationEntry(
                    entity_id=l["entity_id"],
                    canonical_name=l["canonical_name"],
                    aliases=list(l["aliases"]),
                    first_appearance=(int(l["first_appearance"][0]), int(l["first_appearance"][1])),
                    representative_quote=_evidence_from_obj(l["representative_quote"]),
                )
                for l in obj["locations"]
            ],
            themes=[ThemeEntry(t["entity_id"], t["name"], t["color"]) for t in obj["themes"]],
        )
    except SchemaVersionError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise SerializationError(f"malformed story data: {exc}") from exc


def deserialize(data: bytes) -> StoryData:
    try:
        obj = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise SerializationError(f"story data is not valid UTF-8: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SerializationError(f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise SerializationError("story data must be a JSON object")
    return story_from_obj(obj)
