"""Raw text loading, boilerplate stripping, and chapter splitting.

Chapter detection is the one human-assisted step: the marker pattern comes
from the story config rather than a model, because automatic detection is
unreliable on real texts. Everything downstream is derived from the numbered
lines produced here.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

from .model import Chapter, Genre, StoryMeta, slugify

logger = logging.getLogger(__name__)

GUTENBERG_START = "*** START OF"
GUTENBERG_END = "*** END OF"

_HEADING_GUESS_RE = re.compile(r"^(CHAPTER|ACT|BOOK)\b", re.IGNORECASE)


class IngestError(RuntimeError):
    pass


@dataclass
class StoryConfig:
    id: str
    title: str
    author: str
    genre: Genre
    source: str
    chapter_marker: str
    strip_boilerplate: bool = True
    front_matter_end: str | None = None
    back_matter_start: str | None = None

    def marker_pattern(self) -> re.Pattern:
        try:
            return re.compile(self.chapter_marker)
        except re.error as exc:
            raise IngestError(f"chapter_marker does not compile: {exc}") from exc


def load_config(path: str | Path) -> StoryConfig:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestError(f"cannot read story config {path}: {exc}") from exc
    try:
        config = StoryConfig(
            id=obj["id"],
            title=obj["title"],
            author=obj.get("author", ""),
            genre=Genre(obj.get("genre", "novel")),
            source=obj["source"],
            chapter_marker=obj["chapter_marker"],
            strip_boilerplate=bool(obj.get("strip_boilerplate", True)),
            front_matter_end=obj.get("front_matter_end"),
            back_matter_start=obj.get("back_matter_start"),
        )
    except (KeyError, ValueError) as exc:
        raise IngestError(f"invalid story config {path}: {exc}") from exc
    if not re.fullmatch(r"[a-z0-9-]+", config.id):
        raise IngestError(f"story id {config.id!r} must be a lowercase [a-z0-9-]+ slug")
    config.marker_pattern()
    return config


@dataclass
class StoryText:
    """Normalized story body: LF endings, per-line trailing whitespace trimmed."""

    lines: list[str]

    @property
    def line_count(self) -> int:
        return len(self.lines)

    def chapter_lines(self, chapter: Chapter) -> list[str]:
        return self.lines[chapter.line_start:chapter.line_end]

    def chapter_text(self, chapter: Chapter) -> str:
        return "\n".join(self.chapter_lines(chapter))


def _read_source(source: str | Path) -> bytes:
    text = str(source)
    if text.startswith(("http://", "https://")):
        import requests

        resp = requests.get(text, timeout=60)
        resp.raise_for_status()
        return resp.content
    try:
        return Path(source).read_bytes()
    except OSError as exc:
        raise IngestError(f"cannot read source {source}: {exc}") from exc


def load_text(source: str | Path, config: StoryConfig) -> StoryText:
    """Load and normalize the story body for `config` from a path or URL."""
    raw = _read_source(source)
    try:
        decoded = raw.decode("utf-8")
    except UnicodeDecodeError:
        decoded = raw.decode("utf-8", errors="replace")
        logger.warning("%s: invalid UTF-8 bytes replaced during decode", source)

    decoded = decoded.replace("\r\n", "\n").replace("\r", "\n")
    lines = [line.rstrip() for line in decoded.split("\n")]

    if config.strip_boilerplate:
        start = next((i for i, l in enumerate(lines) if l.startswith(GUTENBERG_START)), None)
        end = next((i for i, l in enumerate(lines) if l.startswith(GUTENBERG_END)), None)
        if start is None or end is None or end <= start:
            raise IngestError(
                f"{source}: boilerplate sentinels not found "
                f"(expected lines starting with {GUTENBERG_START!r} and {GUTENBERG_END!r})"
            )
        lines = lines[start + 1:end]

    if config.front_matter_end is not None or config.back_matter_start is not None:
        front = config.front_matter_end
        back = config.back_matter_start
        fi = next((i for i, l in enumerate(lines) if l == front), None) if front else None
        bi = next((i for i, l in enumerate(lines) if l == back), None) if back else None
        if front is not None and fi is None:
            raise IngestError(f"{source}: front_matter_end anchor {front!r} not found")
        if back is not None and bi is None:
            raise IngestError(f"{source}: back_matter_start anchor {back!r} not found")
        if fi is not None and bi is not None and fi >= bi:
            raise IngestError(f"{source}: front_matter_end must precede back_matter_start")
        lines = lines[(fi + 1 if fi is not None else 0):(bi if bi is not None else len(lines))]

    # Leading/trailing blank lines carry no structure.
    while lines and not lines[0]:
        lines.pop(0)
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        raise IngestError(f"{source}: story body is empty after stripping")
    return StoryText(lines)


def split_chapters(text: StoryText, config: StoryConfig) -> list[Chapter]:
    """Split the body at marker lines; each marker starts a chapter it titles."""
    pattern = config.marker_pattern()
    marks = [i for i, line in enumerate(text.lines) if pattern.search(line)]
    if not marks:
        candidates = [l.strip() for l in text.lines if _HEADING_GUESS_RE.match(l.strip())][:5]
        hint = "; candidate heading lines: " + "; ".join(repr(c) for c in candidates) if candidates else ""
        raise IngestError(
            f"chapter marker {config.chapter_marker!r} matched no lines{hint}"
        )
    if marks[0] > 0:
        logger.warning(
            "%s: discarding %d lines before the first chapter marker", config.id, marks[0]
        )
    bounds = marks + [text.line_count]
    chapters = [
        Chapter(index=i, title=text.lines[start].strip(), line_start=start, line_end=end)
        for i, (start, end) in enumerate(zip(bounds[:-1], bounds[1:]))
    ]
    return chapters


def number_lines(chapter: Chapter, text: StoryText) -> list[tuple[int, str]]:
    """Chapter lines annotated with 1-based chapter-local numbers."""
    lines = text.chapter_lines(chapter)
    assert lines, "split_chapters never produces an empty chapter"
    return list(enumerate(lines, start=1))


def story_meta(config: StoryConfig, text: StoryText) -> StoryMeta:
    return StoryMeta(
        id=config.id,
        title=config.title,
        author=config.author,
        genre=config.genre,
        source=str(config.source),
        line_count=text.line_count,
    )


# ---------------------------------------------------------------------------
# On-disk artifacts
# ---------------------------------------------------------------------------


def ingest_story(config_path: str | Path, story_dir: str | Path | None = None) -> Path:
    """Run ingestion for a config file and write chapter artifacts next to it.

    Writes `chapters/<index>.txt` plus a `chapters.json` index and returns
    the story directory.
    """
    config_path = Path(config_path)
    config = load_config(config_path)
    story_dir = Path(story_dir) if story_dir is not None else config_path.parent
    source = config.source
    if not str(source).startswith(("http://", "https://")):
        source = config_path.parent / source

    text = load_text(source, config)
    chapters = split_chapters(text, config)

    chapters_dir = story_dir / "chapters"
    chapters_dir.mkdir(parents=True, exist_ok=True)
    for ch in chapters:
        (chapters_dir / f"{ch.index}.txt").write_text(
            text.chapter_text(ch) + "\n", encoding="utf-8", newline="\n"
        )
    index = {
        "story_id": config.id,
        "line_count": text.line_count,
        "chapters": [
            {"index": c.index, "title": c.title, "line_start": c.line_start, "line_end": c.line_end}
            for c in chapters
        ],
    }
    (story_dir / "chapters.json").write_text(
        json.dumps(index, indent=2, ensure_ascii=False) + "\n", encoding="utf-8", newline="\n"
    )
    logger.info("%s: ingested %d chapters, %d lines", config.id, len(chapters), text.line_count)
    return story_dir


def load_ingested(story_dir: str | Path) -> tuple[StoryMeta, list[Chapter], dict[int, str]]:
    """Load ingestion artifacts: meta, chapters, and chapter texts by index."""
    story_dir = Path(story_dir)
    config = load_config(story_dir / "config.json")
    try:
        index = json.loads((story_dir / "chapters.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestError(f"missing or invalid chapters.json in {story_dir}: {exc}") from exc
    chapters = [
        Chapter(int(c["index"]), c["title"], int(c["line_start"]), int(c["line_end"]))
        for c in index["chapters"]
    ]
    texts: dict[int, str] = {}
    for ch in chapters:
        path = story_dir / "chapters" / f"{ch.index}.txt"
        try:
            content = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise IngestError(f"missing chapter text {path}: {exc}") from exc
        texts[ch.index] = content[:-1] if content.endswith("\n") else content
    meta = StoryMeta(
        id=config.id,
        title=config.title,
        author=config.author,
        genre=config.genre,
        source=str(config.source),
        line_count=int(index["line_count"]),
    )
    return meta, chapters, texts


__all__ = [
    "GUTENBERG_END",
    "GUTENBERG_START",
    "IngestError",
    "StoryConfig",
    "StoryText",
    "ingest_story",
    "load_config",
    "load_ingested",
    "load_text",
    "number_lines",
    "slugify",
    "split_chapters",
    "story_meta",
]
