"""Shared fixtures: repo paths and tiny hand-built stories."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from storyribbons.model import (
    Chapter,
    ChapterSummary,
    CharacterEntry,
    EntityAppearance,
    EntityKind,
    Evidence,
    EvidenceVariant,
    Genre,
    Group,
    Interaction,
    LocationEntry,
    Ratings,
    Scene,
    StoryData,
    StoryMeta,
    ThemeEntry,
)

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"
FIXTURES_DIR = REPO_ROOT / "fixtures"
SAMPLE_ID = "metamorphosis-sample"
ADVERSARIAL_ID = "metamorphosis-adversarial"


@pytest.fixture(scope="session")
def repo_data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def repo_fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture()
def sample_copy(tmp_path: Path) -> Path:
    """Writable copy of the bundled sample story's data dir."""
    src = DATA_DIR / SAMPLE_ID
    dst = tmp_path / "data" / SAMPLE_ID
    shutil.copytree(src, dst, ignore=shutil.ignore_patterns("cache"))
    return dst


# ---------------------------------------------------------------------------
# Tiny hand-built story used by model/analytics unit tests
# ---------------------------------------------------------------------------

TINY_CH0 = "At the gate\nMara waited by the gate.\n\"I will not turn back,\" said Mara.\nThe porter shrugged and let her pass.\nInside, the yard lay silent."
TINY_CH1 = "The hall\nMara crossed the long hall at dusk.\nA lamp guttered near the stair.\n\"Who goes there?\" called the porter.\nNobody answered him at all.\nShe climbed toward the tower door."


def tiny_story() -> tuple[StoryData, dict[int, str]]:
    texts = {0: TINY_CH0, 1: TINY_CH1}
    quote = Evidence(EvidenceVariant.QUOTE, '"I will not turn back," said Mara.', True)
    quote2 = Evidence(EvidenceVariant.QUOTE, '"Who goes there?" called the porter.', True)
    expl = Evidence(EvidenceVariant.EXPLANATION, "The porter stays wary of strangers.", False)
    scenes = [
        Scene(
            chapter_index=0,
            scene_index=0,
            title="Arrival",
            summary="Mara arrives at the gate.",
            location_id="gate",
            boundary_explanation="",
            line_start=0,
            line_end=3,
            ratings=Ratings(0.8, 0.3, -0.1),
            appearances=[
                EntityAppearance("mara", EntityKind.CHARACTER, 0.2, "resolute", quote),
                EntityAppearance("resolve", EntityKind.THEME, 0.5, "n/a", expl),
            ],
        ),
        Scene(
            chapter_index=0,
            scene_index=1,
            title="The yard",
            summary="She passes into the yard.",
            location_id="yard",
            boundary_explanation="The action moves into the yard.",
            line_start=3,
            line_end=5,
            ratings=Ratings(0.4, 0.1, 0.2),
            appearances=[
                EntityAppearance("mara", EntityKind.CHARACTER, 0.4, "relieved", expl),
                EntityAppearance("porter", EntityKind.CHARACTER, 0.0, "indifferent", expl),
            ],
        ),
        Scene(
            chapter_index=1,
            scene_index=0,
            title="The hall",
            summary="Mara crosses the hall; the porter challenges the dark.",
            location_id="hall",
            boundary_explanation="",
            line_start=0,
            line_end=6,
            ratings=Ratings(0.6, 0.5, -0.3),
            appearances=[
                EntityAppearance("mara", EntityKind.CHARACTER, -0.1, "uneasy", expl),
                EntityAppearance("porter", EntityKind.CHARACTER, -0.2, "alarmed", quote2),
            ],
        ),
    ]
    story = StoryData(
        meta=StoryMeta(
            id="tiny-keep",
            title="The Keep",
            author="Nobody",
            genre=Genre.NOVEL,
            source="memory",
            line_count=11,
        ),
        chapters=[
            Chapter(0, "At the gate", 0, 5),
            Chapter(1, "The hall", 5, 11),
        ],
        chapter_summaries=[
            ChapterSummary(
                chapter_index=0,
                summary="Mara talks her way past the gate.",
                ratings=Ratings(0.7, 0.3, 0.0),
                length_norm=round(5 / 6, 4),
                character_counts={"mara": 2, "porter": 1},
                location_counts={"gate": 1, "yard": 1},
                interactions=[Interaction("mara", "porter", "The porter lets Mara pass.")],
            ),
            ChapterSummary(
                chapter_index=1,
                summary="Mara crosses the hall unseen.",
                ratings=Ratings(0.5, 0.4, -0.2),
                length_norm=1.0,
                character_counts={"mara": 1, "porter": 1},
                location_counts={"hall": 1},
                interactions=[Interaction("mara", "porter", "The porter challenges the dark.")],
            ),
        ],
        scenes=scenes,
        characters=[
            CharacterEntry(
                "mara", "Mara", ["Mara"], "travellers", "#AA3355", "Crimson for her stubborn streak.",
                Evidence(EvidenceVariant.QUOTE, '"I will not turn back," said Mara.', True),
            ),
            CharacterEntry(
                "porter", "Porter", ["Porter", "the porter"], "keep-staff", "#3355AA", "Watchful blue.",
                Evidence(EvidenceVariant.EXPLANATION, "The porter is a fixture of the keep.", False),
            ),
        ],
        groups=[Group("travellers", "Travellers"), Group("keep-staff", "Keep Staff")],
        locations=[
            LocationEntry(
                "gate", "Gate", ["Gate", "the gate"], (0, 0),
                Evidence(EvidenceVariant.QUOTE, "Mara waited by the gate.", True),
            ),
            LocationEntry(
                "yard", "Yard", ["Yard"], (0, 1),
                Evidence(EvidenceVariant.EXPLANATION, "A silent yard inside the gate.", False),
            ),
            LocationEntry(
                "hall", "Hall", ["Hall"], (1, 0),
                Evidence(EvidenceVariant.QUOTE, "Mara crossed the long hall at dusk.", True),
            ),
        ],
        themes=[ThemeEntry("resolve", "Resolve", "#00AA77")],
    )
    return story, texts


@pytest.fixture()
def keep_story() -> StoryData:
    return tiny_story()[0]


@pytest.fixture()
def keep_texts() -> dict[int, str]:
    return tiny_story()[1]


def write_story_dir(tmp_path: Path, story_id: str, chapters: list[str], config_extra: dict | None = None) -> Path:
    """Materialize ingestion artifacts for ad-hoc pipeline tests."""
    story_dir = tmp_path / "data" / story_id
    (story_dir / "chapters").mkdir(parents=True)
    config = {
        "id": story_id,
        "title": story_id.replace("-", " ").title(),
        "author": "Test",
        "genre": "novel",
        "source": "raw.txt",
        "chapter_marker": "^CHAPTER",
    }
    config.update(config_extra or {})
    (story_dir / "config.json").write_text(json.dumps(config), encoding="utf-8")
    offset = 0
    index = []
    for i, text in enumerate(chapters):
        lines = text.split("\n")
        (story_dir / "chapters" / f"{i}.txt").write_text(text + "\n", encoding="utf-8")
        index.append(
            {"index": i, "title": lines[0], "line_start": offset, "line_end": offset + len(lines)}
        )
        offset += len(lines)
    (story_dir / "chapters.json").write_text(
        json.dumps({"story_id": story_id, "line_count": offset, "chapters": index}),
        encoding="utf-8",
    )
    return story_dir


def write_fixture(root: Path, tag: str, value: dict) -> None:
    path = root / f"{tag}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(value, ensure_ascii=False, indent=2), encoding="utf-8")
