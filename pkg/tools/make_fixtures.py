#!/usr/bin/env python3
"""Regenerate the bundled sample stories and their fixture trees.

Builds two stories from one deterministic plan:

  data/metamorphosis-sample       clean fixtures; golden story.json
  data/metamorphosis-adversarial  same text, fixtures with fabricated and
                                  cosmetically altered quote candidates, plus
                                  a manifest recording exactly what was broken

The plan is self-checking: after generation the real pipeline runs over both
stories and the script asserts the output statistics and provenance counters
land on the intended values. Run from the repo root:

    python3 tools/make_fixtures.py
"""

from __future__ import annotations

import colorsys
import json
import random
import re
import shutil
import sys
import textwrap
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from storyribbons.gateway import Gateway  # noqa: E402
from storyribbons.ingest import ingest_story  # noqa: E402
from storyribbons.model import validate  # noqa: E402
from storyribbons.pipeline import run_pipeline  # noqa: E402
from storyribbons.quotes import index_text, normalize  # noqa: E402
from storyribbons import analytics  # noqa: E402

DATA = ROOT / "data"
FIXTURES = ROOT / "fixtures"

SAMPLE_ID = "metamorphosis-sample"
ADV_ID = "metamorphosis-adversarial"

NUMERALS = ["I", "II", "III"]

WRAP = 70
SEED = 20260815

# Target shape: 1752 lines / 3 chapters / 24 scenes / 10 characters /
# 5 locations / 26 themes / 82 verified quotes.
SCENE_LENGTHS = [
    [73, 72, 75, 70, 74, 73, 74, 73],
    [68, 66, 67, 65, 70, 66, 68, 64, 66],
    [82, 80, 81, 79, 83, 82, 81],
]

# (canonical, aliases) with canonical = longest-then-lexicographic member.
CHARACTERS = [
    ("Tobias Vann", ["Tobias", "Tobias Vann", "Mr. Vann"]),
    ("Mirela Vann", ["Mirela", "Mirela Vann"]),
    ("Old Porter", ["Old Porter"]),
    ("Inspector Brill", ["Inspector Brill", "Brill"]),
    ("Klara", ["Klara"]),
    ("Doctor Hesse", ["Hesse", "Doctor Hesse"]),
    ("Agata", ["Agata"]),
    ("Felix", ["Felix"]),
    ("Sela", ["Sela"]),
    ("Widow Marthe", ["Widow Marthe"]),
]

GROUP_LABELS = {
    "Tobias Vann": "Vann Family",
    "Mirela Vann": "Vann family",
    "Old Porter": "Dock Workers",
    "Inspector Brill": "Officials",
    "Klara": "Neighbors",
    "Doctor Hesse": "City Officials",
    "Agata": "Vann Family",
    "Felix": "Neighbors",
    "Sela": "Dock Workers",
    "Widow Marthe": "Neighbors",
}

LOCATIONS = [
    ("Vann Apartment", ["Vann Apartment", "the apartment"]),
    ("The Counting House", ["The Counting House", "counting house", "the counting house"]),
    ("Linden Street", ["Linden Street"]),
    ("River Docks", ["River Docks", "the docks"]),
    ("The Infirmary", ["The Infirmary"]),
]

# Scene plan: location raw name, character raw names, (theme raw, has_quote).
SCENE_PLAN = [
    [
        dict(loc="Vann Apartment", boundary=None,
             chars=["Tobias", "Mirela"], themes=[("Duty", True)]),
        dict(loc="the apartment",
             boundary="The next morning drags Tobias from shallow sleep.",
             chars=["Tobias Vann"], themes=[("Transformation", True)]),
        dict(loc="The Counting House",
             boundary="The action moves to the counting house office.",
             chars=["Mr. Vann", "Old Porter"],
             themes=[("Routine", True), ("Money Worries", True)]),
        dict(loc="counting house",
             boundary="Inspector Brill arrives unannounced at the high desk.",
             chars=["Tobias", "Inspector Brill"], themes=[("Bureaucracy", True)]),
        dict(loc="Linden Street",
             boundary="They go to Linden Street to hear the gossip.",
             chars=["Klara"], themes=[("Rumor", True)]),
        dict(loc="the counting house",
             boundary="Doctor Hesse enters with his black bag.",
             chars=["Tobias", "Hesse"], themes=[("Illness", True)]),
        dict(loc="Vann Apartment",
             boundary="That evening the family gathers in the apartment.",
             chars=["Mirela Vann", "Agata"], themes=[("Family Obligation", True)]),
        dict(loc="the apartment",
             boundary="The conversation shifts to the unpaid debt.",
             chars=["Tobias", "Mirela"], themes=[("Guilt", True)]),
    ],
    [
        dict(loc="the docks", boundary=None,
             chars=["Felix", "Sela"], themes=[("Winter", True)]),
        dict(loc="River Docks",
             boundary="Tobias joins them at the waterline.",
             chars=["Tobias", "Felix"], themes=[("Debt", True)]),
        dict(loc="Linden Street",
             boundary="The scene moves to Linden Street with the morning crowd.",
             chars=["Widow Marthe"], themes=[("Small Kindnesses", True)]),
        dict(loc="the apartment",
             boundary="Back in the apartment the cupboards stand empty.",
             chars=["Mirela"], themes=[("Hunger", True)]),
        dict(loc="Vann Apartment",
             boundary="Hours later a fiddle starts up below the window.",
             chars=["Tobias Vann", "Mirela Vann"],
             themes=[("Music", True), ("Tenderness", True)]),
        dict(loc="The Infirmary",
             boundary="They carry him to the infirmary ward.",
             chars=["Doctor Hesse", "Agata"], themes=[("Confinement", True)]),
        dict(loc="the counting house",
             boundary="Attention turns to the unanswered letters at the counting house.",
             chars=["Mr. Vann", "Old Porter"], themes=[("Letters", True)]),
        dict(loc="the apartment",
             boundary="Tobias resolves to stay behind the locked door.",
             chars=["Tobias"], themes=[("Isolation", True)]),
        dict(loc="Linden Street",
             boundary="Widow Marthe appears at the corner lamp.",
             chars=["Klara", "Widow Marthe"], themes=[("Fear of Change", False)]),
    ],
    [
        dict(loc="Vann Apartment", boundary=None,
             chars=["Mirela", "Tobias"], themes=[("Decay", True)]),
        dict(loc="the apartment",
             boundary="At dawn the frost flowers over every pane.",
             chars=["Agata", "Tobias Vann"], themes=[("Window Light", True)]),
        dict(loc="The Counting House",
             boundary="The scene moves to the counting house ledgers.",
             chars=["Brill", "Mr. Vann"], themes=[("Pride", True)]),
        dict(loc="River Docks",
             boundary="Down at the docks the cranes stand idle.",
             chars=["Sela"], themes=[("Shame", False)]),
        dict(loc="The Infirmary",
             boundary="Mirela returns with the night nurse.",
             chars=["Doctor Hesse", "Mirela Vann"],
             themes=[("Sacrifice", True), ("Loyalty", True)]),
        dict(loc="Linden Street",
             boundary="Weeks later the thaw loosens the street.",
             chars=["Klara", "Felix"], themes=[("Hope", True), ("routine", True)]),
        dict(loc="Vann Apartment",
             boundary="The talk turns to the subject of spring plans.",
             chars=["Tobias", "Mirela"], themes=[("duty", False)]),
    ],
]

SCENE_TITLES = [
    ["The Cold Ceiling", "A Late Waking", "The High Desk", "An Unmarked File",
     "Bread and Gossip", "The Black Bag", "Supper in Silence", "What Is Owed"],
    ["Ice on the Pilings", "The Waterline", "A Basket on the Step", "Empty Cupboards",
     "The Fiddle Below", "The Long Ward", "Unanswered Letters", "The Locked Door",
     "The Corner Lamp"],
    ["Dust on the Sill", "Frost Flowers", "The Last Ledger", "Idle Cranes",
     "The Night Nurse", "The Thaw", "Spring Plans"],
]

EMOTIONS = [
    "weary resignation", "quiet dread", "guarded hope", "brittle cheer",
    "stubborn patience", "cold fury", "tender worry", "numb detachment",
    "wry amusement", "excited and carefree",
]

FILLER_SUBJECTS = [
    "The ledger", "A grey pigeon", "The stairwell", "The kettle", "The clock",
    "A tram bell", "The landing", "The coal stove", "A loose shutter",
    "The hallway", "An old receipt", "The gaslight", "A folded newspaper",
    "The banister", "A distant whistle", "The wallpaper", "A chipped cup",
    "The doormat", "A church bell", "The window sash",
]
FILLER_VERBS = [
    "waited", "ticked", "leaned", "gathered dust", "creaked", "settled",
    "rattled", "dimmed", "steamed", "sagged", "listened", "kept still",
    "held its breath", "cooled", "flickered", "drifted", "clicked",
]
FILLER_TAILS = [
    "through the slow afternoon", "under a low sky", "without complaint",
    "as if nothing had changed", "behind the curtain", "past the hour",
    "along the narrow wall", "beneath the stairs", "near the cold grate",
    "over the worn floorboards", "against the winter glass",
    "in the thin light", "beside the brown valise", "out in the passage",
]

QUOTE_NOUNS = [
    "train", "ledger", "rent", "collar", "overcoat", "timetable", "lamp",
    "signature", "stamp", "parcel", "umbrella", "receipt", "staircase",
    "window", "kettle", "violin", "blanket", "doorbell", "paycheck",
    "inkwell", "register", "platform", "corridor", "cupboard", "bannister",
]
QUOTE_ADJS = [
    "early", "unpaid", "borrowed", "mended", "crooked", "patient", "narrow",
    "stubborn", "quiet", "honest", "frozen", "tired", "careful", "heavy",
    "thin", "last", "spare", "proper", "gray", "small",
]
QUOTE_VERBS = [
    "wait", "balance", "settle", "carry", "answer", "open", "mend", "count",
    "post", "warm", "hold", "fetch", "copy", "sign", "sweep", "wind",
]
QUOTE_ENDS = [
    "before the bell", "by Thursday", "while it is light", "or we go without",
    "whatever the office says", "before the frost deepens", "if anyone asks",
    "for the last time", "as father promised", "until spring", "all the same",
    "and say nothing", "like any other year",
]


class Minted:
    """Deterministic unique-sentence factory."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.seen: set[str] = set()

    def _unique(self, build) -> str:
        for _ in range(1000):
            s = build()
            if s not in self.seen:
                self.seen.add(s)
                return s
        raise RuntimeError("sentence pool exhausted")

    def speech(self, speaker: str) -> str:
        def build():
            clause = (
                f"I must {self.rng.choice(QUOTE_VERBS)} the "
                f"{self.rng.choice(QUOTE_ADJS)} {self.rng.choice(QUOTE_NOUNS)} "
                f"{self.rng.choice(QUOTE_ENDS)}"
            )
            return f"“{clause},” said {speaker}."
        return self._unique(build)

    def rep_speech(self, speaker: str) -> str:
        def build():
            clause = (
                f"a {self.rng.choice(QUOTE_ADJS)} {self.rng.choice(QUOTE_NOUNS)} "
                f"won’t {self.rng.choice(QUOTE_VERBS)} itself"
            )
            return f"“Mind that {clause},” {speaker} liked to say."
        return self._unique(build)

    def narration(self, topic: str) -> str:
        def build():
            return (
                f"The {self.rng.choice(QUOTE_NOUNS)} "
                f"{self.rng.choice(FILLER_VERBS)} "
                f"{self.rng.choice(FILLER_TAILS)}, and {topic.lower()} "
                f"hung over the {self.rng.choice(QUOTE_NOUNS)} like weather."
            )
        return self._unique(build)

    def place(self, display: str) -> str:
        def build():
            return (
                f"{display} kept its smell of {self.rng.choice(QUOTE_NOUNS)} wax "
                f"and {self.rng.choice(QUOTE_ADJS)} paper "
                f"{self.rng.choice(FILLER_TAILS)}."
            )
        return self._unique(build)

    def filler(self) -> str:
        def build():
            return (
                f"{self.rng.choice(FILLER_SUBJECTS)} {self.rng.choice(FILLER_VERBS)} "
                f"{self.rng.choice(FILLER_TAILS)}."
            )
        return self._unique(build)


def canonical_of(aliases: list[str]) -> str:
    return sorted(aliases, key=lambda n: (-len(n), n))[0]


def slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


CHAR_CANON = {raw: canon for canon, raws in CHARACTERS for raw in raws}
CHAR_IDS = {canon: slug(canon) for canon, _ in CHARACTERS}
LOC_CANON = {raw: canon for canon, raws in LOCATIONS for raw in raws}
LOC_IDS = {canon: slug(canon) for canon, _ in LOCATIONS}


def palette(n: int, s: float, v: float, offset: float) -> list[str]:
    out = []
    for i in range(n):
        h = (offset + i * 0.137508) % 1.0
        r, g, b = colorsys.hsv_to_rgb(h, s, v)
        out.append("#{:02X}{:02X}{:02X}".format(round(r * 255), round(g * 255), round(b * 255)))
    assert len(set(out)) == n, "palette collision"
    return out


def compose_scene(
    rng: random.Random,
    minted: Minted,
    heading: str | None,
    sentences: list[str],
    target_lines: int,
) -> list[str]:
    """Exactly `target_lines` lines; embedded sentences wrapped mid-paragraph."""
    lines: list[str] = []
    if heading is not None:
        lines.append(heading)
        lines.append("")
    for sentence in sentences:
        paragraph = f"{minted.filler()} {sentence} {minted.filler()}"
        lines.extend(textwrap.wrap(paragraph, WRAP))
        lines.append("")
    while len(lines) < target_lines - 1:
        if rng.random() < 0.18 and lines and lines[-1]:
            lines.append("")
        else:
            lines.append(minted.filler())
    while len(lines) < target_lines:
        lines.append(minted.filler())
    if len(lines) > target_lines:
        raise RuntimeError(
            f"scene content overflows its budget: {len(lines)} > {target_lines}"
        )
    if not lines[-1]:
        lines[-1] = minted.filler()
    return lines


def rnd_ratings(rng: random.Random) -> dict:
    return {
        "importance": round(rng.uniform(0.2, 1.0), 4),
        "conflict": round(rng.uniform(0.0, 0.9), 4),
        "sentiment": round(rng.uniform(-0.8, 0.8), 4),
    }


def build_plan() -> dict:
    """Materialize text and the truth tables everything else is emitted from."""
    rng = random.Random(SEED)
    minted = Minted(rng)

    theme_display: dict[str, str] = {}
    scenes: list[dict] = []
    for ci, chapter in enumerate(SCENE_PLAN):
        for j, spec_scene in enumerate(chapter):
            entry = {
                "chapter": ci,
                "index": j,
                "title": SCENE_TITLES[ci][j],
                "loc": spec_scene["loc"],
                "boundary": spec_scene["boundary"],
                "length": SCENE_LENGTHS[ci][j],
                "chars": [],
                "themes": [],
                "extra_sentences": [],
            }
            for raw in spec_scene["chars"]:
                entry["chars"].append({
                    "raw": raw,
                    "sentence": minted.speech(raw),
                    "sentiment": round(rng.uniform(-0.9, 0.9), 4),
                    "emotion": rng.choice(EMOTIONS),
                })
            for raw, quoted in spec_scene["themes"]:
                key = raw.casefold()
                theme_display.setdefault(key, raw)
                entry["themes"].append({
                    "raw": raw,
                    "sentence": minted.narration(theme_display[key]) if quoted else None,
                    "sentiment": round(rng.uniform(-0.7, 0.9), 4),
                    "emotion": rng.choice(EMOTIONS) if quoted else None,
                })
            entry["ratings"] = rnd_ratings(rng)
            entry["summary"] = (
                f"{entry['title']}: "
                f"{CHAR_CANON[entry['chars'][0]['raw']] if entry['chars'] else 'the household'}"
                f" holds out at {LOC_CANON[entry['loc']].lower()} while "
                f"{theme_display[entry['themes'][0]['raw'].casefold()].lower()} presses in."
            )
            scenes.append(entry)

    assert len(scenes) == 24
    assert len(theme_display) == 26, f"expected 26 themes, got {len(theme_display)}"

    # One emotion phrase is pinned for the first appearance.
    scenes[0]["chars"][0]["emotion"] = "excited and carefree"

    # Representative sentences live in each entity's first scene.
    char_rep: dict[str, str] = {}
    loc_rep: dict[str, str] = {}
    char_first: dict[str, tuple[int, int]] = {}
    loc_first: dict[str, tuple[int, int]] = {}
    for entry in scenes:
        for app in entry["chars"]:
            canon = CHAR_CANON[app["raw"]]
            if canon not in char_rep:
                char_rep[canon] = minted.rep_speech(app["raw"])
                char_first[canon] = (entry["chapter"], entry["index"])
                entry["extra_sentences"].append(char_rep[canon])
        canon_loc = LOC_CANON[entry["loc"]]
        if canon_loc not in loc_rep:
            loc_rep[canon_loc] = minted.place(canon_loc)
            loc_first[canon_loc] = (entry["chapter"], entry["index"])
            entry["extra_sentences"].append(loc_rep[canon_loc])
    assert len(char_rep) == 10 and len(loc_rep) == 5

    # Render text.
    chapter_lines: list[list[str]] = [[] for _ in NUMERALS]
    for entry in scenes:
        sentences = [a["sentence"] for a in entry["chars"]]
        sentences += [t["sentence"] for t in entry["themes"] if t["sentence"]]
        sentences += entry["extra_sentences"]
        heading = NUMERALS[entry["chapter"]] if entry["index"] == 0 else None
        block = compose_scene(rng, minted, heading, sentences, entry["length"])
        assert len(block) == entry["length"]
        chapter_lines[entry["chapter"]].extend(block)

    for ci, lines in enumerate(chapter_lines):
        assert len(lines) == sum(SCENE_LENGTHS[ci])
        for line in lines[1:]:
            assert not re.fullmatch(r"[IVX]+", line), f"prose line collides with a marker: {line!r}"
        assert lines[-1], "chapter must not end with a blank line"

    texts = ["\n".join(lines) for lines in chapter_lines]
    full_normalized = normalize("\n\n".join(texts))
    for sentence in minted.seen:
        if sentence in {s for e in scenes for s in (
            [a["sentence"] for a in e["chars"]]
            + [t["sentence"] for t in e["themes"] if t["sentence"]]
            + e["extra_sentences"]
        )}:
            count = full_normalized.count(normalize(sentence))
            assert count == 1, f"sentence must occur exactly once, got {count}: {sentence!r}"

    return {
        "scenes": scenes,
        "texts": texts,
        "chapter_lines": chapter_lines,
        "theme_display": theme_display,
        "char_rep": char_rep,
        "loc_rep": loc_rep,
        "char_first": char_first,
        "loc_first": loc_first,
        "rng": rng,
    }


# ---------------------------------------------------------------------------
# Data dirs
# ---------------------------------------------------------------------------


def write_story_dir(story_id: str, title: str, plan: dict) -> None:
    story_dir = DATA / story_id
    if story_dir.exists():
        shutil.rmtree(story_dir)
    story_dir.mkdir(parents=True)

    header = [
        "The Project Gutenberg eBook of " + title,
        "This file is a generated sample used for offline testing.",
        "",
        f"*** START OF THE PROJECT GUTENBERG EBOOK {title.upper()} ***",
        "",
    ]
    footer = [
        f"*** END OF THE PROJECT GUTENBERG EBOOK {title.upper()} ***",
        "",
        "End of the sample file.",
    ]
    body = [line for lines in plan["chapter_lines"] for line in lines]
    (story_dir / "raw.txt").write_text(
        "\n".join(header + body + footer) + "\n", encoding="utf-8", newline="\n"
    )
    config = {
        "id": story_id,
        "title": title,
        "author": "Sample Press",
        "genre": "novel",
        "source": "raw.txt",
        "chapter_marker": "^[IVX]+$",
        "strip_boilerplate": True,
    }
    (story_dir / "config.json").write_text(
        json.dumps(config, indent=2) + "\n", encoding="utf-8", newline="\n"
    )
    ingest_story(story_dir / "config.json")

    index = json.loads((story_dir / "chapters.json").read_text(encoding="utf-8"))
    assert index["line_count"] == 1752, index["line_count"]
    assert [c["line_end"] - c["line_start"] for c in index["chapters"]] == [584, 600, 568]
    for ci, text in enumerate(plan["texts"]):
        on_disk = (story_dir / "chapters" / f"{ci}.txt").read_text(encoding="utf-8")
        assert on_disk == text + "\n", f"chapter {ci} text drifted during ingest"


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


def emit(root: Path, tag: str, obj: dict) -> None:
    path = root / f"{tag}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def scene_candidates(plan: dict) -> list[dict]:
    """All present scene-quote candidates in pipeline order, with positions."""
    out = []
    for entry in plan["scenes"]:
        k = 0
        for app in entry["chars"]:
            out.append({
                "chapter": entry["chapter"], "scene": entry["index"], "k": k,
                "kind": "character", "raw": app["raw"], "sentence": app["sentence"],
            })
            k += 1
        for theme in entry["themes"]:
            if theme["sentence"] is not None:
                out.append({
                    "chapter": entry["chapter"], "scene": entry["index"], "k": k,
                    "kind": "theme", "raw": theme["raw"], "sentence": theme["sentence"],
                })
            k += 1
    return out


def absent_slots(plan: dict) -> list[dict]:
    out = []
    for entry in plan["scenes"]:
        k = len(entry["chars"])
        for theme in entry["themes"]:
            if theme["sentence"] is None:
                out.append({
                    "chapter": entry["chapter"], "scene": entry["index"], "k": k,
                    "raw": theme["raw"],
                })
            k += 1
    return out


def make_variant(sentence: str, flavor: int) -> str:
    """Cosmetic rewrite that still normalizes to the original sentence."""
    if flavor % 2 == 0:
        variant = sentence.replace("“", '"').replace("”", '"').replace("’", "'")
        if variant == sentence:
            variant = sentence.replace(" ", "  ", 1)
    else:
        variant = sentence.replace(", ", ",  ", 1)
        if variant == sentence:
            variant = sentence.replace(" ", "  ", 1)
    assert variant != sentence
    assert normalize(variant) == normalize(sentence)
    return variant


def make_fabricated(rng: random.Random, speakerish: str, i: int, full_normalized: str) -> str:
    fab = (
        f"“The zeppelin timetable number {i} was never printed,” "
        f"{speakerish} insisted."
    )
    assert normalize(fab) not in full_normalized
    return fab


def emit_fixtures(story_id: str, plan: dict, adversarial: bool) -> dict | None:
    """Write the fixture tree; returns the adversarial manifest if applicable."""
    root = FIXTURES / story_id
    if root.exists():
        shutil.rmtree(root)
    root.mkdir(parents=True)

    rng = random.Random(SEED + (1 if adversarial else 0))
    full_normalized = normalize("\n\n".join(plan["texts"]))

    candidates = scene_candidates(plan)
    assert len(candidates) == 67, len(candidates)
    absents = absent_slots(plan)
    assert len(absents) == 3

    reps = [("character", canon, CHAR_IDS[canon], plan["char_rep"][canon]) for canon, _ in CHARACTERS]
    reps += [("location", canon, LOC_IDS[canon], plan["loc_rep"][canon]) for canon, _ in LOCATIONS]
    assert len(reps) == 15

    manifest = None
    scene_overrides: dict[tuple[int, int, int], dict] = {}
    rep_overrides: dict[str, dict] = {}
    if adversarial:
        # 16 of the 82 present candidates fabricated, 8 cosmetic variants.
        fab_scene_picks = sorted(rng.sample(range(len(candidates)), 13))
        rest = [i for i in range(len(candidates)) if i not in fab_scene_picks]
        var_scene_picks = sorted(rng.sample(rest, 6))
        fab_rep_picks = [1, 6, 11]   # two characters, one location
        var_rep_picks = [3, 12]      # one character, one location

        manifest = {"fabricated": [], "variants": [], "counts": {}}
        for n, idx in enumerate(fab_scene_picks):
            c = candidates[idx]
            fab = make_fabricated(rng, c["raw"], n, full_normalized)
            scene_overrides[(c["chapter"], c["scene"], c["k"])] = {"quote": fab}
            manifest["fabricated"].append({
                "where": "scene", "chapter": c["chapter"], "scene": c["scene"],
                "appearance": c["k"], "candidate": fab,
            })
        for n, idx in enumerate(var_scene_picks):
            c = candidates[idx]
            variant = make_variant(c["sentence"], n)
            stored = index_text(plan["texts"][c["chapter"]]).find_original(variant)
            assert stored is not None
            scene_overrides[(c["chapter"], c["scene"], c["k"])] = {"quote": variant}
            manifest["variants"].append({
                "where": "scene", "chapter": c["chapter"], "scene": c["scene"],
                "appearance": c["k"], "candidate": variant, "stored": stored,
            })
        for n, idx in enumerate(fab_rep_picks):
            what, canon, eid, _ = reps[idx]
            fab = make_fabricated(rng, canon, 100 + n, full_normalized)
            rep_overrides[eid] = {"quote": fab}
            manifest["fabricated"].append({
                "where": what, "entity_id": eid, "candidate": fab,
            })
        for n, idx in enumerate(var_rep_picks):
            what, canon, eid, sentence = reps[idx]
            variant = make_variant(sentence, n + 1)
            home = (plan["char_first"] if what == "character" else plan["loc_first"])[canon][0]
            stored = index_text(plan["texts"][home]).find_original(variant)
            assert stored is not None
            rep_overrides[eid] = {"quote": variant}
            manifest["variants"].append({
                "where": what, "entity_id": eid, "candidate": variant, "stored": stored,
            })
        manifest["counts"] = {
            "candidates": len(candidates) + len(reps),
            "fabricated": len(fab_scene_picks) + len(fab_rep_picks),
            "variants": len(var_scene_picks) + len(var_rep_picks),
        }

    # scene_split
    by_chapter: dict[int, list[dict]] = {}
    for entry in plan["scenes"]:
        by_chapter.setdefault(entry["chapter"], []).append(entry)
    for ci, entries in by_chapter.items():
        start = 1
        items = []
        for entry in entries:
            item = {
                "title": entry["title"],
                "summary": entry["summary"],
                "line_start": start,
                "line_end": start + entry["length"],
                "location": entry["loc"],
            }
            if entry["boundary"] is not None:
                item["boundary_explanation"] = entry["boundary"]
            items.append(item)
            start += entry["length"]
        emit(root, f"scene_split/ch{ci}", {"scenes": items})

    # scene_detail + quote_fix
    zero = {"importance": 0.0, "conflict": 0.0, "sentiment": 0.0}
    for entry in plan["scenes"]:
        ci, j = entry["chapter"], entry["index"]
        char_apps = []
        k = 0
        for app in entry["chars"]:
            item = {"name": app["raw"], "sentiment": app["sentiment"], "emotion": app["emotion"]}
            override = scene_overrides.get((ci, j, k))
            item["quote"] = override["quote"] if override else app["sentence"]
            char_apps.append(item)
            k += 1
        theme_apps = []
        for theme in entry["themes"]:
            item = {"name": theme["raw"], "sentiment": theme["sentiment"]}
            if theme["emotion"]:
                item["emotion"] = theme["emotion"]
            if theme["sentence"] is not None:
                override = scene_overrides.get((ci, j, k))
                item["quote"] = override["quote"] if override else theme["sentence"]
            theme_apps.append(item)
            k += 1
        emit(root, f"scene_detail/ch{ci}/s{j}/character",
             {"ratings": entry["ratings"], "appearances": char_apps})
        emit(root, f"scene_detail/ch{ci}/s{j}/theme",
             {"ratings": zero, "appearances": theme_apps})

    for slot in absents:
        emit(root, f"quote_fix/ch{slot['chapter']}/s{slot['scene']}/a{slot['k']}", {
            "explanation": (
                f"{plan['theme_display'][slot['raw'].casefold()]} surfaces through "
                "the scene's small rituals rather than any single line."
            )
        })
    for (ci, j, k), override in scene_overrides.items():
        if normalize(override["quote"]) in full_normalized:
            continue  # variants verify; only fabricated candidates need a fix
        emit(root, f"quote_fix/ch{ci}/s{j}/a{k}", {
            "explanation": "The mood here is carried by gesture, not by a quotable line."
        })
    for eid, override in rep_overrides.items():
        if normalize(override["quote"]) in full_normalized:
            continue
        what = "character" if eid in CHAR_IDS.values() else "location"
        emit(root, f"quote_fix/{what}/{eid}", {
            "explanation": "No single line sums this one up; presence does the work."
        })

    # dedup loops
    emit(root, "entity_dedup/characters", {"groups": [raws for _, raws in CHARACTERS]})
    emit(root, "entity_dedup/locations", {"groups": [raws for _, raws in LOCATIONS]})
    emit(root, "group_dedup", {"groups": [
        ["Vann Family", "Vann family"],
        ["Dock Workers"],
        ["Officials", "City Officials"],
        ["Neighbors"],
    ]})

    # chapter summaries + interactions
    chapter_blurbs = [
        "Tobias wakes changed and the counting house closes ranks around his absence.",
        "The family stretches thin credit across a frozen week while the docks fall quiet.",
        "A slow thaw loosens the household and the ledgers are balanced one last time.",
    ]
    srng = random.Random(SEED + 7)
    for ci in range(3):
        emit(root, f"chapter_summary/ch{ci}", {
            "summary": chapter_blurbs[ci],
            "ratings": rnd_ratings(srng),
        })
    pairs: dict[int, set[tuple[str, str]]] = {0: set(), 1: set(), 2: set()}
    for entry in plan["scenes"]:
        ids = sorted({CHAR_IDS[CHAR_CANON[a["raw"]]] for a in entry["chars"]})
        for x in range(len(ids)):
            for y in range(x + 1, len(ids)):
                pairs[entry["chapter"]].add((ids[x], ids[y]))
    id_to_name = {cid: canon for canon, cid in CHAR_IDS.items()}
    for ci, chapter_pairs in pairs.items():
        for a, b in sorted(chapter_pairs):
            emit(root, f"interaction/ch{ci}/{a}--{b}", {
                "summary": (
                    f"{id_to_name[a]} and {id_to_name[b]} trade short words and "
                    f"longer silences across chapter {NUMERALS[ci]}."
                )
            })

    # entity profiles
    char_colors = palette(10, 0.62, 0.82, 0.03)
    for (canon, _), color in zip(CHARACTERS, char_colors):
        cid = CHAR_IDS[canon]
        override = rep_overrides.get(cid)
        emit(root, f"char_profile/{cid}", {
            "group": GROUP_LABELS[canon],
            "color": color,
            "color_explanation": f"A steady {color} for {canon}'s place in the winter household.",
            "quote": override["quote"] if override else plan["char_rep"][canon],
        })
    for canon, _ in LOCATIONS:
        lid = LOC_IDS[canon]
        override = rep_overrides.get(lid)
        emit(root, f"loc_profile/{lid}", {
            "quote": override["quote"] if override else plan["loc_rep"][canon],
        })

    theme_colors = palette(26, 0.45, 0.92, 0.41)
    emit(root, "theme_colors", {"colors": [
        {"name": display, "color": color}
        for display, color in zip(plan["theme_display"].values(), theme_colors)
    ]})

    return manifest


# ---------------------------------------------------------------------------
# Golden run + self-checks
# ---------------------------------------------------------------------------


def run_and_check(story_id: str, expect_replaced: int) -> None:
    gateway = Gateway.fixture(FIXTURES, story_id=story_id)
    story = run_pipeline(DATA / story_id, gateway, target="both", write=True)
    stats = analytics.story_stats(story)
    expected = {
        "lines": 1752, "chapters": 3, "scenes": 24, "characters": 10,
        "locations": 5, "themes": 26,
        "quotes": 82 - expect_replaced,
    }
    assert stats == expected, f"{story_id}: stats {stats} != {expected}"
    log = story.pipeline_log
    assert log.quotes_checked == 82, log.quotes_checked
    assert log.quotes_replaced == expect_replaced, log.quotes_replaced
    assert len(log.alias_merges) == 9, log.alias_merges
    assert len(log.group_merges) == 2, log.group_merges
    assert validate(story) == []
    print(f"{story_id}: ok ({stats['quotes']} quotes, {log.quotes_replaced} replaced)")


def main() -> None:
    plan = build_plan()

    write_story_dir(SAMPLE_ID, "A Metamorphosis Sampler", plan)
    write_story_dir(ADV_ID, "A Metamorphosis Sampler (Adversarial Twin)", plan)

    emit_fixtures(SAMPLE_ID, plan, adversarial=False)
    manifest = emit_fixtures(ADV_ID, plan, adversarial=True)
    assert manifest is not None
    assert manifest["counts"] == {"candidates": 82, "fabricated": 16, "variants": 8}
    (DATA / ADV_ID / "quote_manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )

    run_and_check(SAMPLE_ID, expect_replaced=0)
    run_and_check(ADV_ID, expect_replaced=16)


if __name__ == "__main__":
    main()
