"""Decomposition/aggregation pipeline producing a validated StoryData.

Stages: per-chapter scene segmentation, per-scene detail extraction, then
three correction loops (quote verification, entity dedup, group dedup), then
chapter and entity aggregation. Fan-out stages go through the gateway's
map_concurrent; correction loops and assembly are serialized barriers, each
running exactly once per story.

Scene drafts use the 1-based end-exclusive line ranges the model is prompted
with; persisted scenes use 0-based chapter-local ranges. The conversion
happens in one place, at scene assembly.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import logging

from . import prompts
from .colors import FALLBACK_COLOR, ensure_distinct
from .dedup import AliasMap, build_alias_map, identity_alias_map
from .gateway import Gateway, GatewayError, LlmRequest, ModelRole
from .ingest import load_ingested
from .model import (
    Chapter,
    ChapterSummary,
    CharacterEntry,
    EntityAppearance,
    EntityKind,
    Evidence,
    EvidenceVariant,
    Group,
    Interaction,
    LocationEntry,
    ProvenanceLog,
    Ratings,
    Scene,
    StoryData,
    ThemeEntry,
    canonical_json_bytes,
    q4,
    serialize,
    slugify,
    validate,
)
from .quotes import NormalizedText, index_text

logger = logging.getLogger(__name__)

TARGET_KINDS: dict[str, list[EntityKind]] = {
    "characters": [EntityKind.CHARACTER],
    "themes": [EntityKind.THEME],
    "both": [EntityKind.CHARACTER, EntityKind.THEME],
}


class PipelineError(RuntimeError):
    def __init__(self, message: str, failures: list[str] | None = None):
        self.failures = failures or []
        if self.failures:
            message = message + ":\n" + "\n".join(f"  - {f}" for f in self.failures)
        super().__init__(message)


# ---------------------------------------------------------------------------
# Drafts and partition repair
# ---------------------------------------------------------------------------


@dataclass
class RawAppearance:
    raw_name: str
    kind: EntityKind
    sentiment: float
    emotion: str
    quote_candidate: str | None = None
    evidence: Evidence | None = None


@dataclass
class SceneDraft:
    title: str
    summary: str
    location_name: str
    boundary_explanation: str
    line_start: int  # 1-based, end-exclusive over chapter lines
    line_end: int
    ratings: Ratings | None = None
    raw_appearances: list[RawAppearance] = field(default_factory=list)


def repair_partition(
    ranges: list[tuple[int, int]], line_count: int
) -> tuple[list[tuple[int, int]], list[int], list[str]]:
    """Force proposed 1-based ranges into a partition of [1, line_count+1).

    Clips to chapter bounds, closes gaps by extending the previous scene
    forward, resolves overlaps in favor of the earlier scene, drops ranges
    left empty. Returns (repaired ranges, surviving input indices, repair
    notes). An empty result means nothing was salvageable.
    """
    hi = line_count + 1
    repairs: list[str] = []
    clipped: list[tuple[int, int, int]] = []
    for i, (s, e) in enumerate(ranges):
        cs = min(max(int(s), 1), hi)
        ce = min(max(int(e), 1), hi)
        if (cs, ce) != (s, e):
            repairs.append(f"scene {i}: clipped [{s},{e}) to [{cs},{ce})")
        if cs >= ce:
            repairs.append(f"scene {i}: dropped empty range")
            continue
        clipped.append((i, cs, ce))

    out: list[list[int]] = []
    kept: list[int] = []
    for i, s, e in clipped:
        if not out:
            if s != 1:
                repairs.append(f"scene {i}: start moved from {s} to 1 to cover the chapter head")
                s = 1
        else:
            prev = out[-1]
            if s > prev[1]:
                repairs.append(f"scene {i}: previous end extended from {prev[1]} to {s} to close a gap")
                prev[1] = s
            elif s < prev[1]:
                repairs.append(f"scene {i}: start moved from {s} to {prev[1]} to resolve an overlap")
                s = prev[1]
                if s >= e:
                    repairs.append(f"scene {i}: dropped, fully covered by earlier scenes")
                    continue
        out.append([s, e])
        kept.append(i)
    if out and out[-1][1] != hi:
        repairs.append(f"scene {kept[-1]}: end extended from {out[-1][1]} to {hi} to cover the chapter tail")
        out[-1][1] = hi
    return [(s, e) for s, e in out], kept, repairs


def fallback_draft(chapter: Chapter) -> SceneDraft:
    return SceneDraft(
        title=chapter.title or "Chapter",
        summary="",
        location_name="Unknown",
        boundary_explanation="",
        line_start=1,
        line_end=chapter.line_count + 1,
    )


def parse_scene_drafts(chapter: Chapter, parsed: dict, log: ProvenanceLog) -> list[SceneDraft]:
    """Turn one validated scene_split response into repaired drafts."""
    raw_scenes = parsed["scenes"]
    if not raw_scenes:
        log.flag("scene_split", f"ch{chapter.index}: zero scenes returned, fallback single scene")
        return [fallback_draft(chapter)]
    ranges = [(sc["line_start"], sc["line_end"]) for sc in raw_scenes]
    repaired, kept, repairs = repair_partition(ranges, chapter.line_count)
    for note in repairs:
        log.flag("scene_split", f"ch{chapter.index}: {note}")
    if not repaired:
        log.flag("scene_split", f"ch{chapter.index}: no usable ranges, fallback single scene")
        return [fallback_draft(chapter)]
    drafts: list[SceneDraft] = []
    for pos, (idx, (start, end)) in enumerate(zip(kept, repaired)):
        sc = raw_scenes[idx]
        explanation = str(sc.get("boundary_explanation", "")).strip()
        if pos == 0:
            explanation = ""
        elif not explanation:
            explanation = "(no boundary explanation provided)"
            log.flag("scene_split", f"ch{chapter.index}: scene {pos} missing boundary explanation")
        drafts.append(
            SceneDraft(
                title=str(sc["title"]).strip(),
                summary=str(sc["summary"]).strip(),
                location_name=str(sc["location"]).strip() or "Unknown",
                boundary_explanation=explanation,
                line_start=start,
                line_end=end,
            )
        )
    return drafts


def _clamp(value: float, lo: float, hi: float, what: str) -> float:
    v = float(value)
    if v < lo or v > hi:
        logger.warning("%s: %s clamped into [%s, %s]", what, v, lo, hi)
        return min(max(v, lo), hi)
    return v


def _parse_ratings(obj: dict, what: str) -> Ratings:
    return Ratings(
        importance=q4(_clamp(obj["importance"], 0.0, 1.0, f"{what}/importance")),
        conflict=q4(_clamp(obj["conflict"], 0.0, 1.0, f"{what}/conflict")),
        sentiment=q4(_clamp(obj["sentiment"], -1.0, 1.0, f"{what}/sentiment")),
    )


# ---------------------------------------------------------------------------
# Pipeline run
# ---------------------------------------------------------------------------


@contextmanager
def _timed(log: ProvenanceLog, name: str):
    t0 = time.perf_counter()
    try:
        yield
    finally:
        log.timings[name] = time.perf_counter() - t0


def _assign_ids(names: list[str]) -> dict[str, str]:
    """Slug ids in input order; collisions get a numeric suffix."""
    ids: dict[str, str] = {}
    taken: set[str] = set()
    for name in names:
        base = slugify(name)
        candidate, k = base, 2
        while candidate in taken:
            candidate = f"{base}-{k}"
            k += 1
        taken.add(candidate)
        ids[name] = candidate
    return ids


def _scene_text(chapter_lines: list[str], draft: SceneDraft) -> str:
    return "\n".join(chapter_lines[draft.line_start - 1 : draft.line_end - 1])


class _Run:
    """State for one pipeline execution."""

    def __init__(self, gateway: Gateway, target: str, allow_partial: bool):
        if target not in TARGET_KINDS:
            raise ValueError(f"target must be one of {sorted(TARGET_KINDS)}, got {target!r}")
        self.gateway = gateway
        self.kinds = TARGET_KINDS[target]
        self.allow_partial = allow_partial
        self.log = ProvenanceLog(model_ids=gateway.model_ids())
        self.failures: list[str] = []

    # -- step 2a ------------------------------------------------------------

    def segment_all(self, chapters: list[Chapter], lines: dict[int, list[str]]) -> dict[int, list[SceneDraft]]:
        requests = []
        for ch in chapters:
            numbered = prompts.format_numbered(list(enumerate(lines[ch.index], start=1)))
            system, user = prompts.scene_split(ch.title, numbered)
            requests.append(LlmRequest.chat(f"scene_split/ch{ch.index}", system, user, "scene_split"))
        responses = self.gateway.map_concurrent(requests)
        drafts: dict[int, list[SceneDraft]] = {}
        for ch, resp in zip(chapters, responses):
            if isinstance(resp, GatewayError):
                self.failures.append(f"scene_split/ch{ch.index}: {resp}")
                self.log.flag("scene_split", f"ch{ch.index}: gateway failure, fallback single scene")
                drafts[ch.index] = [fallback_draft(ch)]
            else:
                drafts[ch.index] = parse_scene_drafts(ch, resp.parsed, self.log)
        return drafts

    # -- step 2b ------------------------------------------------------------

    def detail_all(self, chapters: list[Chapter], lines: dict[int, list[str]], drafts: dict[int, list[SceneDraft]]) -> None:
        ratings_kind = EntityKind.CHARACTER if EntityKind.CHARACTER in self.kinds else self.kinds[0]
        requests, slots = [], []
        for ch in chapters:
            for j, draft in enumerate(drafts[ch.index]):
                text = _scene_text(lines[ch.index], draft)
                for kind in self.kinds:
                    system, user = prompts.scene_detail(kind.value, draft.title, text)
                    tag = f"scene_detail/ch{ch.index}/s{j}/{kind.value}"
                    requests.append(LlmRequest.chat(tag, system, user, "scene_detail"))
                    slots.append((ch.index, j, kind))
        responses = self.gateway.map_concurrent(requests)
        for (ci, j, kind), req, resp in zip(slots, requests, responses):
            draft = drafts[ci][j]
            if isinstance(resp, GatewayError):
                self.failures.append(f"{req.tag}: {resp}")
                self.log.flag("scene_detail", f"ch{ci}/s{j}: {kind.value} appearances unavailable")
                if kind == ratings_kind and draft.ratings is None:
                    draft.ratings = Ratings(0.0, 0.0, 0.0)
                continue
            if kind == ratings_kind:
                draft.ratings = _parse_ratings(resp.parsed["ratings"], req.tag)
            for app in resp.parsed["appearances"]:
                name = str(app["name"]).strip()
                if not name:
                    continue
                quote = str(app.get("quote", "")).strip() or None
                emotion = str(app.get("emotion", "")).strip() or "n/a"
                draft.raw_appearances.append(
                    RawAppearance(
                        raw_name=name,
                        kind=kind,
                        sentiment=q4(_clamp(app["sentiment"], -1.0, 1.0, f"{req.tag}/{name}")),
                        emotion=emotion,
                        quote_candidate=quote,
                    )
                )
        for ch in chapters:
            for draft in drafts[ch.index]:
                if draft.ratings is None:
                    draft.ratings = Ratings(0.0, 0.0, 0.0)

    # -- correction loop 1 ----------------------------------------------------

    def verify_quotes(
        self,
        chapters: list[Chapter],
        lines: dict[int, list[str]],
        indexed: dict[int, NormalizedText],
        drafts: dict[int, list[SceneDraft]],
    ) -> None:
        pending: list[tuple[int, int, int, RawAppearance]] = []
        for ch in chapters:
            for j, draft in enumerate(drafts[ch.index]):
                for k, app in enumerate(draft.raw_appearances):
                    if app.quote_candidate is None:
                        pending.append((ch.index, j, k, app))
                        continue
                    self.log.quotes_checked += 1
                    found = indexed[ch.index].find_original(app.quote_candidate)
                    if found is not None:
                        app.evidence = Evidence(EvidenceVariant.QUOTE, found, True)
                    else:
                        self.log.quotes_replaced += 1
                        self.log.flag(
                            "quote_verification",
                            f"ch{ch.index}/s{j}/a{k}: candidate for {app.raw_name!r} failed the exact-match check",
                        )
                        pending.append((ch.index, j, k, app))

        requests = []
        for ci, j, k, app in pending:
            text = _scene_text(lines[ci], drafts[ci][j])
            system, user = prompts.quote_explanation(app.raw_name, app.emotion, text)
            requests.append(LlmRequest.chat(f"quote_fix/ch{ci}/s{j}/a{k}", system, user, "explanation"))
        responses = self.gateway.map_concurrent(requests)
        for (ci, j, k, app), resp in zip(pending, responses):
            if isinstance(resp, GatewayError):
                self.log.flag("quote_verification", f"ch{ci}/s{j}/a{k}: explanation call failed, kept emotion phrase")
                app.evidence = Evidence(EvidenceVariant.EXPLANATION, app.emotion, False)
            else:
                app.evidence = Evidence(EvidenceVariant.EXPLANATION, str(resp.parsed["explanation"]), False)
        self.log.loop_runs["quote_verification"] = self.log.loop_runs.get("quote_verification", 0) + 1

    # -- correction loops 2 and 3 ----------------------------------------------

    def run_dedup(self, kind: str, names: list[str]) -> AliasMap:
        if not names:
            return AliasMap(kind=kind, entries={}, repairs=[])
        tag = "group_dedup" if kind == "group" else f"entity_dedup/{kind}s"
        system, user = prompts.dedup(kind, names)
        request = LlmRequest.chat(tag, system, user, "dedup_groups", model_role=ModelRole.DEDUP)
        try:
            resp = self.gateway.complete(request)
            groups = [[str(n) for n in group] for group in resp.parsed["groups"]]
            amap = build_alias_map(kind, names, groups)
        except GatewayError as exc:
            self.log.flag("entity_dedup", f"{kind}: identity fallback after gateway failure: {exc}")
            amap = identity_alias_map(kind, names, str(exc))
        for note in amap.repairs:
            self.log.flag("entity_dedup", f"{kind}: {note}")
        return amap

    # -- aggregation ----------------------------------------------------------

    def build_scenes(
        self,
        chapters: list[Chapter],
        drafts: dict[int, list[SceneDraft]],
        char_map: AliasMap,
        char_ids: dict[str, str],
        loc_map: AliasMap,
        loc_ids: dict[str, str],
        theme_ids: dict[str, str],
    ) -> list[Scene]:
        scenes: list[Scene] = []
        for ch in chapters:
            for j, draft in enumerate(drafts[ch.index]):
                appearances: list[EntityAppearance] = []
                seen: set[tuple[EntityKind, str]] = set()
                for app in draft.raw_appearances:
                    if app.kind == EntityKind.CHARACTER:
                        entity_id = char_ids[char_map.resolve(app.raw_name)]
                    else:
                        entity_id = theme_ids[app.raw_name.casefold()]
                    if (app.kind, entity_id) in seen:
                        self.log.flag(
                            "alias_application",
                            f"ch{ch.index}/s{j}: duplicate appearance of {entity_id} after merging, kept the first",
                        )
                        continue
                    seen.add((app.kind, entity_id))
                    assert app.evidence is not None, "verify_quotes must run before scene assembly"
                    appearances.append(
                        EntityAppearance(
                            entity_id=entity_id,
                            kind=app.kind,
                            sentiment=app.sentiment,
                            emotion=app.emotion,
                            evidence=app.evidence,
                        )
                    )
                assert draft.ratings is not None
                scenes.append(
                    Scene(
                        chapter_index=ch.index,
                        scene_index=j,
                        title=draft.title,
                        summary=draft.summary,
                        location_id=loc_ids[loc_map.resolve(draft.location_name)],
                        boundary_explanation=draft.boundary_explanation,
                        line_start=draft.line_start - 1,
                        line_end=draft.line_end - 1,
                        ratings=draft.ratings,
                        appearances=appearances,
                    )
                )
        return scenes

    def summarize_chapters(self, chapters: list[Chapter], scenes: list[Scene], char_names: dict[str, str]) -> list[ChapterSummary]:
        by_chapter: dict[int, list[Scene]] = {ch.index: [] for ch in chapters}
        for s in scenes:
            by_chapter[s.chapter_index].append(s)
        max_len = max(ch.line_count for ch in chapters)

        requests = []
        for ch in chapters:
            summaries = [s.summary for s in by_chapter[ch.index]]
            system, user = prompts.chapter_summary(ch.title, summaries)
            requests.append(LlmRequest.chat(f"chapter_summary/ch{ch.index}", system, user, "chapter_summary"))
        responses = self.gateway.map_concurrent(requests)

        summaries: list[ChapterSummary] = []
        pair_requests, pair_slots = [], []
        for ch, resp in zip(chapters, responses):
            if isinstance(resp, GatewayError):
                self.failures.append(f"chapter_summary/ch{ch.index}: {resp}")
                self.log.flag("chapter_summary", f"ch{ch.index}: summary unavailable")
                text, ratings = "", Ratings(0.0, 0.0, 0.0)
            else:
                text = str(resp.parsed["summary"]).strip()
                ratings = _parse_ratings(resp.parsed["ratings"], f"chapter_summary/ch{ch.index}")

            char_counts: dict[str, int] = {}
            loc_counts: dict[str, int] = {}
            co_scenes: dict[tuple[str, str], list[Scene]] = {}
            for s in by_chapter[ch.index]:
                present = sorted({a.entity_id for a in s.appearances if a.kind == EntityKind.CHARACTER})
                for eid in present:
                    char_counts[eid] = char_counts.get(eid, 0) + 1
                loc_counts[s.location_id] = loc_counts.get(s.location_id, 0) + 1
                for x in range(len(present)):
                    for y in range(x + 1, len(present)):
                        co_scenes.setdefault((present[x], present[y]), []).append(s)

            summary = ChapterSummary(
                chapter_index=ch.index,
                summary=text,
                ratings=ratings,
                length_norm=q4(ch.line_count / max_len),
                character_counts=char_counts,
                location_counts=loc_counts,
                interactions=[],
            )
            summaries.append(summary)
            for (a, b), shared in sorted(co_scenes.items()):
                system, user = prompts.interaction(char_names[a], char_names[b], [s.summary for s in shared])
                pair_requests.append(
                    LlmRequest.chat(f"interaction/ch{ch.index}/{a}--{b}", system, user, "interaction")
                )
                pair_slots.append((summary, a, b))

        for (summary, a, b), resp in zip(pair_slots, self.gateway.map_concurrent(pair_requests)):
            if isinstance(resp, GatewayError):
                self.log.flag("chapter_summary", f"ch{summary.chapter_index}: interaction {a}--{b} unavailable")
                summary.interactions.append(Interaction(a, b, ""))
            else:
                summary.interactions.append(Interaction(a, b, str(resp.parsed["summary"]).strip()))
        return summaries

    def summarize_entities(
        self,
        chapters: list[Chapter],
        lines: dict[int, list[str]],
        indexed: dict[int, NormalizedText],
        scenes: list[Scene],
        char_ids: dict[str, str],
        char_aliases: dict[str, list[str]],
        loc_ids: dict[str, str],
        loc_aliases: dict[str, list[str]],
        theme_names: dict[str, str],
        theme_ids: dict[str, str],
    ) -> tuple[list[CharacterEntry], list[LocationEntry], list[ThemeEntry], list[Group]]:
        scene_lookup: dict[tuple[int, int], Scene] = {(s.chapter_index, s.scene_index): s for s in scenes}

        char_scenes: dict[str, list[Scene]] = {cid: [] for cid in char_ids.values()}
        for s in scenes:
            for a in s.appearances:
                if a.kind == EntityKind.CHARACTER:
                    char_scenes[a.entity_id].append(s)
        loc_scenes: dict[str, list[Scene]] = {lid: [] for lid in loc_ids.values()}
        for s in scenes:
            loc_scenes[s.location_id].append(s)

        requests, slots = [], []
        for name, cid in char_ids.items():
            present = char_scenes[cid]
            mentions = [
                a.evidence.text
                for s in present[:6]
                for a in s.appearances
                if a.entity_id == cid and a.evidence is not None and a.evidence.verified
            ][:6] + [s.summary for s in present[:3]]
            system, user = prompts.character_profile(name, char_aliases[name], mentions)
            requests.append(LlmRequest.chat(f"char_profile/{cid}", system, user, "character_profile"))
            slots.append(("character", name, cid))
        for name, lid in loc_ids.items():
            present = loc_scenes[lid]
            mentions = [s.summary for s in present[:3]]
            if present:
                first = present[0]
                mentions.append(_scene_text(lines[first.chapter_index], _draft_like(first)))
            system, user = prompts.location_profile(name, mentions)
            requests.append(LlmRequest.chat(f"loc_profile/{lid}", system, user, "location_profile"))
            slots.append(("location", name, lid))
        if theme_names:
            system, user = prompts.theme_colors(list(theme_names.values()))
            requests.append(LlmRequest.chat("theme_colors", system, user, "theme_colors"))
            slots.append(("themes", "", ""))

        responses = self.gateway.map_concurrent(requests)

        profiles: dict[str, dict] = {}
        theme_palette: dict[str, str] = {}
        for (what, name, eid), resp in zip(slots, responses):
            if isinstance(resp, GatewayError):
                self.log.flag("entity_summaries", f"{what} {eid or 'palette'}: profile unavailable, degraded entry")
                continue
            if what == "themes":
                for item in resp.parsed["colors"]:
                    theme_palette[str(item["name"]).casefold()] = str(item["color"])
            else:
                profiles[eid] = resp.parsed

        # Representative quotes reuse the loop-1 oracle, counters included.
        fix_requests, fix_slots = [], []
        rep_quotes: dict[str, Evidence] = {}

        def verify_rep(eid: str, what: str, name: str, candidate: str, home_chapter: int) -> None:
            candidate = candidate.strip()
            if candidate:
                self.log.quotes_checked += 1
                order = [home_chapter] + [c.index for c in chapters if c.index != home_chapter]
                for ci in order:
                    found = indexed[ci].find_original(candidate)
                    if found is not None:
                        rep_quotes[eid] = Evidence(EvidenceVariant.QUOTE, found, True)
                        return
                self.log.quotes_replaced += 1
                self.log.flag("quote_verification", f"{what} {eid}: representative quote failed the exact-match check")
            system, user = prompts.quote_explanation(name, "n/a", "")
            fix_requests.append(LlmRequest.chat(f"quote_fix/{what}/{eid}", system, user, "explanation"))
            fix_slots.append((eid, name))

        for name, cid in char_ids.items():
            profile = profiles.get(cid)
            home = char_scenes[cid][0].chapter_index if char_scenes[cid] else chapters[0].index
            verify_rep(cid, "character", name, str(profile.get("quote", "")) if profile else "", home)
        for name, lid in loc_ids.items():
            profile = profiles.get(lid)
            home = loc_scenes[lid][0].chapter_index if loc_scenes[lid] else chapters[0].index
            verify_rep(lid, "location", name, str(profile.get("quote", "")) if profile else "", home)

        for (eid, name), resp in zip(fix_slots, self.gateway.map_concurrent(fix_requests)):
            if isinstance(resp, GatewayError):
                self.log.flag("quote_verification", f"{eid}: explanation call failed, placeholder kept")
                rep_quotes[eid] = Evidence(EvidenceVariant.EXPLANATION, f"No verified quote found for {name}.", False)
            else:
                rep_quotes[eid] = Evidence(EvidenceVariant.EXPLANATION, str(resp.parsed["explanation"]), False)

        # Correction loop 3: group labels are deduped once per story.
        raw_labels: dict[str, str] = {}
        for name, cid in char_ids.items():
            profile = profiles.get(cid)
            label = str(profile.get("group", "")).strip() if profile else ""
            raw_labels[cid] = label or "Ungrouped"
        group_map = self.run_dedup("group", list(dict.fromkeys(raw_labels.values())))
        self.log.loop_runs["group_dedup"] = self.log.loop_runs.get("group_dedup", 0) + 1
        ordered_labels = list(dict.fromkeys(group_map.resolve(raw_labels[cid]) for cid in char_ids.values()))
        group_ids = _assign_ids(ordered_labels)
        groups = [Group(group_id=group_ids[label], label=label) for label in ordered_labels]
        self.log.group_merges.extend(
            (raw, group_ids[canonical]) for raw, canonical in group_map.merges()
        )

        characters: list[CharacterEntry] = []
        for name, cid in char_ids.items():
            profile = profiles.get(cid) or {}
            characters.append(
                CharacterEntry(
                    entity_id=cid,
                    canonical_name=name,
                    aliases=char_aliases[name],
                    group_id=group_ids[group_map.resolve(raw_labels[cid])],
                    color=str(profile.get("color", FALLBACK_COLOR)),
                    color_explanation=str(profile.get("color_explanation", "")),
                    representative_quote=rep_quotes[cid],
                )
            )
        repaired, changed = ensure_distinct([c.color for c in characters])
        for idx in changed:
            self.log.flag("entity_summaries", f"character {characters[idx].entity_id}: color repaired to {repaired[idx]}")
        for c, color in zip(characters, repaired):
            c.color = color

        locations: list[LocationEntry] = []
        for name, lid in loc_ids.items():
            first = loc_scenes[lid][0]
            locations.append(
                LocationEntry(
                    entity_id=lid,
                    canonical_name=name,
                    aliases=loc_aliases[name],
                    first_appearance=(first.chapter_index, first.scene_index),
                    representative_quote=rep_quotes[lid],
                )
            )

        themes: list[ThemeEntry] = []
        theme_colors = [theme_palette.get(key, FALLBACK_COLOR) for key in theme_names]
        repaired, changed = ensure_distinct(theme_colors)
        for idx, (key, display) in enumerate(theme_names.items()):
            if idx in changed:
                self.log.flag("entity_summaries", f"theme {theme_ids[key]}: color repaired to {repaired[idx]}")
            themes.append(ThemeEntry(entity_id=theme_ids[key], name=display, color=repaired[idx]))

        return characters, locations, themes, groups


def _draft_like(scene: Scene) -> SceneDraft:
    """Adapter for _scene_text over a persisted scene (0-based to 1-based)."""
    return SceneDraft(
        title=scene.title,
        summary=scene.summary,
        location_name="",
        boundary_explanation="",
        line_start=scene.line_start + 1,
        line_end=scene.line_end + 1,
    )


def run_pipeline(
    story_dir: str | Path,
    gateway: Gateway,
    target: str = "both",
    allow_partial: bool = False,
    write: bool = True,
) -> StoryData:
    """Execute the full pipeline for an ingested story directory."""
    story_dir = Path(story_dir)
    run = _Run(gateway, target, allow_partial)
    log = run.log

    with _timed(log, "load"):
        meta, chapters, texts = load_ingested(story_dir)
        lines = {ci: text.split("\n") for ci, text in texts.items()}
        for ch in chapters:
            if len(lines[ch.index]) != ch.line_count:
                raise PipelineError(
                    f"chapter {ch.index} text has {len(lines[ch.index])} lines, index says {ch.line_count}"
                )
        indexed = {ci: index_text(text) for ci, text in texts.items()}

    with _timed(log, "scene_split"):
        drafts = run.segment_all(chapters, lines)

    with _timed(log, "scene_detail"):
        run.detail_all(chapters, lines, drafts)

    with _timed(log, "quote_verification"):
        run.verify_quotes(chapters, lines, indexed, drafts)

    with _timed(log, "entity_dedup"):
        ordered = lambda names: list(dict.fromkeys(names))
        char_names = ordered(
            app.raw_name
            for ch in chapters
            for d in drafts[ch.index]
            for app in d.raw_appearances
            if app.kind == EntityKind.CHARACTER
        )
        loc_names = ordered(d.location_name for ch in chapters for d in drafts[ch.index])
        char_map = run.run_dedup("character", char_names)
        loc_map = run.run_dedup("location", loc_names)
        log.loop_runs["entity_dedup"] = log.loop_runs.get("entity_dedup", 0) + 1

    with _timed(log, "assemble_scenes"):
        char_ids = _assign_ids(char_map.canonical_names())
        loc_ids = _assign_ids(loc_map.canonical_names())
        log.alias_merges.extend((raw, char_ids[canon]) for raw, canon in char_map.merges())
        log.alias_merges.extend((raw, loc_ids[canon]) for raw, canon in loc_map.merges())

        theme_names: dict[str, str] = {}
        for ch in chapters:
            for d in drafts[ch.index]:
                for app in d.raw_appearances:
                    if app.kind == EntityKind.THEME:
                        theme_names.setdefault(app.raw_name.casefold(), app.raw_name)
        theme_ids = {key: tid for key, tid in zip(theme_names, _assign_ids(list(theme_names.values())).values())}

        char_aliases = {canon: [] for canon in char_map.canonical_names()}
        for raw in char_map.entries:
            char_aliases[char_map.resolve(raw)].append(raw)
        loc_aliases = {canon: [] for canon in loc_map.canonical_names()}
        for raw in loc_map.entries:
            loc_aliases[loc_map.resolve(raw)].append(raw)

        scenes = run.build_scenes(chapters, drafts, char_map, char_ids, loc_map, loc_ids, theme_ids)

    with _timed(log, "chapter_summaries"):
        id_to_name = {cid: name for name, cid in char_ids.items()}
        chapter_summaries = run.summarize_chapters(chapters, scenes, id_to_name)

    with _timed(log, "entity_summaries"):
        characters, locations, themes, groups = run.summarize_entities(
            chapters, lines, indexed, scenes,
            char_ids, char_aliases, loc_ids, loc_aliases, theme_names, theme_ids,
        )

    with _timed(log, "finalize"):
        story = StoryData(
            meta=meta,
            chapters=chapters,
            chapter_summaries=chapter_summaries,
            scenes=scenes,
            characters=characters,
            groups=groups,
            locations=locations,
            themes=themes,
            pipeline_log=log,
        )
        if run.failures:
            if not run.allow_partial:
                raise PipelineError("pipeline steps failed", run.failures)
            log.flag("run", f"partial result: {len(run.failures)} failed steps")
        violations = validate(story, texts)
        if violations:
            raise PipelineError("assembled story violates invariants", [str(v) for v in violations])
        if write:
            (story_dir / "story.json").write_bytes(serialize(story))
            (story_dir / "provenance.json").write_bytes(canonical_json_bytes(log.to_obj()))
    return story


__all__ = [
    "PipelineError",
    "RawAppearance",
    "SceneDraft",
    "TARGET_KINDS",
    "fallback_draft",
    "parse_scene_drafts",
    "repair_partition",
    "run_pipeline",
]
