"""HTTP service over the story store.

Read endpoints serve on-disk artifacts byte-for-byte. The three on-the-fly
operations (ask, rank-by-trait, categorize-by-color) call the gateway and
then enforce their response invariants server-side: chapter indices in range,
rankings as exact permutations of scene appearances, categorizations total
with distinct colors. Every repair is reported back under `repairs` so
clients can calibrate trust without defensive code.

On-the-fly results are cached on disk per story; a cache hit issues zero
gateway calls.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, Response

from . import prompts
from .colors import FALLBACK_COLOR, ensure_distinct
from .gateway import Gateway, GatewayError, LlmRequest, Message
from .model import EntityKind, StoryData, StoryMeta, canonical_json_bytes, deserialize

logger = logging.getLogger(__name__)

MAX_CATEGORIES = 8
OTHER_LABEL = "other"


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _not_found(what: str) -> ServiceError:
    return ServiceError(404, "not_found", what)


# ---------------------------------------------------------------------------
# Store and cache
# ---------------------------------------------------------------------------


class StoryStore:
    """Immutable view over `<data_dir>/<story_id>/` artifacts, memoized by mtime."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self._stories: dict[str, tuple[float, bytes, StoryData]] = {}
        self._lock = threading.Lock()

    def story_ids(self) -> list[str]:
        if not self.data_dir.is_dir():
            return []
        return sorted(
            p.parent.name for p in self.data_dir.glob("*/story.json") if p.is_file()
        )

    def _load(self, story_id: str) -> tuple[bytes, StoryData]:
        path = self.data_dir / story_id / "story.json"
        if not path.is_file():
            raise _not_found(f"no story {story_id!r}")
        mtime = path.stat().st_mtime
        with self._lock:
            cached = self._stories.get(story_id)
            if cached is not None and cached[0] == mtime:
                return cached[1], cached[2]
        raw = path.read_bytes()
        story = deserialize(raw)
        with self._lock:
            self._stories[story_id] = (mtime, raw, story)
        return raw, story

    def story_bytes(self, story_id: str) -> bytes:
        return self._load(story_id)[0]

    def story(self, story_id: str) -> StoryData:
        return self._load(story_id)[1]

    def metas(self) -> list[StoryMeta]:
        return [self.story(sid).meta for sid in self.story_ids()]

    def chapter_text(self, story_id: str, index: int) -> str:
        story = self.story(story_id)
        if not any(c.index == index for c in story.chapters):
            raise _not_found(f"story {story_id!r} has no chapter {index}")
        path = self.data_dir / story_id / "chapters" / f"{index}.txt"
        if not path.is_file():
            raise _not_found(f"chapter text for {story_id!r}/{index} is missing on disk")
        text = path.read_text(encoding="utf-8")
        return text[:-1] if text.endswith("\n") else text


class DiskCache:
    """File-per-entry cache under `<data_dir>/<story_id>/cache/`."""

    def __init__(self, data_dir: str | Path, read_enabled: bool = True):
        self.data_dir = Path(data_dir)
        self.read_enabled = read_enabled
        self._lock = threading.Lock()

    def _path(self, story_id: str, key: str) -> Path:
        return self.data_dir / story_id / "cache" / f"{key}.json"

    def get(self, story_id: str, key: str) -> dict | None:
        if not self.read_enabled:
            return None
        path = self._path(story_id, key)
        try:
            value = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except (OSError, json.JSONDecodeError) as exc:
            logger.warning("cache entry %s unreadable, treating as a miss: %s", path, exc)
            return None
        return value if isinstance(value, dict) else None

    def put(self, story_id: str, key: str, value: dict) -> None:
        path = self._path(story_id, key)
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(value, ensure_ascii=False, sort_keys=True), encoding="utf-8")
            tmp.replace(path)


def request_digest(op: str, story_id: str, payload: dict) -> str:
    """Stable key for one on-the-fly request; also names its fixture tag."""
    blob = canonical_json_bytes({"op": op, "story": story_id, "payload": payload})
    return hashlib.sha256(blob).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Invariant enforcement for on-the-fly results
# ---------------------------------------------------------------------------


def _scene_entity_ids(story: StoryData, kind: EntityKind) -> list[tuple[int, int, list[str]]]:
    out = []
    for scene in story.scenes:
        ids = [a.entity_id for a in scene.appearances if a.kind == kind]
        out.append((scene.chapter_index, scene.scene_index, ids))
    return out


def repair_ranking(story: StoryData, kind: EntityKind, parsed: dict) -> tuple[list[dict], list[str]]:
    """Force per-scene rankings into exact permutations of scene appearances."""
    proposed: dict[tuple[int, int], list[dict]] = {}
    repairs: list[str] = []
    for entry in parsed.get("per_scene", []):
        key = (int(entry["chapter_index"]), int(entry["scene_index"]))
        if key in proposed:
            repairs.append(f"scene {key}: duplicate entry from model, kept the first")
            continue
        proposed[key] = entry["ranked"]

    known = {(c, s) for c, s, _ in _scene_entity_ids(story, kind)}
    for key in sorted(proposed.keys() - known):
        repairs.append(f"scene {key}: not part of this story, dropped")

    per_scene: list[dict] = []
    for ci, si, expected in _scene_entity_ids(story, kind):
        ranked: list[dict] = []
        seen: set[str] = set()
        for item in proposed.get((ci, si), []):
            eid = str(item["entity_id"])
            if eid not in expected:
                repairs.append(f"scene ({ci}, {si}): {eid!r} is not in this scene, dropped")
                continue
            if eid in seen:
                repairs.append(f"scene ({ci}, {si}): {eid!r} ranked twice, kept the first")
                continue
            seen.add(eid)
            ranked.append({"entity_id": eid, "justification": str(item["justification"])})
        for eid in expected:
            if eid not in seen:
                repairs.append(f"scene ({ci}, {si}): {eid!r} missing from ranking, appended")
                ranked.append({"entity_id": eid, "justification": "(not ranked by model)"})
        per_scene.append({"chapter_index": ci, "scene_index": si, "ranked": ranked})
    return per_scene, repairs


def repair_categorization(
    story: StoryData, kind: EntityKind, parsed: dict
) -> tuple[list[dict], dict[str, dict], list[str]]:
    """Enforce the category cap, assignment totality, and color distinctness."""
    repairs: list[str] = []
    categories: list[dict] = []
    seen_labels: set[str] = set()
    for cat in parsed.get("categories", []):
        label = str(cat["label"]).strip()
        if not label or label in seen_labels:
            repairs.append(f"category {label!r}: empty or duplicate, dropped")
            continue
        seen_labels.add(label)
        categories.append({"label": label, "color": str(cat.get("color", FALLBACK_COLOR))})

    merged: set[str] = set()
    needs_other = False
    if len(categories) > MAX_CATEGORIES:
        for cat in categories[MAX_CATEGORIES - 1 :]:
            merged.add(cat["label"])
        repairs.append(
            f"{len(categories)} categories exceed the cap of {MAX_CATEGORIES}; "
            f"{len(merged)} merged into {OTHER_LABEL!r}"
        )
        categories = categories[: MAX_CATEGORIES - 1]
        needs_other = True

    entities = story.characters if kind == EntityKind.CHARACTER else story.themes
    entity_ids = [e.entity_id for e in entities]
    kept_labels = {c["label"] for c in categories}

    raw_assignments: dict[str, dict] = {}
    for item in parsed.get("assignments", []):
        eid = str(item["entity_id"])
        if eid not in entity_ids:
            repairs.append(f"assignment for unknown entity {eid!r} dropped")
            continue
        if eid in raw_assignments:
            repairs.append(f"entity {eid!r} assigned twice, kept the first")
            continue
        raw_assignments[eid] = item

    assignments: dict[str, dict] = {}
    for eid in entity_ids:
        item = raw_assignments.get(eid)
        label = str(item["label"]).strip() if item else ""
        explanation = str(item.get("explanation", "")) if item else ""
        if label in merged:
            label, needs_other = OTHER_LABEL, True
        elif label not in kept_labels:
            if item is not None:
                repairs.append(f"entity {eid!r}: label {label!r} is not a category, reassigned to {OTHER_LABEL!r}")
            else:
                repairs.append(f"entity {eid!r}: unassigned by model, assigned to {OTHER_LABEL!r}")
            label, needs_other = OTHER_LABEL, True
        assignments[eid] = {"label": label, "explanation": explanation}

    if needs_other and OTHER_LABEL not in kept_labels:
        if len(categories) >= MAX_CATEGORIES:
            dropped = categories.pop()
            repairs.append(f"category {dropped['label']!r} merged into {OTHER_LABEL!r} to fit the cap")
            for entry in assignments.values():
                if entry["label"] == dropped["label"]:
                    entry["label"] = OTHER_LABEL
        categories.append({"label": OTHER_LABEL, "color": FALLBACK_COLOR})

    colors, changed = ensure_distinct([c["color"] for c in categories])
    for idx in changed:
        repairs.append(f"category {categories[idx]['label']!r}: color repaired to {colors[idx]}")
    for cat, color in zip(categories, colors):
        cat["color"] = color
    return categories, assignments, repairs


# ---------------------------------------------------------------------------
# App factory
# ---------------------------------------------------------------------------


def _etag_of(data: bytes) -> str:
    return '"' + hashlib.sha256(data).hexdigest() + '"'


def _meta_obj(meta: StoryMeta) -> dict:
    return {
        "id": meta.id,
        "title": meta.title,
        "author": meta.author,
        "genre": meta.genre.value,
        "source": meta.source,
        "line_count": meta.line_count,
    }


def _parse_scope(story: StoryData, scope) -> tuple[int | None, int | None]:
    """Returns (chapter, scene); (None, None) means story scope."""
    if scope == "story" or scope is None:
        return None, None
    if not isinstance(scope, dict):
        raise ServiceError(422, "invalid_scope", "scope must be \"story\" or an object with chapter/scene")
    if "chapter" not in scope:
        raise ServiceError(422, "invalid_scope", "scoped requests need a chapter index")
    try:
        chapter = int(scope["chapter"])
    except (TypeError, ValueError):
        raise ServiceError(422, "invalid_scope", "chapter must be an integer")
    if not any(c.index == chapter for c in story.chapters):
        raise ServiceError(422, "invalid_scope", f"chapter {chapter} out of range")
    scene = None
    if "scene" in scope and scope["scene"] is not None:
        try:
            scene = int(scope["scene"])
        except (TypeError, ValueError):
            raise ServiceError(422, "invalid_scope", "scene must be an integer")
        if not any(
            s.chapter_index == chapter and s.scene_index == scene for s in story.scenes
        ):
            raise ServiceError(422, "invalid_scope", f"scene {scene} out of range for chapter {chapter}")
    return chapter, scene


def _entity_scope(scope) -> EntityKind:
    if scope == "characters":
        return EntityKind.CHARACTER
    if scope == "themes":
        return EntityKind.THEME
    raise ServiceError(422, "invalid_scope", 'scope must be "characters" or "themes"')


def create_app(
    data_dir: str | Path,
    gateway: Gateway,
    use_cache: bool = True,
) -> FastAPI:
    store = StoryStore(data_dir)
    cache = DiskCache(data_dir, read_enabled=use_cache)
    app = FastAPI(title="storyribbons", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.gateway = gateway

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(GatewayError)
    async def _gateway_error(_request: Request, exc: GatewayError):
        return JSONResponse(
            status_code=502,
            content={"error": {"code": "gateway", "message": str(exc)}},
        )

    async def _json_body(request: Request) -> dict:
        try:
            body = await request.json()
        except (json.JSONDecodeError, UnicodeDecodeError):
            raise ServiceError(400, "bad_request", "request body must be a JSON object")
        if not isinstance(body, dict):
            raise ServiceError(400, "bad_request", "request body must be a JSON object")
        return body

    def _cached(story_id: str, op: str, payload: dict, compute) -> dict:
        key = f"{op}-{request_digest(op, story_id, payload)}"
        hit = cache.get(story_id, key)
        if hit is not None:
            return hit
        value = compute()
        cache.put(story_id, key, value)
        return value

    # -- reads --------------------------------------------------------------

    @app.get("/stories")
    async def list_stories():
        return [_meta_obj(m) for m in store.metas()]

    @app.get("/stories/{story_id}")
    async def get_story(story_id: str, request: Request):
        raw = store.story_bytes(story_id)
        etag = _etag_of(raw)
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"ETag": etag})
        return Response(content=raw, media_type="application/json", headers={"ETag": etag})

    @app.get("/stories/{story_id}/chapters/{index}/text")
    async def get_chapter_text(story_id: str, index: int, request: Request):
        text = store.chapter_text(story_id, index)
        data = text.encode("utf-8")
        etag = _etag_of(data)
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"ETag": etag})
        return PlainTextResponse(content=data, headers={"ETag": etag})

    # -- on-the-fly operations ------------------------------------------------

    @app.post("/stories/{story_id}/ask")
    async def ask(story_id: str, request: Request):
        story = store.story(story_id)
        body = await _json_body(request)
        question = str(body.get("question", "")).strip()
        if not question:
            raise ServiceError(400, "bad_request", "question must be non-empty")
        chapter, scene = _parse_scope(story, body.get("scope", "story"))
        payload = {"question": question, "chapter": chapter, "scene": scene}

        def compute() -> dict:
            digest = request_digest("ask", story_id, payload)
            if chapter is None:
                summaries = [(cs.chapter_index, cs.summary) for cs in story.chapter_summaries]
                system, user = prompts.ask_story(question, summaries)
                tag = f"{story_id}/ask/story/{digest}"
                resp = gateway.complete(LlmRequest.chat(tag, system, user, "ask_story"))
                index = int(resp.parsed["chapter_index"])
                if not any(c.index == index for c in story.chapters):
                    messages = [Message("system", system), Message("user", user),
                                Message("assistant", resp.raw_text),
                                Message("user",
                                        f"chapter_index {index} does not exist; the story has chapters "
                                        f"0..{len(story.chapters) - 1}. Answer again with valid JSON.")]
                    retry = gateway.complete(
                        LlmRequest(tag=f"{tag}/retry", messages=messages, schema_tag="ask_story")
                    )
                    index = int(retry.parsed["chapter_index"])
                    if not any(c.index == index for c in story.chapters):
                        raise GatewayError(f"{tag}: model kept answering with an out-of-range chapter", tag=tag)
                    resp = retry
                return {
                    "question": question,
                    "chapter_index": index,
                    "explanation": str(resp.parsed["explanation"]),
                }
            text = store.chapter_text(story_id, chapter)
            if scene is not None:
                s = next(
                    x for x in story.scenes
                    if x.chapter_index == chapter and x.scene_index == scene
                )
                text = "\n".join(text.split("\n")[s.line_start : s.line_end])
                tag = f"{story_id}/ask/ch{chapter}s{scene}/{digest}"
            else:
                tag = f"{story_id}/ask/ch{chapter}/{digest}"
            system, user = prompts.ask_text(question, text)
            resp = gateway.complete(LlmRequest.chat(tag, system, user, "ask_text"))
            return {"question": question, "answer": str(resp.parsed["answer"])}

        return _cached(story_id, "ask", payload, compute)

    @app.post("/stories/{story_id}/rank-by-trait")
    async def rank_by_trait(story_id: str, request: Request):
        story = store.story(story_id)
        body = await _json_body(request)
        trait = str(body.get("trait", "")).strip()
        if not trait:
            raise ServiceError(400, "bad_request", "trait must be non-empty")
        kind = _entity_scope(body.get("scope", "characters"))
        payload = {"trait": trait, "scope": kind.value}

        def compute() -> dict:
            digest = request_digest("rank", story_id, payload)
            scenes_desc = [
                {"chapter_index": ci, "scene_index": si, "entity_ids": ids}
                for ci, si, ids in _scene_entity_ids(story, kind)
                if ids
            ]
            system, user = prompts.rank_by_trait(trait, scenes_desc)
            tag = f"{story_id}/rank/{kind.value}/{digest}"
            resp = gateway.complete(LlmRequest.chat(tag, system, user, "trait_ranking"))
            per_scene, repairs = repair_ranking(story, kind, resp.parsed)
            return {
                "trait": trait,
                "scope": "characters" if kind == EntityKind.CHARACTER else "themes",
                "per_scene": per_scene,
                "repairs": repairs,
            }

        return _cached(story_id, "rank", payload, compute)

    @app.post("/stories/{story_id}/categorize-by-color")
    async def categorize_by_color(story_id: str, request: Request):
        story = store.story(story_id)
        body = await _json_body(request)
        attribute = str(body.get("attribute", "")).strip()
        if not attribute:
            raise ServiceError(400, "bad_request", "attribute must be non-empty")
        kind = _entity_scope(body.get("scope", "characters"))
        payload = {"attribute": attribute, "scope": kind.value}

        def compute() -> dict:
            digest = request_digest("categorize", story_id, payload)
            if kind == EntityKind.CHARACTER:
                entities = [
                    {"entity_id": c.entity_id, "name": c.canonical_name} for c in story.characters
                ]
            else:
                entities = [{"entity_id": t.entity_id, "name": t.name} for t in story.themes]
            system, user = prompts.categorize_by_color(attribute, entities)
            tag = f"{story_id}/categorize/{kind.value}/{digest}"
            resp = gateway.complete(LlmRequest.chat(tag, system, user, "color_categories"))
            categories, assignments, repairs = repair_categorization(story, kind, resp.parsed)
            return {
                "attribute": attribute,
                "scope": "characters" if kind == EntityKind.CHARACTER else "themes",
                "categories": categories,
                "assignments": assignments,
                "repairs": repairs,
            }

        return _cached(story_id, "categorize", payload, compute)

    return app


__all__ = [
    "DiskCache",
    "MAX_CATEGORIES",
    "ServiceError",
    "StoryStore",
    "create_app",
    "repair_categorization",
    "repair_ranking",
    "request_digest",
]
