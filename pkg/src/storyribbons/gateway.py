"""Provider-agnostic LLM access.

One gateway serves two model roles (extraction and dedup), validates every
response against a registered schema, re-prompts on validation failure, and
bounds concurrent in-flight requests with a single gateway-wide semaphore so
nested fan-out can never exceed the configured limit.

Offline runs use the fixture provider: responses are played back from
`fixtures/<story_id>/<tag>.json`, keyed by the request tag. A missing fixture
is a hard error so prompt-plan drift shows up immediately.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Protocol

from .schemas import get_validator

logger = logging.getLogger(__name__)

DEFAULT_MAX_CONCURRENCY = 8
RE_PROMPTS = 3  # re-prompts after a schema failure, so at most 4 attempts per request
TRANSPORT_ATTEMPTS = 5
BACKOFF_BASE_SECONDS = 0.5

_REPAIR_PROMPT = (
    "Your previous reply failed validation: {error}\n"
    "Reply again with ONLY a corrected JSON object, no prose and no code fences."
)


class ModelRole(str, Enum):
    EXTRACTION = "extraction"
    DEDUP = "dedup"


@dataclass
class Message:
    role: str
    content: str


@dataclass
class LlmRequest:
    """One structured-output call, identified by a run-stable tag."""

    tag: str
    messages: list[Message]
    schema_tag: str
    temperature: float = 0.0
    model_role: ModelRole = ModelRole.EXTRACTION

    @classmethod
    def chat(
        cls,
        tag: str,
        system: str,
        user: str,
        schema_tag: str,
        model_role: ModelRole = ModelRole.EXTRACTION,
        temperature: float = 0.0,
    ) -> "LlmRequest":
        return cls(
            tag=tag,
            messages=[Message("system", system), Message("user", user)],
            schema_tag=schema_tag,
            temperature=temperature,
            model_role=model_role,
        )


@dataclass
class LlmResponse:
    raw_text: str
    parsed: Any
    attempts: int


class GatewayError(RuntimeError):
    def __init__(self, message: str, tag: str | None = None):
        super().__init__(message)
        self.tag = tag


class TransportError(GatewayError):
    pass


class AuthError(GatewayError):
    pass


class FixtureMissingError(GatewayError):
    pass


class SchemaViolationError(GatewayError):
    def __init__(self, message: str, tag: str | None = None, raw_text: str = ""):
        super().__init__(message, tag)
        self.raw_text = raw_text


class Provider(Protocol):
    def send(self, request: LlmRequest, messages: list[Message]) -> str: ...

    def describe(self) -> str: ...


@dataclass
class FixtureProvider:
    """Plays back canned responses from `<root>/<tag>.json`."""

    root: Path

    def send(self, request: LlmRequest, messages: list[Message]) -> str:
        path = Path(self.root) / f"{request.tag}.json"
        if not path.is_file():
            raise FixtureMissingError(f"no fixture for tag {request.tag!r}", tag=request.tag)
        return path.read_text(encoding="utf-8")

    def describe(self) -> str:
        return f"fixture:{Path(self.root).name}"


@dataclass
class HttpChatProvider:
    """Chat-completions wire format against a configurable endpoint."""

    api_base: str
    api_key: str
    model: str
    timeout: float = 120.0

    def send(self, request: LlmRequest, messages: list[Message]) -> str:
        import requests

        url = self.api_base.rstrip("/") + "/chat/completions"
        try:
            resp = requests.post(
                url,
                json={
                    "model": self.model,
                    "temperature": request.temperature,
                    "messages": [{"role": m.role, "content": m.content} for m in messages],
                },
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"{request.tag}: {exc}", tag=request.tag) from exc
        if resp.status_code in (401, 403):
            raise AuthError(f"{request.tag}: authentication rejected ({resp.status_code})", tag=request.tag)
        if resp.status_code >= 400:
            raise TransportError(f"{request.tag}: HTTP {resp.status_code}", tag=request.tag)
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"{request.tag}: malformed completion payload: {exc}", tag=request.tag) from exc

    def describe(self) -> str:
        return self.model

    @classmethod
    def from_env(cls, role: ModelRole) -> "HttpChatProvider":
        suffix = role.value.upper()
        key = os.environ.get(f"SR_API_KEY_{suffix}", "")
        model = os.environ.get(f"SR_MODEL_{suffix}", "")
        base = os.environ.get(f"SR_API_BASE_{suffix}", "")
        missing = [
            name
            for name, value in [
                (f"SR_API_KEY_{suffix}", key),
                (f"SR_MODEL_{suffix}", model),
                (f"SR_API_BASE_{suffix}", base),
            ]
            if not value
        ]
        if missing:
            raise AuthError(f"live provider for role {role.value!r} unconfigured: set {', '.join(missing)}")
        return cls(api_base=base, api_key=key, model=model)


def _strip_fences(text: str) -> str:
    t = text.strip()
    if t.startswith("```"):
        t = t.split("\n", 1)[1] if "\n" in t else ""
        if t.rstrip().endswith("```"):
            t = t.rstrip()[:-3]
    return t.strip()


def _parse_and_validate(raw: str, schema_tag: str) -> tuple[Any, str | None]:
    try:
        value = json.loads(_strip_fences(raw))
    except json.JSONDecodeError as exc:
        return None, f"not valid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})"
    validator = get_validator(schema_tag)
    error = next(iter(validator.iter_errors(value)), None)
    if error is not None:
        where = "/".join(str(p) for p in error.absolute_path) or "<root>"
        return None, f"schema violation at {where}: {error.message}"
    return value, None


class Gateway:
    """Thread-safe front door for all model calls."""

    def __init__(
        self,
        providers: dict[ModelRole, Provider],
        max_concurrency: int = DEFAULT_MAX_CONCURRENCY,
        re_prompts: int = RE_PROMPTS,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_concurrency < 1:
            raise ValueError("max_concurrency must be >= 1")
        self._providers = providers
        self.max_concurrency = max_concurrency
        self._re_prompts = re_prompts
        self._sleep = sleep
        self._inflight = threading.BoundedSemaphore(max_concurrency)
        self._count_lock = threading.Lock()
        self.call_count = 0

    @classmethod
    def fixture(cls, fixture_root: str | Path, story_id: str | None = None, **kwargs) -> "Gateway":
        root = Path(fixture_root)
        if story_id is not None:
            root = root / story_id
        provider = FixtureProvider(root)
        return cls({ModelRole.EXTRACTION: provider, ModelRole.DEDUP: provider}, **kwargs)

    @classmethod
    def from_env(cls, **kwargs) -> "Gateway":
        return cls(
            {role: HttpChatProvider.from_env(role) for role in ModelRole},
            **kwargs,
        )

    def model_ids(self) -> dict[str, str]:
        return {role.value: provider.describe() for role, provider in self._providers.items()}

    def complete(self, request: LlmRequest) -> LlmResponse:
        """Send one request, validating and re-prompting until the schema holds."""
        with self._count_lock:
            self.call_count += 1
        provider = self._providers[request.model_role]
        messages = list(request.messages)
        raw = ""
        error = None
        for attempt in range(1, self._re_prompts + 2):
            raw = self._send_with_backoff(provider, request, messages)
            parsed, error = _parse_and_validate(raw, request.schema_tag)
            if error is None:
                return LlmResponse(raw_text=raw, parsed=parsed, attempts=attempt)
            logger.warning("%s: attempt %d rejected: %s", request.tag, attempt, error)
            messages = messages + [
                Message("assistant", raw),
                Message("user", _REPAIR_PROMPT.format(error=error)),
            ]
        raise SchemaViolationError(
            f"{request.tag}: response kept failing {request.schema_tag!r} validation: {error}",
            tag=request.tag,
            raw_text=raw,
        )

    def _send_with_backoff(
        self, provider: Provider, request: LlmRequest, messages: list[Message]
    ) -> str:
        delay = BACKOFF_BASE_SECONDS
        last: TransportError | None = None
        for i in range(TRANSPORT_ATTEMPTS):
            try:
                with self._inflight:
                    return provider.send(request, messages)
            except FixtureMissingError:
                raise
            except AuthError:
                raise
            except TransportError as exc:
                last = exc
                if i < TRANSPORT_ATTEMPTS - 1:
                    logger.warning("%s: transport failure, retrying in %.1fs: %s", request.tag, delay, exc)
                    self._sleep(delay)
                    delay *= 2
        assert last is not None
        raise last

    def map_concurrent(
        self, requests: list[LlmRequest], limit: int | None = None
    ) -> list[LlmResponse | GatewayError]:
        """Run requests with at most `limit` in flight; errors returned positionally."""
        if limit is None:
            limit = self.max_concurrency
        if limit < 1:
            raise ValueError("limit must be >= 1")
        if not requests:
            return []

        def one(req: LlmRequest) -> LlmResponse | GatewayError:
            try:
                return self.complete(req)
            except GatewayError as exc:
                return exc

        with ThreadPoolExecutor(max_workers=min(limit, len(requests))) as pool:
            return list(pool.map(one, requests))


__all__ = [
    "AuthError",
    "DEFAULT_MAX_CONCURRENCY",
    "FixtureMissingError",
    "FixtureProvider",
    "Gateway",
    "GatewayError",
    "HttpChatProvider",
    "LlmRequest",
    "LlmResponse",
    "Message",
    "ModelRole",
    "Provider",
    "SchemaViolationError",
    "TransportError",
]
