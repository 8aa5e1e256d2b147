"""Model-endpoint clients: chat requests, digests, HTTP transport.

The wire protocol is plain HTTP JSON chat-completion with optional inline
base64 audio content parts; no vendor-specific fields. Requests are
content-addressed: the digest covers model id, messages (audio by content
hash, not path), temperature and max_tokens, so identical logical requests
share one cache entry.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Protocol

import requests as _requests

from .errors import (
    AttachmentTooLarge,
    BackendError,
    BackendTimeout,
    HttpStatusError,
    MalformedResponse,
)

logger = logging.getLogger(__name__)

DEFAULT_TEXT_MODEL = "Qwen2.5-7B-Instruct"
DEFAULT_AUDIO_MODEL = "Qwen2-Audio-7B-Instruct"

TEXT_ENDPOINT_ENV = "EMOSURA_TEXT_ENDPOINT"
AUDIO_ENDPOINT_ENV = "EMOSURA_AUDIO_ENDPOINT"
API_KEY_ENV = "EMOSURA_API_KEY"

DEFAULT_MAX_AUDIO_BYTES = 25 * 1024 * 1024


@dataclass(frozen=True)
class Attachment:
    """Inline audio payload; hashed by content."""

    data: bytes
    media_type: str = "audio/wav"

    def sha256(self) -> str:
        return hashlib.sha256(self.data).hexdigest()


@dataclass(frozen=True)
class Message:
    role: str
    text: str
    attachment: Attachment | None = None


def text_message(text: str, role: str = "user") -> Message:
    return Message(role=role, text=text)


def audio_message(text: str, audio_bytes: bytes, media_type: str = "audio/wav",
                  role: str = "user") -> Message:
    return Message(role=role, text=text, attachment=Attachment(audio_bytes, media_type))


@dataclass(frozen=True)
class ChatRequest:
    """One chat-completion request.

    ``meta`` carries pipeline bookkeeping (stage kind, sample/caption/apu ids)
    for cache records and mock lookup; it is excluded from the digest.
    """

    model_id: str
    messages: tuple[Message, ...]
    temperature: float = 0.0
    max_tokens: int = 1024
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def digest(self) -> str:
        payload = {
            "model_id": self.model_id,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
            "messages": [
                {
                    "role": m.role,
                    "text": m.text,
                    "attachment_sha256": m.attachment.sha256() if m.attachment else None,
                    "media_type": m.attachment.media_type if m.attachment else None,
                }
                for m in self.messages
            ],
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def prompt_sha256(self) -> str:
        """Digest over the concatenated message texts (used in cache records)."""
        joined = "\x1e".join(m.text for m in self.messages)
        return hashlib.sha256(joined.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class BackendConfig:
    """Connection settings for one endpoint.

    The API key is read from the named environment variable at call time and
    never stored on any persisted structure.
    """

    endpoint_url: str
    api_key_env: str = API_KEY_ENV
    timeout_s: float = 60.0
    max_inflight: int = 8
    retry_attempts: int = 2
    retry_backoff: tuple[float, ...] = (0.5, 2.0)
    max_audio_bytes: int = DEFAULT_MAX_AUDIO_BYTES


class Backend(Protocol):
    """Anything that answers chat requests with assistant text."""

    def complete(self, request: ChatRequest) -> str:  # pragma: no cover - protocol
        ...


def _chat_url(endpoint_url: str) -> str:
    if endpoint_url.rstrip("/").endswith("/chat/completions"):
        return endpoint_url.rstrip("/")
    return endpoint_url.rstrip("/") + "/chat/completions"


def _message_payload(m: Message) -> dict:
    if m.attachment is None:
        return {"role": m.role, "content": m.text}
    audio_format = m.attachment.media_type.split("/")[-1]
    return {
        "role": m.role,
        "content": [
            {"type": "text", "text": m.text},
            {
                "type": "input_audio",
                "input_audio": {
                    "data": base64.b64encode(m.attachment.data).decode("ascii"),
                    "format": audio_format,
                },
            },
        ],
    }


class HttpBackend:
    """HTTP JSON chat-completion client with bounded retries."""

    def __init__(self, config: BackendConfig):
        self.config = config
        self._session = _requests.Session()

    def complete(self, request: ChatRequest) -> str:
        cfg = self.config
        for m in request.messages:
            if m.attachment and len(m.attachment.data) > cfg.max_audio_bytes:
                raise AttachmentTooLarge(
                    f"attachment {len(m.attachment.data)} bytes exceeds cap {cfg.max_audio_bytes}"
                )
        payload = {
            "model": request.model_id,
            "messages": [_message_payload(m) for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(cfg.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        url = _chat_url(cfg.endpoint_url)
        attempts = cfg.retry_attempts + 1
        last_error: BackendError | None = None
        for attempt in range(attempts):
            try:
                resp = self._session.post(url, json=payload, headers=headers,
                                          timeout=cfg.timeout_s)
            except _requests.Timeout:
                last_error = BackendTimeout(f"timeout after {cfg.timeout_s}s: {url}")
            except _requests.RequestException as exc:
                last_error = BackendError(f"transport failure: {exc}")
            else:
                if resp.status_code // 100 != 2:
                    last_error = HttpStatusError(resp.status_code, resp.text)
                else:
                    try:
                        data = resp.json()
                        return data["choices"][0]["message"]["content"]
                    except (ValueError, KeyError, IndexError, TypeError) as exc:
                        last_error = MalformedResponse(
                            f"unexpected completion payload: {exc}: {resp.text[:300]}"
                        )
            if attempt < attempts - 1:
                backoff = cfg.retry_backoff
                delay = backoff[min(attempt, len(backoff) - 1)] if backoff else 0.0
                logger.debug("retrying %s after %.2fs (%s)", url, delay, last_error)
                time.sleep(delay)
        assert last_error is not None
        raise last_error


def chat_complete(request: ChatRequest, config: BackendConfig, cache=None) -> str:
    """One text chat-completion; consults ``cache`` by request digest first."""
    kind = request.meta.get("kind", "chat")
    key = request.digest()
    if cache is not None:
        hit = cache.get(kind, key)
        if hit is not None:
            return hit["raw_response"]
    raw = HttpBackend(config).complete(request)
    if cache is not None:
        cache.put(kind, key, {"kind": kind, "model_id": request.model_id,
                              "prompt_sha256": request.prompt_sha256(),
                              "raw_response": raw})
    return raw


def audio_chat_complete(request: ChatRequest, config: BackendConfig, cache=None) -> str:
    """Same contract as chat_complete; requires a non-empty audio attachment."""
    if not any(m.attachment and m.attachment.data for m in request.messages):
        raise ValueError("audio_chat_complete requires a non-empty audio attachment")
    return chat_complete(request, config, cache=cache)
