"""Completion backends: an OpenAI-style HTTP client, a scripted responder and a random one.

Every backend exposes ``complete(prompt, key=None) -> str``. Each call is
reported to ``on_exchange`` (if set) as a :class:`CompletionExchange`,
failures included.
"""

from __future__ import annotations

import hashlib
import logging
import os
import re
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Hashable

import httpx
import numpy as np

from gamebench.errors import BackendUnavailable, InvalidConfig, MalformedResponse, ScriptExhausted

log = logging.getLogger(__name__)

API_KEY_ENV = "GAMEBENCH_API_KEY"
KINDS = ("http", "scripted", "random")

ACTIONS_MARKER = "=== ACTIONS ==="
_ACTION_LINE = re.compile(r"^\s*(\d+)\.\s+(.+?)\s*$")


@dataclass
class BackendConfig:
    kind: str = "scripted"
    endpoint_url: str = ""
    model_name: str = ""
    temperature: float = 0.7
    max_tokens: int = 512
    request_timeout: float = 60.0
    max_retries: int = 3
    script_path: str = ""
    backoff_base: float = 1.0
    max_concurrency: int = 4

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InvalidConfig(f"backend kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "http" and not (self.endpoint_url and self.model_name):
            raise InvalidConfig("http backend needs endpoint_url and model_name")
        if self.kind == "scripted" and not self.script_path:
            raise InvalidConfig("scripted backend needs script_path")
        if self.temperature < 0:
            raise InvalidConfig("temperature must be >= 0")
        if self.max_retries < 0 or self.max_tokens < 1 or self.max_concurrency < 1:
            raise InvalidConfig("max_retries, max_tokens and max_concurrency are out of range")

    @property
    def label(self) -> str:
        return self.model_name or self.kind


@dataclass
class CompletionExchange:
    request_id: str
    prompt: str
    response: str | None
    latency: float
    attempt: int
    error: str | None = None

    @property
    def prompt_hash(self) -> str:
        return sha256(self.prompt)

    def to_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "prompt_hash": self.prompt_hash,
            "response": self.response,
            "latency": self.latency,
            "attempt": self.attempt,
            "error": self.error,
        }


def sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class Backend:
    def __init__(self) -> None:
        self.on_exchange: Callable[[CompletionExchange], None] | None = None
        self.calls = 0

    def complete(self, prompt: str, key: Hashable | None = None) -> str:
        raise NotImplementedError

    def _next_id(self) -> str:
        self.calls += 1
        return f"req-{self.calls:06d}"

    def _emit(self, exchange: CompletionExchange) -> None:
        if self.on_exchange is not None:
            self.on_exchange(exchange)


def parse_action_trailer(prompt: str) -> list[str]:
    """Action labels from the numbered list that follows the ACTIONS marker."""
    idx = prompt.rfind(ACTIONS_MARKER)
    if idx < 0:
        return []
    labels = []
    for line in prompt[idx + len(ACTIONS_MARKER):].splitlines():
        m = _ACTION_LINE.match(line)
        if m:
            labels.append(m.group(2))
        elif labels:
            break
    return labels


class ScriptedBackend(Backend):
    """Deterministic responder.

    Responses come from, in order of precedence: a keyed queue matching the
    call's key, a ``policy(prompt, key)`` callable, then the shared line queue.
    """

    def __init__(
        self,
        lines: list[str] | None = None,
        keyed: dict[Hashable, list[str]] | None = None,
        policy: Callable[[str, Hashable | None], str] | None = None,
    ):
        super().__init__()
        self.lines = deque(lines or [])
        self.keyed = {k: deque(v) for k, v in (keyed or {}).items()}
        self.policy = policy

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedBackend:
        text = Path(path).read_text(encoding="utf-8")
        return cls(lines=[line.replace("\\n", "\n") for line in text.splitlines()])

    def complete(self, prompt: str, key: Hashable | None = None) -> str:
        request_id = self._next_id()
        queue = self.keyed.get(key)
        if queue:
            response = queue.popleft()
        elif self.policy is not None:
            response = self.policy(prompt, key)
        elif self.lines:
            response = self.lines.popleft()
        else:
            self._emit(CompletionExchange(request_id, prompt, None, 0.0, 1, "ScriptExhausted"))
            raise ScriptExhausted(f"no scripted response left for call {self.calls} (key={key!r})")
        self._emit(CompletionExchange(request_id, prompt, response, 0.0, 1))
        return response


class RandomBackend(Backend):
    """Answers with a uniformly chosen label from the prompt's ACTIONS list."""

    filler = "No further comment."

    def __init__(self, seed: int = 0):
        super().__init__()
        self.rng = np.random.default_rng(seed)

    def complete(self, prompt: str, key: Hashable | None = None) -> str:
        labels = parse_action_trailer(prompt)
        response = labels[int(self.rng.integers(len(labels)))] if labels else self.filler
        self._emit(CompletionExchange(self._next_id(), prompt, response, 0.0, 1))
        return response


_SEMAPHORES: dict[str, threading.BoundedSemaphore] = {}
_SEMAPHORE_LOCK = threading.Lock()


def _endpoint_semaphore(url: str, cap: int) -> threading.BoundedSemaphore:
    with _SEMAPHORE_LOCK:
        if url not in _SEMAPHORES:
            _SEMAPHORES[url] = threading.BoundedSemaphore(cap)
        return _SEMAPHORES[url]


class HttpBackend(Backend):
    """Chat-completions client with bounded retries and exponential backoff."""

    retry_statuses = {408, 409, 425, 429, 500, 502, 503, 504}

    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        super().__init__()
        config.validate()
        self.config = config
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(API_KEY_ENV, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self.client = httpx.Client(headers=headers, timeout=config.request_timeout, transport=transport)
        self.semaphore = _endpoint_semaphore(config.endpoint_url, config.max_concurrency)
        self.sleep = time.sleep

    @property
    def url(self) -> str:
        url = self.config.endpoint_url.rstrip("/")
        return url if url.endswith("/chat/completions") else url + "/chat/completions"

    def payload(self, prompt: str) -> dict:
        return {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }

    def complete(self, prompt: str, key: Hashable | None = None) -> str:
        request_id = self._next_id()
        attempts = self.config.max_retries + 1
        last_error = "no attempt made"
        for attempt in range(1, attempts + 1):
            start = time.perf_counter()
            try:
                with self.semaphore:
                    resp = self.client.post(self.url, json=self.payload(prompt))
            except httpx.HTTPError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                retryable = True
            else:
                if resp.status_code == 200:
                    content = _extract_content(resp)
                    latency = time.perf_counter() - start
                    if content is None:
                        self._emit(CompletionExchange(request_id, prompt, None, latency, attempt, "MalformedResponse"))
                        raise MalformedResponse(f"{self.url} returned no choices[0].message.content")
                    self._emit(CompletionExchange(request_id, prompt, content, latency, attempt))
                    return content
                last_error = f"HTTP {resp.status_code}"
                retryable = resp.status_code in self.retry_statuses
            self._emit(CompletionExchange(request_id, prompt, None, time.perf_counter() - start, attempt, last_error))
            log.warning("request %s attempt %d/%d to %s failed: %s", request_id, attempt, attempts, self.url, last_error)
            if not retryable:
                break
            if attempt < attempts:
                self.sleep(self.config.backoff_base * 2 ** (attempt - 1))
        raise BackendUnavailable(f"{self.url} unavailable after {attempt} attempt(s): {last_error}")

    def close(self) -> None:
        self.client.close()


def _extract_content(resp: httpx.Response) -> str | None:
    try:
        content = resp.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError):
        return None
    return content if isinstance(content, str) else None


def make_backend(config: BackendConfig, seed: int = 0, transport: httpx.BaseTransport | None = None) -> Backend:
    config.validate()
    if config.kind == "http":
        return HttpBackend(config, transport=transport)
    if config.kind == "scripted":
        return ScriptedBackend.from_file(config.script_path)
    return RandomBackend(seed)
