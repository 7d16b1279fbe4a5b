"""Backend adapters plus the gateway that wraps them with retry, rate
limiting and cost accounting.

Three backend kinds are supported:

``chat-completion-api``
    An OpenAI-style ``/chat/completions`` endpoint; credentials come from the
    environment variable named in the spec, never from config files.

``local-http``
    A minimal JSON protocol for serving fine-tuned models out-of-process:
    ``POST {endpoint}`` with ``{"prompt": ..., "temperature": ..., "max_tokens": ...}``
    returning ``{"text": ..., "input_tokens": ..., "output_tokens": ...}``.

``mock``
    Deterministic canned responses for tests and offline runs, keyed by the
    exact prompt or by its SHA-256 hex digest.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, NamedTuple

import httpx

log = logging.getLogger(__name__)

BACKEND_KINDS = ("chat-completion-api", "local-http", "mock")


class GatewayError(Exception):
    """Base class for gateway failures."""


class BackendError(GatewayError):
    """Non-retryable backend failure."""


class AuthenticationError(BackendError):
    """Credentials rejected; retrying cannot help."""


class TransientBackendError(GatewayError):
    """Retryable failure: rate limit, 5xx, connection trouble."""


class DeadlineExceededError(TransientBackendError):
    """The per-call timeout elapsed."""


class RetryExhaustedError(GatewayError):
    """All retry attempts failed; carries the last underlying error."""

    def __init__(self, backend: str, attempts: int, last: Exception):
        super().__init__(f"backend {backend}: {attempts} attempts failed, last error: {last}")
        self.last = last


@dataclass(frozen=True)
class BackendSpec:
    """Declarative description of one model backend."""

    name: str
    kind: str
    endpoint: str = ""
    model: str = ""
    api_key_env: str = ""
    temperature: float = 1.0
    max_output_tokens: int = 1024
    price_per_million_input: Decimal = Decimal("0")
    price_per_million_output: Decimal = Decimal("0")
    requests_per_minute: float | None = None
    max_in_flight: int = 4
    max_retries: int = 5
    timeout_s: float = 60.0
    options: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.price_per_million_input < 0 or self.price_per_million_output < 0:
            raise ValueError("prices must be >= 0")


def load_backend_config(path: str | Path) -> dict[str, BackendSpec]:
    """Parse a backend configuration file: ``{"backends": [{...}, ...]}``."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    specs: dict[str, BackendSpec] = {}
    for entry in raw.get("backends", []):
        entry = dict(entry)
        for key in ("price_per_million_input", "price_per_million_output"):
            if key in entry:
                entry[key] = Decimal(str(entry[key]))
        spec = BackendSpec(**entry)
        if spec.name in specs:
            raise ValueError(f"duplicate backend name {spec.name!r}")
        specs[spec.name] = spec
    return specs


class CompletionResult(NamedTuple):
    text: str
    input_tokens: int
    output_tokens: int


class CostLedger:
    """Thread-safe token and currency accounting, exact to Decimal precision."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._tokens: dict[str, list[int]] = {}
        self._cost: dict[str, Decimal] = {}

    def record(self, spec: BackendSpec, input_tokens: int, output_tokens: int) -> None:
        entry = (
            Decimal(input_tokens) * spec.price_per_million_input
            + Decimal(output_tokens) * spec.price_per_million_output
        ) / Decimal(1_000_000)
        with self._lock:
            tokens = self._tokens.setdefault(spec.name, [0, 0])
            tokens[0] += input_tokens
            tokens[1] += output_tokens
            self._cost[spec.name] = self._cost.get(spec.name, Decimal("0")) + entry

    def tokens(self, backend: str) -> tuple[int, int]:
        with self._lock:
            used = self._tokens.get(backend, [0, 0])
            return used[0], used[1]

    def cost(self, backend: str) -> Decimal:
        with self._lock:
            return self._cost.get(backend, Decimal("0"))

    @property
    def total_cost(self) -> Decimal:
        with self._lock:
            return sum(self._cost.values(), Decimal("0"))

    def snapshot(self) -> dict:
        with self._lock:
            return {
                name: {
                    "input_tokens": used[0],
                    "output_tokens": used[1],
                    "cost": str(self._cost.get(name, Decimal("0"))),
                }
                for name, used in self._tokens.items()
            }


class TokenBucket:
    """Requests-per-minute limiter; blocks the caller until a slot frees up."""

    def __init__(
        self,
        per_minute: float,
        monotonic: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.capacity = per_minute
        self.rate = per_minute / 60.0
        self._level = per_minute
        self._stamp = monotonic()
        self._monotonic = monotonic
        self._sleep = sleep
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._monotonic()
                self._level = min(self.capacity, self._level + (now - self._stamp) * self.rate)
                self._stamp = now
                if self._level >= 1.0:
                    self._level -= 1.0
                    return
                wait = (1.0 - self._level) / self.rate
            self._sleep(wait)


def estimate_tokens(text: str) -> int:
    """Whitespace token count; used where a backend reports no usage."""
    return len(text.split())


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class Backend:
    """Adapter interface: one completion call, no retry or accounting."""

    spec: BackendSpec

    def complete(self, prompt: str, *, temperature: float | None = None) -> CompletionResult:
        raise NotImplementedError


class MockBackend(Backend):
    """Canned responses keyed by exact prompt or prompt SHA-256 digest.

    An optional ``handler`` callable synthesizes replies for prompts not in
    the table, which keeps large offline runs deterministic without
    enumerating every prompt up front.
    """

    def __init__(
        self,
        spec: BackendSpec,
        responses: Mapping[str, str] | None = None,
        handler: Callable[[str], str] | None = None,
    ):
        self.spec = spec
        merged = dict(spec.options.get("responses", {}))
        if responses:
            merged.update(responses)
        self.responses = merged
        self.handler = handler
        self.calls = 0

    def complete(self, prompt: str, *, temperature: float | None = None) -> CompletionResult:
        self.calls += 1
        text = self.responses.get(prompt)
        if text is None:
            text = self.responses.get(prompt_digest(prompt))
        if text is None and self.handler is not None:
            text = self.handler(prompt)
        if text is None:
            text = self.spec.options.get("default")
        if text is None:
            raise BackendError(f"mock backend {self.spec.name}: no canned response for prompt")
        return CompletionResult(text, estimate_tokens(prompt), estimate_tokens(text))


class ChatCompletionBackend(Backend):
    """OpenAI-style chat completion endpoint."""

    def __init__(self, spec: BackendSpec, client: httpx.Client | None = None):
        self.spec = spec
        self._client = client or httpx.Client(timeout=spec.timeout_s)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.spec.api_key_env:
            key = os.environ.get(self.spec.api_key_env)
            if not key:
                raise AuthenticationError(
                    f"backend {self.spec.name}: environment variable {self.spec.api_key_env} is not set"
                )
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, prompt: str, *, temperature: float | None = None) -> CompletionResult:
        body = {
            "model": self.spec.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.spec.temperature if temperature is None else temperature,
            "max_tokens": self.spec.max_output_tokens,
        }
        try:
            response = self._client.post(self.spec.endpoint, json=body, headers=self._headers())
        except httpx.TimeoutException as exc:
            raise DeadlineExceededError(f"backend {self.spec.name}: {exc}") from exc
        except httpx.HTTPError as exc:
            raise TransientBackendError(f"backend {self.spec.name}: {exc}") from exc
        if response.status_code in (401, 403):
            raise AuthenticationError(f"backend {self.spec.name}: HTTP {response.status_code}")
        if response.status_code == 429 or response.status_code >= 500:
            raise TransientBackendError(f"backend {self.spec.name}: HTTP {response.status_code}")
        if response.status_code >= 400:
            raise BackendError(f"backend {self.spec.name}: HTTP {response.status_code}: {response.text[:200]}")
        payload = response.json()
        try:
            text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"backend {self.spec.name}: malformed completion payload") from exc
        usage = payload.get("usage") or {}
        return CompletionResult(
            text,
            int(usage.get("prompt_tokens", estimate_tokens(prompt))),
            int(usage.get("completion_tokens", estimate_tokens(text))),
        )


class LocalHttpBackend(Backend):
    """Plain JSON completion endpoint for locally served models."""

    def __init__(self, spec: BackendSpec, client: httpx.Client | None = None):
        self.spec = spec
        self._client = client or httpx.Client(timeout=spec.timeout_s)

    def complete(self, prompt: str, *, temperature: float | None = None) -> CompletionResult:
        body = {
            "prompt": prompt,
            "temperature": self.spec.temperature if temperature is None else temperature,
            "max_tokens": self.spec.max_output_tokens,
        }
        try:
            response = self._client.post(self.spec.endpoint, json=body)
        except httpx.TimeoutException as exc:
            raise DeadlineExceededError(f"backend {self.spec.name}: {exc}") from exc
        except httpx.HTTPError as exc:
            raise TransientBackendError(f"backend {self.spec.name}: {exc}") from exc
        if response.status_code == 429 or response.status_code >= 500:
            raise TransientBackendError(f"backend {self.spec.name}: HTTP {response.status_code}")
        if response.status_code >= 400:
            raise BackendError(f"backend {self.spec.name}: HTTP {response.status_code}")
        payload = response.json()
        text = payload.get("text")
        if not isinstance(text, str):
            raise BackendError(f"backend {self.spec.name}: response missing 'text'")
        return CompletionResult(
            text,
            int(payload.get("input_tokens", estimate_tokens(prompt))),
            int(payload.get("output_tokens", estimate_tokens(text))),
        )


def build_backend(spec: BackendSpec, handler: Callable[[str], str] | None = None) -> Backend:
    if spec.kind == "mock":
        return MockBackend(spec, handler=handler)
    if spec.kind == "chat-completion-api":
        return ChatCompletionBackend(spec)
    return LocalHttpBackend(spec)


class ModelGateway:
    """Shared front door to all backends.

    Thread-safe: the ledger and rate limiters are internally synchronized and
    a per-backend semaphore caps in-flight requests. Transient failures are
    retried with capped exponential backoff.
    """

    BACKOFF_BASE_S = 0.5
    BACKOFF_CAP_S = 30.0

    def __init__(
        self,
        backends: Iterable[Backend],
        *,
        ledger: CostLedger | None = None,
        sleep: Callable[[float], None] = time.sleep,
        monotonic: Callable[[], float] = time.monotonic,
    ):
        self._backends = {b.spec.name: b for b in backends}
        self.ledger = ledger or CostLedger()
        self._sleep = sleep
        self._limiters = {
            name: TokenBucket(b.spec.requests_per_minute, monotonic, sleep)
            for name, b in self._backends.items()
            if b.spec.requests_per_minute
        }
        self._slots = {
            name: threading.Semaphore(max(1, b.spec.max_in_flight))
            for name, b in self._backends.items()
        }

    def backend(self, name: str) -> Backend:
        try:
            return self._backends[name]
        except KeyError:
            raise GatewayError(f"unknown backend {name!r}") from None

    def names(self) -> list[str]:
        return sorted(self._backends)

    def complete(self, backend_name: str, prompt: str, *, temperature: float | None = None) -> str:
        backend = self.backend(backend_name)
        spec = backend.spec
        limiter = self._limiters.get(backend_name)
        last: Exception | None = None
        for attempt in range(spec.max_retries + 1):
            if limiter is not None:
                limiter.acquire()
            with self._slots[backend_name]:
                try:
                    result = backend.complete(prompt, temperature=temperature)
                except TransientBackendError as exc:
                    last = exc
                    wait = min(self.BACKOFF_CAP_S, self.BACKOFF_BASE_S * 2**attempt)
                    log.warning("backend %s transient failure (%s), retrying in %.1fs", backend_name, exc, wait)
                    self._sleep(wait)
                    continue
            self.ledger.record(spec, result.input_tokens, result.output_tokens)
            return result.text
        raise RetryExhaustedError(backend_name, spec.max_retries + 1, last or GatewayError("unknown"))

    def completer(self, backend_name: str, *, temperature: float | None = None) -> Callable[[str], str]:
        """Bind a backend into a plain ``prompt -> text`` callable."""

        def call(prompt: str) -> str:
            return self.complete(backend_name, prompt, temperature=temperature)

        return call
