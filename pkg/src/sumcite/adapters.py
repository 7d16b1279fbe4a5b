"""Tracker and summarizer adapters over model backends.

Fine-tuned scoring and summarization models are served out-of-process; the
HTTP adapters speak a minimal JSON protocol against a ``local-http`` backend:

* ``POST {endpoint}/score``      {"query", "sentence"} -> {"score": float}
* ``POST {endpoint}/summarize``  {"aspect", "sentences", "context"} -> {"summary": str}

A summary of "Unknown" (optionally with a trailing period) from the
summarize route is the negative marker.

The prompted adapters put a chat-completion backend in the same roles: the
tracker asks a yes/no relevance question (scored 1/0 against the usual 0.5
threshold) and the summarizer renders the pipeline's instruction template.
"""

from __future__ import annotations

from typing import Sequence

import httpx

from .corpus import AspectCode
from .gateway.backends import BackendError, BackendSpec, ModelGateway, TransientBackendError
from .gateway.prompts import render_stt_summarizer_prompt, render_tts_summarizer_prompt


class HttpTracker:
    def __init__(self, spec: BackendSpec, client: httpx.Client | None = None):
        self.spec = spec
        self.name = spec.name
        self._client = client or httpx.Client(timeout=spec.timeout_s)

    def score(self, query: str, sentence: str) -> float:
        try:
            response = self._client.post(
                self.spec.endpoint.rstrip("/") + "/score",
                json={"query": query, "sentence": sentence},
            )
        except httpx.HTTPError as exc:
            raise TransientBackendError(f"tracker {self.name}: {exc}") from exc
        if response.status_code >= 400:
            raise TransientBackendError(f"tracker {self.name}: HTTP {response.status_code}")
        payload = response.json()
        if "score" not in payload:
            raise BackendError(f"tracker {self.name}: response missing 'score'")
        return float(payload["score"])


class HttpSummarizer:
    def __init__(self, spec: BackendSpec, client: httpx.Client | None = None):
        self.spec = spec
        self.name = spec.name
        self._client = client or httpx.Client(timeout=spec.timeout_s)

    def summarize(
        self, aspect: AspectCode, sources: Sequence[str], full_context: str | None = None
    ) -> str:
        body = {"aspect": aspect.value, "sentences": list(sources), "context": full_context}
        try:
            response = self._client.post(self.spec.endpoint.rstrip("/") + "/summarize", json=body)
        except httpx.HTTPError as exc:
            raise TransientBackendError(f"summarizer {self.name}: {exc}") from exc
        if response.status_code >= 400:
            raise TransientBackendError(f"summarizer {self.name}: HTTP {response.status_code}")
        payload = response.json()
        if "summary" not in payload:
            raise BackendError(f"summarizer {self.name}: response missing 'summary'")
        return str(payload["summary"])


class PromptedTracker:
    """Chat-backend relevance scorer: yes maps to 1.0, anything else to 0.0,
    so the standard strict-0.5 threshold keeps exactly the yes answers."""

    def __init__(self, gateway: ModelGateway, backend_name: str):
        self.gateway = gateway
        self.backend_name = backend_name
        self.name = backend_name

    def score(self, query: str, sentence: str) -> float:
        prompt = (
            f"Topic: {query}\n"
            f"Sentence: {sentence}\n"
            "Is the sentence relevant to the topic? Answer with a single word: yes or no.\n"
            "Answer:"
        )
        reply = self.gateway.complete(self.backend_name, prompt, temperature=0.0)
        token = reply.strip().split()[0].lower().strip(".,!") if reply.strip() else ""
        return 1.0 if token.startswith("yes") else 0.0


class PromptedSummarizer:
    """Chat-backend summarizer using the pipeline instruction templates.

    ``style`` picks the template: "tts" summarizes the selected sentences
    (with the article attached as reference context when provided), "stt"
    summarizes the whole article and may answer "Unknown".
    """

    def __init__(self, gateway: ModelGateway, backend_name: str, style: str = "tts"):
        if style not in ("tts", "stt"):
            raise ValueError(f"unknown summarizer style {style!r}")
        self.gateway = gateway
        self.backend_name = backend_name
        self.name = backend_name
        self.style = style

    def summarize(
        self, aspect: AspectCode, sources: Sequence[str], full_context: str | None = None
    ) -> str:
        if self.style == "stt":
            prompt = render_stt_summarizer_prompt(aspect, sources)
        else:
            prompt = render_tts_summarizer_prompt(aspect, sources, full_context)
        return self.gateway.complete(self.backend_name, prompt).strip()
