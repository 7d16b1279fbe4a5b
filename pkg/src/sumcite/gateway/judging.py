"""Entailment judges and claim decomposers.

Both are interfaces with three adapters each: a prompted chat backend, a
local HTTP service, and a deterministic mock. Judge verdicts are cached by
(judge, premise, hypothesis) so repeated queries within a run are free and
deterministic, and the cache can be persisted as a content-addressed file so
re-runs bill nothing.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import httpx

from .backends import BackendError, BackendSpec, ModelGateway, TransientBackendError
from .prompts import render_decomposition_prompt, render_entailment_prompt


@dataclass(frozen=True)
class Judgment:
    """One binary entailment verdict with the judge that produced it."""

    premise: str
    hypothesis: str
    verdict: bool
    judge: str


class EntailmentJudge(Protocol):
    name: str

    def entails(self, premise: str, hypothesis: str) -> bool: ...


def _read_records(path: str | Path) -> list[dict]:
    """Records from a JSONL file or a single JSON array."""
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        return []
    if text.startswith("["):
        return [rec for rec in json.loads(text) if isinstance(rec, dict)]
    return [json.loads(line) for line in text.splitlines() if line.strip()]


class MockJudge:
    """Lookup-table judge: identical strings entail, the table decides the
    rest, anything unknown defaults to ``default``."""

    def __init__(
        self,
        table: Mapping[tuple[str, str], bool] | None = None,
        *,
        default: bool = False,
        name: str = "mock",
    ):
        self.name = name
        self.table = dict(table or {})
        self.default = default
        self.calls = 0

    def entails(self, premise: str, hypothesis: str) -> bool:
        self.calls += 1
        if premise == hypothesis:
            return True
        return self.table.get((premise, hypothesis), self.default)

    @classmethod
    def from_file(cls, path: str | Path, *, name: str = "mock") -> "MockJudge":
        """Load verdicts from premise/hypothesis/verdict records, stored as
        JSONL or as one JSON array (the service's judgment dump)."""
        table: dict[tuple[str, str], bool] = {}
        for rec in _read_records(path):
            if "premise" in rec:
                table[(rec["premise"], rec["hypothesis"])] = bool(rec["verdict"])
        return cls(table, name=name)


class PromptedJudge:
    """LLM-as-judge: yes/no question at temperature 0 so verdicts are stable
    regardless of the backend's generation default."""

    def __init__(self, gateway: ModelGateway, backend_name: str):
        self.gateway = gateway
        self.backend_name = backend_name
        self.name = backend_name

    def entails(self, premise: str, hypothesis: str) -> bool:
        prompt = render_entailment_prompt(premise, hypothesis)
        reply = self.gateway.complete(self.backend_name, prompt, temperature=0.0)
        token = reply.strip().split()[0].lower().strip(".,!") if reply.strip() else ""
        if token.startswith("yes"):
            return True
        if token.startswith("no"):
            return False
        raise BackendError(f"judge {self.name}: expected yes/no, got {reply[:80]!r}")


class HttpNliJudge:
    """Out-of-process NLI model: ``POST {endpoint}`` with premise/hypothesis,
    expecting ``{"entailed": bool}``."""

    def __init__(self, spec: BackendSpec, client: httpx.Client | None = None):
        self.spec = spec
        self.name = spec.name
        self._client = client or httpx.Client(timeout=spec.timeout_s)

    def entails(self, premise: str, hypothesis: str) -> bool:
        try:
            response = self._client.post(
                self.spec.endpoint, json={"premise": premise, "hypothesis": hypothesis}
            )
        except httpx.HTTPError as exc:
            raise TransientBackendError(f"judge {self.name}: {exc}") from exc
        if response.status_code >= 400:
            raise TransientBackendError(f"judge {self.name}: HTTP {response.status_code}")
        payload = response.json()
        if "entailed" not in payload:
            raise BackendError(f"judge {self.name}: response missing 'entailed'")
        return bool(payload["entailed"])


def _cache_key(judge: str, premise: str, hypothesis: str) -> str:
    digest = hashlib.sha256()
    for part in (judge, premise, hypothesis):
        digest.update(part.encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()


class CachedJudge:
    """Synchronized verdict cache around any judge.

    Two identical queries in one run return equal judgments and hit the
    wrapped backend once. With a path, entries are appended to a JSONL file
    keyed by content hash and reloaded on construction.
    """

    def __init__(self, inner: EntailmentJudge, path: str | Path | None = None):
        self.inner = inner
        self.name = inner.name
        self._lock = threading.Lock()
        self._cache: dict[str, bool] = {}
        self._path = Path(path) if path else None
        self.backend_calls = 0
        if self._path and self._path.exists():
            for line in self._path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._cache[rec["key"]] = bool(rec["verdict"])

    def entails(self, premise: str, hypothesis: str) -> bool:
        key = _cache_key(self.name, premise, hypothesis)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        verdict = self.inner.entails(premise, hypothesis)
        with self._lock:
            if key not in self._cache:
                self._cache[key] = verdict
                self.backend_calls += 1
                if self._path:
                    record = {
                        "key": key,
                        "judge": self.name,
                        "premise": premise,
                        "hypothesis": hypothesis,
                        "verdict": verdict,
                    }
                    with self._path.open("a", encoding="utf-8") as fh:
                        fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
        return self._cache[key]


def judge_entailment(judge: EntailmentJudge, premise: str, hypothesis: str) -> Judgment:
    """Run one entailment query and wrap the verdict with its provenance."""
    if not premise or not hypothesis:
        raise ValueError("premise and hypothesis must be non-empty")
    return Judgment(premise, hypothesis, judge.entails(premise, hypothesis), judge.name)


# ---------------------------------------------------------------------------
# Claim decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    subclaims: tuple[str, ...]
    fallback_used: bool = False


class ClaimDecomposer(Protocol):
    name: str

    def decompose(self, summary: str) -> Sequence[str]: ...


class MockDecomposer:
    """Table-driven decomposer; unknown summaries decompose to themselves."""

    def __init__(self, table: Mapping[str, Sequence[str]] | None = None, *, name: str = "mock"):
        self.name = name
        self.table = {k: list(v) for k, v in (table or {}).items()}

    def decompose(self, summary: str) -> Sequence[str]:
        return list(self.table.get(summary, [summary]))

    @classmethod
    def from_file(cls, path: str | Path, *, name: str = "mock") -> "MockDecomposer":
        table: dict[str, list[str]] = {}
        for rec in _read_records(path):
            if "summary" in rec:
                table[rec["summary"]] = list(rec["subclaims"])
        return cls(table, name=name)


class PromptedDecomposer:
    """LLM decomposition into a numbered list, memoized per summary."""

    def __init__(self, gateway: ModelGateway, backend_name: str):
        self.gateway = gateway
        self.backend_name = backend_name
        self.name = backend_name
        self._memo: dict[str, list[str]] = {}
        self._lock = threading.Lock()

    def decompose(self, summary: str) -> Sequence[str]:
        with self._lock:
            if summary in self._memo:
                return list(self._memo[summary])
        reply = self.gateway.complete(self.backend_name, render_decomposition_prompt(summary), temperature=0.0)
        subclaims = parse_subclaim_list(reply)
        with self._lock:
            self._memo[summary] = subclaims
        return list(subclaims)


def parse_subclaim_list(text: str) -> list[str]:
    """Extract statements from a numbered or bulleted list reply."""
    items = []
    for line in text.splitlines():
        stripped = re.sub(r"^\s*(?:\d+[.):]|[-*•])\s*", "", line).strip()
        if stripped and stripped != line.strip():
            items.append(stripped)
    if not items:
        items = [line.strip() for line in text.splitlines() if line.strip()]
    return items


def decompose_claims(decomposer: ClaimDecomposer, summary: str) -> Decomposition:
    """Decompose a summary, falling back to the whole summary as a single
    subclaim (flagged) when the decomposer returns nothing."""
    if not summary:
        raise ValueError("summary must be non-empty")
    subclaims = tuple(s.strip() for s in decomposer.decompose(summary) if s.strip())
    if not subclaims:
        return Decomposition((summary,), fallback_used=True)
    return Decomposition(subclaims, fallback_used=False)
