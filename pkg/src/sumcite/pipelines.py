"""The generation pipelines: track-then-sum, sum-then-track, end-to-end and
direct few-shot prompting.

Track-then-sum scores every sentence against the aspect query, keeps the
strictly-above-threshold set as citations, and summarizes those sentences
(optionally with the full article attached for context). Sum-then-track
summarizes first and then scores sentences against the summary. End-to-end
and few-shot make a single model call whose output is parsed into a summary
and citation markers.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import sumcite

from .corpus import (
    ASPECT_NAMES,
    Article,
    AspectCode,
    DatasetInstance,
    TraceableSummary,
    aspect_query,
    canonical_json,
)
from .gateway.parsing import GenerationParseError, is_negative_text, parse_generation
from .gateway.prompts import (
    DemoBank,
    render_ete_prompt,
    render_generation_prompt,
)
from .segmenter import RULES_VERSION

DEFAULT_THRESHOLD = 0.5

PIPELINE_KINDS = ("tts", "tts-full", "stt", "ete", "fewshot")


class PipelineError(Exception):
    """A pipeline step failed; ``raw_output`` keeps whatever the model said."""

    def __init__(self, message: str, raw_output: str | None = None):
        super().__init__(message)
        self.raw_output = raw_output


class Tracker(Protocol):
    """Relevance scorer for (query, sentence) pairs, in [0, 1]."""

    def score(self, query: str, sentence: str) -> float: ...


class Summarizer(Protocol):
    """Condenses source sentences into one aspect-focused summary string."""

    def summarize(
        self, aspect: AspectCode, sources: Sequence[str], full_context: str | None = None
    ) -> str: ...


TextCompleter = Callable[[str], str]


@dataclass(frozen=True)
class PipelineRun:
    """One pipeline execution for an (article, aspect) input.

    ``elapsed_s`` is diagnostic only and excluded from the canonical run
    record so identical inputs serialize identically.
    """

    pipeline: str
    pmid: str
    aspect: AspectCode
    output: TraceableSummary
    flags: tuple[str, ...] = ()
    backends: tuple[str, ...] = ()
    elapsed_s: float = 0.0

    def record(self) -> dict:
        return {
            "pipeline": self.pipeline,
            "pmid": self.pmid,
            "aspect": self.aspect.value,
            "summary": self.output.summary,
            "citations": None if self.output.citations is None else sorted(self.output.citations),
            "flags": list(self.flags),
            "backends": list(self.backends),
        }


def track_sentences(
    tracker: Tracker, query: str, sentences: Sequence[str], threshold: float
) -> list[int]:
    """Indices whose relevance is strictly above the threshold, in order.

    Strict comparison means a score exactly at the threshold is excluded, so
    raising the threshold can only shrink the selection.
    """
    return [i for i, sentence in enumerate(sentences) if tracker.score(query, sentence) > threshold]


def _named(obj: object) -> tuple[str, ...]:
    name = getattr(obj, "name", None)
    return (name,) if isinstance(name, str) else ()


def run_tts(
    article: Article,
    aspect: AspectCode,
    tracker: Tracker,
    summarizer: Summarizer,
    *,
    with_full_context: bool = False,
    threshold: float = DEFAULT_THRESHOLD,
) -> PipelineRun:
    """Track-then-sum: select relevant sentences, then summarize them.

    The output citations are exactly the tracker's selection regardless of
    what the summarizer produces; an empty selection yields the negative
    output without calling the summarizer.
    """
    started = time.perf_counter()
    selected = track_sentences(tracker, aspect_query(aspect), article.sentences, threshold)
    backends = _named(tracker) + _named(summarizer)
    kind = "tts-full" if with_full_context else "tts"
    if not selected:
        return PipelineRun(
            pipeline=kind,
            pmid=article.pmid,
            aspect=aspect,
            output=TraceableSummary.negative(),
            backends=backends,
            elapsed_s=time.perf_counter() - started,
        )
    sources = [article.sentences[i] for i in selected]
    context = article.raw_text if with_full_context else None
    summary = summarizer.summarize(aspect, sources, full_context=context)
    if not summary or not summary.strip():
        raise PipelineError(f"summarizer returned empty text for {article.pmid}:{aspect.value}")
    return PipelineRun(
        pipeline=kind,
        pmid=article.pmid,
        aspect=aspect,
        output=TraceableSummary.positive(summary.strip(), selected),
        backends=backends,
        elapsed_s=time.perf_counter() - started,
    )


def run_stt(
    article: Article,
    aspect: AspectCode,
    summarizer: Summarizer,
    tracker: Tracker,
    *,
    threshold: float = DEFAULT_THRESHOLD,
) -> PipelineRun:
    """Sum-then-track: summarize the whole article, then cite sentences
    relevant to that summary.

    A negative summary short-circuits (the tracker is never called). A
    positive summary with no sentence above threshold keeps the summary and
    an empty citation set, flagged, so downstream metrics can punish it.
    """
    started = time.perf_counter()
    backends = _named(summarizer) + _named(tracker)
    summary = summarizer.summarize(aspect, article.sentences, full_context=None)
    if not summary or is_negative_text(summary):
        return PipelineRun(
            pipeline="stt",
            pmid=article.pmid,
            aspect=aspect,
            output=TraceableSummary.negative(),
            backends=backends,
            elapsed_s=time.perf_counter() - started,
        )
    summary = summary.strip()
    selected = track_sentences(tracker, summary, article.sentences, threshold)
    flags = () if selected else ("no_citation_above_threshold",)
    return PipelineRun(
        pipeline="stt",
        pmid=article.pmid,
        aspect=aspect,
        output=TraceableSummary.positive(summary, selected),
        flags=flags,
        backends=backends,
        elapsed_s=time.perf_counter() - started,
    )


def run_ete(
    article: Article,
    aspect: AspectCode,
    complete: TextCompleter,
    *,
    backend_name: str = "",
) -> PipelineRun:
    """End-to-end: one model call produces both summary and citations."""
    started = time.perf_counter()
    prompt = render_ete_prompt(article, aspect)
    raw = complete(prompt)
    try:
        parsed = parse_generation(raw, article.sentence_count)
    except GenerationParseError as exc:
        raise PipelineError(
            f"unparseable output for {article.pmid}:{aspect.value}: {exc}", raw_output=exc.raw
        ) from exc
    return PipelineRun(
        pipeline="ete",
        pmid=article.pmid,
        aspect=aspect,
        output=parsed.result,
        flags=parsed.flags,
        backends=(backend_name,) if backend_name else (),
        elapsed_s=time.perf_counter() - started,
    )


def run_fewshot(
    article: Article,
    aspect: AspectCode,
    complete: TextCompleter,
    *,
    demos: DemoBank | None = None,
    backend_name: str = "",
) -> PipelineRun:
    """Two-shot prompting: one positive and one negative demonstration."""
    started = time.perf_counter()
    bank = demos or DemoBank.default()
    prompt = render_generation_prompt(article, aspect, bank.pair(aspect))
    raw = complete(prompt)
    try:
        parsed = parse_generation(raw, article.sentence_count)
    except GenerationParseError as exc:
        raise PipelineError(
            f"unparseable output for {article.pmid}:{aspect.value}: {exc}", raw_output=exc.raw
        ) from exc
    return PipelineRun(
        pipeline="fewshot",
        pmid=article.pmid,
        aspect=aspect,
        output=parsed.result,
        flags=parsed.flags,
        backends=(backend_name,) if backend_name else (),
        elapsed_s=time.perf_counter() - started,
    )


# ---------------------------------------------------------------------------
# Deterministic mock components
# ---------------------------------------------------------------------------


def stable_unit_score(query: str, sentence: str) -> float:
    """Hash-derived pseudo-score in [0, 1), stable across runs and platforms."""
    digest = hashlib.sha256(f"{query}\x00{sentence}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


class MockTracker:
    """Table-driven tracker; unlisted pairs use ``default`` when given,
    otherwise the stable hash score."""

    name = "mock-tracker"

    def __init__(
        self,
        scores: Mapping[tuple[str, str] | str, float] | None = None,
        default: float | None = None,
    ):
        self.scores = dict(scores or {})
        self.default = default

    def score(self, query: str, sentence: str) -> float:
        if (query, sentence) in self.scores:
            return float(self.scores[(query, sentence)])
        if sentence in self.scores:
            return float(self.scores[sentence])
        if self.default is not None:
            return self.default
        return stable_unit_score(query, sentence)


class MockSummarizer:
    """Deterministic summary text derived from the inputs."""

    name = "mock-summarizer"

    def summarize(
        self, aspect: AspectCode, sources: Sequence[str], full_context: str | None = None
    ) -> str:
        lead = " ".join(sources[0].split()[:8]) if sources else ""
        suffix = " (with context)" if full_context else ""
        return f"{ASPECT_NAMES[aspect]}{suffix}: {lead}"


def mock_generation_handler(prompt: str) -> str:
    """Synthesize a parseable reply to an indexed-document prompt.

    Sentences are picked by the same stable hash as the mock tracker (strict
    0.5 cut); no pick means the negative reply.
    """
    sentences = []
    for line in prompt.splitlines():
        stripped = line.strip().strip(",").strip('"')
        head, _, rest = stripped.partition(": ")
        if head.isdigit() and rest:
            sentences.append((int(head), rest))
    picked = [i for i, text in sentences if stable_unit_score("generate", text) > 0.5]
    if not picked:
        return "Summary: Unknown.\nCitations: Null."
    lead = " ".join(dict(sentences)[picked[0]].split()[:8])
    cites = ", ".join(str(i) for i in picked)
    return f"Summary: {lead}\nCitations: [{cites}]"


# ---------------------------------------------------------------------------
# Batch runner
# ---------------------------------------------------------------------------

RUNS_FILENAME = "runs.jsonl"
MANIFEST_FILENAME = "manifest.json"


def run_over_instances(
    instances: Sequence[DatasetInstance],
    articles: Mapping[str, Article],
    runner: Callable[[Article, AspectCode], PipelineRun],
    *,
    jobs: int = 1,
) -> tuple[list[PipelineRun], list[dict]]:
    """Run a pipeline over every (pmid, aspect) instance.

    Failures are collected as error records instead of aborting the batch;
    results come back sorted by (pmid, aspect) so output files are
    order-independent of scheduling.
    """
    ordered = sorted(instances, key=lambda i: (i.pmid, i.aspect.value))

    def one(inst: DatasetInstance) -> tuple[PipelineRun | None, dict | None]:
        try:
            return runner(articles[inst.pmid], inst.aspect), None
        except PipelineError as exc:
            return None, {
                "pmid": inst.pmid,
                "aspect": inst.aspect.value,
                "error": str(exc),
                "raw_output": exc.raw_output,
            }

    if jobs <= 1:
        outcomes = [one(inst) for inst in ordered]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, ordered))

    runs = [run for run, _ in outcomes if run is not None]
    errors = [err for _, err in outcomes if err is not None]
    return runs, errors


def render_runs_file(runs: Sequence[PipelineRun], errors: Sequence[dict] = ()) -> str:
    """Canonical line-delimited run records, deterministic for fixed inputs."""
    lines = [canonical_json({"format": "pipeline-run", "version": 1})]
    records = [r.record() for r in runs] + [dict(e, error_record=True) for e in errors]
    for rec in sorted(records, key=lambda r: (r["pmid"], r["aspect"])):
        lines.append(canonical_json(rec))
    return "\n".join(lines) + "\n"


def load_runs_file(path: str | Path) -> dict[str, TraceableSummary]:
    """Read a run file back into outputs keyed by ``pmid:aspect``."""
    outputs: dict[str, TraceableSummary] = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for line in lines[1:]:
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get("error_record"):
            continue
        if rec.get("summary") is None:
            output = TraceableSummary.negative()
        else:
            output = TraceableSummary.positive(rec["summary"], rec.get("citations") or ())
        outputs[f"{rec['pmid']}:{rec['aspect']}"] = output
    return outputs


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_run_manifest(
    out_dir: str | Path,
    *,
    config: Mapping[str, object],
    input_paths: Mapping[str, str | Path],
    elapsed_s: float,
) -> Path:
    """Record everything needed to replay a run: resolved config, input
    hashes and rule versions."""
    manifest = {
        "config": dict(config),
        "inputs": {name: file_sha256(path) for name, path in input_paths.items()},
        "segmenter_rules": RULES_VERSION,
        "package_version": sumcite.__version__,
        "elapsed_s": elapsed_s,
    }
    path = Path(out_dir) / MANIFEST_FILENAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
