"""Prompt rendering for generation, decomposition and entailment judging.

The generation prompt shows the document as a bracketed list of
marker-prefixed sentences (``"0: ..."``), followed by two demonstrations:
one positive and one negative. A negative answer is rendered as
``Summary: Unknown.`` / ``Citations: Null.``; those string forms exist only
at this boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from ..corpus import Article, AspectCode, TraceableSummary

# Aspect-specific phrase substituted into the instruction placeholder.
PROMPT_PHRASES: dict[AspectCode, str] = {
    AspectCode.AIMS: "research questions or aims",
    AspectCode.INTERVENTION: "intervention or treatment method",
    AspectCode.OUTCOMES: "outcomes or results of the predefined variables",
    AspectCode.PARTICIPANTS: "participants (e.g., diseases and number enrolled)",
    AspectCode.MEDICINE: "medicine used (e.g., name and dosage)",
    AspectCode.DURATION: "treatment duration",
    AspectCode.SIDE_EFFECTS: "observed side effects or adverse events",
}

NEGATIVE_SUMMARY_TEXT = "Unknown."
NEGATIVE_CITATIONS_TEXT = "Null."


@dataclass(frozen=True)
class DemoExample:
    """One demonstration: document sentences plus the expected answer."""

    sentences: tuple[str, ...]
    answer: TraceableSummary

    @property
    def is_negative(self) -> bool:
        return self.answer.is_negative


class DemoBank:
    """Per-aspect demonstration pairs for few-shot prompting."""

    def __init__(self, demos: dict[AspectCode, tuple[DemoExample, DemoExample]]):
        self._demos = demos

    def pair(self, aspect: AspectCode) -> tuple[DemoExample, DemoExample]:
        """Return the (positive, negative) pair for an aspect."""
        try:
            return self._demos[aspect]
        except KeyError:
            raise ValueError(f"no demonstrations for aspect {aspect.value!r}") from None

    @classmethod
    def from_file(cls, text: str) -> "DemoBank":
        raw = json.loads(text)
        demos: dict[AspectCode, tuple[DemoExample, DemoExample]] = {}
        for code, entry in raw.items():
            aspect = AspectCode(code)
            pos = entry["positive"]
            neg = entry["negative"]
            demos[aspect] = (
                DemoExample(
                    sentences=tuple(pos["sentences"]),
                    answer=TraceableSummary.positive(pos["summary"], pos["citations"]),
                ),
                DemoExample(sentences=tuple(neg["sentences"]), answer=TraceableSummary.negative()),
            )
        return cls(demos)

    @classmethod
    def default(cls) -> "DemoBank":
        text = resources.files("sumcite.data").joinpath("demos.json").read_text(encoding="utf-8")
        return cls.from_file(text)


def render_document(sentences: Sequence[str], *, markers: bool = True) -> str:
    """Render sentences as the bracketed list used in prompts."""
    lines = []
    for i, sentence in enumerate(sentences):
        body = f"{i}: {sentence}" if markers else sentence
        lines.append(f'    "{body}",')
    if lines:
        lines[-1] = lines[-1].rstrip(",")
    return "[\n" + "\n".join(lines) + "\n]"


def render_answer(answer: TraceableSummary) -> str:
    """Render a summary/citations block; inverse of ``parse_generation``."""
    if answer.is_negative:
        return f"Summary: {NEGATIVE_SUMMARY_TEXT}\nCitations: {NEGATIVE_CITATIONS_TEXT}"
    cites = ", ".join(str(i) for i in answer.sorted_citations())
    return f"Summary: {answer.summary}\nCitations: [{cites}]"


def _render_demo(demo: DemoExample) -> str:
    return f"Document\n{render_document(demo.sentences)}\n{render_answer(demo.answer)}"


def render_generation_prompt(
    article: Article, aspect: AspectCode, demos: tuple[DemoExample, DemoExample]
) -> str:
    """Two-shot generation prompt: instruction, indexed document, then one
    positive and one negative demonstration."""
    kinds = {demo.is_negative for demo in demos}
    if len(demos) != 2 or kinds != {True, False}:
        raise ValueError("demos must contain exactly one positive and one negative example")
    positive = next(d for d in demos if not d.is_negative)
    negative = next(d for d in demos if d.is_negative)
    instruction = (
        "Given a document consisting of a set of sentences with a marker attached "
        "to the head of each sentence. Based on the demonstrations, please summarize "
        f"the {PROMPT_PHRASES[aspect]} of this study in one sentence and output the "
        'sentence markers involved. If there is no relevant information in the '
        'document, answer "Unknown".'
    )
    return (
        "Instructions\n"
        f"{instruction}\n\n"
        "Document\n"
        f"{render_document(article.sentences)}\n\n"
        "Summary:\n"
        "Citations:\n\n"
        "Demonstrations\n"
        f"{_render_demo(positive)}\n\n"
        f"{_render_demo(negative)}\n"
    )


def render_tts_summarizer_prompt(
    aspect: AspectCode, sources: Sequence[str], full_context: str | None = None
) -> str:
    """Prompt for summarizing a set of already-selected sentences."""
    if full_context is None:
        instruction = (
            f"Summarize the {PROMPT_PHRASES[aspect]} of the study in one clear sentence "
            "that includes all key details from the input sentences without omitting "
            "important information."
        )
        return (
            "Instructions\n"
            f"{instruction}\n\n"
            "Sentences\n"
            f"{render_document(sources, markers=False)}\n\n"
            "Summary:\n"
        )
    instruction = (
        f"Summarize the {PROMPT_PHRASES[aspect]} of the study in one clear sentence "
        "that includes all key details from the input sentences without omitting "
        "important information. The summary must be based solely on the provided "
        "sentences. The full text is for reference only and must not be used to "
        "introduce any new information not present in the sentences."
    )
    return (
        "Instructions\n"
        f"{instruction}\n\n"
        "Sentences\n"
        f"{render_document(sources, markers=False)}\n\n"
        "Full Context\n"
        f"{full_context}\n\n"
        "Summary:\n"
    )


def render_stt_summarizer_prompt(aspect: AspectCode, sentences: Sequence[str]) -> str:
    """Prompt for summarizing an aspect from the whole article; the model may
    answer "Unknown" when nothing is relevant."""
    instruction = (
        f"Summarize the {PROMPT_PHRASES[aspect]} of the study in one clear sentence "
        'based on the given article. If there is no relevant information in the '
        'article, answer "Unknown".'
    )
    return (
        "Instructions\n"
        f"{instruction}\n\n"
        "Article\n"
        f"{render_document(sentences, markers=False)}\n\n"
        "Summary:\n"
    )


def render_ete_prompt(article: Article, aspect: AspectCode) -> str:
    """Single-call prompt asking for both the summary and the cited markers."""
    instruction = (
        f"Given an article, summarize the {PROMPT_PHRASES[aspect]} of the study in one "
        "clear sentence and output the index of the cited sentences. If there is no "
        'relevant information in the article, answer "Unknown".'
    )
    return (
        "Instructions\n"
        f"{instruction}\n\n"
        "Sentences\n"
        f"{render_document(article.sentences)}\n\n"
        "Summary:\n"
        "Citations:\n"
    )


def render_entailment_prompt(premise: str, hypothesis: str) -> str:
    """Yes/no entailment question for an LLM acting as judge."""
    return (
        f"Premise: {premise}\n"
        f"Hypothesis: {hypothesis}\n"
        "Does the premise entail the hypothesis? Answer with a single word: yes or no.\n"
        "Answer:"
    )


def render_decomposition_prompt(summary: str) -> str:
    """Ask for a numbered list of atomic factual statements."""
    return (
        "Decompose the following summary into a numbered list of atomic subclaims. "
        "Each subclaim must be a single self-contained declarative statement. "
        "Output one numbered subclaim per line and nothing else.\n\n"
        f"Summary: {summary}\n\n"
        "Subclaims:"
    )
