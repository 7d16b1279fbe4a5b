"""Parsing of model generations into traceable summaries.

A well-formed generation has the shape::

    Summary: <one sentence>
    Citations: [3, 5]

"Unknown" (summary) and "Null" (citations) are matched case-insensitively
with an optional trailing period and map to the negative case. Citation
indices are deduplicated, sorted and validated against the sentence count;
out-of-range indices are dropped and flagged rather than failing the run.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..corpus import TraceableSummary
from .backends import GatewayError

_SUMMARY_RE = re.compile(r"^\s*\**\s*summary\s*\**\s*:\s*(.*)$", re.IGNORECASE | re.MULTILINE)
_CITATIONS_RE = re.compile(r"^\s*\**\s*citations?\s*\**\s*:\s*(.*)$", re.IGNORECASE | re.MULTILINE)
_NEGATIVE_SUMMARY_RE = re.compile(r"^unknown\s*\.?$", re.IGNORECASE)
_NULL_CITATIONS_RE = re.compile(r"^null\s*\.?$", re.IGNORECASE)
_INDEX_RE = re.compile(r"\d+")


class GenerationParseError(GatewayError):
    """Model output had no usable Summary field; keeps the raw text."""

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class ParsedGeneration:
    result: TraceableSummary
    flags: tuple[str, ...] = ()


def parse_generation(text: str, n_sentences: int) -> ParsedGeneration:
    """Parse model output into a ``TraceableSummary``.

    Raises:
        GenerationParseError: when no Summary field can be found.
    """
    if n_sentences < 1:
        raise ValueError("n_sentences must be >= 1")
    summary_match = _SUMMARY_RE.search(text)
    if summary_match is None:
        raise GenerationParseError("output has no Summary field", raw=text)

    citations_match = _CITATIONS_RE.search(text, summary_match.end())

    # The summary may wrap across lines; take everything up to the Citations
    # field (or end of text) and collapse whitespace.
    end = citations_match.start() if citations_match else len(text)
    summary = " ".join(text[summary_match.start(1) : end].split()).strip()

    flags: list[str] = []
    negative_summary = bool(_NEGATIVE_SUMMARY_RE.match(summary)) or not summary

    citations_text = citations_match.group(1).strip() if citations_match else None
    null_citations = citations_text is not None and bool(_NULL_CITATIONS_RE.match(citations_text))

    if negative_summary:
        if citations_text is not None and not null_citations and _INDEX_RE.search(citations_text):
            # A negative summary asserts nothing, so stray indices are noise.
            flags.append("citations_with_unknown_summary")
        return ParsedGeneration(TraceableSummary.negative(), tuple(flags))

    if citations_match is None:
        flags.append("missing_citations_field")
        indices: list[int] = []
    elif null_citations:
        flags.append("null_citations_with_summary")
        indices = []
    else:
        indices = [int(m) for m in _INDEX_RE.findall(citations_text or "")]

    unique = sorted(set(indices))
    kept = [i for i in unique if 0 <= i < n_sentences]
    dropped = [i for i in unique if not 0 <= i < n_sentences]
    if dropped:
        flags.append("citation_out_of_range:" + ",".join(str(i) for i in dropped))
    return ParsedGeneration(TraceableSummary.positive(summary, kept), tuple(flags))


def is_negative_text(text: str) -> bool:
    """True when a bare summarizer reply is the negative marker."""
    return bool(_NEGATIVE_SUMMARY_RE.match(text.strip()))
