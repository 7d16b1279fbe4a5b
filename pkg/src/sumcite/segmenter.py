"""Deterministic rule-based sentence segmentation.

Citation indices refer to sentence positions produced by this module, so the
rules are versioned and frozen per dataset release: re-segmenting the same
text must always yield the same indices, across runs and platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

# Bump whenever a rule changes; recorded in every export that carries indices.
RULES_VERSION = "rules-1"

_TERMINALS = ".!?"
_CLOSERS = "\"')]}»"

# Tokens that end with a period without ending a sentence. Compared
# case-insensitively against the word preceding the period, with any
# internal periods kept ("e.g", "i.e").
_ABBREVIATIONS = frozenset(
    {
        "e.g",
        "i.e",
        "vs",
        "cf",
        "et",
        "al",
        "etc",
        "ca",
        "approx",
        "resp",
        "dr",
        "mr",
        "mrs",
        "ms",
        "prof",
        "fig",
        "figs",
        "eq",
        "eqs",
        "ref",
        "refs",
        "no",
        "nos",
        "vol",
        "st",
        "jr",
        "sr",
        "inc",
        "ltd",
    }
)


class SegmentationError(ValueError):
    """Raised for input that cannot be segmented (empty or whitespace-only)."""


@dataclass(frozen=True)
class IndexedSentence:
    """One sentence with its dense index and character span in the source text.

    Spans are non-overlapping, ordered, and cover every non-whitespace
    character of the source.
    """

    index: int
    text: str
    char_span: tuple[int, int]


def _preceding_word(text: str, period_pos: int) -> str:
    """Word immediately before ``text[period_pos]``, keeping internal periods."""
    i = period_pos - 1
    while i >= 0 and (text[i].isalnum() or text[i] in ".&-"):
        i -= 1
    return text[i + 1 : period_pos]


def _next_nonspace(text: str, pos: int) -> int:
    while pos < len(text) and text[pos].isspace():
        pos += 1
    return pos


def _is_boundary(text: str, start: int, end: int) -> bool:
    """Decide whether the terminal run ``text[start:end+1]`` ends a sentence."""
    after = end + 1
    if after >= len(text):
        return True
    # A terminal must be followed by whitespace; this also keeps decimal
    # numbers ("1.5"), URLs and in-word periods intact.
    if not text[after].isspace():
        return False
    nxt = _next_nonspace(text, after)
    if nxt >= len(text):
        return True
    # A sentence opens with a capital, digit, quote or bracket; lowercase
    # continuation means the period belonged to an abbreviation we missed.
    if text[nxt].islower():
        return False
    # A following "=" continues a variable clause such as "N = 906".
    if text[nxt] == "=":
        return False
    if text[start] in "!?":
        return True
    word = _preceding_word(text, start)
    if not word:
        return True
    stripped = word.rstrip(".")
    if stripped.lower() in _ABBREVIATIONS:
        return False
    return True


def _boundaries(text: str) -> list[int]:
    cuts = []
    i = 0
    n = len(text)
    while i < n:
        if text[i] in _TERMINALS:
            start = i
            end = i
            while end + 1 < n and text[end + 1] in _TERMINALS:
                end += 1
            while end + 1 < n and text[end + 1] in _CLOSERS:
                end += 1
            if _is_boundary(text, start, end):
                cuts.append(end + 1)
            i = end + 1
        else:
            i += 1
    return cuts


def segment(raw_text: str) -> list[IndexedSentence]:
    """Split ``raw_text`` into indexed sentences.

    Deterministic and abbreviation-safe: "e.g.", "i.e.", "vs.", titles,
    figure references, single-capital initials and decimal numbers do not
    split. Section labels such as "BACKGROUND:" stay attached to the sentence
    they introduce because only ``.``, ``!`` and ``?`` can end a sentence.

    Raises:
        SegmentationError: if ``raw_text`` is empty after trimming.
    """
    if not raw_text or not raw_text.strip():
        raise SegmentationError("cannot segment empty text")

    cuts = _boundaries(raw_text)
    starts = [0] + cuts
    ends = cuts + [len(raw_text)]

    sentences: list[IndexedSentence] = []
    for lo, hi in zip(starts, ends):
        chunk = raw_text[lo:hi]
        if not chunk.strip():
            continue
        left = lo + (len(chunk) - len(chunk.lstrip()))
        right = lo + len(chunk.rstrip())
        sentences.append(
            IndexedSentence(
                index=len(sentences),
                text=raw_text[left:right],
                char_span=(left, right),
            )
        )
    return sentences


def sentence_texts(raw_text: str) -> list[str]:
    """Convenience wrapper returning just the sentence strings."""
    return [s.text for s in segment(raw_text)]
