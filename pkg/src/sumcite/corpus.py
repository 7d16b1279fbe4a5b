"""Dataset schema, loading, validation, splitting, statistics and exports.

A dataset is a directory with two line-delimited JSON files:

``articles.jsonl``
    header line, then one record per article: ``{"pmid": ..., "raw_text": ...}``

``instances.jsonl``
    header line, then one record per (article, aspect) instance:
    ``{"pmid": ..., "aspect": ..., "summary": ..., "citations": ...}``

A negative instance (no relevant information for the aspect) stores
``summary: null`` and ``citations: null``. The string forms "Unknown" and
"Null" exist only at the prompt/parse boundary, never on disk, so a summary
that happens to contain the word "Unknown" stays distinct from the semantic
negative.

Token counts are whitespace-delimited throughout.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .segmenter import RULES_VERSION, segment

ARTICLES_FILENAME = "articles.jsonl"
INSTANCES_FILENAME = "instances.jsonl"
SCHEMA_VERSION = 1


class CorpusError(Exception):
    """Base class for dataset errors."""


class DatasetParseError(CorpusError):
    """A record could not be parsed; carries the offending line number."""

    def __init__(self, message: str, *, path: str | Path = "", line: int = 0):
        super().__init__(f"{path}:{line}: {message}" if line else message)
        self.path = str(path)
        self.line = line


class ReferentialError(CorpusError):
    """A record is well-formed but inconsistent with the rest of the dataset."""


class AspectCode(str, enum.Enum):
    """The seven medical aspects a summary can be conditioned on."""

    AIMS = "a"
    INTERVENTION = "i"
    OUTCOMES = "o"
    PARTICIPANTS = "p"
    MEDICINE = "m"
    DURATION = "d"
    SIDE_EFFECTS = "s"

    def __str__(self) -> str:  # pragma: no cover - trivial
        return self.value


ASPECT_ORDER: tuple[AspectCode, ...] = tuple(AspectCode)

ASPECT_NAMES: dict[AspectCode, str] = {
    AspectCode.AIMS: "Aims",
    AspectCode.INTERVENTION: "Intervention",
    AspectCode.OUTCOMES: "Outcomes",
    AspectCode.PARTICIPANTS: "Participants",
    AspectCode.MEDICINE: "Medicine",
    AspectCode.DURATION: "Duration",
    AspectCode.SIDE_EFFECTS: "Side Effects",
}

ASPECT_DESCRIPTIONS: dict[AspectCode, str] = {
    AspectCode.AIMS: "Objective",
    AspectCode.INTERVENTION: "Treatment Method",
    AspectCode.OUTCOMES: "Results of Predefined Variables",
    AspectCode.PARTICIPANTS: "E.g., Diseases, Number",
    AspectCode.MEDICINE: "E.g., Name, Dosage",
    AspectCode.DURATION: "Treatment Duration",
    AspectCode.SIDE_EFFECTS: "Observed Adverse Events",
}


def aspect_query(aspect: AspectCode) -> str:
    """Query string a relevance tracker scores sentences against."""
    return ASPECT_DESCRIPTIONS[aspect]


def count_tokens(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class Article:
    """A source abstract with stable sentence indexing."""

    pmid: str
    raw_text: str
    sentences: tuple[str, ...]
    token_count: int

    @classmethod
    def from_raw(cls, pmid: str, raw_text: str) -> "Article":
        sents = tuple(s.text for s in segment(raw_text))
        return cls(pmid=pmid, raw_text=raw_text, sentences=sents, token_count=count_tokens(raw_text))

    @property
    def sentence_count(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class TraceableSummary:
    """An aspect summary plus the indices of the sentences that support it.

    ``summary is None`` encodes the negative case (no relevant information):
    both fields are absent together. A present summary may carry an empty
    citation set, which is distinct from the negative case.
    """

    summary: str | None = None
    citations: frozenset[int] | None = None

    def __post_init__(self) -> None:
        if (self.summary is None) != (self.citations is None):
            raise ReferentialError(
                "summary and citations must be absent together (negative) or present together"
            )
        if self.citations is not None and not isinstance(self.citations, frozenset):
            object.__setattr__(self, "citations", frozenset(self.citations))

    @classmethod
    def negative(cls) -> "TraceableSummary":
        return cls(None, None)

    @classmethod
    def positive(cls, summary: str, citations: Iterable[int]) -> "TraceableSummary":
        return cls(summary, frozenset(citations))

    @property
    def is_negative(self) -> bool:
        return self.summary is None

    def sorted_citations(self) -> tuple[int, ...]:
        return tuple(sorted(self.citations)) if self.citations is not None else ()


@dataclass(frozen=True)
class DatasetInstance:
    """One (article, aspect) reference; (pmid, aspect) is unique in a dataset."""

    pmid: str
    aspect: AspectCode
    reference: TraceableSummary

    @property
    def instance_id(self) -> str:
        return f"{self.pmid}:{self.aspect.value}"


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------


def canonical_json(obj: object) -> str:
    """Canonical single-line JSON: sorted keys, compact separators, UTF-8."""
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def _header(fmt: str, **extra: object) -> str:
    record: dict[str, object] = {"format": fmt, "version": SCHEMA_VERSION}
    record.update(extra)
    return canonical_json(record)


def _read_records(path: Path, expected_format: str) -> list[tuple[int, dict]]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise DatasetParseError("empty file, missing schema header", path=path, line=1)

    def parse(line_no: int, raw: str) -> dict:
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DatasetParseError(f"invalid JSON: {exc.msg}", path=path, line=line_no) from exc
        if not isinstance(obj, dict):
            raise DatasetParseError("record must be a JSON object", path=path, line=line_no)
        return obj

    header = parse(1, lines[0])
    if header.get("format") != expected_format:
        raise DatasetParseError(
            f"expected format {expected_format!r}, found {header.get('format')!r}",
            path=path,
            line=1,
        )
    records = []
    for line_no, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        records.append((line_no, parse(line_no, raw)))
    return records


def load_articles(path: str | Path) -> list[Article]:
    """Load and segment articles, deduplicating by pmid."""
    path = Path(path)
    by_pmid: dict[str, Article] = {}
    for line_no, rec in _read_records(path, "articles"):
        pmid = rec.get("pmid")
        raw_text = rec.get("raw_text")
        if not isinstance(pmid, str) or not isinstance(raw_text, str):
            raise DatasetParseError("article needs string pmid and raw_text", path=path, line=line_no)
        if pmid in by_pmid:
            if by_pmid[pmid].raw_text != raw_text:
                raise ReferentialError(f"pmid {pmid} appears twice with different raw_text")
            continue
        by_pmid[pmid] = Article.from_raw(pmid, raw_text)
    return list(by_pmid.values())


def _parse_instance(rec: dict, path: Path, line_no: int) -> DatasetInstance:
    pmid = rec.get("pmid")
    if not isinstance(pmid, str):
        raise DatasetParseError("instance needs a string pmid", path=path, line=line_no)
    try:
        aspect = AspectCode(rec.get("aspect"))
    except ValueError:
        raise DatasetParseError(f"unknown aspect code {rec.get('aspect')!r}", path=path, line=line_no) from None
    summary = rec.get("summary")
    citations = rec.get("citations")
    if summary is None and citations is not None:
        raise DatasetParseError("citations present with absent summary", path=path, line=line_no)
    if summary is not None and citations is None:
        raise DatasetParseError("summary present with absent citations", path=path, line=line_no)
    if summary is None:
        reference = TraceableSummary.negative()
    else:
        if not isinstance(summary, str) or not isinstance(citations, list):
            raise DatasetParseError("summary must be a string and citations a list", path=path, line=line_no)
        if not all(isinstance(c, int) and not isinstance(c, bool) for c in citations):
            raise DatasetParseError("citations must be integers", path=path, line=line_no)
        reference = TraceableSummary.positive(summary, citations)
    return DatasetInstance(pmid=pmid, aspect=aspect, reference=reference)


def load_instances(path: str | Path, articles: Sequence[Article]) -> list[DatasetInstance]:
    """Load instances and validate them against their articles."""
    path = Path(path)
    by_pmid = {a.pmid: a for a in articles}
    seen: set[tuple[str, AspectCode]] = set()
    instances = []
    for line_no, rec in _read_records(path, "instances"):
        inst = _parse_instance(rec, path, line_no)
        key = (inst.pmid, inst.aspect)
        if key in seen:
            raise ReferentialError(f"duplicate instance for pmid {inst.pmid} aspect {inst.aspect.value}")
        seen.add(key)
        article = by_pmid.get(inst.pmid)
        if article is None:
            raise ReferentialError(f"instance references unknown pmid {inst.pmid}")
        if inst.reference.citations is not None:
            bad = [c for c in inst.reference.citations if not 0 <= c < article.sentence_count]
            if bad:
                raise ReferentialError(
                    f"pmid {inst.pmid} aspect {inst.aspect.value}: citation index "
                    f"{sorted(bad)} out of range for {article.sentence_count} sentences"
                )
        instances.append(inst)
    return instances


def load_dataset(path: str | Path) -> tuple[list[Article], list[DatasetInstance]]:
    """Load a dataset directory (articles + instances) with full validation."""
    root = Path(path)
    articles = load_articles(root / ARTICLES_FILENAME)
    instances = load_instances(root / INSTANCES_FILENAME, articles)
    return articles, instances


def instance_record(inst: DatasetInstance) -> dict:
    ref = inst.reference
    return {
        "pmid": inst.pmid,
        "aspect": inst.aspect.value,
        "summary": ref.summary,
        "citations": None if ref.citations is None else sorted(ref.citations),
    }


def render_articles_file(articles: Sequence[Article]) -> str:
    lines = [_header("articles", segmenter_rules=RULES_VERSION)]
    for article in sorted(articles, key=lambda a: a.pmid):
        lines.append(canonical_json({"pmid": article.pmid, "raw_text": article.raw_text}))
    return "\n".join(lines) + "\n"


def render_instances_file(instances: Sequence[DatasetInstance]) -> str:
    lines = [_header("instances")]
    for inst in sorted(instances, key=lambda i: (i.pmid, i.aspect.value)):
        lines.append(canonical_json(instance_record(inst)))
    return "\n".join(lines) + "\n"


def save_dataset(articles: Sequence[Article], instances: Sequence[DatasetInstance], path: str | Path) -> None:
    """Write the canonical on-disk form: sorted records, one per line."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    (root / ARTICLES_FILENAME).write_text(render_articles_file(articles), encoding="utf-8")
    (root / INSTANCES_FILENAME).write_text(render_instances_file(instances), encoding="utf-8")


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def split_dataset(
    instances: Sequence[DatasetInstance], ratio: float, seed: int
) -> tuple[list[DatasetInstance], list[DatasetInstance]]:
    """Deterministic train/test split by pmid.

    All aspects of one article land on the same side, so a pipeline never
    sees a test abstract at training time. The train side receives
    ``round(ratio * n_pmids)`` articles.
    """
    if not instances:
        raise CorpusError("cannot split an empty dataset")
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    pmids = sorted({inst.pmid for inst in instances})
    rng = random.Random(seed)
    rng.shuffle(pmids)
    n_train = int(len(pmids) * ratio + 0.5)
    train_pmids = set(pmids[:n_train])
    train = [inst for inst in instances if inst.pmid in train_pmids]
    test = [inst for inst in instances if inst.pmid not in train_pmids]
    return train, test


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusStats:
    """Exact corpus statistics; means are rationals, rendered to 2 decimals."""

    article_count: int
    mean_article_tokens: Fraction
    min_article_tokens: int
    max_article_tokens: int
    mean_article_sentences: Fraction
    min_article_sentences: int
    max_article_sentences: int
    instance_count: int
    positive_count: int
    negative_count: int
    per_aspect: dict[AspectCode, tuple[int, int]]  # aspect -> (positive, negative)
    mean_summary_tokens: Fraction
    min_summary_tokens: int
    max_summary_tokens: int
    mean_citations: Fraction
    min_citations: int
    max_citations: int
    aspect_coverage: dict[int, int] = field(default_factory=dict)  # k aspects -> article count

    def to_json(self) -> dict:
        def dec2(x: Fraction) -> str:
            return render_decimal(x, 2)

        return {
            "article_count": self.article_count,
            "article_tokens": {
                "mean": dec2(self.mean_article_tokens),
                "min": self.min_article_tokens,
                "max": self.max_article_tokens,
            },
            "article_sentences": {
                "mean": dec2(self.mean_article_sentences),
                "min": self.min_article_sentences,
                "max": self.max_article_sentences,
            },
            "instance_count": self.instance_count,
            "positive_count": self.positive_count,
            "negative_count": self.negative_count,
            "per_aspect": {
                a.value: {"positive": pos, "negative": neg}
                for a, (pos, neg) in self.per_aspect.items()
            },
            "summary_tokens": {
                "mean": dec2(self.mean_summary_tokens),
                "min": self.min_summary_tokens,
                "max": self.max_summary_tokens,
            },
            "citations_per_summary": {
                "mean": dec2(self.mean_citations),
                "min": self.min_citations,
                "max": self.max_citations,
            },
            "aspect_coverage": {str(k): v for k, v in sorted(self.aspect_coverage.items())},
        }


def render_decimal(x: Fraction, places: int) -> str:
    """Render an exact rational to fixed decimals, rounding half up."""
    sign = "-" if x < 0 else ""
    x = abs(x)
    scale = 10**places
    scaled = (x.numerator * scale * 2 + x.denominator) // (2 * x.denominator)
    whole, frac = divmod(scaled, scale)
    if places == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:0{places}d}"


def _mean(values: Sequence[int]) -> Fraction:
    return Fraction(sum(values), len(values)) if values else Fraction(0)


def compute_stats(articles: Sequence[Article], instances: Sequence[DatasetInstance]) -> CorpusStats:
    """Population statistics for a loaded dataset; empty input yields zeros."""
    art_tokens = [a.token_count for a in articles]
    art_sents = [a.sentence_count for a in articles]

    positives = [i for i in instances if not i.reference.is_negative]
    negatives = [i for i in instances if i.reference.is_negative]
    per_aspect = {
        a: (
            sum(1 for i in positives if i.aspect is a),
            sum(1 for i in negatives if i.aspect is a),
        )
        for a in ASPECT_ORDER
    }
    sum_tokens = [count_tokens(i.reference.summary or "") for i in positives]
    cite_counts = [len(i.reference.citations or ()) for i in positives]

    covered: dict[str, set[AspectCode]] = {a.pmid: set() for a in articles}
    for inst in positives:
        covered.setdefault(inst.pmid, set()).add(inst.aspect)
    coverage: dict[int, int] = {}
    for aspects in covered.values():
        coverage[len(aspects)] = coverage.get(len(aspects), 0) + 1

    return CorpusStats(
        article_count=len(articles),
        mean_article_tokens=_mean(art_tokens),
        min_article_tokens=min(art_tokens, default=0),
        max_article_tokens=max(art_tokens, default=0),
        mean_article_sentences=_mean(art_sents),
        min_article_sentences=min(art_sents, default=0),
        max_article_sentences=max(art_sents, default=0),
        instance_count=len(instances),
        positive_count=len(positives),
        negative_count=len(negatives),
        per_aspect=per_aspect,
        mean_summary_tokens=_mean(sum_tokens),
        min_summary_tokens=min(sum_tokens, default=0),
        max_summary_tokens=max(sum_tokens, default=0),
        mean_citations=_mean(cite_counts),
        min_citations=min(cite_counts, default=0),
        max_citations=max(cite_counts, default=0),
        aspect_coverage=coverage,
    )


# ---------------------------------------------------------------------------
# Training-set exports
# ---------------------------------------------------------------------------


def build_tracker_training_set(
    articles: Sequence[Article], instances: Sequence[DatasetInstance]
) -> list[tuple[tuple[str, AspectCode], int]]:
    """One labeled pair per (sentence x aspect) per article.

    Label is 1 iff the sentence index appears in that aspect's reference
    citations; instances that are negative or missing contribute all-zero
    labels for their aspect.
    """
    cited: dict[tuple[str, AspectCode], frozenset[int]] = {}
    for inst in instances:
        cited[(inst.pmid, inst.aspect)] = inst.reference.citations or frozenset()
    pairs: list[tuple[tuple[str, AspectCode], int]] = []
    for article in sorted(articles, key=lambda a: a.pmid):
        for idx, sentence in enumerate(article.sentences):
            for aspect in ASPECT_ORDER:
                label = int(idx in cited.get((article.pmid, aspect), frozenset()))
                pairs.append(((sentence, aspect), label))
    return pairs


def build_summarizer_training_set(
    articles: Sequence[Article],
    instances: Sequence[DatasetInstance],
    include_full_context: bool = False,
) -> list[tuple[tuple[tuple[str, ...], str | None, AspectCode], str]]:
    """One record per positive instance: cited sentences (in index order),
    optional full-article context, aspect, and the reference summary."""
    by_pmid = {a.pmid: a for a in articles}
    records = []
    for inst in sorted(instances, key=lambda i: (i.pmid, i.aspect.value)):
        if inst.reference.is_negative:
            continue
        article = by_pmid[inst.pmid]
        sources = tuple(article.sentences[i] for i in inst.reference.sorted_citations())
        context = article.raw_text if include_full_context else None
        records.append(((sources, context, inst.aspect), inst.reference.summary or ""))
    return records


def render_tracker_export(pairs: Sequence[tuple[tuple[str, AspectCode], int]]) -> str:
    lines = [_header("tracker-training", segmenter_rules=RULES_VERSION)]
    for (sentence, aspect), label in pairs:
        lines.append(canonical_json({"input": {"sentence": sentence, "aspect": aspect.value}, "output": label}))
    return "\n".join(lines) + "\n"


def render_summarizer_export(
    records: Sequence[tuple[tuple[tuple[str, ...], str | None, AspectCode], str]],
) -> str:
    lines = [_header("summarizer-training", segmenter_rules=RULES_VERSION)]
    for (sources, context, aspect), summary in records:
        payload: dict[str, object] = {"sentences": list(sources), "aspect": aspect.value}
        if context is not None:
            payload["context"] = context
        lines.append(canonical_json({"input": payload, "output": summary}))
    return "\n".join(lines) + "\n"
