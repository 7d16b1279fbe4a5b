"""Claim and citation recall/precision over entailment verdicts.

For an instance with reference (summary y, citations C) and system output
(summary y', citations C'):

* claim recall    = |{l in subclaims(y)  : y' entails l}| / |subclaims(y)|
* claim precision = |{l in subclaims(y') : y  entails l}| / |subclaims(y')|
* a generated citation c' is *valid* iff c' is in C and the sentence text of
  c' entails at least one subclaim of y' (checked in order, first hit wins)
* citation recall = n / |C| and citation precision = n / |C'| where n is the
  number of valid citations

All values are exact rationals. Degenerate denominators are resolved by a
fixed convention and flagged: recalls with nothing to recall are 1, a
negative output (asserting nothing) has precisions 1, and a positive output
that cites nothing has citation precision 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .corpus import (
    ASPECT_ORDER,
    Article,
    AspectCode,
    DatasetInstance,
    TraceableSummary,
    render_decimal,
)
from .gateway.judging import ClaimDecomposer, EntailmentJudge, decompose_claims

ZERO = Fraction(0)
ONE = Fraction(1)

METRIC_KEYS = ("clr", "cir", "clp", "cip")


@dataclass(frozen=True)
class MetricRatio:
    """A metric value with its numerator/denominator retained.

    ``denominator == 0`` marks a degenerate case whose value came from the
    convention table rather than division.
    """

    numerator: int
    denominator: int
    value: Fraction

    @classmethod
    def of(cls, numerator: int, denominator: int) -> "MetricRatio":
        if denominator <= 0:
            raise ValueError("use MetricRatio.degenerate for zero denominators")
        return cls(numerator, denominator, Fraction(numerator, denominator))

    @classmethod
    def degenerate(cls, value: Fraction) -> "MetricRatio":
        return cls(0, 0, value)

    @property
    def is_degenerate(self) -> bool:
        return self.denominator == 0

    def as_json(self) -> dict:
        return {
            "value": f"{self.value.numerator}/{self.value.denominator}",
            "percent": render_percent(self.value),
            "numerator": self.numerator,
            "denominator": self.denominator,
        }


def render_percent(value: Fraction) -> str:
    """Render a [0,1] rational as a percentage, one decimal, rounding half up."""
    return render_decimal(value * 100, 1)


@dataclass(frozen=True)
class InstanceReport:
    """Four metric values plus full verdict traces for one (article, aspect)."""

    pmid: str
    aspect: AspectCode
    clr: MetricRatio
    cir: MetricRatio
    clp: MetricRatio
    cip: MetricRatio
    ref_subclaims: tuple[str, ...] = ()
    gen_subclaims: tuple[str, ...] = ()
    ref_claim_verdicts: tuple[bool, ...] = ()
    gen_claim_verdicts: tuple[bool, ...] = ()
    citation_support: tuple[tuple[int, bool | None], ...] = ()
    valid_citations: frozenset[int] = frozenset()
    flags: tuple[str, ...] = ()

    def metric(self, key: str) -> MetricRatio:
        return getattr(self, key)

    def as_json(self) -> dict:
        return {
            "pmid": self.pmid,
            "aspect": self.aspect.value,
            "metrics": {key: self.metric(key).as_json() for key in METRIC_KEYS},
            "ref_subclaims": list(self.ref_subclaims),
            "gen_subclaims": list(self.gen_subclaims),
            "ref_claim_verdicts": list(self.ref_claim_verdicts),
            "gen_claim_verdicts": list(self.gen_claim_verdicts),
            "citation_support": [[c, v] for c, v in self.citation_support],
            "valid_citations": sorted(self.valid_citations),
            "flags": list(self.flags),
        }


def claim_recall(
    ref_subclaims: Sequence[str], gen_summary: str, judge: EntailmentJudge
) -> tuple[MetricRatio, tuple[bool, ...]]:
    """Fraction of reference subclaims entailed by the generated summary."""
    if not ref_subclaims:
        return MetricRatio.degenerate(ONE), ()
    verdicts = tuple(judge.entails(gen_summary, claim) for claim in ref_subclaims)
    return MetricRatio.of(sum(verdicts), len(verdicts)), verdicts


def claim_precision(
    gen_subclaims: Sequence[str], ref_summary: str, judge: EntailmentJudge
) -> tuple[MetricRatio, tuple[bool, ...]]:
    """Fraction of generated subclaims entailed by the reference summary."""
    if not gen_subclaims:
        return MetricRatio.degenerate(ONE), ()
    verdicts = tuple(judge.entails(ref_summary, claim) for claim in gen_subclaims)
    return MetricRatio.of(sum(verdicts), len(verdicts)), verdicts


def citation_scores(
    ref_citations: Iterable[int],
    gen_citations: Iterable[int],
    gen_subclaims: Sequence[str],
    sentences: Sequence[str],
    judge: EntailmentJudge,
) -> tuple[MetricRatio, MetricRatio, frozenset[int], tuple[tuple[int, bool | None], ...], tuple[str, ...]]:
    """Citation recall/precision for a positive output.

    A generated citation is valid iff it appears among the reference
    citations and its sentence entails at least one generated subclaim. The
    support check stops at the first entailed subclaim and is skipped (trace
    value ``None``) for citations outside the reference set, which can never
    become valid.
    """
    ref_set = frozenset(ref_citations)
    gen_set = frozenset(gen_citations)
    flags: list[str] = []

    valid: set[int] = set()
    support: list[tuple[int, bool | None]] = []
    for c in sorted(gen_set):
        if c not in ref_set:
            support.append((c, None))
            continue
        supported = any(judge.entails(sentences[c], claim) for claim in gen_subclaims)
        support.append((c, supported))
        if supported:
            valid.add(c)

    n = len(valid)
    if ref_set:
        cir = MetricRatio.of(n, len(ref_set))
    else:
        cir = MetricRatio.degenerate(ONE)
        flags.append("degenerate_cir")
    if gen_set:
        cip = MetricRatio.of(n, len(gen_set))
    else:
        cip = MetricRatio.degenerate(ZERO)
        flags.append("degenerate_cip_nothing_cited")
    return cir, cip, frozenset(valid), tuple(support), tuple(flags)


def evaluate_instance(
    reference: TraceableSummary,
    output: TraceableSummary,
    article: Article,
    judge: EntailmentJudge,
    decomposer: ClaimDecomposer,
    *,
    pmid: str = "",
    aspect: AspectCode = AspectCode.AIMS,
) -> InstanceReport:
    """Score one system output against its reference.

    Negative/positive combinations resolve without judge calls:

    * both negative: all four metrics are 1 (exact agreement on absence)
    * reference positive, output negative: recalls 0, precisions 1 (flagged)
    * reference negative, output positive: recalls 1 (flagged), precisions 0
    """
    flags: list[str] = []
    ref_subclaims: tuple[str, ...] = ()
    gen_subclaims: tuple[str, ...] = ()

    if not reference.is_negative:
        dec = decompose_claims(decomposer, reference.summary or "")
        ref_subclaims = dec.subclaims
        if dec.fallback_used:
            flags.append("decomposition_fallback_reference")
    else:
        flags.append("reference_negative")
    if not output.is_negative:
        dec = decompose_claims(decomposer, output.summary or "")
        gen_subclaims = dec.subclaims
        if dec.fallback_used:
            flags.append("decomposition_fallback_output")
    else:
        flags.append("output_negative")

    ref_cites = reference.citations or frozenset()
    gen_cites = output.citations or frozenset()

    ref_verdicts: tuple[bool, ...] = ()
    gen_verdicts: tuple[bool, ...] = ()
    support: tuple[tuple[int, bool | None], ...] = ()
    valid: frozenset[int] = frozenset()

    # Claim recall: a negative output asserts nothing, so nothing is entailed.
    if not ref_subclaims:
        clr = MetricRatio.degenerate(ONE)
        flags.append("degenerate_clr")
    elif output.is_negative:
        ref_verdicts = (False,) * len(ref_subclaims)
        clr = MetricRatio.of(0, len(ref_subclaims))
    else:
        clr, ref_verdicts = claim_recall(ref_subclaims, output.summary or "", judge)

    # Claim precision: a negative reference entails nothing.
    if not gen_subclaims:
        clp = MetricRatio.degenerate(ONE)
        flags.append("degenerate_clp")
    elif reference.is_negative:
        gen_verdicts = (False,) * len(gen_subclaims)
        clp = MetricRatio.of(0, len(gen_subclaims))
    else:
        clp, gen_verdicts = claim_precision(gen_subclaims, reference.summary or "", judge)

    # Citation scores share a single valid-citation count.
    if output.is_negative:
        if ref_cites:
            cir = MetricRatio.of(0, len(ref_cites))
        else:
            cir = MetricRatio.degenerate(ONE)
            flags.append("degenerate_cir")
        cip = MetricRatio.degenerate(ONE)
        flags.append("degenerate_cip")
    else:
        cir, cip, valid, support, citation_flags = citation_scores(
            ref_cites, gen_cites, gen_subclaims, article.sentences, judge
        )
        flags.extend(citation_flags)

    return InstanceReport(
        pmid=pmid,
        aspect=aspect,
        clr=clr,
        cir=cir,
        clp=clp,
        cip=cip,
        ref_subclaims=ref_subclaims,
        gen_subclaims=gen_subclaims,
        ref_claim_verdicts=ref_verdicts,
        gen_claim_verdicts=gen_verdicts,
        citation_support=support,
        valid_citations=valid,
        flags=tuple(flags),
    )


def f1(recall: Fraction, precision: Fraction) -> Fraction:
    """Harmonic mean; 0 when both inputs are 0."""
    if recall == 0 and precision == 0:
        return ZERO
    return 2 * recall * precision / (recall + precision)


@dataclass(frozen=True)
class MetricRow:
    """Aggregated values for one group of instances."""

    clr: Fraction
    cir: Fraction
    clp: Fraction
    cip: Fraction
    f1_claim: Fraction
    f1_citation: Fraction
    instance_count: int

    def as_json(self) -> dict:
        return {
            "clr": render_percent(self.clr),
            "cir": render_percent(self.cir),
            "clp": render_percent(self.clp),
            "cip": render_percent(self.cip),
            "f1_claim": render_percent(self.f1_claim),
            "f1_citation": render_percent(self.f1_citation),
            "exact": {
                key: f"{value.numerator}/{value.denominator}"
                for key, value in (
                    ("clr", self.clr),
                    ("cir", self.cir),
                    ("clp", self.clp),
                    ("cip", self.cip),
                    ("f1_claim", self.f1_claim),
                    ("f1_citation", self.f1_citation),
                )
            },
            "instance_count": self.instance_count,
        }


@dataclass(frozen=True)
class MetricReport:
    """Per-aspect breakdown plus the all-instance average row."""

    mode: str  # "macro" | "micro"
    overall: MetricRow
    per_aspect: dict[AspectCode, MetricRow]
    instance_count: int

    def as_json(self) -> dict:
        return {
            "mode": self.mode,
            "overall": self.overall.as_json(),
            "per_aspect": {a.value: row.as_json() for a, row in self.per_aspect.items()},
            "instance_count": self.instance_count,
        }


def _macro_row(reports: Sequence[InstanceReport]) -> MetricRow:
    n = len(reports)
    means = {
        key: sum((r.metric(key).value for r in reports), ZERO) / n for key in METRIC_KEYS
    }
    return MetricRow(
        clr=means["clr"],
        cir=means["cir"],
        clp=means["clp"],
        cip=means["cip"],
        f1_claim=f1(means["clr"], means["clp"]),
        f1_citation=f1(means["cir"], means["cip"]),
        instance_count=n,
    )


def _micro_row(reports: Sequence[InstanceReport]) -> MetricRow:
    """Pooled counts: degenerate (zero-denominator) entries drop out of the pool."""
    pooled = {}
    for key in METRIC_KEYS:
        num = sum(r.metric(key).numerator for r in reports)
        den = sum(r.metric(key).denominator for r in reports)
        pooled[key] = Fraction(num, den) if den else ZERO
    return MetricRow(
        clr=pooled["clr"],
        cir=pooled["cir"],
        clp=pooled["clp"],
        cip=pooled["cip"],
        f1_claim=f1(pooled["clr"], pooled["clp"]),
        f1_citation=f1(pooled["cir"], pooled["cip"]),
        instance_count=len(reports),
    )


def aggregate(reports: Sequence[InstanceReport], mode: str = "macro") -> MetricReport:
    """Aggregate instance reports into the overall and per-aspect rows.

    Macro (default) averages each metric over instances; micro pools the
    numerators and denominators. F1 is always computed from the aggregated
    recall/precision pair.
    """
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    if mode not in ("macro", "micro"):
        raise ValueError(f"unknown aggregation mode {mode!r}")
    row_fn = _macro_row if mode == "macro" else _micro_row
    per_aspect = {}
    for aspect in ASPECT_ORDER:
        group = [r for r in reports if r.aspect is aspect]
        if group:
            per_aspect[aspect] = row_fn(group)
    return MetricReport(
        mode=mode,
        overall=row_fn(list(reports)),
        per_aspect=per_aspect,
        instance_count=len(reports),
    )


def evaluate_run(
    instances: Sequence[DatasetInstance],
    outputs: Mapping[str, TraceableSummary],
    articles: Mapping[str, Article],
    judge: EntailmentJudge,
    decomposer: ClaimDecomposer,
    *,
    jobs: int = 1,
) -> list[InstanceReport]:
    """Evaluate every instance with an output.

    Instance evaluations are independent; with ``jobs`` > 1 they run on a
    thread pool (judge calls funnel through the gateway's synchronized
    cache). Reports always come back in (pmid, aspect) order.
    """
    ordered = [
        inst
        for inst in sorted(instances, key=lambda i: (i.pmid, i.aspect.value))
        if inst.instance_id in outputs
    ]

    def one(inst: DatasetInstance) -> InstanceReport:
        return evaluate_instance(
            inst.reference,
            outputs[inst.instance_id],
            articles[inst.pmid],
            judge,
            decomposer,
            pmid=inst.pmid,
            aspect=inst.aspect,
        )

    if jobs <= 1:
        return [one(inst) for inst in ordered]
    import concurrent.futures

    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, ordered))


def render_report_table(report: MetricReport) -> str:
    """Fixed-width table: one row per aspect plus the average row."""
    headers = ("Aspect", "CLR", "CIR", "CLP", "CIP", "F1cl", "F1ci", "N")
    rows = []
    for aspect, row in report.per_aspect.items():
        rows.append(
            (
                aspect.value.upper(),
                render_percent(row.clr),
                render_percent(row.cir),
                render_percent(row.clp),
                render_percent(row.cip),
                render_percent(row.f1_claim),
                render_percent(row.f1_citation),
                str(row.instance_count),
            )
        )
    overall = report.overall
    rows.append(
        (
            "Avg.",
            render_percent(overall.clr),
            render_percent(overall.cir),
            render_percent(overall.clp),
            render_percent(overall.cip),
            render_percent(overall.f1_claim),
            render_percent(overall.f1_citation),
            str(overall.instance_count),
        )
    )
    widths = [max(len(headers[i]), max(len(r[i]) for r in rows)) for i in range(len(headers))]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(headers))))
    return "\n".join(lines)
