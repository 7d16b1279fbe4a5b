"""Annotation workflow rules: task assignment, the revision filter, and
revised-dataset export. Pure functions, shared by the HTTP service and the
CLI."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from ..corpus import DatasetInstance, TraceableSummary

DOMAINS = ("medical", "nlp")
RATING_METRICS = ("completeness", "conciseness", "traceability")

# Revision filter boundaries; both comparisons are strict, so a mean of
# exactly 3.5 or a gap of exactly 2 does not select.
MEAN_BELOW = Fraction(7, 2)
DIFF_ABOVE = Fraction(2)


class WorkflowError(Exception):
    pass


@dataclass(frozen=True)
class Annotator:
    id: str
    email: str
    domain: str
    consent_data_use: bool = False
    consent_cookies: bool = False
    approved: bool = False

    @property
    def eligible(self) -> bool:
        return self.approved and self.consent_data_use


@dataclass(frozen=True)
class RatingRecord:
    instance_id: str
    annotator_id: str
    completeness: int
    conciseness: int
    traceability: int
    timestamp: str = ""

    def __post_init__(self) -> None:
        for metric in RATING_METRICS:
            score = getattr(self, metric)
            if not isinstance(score, int) or not 1 <= score <= 5:
                raise WorkflowError(f"{metric} must be an integer in 1..5, got {score!r}")

    def score(self, metric: str) -> int:
        return int(getattr(self, metric))


@dataclass(frozen=True)
class RevisionRecord:
    instance_id: str
    annotator_id: str
    revised: TraceableSummary
    rationale: str = ""
    timestamp: str = ""


def assign_tasks(
    instance_ids: Sequence[str], annotators: Sequence[Annotator], seed: int
) -> dict[str, tuple[str, str]]:
    """Assign every instance to one eligible annotator per domain.

    Round-robin over a seed-shuffled order per domain keeps loads within one
    task of each other and makes the map reproducible for a fixed seed.
    """
    pools: dict[str, list[Annotator]] = {domain: [] for domain in DOMAINS}
    for annotator in annotators:
        if annotator.eligible and annotator.domain in pools:
            pools[annotator.domain].append(annotator)
    for domain, pool in pools.items():
        if not pool:
            raise WorkflowError(f"no eligible annotator in the {domain} domain")
        pool.sort(key=lambda a: a.id)

    rng = random.Random(seed)
    orders = {domain: rng.sample(pool, len(pool)) for domain, pool in pools.items()}
    assignment: dict[str, tuple[str, str]] = {}
    for i, instance_id in enumerate(sorted(instance_ids)):
        picks = tuple(orders[domain][i % len(orders[domain])].id for domain in DOMAINS)
        assignment[instance_id] = picks
    return assignment


def needs_revision(a: RatingRecord, b: RatingRecord) -> bool:
    """True when any metric's mean is below 3.5 or its gap exceeds 2."""
    for metric in RATING_METRICS:
        sa, sb = a.score(metric), b.score(metric)
        if Fraction(sa + sb, 2) < MEAN_BELOW or abs(sa - sb) > DIFF_ABOVE:
            return True
    return False


def select_for_revision(
    ratings: Iterable[RatingRecord],
) -> tuple[set[str], list[str]]:
    """Instances whose rating pair trips the revision filter.

    Instances with a rating count other than two are reported and skipped.
    """
    by_instance: dict[str, list[RatingRecord]] = {}
    for record in ratings:
        by_instance.setdefault(record.instance_id, []).append(record)
    selected: set[str] = set()
    skipped: list[str] = []
    for instance_id, records in sorted(by_instance.items()):
        if len(records) != 2:
            skipped.append(instance_id)
            continue
        if needs_revision(records[0], records[1]):
            selected.add(instance_id)
    return selected, skipped


def export_revised_dataset(
    instances: Sequence[DatasetInstance],
    revisions: Mapping[str, RevisionRecord],
    *,
    pending: Iterable[str] = (),
    force: bool = False,
) -> list[DatasetInstance]:
    """Substitute revised references into the dataset.

    ``pending`` names instances selected for revision but not yet revised;
    they block the export unless forced.
    """
    missing = sorted(set(pending) - set(revisions))
    if missing and not force:
        raise WorkflowError(f"{len(missing)} selected instances still pending revision: {missing[:5]}")
    out = []
    for inst in instances:
        revision = revisions.get(inst.instance_id)
        if revision is None:
            out.append(inst)
        else:
            out.append(DatasetInstance(pmid=inst.pmid, aspect=inst.aspect, reference=revision.revised))
    return out
