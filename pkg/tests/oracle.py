"""Independent brute-force scoring used to cross-check the metrics module.

Deliberately written with plain loops over an explicit verdict table and no
shared helpers, so a bug in the production path cannot hide here. The same
degenerate-denominator conventions apply: recalls with an empty reference
side are 1, a negative output has precisions 1, a positive output citing
nothing has citation precision 0.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction


@dataclass
class RandomInstance:
    """A fully-materialized random evaluation problem."""

    sentences: list[str]
    ref_summary: str | None
    ref_citations: set[int]
    gen_summary: str | None
    gen_citations: set[int]
    ref_subclaims: list[str]
    gen_subclaims: list[str]
    table: dict[tuple[str, str], bool]


def brute_force_scores(inst: RandomInstance) -> dict:
    """Score an instance by direct enumeration of the defining conditions."""

    def phi(premise: str, hypothesis: str) -> bool:
        if premise == hypothesis:
            return True
        return inst.table.get((premise, hypothesis), False)

    ref_negative = inst.ref_summary is None
    gen_negative = inst.gen_summary is None

    # claim recall over reference subclaims
    if ref_negative or not inst.ref_subclaims:
        clr = Fraction(1)
    else:
        hits = 0
        for claim in inst.ref_subclaims:
            if not gen_negative and phi(inst.gen_summary, claim):
                hits += 1
        clr = Fraction(hits, len(inst.ref_subclaims))

    # claim precision over generated subclaims
    if gen_negative or not inst.gen_subclaims:
        clp = Fraction(1)
    else:
        hits = 0
        for claim in inst.gen_subclaims:
            if not ref_negative and phi(inst.ref_summary, claim):
                hits += 1
        clp = Fraction(hits, len(inst.gen_subclaims))

    # citation validity: membership in the reference set AND support of at
    # least one generated subclaim by the cited sentence
    valid = set()
    if not gen_negative:
        for c in inst.gen_citations:
            if c not in inst.ref_citations:
                continue
            for claim in inst.gen_subclaims:
                if phi(inst.sentences[c], claim):
                    valid.add(c)
                    break
    n = len(valid)

    if ref_negative or not inst.ref_citations:
        cir = Fraction(1)
    else:
        cir = Fraction(n, len(inst.ref_citations))

    if gen_negative:
        cip = Fraction(1)
    elif not inst.gen_citations:
        cip = Fraction(0)
    else:
        cip = Fraction(n, len(inst.gen_citations))

    return {"clr": clr, "cir": cir, "clp": clp, "cip": cip, "valid": frozenset(valid)}


def make_random_instance(rng: random.Random) -> RandomInstance:
    """Small random instance: <=8 sentences, <=6 subclaims each side, random
    negative shapes, random citation sets and a random boolean judge table."""
    n_sentences = rng.randint(1, 8)
    uid = rng.randrange(10**9)
    sentences = [f"sentence-{uid}-{i}" for i in range(n_sentences)]

    ref_negative = rng.random() < 0.2
    gen_negative = rng.random() < 0.2

    if ref_negative:
        ref_summary, ref_citations, ref_subclaims = None, set(), []
    else:
        ref_summary = f"ref-summary-{uid}"
        ref_citations = set(rng.sample(range(n_sentences), k=rng.randint(0, n_sentences)))
        ref_subclaims = [f"ref-claim-{uid}-{i}" for i in range(rng.randint(1, 6))]

    if gen_negative:
        gen_summary, gen_citations, gen_subclaims = None, set(), []
    else:
        gen_summary = f"gen-summary-{uid}"
        gen_citations = set(rng.sample(range(n_sentences), k=rng.randint(0, n_sentences)))
        gen_subclaims = [f"gen-claim-{uid}-{i}" for i in range(rng.randint(1, 6))]

    table: dict[tuple[str, str], bool] = {}
    if gen_summary is not None:
        for claim in ref_subclaims:
            table[(gen_summary, claim)] = rng.random() < 0.5
    if ref_summary is not None:
        for claim in gen_subclaims:
            table[(ref_summary, claim)] = rng.random() < 0.5
    for sentence in sentences:
        for claim in gen_subclaims:
            table[(sentence, claim)] = rng.random() < 0.5

    return RandomInstance(
        sentences=sentences,
        ref_summary=ref_summary,
        ref_citations=ref_citations,
        gen_summary=gen_summary,
        gen_citations=gen_citations,
        ref_subclaims=ref_subclaims,
        gen_subclaims=gen_subclaims,
        table=table,
    )
