"""HTTP annotation service.

Workflow: annotators register with a domain, give consent and wait for admin
approval; an admin assigns every instance to one medical and one NLP
annotator; annotators rate their tasks on three 5-point scales (independent:
nobody sees the other's scores); instances tripping the revision filter get
revised; human entailment judgments are collected in the same schema the
metrics consume; the revised dataset exports in canonical corpus form.

Authentication is bearer-token: annotator tokens are issued at registration,
the admin token comes from configuration. Credentials never live in request
bodies or on disk beyond the store.
"""

from __future__ import annotations

import secrets
from datetime import datetime, timezone
from typing import Mapping, Sequence

from fastapi import Depends, FastAPI, Header, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from ..corpus import (
    Article,
    DatasetInstance,
    TraceableSummary,
    render_instances_file,
)
from .storage import Store
from .workflow import (
    DOMAINS,
    RATING_METRICS,
    Annotator,
    RatingRecord,
    RevisionRecord,
    WorkflowError,
    assign_tasks,
    export_revised_dataset,
    select_for_revision,
)

ANNOTATORS = "annotators"
ASSIGNMENTS = "assignments"
RATINGS = "ratings"
REVISIONS = "revisions"
JUDGMENTS = "judgments"


class RegisterRequest(BaseModel):
    email: str
    domain: str


class ConsentRequest(BaseModel):
    data_use: bool
    cookies: bool


class AssignRequest(BaseModel):
    seed: int = 0


class RatingRequest(BaseModel):
    completeness: int = Field(ge=1, le=5)
    conciseness: int = Field(ge=1, le=5)
    traceability: int = Field(ge=1, le=5)


class RevisionRequest(BaseModel):
    summary: str | None
    citations: list[int] | None
    rationale: str = ""


class JudgmentItem(BaseModel):
    premise: str
    hypothesis: str
    verdict: bool


class JudgmentsRequest(BaseModel):
    verdicts: list[JudgmentItem]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _annotator_from_record(record: Mapping) -> Annotator:
    return Annotator(
        id=record["id"],
        email=record["email"],
        domain=record["domain"],
        consent_data_use=record.get("consent_data_use", False),
        consent_cookies=record.get("consent_cookies", False),
        approved=record.get("approved", False),
    )


def create_app(
    store: Store,
    articles: Sequence[Article],
    instances: Sequence[DatasetInstance],
    *,
    admin_token: str,
    revision_policy: str = "original",
    outputs: Mapping[str, TraceableSummary] | None = None,
    subclaims: Mapping[str, dict] | None = None,
) -> FastAPI:
    """Build the service around a store and a loaded dataset.

    ``outputs`` optionally attaches system outputs under evaluation and
    ``subclaims`` their decompositions (keyed by instance id with
    ``ref``/``gen`` lists), which drive the human-judgment checklist.

    ``revision_policy`` is "original" (only the two assigned annotators may
    revise) or "any" (any eligible annotator may).
    """
    if revision_policy not in ("original", "any"):
        raise ValueError(f"unknown revision policy {revision_policy!r}")

    app = FastAPI(title="annotation service")
    articles_by_pmid = {a.pmid: a for a in articles}
    instances_by_id = {inst.instance_id: inst for inst in instances}
    outputs = dict(outputs or {})
    subclaims = dict(subclaims or {})

    # ------------------------------------------------------------------
    # auth dependencies
    # ------------------------------------------------------------------

    def current_annotator(authorization: str = Header(default="")) -> Annotator:
        if not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        token = authorization.removeprefix("Bearer ").strip()
        for _, record in store.items(ANNOTATORS):
            if record.get("token") == token:
                return _annotator_from_record(record)
        raise HTTPException(status_code=401, detail="unknown token")

    def eligible_annotator(annotator: Annotator = Depends(current_annotator)) -> Annotator:
        if not annotator.eligible:
            raise HTTPException(status_code=403, detail="requires admin approval and data-use consent")
        return annotator

    def require_admin(authorization: str = Header(default="")) -> None:
        if authorization != f"Bearer {admin_token}":
            raise HTTPException(status_code=403, detail="admin token required")

    def assignees(instance_id: str) -> tuple[str, ...]:
        record = store.get(ASSIGNMENTS, instance_id)
        return tuple(record["annotators"]) if record else ()

    def require_assigned(instance_id: str, annotator: Annotator) -> None:
        if annotator.id not in assignees(instance_id):
            raise HTTPException(status_code=403, detail="not assigned to this instance")

    def instance_or_404(instance_id: str) -> DatasetInstance:
        inst = instances_by_id.get(instance_id)
        if inst is None:
            raise HTTPException(status_code=404, detail=f"unknown instance {instance_id}")
        return inst

    def all_ratings() -> list[RatingRecord]:
        records = []
        for _, rec in store.items(RATINGS):
            records.append(
                RatingRecord(
                    instance_id=rec["instance_id"],
                    annotator_id=rec["annotator_id"],
                    completeness=rec["completeness"],
                    conciseness=rec["conciseness"],
                    traceability=rec["traceability"],
                    timestamp=rec.get("timestamp", ""),
                )
            )
        return records

    def selected_instances() -> set[str]:
        selected, _ = select_for_revision(all_ratings())
        return selected

    # ------------------------------------------------------------------
    # registration and consent
    # ------------------------------------------------------------------

    @app.post("/api/register", status_code=201)
    def register(body: RegisterRequest) -> dict:
        if body.domain not in DOMAINS:
            raise HTTPException(status_code=422, detail=f"domain must be one of {DOMAINS}")
        annotator_id = f"annotator-{sum(1 for _ in store.items(ANNOTATORS)) + 1:03d}"
        token = secrets.token_hex(16)
        store.put(
            ANNOTATORS,
            annotator_id,
            {
                "id": annotator_id,
                "email": body.email,
                "domain": body.domain,
                "token": token,
                "consent_data_use": False,
                "consent_cookies": False,
                "approved": False,
                "registered_at": _now(),
            },
        )
        return {"id": annotator_id, "token": token}

    @app.post("/api/consent")
    def consent(body: ConsentRequest, annotator: Annotator = Depends(current_annotator)) -> dict:
        record = store.get(ANNOTATORS, annotator.id) or {}
        record["consent_data_use"] = body.data_use
        record["consent_cookies"] = body.cookies
        store.put(ANNOTATORS, annotator.id, record)
        return {"id": annotator.id, "consent_data_use": body.data_use, "consent_cookies": body.cookies}

    # ------------------------------------------------------------------
    # admin
    # ------------------------------------------------------------------

    @app.post("/api/admin/approve/{annotator_id}", dependencies=[Depends(require_admin)])
    def approve(annotator_id: str) -> dict:
        record = store.get(ANNOTATORS, annotator_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown annotator")
        record["approved"] = True
        store.put(ANNOTATORS, annotator_id, record)
        return {"id": annotator_id, "approved": True}

    @app.post("/api/admin/assign", dependencies=[Depends(require_admin)])
    def assign(body: AssignRequest) -> dict:
        annotators = [_annotator_from_record(rec) for _, rec in store.items(ANNOTATORS)]
        try:
            assignment = assign_tasks(sorted(instances_by_id), annotators, body.seed)
        except WorkflowError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        for instance_id, pair in assignment.items():
            store.put(ASSIGNMENTS, instance_id, {"annotators": list(pair)})
        return {"assigned": len(assignment), "seed": body.seed}

    @app.get("/api/admin/export", dependencies=[Depends(require_admin)], response_class=PlainTextResponse)
    def export(force: bool = False) -> str:
        revisions = {
            key: RevisionRecord(
                instance_id=rec["instance_id"],
                annotator_id=rec["annotator_id"],
                revised=(
                    TraceableSummary.negative()
                    if rec["summary"] is None
                    else TraceableSummary.positive(rec["summary"], rec["citations"])
                ),
                rationale=rec.get("rationale", ""),
            )
            for key, rec in store.items(REVISIONS)
        }
        try:
            revised = export_revised_dataset(
                list(instances_by_id.values()),
                revisions,
                pending=selected_instances(),
                force=force,
            )
        except WorkflowError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return render_instances_file(revised)

    @app.get("/api/admin/ratings", dependencies=[Depends(require_admin)])
    def ratings_dump() -> list[dict]:
        return [rec for _, rec in store.items(RATINGS)]

    @app.get("/api/admin/judgments", dependencies=[Depends(require_admin)])
    def judgments_dump() -> list[dict]:
        return store.read_log(JUDGMENTS)

    # ------------------------------------------------------------------
    # annotator workflow
    # ------------------------------------------------------------------

    @app.get("/api/tasks")
    def tasks(annotator: Annotator = Depends(eligible_annotator)) -> list[dict]:
        mine = []
        for instance_id, record in store.items(ASSIGNMENTS):
            if annotator.id not in record["annotators"]:
                continue
            rated = store.get(RATINGS, f"{instance_id}|{annotator.id}") is not None
            mine.append({"instance_id": instance_id, "rated": rated})
        return mine

    def _instance_detail(inst: DatasetInstance) -> dict:
        article = articles_by_pmid[inst.pmid]
        output = outputs.get(inst.instance_id)
        claims = subclaims.get(inst.instance_id, {})
        return {
            "instance_id": inst.instance_id,
            "pmid": inst.pmid,
            "aspect": inst.aspect.value,
            "sentences": list(article.sentences),
            "reference": {
                "summary": inst.reference.summary,
                "citations": list(inst.reference.sorted_citations()) if not inst.reference.is_negative else None,
            },
            "output": None
            if output is None
            else {
                "summary": output.summary,
                "citations": list(output.sorted_citations()) if not output.is_negative else None,
            },
            "ref_subclaims": claims.get("ref"),
            "gen_subclaims": claims.get("gen"),
        }

    @app.get("/api/instances/{instance_id}")
    def instance_detail(instance_id: str, annotator: Annotator = Depends(eligible_annotator)) -> dict:
        inst = instance_or_404(instance_id)
        require_assigned(instance_id, annotator)
        return _instance_detail(inst)

    @app.get("/api/articles/{pmid}")
    def article_detail(pmid: str, annotator: Annotator = Depends(eligible_annotator)) -> dict:
        article = articles_by_pmid.get(pmid)
        if article is None:
            raise HTTPException(status_code=404, detail=f"unknown pmid {pmid}")
        cards = []
        for inst in instances_by_id.values():
            if inst.pmid != pmid:
                continue
            detail = _instance_detail(inst)
            detail["assigned_to_me"] = annotator.id in assignees(inst.instance_id)
            cards.append(detail)
        cards.sort(key=lambda c: c["aspect"])
        return {"pmid": pmid, "sentences": list(article.sentences), "instances": cards}

    @app.post("/api/instances/{instance_id}/ratings", status_code=201)
    def submit_rating(
        instance_id: str, body: RatingRequest, annotator: Annotator = Depends(eligible_annotator)
    ) -> dict:
        instance_or_404(instance_id)
        require_assigned(instance_id, annotator)
        record = {
            "instance_id": instance_id,
            "annotator_id": annotator.id,
            "completeness": body.completeness,
            "conciseness": body.conciseness,
            "traceability": body.traceability,
            "timestamp": _now(),
        }
        # Last write wins per (instance, annotator); audit keeps the history.
        store.append_log("ratings_audit", record)
        store.put(RATINGS, f"{instance_id}|{annotator.id}", record)
        return {metric: record[metric] for metric in RATING_METRICS}

    @app.get("/api/instances/{instance_id}/ratings")
    def my_rating(instance_id: str, annotator: Annotator = Depends(eligible_annotator)) -> dict:
        instance_or_404(instance_id)
        require_assigned(instance_id, annotator)
        record = store.get(RATINGS, f"{instance_id}|{annotator.id}")
        if record is None:
            raise HTTPException(status_code=404, detail="no rating submitted")
        # Phase-I independence: an annotator only ever sees their own scores.
        return {metric: record[metric] for metric in RATING_METRICS}

    # ------------------------------------------------------------------
    # phase II: revision
    # ------------------------------------------------------------------

    def may_revise(instance_id: str, annotator: Annotator) -> bool:
        if revision_policy == "any":
            return True
        return annotator.id in assignees(instance_id)

    @app.get("/api/revisions")
    def revision_queue(annotator: Annotator = Depends(eligible_annotator)) -> list[dict]:
        queue = []
        for instance_id in sorted(selected_instances()):
            if not may_revise(instance_id, annotator):
                continue
            scores = [
                {
                    "annotator_id": rec["annotator_id"],
                    **{metric: rec[metric] for metric in RATING_METRICS},
                }
                for _, rec in store.items(RATINGS)
                if rec["instance_id"] == instance_id
            ]
            entry = _instance_detail(instances_by_id[instance_id])
            entry["ratings"] = scores
            entry["revised"] = store.get(REVISIONS, instance_id) is not None
            queue.append(entry)
        return queue

    @app.post("/api/instances/{instance_id}/revision", status_code=201)
    def submit_revision(
        instance_id: str, body: RevisionRequest, annotator: Annotator = Depends(eligible_annotator)
    ) -> dict:
        inst = instance_or_404(instance_id)
        if not may_revise(instance_id, annotator):
            raise HTTPException(status_code=403, detail="not allowed to revise this instance")
        if (body.summary is None) != (body.citations is None):
            raise HTTPException(status_code=422, detail="summary and citations must be absent together")
        if body.citations is not None:
            n = articles_by_pmid[inst.pmid].sentence_count
            bad = [c for c in body.citations if not 0 <= c < n]
            if bad:
                raise HTTPException(status_code=422, detail=f"citation indices out of range: {sorted(bad)}")
        record = {
            "instance_id": instance_id,
            "annotator_id": annotator.id,
            "summary": body.summary,
            "citations": sorted(set(body.citations)) if body.citations is not None else None,
            "rationale": body.rationale,
            "timestamp": _now(),
        }
        store.append_log("revisions_audit", record)
        store.put(REVISIONS, instance_id, record)
        return {"instance_id": instance_id, "stored": True}

    # ------------------------------------------------------------------
    # human entailment judgments
    # ------------------------------------------------------------------

    @app.post("/api/instances/{instance_id}/judgments", status_code=201)
    def submit_judgments(
        instance_id: str, body: JudgmentsRequest, annotator: Annotator = Depends(eligible_annotator)
    ) -> dict:
        instance_or_404(instance_id)
        require_assigned(instance_id, annotator)
        claims = subclaims.get(instance_id, {})
        known = set(claims.get("ref") or []) | set(claims.get("gen") or [])
        if known:
            for item in body.verdicts:
                article = articles_by_pmid[instances_by_id[instance_id].pmid]
                if item.hypothesis not in known and item.hypothesis not in article.sentences:
                    raise HTTPException(
                        status_code=422,
                        detail=f"verdict references unknown subclaim: {item.hypothesis[:60]!r}",
                    )
        for item in body.verdicts:
            store.append_log(
                JUDGMENTS,
                {
                    "instance_id": instance_id,
                    "annotator_id": annotator.id,
                    "premise": item.premise,
                    "hypothesis": item.hypothesis,
                    "verdict": item.verdict,
                    "judge": "human",
                    "timestamp": _now(),
                },
            )
        return {"instance_id": instance_id, "stored": len(body.verdicts), "complete": bool(body.verdicts)}

    return app
