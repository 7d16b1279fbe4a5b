from __future__ import annotations

import random

import pytest
from fastapi.testclient import TestClient

from sumcite.corpus import TraceableSummary, load_dataset
from sumcite.gateway import MockDecomposer, MockJudge
from sumcite.metrics import evaluate_instance
from sumcite.service.app import create_app
from sumcite.service.storage import FileStore, SqliteStore
from sumcite.service.workflow import (
    Annotator,
    RatingRecord,
    WorkflowError,
    assign_tasks,
    export_revised_dataset,
    needs_revision,
    select_for_revision,
)

ADMIN = {"Authorization": "Bearer admin-secret"}


# ---------------------------------------------------------------------------
# workflow rules
# ---------------------------------------------------------------------------


def _annotators(medical=2, nlp=2):
    out = []
    for i in range(medical):
        out.append(Annotator(f"med{i}", f"m{i}@x", "medical", True, True, True))
    for i in range(nlp):
        out.append(Annotator(f"nlp{i}", f"n{i}@x", "nlp", True, True, True))
    return out


class TestAssignTasks:
    def test_each_instance_gets_two_distinct_domains(self):
        assignment = assign_tasks([f"i{k}" for k in range(9)], _annotators(), seed=4)
        assert len(assignment) == 9
        for med, nlp in assignment.values():
            assert med.startswith("med") and nlp.startswith("nlp")

    def test_balanced_within_one(self):
        assignment = assign_tasks([f"i{k}" for k in range(10)], _annotators(3, 2), seed=1)
        loads: dict[str, int] = {}
        for pair in assignment.values():
            for annotator_id in pair:
                loads[annotator_id] = loads.get(annotator_id, 0) + 1
        med_loads = [v for k, v in loads.items() if k.startswith("med")]
        nlp_loads = [v for k, v in loads.items() if k.startswith("nlp")]
        assert max(med_loads) - min(med_loads) <= 1
        assert max(nlp_loads) - min(nlp_loads) <= 1

    def test_four_instances_two_per_annotator(self):
        assignment = assign_tasks(["a", "b", "c", "d"], _annotators(2, 2), seed=0)
        loads: dict[str, int] = {}
        for pair in assignment.values():
            for annotator_id in pair:
                loads[annotator_id] = loads.get(annotator_id, 0) + 1
        assert sorted(loads.values()) == [2, 2, 2, 2]

    def test_missing_domain_is_an_error(self):
        with pytest.raises(WorkflowError, match="nlp"):
            assign_tasks(["a"], _annotators(1, 0), seed=0)

    def test_deterministic_per_seed(self):
        ids = [f"i{k}" for k in range(20)]
        assert assign_tasks(ids, _annotators(), seed=9) == assign_tasks(ids, _annotators(), seed=9)

    def test_unapproved_annotators_ineligible(self):
        pending = [Annotator("med0", "m@x", "medical", True, True, approved=False)]
        with pytest.raises(WorkflowError):
            assign_tasks(["a"], pending + _annotators(0, 1), seed=0)


def _rating(instance_id, annotator_id, c1, c2, c3):
    return RatingRecord(instance_id, annotator_id, c1, c2, c3)


class TestRevisionFilter:
    def test_boundary_mean_exactly_3_5_not_selected(self):
        a = _rating("x", "m", 3, 3, 3)
        b = _rating("x", "n", 4, 4, 4)
        assert not needs_revision(a, b)  # every mean is 3.5, every diff is 1

    def test_boundary_diff_exactly_2_not_selected(self):
        a = _rating("x", "m", 3, 5, 5)
        b = _rating("x", "n", 5, 5, 5)
        assert not needs_revision(a, b)  # diff 2, means 4 and 5

    def test_diff_three_selected(self):
        a = _rating("x", "m", 5, 5, 5)
        b = _rating("x", "n", 2, 5, 5)
        assert needs_revision(a, b)

    def test_low_mean_selected(self):
        a = _rating("x", "m", 3, 5, 5)
        b = _rating("x", "n", 3, 5, 5)
        assert needs_revision(a, b)  # completeness mean 3.0 < 3.5

    def test_incomplete_pairs_skipped_and_reported(self):
        ratings = [
            _rating("solo", "m", 1, 1, 1),
            _rating("pair", "m", 5, 5, 5),
            _rating("pair", "n", 5, 5, 5),
        ]
        selected, skipped = select_for_revision(ratings)
        assert skipped == ["solo"]
        assert selected == set()

    def test_matches_bruteforce_on_random_pairs(self):
        rng = random.Random(42)
        ratings = []
        for k in range(500):
            ratings.append(_rating(f"i{k}", "m", *(rng.randint(1, 5) for _ in range(3))))
            ratings.append(_rating(f"i{k}", "n", *(rng.randint(1, 5) for _ in range(3))))
        selected, _ = select_for_revision(ratings)

        by_instance: dict = {}
        for r in ratings:
            by_instance.setdefault(r.instance_id, []).append(r)
        expected = set()
        for instance_id, (a, b) in by_instance.items():
            for metric in ("completeness", "conciseness", "traceability"):
                sa, sb = getattr(a, metric), getattr(b, metric)
                if (sa + sb) / 2 < 3.5 or abs(sa - sb) > 2.0:
                    expected.add(instance_id)
                    break
        assert selected == expected

    def test_score_out_of_range_rejected(self):
        with pytest.raises(WorkflowError):
            _rating("x", "m", 0, 3, 3)
        with pytest.raises(WorkflowError):
            _rating("x", "m", 3, 6, 3)


class TestExportRevised:
    def test_no_revisions_is_identity(self, instances):
        assert export_revised_dataset(instances, {}) == list(instances)

    def test_revision_substitutes_reference(self, instances):
        target = instances[0]
        from sumcite.service.workflow import RevisionRecord

        revised = TraceableSummary.positive("revised text", [0])
        revisions = {target.instance_id: RevisionRecord(target.instance_id, "med0", revised)}
        out = export_revised_dataset(instances, revisions)
        assert out[0].reference == revised
        assert out[1:] == list(instances[1:])

    def test_pending_blocks_unless_forced(self, instances):
        pending = {instances[0].instance_id}
        with pytest.raises(WorkflowError, match="pending"):
            export_revised_dataset(instances, {}, pending=pending)
        assert export_revised_dataset(instances, {}, pending=pending, force=True)


# ---------------------------------------------------------------------------
# HTTP service
# ---------------------------------------------------------------------------


@pytest.fixture()
def service(tmp_path, corpus_dir):
    articles, instances = load_dataset(corpus_dir)
    instances = [i for i in instances if i.pmid in ("9100001", "9100002")]
    outputs = {
        i.instance_id: TraceableSummary.positive("system output text", [0]) for i in instances
    }
    subclaims = {
        i.instance_id: {"ref": [f"ref claim for {i.instance_id}"], "gen": [f"gen claim for {i.instance_id}"]}
        for i in instances
    }
    app = create_app(
        FileStore(tmp_path / "store"),
        articles,
        instances,
        admin_token="admin-secret",
        outputs=outputs,
        subclaims=subclaims,
    )
    client = TestClient(app)
    return client, instances


def _onboard(client, email, domain):
    created = client.post("/api/register", json={"email": email, "domain": domain}).json()
    headers = {"Authorization": f"Bearer {created['token']}"}
    assert client.post("/api/consent", json={"data_use": True, "cookies": True}, headers=headers).status_code == 200
    assert client.post(f"/api/admin/approve/{created['id']}", headers=ADMIN).status_code == 200
    return created["id"], headers


def _onboard_all(client):
    people = {}
    for email, domain in (
        ("m1@example.org", "medical"),
        ("m2@example.org", "medical"),
        ("n1@example.org", "nlp"),
        ("n2@example.org", "nlp"),
    ):
        people[email] = _onboard(client, email, domain)
    assert client.post("/api/admin/assign", json={"seed": 1}, headers=ADMIN).status_code == 200
    return people


def _first_task(client, headers):
    tasks = client.get("/api/tasks", headers=headers).json()
    assert tasks
    return tasks[0]["instance_id"]


class TestServiceFlow:
    def test_register_consent_approve_assign(self, service):
        client, instances = service
        people = _onboard_all(client)
        total_tasks = sum(
            len(client.get("/api/tasks", headers=h).json()) for _, h in people.values()
        )
        assert total_tasks == 2 * len(instances)

    def test_unapproved_annotator_sees_403(self, service):
        client, _ = service
        created = client.post("/api/register", json={"email": "x@y", "domain": "nlp"}).json()
        headers = {"Authorization": f"Bearer {created['token']}"}
        client.post("/api/consent", json={"data_use": True, "cookies": True}, headers=headers)
        assert client.get("/api/tasks", headers=headers).status_code == 403

    def test_consent_required_even_when_approved(self, service):
        client, _ = service
        created = client.post("/api/register", json={"email": "x@y", "domain": "nlp"}).json()
        headers = {"Authorization": f"Bearer {created['token']}"}
        client.post(f"/api/admin/approve/{created['id']}", headers=ADMIN)
        assert client.get("/api/tasks", headers=headers).status_code == 403

    def test_assign_fails_without_domain_coverage(self, service):
        client, _ = service
        _onboard(client, "only-medical@example.org", "medical")
        response = client.post("/api/admin/assign", json={"seed": 1}, headers=ADMIN)
        assert response.status_code == 409

    def test_rating_round_trip(self, service):
        client, _ = service
        people = _onboard_all(client)
        _, headers = people["m1@example.org"]
        instance_id = _first_task(client, headers)
        scores = {"completeness": 4, "conciseness": 5, "traceability": 3}
        posted = client.post(f"/api/instances/{instance_id}/ratings", json=scores, headers=headers)
        assert posted.status_code == 201
        fetched = client.get(f"/api/instances/{instance_id}/ratings", headers=headers)
        assert fetched.json() == scores

    def test_rating_from_non_assigned_rejected(self, service):
        client, _ = service
        people = _onboard_all(client)
        id_m1, headers_m1 = people["m1@example.org"]
        instance_id = _first_task(client, headers_m1)
        # find an onboarded annotator not assigned to that instance
        for email, (aid, headers) in people.items():
            tasks = [t["instance_id"] for t in client.get("/api/tasks", headers=headers).json()]
            if instance_id not in tasks:
                response = client.post(
                    f"/api/instances/{instance_id}/ratings",
                    json={"completeness": 1, "conciseness": 1, "traceability": 1},
                    headers=headers,
                )
                assert response.status_code == 403
                return
        pytest.fail("expected at least one non-assigned annotator")

    def test_last_write_wins_with_audit(self, service, tmp_path):
        client, _ = service
        people = _onboard_all(client)
        _, headers = people["m1@example.org"]
        instance_id = _first_task(client, headers)
        for score in (2, 5):
            client.post(
                f"/api/instances/{instance_id}/ratings",
                json={"completeness": score, "conciseness": score, "traceability": score},
                headers=headers,
            )
        assert client.get(f"/api/instances/{instance_id}/ratings", headers=headers).json()[
            "completeness"
        ] == 5
        audit = (tmp_path / "store" / "ratings_audit.jsonl").read_text().splitlines()
        assert len(audit) == 2

    def test_instance_detail_shows_sentences_and_output(self, service):
        client, instances = service
        people = _onboard_all(client)
        _, headers = people["n1@example.org"]
        instance_id = _first_task(client, headers)
        detail = client.get(f"/api/instances/{instance_id}", headers=headers).json()
        assert detail["sentences"]
        assert detail["output"]["summary"] == "system output text"
        assert detail["ref_subclaims"] == [f"ref claim for {instance_id}"]

    def test_rating_validation(self, service):
        client, _ = service
        people = _onboard_all(client)
        _, headers = people["m1@example.org"]
        instance_id = _first_task(client, headers)
        bad = client.post(
            f"/api/instances/{instance_id}/ratings",
            json={"completeness": 6, "conciseness": 1, "traceability": 1},
            headers=headers,
        )
        assert bad.status_code == 422

    def _rate_instance(self, client, people, instance_id, scores_a, scores_b):
        raters = []
        for email, (aid, headers) in people.items():
            tasks = [t["instance_id"] for t in client.get("/api/tasks", headers=headers).json()]
            if instance_id in tasks:
                raters.append(headers)
        assert len(raters) == 2
        for headers, (c1, c2, c3) in zip(raters, (scores_a, scores_b)):
            response = client.post(
                f"/api/instances/{instance_id}/ratings",
                json={"completeness": c1, "conciseness": c2, "traceability": c3},
                headers=headers,
            )
            assert response.status_code == 201
        return raters

    def test_revision_queue_and_export(self, service):
        client, instances = service
        people = _onboard_all(client)
        flagged = instances[0].instance_id
        clean = instances[1].instance_id
        raters = self._rate_instance(client, people, flagged, (1, 1, 1), (5, 5, 5))
        self._rate_instance(client, people, clean, (5, 5, 5), (5, 5, 5))

        queue = client.get("/api/revisions", headers=raters[0]).json()
        assert [entry["instance_id"] for entry in queue] == [flagged]
        assert len(queue[0]["ratings"]) == 2  # both annotators' scores visible in phase II

        # pending revision blocks export
        blocked = client.get("/api/admin/export", headers=ADMIN)
        assert blocked.status_code == 409
        forced = client.get("/api/admin/export", params={"force": "true"}, headers=ADMIN)
        assert forced.status_code == 200

        revision = {"summary": "revised summary", "citations": [1, 3], "rationale": "fixes"}
        posted = client.post(f"/api/instances/{flagged}/revision", json=revision, headers=raters[0])
        assert posted.status_code == 201

        export1 = client.get("/api/admin/export", headers=ADMIN).text
        export2 = client.get("/api/admin/export", headers=ADMIN).text
        assert export1 == export2  # idempotent
        assert '"revised summary"' in export1

    def test_revision_citation_range_validated(self, service):
        client, instances = service
        people = _onboard_all(client)
        raters = self._rate_instance(client, people, instances[0].instance_id, (1, 1, 1), (1, 1, 1))
        bad = client.post(
            f"/api/instances/{instances[0].instance_id}/revision",
            json={"summary": "s", "citations": [99], "rationale": ""},
            headers=raters[0],
        )
        assert bad.status_code == 422

    def test_revision_requires_assignment_under_original_policy(self, service):
        client, instances = service
        people = _onboard_all(client)
        flagged = instances[0].instance_id
        raters = self._rate_instance(client, people, flagged, (1, 1, 1), (1, 1, 1))
        for email, (aid, headers) in people.items():
            tasks = [t["instance_id"] for t in client.get("/api/tasks", headers=headers).json()]
            if flagged not in tasks:
                response = client.post(
                    f"/api/instances/{flagged}/revision",
                    json={"summary": "s", "citations": [0], "rationale": ""},
                    headers=headers,
                )
                assert response.status_code == 403
                return

    def test_judgments_stored_and_unknown_subclaim_rejected(self, service):
        client, instances = service
        people = _onboard_all(client)
        _, headers = people["m1@example.org"]
        instance_id = _first_task(client, headers)
        ok = client.post(
            f"/api/instances/{instance_id}/judgments",
            json={
                "verdicts": [
                    {
                        "premise": "system output text",
                        "hypothesis": f"ref claim for {instance_id}",
                        "verdict": True,
                    }
                ]
            },
            headers=headers,
        )
        assert ok.status_code == 201
        bad = client.post(
            f"/api/instances/{instance_id}/judgments",
            json={"verdicts": [{"premise": "p", "hypothesis": "never-a-subclaim", "verdict": True}]},
            headers=headers,
        )
        assert bad.status_code == 422

    def test_empty_judgment_list_marked_incomplete(self, service):
        client, _ = service
        people = _onboard_all(client)
        _, headers = people["m1@example.org"]
        instance_id = _first_task(client, headers)
        response = client.post(
            f"/api/instances/{instance_id}/judgments", json={"verdicts": []}, headers=headers
        )
        assert response.status_code == 201
        assert response.json()["complete"] is False

    def test_all_yes_judgments_yield_full_claim_recall(self, service, articles_by_pmid):
        """Human verdicts exported by the service drive the metrics directly."""
        client, instances = service
        people = _onboard_all(client)
        _, headers = people["m1@example.org"]
        instance_id = _first_task(client, headers)
        inst = next(i for i in instances if i.instance_id == instance_id)

        detail = client.get(f"/api/instances/{instance_id}", headers=headers).json()
        verdicts = [
            {"premise": detail["output"]["summary"], "hypothesis": claim, "verdict": True}
            for claim in detail["ref_subclaims"]
        ]
        client.post(f"/api/instances/{instance_id}/judgments", json={"verdicts": verdicts}, headers=headers)

        stored = client.get("/api/admin/judgments", headers=ADMIN).json()
        table = {(rec["premise"], rec["hypothesis"]): rec["verdict"] for rec in stored}
        judge = MockJudge(table, name="human")
        decomposer = MockDecomposer({inst.reference.summary: detail["ref_subclaims"]})
        report = evaluate_instance(
            inst.reference,
            TraceableSummary.positive(detail["output"]["summary"], detail["output"]["citations"]),
            articles_by_pmid[inst.pmid],
            judge,
            decomposer,
            pmid=inst.pmid,
            aspect=inst.aspect,
        )
        assert report.clr.value == 1


def test_sqlite_store_parity(tmp_path):
    store = SqliteStore(tmp_path / "svc.db")
    store.put("annotators", "a1", {"id": "a1", "email": "e", "domain": "nlp"})
    assert store.get("annotators", "a1")["email"] == "e"
    store.append_log("judgments", {"verdict": True})
    assert store.read_log("judgments") == [{"verdict": True}]
    assert [k for k, _ in store.items("annotators")] == ["a1"]
