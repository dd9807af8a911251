"""Review service: HTTP contract, durability, replay determinism."""

import json
import threading

import pytest
from fastapi.testclient import TestClient

from consent_audit import corpus
from consent_audit.checks import SiteCapture, run_all
from consent_audit.config import build_context, load_config
from consent_audit.report import AuditReport, build_report, render
from consent_audit.review import ReviewStore, create_app

from datetime import datetime, timezone

GENERATED = datetime(2026, 8, 2, 12, 0, 0, tzinfo=timezone.utc)


def capture_of(files, url) -> SiteCapture:
    sessions, twin, extras = {}, None, []
    for name, s in files.items():
        if name == "no_action_twin.session.json":
            twin = s
        elif name.startswith("no_action_") and name != "no_action.session.json":
            extras.append(s)
        else:
            sessions[s.scenario] = s
    return SiteCapture(url, sessions, twin, tuple(extras))


@pytest.fixture(scope="module")
def base_report_bytes():
    ctx = build_context(load_config(None))
    results = []
    for plant, slug in (("clean", "alpha"), ("R14", "bravo")):
        files, truth = corpus.build_site(plant, slug)
        results.append(run_all(capture_of(files, truth["site_url"]), ctx))
    report = build_report(results, [], "cnil", "defaults", GENERATED)
    return render(report, "json")


@pytest.fixture()
def store_dir(tmp_path, base_report_bytes):
    (tmp_path / "report.json").write_bytes(base_report_bytes)
    return tmp_path


@pytest.fixture()
def client(store_dir):
    return TestClient(create_app(ReviewStore(store_dir)))


def post_answer(client, site_id, requirement_id="R13", outcome="violation",
                operator="aud1"):
    return client.post(f"/sites/{site_id}/answers", json={
        "requirement_id": requirement_id, "outcome": outcome,
        "operator": operator, "note": "reviewed"})


class TestEndpoints:
    def test_empty_store_lists_no_sites(self, tmp_path):
        empty = AuditReport(sites=(), dpa_profile="cnil", config_digest="defaults",
                            generated_at=GENERATED)
        (tmp_path / "report.json").write_bytes(render(empty, "json"))
        client = TestClient(create_app(ReviewStore(tmp_path)))
        response = client.get("/sites")
        assert response.status_code == 200
        assert response.json() == []

    def test_sites_listing_has_counts(self, client):
        sites = client.get("/sites").json()
        assert len(sites) == 2
        bravo = next(s for s in sites if "bravo" in s["site_id"])
        assert bravo["violation_count"] == 1
        assert bravo["pending_count"] > 0

    def test_site_detail_contains_checklist_and_evidence_index(self, client):
        site_id = client.get("/sites").json()[0]["site_id"]
        detail = client.get(f"/sites/{site_id}").json()
        assert len(detail["verdicts"]) == 22
        assert detail["checklist"]["R13"]["prompt"]
        assert detail["checklist"]["R13"]["assessment"] == "Manual"
        assert "legal_basis" in detail["checklist"]["R1"]
        assert isinstance(detail["evidence_index"], dict)

    def test_unknown_site_404(self, client):
        assert client.get("/sites/nope").status_code == 404

    def test_evidence_fetch_and_404(self, client):
        sites = client.get("/sites").json()
        bravo = next(s["site_id"] for s in sites if "bravo" in s["site_id"])
        detail = client.get(f"/sites/{bravo}").json()
        refs = list(detail["evidence_index"])
        assert refs, "planted site should carry evidence"
        item = client.get(f"/sites/{bravo}/evidence/{refs[0]}")
        assert item.status_code == 200
        assert item.json()["kind"] in {"cookie", "consent_string", "request",
                                       "storage_entry", "banner_geometry",
                                       "text_match", "screenshot_ref"}
        assert client.get(f"/sites/{bravo}/evidence/zzz").status_code == 404

    def test_post_answer_lifecycle(self, client):
        site_id = client.get("/sites").json()[0]["site_id"]
        created = post_answer(client, site_id)
        assert created.status_code == 201
        detail = client.get(f"/sites/{site_id}").json()
        r13 = next(v for v in detail["verdicts"] if v["requirement_id"] == "R13")
        assert r13["outcome"] == "violation"
        assert r13["provenance"] == "operator"
        report = client.get("/report").json()
        site = next(s for s in report["sites"] if s["site_id"] == site_id)
        merged = next(v for v in site["verdicts"] if v["requirement_id"] == "R13")
        assert merged["outcome"] == "violation"

    def test_post_conflicting_answer_409(self, client):
        sites = client.get("/sites").json()
        bravo = next(s["site_id"] for s in sites if "bravo" in s["site_id"])
        response = post_answer(client, bravo, requirement_id="R14",
                               outcome="compliant")
        assert response.status_code == 409

    def test_post_invalid_outcome_422(self, client):
        site_id = client.get("/sites").json()[0]["site_id"]
        response = post_answer(client, site_id, outcome="maybe")
        assert response.status_code == 422

    def test_post_missing_operator_422(self, client):
        site_id = client.get("/sites").json()[0]["site_id"]
        response = client.post(f"/sites/{site_id}/answers", json={
            "requirement_id": "R13", "outcome": "violation"})
        assert response.status_code == 422

    def test_post_to_unknown_site_404(self, client):
        assert post_answer(client, "ghost").status_code == 404


class TestScreenshotAssets:
    def test_screenshot_evidence_serves_asset_bytes(self, tmp_path):
        from consent_audit.checks import Evidence, Verdict
        from consent_audit.checks import SiteCheckResult
        from consent_audit.requirements import Outcome, registry

        verdicts = []
        for requirement in registry():
            if requirement.id == "R20":
                verdicts.append(Verdict(
                    "R20", Outcome.MANUAL_PENDING,
                    (Evidence("screenshot_ref", {"path": "wall.png"},
                              ("no_action.session.json", 900)),),
                    "wall detected"))
            elif requirement.id == "R22":
                verdicts.append(Verdict("R22", Outcome.NOT_ASSESSABLE))
            elif requirement.assessment.value == "UserStudy":
                verdicts.append(Verdict(requirement.id, Outcome.USER_STUDY_PENDING))
            elif requirement.assessment.value in ("Manual", "Mixed"):
                verdicts.append(Verdict(requirement.id, Outcome.MANUAL_PENDING))
            else:
                verdicts.append(Verdict(requirement.id, Outcome.INCONCLUSIVE))
        result = SiteCheckResult("https://www.shot.example/", tuple(verdicts), ())
        report = build_report([result], [], "cnil", "defaults", GENERATED)
        (tmp_path / "report.json").write_bytes(render(report, "json"))
        assets = tmp_path / "assets"
        assets.mkdir()
        (assets / "wall.png").write_bytes(b"\x89PNG-not-really")

        client = TestClient(create_app(ReviewStore(tmp_path)))
        site_id = client.get("/sites").json()[0]["site_id"]
        detail = client.get(f"/sites/{site_id}").json()
        ref = next(r for r, e in detail["evidence_index"].items()
                   if e["kind"] == "screenshot_ref")
        response = client.get(f"/sites/{site_id}/evidence/{ref}")
        assert response.status_code == 200
        assert response.content == b"\x89PNG-not-really"

        (assets / "wall.png").unlink()
        assert client.get(f"/sites/{site_id}/evidence/{ref}").status_code == 404


class TestDurabilityAndReplay:
    def test_answer_survives_restart(self, store_dir):
        client = TestClient(create_app(ReviewStore(store_dir)))
        site_id = client.get("/sites").json()[0]["site_id"]
        assert post_answer(client, site_id).status_code == 201
        before = client.get("/report").json()

        reopened = TestClient(create_app(ReviewStore(store_dir)))
        after = reopened.get("/report").json()
        assert after == before
        r13 = next(v for s in after["sites"] if s["site_id"] == site_id
                   for v in s["verdicts"] if v["requirement_id"] == "R13")
        assert r13["outcome"] == "violation"

    def test_rebuild_from_log_is_byte_identical(self, store_dir):
        client = TestClient(create_app(ReviewStore(store_dir)))
        sites = client.get("/sites").json()
        post_answer(client, sites[0]["site_id"], "R13", "violation")
        post_answer(client, sites[0]["site_id"], "R4", "compliant")
        post_answer(client, sites[1]["site_id"], "R17", "inconclusive")
        current = json.dumps(client.get("/report").json(), sort_keys=True)

        replayed_store = ReviewStore(store_dir)
        replayed = json.dumps(
            TestClient(create_app(replayed_store)).get("/report").json(),
            sort_keys=True)
        assert replayed == current

    def test_log_is_append_only_jsonl(self, store_dir):
        client = TestClient(create_app(ReviewStore(store_dir)))
        site_id = client.get("/sites").json()[0]["site_id"]
        post_answer(client, site_id, "R13")
        post_answer(client, site_id, "R4", "compliant")
        lines = (store_dir / "answers.log").read_text().strip().splitlines()
        assert len(lines) == 2
        assert all(json.loads(line)["operator"] == "aud1" for line in lines)

    def test_concurrent_posts_to_different_sites(self, store_dir):
        store = ReviewStore(store_dir)
        client = TestClient(create_app(store))
        ids = [s["site_id"] for s in client.get("/sites").json()]
        statuses = {}

        def worker(site_id, requirement_id):
            response = post_answer(client, site_id, requirement_id, "compliant")
            statuses[(site_id, requirement_id)] = response.status_code

        threads = [threading.Thread(target=worker, args=(ids[0], "R13")),
                   threading.Thread(target=worker, args=(ids[1], "R13"))]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert set(statuses.values()) == {201}
        report = client.get("/report").json()
        for site in report["sites"]:
            r13 = next(v for v in site["verdicts"] if v["requirement_id"] == "R13")
            assert r13["outcome"] == "compliant"
