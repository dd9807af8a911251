"""Review service: serves audit data and accepts operator answers.

File-backed: the store directory holds the automated base report
(``report.json``), an append-only answer log (``answers.log``, one JSON
record per line) and optional evidence assets (``assets/``). Store state
is always reconstructible by replaying the log over the base report, and
every acknowledged answer is durable (flushed and fsynced) before the
response is sent.

No authentication in this version: bind to loopback unless fronted by
something that handles auth.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import ConflictError, SchemaError
from .report import (
    AuditReport,
    ManualAnswer,
    SiteResult,
    merge,
    report_from_json,
    report_to_json_doc,
    evidence_json,
    finding_json,
    verdict_json,
)
from .requirements import registry

ANSWER_LOG = "answers.log"
BASE_REPORT = "report.json"
ASSETS_DIR = "assets"


class ReviewStore:
    """Answer log + base report, with single-writer appends."""

    def __init__(self, root: Path):
        self.root = Path(root)
        base_path = self.root / BASE_REPORT
        if not base_path.is_file():
            raise FileNotFoundError(f"store has no base report: {base_path}")
        self._base = report_from_json(base_path.read_bytes())
        self._lock = threading.Lock()
        self._answers: list[ManualAnswer] = []
        log_path = self.root / ANSWER_LOG
        if log_path.is_file():
            for line in log_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._answers.append(ManualAnswer.from_json(json.loads(line)))
        self._merged = self._rebuild(self._answers)

    def _rebuild(self, answers: list[ManualAnswer]) -> AuditReport:
        sites = []
        for site in self._base.sites:
            site_answers = [a for a in answers if a.site in (site.site_id, site.url)]
            auto = tuple(v for v in site.verdicts)
            sites.append(SiteResult(
                site_id=site.site_id, url=site.url,
                verdicts=merge(auto, site_answers), findings=site.findings))
        return AuditReport(
            sites=tuple(sites),
            dpa_profile=self._base.dpa_profile,
            config_digest=self._base.config_digest,
            generated_at=self._base.generated_at,
            tool_version=self._base.tool_version,
            notes=self._base.notes,
        )

    @property
    def report(self) -> AuditReport:
        return self._merged

    def site(self, site_id: str) -> SiteResult | None:
        for site in self._merged.sites:
            if site.site_id == site_id:
                return site
        return None

    def add_answer(self, answer: ManualAnswer) -> None:
        """Validate, persist and apply one answer (serialized writes)."""
        with self._lock:
            candidate = self._answers + [answer]
            merged = self._rebuild(candidate)  # raises ConflictError on conflict
            log_path = self.root / ANSWER_LOG
            with open(log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(answer.to_json(), sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._answers = candidate
            self._merged = merged

    def evidence_index(self, site: SiteResult) -> dict[str, dict]:
        """Stable evidence refs: v<row>e<col> for verdicts, f<row>e<col> for findings."""
        index: dict[str, dict] = {}
        for vi, verdict in enumerate(site.verdicts):
            for ei, evidence in enumerate(verdict.evidence):
                index[f"v{vi}e{ei}"] = evidence_json(evidence)
        for fi, finding in enumerate(site.findings):
            for ei, evidence in enumerate(finding.evidence):
                index[f"f{fi}e{ei}"] = evidence_json(evidence)
        return index


def create_app(store: ReviewStore, allow_origin: str | None = None,
               assets_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="consent-audit review service", version="1")

    if allow_origin:
        from fastapi.middleware.cors import CORSMiddleware
        app.add_middleware(
            CORSMiddleware, allow_origins=[allow_origin],
            allow_methods=["*"], allow_headers=["*"])

    @app.get("/sites")
    def list_sites():
        return [{
            "site_id": site.site_id,
            "url": site.url,
            "pending_count": site.pending_count(),
            "violation_count": site.violation_count(),
        } for site in store.report.sites]

    @app.get("/sites/{site_id}")
    def site_detail(site_id: str):
        site = store.site(site_id)
        if site is None:
            return JSONResponse({"error": f"unknown site {site_id!r}"}, status_code=404)
        prompts = {r.id: {
            "title": r.title,
            "group": r.group.value,
            "assessment": r.assessment.value,
            "assessment_text": r.assessment_text,
            "prompt": r.requirement_text,
            "violation_text": r.violation_text,
            "legal_basis": r.legal_basis,
            "dpa_positions": r.dpa_positions,
        } for r in registry()}
        return {
            "site_id": site.site_id,
            "url": site.url,
            "verdicts": [verdict_json(v) for v in site.verdicts],
            "findings": [finding_json(f) for f in site.findings],
            "evidence_index": store.evidence_index(site),
            "checklist": prompts,
        }

    @app.get("/sites/{site_id}/evidence/{ref}")
    def evidence(site_id: str, ref: str):
        site = store.site(site_id)
        if site is None:
            return JSONResponse({"error": f"unknown site {site_id!r}"}, status_code=404)
        index = store.evidence_index(site)
        item = index.get(ref)
        if item is None:
            return JSONResponse({"error": f"unknown evidence ref {ref!r}"},
                                status_code=404)
        if item["kind"] == "screenshot_ref":
            asset = store.root / ASSETS_DIR / str(item["payload"].get("path", ""))
            if asset.is_file():
                return FileResponse(asset)
            return JSONResponse({"error": "asset file missing", "evidence": item},
                                status_code=404)
        return item

    @app.post("/sites/{site_id}/answers")
    async def post_answer(site_id: str, request: Request):
        site = store.site(site_id)
        if site is None:
            return JSONResponse({"error": f"unknown site {site_id!r}"}, status_code=404)
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return JSONResponse({"error": "body is not valid JSON"}, status_code=422)
        if not isinstance(body, dict):
            return JSONResponse({"error": "body must be an object"}, status_code=422)
        body.setdefault("site", site_id)
        body.setdefault("answered_at",
                        datetime.now(timezone.utc).isoformat())
        try:
            answer = ManualAnswer.from_json(body)
        except SchemaError as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        if answer.site not in (site.site_id, site.url):
            return JSONResponse({"error": "body site does not match path"},
                                status_code=422)
        try:
            store.add_answer(answer)
        except ConflictError as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        return JSONResponse(answer.to_json(), status_code=201)

    @app.get("/report")
    def full_report():
        return report_to_json_doc(store.report)

    @app.get("/healthz")
    def health():
        return {"status": "ok", "sites": len(store.report.sites)}

    if assets_dir is not None:
        app.mount("/", StaticFiles(directory=str(assets_dir), html=True), name="console")

    return app
