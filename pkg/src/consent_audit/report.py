"""Audit reports: merging operator answers into verdicts and rendering.

The merged report is the single output artifact: automated verdicts, the
operator's answers to the manual checklist, advisory findings, requirement
registry metadata (including per-DPA positioning), and summary counts.
JSON output follows docs/report-schema.md and is the API surface consumed
by the review console; markdown output groups requirements by the seven
high-level groups.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime, timezone

from .checks import Evidence, Finding, SiteCheckResult, Verdict
from .errors import ConflictError, SchemaError
from .requirements import (
    GROUP_ORDER,
    OPERATOR_OUTCOMES,
    Assessment,
    Outcome,
    by_id,
    registry,
)
from .session import host_of

TOOL_VERSION = "0.1.0"

_PENDING = {Outcome.MANUAL_PENDING, Outcome.USER_STUDY_PENDING}

_OUTCOME_ICONS = {
    Outcome.COMPLIANT: "PASS",
    Outcome.VIOLATION: "FAIL",
    Outcome.INCONCLUSIVE: "UNDECIDED",
    Outcome.MANUAL_PENDING: "PENDING (operator)",
    Outcome.USER_STUDY_PENDING: "PENDING (user study)",
    Outcome.NOT_ASSESSABLE: "NOT ASSESSABLE",
}


def site_id_for(url: str) -> str:
    host = host_of(url) or url
    return re.sub(r"[^a-z0-9]+", "-", host.lower()).strip("-")


@dataclass(frozen=True)
class ManualAnswer:
    """One operator decision for a pending requirement on one site."""

    site: str  # site_id or site URL
    requirement_id: str
    outcome: Outcome
    operator: str
    note: str = ""
    answered_at: datetime | None = None

    def to_json(self) -> dict:
        return {
            "site": self.site,
            "requirement_id": self.requirement_id,
            "outcome": self.outcome.value,
            "operator": self.operator,
            "note": self.note,
            "answered_at": self.answered_at.isoformat() if self.answered_at else None,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ManualAnswer":
        try:
            outcome = Outcome(doc["outcome"])
        except (KeyError, ValueError):
            raise SchemaError("outcome", f"not a valid outcome: {doc.get('outcome')!r}")
        if outcome not in OPERATOR_OUTCOMES:
            raise SchemaError("outcome", f"operators may not set {outcome.value!r}")
        requirement_id = str(doc.get("requirement_id", ""))
        try:
            by_id(requirement_id)
        except KeyError:
            raise SchemaError("requirement_id", f"unknown requirement {requirement_id!r}")
        answered_raw = doc.get("answered_at")
        answered_at = None
        if answered_raw:
            try:
                answered_at = datetime.fromisoformat(str(answered_raw).replace("Z", "+00:00"))
            except ValueError:
                raise SchemaError("answered_at", "not an ISO-8601 timestamp")
        if not doc.get("site"):
            raise SchemaError("site")
        if not doc.get("operator"):
            raise SchemaError("operator")
        return cls(site=str(doc["site"]), requirement_id=requirement_id,
                   outcome=outcome, operator=str(doc["operator"]),
                   note=str(doc.get("note", "")), answered_at=answered_at)


@dataclass(frozen=True)
class MergedVerdict:
    requirement_id: str
    outcome: Outcome
    evidence: tuple[Evidence, ...]
    confidence_note: str
    provenance: str = "auto"  # auto | operator | operator_proxy
    operator: str | None = None
    operator_note: str | None = None
    answered_at: datetime | None = None


def merge(auto: tuple[Verdict, ...], answers: list[ManualAnswer]
          ) -> tuple[MergedVerdict, ...]:
    """Apply operator answers over the automated verdicts.

    Only requirements whose automated outcome is pending accept answers;
    anything else raises ConflictError. Later answers to the same
    requirement replace earlier ones, so replaying a log is idempotent.
    """
    base: dict[str, Verdict] = {v.requirement_id: v for v in auto}
    merged: dict[str, MergedVerdict] = {
        v.requirement_id: MergedVerdict(
            v.requirement_id, v.outcome, v.evidence, v.confidence_note)
        for v in auto}
    for answer in answers:
        auto_verdict = base.get(answer.requirement_id)
        if auto_verdict is None:
            raise ConflictError(f"no such requirement: {answer.requirement_id}")
        if auto_verdict.outcome not in _PENDING:
            raise ConflictError(
                f"{answer.requirement_id} was decided automatically as "
                f"{auto_verdict.outcome.value}; operator answers may not overwrite it")
        provenance = ("operator_proxy"
                      if auto_verdict.outcome is Outcome.USER_STUDY_PENDING
                      else "operator")
        merged[answer.requirement_id] = MergedVerdict(
            requirement_id=answer.requirement_id,
            outcome=answer.outcome,
            evidence=auto_verdict.evidence,
            confidence_note=auto_verdict.confidence_note,
            provenance=provenance,
            operator=answer.operator,
            operator_note=answer.note,
            answered_at=answer.answered_at,
        )
    return tuple(merged[v.requirement_id] for v in auto)


@dataclass(frozen=True)
class SiteResult:
    site_id: str
    url: str
    verdicts: tuple[MergedVerdict, ...]
    findings: tuple[Finding, ...]

    def pending_count(self) -> int:
        return sum(1 for v in self.verdicts if v.outcome in _PENDING)

    def violation_count(self) -> int:
        return sum(1 for v in self.verdicts if v.outcome is Outcome.VIOLATION)


@dataclass(frozen=True)
class AuditReport:
    sites: tuple[SiteResult, ...]
    dpa_profile: str
    config_digest: str
    generated_at: datetime
    tool_version: str = TOOL_VERSION
    notes: tuple[str, ...] = (
        "identifier detection is heuristic; fingerprinting-based identifiers "
        "are not detectable and are out of scope",
        "cookies and localStorage entries share one identifier threshold set",
    )

    def summary(self) -> dict:
        per_requirement: dict[str, dict[str, int]] = {
            r.id: {o.value: 0 for o in Outcome} for r in registry()}
        totals = {o.value: 0 for o in Outcome}
        for site in self.sites:
            for verdict in site.verdicts:
                per_requirement[verdict.requirement_id][verdict.outcome.value] += 1
                totals[verdict.outcome.value] += 1
        return {"per_requirement": per_requirement, "totals": totals}

    def exit_code(self) -> int:
        """0: no violations (something decided compliant); 2: violations;
        3: nothing decided at all."""
        totals = self.summary()["totals"]
        if totals[Outcome.VIOLATION.value]:
            return 2
        if totals[Outcome.COMPLIANT.value] == 0:
            return 3
        return 0


def build_report(results: list[SiteCheckResult], answers: list[ManualAnswer],
                 dpa_profile: str, config_digest: str,
                 generated_at: datetime | None = None) -> AuditReport:
    sites = []
    for result in sorted(results, key=lambda r: r.site_url):
        site_id = site_id_for(result.site_url)
        site_answers = [a for a in answers
                        if a.site in (site_id, result.site_url)]
        sites.append(SiteResult(
            site_id=site_id,
            url=result.site_url,
            verdicts=merge(result.verdicts, site_answers),
            findings=result.findings,
        ))
    return AuditReport(
        sites=tuple(sites),
        dpa_profile=dpa_profile,
        config_digest=config_digest,
        generated_at=generated_at or datetime.now(timezone.utc),
    )


# --- serialization ---------------------------------------------------------------


def evidence_json(evidence: Evidence) -> dict:
    return {"kind": evidence.kind, "payload": evidence.payload,
            "session_ref": list(evidence.session_ref) if evidence.session_ref else None}


def evidence_from_json(doc: dict) -> Evidence:
    ref = doc.get("session_ref")
    return Evidence(doc["kind"], doc["payload"], (ref[0], ref[1]) if ref else None)


def verdict_json(verdict: MergedVerdict) -> dict:
    out = {
        "requirement_id": verdict.requirement_id,
        "outcome": verdict.outcome.value,
        "provenance": verdict.provenance,
        "confidence_note": verdict.confidence_note,
        "evidence": [evidence_json(e) for e in verdict.evidence],
    }
    if verdict.provenance != "auto":
        out["operator"] = verdict.operator
        out["operator_note"] = verdict.operator_note
        out["answered_at"] = (verdict.answered_at.isoformat()
                              if verdict.answered_at else None)
    return out


def finding_json(finding: Finding) -> dict:
    return {"kind": finding.kind, "message": finding.message,
            "requirement_id": finding.requirement_id,
            "evidence": [evidence_json(e) for e in finding.evidence]}


def requirement_json(requirement) -> dict:
    return {
        "id": requirement.id,
        "group": requirement.group.value,
        "title": requirement.title,
        "assessment": requirement.assessment.value,
        "assessment_text": requirement.assessment_text,
        "binding": requirement.binding,
        "non_binding": requirement.non_binding,
        "interpretation": requirement.interpretation,
        "requirement_text": requirement.requirement_text,
        "violation_text": requirement.violation_text,
        "legal_basis": requirement.legal_basis,
        "dpa_positions": requirement.dpa_positions,
    }


def report_to_json_doc(report: AuditReport) -> dict:
    return {
        "report_version": 1,
        "generated_at": report.generated_at.isoformat(),
        "tool_version": report.tool_version,
        "config_digest": report.config_digest,
        "dpa_profile": report.dpa_profile,
        "notes": list(report.notes),
        "requirements": [requirement_json(r) for r in registry()],
        "sites": [{
            "site_id": site.site_id,
            "url": site.url,
            "pending_count": site.pending_count(),
            "violation_count": site.violation_count(),
            "verdicts": [verdict_json(v) for v in site.verdicts],
            "findings": [finding_json(f) for f in site.findings],
        } for site in report.sites],
        "summary": report.summary(),
    }


def report_from_json(data: bytes | str) -> AuditReport:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"not valid JSON: {exc}")
    if doc.get("report_version") != 1:
        raise SchemaError("report_version", "expected 1")
    sites = []
    for raw in doc.get("sites", []):
        verdicts = []
        for v in raw["verdicts"]:
            answered = v.get("answered_at")
            verdicts.append(MergedVerdict(
                requirement_id=v["requirement_id"],
                outcome=Outcome(v["outcome"]),
                evidence=tuple(evidence_from_json(e) for e in v["evidence"]),
                confidence_note=v["confidence_note"],
                provenance=v.get("provenance", "auto"),
                operator=v.get("operator"),
                operator_note=v.get("operator_note"),
                answered_at=datetime.fromisoformat(answered) if answered else None,
            ))
        findings = tuple(
            Finding(f["kind"], f["message"], f.get("requirement_id"),
                    tuple(evidence_from_json(e) for e in f.get("evidence", [])))
            for f in raw.get("findings", []))
        sites.append(SiteResult(raw["site_id"], raw["url"], tuple(verdicts), findings))
    return AuditReport(
        sites=tuple(sites),
        dpa_profile=doc["dpa_profile"],
        config_digest=doc["config_digest"],
        generated_at=datetime.fromisoformat(doc["generated_at"]),
        tool_version=doc.get("tool_version", TOOL_VERSION),
        notes=tuple(doc.get("notes", ())),
    )


def render(report: AuditReport, fmt: str = "json") -> bytes:
    """Render the report as canonical JSON or grouped markdown."""
    if fmt == "json":
        return (json.dumps(report_to_json_doc(report), indent=2, sort_keys=True)
                + "\n").encode("utf-8")
    if fmt == "markdown":
        return _render_markdown(report).encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")


def _render_markdown(report: AuditReport) -> str:
    lines = [
        "# Cookie consent audit report",
        "",
        f"- generated: {report.generated_at.isoformat()}",
        f"- tool version: {report.tool_version}",
        f"- DPA profile: {report.dpa_profile}",
        f"- config digest: `{report.config_digest}`",
        f"- sites audited: {len(report.sites)}",
        "",
    ]
    for note in report.notes:
        lines.append(f"> note: {note}")
    lines.append("")

    by_group: dict = {group: [] for group in GROUP_ORDER}
    for requirement in registry():
        by_group[requirement.group].append(requirement)

    for group in GROUP_ORDER:
        lines.append(f"## {group.value}")
        lines.append("")
        for requirement in by_group[group]:
            lines.append(f"### {requirement.id} {requirement.title}")
            lines.append("")
            lines.append(f"*{requirement.requirement_text}*")
            lines.append("")
            lines.append(f"- assessment: {requirement.assessment_text}")
            lines.append(f"- legal basis: {requirement.legal_basis}")
            if requirement.assessment is Assessment.NOT_POSSIBLE:
                lines.append("- declared limitation: cannot be verified by any "
                             "known technique")
            lines.append("")
            lines.append("| site | outcome | by | note |")
            lines.append("|---|---|---|---|")
            for site in report.sites:
                for verdict in site.verdicts:
                    if verdict.requirement_id != requirement.id:
                        continue
                    note = (verdict.operator_note or verdict.confidence_note or "")
                    note = note.replace("|", "/")[:120]
                    lines.append(
                        f"| {site.url} | {_OUTCOME_ICONS[verdict.outcome]} "
                        f"| {verdict.provenance} | {note} |")
            lines.append("")

    lines.append("## Findings")
    lines.append("")
    any_findings = False
    for site in report.sites:
        for finding in site.findings:
            any_findings = True
            tag = f" [{finding.requirement_id}]" if finding.requirement_id else ""
            lines.append(f"- {site.url}{tag} {finding.kind}: {finding.message}")
    if not any_findings:
        lines.append("- none")
    lines.append("")
    return "\n".join(lines)
