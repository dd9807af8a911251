"""Automated requirement checkers and the per-site audit orchestration.

Six requirements get automated checkers over captured sessions (prior
storage, prior sending, affirmative action, post-consent registration,
correct registration, consent wall); the information-presence requirements
get keyword evidence scans; the remaining rows of the registry are emitted
as operator checklist items or user-study placeholders. ``run_all``
produces exactly one verdict per requirement, plus advisory findings
(lifespan limits, pre-registered refusals, consent walls).

All checkers are pure functions of (sessions, loaded lists, config):
deterministic, no hidden state, safe to run in parallel across sites.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field, replace

from .errors import DecodeError, PreconditionError
from .identifiers import IdentifierConfig, extract_features, score_identifier
from .requirements import (
    Assessment,
    LifespanProfile,
    Outcome,
    by_id,
    registry,
)
from .session import (
    CONSENT_EXPRESSING,
    CapturedSession,
    CookieRecord,
    DomSnapshotEvent,
    RequestEvent,
    ScenarioKind,
    StorageEntry,
    cookies_at,
    first_action_time,
    local_storage_at,
)
from .taxonomy import (
    LOCAL_ANALYTICS_CONDITIONS,
    ConsentRequirement,
    PurposeClass,
    PurposeClassifier,
    consent_required,
)
from .tcf import ConsentPolarity, TcfConsentRecord, decode_tcf, polarity

#: Storage keys whose value is a TCF consent string.
TCF_STORAGE_KEYS = frozenset({"euconsent", "euconsent-v2"})

#: Storage keys that look like consent registrations in a proprietary
#: format; they make consent-state checks inconclusive, never guesses.
CONSENT_KEY_HINTS = ("consent", "cmp", "optanon", "didomi", "cookiechoice",
                     "cookie_choice", "cc_cookie")

OBFUSCATION_NOTE = ("matching covers exact, hex and base64 re-encodings of stored "
                    "values; encrypted or otherwise obfuscated identifiers escape "
                    "detection, and identifiers built from browser fingerprints are "
                    "not detectable at all")

HEURISTIC_NOTE = ("identifier detection is heuristic (length, entropy, lifespan, "
                  "cross-profile distinctness); certainty is not attainable")


@dataclass(frozen=True)
class Evidence:
    kind: str  # cookie | request | storage_entry | consent_string | banner_geometry | text_match | screenshot_ref
    payload: dict
    session_ref: tuple[str, int] | None = None  # (session label/file, timestamp_ms)


@dataclass(frozen=True)
class Verdict:
    requirement_id: str
    outcome: Outcome
    evidence: tuple[Evidence, ...] = ()
    confidence_note: str = ""


@dataclass(frozen=True)
class Finding:
    """Advisory observation that accompanies, but never replaces, a verdict."""

    kind: str
    message: str
    requirement_id: str | None = None
    evidence: tuple[Evidence, ...] = ()


@dataclass
class CheckContext:
    classifier: PurposeClassifier
    identifier_cfg: IdentifierConfig = field(default_factory=IdentifierConfig)
    lifespan_profile: LifespanProfile | None = None
    strict_unknown: bool = False
    wall_area_threshold: float = 0.5
    banner_selectors: frozenset[str] = frozenset()
    lexicon: dict[str, tuple[str, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class SiteCapture:
    """All captures for one site, keyed by scenario, plus optional extras.

    ``twin_no_action`` is a second clean-profile visit used for
    cross-profile identifier comparison; ``extra_no_action`` holds
    additional viewports (e.g. mobile) for banner geometry checks.
    """

    site_url: str
    sessions: dict[ScenarioKind, CapturedSession]
    twin_no_action: CapturedSession | None = None
    extra_no_action: tuple[CapturedSession, ...] = ()
    sources: dict[str, str] = field(default_factory=dict)  # session label -> file

    @property
    def no_action(self) -> CapturedSession | None:
        return self.sessions.get(ScenarioKind.NO_ACTION)


def session_label(session: CapturedSession) -> str:
    return f"{session.scenario.value}#{session.profile_id}"


def _ref(session: CapturedSession, t: int) -> tuple[str, int]:
    return (session_label(session), t)


# --- consent storage recognition ---------------------------------------------


@dataclass(frozen=True)
class ConsentArtifact:
    key: str
    where: str  # cookie | local_storage
    value: str
    timestamp_ms: int
    record: TcfConsentRecord | None = None
    decode_error: str | None = None
    cookie: CookieRecord | None = None

    @property
    def is_positive(self) -> bool:
        return self.record is not None and polarity(self.record) is ConsentPolarity.POSITIVE

    @property
    def is_recognized(self) -> bool:
        return self.record is not None


def looks_like_consent_key(key: str) -> bool:
    lowered = key.lower()
    return lowered in TCF_STORAGE_KEYS or any(h in lowered for h in CONSENT_KEY_HINTS)


def find_consent_artifacts(session: CapturedSession, t: int) -> list[ConsentArtifact]:
    """Consent registrations visible in browser storage at time ``t``."""
    out = []
    items: list[tuple[str, str, str, CookieRecord | None]] = [
        (c.name, "cookie", c.value, c) for c in cookies_at(session, t)
    ] + [(e.key, "local_storage", e.value, None) for e in local_storage_at(session, t)]
    for key, where, value, cookie in items:
        if not looks_like_consent_key(key):
            continue
        record = None
        error = None
        if key.lower() in TCF_STORAGE_KEYS:
            try:
                record = decode_tcf(value)
            except DecodeError as exc:
                error = str(exc)
        out.append(ConsentArtifact(key, where, value, t, record, error, cookie))
    return out


def _event_times(session: CapturedSession) -> list[int]:
    return sorted({e.timestamp_ms for e in session.events})


def positive_consent_time(session: CapturedSession) -> int | None:
    """Earliest event time at which a stored TCF string decodes positive."""
    for t in _event_times(session):
        if any(a.is_positive for a in find_consent_artifacts(session, t)):
            return t
    return None


def consent_boundary(session: CapturedSession) -> int | None:
    """End of the pre-consent window: the earlier of a consent-expressing
    user action and the first positively-registered consent; None when
    consent is never given in the session."""
    candidates = []
    action_t = first_action_time(session)
    if action_t is not None and session.scenario in CONSENT_EXPRESSING:
        candidates.append(action_t)
    registered = positive_consent_time(session)
    if registered is not None:
        candidates.append(registered)
    return min(candidates) if candidates else None


def _consent_evidence(session: CapturedSession, artifact: ConsentArtifact) -> Evidence:
    payload = {"key": artifact.key, "where": artifact.where, "value": artifact.value}
    if artifact.record is not None:
        payload["polarity"] = polarity(artifact.record).value
        payload["purposes"] = sorted(artifact.record.purposes_consent)
        payload["vendors"] = sorted(artifact.record.vendor_consents)
    if artifact.decode_error:
        payload["decode_error"] = artifact.decode_error
    return Evidence("consent_string", payload, _ref(session, artifact.timestamp_ms))


# --- stored-element classification helpers ------------------------------------


@dataclass(frozen=True)
class StoredElement:
    """A cookie or localStorage entry with its scoring and classification."""

    key: str
    where: str
    value: str
    domain: str
    likely_identifier: bool
    score: float
    purpose: PurposeClass
    consent: ConsentRequirement
    cookie: CookieRecord | None = None


def _classify_storage_entry(ctx: CheckContext, entry: StorageEntry, site_url: str):
    party = ctx.classifier.party_relation(site_url, entry.origin)
    manifest_entry = ctx.classifier.manifest.lookup(entry.origin, entry.key)
    if manifest_entry is not None:
        purposes = manifest_entry.purpose_classes
    else:
        tracked = ctx.classifier.trackers.get(party.element_registrable_domain)
        purposes = (tracked,) if tracked else (PurposeClass.UNKNOWN,)
    if party.is_third_party:
        purposes = tuple(PurposeClass.NON_LOCAL_ANALYTICS if p is PurposeClass.LOCAL_ANALYTICS
                         else p for p in purposes)
    decided = max(purposes, key=lambda p: consent_required(p).rank)
    return decided, consent_required(decided)


def stored_elements(ctx: CheckContext, session: CapturedSession, t: int,
                    twin: CapturedSession | None = None) -> list[StoredElement]:
    """Snapshot of stored elements at ``t``, scored and classified.

    Recognized consent registrations are excluded: they are the consent
    signal itself and are assessed by the registration checkers instead.
    """
    out = []
    twin_cookies = {}
    twin_entries = {}
    if twin is not None:
        twin_end = twin.end_time_ms
        twin_cookies = {c.identity(): c for c in cookies_at(twin, twin_end)}
        twin_entries = {(e.origin, e.key): e for e in local_storage_at(twin, twin_end)}

    for cookie in cookies_at(session, t):
        if looks_like_consent_key(cookie.name):
            continue
        verdict = score_identifier(
            extract_features(cookie, twin_cookies.get(cookie.identity())),
            ctx.identifier_cfg)
        classification = ctx.classifier.classify(cookie, session.site_url)
        out.append(StoredElement(
            key=cookie.name, where="cookie", value=cookie.value, domain=cookie.domain,
            likely_identifier=verdict.is_likely_identifier, score=verdict.score,
            purpose=classification.purpose, consent=classification.consent,
            cookie=cookie))

    for entry in local_storage_at(session, t):
        if looks_like_consent_key(entry.key):
            continue
        verdict = score_identifier(
            extract_features(entry, twin_entries.get((entry.origin, entry.key))),
            ctx.identifier_cfg)
        purpose, consent = _classify_storage_entry(ctx, entry, session.site_url)
        out.append(StoredElement(
            key=entry.key, where="local_storage", value=entry.value, domain=entry.origin,
            likely_identifier=verdict.is_likely_identifier, score=verdict.score,
            purpose=purpose, consent=consent))
    return out


def _element_evidence(session: CapturedSession, element: StoredElement, t: int) -> Evidence:
    kind = "cookie" if element.where == "cookie" else "storage_entry"
    return Evidence(kind, {
        "key": element.key, "domain": element.domain, "value": element.value,
        "purpose": element.purpose.value, "consent_required": element.consent.value,
        "identifier_score": element.score,
    }, _ref(session, t))


# --- R1: prior to storing an identifier ---------------------------------------


def check_r1_prior_storage(session: CapturedSession, ctx: CheckContext,
                           twin: CapturedSession | None = None
                           ) -> tuple[Verdict, list[Finding]]:
    if session.scenario is not ScenarioKind.NO_ACTION:
        raise PreconditionError("R1 requires a no_action session")
    if not session.t0_snapshot().empty:
        raise PreconditionError("R1 requires an empty profile at t0")

    end = session.end_time_ms
    elements = stored_elements(ctx, session, end, twin)
    candidates = [e for e in elements if e.likely_identifier]

    violations = [e for e in candidates if e.consent is ConsentRequirement.YES]
    unknowns = [e for e in candidates if e.consent is ConsentRequirement.UNKNOWN]
    conditionals = [e for e in candidates if e.consent is ConsentRequirement.CONDITIONAL]
    if ctx.strict_unknown:
        violations += unknowns
        unknowns = []

    findings = [
        Finding("conditional_exemption",
                f"{e.key} is a likely identifier declared as first-party analytics; "
                "the exemption holds only if all of the following are met: "
                + "; ".join(LOCAL_ANALYTICS_CONDITIONS),
                requirement_id="R1",
                evidence=(_element_evidence(session, e, end),
                          Evidence("text_match", {
                              "category": "conditional_exemption_checklist",
                              "conditions": list(LOCAL_ANALYTICS_CONDITIONS)})))
        for e in conditionals
    ]

    if violations:
        return Verdict(
            "R1", Outcome.VIOLATION,
            tuple(_element_evidence(session, e, end) for e in violations),
            HEURISTIC_NOTE), findings
    if unknowns:
        return Verdict(
            "R1", Outcome.INCONCLUSIVE,
            tuple(_element_evidence(session, e, end) for e in unknowns),
            "likely identifiers of unknown purpose were stored before any action; "
            "purpose cannot be decided automatically (strict_unknown is off)"), findings
    return Verdict("R1", Outcome.COMPLIANT, (), HEURISTIC_NOTE), findings


# --- R2: prior to sending an identifier ----------------------------------------


def _reencodings(value: str) -> tuple[str, ...]:
    raw = value.encode("utf-8")
    return (
        value,
        raw.hex(),
        base64.b64encode(raw).decode("ascii").rstrip("="),
        base64.urlsafe_b64encode(raw).decode("ascii").rstrip("="),
    )


def _upgraded_consent(purpose: PurposeClass, third_party_destination: bool
                      ) -> ConsentRequirement:
    if third_party_destination and purpose is PurposeClass.LOCAL_ANALYTICS:
        purpose = PurposeClass.NON_LOCAL_ANALYTICS
    return consent_required(purpose)


def check_r2_prior_sending(session: CapturedSession, ctx: CheckContext
                           ) -> Verdict:
    boundary = consent_boundary(session)
    hits_yes: list[Evidence] = []
    hits_unknown: list[Evidence] = []

    for request in session.iter_kind(RequestEvent):
        t = request.timestamp_ms
        if boundary is not None and t >= boundary:
            continue
        destination = ctx.classifier.party_relation(session.site_url, request.host)
        if not destination.is_third_party:
            continue

        # (a) cookies attached to the request
        for cookie in request.cookies_sent:
            if looks_like_consent_key(cookie.name):
                continue
            verdict = score_identifier(extract_features(cookie), ctx.identifier_cfg)
            if not verdict.is_likely_identifier:
                continue
            classification = ctx.classifier.classify(cookie, session.site_url)
            consent = _upgraded_consent(classification.purpose, True)
            evidence = Evidence("request", {
                "url": request.url, "via": "cookie", "key": cookie.name,
                "value": cookie.value, "purpose": classification.purpose.value,
            }, _ref(session, t))
            if consent is ConsentRequirement.YES:
                hits_yes.append(evidence)
            elif consent is ConsentRequirement.UNKNOWN:
                hits_unknown.append(evidence)

        # (b) previously stored identifier values leaking through query params
        if not request.query_params:
            continue
        stored = [e for e in stored_elements(ctx, session, t)
                  if e.likely_identifier and len(e.value) >= 8]
        for element in stored:
            encodings = _reencodings(element.value)
            for name, value in request.query_params:
                if not any(enc and enc in value for enc in encodings):
                    continue
                consent = _upgraded_consent(element.purpose, True)
                evidence = Evidence("request", {
                    "url": request.url, "via": "query_param", "param": name,
                    "stored_key": element.key, "stored_domain": element.domain,
                    "purpose": element.purpose.value,
                }, _ref(session, t))
                if consent is ConsentRequirement.YES:
                    hits_yes.append(evidence)
                elif consent is ConsentRequirement.UNKNOWN:
                    hits_unknown.append(evidence)

    if ctx.strict_unknown:
        hits_yes, hits_unknown = hits_yes + hits_unknown, []
    if hits_yes:
        return Verdict("R2", Outcome.VIOLATION, tuple(hits_yes), OBFUSCATION_NOTE)
    if hits_unknown:
        return Verdict("R2", Outcome.INCONCLUSIVE, tuple(hits_unknown),
                       "identifier-likely values of unknown purpose were sent to third "
                       "parties before consent; " + OBFUSCATION_NOTE)
    return Verdict("R2", Outcome.COMPLIANT, (), OBFUSCATION_NOTE)


# --- R11 / R14 / R15: consent registration ------------------------------------


def _registration_state(session: CapturedSession, t: int):
    artifacts = find_consent_artifacts(session, t)
    positives = [a for a in artifacts if a.is_positive]
    negatives = [a for a in artifacts if a.is_recognized and not a.is_positive]
    unrecognized = [a for a in artifacts if not a.is_recognized]
    return positives, negatives, unrecognized


def check_r11_affirmative_action(sessions: list[CapturedSession], ctx: CheckContext
                                 ) -> Verdict:
    eligible = [s for s in sessions
                if s.scenario in (ScenarioKind.CLOSE_BANNER, ScenarioKind.SCROLL)]
    if not eligible:
        raise PreconditionError("R11 requires a close_banner or scroll session")

    evidence: list[Evidence] = []
    got_inconclusive = False
    for session in eligible:
        positives, _negatives, unrecognized = _registration_state(
            session, session.end_time_ms)
        if positives:
            return Verdict(
                "R11", Outcome.VIOLATION,
                tuple(_consent_evidence(session, a) for a in positives),
                f"positive consent registered after a {session.scenario.value} action")
        if unrecognized:
            got_inconclusive = True
            evidence.extend(_consent_evidence(session, a) for a in unrecognized)

    if got_inconclusive:
        return Verdict("R11", Outcome.INCONCLUSIVE, tuple(evidence),
                       "consent appears to be stored in a format this tool cannot decode")
    return Verdict("R11", Outcome.COMPLIANT, (),
                   "no positive consent registered without an affirmative action")


def check_r14_post_consent_registration(session: CapturedSession, ctx: CheckContext
                                        ) -> tuple[Verdict, list[Finding]]:
    if session.scenario is not ScenarioKind.NO_ACTION:
        raise PreconditionError("R14 requires a no_action session")
    if not session.t0_snapshot().empty:
        raise PreconditionError("R14 requires an empty profile at t0")

    positive_at = positive_consent_time(session)
    if positive_at is not None:
        positives = [a for a in find_consent_artifacts(session, positive_at)
                     if a.is_positive]
        return Verdict(
            "R14", Outcome.VIOLATION,
            tuple(_consent_evidence(session, a) for a in positives),
            "a positive consent was registered without any user action"), []

    positives, negatives, unrecognized = _registration_state(session, session.end_time_ms)
    if negatives:
        finding = Finding(
            "refusal_pre_registered",
            "a negative (all-refused) consent was registered without any user "
            "action; treated as compliant, flagged for operator attention",
            requirement_id="R14",
            evidence=tuple(_consent_evidence(session, a) for a in negatives))
        return Verdict("R14", Outcome.COMPLIANT,
                       tuple(_consent_evidence(session, a) for a in negatives),
                       "only a negative consent was pre-registered"), [finding]
    if unrecognized:
        return Verdict("R14", Outcome.INCONCLUSIVE,
                       tuple(_consent_evidence(session, a) for a in unrecognized),
                       "consent appears to be stored in a format this tool cannot "
                       "decode"), []
    return Verdict("R14", Outcome.COMPLIANT, (), "no consent registered before action"), []


def check_r15_correct_registration(sessions: list[CapturedSession], ctx: CheckContext
                                   ) -> tuple[Verdict, list[Finding]]:
    eligible = {s.scenario: s for s in sessions
                if s.scenario in (ScenarioKind.ACCEPT_ALL, ScenarioKind.REJECT_ALL)}
    if not eligible:
        raise PreconditionError("R15 requires an accept_all or reject_all session")
    for session in eligible.values():
        if first_action_time(session) is None:
            raise PreconditionError("R15 sessions must contain the user action")

    findings: list[Finding] = []
    sub_outcomes: list[Outcome] = []
    evidence: list[Evidence] = []
    notes: list[str] = []

    reject = eligible.get(ScenarioKind.REJECT_ALL)
    if reject is not None:
        positives, negatives, unrecognized = _registration_state(
            reject, reject.end_time_ms)
        if positives:
            return Verdict(
                "R15", Outcome.VIOLATION,
                tuple(_consent_evidence(reject, a) for a in positives),
                "the user rejected all, but a positive consent was registered"), findings
        if negatives:
            sub_outcomes.append(Outcome.COMPLIANT)
            evidence.extend(_consent_evidence(reject, a) for a in negatives)
            notes.append("reject_all: refusal correctly registered as negative")
        elif unrecognized:
            sub_outcomes.append(Outcome.INCONCLUSIVE)
            evidence.extend(_consent_evidence(reject, a) for a in unrecognized)
            notes.append("reject_all: consent stored in an undecodable format")
        else:
            sub_outcomes.append(Outcome.COMPLIANT)
            notes.append("reject_all: nothing stored")
            findings.append(Finding(
                "refusal_not_registered",
                "the refusal was not registered at all; the user is likely to be "
                "re-prompted on every visit",
                requirement_id="R15"))

    accept = eligible.get(ScenarioKind.ACCEPT_ALL)
    if accept is not None:
        positives, negatives, unrecognized = _registration_state(
            accept, accept.end_time_ms)
        if positives:
            sub_outcomes.append(Outcome.COMPLIANT)
            evidence.extend(_consent_evidence(accept, a) for a in positives)
            notes.append("accept_all: positive consent registered")
        elif negatives:
            sub_outcomes.append(Outcome.COMPLIANT)
            evidence.extend(_consent_evidence(accept, a) for a in negatives)
            notes.append("accept_all: registered consent is narrower than the choice")
            findings.append(Finding(
                "consent_narrower_than_choice",
                "the user accepted all, but a negative consent was registered; "
                "processing less than allowed is valid, flagged for attention",
                requirement_id="R15",
                evidence=tuple(_consent_evidence(accept, a) for a in negatives)))
        else:
            sub_outcomes.append(Outcome.INCONCLUSIVE)
            notes.append("accept_all: no recognizable consent was registered")
            if unrecognized:
                evidence.extend(_consent_evidence(accept, a) for a in unrecognized)

    if all(o is Outcome.INCONCLUSIVE for o in sub_outcomes):
        outcome = Outcome.INCONCLUSIVE
    else:
        outcome = Outcome.COMPLIANT
    return Verdict("R15", outcome, tuple(evidence), "; ".join(notes)), findings


# --- R20: consent wall ---------------------------------------------------------


def _banner_snapshot(session: CapturedSession) -> DomSnapshotEvent | None:
    snapshots = list(session.iter_kind(DomSnapshotEvent))
    for snap in snapshots:
        if snap.banner_candidates:
            return snap
    return snapshots[0] if snapshots else None


def check_r20_consent_wall(sessions: list[CapturedSession], ctx: CheckContext
                           ) -> tuple[Verdict, list[Finding]]:
    findings: list[Finding] = []
    viewport_notes: list[str] = []
    evidence: list[Evidence] = []
    saw_snapshot = False
    saw_banner = False
    wall_found = False

    for session in sessions:
        snapshot = _banner_snapshot(session)
        if snapshot is None:
            continue
        saw_snapshot = True
        viewport = f"{session.viewport_w}x{session.viewport_h}"
        matched = [b for b in snapshot.banner_candidates
                   if b.selector in ctx.banner_selectors]
        if not matched:
            viewport_notes.append(f"{viewport}: no banner matched the selector rules")
            continue
        saw_banner = True
        for banner in matched:
            ratio = banner.area_ratio(session.viewport_w, session.viewport_h)
            blocking = (banner.is_overlay_blocking or ratio >= ctx.wall_area_threshold) \
                and not snapshot.page_interactive
            payload = {
                "selector": banner.selector, "viewport": viewport,
                "area_ratio": round(ratio, 4),
                "is_overlay_blocking": banner.is_overlay_blocking,
                "page_interactive": snapshot.page_interactive,
            }
            item = Evidence("banner_geometry", payload,
                            _ref(session, snapshot.timestamp_ms))
            evidence.append(item)
            if snapshot.screenshot_ref:
                evidence.append(Evidence("screenshot_ref",
                                         {"path": snapshot.screenshot_ref},
                                         _ref(session, snapshot.timestamp_ms)))
            if blocking:
                wall_found = True
                viewport_notes.append(
                    f"{viewport}: consent wall ({banner.selector} covers "
                    f"{ratio:.0%}, page not interactive)")
                findings.append(Finding(
                    "consent_wall",
                    f"banner {banner.selector} blocks the page at {viewport} "
                    f"(area ratio {ratio:.2f})",
                    requirement_id="R20", evidence=(item,)))
            else:
                viewport_notes.append(f"{viewport}: banner present, page reachable")

    note = "; ".join(viewport_notes)
    if not saw_snapshot:
        return Verdict("R20", Outcome.INCONCLUSIVE, (),
                       "no DOM snapshot was captured"), findings
    if not saw_banner:
        return Verdict("R20", Outcome.INCONCLUSIVE, tuple(evidence),
                       note or "no banner matched the selector rules"), findings
    if wall_found:
        return Verdict("R20", Outcome.MANUAL_PENDING, tuple(evidence),
                       "consent-wall geometry detected; operator confirmation "
                       "required (" + note + ")"), findings
    return Verdict("R20", Outcome.COMPLIANT, tuple(evidence), note), findings


# --- lifespan findings ---------------------------------------------------------


_ANALYTICS = {PurposeClass.LOCAL_ANALYTICS, PurposeClass.NON_LOCAL_ANALYTICS}


def lifespan_findings(session: CapturedSession, profile: LifespanProfile,
                      ctx: CheckContext) -> list[Finding]:
    """Advisory findings for lifespans exceeding the DPA profile limits.

    Limits are strict: a lifespan of exactly the maximum passes.
    """
    out: list[Finding] = []
    end = session.end_time_ms
    for cookie in cookies_at(session, end):
        lifespan = cookie.lifespan_seconds
        if lifespan is None:
            continue
        days = lifespan / 86400.0
        if looks_like_consent_key(cookie.name):
            limit = profile.consent_storage_max_days
            if limit is not None and days > limit:
                out.append(Finding(
                    "lifespan_consent_storage",
                    f"consent storage {cookie.name} lives {days:.0f} days, over the "
                    f"{profile.name} limit of {limit} days",
                    evidence=(Evidence("cookie", {
                        "key": cookie.name, "domain": cookie.domain,
                        "lifespan_days": round(days, 2), "limit_days": limit,
                    }, _ref(session, end)),)))
            continue
        classification = ctx.classifier.classify(cookie, session.site_url)
        if classification.purpose in _ANALYTICS:
            limit = profile.analytics_max_days
            if limit is not None and days > limit:
                out.append(Finding(
                    "lifespan_analytics",
                    f"analytics cookie {cookie.name} lives {days:.0f} days, over the "
                    f"{profile.name} limit of {limit} days",
                    evidence=(Evidence("cookie", {
                        "key": cookie.name, "domain": cookie.domain,
                        "lifespan_days": round(days, 2), "limit_days": limit,
                    }, _ref(session, end)),)))
    return out


# --- information-presence scans ------------------------------------------------


@dataclass(frozen=True)
class TextMatch:
    phrase: str
    offset: int
    snippet: str


@dataclass(frozen=True)
class InformationEvidence:
    """Per-category lexicon hits over the information page text."""

    page_present: bool
    matches: dict[str, TextMatch | None]

    def present(self, category: str) -> bool:
        return self.matches.get(category) is not None


RIGHTS_CATEGORIES = tuple(
    f"rights.{r}" for r in
    ("access", "rectification", "erasure", "restriction", "objection",
     "portability", "withdraw", "complaint", "automated_decision", "transfers"))

INFO_CATEGORIES = ("purposes", "recipients", "storage_period", "cookie_names",
                   "controller", "configuration") + RIGHTS_CATEGORIES


def info_page_scan(text: str | None, lexicon: dict[str, tuple[str, ...]]
                   ) -> InformationEvidence:
    """Keyword presence report over the information page.

    Produces evidence for the operator, never an automated verdict: the
    scan only says which required kinds of information look present.
    """
    if not text:
        return InformationEvidence(False, {c: None for c in INFO_CATEGORIES})
    lowered = text.lower()
    matches: dict[str, TextMatch | None] = {}
    for category in INFO_CATEGORIES:
        found = None
        for phrase in lexicon.get(category, ()):
            offset = lowered.find(phrase.lower())
            if offset >= 0:
                start = max(0, offset - 30)
                end = min(len(text), offset + len(phrase) + 30)
                found = TextMatch(phrase, offset, text[start:end])
                break
        matches[category] = found
    return InformationEvidence(True, matches)


def load_lexicon(text: str) -> dict[str, tuple[str, ...]]:
    """Parse a lexicon file: [category] headers, one phrase per line."""
    out: dict[str, list[str]] = {}
    category = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            category = line[1:-1]
            out.setdefault(category, [])
        elif category is not None:
            out[category].append(line)
    return {k: tuple(v) for k, v in out.items()}


def load_selector_rules(text: str) -> frozenset[str]:
    """Parse banner selector rules: '##<selector>' lines, '!' comments."""
    selectors = set()
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("!"):
            continue
        if line.startswith("##"):
            selectors.add(line[2:])
    return frozenset(selectors)


# --- orchestration --------------------------------------------------------------


_INFO_REQUIREMENT_CATEGORIES = {
    "R7": ("purposes", "recipients", "storage_period", "cookie_names"),
    "R8": ("configuration",),
    "R9": ("controller",),
    "R10": RIGHTS_CATEGORIES,
}

MANUAL_CHECKLIST_IDS = ("R3", "R4", "R5", "R12", "R13", "R16", "R21")
USER_STUDY_IDS = ("R17", "R18", "R19")


@dataclass(frozen=True)
class SiteCheckResult:
    site_url: str
    verdicts: tuple[Verdict, ...]  # exactly 22, ordered R1..R22
    findings: tuple[Finding, ...]

    def verdict(self, requirement_id: str) -> Verdict:
        for v in self.verdicts:
            if v.requirement_id == requirement_id:
                return v
        raise KeyError(requirement_id)


def _missing(requirement_id: str, what: str) -> Verdict:
    return Verdict(requirement_id, Outcome.INCONCLUSIVE, (),
                   f"missing {what} capture")


def _info_text(capture: SiteCapture) -> str | None:
    for session in [capture.no_action, *capture.extra_no_action]:
        if session is None:
            continue
        for snap in session.iter_kind(DomSnapshotEvent):
            if snap.info_page_text:
                return snap.info_page_text
    return None


def _banner_text_evidence(capture: SiteCapture, ctx: CheckContext) -> tuple[Evidence, ...]:
    session = capture.no_action
    if session is None:
        return ()
    snapshot = _banner_snapshot(session)
    if snapshot is None:
        return ()
    out = []
    for banner in snapshot.banner_candidates:
        if banner.selector in ctx.banner_selectors and banner.text:
            out.append(Evidence("text_match",
                                {"selector": banner.selector, "text": banner.text},
                                _ref(session, snapshot.timestamp_ms)))
    return tuple(out)


def _info_evidence_items(scan: InformationEvidence, categories) -> tuple[Evidence, ...]:
    items = []
    for category in categories:
        match = scan.matches.get(category)
        if match is not None:
            items.append(Evidence("text_match", {
                "category": category, "phrase": match.phrase,
                "offset": match.offset, "snippet": match.snippet, "present": True}))
        else:
            items.append(Evidence("text_match", {"category": category, "present": False}))
    return tuple(items)


def run_all(capture: SiteCapture, ctx: CheckContext) -> SiteCheckResult:
    """Produce one verdict per requirement for one site, plus findings.

    Missing scenarios degrade the affected checks to inconclusive with a
    note naming the missing capture; checker precondition failures do the
    same rather than aborting the site.
    """
    if capture.no_action is None:
        raise PreconditionError("run_all requires at least the no_action session")

    verdicts: dict[str, Verdict] = {}
    findings: list[Finding] = []
    no_action = capture.no_action
    all_no_action = [no_action, *capture.extra_no_action]

    def guarded(requirement_id, fn, *args):
        try:
            result = fn(*args)
        except PreconditionError as exc:
            return Verdict(requirement_id, Outcome.INCONCLUSIVE, (),
                           f"precondition not met: {exc}")
        if isinstance(result, tuple):
            verdict, extra = result
            findings.extend(extra)
            return verdict
        return result

    verdicts["R1"] = guarded("R1", check_r1_prior_storage, no_action, ctx,
                             capture.twin_no_action)

    r2_sessions = list(dict.fromkeys(
        s for s in [*all_no_action, *capture.sessions.values()] if s is not None))
    r2_sub = [check_r2_prior_sending(s, ctx) for s in r2_sessions]
    r2_violations = [v for v in r2_sub if v.outcome is Outcome.VIOLATION]
    r2_inconclusive = [v for v in r2_sub if v.outcome is Outcome.INCONCLUSIVE]
    if r2_violations:
        verdicts["R2"] = Verdict(
            "R2", Outcome.VIOLATION,
            tuple(e for v in r2_violations for e in v.evidence), OBFUSCATION_NOTE)
    elif r2_inconclusive:
        verdicts["R2"] = r2_inconclusive[0]
    else:
        verdicts["R2"] = Verdict("R2", Outcome.COMPLIANT, (), OBFUSCATION_NOTE)

    non_affirmative = [s for s in (capture.sessions.get(ScenarioKind.CLOSE_BANNER),
                                   capture.sessions.get(ScenarioKind.SCROLL))
                       if s is not None]
    if non_affirmative:
        verdicts["R11"] = guarded("R11", check_r11_affirmative_action,
                                  non_affirmative, ctx)
    else:
        verdicts["R11"] = _missing("R11", "close_banner/scroll")

    verdicts["R14"] = guarded("R14", check_r14_post_consent_registration, no_action, ctx)

    choice_sessions = [s for s in (capture.sessions.get(ScenarioKind.ACCEPT_ALL),
                                   capture.sessions.get(ScenarioKind.REJECT_ALL))
                       if s is not None]
    if choice_sessions:
        verdicts["R15"] = guarded("R15", check_r15_correct_registration,
                                  choice_sessions, ctx)
    else:
        verdicts["R15"] = _missing("R15", "accept_all/reject_all")

    verdicts["R20"] = guarded("R20", check_r20_consent_wall, all_no_action, ctx)

    # information-presence requirements: evidence scans, operator decides
    scan = info_page_scan(_info_text(capture), ctx.lexicon)
    if scan.page_present:
        r6_evidence = (Evidence("text_match", {"category": "information_page",
                                               "present": True}),)
        r6_note = "an information page was captured; keyword evidence attached"
    else:
        r6_evidence = (Evidence("text_match", {"category": "information_page",
                                               "present": False,
                                               "note": "information page missing"}),)
        r6_note = "no information page text was captured (link not found or not followed)"
    verdicts["R6"] = Verdict("R6", Outcome.MANUAL_PENDING, r6_evidence, r6_note)
    for requirement_id, categories in _INFO_REQUIREMENT_CATEGORIES.items():
        verdicts[requirement_id] = Verdict(
            requirement_id, Outcome.MANUAL_PENDING,
            _info_evidence_items(scan, categories),
            "keyword presence evidence only; the operator decides the outcome")

    banner_evidence = _banner_text_evidence(capture, ctx)
    for requirement_id in MANUAL_CHECKLIST_IDS:
        requirement = by_id(requirement_id)
        verdicts[requirement_id] = Verdict(
            requirement_id, Outcome.MANUAL_PENDING, banner_evidence,
            f"operator checklist: {requirement.requirement_text}")
    for requirement_id in USER_STUDY_IDS:
        requirement = by_id(requirement_id)
        verdicts[requirement_id] = Verdict(
            requirement_id, Outcome.USER_STUDY_PENDING, (),
            f"needs a user study: {requirement.requirement_text}")

    verdicts["R22"] = Verdict(
        "R22", Outcome.NOT_ASSESSABLE, (),
        "withdrawal communication to third parties is not observable from the "
        "browser; no verification technique exists")

    if ctx.lifespan_profile is not None:
        findings.extend(lifespan_findings(no_action, ctx.lifespan_profile, ctx))

    ordered = tuple(verdicts[r.id] for r in registry())
    for verdict in ordered:
        requirement = by_id(verdict.requirement_id)
        if not requirement.allows_auto(verdict.outcome):
            raise AssertionError(
                f"{verdict.requirement_id} may not emit {verdict.outcome.value} "
                f"under assessment mode {requirement.assessment.value}")

    resolved = tuple(_resolve_refs(v, capture.sources) for v in ordered)
    resolved_findings = tuple(
        Finding(f.kind, f.message, f.requirement_id,
                tuple(_resolve_evidence(e, capture.sources) for e in f.evidence))
        for f in findings)
    return SiteCheckResult(capture.site_url, resolved, resolved_findings)


def _resolve_evidence(evidence: Evidence, sources: dict[str, str]) -> Evidence:
    if evidence.session_ref is None:
        return evidence
    label, t = evidence.session_ref
    return replace(evidence, session_ref=(sources.get(label, label), t))


def _resolve_refs(verdict: Verdict, sources: dict[str, str]) -> Verdict:
    return replace(verdict, evidence=tuple(
        _resolve_evidence(e, sources) for e in verdict.evidence))
