"""Synthetic audit corpora with known ground truth, and capture loading.

The generator builds per-site scenario captures in the session file format.
Each site plants at most one automatically-detectable violation (or none,
for the clean template), so an audit of the corpus can be compared against
exact per-requirement expectations; construction is the oracle.

Site directory convention (shared with the CLI): one subdirectory per
site, ``<scenario>.session.json`` per scenario, plus the optional
``no_action_twin.session.json`` (second clean profile) and
``no_action_mobile.session.json`` (small-viewport variant).
"""

from __future__ import annotations

import json
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .errors import AuditError
from .requirements import Outcome
from .session import (
    BannerRegion,
    CapturedSession,
    CookieRecord,
    DomSnapshotEvent,
    RequestEvent,
    ResponseEvent,
    ScenarioKind,
    StorageEntry,
    StorageSnapshotEvent,
    UserActionEvent,
    parse_session,
    serialize_session,
)
from .checks import SiteCapture, session_label
from .tcf import TcfConsentRecord, TcfV2Extras, encode_tcf

PLANT_TOKENS = ("clean", "R1", "R2", "R11", "R14", "R15", "R20-wall", "pending-only")

CAPTURED_AT = datetime(2026, 8, 1, 9, 0, 0, tzinfo=timezone.utc)

_SCENARIO_FILES = {
    "no_action.session.json": ScenarioKind.NO_ACTION,
    "close_banner.session.json": ScenarioKind.CLOSE_BANNER,
    "scroll.session.json": ScenarioKind.SCROLL,
    "accept_all.session.json": ScenarioKind.ACCEPT_ALL,
    "reject_all.session.json": ScenarioKind.REJECT_ALL,
    "custom.session.json": ScenarioKind.CUSTOM,
}


def load_site_capture(site_dir: Path) -> SiteCapture:
    """Load one site's capture directory into a SiteCapture."""
    sessions: dict[ScenarioKind, CapturedSession] = {}
    twin = None
    extras = []
    sources: dict[str, str] = {}
    site_url = None
    for path in sorted(site_dir.glob("*.session.json")):
        session = parse_session(path.read_bytes())
        sources[session_label(session)] = str(path)
        if site_url is None:
            site_url = session.site_url
        if path.name == "no_action_twin.session.json":
            if session.scenario is not ScenarioKind.NO_ACTION:
                raise AuditError(f"{path}: twin capture must be a no_action session")
            twin = session
        elif path.name.startswith("no_action_"):
            if session.scenario is not ScenarioKind.NO_ACTION:
                raise AuditError(f"{path}: variant capture must be a no_action session")
            extras.append(session)
        else:
            scenario = _SCENARIO_FILES.get(path.name)
            if scenario is None:
                raise AuditError(f"unrecognized session file name: {path.name}")
            if session.scenario is not scenario:
                raise AuditError(
                    f"{path}: scenario {session.scenario.value} does not match file name")
            if scenario in sessions:
                raise AuditError(f"{path}: duplicate scenario {scenario.value}")
            sessions[scenario] = session
    if site_url is None:
        raise AuditError(f"no session files found in {site_dir}")
    return SiteCapture(site_url=site_url, sessions=sessions, twin_no_action=twin,
                       extra_no_action=tuple(extras), sources=sources)


# --- builders ------------------------------------------------------------------


def _ts(t_ms: int) -> datetime:
    return CAPTURED_AT + timedelta(milliseconds=t_ms)


def _cookie(domain: str, name: str, value: str, t_ms: int, days: int | None,
            source: str = "header") -> CookieRecord:
    return CookieRecord(
        domain=domain, name=name, path="/", value=value,
        expiry=_ts(t_ms) + timedelta(days=days) if days is not None else None,
        set_time=_ts(t_ms), source=source)


def _hex(rng: random.Random, n: int) -> str:
    return "".join(rng.choice("0123456789abcdef") for _ in range(n))


def _b64ish(rng: random.Random, n: int) -> str:
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789"
    return "".join(rng.choice(alphabet) for _ in range(n))


def positive_tcf_v2() -> str:
    return encode_tcf(TcfConsentRecord(
        tcf_version=2, created_ds=16595712000, last_updated_ds=16595712000,
        cmp_id=92, cmp_version=2, consent_screen=1, consent_language="EN",
        vendor_list_version=120, purposes_consent=frozenset({1, 2, 3}),
        vendor_consents=frozenset({10, 15}), max_vendor_id=20,
        v2=TcfV2Extras(is_service_specific=True, publisher_cc="FR")))


def negative_tcf_v2() -> str:
    return encode_tcf(TcfConsentRecord(
        tcf_version=2, created_ds=16595712000, last_updated_ds=16595712000,
        cmp_id=92, cmp_version=2, consent_screen=1, consent_language="EN",
        vendor_list_version=120, purposes_consent=frozenset(),
        vendor_consents=frozenset(), max_vendor_id=0,
        v2=TcfV2Extras(is_service_specific=True, publisher_cc="FR")))


def positive_tcf_v1() -> str:
    return encode_tcf(TcfConsentRecord(
        tcf_version=1, created_ds=15595712000, last_updated_ds=15595712000,
        cmp_id=45, cmp_version=1, consent_screen=2, consent_language="EN",
        vendor_list_version=80, purposes_consent=frozenset({1, 3}),
        vendor_consents=frozenset({9}), max_vendor_id=12))


_INFO_PAGE = """\
Cookie information. We use cookies for the purposes of running the shop,
for audience measurement statistics and to personalize content. The
following cookies are set; the cookie table below lists each cookie name,
who drops it, and its retention period. Data may be shared with
third-party partners as categories of recipients for advertising.
The data controller is Example Retail SA, contact details: 1 Main Street;
our data protection officer can be reached at dpo@site.example.
You can accept all, reject all or manage cookies in the cookie settings,
and change this preference in the future at any time.
Your rights: you have the right of access to your personal data, the right
to rectification, the right to erasure, the right to restriction of
processing, the right to object to the processing, and the right to data
portability. You may withdraw your consent at any time and lodge a
complaint with the supervisory authority. We will inform you about any
automated decision-making and about transfers of data to a third country
or international organization.
"""

_BANNER_TEXT = ("We use cookies to improve the site and for advertising. "
                "Accept all | Reject all | Manage cookies")


class _SiteBuilder:
    """Assembles one site's scenario sessions from a shared template."""

    def __init__(self, slug: str):
        self.slug = slug
        self.host = f"www.{slug}.example"
        self.site_url = f"https://{self.host}/"
        self.rng = random.Random(f"corpus:{slug}")

    def _session(self, scenario: ScenarioKind, events, profile="profile-a",
                 viewport=(1366, 768)) -> CapturedSession:
        ordered = tuple(sorted(events, key=lambda e: e.timestamp_ms))
        return CapturedSession(
            site_url=self.site_url, scenario=scenario,
            viewport_w=viewport[0], viewport_h=viewport[1],
            profile_id=profile, captured_at=CAPTURED_AT, events=ordered)

    def base_events(self, cart_value: str, banner: BannerRegion | None = None,
                    interactive: bool = True, info_text: str | None = _INFO_PAGE,
                    with_dom: bool = True):
        """Common prefix: empty t0, first-party page load, banner snapshot."""
        banner = banner or BannerRegion(
            selector="#cookie-notice", x=0, y=678, w=1366, h=90,
            is_overlay_blocking=False, text=_BANNER_TEXT)
        events = [
            StorageSnapshotEvent(timestamp_ms=0),
            RequestEvent(timestamp_ms=100, id="r1", url=self.site_url),
            ResponseEvent(timestamp_ms=220, request_id="r1", status=200,
                          set_cookies=(
                              _cookie(self.host, "cart", cart_value, 220, None),)),
        ]
        if with_dom:
            events.append(DomSnapshotEvent(
                timestamp_ms=900, banner_candidates=(banner,),
                page_interactive=interactive, info_page_text=info_text))
        return events

    def final_snapshot(self, t_ms: int, cookies, local_storage=()) -> StorageSnapshotEvent:
        return StorageSnapshotEvent(
            timestamp_ms=t_ms, cookies=tuple(cookies),
            local_storage=tuple(local_storage))


def _consent_cookie(host: str, value: str, t_ms: int, name: str = "euconsent-v2"
                    ) -> CookieRecord:
    return _cookie(host, name, value, t_ms, days=180, source="script")


def build_site(plant: str, slug: str) -> tuple[dict[str, CapturedSession], dict]:
    """Build one site's session files and its ground-truth expectations."""
    if plant not in PLANT_TOKENS:
        raise AuditError(f"unknown plant token {plant!r}")
    b = _SiteBuilder(slug)
    cart = "bk-" + str(b.rng.randint(1000, 9999))
    files: dict[str, CapturedSession] = {}

    expected = {rid: "manual_pending" for rid in
                ("R3", "R4", "R5", "R6", "R7", "R8", "R9", "R10", "R12", "R13", "R16", "R21")}
    expected.update({rid: "user_study_pending" for rid in ("R17", "R18", "R19")})
    expected["R22"] = "not_assessable"
    expected.update(R1="compliant", R2="compliant", R11="compliant",
                    R14="compliant", R15="compliant", R20="compliant")
    finding_kinds: set[str] = set()

    if plant == "pending-only":
        return _build_pending_only(b, cart, expected, finding_kinds)

    # --- no_action (plus twin), with per-plant deltas ---
    def no_action_events(profile_tag: str):
        events = b.base_events(cart)
        end_cookies = [_cookie(b.host, "cart", cart, 220, None)]
        if plant == "R1":
            ide_value = _b64ish(random.Random(f"ide:{slug}:{profile_tag}"), 64)
            events += [
                RequestEvent(timestamp_ms=400, id="r2",
                             url="https://ads.trackerhub.example/pixel"),
                ResponseEvent(timestamp_ms=520, request_id="r2", status=200,
                              set_cookies=(
                                  _cookie("ads.trackerhub.example", "IDE",
                                          ide_value, 520, 730),)),
            ]
            end_cookies.append(_cookie("ads.trackerhub.example", "IDE",
                                       ide_value, 520, 730))
        if plant == "R2":
            pk_value = _hex(b.rng, 16) + "." + str(1754000000)
            pk = _cookie(b.host, "_pk_id.1.9f2a", pk_value, 260, 390)
            events += [
                ResponseEvent(timestamp_ms=260, request_id="r1", status=200,
                              set_cookies=(pk,)),
                RequestEvent(
                    timestamp_ms=800, id="r3",
                    url=f"https://collect.webstats.example/j?uid={pk_value}",
                    query_params=(("uid", pk_value),)),
                ResponseEvent(timestamp_ms=950, request_id="r3", status=200),
            ]
            end_cookies.append(pk)
        if plant == "R14":
            consent = _consent_cookie(b.host, positive_tcf_v2(), 1200)
            end_cookies.append(consent)
        events.append(b.final_snapshot(1500, end_cookies))
        return events

    files["no_action.session.json"] = b._session(
        ScenarioKind.NO_ACTION, no_action_events("a"), profile="profile-a")
    files["no_action_twin.session.json"] = b._session(
        ScenarioKind.NO_ACTION, no_action_events("b"), profile="profile-b")

    if plant == "R20-wall":
        wall = BannerRegion(selector="#consent-wall", x=0, y=85, w=375, h=520,
                            is_overlay_blocking=True, text=_BANNER_TEXT)
        mobile_events = [
            StorageSnapshotEvent(timestamp_ms=0),
            RequestEvent(timestamp_ms=100, id="r1", url=b.site_url),
            ResponseEvent(timestamp_ms=220, request_id="r1", status=200),
            DomSnapshotEvent(timestamp_ms=900, banner_candidates=(wall,),
                             page_interactive=False, info_page_text=_INFO_PAGE),
            StorageSnapshotEvent(timestamp_ms=1500),
        ]
        files["no_action_mobile.session.json"] = b._session(
            ScenarioKind.NO_ACTION, mobile_events, profile="profile-m",
            viewport=(375, 667))
        expected["R20"] = "manual_pending"
        finding_kinds.add("consent_wall")

    # --- close_banner and scroll ---
    for scenario, filename in ((ScenarioKind.CLOSE_BANNER, "close_banner.session.json"),
                               (ScenarioKind.SCROLL, "scroll.session.json")):
        events = b.base_events(cart)
        events.append(UserActionEvent(timestamp_ms=3000, action=scenario))
        end_cookies = [_cookie(b.host, "cart", cart, 220, None)]
        if plant == "R11" and scenario is ScenarioKind.SCROLL:
            end_cookies.append(_consent_cookie(b.host, positive_tcf_v1(), 3400,
                                               name="euconsent"))
        events.append(b.final_snapshot(3600, end_cookies))
        files[filename] = b._session(scenario, events)

    # --- accept_all ---
    events = b.base_events(cart)
    events.append(UserActionEvent(timestamp_ms=3000, action=ScenarioKind.ACCEPT_ALL))
    ide_post = _cookie("ads.trackerhub.example", "IDE",
                       _b64ish(b.rng, 64), 3500, 730)
    accept_cookies = [
        _cookie(b.host, "cart", cart, 220, None),
        _consent_cookie(b.host, positive_tcf_v2(), 3400),
        ide_post,
    ]
    events += [
        b.final_snapshot(3600, accept_cookies),
        RequestEvent(timestamp_ms=4000, id="r9",
                     url="https://ads.trackerhub.example/view",
                     cookies_sent=(ide_post,)),
        ResponseEvent(timestamp_ms=4150, request_id="r9", status=200),
    ]
    files["accept_all.session.json"] = b._session(ScenarioKind.ACCEPT_ALL, events)

    # --- reject_all ---
    events = b.base_events(cart)
    events.append(UserActionEvent(timestamp_ms=3000, action=ScenarioKind.REJECT_ALL))
    reject_value = positive_tcf_v2() if plant == "R15" else negative_tcf_v2()
    events.append(b.final_snapshot(3600, [
        _cookie(b.host, "cart", cart, 220, None),
        _consent_cookie(b.host, reject_value, 3400),
    ]))
    files["reject_all.session.json"] = b._session(ScenarioKind.REJECT_ALL, events)

    if plant == "R1":
        expected["R1"] = "violation"
    elif plant == "R2":
        expected["R2"] = "violation"
        finding_kinds.add("conditional_exemption")
    elif plant == "R11":
        expected["R11"] = "violation"
    elif plant == "R14":
        expected["R14"] = "violation"
    elif plant == "R15":
        expected["R15"] = "violation"

    truth = {
        "plant": plant,
        "site_url": b.site_url,
        "expected_outcomes": expected,
        "expected_finding_kinds": sorted(finding_kinds),
    }
    return files, truth


def _build_pending_only(b: _SiteBuilder, cart: str, expected: dict,
                        finding_kinds: set[str]):
    """A site where nothing can be decided: every technical check degrades."""
    token = _hex(b.rng, 32)
    opaque = _b64ish(b.rng, 40)
    zx = _cookie(b.host, "zx_token", token, 220, 400)
    blob = _cookie(b.host, "appconsent", opaque, 220, None)
    events = [
        StorageSnapshotEvent(timestamp_ms=0),
        RequestEvent(timestamp_ms=100, id="r1", url=b.site_url),
        ResponseEvent(timestamp_ms=220, request_id="r1", status=200,
                      set_cookies=(zx, blob)),
        RequestEvent(timestamp_ms=700, id="r2",
                     url=f"https://ads.trackerhub.example/sync?u={token}",
                     query_params=(("u", token),)),
        ResponseEvent(timestamp_ms=820, request_id="r2", status=200),
        StorageSnapshotEvent(timestamp_ms=1500, cookies=(zx, blob)),
    ]
    files = {"no_action.session.json": b._session(ScenarioKind.NO_ACTION, events)}
    expected.update(R1="inconclusive", R2="inconclusive", R11="inconclusive",
                    R14="inconclusive", R15="inconclusive", R20="inconclusive")
    truth = {
        "plant": "pending-only",
        "site_url": b.site_url,
        "expected_outcomes": expected,
        "expected_finding_kinds": sorted(finding_kinds),
    }
    return files, truth


def write_corpus(plants: list[str], out_dir: Path) -> dict:
    """Emit one site directory per plant token plus the ground-truth file."""
    out_dir.mkdir(parents=True, exist_ok=True)
    truth = {}
    for plant in plants:
        slug = "site-" + plant.lower().replace("-", "")
        files, site_truth = build_site(plant, slug)
        site_dir = out_dir / slug
        site_dir.mkdir(exist_ok=True)
        for name, session in files.items():
            data = serialize_session(session)
            parse_session(data)  # emitted fixtures must round-trip strictly
            (site_dir / name).write_bytes(data)
        truth[slug] = site_truth
    (out_dir / "ground_truth.json").write_text(json.dumps(truth, indent=2) + "\n")
    return truth


def verdict_outcome_map(verdicts) -> dict[str, str]:
    return {v.requirement_id: v.outcome.value if isinstance(v.outcome, Outcome)
            else str(v.outcome) for v in verdicts}
