"""Session model: parsing, invariants, cookie-jar replay, round-trips."""

import json
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings, strategies as st

from consent_audit.errors import InvariantError, SchemaError
from consent_audit.session import (
    CapturedSession,
    CookieRecord,
    DomSnapshotEvent,
    RequestEvent,
    ResponseEvent,
    ScenarioKind,
    StorageEntry,
    StorageSnapshotEvent,
    UserActionEvent,
    cookies_at,
    first_action_time,
    parse_session,
    serialize_session,
)

from conftest import FIXTURES

T0 = datetime(2026, 7, 27, 10, 0, 0, tzinfo=timezone.utc)


def minimal_doc(**overrides) -> dict:
    doc = {
        "format_version": 1,
        "site_url": "https://www.site.example/",
        "scenario": "no_action",
        "viewport": {"width_px": 1366, "height_px": 768},
        "profile_id": "p1",
        "captured_at": "2026-07-27T10:00:00.000Z",
        "events": [
            {"t": 0, "kind": "storage_snapshot", "cookies": [], "local_storage": []},
        ],
    }
    doc.update(overrides)
    return doc


def cookie_json(name="sid", value="x", domain="www.site.example", t_ms=0, days=None):
    set_time = T0 + timedelta(milliseconds=t_ms)
    expiry = set_time + timedelta(days=days) if days is not None else None
    return {
        "name": name, "value": value, "domain": domain, "path": "/",
        "expiry": expiry.strftime("%Y-%m-%dT%H:%M:%S.000Z") if expiry else None,
        "set_time": set_time.strftime("%Y-%m-%dT%H:%M:%S.%f")[:-3] + "Z",
        "source": "header",
    }


class TestParsing:
    def test_minimal_document_parses(self):
        session = parse_session(json.dumps(minimal_doc()))
        assert session.scenario is ScenarioKind.NO_ACTION
        assert session.site_host == "www.site.example"
        assert len(session.events) == 1

    def test_missing_viewport_is_schema_error(self):
        doc = minimal_doc()
        del doc["viewport"]
        with pytest.raises(SchemaError) as exc:
            parse_session(json.dumps(doc))
        assert "viewport" in exc.value.path

    def test_unknown_scenario_is_schema_error(self):
        with pytest.raises(SchemaError):
            parse_session(json.dumps(minimal_doc(scenario="shrug")))

    def test_unknown_top_level_key_rejected(self):
        # the incomplete-capture marker must not slip past a strict audit
        with pytest.raises(SchemaError) as exc:
            parse_session(json.dumps(minimal_doc(incomplete=True)))
        assert "incomplete" in exc.value.path

    def test_unsorted_events_is_invariant_error(self):
        doc = minimal_doc(events=[
            {"t": 50, "kind": "storage_snapshot", "cookies": [], "local_storage": []},
            {"t": 10, "kind": "request", "id": "r1", "url": "https://a.example/"},
        ])
        with pytest.raises(InvariantError):
            parse_session(json.dumps(doc))

    def test_missing_t0_snapshot_is_invariant_error(self):
        doc = minimal_doc(events=[
            {"t": 5, "kind": "request", "id": "r1", "url": "https://a.example/"},
        ])
        with pytest.raises(InvariantError) as exc:
            parse_session(json.dumps(doc))
        assert "snapshot" in str(exc.value)

    def test_two_user_actions_rejected(self):
        doc = minimal_doc(scenario="accept_all")
        doc["events"] += [
            {"t": 10, "kind": "user_action", "action": "accept_all"},
            {"t": 20, "kind": "user_action", "action": "accept_all"},
        ]
        with pytest.raises(InvariantError):
            parse_session(json.dumps(doc))

    def test_action_must_match_scenario(self):
        doc = minimal_doc(scenario="accept_all")
        doc["events"].append({"t": 10, "kind": "user_action", "action": "scroll"})
        with pytest.raises(InvariantError):
            parse_session(json.dumps(doc))

    def test_no_action_scenario_forbids_actions(self):
        doc = minimal_doc()
        doc["events"].append({"t": 10, "kind": "user_action", "action": "scroll"})
        with pytest.raises(InvariantError):
            parse_session(json.dumps(doc))

    def test_response_must_reference_earlier_request(self):
        doc = minimal_doc()
        doc["events"].append(
            {"t": 10, "kind": "response", "request_id": "ghost", "status": 200})
        with pytest.raises(InvariantError):
            parse_session(json.dumps(doc))

    def test_bad_request_url_is_schema_error(self):
        doc = minimal_doc()
        doc["events"].append({"t": 10, "kind": "request", "id": "r1", "url": "not a url"})
        with pytest.raises(SchemaError) as exc:
            parse_session(json.dumps(doc))
        assert "url" in exc.value.path

    def test_ebay_like_fixture(self):
        session = parse_session((FIXTURES / "ebay_like.session.json").read_bytes())
        snapshots = list(session.iter_kind(StorageSnapshotEvent))
        assert snapshots[0].timestamp_ms == 0 and snapshots[0].empty
        responses = [e for e in session.iter_kind(ResponseEvent) if e.set_cookies]
        assert len(responses) == 1
        assert responses[0].set_cookies[0].name == "IDE"

    def test_serialize_parse_is_structure_identity(self):
        raw = (FIXTURES / "ebay_like.session.json").read_bytes()
        session = parse_session(raw)
        assert json.loads(serialize_session(session)) == json.loads(raw)


class TestFirstActionTime:
    def test_no_action_has_none(self):
        assert first_action_time(parse_session(json.dumps(minimal_doc()))) is None

    def test_accept_at_4200(self):
        doc = minimal_doc(scenario="accept_all")
        doc["events"].append({"t": 4200, "kind": "user_action", "action": "accept_all"})
        assert first_action_time(parse_session(json.dumps(doc))) == 4200


def oracle_cookies_at(session: CapturedSession, t: int):
    """Brute-force replay, written independently of the production path."""
    state = {}
    for event in session.events:
        if event.timestamp_ms > t:
            continue
        if event.kind == "storage_snapshot":
            state = {}
            for c in event.cookies:
                state[(c.domain, c.path, c.name)] = c
        if event.kind == "response":
            for c in event.set_cookies:
                state[(c.domain, c.path, c.name)] = c
    wall = session.captured_at + timedelta(milliseconds=t)
    alive = {k: c for k, c in state.items() if c.expiry is None or c.expiry > wall}
    return sorted(alive.values(), key=lambda c: (c.domain, c.name, c.path))


class TestCookiesAt:
    def test_empty_profile_at_t0(self):
        session = parse_session(json.dumps(minimal_doc()))
        assert cookies_at(session, 0) == ()

    def test_single_set_cookie_visible_after_response(self):
        doc = minimal_doc()
        doc["events"] += [
            {"t": 10, "kind": "request", "id": "r1", "url": "https://www.site.example/"},
            {"t": 20, "kind": "response", "request_id": "r1", "status": 200,
             "set_cookies": [cookie_json(days=30, t_ms=20)]},
        ]
        session = parse_session(json.dumps(doc))
        assert cookies_at(session, 15) == ()
        after = cookies_at(session, 25)
        assert len(after) == 1 and after[0].name == "sid"

    def test_snapshot_value_overridden_by_later_set_cookie(self):
        doc = minimal_doc()
        doc["events"] = [
            {"t": 0, "kind": "storage_snapshot",
             "cookies": [cookie_json(value="old", days=10)], "local_storage": []},
            {"t": 10, "kind": "request", "id": "r1", "url": "https://www.site.example/"},
            {"t": 30, "kind": "response", "request_id": "r1", "status": 200,
             "set_cookies": [cookie_json(value="new", days=10, t_ms=30)]},
        ]
        session = parse_session(json.dumps(doc))
        got = cookies_at(session, 100)
        assert [c.value for c in got] == ["new"]
        assert list(got) == oracle_cookies_at(session, 100)

    def test_expired_cookie_dropped(self):
        doc = minimal_doc()
        doc["events"] = [
            {"t": 0, "kind": "storage_snapshot",
             "cookies": [cookie_json(days=1)], "local_storage": []},
        ]
        session = parse_session(json.dumps(doc))
        assert len(cookies_at(session, 0)) == 1
        assert cookies_at(session, 2 * 24 * 3600 * 1000) == ()


def _dtms(base: datetime, ms: int) -> datetime:
    return base + timedelta(milliseconds=ms)


@st.composite
def sessions(draw) -> CapturedSession:
    scenario = draw(st.sampled_from(list(ScenarioKind)))
    n_events = draw(st.integers(1, 8))
    times = sorted(draw(st.lists(st.integers(0, 10_000),
                                 min_size=n_events, max_size=n_events)))
    names = st.text(alphabet="abcxyz_", min_size=1, max_size=6)
    domains = st.sampled_from(["www.site.example", "cdn.site.example", "ads.tk.example"])

    def cookie(t_ms):
        return CookieRecord(
            domain=draw(domains),
            name=draw(names),
            path="/",
            value=draw(st.text(alphabet="0123456789abcdef", max_size=12)),
            expiry=_dtms(T0, t_ms + draw(st.integers(1, 10 ** 9))) if draw(st.booleans()) else None,
            set_time=_dtms(T0, t_ms),
            source=draw(st.sampled_from(["header", "script", "unknown"])),
        )

    events = [StorageSnapshotEvent(timestamp_ms=times[0])]
    open_requests = []
    for t in times[1:]:
        kind = draw(st.sampled_from(["request", "response", "snapshot", "dom"]))
        if kind == "request":
            rid = f"r{len(open_requests)}"
            open_requests.append(rid)
            events.append(RequestEvent(
                timestamp_ms=t, id=rid, url="https://www.site.example/x",
                query_params=((draw(names), draw(names)),)))
        elif kind == "response" and open_requests:
            events.append(ResponseEvent(
                timestamp_ms=t, request_id=draw(st.sampled_from(open_requests)),
                status=200,
                set_cookies=tuple(cookie(t) for _ in range(draw(st.integers(0, 2))))))
        elif kind == "snapshot":
            events.append(StorageSnapshotEvent(
                timestamp_ms=t,
                cookies=tuple(cookie(t) for _ in range(draw(st.integers(0, 2)))),
                local_storage=tuple(
                    StorageEntry("www.site.example", draw(names), draw(names))
                    for _ in range(draw(st.integers(0, 1))))))
        else:
            events.append(DomSnapshotEvent(timestamp_ms=t, page_interactive=True))
    if scenario is not ScenarioKind.NO_ACTION:
        events.append(UserActionEvent(timestamp_ms=times[-1] + 1, action=scenario))
    return CapturedSession(
        site_url="https://www.site.example/",
        scenario=scenario,
        viewport_w=1366,
        viewport_h=768,
        profile_id=draw(st.text(alphabet="ab12-", min_size=1, max_size=8)),
        captured_at=T0,
        events=tuple(events),
    )


class TestProperties:
    @settings(max_examples=120, deadline=None)
    @given(sessions())
    def test_parse_serialize_roundtrip(self, session):
        assert parse_session(serialize_session(session)) == session

    @settings(max_examples=120, deadline=None)
    @given(sessions(), st.integers(0, 12_000))
    def test_cookies_at_matches_brute_force_oracle(self, session, t):
        assert list(cookies_at(session, t)) == oracle_cookies_at(session, t)

    @settings(max_examples=60, deadline=None)
    @given(sessions(), st.integers(0, 12_000))
    def test_cookies_at_monotone_in_knowledge(self, session, t):
        """Appending a later event never changes cookies_at for earlier t."""
        last = session.events[-1].timestamp_ms
        extended = CapturedSession(
            **{**session.__dict__,
               "events": session.events + (
                   StorageSnapshotEvent(timestamp_ms=last + 60_000),)})
        cutoff = min(t, last + 30_000)
        assert cookies_at(session, cutoff) == cookies_at(extended, cutoff)
