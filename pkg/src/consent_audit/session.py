"""Captured-session data model and its versioned JSON file format.

A session is the record of one scripted visit to a site under a fixed
scenario (do nothing, close the banner, scroll, accept all, reject all).
Everything the requirement checkers consume is derivable from this model
alone; there is no hidden state.

The on-disk format is documented in ``docs/session-format.md``. Format
version 1 is the only version understood by this parser.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Iterator, Union
from urllib.parse import urlsplit

from .errors import InvariantError, SchemaError

FORMAT_VERSION = 1


class ScenarioKind(Enum):
    NO_ACTION = "no_action"
    CLOSE_BANNER = "close_banner"
    SCROLL = "scroll"
    ACCEPT_ALL = "accept_all"
    REJECT_ALL = "reject_all"
    CUSTOM = "custom"


#: Scenarios whose user action expresses a consent choice (used by the
#: checkers to delimit the pre-consent window).
CONSENT_EXPRESSING = frozenset({ScenarioKind.ACCEPT_ALL, ScenarioKind.CUSTOM})


def _parse_ts(value: str, path: str) -> datetime:
    try:
        ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except (ValueError, AttributeError, TypeError):
        raise SchemaError(path, f"not an ISO-8601 timestamp: {value!r}")
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _format_ts(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%f")[:-3] + "Z"


def host_of(url: str) -> str:
    """Lowercased host of a URL, or '' when the URL has none."""
    try:
        return (urlsplit(url).hostname or "").lower()
    except ValueError:
        return ""


def _require(obj: dict, key: str, path: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{path}.{key}" if path else key)
    return obj[key]


@dataclass(frozen=True, order=True)
class CookieRecord:
    """One cookie as observed in a snapshot, request or Set-Cookie header."""

    domain: str
    name: str
    path: str = "/"
    value: str = ""
    expiry: datetime | None = None  # absent = session cookie
    set_time: datetime = datetime(1970, 1, 1, tzinfo=timezone.utc)
    source: str = "unknown"  # header | script | unknown

    @property
    def lifespan_seconds(self) -> int | None:
        if self.expiry is None:
            return None
        return int((self.expiry - self.set_time).total_seconds())

    def identity(self) -> tuple[str, str, str]:
        """Cookie-jar identity used for override semantics."""
        return (self.domain, self.path, self.name)

    @classmethod
    def from_json(cls, obj: dict, path: str) -> "CookieRecord":
        domain = str(_require(obj, "domain", path)).lower().lstrip(".")
        if not domain or " " in domain:
            raise SchemaError(f"{path}.domain", f"not a host name: {domain!r}")
        expiry_raw = obj.get("expiry")
        expiry = _parse_ts(expiry_raw, f"{path}.expiry") if expiry_raw else None
        set_time = _parse_ts(_require(obj, "set_time", path), f"{path}.set_time")
        if expiry is not None and expiry < set_time:
            raise InvariantError(f"{path}.expiry", "expiry precedes set_time")
        source = obj.get("source", "unknown")
        if source not in ("header", "script", "unknown"):
            raise SchemaError(f"{path}.source", f"unknown source {source!r}")
        return cls(
            domain=domain,
            name=str(_require(obj, "name", path)),
            path=str(obj.get("path", "/")),
            value=str(_require(obj, "value", path)),
            expiry=expiry,
            set_time=set_time,
            source=source,
        )

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "domain": self.domain,
            "path": self.path,
            "expiry": _format_ts(self.expiry) if self.expiry else None,
            "set_time": _format_ts(self.set_time),
            "source": self.source,
        }


@dataclass(frozen=True, order=True)
class StorageEntry:
    """One localStorage entry (origin-scoped key/value)."""

    origin: str
    key: str
    value: str

    @classmethod
    def from_json(cls, obj: dict, path: str) -> "StorageEntry":
        origin = str(_require(obj, "origin", path)).lower()
        if not origin:
            raise SchemaError(f"{path}.origin", "empty origin")
        return cls(origin=origin, key=str(_require(obj, "key", path)),
                   value=str(_require(obj, "value", path)))

    def to_json(self) -> dict:
        return {"origin": self.origin, "key": self.key, "value": self.value}


@dataclass(frozen=True)
class BannerRegion:
    """A banner candidate found in the DOM, with its rendered geometry."""

    selector: str
    x: float
    y: float
    w: float
    h: float
    is_overlay_blocking: bool
    text: str = ""

    def area_ratio(self, viewport_w: int, viewport_h: int) -> float:
        """Banner area relative to the viewport (may exceed 1)."""
        return (self.w * self.h) / float(viewport_w * viewport_h)

    @classmethod
    def from_json(cls, obj: dict, path: str) -> "BannerRegion":
        box = _require(obj, "bounding_box", path)
        try:
            x, y, w, h = (float(box[k]) for k in ("x", "y", "w", "h"))
        except (KeyError, TypeError, ValueError):
            raise SchemaError(f"{path}.bounding_box")
        if w < 0 or h < 0:
            raise InvariantError(f"{path}.bounding_box", "negative extent")
        return cls(
            selector=str(_require(obj, "selector", path)),
            x=x, y=y, w=w, h=h,
            is_overlay_blocking=bool(_require(obj, "is_overlay_blocking", path)),
            text=str(obj.get("text", "")),
        )

    def to_json(self) -> dict:
        return {
            "selector": self.selector,
            "bounding_box": {"x": self.x, "y": self.y, "w": self.w, "h": self.h},
            "is_overlay_blocking": self.is_overlay_blocking,
            "text": self.text,
        }


@dataclass(frozen=True)
class RequestEvent:
    timestamp_ms: int
    id: str
    url: str
    method: str = "GET"
    headers: tuple[tuple[str, str], ...] = ()
    cookies_sent: tuple[CookieRecord, ...] = ()
    query_params: tuple[tuple[str, str], ...] = ()

    kind = "request"

    @property
    def host(self) -> str:
        return host_of(self.url)


@dataclass(frozen=True)
class ResponseEvent:
    timestamp_ms: int
    request_id: str
    status: int
    set_cookies: tuple[CookieRecord, ...] = ()

    kind = "response"


@dataclass(frozen=True)
class StorageSnapshotEvent:
    timestamp_ms: int
    cookies: tuple[CookieRecord, ...] = ()
    local_storage: tuple[StorageEntry, ...] = ()

    kind = "storage_snapshot"

    @property
    def empty(self) -> bool:
        return not self.cookies and not self.local_storage


@dataclass(frozen=True)
class UserActionEvent:
    timestamp_ms: int
    action: ScenarioKind

    kind = "user_action"


@dataclass(frozen=True)
class DomSnapshotEvent:
    timestamp_ms: int
    banner_candidates: tuple[BannerRegion, ...] = ()
    page_interactive: bool = True
    info_page_text: str | None = None
    screenshot_ref: str | None = None

    kind = "dom_snapshot"


SessionEvent = Union[
    RequestEvent, ResponseEvent, StorageSnapshotEvent, UserActionEvent, DomSnapshotEvent
]


@dataclass(frozen=True)
class CapturedSession:
    """One scripted visit: the empirical unit every checker operates on."""

    site_url: str
    scenario: ScenarioKind
    viewport_w: int
    viewport_h: int
    profile_id: str
    captured_at: datetime
    events: tuple[SessionEvent, ...] = field(default=())

    @property
    def site_host(self) -> str:
        return host_of(self.site_url)

    def abs_time(self, timestamp_ms: int) -> datetime:
        """Absolute wall-clock time of a relative session timestamp."""
        return self.captured_at + timedelta(milliseconds=timestamp_ms)

    def iter_kind(self, cls) -> Iterator:
        return (e for e in self.events if isinstance(e, cls))

    @property
    def end_time_ms(self) -> int:
        return self.events[-1].timestamp_ms if self.events else 0

    def t0_snapshot(self) -> StorageSnapshotEvent:
        return next(self.iter_kind(StorageSnapshotEvent))


def first_action_time(session: CapturedSession) -> int | None:
    """Timestamp (ms) of the user action, or None for no_action sessions."""
    for event in session.iter_kind(UserActionEvent):
        return event.timestamp_ms
    return None


def cookies_at(session: CapturedSession, t: int) -> tuple[CookieRecord, ...]:
    """Cookie-jar contents at relative time ``t``, ordered by (domain, name).

    Replays events up to and including ``t``: each storage snapshot is
    authoritative for its moment, later Set-Cookie headers override by
    (domain, path, name), and cookies expired at ``t`` are dropped.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    jar: dict[tuple[str, str, str], CookieRecord] = {}
    for event in session.events:
        if event.timestamp_ms > t:
            break
        if isinstance(event, StorageSnapshotEvent):
            jar = {c.identity(): c for c in event.cookies}
        elif isinstance(event, ResponseEvent):
            for cookie in event.set_cookies:
                jar[cookie.identity()] = cookie
    now = session.abs_time(t)
    live = [c for c in jar.values() if c.expiry is None or c.expiry > now]
    return tuple(sorted(live, key=lambda c: (c.domain, c.name, c.path)))


def local_storage_at(session: CapturedSession, t: int) -> tuple[StorageEntry, ...]:
    """localStorage contents at relative time ``t`` (last snapshot wins)."""
    entries: tuple[StorageEntry, ...] = ()
    for event in session.iter_kind(StorageSnapshotEvent):
        if event.timestamp_ms > t:
            break
        entries = event.local_storage
    return tuple(sorted(entries))


# --- file format ------------------------------------------------------------

_EVENT_PARSERS = {}


def _event_parser(kind):
    def register(fn):
        _EVENT_PARSERS[kind] = fn
        return fn
    return register


def _cookie_list(obj: dict, key: str, path: str) -> tuple[CookieRecord, ...]:
    raw = obj.get(key, [])
    if not isinstance(raw, list):
        raise SchemaError(f"{path}.{key}", "expected a list")
    return tuple(CookieRecord.from_json(c, f"{path}.{key}[{i}]") for i, c in enumerate(raw))


@_event_parser("request")
def _parse_request(obj: dict, t: int, path: str) -> RequestEvent:
    url = str(_require(obj, "url", path))
    if not host_of(url):
        raise SchemaError(f"{path}.url", f"no parseable host in {url!r}")
    headers = obj.get("headers", {})
    if not isinstance(headers, dict):
        raise SchemaError(f"{path}.headers", "expected an object")
    params_raw = obj.get("query_params", [])
    try:
        params = tuple((str(k), str(v)) for k, v in params_raw)
    except (TypeError, ValueError):
        raise SchemaError(f"{path}.query_params", "expected [name, value] pairs")
    return RequestEvent(
        timestamp_ms=t,
        id=str(_require(obj, "id", path)),
        url=url,
        method=str(obj.get("method", "GET")),
        headers=tuple(sorted((str(k), str(v)) for k, v in headers.items())),
        cookies_sent=_cookie_list(obj, "cookies_sent", path),
        query_params=params,
    )


@_event_parser("response")
def _parse_response(obj: dict, t: int, path: str) -> ResponseEvent:
    return ResponseEvent(
        timestamp_ms=t,
        request_id=str(_require(obj, "request_id", path)),
        status=int(_require(obj, "status", path)),
        set_cookies=_cookie_list(obj, "set_cookies", path),
    )


@_event_parser("storage_snapshot")
def _parse_snapshot(obj: dict, t: int, path: str) -> StorageSnapshotEvent:
    ls_raw = obj.get("local_storage", [])
    if not isinstance(ls_raw, list):
        raise SchemaError(f"{path}.local_storage", "expected a list")
    return StorageSnapshotEvent(
        timestamp_ms=t,
        cookies=_cookie_list(obj, "cookies", path),
        local_storage=tuple(
            StorageEntry.from_json(e, f"{path}.local_storage[{i}]") for i, e in enumerate(ls_raw)
        ),
    )


@_event_parser("user_action")
def _parse_action(obj: dict, t: int, path: str) -> UserActionEvent:
    raw = str(_require(obj, "action", path))
    try:
        action = ScenarioKind(raw)
    except ValueError:
        raise SchemaError(f"{path}.action", f"unknown action {raw!r}")
    if action is ScenarioKind.NO_ACTION:
        raise InvariantError(f"{path}.action", "no_action is not a performable action")
    return UserActionEvent(timestamp_ms=t, action=action)


@_event_parser("dom_snapshot")
def _parse_dom(obj: dict, t: int, path: str) -> DomSnapshotEvent:
    candidates_raw = obj.get("banner_candidates", [])
    if not isinstance(candidates_raw, list):
        raise SchemaError(f"{path}.banner_candidates", "expected a list")
    info = obj.get("info_page_text")
    screenshot = obj.get("screenshot_ref")
    return DomSnapshotEvent(
        timestamp_ms=t,
        banner_candidates=tuple(
            BannerRegion.from_json(b, f"{path}.banner_candidates[{i}]")
            for i, b in enumerate(candidates_raw)
        ),
        page_interactive=bool(_require(obj, "page_interactive", path)),
        info_page_text=str(info) if info is not None else None,
        screenshot_ref=str(screenshot) if screenshot is not None else None,
    )


def _check_invariants(session: CapturedSession) -> None:
    last_t = -1
    for i, event in enumerate(session.events):
        if event.timestamp_ms < last_t:
            raise InvariantError(f"events[{i}].t", "events not sorted by timestamp")
        last_t = event.timestamp_ms

    actions = list(session.iter_kind(UserActionEvent))
    if session.scenario is ScenarioKind.NO_ACTION:
        if actions:
            raise InvariantError("events", "no_action session contains a user action")
    else:
        if len(actions) != 1:
            raise InvariantError(
                "events", f"expected exactly 1 user action, found {len(actions)}")
        if actions[0].action is not session.scenario:
            raise InvariantError(
                "events", f"user action {actions[0].action.value!r} does not match "
                          f"scenario {session.scenario.value!r}")

    first_action = first_action_time(session)
    snapshots = list(session.iter_kind(StorageSnapshotEvent))
    if not snapshots:
        raise InvariantError("events", "missing t0 storage snapshot")
    if first_action is not None and snapshots[0].timestamp_ms > first_action:
        raise InvariantError("events", "no storage snapshot before the user action")

    seen_requests: set[str] = set()
    for i, event in enumerate(session.events):
        if isinstance(event, RequestEvent):
            if event.id in seen_requests:
                raise InvariantError(f"events[{i}].id", f"duplicate request id {event.id!r}")
            seen_requests.add(event.id)
        elif isinstance(event, ResponseEvent):
            if event.request_id not in seen_requests:
                raise InvariantError(
                    f"events[{i}].request_id",
                    f"response references unknown or later request {event.request_id!r}")


def parse_session(data: bytes | str) -> CapturedSession:
    """Parse one session file (UTF-8 JSON) into the typed model.

    Raises SchemaError for missing/malformed fields and InvariantError for
    schema-valid documents that violate the model invariants; both name the
    offending path.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise SchemaError("$", "top level must be an object")
    unknown = set(doc) - {"format_version", "site_url", "scenario", "viewport",
                          "profile_id", "captured_at", "events"}
    if unknown:
        # strict by contract: captures flagged e.g. incomplete=true are rejected
        raise SchemaError(sorted(unknown)[0], "unknown top-level field")

    version = _require(doc, "format_version", "")
    if version != FORMAT_VERSION:
        raise SchemaError("format_version", f"unsupported version {version!r}")

    site_url = str(_require(doc, "site_url", ""))
    if not host_of(site_url):
        raise SchemaError("site_url", f"no parseable host in {site_url!r}")

    raw_scenario = str(_require(doc, "scenario", ""))
    try:
        scenario = ScenarioKind(raw_scenario)
    except ValueError:
        raise SchemaError("scenario", f"unknown scenario {raw_scenario!r}")

    viewport = _require(doc, "viewport", "")
    try:
        width = int(viewport["width_px"])
        height = int(viewport["height_px"])
    except (KeyError, TypeError, ValueError):
        raise SchemaError("viewport")
    if width <= 0 or height <= 0:
        raise InvariantError("viewport", "viewport dimensions must be positive")

    events_raw = _require(doc, "events", "")
    if not isinstance(events_raw, list):
        raise SchemaError("events", "expected a list")
    events = []
    for i, obj in enumerate(events_raw):
        path = f"events[{i}]"
        if not isinstance(obj, dict):
            raise SchemaError(path, "expected an object")
        t = _require(obj, "t", path)
        if not isinstance(t, int) or t < 0:
            raise SchemaError(f"{path}.t", "expected a non-negative integer")
        kind = str(_require(obj, "kind", path))
        parser = _EVENT_PARSERS.get(kind)
        if parser is None:
            raise SchemaError(f"{path}.kind", f"unknown event kind {kind!r}")
        events.append(parser(obj, t, path))

    session = CapturedSession(
        site_url=site_url,
        scenario=scenario,
        viewport_w=width,
        viewport_h=height,
        profile_id=str(_require(doc, "profile_id", "")),
        captured_at=_parse_ts(_require(doc, "captured_at", ""), "captured_at"),
        events=tuple(events),
    )
    _check_invariants(session)
    return session


def _event_to_json(event: SessionEvent) -> dict:
    out: dict = {"t": event.timestamp_ms, "kind": event.kind}
    if isinstance(event, RequestEvent):
        out.update(
            id=event.id, url=event.url, method=event.method,
            headers=dict(event.headers),
            cookies_sent=[c.to_json() for c in event.cookies_sent],
            query_params=[list(p) for p in event.query_params],
        )
    elif isinstance(event, ResponseEvent):
        out.update(request_id=event.request_id, status=event.status,
                   set_cookies=[c.to_json() for c in event.set_cookies])
    elif isinstance(event, StorageSnapshotEvent):
        out.update(cookies=[c.to_json() for c in event.cookies],
                   local_storage=[e.to_json() for e in event.local_storage])
    elif isinstance(event, UserActionEvent):
        out.update(action=event.action.value)
    elif isinstance(event, DomSnapshotEvent):
        out.update(banner_candidates=[b.to_json() for b in event.banner_candidates],
                   page_interactive=event.page_interactive,
                   info_page_text=event.info_page_text,
                   screenshot_ref=event.screenshot_ref)
    return out


def serialize_session(session: CapturedSession) -> bytes:
    """Serialize to the version-1 file format (round-trips with parse_session)."""
    doc = {
        "format_version": FORMAT_VERSION,
        "site_url": session.site_url,
        "scenario": session.scenario.value,
        "viewport": {"width_px": session.viewport_w, "height_px": session.viewport_h},
        "profile_id": session.profile_id,
        "captured_at": _format_ts(session.captured_at),
        "events": [_event_to_json(e) for e in session.events],
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
