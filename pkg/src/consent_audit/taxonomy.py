"""Purpose classification of stored elements and first/third-party relations.

A stored element is mapped to a purpose class (and from it to a
consent-required answer) using, in order of precedence: the cookie purpose
manifest, the known-tracker domain list, and Unknown as the fallback.
First/third-party is decided on registrable domains (public-suffix aware),
so scheme, port and case never matter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .errors import ParseError, SchemaError, SuffixError
from .session import CookieRecord, host_of


class PurposeClass(Enum):
    LOAD_BALANCING = "LoadBalancing"
    SESSION_USER_INPUT = "SessionUserInput"
    SESSION_AUTHENTICATION = "SessionAuthentication"
    USER_SECURITY_REQUESTED = "UserSecurityRequested"
    SOCIAL_PLUGIN_REQUESTED = "SocialPluginRequested"
    SHORT_TERM_CUSTOMIZATION = "ShortTermCustomization"
    SESSION_MULTIMEDIA = "SessionMultimedia"
    LOCAL_ANALYTICS = "LocalAnalytics"
    NON_LOCAL_ANALYTICS = "NonLocalAnalytics"
    ADVERTISING = "Advertising"
    PERSISTENT_AUTHENTICATION = "PersistentAuthentication"
    LONG_TERM_CUSTOMIZATION = "LongTermCustomization"
    USER_SECURITY_NOT_REQUESTED = "UserSecurityNotRequested"
    SOCIAL_PLUGIN_NOT_REQUESTED = "SocialPluginNotRequested"
    UNKNOWN = "Unknown"


class ConsentRequirement(Enum):
    """Whether a purpose class needs consent. Ordered no < conditional < unknown < yes."""

    NO = "no"
    CONDITIONAL = "conditional"
    UNKNOWN = "unknown"
    YES = "yes"

    @property
    def rank(self) -> int:
        return _CONSENT_ORDER.index(self)


_CONSENT_ORDER = [ConsentRequirement.NO, ConsentRequirement.CONDITIONAL,
                  ConsentRequirement.UNKNOWN, ConsentRequirement.YES]

_EXEMPT = {
    PurposeClass.LOAD_BALANCING,
    PurposeClass.SESSION_USER_INPUT,
    PurposeClass.SESSION_AUTHENTICATION,
    PurposeClass.USER_SECURITY_REQUESTED,
    PurposeClass.SOCIAL_PLUGIN_REQUESTED,
    PurposeClass.SHORT_TERM_CUSTOMIZATION,
    PurposeClass.SESSION_MULTIMEDIA,
}


def consent_required(purpose: PurposeClass) -> ConsentRequirement:
    """Exempt/non-exempt status of a purpose class (total)."""
    if purpose in _EXEMPT:
        return ConsentRequirement.NO
    if purpose is PurposeClass.LOCAL_ANALYTICS:
        # exempt only under cumulative conditions that cannot be verified
        # from a capture; surfaced as a manual sub-checklist
        return ConsentRequirement.CONDITIONAL
    if purpose is PurposeClass.UNKNOWN:
        return ConsentRequirement.UNKNOWN
    return ConsentRequirement.YES


#: Cumulative conditions under which first-party audience measurement is
#: exempt from consent. None of them is machine-verifiable from a capture,
#: so they surface as a manual sub-checklist wherever the conditional
#: exemption is claimed.
LOCAL_ANALYTICS_CONDITIONS = (
    "the user is informed and can refuse the measurement",
    "no unique targeting of individuals",
    "data is not combined with other data nor disclosed to third parties",
    "strictly limited to anonymous, aggregated statistics",
    "used by a single publisher; no tracking across sites or apps",
    "geolocation no finer than city level; IP address anonymized or deleted",
)

_TRACKER_TOKENS = {
    "advertising": PurposeClass.ADVERTISING,
    "non_local_analytics": PurposeClass.NON_LOCAL_ANALYTICS,
    "local_analytics": PurposeClass.LOCAL_ANALYTICS,
    "social_plugin_not_requested": PurposeClass.SOCIAL_PLUGIN_NOT_REQUESTED,
    "user_security_not_requested": PurposeClass.USER_SECURITY_NOT_REQUESTED,
    "persistent_authentication": PurposeClass.PERSISTENT_AUTHENTICATION,
}


# --- public suffix rules ------------------------------------------------------


@dataclass(frozen=True)
class SuffixRules:
    """Parsed public-suffix rule set (standard one-rule-per-line format)."""

    plain: frozenset[str]
    wildcards: frozenset[str]  # rule tail after the '*.' prefix
    exceptions: frozenset[str]

    @classmethod
    def parse(cls, text: str) -> "SuffixRules":
        plain, wildcards, exceptions = set(), set(), set()
        for raw in text.splitlines():
            line = raw.strip().lower()
            if not line or line.startswith("//"):
                continue
            line = line.split()[0]
            if line.startswith("!"):
                exceptions.add(line[1:])
            elif line.startswith("*."):
                wildcards.add(line[2:])
            else:
                plain.add(line)
        return cls(frozenset(plain), frozenset(wildcards), frozenset(exceptions))


def _suffix_length(host_labels: list[str], rules: SuffixRules) -> int:
    """Number of labels in the public suffix of the host, per the PSL algorithm."""
    best = 1  # implicit '*' default rule: the TLD is a public suffix
    for start in range(len(host_labels)):
        tail = ".".join(host_labels[start:])
        length = len(host_labels) - start
        if tail in rules.exceptions:
            return length - 1  # exception rules prevail
        if tail in rules.plain:
            best = max(best, length)
        if start > 0 and tail in rules.wildcards:
            best = max(best, length + 1)
    return best


def registrable_domain(host: str, rules: SuffixRules) -> str:
    """eTLD+1 of a host; the host itself when it is already suffix+1 (or a bare suffix)."""
    if not host:
        raise SuffixError("empty host")
    host = host.strip(".").lower()
    if not host:
        raise SuffixError("empty host")
    labels = host.split(".")
    suffix_len = _suffix_length(labels, rules)
    if len(labels) <= suffix_len + 1:
        return host
    return ".".join(labels[-(suffix_len + 1):])


# --- tracker list -------------------------------------------------------------


def load_tracker_list(data: bytes | str) -> dict[str, PurposeClass]:
    """Parse the tracker list format: '<registrable-domain> <class-token>' per line."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    out: dict[str, PurposeClass] = {}
    for lineno, raw in enumerate(data.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected '<domain> <class>', got {raw!r}", line=lineno)
        domain, token = parts[0].lower().strip("."), parts[1].lower()
        purpose = _TRACKER_TOKENS.get(token)
        if purpose is None:
            raise ParseError(f"unknown purpose token {token!r}", line=lineno)
        if domain in out and out[domain] is not purpose:
            raise ParseError(f"conflicting class for {domain!r}", line=lineno)
        out[domain] = purpose
    return out


# --- cookie purpose manifest --------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    domain_pattern: str
    name_pattern: str
    purpose_classes: tuple[PurposeClass, ...]
    declared_by: str = ""
    description: str = ""


def _check_pattern(pattern: str, path: str) -> str:
    if not pattern:
        raise SchemaError(path, "empty pattern")
    if "*" in pattern[:-1]:
        raise SchemaError(path, "only a single trailing wildcard is allowed")
    return pattern


def _pattern_matches(pattern: str, value: str) -> bool:
    if pattern.endswith("*"):
        return value.startswith(pattern[:-1])
    return pattern == value


@dataclass(frozen=True)
class CookieManifest:
    """Machine-readable self-declarations of cookie purposes.

    The schema is documented in docs/manifest-schema.md; it is the
    standard format the audit accepts from site operators.
    """

    entries: tuple[ManifestEntry, ...]

    @classmethod
    def parse(cls, data: bytes | str) -> "CookieManifest":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"not valid JSON: {exc}")
        if not isinstance(doc, dict) or doc.get("manifest_version") != 1:
            raise SchemaError("manifest_version", "expected 1")
        entries = []
        seen = set()
        for i, raw in enumerate(doc.get("entries", [])):
            path = f"entries[{i}]"
            domain = _check_pattern(str(raw.get("domain", "")).lower(), f"{path}.domain")
            name = _check_pattern(str(raw.get("name", "")), f"{path}.name")
            if (domain, name) in seen:
                raise SchemaError(f"{path}", f"duplicate key ({domain!r}, {name!r})")
            seen.add((domain, name))
            classes = raw.get("purpose_classes", [])
            if not classes:
                raise SchemaError(f"{path}.purpose_classes", "must be non-empty")
            try:
                purposes = tuple(PurposeClass(c) for c in classes)
            except ValueError as exc:
                raise SchemaError(f"{path}.purpose_classes", str(exc))
            entries.append(ManifestEntry(
                domain_pattern=domain, name_pattern=name, purpose_classes=purposes,
                declared_by=str(raw.get("declared_by", "")),
                description=str(raw.get("description", ""))))
        return cls(tuple(entries))

    @classmethod
    def empty(cls) -> "CookieManifest":
        return cls(())

    def lookup(self, domain: str, name: str) -> ManifestEntry | None:
        """Most specific matching entry: literal patterns beat wildcards."""
        def specificity(entry: ManifestEntry):
            return (not entry.domain_pattern.endswith("*"),
                    not entry.name_pattern.endswith("*"),
                    len(entry.domain_pattern), len(entry.name_pattern))

        matches = [e for e in self.entries
                   if _pattern_matches(e.domain_pattern, domain.lower().lstrip("."))
                   and _pattern_matches(e.name_pattern, name)]
        return max(matches, key=specificity) if matches else None


# --- classification -----------------------------------------------------------


@dataclass(frozen=True)
class PartyRelation:
    relation: str  # first_party | third_party
    site_registrable_domain: str
    element_registrable_domain: str

    @property
    def is_third_party(self) -> bool:
        return self.relation == "third_party"


@dataclass(frozen=True)
class Classification:
    purpose: PurposeClass
    consent: ConsentRequirement
    party: PartyRelation
    matched_by: str  # manifest | trackers | fallback
    all_purposes: tuple[PurposeClass, ...] = ()


class PurposeClassifier:
    """Bundles the loaded manifest, tracker list and suffix rules."""

    def __init__(self, manifest: CookieManifest, trackers: dict[str, PurposeClass],
                 suffix_rules: SuffixRules):
        self.manifest = manifest
        self.trackers = trackers
        self.suffix_rules = suffix_rules

    def party_relation(self, site_url: str, element_domain: str) -> PartyRelation:
        site_host = host_of(site_url) or site_url.lower().strip("/ ")
        site_reg = registrable_domain(site_host, self.suffix_rules)
        element_reg = registrable_domain(element_domain.lstrip("."), self.suffix_rules)
        relation = "first_party" if site_reg == element_reg else "third_party"
        return PartyRelation(relation, site_reg, element_reg)

    def classify(self, cookie: CookieRecord, site_url: str) -> Classification:
        """Purpose class, consent requirement and party relation of a cookie.

        Manifest match wins over tracker-list match wins over Unknown.
        Multipurpose declarations require consent when any declared class
        does; local analytics on a third-party relation is upgraded to
        non-local analytics (never relaxing the requirement).
        """
        party = self.party_relation(site_url, cookie.domain)

        purposes: tuple[PurposeClass, ...]
        entry = self.manifest.lookup(cookie.domain, cookie.name)
        if entry is not None:
            purposes, matched_by = entry.purpose_classes, "manifest"
        else:
            tracked = self.trackers.get(party.element_registrable_domain)
            if tracked is not None:
                purposes, matched_by = (tracked,), "trackers"
            else:
                purposes, matched_by = (PurposeClass.UNKNOWN,), "fallback"

        if party.is_third_party:
            purposes = tuple(
                PurposeClass.NON_LOCAL_ANALYTICS if p is PurposeClass.LOCAL_ANALYTICS else p
                for p in purposes)

        decided = max(purposes, key=lambda p: consent_required(p).rank)
        return Classification(
            purpose=decided,
            consent=consent_required(decided),
            party=party,
            matched_by=matched_by,
            all_purposes=purposes,
        )
