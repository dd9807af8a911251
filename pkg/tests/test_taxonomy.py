"""Purpose taxonomy: suffix rules, tracker lists, manifest, classification."""

from datetime import datetime, timedelta, timezone
from importlib import resources

import pytest
from hypothesis import given, settings, strategies as st

from consent_audit.errors import ParseError, SchemaError, SuffixError
from consent_audit.session import CookieRecord
from consent_audit.taxonomy import (
    Classification,
    ConsentRequirement,
    CookieManifest,
    PurposeClass,
    PurposeClassifier,
    SuffixRules,
    consent_required,
    load_tracker_list,
    registrable_domain,
)

T0 = datetime(2026, 7, 27, tzinfo=timezone.utc)


def data_text(name: str) -> str:
    return resources.files("consent_audit.data").joinpath(name).read_text()


@pytest.fixture(scope="module")
def rules() -> SuffixRules:
    return SuffixRules.parse(data_text("suffix_rules.dat"))


@pytest.fixture(scope="module")
def classifier(rules) -> PurposeClassifier:
    return PurposeClassifier(
        manifest=CookieManifest.parse(data_text("manifest_seed.json")),
        trackers=load_tracker_list(data_text("tracker_seed.txt")),
        suffix_rules=rules,
    )


def cookie(name, value="x", domain="www.site.example", days=None):
    return CookieRecord(
        domain=domain, name=name, path="/", value=value,
        expiry=T0 + timedelta(days=days) if days else None,
        set_time=T0, source="header")


class TestRegistrableDomain:
    def test_plain_subdomain(self, rules):
        assert registrable_domain("cse.google.com", rules) == "google.com"

    def test_already_registrable_under_multi_label_suffix(self, rules):
        assert registrable_domain("example.co.uk", rules) == "example.co.uk"

    def test_deep_subdomain(self, rules):
        assert registrable_domain("a.b.example.com", rules) == "example.com"

    def test_bare_suffix_returns_itself(self, rules):
        assert registrable_domain("co.uk", rules) == "co.uk"

    def test_unknown_tld_uses_default_rule(self, rules):
        assert registrable_domain("ads.trackerhub.example", rules) == "trackerhub.example"

    def test_wildcard_rule(self, rules):
        assert registrable_domain("shop.anything.ck", rules) == "shop.anything.ck"
        assert registrable_domain("deep.shop.anything.ck", rules) == "shop.anything.ck"

    def test_wildcard_exception(self, rules):
        assert registrable_domain("www.ck", rules) == "www.ck"
        assert registrable_domain("sub.www.ck", rules) == "www.ck"

    def test_case_and_trailing_dot_ignored(self, rules):
        assert registrable_domain("WWW.Site.Example.", rules) == "site.example"

    def test_empty_host_rejected(self, rules):
        with pytest.raises(SuffixError):
            registrable_domain("", rules)


class TestTrackerList:
    def test_single_line(self):
        out = load_tracker_list("trackerco.example advertising\n")
        assert out == {"trackerco.example": PurposeClass.ADVERTISING}

    def test_comments_and_blanks_ignored(self):
        out = load_tracker_list("# heading\n\nx.example advertising # inline\n")
        assert list(out) == ["x.example"]

    def test_conflicting_duplicate_rejected(self):
        with pytest.raises(ParseError) as exc:
            load_tracker_list("a.example advertising\na.example local_analytics\n")
        assert exc.value.line == 2

    def test_unknown_token_rejected(self):
        with pytest.raises(ParseError):
            load_tracker_list("a.example spyware\n")

    def test_empty_file_is_valid(self):
        assert load_tracker_list("") == {}

    def test_seed_list_parses(self):
        assert load_tracker_list(data_text("tracker_seed.txt"))


class TestManifest:
    def test_seed_manifest_parses(self):
        manifest = CookieManifest.parse(data_text("manifest_seed.json"))
        assert manifest.lookup("www.shopsite.example", "lb_route") is not None

    def test_trailing_wildcard_name(self):
        manifest = CookieManifest.parse(data_text("manifest_seed.json"))
        entry = manifest.lookup("www.anything.example", "_pk_id.2.9f21")
        assert entry and entry.purpose_classes == (PurposeClass.LOCAL_ANALYTICS,)

    def test_literal_beats_wildcard(self):
        manifest = CookieManifest.parse(
            '{"manifest_version": 1, "entries": ['
            '{"domain": "*", "name": "sid", "purpose_classes": ["Advertising"]},'
            '{"domain": "www.a.example", "name": "sid",'
            ' "purpose_classes": ["SessionAuthentication"]}]}')
        entry = manifest.lookup("www.a.example", "sid")
        assert entry.purpose_classes == (PurposeClass.SESSION_AUTHENTICATION,)

    def test_duplicate_keys_rejected(self):
        with pytest.raises(SchemaError):
            CookieManifest.parse(
                '{"manifest_version": 1, "entries": ['
                '{"domain": "a", "name": "x", "purpose_classes": ["Advertising"]},'
                '{"domain": "a", "name": "x", "purpose_classes": ["Advertising"]}]}')

    def test_interior_wildcard_rejected(self):
        with pytest.raises(SchemaError):
            CookieManifest.parse(
                '{"manifest_version": 1, "entries": ['
                '{"domain": "a", "name": "x*y", "purpose_classes": ["Advertising"]}]}')

    def test_empty_purpose_list_rejected(self):
        with pytest.raises(SchemaError):
            CookieManifest.parse(
                '{"manifest_version": 1, "entries": ['
                '{"domain": "a", "name": "x", "purpose_classes": []}]}')


class TestConsentRequired:
    def test_exempt_split_matches_purpose_table(self):
        expected_no = {
            PurposeClass.LOAD_BALANCING, PurposeClass.SESSION_USER_INPUT,
            PurposeClass.SESSION_AUTHENTICATION, PurposeClass.USER_SECURITY_REQUESTED,
            PurposeClass.SOCIAL_PLUGIN_REQUESTED, PurposeClass.SHORT_TERM_CUSTOMIZATION,
            PurposeClass.SESSION_MULTIMEDIA}
        for purpose in PurposeClass:
            requirement = consent_required(purpose)
            if purpose in expected_no:
                assert requirement is ConsentRequirement.NO
            elif purpose is PurposeClass.LOCAL_ANALYTICS:
                assert requirement is ConsentRequirement.CONDITIONAL
            elif purpose is PurposeClass.UNKNOWN:
                assert requirement is ConsentRequirement.UNKNOWN
            else:
                assert requirement is ConsentRequirement.YES

    def test_totality(self):
        for purpose in PurposeClass:
            assert consent_required(purpose) in ConsentRequirement


class TestClassify:
    def test_tracker_cookie_is_advertising_third_party(self, classifier):
        result = classifier.classify(
            cookie("IDE", domain="ads.trackerhub.example", days=730),
            "https://www.shopsite.example/")
        assert result.purpose is PurposeClass.ADVERTISING
        assert result.consent is ConsentRequirement.YES
        assert result.party.is_third_party

    def test_multipurpose_requires_consent(self, classifier):
        manifest = CookieManifest.parse(
            '{"manifest_version": 1, "entries": ['
            '{"domain": "*", "name": "combo",'
            ' "purpose_classes": ["SessionAuthentication", "Advertising"]}]}')
        clf = PurposeClassifier(manifest, {}, classifier.suffix_rules)
        result = clf.classify(cookie("combo"), "https://www.site.example/")
        assert result.consent is ConsentRequirement.YES
        assert result.purpose is PurposeClass.ADVERTISING

    def test_load_balancer_first_party_exempt(self, classifier):
        result = classifier.classify(
            cookie("lb_route", domain="www.shopsite.example"),
            "https://www.shopsite.example/")
        assert result.purpose is PurposeClass.LOAD_BALANCING
        assert result.consent is ConsentRequirement.NO
        assert not result.party.is_third_party

    def test_local_analytics_upgraded_on_third_party(self, classifier):
        first = classifier.classify(
            cookie("_pk_id.1.abcd", domain="www.site.example"),
            "https://www.site.example/")
        third = classifier.classify(
            cookie("_pk_id.1.abcd", domain="stats.other.example"),
            "https://www.site.example/")
        assert first.purpose is PurposeClass.LOCAL_ANALYTICS
        assert first.consent is ConsentRequirement.CONDITIONAL
        assert third.purpose is PurposeClass.NON_LOCAL_ANALYTICS
        assert third.consent is ConsentRequirement.YES

    def test_unknown_fallback(self, classifier):
        result = classifier.classify(cookie("mystery"), "https://www.site.example/")
        assert result.purpose is PurposeClass.UNKNOWN
        assert result.consent is ConsentRequirement.UNKNOWN
        assert result.matched_by == "fallback"

    def test_scheme_port_case_never_affect_party(self, classifier):
        for site in ("https://WWW.Site.example:8443/x?y=1", "http://www.site.example/",
                     "https://www.site.example"):
            relation = classifier.party_relation(site, "cdn.site.example")
            assert relation.relation == "first_party"

    def test_upgrade_never_relaxes(self, classifier):
        """Third-party classification never requires less than first-party."""
        for name in ("_pk_id.9.x", "lb_route", "mystery", "IDE"):
            for domain in ("www.site.example", "ads.trackerhub.example"):
                first = classifier.classify(
                    cookie(name, domain="www.site.example"), "https://www.site.example/")
                third = classifier.classify(
                    cookie(name, domain="stats.far.example"), "https://www.site.example/")
                assert third.consent.rank >= first.consent.rank


class TestDeterminism:
    @settings(max_examples=60, deadline=None)
    @given(st.sampled_from(["sid", "lb_route", "_pk_id.2.x", "mystery", "IDE"]),
           st.sampled_from(["www.shopsite.example", "ads.trackerhub.example",
                            "cdn.shopsite.example"]))
    def test_classify_deterministic_and_total(self, classifier, name, domain):
        first = classifier.classify(cookie(name, domain=domain),
                                    "https://www.shopsite.example/")
        second = classifier.classify(cookie(name, domain=domain),
                                     "https://www.shopsite.example/")
        assert first == second
        assert isinstance(first, Classification)
