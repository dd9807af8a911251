"""Entropy, feature extraction and identifier scoring tests.

The default thresholds are calibrated against the bundled hand-labeled
cookie set; that calibration check doubles as the oracle for the scoring
examples.
"""

import json
import math
import random
from datetime import datetime, timedelta, timezone
from importlib import resources

import pytest
from hypothesis import given, settings, strategies as st

from consent_audit.errors import ConfigError
from consent_audit.identifiers import (
    CharsetClass,
    IdentifierConfig,
    IdentifierFeatures,
    classify_charset,
    extract_features,
    score_identifier,
    shannon_entropy,
)
from consent_audit.session import CookieRecord, StorageEntry

T0 = datetime(2026, 7, 27, tzinfo=timezone.utc)


def cookie(name, value, days=None, domain="www.site.example"):
    return CookieRecord(
        domain=domain, name=name, path="/", value=value,
        expiry=T0 + timedelta(days=days) if days is not None else None,
        set_time=T0, source="header")


class TestEntropy:
    def test_single_symbol_is_zero(self):
        assert shannon_entropy("aaaa") == 0.0

    def test_two_equiprobable_symbols_is_one(self):
        assert shannon_entropy("abab") == 1.0

    def test_empty_and_single_char_are_zero(self):
        assert shannon_entropy("") == 0.0
        assert shannon_entropy("x") == 0.0

    def test_random_hex_floor_monte_carlo(self):
        # empirical floor used by the default thresholds: uniform 64-char hex
        # values average close to 4 bits/char
        rng = random.Random(1234)
        values = ["".join(rng.choice("0123456789abcdef") for _ in range(64))
                  for _ in range(1000)]
        mean = sum(shannon_entropy(v) for v in values) / len(values)
        assert mean >= 3.5

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=64))
    def test_entropy_bounds(self, value):
        h = shannon_entropy(value)
        assert h >= 0.0
        distinct = len(set(value))
        if distinct:
            assert h <= math.log2(distinct) + 1e-9


class TestCharset:
    @pytest.mark.parametrize("value,expected", [
        ("deadbeef01", CharsetClass.HEX),
        ("0124953", CharsetClass.NUMERIC),
        ("justletters", CharsetClass.ALPHA),
        ("Ab0+/=_-", CharsetClass.BASE64ISH),
        ("hello world!", CharsetClass.MIXED),
    ])
    def test_classes(self, value, expected):
        assert classify_charset(value) == expected


class TestExtractFeatures:
    def test_short_session_cookie(self):
        features = extract_features(cookie("lang", "en-US"))
        assert features.value_length == 5
        assert features.lifespan_seconds is None
        assert features.cross_profile_distinct is None
        assert features.entropy_bits_per_char < 2.5

    def test_twin_with_different_value_is_distinct(self):
        ide = cookie("IDE", "a" * 64, days=730, domain="ads.tk.example")
        twin = cookie("IDE", "b" * 64, days=730, domain="ads.tk.example")
        features = extract_features(ide, twin)
        assert features.cross_profile_distinct is True

    def test_twin_with_identical_value_not_distinct(self):
        a = cookie("uid", "samevalue1", days=10)
        assert extract_features(a, a).cross_profile_distinct is False

    def test_twin_key_mismatch_rejected(self):
        with pytest.raises(ValueError):
            extract_features(cookie("a", "x"), cookie("b", "x"))

    def test_local_storage_entry_has_no_lifespan(self):
        entry = StorageEntry("www.site.example", "device_id", "f" * 36)
        assert extract_features(entry).lifespan_seconds is None


def load_labeled():
    data = resources.files("consent_audit.data").joinpath("labeled_cookies.json")
    return json.loads(data.read_text())["entries"]


class TestCalibration:
    def test_default_thresholds_respect_all_labels(self):
        for entry in load_labeled():
            if entry["storage"] == "cookie":
                element = cookie(entry["name"], entry["value"],
                                 days=entry["lifespan_days"], domain=entry["domain"])
                twin = None
                if entry["twin_value"] is not None:
                    twin = cookie(entry["name"], entry["twin_value"],
                                  days=entry["lifespan_days"], domain=entry["domain"])
            else:
                element = StorageEntry(entry["domain"], entry["name"], entry["value"])
                twin = None
                if entry["twin_value"] is not None:
                    twin = StorageEntry(entry["domain"], entry["name"], entry["twin_value"])
            verdict = score_identifier(extract_features(element, twin))
            assert verdict.is_likely_identifier == entry["label"], \
                f"{entry['name']}={entry['value']!r} scored {verdict.score}"

    def test_short_preference_value_scores_below_half(self):
        verdict = score_identifier(extract_features(cookie("lang", "en-US")))
        assert verdict.score < 0.5
        assert not verdict.is_likely_identifier

    def test_ide_like_scores_at_least_point_nine(self):
        value = "AHWqTUk9wXCrx0mJq4NZJSvCqhLcsUeyJ2RYdZkG7TYyyFcXHe5wTqjDpXSsVmNa"
        verdict = score_identifier(extract_features(
            cookie("IDE", value, days=730, domain="ads.tk.example")))
        assert verdict.score >= 0.9
        assert verdict.is_likely_identifier

    def test_cross_profile_distinct_is_decisive(self):
        features = IdentifierFeatures(
            value_length=8, entropy_bits_per_char=0.5, lifespan_seconds=None,
            cross_profile_distinct=True, charset_class=CharsetClass.ALPHA)
        verdict = score_identifier(features)
        assert verdict.is_likely_identifier
        assert verdict.triggered_features == ("cross_profile_distinct",)

    def test_values_shorter_than_four_chars_score_zero(self):
        features = IdentifierFeatures(3, 1.58, 10 ** 9, None, CharsetClass.MIXED)
        assert score_identifier(features).score == 0.0


def features_strategy():
    return st.builds(
        IdentifierFeatures,
        value_length=st.integers(0, 200),
        entropy_bits_per_char=st.floats(0, 6, allow_nan=False),
        lifespan_seconds=st.one_of(st.none(), st.integers(0, 10 ** 9)),
        cross_profile_distinct=st.one_of(st.none(), st.booleans()),
        charset_class=st.sampled_from(list(CharsetClass)),
    )


def _ordered_pair(f: IdentifierFeatures, bumps) -> IdentifierFeatures:
    lifespan = f.lifespan_seconds
    if bumps[2]:
        lifespan = (lifespan or 0) + bumps[2]
    distinct = f.cross_profile_distinct
    if bumps[3]:
        distinct = True
    return IdentifierFeatures(
        value_length=f.value_length + bumps[0],
        entropy_bits_per_char=f.entropy_bits_per_char + bumps[1],
        lifespan_seconds=lifespan,
        cross_profile_distinct=distinct,
        charset_class=f.charset_class,
    )


class TestScoringProperties:
    @settings(max_examples=300, deadline=None)
    @given(features_strategy(),
           st.tuples(st.integers(0, 50), st.floats(0, 3, allow_nan=False),
                     st.integers(0, 10 ** 8), st.booleans()))
    def test_score_monotone_in_each_feature(self, features, bumps):
        low = score_identifier(features)
        high = score_identifier(_ordered_pair(features, bumps))
        assert high.score >= low.score

    @settings(max_examples=100, deadline=None)
    @given(features_strategy())
    def test_deterministic(self, features):
        assert score_identifier(features) == score_identifier(features)

    @settings(max_examples=100, deadline=None)
    @given(features_strategy())
    def test_verdict_consistent_with_threshold(self, features):
        cfg = IdentifierConfig()
        verdict = score_identifier(features, cfg)
        assert verdict.is_likely_identifier == (verdict.score >= cfg.decision_threshold)


class TestConfigValidation:
    def test_bad_decision_threshold(self):
        with pytest.raises(ConfigError):
            IdentifierConfig(decision_threshold=1.5).validate()

    def test_bad_entropy_saturation(self):
        with pytest.raises(ConfigError):
            IdentifierConfig(entropy_saturation=9.0).validate()

    def test_all_zero_weights(self):
        with pytest.raises(ConfigError):
            IdentifierConfig(weight_length=0, weight_entropy=0,
                             weight_lifespan=0).validate()
