"""Identifier-likelihood scoring for stored elements.

Whether a stored string really is a user identifier cannot be decided with
certainty; this module scores likelihood from the classic measurement
features: value length, per-character entropy, lifespan, and cross-profile
distinctness (the same storage key carrying different values in two clean
profiles). Scores are deterministic and monotone in each feature.

Known limitations, surfaced in report metadata: the entropy estimate is
plain per-string Shannon entropy over character frequencies, and
localStorage entries have no expiry so their lifespan contributes nothing
(cross-profile distinctness is the decisive signal there).
"""

from __future__ import annotations

import math
import string
from collections import Counter
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError
from .session import CookieRecord, StorageEntry


def shannon_entropy(value: str) -> float:
    """Per-character Shannon entropy in bits; 0 for empty or single-char input."""
    if len(value) <= 1:
        return 0.0
    counts = Counter(value)
    n = len(value)
    return -sum((c / n) * math.log2(c / n) for c in counts.values())


class CharsetClass(Enum):
    ALPHA = "alpha"
    HEX = "hex"
    BASE64ISH = "base64ish"
    MIXED = "mixed"
    NUMERIC = "numeric"


_HEX_CHARS = set(string.hexdigits)
_B64_CHARS = set(string.ascii_letters + string.digits + "+/=-_")


def classify_charset(value: str) -> CharsetClass:
    if not value:
        return CharsetClass.MIXED
    chars = set(value)
    if all(c.isdigit() for c in chars):
        return CharsetClass.NUMERIC
    if all(c.isalpha() for c in chars):
        return CharsetClass.ALPHA
    if chars <= _HEX_CHARS:
        return CharsetClass.HEX
    if chars <= _B64_CHARS:
        return CharsetClass.BASE64ISH
    return CharsetClass.MIXED


@dataclass(frozen=True)
class IdentifierFeatures:
    value_length: int
    entropy_bits_per_char: float
    lifespan_seconds: int | None  # None: session cookie / no expiry semantics
    cross_profile_distinct: bool | None  # None: no twin profile available
    charset_class: CharsetClass


@dataclass(frozen=True)
class IdentifierVerdict:
    score: float
    is_likely_identifier: bool
    triggered_features: tuple[str, ...]


@dataclass(frozen=True)
class IdentifierConfig:
    """Scoring weights and saturation points; overridable from the audit config.

    A feature contributes its full weight at or above the saturation value
    and a proportional share below it. Cross-profile distinctness of a
    value of at least ``length_saturation`` chars is decisive on its own.
    """

    min_length: int = 4
    length_saturation: int = 8
    entropy_saturation: float = 2.5
    lifespan_saturation_days: float = 30.0
    weight_length: float = 0.35
    weight_entropy: float = 0.35
    weight_lifespan: float = 0.30
    decision_threshold: float = 0.75

    def validate(self) -> "IdentifierConfig":
        if self.min_length < 1:
            raise ConfigError("identifier.min_length must be >= 1")
        if self.length_saturation < self.min_length:
            raise ConfigError("identifier.length_saturation must be >= min_length")
        if not 0.0 < self.entropy_saturation <= 8.0:
            raise ConfigError("identifier.entropy_saturation must be in (0, 8]")
        if self.lifespan_saturation_days <= 0:
            raise ConfigError("identifier.lifespan_saturation_days must be positive")
        weights = (self.weight_length, self.weight_entropy, self.weight_lifespan)
        if any(w < 0 for w in weights) or not sum(weights):
            raise ConfigError("identifier weights must be non-negative, not all zero")
        if not 0.0 < self.decision_threshold <= 1.0:
            raise ConfigError("identifier.decision_threshold must be in (0, 1]")
        return self


def extract_features(
    element: CookieRecord | StorageEntry,
    twin: CookieRecord | StorageEntry | None = None,
) -> IdentifierFeatures:
    """Features of a stored element, optionally against its twin-profile copy.

    The twin must be the same storage key captured in a second clean
    profile: same (domain, name) for cookies, same (origin, key) for
    localStorage entries.
    """
    if isinstance(element, CookieRecord):
        value = element.value
        lifespan = element.lifespan_seconds
        key = (element.domain, element.name)
        twin_key = (twin.domain, twin.name) if isinstance(twin, CookieRecord) else None
    else:
        value = element.value
        lifespan = None
        key = (element.origin, element.key)
        twin_key = (twin.origin, twin.key) if isinstance(twin, StorageEntry) else None

    distinct: bool | None = None
    if twin is not None:
        if twin_key != key:
            raise ValueError(f"twin {twin_key} does not match element {key}")
        distinct = twin.value != value

    return IdentifierFeatures(
        value_length=len(value),
        entropy_bits_per_char=shannon_entropy(value),
        lifespan_seconds=lifespan,
        cross_profile_distinct=distinct,
        charset_class=classify_charset(value),
    )


def _ramp(value: float, saturation: float) -> float:
    if saturation <= 0:
        return 1.0
    return max(0.0, min(1.0, value / saturation))


def score_identifier(features: IdentifierFeatures,
                     cfg: IdentifierConfig | None = None) -> IdentifierVerdict:
    """Deterministic identifier-likelihood score in [0, 1]."""
    cfg = (cfg or IdentifierConfig()).validate()

    decisive = bool(features.cross_profile_distinct) and \
        features.value_length >= cfg.length_saturation
    if decisive:
        return IdentifierVerdict(1.0, True, ("cross_profile_distinct",))

    if features.value_length < cfg.min_length:
        return IdentifierVerdict(0.0, False, ())

    length_part = _ramp(features.value_length - cfg.min_length,
                        cfg.length_saturation - cfg.min_length)
    entropy_part = _ramp(features.entropy_bits_per_char, cfg.entropy_saturation)
    if features.lifespan_seconds is None:
        lifespan_part = 0.0
    else:
        lifespan_part = _ramp(features.lifespan_seconds,
                              cfg.lifespan_saturation_days * 86400.0)

    total_weight = cfg.weight_length + cfg.weight_entropy + cfg.weight_lifespan
    score = (cfg.weight_length * length_part
             + cfg.weight_entropy * entropy_part
             + cfg.weight_lifespan * lifespan_part) / total_weight

    triggered = []
    if features.value_length >= cfg.length_saturation:
        triggered.append("length")
    if features.entropy_bits_per_char >= cfg.entropy_saturation:
        triggered.append("entropy")
    if features.lifespan_seconds is not None and \
            features.lifespan_seconds >= cfg.lifespan_saturation_days * 86400.0:
        triggered.append("lifespan")

    return IdentifierVerdict(
        score=round(score, 6),
        is_likely_identifier=score >= cfg.decision_threshold,
        triggered_features=tuple(triggered),
    )
