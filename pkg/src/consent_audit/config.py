"""Audit configuration: TOML file loading and check-context assembly.

Every referenced data file is loaded and parsed at startup so that a bad
setup fails before any session is read; the digest of the config and all
referenced files is recorded into reports for reproducibility. Bundled
seed data is used for anything not configured.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import tomli

from .checks import CheckContext, load_lexicon, load_selector_rules
from .errors import AuditError, ConfigError
from .identifiers import IdentifierConfig
from .requirements import LIFESPAN_PROFILES
from .taxonomy import CookieManifest, PurposeClassifier, SuffixRules, load_tracker_list

_DATA_DEFAULTS = {
    "tracker_list": "tracker_seed.txt",
    "suffix_rules": "suffix_rules.dat",
    "selector_rules": "selector_rules.txt",
    "lexicon": "lexicon_en.txt",
    "manifest": "manifest_seed.json",
}


@dataclass
class AuditConfig:
    dpa_profile: str = "cnil"
    strict_unknown: bool = False
    wall_area_threshold: float = 0.5
    identifier: IdentifierConfig = field(default_factory=IdentifierConfig)
    paths: dict[str, Path | None] = field(
        default_factory=lambda: {k: None for k in _DATA_DEFAULTS})
    digest: str = "defaults"

    def validate(self) -> "AuditConfig":
        if self.dpa_profile not in LIFESPAN_PROFILES:
            raise ConfigError(
                f"unknown dpa_profile {self.dpa_profile!r}; "
                f"expected one of {sorted(LIFESPAN_PROFILES)}")
        if not 0.0 < self.wall_area_threshold <= 1.0:
            raise ConfigError("wall_area_threshold must be in (0, 1]")
        self.identifier.validate()
        for key, path in self.paths.items():
            if path is not None and not path.is_file():
                raise ConfigError(f"configured {key} file does not exist: {path}")
        return self


def _read_data(key: str, override: Path | None) -> str:
    if override is not None:
        return override.read_text(encoding="utf-8")
    return resources.files("consent_audit.data").joinpath(
        _DATA_DEFAULTS[key]).read_text(encoding="utf-8")


def load_config(path: Path | None) -> AuditConfig:
    """Parse the TOML audit config; None loads pure defaults."""
    if path is None:
        return AuditConfig().validate()
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = path.read_bytes()
    try:
        doc = tomli.loads(raw.decode("utf-8"))
    except (tomli.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}")

    audit = doc.get("audit", {})
    identifier_doc = doc.get("identifier", {})
    try:
        identifier = IdentifierConfig(**identifier_doc)
    except TypeError as exc:
        raise ConfigError(f"[identifier] section: {exc}")

    paths: dict[str, Path | None] = {k: None for k in _DATA_DEFAULTS}
    for key, value in doc.get("paths", {}).items():
        if key not in _DATA_DEFAULTS:
            raise ConfigError(f"[paths] has no key named {key!r}")
        paths[key] = (path.parent / value).resolve()

    digest = hashlib.sha256(raw)
    for key in sorted(_DATA_DEFAULTS):
        try:
            digest.update(_read_data(key, paths[key]).encode("utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read configured {key} file: {exc}")

    cfg = AuditConfig(
        dpa_profile=str(audit.get("dpa_profile", "cnil")),
        strict_unknown=bool(audit.get("strict_unknown", False)),
        wall_area_threshold=float(audit.get("wall_area_threshold", 0.5)),
        identifier=identifier,
        paths=paths,
        digest=digest.hexdigest(),
    )
    return cfg.validate()


def build_context(cfg: AuditConfig) -> CheckContext:
    """Load all referenced data files and assemble the checker context."""
    try:
        suffix_rules = SuffixRules.parse(_read_data("suffix_rules", cfg.paths["suffix_rules"]))
        trackers = load_tracker_list(_read_data("tracker_list", cfg.paths["tracker_list"]))
        manifest = CookieManifest.parse(_read_data("manifest", cfg.paths["manifest"]))
        selectors = load_selector_rules(
            _read_data("selector_rules", cfg.paths["selector_rules"]))
        lexicon = load_lexicon(_read_data("lexicon", cfg.paths["lexicon"]))
    except AuditError as exc:
        raise ConfigError(f"failed to load audit data: {exc}")
    return CheckContext(
        classifier=PurposeClassifier(manifest, trackers, suffix_rules),
        identifier_cfg=cfg.identifier,
        lifespan_profile=LIFESPAN_PROFILES[cfg.dpa_profile],
        strict_unknown=cfg.strict_unknown,
        wall_area_threshold=cfg.wall_area_threshold,
        banner_selectors=selectors,
        lexicon=lexicon,
    )
