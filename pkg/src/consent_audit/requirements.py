"""The requirement registry: 22 low-level consent requirements.

Loaded from ``data/requirements.json``; each entry carries the high-level
group, how the requirement can be assessed (technically, manually, by user
study, a mix, or not at all), the normative statement shown to operators
as a checklist prompt, and per-DPA positioning used as report metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources


class RequirementGroup(Enum):
    PRIOR = "Prior"
    FREE = "Free"
    SPECIFIC = "Specific"
    INFORMED = "Informed"
    UNAMBIGUOUS = "Unambiguous"
    READABLE_ACCESSIBLE = "Readable and accessible"
    REVOCABLE = "Revocable"


class Assessment(Enum):
    TECHNICAL = "Technical"
    MANUAL = "Manual"
    USER_STUDY = "UserStudy"
    MIXED = "Mixed"
    NOT_POSSIBLE = "NotPossible"


class Outcome(Enum):
    COMPLIANT = "compliant"
    VIOLATION = "violation"
    INCONCLUSIVE = "inconclusive"
    MANUAL_PENDING = "manual_pending"
    USER_STUDY_PENDING = "user_study_pending"
    NOT_ASSESSABLE = "not_assessable"


#: Outcomes the automated pass may emit, per assessment mode. Manual and
#: user-study requirements only ever become decided through operator answers.
ALLOWED_AUTO_OUTCOMES = {
    Assessment.TECHNICAL: frozenset({
        Outcome.COMPLIANT, Outcome.VIOLATION, Outcome.INCONCLUSIVE}),
    Assessment.MIXED: frozenset({
        Outcome.COMPLIANT, Outcome.VIOLATION, Outcome.INCONCLUSIVE,
        Outcome.MANUAL_PENDING}),
    Assessment.MANUAL: frozenset({Outcome.MANUAL_PENDING}),
    Assessment.USER_STUDY: frozenset({Outcome.USER_STUDY_PENDING}),
    Assessment.NOT_POSSIBLE: frozenset({Outcome.NOT_ASSESSABLE}),
}

#: Outcomes an operator answer may set (merge replaces pending outcomes only).
OPERATOR_OUTCOMES = frozenset({
    Outcome.COMPLIANT, Outcome.VIOLATION, Outcome.INCONCLUSIVE})


@dataclass(frozen=True)
class Requirement:
    id: str
    group: RequirementGroup
    title: str
    assessment: Assessment
    assessment_text: str
    binding: bool
    non_binding: bool
    interpretation: str | None  # 'L', 'CS' or None
    requirement_text: str
    violation_text: str
    legal_basis: str
    dpa_positions: dict[str, str]

    def allows_auto(self, outcome: Outcome) -> bool:
        return outcome in ALLOWED_AUTO_OUTCOMES[self.assessment]


@lru_cache(maxsize=1)
def registry() -> tuple[Requirement, ...]:
    raw = resources.files("consent_audit.data").joinpath("requirements.json").read_text()
    doc = json.loads(raw)
    out = []
    for row in doc["requirements"]:
        out.append(Requirement(
            id=row["id"],
            group=RequirementGroup(row["group"]),
            title=row["title"],
            assessment=Assessment(row["assessment"]),
            assessment_text=row["assessment_text"],
            binding=row["binding"],
            non_binding=row["non_binding"],
            interpretation=row["interpretation"],
            requirement_text=row["requirement_text"],
            violation_text=row["violation_text"],
            legal_basis=row["legal_basis"],
            dpa_positions=dict(row["dpa_positions"]),
        ))
    if len(out) != 22:
        raise ValueError(f"requirement registry must have 22 rows, found {len(out)}")
    return tuple(out)


def by_id(requirement_id: str) -> Requirement:
    for requirement in registry():
        if requirement.id == requirement_id:
            return requirement
    raise KeyError(requirement_id)


ALL_IDS = tuple(f"R{i}" for i in range(1, 23))

GROUP_ORDER = (
    RequirementGroup.PRIOR,
    RequirementGroup.FREE,
    RequirementGroup.SPECIFIC,
    RequirementGroup.INFORMED,
    RequirementGroup.UNAMBIGUOUS,
    RequirementGroup.READABLE_ACCESSIBLE,
    RequirementGroup.REVOCABLE,
)


@dataclass(frozen=True)
class LifespanProfile:
    """Jurisdiction limits on tracker and consent-storage lifetimes (days)."""

    name: str
    analytics_max_days: int | None = None
    consent_storage_max_days: int | None = None


#: Bundled profiles. The French profile limits analytics trackers to
#: thirteen months and the stored choice to six months; the Spanish,
#: Danish and Irish ones only constrain how long the user's choice may be
#: kept before the consent request must be renewed.
LIFESPAN_PROFILES = {
    "cnil": LifespanProfile("cnil", analytics_max_days=395, consent_storage_max_days=180),
    "spanish": LifespanProfile("spanish", consent_storage_max_days=730),
    "danish": LifespanProfile("danish", consent_storage_max_days=1825),
    "irish": LifespanProfile("irish", consent_storage_max_days=180),
}
