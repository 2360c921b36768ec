"""PET selection engine: trust model -> relevant principles -> candidate PET
families -> maturity-ranked shortlist.

The principle/PET-family mapping is shipped twice on purpose: once as an
editable JSON data file used at runtime, and once as the embedded copy below.
``check_mapping_file`` diffs the two so any drift in the data file is caught
by the ``table-check`` command and the acceptance suite.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

from .datamodel import (EntityRole, GdprPrinciple, Layer, PetFamily, TrustLevel,
                        TrustModel)
from .errors import InvalidParam, RuleFileError, UnknownPet

P = GdprPrinciple


class Strength(enum.Enum):
    STRONG = "strong"
    CONTEXT_DEPENDENT = "context_dependent"
    NONE = "none"


# (layer, family) rows in table order; absent principles mean Strength.NONE.
EMBEDDED_MAPPING: dict[tuple[Layer, PetFamily], dict[GdprPrinciple, Strength]] = {
    (Layer.PHYSICAL, PetFamily.ANONYMITY): {
        P.DM: Strength.STRONG,
    },
    (Layer.PHYSICAL, PetFamily.CRYPTOGRAPHY): {
        P.PL: Strength.STRONG, P.DM: Strength.STRONG, P.IC: Strength.STRONG,
    },
    (Layer.COMMUNICATION, PetFamily.ANONYMITY): {
        P.DM: Strength.STRONG,
    },
    (Layer.COMMUNICATION, PetFamily.AUTHENTICATION): {
        P.IC: Strength.STRONG, P.ACC: Strength.STRONG,
    },
    (Layer.COMMUNICATION, PetFamily.CRYPTOGRAPHY): {
        P.IC: Strength.STRONG,
    },
    (Layer.PROCESSING, PetFamily.ANONYMITY): {
        P.DM: Strength.STRONG,
    },
    (Layer.PROCESSING, PetFamily.CRYPTOGRAPHY): {
        P.LFT: Strength.CONTEXT_DEPENDENT, P.PL: Strength.STRONG,
        P.DM: Strength.STRONG, P.IC: Strength.STRONG,
    },
    (Layer.PROCESSING, PetFamily.TRACEABILITY): {
        P.LFT: Strength.CONTEXT_DEPENDENT, P.PL: Strength.CONTEXT_DEPENDENT,
        P.DM: Strength.STRONG, P.ACC: Strength.CONTEXT_DEPENDENT,
    },
    (Layer.STORAGE, PetFamily.CRYPTOGRAPHY): {
        P.PL: Strength.STRONG, P.DM: Strength.STRONG,
        P.SL: Strength.CONTEXT_DEPENDENT, P.IC: Strength.STRONG,
    },
    (Layer.STORAGE, PetFamily.IMMUTABILITY): {
        P.LFT: Strength.STRONG, P.IC: Strength.STRONG, P.ACC: Strength.STRONG,
    },
}

MAPPING_ROWS: tuple[tuple[Layer, PetFamily], ...] = tuple(EMBEDDED_MAPPING)


def full_cell(mapping, layer: Layer, family: PetFamily,
              principle: GdprPrinciple) -> Strength:
    return mapping[(layer, family)].get(principle, Strength.NONE)


def mapping_to_records(mapping) -> list[dict]:
    """Dense record list (one per row, all seven principle columns)."""
    out = []
    for (layer, family), cells in mapping.items():
        out.append({
            "layer": layer.value,
            "family": family.value,
            "cells": {p.value: cells.get(p, Strength.NONE).value
                      for p in GdprPrinciple},
        })
    return out


def load_mapping(path: str | Path) -> dict[tuple[Layer, PetFamily], dict[GdprPrinciple, Strength]]:
    try:
        records = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise RuleFileError(f"cannot load mapping file: {exc}") from exc
    mapping: dict[tuple[Layer, PetFamily], dict[GdprPrinciple, Strength]] = {}
    for rec in records:
        try:
            key = (Layer(rec["layer"]), PetFamily(rec["family"]))
            cells = {GdprPrinciple(p): Strength(s) for p, s in rec["cells"].items()}
        except (KeyError, ValueError, TypeError) as exc:
            raise RuleFileError(f"bad mapping record {rec!r}: {exc}") from exc
        mapping[key] = {p: s for p, s in cells.items() if s is not Strength.NONE}
    return mapping


def check_mapping(mapping) -> list[str]:
    """Cell-level differences against the embedded copy (empty = identical)."""
    diffs = []
    for row in set(EMBEDDED_MAPPING) | set(mapping):
        layer, family = row
        if row not in mapping:
            diffs.append(f"missing row {layer.value}/{family.value}")
            continue
        if row not in EMBEDDED_MAPPING:
            diffs.append(f"unexpected row {layer.value}/{family.value}")
            continue
        for p in GdprPrinciple:
            want = full_cell(EMBEDDED_MAPPING, layer, family, p)
            got = full_cell(mapping, layer, family, p)
            if want is not got:
                diffs.append(f"{layer.value}/{family.value} [{p.value}]: "
                             f"expected {want.value}, found {got.value}")
    return sorted(diffs)


def candidate_pet_families(principles, layer: Layer,
                           mapping=None) -> list[tuple[PetFamily, Strength]]:
    """Families whose row in the given layer has a check in any requested
    principle column, in table row order. A family hit by both a strong and a
    context-dependent check reports the stronger one, which keeps the result
    monotone in the principle set.
    """
    mapping = EMBEDDED_MAPPING if mapping is None else mapping
    wanted = set(principles)
    out: list[tuple[PetFamily, Strength]] = []
    for (row_layer, family), cells in mapping.items():
        if row_layer is not layer:
            continue
        strengths = [cells[p] for p in wanted if cells.get(p, Strength.NONE)
                     is not Strength.NONE]
        if not strengths:
            continue
        best = Strength.STRONG if Strength.STRONG in strengths \
            else Strength.CONTEXT_DEPENDENT
        out.append((family, best))
    return out


# ------------------------------------------------------------ principle rules

@dataclass(frozen=True)
class PrincipleAssessment:
    principle: GdprPrinciple
    relevance: str                  # "primary" | "secondary"
    accountability_required: bool


@dataclass(frozen=True)
class RelevanceRule:
    roles: frozenset[EntityRole]
    trust: frozenset[TrustLevel]
    set_primary: frozenset[GdprPrinciple]
    require_accountability: frozenset[GdprPrinciple]

    def matches(self, model: TrustModel) -> bool:
        return any(e.role in self.roles and e.trust in self.trust
                   for e in model.entities)


def load_relevance_rules(path: str | Path) -> list[RelevanceRule]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise RuleFileError(f"cannot load relevance rules: {exc}") from exc
    if not isinstance(doc, dict) or not doc.get("rules"):
        raise RuleFileError("relevance rule file has no rules")
    rules = []
    for rec in doc["rules"]:
        try:
            rules.append(RelevanceRule(
                roles=frozenset(EntityRole(r) for r in rec["match"]["roles"]),
                trust=frozenset(TrustLevel(t) for t in rec["match"]["trust"]),
                set_primary=frozenset(GdprPrinciple(p)
                                      for p in rec.get("set_primary", [])),
                require_accountability=frozenset(
                    GdprPrinciple(p) for p in rec.get("require_accountability", [])),
            ))
        except (KeyError, ValueError, TypeError) as exc:
            raise RuleFileError(f"bad relevance rule {rec!r}: {exc}") from exc
    return rules


def relevant_principles(trust_model: TrustModel,
                        rules: list[RelevanceRule]) -> list[PrincipleAssessment]:
    """One assessment per principle; every principle stays at least secondary."""
    primary: set[GdprPrinciple] = set()
    accountable: set[GdprPrinciple] = set()
    for rule in rules:
        if rule.matches(trust_model):
            primary |= rule.set_primary
            accountable |= rule.require_accountability
    return [PrincipleAssessment(p,
                                "primary" if p in primary else "secondary",
                                p in accountable)
            for p in GdprPrinciple]


# ------------------------------------------------------------ maturity ranking

@dataclass(frozen=True)
class MaturityRecord:
    pet_id: str
    utility: int
    scalability: int
    robustness: int
    low_power_suitability: int
    notes: str = ""

    def __post_init__(self):
        for name in ("utility", "scalability", "robustness", "low_power_suitability"):
            v = getattr(self, name)
            if not 1 <= v <= 5:
                raise InvalidParam(f"{self.pet_id}: {name} score {v} outside 1..5")

    def score(self, weights: tuple[float, float, float, float]) -> float:
        u, s, r, p = weights
        return (u * self.utility + s * self.scalability +
                r * self.robustness + p * self.low_power_suitability)


EQUAL_WEIGHTS = (0.25, 0.25, 0.25, 0.25)


def load_maturity(path: str | Path) -> dict[str, MaturityRecord]:
    records = json.loads(Path(path).read_text())
    out = {}
    for rec in records:
        m = MaturityRecord(rec["pet_id"], rec["utility"], rec["scalability"],
                           rec["robustness"], rec["low_power_suitability"],
                           rec.get("notes", ""))
        out[m.pet_id] = m
    return out


def rank_candidates(candidates, registry: dict[str, MaturityRecord],
                    weights=EQUAL_WEIGHTS) -> list[tuple[str, float]]:
    """Descending weighted maturity score; ties broken by pet id."""
    if abs(sum(weights) - 1.0) > 1e-9 or len(weights) != 4:
        raise InvalidParam("weights must be 4 values summing to 1")
    missing = [c for c in candidates if c not in registry]
    if missing:
        raise UnknownPet(f"no maturity record for {missing}")
    scored = [(pet, registry[pet].score(tuple(weights))) for pet in candidates]
    return sorted(scored, key=lambda t: (-t[1], t[0]))
