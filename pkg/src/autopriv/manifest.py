"""App manifests: parsing with a closed schema, serialization, threat reports.

The manifest format is UTF-8 JSON with exactly the documented keys; unknown
keys anywhere are rejected so a typo cannot silently weaken a constraint.
See README for the schema and ``fixtures/manifests`` for golden examples.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field

from .datamodel import Classification, DataCatalog
from .errors import CatalogError, ManifestSyntaxError, SchemaError

_APP_ID_RE = re.compile(r"^[a-z0-9]+(\.[a-z0-9_\-]+)+$")
_SEMVER_RE = re.compile(r"^\d+\.\d+\.\d+(-[0-9A-Za-z.\-]+)?$")

_TOP_KEYS = {"app_id", "version", "provider_id", "purposes", "data_requirements"}
_REQ_KEYS = {"type_id", "access_mode", "supported_pets", "constraints", "computation"}
_REQ_REQUIRED = {"type_id", "access_mode", "supported_pets", "constraints"}
_CONSTRAINT_KEYS = {"max_staleness_s", "min_precision", "rate_hz"}
_COMPUTATION_KEYS = {"aggregate", "window_s"}
_AGGREGATES = {"mean", "min", "max", "count"}


class AccessMode(enum.Enum):
    DIRECT = "direct"
    PET_MEDIATED = "pet_mediated"
    COMPUTED = "computed"
    COMBINED = "combined"


class Severity(enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


@dataclass(frozen=True)
class Computation:
    aggregate: str
    window_s: float


@dataclass(frozen=True)
class Constraints:
    max_staleness_s: float
    min_precision: float
    rate_hz: float


@dataclass(frozen=True)
class DataRequirement:
    type_id: str
    access_mode: AccessMode
    supported_pets: tuple[str, ...]
    constraints: Constraints
    computation: Computation | None = None


@dataclass(frozen=True)
class AppManifest:
    app_id: str
    version: str
    provider_id: str
    purposes: tuple[str, ...]
    data_requirements: tuple[DataRequirement, ...]


@dataclass(frozen=True)
class ThreatEntry:
    type_id: str
    classification: Classification
    access_mode: AccessMode
    threat_texts: tuple[str, ...]
    severity: Severity


@dataclass(frozen=True)
class ThreatReport:
    app_id: str
    entries: tuple[ThreatEntry, ...] = field(default_factory=tuple)


def _expect(cond: bool, message: str) -> None:
    if not cond:
        raise SchemaError(message)


def _number(doc: dict, key: str, minimum=None, strict=False) -> float:
    v = doc.get(key)
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool),
            f"constraint {key!r} must be a number")
    v = float(v)
    if minimum is not None:
        if strict:
            _expect(v > minimum, f"constraint {key!r} must be > {minimum}")
        else:
            _expect(v >= minimum, f"constraint {key!r} must be >= {minimum}")
    return v


def parse_manifest(text: str | bytes, catalog: DataCatalog,
                   pet_registry=None) -> AppManifest:
    """Parse and validate a manifest document against the closed schema.

    Raises ManifestSyntaxError for malformed JSON, SchemaError for shape or
    invariant violations, CatalogError for unknown data types or PETs.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ManifestSyntaxError(f"manifest is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestSyntaxError(f"manifest is not valid JSON: {exc}") from exc
    _expect(isinstance(doc, dict), "manifest must be a JSON object")
    extra = set(doc) - _TOP_KEYS
    _expect(not extra, f"unknown manifest keys: {sorted(extra)}")
    missing = _TOP_KEYS - set(doc)
    _expect(not missing, f"missing manifest keys: {sorted(missing)}")

    app_id = doc["app_id"]
    _expect(isinstance(app_id, str) and bool(_APP_ID_RE.match(app_id)),
            "app_id must be a reverse-dns string")
    version = doc["version"]
    _expect(isinstance(version, str) and bool(_SEMVER_RE.match(version)),
            "version must be a semver string")
    provider = doc["provider_id"]
    _expect(isinstance(provider, str) and provider != "", "provider_id must be a non-empty string")
    purposes = doc["purposes"]
    _expect(isinstance(purposes, list) and purposes and
            all(isinstance(p, str) and p for p in purposes),
            "purposes must be a non-empty list of strings")

    reqs_doc = doc["data_requirements"]
    _expect(isinstance(reqs_doc, list), "data_requirements must be a list")
    requirements = []
    for rec in reqs_doc:
        _expect(isinstance(rec, dict), "data requirement must be an object")
        extra = set(rec) - _REQ_KEYS
        _expect(not extra, f"unknown requirement keys: {sorted(extra)}")
        missing = _REQ_REQUIRED - set(rec)
        _expect(not missing, f"missing requirement keys: {sorted(missing)}")

        type_id = rec["type_id"]
        _expect(isinstance(type_id, str), "type_id must be a string")
        if type_id not in catalog:
            raise CatalogError(f"unknown data type {type_id!r}")
        try:
            mode = AccessMode(rec["access_mode"])
        except ValueError:
            raise SchemaError(f"unknown access_mode {rec['access_mode']!r}") from None

        pets = rec["supported_pets"]
        _expect(isinstance(pets, list) and all(isinstance(p, str) for p in pets),
                "supported_pets must be a list of PET ids")
        if pet_registry is not None:
            for pet in pets:
                if pet not in pet_registry:
                    raise CatalogError(f"unknown PET {pet!r}")
        if mode in (AccessMode.PET_MEDIATED, AccessMode.COMBINED):
            _expect(len(pets) > 0, f"{mode.value} requires supported_pets")

        cons_doc = rec["constraints"]
        _expect(isinstance(cons_doc, dict), "constraints must be an object")
        _expect(set(cons_doc) == _CONSTRAINT_KEYS,
                f"constraints must have exactly keys {sorted(_CONSTRAINT_KEYS)}")
        constraints = Constraints(
            max_staleness_s=_number(cons_doc, "max_staleness_s", 0, strict=True),
            min_precision=_number(cons_doc, "min_precision", 0, strict=True),
            rate_hz=_number(cons_doc, "rate_hz", 0),
        )

        computation = None
        if mode in (AccessMode.COMPUTED, AccessMode.COMBINED):
            _expect("computation" in rec, f"{mode.value} requires a computation")
        if "computation" in rec:
            _expect(mode in (AccessMode.COMPUTED, AccessMode.COMBINED),
                    "computation only allowed for computed/combined modes")
            comp_doc = rec["computation"]
            _expect(isinstance(comp_doc, dict) and set(comp_doc) == _COMPUTATION_KEYS,
                    f"computation must have exactly keys {sorted(_COMPUTATION_KEYS)}")
            _expect(comp_doc["aggregate"] in _AGGREGATES,
                    f"aggregate must be one of {sorted(_AGGREGATES)}")
            computation = Computation(comp_doc["aggregate"],
                                      _number(comp_doc, "window_s", 0, strict=True))

        requirements.append(DataRequirement(type_id, mode, tuple(pets),
                                            constraints, computation))

    return AppManifest(app_id, version, provider, tuple(purposes),
                       tuple(requirements))


def serialize_manifest(manifest: AppManifest) -> str:
    """Canonical JSON form; parse_manifest on the result is the identity."""
    doc = {
        "app_id": manifest.app_id,
        "version": manifest.version,
        "provider_id": manifest.provider_id,
        "purposes": list(manifest.purposes),
        "data_requirements": [],
    }
    for req in manifest.data_requirements:
        rec = {
            "type_id": req.type_id,
            "access_mode": req.access_mode.value,
            "supported_pets": list(req.supported_pets),
            "constraints": {
                "max_staleness_s": req.constraints.max_staleness_s,
                "min_precision": req.constraints.min_precision,
                "rate_hz": req.constraints.rate_hz,
            },
        }
        if req.computation is not None:
            rec["computation"] = {"aggregate": req.computation.aggregate,
                                  "window_s": req.computation.window_s}
        doc["data_requirements"].append(rec)
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


# ------------------------------------------------------------- threat report

def _load_threat_table(threat_rules: dict) -> dict[tuple[Classification, AccessMode],
                                                   tuple[Severity, tuple[str, ...]]]:
    table = {}
    for rec in threat_rules["rules"]:
        key = (Classification(rec["classification"]), AccessMode(rec["access_mode"]))
        table[key] = (Severity(rec["severity"]), tuple(rec["threats"]))
    for c in Classification:
        for m in AccessMode:
            if (c, m) not in table:
                raise SchemaError(f"threat table missing cell ({c.value}, {m.value})")
    # non-negotiable floor: raw access to sensitive data is always high severity
    sev, _ = table[(Classification.SENSITIVE_PERSONAL, AccessMode.DIRECT)]
    if sev is not Severity.HIGH:
        raise SchemaError("sensitive_personal/direct must be high severity")
    return table


def derive_threats(manifest: AppManifest, catalog: DataCatalog,
                   threat_rules: dict) -> ThreatReport:
    """Deterministic install-time threat summary, one entry per requirement."""
    table = _load_threat_table(threat_rules)
    entries = []
    for req in manifest.data_requirements:
        classification = catalog.get(req.type_id).classification
        severity, texts = table[(classification, req.access_mode)]
        entries.append(ThreatEntry(req.type_id, classification, req.access_mode,
                                   texts, severity))
    return ThreatReport(manifest.app_id, tuple(entries))
