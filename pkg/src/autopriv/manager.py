"""The in-vehicle privacy manager.

Turns an installed manifest plus the PET selection ranking into per-type
privacy rules, mediates every data access through one of four modes (direct,
PET-mediated, computed, combined), composes the encrypt-last pipeline for
stored items, and keeps the append-only disclosure ledger.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .datamodel import (Classification, DataCatalog, DataItem, GeoPoint,
                        PayloadKind, Scalar, TrustModel, canonical_encode)
from .errors import (DeniedByPolicy, InvalidParam, NoViablePet, PipelineError,
                     RateLimited, SchemaError, StaleData)
from .geometry import ConvexPolygon, regular_polygon
from .manifest import (AccessMode, AppManifest, Computation, DataRequirement,
                       ThreatReport, derive_threats)
from .pets.mechanisms import (laplace_scalar, planar_isotropic, planar_laplace,
                              round_location)
from .pets.pbe import AuthorityHandle, pbe_encrypt
from .pets.policy import parse_policy, policy_text
from .uplink import StoredItem

ENCRYPT_STAGE = "pbe"

# payload-applicable PETs per payload kind; selection ranks within these
_GEO_PETS = ("planar_isotropic", "planar_laplace", "round_location")
_SCALAR_PETS = ("laplace_scalar",)


@dataclass(frozen=True)
class PipelineStage:
    pet_id: str
    params: dict

    def canonical(self) -> str:
        return json.dumps({"pet_id": self.pet_id, "params": self.params},
                          sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class PrivacyRule:
    app_id: str
    type_id: str
    access_mode: AccessMode
    pipeline: tuple[PipelineStage, ...]
    policy: str
    max_rate_hz: float
    max_staleness_s: float
    epsilon_per_disclosure: float
    computation: Computation | None = None
    # how the PET was chosen, kept on the rule for auditability
    selection_basis: str = ""

    def __post_init__(self):
        if self.access_mode is AccessMode.DIRECT and self.pipeline:
            raise PipelineError("direct rules carry no pipeline")
        if self.access_mode in (AccessMode.PET_MEDIATED, AccessMode.COMBINED) \
                and not self.pipeline:
            raise PipelineError(f"{self.access_mode.value} rules need a pipeline")
        if self.pipeline and self.pipeline[-1].pet_id != ENCRYPT_STAGE:
            raise PipelineError("stored pipelines must terminate in purpose-bound encryption")
        if self.epsilon_per_disclosure < 0:
            raise InvalidParam("epsilon_per_disclosure must be >= 0")

    @property
    def pet_stages(self) -> tuple[PipelineStage, ...]:
        return self.pipeline[:-1] if self.pipeline else ()

    @property
    def primary_pet(self) -> str:
        return self.pet_stages[0].pet_id if self.pet_stages else (
            ENCRYPT_STAGE if self.pipeline else "none")

    def params_digest(self) -> bytes:
        text = "|".join(s.canonical() for s in self.pipeline) + "|" + self.policy
        return hashlib.sha256(text.encode()).digest()


@dataclass(frozen=True)
class Disclosure:
    timestamp_ms: int
    app_id: str
    type_id: str
    epsilon: float


class PrivacyLedger:
    """Ordered disclosure record with sequential-composition accounting."""

    def __init__(self) -> None:
        self.disclosures: list[Disclosure] = []
        self._cumulative: dict[tuple[str, str], float] = {}

    def record(self, timestamp_ms: int, app_id: str, type_id: str,
               epsilon: float) -> Disclosure:
        if epsilon < 0:
            raise InvalidParam("disclosure epsilon must be >= 0")
        d = Disclosure(timestamp_ms, app_id, type_id, epsilon)
        self.disclosures.append(d)
        key = (app_id, type_id)
        self._cumulative[key] = self._cumulative.get(key, 0.0) + epsilon
        return d

    def cumulative_epsilon(self, app_id: str, type_id: str) -> float:
        return self._cumulative.get((app_id, type_id), 0.0)

    def series(self, app_id: str, type_id: str) -> list[dict]:
        """Per-disclosure running sum for the given (app, type)."""
        out = []
        running = 0.0
        for d in self.disclosures:
            if d.app_id == app_id and d.type_id == type_id:
                running += d.epsilon
                out.append({"timestamp_ms": d.timestamp_ms, "epsilon": d.epsilon,
                            "cumulative_epsilon": running})
        return out

    def __len__(self) -> int:
        return len(self.disclosures)


@dataclass(frozen=True)
class MediatedResponse:
    access_mode: AccessMode
    item: DataItem | None = None
    value: float | None = None
    epsilon_spent: float = 0.0


@dataclass(frozen=True)
class RuleConfig:
    """Knobs for rule generation; defaults mirror the shipped presets file."""

    epsilon_multiplier: float = 1.0
    consent_overrides: frozenset[tuple[str, str]] = field(default_factory=frozenset)
    scalar_sensitivity: dict = field(default_factory=dict)
    default_scalar_sensitivity: float = 1.0
    hull_vertices: int = 16

    @classmethod
    def from_presets(cls, presets: dict, preset_name: str | None = None,
                     consent_overrides=()) -> "RuleConfig":
        name = preset_name or presets.get("default_preset", "medium")
        try:
            mult = presets["epsilon_presets"][name]
        except KeyError:
            raise InvalidParam(f"unknown epsilon preset {name!r}") from None
        return cls(epsilon_multiplier=mult,
                   consent_overrides=frozenset(tuple(p) for p in consent_overrides),
                   scalar_sensitivity=presets.get("scalar_sensitivity", {}),
                   default_scalar_sensitivity=presets.get("default_scalar_sensitivity", 1.0),
                   hull_vertices=presets.get("default_hull_vertices", 16))


def epsilon_from_precision(min_precision: float) -> float:
    """Epsilon whose mean planar-Laplace displacement equals the precision."""
    if min_precision <= 0:
        raise InvalidParam("min_precision must be positive")
    return 2.0 / min_precision


def default_hull(vertices: int = 16) -> ConvexPolygon:
    """Regular polygon inscribed in the unit disc, the no-prior-knowledge hull."""
    return regular_polygon(vertices, 1.0)


def _purpose_policy(purposes) -> str:
    return policy_text(" AND ".join(f"purpose:{p}" for p in purposes))


def _choose_pet(req: DataRequirement, ranked: list[tuple[str, float]],
                payload_kind: PayloadKind) -> str:
    applicable = _GEO_PETS if payload_kind is PayloadKind.GEO_POINT else _SCALAR_PETS
    supported = [p for p in req.supported_pets if p in applicable]
    for pet_id, _score in ranked:
        if pet_id in supported:
            return pet_id
    raise NoViablePet(
        f"{req.type_id}: no overlap between supported PETs {list(req.supported_pets)} "
        f"and ranked candidates {[p for p, _ in ranked]}")


def _obfuscation_stage(pet_id: str, req: DataRequirement, config: RuleConfig) -> \
        tuple[PipelineStage, float]:
    """Build the noise/generalization stage and its per-disclosure epsilon."""
    precision = req.constraints.min_precision
    if pet_id == "planar_laplace":
        eps = epsilon_from_precision(precision) * config.epsilon_multiplier
        return PipelineStage(pet_id, {"epsilon": eps}), eps
    if pet_id == "planar_isotropic":
        eps = epsilon_from_precision(precision) * config.epsilon_multiplier
        hull = default_hull(config.hull_vertices)
        return PipelineStage(pet_id, {"epsilon": eps, "hull": hull.to_list()}), eps
    if pet_id == "laplace_scalar":
        sens = config.scalar_sensitivity.get(req.type_id,
                                             config.default_scalar_sensitivity)
        eps = sens / precision * config.epsilon_multiplier
        return PipelineStage(pet_id, {"epsilon": eps, "sensitivity": sens}), eps
    if pet_id == "round_location":
        return PipelineStage(pet_id, {"grid_m": precision}), 0.0
    raise NoViablePet(f"no parameterization for PET {pet_id!r}")


def generate_rules(manifest: AppManifest, selection: dict | list,
                   config: RuleConfig, catalog: DataCatalog) -> list[PrivacyRule]:
    """One privacy rule per data requirement; pure in all arguments.

    ``selection`` is the maturity-ranked candidate list, either one list for
    all types or a mapping type_id -> ranked list.
    """
    policy = _purpose_policy(manifest.purposes)
    rules = []
    for req in manifest.data_requirements:
        descriptor = catalog.get(req.type_id)
        ranked = selection.get(req.type_id, []) if isinstance(selection, dict) \
            else list(selection)
        mode = req.access_mode

        if mode is AccessMode.DIRECT:
            if descriptor.classification is not Classification.TECHNICAL and \
                    (manifest.app_id, req.type_id) not in config.consent_overrides:
                raise DeniedByPolicy(
                    f"direct access to {descriptor.classification.value} type "
                    f"{req.type_id!r} requires an explicit consent override")
            rules.append(PrivacyRule(manifest.app_id, req.type_id, mode, (),
                                     policy, req.constraints.rate_hz,
                                     req.constraints.max_staleness_s, 0.0))
            continue

        if mode in (AccessMode.COMPUTED, AccessMode.COMBINED):
            if descriptor.payload_kind is not PayloadKind.SCALAR:
                raise SchemaError(
                    f"{req.type_id}: computed modes need a scalar data type")

        if mode is AccessMode.COMPUTED:
            rules.append(PrivacyRule(manifest.app_id, req.type_id, mode, (),
                                     policy, req.constraints.rate_hz,
                                     req.constraints.max_staleness_s, 0.0,
                                     computation=req.computation))
            continue

        pet_id = _choose_pet(req, ranked, descriptor.payload_kind)
        stage, eps = _obfuscation_stage(pet_id, req, config)
        pipeline = (stage, PipelineStage(ENCRYPT_STAGE, {"policy": policy}))
        rules.append(PrivacyRule(manifest.app_id, req.type_id, mode, pipeline,
                                 policy, req.constraints.rate_hz,
                                 req.constraints.max_staleness_s, eps,
                                 computation=req.computation,
                                 selection_basis="maturity_rank"))
    return rules


# -------------------------------------------------------------- transformation

def apply_pet_stages(item: DataItem, stages, rng: np.random.Generator) -> DataItem:
    """Apply the non-encryption pipeline stages left to right."""
    payload = item.payload
    for stage in stages:
        params = stage.params
        if stage.pet_id == "planar_laplace" and isinstance(payload, GeoPoint):
            payload = planar_laplace(payload, params["epsilon"], rng)
        elif stage.pet_id == "planar_isotropic" and isinstance(payload, GeoPoint):
            hull = ConvexPolygon(params["hull"])
            payload = planar_isotropic(payload, params["epsilon"], hull, rng)
        elif stage.pet_id == "round_location" and isinstance(payload, GeoPoint):
            payload = round_location(payload, params["grid_m"])
        elif stage.pet_id == "laplace_scalar" and isinstance(payload, Scalar):
            payload = Scalar(laplace_scalar(payload.value, params["sensitivity"],
                                            params["epsilon"], rng))
        else:
            raise PipelineError(
                f"stage {stage.pet_id!r} cannot be applied to {type(payload).__name__}")
    return DataItem(item.type_id, item.timestamp_ms, payload, item.source)


def compose_stored_item(rule: PrivacyRule, item: DataItem,
                        handle: AuthorityHandle, rng: np.random.Generator) -> StoredItem:
    """Encrypt-last composition: ciphertext of the canonical PET output."""
    if not rule.pipeline or rule.pipeline[-1].pet_id != ENCRYPT_STAGE:
        raise PipelineError("pipeline must terminate in purpose-bound encryption")
    transformed = apply_pet_stages(item, rule.pet_stages, rng)
    ct = pbe_encrypt(handle, rule.policy, canonical_encode(transformed), rng)
    return StoredItem(ciphertext=ct.to_bytes(), pet_id=rule.primary_pet,
                      params_digest=rule.params_digest(),
                      timestamp_ms=item.timestamp_ms)


# ------------------------------------------------------------------ mediation

class RateLimiter:
    """Per-key token bucket of size one, deterministic under simulated time."""

    def __init__(self) -> None:
        self._last_grant_ms: dict[tuple[str, str], int] = {}

    def check(self, key: tuple[str, str], now_ms: int, rate_hz: float) -> None:
        if rate_hz <= 0:
            return
        interval_ms = 1000.0 / rate_hz
        last = self._last_grant_ms.get(key)
        if last is not None and now_ms - last < interval_ms:
            raise RateLimited(f"{key}: next request allowed at "
                              f"{last + interval_ms:.0f} ms")

    def grant(self, key: tuple[str, str], now_ms: int) -> None:
        self._last_grant_ms[key] = now_ms


def _fresh_items(items, now_ms: int, max_staleness_s: float) -> list[DataItem]:
    horizon = now_ms - max_staleness_s * 1000.0
    return [i for i in items if i.timestamp_ms >= horizon]


def _aggregate(comp: Computation, items, now_ms: int) -> float:
    window_start = now_ms - comp.window_s * 1000.0
    values = [i.payload.value for i in items
              if i.timestamp_ms >= window_start and isinstance(i.payload, Scalar)]
    if not values:
        raise StaleData("no samples inside the computation window")
    if comp.aggregate == "mean":
        return float(np.mean(values))
    if comp.aggregate == "min":
        return float(min(values))
    if comp.aggregate == "max":
        return float(max(values))
    return float(len(values))   # count


def mediate(rule: PrivacyRule, items, now_ms: int, rng: np.random.Generator,
            ledger: PrivacyLedger | None = None,
            limiter: RateLimiter | None = None) -> MediatedResponse:
    """Run one access through the rule's mode.

    ``items`` are the latest matching readings, oldest first. Raw payloads
    leave this function only for direct-mode rules.
    """
    key = (rule.app_id, rule.type_id)
    if limiter is not None:
        limiter.check(key, now_ms, rule.max_rate_hz)

    fresh = _fresh_items(items, now_ms, rule.max_staleness_s)
    if rule.access_mode in (AccessMode.DIRECT, AccessMode.PET_MEDIATED) and not fresh:
        raise StaleData(f"no {rule.type_id} item within "
                        f"{rule.max_staleness_s} s of t={now_ms}")

    if rule.access_mode is AccessMode.DIRECT:
        response = MediatedResponse(rule.access_mode, item=fresh[-1])
    elif rule.access_mode is AccessMode.PET_MEDIATED:
        transformed = apply_pet_stages(fresh[-1], rule.pet_stages, rng)
        response = MediatedResponse(rule.access_mode, item=transformed,
                                    epsilon_spent=rule.epsilon_per_disclosure)
    elif rule.access_mode is AccessMode.COMPUTED:
        value = _aggregate(rule.computation, fresh, now_ms)
        response = MediatedResponse(rule.access_mode, value=value)
    else:   # combined: aggregate, then run the scalar pipeline on the result
        value = _aggregate(rule.computation, fresh, now_ms)
        probe = DataItem(rule.type_id, now_ms, Scalar(value), "aggregate")
        noised = apply_pet_stages(probe, rule.pet_stages, rng)
        response = MediatedResponse(rule.access_mode, value=noised.payload.value,
                                    epsilon_spent=rule.epsilon_per_disclosure)

    if limiter is not None:
        limiter.grant(key, now_ms)
    if ledger is not None and response.epsilon_spent > 0:
        ledger.record(now_ms, rule.app_id, rule.type_id, response.epsilon_spent)
    return response


# ------------------------------------------------------------------- manager

class PrivacyManager:
    """Holds installed rules, the authority, the ledger, and the limiter."""

    def __init__(self, catalog: DataCatalog, pet_registry, maturity: dict,
                 trust_model: TrustModel, relevance_rules, threat_rules: dict,
                 config: RuleConfig, rng: np.random.Generator):
        from .pets.pbe import pbe_setup
        from .selection import (candidate_pet_families, rank_candidates,
                                relevant_principles)
        from .datamodel import GdprPrinciple, Layer

        self.catalog = catalog
        self.pet_registry = pet_registry
        self.config = config
        self.threat_rules = threat_rules
        self.ledger = PrivacyLedger()
        self.limiter = RateLimiter()
        self._rng = rng
        self.master, self.authority = pbe_setup(rng)
        self.pseudonym_secret = rng.bytes(32)
        self.rules: dict[tuple[str, str], PrivacyRule] = {}
        self.manifests: dict[str, AppManifest] = {}

        assessments = relevant_principles(trust_model, relevance_rules)
        primary = {a.principle for a in assessments if a.relevance == "primary"}
        self.assessments = assessments
        # with an all-trusted model nothing is primary; consider every principle
        wanted = primary if primary else set(GdprPrinciple)
        families = [fam for fam, _ in
                    candidate_pet_families(wanted, Layer.PROCESSING)]
        concrete = []
        for fam in families:
            concrete.extend(d.pet_id for d in pet_registry.of_family(fam))
        self.ranking = rank_candidates(sorted(set(concrete)), maturity) \
            if concrete else []

    def install(self, manifest: AppManifest,
                config: RuleConfig | None = None) -> tuple[ThreatReport, list[PrivacyRule]]:
        from .errors import AlreadyInstalled
        if manifest.app_id in self.manifests:
            raise AlreadyInstalled(manifest.app_id)
        threats = derive_threats(manifest, self.catalog, self.threat_rules)
        rules = generate_rules(manifest, self.ranking, config or self.config,
                               self.catalog)
        self.manifests[manifest.app_id] = manifest
        for rule in rules:
            self.rules[(rule.app_id, rule.type_id)] = rule
        return threats, rules

    def uninstall(self, app_id: str) -> None:
        self.manifests.pop(app_id, None)
        for key in [k for k in self.rules if k[0] == app_id]:
            del self.rules[key]

    def rule_for(self, app_id: str, type_id: str) -> PrivacyRule:
        try:
            return self.rules[(app_id, type_id)]
        except KeyError:
            raise DeniedByPolicy(f"no rule for ({app_id}, {type_id})") from None

    def mediate(self, app_id: str, type_id: str, items, now_ms: int) -> MediatedResponse:
        rule = self.rule_for(app_id, type_id)
        return mediate(rule, items, now_ms, self._rng, self.ledger, self.limiter)

    def compose(self, rule: PrivacyRule, item: DataItem) -> StoredItem:
        # uplink items are tracked by the bandwidth counters and stream plan;
        # the ledger records app-facing disclosures (one entry per mediation)
        return compose_stored_item(rule, item, self.authority, self._rng)
