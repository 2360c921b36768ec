"""Core vocabulary: data types, items, classifications, trust model, encodings.

Payload values are quantized at construction (1e-7 degrees for coordinates,
1e-6 for scalars) so that logically equal items always produce byte-equal
canonical encodings; the deduplicating uplink hashes those bytes.
"""

from __future__ import annotations

import enum
import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CatalogError, InvalidItem

_TYPE_ID_RE = re.compile(r"^[a-z0-9_.]+$")

GEO_QUANTUM = 1e-7   # degrees, ~1.1 cm
SCALAR_QUANTUM = 1e-6


class Layer(enum.Enum):
    PHYSICAL = "physical"
    COMMUNICATION = "communication"
    PROCESSING = "processing"
    STORAGE = "storage"


class Classification(enum.Enum):
    TECHNICAL = "technical"
    PERSONAL = "personal"
    SENSITIVE_PERSONAL = "sensitive_personal"


class PayloadKind(enum.Enum):
    SCALAR = "scalar"
    GEO_POINT = "geo_point"
    OPAQUE = "opaque"


class GdprPrinciple(enum.Enum):
    """The seven Article 5 principles, in column order of the mapping table."""

    LFT = "LFT"   # lawfulness, fairness, transparency
    PL = "PL"     # purpose limitation
    DM = "DM"     # data minimization
    A = "A"       # accuracy
    SL = "SL"     # storage limitation
    IC = "IC"     # integrity and confidentiality
    ACC = "Acc"   # accountability


class PetFamily(enum.Enum):
    """Row vocabulary of the principle-to-PET mapping table."""

    ANONYMITY = "anonymity_based"
    CRYPTOGRAPHY = "cryptography_based"
    AUTHENTICATION = "authentication_based"
    TRACEABILITY = "traceability"
    IMMUTABILITY = "immutability"


class EntityRole(enum.Enum):
    VEHICLE_USER = "vehicle_user"
    INTERMEDIATE_SERVER = "intermediate_server"
    SERVICE_PROVIDER = "service_provider"
    KEY_AUTHORITY = "key_authority"


class TrustLevel(enum.Enum):
    TRUSTED = "trusted"
    HONEST_BUT_CURIOUS = "honest_but_curious"
    UNTRUSTED = "untrusted"


# ------------------------------------------------------------------ payloads

def _quantize(value: float, quantum: float) -> float:
    return round(value / quantum) * quantum


@dataclass(frozen=True)
class Scalar:
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", _quantize(float(self.value), SCALAR_QUANTUM))


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        object.__setattr__(self, "lat", _quantize(float(self.lat), GEO_QUANTUM))
        object.__setattr__(self, "lon", _quantize(float(self.lon), GEO_QUANTUM))


@dataclass(frozen=True)
class Opaque:
    data: bytes


Payload = Scalar | GeoPoint | Opaque

_PAYLOAD_TAGS = {Scalar: 1, GeoPoint: 2, Opaque: 3}
_KIND_OF_PAYLOAD = {Scalar: PayloadKind.SCALAR, GeoPoint: PayloadKind.GEO_POINT,
                    Opaque: PayloadKind.OPAQUE}


@dataclass(frozen=True)
class DataItem:
    """One timestamped sensor reading."""

    type_id: str
    timestamp_ms: int
    payload: Payload
    source: str

    def __post_init__(self):
        for violation in item_violations(self):
            raise InvalidItem(violation)


def item_violations(item: DataItem) -> list[str]:
    """Structural invariant violations of a standalone item (empty = valid)."""
    out = []
    if not _TYPE_ID_RE.match(item.type_id or ""):
        out.append("type_id must be non-empty lowercase [a-z0-9_.]+")
    if not isinstance(item.timestamp_ms, int) or item.timestamp_ms <= 0:
        out.append("timestamp_ms must be a positive integer")
    p = item.payload
    if isinstance(p, GeoPoint):
        if not -90.0 <= p.lat <= 90.0:
            out.append("lat out of range [-90, 90]")
        if not -180.0 <= p.lon <= 180.0:
            out.append("lon out of range [-180, 180]")
    elif isinstance(p, Scalar):
        if abs(p.value) >= 2**62 * SCALAR_QUANTUM:
            out.append("scalar magnitude too large for canonical encoding")
    elif not isinstance(p, Opaque):
        out.append("payload must be Scalar, GeoPoint, or Opaque")
    return out


def validate_item(item: DataItem, descriptor: "DataTypeDescriptor") -> list[str]:
    """Violations of the item against its descriptor; empty list means ok."""
    out = item_violations(item)
    if item.type_id != descriptor.id:
        out.append(f"type_id {item.type_id!r} does not match descriptor {descriptor.id!r}")
    if _KIND_OF_PAYLOAD.get(type(item.payload)) is not descriptor.payload_kind:
        out.append("payload kind mismatch")
    return out


# --------------------------------------------------------- canonical encoding

_ENC_VERSION = 1


def canonical_encode(item: DataItem) -> bytes:
    """Deterministic, injective byte encoding of a valid item.

    Fixed field order (type id, timestamp, payload tag, payload fields,
    source) with length-prefixed strings and fixed-point payload values,
    so equal items always hash equal and distinct items never collide.
    """
    bad = item_violations(item)
    if bad:
        raise InvalidItem("; ".join(bad))
    type_b = item.type_id.encode()
    source_b = item.source.encode()
    parts = [struct.pack(">BH", _ENC_VERSION, len(type_b)), type_b,
             struct.pack(">q", item.timestamp_ms)]
    p = item.payload
    parts.append(struct.pack(">B", _PAYLOAD_TAGS[type(p)]))
    if isinstance(p, Scalar):
        parts.append(struct.pack(">q", round(p.value / SCALAR_QUANTUM)))
    elif isinstance(p, GeoPoint):
        parts.append(struct.pack(">qq", round(p.lat / GEO_QUANTUM),
                                 round(p.lon / GEO_QUANTUM)))
    else:
        parts.append(struct.pack(">I", len(p.data)))
        parts.append(p.data)
    parts.append(struct.pack(">H", len(source_b)))
    parts.append(source_b)
    return b"".join(parts)


def canonical_decode(blob: bytes) -> DataItem:
    """Inverse of :func:`canonical_encode`."""
    try:
        version, tlen = struct.unpack_from(">BH", blob, 0)
        if version != _ENC_VERSION:
            raise InvalidItem(f"unsupported encoding version {version}")
        off = 3
        type_id = blob[off:off + tlen].decode()
        off += tlen
        (ts,) = struct.unpack_from(">q", blob, off)
        off += 8
        (tag,) = struct.unpack_from(">B", blob, off)
        off += 1
        payload: Payload
        if tag == 1:
            (raw,) = struct.unpack_from(">q", blob, off)
            off += 8
            payload = Scalar(raw * SCALAR_QUANTUM)
        elif tag == 2:
            raw_lat, raw_lon = struct.unpack_from(">qq", blob, off)
            off += 16
            payload = GeoPoint(raw_lat * GEO_QUANTUM, raw_lon * GEO_QUANTUM)
        elif tag == 3:
            (blen,) = struct.unpack_from(">I", blob, off)
            off += 4
            payload = Opaque(blob[off:off + blen])
            off += blen
        else:
            raise InvalidItem(f"unknown payload tag {tag}")
        (slen,) = struct.unpack_from(">H", blob, off)
        off += 2
        source = blob[off:off + slen].decode()
        off += slen
        if off != len(blob):
            raise InvalidItem("trailing bytes after canonical encoding")
        return DataItem(type_id, ts, payload, source)
    except (struct.error, UnicodeDecodeError) as exc:
        raise InvalidItem(f"malformed canonical encoding: {exc}") from exc


# ----------------------------------------------------------------- catalog

@dataclass(frozen=True)
class DataTypeDescriptor:
    id: str
    layer: Layer
    classification: Classification
    payload_kind: PayloadKind
    unit: str | None = None          # scalar kinds only
    description: str = ""

    def __post_init__(self):
        if not _TYPE_ID_RE.match(self.id or ""):
            raise CatalogError(f"bad type id {self.id!r}")
        if self.id.startswith("location.") and \
                self.classification is Classification.TECHNICAL:
            raise CatalogError(
                f"{self.id}: location types must be personal or sensitive_personal")
        if self.payload_kind is PayloadKind.SCALAR and not self.unit:
            raise CatalogError(f"{self.id}: scalar types need a unit")


class DataCatalog:
    """Lookup table of data type descriptors, loaded once at startup."""

    def __init__(self, descriptors: list[DataTypeDescriptor]):
        self._by_id: dict[str, DataTypeDescriptor] = {}
        for d in descriptors:
            if d.id in self._by_id:
                raise CatalogError(f"duplicate type id {d.id!r}")
            self._by_id[d.id] = d

    def __contains__(self, type_id: str) -> bool:
        return type_id in self._by_id

    def __len__(self) -> int:
        return len(self._by_id)

    def get(self, type_id: str) -> DataTypeDescriptor:
        try:
            return self._by_id[type_id]
        except KeyError:
            raise CatalogError(f"unknown data type {type_id!r}") from None

    def ids(self) -> list[str]:
        return sorted(self._by_id)

    @classmethod
    def from_json(cls, path: str | Path) -> "DataCatalog":
        records = json.loads(Path(path).read_text())
        if not isinstance(records, list):
            raise CatalogError("catalog file must be a JSON array")
        descs = []
        for rec in records:
            try:
                descs.append(DataTypeDescriptor(
                    id=rec["id"],
                    layer=Layer(rec["layer"]),
                    classification=Classification(rec["classification"]),
                    payload_kind=PayloadKind(rec["payload_kind"]),
                    unit=rec.get("unit"),
                    description=rec.get("description", ""),
                ))
            except (KeyError, ValueError) as exc:
                raise CatalogError(f"bad catalog record {rec!r}: {exc}") from exc
        return cls(descs)


# -------------------------------------------------------------- trust model

@dataclass(frozen=True)
class TrustEntity:
    entity_id: str
    role: EntityRole
    trust: TrustLevel


@dataclass(frozen=True)
class TrustModel:
    entities: tuple[TrustEntity, ...]
    non_collusion: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    def __post_init__(self):
        roles = {e.role for e in self.entities}
        if EntityRole.VEHICLE_USER not in roles or EntityRole.SERVICE_PROVIDER not in roles:
            raise InvalidItem("trust model needs at least one vehicle_user and one service_provider")
        known = {e.entity_id for e in self.entities}
        for a, b in self.non_collusion:
            if a not in known or b not in known:
                raise InvalidItem(f"non-collusion pair ({a}, {b}) names unknown entity")

    @classmethod
    def from_json(cls, path: str | Path) -> "TrustModel":
        doc = json.loads(Path(path).read_text())
        entities = []
        for rec in doc.get("entities", []):
            role = EntityRole(rec["role"])
            # intermediate servers are assumed honest-but-curious unless stated
            default = (TrustLevel.HONEST_BUT_CURIOUS
                       if role is EntityRole.INTERMEDIATE_SERVER else TrustLevel.TRUSTED)
            trust = TrustLevel(rec["trust"]) if "trust" in rec else default
            entities.append(TrustEntity(rec["entity_id"], role, trust))
        pairs = tuple((a, b) for a, b in doc.get("non_collusion", []))
        return cls(tuple(entities), pairs)
