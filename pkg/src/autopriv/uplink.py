"""Deduplicated encrypted uplink: stream planning, epoch bundling, wire format.

Rules from different apps that request the same data type through the same
PET with identical parameters and the same purpose policy collapse into one
stream, keyed by a 32-byte digest. A stream fires on its own period grid
(first fire one period after scenario start) and fired items are batched
into one bundle per epoch.

Bundle wire layout (big-endian):

    magic "APSY" | u8 version (=1) | u16 pseudonym length, pseudonym (UTF-8)
    | u64 epoch index | u32 entry count
    | per entry: 32-byte item key | u32 length | stored-item blob

Stored-item blob layout:

    u64 timestamp_ms | u8 pet id length, pet id (UTF-8)
    | 32-byte pipeline params digest | u32 length | ciphertext bytes

The ack is JSON ``{"stored": n, "duplicates": m}``; the server deduplicates
on (pseudonym, epoch index, item key), which makes resends idempotent.
"""

from __future__ import annotations

import hashlib
import math
import struct
from collections import deque
from dataclasses import dataclass, field

from .errors import MissingItem, ServerRejected, TransportError

MAGIC = b"APSY"
WIRE_VERSION = 1
ITEM_KEY_LEN = 32


@dataclass(frozen=True)
class StoredItem:
    """One ciphertext item as held by (and served from) a storage server."""

    ciphertext: bytes
    pet_id: str
    params_digest: bytes
    timestamp_ms: int

    def to_bytes(self) -> bytes:
        pet_b = self.pet_id.encode()
        return b"".join([
            struct.pack(">QB", self.timestamp_ms, len(pet_b)), pet_b,
            self.params_digest,
            struct.pack(">I", len(self.ciphertext)), self.ciphertext,
        ])

    @classmethod
    def from_bytes(cls, blob: bytes) -> "StoredItem":
        try:
            ts, plen = struct.unpack_from(">QB", blob, 0)
            off = 9
            pet_id = blob[off:off + plen].decode()
            off += plen
            digest = blob[off:off + ITEM_KEY_LEN]
            off += ITEM_KEY_LEN
            (clen,) = struct.unpack_from(">I", blob, off)
            off += 4
            ct = blob[off:off + clen]
            off += clen
            if off != len(blob) or len(digest) != ITEM_KEY_LEN:
                raise ValueError("length mismatch")
            return cls(ct, pet_id, digest, ts)
        except (struct.error, UnicodeDecodeError, ValueError) as exc:
            raise ServerRejected(f"malformed stored item: {exc}") from exc


@dataclass(frozen=True)
class StreamSpec:
    item_key: bytes
    type_id: str
    period_s: float
    subscriber_apps: frozenset[str]
    pipeline_rule: object          # canonical PrivacyRule shared by subscribers

    def fire_times_ms(self, start_ms: int, from_ms: int, to_ms: int) -> list[int]:
        """Fire instants in (from_ms, to_ms]; k * period after start, k >= 1."""
        period_ms = self.period_s * 1000.0
        k0 = max(1, math.floor((from_ms - start_ms) / period_ms) + 1)
        out = []
        k = k0
        while True:
            t = start_ms + k * period_ms
            if t > to_ms:
                break
            if t > from_ms:
                out.append(int(t))
            k += 1
        return out


@dataclass(frozen=True)
class Bundle:
    vehicle_pseudonym: str
    epoch_index: int
    entries: tuple[tuple[bytes, StoredItem], ...]
    created_at_ms: int


def rule_item_key(rule) -> bytes:
    """Digest identifying shareable output: type, PET stages, params, policy."""
    text = "|".join([rule.type_id] + [s.canonical() for s in rule.pipeline] +
                    [rule.policy])
    return hashlib.sha256(text.encode()).digest()


def required_period_s(rule) -> float:
    """Tightest period this subscriber needs: min(1/rate, staleness)."""
    candidates = [rule.max_staleness_s]
    if rule.max_rate_hz > 0:
        candidates.append(1.0 / rule.max_rate_hz)
    return min(candidates)


def plan_streams(rules) -> list[StreamSpec]:
    """Merge rules with identical item keys into shared streams.

    Only rules whose pipeline terminates in purpose-bound encryption are
    uplinked; direct and computed rules never leave the vehicle. The merged
    period is the minimum over subscribers, so every constraint is satisfied.
    """
    groups: dict[bytes, list] = {}
    for rule in rules:
        if not rule.pipeline or rule.pipeline[-1].pet_id != "pbe":
            continue
        groups.setdefault(rule_item_key(rule), []).append(rule)
    specs = []
    for item_key, members in sorted(groups.items(), key=lambda kv: kv[0]):
        members = sorted(members, key=lambda r: r.app_id)
        specs.append(StreamSpec(
            item_key=item_key,
            type_id=members[0].type_id,
            period_s=min(required_period_s(r) for r in members),
            subscriber_apps=frozenset(r.app_id for r in members),
            pipeline_rule=members[0],
        ))
    return specs


def bundle_epoch(plan: list[StreamSpec], epoch_index: int, pseudonym: str,
                 created_at_ms: int, due_keys, items: dict[bytes, StoredItem]) -> Bundle:
    """Assemble the bundle for one epoch: exactly the due items, plan order.

    ``due_keys`` are the item keys of streams that fired this epoch and
    ``items`` maps item keys to freshly composed StoredItems. A due stream
    without an item raises MissingItem. At most one entry per item key.
    """
    due = set(due_keys)
    entries = []
    for spec in plan:
        if spec.item_key not in due:
            continue
        due.discard(spec.item_key)
        if spec.item_key not in items:
            raise MissingItem(f"stream {spec.item_key.hex()[:8]} is due but "
                              f"no source item is available")
        entries.append((spec.item_key, items[spec.item_key]))
    if due:
        raise MissingItem(f"due keys not in plan: {[k.hex()[:8] for k in due]}")
    return Bundle(pseudonym, epoch_index, tuple(entries), created_at_ms)


# ------------------------------------------------------------------ encoding

def encode_bundle(bundle: Bundle) -> bytes:
    pseud = bundle.vehicle_pseudonym.encode()
    parts = [MAGIC, struct.pack(">BH", WIRE_VERSION, len(pseud)), pseud,
             struct.pack(">QI", bundle.epoch_index, len(bundle.entries))]
    for item_key, item in bundle.entries:
        if len(item_key) != ITEM_KEY_LEN:
            raise ServerRejected("item key must be 32 bytes")
        blob = item.to_bytes()
        parts.append(item_key)
        parts.append(struct.pack(">I", len(blob)))
        parts.append(blob)
    return b"".join(parts)


def decode_bundle(data: bytes, created_at_ms: int = 0) -> Bundle:
    try:
        if data[:4] != MAGIC:
            raise ServerRejected("bad magic")
        version, plen = struct.unpack_from(">BH", data, 4)
        if version != WIRE_VERSION:
            raise ServerRejected(f"unsupported wire version {version}")
        off = 7
        pseudonym = data[off:off + plen].decode()
        off += plen
        epoch, count = struct.unpack_from(">QI", data, off)
        off += 12
        entries = []
        seen = set()
        for _ in range(count):
            item_key = data[off:off + ITEM_KEY_LEN]
            if len(item_key) != ITEM_KEY_LEN:
                raise ServerRejected("truncated item key")
            off += ITEM_KEY_LEN
            (blen,) = struct.unpack_from(">I", data, off)
            off += 4
            item = StoredItem.from_bytes(data[off:off + blen])
            off += blen
            if item_key in seen:
                raise ServerRejected("duplicate item key inside bundle")
            seen.add(item_key)
            entries.append((item_key, item))
        if off != len(data):
            raise ServerRejected("trailing bytes after bundle")
        return Bundle(pseudonym, epoch, tuple(entries), created_at_ms)
    except (struct.error, UnicodeDecodeError, IndexError) as exc:
        raise ServerRejected(f"malformed bundle: {exc}") from exc


# -------------------------------------------------------------------- sending

@dataclass
class Ack:
    stored: int
    duplicates: int


class WireTap:
    """Records every byte offered to the transport for leak scanning."""

    def __init__(self) -> None:
        self.chunks: list[bytes] = []

    def record(self, data: bytes) -> None:
        self.chunks.append(bytes(data))

    def all_bytes(self) -> bytes:
        return b"".join(self.chunks)


class BundleSender:
    """At-least-once delivery with in-order offline buffering.

    Undelivered bundles queue up to ``buffer_limit``; on overflow the oldest
    is dropped (and counted) rather than blocking the vehicle. Server-side
    dedup keys make retries safe.
    """

    def __init__(self, endpoint, tap: WireTap | None = None,
                 buffer_limit: int = 10_000):
        self.endpoint = endpoint
        self.tap = tap
        self.buffer: deque[bytes] = deque()
        self.buffer_limit = buffer_limit
        self.dropped = 0
        self.sent_bundles = 0
        self.sent_entries = 0
        self.sent_bytes = 0
        self.duplicate_entries = 0

    def send(self, bundle: Bundle) -> Ack | None:
        """Send one bundle (flushing any backlog first); None if buffered."""
        self.buffer.append(encode_bundle(bundle))
        while len(self.buffer) > self.buffer_limit:
            self.buffer.popleft()
            self.dropped += 1
        return self.flush()

    def flush(self) -> Ack | None:
        last = None
        while self.buffer:
            body = self.buffer[0]
            try:
                ack = self._post(body)
            except TransportError:
                return None
            except ServerRejected:
                # malformed bundles never succeed; unblock the queue
                self.buffer.popleft()
                raise
            self.buffer.popleft()
            self.sent_bundles += 1
            self.sent_bytes += len(body)
            self.sent_entries += ack.stored
            self.duplicate_entries += ack.duplicates
            last = ack
        return last

    def _post(self, body: bytes) -> Ack:
        if self.tap is not None:
            self.tap.record(body)
        status, doc = self.endpoint.post_bundle(body)
        if status != 200:
            raise ServerRejected(f"server returned {status}: {doc}")
        return Ack(stored=int(doc["stored"]), duplicates=int(doc["duplicates"]))
