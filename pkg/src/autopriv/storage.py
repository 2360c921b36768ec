"""Honest-but-curious intermediate storage server.

Holds ciphertext items and metadata only; no decryption key material exists
anywhere in this module, so access control is purely cryptographic. The
server records which attributes each registered provider *claims* for audit
purposes, but never filters query results by them.

Persistence is an append-only log file per pseudonym; the in-memory index is
rebuilt from the logs on start, which keeps the stored state trivially
auditable (the zero-plaintext scan just reads the files).
"""

from __future__ import annotations

import json
import re
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ServerRejected, UnknownProvider
from .uplink import Bundle, StoredItem, decode_bundle

_PSEUDONYM_FILE_RE = re.compile(r"^[a-z0-9_\-]{1,64}$")


@dataclass(frozen=True)
class ProviderRecord:
    provider_id: str
    declared_attributes: frozenset[str]


@dataclass
class StorageConfig:
    retention_s: float = 86_400.0
    retention_overrides: dict = field(default_factory=dict)   # item_key hex -> s
    providers: tuple[ProviderRecord, ...] = ()
    log_dir: Path | None = None

    @classmethod
    def from_json(cls, path: str | Path) -> "StorageConfig":
        doc = json.loads(Path(path).read_text())
        providers = tuple(
            ProviderRecord(p["provider_id"], frozenset(p.get("declared_attributes", [])))
            for p in doc.get("providers", []))
        log_dir = Path(doc["log_dir"]) if doc.get("log_dir") else None
        return cls(retention_s=doc.get("retention_s", 86_400.0),
                   retention_overrides=doc.get("retention_overrides", {}),
                   providers=providers, log_dir=log_dir)


class StorageServer:
    def __init__(self, config: StorageConfig | None = None):
        self.config = config or StorageConfig()
        self._providers = {p.provider_id: p for p in self.config.providers}
        # (pseudonym, item_key) -> timestamp-ordered StoredItems
        self._index: dict[tuple[str, bytes], list[StoredItem]] = {}
        self._seen: set[tuple[str, int, bytes]] = set()
        self._lock = threading.Lock()
        if self.config.log_dir is not None:
            self.config.log_dir.mkdir(parents=True, exist_ok=True)
            self._replay_logs()

    # ------------------------------------------------------------- ingestion

    def put_bundle(self, bundle: Bundle) -> tuple[int, int]:
        """Idempotent insert; returns (stored, duplicates)."""
        stored = duplicates = 0
        with self._lock:
            for item_key, item in bundle.entries:
                dedup = (bundle.vehicle_pseudonym, bundle.epoch_index, item_key)
                if dedup in self._seen:
                    duplicates += 1
                    continue
                self._seen.add(dedup)
                self._insert(bundle.vehicle_pseudonym, item_key, item)
                self._append_log(bundle.vehicle_pseudonym, bundle.epoch_index,
                                 item_key, item)
                stored += 1
        return stored, duplicates

    def put_bundle_bytes(self, body: bytes, received_at_ms: int = 0) -> tuple[int, int]:
        return self.put_bundle(decode_bundle(body, received_at_ms))

    def _insert(self, pseudonym: str, item_key: bytes, item: StoredItem) -> None:
        items = self._index.setdefault((pseudonym, item_key), [])
        pos = len(items)
        while pos > 0 and items[pos - 1].timestamp_ms > item.timestamp_ms:
            pos -= 1
        items.insert(pos, item)

    # ---------------------------------------------------------------- queries

    def query_items(self, provider_id: str, pseudonym: str, item_key: bytes,
                    from_ms: int, to_ms: int) -> list[StoredItem]:
        """Ciphertexts in [from_ms, to_ms], timestamp order.

        Registration gates the API surface only; results are never filtered
        by the provider's declared attributes.
        """
        if provider_id not in self._providers:
            raise UnknownProvider(provider_id)
        with self._lock:
            items = list(self._index.get((pseudonym, item_key), ()))
        return [i for i in items if from_ms <= i.timestamp_ms <= to_ms]

    def provider_audit(self) -> list[dict]:
        return [{"provider_id": p.provider_id,
                 "declared_attributes": sorted(p.declared_attributes)}
                for p in self._providers.values()]

    # ---------------------------------------------------------------- purging

    def retention_s_for(self, item_key: bytes) -> float:
        return float(self.config.retention_overrides.get(item_key.hex(),
                                                         self.config.retention_s))

    def purge_expired(self, now_ms: int) -> int:
        """Drop items older than their retention window; returns purge count."""
        purged = 0
        with self._lock:
            for (pseudonym, item_key), items in list(self._index.items()):
                horizon = now_ms - self.retention_s_for(item_key) * 1000.0
                keep = [i for i in items if i.timestamp_ms >= horizon]
                purged += len(items) - len(keep)
                if keep:
                    self._index[(pseudonym, item_key)] = keep
                else:
                    del self._index[(pseudonym, item_key)]
        return purged

    # ------------------------------------------------------------- state dump

    def dump_state(self) -> bytes:
        """Every byte the server holds, for the zero-plaintext audit scan."""
        with self._lock:
            parts = []
            for (pseudonym, item_key), items in sorted(self._index.items()):
                parts.append(pseudonym.encode())
                parts.append(item_key)
                for item in items:
                    parts.append(item.to_bytes())
            if self.config.log_dir is not None:
                for path in sorted(self.config.log_dir.glob("*.log")):
                    parts.append(path.read_bytes())
            return b"".join(parts)

    def item_count(self) -> int:
        with self._lock:
            return sum(len(v) for v in self._index.values())

    # ------------------------------------------------------------ persistence

    def _log_path(self, pseudonym: str) -> Path | None:
        if self.config.log_dir is None:
            return None
        if not _PSEUDONYM_FILE_RE.match(pseudonym):
            raise ServerRejected(f"pseudonym {pseudonym!r} not filesystem-safe")
        return self.config.log_dir / f"{pseudonym}.log"

    def _append_log(self, pseudonym: str, epoch: int, item_key: bytes,
                    item: StoredItem) -> None:
        path = self._log_path(pseudonym)
        if path is None:
            return
        blob = item.to_bytes()
        record = struct.pack(">Q", epoch) + item_key + \
            struct.pack(">I", len(blob)) + blob
        with path.open("ab") as fh:
            fh.write(struct.pack(">I", len(record)) + record)

    def _replay_logs(self) -> None:
        for path in sorted(self.config.log_dir.glob("*.log")):
            pseudonym = path.stem
            data = path.read_bytes()
            off = 0
            while off < len(data):
                (rlen,) = struct.unpack_from(">I", data, off)
                off += 4
                record = data[off:off + rlen]
                off += rlen
                (epoch,) = struct.unpack_from(">Q", record, 0)
                item_key = record[8:40]
                (blen,) = struct.unpack_from(">I", record, 40)
                item = StoredItem.from_bytes(record[44:44 + blen])
                dedup = (pseudonym, epoch, item_key)
                if dedup not in self._seen:
                    self._seen.add(dedup)
                    self._insert(pseudonym, item_key, item)
