"""HTTP surface of the storage server.

    POST /v1/bundles            binary bundle body -> {"stored": n, "duplicates": m}
    GET  /v1/items?provider=&pseudonym=&key=&from_ms=&to_ms=
                                -> binary: u32 count | per item: u32 len | blob
    POST /v1/admin/purge        {"now_ms": t} -> {"purged": n}
    GET  /v1/admin/providers    registration audit list
"""

from __future__ import annotations

import struct

from fastapi import FastAPI, Request, Response

from .errors import ServerRejected, UnknownProvider
from .storage import StorageServer


def encode_item_list(items) -> bytes:
    parts = [struct.pack(">I", len(items))]
    for item in items:
        blob = item.to_bytes()
        parts.append(struct.pack(">I", len(blob)))
        parts.append(blob)
    return b"".join(parts)


def decode_item_list(data: bytes):
    from .uplink import StoredItem
    (count,) = struct.unpack_from(">I", data, 0)
    off = 4
    items = []
    for _ in range(count):
        (blen,) = struct.unpack_from(">I", data, off)
        off += 4
        items.append(StoredItem.from_bytes(data[off:off + blen]))
        off += blen
    return items


def create_storage_app(server: StorageServer) -> FastAPI:
    app = FastAPI(title="autopriv-storage", docs_url=None, redoc_url=None)

    @app.post("/v1/bundles")
    async def put_bundles(request: Request):
        body = await request.body()
        received_at = int(request.headers.get("x-received-at-ms", "0"))
        try:
            stored, duplicates = server.put_bundle_bytes(body, received_at)
        except ServerRejected as exc:
            return Response(status_code=400, media_type="application/json",
                            content=f'{{"error": "schema", "detail": "{exc}"}}')
        return {"stored": stored, "duplicates": duplicates}

    @app.get("/v1/items")
    async def get_items(provider: str, pseudonym: str, key: str,
                        from_ms: int = 0, to_ms: int = 2**62):
        try:
            item_key = bytes.fromhex(key)
        except ValueError:
            return Response(status_code=400, media_type="application/json",
                            content='{"error": "schema", "detail": "key must be hex"}')
        try:
            items = server.query_items(provider, pseudonym, item_key, from_ms, to_ms)
        except UnknownProvider:
            return Response(status_code=403, media_type="application/json",
                            content='{"error": "unknown_provider"}')
        return Response(content=encode_item_list(items),
                        media_type="application/octet-stream")

    @app.post("/v1/admin/purge")
    async def purge(doc: dict):
        return {"purged": server.purge_expired(int(doc.get("now_ms", 0)))}

    @app.get("/v1/admin/providers")
    async def providers():
        return server.provider_audit()

    return app


class InProcessStorageEndpoint:
    """Drives the storage app through real HTTP requests without a socket."""

    def __init__(self, server: StorageServer):
        from fastapi.testclient import TestClient
        self.server = server
        self._client = TestClient(create_storage_app(server))

    def post_bundle(self, body: bytes):
        r = self._client.post("/v1/bundles", content=body,
                              headers={"content-type": "application/octet-stream"})
        return r.status_code, r.json()

    def get_items(self, provider: str, pseudonym: str, key_hex: str,
                  from_ms: int, to_ms: int) -> bytes:
        r = self._client.get("/v1/items", params={
            "provider": provider, "pseudonym": pseudonym, "key": key_hex,
            "from_ms": from_ms, "to_ms": to_ms})
        if r.status_code != 200:
            raise ServerRejected(f"{r.status_code}: {r.text}")
        return r.content


class HttpStorageEndpoint:
    """Same interface over a real network endpoint."""

    def __init__(self, base_url: str, timeout_s: float = 5.0):
        import httpx
        self._client = httpx.Client(base_url=base_url, timeout=timeout_s)

    def post_bundle(self, body: bytes):
        from .errors import TransportError
        import httpx
        try:
            r = self._client.post("/v1/bundles", content=body,
                                  headers={"content-type": "application/octet-stream"})
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        return r.status_code, r.json()

    def get_items(self, provider: str, pseudonym: str, key_hex: str,
                  from_ms: int, to_ms: int) -> bytes:
        from .errors import TransportError
        import httpx
        try:
            r = self._client.get("/v1/items", params={
                "provider": provider, "pseudonym": pseudonym, "key": key_hex,
                "from_ms": from_ms, "to_ms": to_ms})
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if r.status_code != 200:
            raise ServerRejected(f"{r.status_code}: {r.text}")
        return r.content
