"""HTTP JSON API of the demo service (consumed by the UI and the tests).

    POST   /api/apps          manifest JSON body -> {threats, rules}
    DELETE /api/apps/{id}
    POST   /api/playback      {"action": "start"|"pause"|"step", "n": ticks}
    POST   /api/query         {"app_id", "category", "k"}
    GET    /api/state
    GET    /api/events        server-sent events, one state snapshot per change
    GET    /api/selection     ?layer=processing&principles=PL,DM
    GET    /api/pets

Field names are part of the UI contract and stay stable.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time

from fastapi import FastAPI, Request, Response

from ..datamodel import Layer
from ..errors import (AlreadyInstalled, AutoprivError, CatalogError,
                      DeniedByPolicy, InvalidParam, ManifestSyntaxError,
                      NoViablePet, RateLimited, SchemaError, StaleData,
                      UnknownCategory)
from ..selection import candidate_pet_families, rank_candidates
from ..datamodel import GdprPrinciple
from ..defaults import default_maturity
from .session import DemoSession

_ERROR_STATUS = [
    (AlreadyInstalled, 409, "already_installed"),
    (ManifestSyntaxError, 400, "syntax"),
    (SchemaError, 422, "schema"),
    (CatalogError, 422, "catalog"),
    (NoViablePet, 422, "no_viable_pet"),
    (DeniedByPolicy, 403, "denied_by_policy"),
    (RateLimited, 429, "rate_limited"),
    (StaleData, 409, "stale_data"),
    (UnknownCategory, 404, "unknown_category"),
    (InvalidParam, 422, "invalid_param"),
]


def _error_response(exc: AutoprivError) -> Response:
    for klass, status, code in _ERROR_STATUS:
        if isinstance(exc, klass):
            body = json.dumps({"error": code, "message": str(exc)})
            return Response(content=body, status_code=status,
                            media_type="application/json")
    body = json.dumps({"error": "internal", "message": str(exc)})
    return Response(content=body, status_code=500, media_type="application/json")


def _json(doc) -> Response:
    return Response(content=json.dumps(doc), media_type="application/json")


def serialize_threats(report) -> dict:
    return {
        "app_id": report.app_id,
        "entries": [
            {"type_id": e.type_id,
             "classification": e.classification.value,
             "access_mode": e.access_mode.value,
             "severity": e.severity.value,
             "threat_texts": list(e.threat_texts)}
            for e in report.entries],
    }


def serialize_rule(rule) -> dict:
    return {
        "app_id": rule.app_id,
        "type_id": rule.type_id,
        "access_mode": rule.access_mode.value,
        "pipeline": [{"pet_id": s.pet_id, "params": s.params}
                     for s in rule.pipeline],
        "policy": rule.policy,
        "max_rate_hz": rule.max_rate_hz,
        "max_staleness_s": rule.max_staleness_s,
        "epsilon_per_disclosure": rule.epsilon_per_disclosure,
        "selection_basis": rule.selection_basis,
    }


class _Broadcaster:
    def __init__(self) -> None:
        self.queues: list[asyncio.Queue] = []
        self.loop: asyncio.AbstractEventLoop | None = None

    def subscribe(self) -> asyncio.Queue:
        q: asyncio.Queue = asyncio.Queue(maxsize=256)
        self.queues.append(q)
        return q

    def unsubscribe(self, q: asyncio.Queue) -> None:
        if q in self.queues:
            self.queues.remove(q)

    def push(self, payload: dict) -> None:
        for q in list(self.queues):
            try:
                q.put_nowait(payload)
            except asyncio.QueueFull:
                pass

    def push_threadsafe(self, payload: dict) -> None:
        if self.loop is not None and self.loop.is_running():
            self.loop.call_soon_threadsafe(self.push, payload)


def create_demo_app(session: DemoSession) -> FastAPI:
    app = FastAPI(title="autopriv-demo", docs_url=None, redoc_url=None)
    lock = threading.Lock()
    broadcaster = _Broadcaster()
    player = {"thread": None, "stop": None}

    def snapshot() -> dict:
        return session.get_state()

    def broadcast() -> None:
        broadcaster.push(snapshot())

    @app.post("/api/apps")
    async def install_app(request: Request, preset: str | None = None):
        body = await request.body()
        try:
            with lock:
                threats, rules = session.install_app(body, preset)
        except AutoprivError as exc:
            return _error_response(exc)
        broadcast()
        return _json({"threats": serialize_threats(threats),
                      "rules": [serialize_rule(r) for r in rules]})

    @app.delete("/api/apps/{app_id}")
    async def remove_app(app_id: str):
        with lock:
            session.remove_app(app_id)
        broadcast()
        return _json({"removed": app_id})

    @app.post("/api/playback")
    async def playback(doc: dict):
        action = doc.get("action")
        if action == "step":
            n = int(doc.get("n", 1))
            with lock:
                session.step_ticks(n)
            broadcast()
        elif action == "start":
            if player["thread"] is None or not player["thread"].is_alive():
                broadcaster.loop = asyncio.get_running_loop()
                stop = threading.Event()

                def run():
                    while not stop.is_set():
                        with lock:
                            session.step_ticks(1)
                        broadcaster.push_threadsafe(snapshot())
                        time.sleep(session.config.tick_ms / 1000.0)

                thread = threading.Thread(target=run, daemon=True)
                player["thread"], player["stop"] = thread, stop
                session.playing = True
                thread.start()
        elif action == "pause":
            if player["stop"] is not None:
                player["stop"].set()
                player["thread"] = None
            session.playing = False
            broadcast()
        else:
            return _error_response(SchemaError(f"unknown action {action!r}"))
        return _json(snapshot())

    @app.post("/api/query")
    async def query(doc: dict):
        try:
            with lock:
                disclosed, pois, record = session.query_pois(
                    doc["app_id"], doc["category"], int(doc.get("k", 5)))
        except AutoprivError as exc:
            return _error_response(exc)
        except KeyError as exc:
            return _error_response(SchemaError(f"missing field {exc}"))
        broadcast()
        return _json({
            "disclosed": {"lat": disclosed.lat, "lon": disclosed.lon},
            "pois": [{"id": p.id, "category": p.category, "lat": p.location.lat,
                      "lon": p.location.lon, "name": p.name} for p in pois],
            "privacy": {"index": record.index,
                        "cumulative_epsilon": record.cumulative_epsilon,
                        "inference_error_m": record.inference_error_m},
        })

    @app.get("/api/state")
    async def state():
        with lock:
            return _json(snapshot())

    @app.get("/api/events")
    async def events(limit: int = 0):
        """Snapshot stream; one `state` event per change. limit=0 means
        unbounded (normal operation); a positive limit closes the stream
        after that many events, which keeps scripted clients simple."""
        from starlette.responses import StreamingResponse
        broadcaster.loop = asyncio.get_running_loop()
        queue = broadcaster.subscribe()

        async def stream():
            sent = 0
            try:
                with lock:
                    first = snapshot()
                yield (f"id: {sent}\nevent: state\n"
                       f"data: {json.dumps(first)}\n\n").encode()
                sent += 1
                while limit <= 0 or sent < limit:
                    payload = await queue.get()
                    yield (f"id: {sent}\nevent: state\n"
                           f"data: {json.dumps(payload)}\n\n").encode()
                    sent += 1
            finally:
                broadcaster.unsubscribe(queue)

        return StreamingResponse(stream(), media_type="text/event-stream",
                                 headers={"cache-control": "no-cache"})

    @app.get("/api/selection")
    async def selection(layer: str = "processing", principles: str = ""):
        try:
            layer_enum = Layer(layer)
        except ValueError:
            return _error_response(SchemaError(f"unknown layer {layer!r}"))
        try:
            wanted = {GdprPrinciple(p) for p in principles.split(",") if p}
        except ValueError as exc:
            return _error_response(SchemaError(str(exc)))
        if not wanted:
            wanted = {a.principle for a in session.pm.assessments
                      if a.relevance == "primary"}
        families = candidate_pet_families(wanted, layer_enum)
        concrete = []
        for family, _strength in families:
            concrete.extend(d.pet_id for d in session.pet_registry.of_family(family))
        ranked = rank_candidates(sorted(set(concrete)), default_maturity()) \
            if concrete else []
        return _json({
            "layer": layer_enum.value,
            "principles": sorted(p.value for p in wanted),
            "assessments": [{"principle": a.principle.value,
                             "relevance": a.relevance,
                             "accountability_required": a.accountability_required}
                            for a in session.pm.assessments],
            "candidate_families": [{"family": f.value, "strength": s.value}
                                   for f, s in families],
            "ranked": [{"pet_id": pet, "score": score} for pet, score in ranked],
        })

    @app.get("/api/pets")
    async def pets():
        registry = session.pet_registry
        return _json([{
            "pet_id": d.pet_id,
            "family": d.family.value,
            "applicable_layers": sorted(layer.value for layer in d.applicable_layers),
            "deterministic": d.deterministic,
            "description": d.description,
        } for d in (registry.get(i) for i in registry.ids())])

    return app
