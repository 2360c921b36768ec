"""In-vehicle publish-subscribe bus over simulated sources.

Topics keep a last-N retention ring so late subscribers get a backlog;
delivery is per-topic FIFO and nothing is delivered twice. Sources are
driven by an explicit simulated clock (``step_to``) so scenario runs are
exactly reproducible; wall-clock pacing exists only in the live demo loop.
"""

from __future__ import annotations

import csv
import io
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .datamodel import DataItem, GeoPoint, Scalar
from .errors import (MonotonicityError, OrderViolation, TrajectoryParseError,
                     TypeMismatch, UnknownTopic)


class Topic:
    def __init__(self, type_id: str, retention: int = 64):
        self.type_id = type_id
        self.retention = retention
        self._items: list[DataItem] = []
        self._base_seq = 0          # sequence number of _items[0]

    def append(self, item: DataItem) -> int:
        if item.type_id != self.type_id:
            raise TypeMismatch(f"item {item.type_id!r} on topic {self.type_id!r}")
        if self._items and item.timestamp_ms <= self._items[-1].timestamp_ms:
            raise OrderViolation(
                f"{self.type_id}: timestamp {item.timestamp_ms} not after "
                f"{self._items[-1].timestamp_ms}")
        self._items.append(item)
        if len(self._items) > self.retention:
            drop = len(self._items) - self.retention
            self._items = self._items[drop:]
            self._base_seq += drop
        return self._base_seq + len(self._items) - 1

    def latest(self, n: int = 1) -> list[DataItem]:
        return self._items[-n:] if n > 0 else []

    def since_seq(self, seq: int) -> tuple[list[DataItem], int]:
        start = max(seq, self._base_seq)
        items = self._items[start - self._base_seq:]
        return items, self._base_seq + len(self._items)

    @property
    def head_seq(self) -> int:
        return self._base_seq + len(self._items)


class Subscription:
    def __init__(self, bus: "DataBus", type_id: str, subscriber_id: str,
                 start_seq: int):
        self._bus = bus
        self.type_id = type_id
        self.subscriber_id = subscriber_id
        self._cursor = start_seq

    def poll(self) -> list[DataItem]:
        """All undelivered items, in publish order."""
        items, self._cursor = self._bus._read_since(self.type_id, self._cursor)
        return items


class DataBus:
    def __init__(self, retention: int = 64):
        self._topics: dict[str, Topic] = {}
        self._retention = retention
        self._lock = threading.Lock()

    def ensure_topic(self, type_id: str) -> Topic:
        with self._lock:
            if type_id not in self._topics:
                self._topics[type_id] = Topic(type_id, self._retention)
            return self._topics[type_id]

    def publish(self, item: DataItem) -> int:
        with self._lock:
            topic = self._topics.get(item.type_id)
            if topic is None:
                topic = self._topics[item.type_id] = Topic(item.type_id,
                                                           self._retention)
            return topic.append(item)

    def subscribe(self, type_id: str, subscriber_id: str) -> Subscription:
        """Backlog starts at the oldest retained item."""
        with self._lock:
            topic = self._topics.get(type_id)
            if topic is None:
                raise UnknownTopic(type_id)
            return Subscription(self, type_id, subscriber_id, topic._base_seq)

    def latest(self, type_id: str, n: int = 1) -> list[DataItem]:
        with self._lock:
            topic = self._topics.get(type_id)
            return topic.latest(n) if topic else []

    def _read_since(self, type_id: str, cursor: int):
        with self._lock:
            topic = self._topics.get(type_id)
            if topic is None:
                raise UnknownTopic(type_id)
            return topic.since_seq(cursor)


# ------------------------------------------------------------------ trajectory

@dataclass(frozen=True)
class TrajectorySource:
    waypoints: tuple[tuple[int, float, float], ...]    # (t_ms, lat, lon)
    speed_multiplier: float = 1.0
    loop: bool = False

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise MonotonicityError("trajectory needs at least 2 waypoints")
        ts = [w[0] for w in self.waypoints]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise MonotonicityError("waypoint timestamps must be strictly increasing")
        if self.speed_multiplier <= 0:
            raise TrajectoryParseError("speed multiplier must be positive")

    @property
    def start_ms(self) -> int:
        return self.waypoints[0][0]

    @property
    def duration_ms(self) -> int:
        return self.waypoints[-1][0] - self.waypoints[0][0]

    def position_at(self, t_ms: float) -> GeoPoint:
        """Linear interpolation along the waypoint timeline (clamped or looped)."""
        rel = (t_ms - self.start_ms) * self.speed_multiplier
        if self.loop:
            rel = rel % self.duration_ms
        rel = min(max(rel, 0.0), float(self.duration_ms))
        t = self.start_ms + rel
        points = self.waypoints
        lo, hi = 0, len(points) - 1
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if points[mid][0] <= t:
                lo = mid
            else:
                hi = mid
        (t0, lat0, lon0), (t1, lat1, lon1) = points[lo], points[hi]
        if t <= t0:
            return GeoPoint(lat0, lon0)
        if t >= t1:
            return GeoPoint(lat1, lon1)
        f = (t - t0) / (t1 - t0)
        return GeoPoint(lat0 + f * (lat1 - lat0), lon0 + f * (lon1 - lon0))


def load_trajectory(path_or_text: str | Path, *, speed_multiplier: float = 1.0,
                    loop: bool = False) -> TrajectorySource:
    """Load a ``t_ms,lat,lon`` CSV (header required)."""
    if isinstance(path_or_text, Path) or "\n" not in str(path_or_text):
        text = Path(path_or_text).read_text()
    else:
        text = str(path_or_text)
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and not all(c.strip() == "" for c in r)]
    if not rows or [c.strip() for c in rows[0]] != ["t_ms", "lat", "lon"]:
        raise TrajectoryParseError("expected header 't_ms,lat,lon'")
    waypoints = []
    for row in rows[1:]:
        try:
            waypoints.append((int(row[0]), float(row[1]), float(row[2])))
        except (ValueError, IndexError) as exc:
            raise TrajectoryParseError(f"bad waypoint row {row!r}: {exc}") from exc
    return TrajectorySource(tuple(waypoints), speed_multiplier, loop)


def load_gpx(path: str | Path, **kwargs) -> TrajectorySource:
    """Thin GPX adapter: track points with ISO timestamps become waypoints."""
    import xml.etree.ElementTree as ET
    from datetime import datetime, timezone

    try:
        root = ET.parse(str(path)).getroot()
    except ET.ParseError as exc:
        raise TrajectoryParseError(f"bad GPX: {exc}") from exc
    ns = {"g": root.tag.split("}")[0].strip("{")} if "}" in root.tag else {}
    prefix = "g:" if ns else ""
    waypoints = []
    for trkpt in root.iter():
        if not trkpt.tag.endswith("trkpt"):
            continue
        time_el = trkpt.find(f"{prefix}time", ns)
        if time_el is None or time_el.text is None:
            raise TrajectoryParseError("GPX track point without a time element")
        stamp = datetime.fromisoformat(time_el.text.replace("Z", "+00:00"))
        if stamp.tzinfo is None:
            stamp = stamp.replace(tzinfo=timezone.utc)
        waypoints.append((int(stamp.timestamp() * 1000),
                          float(trkpt.attrib["lat"]),
                          float(trkpt.attrib["lon"])))
    if not waypoints:
        raise TrajectoryParseError("GPX file contains no track points")
    return TrajectorySource(tuple(waypoints), **kwargs)


def save_trajectory(source: TrajectorySource, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_ms", "lat", "lon"])
        for t, lat, lon in source.waypoints:
            writer.writerow([t, repr(lat), repr(lon)])


# ----------------------------------------------------------------- waveforms

@dataclass(frozen=True)
class Waveform:
    kind: str                       # constant | sine | csv
    value: float = 0.0
    amplitude: float = 0.0
    period_s: float = 60.0
    samples: tuple[tuple[int, float], ...] = ()

    def value_at(self, t_ms: float, start_ms: int) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "sine":
            phase = 2.0 * math.pi * ((t_ms - start_ms) / 1000.0) / self.period_s
            return self.value + self.amplitude * math.sin(phase)
        # csv: step function over (t_ms, value) samples
        out = self.samples[0][1]
        for st, sv in self.samples:
            if st <= t_ms:
                out = sv
            else:
                break
        return out


@dataclass(frozen=True)
class ScalarSourceSpec:
    type_id: str
    rate_hz: float
    waveform: Waveform
    source: str = "sim"


def load_sensor_config(path: str | Path) -> list[ScalarSourceSpec]:
    import json
    doc = json.loads(Path(path).read_text())
    specs = []
    for rec in doc.get("scalar_sources", []):
        wf = rec["waveform"]
        waveform = Waveform(
            kind=wf["kind"],
            value=wf.get("value", 0.0),
            amplitude=wf.get("amplitude", 0.0),
            period_s=wf.get("period_s", 60.0),
            samples=tuple((int(t), float(v)) for t, v in wf.get("samples", [])),
        )
        specs.append(ScalarSourceSpec(rec["type_id"], float(rec["rate_hz"]),
                                      waveform, rec.get("source", "sim")))
    return specs


# -------------------------------------------------------------- source engine

@dataclass
class _Emitter:
    type_id: str
    rate_hz: float
    next_tick: int = 0              # tick index k emits at start + k/rate


class SourceEngine:
    """Replays a trajectory and scalar sources onto the bus.

    All emissions happen on absolute tick grids anchored at the scenario
    start, so stepping twice by delta equals stepping once by two deltas.
    """

    def __init__(self, bus: DataBus, trajectory: TrajectorySource | None,
                 scalar_specs=(), gps_type_id: str = "location.gps",
                 gps_rate_hz: float = 1.0, gps_source: str = "tcu"):
        self.bus = bus
        self.trajectory = trajectory
        self.gps_type_id = gps_type_id
        self.gps_source = gps_source
        self.scalar_specs = list(scalar_specs)
        self.start_ms = trajectory.start_ms if trajectory else 0
        self.now_ms = self.start_ms
        self._emitters = []
        if trajectory is not None and gps_rate_hz > 0:
            self._emitters.append((_Emitter(gps_type_id, gps_rate_hz), None))
        for spec in self.scalar_specs:
            if spec.rate_hz > 0:
                self._emitters.append((_Emitter(spec.type_id, spec.rate_hz), spec))

    def step_to(self, t_ms: int) -> list[DataItem]:
        """Advance simulated time, publishing every due emission in time order."""
        if t_ms < self.now_ms:
            raise OrderViolation("simulated time cannot go backwards")
        due: list[tuple[int, int, _Emitter, ScalarSourceSpec | None]] = []
        for order, (emitter, spec) in enumerate(self._emitters):
            interval = 1000.0 / emitter.rate_hz
            k = emitter.next_tick
            while self.start_ms + k * interval <= t_ms:
                due.append((int(self.start_ms + k * interval), order, emitter, spec))
                k += 1
            emitter.next_tick = k
        published = []
        for t, _order, emitter, spec in sorted(due, key=lambda d: (d[0], d[1])):
            if spec is None:
                point = self.trajectory.position_at(t)
                item = DataItem(self.gps_type_id, t, point, self.gps_source)
            else:
                value = spec.waveform.value_at(t, self.start_ms)
                item = DataItem(spec.type_id, t, Scalar(value), spec.source)
            self.bus.publish(item)
            published.append(item)
        self.now_ms = t_ms
        return published

    def step(self, delta_ms: int) -> list[DataItem]:
        return self.step_to(self.now_ms + delta_ms)
