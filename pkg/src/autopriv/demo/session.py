"""Full three-party scenario behind one object: vehicle + privacy manager +
uplink on one side, storage server in the middle (spoken to over its HTTP
surface), LBS provider and Bayesian adversary on the other.

Everything runs on simulated time driven by ``step``; with a fixed seed a
scripted interaction reproduces byte-identical state snapshots. The true
vehicle position leaves this object only through ``get_state`` (the trusted
visualization channel); query responses carry the disclosed location only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..databus import DataBus, SourceEngine, load_sensor_config, load_trajectory
from ..datamodel import (DataCatalog, EntityRole, GeoPoint, TrustEntity,
                         TrustLevel, TrustModel, canonical_encode)
from ..defaults import (default_catalog, default_maturity, default_pet_registry,
                        default_presets, default_relevance_rules,
                        default_threat_rules)
from ..errors import (AlreadyInstalled, RateLimited, ScenarioError, StaleData)
from ..lbs import AdversaryGrid, PoiStore, recall_at_k
from ..geometry import LocalProjection
from ..manager import PrivacyManager, RuleConfig
from ..manifest import parse_manifest
from ..pets.mechanisms import pseudonymize
from ..storage import StorageConfig, StorageServer
from ..storage_api import HttpStorageEndpoint, InProcessStorageEndpoint
from ..uplink import (BundleSender, WireTap, bundle_epoch, plan_streams,
                      required_period_s)

DEFAULT_TRUST_MODEL = TrustModel(entities=(
    TrustEntity("driver", EntityRole.VEHICLE_USER, TrustLevel.TRUSTED),
    TrustEntity("storage-1", EntityRole.INTERMEDIATE_SERVER,
                TrustLevel.HONEST_BUT_CURIOUS),
    TrustEntity("lbs-provider", EntityRole.SERVICE_PROVIDER,
                TrustLevel.HONEST_BUT_CURIOUS),
    TrustEntity("oem-authority", EntityRole.KEY_AUTHORITY, TrustLevel.TRUSTED),
))


@dataclass(frozen=True)
class AutoQuery:
    app_id: str
    category: str
    k: int = 5
    period_s: float = 5.0


@dataclass
class ScenarioConfig:
    trajectory: Path
    pois: Path
    sensors: Path | None = None
    manifests_dir: Path | None = None
    storage: str = "inprocess"
    storage_log_dir: Path | None = None
    epsilon_preset: str = "medium"
    seed: int = 1
    tick_ms: int = 100
    gps_rate_hz: float = 1.0
    bundle_interval_s: float = 1.0
    adversary_cell_m: float = 100.0
    adversary_margin_m: float = 500.0
    consent_overrides: tuple = ()
    trust_model: Path | None = None
    auto_queries: tuple[AutoQuery, ...] = ()

    @classmethod
    def from_json(cls, path: str | Path) -> "ScenarioConfig":
        base = Path(path).parent
        doc = json.loads(Path(path).read_text())

        def resolve(key):
            return (base / doc[key]).resolve() if doc.get(key) else None

        required = [k for k in ("trajectory", "pois") if not doc.get(k)]
        if required:
            raise ScenarioError(f"scenario is missing {required}")
        return cls(
            trajectory=resolve("trajectory"),
            pois=resolve("pois"),
            sensors=resolve("sensors"),
            manifests_dir=resolve("manifests_dir"),
            storage=doc.get("storage", "inprocess"),
            storage_log_dir=resolve("storage_log_dir"),
            epsilon_preset=doc.get("epsilon_preset", "medium"),
            seed=int(doc.get("seed", 1)),
            tick_ms=int(doc.get("tick_ms", 100)),
            gps_rate_hz=float(doc.get("gps_rate_hz", 1.0)),
            bundle_interval_s=float(doc.get("bundle_interval_s", 1.0)),
            adversary_cell_m=float(doc.get("adversary_cell_m", 100.0)),
            adversary_margin_m=float(doc.get("adversary_margin_m", 500.0)),
            consent_overrides=tuple(tuple(p) for p in doc.get("consent_overrides", [])),
            trust_model=resolve("trust_model"),
            auto_queries=tuple(AutoQuery(q["app_id"], q["category"],
                                         int(q.get("k", 5)),
                                         float(q.get("period_s", 5.0)))
                               for q in doc.get("auto_queries", [])),
        )


@dataclass
class QueryRecord:
    index: int
    t_ms: int
    app_id: str
    true_loc: GeoPoint
    disclosed_loc: GeoPoint
    cumulative_epsilon: float
    inference_error_m: float
    recall: float
    equal_to_true: bool


class DemoSession:
    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.catalog: DataCatalog = default_catalog()
        self.pet_registry = default_pet_registry()
        presets = default_presets()

        trust = TrustModel.from_json(config.trust_model) if config.trust_model \
            else DEFAULT_TRUST_MODEL
        self._presets = presets
        rule_config = RuleConfig.from_presets(presets, config.epsilon_preset,
                                              config.consent_overrides)
        seed_seq = np.random.SeedSequence(config.seed)
        pm_seed, _reserved = seed_seq.spawn(2)
        self.pm = PrivacyManager(self.catalog, self.pet_registry,
                                 default_maturity(), trust,
                                 default_relevance_rules(),
                                 default_threat_rules(), rule_config,
                                 np.random.default_rng(pm_seed))

        trajectory = load_trajectory(config.trajectory)
        sensors = load_sensor_config(config.sensors) if config.sensors else []
        self.bus = DataBus(retention=256)
        self.engine = SourceEngine(self.bus, trajectory, sensors,
                                   gps_rate_hz=config.gps_rate_hz)
        self.trajectory = trajectory

        # one projection for the whole scenario, anchored at the first waypoint
        t0, lat0, lon0 = trajectory.waypoints[0]
        self.projection = LocalProjection(lat0, lon0)

        self.poi_store = PoiStore.from_csv(config.pois, projection=self.projection)
        lats = [w[1] for w in trajectory.waypoints] + \
            [p.location.lat for p in self.poi_store.pois]
        lons = [w[2] for w in trajectory.waypoints] + \
            [p.location.lon for p in self.poi_store.pois]
        margin_deg = config.adversary_margin_m / 111_000.0
        self.adversary = AdversaryGrid(min(lats) - margin_deg, min(lons) - margin_deg,
                                       max(lats) + margin_deg, max(lons) + margin_deg,
                                       self.projection, config.adversary_cell_m)

        if config.storage == "inprocess":
            from ..storage import ProviderRecord
            provider = ProviderRecord("lbs-provider",
                                      frozenset({"purpose:poi-recommendation"}))
            self.storage_server = StorageServer(StorageConfig(
                providers=(provider,), log_dir=config.storage_log_dir))
            endpoint = InProcessStorageEndpoint(self.storage_server)
        else:
            self.storage_server = None
            endpoint = HttpStorageEndpoint(config.storage)
        self.tap = WireTap()
        self.sender = BundleSender(endpoint, tap=self.tap)

        self.vehicle_pseudonym = pseudonymize("vehicle-1", "uplink",
                                              self.pm.pseudonym_secret)
        self.stream_plan = []
        self.start_ms = trajectory.start_ms
        self._last_bundle_ms = self.start_ms
        self._epoch_counter = 0
        self.threat_reports: dict[str, object] = {}
        self.query_log: list[QueryRecord] = []
        self.raw_encodings: list[bytes] = []
        self.auto_query_counts: dict[str, int] = {}
        self.playing = False
        self.state_version = 0

        if config.manifests_dir:
            for manifest_path in sorted(Path(config.manifests_dir).glob("*.json")):
                self.install_app(manifest_path.read_text())

    # ------------------------------------------------------------------ apps

    def install_app(self, manifest_text: str | bytes, preset: str | None = None):
        """Install from manifest text; an explicit preset overrides the
        scenario's noise level for this app's rules."""
        manifest = parse_manifest(manifest_text, self.catalog, self.pet_registry)
        if manifest.app_id in self.pm.manifests:
            raise AlreadyInstalled(manifest.app_id)
        config = None
        if preset is not None:
            config = RuleConfig.from_presets(self._presets, preset,
                                             self.config.consent_overrides)
        threats, rules = self.pm.install(manifest, config)
        self.threat_reports[manifest.app_id] = threats
        self.stream_plan = plan_streams(self.pm.rules.values())
        self.state_version += 1
        return threats, rules

    def remove_app(self, app_id: str) -> None:
        self.pm.uninstall(app_id)
        self.threat_reports.pop(app_id, None)
        self.stream_plan = plan_streams(self.pm.rules.values())
        self.state_version += 1

    # ------------------------------------------------------------------ time

    @property
    def now_ms(self) -> int:
        return self.engine.now_ms

    def step_ticks(self, n: int) -> None:
        """Advance n simulated ticks, firing sources, uplink, and auto queries."""
        for _ in range(max(0, n)):
            target = self.now_ms + self.config.tick_ms
            published = self.engine.step_to(target)
            for item in published:
                self.raw_encodings.append(canonical_encode(item))
            self._run_uplink(target)
            self._run_auto_queries(target)
        if n > 0:
            self.state_version += 1

    def _run_uplink(self, now_ms: int) -> None:
        interval_ms = self.config.bundle_interval_s * 1000.0
        while self._last_bundle_ms + interval_ms <= now_ms:
            epoch_end = int(self._last_bundle_ms + interval_ms)
            self._emit_epoch(self._last_bundle_ms, epoch_end)
            self._last_bundle_ms = epoch_end

    def _emit_epoch(self, from_ms: int, to_ms: int) -> None:
        due_keys = []
        items = {}
        for spec in self.stream_plan:
            fires = spec.fire_times_ms(self.start_ms, from_ms, to_ms)
            if not fires:
                continue
            latest = self.bus.latest(spec.type_id, 1)
            if not latest:
                continue
            due_keys.append(spec.item_key)
            items[spec.item_key] = self.pm.compose(spec.pipeline_rule, latest[-1])
        self._epoch_counter += 1
        if not due_keys:
            return
        bundle = bundle_epoch(self.stream_plan, self._epoch_counter,
                              self.vehicle_pseudonym, to_ms, due_keys, items)
        self.sender.send(bundle)

    def _run_auto_queries(self, now_ms: int) -> None:
        for q in self.config.auto_queries:
            period_ms = q.period_s * 1000.0
            count = self.auto_query_counts.get(q.app_id, 0)
            while self.start_ms + (count + 1) * period_ms <= now_ms:
                count += 1
                try:
                    self.query_pois(q.app_id, q.category, q.k)
                except (RateLimited, StaleData):
                    pass
            self.auto_query_counts[q.app_id] = count

    # ---------------------------------------------------------------- queries

    def true_location(self) -> GeoPoint:
        return self.trajectory.position_at(self.now_ms)

    def query_pois(self, app_id: str, category: str, k: int):
        """One LBS interaction: mediate, update adversary, query POIs."""
        now = self.now_ms
        response = self.pm.mediate(app_id, "location.gps",
                                   self.bus.latest("location.gps", 8), now)
        disclosed = response.item.payload
        rule = self.pm.rule_for(app_id, "location.gps")
        if rule.pet_stages and rule.pet_stages[0].pet_id in (
                "planar_laplace", "planar_isotropic"):
            stage = rule.pet_stages[0]
            self.adversary.update(disclosed, stage.pet_id, stage.params)
        pois = self.poi_store.nearest(disclosed, category, k)

        true_loc = self.true_location()
        record = QueryRecord(
            index=len(self.query_log),
            t_ms=now,
            app_id=app_id,
            true_loc=true_loc,
            disclosed_loc=disclosed,
            cumulative_epsilon=self.pm.ledger.cumulative_epsilon(app_id,
                                                                 "location.gps"),
            inference_error_m=self.adversary.expected_inference_error(true_loc),
            recall=recall_at_k(self.poi_store, true_loc, disclosed, category, k),
            equal_to_true=(disclosed == true_loc),
        )
        self.query_log.append(record)
        self.state_version += 1
        return disclosed, pois, record

    # ------------------------------------------------------------------ state

    def _entry_count(self, period_s: float) -> int:
        # one entry per bundle epoch at most, so the effective period is
        # bounded below by the bundle interval
        effective_ms = max(period_s, self.config.bundle_interval_s) * 1000.0
        elapsed_ms = self.now_ms - self.start_ms
        return int(math.floor(elapsed_ms / effective_ms + 1e-9))

    def naive_entry_count(self) -> int:
        """Entries a per-app (no dedup) uplink would have sent by now."""
        return sum(self._entry_count(required_period_s(rule))
                   for rule in self.pm.rules.values()
                   if rule.pipeline and rule.pipeline[-1].pet_id == "pbe")

    def planned_entry_count(self) -> int:
        """Entries the dedup schedule fires by now (analytic)."""
        return sum(self._entry_count(spec.period_s) for spec in self.stream_plan)

    def get_state(self) -> dict:
        true_loc = self.true_location()
        latest_fix = self.bus.latest("location.gps", 1)
        last = self.query_log[-1] if self.query_log else None
        return {
            "t_ms": self.now_ms,
            "playing": self.playing,
            "state_version": self.state_version,
            "true_location": {"lat": true_loc.lat, "lon": true_loc.lon},
            "has_gps_fix": bool(latest_fix),
            "last_disclosed": ({"lat": last.disclosed_loc.lat,
                                "lon": last.disclosed_loc.lon}
                               if last else None),
            "apps": sorted(self.pm.manifests),
            "epsilon_series": [
                {"index": q.index, "t_ms": q.t_ms, "app_id": q.app_id,
                 "cumulative_epsilon": q.cumulative_epsilon}
                for q in self.query_log],
            "inference_error_series": [
                {"index": q.index, "t_ms": q.t_ms,
                 "inference_error_m": q.inference_error_m}
                for q in self.query_log],
            "disclosure_count": len(self.query_log),
            "ledger_length": len(self.pm.ledger),
            "stream_plan": [
                {"item_key": spec.item_key.hex(), "type_id": spec.type_id,
                 "period_s": spec.period_s,
                 "subscribers": sorted(spec.subscriber_apps)}
                for spec in self.stream_plan],
            "bandwidth": {
                "bundles_sent": self.sender.sent_bundles,
                "entries_sent": self.sender.sent_entries,
                "duplicate_entries": self.sender.duplicate_entries,
                "bytes_sent": self.sender.sent_bytes,
                "naive_entries": self.naive_entry_count(),
                "planned_entries": self.planned_entry_count(),
            },
        }

    # ------------------------------------------------------------- invariants

    def leak_check(self) -> dict:
        """Scenario-level privacy invariants, evaluated on demand."""
        tap_bytes = self.tap.all_bytes()
        dump = self.storage_server.dump_state() if self.storage_server else b""
        tap_hits = sum(1 for enc in self.raw_encodings if enc in tap_bytes)
        dump_hits = sum(1 for enc in self.raw_encodings if enc in dump)
        equal = sum(1 for q in self.query_log if q.equal_to_true)
        return {
            "raw_items": len(self.raw_encodings),
            "tap_plaintext_hits": tap_hits,
            "storage_plaintext_hits": dump_hits,
            "disclosures": len(self.query_log),
            "disclosed_equal_true": equal,
            "ok": tap_hits == 0 and dump_hits == 0 and equal == 0,
        }
