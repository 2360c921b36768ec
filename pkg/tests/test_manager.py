import json
from pathlib import Path

import numpy as np
import pytest

from autopriv.datamodel import DataItem, GeoPoint, Scalar, canonical_encode
from autopriv.errors import (DeniedByPolicy, InvalidParam, NoViablePet,
                             PipelineError, RateLimited, StaleData)
from autopriv.manager import (MediatedResponse, PipelineStage, PrivacyLedger,
                              PrivacyRule, RateLimiter, RuleConfig,
                              compose_stored_item, default_hull,
                              epsilon_from_precision, generate_rules, mediate)
from autopriv.manifest import AccessMode, parse_manifest
from autopriv.pets.mechanisms import planar_laplace, round_location
from autopriv.pets.pbe import Ciphertext, pbe_decrypt, pbe_keygen, pbe_setup

GOLDEN = Path(__file__).resolve().parent.parent / "fixtures" / "manifests_lbs" / "poifinder.json"
RANKING = [("planar_isotropic", 4.5), ("planar_laplace", 4.5),
           ("laplace_scalar", 4.5), ("round_location", 3.75), ("pbe", 3.75)]


def lbs_manifest(catalog, pet_registry, **overrides):
    doc = json.loads(GOLDEN.read_text())
    doc.update(overrides)
    return parse_manifest(json.dumps(doc), catalog, pet_registry)


def manifest_with_requirement(catalog, pet_registry, requirement):
    doc = json.loads(GOLDEN.read_text())
    doc["data_requirements"] = [requirement]
    return parse_manifest(json.dumps(doc), catalog, pet_registry)


class TestEpsilonFromPrecision:
    def test_500m(self):
        assert epsilon_from_precision(500.0) == pytest.approx(0.004)

    def test_200m(self):
        assert epsilon_from_precision(200.0) == pytest.approx(0.01)

    def test_zero_rejected(self):
        with pytest.raises(InvalidParam):
            epsilon_from_precision(0.0)


class TestGenerateRules:
    def test_lbs_fixture_pipeline(self, catalog, pet_registry):
        manifest = lbs_manifest(catalog, pet_registry)
        rules = generate_rules(manifest, RANKING, RuleConfig(), catalog)
        assert len(rules) == 1
        rule = rules[0]
        assert rule.access_mode is AccessMode.PET_MEDIATED
        assert [s.pet_id for s in rule.pipeline] == ["planar_isotropic", "pbe"]
        assert rule.pipeline[0].params["epsilon"] == pytest.approx(0.004)
        assert rule.pipeline[0].params["hull"] == default_hull(16).to_list()
        assert rule.policy == "purpose:poi-recommendation"
        assert rule.epsilon_per_disclosure == pytest.approx(0.004)

    def test_direct_sensitive_denied_without_override(self, catalog, pet_registry):
        manifest = manifest_with_requirement(catalog, pet_registry, {
            "type_id": "location.gps", "access_mode": "direct",
            "supported_pets": [],
            "constraints": {"max_staleness_s": 5, "min_precision": 1, "rate_hz": 1},
        })
        with pytest.raises(DeniedByPolicy):
            generate_rules(manifest, RANKING, RuleConfig(), catalog)
        config = RuleConfig(consent_overrides=frozenset(
            {("com.example.poifinder", "location.gps")}))
        rules = generate_rules(manifest, RANKING, config, catalog)
        assert rules[0].pipeline == ()

    def test_direct_technical_allowed(self, catalog, pet_registry):
        manifest = manifest_with_requirement(catalog, pet_registry, {
            "type_id": "engine.rpm", "access_mode": "direct",
            "supported_pets": [],
            "constraints": {"max_staleness_s": 5, "min_precision": 1, "rate_hz": 1},
        })
        rules = generate_rules(manifest, RANKING, RuleConfig(), catalog)
        assert rules[0].access_mode is AccessMode.DIRECT

    def test_computed_rule_records_computation(self, catalog, pet_registry):
        manifest = manifest_with_requirement(catalog, pet_registry, {
            "type_id": "vehicle.speed", "access_mode": "computed",
            "supported_pets": [],
            "constraints": {"max_staleness_s": 60, "min_precision": 1, "rate_hz": 1},
            "computation": {"aggregate": "mean", "window_s": 60},
        })
        rules = generate_rules(manifest, RANKING, RuleConfig(), catalog)
        rule = rules[0]
        assert rule.access_mode is AccessMode.COMPUTED
        assert rule.pipeline == ()
        assert rule.computation.aggregate == "mean"
        assert rule.epsilon_per_disclosure == 0.0

    def test_no_viable_pet(self, catalog, pet_registry):
        manifest = lbs_manifest(catalog, pet_registry)
        with pytest.raises(NoViablePet):
            generate_rules(manifest, [("laplace_scalar", 5.0)], RuleConfig(),
                           catalog)

    def test_pure_function_of_inputs(self, catalog, pet_registry):
        manifest = lbs_manifest(catalog, pet_registry)
        a = generate_rules(manifest, RANKING, RuleConfig(), catalog)
        b = generate_rules(manifest, RANKING, RuleConfig(), catalog)
        assert a == b

    def test_preset_multiplier_scales_epsilon(self, catalog, pet_registry):
        manifest = lbs_manifest(catalog, pet_registry)
        low_noise = generate_rules(manifest, RANKING,
                                   RuleConfig(epsilon_multiplier=2.0), catalog)
        assert low_noise[0].epsilon_per_disclosure == pytest.approx(0.008)


def make_rule(pet_stage: PipelineStage | None, mode=AccessMode.PET_MEDIATED,
              policy="purpose:poi-recommendation", rate_hz=0.0, staleness_s=5.0,
              epsilon=0.0, computation=None, app="com.example.poifinder",
              type_id="location.gps"):
    pipeline = ()
    if mode in (AccessMode.PET_MEDIATED, AccessMode.COMBINED):
        pipeline = (pet_stage, PipelineStage("pbe", {"policy": policy}))
    return PrivacyRule(app, type_id, mode, pipeline, policy, rate_hz,
                       staleness_s, epsilon, computation=computation)


def gps_items(n=3, t0=10_000, dt=1000):
    return [DataItem("location.gps", t0 + i * dt, GeoPoint(50.11, 8.68), "tcu")
            for i in range(n)]


class TestMediate:
    def test_computed_mean_no_raw_payload(self):
        from autopriv.manifest import Computation
        rule = make_rule(None, mode=AccessMode.COMPUTED,
                         computation=Computation("mean", 60),
                         type_id="vehicle.speed", staleness_s=60)
        items = [DataItem("vehicle.speed", 1000 + i, Scalar(v), "ecu")
                 for i, v in enumerate([10.0, 20.0, 30.0])]
        response = mediate(rule, items, 2000, np.random.default_rng(0))
        assert response.value == pytest.approx(20.0)
        assert response.item is None

    def test_pet_mediated_always_differs_and_ledger_grows(self):
        eps = 0.004
        stage = PipelineStage("planar_laplace", {"epsilon": eps})
        rule = make_rule(stage, epsilon=eps)
        ledger = PrivacyLedger()
        rng = np.random.default_rng(77)
        items = gps_items()
        raw_payloads = {i.payload for i in items}
        for k in range(1000):
            response = mediate(rule, items, 12_000, rng, ledger=ledger)
            assert response.item.payload not in raw_payloads
        assert len(ledger) == 1000
        assert ledger.cumulative_epsilon(rule.app_id, rule.type_id) == \
            pytest.approx(1000 * eps)

    def test_rate_limited_second_request(self):
        stage = PipelineStage("planar_laplace", {"epsilon": 0.01})
        rule = make_rule(stage, rate_hz=0.2, epsilon=0.01)
        limiter = RateLimiter()
        rng = np.random.default_rng(1)
        items = gps_items()
        mediate(rule, items, 12_000, rng, limiter=limiter)
        with pytest.raises(RateLimited):
            mediate(rule, items, 13_000, rng, limiter=limiter)
        # one full rate window later it is allowed again
        mediate(rule, items, 17_000, rng, limiter=limiter)

    def test_stale_data(self):
        stage = PipelineStage("planar_laplace", {"epsilon": 0.01})
        rule = make_rule(stage, staleness_s=5.0)
        items = gps_items(n=1, t0=1000)
        with pytest.raises(StaleData):
            mediate(rule, items, 60_000, np.random.default_rng(0))
        with pytest.raises(StaleData):
            mediate(rule, [], 60_000, np.random.default_rng(0))

    def test_direct_returns_raw(self):
        rule = make_rule(None, mode=AccessMode.DIRECT)
        items = gps_items()
        response = mediate(rule, items, 12_500, np.random.default_rng(0))
        assert response.item == items[-1]

    def test_mode_confinement_randomized(self):
        from autopriv.manifest import Computation
        rule = make_rule(None, mode=AccessMode.COMPUTED,
                         computation=Computation("mean", 120),
                         type_id="vehicle.speed", staleness_s=120)
        rng = np.random.default_rng(13)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            items = [DataItem("vehicle.speed", 1000 + i * 100,
                              Scalar(float(rng.uniform(-50, 150))), "ecu")
                     for i in range(n)]
            response = mediate(rule, items, 1000 + n * 100,
                               np.random.default_rng(0))
            raw_values = {i.payload.value for i in items}
            # a mean of >= 2 distinct samples never equals any single sample
            if len(raw_values) >= 2:
                assert response.value not in raw_values


class TestComposeStoredItem:
    def setup_method(self):
        self.rng = np.random.default_rng(55)
        self.master, self.handle = pbe_setup(self.rng)
        self.key = pbe_keygen(self.master, {"purpose:poi-recommendation"})

    def test_encrypt_last_bit_exact_composition(self):
        eps = 0.004
        stage = PipelineStage("planar_laplace", {"epsilon": eps})
        rule = make_rule(stage, epsilon=eps)
        item = gps_items(1)[0]

        stored = compose_stored_item(rule, item, self.handle,
                                     np.random.default_rng(2024))
        decrypted = pbe_decrypt(self.key, Ciphertext.from_bytes(stored.ciphertext))

        # reproduce the pipeline with the same seed: same noise, same bytes
        replay_rng = np.random.default_rng(2024)
        noised = planar_laplace(item.payload, eps, replay_rng)
        expected = canonical_encode(DataItem(item.type_id, item.timestamp_ms,
                                             noised, item.source))
        assert decrypted == expected
        assert decrypted != canonical_encode(item)

    def test_round_location_payload_on_grid(self):
        stage = PipelineStage("round_location", {"grid_m": 1000.0})
        rule = make_rule(stage)
        item = gps_items(1)[0]
        stored = compose_stored_item(rule, item, self.handle, self.rng)
        decrypted = pbe_decrypt(self.key, Ciphertext.from_bytes(stored.ciphertext))
        from autopriv.datamodel import canonical_decode
        snapped = canonical_decode(decrypted).payload
        assert round_location(snapped, 1000.0) == snapped

    def test_missing_encrypt_terminator_rejected(self):
        stage = PipelineStage("planar_laplace", {"epsilon": 0.01})
        with pytest.raises(PipelineError):
            PrivacyRule("a.b", "location.gps", AccessMode.PET_MEDIATED,
                        (stage,), "purpose:x", 0.0, 5.0, 0.01)
        direct = PrivacyRule("a.b", "location.gps", AccessMode.DIRECT, (),
                             "purpose:x", 0.0, 5.0, 0.0)
        with pytest.raises(PipelineError):
            compose_stored_item(direct, gps_items(1)[0], self.handle, self.rng)


class TestLedger:
    def test_two_disclosures_sum(self):
        ledger = PrivacyLedger()
        ledger.record(1, "a.b", "t", 0.5)
        ledger.record(2, "a.b", "t", 0.5)
        assert ledger.cumulative_epsilon("a.b", "t") == pytest.approx(1.0)

    def test_zero_disclosures(self):
        assert PrivacyLedger().cumulative_epsilon("a.b", "t") == 0.0

    def test_random_corpus_matches_brute_force_sum(self):
        rng = np.random.default_rng(3)
        ledger = PrivacyLedger()
        log = []
        for i in range(100):
            app = f"app.{rng.integers(0, 4)}"
            type_id = ["location.gps", "vehicle.speed"][rng.integers(0, 2)]
            eps = float(rng.uniform(0, 0.1))
            ledger.record(i + 1, app, type_id, eps)
            log.append((app, type_id, eps))
        for app in {a for a, _, _ in log}:
            for type_id in {t for _, t, _ in log}:
                brute = sum(e for a, t, e in log if a == app and t == type_id)
                assert ledger.cumulative_epsilon(app, type_id) == \
                    pytest.approx(brute)

    def test_monotone_series(self):
        rng = np.random.default_rng(9)
        ledger = PrivacyLedger()
        for i in range(300):
            ledger.record(i + 1, "a.b", "t", float(rng.uniform(0, 0.05)))
        series = ledger.series("a.b", "t")
        cumulative = [p["cumulative_epsilon"] for p in series]
        assert all(b >= a for a, b in zip(cumulative, cumulative[1:]))

    def test_negative_epsilon_rejected(self):
        with pytest.raises(InvalidParam):
            PrivacyLedger().record(1, "a.b", "t", -0.1)
