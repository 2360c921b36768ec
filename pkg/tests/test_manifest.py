import json
from pathlib import Path

import pytest

from autopriv.datamodel import Classification
from autopriv.defaults import default_threat_rules
from autopriv.errors import CatalogError, ManifestSyntaxError, SchemaError
from autopriv.manifest import (AccessMode, Severity, derive_threats,
                               parse_manifest, serialize_manifest)

GOLDEN = Path(__file__).resolve().parent.parent / "fixtures" / "manifests_lbs" / "poifinder.json"


def lbs_manifest_doc():
    return json.loads(GOLDEN.read_text())


class TestParse:
    def test_golden_fixture_round_trips(self, catalog, pet_registry):
        text = GOLDEN.read_text()
        manifest = parse_manifest(text, catalog, pet_registry)
        assert manifest.app_id == "com.example.poifinder"
        req = manifest.data_requirements[0]
        assert req.access_mode is AccessMode.PET_MEDIATED
        assert req.supported_pets == ("planar_isotropic", "planar_laplace")
        assert req.constraints.min_precision == 500
        assert req.constraints.max_staleness_s == 5
        # serialize -> parse is the identity
        again = parse_manifest(serialize_manifest(manifest), catalog, pet_registry)
        assert again == manifest

    def test_malformed_json_syntax_error(self, catalog):
        with pytest.raises(ManifestSyntaxError):
            parse_manifest("{not json", catalog)

    def test_unknown_top_level_key_rejected(self, catalog, pet_registry):
        doc = lbs_manifest_doc()
        doc["surprise"] = 1
        with pytest.raises(SchemaError):
            parse_manifest(json.dumps(doc), catalog, pet_registry)

    def test_missing_key_rejected(self, catalog, pet_registry):
        doc = lbs_manifest_doc()
        del doc["purposes"]
        with pytest.raises(SchemaError):
            parse_manifest(json.dumps(doc), catalog, pet_registry)

    def test_pet_mediated_needs_supported_pets(self, catalog, pet_registry):
        doc = lbs_manifest_doc()
        doc["data_requirements"][0]["supported_pets"] = []
        with pytest.raises(SchemaError):
            parse_manifest(json.dumps(doc), catalog, pet_registry)

    def test_unknown_type_id_catalog_error(self, catalog, pet_registry):
        doc = lbs_manifest_doc()
        doc["data_requirements"][0]["type_id"] = "engine.unobtainium"
        with pytest.raises(CatalogError):
            parse_manifest(json.dumps(doc), catalog, pet_registry)

    def test_unknown_pet_catalog_error(self, catalog, pet_registry):
        doc = lbs_manifest_doc()
        doc["data_requirements"][0]["supported_pets"] = ["quantum_cloak"]
        with pytest.raises(CatalogError):
            parse_manifest(json.dumps(doc), catalog, pet_registry)

    def test_computed_requires_computation(self, catalog, pet_registry):
        doc = lbs_manifest_doc()
        doc["data_requirements"][0] = {
            "type_id": "vehicle.speed", "access_mode": "computed",
            "supported_pets": [],
            "constraints": {"max_staleness_s": 60, "min_precision": 1, "rate_hz": 1},
        }
        with pytest.raises(SchemaError):
            parse_manifest(json.dumps(doc), catalog, pet_registry)
        doc["data_requirements"][0]["computation"] = {"aggregate": "mean",
                                                      "window_s": 60}
        manifest = parse_manifest(json.dumps(doc), catalog, pet_registry)
        assert manifest.data_requirements[0].computation.aggregate == "mean"

    def test_extra_constraint_key_rejected(self, catalog, pet_registry):
        doc = lbs_manifest_doc()
        doc["data_requirements"][0]["constraints"]["bonus"] = 1
        with pytest.raises(SchemaError):
            parse_manifest(json.dumps(doc), catalog, pet_registry)

    def test_bad_app_id_and_version(self, catalog, pet_registry):
        doc = lbs_manifest_doc()
        doc["app_id"] = "nodots"
        with pytest.raises(SchemaError):
            parse_manifest(json.dumps(doc), catalog, pet_registry)
        doc = lbs_manifest_doc()
        doc["version"] = "1.2"
        with pytest.raises(SchemaError):
            parse_manifest(json.dumps(doc), catalog, pet_registry)


class TestThreats:
    def manifest_with(self, catalog, pet_registry, requirement: dict):
        doc = lbs_manifest_doc()
        doc["data_requirements"] = [requirement]
        return parse_manifest(json.dumps(doc), catalog, pet_registry)

    def test_direct_sensitive_is_high_with_tracking_text(self, catalog, pet_registry):
        manifest = self.manifest_with(catalog, pet_registry, {
            "type_id": "location.gps", "access_mode": "direct",
            "supported_pets": [],
            "constraints": {"max_staleness_s": 5, "min_precision": 1, "rate_hz": 1},
        })
        report = derive_threats(manifest, catalog, default_threat_rules())
        entry = report.entries[0]
        assert entry.severity is Severity.HIGH
        assert entry.classification is Classification.SENSITIVE_PERSONAL
        assert any("movement-pattern" in t for t in entry.threat_texts)

    def test_computed_speed_is_low(self, catalog, pet_registry):
        manifest = self.manifest_with(catalog, pet_registry, {
            "type_id": "vehicle.speed", "access_mode": "computed",
            "supported_pets": [],
            "constraints": {"max_staleness_s": 60, "min_precision": 1, "rate_hz": 1},
            "computation": {"aggregate": "mean", "window_s": 60},
        })
        report = derive_threats(manifest, catalog, default_threat_rules())
        assert report.entries[0].severity is Severity.LOW

    def test_pet_mediated_location_is_medium(self, catalog, pet_registry):
        manifest = parse_manifest(GOLDEN.read_text(), catalog, pet_registry)
        report = derive_threats(manifest, catalog, default_threat_rules())
        assert report.entries[0].severity is Severity.MEDIUM

    def test_deterministic_and_total(self, catalog, pet_registry):
        manifest = parse_manifest(GOLDEN.read_text(), catalog, pet_registry)
        a = derive_threats(manifest, catalog, default_threat_rules())
        b = derive_threats(manifest, catalog, default_threat_rules())
        assert a == b
        assert len(a.entries) == len(manifest.data_requirements)

    def test_threat_table_must_cover_all_cells(self, catalog, pet_registry):
        manifest = parse_manifest(GOLDEN.read_text(), catalog, pet_registry)
        broken = {"rules": default_threat_rules()["rules"][1:]}
        with pytest.raises(SchemaError):
            derive_threats(manifest, catalog, broken)
