"""Accessors for the JSON data files shipped inside the package."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .datamodel import DataCatalog
from .pets.registry import PetRegistry
from .selection import load_mapping, load_maturity, load_relevance_rules


def data_path(name: str) -> Path:
    return Path(resources.files("autopriv.data") / name)


def default_catalog() -> DataCatalog:
    return DataCatalog.from_json(data_path("catalog.json"))


def default_pet_registry() -> PetRegistry:
    return PetRegistry.from_json(data_path("pet_registry.json"))


def default_mapping():
    return load_mapping(data_path("gdpr_pet_mapping.json"))


def default_relevance_rules():
    return load_relevance_rules(data_path("relevance_rules.json"))


def default_maturity():
    return load_maturity(data_path("maturity_registry.json"))


def default_presets() -> dict:
    return json.loads(data_path("presets.json").read_text())


def default_threat_rules() -> dict:
    return json.loads(data_path("threat_rules.json").read_text())
