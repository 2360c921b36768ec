"""Registry of available PETs and their parameter schemas."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..datamodel import Layer, PetFamily
from ..errors import CatalogError
from ..selection import MAPPING_ROWS


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str                      # "float" | "int" | "polygon" | "string"
    minimum: float | None = None
    maximum: float | None = None


@dataclass(frozen=True)
class PetDescriptor:
    pet_id: str
    family: PetFamily
    applicable_layers: frozenset[Layer]
    param_schema: tuple[ParamSpec, ...] = field(default_factory=tuple)
    deterministic: bool = False
    description: str = ""


class PetRegistry:
    def __init__(self, descriptors: list[PetDescriptor]):
        self._by_id: dict[str, PetDescriptor] = {}
        for d in descriptors:
            if d.pet_id in self._by_id:
                raise CatalogError(f"duplicate PET id {d.pet_id!r}")
            for layer in d.applicable_layers:
                if (layer, d.family) not in MAPPING_ROWS:
                    raise CatalogError(
                        f"{d.pet_id}: family {d.family.value} has no "
                        f"{layer.value}-layer row in the mapping table")
            self._by_id[d.pet_id] = d

    def __contains__(self, pet_id: str) -> bool:
        return pet_id in self._by_id

    def get(self, pet_id: str) -> PetDescriptor:
        try:
            return self._by_id[pet_id]
        except KeyError:
            raise CatalogError(f"unknown PET {pet_id!r}") from None

    def ids(self) -> list[str]:
        return sorted(self._by_id)

    def of_family(self, family: PetFamily) -> list[PetDescriptor]:
        return [d for d in self._by_id.values() if d.family is family]

    @classmethod
    def from_json(cls, path: str | Path) -> "PetRegistry":
        records = json.loads(Path(path).read_text())
        descs = []
        for rec in records:
            try:
                descs.append(PetDescriptor(
                    pet_id=rec["pet_id"],
                    family=PetFamily(rec["family"]),
                    applicable_layers=frozenset(Layer(x)
                                                for x in rec["applicable_layers"]),
                    param_schema=tuple(ParamSpec(p["name"], p["kind"],
                                                 p.get("minimum"), p.get("maximum"))
                                       for p in rec.get("param_schema", [])),
                    deterministic=rec.get("deterministic", False),
                    description=rec.get("description", ""),
                ))
            except (KeyError, ValueError) as exc:
                raise CatalogError(f"bad PET record {rec!r}: {exc}") from exc
        return cls(descs)
