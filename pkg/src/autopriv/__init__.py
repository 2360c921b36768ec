"""Vehicle-data privacy toolkit: PET mechanisms, a GDPR-principle-driven PET
selection engine, an in-vehicle privacy manager, a deduplicating encrypted
uplink to honest-but-curious storage, and a location-based-service demo with
live trajectory-privacy accounting."""

__version__ = "0.1.0"

from .datamodel import (Classification, DataCatalog, DataItem,
                        DataTypeDescriptor, GdprPrinciple, GeoPoint, Layer,
                        Opaque, PetFamily, Scalar, TrustModel, canonical_decode,
                        canonical_encode, validate_item)
from .geometry import ConvexPolygon, LocalProjection, regular_polygon
from .manager import (PrivacyLedger, PrivacyManager, PrivacyRule, RuleConfig,
                      compose_stored_item, epsilon_from_precision,
                      generate_rules, mediate)
from .manifest import AccessMode, AppManifest, parse_manifest, serialize_manifest

__all__ = [
    "Classification", "DataCatalog", "DataItem", "DataTypeDescriptor",
    "GdprPrinciple", "GeoPoint", "Layer", "Opaque", "PetFamily", "Scalar",
    "TrustModel", "canonical_decode", "canonical_encode", "validate_item",
    "ConvexPolygon", "LocalProjection", "regular_polygon",
    "PrivacyLedger", "PrivacyManager", "PrivacyRule", "RuleConfig",
    "compose_stored_item", "epsilon_from_precision", "generate_rules", "mediate",
    "AccessMode", "AppManifest", "parse_manifest", "serialize_manifest",
    "__version__",
]
