"""
PET selection walk-through
==========================

From a trust model to a ranked PET shortlist: identify the relevant GDPR
principles, look up candidate PET families per layer in the mapping table,
expand them to concrete PETs, and rank by maturity.
"""

from pathlib import Path

from autopriv.datamodel import Layer, TrustModel
from autopriv.defaults import (default_maturity, default_pet_registry,
                               default_relevance_rules)
from autopriv.selection import (candidate_pet_families, rank_candidates,
                                relevant_principles)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# Step 1: the use case's trust model. Intermediate storage servers and the
# service provider are honest-but-curious; only the vehicle is trusted.
trust = TrustModel.from_json(FIXTURES / "trust_threeparty.json")
for entity in trust.entities:
    print(f"  {entity.entity_id:14s} {entity.role.value:20s} {entity.trust.value}")

# Step 2: which principles need technical enforcement here?
assessments = relevant_principles(trust, default_relevance_rules())
print("\nprinciple relevance:")
for a in assessments:
    flag = "  [accountability evidence required]" if a.accountability_required else ""
    print(f"  {a.principle.value:4s} {a.relevance}{flag}")
primary = {a.principle for a in assessments if a.relevance == "primary"}

# Step 3: candidate PET families per layer, straight from the mapping table.
print("\ncandidate families per layer for the primary principles:")
for layer in Layer:
    fams = candidate_pet_families(primary, layer)
    print(f"  {layer.value:14s} {[(f.value, s.value) for f, s in fams]}")

# Step 4: expand to concrete PETs at the processing layer and rank by
# maturity (utility, scalability, robustness, low-power suitability).
registry = default_pet_registry()
families = [f for f, _ in candidate_pet_families(primary, Layer.PROCESSING)]
concrete = sorted({d.pet_id for fam in families for d in registry.of_family(fam)})
print("\nmaturity ranking at the processing layer:")
for pet_id, score in rank_candidates(concrete, default_maturity()):
    print(f"  {pet_id:18s} {score:4.2f}")
