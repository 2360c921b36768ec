"""Privacy-enhancing technologies: obfuscation mechanisms, purpose policies,
purpose-bound encryption, and the PET registry."""

from .mechanisms import (laplace_scalar, planar_isotropic,
                         planar_isotropic_offsets, planar_isotropic_pdf,
                         planar_laplace, planar_laplace_offsets,
                         planar_laplace_pdf, pseudonymize, round_location,
                         round_xy)
from .pbe import (AttributeKey, AuthorityHandle, Ciphertext, MasterSecret,
                  pbe_decrypt, pbe_encrypt, pbe_keygen, pbe_setup)
from .policy import parse_policy, policy_text
from .registry import ParamSpec, PetDescriptor, PetRegistry

__all__ = [
    "laplace_scalar", "planar_isotropic", "planar_isotropic_offsets",
    "planar_isotropic_pdf", "planar_laplace", "planar_laplace_offsets",
    "planar_laplace_pdf", "pseudonymize", "round_location", "round_xy",
    "AttributeKey", "AuthorityHandle", "Ciphertext", "MasterSecret",
    "pbe_decrypt", "pbe_encrypt", "pbe_keygen", "pbe_setup",
    "parse_policy", "policy_text",
    "ParamSpec", "PetDescriptor", "PetRegistry",
]
