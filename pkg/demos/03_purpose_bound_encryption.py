"""
Purpose-bound encryption
========================

Data leaving the vehicle is encrypted under a policy over purpose
attributes; a recipient can decrypt exactly when its key's attributes
satisfy the policy. The storage server in the middle never holds keys, so
"who can use this data for what" is enforced by cryptography, not by trust.
"""

import numpy as np

from autopriv.errors import IntegrityError, PolicyNotSatisfied
from autopriv.pets.pbe import (Ciphertext, pbe_decrypt, pbe_encrypt,
                               pbe_keygen, pbe_setup)

rng = np.random.default_rng(2024)
master, authority = pbe_setup(rng)
print(f"authority {authority.authority_id} ready")

policy = "purpose:poi-recommendation AND (region:eu OR region:ch)"
ct = pbe_encrypt(authority, policy, b"lat=50.11030,lon=8.68210", rng)
print(f"policy: {ct.policy}")
print(f"ciphertext: {len(ct.to_bytes())} bytes, {len(ct.shares)} wrapped shares")

# Which recipients can read it?
recipients = {
    "eu poi service":    {"purpose:poi-recommendation", "region:eu"},
    "swiss poi service": {"purpose:poi-recommendation", "region:ch"},
    "eu insurer":        {"purpose:usage-based-insurance", "region:eu"},
    "us poi service":    {"purpose:poi-recommendation", "region:us"},
}
print("\ndecryption matrix:")
for name, attrs in recipients.items():
    key = pbe_keygen(master, attrs)
    try:
        plaintext = pbe_decrypt(key, ct)
        print(f"  {name:18s} -> {plaintext.decode()}")
    except PolicyNotSatisfied:
        print(f"  {name:18s} -> policy not satisfied")

# Tampering with a single ciphertext byte is detected, not silently decoded.
blob = bytearray(ct.to_bytes())
blob[-1] ^= 0x01
key = pbe_keygen(master, {"purpose:poi-recommendation", "region:eu"})
try:
    pbe_decrypt(key, Ciphertext.from_bytes(bytes(blob)))
except IntegrityError as exc:
    print(f"\ntampered ciphertext rejected: {exc}")
