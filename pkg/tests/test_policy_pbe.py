"""Purpose policies and purpose-bound encryption.

The exhaustive decrypt-iff-satisfy check uses its own formula enumeration and
its own boolean evaluator so the oracle shares no code with the module under
test: formulas are built as (op, left, right) tuples, rendered to policy
text, and evaluated directly on the tuple form.
"""

import itertools

import numpy as np
import pytest

from autopriv.errors import (EmptyAttributes, IntegrityError, PolicyNotSatisfied,
                             PolicyParseError)
from autopriv.pets.pbe import (Ciphertext, pbe_decrypt, pbe_encrypt, pbe_keygen,
                               pbe_setup)
from autopriv.pets.policy import parse_policy, policy_text


# --------------------------------------------------- independent test oracle

def render(formula) -> str:
    if isinstance(formula, str):
        return formula
    op, left, right = formula
    return f"({render(left)} {op} {render(right)})"


def evaluate(formula, attrs: set) -> bool:
    if isinstance(formula, str):
        return formula in attrs
    op, left, right = formula
    if op == "AND":
        return evaluate(left, attrs) and evaluate(right, attrs)
    return evaluate(left, attrs) or evaluate(right, attrs)


def formulas_up_to_depth(atoms, depth):
    """All binary AND/OR trees over the atoms with nesting depth <= depth."""
    by_depth = {1: list(atoms)}
    for d in range(2, depth + 1):
        shallower = [f for dd in range(1, d) for f in by_depth[dd]]
        exact = []
        for op in ("AND", "OR"):
            for left in shallower:
                for right in shallower:
                    exact.append((op, left, right))
        by_depth[d] = exact
    seen = set()
    out = []
    for d in range(1, depth + 1):
        for f in by_depth[d]:
            text = render(f)
            if text not in seen:
                seen.add(text)
                out.append(f)
    return out


# ------------------------------------------------------------------- grammar

class TestPolicyGrammar:
    @pytest.mark.parametrize("text", [
        "purpose:lbs",
        "a AND b",
        "a OR b AND c",
        "(a OR b) AND c",
        "a AND (b OR c) AND d",
    ])
    def test_canonical_text_round_trips(self, text):
        node = parse_policy(text)
        canonical = policy_text(node)
        assert parse_policy(canonical) == node
        assert policy_text(parse_policy(canonical)) == canonical

    def test_and_binds_tighter_than_or(self):
        node = parse_policy("a OR b AND c")
        assert node.evaluate({"a"})
        assert node.evaluate({"b", "c"})
        assert not node.evaluate({"b"})

    @pytest.mark.parametrize("bad", ["", "  ", "a AND", "AND a", "(a", "a)",
                                     "a NOT b", "NOT a", "a & b", "A?"])
    def test_rejects_bad_policies(self, bad):
        with pytest.raises(PolicyParseError):
            parse_policy(bad)

    def test_attributes_collected(self):
        node = parse_policy("purpose:lbs AND (region:eu OR region:us)")
        assert node.attributes() == {"purpose:lbs", "region:eu", "region:us"}


# ----------------------------------------------------------------------- pbe

class TestPurposeBoundEncryption:
    def setup_method(self):
        self.rng = np.random.default_rng(42)
        self.master, self.handle = pbe_setup(self.rng)

    def test_round_trip_bit_exact(self):
        key = pbe_keygen(self.master, {"purpose:lbs"})
        plaintext = bytes(range(256))
        ct = pbe_encrypt(self.handle, "purpose:lbs", plaintext, self.rng)
        assert pbe_decrypt(key, ct) == plaintext

    def test_distinct_ciphertexts_fresh_nonce(self):
        a = pbe_encrypt(self.handle, "purpose:lbs", b"x", self.rng)
        b = pbe_encrypt(self.handle, "purpose:lbs", b"x", self.rng)
        assert a.to_bytes() != b.to_bytes()
        assert a.nonce != b.nonce

    def test_serialization_round_trip(self):
        ct = pbe_encrypt(self.handle, "a AND (b OR c)", b"payload", self.rng)
        back = Ciphertext.from_bytes(ct.to_bytes())
        assert back == ct

    def test_tampered_body_integrity_error(self):
        key = pbe_keygen(self.master, {"a"})
        ct = pbe_encrypt(self.handle, "a", b"payload", self.rng)
        blob = bytearray(ct.to_bytes())
        blob[-1] ^= 0x01
        with pytest.raises(IntegrityError):
            pbe_decrypt(key, Ciphertext.from_bytes(bytes(blob)))

    def test_tampered_share_integrity_error(self):
        key = pbe_keygen(self.master, {"a", "b"})
        ct = pbe_encrypt(self.handle, "a AND b", b"payload", self.rng)
        shares = list(ct.shares)
        shares[0] = shares[0][:-1] + bytes([shares[0][-1] ^ 1])
        bad = Ciphertext(ct.version, ct.policy, ct.authority_id,
                         tuple(shares), ct.nonce, ct.body)
        with pytest.raises(IntegrityError):
            pbe_decrypt(key, bad)

    def test_keygen_satisfaction_basics(self):
        ct = pbe_encrypt(self.handle, "purpose:lbs", b"p", self.rng)
        assert pbe_decrypt(pbe_keygen(self.master, {"purpose:lbs"}), ct) == b"p"
        with pytest.raises(PolicyNotSatisfied):
            pbe_decrypt(pbe_keygen(self.master, {"purpose:ubi"}), ct)
        both = pbe_encrypt(self.handle, "purpose:lbs AND region:eu", b"q", self.rng)
        key = pbe_keygen(self.master, {"purpose:lbs", "region:eu"})
        assert pbe_decrypt(key, both) == b"q"

    def test_superset_key_succeeds(self):
        ct = pbe_encrypt(self.handle, "a OR b", b"p", self.rng)
        key = pbe_keygen(self.master, {"a", "b", "c", "d"})
        assert pbe_decrypt(key, ct) == b"p"

    def test_empty_attributes_rejected(self):
        with pytest.raises(EmptyAttributes):
            pbe_keygen(self.master, set())

    def test_bad_policy_rejected(self):
        with pytest.raises(PolicyParseError):
            pbe_encrypt(self.handle, "a AND", b"p", self.rng)

    def test_setup_reproducible_from_seed(self):
        m1, h1 = pbe_setup(np.random.default_rng(7))
        m2, h2 = pbe_setup(np.random.default_rng(7))
        assert m1 == m2 and h1 == h2

    def test_distinct_setups_distinct_secrets(self):
        m2, h2 = pbe_setup(self.rng)
        assert m2.root != self.master.root
        assert h2.authority_id != self.handle.authority_id

    def test_cross_authority_always_fails(self):
        rng_b = np.random.default_rng(1001)
        master_b, handle_b = pbe_setup(rng_b)
        for i in range(24):
            policy = ["a", "a AND b", "a OR b", "(a OR b) AND c"][i % 4]
            ct = pbe_encrypt(handle_b, policy, b"secret", rng_b)
            key = pbe_keygen(self.master, {"a", "b", "c"})
            with pytest.raises((IntegrityError, PolicyNotSatisfied)):
                pbe_decrypt(key, ct)

    def test_exhaustive_decrypt_iff_satisfy_three_attrs(self):
        atoms = ["a1", "a2", "a3"]
        formulas = formulas_up_to_depth(atoms, 3)
        rng = np.random.default_rng(5)
        subsets = [set(c) for r in range(len(atoms) + 1)
                   for c in itertools.combinations(atoms, r)]
        mismatches = 0
        for formula in formulas:
            text = render(formula)
            ct = pbe_encrypt(self.handle, text, b"m", rng)
            for attrs in subsets:
                expected = evaluate(formula, attrs)
                if not attrs:
                    got = False
                else:
                    key = pbe_keygen(self.master, attrs)
                    try:
                        got = pbe_decrypt(key, ct) == b"m"
                    except (PolicyNotSatisfied, IntegrityError):
                        got = False
                if got != expected:
                    mismatches += 1
        assert mismatches == 0
