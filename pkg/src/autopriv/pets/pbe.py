"""Purpose-bound envelope encryption gated by monotone attribute policies.

A fresh 256-bit data key encrypts the payload with AES-GCM. The data key is
then secret-shared over the policy tree (AND splits it with XOR, OR
replicates it) and each leaf share is wrapped, again with AES-GCM, under a
per-attribute key derived from the authority's wrap root. A holder of an
attribute key can reassemble the data key exactly when its attribute set
satisfies the policy formula.

The (master secret, authority handle) split mirrors the setup/keygen/encrypt/
decrypt shape of attribute-based encryption so a production ABE scheme can
replace this module behind the same interface. Unlike real ABE, the handle
used for encryption must stay inside the trusted vehicle domain: it is the
key-wrapping root, not public material, and no IND-CCA-style security is
claimed for the envelope construction.

Ciphertext wire layout (all integers big-endian):

    u8   version (= 1)
    u16  policy length, policy text (UTF-8, canonical form)
    u8   authority id length, authority id (UTF-8)
    u16  share count, then per share: u32 length, share blob
    u8   nonce length (= 12), body nonce
    u32  body length, body (AES-GCM ciphertext || tag)

Share blobs are ordered by depth-first traversal of the policy leaves; each
is a 12-byte wrap nonce followed by the AES-GCM wrap of the 32-byte share.
The header (everything before the nonce) doubles as the AAD of the body, so
any header tamper breaks authentication.
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass

import numpy as np
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from ..errors import EmptyAttributes, IntegrityError, PolicyNotSatisfied
from .policy import And, Attr, Or, PolicyNode, parse_policy, policy_text

_VERSION = 1
_KEY_LEN = 32
_NONCE_LEN = 12


@dataclass(frozen=True)
class MasterSecret:
    authority_id: str
    root: bytes


@dataclass(frozen=True)
class AuthorityHandle:
    """Encryption-side state of one authority (see module caveat)."""

    authority_id: str
    wrap_root: bytes


@dataclass(frozen=True)
class AttributeKey:
    key_id: str
    attributes: frozenset[str]
    material: dict[str, bytes]   # attribute -> 32-byte wrap key


@dataclass(frozen=True)
class Ciphertext:
    version: int
    policy: str
    authority_id: str
    shares: tuple[bytes, ...]
    nonce: bytes
    body: bytes

    def to_bytes(self) -> bytes:
        return _header_bytes(self) + struct.pack(">B", len(self.nonce)) + self.nonce + \
            struct.pack(">I", len(self.body)) + self.body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Ciphertext":
        try:
            (version,) = struct.unpack_from(">B", blob, 0)
            off = 1
            (plen,) = struct.unpack_from(">H", blob, off)
            off += 2
            policy = blob[off:off + plen].decode()
            off += plen
            (alen,) = struct.unpack_from(">B", blob, off)
            off += 1
            authority = blob[off:off + alen].decode()
            off += alen
            (count,) = struct.unpack_from(">H", blob, off)
            off += 2
            shares = []
            for _ in range(count):
                (slen,) = struct.unpack_from(">I", blob, off)
                off += 4
                shares.append(blob[off:off + slen])
                off += slen
            (nlen,) = struct.unpack_from(">B", blob, off)
            off += 1
            nonce = blob[off:off + nlen]
            off += nlen
            (blen,) = struct.unpack_from(">I", blob, off)
            off += 4
            body = blob[off:off + blen]
            off += blen
            if off != len(blob):
                raise IntegrityError("trailing bytes after ciphertext")
            return cls(version, policy, authority, tuple(shares), nonce, body)
        except (struct.error, UnicodeDecodeError) as exc:
            raise IntegrityError(f"malformed ciphertext: {exc}") from exc


def _header_bytes(ct: Ciphertext) -> bytes:
    policy_b = ct.policy.encode()
    auth_b = ct.authority_id.encode()
    parts = [struct.pack(">BH", ct.version, len(policy_b)), policy_b,
             struct.pack(">B", len(auth_b)), auth_b,
             struct.pack(">H", len(ct.shares))]
    for share in ct.shares:
        parts.append(struct.pack(">I", len(share)))
        parts.append(share)
    return b"".join(parts)


def _hkdf(key: bytes, label: bytes) -> bytes:
    return hmac.new(key, label, hashlib.sha256).digest()


def _attribute_wrap_key(wrap_root: bytes, attribute: str) -> bytes:
    return _hkdf(wrap_root, b"attr:" + attribute.encode())


def pbe_setup(rng: np.random.Generator) -> tuple[MasterSecret, AuthorityHandle]:
    """Create a fresh authority; reproducible when rng is seeded."""
    root = rng.bytes(_KEY_LEN)
    authority_id = _hkdf(root, b"authority-id")[:8].hex()
    wrap_root = _hkdf(root, b"wrap-root")
    return MasterSecret(authority_id, root), AuthorityHandle(authority_id, wrap_root)


def pbe_keygen(master: MasterSecret, attributes: set[str] | frozenset[str]) -> AttributeKey:
    if not attributes:
        raise EmptyAttributes("attribute set must be non-empty")
    wrap_root = _hkdf(master.root, b"wrap-root")
    material = {a: _attribute_wrap_key(wrap_root, a) for a in attributes}
    key_id = _hkdf(master.root, b"key:" + "\x00".join(sorted(attributes)).encode())[:8].hex()
    return AttributeKey(key_id, frozenset(attributes), material)


def _assign_shares(node: PolicyNode, secret: bytes,
                   rng: np.random.Generator) -> list[tuple[str, bytes]]:
    """Leaf shares in depth-first order: AND = XOR split, OR = replicate."""
    if isinstance(node, Attr):
        return [(node.name, secret)]
    if isinstance(node, Or):
        out = []
        for child in node.children:
            out.extend(_assign_shares(child, secret, rng))
        return out
    assert isinstance(node, And)
    parts = [rng.bytes(_KEY_LEN) for _ in node.children[:-1]]
    last = secret
    for p in parts:
        last = bytes(a ^ b for a, b in zip(last, p))
    out = []
    for child, part in zip(node.children, parts + [last]):
        out.extend(_assign_shares(child, part, rng))
    return out


def pbe_encrypt(handle: AuthorityHandle, policy: str | PolicyNode,
                plaintext: bytes, rng: np.random.Generator) -> Ciphertext:
    """Encrypt under a policy; raises PolicyParseError on bad policy text."""
    node = parse_policy(policy) if isinstance(policy, str) else policy
    text = policy_text(node)
    data_key = rng.bytes(_KEY_LEN)
    wrapped: list[bytes] = []
    for index, (attribute, share) in enumerate(_assign_shares(node, data_key, rng)):
        wrap_key = _attribute_wrap_key(handle.wrap_root, attribute)
        nonce = rng.bytes(_NONCE_LEN)
        aad = f"{handle.authority_id}|{index}|{attribute}".encode()
        wrapped.append(nonce + AESGCM(wrap_key).encrypt(nonce, share, aad))
    body_nonce = rng.bytes(_NONCE_LEN)
    skeleton = Ciphertext(_VERSION, text, handle.authority_id, tuple(wrapped),
                          body_nonce, b"")
    body = AESGCM(data_key).encrypt(body_nonce, plaintext, _header_bytes(skeleton))
    return Ciphertext(_VERSION, text, handle.authority_id, tuple(wrapped),
                      body_nonce, body)


def _leaves(node: PolicyNode) -> list[Attr]:
    if isinstance(node, Attr):
        return [node]
    out = []
    for child in node.children:
        out.extend(_leaves(child))
    return out


def _recover(node: PolicyNode, key: AttributeKey, ct: Ciphertext,
             cursor: list[int]) -> bytes | None:
    """Walk the tree in the encryptor's leaf order, reassembling the data key.

    Returns None when this subtree is unsatisfied; raises IntegrityError when
    it should be satisfiable but the wrapped material fails authentication.
    """
    if isinstance(node, Attr):
        index = cursor[0]
        cursor[0] += 1
        if node.name not in key.attributes:
            return None
        blob = ct.shares[index]
        nonce, wrapped = blob[:_NONCE_LEN], blob[_NONCE_LEN:]
        aad = f"{ct.authority_id}|{index}|{node.name}".encode()
        try:
            return AESGCM(key.material[node.name]).decrypt(nonce, wrapped, aad)
        except InvalidTag:
            raise IntegrityError(f"share for attribute {node.name!r} failed to unwrap")
    if isinstance(node, And):
        parts: list[bytes] = []
        failed = False
        broken: IntegrityError | None = None
        # always recurse into every child so the leaf cursor stays aligned
        for child in node.children:
            try:
                part = _recover(child, key, ct, cursor)
            except IntegrityError as exc:
                broken = exc
                part = None
            if part is None:
                failed = True
            else:
                parts.append(part)
        if failed:
            if all(c.evaluate(key.attributes) for c in node.children):
                raise broken if broken is not None else \
                    IntegrityError("satisfied conjunction failed to recover")
            return None
        out = parts[0]
        for p in parts[1:]:
            out = bytes(a ^ b for a, b in zip(out, p))
        return out
    assert isinstance(node, Or)
    broken = None
    recovered = None
    for child in node.children:
        try:
            part = _recover(child, key, ct, cursor)
        except IntegrityError as exc:
            broken = exc
            part = None
        if part is not None and recovered is None:
            recovered = part
    if recovered is not None:
        return recovered
    if broken is not None:
        raise broken
    return None


def pbe_decrypt(key: AttributeKey, ct: Ciphertext) -> bytes:
    """Plaintext iff the key's attributes satisfy the ciphertext policy."""
    node = parse_policy(ct.policy)
    if len(ct.shares) != len(_leaves(node)):
        raise IntegrityError("share table does not match policy shape")
    if not node.evaluate(key.attributes):
        raise PolicyNotSatisfied(
            f"attributes {sorted(key.attributes)} do not satisfy {ct.policy!r}")
    data_key = _recover(node, key, ct, [0])
    if data_key is None:
        # satisfied formula but unusable material (e.g. key from another authority)
        raise IntegrityError("could not reassemble data key from shares")
    try:
        return AESGCM(data_key).decrypt(ct.nonce, ct.body, _header_bytes(ct))
    except InvalidTag:
        raise IntegrityError("ciphertext body failed authentication") from None
