"""Chameleon proxy signatures.

An *original signature* ``(sigma, h, M, R)`` is produced by the delegator A
for a chameleon hash ``h`` that lives under the delegatee B's key::

    m = H(M),  h = m * y_B^r,  R = g^r,  sigma = h^(x_A)

B holds the trapdoor ``x_B`` and can re-open ``h`` to any message ``M'`` by
computing ``R' = (h / H(M'))^(1/x_B)``; ``(sigma, h, M', R')`` is then a
*proxy signature*. Verification checks both pairing equations::

    e(sigma, g) == e(h, y_A)           (delegator endorsed h)
    e(h / H(M), g) == e(R, y_B)        (M, R opens h under B's key)

Public keys are carried in both source groups so the equations can be
evaluated on a Type-3 curve as ``e(A, g2) == e(B, y2)``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace

from . import counters
from .bilinear import GroupElement, Params, default_rng, hash_to_group, pair
from .codec import DecodeError

ORIGINAL_TAG = 0x01
PROXY_TAG = 0x02


class InvalidKey(ValueError):
    pass


@dataclass(frozen=True)
class PublicKey:
    y1: GroupElement
    y2: GroupElement

    def is_consistent(self, params: Params) -> bool:
        if self.y1.is_identity():
            return False
        return pair(self.y1, params.g2) == pair(params.g, self.y2)

    def to_bytes(self) -> bytes:
        return self.y1.to_bytes() + self.y2.to_bytes()

    @classmethod
    def from_bytes(cls, params: Params, data: bytes, check: bool = True) -> "PublicKey":
        n1 = params.element_size("G1")
        n2 = params.element_size("G2")
        if len(data) != n1 + n2:
            raise DecodeError("public key has wrong length")
        pk = cls(params.deserialize("G1", data[:n1]), params.deserialize("G2", data[n1:]))
        if check and not pk.is_consistent(params):
            raise InvalidKey("public key components are inconsistent")
        return pk


@dataclass(frozen=True)
class KeyPair:
    sk: int
    pk: PublicKey


@dataclass(frozen=True)
class ChameleonTuple:
    h: GroupElement
    message: bytes
    R: GroupElement
    sigma: GroupElement | None = None

    def with_opening(self, message: bytes, R: GroupElement) -> "ChameleonTuple":
        return replace(self, message=message, R=R)


def _nonzero(rng: random.Random, q: int) -> int:
    while True:
        v = rng.randrange(q)
        if v:
            return v


def keygen(params: Params, rng: random.Random | None = None) -> KeyPair:
    x = _nonzero(rng or default_rng(), params.q)
    return keypair_from_secret(params, x)


def keypair_from_secret(params: Params, x: int) -> KeyPair:
    x %= params.q
    if x == 0:
        raise InvalidKey("secret key must be nonzero")
    return KeyPair(x, PublicKey(params.g ** x, params.g2 ** x))


def chameleon_hash(
    params: Params, message: bytes, pk: PublicKey, rng: random.Random | None = None
) -> tuple[GroupElement, GroupElement, int]:
    """Return ``(h, R, r)``; ``r`` is kept for audit only and never transmitted."""
    r = _nonzero(rng or default_rng(), params.q)
    m = hash_to_group(params, message)
    h = m * pk.y1 ** r
    return h, params.g ** r, r


def check_chameleon(params: Params, pk: PublicKey, h: GroupElement, message: bytes, R: GroupElement) -> bool:
    m = hash_to_group(params, message)
    return pair(h / m, params.g2) == pair(R, pk.y2)


def dgen(
    params: Params, signer: KeyPair, message: bytes, pk_b: PublicKey, rng: random.Random | None = None
) -> ChameleonTuple:
    h, R, _ = chameleon_hash(params, message, pk_b, rng)
    return ChameleonTuple(h, bytes(message), R, h ** signer.sk)


def pver(params: Params, pk_a: PublicKey, sig: ChameleonTuple, pk_b: PublicKey) -> bool:
    """Check both equations; always evaluates all four pairings."""
    if sig.sigma is None:
        raise ValueError("pver needs the original signer's sigma")
    endorsed = pair(sig.sigma, params.g2) == pair(sig.h, pk_a.y2)
    opened = check_chameleon(params, pk_b, sig.h, sig.message, sig.R)
    return endorsed and opened and not sig.h.is_identity()


def psig(params: Params, signer: KeyPair, h: GroupElement, message: bytes) -> GroupElement:
    if signer.sk % params.q == 0:
        raise InvalidKey("secret key must be nonzero")
    counters.record("inv")
    inv = pow(signer.sk, -1, params.q)
    return (h / hash_to_group(params, message)) ** inv


def encode_original_signature(sig: ChameleonTuple) -> bytes:
    if sig.sigma is None:
        raise ValueError("original signature needs sigma")
    return bytes([ORIGINAL_TAG]) + sig.sigma.to_bytes() + sig.h.to_bytes() + sig.R.to_bytes()


def decode_original_signature(params: Params, data: bytes, message: bytes) -> ChameleonTuple:
    n = params.element_size("G1")
    if len(data) != 1 + 3 * n or data[0] != ORIGINAL_TAG:
        raise DecodeError("not an original signature encoding")
    sigma, h, R = (params.deserialize("G1", data[1 + i * n : 1 + (i + 1) * n]) for i in range(3))
    return ChameleonTuple(h, bytes(message), R, sigma)


def encode_proxy_signature(R_prime: GroupElement) -> bytes:
    return bytes([PROXY_TAG]) + R_prime.to_bytes()


def decode_proxy_signature(params: Params, data: bytes) -> GroupElement:
    n = params.element_size("G1")
    if len(data) != 1 + n or data[0] != PROXY_TAG:
        raise DecodeError("not a proxy signature encoding")
    return params.deserialize("G1", data[1:])
