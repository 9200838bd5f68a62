"""Pairing-friendly group suite with two interchangeable backends.

``production``
    BLS12-381 (Type-3). G1/G2/GT arithmetic and pairings come from arkworks
    via ``py_arkworks_bls12381``; hashing to G1 uses the RFC 9380
    ``SSWU_RO`` suite exposed by ``blspy``.

``transparent``
    A symmetric toy group in which every element carries its discrete log
    relative to ``g``. The pairing is exponent multiplication mod ``q``. It is
    an exact oracle for tests and is refused unless ``insecure_toy_group`` is set.

Group law is written multiplicatively on every backend: ``a * b``, ``a / b``,
``a ** k``.
"""

from __future__ import annotations

import hashlib
import os
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable

from . import counters
from .codec import DecodeError

HASH_DOMAIN_TAG = b"CPS-H-v1"
SUPPORTED_LEVELS = (128,)
DEFAULT_TOY_ORDER = 1009

BLS12_381_R = 0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001


class UnsupportedSecurityLevel(ValueError):
    pass


class InsecureGroupError(RuntimeError):
    """The transparent backend was requested without the explicit opt-in."""


class WrongGroupError(TypeError):
    pass


def is_probable_prime(n: int) -> bool:
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for p in small:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class GroupElement:
    """An element of G1, G2 or GT on some backend."""

    __slots__ = ("backend", "group", "value")

    def __init__(self, backend: "Backend", group: str, value: Any):
        self.backend = backend
        self.group = group
        self.value = value

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return self.backend.mul(self, other)

    def __truediv__(self, other: "GroupElement") -> "GroupElement":
        return self.backend.div(self, other)

    def __pow__(self, k: "int | FieldScalar") -> "GroupElement":
        if isinstance(k, FieldScalar):
            k = k.value
        return self.backend.pow(self, k)

    def inverse(self) -> "GroupElement":
        return self.backend.inv(self)

    def is_identity(self) -> bool:
        return self.backend.is_identity(self)

    def to_bytes(self) -> bytes:
        return self.backend.serialize(self)

    def __bytes__(self) -> bytes:
        return self.to_bytes()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        if self.backend is not other.backend or self.group != other.group:
            return False
        if self.group == "GT":
            counters.record("gt_cmp")
        return self.backend.eq(self, other)

    def __hash__(self) -> int:
        return hash((self.group, self.backend.hash_key(self)))

    @property
    def log(self) -> int:
        """Discrete log w.r.t. the generator; transparent backend only."""
        if not isinstance(self.backend, TransparentBackend):
            raise AttributeError("discrete logs are only exposed by the transparent backend")
        return self.value

    def __repr__(self) -> str:
        if isinstance(self.backend, TransparentBackend):
            return f"<{self.group} g^{self.value} mod {self.backend.q}>"
        return f"<{self.group} {self.backend.hash_key(self)!r:.24}>"


class Backend:
    name: str
    q: int

    def generator(self, group: str) -> GroupElement: ...
    def identity(self, group: str) -> GroupElement: ...
    def encoding_length(self, group: str) -> int: ...


class TransparentBackend(Backend):
    """Known-exponent symmetric group of prime order ``q``; G2 aliases G1."""

    name = "transparent"

    def __init__(self, q: int):
        if not is_probable_prime(q):
            raise ValueError(f"toy group order {q} is not prime")
        self.q = q
        self._width = (q.bit_length() + 7) // 8

    def _group(self, group: str) -> str:
        return "GT" if group == "GT" else "G1"

    def element(self, group: str, exponent: int) -> GroupElement:
        return GroupElement(self, self._group(group), exponent % self.q)

    def generator(self, group: str) -> GroupElement:
        return self.element(group, 1)

    def identity(self, group: str) -> GroupElement:
        return self.element(group, 0)

    def mul(self, a, b):
        _same(a, b)
        counters.record("mul" if a.group != "GT" else "gt_mul")
        return GroupElement(self, a.group, (a.value + b.value) % self.q)

    def div(self, a, b):
        _same(a, b)
        counters.record("mul" if a.group != "GT" else "gt_mul")
        return GroupElement(self, a.group, (a.value - b.value) % self.q)

    def pow(self, a, k):
        counters.record("exp" if a.group != "GT" else "gt_exp")
        return GroupElement(self, a.group, a.value * k % self.q)

    def inv(self, a):
        counters.record("ginv")
        return GroupElement(self, a.group, -a.value % self.q)

    def eq(self, a, b):
        return a.value == b.value

    def is_identity(self, a):
        return a.value == 0

    def hash_key(self, a):
        return a.value

    def pair(self, a, b):
        if a.group == "GT" or b.group == "GT":
            raise WrongGroupError("pairing inputs must be source-group elements")
        counters.record("pair")
        return GroupElement(self, "GT", a.value * b.value % self.q)

    def hash_exponent(self, message: bytes, tag: bytes) -> int:
        return int.from_bytes(hashlib.sha256(tag + message).digest(), "big") % self.q

    def hash_to_g1(self, message: bytes, tag: bytes) -> GroupElement:
        return GroupElement(self, "G1", self.hash_exponent(message, tag))

    def encoding_length(self, group: str) -> int:
        return self._width

    def serialize(self, a):
        return a.value.to_bytes(self._width, "big")

    def deserialize(self, group: str, data: bytes) -> GroupElement:
        if len(data) != self._width:
            raise DecodeError(f"{group} encoding must be {self._width} bytes")
        v = int.from_bytes(data, "big")
        if v >= self.q:
            raise DecodeError("exponent out of range")
        return GroupElement(self, self._group(group), v)


class Bls12381Backend(Backend):
    name = "production"
    q = BLS12_381_R
    _widths = {"G1": 48, "G2": 96}

    def __init__(self):
        import blspy
        from py_arkworks_bls12381 import G1Point, G2Point, GT, Scalar

        self._blspy = blspy
        self._types = {"G1": G1Point, "G2": G2Point}
        self._GT = GT
        self._Scalar = Scalar
        self._gen = {"G1": G1Point(), "G2": G2Point()}

    def generator(self, group):
        if group == "GT":
            return self.pair(self.generator("G1"), self.generator("G2"))
        return GroupElement(self, group, self._gen[group])

    def identity(self, group):
        if group == "GT":
            return GroupElement(self, "GT", self._GT.one())
        return GroupElement(self, group, self._types[group].identity())

    def mul(self, a, b):
        _same(a, b)
        if a.group == "GT":
            counters.record("gt_mul")
            return GroupElement(self, "GT", a.value * b.value)
        counters.record("mul")
        return GroupElement(self, a.group, a.value + b.value)

    def div(self, a, b):
        _same(a, b)
        if a.group == "GT":
            counters.record("gt_mul")
            return GroupElement(self, "GT", a.value * self._gt_pow(b.value, self.q - 1))
        counters.record("mul")
        return GroupElement(self, a.group, a.value - b.value)

    def _gt_pow(self, base, k: int):
        result = self._GT.one()
        k %= self.q
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def pow(self, a, k):
        if a.group == "GT":
            counters.record("gt_exp")
            return GroupElement(self, "GT", self._gt_pow(a.value, k))
        counters.record("exp")
        return GroupElement(self, a.group, a.value * self._Scalar(k % self.q))

    def inv(self, a):
        counters.record("ginv")
        if a.group == "GT":
            return GroupElement(self, "GT", self._gt_pow(a.value, self.q - 1))
        return GroupElement(self, a.group, -a.value)

    def eq(self, a, b):
        return a.value == b.value

    def is_identity(self, a):
        return a.value == self.identity(a.group).value

    def hash_key(self, a):
        if a.group == "GT":
            return hash(a.value)
        return self.serialize(a)

    def pair(self, a, b):
        if a.group != "G1" or b.group != "G2":
            raise WrongGroupError(f"pairing expects (G1, G2), got ({a.group}, {b.group})")
        counters.record("pair")
        return GroupElement(self, "GT", self._GT.pairing(a.value, b.value))

    def hash_to_g1(self, message: bytes, tag: bytes) -> GroupElement:
        raw = bytes(self._blspy.G1Element.from_message(message, tag))
        return GroupElement(self, "G1", self._types["G1"].from_compressed_bytes_unchecked(raw))

    def encoding_length(self, group):
        if group == "GT":
            raise NotImplementedError("GT elements have no wire encoding")
        return self._widths[group]

    def serialize(self, a):
        if a.group == "GT":
            raise NotImplementedError("GT elements have no wire encoding")
        return bytes(a.value.to_compressed_bytes())

    def deserialize(self, group, data):
        if group not in self._widths:
            raise DecodeError(f"no encoding for group {group}")
        if len(data) != self._widths[group]:
            raise DecodeError(f"{group} encoding must be {self._widths[group]} bytes")
        try:
            point = self._types[group].from_compressed_bytes(bytes(data))
        except ValueError as exc:
            raise DecodeError(f"invalid {group} encoding: {exc}") from exc
        # arkworks ignores the x bytes of an infinity-flagged point; only the canonical form is accepted.
        if bytes(point.to_compressed_bytes()) != bytes(data):
            raise DecodeError(f"non-canonical {group} encoding")
        return GroupElement(self, group, point)


def _same(a: GroupElement, b: GroupElement) -> None:
    if a.backend is not b.backend or a.group != b.group:
        raise WrongGroupError(f"cannot combine {a.group} and {b.group} elements")


@dataclass(frozen=True)
class FieldScalar:
    value: int
    q: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.q)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldScalar):
            if other.q != self.q:
                raise ValueError("scalars from different fields")
            return other.value
        return other

    def __add__(self, other):
        return FieldScalar(self.value + self._coerce(other), self.q)

    def __sub__(self, other):
        return FieldScalar(self.value - self._coerce(other), self.q)

    def __mul__(self, other):
        return FieldScalar(self.value * self._coerce(other), self.q)

    def __neg__(self):
        return FieldScalar(-self.value, self.q)

    def inverse(self) -> "FieldScalar":
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse mod q")
        counters.record("inv")
        return FieldScalar(pow(self.value, -1, self.q), self.q)

    @classmethod
    def random(cls, q: int, rng: random.Random | None = None, nonzero: bool = True) -> "FieldScalar":
        rng = rng or _system_rng
        while True:
            v = rng.randrange(q)
            if v or not nonzero:
                return cls(v, q)

    def __int__(self) -> int:
        return self.value


_system_rng = random.SystemRandom()


def default_rng() -> random.Random:
    return _system_rng


@dataclass(frozen=True)
class Params:
    group_id: str
    q: int
    g: GroupElement
    g2: GroupElement
    gt_id: str
    hash_domain_tag: bytes
    backend: Backend = field(repr=False, compare=False)
    random_oracle: Callable[[bytes], GroupElement] | None = field(default=None, repr=False, compare=False)

    @property
    def is_transparent(self) -> bool:
        return isinstance(self.backend, TransparentBackend)

    def identity(self, group: str = "G1") -> GroupElement:
        return self.backend.identity(group)

    def deserialize(self, group: str, data: bytes) -> GroupElement:
        return self.backend.deserialize(group, data)

    def element_size(self, group: str = "G1") -> int:
        return self.backend.encoding_length(group)

    def exp_g(self, k: int) -> GroupElement:
        """g^k in G1; transparent-backend convenience for building oracle cases."""
        return self.g ** k


@lru_cache(maxsize=None)
def _transparent(q: int) -> TransparentBackend:
    return TransparentBackend(q)


@lru_cache(maxsize=None)
def _production() -> Bls12381Backend:
    return Bls12381Backend()


def setup(
    security_level: int = 128,
    backend: str | None = None,
    *,
    insecure_toy_group: bool = False,
    toy_order: int = DEFAULT_TOY_ORDER,
) -> Params:
    """Build public parameters. ``backend`` defaults to ``$CPS_BACKEND`` or production."""
    if security_level not in SUPPORTED_LEVELS:
        raise UnsupportedSecurityLevel(f"security level {security_level} not supported; use one of {SUPPORTED_LEVELS}")
    backend = backend or os.environ.get("CPS_BACKEND", "production")
    if backend == "transparent":
        if not insecure_toy_group:
            raise InsecureGroupError("the transparent backend requires insecure_toy_group=True")
        b = _transparent(toy_order)
        g = b.generator("G1")
        return Params(f"toy-{toy_order}", b.q, g, g, "toy-GT", HASH_DOMAIN_TAG, b)
    if backend == "production":
        b = _production()
        if b.q < 2**security_level:
            raise UnsupportedSecurityLevel("curve order below requested level")
        return Params("BLS12-381", b.q, b.generator("G1"), b.generator("G2"), "BLS12-381-GT", HASH_DOMAIN_TAG, b)
    raise ValueError(f"unknown backend {backend!r}")


def hash_to_group(params: Params, message: bytes) -> GroupElement:
    """Deterministic map from bytes to G1; identity outputs are re-derived with a counter byte."""
    if params.random_oracle is not None:
        return params.random_oracle(bytes(message))
    counters.record("hash")
    backend = params.backend
    h = backend.hash_to_g1(bytes(message), params.hash_domain_tag)
    ctr = 0
    while h.is_identity():
        ctr += 1
        if ctr > 255:
            raise RuntimeError("hash_to_group hit the identity 255 times")
        h = backend.hash_to_g1(bytes(message) + bytes([ctr]), params.hash_domain_tag)
    return h


def pair(a: GroupElement, b: GroupElement) -> GroupElement:
    return a.backend.pair(a, b)
