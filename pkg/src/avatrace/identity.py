"""User and avatar identity records with canonical binary encodings.

Every record encodes its fields in declaration order, each behind a 4-byte
length prefix; optional fields carry a presence byte. Decoding needs the group
parameters because element encodings are validated on the way in.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, fields, is_dataclass, replace

from . import cps
from .bilinear import GroupElement, Params
from .biometric import IrisTemplate
from .codec import DecodeError, Reader, encode_map, pack, pack_optional

SN_BYTES = 16


class DriverType(enum.Enum):
    HUMAN = "human"
    AI_PROXY = "ai-proxy"


@dataclass(frozen=True)
class UserId:
    rid: bytes
    mid: bytes

    def __post_init__(self):
        if not self.rid:
            raise ValueError("real-world identity must be non-empty")

    def encode(self) -> bytes:
        return pack(self.rid, self.mid)

    @classmethod
    def decode(cls, data: bytes) -> "UserId":
        r = Reader(data)
        rid, mid = r.field(), r.field()
        r.done()
        return cls(rid, mid)


@dataclass(frozen=True)
class MIT:
    """Metaverse identity token endorsed by the IdP."""

    sn: bytes
    pk: cps.PublicKey
    template: IrisTemplate
    info: bytes
    idp_sig: cps.ChameleonTuple

    def body(self) -> bytes:
        return mit_body(self.sn, self.pk, self.template, self.info)

    def encode(self) -> bytes:
        return pack(self.body(), cps.encode_original_signature(self.idp_sig))

    @classmethod
    def decode(cls, params: Params, data: bytes) -> "MIT":
        r = Reader(data)
        body, sig = r.field(), r.field()
        r.done()
        b = Reader(body)
        sn = b.fixed(SN_BYTES)
        pk = cps.PublicKey.from_bytes(params, b.field())
        try:
            template = IrisTemplate.from_bytes(b.field())
        except ValueError as exc:
            raise DecodeError(str(exc)) from exc
        info = b.field()
        b.done()
        return cls(sn, pk, template, info, cps.decode_original_signature(params, sig, body))


def mit_body(sn: bytes, pk: cps.PublicKey, template: IrisTemplate, info: bytes) -> bytes:
    return pack(sn, pk.to_bytes(), template.to_bytes(), info)


def endorse_mit(
    params: Params,
    idp: cps.KeyPair,
    sn: bytes,
    pk: cps.PublicKey,
    template: IrisTemplate,
    info: bytes,
    rng: random.Random | None = None,
) -> MIT:
    # IdP signs the canonical body with its own key as both signer and hash owner.
    body = mit_body(sn, pk, template, info)
    return MIT(sn, pk, template, info, cps.dgen(params, idp, body, idp.pk, rng))


def verify_mit(params: Params, mit: MIT, idp_pk: cps.PublicKey) -> bool:
    sig = replace(mit.idp_sig, message=mit.body())
    return cps.pver(params, idp_pk, sig, idp_pk)


@dataclass(frozen=True)
class VID:
    message: bytes
    R: GroupElement

    def encode(self) -> bytes:
        return pack(self.message, self.R.to_bytes())

    @classmethod
    def decode(cls, params: Params, data: bytes):
        r = Reader(data)
        m, R = r.field(), params.deserialize("G1", r.field())
        r.done()
        return cls(m, R)


@dataclass(frozen=True)
class PID(VID):
    """Physical identity: ``message`` is iris feature || challenge."""


@dataclass(frozen=True)
class Avatar:
    sn_u: bytes
    aid: bytes
    sn_p: bytes | None = None
    sigma: GroupElement | None = None
    h: GroupElement | None = None
    vid: VID | None = None
    pid: PID | None = None

    @property
    def is_empty(self) -> bool:
        return self.sigma is None

    def encode(self) -> bytes:
        return pack(self.sn_u, self.aid) + b"".join(
            [
                pack_optional(self.sn_p),
                pack_optional(None if self.sigma is None else self.sigma.to_bytes()),
                pack_optional(None if self.h is None else self.h.to_bytes()),
                pack_optional(None if self.vid is None else self.vid.encode()),
                pack_optional(None if self.pid is None else self.pid.encode()),
            ]
        )

    @classmethod
    def decode(cls, params: Params, data: bytes) -> "Avatar":
        r = Reader(data)
        sn_u, aid = r.fixed(SN_BYTES), r.field()
        sn_p = r.optional()
        if sn_p is not None and len(sn_p) != SN_BYTES:
            raise DecodeError("bad proxy serial number")
        sigma, h, vid, pid = r.optional(), r.optional(), r.optional(), r.optional()
        r.done()
        return cls(
            sn_u,
            aid,
            sn_p,
            None if sigma is None else params.deserialize("G1", sigma),
            None if h is None else params.deserialize("G1", h),
            None if vid is None else VID.decode(params, vid),
            None if pid is None else PID.decode(params, pid),
        )

    def vid_tuple(self) -> cps.ChameleonTuple:
        return cps.ChameleonTuple(self.h, self.vid.message, self.vid.R, self.sigma)

    def pid_tuple(self, pid: PID | None = None) -> cps.ChameleonTuple:
        pid = pid or self.pid
        return cps.ChameleonTuple(self.h, pid.message, pid.R, self.sigma)


def driver_type(avatar: Avatar) -> DriverType:
    if avatar.sn_p is None:
        raise ValueError("avatar has no driver yet")
    return DriverType.HUMAN if avatar.sn_u == avatar.sn_p else DriverType.AI_PROXY


def describe_avatar(**blobs: bytes) -> bytes:
    """Avatar description M: canonical map of named model blobs (face, speech, ...)."""
    return encode_map(blobs)


def to_debug_json(obj) -> str:
    """Human-readable rendering for CLI output; never hashed or signed."""
    return json.dumps(_debug(obj), indent=2, sort_keys=True)


def _debug(obj):
    if isinstance(obj, bytes):
        return obj.hex()
    if isinstance(obj, GroupElement):
        try:
            return obj.to_bytes().hex()
        except NotImplementedError:
            return repr(obj)
    if isinstance(obj, IrisTemplate):
        return {"code_prefix": obj.code.to_bytes(256, "big")[:8].hex(), "mask_bits": obj.mask.bit_count()}
    if isinstance(obj, enum.Enum):
        return obj.value
    if is_dataclass(obj):
        out = {f.name: _debug(getattr(obj, f.name)) for f in fields(obj)}
        if isinstance(obj, Avatar) and obj.sn_p is not None:
            out["driver_type"] = driver_type(obj).value
        return out
    if isinstance(obj, (list, tuple)):
        return [_debug(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): _debug(v) for k, v in obj.items()}
    return obj
