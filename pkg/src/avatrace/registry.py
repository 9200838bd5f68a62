"""Identity provider, append-only MIT ledger and the trusted SN -> ID store.

The ledger stands in for the public blockchain: a single-writer hash chain of
MIT encodings, optionally persisted as a file of length-prefixed entries. The
trusted store maps serial numbers back to real identities and only answers
callers presenting the tracing-authority token.
"""

from __future__ import annotations

import hashlib
import hmac
import logging
import os
import random
import secrets
import struct
import threading
from dataclasses import dataclass
from pathlib import Path

from . import cps
from .bilinear import Params, default_rng
from .biometric import IrisTemplate
from .codec import DecodeError, Reader, pack
from .identity import MIT, SN_BYTES, UserId, endorse_mit, verify_mit

log = logging.getLogger(__name__)

GENESIS = bytes(32)
_FRAME = struct.Struct(">I")


class RegistryError(Exception):
    pass


class DuplicateMid(RegistryError):
    pass


class UnknownSerial(RegistryError, KeyError):
    pass


class Unauthorized(RegistryError, PermissionError):
    pass


class LedgerCorrupted(RegistryError):
    pass


@dataclass(frozen=True)
class LedgerEntry:
    index: int
    payload: bytes
    prev_digest: bytes
    entry_digest: bytes

    @staticmethod
    def digest(index: int, prev_digest: bytes, payload: bytes) -> bytes:
        return hashlib.sha256(index.to_bytes(8, "big") + prev_digest + payload).digest()

    def encode(self) -> bytes:
        return pack(self.index.to_bytes(8, "big"), self.payload, self.prev_digest, self.entry_digest)

    @classmethod
    def decode(cls, data: bytes) -> "LedgerEntry":
        r = Reader(data)
        index = int.from_bytes(r.fixed(8), "big")
        payload = r.field()
        prev, digest = r.fixed(32), r.fixed(32)
        r.done()
        return cls(index, payload, prev, digest)


@dataclass(frozen=True)
class TrustedRecord:
    sn: bytes
    id: UserId

    def encode(self) -> bytes:
        return pack(self.sn, self.id.encode())

    @classmethod
    def decode(cls, data: bytes) -> "TrustedRecord":
        r = Reader(data)
        sn, uid = r.fixed(SN_BYTES), UserId.decode(r.field())
        r.done()
        return cls(sn, uid)


def _read_frames(path: Path) -> list[bytes]:
    data = path.read_bytes()
    frames, pos = [], 0
    while pos < len(data):
        if pos + 4 > len(data):
            raise DecodeError("truncated frame header")
        (n,) = _FRAME.unpack_from(data, pos)
        pos += 4
        if pos + n > len(data):
            raise DecodeError("truncated frame")
        frames.append(data[pos : pos + n])
        pos += n
    return frames


def _append_frame(path: Path, payload: bytes) -> None:
    with open(path, "ab") as fh:
        fh.write(_FRAME.pack(len(payload)) + payload)
        fh.flush()
        os.fsync(fh.fileno())


class Ledger:
    """Single-writer hash-chained log; readers only see committed entries."""

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: list[LedgerEntry] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            try:
                self._entries = [LedgerEntry.decode(f) for f in _read_frames(self.path)]
            except DecodeError as exc:
                raise LedgerCorrupted(f"unreadable ledger {self.path}: {exc}") from exc
            if not self.verify_chain():
                raise LedgerCorrupted(f"digest chain broken in {self.path}")

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[LedgerEntry]:
        return list(self._entries)

    def head(self) -> bytes:
        return self._entries[-1].entry_digest if self._entries else GENESIS

    def append(self, payload: bytes) -> LedgerEntry:
        with self._lock:
            index = len(self._entries)
            prev = self.head()
            entry = LedgerEntry(index, payload, prev, LedgerEntry.digest(index, prev, payload))
            if self.path is not None:
                _append_frame(self.path, entry.encode())
            self._entries = self._entries + [entry]
            return entry

    def verify_chain(self) -> bool:
        prev = GENESIS
        for i, e in enumerate(self._entries):
            if e.index != i or e.prev_digest != prev:
                return False
            if e.entry_digest != LedgerEntry.digest(e.index, e.prev_digest, e.payload):
                return False
            prev = e.entry_digest
        return True


class Registry:
    """IdP + ledger + trusted database.

    ``mit_fetches`` counts ledger lookups so callers can audit how many tokens
    a procedure touched.
    """

    def __init__(
        self,
        params: Params,
        idp: cps.KeyPair | None = None,
        *,
        ledger_path: str | os.PathLike | None = None,
        trusted_store_path: str | os.PathLike | None = None,
        authority_token: str | None = None,
        rng: random.Random | None = None,
    ):
        self.params = params
        self.rng = rng or default_rng()
        self.idp = idp or cps.keygen(params, self.rng)
        self.authority_token = authority_token or secrets.token_hex(16)
        self.ledger = Ledger(ledger_path)
        self.trusted_path = Path(trusted_store_path) if trusted_store_path is not None else None
        self._lock = threading.Lock()
        self._by_sn: dict[bytes, int] = {}
        self._mids: set[bytes] = set()
        self._trusted: dict[bytes, UserId] = {}
        self.mit_fetches = 0

        for e in self.ledger.entries():
            mit = MIT.decode(params, e.payload)
            if mit.sn in self._by_sn:
                raise LedgerCorrupted("duplicate serial number in ledger")
            self._by_sn[mit.sn] = e.index
        if self.trusted_path is not None and self.trusted_path.exists():
            for frame in _read_frames(self.trusted_path):
                rec = TrustedRecord.decode(frame)
                self._trusted[rec.sn] = rec.id
                self._mids.add(rec.id.mid)

    @property
    def idp_pk(self) -> cps.PublicKey:
        return self.idp.pk

    def register_user(self, uid: UserId, pk: cps.PublicKey, template: IrisTemplate, info: bytes = b"") -> MIT:
        if not pk.is_consistent(self.params):
            raise cps.InvalidKey("public key fails the dual-group consistency check")
        with self._lock:
            if uid.mid in self._mids:
                raise DuplicateMid(f"metaverse identity {uid.mid!r} already registered")
            sn = secrets.token_bytes(SN_BYTES)
            while sn in self._by_sn:
                sn = secrets.token_bytes(SN_BYTES)
            mit = endorse_mit(self.params, self.idp, sn, pk, template, info, self.rng)
            entry = self.ledger.append(mit.encode())
            self._by_sn[sn] = entry.index
            self._mids.add(uid.mid)
            self._trusted[sn] = uid
            if self.trusted_path is not None:
                _append_frame(self.trusted_path, TrustedRecord(sn, uid).encode())
        log.debug("registered sn=%s", sn.hex())
        return mit

    def get_mit(self, sn: bytes) -> MIT:
        self.mit_fetches += 1
        try:
            idx = self._by_sn[bytes(sn)]
        except KeyError:
            raise UnknownSerial(bytes(sn).hex()) from None
        return MIT.decode(self.params, self.ledger.entries()[idx].payload)

    def verify_mit(self, mit: MIT) -> bool:
        return verify_mit(self.params, mit, self.idp_pk)

    def resolve_sn(self, sn: bytes, authority_credential: str | None) -> UserId:
        if authority_credential is None or not hmac.compare_digest(
            str(authority_credential).encode(), self.authority_token.encode()
        ):
            raise Unauthorized("tracing authority credential required")
        try:
            return self._trusted[bytes(sn)]
        except KeyError:
            raise UnknownSerial(bytes(sn).hex()) from None

    def serials(self) -> list[bytes]:
        return list(self._by_sn)

    def verify_chain(self) -> bool:
        return self.ledger.verify_chain()
