"""Shared protocol state: party contexts, the platform server and identity checks."""

from __future__ import annotations

import random
import secrets
import threading
from dataclasses import dataclass, field

from .. import biometric, cps
from ..bilinear import Params, default_rng
from ..biometric import IrisTemplate
from ..codec import DecodeError
from ..identity import MIT, PID, Avatar, DriverType, UserId, driver_type
from ..registry import Registry, UnknownSerial
from .wire import ProtocolAbort, Status

CHALLENGE_BYTES = 32


@dataclass
class UserContext:
    """A human user: identity, keys, token and the eye the sensor reads."""

    uid: UserId
    keys: cps.KeyPair
    mit: MIT
    iris: IrisTemplate
    description: bytes
    noise_rate: float = biometric.DEFAULT_NOISE
    iris_delay: float | None = None
    rng: random.Random = field(default_factory=random.Random, repr=False)

    @property
    def sn(self) -> bytes:
        return self.mit.sn

    def sample_iris(self) -> biometric.IrisFeature:
        return biometric.sample(self.iris, self.noise_rate, self.rng, self.iris_delay)


@dataclass
class ProxyContext:
    keys: cps.KeyPair
    mit: MIT

    @property
    def sn(self) -> bytes:
        return self.mit.sn


@dataclass
class AvatarContext:
    """A live avatar as seen by whoever drives it.

    Human-driven: ``keys`` are the user's and ``user`` samples fresh iris
    features. AI-driven: ``keys`` are the proxy's and ``avatar.pid`` is the
    physical identity captured at delegation.
    """

    avatar: Avatar
    keys: cps.KeyPair
    user: UserContext | None = None

    @property
    def driver_type(self) -> DriverType:
        return driver_type(self.avatar)


class NonceTable:
    """Outstanding challenges per session; each challenge is accepted once."""

    def __init__(self):
        self._outstanding: dict[bytes, bytes] = {}
        self._used: set[bytes] = set()
        self._lock = threading.Lock()

    def issue(self, session_id: bytes) -> bytes:
        c = secrets.token_bytes(CHALLENGE_BYTES)
        with self._lock:
            self._outstanding[session_id] = c
        return c

    def consume(self, session_id: bytes, challenge: bytes) -> bool:
        with self._lock:
            expected = self._outstanding.get(session_id)
            if expected is None or challenge in self._used or not secrets.compare_digest(expected, challenge):
                return False
            del self._outstanding[session_id]
            self._used.add(challenge)
            return True


@dataclass
class DriverKeys:
    driver_type: DriverType
    original: MIT
    driver: MIT


def fetch_mit(registry: Registry, sn: bytes) -> MIT:
    try:
        mit = registry.get_mit(sn)
    except UnknownSerial:
        raise ProtocolAbort(Status.UNKNOWN_SN, sn.hex()) from None
    except (DecodeError, cps.InvalidKey) as exc:
        raise ProtocolAbort(Status.MIT_INVALID, str(exc)) from None
    if not registry.verify_mit(mit):
        raise ProtocolAbort(Status.MIT_INVALID, "IdP endorsement does not verify")
    return mit


def driver_keys(registry: Registry, avatar: Avatar) -> DriverKeys:
    """Fetch one MIT for a human-driven avatar, two for an AI-driven one."""
    kind = driver_type(avatar)
    original = fetch_mit(registry, avatar.sn_u)
    driver = original if kind is DriverType.HUMAN else fetch_mit(registry, avatar.sn_p)
    return DriverKeys(kind, original, driver)


def vid_ok(params: Params, keys: DriverKeys, avatar: Avatar) -> bool:
    if avatar.vid is None or avatar.sigma is None or avatar.h is None or avatar.vid.R.is_identity():
        return False
    return cps.pver(params, keys.original.pk, avatar.vid_tuple(), keys.driver.pk)


def check_pid(
    params: Params, keys: DriverKeys, avatar: Avatar, pid: PID, expected_challenge: bytes | None
) -> Status:
    """Validate a physical identity; returns OK or the first failing check's code."""
    try:
        feature, challenge = biometric.split(pid.message, CHALLENGE_BYTES)
    except ValueError:
        return Status.MALFORMED
    if expected_challenge is not None and not secrets.compare_digest(challenge, expected_challenge):
        return Status.CHALLENGE_MISMATCH
    if not biometric.match(feature, keys.original.template):
        return Status.IRIS_MISMATCH
    if pid.R.is_identity() or not cps.pver(params, keys.original.pk, avatar.pid_tuple(pid), keys.driver.pk):
        return Status.PID_INVALID
    return Status.OK


class PlatformServer:
    """The cloud platform: avatar records, session tokens and challenge bookkeeping."""

    def __init__(self, params: Params, registry: Registry, rng: random.Random | None = None):
        self.params = params
        self.registry = registry
        self.rng = rng or default_rng()
        self.avatars: dict[bytes, Avatar] = {}
        self.tokens: dict[bytes, bytes] = {}
        self.nonces = NonceTable()
        self.lock = threading.RLock()

    def register_avatar(self, sn: bytes, aid: bytes) -> Avatar:
        with self.lock:
            if aid in self.avatars:
                raise ValueError(f"avatar {aid!r} already exists")
            record = Avatar(sn, aid)
            self.avatars[aid] = record
            return record

    def session_valid(self, aid: bytes, token: bytes | None) -> bool:
        with self.lock:
            current = self.tokens.get(aid)
        return token is not None and current is not None and secrets.compare_digest(current, token)

    def login_endpoint(self):
        from .login import ServerLogin

        return ServerLogin(self)

    def transfer_endpoint(self):
        from .delegation import ServerTransfer

        return ServerTransfer(self)


def new_session_id() -> bytes:
    return secrets.token_bytes(16)
