"""Mutual authentication between two avatars with session-key agreement.

Both sides run the same checks on each other, so the flow is symmetric:

  Claim       A -> B   avatar_A                 (AI-driven: carries the delegation PID_P)
  Challenge   B -> A   C_b, avatar_B            (after B verifies VID_A)
  Response    A -> B   PID_A, C_a               (after A verifies VID_B)
  Response-B  B -> A   PID_B, g^w2              (after B verifies PID_A)
  Key         A -> B   g^w1, binding digest     (after A verifies PID_B)
  Done        B -> A   key confirmation

A human driver answers the peer's challenge with a fresh iris capture. An
AI-driven avatar cannot, so it presents the PID captured at delegation, which
is checked against h_P and the original manipulator's template; replay
protection then comes from the binding digest, which covers both challenges
and the key-exchange elements.

Key_AB = (g^w2)^x_A * y_B^w1 = y_A^w2 * (g^w1)^x_B, where x and y are the
driver's keys (the proxy's for an AI-driven avatar).
"""

from __future__ import annotations

import hashlib
import hmac
import random
import secrets
from dataclasses import dataclass, replace

from .. import biometric, cps
from ..bilinear import GroupElement, Params, default_rng
from ..codec import Reader, pack
from ..identity import PID, Avatar, DriverType
from ..registry import Registry
from .common import CHALLENGE_BYTES, AvatarContext, DriverKeys, check_pid, driver_keys, new_session_id, vid_ok
from .wire import LoopbackTransport, Message, Party, ProtocolAbort, Status, Step, raise_for_status

BIND_TAG = b"avatrace-mutual-bind-v1"
CONFIRM_TAG = b"avatrace-mutual-confirm-v1"


def initiator_key(params: Params, x_a: int, y_b: GroupElement, g_w2: GroupElement, w1: int) -> GroupElement:
    return g_w2 ** x_a * y_b ** w1


def responder_key(params: Params, x_b: int, y_a: GroupElement, g_w1: GroupElement, w2: int) -> GroupElement:
    return y_a ** w2 * g_w1 ** x_b


def binding_digest(messages: list[Message], g_w1: GroupElement) -> bytes:
    h = hashlib.sha256(BIND_TAG)
    for m in messages:
        h.update(m.encode())
    h.update(g_w1.to_bytes())
    return h.digest()


def key_confirmation(session_id: bytes, key: GroupElement) -> bytes:
    return hashlib.sha256(CONFIRM_TAG + session_id + key.to_bytes()).digest()


def claimed_avatar(ctx: AvatarContext) -> Avatar:
    """What a driver puts on the wire: human drivers drop the stale login PID."""
    if ctx.driver_type is DriverType.HUMAN:
        return replace(ctx.avatar, pid=None)
    if ctx.avatar.pid is None:
        raise ValueError("AI-driven avatar has no delegation PID")
    return ctx.avatar


def verify_peer_claim(params: Params, registry: Registry, avatar: Avatar, decide) -> DriverKeys:
    if avatar.is_empty or avatar.sn_p is None:
        raise ProtocolAbort(Status.UNKNOWN_AVATAR, "peer avatar is not driven")
    keys = driver_keys(registry, avatar)
    decide("vid", vid_ok(params, keys, avatar), Status.VID_INVALID)
    if keys.driver_type is DriverType.AI_PROXY:
        if avatar.pid is None:
            raise ProtocolAbort(Status.MALFORMED, "AI-driven claim without PID")
        status = check_pid(params, keys, avatar, avatar.pid, None)
        decide("stored-pid", status is Status.OK, status)
    elif avatar.pid is not None:
        raise ProtocolAbort(Status.MALFORMED, "human-driven claim carries a PID")
    return keys


def verify_peer_pid(params: Params, keys: DriverKeys, avatar: Avatar, pid: PID, challenge: bytes, decide) -> None:
    if keys.driver_type is DriverType.AI_PROXY:
        decide("pid-binding", pid == avatar.pid, Status.BINDING_MISMATCH)
        return
    try:
        _, got = biometric.split(pid.message, CHALLENGE_BYTES)
    except ValueError:
        raise ProtocolAbort(Status.MALFORMED, "physical identity layout") from None
    decide("challenge", hmac.compare_digest(got, challenge), Status.CHALLENGE_MISMATCH)
    status = check_pid(params, keys, avatar, pid, challenge)
    decide("pid", status is Status.OK, status)


def own_pid(params: Params, ctx: AvatarContext, challenge: bytes) -> PID:
    if ctx.driver_type is DriverType.AI_PROXY:
        return ctx.avatar.pid
    feature = ctx.user.sample_iris()
    message = biometric.embed(feature, challenge)
    return PID(message, cps.psig(params, ctx.keys, ctx.avatar.h, message))


class _MutualParty(Party):
    def __init__(
        self,
        ctx: AvatarContext,
        registry: Registry,
        session_id: bytes | None = None,
        w: int | None = None,
        rng: random.Random | None = None,
    ):
        super().__init__(session_id)
        self.ctx = ctx
        self.registry = registry
        self.params = registry.params
        self.rng = rng or default_rng()
        self._w = w
        self.challenge = b""
        self.peer: Avatar | None = None
        self.peer_keys: DriverKeys | None = None
        self.key: GroupElement | None = None

    def _fresh_w(self) -> int:
        if self._w is not None:
            return self._w % self.params.q
        return cps._nonzero(self.rng, self.params.q)


class MutualInitiator(_MutualParty):
    expects = (Step.MA_CHALLENGE, Step.MA_RESPONSE_B, Step.MA_DONE)

    def __init__(self, ctx, registry, session_id=None, w=None, rng=None):
        super().__init__(ctx, registry, session_id or new_session_id(), w, rng)

    def start(self):
        return self.send(Step.MA_CLAIM, claimed_avatar(self.ctx).encode())

    def on_ma_challenge(self, body: bytes):
        r = Reader(body)
        peer_challenge = r.fixed(CHALLENGE_BYTES)
        self.peer = Avatar.decode(self.params, r.field())
        r.done()
        self.peer_keys = verify_peer_claim(self.params, self.registry, self.peer, self.decide)
        pid = own_pid(self.params, self.ctx, peer_challenge)
        self.challenge = secrets.token_bytes(CHALLENGE_BYTES)
        return self.send(Step.MA_RESPONSE, pack(pid.encode(), self.challenge))

    def on_ma_response_b(self, body: bytes):
        r = Reader(body)
        pid = PID.decode(self.params, r.field())
        g_w2 = self.params.deserialize("G1", r.field())
        r.done()
        verify_peer_pid(self.params, self.peer_keys, self.peer, pid, self.challenge, self.decide)
        if g_w2.is_identity():
            raise ProtocolAbort(Status.MALFORMED, "degenerate key share")
        w1 = self._fresh_w()
        g_w1 = self.params.g ** w1
        self.key = initiator_key(self.params, self.ctx.keys.sk, self.peer_keys.driver.pk.y1, g_w2, w1)
        digest = binding_digest(self.transcript.messages, g_w1)
        return self.send(Step.MA_KEY, pack(g_w1.to_bytes(), digest))

    def on_ma_done(self, body: bytes):
        # Needs the session key, so it is not a replayable decision.
        if not hmac.compare_digest(body, key_confirmation(self.session_id, self.key)):
            raise ProtocolAbort(Status.BINDING_MISMATCH, "key confirmation")
        self.complete()
        return None


class MutualResponder(_MutualParty):
    expects = (Step.MA_CLAIM, Step.MA_RESPONSE, Step.MA_KEY)

    def __init__(self, ctx, registry, session_id=None, w=None, rng=None):
        super().__init__(ctx, registry, session_id, w, rng)
        self.w2: int | None = None

    def on_ma_claim(self, body: bytes):
        self.peer = Avatar.decode(self.params, body)
        self.peer_keys = verify_peer_claim(self.params, self.registry, self.peer, self.decide)
        self.challenge = secrets.token_bytes(CHALLENGE_BYTES)
        return self.send(Step.MA_CHALLENGE, pack(self.challenge, claimed_avatar(self.ctx).encode()))

    def on_ma_response(self, body: bytes):
        r = Reader(body)
        pid = PID.decode(self.params, r.field())
        peer_challenge = r.fixed(CHALLENGE_BYTES)
        r.done()
        verify_peer_pid(self.params, self.peer_keys, self.peer, pid, self.challenge, self.decide)
        own = own_pid(self.params, self.ctx, peer_challenge)
        self.w2 = self._fresh_w()
        return self.send(Step.MA_RESPONSE_B, pack(own.encode(), (self.params.g ** self.w2).to_bytes()))

    def on_ma_key(self, body: bytes):
        r = Reader(body)
        g_w1 = self.params.deserialize("G1", r.field())
        digest = r.fixed(32)
        r.done()
        # The key message itself is already recorded; the digest covers everything before it.
        expected = binding_digest(self.transcript.messages[:-1], g_w1)
        self.decide("binding", hmac.compare_digest(digest, expected), Status.BINDING_MISMATCH)
        if g_w1.is_identity():
            raise ProtocolAbort(Status.MALFORMED, "degenerate key share")
        self.key = responder_key(self.params, self.ctx.keys.sk, self.peer_keys.driver.pk.y1, g_w1, self.w2)
        self.complete()
        return self.send(Step.MA_DONE, key_confirmation(self.session_id, self.key))


@dataclass
class MutualResult:
    initiator: MutualInitiator
    responder: MutualResponder

    @property
    def keys_match(self) -> bool:
        return self.initiator.key is not None and self.initiator.key == self.responder.key


def mutual_auth(
    a: AvatarContext,
    b: AvatarContext,
    registry: Registry,
    transport=None,
    *,
    w1: int | None = None,
    w2: int | None = None,
    rng: random.Random | None = None,
) -> MutualResult:
    """Authenticate avatars ``a`` (initiator) and ``b`` to each other and agree on Key_AB."""
    ini = MutualInitiator(a, registry, w=w1, rng=rng)
    res = MutualResponder(b, registry, w=w2, rng=rng)
    (transport or LoopbackTransport()).run(ini, res)
    raise_for_status(res, ini)
    return MutualResult(ini, res)
