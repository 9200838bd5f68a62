"""Delegation: a logged-in user hands an avatar to an AI proxy.

Session 1, user A -> proxy P
  Claim     A -> P   full avatar
  Challenge P -> A   sn_P, C                         (after MIT_A + VID_A checks)
  Response  A -> P   sigma', h_P, PID_P              (DGen over iris || C toward pk_P)
  Ack       P -> A                                   (after iris + PID_P checks)

Session 2, proxy P -> server S
  Submit    P -> S   sn_A, aid, sigma', h_P, VID_P, sn_P   (VID_P = (M_A, PSig(sk_P, h_P, M_A)))
  Transfer  S -> P   updated avatar; A's session token is revoked
"""

from __future__ import annotations

from dataclasses import replace

from .. import biometric, cps
from ..codec import Reader, pack
from ..identity import PID, VID, Avatar, DriverType, driver_type
from .common import (
    CHALLENGE_BYTES,
    DriverKeys,
    PlatformServer,
    ProxyContext,
    UserContext,
    check_pid,
    fetch_mit,
    new_session_id,
    vid_ok,
)
from .wire import LoopbackTransport, Party, ProtocolAbort, Status, Step, raise_for_status


class UserDelegation(Party):
    expects = (Step.DELEG_CHALLENGE, Step.DELEG_ACK)

    def __init__(self, user: UserContext, avatar: Avatar, registry, params, session_id: bytes | None = None):
        super().__init__(session_id or new_session_id())
        self.user = user
        self.avatar = avatar
        self.registry = registry
        self.params = params

    def start(self):
        return self.send(Step.DELEG_CLAIM, self.avatar.encode())

    def on_deleg_challenge(self, body: bytes):
        r = Reader(body)
        sn_p, challenge = r.fixed(16), r.fixed(CHALLENGE_BYTES)
        r.done()
        proxy_mit = fetch_mit(self.registry, sn_p)
        feature = self.user.sample_iris()
        message = biometric.embed(feature, challenge)
        sig = cps.dgen(self.params, self.user.keys, message, proxy_mit.pk, self.user.rng)
        pid = PID(message, sig.R)
        return self.send(Step.DELEG_RESPONSE, pack(sig.sigma.to_bytes(), sig.h.to_bytes(), pid.encode()))

    def on_deleg_ack(self, body: bytes):
        self.complete()
        return None


class ProxyDelegation(Party):
    expects = (Step.DELEG_CLAIM, Step.DELEG_RESPONSE)

    def __init__(self, proxy: ProxyContext, registry, params, nonces):
        super().__init__()
        self.proxy = proxy
        self.registry = registry
        self.params = params
        self.nonces = nonces
        self.original: Avatar | None = None
        self.keys: DriverKeys | None = None
        self.delegated: Avatar | None = None

    def on_deleg_claim(self, body: bytes):
        avatar = Avatar.decode(self.params, body)
        if avatar.is_empty or avatar.sn_p is None or driver_type(avatar) is not DriverType.HUMAN:
            raise ProtocolAbort(Status.UNKNOWN_AVATAR, "only a human-driven avatar can be delegated")
        mit_a = fetch_mit(self.registry, avatar.sn_u)
        self.keys = DriverKeys(DriverType.HUMAN, mit_a, mit_a)
        self.original = avatar
        self.decide("vid", vid_ok(self.params, self.keys, avatar), Status.VID_INVALID)
        challenge = self.nonces.issue(self.session_id)
        return self.send(Step.DELEG_CHALLENGE, pack(self.proxy.sn, challenge))

    def on_deleg_response(self, body: bytes):
        r = Reader(body)
        sigma = self.params.deserialize("G1", r.field())
        h_p = self.params.deserialize("G1", r.field())
        pid = PID.decode(self.params, r.field())
        r.done()
        try:
            _, challenge = biometric.split(pid.message, CHALLENGE_BYTES)
        except ValueError:
            raise ProtocolAbort(Status.MALFORMED, "physical identity layout") from None
        self.decide("challenge", self.nonces.consume(self.session_id, challenge), Status.CHALLENGE_MISMATCH)
        keys = DriverKeys(DriverType.AI_PROXY, self.keys.original, self.proxy.mit)
        a = self.original
        pending = Avatar(a.sn_u, a.aid, self.proxy.sn, sigma, h_p, None, pid)
        status = check_pid(self.params, keys, pending, pid, challenge)
        self.decide("pid", status is Status.OK, status)
        r_p = cps.psig(self.params, self.proxy.keys, h_p, a.vid.message)
        self.delegated = replace(pending, vid=VID(a.vid.message, r_p))
        self.complete()
        return self.send(Step.DELEG_ACK)


class ProxySubmit(Party):
    expects = (Step.DELEG_TRANSFER,)

    def __init__(self, delegated: Avatar, params, session_id: bytes | None = None):
        super().__init__(session_id or new_session_id())
        self.delegated = delegated
        self.params = params
        self.avatar: Avatar | None = None

    def start(self):
        d = self.delegated
        body = pack(d.sn_u, d.aid, d.sigma.to_bytes(), d.h.to_bytes(), d.vid.encode(), d.sn_p)
        return self.send(Step.DELEG_SUBMIT, body)

    def on_deleg_transfer(self, body: bytes):
        record = Avatar.decode(self.params, body)
        if replace(record, pid=self.delegated.pid) != self.delegated:
            raise ProtocolAbort(Status.MALFORMED, "server stored a different avatar")
        self.avatar = replace(record, pid=self.delegated.pid)
        self.complete()
        return None


class ServerTransfer(Party):
    expects = (Step.DELEG_SUBMIT,)

    def __init__(self, server: PlatformServer):
        super().__init__()
        self.server = server
        self.params = server.params

    def on_deleg_submit(self, body: bytes):
        r = Reader(body)
        sn_a, aid = r.fixed(16), r.field()
        sigma = self.params.deserialize("G1", r.field())
        h_p = self.params.deserialize("G1", r.field())
        vid = VID.decode(self.params, r.field())
        sn_p = r.fixed(16)
        r.done()
        with self.server.lock:
            record = self.server.avatars.get(aid)
        if record is None or record.sn_u != sn_a or record.is_empty:
            raise ProtocolAbort(Status.UNKNOWN_AVATAR)
        if record.sn_p != record.sn_u:
            raise ProtocolAbort(Status.AVATAR_BUSY, "avatar already delegated")
        if sn_p == sn_a:
            raise ProtocolAbort(Status.MALFORMED, "proxy serial equals the user's")
        updated = Avatar(sn_a, aid, sn_p, sigma, h_p, vid)
        keys = DriverKeys(DriverType.AI_PROXY, fetch_mit(self.server.registry, sn_a), fetch_mit(self.server.registry, sn_p))
        self.decide("vid", vid_ok(self.params, keys, updated), Status.VID_INVALID)
        self.decide("description", vid.message == record.vid.message, Status.DESCRIPTION_MISMATCH)
        with self.server.lock:
            if self.server.avatars.get(aid) != record:
                raise ProtocolAbort(Status.AVATAR_BUSY, "avatar changed during transfer")
            self.server.avatars[aid] = updated
            # The original user is forced offline.
            self.server.tokens.pop(aid, None)
        self.complete()
        return self.send(Step.DELEG_TRANSFER, updated.encode())


def delegate(
    user: UserContext,
    avatar: Avatar,
    proxy: ProxyContext,
    server: PlatformServer,
    transport=None,
    proxy_nonces=None,
) -> tuple[Avatar, UserDelegation, ProxyDelegation, ProxySubmit]:
    """Run both delegation sessions; returns the proxy's view of the AI-driven avatar (pid = PID_P)."""
    from .common import NonceTable

    transport = transport or LoopbackTransport()
    a = UserDelegation(user, avatar, server.registry, server.params)
    p = ProxyDelegation(proxy, server.registry, server.params, proxy_nonces or NonceTable())
    transport.run(a, p)
    raise_for_status(p, a)
    submit = ProxySubmit(p.delegated, server.params)
    endpoint = server.transfer_endpoint()
    transport.run(submit, endpoint)
    raise_for_status(endpoint, submit)
    return submit.avatar, a, p, submit
