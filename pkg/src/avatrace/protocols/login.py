"""Login: a user brings a registered, empty avatar online as human-driven.

Claim     user -> server   sn, aid, sigma, h, VID          (DGen with own key as proxy key)
Challenge server -> user   C                               (after MIT + VID checks)
Response  user -> server   PID = (iris || C, R')          (PSig under own key)
Accept    server -> user   avatar record, session token
"""

from __future__ import annotations

import secrets
from dataclasses import replace

from .. import biometric, cps
from ..codec import Reader, pack
from ..identity import PID, VID, Avatar, DriverType
from .common import CHALLENGE_BYTES, DriverKeys, PlatformServer, UserContext, check_pid, fetch_mit, new_session_id, vid_ok
from .wire import LoopbackTransport, Party, ProtocolAbort, Status, Step, raise_for_status


class UserLogin(Party):
    expects = (Step.LOGIN_CHALLENGE, Step.LOGIN_ACCEPT)

    def __init__(self, user: UserContext, aid: bytes, params, session_id: bytes | None = None):
        super().__init__(session_id or new_session_id())
        self.user = user
        self.aid = aid
        self.params = params
        self.sig: cps.ChameleonTuple | None = None
        self.pid: PID | None = None
        self.avatar: Avatar | None = None
        self.token: bytes | None = None

    def start(self):
        u = self.user
        self.sig = cps.dgen(self.params, u.keys, u.description, u.keys.pk, u.rng)
        vid = VID(self.sig.message, self.sig.R)
        body = pack(u.sn, self.aid, self.sig.sigma.to_bytes(), self.sig.h.to_bytes(), vid.encode())
        return self.send(Step.LOGIN_CLAIM, body)

    def on_login_challenge(self, body: bytes):
        if len(body) != CHALLENGE_BYTES:
            raise ProtocolAbort(Status.MALFORMED, "challenge length")
        feature = self.user.sample_iris()
        message = biometric.embed(feature, body)
        self.pid = PID(message, cps.psig(self.params, self.user.keys, self.sig.h, message))
        return self.send(Step.LOGIN_RESPONSE, self.pid.encode())

    def on_login_accept(self, body: bytes):
        r = Reader(body)
        record = Avatar.decode(self.params, r.field())
        self.token = r.fixed(16)
        r.done()
        if record.sn_u != self.user.sn or record.aid != self.aid or record.h != self.sig.h:
            raise ProtocolAbort(Status.MALFORMED, "server returned a different avatar")
        self.avatar = replace(record, pid=self.pid)
        self.complete()
        return None


class ServerLogin(Party):
    expects = (Step.LOGIN_CLAIM, Step.LOGIN_RESPONSE)

    def __init__(self, server: PlatformServer):
        super().__init__()
        self.server = server
        self.params = server.params
        self.claim: Avatar | None = None
        self.keys: DriverKeys | None = None

    def on_login_claim(self, body: bytes):
        r = Reader(body)
        sn, aid = r.fixed(16), r.field()
        sigma = self.params.deserialize("G1", r.field())
        h = self.params.deserialize("G1", r.field())
        vid = VID.decode(self.params, r.field())
        r.done()
        with self.server.lock:
            record = self.server.avatars.get(aid)
        if record is None or record.sn_u != sn:
            raise ProtocolAbort(Status.UNKNOWN_AVATAR)
        if record.sn_p is not None and record.sn_p != record.sn_u:
            raise ProtocolAbort(Status.AVATAR_BUSY, "avatar is driven by a proxy")
        mit = fetch_mit(self.server.registry, sn)
        self.keys = DriverKeys(DriverType.HUMAN, mit, mit)
        self.claim = Avatar(sn, aid, sn, sigma, h, vid)
        self.decide("vid", vid_ok(self.params, self.keys, self.claim), Status.VID_INVALID)
        return self.send(Step.LOGIN_CHALLENGE, self.server.nonces.issue(self.session_id))

    def on_login_response(self, body: bytes):
        pid = PID.decode(self.params, body)
        try:
            _, challenge = biometric.split(pid.message, CHALLENGE_BYTES)
        except ValueError:
            raise ProtocolAbort(Status.MALFORMED, "physical identity layout") from None
        self.decide("challenge", self.server.nonces.consume(self.session_id, challenge), Status.CHALLENGE_MISMATCH)
        status = check_pid(self.params, self.keys, self.claim, pid, challenge)
        self.decide("pid", status is Status.OK, status)
        token = secrets.token_bytes(16)
        with self.server.lock:
            record = self.server.avatars.get(self.claim.aid)
            if record is None or (record.sn_p is not None and record.sn_p != record.sn_u):
                raise ProtocolAbort(Status.AVATAR_BUSY, "avatar changed hands during login")
            self.server.avatars[self.claim.aid] = self.claim
            self.server.tokens[self.claim.aid] = token
        self.complete()
        return self.send(Step.LOGIN_ACCEPT, pack(self.claim.encode(), token))


def login(user: UserContext, aid: bytes, server: PlatformServer, transport=None) -> tuple[Avatar, bytes, UserLogin]:
    """Run the login protocol; returns the user's avatar view, session token and user-side party."""
    client = UserLogin(user, aid, server.params)
    endpoint = server.login_endpoint()
    (transport or LoopbackTransport()).run(client, endpoint)
    raise_for_status(endpoint, client)
    return client.avatar, client.token, client
