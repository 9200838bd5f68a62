"""Tracing an avatar back to its physical manipulator, and transcript replay.

Evidence is what a reporting avatar hands the tracing authority: the accused
avatar, the transcript it retained from a mutual authentication, and a digest
of the offending interaction image. The authority re-fetches the MIT(s),
re-verifies VID then PID from the transcript, and only then resolves SN_U.
"""

from __future__ import annotations

import hmac
import logging
import time
from dataclasses import dataclass, field, replace

from .. import biometric
from ..codec import DecodeError, Reader, pack
from ..identity import PID, Avatar, DriverType, UserId
from ..registry import Registry
from .common import CHALLENGE_BYTES, check_pid, driver_keys, vid_ok
from .mutual import binding_digest, verify_peer_claim, verify_peer_pid
from .wire import Message, ProtocolAbort, ProtocolTranscript, Status, Step

log = logging.getLogger(__name__)


class AccusationRejected(Exception):
    def __init__(self, code: Status, detail: str = ""):
        super().__init__(f"{code.name}: {detail}" if detail else code.name)
        self.code = code


@dataclass(frozen=True)
class Evidence:
    avatar: Avatar
    transcript: ProtocolTranscript
    image_digest: bytes

    def encode(self) -> bytes:
        return pack(self.avatar.encode(), self.transcript.to_bytes(), self.image_digest)

    @classmethod
    def decode(cls, params, data: bytes) -> "Evidence":
        r = Reader(data)
        avatar = Avatar.decode(params, r.field())
        transcript = ProtocolTranscript.from_bytes(r.field())
        digest = r.field()
        r.done()
        return cls(avatar, transcript, digest)


@dataclass
class TraceReport:
    user_id: UserId
    driver_type: DriverType
    mits_fetched: int
    timings: dict[str, float] = field(default_factory=dict)


@dataclass
class _Located:
    avatar: Avatar
    pid: PID
    challenge: bytes


def _locate(params, transcript: ProtocolTranscript, aid: bytes) -> _Located:
    """Find the accused avatar's claim, its PID and the challenge it answered."""
    claim = transcript.find(Step.MA_CLAIM)
    chal = transcript.find(Step.MA_CHALLENGE)
    resp = transcript.find(Step.MA_RESPONSE)
    resp_b = transcript.find(Step.MA_RESPONSE_B)
    if None in (claim, chal, resp, resp_b):
        raise AccusationRejected(Status.INCOMPLETE, "transcript lacks the authentication messages")
    r = Reader(chal.body)
    c_b = r.fixed(CHALLENGE_BYTES)
    avatar_b = Avatar.decode(params, r.field())
    r.done()
    r = Reader(resp.body)
    pid_a = PID.decode(params, r.field())
    c_a = r.fixed(CHALLENGE_BYTES)
    r.done()
    pid_b = PID.decode(params, Reader(resp_b.body).field())
    avatar_a = Avatar.decode(params, claim.body)
    if avatar_a.aid == aid:
        return _Located(avatar_a, pid_a, c_b)
    if avatar_b.aid == aid:
        return _Located(avatar_b, pid_b, c_a)
    raise AccusationRejected(Status.UNKNOWN_AVATAR, "accused avatar does not appear in the transcript")


def trace_detailed(evidence: Evidence, registry: Registry, authority_credential: str | None) -> TraceReport:
    params = registry.params
    t0 = time.perf_counter()
    timings: dict[str, float] = {}
    if evidence.transcript.status != Status.OK:
        raise AccusationRejected(Status.INCOMPLETE, "evidence transcript did not complete")
    try:
        found = _locate(params, evidence.transcript, evidence.avatar.aid)
    except DecodeError as exc:
        raise AccusationRejected(Status.MALFORMED, str(exc)) from None
    accused = evidence.avatar
    if replace(accused, pid=None) != replace(found.avatar, pid=None) or accused.sn_p is None:
        raise AccusationRejected(Status.BINDING_MISMATCH, "avatar differs from the one in the transcript")

    before = registry.mit_fetches
    try:
        keys = driver_keys(registry, found.avatar)
    except ProtocolAbort as exc:
        raise AccusationRejected(exc.code, exc.detail) from None
    fetched = registry.mit_fetches - before
    t1 = time.perf_counter()
    timings["fetch_mit"] = t1 - t0

    if not vid_ok(params, keys, found.avatar):
        raise AccusationRejected(Status.VID_INVALID)
    t2 = time.perf_counter()
    timings["verify_vid"] = t2 - t1

    if keys.driver_type is DriverType.AI_PROXY:
        stored = found.avatar.pid
        if stored is None or found.pid != stored:
            raise AccusationRejected(Status.BINDING_MISMATCH, "AI-driven PID differs from the delegation PID")
        status = check_pid(params, keys, found.avatar, stored, None)
    else:
        status = check_pid(params, keys, found.avatar, found.pid, found.challenge)
    if status is not Status.OK:
        raise AccusationRejected(status)
    t3 = time.perf_counter()
    timings["verify_pid"] = t3 - t2

    uid = registry.resolve_sn(found.avatar.sn_u, authority_credential)
    timings["resolve"] = time.perf_counter() - t3
    timings["total"] = time.perf_counter() - t0
    log.info("traced aid=%r to mid=%r (%s)", found.avatar.aid, uid.mid, keys.driver_type.value)
    return TraceReport(uid, keys.driver_type, fetched, timings)


def trace(evidence: Evidence, registry: Registry, authority_credential: str | None) -> UserId:
    """Return the original manipulator's identity, or raise AccusationRejected / Unauthorized."""
    return trace_detailed(evidence, registry, authority_credential).user_id


def evidence_from(party, image_digest: bytes) -> Evidence:
    """Package what a mutual-authentication party retained about its peer."""
    return Evidence(party.peer, party.transcript, image_digest)


class _Recorder:
    def __init__(self):
        self.decisions: list[tuple[str, bool]] = []

    def __call__(self, label: str, ok: bool, code: Status) -> None:
        self.decisions.append((label, ok))
        if not ok:
            raise ProtocolAbort(code, label)


def _split_challenge(pid: PID) -> bytes | None:
    try:
        return biometric.split(pid.message, CHALLENGE_BYTES)[1]
    except ValueError:
        return None


def _replay_mutual(params, registry, msgs: list[Message], rec: _Recorder, initiator: bool) -> None:
    by_step = {m.step: m for m in msgs}
    claim, chal = by_step.get(Step.MA_CLAIM), by_step.get(Step.MA_CHALLENGE)
    if initiator:
        # The initiator verified the responder's claim, PID and key confirmation (not replayable).
        if chal is None:
            return
        r = Reader(chal.body)
        r.fixed(CHALLENGE_BYTES)
        peer = Avatar.decode(params, r.field())
        keys = verify_peer_claim(params, registry, peer, rec)
        resp, resp_b = by_step.get(Step.MA_RESPONSE), by_step.get(Step.MA_RESPONSE_B)
        if resp is None or resp_b is None:
            return
        r = Reader(resp.body)
        r.field()
        own_challenge = r.fixed(CHALLENGE_BYTES)
        pid = PID.decode(params, Reader(resp_b.body).field())
        verify_peer_pid(params, keys, peer, pid, own_challenge, rec)
        return
    if claim is None:
        return
    peer = Avatar.decode(params, claim.body)
    keys = verify_peer_claim(params, registry, peer, rec)
    resp = by_step.get(Step.MA_RESPONSE)
    if chal is None or resp is None:
        return
    own_challenge = Reader(chal.body).fixed(CHALLENGE_BYTES)
    pid = PID.decode(params, Reader(resp.body).field())
    verify_peer_pid(params, keys, peer, pid, own_challenge, rec)
    key_msg = by_step.get(Step.MA_KEY)
    if key_msg is None:
        return
    r = Reader(key_msg.body)
    g_w1 = params.deserialize("G1", r.field())
    digest = r.fixed(32)
    prior = msgs[: msgs.index(key_msg)]
    rec("binding", hmac.compare_digest(digest, binding_digest(prior, g_w1)), Status.BINDING_MISMATCH)


def _replay_login(params, registry, msgs: list[Message], rec: _Recorder) -> None:
    from ..identity import VID

    by_step = {m.step: m for m in msgs}
    claim = by_step.get(Step.LOGIN_CLAIM)
    if claim is None:
        return
    r = Reader(claim.body)
    sn, aid = r.fixed(16), r.field()
    sigma = params.deserialize("G1", r.field())
    h = params.deserialize("G1", r.field())
    vid = VID.decode(params, r.field())
    avatar = Avatar(sn, aid, sn, sigma, h, vid)
    keys = driver_keys(registry, avatar)
    rec("vid", vid_ok(params, keys, avatar), Status.VID_INVALID)
    chal, resp = by_step.get(Step.LOGIN_CHALLENGE), by_step.get(Step.LOGIN_RESPONSE)
    if chal is None or resp is None:
        return
    pid = PID.decode(params, resp.body)
    got = _split_challenge(pid)
    if got is None:
        return
    rec("challenge", hmac.compare_digest(got, chal.body), Status.CHALLENGE_MISMATCH)
    status = check_pid(params, keys, avatar, pid, chal.body)
    rec("pid", status is Status.OK, status)


REPLAY_ROLES = ("server-login", "mutual-initiator", "mutual-responder")


def replay_transcript(registry: Registry, transcript: ProtocolTranscript, role: str | None = None) -> list[tuple[str, bool]]:
    """Re-run every verification recorded in a stored transcript.

    ``role`` names whose transcript it is; both ends of a session record the
    same messages, so it cannot be inferred for mutual authentication
    (default there: the responder, which is the side that keeps evidence).
    Returns the (label, accepted) decisions in order, matching the live run.
    """
    params = registry.params
    msgs = [m for m in transcript.messages if m.step != Step.ABORT]
    rec = _Recorder()
    if not msgs:
        return rec.decisions
    if role is None:
        role = "server-login" if msgs[0].step == Step.LOGIN_CLAIM else "mutual-responder"
    if role not in REPLAY_ROLES:
        raise ValueError(f"unknown replay role {role!r}")
    try:
        if role == "server-login":
            _replay_login(params, registry, msgs, rec)
        else:
            _replay_mutual(params, registry, msgs, rec, initiator=role == "mutual-initiator")
    except (ProtocolAbort, DecodeError):
        pass
    return rec.decisions
