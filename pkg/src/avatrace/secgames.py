"""Executable security-game simulators and forgery harnesses.

The two simulators program the random oracle around a CDH / DCDH instance
exactly as a reduction would and hand the adversary only public values. They
are consistency harnesses: every oracle answer must verify like an honest one,
and a test-double adversary that is *given* the instance exponents must let
the simulator extract the instance solution. Nothing here measures real
adversarial advantage.

The false-accusation and tamper harnesses push randomized forgeries through
``pver`` and ``trace`` and report how many were rejected.
"""

from __future__ import annotations

import hashlib
import logging
import random
import secrets
import warnings
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

from . import cps
from .bilinear import GroupElement, Params, default_rng
from .codec import Reader, pack
from .cps import ChameleonTuple, PublicKey
from .identity import PID, VID, Avatar
from .protocols import AccusationRejected, Evidence, Message, ProtocolTranscript, Step, trace
from .registry import Registry, Unauthorized

log = logging.getLogger(__name__)

BOTTOM = "⊥"


class GameAbort(Exception):
    """The adversary hit the forbidden oracle index."""


def _nonzero(rng: random.Random, q: int) -> int:
    return cps._nonzero(rng, q)


def _symmetric_pk(params: Params, y: GroupElement) -> PublicKey:
    if not params.is_transparent:
        raise ValueError("security-game simulators need the transparent backend")
    return PublicKey(y, y)


@dataclass
class GameResult:
    """``outcome`` is one of: solved, no-forgery, invalid-forgery, not-fresh, wrong-guess, abort."""

    game: str
    outcome: str
    solution: GroupElement | None = None
    abort_reason: str | None = None
    forgery: ChameleonTuple | None = None
    queries: Counter = field(default_factory=Counter)
    j: int = 0
    w: int = 0

    @property
    def solved(self) -> bool:
        return self.outcome == "solved"

    def summary(self) -> dict:
        return {
            "game": self.game,
            "outcome": self.outcome,
            "solution_log": None if self.solution is None else self.solution.log,
            "abort_reason": self.abort_reason,
            "queries": dict(self.queries),
            "j": self.j,
            "w": self.w,
        }


@dataclass
class OracleTables:
    L_H: dict[bytes, tuple[int, GroupElement]] = field(default_factory=dict)
    h_index: dict[bytes, int] = field(default_factory=dict)
    # message -> list of (k, r, h, R); k is the global CH query index
    L_CH: dict[bytes, list[tuple[int, int, GroupElement, GroupElement]]] = field(default_factory=dict)
    L_OS: dict[bytes, tuple[GroupElement, GroupElement, GroupElement]] = field(default_factory=dict)
    L_PS: dict[bytes, GroupElement] = field(default_factory=dict)


class Adversary(Protocol):
    def run(self, game) -> ChameleonTuple | None: ...


# ---------------------------------------------------------------------------
# Original-signature game (CDH)


class OsEufGame:
    """Simulator for original-signature unforgeability.

    Public view for the adversary: ``params`` (with the programmed oracle),
    ``pk_a`` (= g^a), ``pk_b`` (= g^chi), and the oracles ``H``, ``CH``, ``OS``.
    """

    name = "os-euf"

    def __init__(
        self,
        params: Params,
        instance: tuple[GroupElement, GroupElement, GroupElement],
        *,
        q_h: int = 64,
        j: int | None = None,
        w: int | None = None,
        rng: random.Random | None = None,
    ):
        g, g_a, g_b = instance
        self._rng = rng or default_rng()
        self._g_a, self._g_b = g_a, g_b
        self._chi = _nonzero(self._rng, params.q)
        self.q_h = q_h
        self.j = j if j is not None else self._rng.randint(1, q_h)
        self.w = w if w is not None else self._rng.randint(1, q_h)
        self.tables = OracleTables()
        self.queries: Counter = Counter()
        self._ch_count = 0
        self.params = replace(params, random_oracle=self.H)
        self.pk_a = _symmetric_pk(params, g_a)
        self.pk_b = _symmetric_pk(params, params.g ** self._chi)
        # Everything handed out, for the consistency sweep.
        self.answers: list[tuple[str, ChameleonTuple]] = []

    def H(self, message: bytes) -> GroupElement:
        message = bytes(message)
        self.queries["H"] += 1
        hit = self.tables.L_H.get(message)
        if hit is not None:
            return hit[1]
        i = len(self.tables.L_H) + 1
        t = self._rng.randrange(self.params.q)
        m = self.params.g ** t
        if i == self.j:
            m = self._g_b * m
        self.tables.L_H[message] = (t, m)
        self.tables.h_index[message] = i
        return m

    def _fresh_ch(self, message: bytes) -> tuple[int, int, GroupElement, GroupElement]:
        m = self.H(message)
        self._ch_count += 1
        r = _nonzero(self._rng, self.params.q)
        entry = (self._ch_count, r, m * self.pk_b.y1 ** r, self.params.g ** r)
        self.tables.L_CH.setdefault(message, []).append(entry)
        return entry

    def CH(self, message: bytes) -> tuple[GroupElement, GroupElement]:
        message = bytes(message)
        self.queries["CH"] += 1
        _, _, h, R = self._fresh_ch(message)
        self.answers.append(("CH", ChameleonTuple(h, message, R)))
        return h, R

    def OS(self, message: bytes) -> ChameleonTuple:
        message = bytes(message)
        self.queries["OS"] += 1
        self.H(message)
        if self.tables.h_index[message] == self.j:
            raise GameAbort(f"OS queried on the forged index j={self.j}")
        t, _ = self.tables.L_H[message]
        usable = [e for e in self.tables.L_CH.get(message, []) if e[0] != self.w]
        # No usable chameleon tuple (none yet, or all at index w): draw a fresh one.
        while not usable:
            e = self._fresh_ch(message)
            usable = [e] if e[0] != self.w else []
        _, r, h, R = self._rng.choice(usable)
        sigma = self.pk_a.y1 ** t * self.pk_a.y1 ** (self._chi * r % self.params.q)
        sig = ChameleonTuple(h, message, R, sigma)
        self.tables.L_OS[message] = (sigma, h, R)
        self.answers.append(("OS", sig))
        return sig

    def verify_answers(self) -> list[bool]:
        out = []
        for kind, sig in self.answers:
            if kind == "OS":
                out.append(cps.pver(self.params, self.pk_a, sig, self.pk_b))
            else:
                out.append(cps.check_chameleon(self.params, self.pk_b, sig.h, sig.message, sig.R))
        return out

    def finish(self, forgery: ChameleonTuple | None) -> GameResult:
        res = GameResult(self.name, "no-forgery", forgery=forgery, queries=self.queries, j=self.j, w=self.w)
        if forgery is None:
            return res
        if not cps.pver(self.params, self.pk_a, forgery, self.pk_b):
            res.outcome = "invalid-forgery"
            return res
        seen = self.tables.L_OS.get(forgery.message)
        if seen is not None and seen == (forgery.sigma, forgery.h, forgery.R):
            res.outcome = "not-fresh"
            return res
        if self.tables.h_index.get(forgery.message) != self.j:
            res.outcome = "wrong-guess"
            return res
        match = [e for e in self.tables.L_CH.get(forgery.message, []) if e[0] == self.w and e[2] == forgery.h]
        if not match:
            res.outcome = "wrong-guess"
            return res
        t_j, _ = self.tables.L_H[forgery.message]
        r_jw = match[0][1]
        q = self.params.q
        res.solution = forgery.sigma / (self._g_a ** t_j * self._g_a ** (self._chi * r_jw % q))
        res.outcome = "solved"
        return res


def run_os_euf_simulation(
    params: Params,
    instance: tuple[GroupElement, GroupElement, GroupElement],
    adversary: Adversary,
    **game_kwargs,
) -> GameResult:
    game = OsEufGame(params, instance, **game_kwargs)
    try:
        forgery = adversary.run(game)
    except GameAbort as exc:
        return GameResult(game.name, "abort", abort_reason=f"{BOTTOM}: {exc}", queries=game.queries, j=game.j, w=game.w)
    return game.finish(forgery)


# ---------------------------------------------------------------------------
# Proxy-signature game (DCDH)


class PsEufGame:
    """Simulator for proxy-signature unforgeability.

    Public view: ``params`` (programmed oracle), ``pk_a`` (= g^chi), ``pk_b``
    (= g^b), the initial original signature ``initial`` = (sigma_A, h_B, M, R)
    and the oracles ``H`` and ``PS``.
    """

    name = "ps-euf"

    def __init__(
        self,
        params: Params,
        instance: tuple[GroupElement, GroupElement, GroupElement],
        *,
        q_h: int = 64,
        j: int | None = None,
        rng: random.Random | None = None,
        initial_message: bytes = b"initial avatar description",
    ):
        g, g_a, g_b = instance
        self._rng = rng or default_rng()
        q = params.q
        self._g_a, self._g_b = g_a, g_b
        self._chi = _nonzero(self._rng, q)
        self._theta = _nonzero(self._rng, q)
        self.q_h = q_h
        self.j = j if j is not None else self._rng.randint(1, q_h)
        self.tables = OracleTables()
        self.queries: Counter = Counter()
        self._count = 0
        self.params = replace(params, random_oracle=self.H)
        self.pk_a = _symmetric_pk(params, params.g ** self._chi)
        self.pk_b = _symmetric_pk(params, g_b)
        self._g_theta = params.g ** self._theta

        t = _nonzero(self._rng, q)
        m = self._g_theta * g_b ** t / g_b ** self._theta
        h_b = self._g_theta
        R = self._g_theta / params.g ** t
        self.tables.L_H[bytes(initial_message)] = (t, m)
        self.tables.L_PS[bytes(initial_message)] = R
        self.initial = ChameleonTuple(h_b, bytes(initial_message), R, h_b ** self._chi)
        self.answers: list[ChameleonTuple] = []

    def H(self, message: bytes) -> GroupElement:
        message = bytes(message)
        self.queries["H"] += 1
        hit = self.tables.L_H.get(message)
        if hit is not None:
            return hit[1]
        self._count += 1
        t = self._rng.randrange(self.params.q)
        m = self._g_theta * self.pk_b.y1 ** t / self.pk_b.y1 ** self._theta
        if self._count == self.j:
            m = m / self._g_a
        self.tables.L_H[message] = (t, m)
        self.tables.h_index[message] = self._count
        return m

    def PS(self, message: bytes) -> GroupElement:
        message = bytes(message)
        self.queries["PS"] += 1
        hit = self.tables.L_PS.get(message)
        if hit is not None:
            return hit
        self.H(message)
        if self.tables.h_index.get(message) == self.j:
            raise GameAbort(f"PS queried on the forged index j={self.j}")
        t, _ = self.tables.L_H[message]
        R = self._g_theta / self.params.g ** t
        self.tables.L_PS[message] = R
        self.answers.append(self.initial.with_opening(message, R))
        return R

    def verify_answers(self) -> list[bool]:
        return [cps.pver(self.params, self.pk_a, sig, self.pk_b) for sig in self.answers]

    def finish(self, forgery: ChameleonTuple | None) -> GameResult:
        res = GameResult(self.name, "no-forgery", forgery=forgery, queries=self.queries, j=self.j)
        if forgery is None:
            return res
        forgery = replace(forgery, h=self.initial.h, sigma=self.initial.sigma)
        if not cps.pver(self.params, self.pk_a, forgery, self.pk_b):
            res.outcome = "invalid-forgery"
            return res
        if self.tables.L_PS.get(forgery.message) == forgery.R:
            res.outcome = "not-fresh"
            return res
        if self.tables.h_index.get(forgery.message) != self.j:
            res.outcome = "wrong-guess"
            return res
        t_j, _ = self.tables.L_H[forgery.message]
        res.solution = forgery.R * self.params.g ** t_j / self._g_theta
        res.outcome = "solved"
        return res


def run_ps_euf_simulation(
    params: Params,
    instance: tuple[GroupElement, GroupElement, GroupElement],
    adversary: Adversary,
    **game_kwargs,
) -> GameResult:
    game = PsEufGame(params, instance, **game_kwargs)
    try:
        forgery = adversary.run(game)
    except GameAbort as exc:
        return GameResult(game.name, "abort", abort_reason=f"{BOTTOM}: {exc}", queries=game.queries, j=game.j)
    return game.finish(forgery)


# ---------------------------------------------------------------------------
# Adversaries. The honest ones only use public values; the cheating ones are
# test doubles handed an instance exponent so the extraction path can run.


@dataclass
class HonestOsAdversary:
    """Queries oracles and gives up; also the driver of the consistency sweep."""

    n_queries: int = 10
    prefix: bytes = b"honest"

    def run(self, game: OsEufGame) -> None:
        for i in range(self.n_queries):
            msg = self.prefix + b"-%d" % i
            game.CH(msg)
            game.OS(msg)
        return None


@dataclass
class HonestPsAdversary:
    n_queries: int = 10
    prefix: bytes = b"honest"

    def run(self, game: PsEufGame) -> None:
        for i in range(self.n_queries):
            game.PS(self.prefix + b"-%d" % i)
        return None


@dataclass
class CheatingOsAdversary:
    """Knows ``a`` and signs the ``target_index``-th H query with a fresh CH tuple.

    Query plan: H on messages 1..n, then ``ch_before`` CH queries on other
    messages, then one CH on the target, then OS on ``os_queries`` non-target
    messages, then the forgery.
    """

    a: int
    n_messages: int = 8
    target_index: int = 3
    ch_before: int = 2
    os_queries: tuple[int, ...] = (1, 2)

    def run(self, game: OsEufGame) -> ChameleonTuple:
        msgs = [b"msg-%d" % i for i in range(1, self.n_messages + 1)]
        for m in msgs:
            game.H(m)
        others = [m for i, m in enumerate(msgs, 1) if i != self.target_index]
        for k in range(self.ch_before):
            game.CH(others[k % len(others)])
        target = msgs[self.target_index - 1]
        h, R = game.CH(target)
        for i in self.os_queries:
            if i != self.target_index:
                game.OS(msgs[i - 1])
        return ChameleonTuple(h, target, R, h ** self.a)

    @property
    def forged_ch_index(self) -> int:
        return self.ch_before + 1


@dataclass
class CheatingPsAdversary:
    """Knows ``b`` and re-opens h_B to the ``target_index``-th fresh H query."""

    b: int
    n_messages: int = 8
    target_index: int = 3
    ps_queries: tuple[int, ...] = (1, 2)

    def run(self, game: PsEufGame) -> ChameleonTuple:
        msgs = [b"msg-%d" % i for i in range(1, self.n_messages + 1)]
        for m in msgs:
            game.H(m)
        for i in self.ps_queries:
            if i != self.target_index:
                game.PS(msgs[i - 1])
        target = msgs[self.target_index - 1]
        inv_b = pow(self.b, -1, game.params.q)
        R = (game.initial.h / game.H(target)) ** inv_b
        return game.initial.with_opening(target, R)


@dataclass
class ReplayPsAdversary:
    """Returns an opening it obtained from the PS oracle; never a forgery."""

    def run(self, game: PsEufGame) -> ChameleonTuple:
        R = game.PS(b"replayed")
        return game.initial.with_opening(b"replayed", R)


def make_instance(params: Params, a: int, b: int) -> tuple[GroupElement, GroupElement, GroupElement]:
    return params.g, params.g ** a, params.g ** b


# ---------------------------------------------------------------------------
# False accusation and tamper harnesses


@dataclass
class AccusationTarget:
    """Honest evidence about an accused avatar plus what the attacker holds."""

    evidence: Evidence
    registry: Registry
    credential: str
    proxy_keys: cps.KeyPair | None = None


@dataclass
class RejectionStats:
    attempts: int
    rejected: int
    reasons: Counter = field(default_factory=Counter)
    vacuous: bool = False

    @property
    def rate(self) -> float:
        return 1.0 if self.attempts == 0 else self.rejected / self.attempts

    def summary(self) -> dict:
        return {
            "attempts": self.attempts,
            "rejected": self.rejected,
            "rejection_rate": self.rate,
            "vacuous": self.vacuous,
            "reasons": dict(sorted(self.reasons.items())),
        }


def rewrite_evidence(evidence: Evidence, avatar: Avatar, pid: PID | None) -> Evidence:
    """Replace the accused initiator's claim (and PID response) consistently.

    An attacker controls the evidence it submits, so forged fields are written
    into every place the transcript carries them.
    """
    msgs = []
    for m in evidence.transcript.messages:
        if m.step == Step.MA_CLAIM:
            m = Message(m.session_id, m.step, avatar.encode())
        elif m.step == Step.MA_RESPONSE and pid is not None:
            r = Reader(m.body)
            r.field()
            c_a = r.fixed(32)
            m = Message(m.session_id, m.step, pack(pid.encode(), c_a))
        msgs.append(m)
    transcript = ProtocolTranscript(msgs, evidence.transcript.status)
    return Evidence(avatar, transcript, evidence.image_digest)


def _response_pid(params: Params, evidence: Evidence) -> PID:
    resp = evidence.transcript.find(Step.MA_RESPONSE)
    return PID.decode(params, Reader(resp.body).field())


def _try_trace(target: AccusationTarget, evidence: Evidence, stats: RejectionStats, prefix: str = "") -> None:
    try:
        trace(evidence, target.registry, target.credential)
    except AccusationRejected as exc:
        stats.rejected += 1
        stats.reasons[prefix + exc.code.name] += 1
    except Unauthorized:
        stats.rejected += 1
        stats.reasons[prefix + "UNAUTHORIZED"] += 1
    else:
        log.warning("forged evidence was accepted")


def _random_element(params: Params, rng: random.Random, avoid: GroupElement | None = None) -> GroupElement:
    while True:
        e = params.g ** _nonzero(rng, params.q)
        if avoid is None or e != avoid:
            return e


def _vacuous(stats: RejectionStats, name: str) -> RejectionStats:
    warnings.warn(f"{name}: 0 attempts, rejection rate is vacuous", RuntimeWarning, stacklevel=3)
    stats.vacuous = True
    return stats


def false_accusation_case1(target: AccusationTarget, attempts: int, rng: random.Random | None = None) -> RejectionStats:
    """Reporter fabricates an avatar description M* and a random R* for it."""
    rng = rng or default_rng()
    stats = RejectionStats(attempts, 0)
    if attempts == 0:
        return _vacuous(stats, "case 1")
    params = target.registry.params
    honest = target.evidence.avatar
    for _ in range(attempts):
        fake_m = b"fabricated image:" + rng.getrandbits(128).to_bytes(16, "big")
        vid = VID(fake_m, _random_element(params, rng))
        forged = replace(honest, vid=vid)
        _try_trace(target, rewrite_evidence(target.evidence, forged, None), stats)
    return stats


def false_accusation_case2(target: AccusationTarget, attempts: int, rng: random.Random | None = None) -> RejectionStats:
    """Reporter colludes with the proxy: valid openings under pk_P, random sigma*."""
    rng = rng or default_rng()
    stats = RejectionStats(attempts, 0)
    if attempts == 0:
        return _vacuous(stats, "case 2")
    if target.proxy_keys is None:
        raise ValueError("case 2 needs the colluding proxy's key pair")
    params = target.registry.params
    honest = target.evidence.avatar
    proxy_pk = target.proxy_keys.pk
    pid_msg = (honest.pid or _response_pid(params, target.evidence)).message
    for _ in range(attempts):
        fake_m = b"fabricated image:" + rng.getrandbits(128).to_bytes(16, "big")
        h_star, R_star, _ = cps.chameleon_hash(params, fake_m, proxy_pk, rng)
        pid = PID(pid_msg, cps.psig(params, target.proxy_keys, h_star, pid_msg))
        sigma_star = _random_element(params, rng, avoid=h_star ** target.proxy_keys.sk)
        forged = replace(honest, sigma=sigma_star, h=h_star, vid=VID(fake_m, R_star), pid=pid if honest.pid else None)
        _try_trace(target, rewrite_evidence(target.evidence, forged, pid), stats)
    return stats


SIGNATURE_FIELDS = ("sigma", "h", "R", "message")
EVIDENCE_FIELDS = ("sn_u", "sn_p", "sigma", "h", "vid.message", "vid.R", "pid.message", "pid.R")


def _flip_bit(data: bytes, rng: random.Random) -> bytes:
    i = rng.randrange(len(data) * 8)
    b = bytearray(data)
    b[i // 8] ^= 1 << (i % 8)
    return bytes(b)


def mutate_signature(params: Params, sig: ChameleonTuple, field_name: str, rng: random.Random) -> ChameleonTuple:
    if field_name == "message":
        return replace(sig, message=_flip_bit(sig.message or b"\x00", rng))
    return replace(sig, **{field_name: _random_element(params, rng, avoid=getattr(sig, field_name))})


def mutate_evidence(params: Params, evidence: Evidence, field_name: str, rng: random.Random) -> Evidence:
    """Change one signed field of the accused avatar and rewrite the transcript to match."""
    a = evidence.avatar
    pid = a.pid or _response_pid(params, evidence)
    if field_name == "sn_u":
        a = replace(a, sn_u=_flip_bit(a.sn_u, rng))
    elif field_name == "sn_p":
        a = replace(a, sn_p=_flip_bit(a.sn_p, rng))
    elif field_name in ("sigma", "h"):
        a = replace(a, **{field_name: _random_element(params, rng, avoid=getattr(a, field_name))})
    elif field_name == "vid.message":
        a = replace(a, vid=VID(_flip_bit(a.vid.message, rng), a.vid.R))
    elif field_name == "vid.R":
        a = replace(a, vid=VID(a.vid.message, _random_element(params, rng, avoid=a.vid.R)))
    elif field_name == "pid.message":
        pid = PID(_flip_bit(pid.message, rng), pid.R)
    elif field_name == "pid.R":
        pid = PID(pid.message, _random_element(params, rng, avoid=pid.R))
    else:
        raise ValueError(f"unknown evidence field {field_name!r}")
    if a.pid is not None:
        a = replace(a, pid=pid)
    return rewrite_evidence(evidence, a, pid)


def tamper_suite(
    target: AccusationTarget,
    signatures: list[tuple[PublicKey, ChameleonTuple, PublicKey]],
    attempts: int,
    rng: random.Random | None = None,
) -> RejectionStats:
    """Single-field mutations, alternating between bare signatures (pver) and evidence (trace)."""
    rng = rng or default_rng()
    params = target.registry.params
    stats = RejectionStats(attempts, 0)
    for n in range(attempts):
        if n % 2 == 0 and signatures:
            pk_a, sig, pk_b = signatures[rng.randrange(len(signatures))]
            f = SIGNATURE_FIELDS[rng.randrange(len(SIGNATURE_FIELDS))]
            if not cps.pver(params, pk_a, mutate_signature(params, sig, f, rng), pk_b):
                stats.rejected += 1
                stats.reasons[f"pver:{f}"] += 1
        else:
            f = EVIDENCE_FIELDS[rng.randrange(len(EVIDENCE_FIELDS))]
            _try_trace(target, mutate_evidence(params, target.evidence, f, rng), stats, prefix="trace:")
    return stats


def build_target(world, ai_driven: bool = True) -> AccusationTarget:
    """An honest interaction whose accused avatar is driven by a proxy (or a human)."""
    from .protocols import AvatarContext, delegate, evidence_from, login, mutual_auth

    alice = world.enroll_user("accused")
    bob = world.enroll_user("reporter")
    a_avatar, _, _ = login(alice, world.new_avatar(alice), world.server)
    b_avatar, _, _ = login(bob, world.new_avatar(bob), world.server)
    ctx = AvatarContext(a_avatar, alice.keys, alice)
    proxy_keys = None
    if ai_driven:
        proxy = world.enroll_proxy("colluding-proxy")
        p_avatar, *_ = delegate(alice, a_avatar, proxy, world.server)
        ctx = AvatarContext(p_avatar, proxy.keys)
        proxy_keys = proxy.keys
    result = mutual_auth(ctx, AvatarContext(b_avatar, bob.keys, bob), world.registry, rng=world.rng)
    evidence = evidence_from(result.responder, hashlib.sha256(secrets.token_bytes(16)).digest())
    return AccusationTarget(evidence, world.registry, world.registry.authority_token, proxy_keys)


def run_game(name: str, params: Params, attempts: int, seed: int | None) -> dict:
    """Entry point used by the command line; returns a structured report."""
    rng = random.Random(seed) if seed is not None else default_rng()
    if name in ("os-euf", "ps-euf"):
        a, b = _nonzero(rng, params.q), _nonzero(rng, params.q)
        inst = make_instance(params, a, b)
        target_index = 3
        if name == "os-euf":
            adv = CheatingOsAdversary(a, target_index=target_index)
            res = run_os_euf_simulation(params, inst, adv, j=target_index, w=adv.forged_ch_index, rng=rng)
            expected = params.g ** (a * b % params.q)
            sweep = OsEufGame(params, inst, q_h=attempts + 2, j=attempts + 2, w=attempts + 2, rng=rng)
            HonestOsAdversary(max(attempts, 1)).run(sweep)
        else:
            adv = CheatingPsAdversary(b, target_index=target_index)
            res = run_ps_euf_simulation(params, inst, adv, j=target_index, rng=rng)
            expected = params.g ** (a * pow(b, -1, params.q) % params.q)
            sweep = PsEufGame(params, inst, q_h=attempts + 2, j=attempts + 2, rng=rng)
            HonestPsAdversary(max(attempts, 1)).run(sweep)
        checks = sweep.verify_answers()
        return {
            **res.summary(),
            "expected_log": expected.log,
            "extraction_exact": res.solution == expected,
            "sweep_answers": len(checks),
            "sweep_all_verify": all(checks),
        }
    if name in ("accuse1", "accuse2"):
        from .scenario import World

        world = World.create(params, seed=seed)
        target = build_target(world, ai_driven=True)
        fn: Callable = false_accusation_case1 if name == "accuse1" else false_accusation_case2
        return {"game": name, **fn(target, attempts, rng).summary()}
    raise ValueError(f"unknown game {name!r}")
