"""Scripted end-to-end runs: register, login, optionally delegate, interact, trace.

Used by the experiment scripts, the benchmark harness and the acceptance
tests so that every caller exercises the same flow.
"""

from __future__ import annotations

import hashlib
import random
import secrets
import time
from dataclasses import dataclass, field

from . import biometric, cps
from .bilinear import Params
from .identity import Avatar, DriverType, UserId, describe_avatar
from .protocols import (
    AvatarContext,
    PlatformServer,
    ProxyContext,
    TraceReport,
    UserContext,
    delegate,
    evidence_from,
    login,
    mutual_auth,
    trace_detailed,
)
from .registry import Registry


@dataclass
class World:
    params: Params
    registry: Registry
    server: PlatformServer
    rng: random.Random

    @classmethod
    def create(cls, params: Params, seed: int | None = None, **registry_kwargs) -> "World":
        rng = random.Random(seed) if seed is not None else random.SystemRandom()
        registry = Registry(params, rng=rng, **registry_kwargs)
        return cls(params, registry, PlatformServer(params, registry, rng), rng)

    def enroll_user(
        self, name: str, *, noise_rate: float = biometric.DEFAULT_NOISE, iris_delay: float | None = None
    ) -> UserContext:
        keys = cps.keygen(self.params, self.rng)
        uid = UserId(f"rid:{name}".encode(), f"mid:{name}:{secrets.token_hex(4)}".encode())
        template = biometric.enroll(f"iris:{name}:{self.rng.getrandbits(64)}")
        mit = self.registry.register_user(uid, keys.pk, template, b"user")
        description = describe_avatar(face=f"face-model:{name}".encode(), speech=f"voice-model:{name}".encode())
        return UserContext(uid, keys, mit, template, description, noise_rate, iris_delay, random.Random(self.rng.getrandbits(64)))

    def enroll_proxy(self, name: str) -> ProxyContext:
        keys = cps.keygen(self.params, self.rng)
        uid = UserId(f"proxy-operator:{name}".encode(), f"proxy:{name}:{secrets.token_hex(4)}".encode())
        # Proxies carry a placeholder template; only the delegating user's is ever matched.
        template = biometric.enroll(f"proxy:{name}")
        mit = self.registry.register_user(uid, keys.pk, template, b"ai-proxy")
        return ProxyContext(keys, mit)

    def new_avatar(self, user: UserContext, label: str | None = None) -> bytes:
        aid = (label or f"avatar-{secrets.token_hex(6)}").encode()
        self.server.register_avatar(user.sn, aid)
        return aid


@dataclass
class FlowResult:
    driver_type: DriverType
    expected: UserId
    traced: UserId
    keys_match: bool
    report: TraceReport
    avatar: Avatar
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.keys_match and self.traced == self.expected


def run_flow(world: World, ai_driven: bool, *, iris_delay: float | None = None, transport=None) -> FlowResult:
    """One complete scenario; the traced avatar is driven by a human or by an AI proxy."""
    timings: dict[str, float] = {}
    alice = world.enroll_user("alice", iris_delay=iris_delay)
    bob = world.enroll_user("bob", iris_delay=iris_delay)

    t = time.perf_counter()
    a_avatar, _, _ = login(alice, world.new_avatar(alice), world.server, transport)
    timings["login"] = time.perf_counter() - t
    b_avatar, _, _ = login(bob, world.new_avatar(bob), world.server, transport)

    a_ctx = AvatarContext(a_avatar, alice.keys, alice)
    if ai_driven:
        proxy = world.enroll_proxy("assistant")
        t = time.perf_counter()
        p_avatar, *_ = delegate(alice, a_avatar, proxy, world.server, transport)
        timings["delegate"] = time.perf_counter() - t
        a_ctx = AvatarContext(p_avatar, proxy.keys)
    b_ctx = AvatarContext(b_avatar, bob.keys, bob)

    t = time.perf_counter()
    result = mutual_auth(a_ctx, b_ctx, world.registry, transport, rng=world.rng)
    timings["mutual"] = time.perf_counter() - t

    evidence = evidence_from(result.responder, hashlib.sha256(b"interaction image").digest())
    t = time.perf_counter()
    report = trace_detailed(evidence, world.registry, world.registry.authority_token)
    timings["trace"] = time.perf_counter() - t
    return FlowResult(
        DriverType.AI_PROXY if ai_driven else DriverType.HUMAN,
        alice.uid,
        report.user_id,
        result.keys_match,
        report,
        a_ctx.avatar,
        timings,
    )
