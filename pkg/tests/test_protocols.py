import hashlib
import threading
from dataclasses import replace

import pytest

from avatrace import biometric, cps
from avatrace.identity import VID, DriverType, driver_type
from avatrace.protocols import (
    AccusationRejected,
    AvatarContext,
    Evidence,
    LoopbackTransport,
    Message,
    ProtocolAbort,
    Status,
    Step,
    delegate,
    evidence_from,
    login,
    make_transport,
    mutual_auth,
    replay_transcript,
    trace,
)
from avatrace.protocols.common import driver_keys, vid_ok
from avatrace.protocols.delegation import ProxyDelegation, ProxySubmit, UserDelegation
from avatrace.protocols.login import UserLogin
from avatrace.protocols.mutual import MutualInitiator, MutualResponder, initiator_key, responder_key
from avatrace.registry import Unauthorized
from avatrace.scenario import run_flow

IMAGE = hashlib.sha256(b"screenshot").digest()


@pytest.fixture
def pair_of_users(world):
    alice, bob = world.enroll_user("alice"), world.enroll_user("bob")
    a_av, a_tok, _ = login(alice, world.new_avatar(alice), world.server)
    b_av, _, _ = login(bob, world.new_avatar(bob), world.server)
    return alice, bob, a_av, a_tok, b_av


# -- login


def test_login_honest(world, pair_of_users):
    alice, _, a_av, token, _ = pair_of_users
    assert driver_type(a_av) is DriverType.HUMAN
    assert a_av.sn_u == a_av.sn_p == alice.sn
    assert world.server.session_valid(a_av.aid, token)
    keys = driver_keys(world.registry, a_av)
    assert vid_ok(world.params, keys, a_av)
    # Exponent view: sigma = h^x_A and the VID opens h under pk_A.
    assert a_av.sigma.log == a_av.h.log * alice.keys.sk % world.params.q
    assert cps.check_chameleon(world.params, alice.keys.pk, a_av.h, a_av.vid.message, a_av.vid.R)


def test_login_production(prod_world):
    alice = prod_world.enroll_user("alice")
    av, _, _ = login(alice, prod_world.new_avatar(alice), prod_world.server)
    assert driver_type(av) is DriverType.HUMAN


def _login_parties(world, user, aid):
    client = UserLogin(user, aid, world.params)
    return client, world.server.login_endpoint()


def test_login_replayed_response_rejected(world):
    alice = world.enroll_user("alice")
    aid = world.new_avatar(alice)
    old_client, old_server = _login_parties(world, alice, aid)
    LoopbackTransport().run(old_client, old_server)
    old_response = old_client.transcript.find(Step.LOGIN_RESPONSE)

    client, server = _login_parties(world, alice, aid)
    server.handle(client.start())
    reply = server.handle(Message(server.session_id, Step.LOGIN_RESPONSE, old_response.body))
    assert reply.step == Step.ABORT
    assert server.status is Status.CHALLENGE_MISMATCH


def test_login_response_reused_in_same_session_rejected(world):
    alice = world.enroll_user("alice")
    aid = world.new_avatar(alice)
    client, server = _login_parties(world, alice, aid)
    LoopbackTransport().run(client, server)
    resp = client.transcript.find(Step.LOGIN_RESPONSE)
    # The challenge was consumed, so even the same session cannot use it twice.
    assert not world.server.nonces.consume(server.session_id, resp.body[-32:])


def test_login_impostor_iris(world):
    alice = world.enroll_user("alice")
    impostor = replace(alice, iris=biometric.enroll("someone else"))
    with pytest.raises(ProtocolAbort) as exc:
        login(impostor, world.new_avatar(alice), world.server)
    assert exc.value.code is Status.IRIS_MISMATCH


def test_login_unknown_avatar(world):
    alice = world.enroll_user("alice")
    with pytest.raises(ProtocolAbort) as exc:
        login(alice, b"never-registered", world.server)
    assert exc.value.code is Status.UNKNOWN_AVATAR


def test_login_with_someone_elses_keys(world):
    alice, bob = world.enroll_user("alice"), world.enroll_user("bob")
    thief = replace(alice, keys=bob.keys)
    with pytest.raises(ProtocolAbort) as exc:
        login(thief, world.new_avatar(alice), world.server)
    assert exc.value.code is Status.VID_INVALID


def test_out_of_order_message(world):
    alice = world.enroll_user("alice")
    _, server = _login_parties(world, alice, world.new_avatar(alice))
    reply = server.handle(Message(bytes(16), Step.LOGIN_RESPONSE, b""))
    assert reply.step == Step.ABORT and server.status is Status.OUT_OF_ORDER


# -- delegation


def test_delegation_honest(world, pair_of_users):
    alice, _, a_av, token, _ = pair_of_users
    proxy = world.enroll_proxy("assistant")
    p_av, *_ = delegate(alice, a_av, proxy, world.server)
    assert driver_type(p_av) is DriverType.AI_PROXY
    assert p_av.sn_u == alice.sn and p_av.sn_p == proxy.sn
    assert p_av.vid.message == a_av.vid.message
    assert world.server.avatars[a_av.aid] == replace(p_av, pid=None)
    # Forced offline.
    assert not world.server.session_valid(a_av.aid, token)
    with pytest.raises(ProtocolAbort) as exc:
        login(alice, a_av.aid, world.server)
    assert exc.value.code is Status.AVATAR_BUSY


def test_delegation_production(prod_world):
    alice = prod_world.enroll_user("alice")
    av, _, _ = login(alice, prod_world.new_avatar(alice), prod_world.server)
    p_av, *_ = delegate(alice, av, prod_world.enroll_proxy("p"), prod_world.server)
    assert driver_type(p_av) is DriverType.AI_PROXY


def test_delegation_twice_rejected(world, pair_of_users):
    alice, _, a_av, _, _ = pair_of_users
    delegate(alice, a_av, world.enroll_proxy("p1"), world.server)
    with pytest.raises(ProtocolAbort) as exc:
        delegate(alice, a_av, world.enroll_proxy("p2"), world.server)
    assert exc.value.code is Status.AVATAR_BUSY


def _run_first_session(world, alice, a_av, proxy):
    u = UserDelegation(alice, a_av, world.registry, world.params)
    p = ProxyDelegation(proxy, world.registry, world.params, world.server.nonces)
    LoopbackTransport().run(u, p)
    assert p.status is Status.OK
    return p


def _submit(world, delegated):
    submit, endpoint = ProxySubmit(delegated, world.params), world.server.transfer_endpoint()
    LoopbackTransport().run(submit, endpoint)
    return endpoint.status


def test_proxy_substitutes_description_with_valid_collision(world, pair_of_users):
    alice, _, a_av, token, _ = pair_of_users
    proxy = world.enroll_proxy("rogue")
    p = _run_first_session(world, alice, a_av, proxy)
    fake = b"a different face"
    forged = replace(p.delegated, vid=VID(fake, cps.psig(world.params, proxy.keys, p.delegated.h, fake)))
    assert _submit(world, forged) is Status.DESCRIPTION_MISMATCH
    assert world.server.session_valid(a_av.aid, token)


def test_proxy_substitutes_description_keeping_R(world, pair_of_users):
    alice, _, a_av, _, _ = pair_of_users
    proxy = world.enroll_proxy("rogue")
    p = _run_first_session(world, alice, a_av, proxy)
    forged = replace(p.delegated, vid=VID(b"a different face", p.delegated.vid.R))
    assert _submit(world, forged) is Status.VID_INVALID


def test_delegation_impostor_iris(world, pair_of_users):
    alice, _, a_av, _, _ = pair_of_users
    impostor = replace(alice, iris=biometric.enroll("not alice"))
    with pytest.raises(ProtocolAbort) as exc:
        delegate(impostor, a_av, world.enroll_proxy("p"), world.server)
    assert exc.value.code is Status.IRIS_MISMATCH


def test_delegation_replayed_response(world, pair_of_users):
    alice, _, a_av, _, _ = pair_of_users
    proxy = world.enroll_proxy("p")
    p_old = _run_first_session(world, alice, a_av, proxy)
    old_resp = p_old.transcript.find(Step.DELEG_RESPONSE)
    u = UserDelegation(alice, a_av, world.registry, world.params)
    p = ProxyDelegation(proxy, world.registry, world.params, world.server.nonces)
    p.handle(u.start())
    p.handle(Message(p.session_id, Step.DELEG_RESPONSE, old_resp.body))
    assert p.status is Status.CHALLENGE_MISMATCH


def test_delegation_of_ai_avatar_refused(world, pair_of_users):
    alice, _, a_av, _, _ = pair_of_users
    p_av, *_ = delegate(alice, a_av, world.enroll_proxy("p1"), world.server)
    with pytest.raises(ProtocolAbort) as exc:
        delegate(alice, p_av, world.enroll_proxy("p2"), world.server)
    assert exc.value.code is Status.UNKNOWN_AVATAR


# -- mutual authentication


def test_session_key_oracle_q23(toy23):
    g = toy23.g
    x_a, x_b, w1, w2 = 6, 4, 2, 5
    k_a = initiator_key(toy23, x_a, g ** x_b, g ** w2, w1)
    k_b = responder_key(toy23, x_b, g ** x_a, g ** w1, w2)
    assert k_a.log == k_b.log == 15


@pytest.mark.parametrize("ai_driven", [False, True])
def test_mutual_keys_match_exponent(world, pair_of_users, ai_driven):
    alice, bob, a_av, _, b_av = pair_of_users
    ctx = AvatarContext(a_av, alice.keys, alice)
    if ai_driven:
        proxy = world.enroll_proxy("p")
        p_av, *_ = delegate(alice, a_av, proxy, world.server)
        ctx = AvatarContext(p_av, proxy.keys)
    res = mutual_auth(ctx, AvatarContext(b_av, bob.keys, bob), world.registry, w1=1234, w2=98765)
    q = world.params.q
    assert res.keys_match
    assert res.initiator.key.log == (ctx.keys.sk * 98765 + bob.keys.sk * 1234) % q
    assert res.responder.peer == replace(ctx.avatar, pid=None if not ai_driven else ctx.avatar.pid)


def test_mutual_human_responder_ai_initiator_roles_swapped(world, pair_of_users):
    alice, bob, a_av, _, b_av = pair_of_users
    proxy = world.enroll_proxy("p")
    p_av, *_ = delegate(alice, a_av, proxy, world.server)
    res = mutual_auth(AvatarContext(b_av, bob.keys, bob), AvatarContext(p_av, proxy.keys), world.registry)
    assert res.keys_match
    assert trace(evidence_from(res.initiator, IMAGE), world.registry, world.registry.authority_token) == alice.uid


def test_mutual_production(prod_world):
    alice, bob = prod_world.enroll_user("alice"), prod_world.enroll_user("bob")
    a_av, _, _ = login(alice, prod_world.new_avatar(alice), prod_world.server)
    b_av, _, _ = login(bob, prod_world.new_avatar(bob), prod_world.server)
    res = mutual_auth(AvatarContext(a_av, alice.keys, alice), AvatarContext(b_av, bob.keys, bob), prod_world.registry)
    assert res.keys_match


def test_mutual_wrong_public_key_aborts(world, pair_of_users):
    alice, bob, a_av, _, b_av = pair_of_users
    # The claim points at Bob's MIT, so the verifier checks Alice's signature under Bob's key.
    lying = replace(a_av, sn_u=bob.sn, sn_p=bob.sn)
    ini = MutualInitiator(AvatarContext(lying, alice.keys, alice), world.registry)
    res = MutualResponder(AvatarContext(b_av, bob.keys, bob), world.registry)
    LoopbackTransport().run(ini, res)
    assert res.status is Status.VID_INVALID
    assert res.transcript.decisions == [("vid", False)]
    assert ini.key is None and res.key is None
    assert res.transcript.find(Step.MA_RESPONSE_B) is None


def test_mutual_replayed_response_rejected(world, pair_of_users):
    alice, bob, a_av, _, b_av = pair_of_users
    a_ctx, b_ctx = AvatarContext(a_av, alice.keys, alice), AvatarContext(b_av, bob.keys, bob)
    old = mutual_auth(a_ctx, b_ctx, world.registry)
    old_resp = old.initiator.transcript.find(Step.MA_RESPONSE)

    ini, res = MutualInitiator(a_ctx, world.registry), MutualResponder(b_ctx, world.registry)
    res.handle(ini.start())
    reply = res.handle(Message(res.session_id, Step.MA_RESPONSE, old_resp.body))
    assert reply.step == Step.ABORT and res.status is Status.CHALLENGE_MISMATCH


def test_mutual_ai_replayed_key_message_rejected(world, pair_of_users):
    alice, bob, a_av, _, b_av = pair_of_users
    proxy = world.enroll_proxy("p")
    p_av, *_ = delegate(alice, a_av, proxy, world.server)
    a_ctx, b_ctx = AvatarContext(p_av, proxy.keys), AvatarContext(b_av, bob.keys, bob)
    old = mutual_auth(a_ctx, b_ctx, world.registry)
    old_key = old.initiator.transcript.find(Step.MA_KEY)

    ini, res = MutualInitiator(a_ctx, world.registry), MutualResponder(b_ctx, world.registry)
    m = res.handle(ini.start())
    m = res.handle(ini.handle(m))
    ini.handle(m)
    res.handle(Message(res.session_id, Step.MA_KEY, old_key.body))
    assert res.status is Status.BINDING_MISMATCH and res.key is None


def test_mutual_tcp_transport(world, pair_of_users):
    alice, bob, a_av, _, b_av = pair_of_users
    transport = make_transport("tcp:127.0.0.1:0")
    res = mutual_auth(AvatarContext(a_av, alice.keys, alice), AvatarContext(b_av, bob.keys, bob), world.registry, transport)
    assert res.keys_match


def test_full_flow_over_tcp(world):
    r = run_flow(world, ai_driven=True, transport=make_transport("tcp:127.0.0.1:0"))
    assert r.ok


# -- transcript replay


@pytest.mark.parametrize("ai_driven", [False, True])
def test_replay_reproduces_decisions(world, pair_of_users, ai_driven):
    alice, bob, a_av, _, b_av = pair_of_users
    ctx = AvatarContext(a_av, alice.keys, alice)
    if ai_driven:
        proxy = world.enroll_proxy("p")
        p_av, *_ = delegate(alice, a_av, proxy, world.server)
        ctx = AvatarContext(p_av, proxy.keys)
    res = mutual_auth(ctx, AvatarContext(b_av, bob.keys, bob), world.registry)
    for party, role in ((res.responder, "mutual-responder"), (res.initiator, "mutual-initiator")):
        assert party.transcript.decisions
        assert replay_transcript(world.registry, party.transcript, role) == party.transcript.decisions
    stored = type(res.responder.transcript).from_bytes(res.responder.transcript.to_bytes())
    assert replay_transcript(world.registry, stored) == res.responder.transcript.decisions


def test_replay_login_including_rejection(world):
    alice = world.enroll_user("alice")
    aid = world.new_avatar(alice)
    client, server = _login_parties(world, alice, aid)
    LoopbackTransport().run(client, server)
    assert replay_transcript(world.registry, server.transcript) == server.transcript.decisions

    impostor = replace(alice, iris=biometric.enroll("x"))
    client, server = _login_parties(world, impostor, aid)
    LoopbackTransport().run(client, server)
    assert server.transcript.decisions[-1] == ("pid", False)
    assert replay_transcript(world.registry, server.transcript, "server-login") == server.transcript.decisions


def test_replay_unknown_role(world):
    from avatrace.protocols import ProtocolTranscript

    with pytest.raises(ValueError):
        replay_transcript(world.registry, ProtocolTranscript([Message(bytes(16), Step.MA_CLAIM)]), "judge")


# -- tracing


@pytest.mark.parametrize("ai_driven,fetches", [(False, 1), (True, 2)])
def test_trace_returns_original_manipulator(world, ai_driven, fetches):
    r = run_flow(world, ai_driven)
    assert r.ok and r.traced == r.expected
    assert r.report.mits_fetched == fetches
    assert r.report.driver_type is (DriverType.AI_PROXY if ai_driven else DriverType.HUMAN)


def test_trace_production_ai(prod_world):
    r = run_flow(prod_world, ai_driven=True)
    assert r.ok and r.report.mits_fetched == 2


def test_trace_evidence_roundtrip_and_credential(world, pair_of_users):
    alice, bob, a_av, _, b_av = pair_of_users
    res = mutual_auth(AvatarContext(a_av, alice.keys, alice), AvatarContext(b_av, bob.keys, bob), world.registry)
    ev = Evidence.decode(world.params, evidence_from(res.responder, IMAGE).encode())
    assert trace(ev, world.registry, world.registry.authority_token) == alice.uid
    with pytest.raises(Unauthorized):
        trace(ev, world.registry, "wrong token")
    with pytest.raises(PermissionError):
        trace(ev, world.registry, None)


def test_trace_rejects_avatar_not_in_transcript(world, pair_of_users):
    alice, bob, a_av, _, b_av = pair_of_users
    res = mutual_auth(AvatarContext(a_av, alice.keys, alice), AvatarContext(b_av, bob.keys, bob), world.registry)
    ev = evidence_from(res.responder, IMAGE)
    with pytest.raises(AccusationRejected) as exc:
        trace(replace(ev, avatar=replace(ev.avatar, sigma=ev.avatar.sigma * world.params.g)), world.registry, world.registry.authority_token)
    assert exc.value.code is Status.BINDING_MISMATCH


def test_trace_details(world):
    report = run_flow(world, ai_driven=False).report
    assert set(report.timings) >= {"fetch_mit", "verify_vid", "verify_pid", "resolve", "total"}


# -- concurrency


def test_concurrent_logins(world):
    users = [world.enroll_user(f"u{i}") for i in range(8)]
    aids = [world.new_avatar(u) for u in users]
    results, errors = {}, []

    def go(u, aid):
        try:
            results[aid] = login(u, aid, world.server)[0]
        except Exception as exc:  # pragma: no cover - reported below
            errors.append(exc)

    threads = [threading.Thread(target=go, args=ua) for ua in zip(users, aids)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors and len(results) == 8


@pytest.mark.parametrize("round_", range(10))
def test_concurrent_login_and_delegation_single_driver(world, round_):
    alice = world.enroll_user("alice")
    a_av, _, _ = login(alice, world.new_avatar(alice), world.server)
    proxy = world.enroll_proxy("p")
    barrier = threading.Barrier(2)
    outcome: dict[str, object] = {}

    def do_delegate():
        barrier.wait()
        try:
            outcome["delegate"] = delegate(alice, a_av, proxy, world.server)[0]
        except ProtocolAbort as exc:
            outcome["delegate"] = exc.code

    def do_login():
        barrier.wait()
        try:
            outcome["login"] = login(alice, a_av.aid, world.server)
        except ProtocolAbort as exc:
            outcome["login"] = exc.code

    threads = [threading.Thread(target=do_delegate), threading.Thread(target=do_login)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()

    record = world.server.avatars[a_av.aid]
    keys = driver_keys(world.registry, record)
    assert vid_ok(world.params, keys, record)
    token_live = a_av.aid in world.server.tokens
    if driver_type(record) is DriverType.AI_PROXY:
        # The human session cannot survive a completed transfer.
        assert not token_live
        assert not isinstance(outcome["delegate"], Status)
    else:
        assert token_live
        assert outcome["delegate"] is Status.AVATAR_BUSY
