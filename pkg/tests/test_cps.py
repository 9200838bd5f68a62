import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avatrace import cps
from avatrace.bilinear import BLS12_381_R, pair
from avatrace.codec import DecodeError

from oracle import ScriptedRng, hash_exponent, programmed

M = b"avatar description"
M2 = b"iris || challenge"


@pytest.fixture
def pp23(toy23):
    # H(M) = g^5, H(M') = g^2
    return programmed(toy23, {M: 5, M2: 2})


# -- worked examples on q = 23


def test_keygen_forced_secret(toy23):
    kp = cps.keygen(toy23, ScriptedRng([6]))
    assert kp.sk == 6 and kp.pk.y1.log == 6 and kp.pk.y2.log == 6


def test_keygen_resamples_zero(toy23):
    assert cps.keygen(toy23, ScriptedRng([0, 0, 9])).sk == 9


def test_keygen_distinct_and_consistent(params):
    a, b = cps.keygen(params), cps.keygen(params)
    assert a.sk != b.sk
    assert a.pk.is_consistent(params)
    assert pair(a.pk.y1, params.g2) == pair(params.g, a.pk.y2)


def test_zero_secret_rejected(toy23):
    with pytest.raises(cps.InvalidKey):
        cps.keypair_from_secret(toy23, 23)


def test_chameleon_hash_example(pp23):
    pk = cps.keypair_from_secret(pp23, 4).pk
    h, R, r = cps.chameleon_hash(pp23, M, pk, ScriptedRng([3]))
    assert (h.log, R.log, r) == (17, 3, 3)


def test_chameleon_hash_resamples_zero_r(pp23):
    pk = cps.keypair_from_secret(pp23, 4).pk
    _, R, r = cps.chameleon_hash(pp23, M, pk, ScriptedRng([0, 7]))
    assert r == 7 and not R.is_identity()


def test_check_chameleon_examples(pp23):
    g = pp23.g
    pk = cps.keypair_from_secret(pp23, 4).pk
    assert cps.check_chameleon(pp23, pk, g ** 17, M, g ** 3)
    assert not cps.check_chameleon(pp23, pk, g ** 17, M, g ** 4)
    # r = 0 limit: h = m and R = identity give GT identity on both sides.
    assert cps.check_chameleon(pp23, pk, g ** 5, M, pp23.identity())


def test_dgen_example(pp23):
    a = cps.keypair_from_secret(pp23, 6)
    b = cps.keypair_from_secret(pp23, 4)
    sig = cps.dgen(pp23, a, M, b.pk, ScriptedRng([3]))
    assert (sig.h.log, sig.R.log, sig.sigma.log) == (17, 3, 10)
    assert cps.pver(pp23, a.pk, sig, b.pk)
    # The first verification equation in exponents: 10 == 17 * 6 mod 23.
    assert pair(sig.sigma, pp23.g2).log == pair(sig.h, a.pk.y2).log == 10


def test_psig_example(pp23):
    b = cps.keypair_from_secret(pp23, 4)
    R2 = cps.psig(pp23, b, pp23.g ** 17, M2)
    assert R2.log == 21
    assert pair(pp23.g ** 17 / pp23.g ** 2, pp23.g2).log == pair(R2, b.pk.y2).log == 15
    assert cps.check_chameleon(pp23, b.pk, pp23.g ** 17, M2, R2)


def test_psig_with_original_message_recovers_R(pp23):
    b = cps.keypair_from_secret(pp23, 4)
    assert cps.psig(pp23, b, pp23.g ** 17, M).log == 3


def test_swapped_keys_rejected(pp23):
    a = cps.keypair_from_secret(pp23, 6)
    b = cps.keypair_from_secret(pp23, 4)
    sig = cps.dgen(pp23, a, M, b.pk, ScriptedRng([3]))
    assert not cps.pver(pp23, b.pk, sig, a.pk)


def test_pver_needs_sigma(pp23):
    a = cps.keypair_from_secret(pp23, 6)
    sig = cps.dgen(pp23, a, M, a.pk, ScriptedRng([3]))
    with pytest.raises(ValueError):
        cps.pver(pp23, a.pk, replace(sig, sigma=None), a.pk)


def test_pver_rejects_identity_h(toy23):
    # sigma = h = identity satisfies both equations when m = R^x; the degenerate h is still refused.
    b = cps.keypair_from_secret(toy23, 4)
    pp = programmed(toy23, {M: 23 - 12})
    ident = toy23.identity()
    sig = cps.ChameleonTuple(ident, M, toy23.g ** 3, ident)
    assert cps.check_chameleon(pp, b.pk, ident, M, toy23.g ** 3)
    assert not cps.pver(pp, b.pk, sig, b.pk)


# -- both backends


def _instance(params, rng, message=b"hello"):
    a, b = cps.keygen(params, rng), cps.keygen(params, rng)
    return a, b, cps.dgen(params, a, message, b.pk, rng)


def test_correctness_and_collision(params, rng):
    for _ in range(5):
        a, b, sig = _instance(params, rng, rng.randbytes(20))
        assert cps.pver(params, a.pk, sig, b.pk)
        m2 = rng.randbytes(30)
        proxy = sig.with_opening(m2, cps.psig(params, b, sig.h, m2))
        assert cps.pver(params, a.pk, proxy, b.pk)
        assert cps.psig(params, b, sig.h, sig.message) == sig.R


def test_empty_message(params, rng):
    a, b, sig = _instance(params, rng, b"")
    assert cps.pver(params, a.pk, sig, b.pk)


def test_psig_deterministic(params, rng):
    _, b, sig = _instance(params, rng)
    assert cps.psig(params, b, sig.h, b"x") == cps.psig(params, b, sig.h, b"x")


def test_flip_sigma_bit_rejected(prod, rng):
    a, b, sig = _instance(prod, rng)
    data = bytearray(sig.sigma.to_bytes())
    for bit in range(8 * len(data)):
        flipped = bytearray(data)
        flipped[bit // 8] ^= 1 << (bit % 8)
        try:
            s2 = prod.deserialize("G1", bytes(flipped))
        except DecodeError:
            continue  # rejected at decoding
        assert not cps.pver(prod, a.pk, replace(sig, sigma=s2), b.pk)


def test_tamper_each_component(params, rng):
    for _ in range(10):
        a, b, sig = _instance(params, rng)
        other = params.g ** rng.randrange(1, params.q)
        for mutated in (
            replace(sig, sigma=sig.sigma * other),
            replace(sig, h=sig.h * other),
            replace(sig, R=sig.R * other),
            replace(sig, message=sig.message + b"!"),
        ):
            assert not cps.pver(params, a.pk, mutated, b.pk)


@pytest.mark.slow
def test_tamper_1000_random_mutations(toy255):
    rng = random.Random(77)
    a, b, sig = _instance(toy255, rng)
    for _ in range(1000):
        field = rng.choice(["sigma", "h", "R", "message"])
        if field == "message":
            mutated = replace(sig, message=rng.randbytes(rng.randrange(0, 40)))
            if mutated.message == sig.message:
                continue
        else:
            delta = toy255.g ** rng.randrange(1, toy255.q)
            mutated = replace(sig, **{field: getattr(sig, field) * delta})
        assert not cps.pver(toy255, a.pk, mutated, b.pk)


# -- encodings


def test_signature_encoding_lengths(params, rng):
    _, b, sig = _instance(params, rng)
    n = params.element_size("G1")
    orig = cps.encode_original_signature(sig)
    assert len(orig) == 1 + 3 * n and orig[0] == cps.ORIGINAL_TAG
    assert cps.decode_original_signature(params, orig, sig.message) == sig
    R2 = cps.psig(params, b, sig.h, b"m'")
    prox = cps.encode_proxy_signature(R2)
    assert len(prox) == 1 + n and prox[0] == cps.PROXY_TAG
    assert cps.decode_proxy_signature(params, prox) == R2


def test_signature_decode_errors(params, rng):
    _, _, sig = _instance(params, rng)
    orig = cps.encode_original_signature(sig)
    with pytest.raises(DecodeError):
        cps.decode_original_signature(params, orig[:-1], sig.message)
    with pytest.raises(DecodeError):
        cps.decode_proxy_signature(params, orig)
    with pytest.raises(DecodeError):
        cps.decode_original_signature(params, bytes([cps.PROXY_TAG]) + orig[1:], sig.message)


def test_public_key_consistency_enforced(prod):
    a, b = cps.keygen(prod), cps.keygen(prod)
    mixed = cps.PublicKey(a.pk.y1, b.pk.y2)
    assert not mixed.is_consistent(prod)
    with pytest.raises(cps.InvalidKey):
        cps.PublicKey.from_bytes(prod, mixed.to_bytes())
    assert cps.PublicKey.from_bytes(prod, a.pk.to_bytes()) == a.pk


# -- properties


_scalars = st.integers(min_value=1, max_value=BLS12_381_R - 1)


@settings(max_examples=60, deadline=None)
@given(_scalars, _scalars, _scalars, st.binary(max_size=64), st.binary(max_size=64))
def test_property_correctness(toy255, xa, xb, r, msg, msg2):
    a, b = cps.keypair_from_secret(toy255, xa), cps.keypair_from_secret(toy255, xb)
    sig = cps.dgen(toy255, a, msg, b.pk, ScriptedRng([r]))
    assert cps.pver(toy255, a.pk, sig, b.pk)
    R2 = cps.psig(toy255, b, sig.h, msg2)
    assert cps.pver(toy255, a.pk, sig.with_opening(msg2, R2), b.pk)
    assert cps.psig(toy255, b, sig.h, msg) == sig.R


@settings(max_examples=60, deadline=None)
@given(_scalars, _scalars, _scalars, st.binary(max_size=32))
def test_property_exponents(toy255, xa, xb, r, msg):
    q = toy255.q
    a, b = cps.keypair_from_secret(toy255, xa), cps.keypair_from_secret(toy255, xb)
    m = hash_exponent(q, msg)
    sig = cps.dgen(toy255, a, msg, b.pk, ScriptedRng([r]))
    assert sig.h.log == (m + xb * r) % q
    assert sig.R.log == r
    assert sig.sigma.log == sig.h.log * xa % q


@settings(max_examples=10, deadline=None)
@given(st.binary(max_size=32), st.binary(max_size=32))
def test_property_correctness_production(prod, msg, msg2):
    rng = random.Random(msg + msg2)
    a, b = cps.keygen(prod, rng), cps.keygen(prod, rng)
    sig = cps.dgen(prod, a, msg, b.pk, rng)
    assert cps.pver(prod, a.pk, sig, b.pk)
    assert cps.pver(prod, a.pk, sig.with_opening(msg2, cps.psig(prod, b, sig.h, msg2)), b.pk)
