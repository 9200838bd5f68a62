import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avatrace import biometric, cps
from avatrace.codec import DecodeError
from avatrace.identity import (
    MIT,
    PID,
    VID,
    Avatar,
    DriverType,
    UserId,
    describe_avatar,
    driver_type,
    endorse_mit,
    to_debug_json,
    verify_mit,
)

SN_A, SN_B = bytes.fromhex("ab" * 15 + "cd"), bytes(range(16))


def random_avatar(params, rng: random.Random) -> Avatar:
    def el():
        return params.g ** rng.randrange(params.q)

    sn_u = rng.randbytes(16)
    driven = rng.random() < 0.8
    sn_p = (sn_u if rng.random() < 0.5 else rng.randbytes(16)) if driven else None
    return Avatar(
        sn_u,
        rng.randbytes(rng.randrange(0, 12)),
        sn_p,
        el() if driven else None,
        el() if driven else None,
        VID(rng.randbytes(rng.randrange(0, 40)), el()) if driven and rng.random() < 0.9 else None,
        PID(rng.randbytes(rng.randrange(0, 40)), el()) if driven and rng.random() < 0.5 else None,
    )


def test_driver_type_rule(toy1009):
    assert driver_type(Avatar(SN_A, b"a", SN_A)) is DriverType.HUMAN
    assert driver_type(Avatar(SN_A, b"a", SN_B)) is DriverType.AI_PROXY
    with pytest.raises(ValueError):
        driver_type(Avatar(SN_A, b"a"))


def test_empty_avatar_fields_absent():
    a = Avatar(SN_A, b"aid")
    assert a.is_empty and a.sn_p is None and a.vid is None


@pytest.mark.slow
def test_avatar_roundtrip_fuzz_and_injective(toy255):
    rng = random.Random(2024)
    seen: dict[bytes, Avatar] = {}
    for _ in range(10_000):
        a = random_avatar(toy255, rng)
        data = a.encode()
        assert Avatar.decode(toy255, data) == a
        prior = seen.setdefault(data, a)
        assert prior == a
    assert len(seen) > 9_900


def test_avatar_roundtrip_production(prod):
    rng = random.Random(4)
    for _ in range(30):
        a = random_avatar(prod, rng)
        assert Avatar.decode(prod, a.encode()) == a


def test_decode_empty_is_truncated(toy1009):
    with pytest.raises(DecodeError):
        Avatar.decode(toy1009, b"")
    with pytest.raises(DecodeError):
        UserId.decode(b"")
    with pytest.raises(DecodeError):
        VID.decode(toy1009, b"")


def test_decode_rejects_trailing_and_truncation(toy1009):
    data = random_avatar(toy1009, random.Random(1)).encode()
    with pytest.raises(DecodeError):
        Avatar.decode(toy1009, data + b"\x00")
    for cut in range(len(data)):
        with pytest.raises(DecodeError):
            Avatar.decode(toy1009, data[:cut])


def test_decode_rejects_invalid_element(prod):
    a = random_avatar(prod, random.Random(8))
    a = Avatar(a.sn_u, a.aid, a.sn_u, prod.g, prod.g, VID(b"m", prod.g))
    data = bytearray(a.encode())
    i = bytes(data).index(prod.g.to_bytes())
    data[i + 47] ^= 0x01
    with pytest.raises(DecodeError):
        Avatar.decode(prod, bytes(data))


@given(st.binary(min_size=1, max_size=64), st.binary(max_size=64))
def test_user_id_roundtrip(rid, mid):
    uid = UserId(rid, mid)
    assert UserId.decode(uid.encode()) == uid


def test_user_id_requires_rid():
    with pytest.raises(ValueError):
        UserId(b"", b"mid")


@settings(max_examples=50)
@given(st.binary(max_size=100), st.integers(min_value=0, max_value=1008))
def test_vid_pid_roundtrip(toy1009, message, k):
    for cls in (VID, PID):
        v = cls(message, toy1009.g ** k)
        assert cls.decode(toy1009, v.encode()) == v


def test_mit_roundtrip_and_endorsement(params, rng):
    idp = cps.keygen(params, rng)
    user = cps.keygen(params, rng)
    mit = endorse_mit(params, idp, rng.randbytes(16), user.pk, biometric.enroll(1), b"info", rng)
    back = MIT.decode(params, mit.encode())
    assert back == mit
    assert verify_mit(params, back, idp.pk)
    assert not verify_mit(params, back, user.pk)


def test_mit_tampered_body_fails_endorsement(toy255, rng):
    idp, user = cps.keygen(toy255, rng), cps.keygen(toy255, rng)
    mit = endorse_mit(toy255, idp, bytes(16), user.pk, biometric.enroll(1), b"info", rng)
    from dataclasses import replace

    assert not verify_mit(toy255, replace(mit, info=b"other"), idp.pk)
    assert not verify_mit(toy255, replace(mit, sn=bytes(15) + b"\x01"), idp.pk)


def test_describe_avatar_canonical():
    assert describe_avatar(face=b"f", speech=b"s") == describe_avatar(speech=b"s", face=b"f")
    assert describe_avatar(face=b"f") != describe_avatar(face=b"g")


def test_debug_json(toy1009):
    a = Avatar(SN_A, b"aid", SN_A, toy1009.g, toy1009.g, VID(b"m", toy1009.g))
    text = to_debug_json(a)
    assert SN_A.hex() in text and '"aid"' in text
