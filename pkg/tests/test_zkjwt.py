import dataclasses
import random

import pytest

from zklogin.harness.world import World
from zklogin.jwtkit.jwt import JwtMalformed
from zklogin.proto.zklogin import get_witness
from zklogin.zkjwt import (
    NONCE_CHARS,
    CircuitConfig,
    ConfigInvalid,
    HintMismatch,
    PublicInputs,
    WitnessBundle,
    build_ckt,
    claim_hints,
    fill_witness,
    nonce_string,
)


def honest(world, seed=0):
    rng = random.Random(seed)
    acct = world.account(rng)
    t = world.epoch
    w, jwk = get_witness(world.pk, world.iss, acct.zkaddr, t, acct.user, rng)
    pub = PublicInputs(jwk.n, world.iss, acct.zkaddr, t, w.vk_u, w.jwt.header_b64)
    return acct, w, pub


def check(world, w, pub, hints=None):
    ckt = world.pk.circuit
    z = fill_witness(ckt, WitnessBundle(w.jwt, w.salt, w.r, hints or {}), pub)
    return ckt.cs.satisfied(z)


def test_default_circuit_shape(world):
    cs = world.pk.circuit.cs
    total = cs.num_constraints
    assert 800_000 <= total <= 1_400_000
    assert cs.num_public == CircuitConfig().num_public == 48
    stats = cs.stats(depth=1)
    assert sum(stats.values()) == total
    assert 0.55 <= stats["sha256"] / total <= 0.80
    assert 0.08 <= stats["rsa"] / total <= 0.20
    assert (stats["base64"] + stats["parse"]) / total <= 0.25
    assert set(stats) >= {"sha256", "rsa", "base64", "parse", "header", "nonce", "addr", "iss"}


def test_honest_witness_satisfies(world):
    for seed in range(3):
        _, w, pub = honest(world, seed)
        assert check(world, w, pub)


@pytest.mark.parametrize("field,value,region", [
    ("zkaddr", 12345, "addr"),
    ("t_max", 11, "nonce"),
    ("vk_u", bytes(32), "nonce"),
    ("iss", "https://accounts.example.org", "iss"),
    ("modulus", 3 * 2 ** 2000 + 1, "rsa"),
])
def test_wrong_public_input_caught_in_region(world, field, value, region):
    _, w, pub = honest(world)
    res = check(world, w, dataclasses.replace(pub, **{field: value}))
    assert not res
    assert res.label.split("/")[0] == region


def test_wrong_header_caught(world):
    _, w, pub = honest(world)
    other = pub.header_b64[:-2] + ("A" if pub.header_b64[-2] != "A" else "B") + pub.header_b64[-1]
    res = check(world, w, dataclasses.replace(pub, header_b64=other))
    assert not res and res.label.startswith("header")


def test_wrong_salt_and_randomness(world):
    _, w, pub = honest(world)
    res = check(world, dataclasses.replace(w, salt=w.salt + 1), pub)
    assert not res and res.label.startswith("addr")
    res = check(world, dataclasses.replace(w, r=w.r + 1), pub)
    assert not res and res.label.startswith("nonce")


def test_hint_validation(world):
    _, w, pub = honest(world)
    hints = claim_hints(w.jwt, world.pk.config)
    assert set(hints) == {"sub", "aud", "iss", "nonce"}
    with pytest.raises(HintMismatch):
        check(world, w, pub, {"email": (0, 1, 0)})
    with pytest.raises(HintMismatch):
        check(world, w, pub, {"sub": (0, 10 ** 6, 0)})
    i, ln, j = hints["aud"]
    res = check(world, w, pub, {"sub": (i, ln, j)})
    assert not res and "claim" in res.label.split("/")


def test_oversized_token_rejected(world):
    _, w, pub = honest(world)
    small = CircuitConfig(L_max=400, max_payload=250)
    with pytest.raises(JwtMalformed):
        fill_witness(small, WitnessBundle(dataclasses.replace(w.jwt, payload_b64=w.jwt.payload_b64 * 3),
                                          w.salt, w.r), pub)


def test_nonce_string_shape():
    s = nonce_string(bytes(range(32)), 10, 5)
    assert len(s) == NONCE_CHARS
    assert s != nonce_string(bytes(range(32)), 11, 5)


@pytest.mark.parametrize("bad", [
    {"stid_claim": "phone"}, {"slicing": "fast"}, {"max_header": 300}, {"max_nonce": 10},
    {"delta": 0}, {"max_stid": 0},
])
def test_config_validation(bad):
    with pytest.raises(ConfigInvalid):
        CircuitConfig(**bad).validate()


@pytest.fixture(scope="module")
def email_world():
    cfg = CircuitConfig(stid_claim="email", L_max=700, max_payload=450, max_header=120)
    return World.create(seed=3, config=cfg)


def test_email_circuit(email_world):
    _, w, pub = honest(email_world, 4)
    assert "email_verified" in claim_hints(w.jwt, email_world.pk.config)
    assert check(email_world, w, pub)


def test_email_must_be_verified(email_world):
    rng = random.Random(5)
    acct = email_world.account(rng)
    user = dataclasses.replace(acct.user, extra_claims={"email_verified": False})
    t = email_world.epoch
    w, jwk = get_witness(email_world.pk, email_world.iss, acct.zkaddr, t, user, rng)
    pub = PublicInputs(jwk.n, email_world.iss, acct.zkaddr, t, w.vk_u, w.jwt.header_b64)
    res = check(email_world, w, pub)
    assert not res and res.label.startswith("parse")


def test_naive_slicing_costs_more_in_parse():
    small = {"L_max": 500, "max_payload": 300, "max_header": 100}
    a = build_ckt(CircuitConfig(**small))
    b = build_ckt(CircuitConfig(slicing="naive", **small))
    assert a.cs.num_public == b.cs.num_public
    assert a.cs.stats(depth=1)["parse"] < b.cs.stats(depth=1)["parse"]
