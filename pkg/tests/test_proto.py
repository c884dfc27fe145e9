import dataclasses
import random

import pytest

from zklogin import backends
from zklogin.backends import ProofBackendKey
from zklogin.field import P
from zklogin.jwtkit import rsa
from zklogin.jwtkit.registry import MockOP
from zklogin.proto import ephemeral
from zklogin.proto.address import (
    SaltSeed,
    StringTooLong,
    address_bytes,
    address_from_bytes,
    derive_address,
    derive_address_raw,
    derive_salt,
)
from zklogin.proto.ephemeral import EphemeralKey
from zklogin.proto.gtws import (
    MAX_TAG,
    commit,
    demo_issuer,
    gtws_gen,
    gtws_sign,
    gtws_verify,
    predicate,
)
from zklogin.proto.zklogin import (
    AddressMismatch,
    BackendFailure,
    PredicateFalse,
    SignatureDecodeError,
    Tag,
    Witness,
    ZkLoginSignature,
    freshness_ok,
    get_witness,
    p_zklogin,
    prove_tag,
    public_vector,
    sim_sign,
    tws_sign,
    tws_verify,
    zklogin_sign,
    zklogin_verify,
)
from zklogin.zkjwt import json_raw, nonce_string

ISS = "https://accounts.example.com"


# -- addresses and salts -------------------------------------------------------------


def test_address_depends_on_every_input():
    base = derive_address("sub1", "app", ISS, 7)
    assert base == derive_address("sub1", "app", ISS, 7)
    assert 0 <= base < P
    others = {derive_address("sub2", "app", ISS, 7), derive_address("sub1", "app2", ISS, 7),
              derive_address("sub1", "app", ISS + "/", 7), derive_address("sub1", "app", ISS, 8)}
    assert base not in others and len(others) == 4


def test_address_uses_escaped_strings():
    s = 'quote"and\\slash'
    assert derive_address(s, "a", ISS, 1) == derive_address_raw(json_raw(s), b"a", ISS.encode(), 1)
    with pytest.raises(StringTooLong):
        derive_address("x" * 65, "a", ISS, 1)


def test_address_bytes_roundtrip():
    a = derive_address("s", "a", ISS, 1)
    assert address_from_bytes(address_bytes(a)) == a
    with pytest.raises(ValueError):
        address_from_bytes(P.to_bytes(32, "little"))
    with pytest.raises(ValueError):
        address_from_bytes(b"\0")


def test_salt_derivation(tmp_path):
    seed = SaltSeed(bytes(range(32)))
    s0 = derive_salt(seed, "sub", "aud", ISS)
    assert s0 == derive_salt(seed, "sub", "aud", ISS, 0)
    assert s0 != derive_salt(seed, "sub", "aud", ISS, 1)
    assert s0 != derive_salt(SaltSeed(bytes(32)), "sub", "aud", ISS)
    assert derive_salt(seed, "ab", "c", ISS) != derive_salt(seed, "a", "bc", ISS)
    path = tmp_path / "seed"
    seed.save(path)
    assert SaltSeed.load(path) == seed
    assert path.stat().st_mode & 0o777 == 0o600
    with pytest.raises(ValueError):
        SaltSeed(b"short")


def test_ephemeral_signatures():
    k = EphemeralKey.from_seed(bytes(32))
    assert k.vk == EphemeralKey.from_seed(bytes(32)).vk
    sig = k.sign(b"m")
    assert ephemeral.verify(k.vk, b"m", sig)
    assert not ephemeral.verify(k.vk, b"n", sig)
    assert not ephemeral.verify(b"\0" * 3, b"m", sig)


# -- the scheme --------------------------------------------------------------------


def signed(world, seed=0, t_exp=None, msg=b"transfer 5"):
    rng = random.Random(seed)
    acct = world.account(rng)
    t_exp = world.epoch if t_exp is None else t_exp
    sig = zklogin_sign(world.pk, acct.zkaddr, world.iss, msg, t_exp, acct.session)
    return acct, sig


def test_sign_verify_roundtrip(world):
    acct, sig = signed(world)
    assert zklogin_verify(world.pk, acct.zkaddr, world.iss, b"transfer 5", sig, world.epoch) == 1
    assert zklogin_verify(world.pk, acct.zkaddr, world.iss, b"transfer 6", sig, world.epoch) == 0
    other = derive_address(acct.user.sub, acct.user.aud, world.iss, acct.user.salt + 1)
    assert zklogin_verify(world.pk, other, world.iss, b"transfer 5", sig, world.epoch) == 0
    assert zklogin_verify(world.pk, acct.zkaddr, "https://other", b"transfer 5", sig,
                          world.epoch) == 0


def test_freshness_boundaries(world):
    t_max = world.epoch + world.delta - 1
    acct, sig = signed(world, 1, t_exp=t_max)

    def v(t_cur):
        return zklogin_verify(world.pk, acct.zkaddr, world.iss, b"transfer 5", sig, t_cur)

    assert v(t_max) == 1
    assert v(t_max + 1) == 0
    assert v(t_max - world.delta + 1) == 1
    assert v(t_max - world.delta) == 0
    assert freshness_ok(5, 5, 2) and not freshness_ok(6, 5, 2) and not freshness_ok(3, 5, 2)


def test_stale_provider_key(world):
    acct, sig = signed(world, 2, t_exp=world.epoch + world.pk.registry.window + 1)
    t_cur = sig.t_max
    assert zklogin_verify(world.pk, acct.zkaddr, world.iss, b"transfer 5", sig, t_cur) == 0


def test_proof_reused_across_messages(world):
    rng = random.Random(3)
    acct = world.account(rng)
    a = zklogin_sign(world.pk, acct.zkaddr, world.iss, b"one", world.epoch, acct.session)
    b = zklogin_sign(world.pk, acct.zkaddr, world.iss, b"two", world.epoch, acct.session)
    assert a.pi == b.pi and a.vk_u == b.vk_u and a.sigma_u != b.sigma_u
    assert zklogin_verify(world.pk, acct.zkaddr, world.iss, b"two", b, world.epoch) == 1
    assert len(acct.session.witnesses) == 1


def test_address_mismatch(world):
    rng = random.Random(4)
    acct = world.account(rng)
    with pytest.raises(AddressMismatch):
        get_witness(world.pk, world.iss, acct.zkaddr + 1, world.epoch, acct.user, rng)


def test_predicate_false_for_foreign_tag(world):
    rng = random.Random(5)
    acct = world.account(rng)
    w, jwk = get_witness(world.pk, world.iss, acct.zkaddr, world.epoch, acct.user, rng)
    good = Tag(jwk, world.iss, acct.zkaddr, world.epoch)
    assert p_zklogin(world.pk, good, w)
    for bad in (dataclasses.replace(good, zkaddr=good.zkaddr + 1),
                dataclasses.replace(good, t=good.t + 1),
                dataclasses.replace(good, iss="https://accounts.example.org"),
                dataclasses.replace(good, pk_op=dataclasses.replace(jwk, n=jwk.n + 2))):
        assert not p_zklogin(world.pk, bad, w)
        with pytest.raises(PredicateFalse):
            tws_sign(bad, world.pk, w, b"m")
        # the prover alone also refuses
        with pytest.raises(BackendFailure):
            prove_tag(world.pk, bad, w)


def test_tag_perturbation_breaks_verification(world):
    rng = random.Random(6)
    acct = world.account(rng)
    w, jwk = get_witness(world.pk, world.iss, acct.zkaddr, world.epoch, acct.user, rng)
    tag = Tag(jwk, world.iss, acct.zkaddr, world.epoch)
    sig = tws_sign(tag, world.pk, w, b"m")
    assert tws_verify(tag, world.pk, b"m", sig) == 1
    other_op = MockOP("https://other.example", world.pk.registry, key_seed=2)
    other_jwk = other_op.rotate(world.epoch)
    for bad in (dataclasses.replace(tag, pk_op=other_jwk), dataclasses.replace(tag, iss="https://x"),
                dataclasses.replace(tag, zkaddr=tag.zkaddr + 1), dataclasses.replace(tag, t=tag.t + 1)):
        assert tws_verify(bad, world.pk, b"m", sig) == 0


def test_signature_field_tampering(world):
    acct, sig = signed(world, 7)

    def v(s):
        return zklogin_verify(world.pk, acct.zkaddr, world.iss, b"transfer 5", s, world.epoch)

    assert v(sig) == 1
    pi = bytearray(sig.pi)
    pi[len(pi) // 2] ^= 0xFF
    assert v(dataclasses.replace(sig, pi=bytes(pi))) == 0
    assert v(dataclasses.replace(sig, vk_u=bytes(32))) == 0
    assert v(dataclasses.replace(sig, sigma_u=bytes(64))) == 0
    assert v(dataclasses.replace(sig, t_max=sig.t_max + 1)) == 0
    assert v(dataclasses.replace(sig, header_b64="e30")) == 0


def test_wire_format(world):
    _, sig = signed(world, 8)
    assert ZkLoginSignature.from_bytes(sig.to_bytes()) == sig
    assert ZkLoginSignature.from_b64(sig.to_b64()) == sig
    raw = sig.to_bytes()
    with pytest.raises(SignatureDecodeError):
        ZkLoginSignature.from_bytes(raw[:-1])
    with pytest.raises(SignatureDecodeError):
        ZkLoginSignature.from_bytes(raw + b"\0")
    with pytest.raises(SignatureDecodeError):
        ZkLoginSignature.from_b64("not base64!")


def test_session_rng_reproducible(world):
    a = world.account(random.Random(9))
    b = world.account(random.Random(9))
    wa, _ = a.session.witness(world.pk, world.iss, a.zkaddr, world.epoch)
    wb, _ = b.session.witness(world.pk, world.iss, b.zkaddr, world.epoch)
    assert wa.jwt == wb.jwt and wa.r == wb.r


# -- simulation backend -----------------------------------------------------------


def test_simulated_signatures_verify(sim_world):
    w = sim_world
    rng = random.Random(10)
    acct = w.account(rng)
    tag = Tag(w.op.jwk, w.iss, acct.zkaddr, w.epoch)
    sig = sim_sign(tag, w.pk, w.trapdoor, b"m", rng)
    assert tws_verify(tag, w.pk, b"m", sig) == 1
    assert zklogin_verify(w.pk, acct.zkaddr, w.iss, b"m", sig, w.epoch) == 1
    assert tws_verify(dataclasses.replace(tag, zkaddr=tag.zkaddr + 1), w.pk, b"m", sig) == 0


def test_simulated_proof_independent_of_witness(sim_world):
    """Same ephemeral key, different tokens and randomness: identical proofs."""
    w = sim_world
    rng = random.Random(11)
    acct = w.account(rng)
    eph = EphemeralKey.from_seed(rng.randbytes(32))
    tag = Tag(w.op.jwk, w.iss, acct.zkaddr, w.epoch)
    proofs = []
    for k in range(2):
        r = rng.randrange(P)
        claims = {"sub": acct.user.sub, "aud": acct.user.aud, "iss": w.iss,
                  "nonce": nonce_string(eph.vk, w.epoch, r)}
        jwt = w.op.issue(claims, whitespace_seed=k)
        wit = Witness(jwt, acct.user.salt, r, eph)
        assert p_zklogin(w.pk, tag, wit)
        proofs.append(prove_tag(w.pk, tag, wit))
    assert proofs[0] == proofs[1]
    public = public_vector(w.pk, tag, eph.vk, jwt.header_b64)
    assert proofs[0] == backends.sim_prove(w.trapdoor, w.pk.circuit.cs, public)


# -- generic signature of knowledge ----------------------------------------------


@pytest.fixture(scope="module")
def gtws():
    issuer = demo_issuer()
    return issuer, gtws_gen(issuer.public)


def test_gtws_sign_verify(gtws):
    issuer, pk = gtws
    t = b"tag:alice"
    w = rsa.sign(issuer, t)
    assert predicate(pk, t, w)
    sig = gtws_sign(t, pk, w, b"hello", r=5)
    assert gtws_verify(t, pk, b"hello", sig) == 1
    assert gtws_verify(t, pk, b"hellO", sig) == 0
    assert gtws_verify(b"tag:bob", pk, b"hello", sig) == 0
    assert gtws_verify(b"x" * (MAX_TAG + 1), pk, b"hello", sig) == 0
    with pytest.raises(PredicateFalse):
        gtws_sign(b"tag:bob", pk, w, b"hello")


def test_gtws_simulation_backend(gtws):
    issuer, _ = gtws
    pk = gtws_gen(issuer.public, ProofBackendKey.simulation(bytes(32)))
    t = b"tag:carol"
    sig = gtws_sign(t, pk, rsa.sign(issuer, t), b"m")
    assert gtws_verify(t, pk, b"m", sig) == 1
    assert gtws_verify(t, pk, b"n", sig) == 0


def test_gtws_commitment_binding(gtws):
    issuer, _ = gtws
    t = b"tag:alice"
    w = rsa.sign(issuer, t)
    from zklogin.sponge import hash_bytes

    by_message = {commit(t, hash_bytes(bytes([m])), w, 1) for m in range(256)}
    by_r = {commit(t, hash_bytes(b"\x00"), w, r) for r in range(2, 258)}
    assert len(by_message) == 256 and len(by_r) == 256
    assert not by_message & by_r
