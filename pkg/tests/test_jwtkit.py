import base64
import json

import pytest
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import padding
from cryptography.hazmat.primitives.asymmetric.rsa import RSAPublicNumbers
from hypothesis import given, settings
from hypothesis import strategies as st

from zklogin.jwtkit import b64, rsa
from zklogin.jwtkit.jwt import (
    ClaimAbsent,
    ClaimNested,
    Jwt,
    JwtMalformed,
    MissingMandatoryClaim,
    TokenTooLong,
    claim_get,
    jwt_issue,
    jwt_verify,
    serialize_claims,
    top_level_members,
)
from zklogin.jwtkit.registry import (
    Jwk,
    JwkRegistry,
    MockOP,
    StaleKey,
    UnknownKid,
    seeded_key,
)

ISS = "https://issuer.test"


@given(st.binary(max_size=200))
def test_b64_roundtrip_matches_stdlib(data):
    text = b64.encode(data)
    assert text == base64.urlsafe_b64encode(data).decode().rstrip("=")
    assert b64.decode(text) == data


@pytest.mark.parametrize("bad", ["ab+c", "ab/c", "ab=c", "a b", "abcde"])
def test_b64_rejects(bad):
    with pytest.raises(ValueError):
        b64.decode(bad)


def test_b64_error_types():
    with pytest.raises(b64.IllegalCharacter):
        b64.decode("a*")
    with pytest.raises(b64.BadLength):
        b64.decode("abcde")


def test_rsa_interop_with_cryptography():
    key = seeded_key(1)
    msg = b"interop"
    sig = rsa.sign(key, msg)
    pub = RSAPublicNumbers(rsa.E, key.n).public_key()
    pub.verify(sig, msg, padding.PKCS1v15(), hashes.SHA256())
    with pytest.raises(InvalidSignature):
        pub.verify(sig, msg + b"!", padding.PKCS1v15(), hashes.SHA256())
    assert rsa.verify(key.public, msg, sig)
    assert not rsa.verify(key.public, msg + b"!", sig)
    assert not rsa.verify(key.public, msg, sig[:-1])
    assert not rsa.verify(key.public, msg, key.n.to_bytes(256, "big"))


def test_rsa_generation_reproducible():
    a = seeded_key(1)
    assert rsa.generate(seed=1).n == a.n
    assert a.n.bit_length() == 2048 and a.p * a.q == a.n
    assert rsa.is_probable_prime(a.p) and not rsa.is_probable_prime(a.n)


claim_text = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=20)
claims_strategy = st.dictionaries(
    st.text(alphabet="abcdefgh_\"\\", min_size=1, max_size=6),
    st.one_of(claim_text, st.booleans()), max_size=6)


@settings(max_examples=200)
@given(claims_strategy, st.integers(min_value=0, max_value=2 ** 32))
def test_claim_get_agrees_with_json(claims, ws_seed):
    raw = serialize_claims(claims, whitespace_seed=ws_seed)
    doc = json.loads(raw)
    assert doc == claims
    for name, value in claims.items():
        span = claim_get(raw, name)
        assert span.value == value
        seg = raw[span.start:span.start + span.length]
        assert seg.startswith(json.dumps(name).encode()) and seg[-1:] in (b",", b"}")
        assert raw[span.start + span.colon:span.start + span.colon + 1] == b":"
        if isinstance(value, str):
            assert json.loads(b'"' + span.raw + b'"') == value
    assert [m[0] for m in top_level_members(raw)] == list(claims)


def test_claim_get_nested_absent_duplicate():
    raw = b'{"a":{"sub":"x"},"b":1,"b":2}'
    with pytest.raises(ClaimNested):
        claim_get(raw, "sub")
    with pytest.raises(ClaimAbsent):
        claim_get(raw, "aud")
    assert claim_get(raw, "b").value == 2


def test_serialize_rejects_other_types():
    with pytest.raises(TypeError):
        serialize_claims({"n": 3})


def make_claims(**extra):
    return dict({"sub": "1", "aud": "app", "iss": ISS, "nonce": "n"}, **extra)


def test_issue_parse_verify():
    key = seeded_key(1)
    jwt = jwt_issue(key, "kid1", make_claims(), whitespace_seed=5)
    again = Jwt.parse(jwt.compact)
    assert again == jwt and again.kid == "kid1" and again.header["alg"] == "RS256"
    assert jwt_verify(key.public, again) == 1
    tampered = Jwt(jwt.header_b64, b64.encode(b'{"sub":"2"}'), jwt.sig_b64)
    assert jwt_verify(key.public, tampered) == 0
    assert jwt_verify(seeded_key(2).public, jwt) == 0
    with pytest.raises(JwtMalformed):
        Jwt.parse("a.b")
    with pytest.raises(JwtMalformed):
        Jwt.parse("a.@.c")


def test_issue_limits():
    key = seeded_key(1)
    with pytest.raises(MissingMandatoryClaim):
        jwt_issue(key, "k", {"sub": "1"})
    with pytest.raises(TokenTooLong):
        jwt_issue(key, "k", make_claims(pad="x" * 1300))


def test_registry_rotation_and_staleness():
    reg = JwkRegistry(window=2)
    op = MockOP(ISS, reg, key_seed=1)
    first = op.rotate(10)
    assert reg.lookup(first.kid, 12) == first
    with pytest.raises(StaleKey):
        reg.lookup(first.kid, 13)
    assert reg.get(first.kid) == first
    second = op.rotate(13)
    assert second.kid != first.kid
    assert [k.kid for k in reg.current(ISS, 13)] == [second.kid]
    assert reg.issuers() == {ISS}
    with pytest.raises(UnknownKid):
        reg.lookup("nope", 10)
    jwt = op.issue(make_claims())
    assert jwt.kid == second.kid and jwt_verify(second.public, jwt)
    assert json.loads(op.jwks())["keys"][0]["kid"] == second.kid


def test_registry_refuses_conflicts():
    reg = JwkRegistry()
    reg.publish(Jwk("a", ISS, 35, 1))
    with pytest.raises(ValueError):
        reg.publish(Jwk("a", ISS, 77, 1))
    with pytest.raises(ValueError):
        reg.publish(Jwk("b", ISS, 35, 1))


def test_pairwise_subjects():
    op = MockOP(ISS, JwkRegistry(), key_seed=1, pairwise=True)
    assert op.subject("alice", "a1") != op.subject("alice", "a2")
    assert op.subject("alice", "a1") == op.subject("alice", "a1")
    with pytest.raises(RuntimeError):
        op.issue(make_claims())
