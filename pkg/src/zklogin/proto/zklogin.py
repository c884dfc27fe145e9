"""Tagged witness signatures over the zkLogin circuit, and the wallet-level
sign / verify built on them.

A tag is (provider key, iss, zkaddr, T). A witness is a provider JWT whose
nonce commits to an ephemeral key, expiry and randomness, together with the
salt behind zkaddr. Signing proves the circuit for the witness once and then
signs messages with the ephemeral key.
"""

from __future__ import annotations

import base64
import hashlib
import json
import random
import secrets
import struct
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

from .. import backends
from ..backends import ProofBackendKey, UnsatisfiedWitness
from ..field import P
from ..jwtkit import b64
from ..jwtkit.jwt import (
    ClaimAbsent,
    ClaimNested,
    Jwt,
    JwtMalformed,
    claim_get,
    header_b64_for,
    jwt_verify,
)
from ..jwtkit.registry import (
    Jwk,
    JwkRegistry,
    MockOP,
    StaleKey,
    UnknownIssuer,
    UnknownKid,
)
from ..zkjwt import (
    CircuitConfig,
    PublicInputs,
    WitnessBundle,
    ZkLoginCircuit,
    build_ckt,
    fill_witness,
    json_raw,
    nonce_string,
)
from . import ephemeral
from .address import derive_address, derive_address_raw
from .ephemeral import EphemeralKey

DEFAULT_DELTA = 2


class PredicateFalse(ValueError):
    pass


class BackendFailure(RuntimeError):
    pass


class AddressMismatch(ValueError):
    pass


class SignatureDecodeError(ValueError):
    pass


@dataclass(frozen=True)
class Tag:
    pk_op: Jwk
    iss: str
    zkaddr: int
    t: int

    def canonical(self) -> bytes:
        return json.dumps([self.pk_op.kid, str(self.pk_op.n), self.iss, str(self.zkaddr), self.t],
                          separators=(",", ":")).encode()


@dataclass(frozen=True)
class Witness:
    jwt: Jwt
    salt: int
    r: int
    eph: EphemeralKey

    @property
    def vk_u(self) -> bytes:
        return self.eph.vk


@dataclass(frozen=True)
class ZkLoginSignature:
    vk_u: bytes
    t_max: int
    sigma_u: bytes
    pi: bytes
    header_b64: str

    def to_bytes(self) -> bytes:
        hdr = self.header_b64.encode("ascii")
        return b"".join([
            struct.pack("<H", len(self.vk_u)), self.vk_u,
            struct.pack("<q", self.t_max),
            struct.pack("<H", len(self.sigma_u)), self.sigma_u,
            struct.pack("<I", len(self.pi)), self.pi,
            struct.pack("<H", len(hdr)), hdr,
        ])

    @classmethod
    def from_bytes(cls, raw: bytes) -> ZkLoginSignature:
        pos = 0

        def take(n):
            nonlocal pos
            if pos + n > len(raw):
                raise SignatureDecodeError("truncated signature")
            out = raw[pos:pos + n]
            pos += n
            return out

        def field_(fmt):
            (n,) = struct.unpack(fmt, take(struct.calcsize(fmt)))
            return take(n)

        vk = field_("<H")
        (t_max,) = struct.unpack("<q", take(8))
        sig = field_("<H")
        pi = field_("<I")
        try:
            hdr = field_("<H").decode("ascii")
        except UnicodeDecodeError as exc:
            raise SignatureDecodeError("header is not ASCII") from exc
        if pos != len(raw):
            raise SignatureDecodeError("trailing bytes")
        return cls(vk, t_max, sig, pi, hdr)

    def to_b64(self) -> str:
        return base64.b64encode(self.to_bytes()).decode("ascii")

    @classmethod
    def from_b64(cls, text: str) -> ZkLoginSignature:
        try:
            raw = base64.b64decode(text, validate=True)
        except ValueError as exc:
            raise SignatureDecodeError(str(exc)) from exc
        return cls.from_bytes(raw)


@dataclass
class UserContext:
    """What the user and app supply to the witness flow."""

    sub: str
    aud: str
    salt: int
    email: str | None = None
    extra_claims: dict = field(default_factory=dict)
    whitespace_seed: int | None = None

    def stid(self, config: CircuitConfig) -> str:
        if config.stid_claim == "email":
            if self.email is None:
                raise ValueError("this circuit keys addresses by email")
            return self.email
        return self.sub


class _Lru(OrderedDict):
    def __init__(self, cap: int):
        super().__init__()
        self.cap = cap
        self.lock = threading.Lock()

    def get_or(self, key, make):
        with self.lock:
            if key in self:
                self.move_to_end(key)
                return self[key]
        val = make()
        with self.lock:
            self[key] = val
            while len(self) > self.cap:
                self.popitem(last=False)
        return val


@dataclass
class ZkLoginPK:
    """Public parameters plus the environment the scheme runs in."""

    config: CircuitConfig
    backend: ProofBackendKey
    registry: JwkRegistry
    providers: dict = field(default_factory=dict)
    delta: int = DEFAULT_DELTA
    _proofs: _Lru = field(default_factory=lambda: _Lru(256), repr=False)
    _verdicts: _Lru = field(default_factory=lambda: _Lru(4096), repr=False)

    @property
    def circuit(self) -> ZkLoginCircuit:
        return build_ckt(self.config)

    def add_provider(self, op: MockOP) -> MockOP:
        if op.registry is not self.registry:
            raise ValueError("provider publishes to a different registry")
        self.providers[op.iss] = op
        return op


def gen(config: CircuitConfig | None = None, backend: ProofBackendKey | None = None,
        registry: JwkRegistry | None = None, delta: int = DEFAULT_DELTA) -> ZkLoginPK:
    cfg = (config or CircuitConfig()).validate()
    return ZkLoginPK(cfg, backend or ProofBackendKey.transparent(), registry or JwkRegistry(), {},
                     delta)


def sim_gen(config: CircuitConfig | None = None, registry: JwkRegistry | None = None,
            delta: int = DEFAULT_DELTA, mac_key: bytes | None = None) -> tuple:
    """Parameters in simulation mode, and the trapdoor."""
    key = ProofBackendKey.simulation(mac_key)
    return gen(config, key, registry, delta), key.trapdoor


# -- witness --------------------------------------------------------------------


def get_witness(pk: ZkLoginPK, iss: str, zkaddr: int, t_exp: int, user: UserContext,
                rng: random.Random | None = None) -> tuple:
    """Fresh ephemeral key and randomness, and a JWT whose nonce commits to them.

    ``rng`` makes both reproducible (for tests and games); by default they
    come from the OS.
    """
    op = pk.providers.get(iss)
    if op is None:
        raise UnknownIssuer(iss)
    cfg = pk.config
    if derive_address(user.stid(cfg), user.aud, iss, user.salt, cfg) != zkaddr:
        raise AddressMismatch("stid, aud, iss and salt do not derive this address")
    if rng is None:
        eph, r = EphemeralKey.generate(), secrets.randbelow(P)
    else:
        eph, r = EphemeralKey.from_seed(rng.randbytes(32)), rng.randrange(P)
    claims = {"sub": user.sub, "aud": user.aud, "iss": iss,
              "nonce": nonce_string(eph.vk, t_exp, r)}
    if cfg.stid_claim == "email":
        claims["email"] = user.email
        claims["email_verified"] = True
    claims.update(user.extra_claims)
    jwt = op.issue(claims, whitespace_seed=user.whitespace_seed)
    return Witness(jwt, user.salt, r, eph), op.jwk


def p_zklogin(pk: ZkLoginPK, tag: Tag, w: Witness) -> bool:
    """The signing predicate, evaluated directly on the witness."""
    cfg = pk.config
    jwt = w.jwt
    try:
        if not jwt_verify(tag.pk_op.public, jwt):
            return False
        if len(jwt.signing_input) > cfg.L_max or len(jwt.header_b64) > cfg.max_header:
            return False
        if len(jwt.payload_bytes) > cfg.max_payload:
            return False
        spans = {c: claim_get(jwt, c) for c, _, _ in cfg.claims}
        if spans["iss"].value != tag.iss or spans["iss"].raw != json_raw(tag.iss):
            return False
        if spans["nonce"].value != nonce_string(w.vk_u, tag.t, w.r):
            return False
        for c, _, kind in cfg.claims:
            want = bool if kind == "boolean" else str
            if not isinstance(spans[c].value, want):
                return False
        if cfg.stid_claim == "email" and spans["email_verified"].value is not True:
            return False
        return derive_address_raw(spans[cfg.stid_claim].raw, spans["aud"].raw,
                                  spans["iss"].raw, w.salt, cfg) == tag.zkaddr
    except (ClaimAbsent, ClaimNested, JwtMalformed, ValueError):
        return False


def public_vector(pk: ZkLoginPK, tag: Tag, vk_u: bytes, header_b64: str) -> list:
    return PublicInputs(tag.pk_op.n, tag.iss, tag.zkaddr, tag.t, vk_u, header_b64).vector(pk.config)


# -- tagged witness signature ----------------------------------------------------


def prove_tag(pk: ZkLoginPK, tag: Tag, w: Witness) -> bytes:
    """Proof for (tag, vk_u) from witness w; cached per (tag, vk_u, jwt)."""
    key = (tag.canonical(), w.vk_u, w.jwt.compact, pk.backend)

    def make():
        ckt = pk.circuit
        public = PublicInputs(tag.pk_op.n, tag.iss, tag.zkaddr, tag.t, w.vk_u, w.jwt.header_b64)
        try:
            z = fill_witness(ckt, WitnessBundle(w.jwt, w.salt, w.r), public)
            return backends.prove(pk.backend, ckt.cs, z)
        except (UnsatisfiedWitness, JwtMalformed, KeyError, ValueError) as exc:
            return BackendFailure(str(exc))  # cached too: the outcome is deterministic

    out = pk._proofs.get_or(key, make)
    if isinstance(out, BackendFailure):
        raise out
    return out


def tws_sign(tag: Tag, pk: ZkLoginPK, w: Witness, message: bytes) -> ZkLoginSignature:
    if not p_zklogin(pk, tag, w):
        raise PredicateFalse("witness does not satisfy the predicate for this tag")
    pi = prove_tag(pk, tag, w)
    return ZkLoginSignature(w.vk_u, tag.t, w.eph.sign(message), pi, w.jwt.header_b64)


def sim_sign(tag: Tag, pk: ZkLoginPK, trapdoor: bytes, message: bytes,
             rng: random.Random | None = None) -> ZkLoginSignature:
    """Signature produced from the trapdoor alone, with no witness."""
    eph = EphemeralKey.generate() if rng is None else EphemeralKey.from_seed(rng.randbytes(32))
    header = header_b64_for(tag.pk_op.kid)
    pi = backends.sim_prove(trapdoor, pk.circuit.cs, public_vector(pk, tag, eph.vk, header))
    return ZkLoginSignature(eph.vk, tag.t, eph.sign(message), pi, header)


def _header_ok(header_b64: str) -> bool:
    try:
        h = json.loads(b64.decode(header_b64))
    except (ValueError, UnicodeDecodeError):
        return False
    return isinstance(h, dict) and h.get("alg") == "RS256"


def tws_verify(tag: Tag, pk: ZkLoginPK, message: bytes, sig: ZkLoginSignature) -> int:
    if sig.t_max != tag.t or len(sig.vk_u) != 32:
        return 0
    if len(sig.header_b64) > pk.config.max_header or not _header_ok(sig.header_b64):
        return 0
    if not ephemeral.verify(sig.vk_u, message, sig.sigma_u):
        return 0
    try:
        public = public_vector(pk, tag, sig.vk_u, sig.header_b64)
    except ValueError:
        return 0
    key = hashlib.sha256(repr((public, pk.backend.kind)).encode() + sig.pi).digest()
    return pk._verdicts.get_or(
        key, lambda: backends.verify(pk.backend, pk.circuit.cs, public, sig.pi))


# -- wallet-level scheme ------------------------------------------------------------


@dataclass
class Session:
    """A wallet's cached witness per (iss, zkaddr, T_exp); proofs are reused across messages."""

    user: UserContext
    witnesses: dict = field(default_factory=dict)
    rng: random.Random | None = None

    def witness(self, pk: ZkLoginPK, iss: str, zkaddr: int, t_exp: int) -> tuple:
        k = (iss, zkaddr, t_exp)
        if k not in self.witnesses:
            self.witnesses[k] = get_witness(pk, iss, zkaddr, t_exp, self.user, self.rng)
        return self.witnesses[k]


def zklogin_sign(pk: ZkLoginPK, zkaddr: int, iss: str, message: bytes, t_exp: int,
                 user: UserContext | Session) -> ZkLoginSignature:
    if isinstance(user, Session):
        w, jwk = user.witness(pk, iss, zkaddr, t_exp)
    else:
        w, jwk = get_witness(pk, iss, zkaddr, t_exp, user)
    return tws_sign(Tag(jwk, iss, zkaddr, t_exp), pk, w, message)


def resolve_key(pk: ZkLoginPK, iss: str, header_b64: str, t_cur: int) -> Jwk | None:
    try:
        kid = json.loads(b64.decode(header_b64)).get("kid")
        jwk = pk.registry.lookup(kid, t_cur)
    except (ValueError, UnicodeDecodeError, AttributeError, UnknownKid, StaleKey):
        return None
    return jwk if jwk.iss == iss else None


def freshness_ok(t_cur: int, t_max: int, delta: int) -> bool:
    return t_cur <= t_max < t_cur + delta


def zklogin_verify(pk: ZkLoginPK, zkaddr: int, iss: str, message: bytes,
                   sig: ZkLoginSignature, t_cur: int) -> int:
    if not freshness_ok(t_cur, sig.t_max, pk.delta):
        return 0
    jwk = resolve_key(pk, iss, sig.header_b64, t_cur)
    if jwk is None:
        return 0
    return tws_verify(Tag(jwk, iss, zkaddr, sig.t_max), pk, message, sig)
