"""The zkLogin circuit: JWT signature, claim parsing, nonce and address checks.

Public inputs, in order:

====================  =====  ==============================================
provider modulus        32   64-bit limbs, little-endian
iss                      3   two 31-byte big-endian chunks, then the length
zkaddr                   1
T_max                    1
vk_u                     2   two 16-byte big-endian halves of the 32-byte key
header_b64               9   eight 31-byte chunks, then the length
====================  =====  ==============================================
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

from .csys import LC, ONE, Assignment, ConstraintSystem
from .field import P
from .gadgets import rsa as grsa
from .gadgets.base64 import decode_char, g_base64url_decode
from .gadgets.core import (
    ByteVar,
    Constants,
    as_lc,
    assert_equal,
    assert_zero,
    decompose,
    pack_lc,
    prefix_mask,
)
from .gadgets.json import g_json_claim, g_top_level, json_scan
from .gadgets.sha256 import g_sha256
from .gadgets.slicing import g_slice_naive, g_slice_packed, shift_left
from .gadgets.sponge import g_sponge_hash
from .jwtkit import b64
from .jwtkit.jwt import ClaimAbsent, ClaimNested, Jwt, JwtMalformed, claim_get
from .sponge import Domain, pack_string, sponge_hash

NONCE_BYTES = 20
NONCE_CHARS = 27
CHUNK = 31


class ConfigInvalid(ValueError):
    pass


class HintMismatch(ValueError):
    pass


class ClaimMissing(KeyError):
    pass


@dataclass(frozen=True)
class CircuitConfig:
    L_max: int = 1600
    max_payload: int = 1200
    max_header: int = 248
    stid_claim: str = "sub"
    max_stid: int = 64
    max_aud: int = 64
    max_iss: int = 32
    max_nonce: int = 44
    delta: int = 2
    slicing: str = "packed"

    def validate(self) -> CircuitConfig:
        if self.stid_claim not in ("sub", "email"):
            raise ConfigInvalid("stid_claim must be 'sub' or 'email'")
        if self.slicing not in ("packed", "naive"):
            raise ConfigInvalid("slicing must be 'packed' or 'naive'")
        if not 0 < self.max_header < 256:
            raise ConfigInvalid("max_header must be in (0, 256)")
        if self.max_header + 1 >= self.L_max:
            raise ConfigInvalid("header leaves no room for a payload")
        if self.max_nonce < NONCE_CHARS:
            raise ConfigInvalid(f"max_nonce must be at least {NONCE_CHARS}")
        for name in ("max_stid", "max_aud", "max_iss"):
            if not 1 <= getattr(self, name) <= self.max_payload:
                raise ConfigInvalid(f"{name} out of range")
        if self.delta < 1:
            raise ConfigInvalid("delta must be positive")
        if self.max_payload < 16:
            raise ConfigInvalid("max_payload too small")
        return self

    @property
    def payload_chars(self) -> int:
        return -(-4 * self.max_payload // 3)

    @property
    def claims(self) -> list:
        """(name, max value length, kind) for every parsed claim."""
        out = [(self.stid_claim, self.max_stid, "string"), ("aud", self.max_aud, "string"),
               ("iss", self.max_iss, "string"), ("nonce", self.max_nonce, "string")]
        if self.stid_claim == "email":
            out.append(("email_verified", 5, "boolean"))
        return out

    @property
    def num_public(self) -> int:
        return 32 + _chunks(self.max_iss) + 1 + 1 + 1 + 2 + _chunks(self.max_header) + 1


def _chunks(n: int) -> int:
    return -(-n // CHUNK)


# -- out-of-circuit encodings -------------------------------------------------


def vk_parts(vk_u: bytes) -> list:
    if len(vk_u) != 32:
        raise ValueError("vk_u is 32 bytes")
    return [int.from_bytes(vk_u[:16], "big"), int.from_bytes(vk_u[16:], "big")]


def nonce_field(vk_u: bytes, t_max: int, r: int) -> int:
    return sponge_hash(vk_parts(vk_u) + [t_max, r], Domain.NONCE)


def nonce_string(vk_u: bytes, t_max: int, r: int) -> str:
    """base64url of the top 20 bytes of the big-endian nonce hash (27 chars)."""
    h = nonce_field(vk_u, t_max, r)
    return b64.encode(h.to_bytes(32, "big")[:NONCE_BYTES])


def json_raw(s: str) -> bytes:
    """A string as it appears between the quotes of compact JSON."""
    return json.dumps(s).encode("ascii")[1:-1]


@dataclass(frozen=True)
class PublicInputs:
    modulus: int
    iss: str
    zkaddr: int
    t_max: int
    vk_u: bytes
    header_b64: str

    def vector(self, config: CircuitConfig) -> list:
        if not 0 <= self.t_max < P:
            raise ValueError("T_max out of range")
        return (grsa.to_limbs(self.modulus)
                + pack_string(json_raw(self.iss), config.max_iss)
                + [self.zkaddr % P, self.t_max]
                + vk_parts(self.vk_u)
                + pack_string(self.header_b64.encode("ascii"), config.max_header))


@dataclass
class WitnessBundle:
    jwt: Jwt
    salt: int
    r: int
    hints: dict = field(default_factory=dict)  # claim name -> (i, l, j)


# -- circuit ------------------------------------------------------------------


@dataclass
class ZkLoginCircuit:
    config: CircuitConfig
    cs: ConstraintSystem
    pub: dict
    wit: dict

    @property
    def num_public(self) -> int:
        return self.cs.num_public


def _le_const(cs: ConstraintSystem, bits: list, c: int) -> None:
    """Bits (LSB first) encode an integer <= c."""
    eq = LC({ONE: 1})
    for k in reversed(range(len(bits))):
        b = LC({bits[k]: 1})
        if (c >> k) & 1:
            t = cs.alloc()
            cs.enforce(eq, b, LC({t: 1}), solve=t)
            eq = LC({t: 1})
        else:
            cs.enforce(eq, b, LC())
    if c >> len(bits):
        raise ValueError("constant wider than the bit list")


def _packed_equal(cs, byte_lcs: list, max_len: int, length, elems: list) -> None:
    padded = list(byte_lcs[:max_len]) + [LC()] * (_chunks(max_len) * CHUNK - max_len)
    for k in range(_chunks(max_len)):
        assert_equal(cs, pack_lc(padded[k * CHUNK:(k + 1) * CHUNK], 8), elems[k])
    assert_equal(cs, length, elems[-1])


def _packed_elems(byte_lcs: list, max_len: int, length) -> list:
    padded = list(byte_lcs[:max_len]) + [LC()] * (_chunks(max_len) * CHUNK - max_len)
    return [pack_lc(padded[k * CHUNK:(k + 1) * CHUNK], 8)
            for k in range(_chunks(max_len))] + [as_lc(length)]


def build_ckt(config: CircuitConfig | None = None) -> ZkLoginCircuit:
    """Synthesize the circuit (cached per configuration)."""
    return _build(config or CircuitConfig())


@lru_cache(maxsize=4)
def _build(config: CircuitConfig) -> ZkLoginCircuit:
    config.validate()
    cs = ConstraintSystem()
    L = config.L_max
    pub = {
        "modulus": cs.alloc_many(32, public=True),
        "iss": cs.alloc_many(_chunks(config.max_iss) + 1, public=True),
        "zkaddr": cs.alloc(public=True),
        "t_max": cs.alloc(public=True),
        "vk": cs.alloc_many(2, public=True),
        "header": cs.alloc_many(_chunks(config.max_header) + 1, public=True),
    }
    Constants.of(cs)
    wit = {
        "msg": cs.alloc_many(L),
        "len": cs.alloc(),
        "hdr_len": cs.alloc(),
        "sig": cs.alloc_many(32),
        "salt": cs.alloc(),
        "r": cs.alloc(),
        "hints": {name: cs.alloc_many(3) for name, _, _ in config.claims},
    }
    msg = [ByteVar(v) for v in wit["msg"]]

    with cs.region("sha256"):
        sha = g_sha256(cs, msg, LC({wit["len"]: 1}), L)
        wit["digest"] = sha.digest
    with cs.region("rsa"):
        grsa.g_rs256_verify(cs, [LC({v: 1}) for v in wit["sig"]],
                            [LC({v: 1}) for v in pub["modulus"]],
                            [LC({v: 1}) for v in sha.digest])

    hdr_len = LC({wit["hdr_len"]: 1})
    with cs.region("header"):
        hmax = config.max_header
        n_el = _chunks(hmax)

        def unpack(*elems):
            raw = b"".join(int(e).to_bytes(CHUNK, "big") if int(e) < 1 << 248 else b"\0" * CHUNK
                           for e in elems)
            return list(raw[:hmax])

        hbytes = cs.hint(unpack, [LC({v: 1}) for v in pub["header"][:n_el]], hmax)
        for v in hbytes:
            decompose(cs, LC({v: 1}), 8)
        _packed_equal(cs, [LC({v: 1}) for v in hbytes], hmax, LC({pub["header"][-1]: 1}),
                      [LC({v: 1}) for v in pub["header"]])
        assert_equal(cs, hdr_len, LC({pub["header"][-1]: 1}))
        hmask = prefix_mask(cs, hdr_len, hmax)
        for k in range(hmax):
            cs.enforce(LC({msg[k].v: 1, hbytes[k]: -1}), LC({hmask[k]: 1}), LC())
        # header_b64 + '.' + payload fits in the message
        decompose(cs, LC({wit["len"]: 1}) - hdr_len - 1, L.bit_length())

    with cs.region("base64"):
        shift_bits = decompose(cs, hdr_len, 8)
        nchars = config.payload_chars
        aligned = shift_left(cs, [m.lc for m in msg], shift_bits, nchars + 1)
        assert_equal(cs, aligned[0], ord("."))
        chars = aligned[1:]
        if nchars % 4 == 1:
            chars = chars[:-1]
        payload = g_base64url_decode(cs, chars, allow_nul_tail=True)[:config.max_payload]

    slicer = g_slice_packed if config.slicing == "packed" else g_slice_naive
    claims = {}
    with cs.region("parse"):
        scan = json_scan(cs, payload)
        for name, maxv, kind in config.claims:
            i, l, j = (LC({v: 1}) for v in wit["hints"][name])
            g_top_level(cs, payload, i, scan)
            key = json.dumps(name).encode("ascii")
            claims[name] = g_json_claim(cs, payload, i, l, j, max_value=maxv, key=key,
                                        kind=kind, slicer=slicer)
        if config.stid_claim == "email":
            assert_equal(cs, LC({claims["email_verified"].is_true: 1}), 1)

    def value_lcs(name):
        return [b.lc for b in claims[name].value]

    with cs.region("iss"):
        c = claims["iss"]
        _packed_equal(cs, value_lcs("iss"), config.max_iss, LC({c.value_len: 1}),
                      [LC({v: 1}) for v in pub["iss"]])

    with cs.region("nonce"):
        c = claims["nonce"]
        assert_equal(cs, LC({c.value_len: 1}), NONCE_CHARS)
        h = g_sponge_hash(cs, [LC({v: 1}) for v in pub["vk"]]
                          + [LC({pub["t_max"]: 1}), LC({wit["r"]: 1})], Domain.NONCE)
        hb = decompose(cs, LC({h: 1}), 254)
        _le_const(cs, hb, P - 1)
        width = 8 * NONCE_BYTES
        for t in range(NONCE_CHARS):
            d = decode_char(cs, c.value[t].lc)
            for b in range(6):
                pos = 6 * t + 5 - b  # position in the big-endian nonce bit string
                bit = LC({d.bits[b]: 1})
                if pos >= width or 255 - pos >= 254:
                    assert_zero(cs, bit)
                else:
                    assert_equal(cs, bit, LC({hb[255 - pos]: 1}))

    with cs.region("addr"):
        elems = []
        for name, maxv in ((config.stid_claim, config.max_stid), ("aud", config.max_aud),
                           ("iss", config.max_iss)):
            elems += _packed_elems(value_lcs(name), maxv, LC({claims[name].value_len: 1}))
        elems.append(LC({wit["salt"]: 1}))
        addr = g_sponge_hash(cs, elems, Domain.ADDR)
        assert_equal(cs, LC({addr: 1}), LC({pub["zkaddr"]: 1}))

    cs.compile()
    return ZkLoginCircuit(config, cs, pub, wit)


# -- witness ------------------------------------------------------------------


def claim_hints(jwt: Jwt, config: CircuitConfig) -> dict:
    out = {}
    for name, _, _ in config.claims:
        try:
            s = claim_get(jwt, name)
        except (ClaimAbsent, ClaimNested) as exc:
            raise ClaimMissing(name) from exc
        out[name] = (s.start, s.length, s.colon)
    return out


def fill_witness(config_or_circuit, bundle: WitnessBundle, public: PublicInputs) -> Assignment:
    """Full assignment for the circuit; unsatisfied if any input is dishonest."""
    ckt = config_or_circuit if isinstance(config_or_circuit, ZkLoginCircuit) \
        else build_ckt(config_or_circuit)
    cfg, cs = ckt.config, ckt.cs
    jwt = bundle.jwt
    try:
        signing = jwt.signing_input
        payload = jwt.payload_bytes
        sig = jwt.signature
    except (ValueError, UnicodeDecodeError) as exc:
        raise JwtMalformed(str(exc)) from exc
    if len(signing) > cfg.L_max:
        raise JwtMalformed("signing input longer than L_max")
    if len(jwt.header_b64) > cfg.max_header:
        raise JwtMalformed("header longer than max_header")
    if len(payload) > cfg.max_payload:
        raise JwtMalformed("payload longer than max_payload")
    hints = claim_hints(jwt, cfg)
    for name, h in bundle.hints.items():
        if name not in hints:
            raise HintMismatch(f"no claim {name} in this circuit")
        i, l, j = h
        if not (0 <= i and 0 < l and i + l <= len(payload) and 0 <= j < l):
            raise HintMismatch(f"{name}: span outside the payload")
        hints[name] = (i, l, j)

    z = cs.new_assignment()
    z.buf.set_many(0, public.vector(cfg))
    w = ckt.wit
    z.set_many(w["msg"], list(signing) + [0] * (cfg.L_max - len(signing)))
    z[w["len"]] = len(signing)
    z[w["hdr_len"]] = len(jwt.header_b64)
    z.set_many(w["sig"], grsa.to_limbs(int.from_bytes(sig, "big")))
    z[w["salt"]] = bundle.salt % P
    z[w["r"]] = bundle.r % P
    for name, vars_ in w["hints"].items():
        z.set_many(vars_, hints[name])
    cs.solve(z)
    return z


def public_inputs_for(jwt: Jwt, modulus: int, zkaddr: int, t_max: int, vk_u: bytes) -> PublicInputs:
    iss = claim_get(jwt, "iss").value
    return PublicInputs(modulus, iss, zkaddr, t_max, vk_u, jwt.header_b64)
