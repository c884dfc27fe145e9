"""Generic commit-and-prove tagged witness signature.

The predicate is fixed: the witness ``w`` is an RS256 signature on the tag
``t`` under a demo key. A signature on M is ``(c, pi)`` where
``c = Com(t, M, w; r)`` is a sponge commitment and ``pi`` proves knowledge
of ``(w, r)`` opening ``c`` with ``w`` valid for ``t``. Nothing ties the
signer to an ephemeral key, so anyone holding a valid ``w`` can sign; this
exists to exercise the construction, not as a wallet scheme.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass
from functools import lru_cache

from .. import backends
from ..backends import ProofBackendKey, UnsatisfiedWitness
from ..csys import LC, ConstraintSystem
from ..field import P
from ..gadgets import rsa as grsa
from ..gadgets.core import Constants, assert_equal, pack_lc
from ..gadgets.sha256 import g_sha256
from ..gadgets.sponge import g_sponge_hash
from ..jwtkit import rsa
from ..jwtkit.registry import seeded_key
from ..sponge import Domain, hash_bytes, pack_string, sponge_hash
from .zklogin import BackendFailure, PredicateFalse

MAX_TAG = 55  # one SHA-256 block
_TAG_ELEMS = 2


class TagTooLong(ValueError):
    pass


def _sig_elems(limbs: list) -> list:
    """Pack 64-bit limbs three per field element."""
    return [sum(x << (64 * k) for k, x in enumerate(limbs[i:i + 3])) for i in range(0, len(limbs), 3)]


def commit(t: bytes, mhash: int, sig: bytes, r: int) -> int:
    limbs = grsa.to_limbs(int.from_bytes(sig, "big"))
    return sponge_hash(pack_string(t, MAX_TAG) + [mhash] + _sig_elems(limbs) + [r % P], Domain.COMMIT)


@dataclass(frozen=True)
class GtwsCircuit:
    cs: ConstraintSystem
    pub: dict
    wit: dict


@lru_cache(maxsize=1)
def build_gtws_ckt() -> GtwsCircuit:
    cs = ConstraintSystem()
    pub = {
        "modulus": cs.alloc_many(32, public=True),
        "t": cs.alloc_many(_TAG_ELEMS + 1, public=True),
        "mhash": cs.alloc(public=True),
        "c": cs.alloc(public=True),
    }
    Constants.of(cs)
    wit = {"t": cs.alloc_many(MAX_TAG), "sig": cs.alloc_many(32), "r": cs.alloc()}
    t_len = LC({pub["t"][-1]: 1})
    t_bytes = [LC({v: 1}) for v in wit["t"]]
    with cs.region("sha256"):
        sha = g_sha256(cs, t_bytes, t_len, MAX_TAG)
    with cs.region("rsa"):
        grsa.g_rs256_verify(cs, [LC({v: 1}) for v in wit["sig"]],
                            [LC({v: 1}) for v in pub["modulus"]],
                            [LC({v: 1}) for v in sha.digest])
    with cs.region("commit"):
        padded = t_bytes + [LC()] * (31 * _TAG_ELEMS - MAX_TAG)
        for k in range(_TAG_ELEMS):
            assert_equal(cs, pack_lc(padded[31 * k:31 * (k + 1)], 8), LC({pub["t"][k]: 1}))
        sig = wit["sig"]
        sig_elems = [pack_lc([LC({v: 1}) for v in reversed(sig[i:i + 3])], 64)
                     for i in range(0, 32, 3)]
        ins = [LC({v: 1}) for v in pub["t"]] + [LC({pub["mhash"]: 1})] + sig_elems \
            + [LC({wit["r"]: 1})]
        c = g_sponge_hash(cs, ins, Domain.COMMIT)
        assert_equal(cs, LC({c: 1}), LC({pub["c"]: 1}))
    cs.compile()
    return GtwsCircuit(cs, pub, wit)


@dataclass(frozen=True)
class GtwsPK:
    issuer: rsa.RsaPublicKey
    backend: ProofBackendKey

    @property
    def circuit(self) -> GtwsCircuit:
        return build_gtws_ckt()


@dataclass(frozen=True)
class GtwsSignature:
    c: int
    pi: bytes


def demo_issuer(seed: int = 7) -> rsa.RsaPrivateKey:
    return seeded_key(seed)


def gtws_gen(issuer: rsa.RsaPublicKey, backend: ProofBackendKey | None = None) -> GtwsPK:
    return GtwsPK(issuer, backend or ProofBackendKey.transparent())


def _public(pk: GtwsPK, t: bytes, message: bytes, c: int) -> list:
    if len(t) > MAX_TAG:
        raise TagTooLong(f"tags are at most {MAX_TAG} bytes")
    return grsa.to_limbs(pk.issuer.n) + pack_string(t, MAX_TAG) + [hash_bytes(message), c % P]


def predicate(pk: GtwsPK, t: bytes, w: bytes) -> bool:
    return len(t) <= MAX_TAG and rsa.verify(pk.issuer, t, w)


def gtws_sign(t: bytes, pk: GtwsPK, w: bytes, message: bytes, r: int | None = None) -> GtwsSignature:
    if not predicate(pk, t, w):
        raise PredicateFalse("w is not a signature on t")
    r = secrets.randbelow(P) if r is None else r
    mhash = hash_bytes(message)
    c = commit(t, mhash, w, r)
    ckt = pk.circuit
    z = ckt.cs.new_assignment()
    z.buf.set_many(0, _public(pk, t, message, c))
    z.set_many(ckt.wit["t"], list(t) + [0] * (MAX_TAG - len(t)))
    z.set_many(ckt.wit["sig"], grsa.to_limbs(int.from_bytes(w, "big")))
    z[ckt.wit["r"]] = r % P
    ckt.cs.solve(z)
    try:
        return GtwsSignature(c, backends.prove(pk.backend, ckt.cs, z))
    except UnsatisfiedWitness as exc:
        raise BackendFailure(str(exc)) from exc


def gtws_verify(t: bytes, pk: GtwsPK, message: bytes, sig: GtwsSignature) -> int:
    try:
        public = _public(pk, t, message, sig.c)
    except TagTooLong:
        return 0
    return backends.verify(pk.backend, pk.circuit.cs, public, sig.pi)
