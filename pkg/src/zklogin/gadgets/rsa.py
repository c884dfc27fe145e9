"""RSA-2048 PKCS#1 v1.5 / SHA-256 verification over 64-bit limbs.

Each modular multiplication a*b = q*n + r is checked in three parts: the
product polynomials are pinned by evaluation at 63 points, the quotient and
remainder limbs are range-checked, and a signed carry chain shows that the
difference of the two products minus r vanishes as an integer.
"""

from __future__ import annotations

from collections.abc import Sequence

from ..csys import LC, ONE, ConstraintSystem
from ..field import P
from .core import as_lc, assert_equal, decompose

LIMBS = 32
LIMB_BITS = 64
_MASK = (1 << LIMB_BITS) - 1
CARRY_OFFSET = 1 << 75
CARRY_BITS = 76

DIGEST_INFO_SHA256 = bytes.fromhex("3031300d060960864801650304020105000420")


def pkcs1_v15_encode(digest: bytes, k: int = 256) -> bytes:
    if len(digest) != 32:
        raise ValueError("expected a SHA-256 digest")
    t = DIGEST_INFO_SHA256 + digest
    return b"\x00\x01" + b"\xff" * (k - len(t) - 3) + b"\x00" + t


def to_limbs(x: int) -> list:
    return [(x >> (LIMB_BITS * i)) & _MASK for i in range(LIMBS)]


def from_limbs(limbs) -> int:
    return sum(int(v) << (LIMB_BITS * i) for i, v in enumerate(limbs))


def _powers(x: int, n: int) -> list:
    out, acc = [], 1
    for _ in range(n):
        out.append(acc)
        acc = acc * x % P
    return out


def _poly_lc(vars_: Sequence, pw: list) -> LC:
    out = LC()
    for v, w in zip(vars_, pw):
        for k, c in as_lc(v).items():
            out[k] = (out.get(k, 0) + c * w) % P
    return out


def _mulmod_hint(*vals):
    a, b, n = vals[:LIMBS], vals[LIMBS:2 * LIMBS], vals[2 * LIMBS:]
    ai, bi, ni = from_limbs(a), from_limbs(b), from_limbs(n)
    q, r = divmod(ai * bi, ni) if ni else (0, 0)
    ql, rl = to_limbs(q) if q < 1 << 2048 else [0] * LIMBS, to_limbs(r)
    deg = 2 * LIMBS - 1
    pab = [0] * deg
    pqn = [0] * deg
    for i in range(LIMBS):
        for j in range(LIMBS):
            pab[i + j] += a[i] * b[j]
            pqn[i + j] += ql[i] * n[j]
    return ql + rl + pab + pqn


def modmul(cs: ConstraintSystem, a: Sequence, b: Sequence, n: Sequence) -> list:
    """Limbs of a*b mod n (remainder limbs are range-checked, not reduced below n)."""
    deg = 2 * LIMBS - 1
    with cs.region("modmul"):
        outs = cs.hint(_mulmod_hint, [as_lc(x) for x in (*a, *b, *n)], 2 * LIMBS + 2 * deg)
        q, r = outs[:LIMBS], outs[LIMBS:2 * LIMBS]
        pab, pqn = outs[2 * LIMBS:2 * LIMBS + deg], outs[2 * LIMBS + deg:]
        for v in q + r:
            decompose(cs, LC({v: 1}), LIMB_BITS)
        for x in range(deg):
            pw = _powers(x, deg)
            cs.enforce(_poly_lc(a, pw), _poly_lc(b, pw), _poly_lc([LC({v: 1}) for v in pab], pw))
            cs.enforce(_poly_lc([LC({v: 1}) for v in q], pw), _poly_lc(n, pw),
                       _poly_lc([LC({v: 1}) for v in pqn], pw))
        prev = None
        shift = 1 << LIMB_BITS
        for t in range(deg):
            d = LC({pab[t]: 1, pqn[t]: -1})
            if t < LIMBS:
                d[r[t]] = -1
            if prev is not None:
                d[prev] = 1
            if t == deg - 1:
                cs.enforce(d, LC({ONE: 1}), LC())
                break
            c = cs.alloc()
            cs.enforce(d, LC({ONE: 1}), LC({c: shift}), solve=c)
            decompose(cs, LC({c: 1, ONE: CARRY_OFFSET}), CARRY_BITS)
            prev = c
    return [LC({v: 1}) for v in r]


def modexp_65537(cs: ConstraintSystem, base: Sequence, n: Sequence) -> list:
    x = list(base)
    for _ in range(16):
        x = modmul(cs, x, x, n)
    return modmul(cs, x, base, n)


def encoded_limbs(digest_words: Sequence) -> list:
    """PKCS#1 v1.5 encoded message as 32 limb LCs; the low 4 carry the digest."""
    const = from_limbs(to_limbs(int.from_bytes(pkcs1_v15_encode(b"\0" * 32), "big")))
    limbs = []
    for k in range(LIMBS):
        if k < 4:
            hi, lo = as_lc(digest_words[7 - 2 * k - 1]), as_lc(digest_words[7 - 2 * k])
            limbs.append(hi * (1 << 32) + lo)
        else:
            limbs.append(LC.const((const >> (LIMB_BITS * k)) & _MASK))
    return limbs


def g_rs256_verify(cs: ConstraintSystem, sig: Sequence, modulus: Sequence,
                   digest_words: Sequence, check_sig_range: bool = True) -> None:
    """Constrain sig^65537 mod modulus to equal the PKCS#1 v1.5 encoding of the digest.

    ``sig`` and ``modulus`` are 32 little-endian 64-bit limbs; ``digest_words``
    are the eight big-endian 32-bit words of the SHA-256 digest.
    """
    sig = [as_lc(s) for s in sig]
    if check_sig_range:
        for s in sig:
            decompose(cs, s, LIMB_BITS)
    out = modexp_65537(cs, sig, [as_lc(m) for m in modulus])
    for got, want in zip(out, encoded_limbs(digest_words)):
        assert_equal(cs, got, want)
