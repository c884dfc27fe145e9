"""RSA-2048 keys (e = 65537) and RSASSA-PKCS1-v1_5 with SHA-256."""

from __future__ import annotations

import hashlib
import random
import secrets
from dataclasses import dataclass, field

E = 65537
DIGEST_INFO_SHA256 = bytes.fromhex("3031300d060960864801650304020105000420")
MR_ROUNDS = 64

_SMALL_PRIMES = [p for p in range(3, 2000) if all(p % d for d in range(2, int(p ** 0.5) + 1))]


def _randbits(rng, k: int) -> int:
    return rng.getrandbits(k) if rng is not None else secrets.randbits(k)


def is_probable_prime(n: int, rounds: int = MR_ROUNDS, rng=None) -> bool:
    """Miller-Rabin with random bases."""
    if n < 2:
        return False
    for p in [2] + _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = 2 + _randbits(rng, n.bit_length() + 8) % (n - 3)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _prime(bits: int, rng) -> int:
    while True:
        c = _randbits(rng, bits) | (3 << (bits - 2)) | 1
        if (c - 1) % E == 0:
            continue
        if is_probable_prime(c, rng=rng):
            return c


@dataclass(frozen=True)
class RsaPublicKey:
    n: int
    e: int = E

    @property
    def size(self) -> int:
        return (self.n.bit_length() + 7) // 8


@dataclass(frozen=True)
class RsaPrivateKey:
    p: int
    q: int
    d: int = field(repr=False)
    n: int = 0
    dp: int = field(default=0, repr=False)
    dq: int = field(default=0, repr=False)
    qinv: int = field(default=0, repr=False)

    @property
    def public(self) -> RsaPublicKey:
        return RsaPublicKey(self.n)


def generate(bits: int = 2048, seed: int | None = None) -> RsaPrivateKey:
    """Fresh key pair; ``seed`` makes generation reproducible (tests only)."""
    rng = random.Random(seed) if seed is not None else None
    while True:
        p = _prime(bits // 2, rng)
        q = _prime(bits // 2, rng)
        if p == q:
            continue
        n = p * q
        if n.bit_length() != bits:
            continue
        phi = (p - 1) * (q - 1)
        d = pow(E, -1, phi)
        if p < q:
            p, q = q, p
        return RsaPrivateKey(p, q, d, n, d % (p - 1), d % (q - 1), pow(q, -1, p))


def emsa_pkcs1_v15(message: bytes, k: int) -> int:
    t = DIGEST_INFO_SHA256 + hashlib.sha256(message).digest()
    if k < len(t) + 11:
        raise ValueError("modulus too short")
    return int.from_bytes(b"\x00\x01" + b"\xff" * (k - len(t) - 3) + b"\x00" + t, "big")


def sign(key: RsaPrivateKey, message: bytes) -> bytes:
    k = (key.n.bit_length() + 7) // 8
    m = emsa_pkcs1_v15(message, k)
    s1 = pow(m % key.p, key.dp, key.p)
    s2 = pow(m % key.q, key.dq, key.q)
    h = key.qinv * (s1 - s2) % key.p
    s = s2 + h * key.q
    if pow(s, E, key.n) != m:  # guard against a faulty CRT computation
        raise ArithmeticError("signature self-check failed")
    return s.to_bytes(k, "big")


def verify(pub: RsaPublicKey, message: bytes, sig: bytes) -> bool:
    k = pub.size
    if len(sig) != k:
        return False
    s = int.from_bytes(sig, "big")
    if s >= pub.n:
        return False
    return pow(s, pub.e, pub.n) == emsa_pkcs1_v15(message, k)
