"""Randomized differential runs of the circuit gadgets against reference
implementations (hashlib, cryptography, the base64 module, json).

Each runner returns ``(cases, mismatches)`` where ``mismatches`` lists
human-readable descriptions of disagreeing cases.
"""

from __future__ import annotations

import base64
import functools
import hashlib
import json
import random
import re

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import padding
from cryptography.hazmat.primitives.asymmetric import rsa as crsa

from zklogin.csys import LC, ConstraintSystem
from zklogin.gadgets.base64 import g_base64url_decode
from zklogin.gadgets.core import byte_input
from zklogin.gadgets.json import g_json_claim, g_top_level
from zklogin.gadgets.rsa import g_rs256_verify, to_limbs
from zklogin.gadgets.sha256 import g_sha256

# -- SHA-256 ------------------------------------------------------------------------

SHA_MAX = 119  # two compression blocks


@functools.cache
def sha_circuit():
    cs = ConstraintSystem()
    length = cs.alloc(public=True)
    msg = [byte_input(cs, v) for v in cs.alloc_many(SHA_MAX)]
    out = g_sha256(cs, msg, LC({length: 1}), SHA_MAX)
    cs.compile()
    return cs, length, msg, out


def sha_digest(data: bytes):
    """(digest or None, satisfied) from the circuit."""
    cs, length, msg, out = sha_circuit()
    z = cs.new_assignment()
    z[length] = len(data)
    z.set_many([b.v for b in msg], list(data.ljust(SHA_MAX, b"\0")))
    cs.solve(z)
    ok = cs.satisfied(z)
    return b"".join(z[w].to_bytes(4, "big") for w in out.digest), bool(ok)


def sha_differential(n: int, seed: int = 0):
    rng = random.Random(seed)
    bad = []
    # every length at least once, then random ones
    lengths = list(range(SHA_MAX + 1)) + [rng.randrange(SHA_MAX + 1) for _ in range(n)]
    lengths = lengths[:max(n, 1)]
    for ln in lengths:
        data = rng.randbytes(ln)
        got, ok = sha_digest(data)
        want = hashlib.sha256(data).digest()
        if not ok or got != want:
            bad.append(f"len={ln} data={data.hex()} ok={ok}")
    return len(lengths), bad


# -- RSA PKCS#1 v1.5 / SHA-256 --------------------------------------------------------


@functools.cache
def rsa_circuit():
    cs = ConstraintSystem()
    modulus = cs.alloc_many(32, public=True)
    words = cs.alloc_many(8, public=True)
    sig = cs.alloc_many(32)
    g_rs256_verify(cs, [LC({v: 1}) for v in sig], [LC({v: 1}) for v in modulus],
                   [LC({v: 1}) for v in words])
    cs.compile()
    return cs, modulus, words, sig


def rsa_circuit_accepts(n: int, digest: bytes, sig: bytes) -> bool:
    cs, modulus, words, sigv = rsa_circuit()
    s = int.from_bytes(sig, "big")
    if s >= 1 << 2048:
        return False
    z = cs.new_assignment()
    z.set_many(modulus, to_limbs(n))
    z.set_many(words, [int.from_bytes(digest[4 * k:4 * k + 4], "big") for k in range(8)])
    z.set_many(sigv, to_limbs(s))
    cs.solve(z)
    return bool(cs.satisfied(z))


@functools.cache
def oracle_keys(count: int = 3):
    return [crsa.generate_private_key(public_exponent=65537, key_size=2048) for _ in range(count)]


def _oracle_accepts(pub, msg: bytes, sig: bytes) -> bool:
    try:
        pub.verify(sig, msg, padding.PKCS1v15(), hashes.SHA256())
        return True
    except InvalidSignature:
        return False


def rsa_differential(n: int, seed: int = 0):
    """Honest signatures, flipped bits, wrong messages and wrong keys."""
    rng = random.Random(seed)
    keys = oracle_keys()
    bad = []
    accepted = 0
    for case in range(n):
        key = rng.choice(keys)
        msg = rng.randbytes(rng.randrange(1, 64))
        sig = key.sign(msg, padding.PKCS1v15(), hashes.SHA256())
        kind = case % 4
        check_msg, check_key = msg, key
        if kind == 1:
            b = bytearray(sig)
            pos = rng.randrange(len(b))
            b[pos] ^= 1 << rng.randrange(8)
            sig = bytes(b)
        elif kind == 2:
            check_msg = msg + b"x"
        elif kind == 3:
            check_key = rng.choice([k for k in keys if k is not key])
        pub = check_key.public_key()
        want = _oracle_accepts(pub, check_msg, sig)
        got = rsa_circuit_accepts(pub.public_numbers().n, hashlib.sha256(check_msg).digest(), sig)
        accepted += want
        if got != want:
            bad.append(f"case={case} kind={kind} oracle={want} circuit={got}")
    return n, bad, accepted


# -- base64url ----------------------------------------------------------------------

B64_CHARS = 120
_ALPHABET_RE = re.compile(rb"[A-Za-z0-9_-]*\x00*")


@functools.cache
def b64_circuit():
    cs = ConstraintSystem()
    chars = [byte_input(cs, v) for v in cs.alloc_many(B64_CHARS)]
    out = g_base64url_decode(cs, chars, allow_nul_tail=True)
    cs.compile()
    return cs, chars, out


def b64_decode_circuit(text: bytes):
    """(decoded bytes, satisfied) for a NUL-padded buffer of B64_CHARS bytes."""
    cs, chars, out = b64_circuit()
    z = cs.new_assignment()
    z.set_many([c.v for c in chars], list(text.ljust(B64_CHARS, b"\0")))
    cs.solve(z)
    return bytes(z[b.v] for b in out), bool(cs.satisfied(z))


def b64_differential(n: int, seed: int = 0):
    rng = random.Random(seed)
    bad = []
    invalid_pool = [c for c in range(1, 256) if not re.fullmatch(rb"[A-Za-z0-9_-]", bytes([c]))]
    for case in range(n):
        data = rng.randbytes(rng.randrange(0, 91))
        text = base64.urlsafe_b64encode(data).rstrip(b"=")
        if case % 3 == 2:
            t = bytearray(text.ljust(B64_CHARS, b"\0"))
            # corrupt inside the text, or put text after the NUL run
            pos = rng.randrange(len(text)) if text and rng.random() < 0.7 else rng.randrange(B64_CHARS)
            t[pos] = rng.choice(invalid_pool)
            buf = bytes(t)
            valid = _ALPHABET_RE.fullmatch(buf) is not None
            _, ok = b64_decode_circuit(buf)
            if ok != valid:
                bad.append(f"case={case} buf={buf!r} oracle_valid={valid} circuit={ok}")
            continue
        got, ok = b64_decode_circuit(text)
        want = base64.urlsafe_b64decode(text + b"=" * (-len(text) % 4))
        if not ok or got[:len(want)] != want or any(got[len(want):]):
            bad.append(f"case={case} text={text!r} ok={ok}")
    return n, bad


# -- JSON claim extraction ---------------------------------------------------------

JSON_N = 200
JSON_MAX_VALUE = 32
KEYS = (b'"sub"', b'"aud"', b'"email_verified"')
_FILLER_KEYS = ("iss", "nonce", "name", "x", "k\"q", "sub_", "s", "tags", "obj")


@functools.cache
def json_circuit(key: bytes, kind: str | None):
    cs = ConstraintSystem()
    i, ln, j = cs.alloc_many(3, public=True)
    S = [byte_input(cs, v) for v in cs.alloc_many(JSON_N)]
    g_top_level(cs, S, LC({i: 1}))
    c = g_json_claim(cs, S, LC({i: 1}), LC({ln: 1}), LC({j: 1}), max_value=JSON_MAX_VALUE,
                     key=key, kind=kind)
    cs.compile()
    return cs, (i, ln, j), S, c


def json_extract(payload: bytes, key: bytes, hint, kind=None):
    """(raw value bytes or True/False, satisfied)."""
    cs, (i, ln, j), S, c = json_circuit(key, kind)
    z = cs.new_assignment()
    z[i], z[ln], z[j] = hint
    z.set_many([b.v for b in S], list(payload.ljust(JSON_N, b"\0")))
    cs.solve(z)
    ok = bool(cs.satisfied(z))
    if c.is_bool.evaluate(z):
        return bool(z[c.is_true]), ok
    return bytes(z[b.v] for b in c.value)[:z[c.value_len]], ok


def _rand_string(rng, max_len):
    parts = []
    pool = ['a', 'Z', '0', ' ', '"', '\\', '/', '\n', '\t', '{', '}', ',', ':', 'é', '☃']
    for _ in range(rng.randrange(max_len + 1)):
        parts.append(rng.choice(pool) if rng.random() < 0.4 else chr(rng.randrange(33, 127)))
    return "".join(parts)


def _rand_value(rng, depth=0):
    r = rng.random()
    if r < 0.45:
        return _rand_string(rng, 10)
    if r < 0.6:
        return rng.choice([True, False])
    if r < 0.7:
        return rng.randrange(-10 ** 6, 10 ** 6)
    if r < 0.8 and depth < 2:
        return [_rand_value(rng, depth + 1) for _ in range(rng.randrange(3))]
    if depth < 2:
        return {rng.choice(["sub", "aud", "a", "email_verified"]): _rand_value(rng, depth + 1)}
    return None


def _ws(rng):
    return "".join(rng.choice(" \t\n\r") for _ in range(rng.choice((0, 0, 1, 2))))


def _dump(rng, claims: dict) -> bytes:
    """Serialize with random (bounded) whitespace around colons and commas."""
    members = []
    for k, v in claims.items():
        val = json.dumps(v, ensure_ascii=rng.random() < 0.5)
        members.append(_ws(rng) + json.dumps(k) + _ws(rng) + ":" + _ws(rng) + val + _ws(rng))
    return ("{" + ",".join(members) + "}").encode()


def _member_hint(payload: bytes, key: bytes):
    """Hint (i, l, j) for the top-level member with this key, located by
    decoding progressively longer prefixes with the reference parser."""
    dec = json.JSONDecoder()
    text = payload.decode()
    pos = 1
    while True:
        while text[pos] in " \t\n\r":
            pos += 1
        _, kend = dec.raw_decode(text, pos)
        colon = text.index(":", kend)
        vstart = colon + 1
        while text[vstart] in " \t\n\r":
            vstart += 1
        _, vend = dec.raw_decode(text, vstart)
        d = vend
        while text[d] in " \t\n\r":
            d += 1
        b_i = len(text[:pos].encode())
        if text[pos:kend].encode() == key:
            return b_i, len(text[:d + 1].encode()) - b_i, len(text[:colon].encode()) - b_i
        pos = d + 1


def json_differential(n: int, seed: int = 0):
    """Honest hints must extract exactly the reference value; perturbed hints
    must either be rejected or still extract the reference value."""
    rng = random.Random(seed)
    bad = []
    cases = 0
    while cases < n:
        key = rng.choice(KEYS)
        name = json.loads(key)
        claims = {}
        for fk in rng.sample(_FILLER_KEYS, rng.randrange(4)):
            claims[fk] = _rand_value(rng)
        target = rng.choice([True, False]) if name == "email_verified" else _rand_string(rng, 8)
        claims[name] = target
        items = list(claims.items())
        rng.shuffle(items)
        payload = _dump(rng, dict(items))
        if len(payload) > JSON_N:
            continue
        ref = json.loads(payload)[name]
        hint = _member_hint(payload, key)
        kind = rng.choice([None, "boolean" if isinstance(ref, bool) else "string"])
        got, ok = json_extract(payload, key, hint, kind)
        cases += 1
        if not ok:
            bad.append(f"honest rejected: {payload!r} hint={hint}")
            continue
        if _decoded(got) != ref:
            bad.append(f"honest mismatch: {payload!r} got={got!r} ref={ref!r}")
        # perturbed hints, checked for soundness against the reference value
        for _ in range(2):
            h = list(hint)
            h[rng.randrange(3)] += rng.choice((-2, -1, 1, 2, 5))
            if min(h) < 0 or h[0] + h[1] > JSON_N:
                continue
            got2, ok2 = json_extract(payload, key, tuple(h), kind)
            cases += 1
            if ok2 and _decoded(got2) != ref:
                bad.append(f"unsound: {payload!r} hint={h} got={got2!r} ref={ref!r}")
    return cases, bad


def _decoded(raw):
    if isinstance(raw, bool):
        return raw
    try:
        return json.loads(b'"' + raw + b'"')
    except (ValueError, UnicodeDecodeError):
        return ("<undecodable>", raw)


# -- slicing --------------------------------------------------------------------------


def slice_exhaustive(max_n: int, slicer, seed: int = 0):
    """Every n <= max_n, every width m <= n, every offset 0..n+1.

    In-range offsets must reproduce ``S[i:i+m]``; out-of-range ones must be
    rejected. Returns ``(evaluations, failures)``.
    """
    from zklogin.gadgets.core import as_lc

    rng = random.Random(seed)
    bad = []
    count = 0
    for n in range(1, max_n + 1):
        data = rng.randbytes(n)
        for m in range(n + 1):
            cs = ConstraintSystem()
            iv = cs.alloc(public=True)
            S = [byte_input(cs, v) for v in cs.alloc_many(n)]
            out = [as_lc(o) for o in slicer(cs, S, LC({iv: 1}), m)]
            cs.compile()
            for i in range(n + 2):
                z = cs.new_assignment()
                z[iv] = i
                z.set_many([b.v for b in S], data)
                cs.solve(z)
                ok = bool(cs.satisfied(z))
                count += 1
                if i <= n - m:
                    got = bytes(o.evaluate(z) for o in out)
                    if not ok or got != data[i:i + m]:
                        bad.append((n, m, i, ok))
                elif ok:
                    bad.append((n, m, i, ok))
    return count, bad


def slice_cost(slicer, n: int = 1600, m: int = 100) -> int:
    cs = ConstraintSystem()
    iv = cs.alloc(public=True)
    S = [byte_input(cs, v) for v in cs.alloc_many(n)]
    before = cs.num_constraints
    slicer(cs, S, LC({iv: 1}), m)
    return cs.num_constraints - before


def base64_cost_per_char(n_chars: int = 400, allow_nul_tail: bool = False) -> float:
    cs = ConstraintSystem()
    chars = [byte_input(cs, v) for v in cs.alloc_many(n_chars)]
    before = cs.num_constraints
    g_base64url_decode(cs, chars, allow_nul_tail=allow_nul_tail)
    return (cs.num_constraints - before) / n_chars
