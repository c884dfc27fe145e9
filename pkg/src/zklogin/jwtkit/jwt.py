"""Compact RS256 JWTs: issuing, verifying, and locating claims in the payload."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from functools import cached_property

from . import b64, rsa

L_MAX = 1600
MANDATORY = ("sub", "aud", "iss", "nonce")
WHITESPACE = b" \t\n\r"


class MissingMandatoryClaim(ValueError):
    pass


class TokenTooLong(ValueError):
    pass


class JwtMalformed(ValueError):
    pass


class ClaimAbsent(KeyError):
    pass


class ClaimNested(KeyError):
    pass


@dataclass(frozen=True)
class Jwt:
    header_b64: str
    payload_b64: str
    sig_b64: str

    @classmethod
    def parse(cls, token: str) -> Jwt:
        parts = token.strip().split(".")
        if len(parts) != 3:
            raise JwtMalformed("a compact JWT has three segments")
        jwt = cls(*parts)
        try:
            jwt.header, jwt.payload  # noqa: B018 - decode eagerly to validate
        except (ValueError, UnicodeDecodeError) as exc:
            raise JwtMalformed(str(exc)) from exc
        return jwt

    @property
    def compact(self) -> str:
        return f"{self.header_b64}.{self.payload_b64}.{self.sig_b64}"

    def __str__(self):
        return self.compact

    @property
    def signing_input(self) -> bytes:
        return f"{self.header_b64}.{self.payload_b64}".encode("ascii")

    @cached_property
    def payload_bytes(self) -> bytes:
        return b64.decode(self.payload_b64)

    @cached_property
    def header(self) -> dict:
        h = json.loads(b64.decode(self.header_b64))
        if not isinstance(h, dict):
            raise JwtMalformed("header is not an object")
        return h

    @cached_property
    def payload(self) -> dict:
        c = json.loads(self.payload_bytes)
        if not isinstance(c, dict):
            raise JwtMalformed("payload is not an object")
        return c

    @property
    def kid(self):
        return self.header.get("kid")

    @property
    def signature(self) -> bytes:
        return b64.decode(self.sig_b64)


def _dump_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"claim values are strings or booleans, not {type(v).__name__}")


def serialize_claims(claims: dict, whitespace_seed: int | None = None) -> bytes:
    """Compact JSON; with a seed, inject runs of up to two whitespace chars
    around each colon and before each delimiter."""
    rng = random.Random(whitespace_seed) if whitespace_seed is not None else None

    def ws() -> str:
        if rng is None:
            return ""
        return "".join(rng.choice(" \t\n\r") for _ in range(rng.randrange(3)))

    parts = [f"{json.dumps(k)}{ws()}:{ws()}{_dump_value(v)}{ws()}" for k, v in claims.items()]
    return ("{" + ",".join(parts) + "}").encode("ascii")


def header_b64_for(kid: str) -> str:
    """The fixed header every token signed under ``kid`` carries."""
    header = json.dumps({"alg": "RS256", "kid": kid, "typ": "JWT"}, separators=(",", ":"))
    return b64.encode(header.encode("ascii"))


def jwt_issue(key: rsa.RsaPrivateKey, kid: str, claims: dict, *,
              whitespace_seed: int | None = None, max_len: int = L_MAX) -> Jwt:
    missing = [c for c in MANDATORY if c not in claims]
    if missing:
        raise MissingMandatoryClaim(", ".join(missing))
    h64 = header_b64_for(kid)
    p64 = b64.encode(serialize_claims(claims, whitespace_seed))
    if len(h64) + 1 + len(p64) > max_len:
        raise TokenTooLong(f"signing input exceeds {max_len} bytes")
    sig = rsa.sign(key, f"{h64}.{p64}".encode("ascii"))
    return Jwt(h64, p64, b64.encode(sig))


def jwt_verify(pub: rsa.RsaPublicKey, jwt: Jwt) -> int:
    try:
        if jwt.header.get("alg") != "RS256":
            return 0
        sig = jwt.signature
    except (ValueError, UnicodeDecodeError):
        return 0
    return int(rsa.verify(pub, jwt.signing_input, sig))


# -- claim spans --------------------------------------------------------------


@dataclass(frozen=True)
class ClaimSpan:
    """Where a top-level claim sits in the decoded payload.

    ``start`` is the key's opening quote, ``length`` runs through the
    following ',' or '}', and ``colon`` is the colon offset from ``start``.
    ``raw`` is the value text as written (string quotes removed, escapes
    kept) and ``value`` the decoded JSON value.
    """

    name: str
    value: object
    raw: bytes
    start: int
    length: int
    colon: int

    @property
    def text(self) -> bytes:
        return self.raw


def _skip_ws(s: bytes, k: int) -> int:
    while k < len(s) and s[k] in WHITESPACE:
        k += 1
    return k


def _string_end(s: bytes, k: int) -> int:
    """Index just past the string literal opening at s[k]."""
    k += 1
    while k < len(s):
        c = s[k]
        if c == 0x5C:
            k += 2
            continue
        if c == 0x22:
            return k + 1
        k += 1
    raise JwtMalformed("unterminated string")


def _value_end(s: bytes, k: int) -> int:
    c = s[k:k + 1]
    if c == b'"':
        return _string_end(s, k)
    if c in (b"{", b"["):
        depth = 0
        while k < len(s):
            ch = s[k]
            if ch == 0x22:
                k = _string_end(s, k)
                continue
            if ch in (0x7B, 0x5B):
                depth += 1
            elif ch in (0x7D, 0x5D):
                depth -= 1
                if depth == 0:
                    return k + 1
            k += 1
        raise JwtMalformed("unbalanced brackets")
    e = k
    while e < len(s) and s[e] not in b",}] \t\n\r":
        e += 1
    if e == k:
        raise JwtMalformed(f"missing value at {k}")
    return e


def top_level_members(payload: bytes) -> list:
    """(key, key_start, colon, value_start, value_end, delimiter) per member."""
    out = []
    k = _skip_ws(payload, 0)
    if payload[k:k + 1] != b"{":
        raise JwtMalformed("payload is not an object")
    k = _skip_ws(payload, k + 1)
    if payload[k:k + 1] == b"}":
        return out
    while True:
        if payload[k:k + 1] != b'"':
            raise JwtMalformed(f"expected a key at {k}")
        ke = _string_end(payload, k)
        key = json.loads(payload[k:ke])
        colon = _skip_ws(payload, ke)
        if payload[colon:colon + 1] != b":":
            raise JwtMalformed(f"expected ':' at {colon}")
        vs = _skip_ws(payload, colon + 1)
        ve = _value_end(payload, vs)
        d = _skip_ws(payload, ve)
        if payload[d:d + 1] not in (b",", b"}"):
            raise JwtMalformed(f"expected ',' or '}}' at {d}")
        out.append((key, k, colon, vs, ve, d))
        if payload[d:d + 1] == b"}":
            return out
        k = _skip_ws(payload, d + 1)


def _nested_has(obj, name) -> bool:
    if isinstance(obj, dict):
        return any(k == name or _nested_has(v, name) for k, v in obj.items())
    if isinstance(obj, list):
        return any(_nested_has(v, name) for v in obj)
    return False


def claim_get(jwt_or_payload, name: str) -> ClaimSpan:
    payload = jwt_or_payload.payload_bytes if isinstance(jwt_or_payload, Jwt) else bytes(jwt_or_payload)
    found = None
    for key, ks, colon, vs, ve, d in top_level_members(payload):
        if key == name:
            found = (ks, colon, vs, ve, d)  # later duplicates win, as in json.loads
    if found is None:
        try:
            doc = json.loads(payload)
        except ValueError as exc:
            raise JwtMalformed(str(exc)) from exc
        if any(_nested_has(v, name) for v in doc.values()):
            raise ClaimNested(name)
        raise ClaimAbsent(name)
    ks, colon, vs, ve, d = found
    text = payload[vs:ve]
    value = json.loads(text)
    raw = text[1:-1] if text[:1] == b'"' else text
    return ClaimSpan(name, value, raw, ks, d - ks + 1, colon - ks)
