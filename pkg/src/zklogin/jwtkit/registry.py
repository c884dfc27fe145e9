"""Published provider keys with epoch-based freshness, and a mock OpenID provider."""

from __future__ import annotations

import hashlib
import json
import secrets
import threading
from dataclasses import dataclass, field
from functools import lru_cache

from . import b64, rsa
from .jwt import Jwt, jwt_issue

DEFAULT_WINDOW = 2  # epochs a published key stays current


class UnknownKid(KeyError):
    pass


class StaleKey(LookupError):
    pass


class UnknownIssuer(KeyError):
    pass


@dataclass(frozen=True)
class Jwk:
    kid: str
    iss: str
    n: int
    published_epoch: int
    e: int = rsa.E

    @property
    def public(self) -> rsa.RsaPublicKey:
        return rsa.RsaPublicKey(self.n, self.e)

    def to_json(self) -> dict:
        return {"kty": "RSA", "n": b64.encode(self.n.to_bytes(256, "big")),
                "e": b64.encode(self.e.to_bytes(3, "big")), "kid": self.kid}


class JwkRegistry:
    """kid -> Jwk map; a key is current at T_cur iff published_epoch >= T_cur - window."""

    def __init__(self, window: int = DEFAULT_WINDOW):
        self.window = window
        self._keys: dict = {}
        self._by_modulus: dict = {}
        self._lock = threading.RLock()

    def publish(self, jwk: Jwk) -> Jwk:
        with self._lock:
            old = self._keys.get(jwk.kid)
            if old is not None and old.n != jwk.n:
                raise ValueError(f"kid {jwk.kid} already names a different key")
            owner = self._by_modulus.get(jwk.n)
            if owner is not None and owner != jwk.kid:
                raise ValueError("key already published under another kid")
            self._keys[jwk.kid] = jwk
            self._by_modulus[jwk.n] = jwk.kid
        return jwk

    def get(self, kid: str) -> Jwk:
        """The key for ``kid`` regardless of age."""
        with self._lock:
            jwk = self._keys.get(kid)
        if jwk is None:
            raise UnknownKid(kid)
        return jwk

    def lookup(self, kid: str, t_cur: int) -> Jwk:
        jwk = self.get(kid)
        if jwk.published_epoch < t_cur - self.window:
            raise StaleKey(f"{kid} published at {jwk.published_epoch}, now {t_cur}")
        return jwk

    def current(self, iss: str, t_cur: int) -> list:
        with self._lock:
            keys = list(self._keys.values())
        return [k for k in keys if k.iss == iss and k.published_epoch >= t_cur - self.window]

    def issuers(self) -> set:
        with self._lock:
            return {k.iss for k in self._keys.values()}

    def __contains__(self, kid):
        with self._lock:
            return kid in self._keys


@lru_cache(maxsize=32)
def seeded_key(seed: int) -> rsa.RsaPrivateKey:
    """Reproducible key for tests and demos; generation is slow so results are cached."""
    return rsa.generate(seed=seed)


@dataclass
class MockOP:
    """An issuer that signs JWTs and publishes its rotating keys."""

    iss: str
    registry: JwkRegistry
    key_seed: int | None = None
    pairwise: bool = False
    _key: rsa.RsaPrivateKey | None = field(default=None, repr=False)
    _jwk: Jwk | None = None
    _rotations: int = 0

    def rotate(self, epoch: int) -> Jwk:
        if self.key_seed is None:
            key = rsa.generate()
            kid = secrets.token_hex(8)
        else:
            s = self.key_seed * 1000 + self._rotations
            key = seeded_key(s)
            kid = hashlib.sha256(f"{self.iss}/{s}".encode()).hexdigest()[:16]
        self._rotations += 1
        self._key = key
        self._jwk = self.registry.publish(Jwk(kid, self.iss, key.n, epoch))
        return self._jwk

    @property
    def jwk(self) -> Jwk:
        if self._jwk is None:
            raise RuntimeError("provider has no key yet; call rotate(epoch)")
        return self._jwk

    def subject(self, user: str, aud: str) -> str:
        if not self.pairwise:
            return user
        return str(int.from_bytes(hashlib.sha256(f"{aud}|{user}".encode()).digest()[:9], "big"))

    def issue(self, claims: dict, whitespace_seed: int | None = None) -> Jwt:
        full = dict(claims)
        full.setdefault("iss", self.iss)
        return jwt_issue(self._key or self._need_key(), self.jwk.kid, full,
                         whitespace_seed=whitespace_seed)

    def _need_key(self):
        raise RuntimeError("provider has no key yet; call rotate(epoch)")

    def jwks(self) -> str:
        return json.dumps({"keys": [self.jwk.to_json()]})
