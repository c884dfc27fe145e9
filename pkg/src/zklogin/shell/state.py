"""On-disk state for the CLI: provider keys, published JWKs, wallet, backend key."""

from __future__ import annotations

import json
import os
from pathlib import Path

from ..backends import ProofBackendKey
from ..jwtkit import rsa
from ..jwtkit.registry import Jwk, JwkRegistry, MockOP
from ..proto.address import SaltSeed
from ..proto.zklogin import ZkLoginPK, gen
from .config import Config


class StateError(RuntimeError):
    pass


def _write_private(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w") as f:
        f.write(text)


class Store:
    def __init__(self, config: Config):
        self.config = config
        self.root = config.state

    # provider keys and JWKs

    def _jwks_path(self) -> Path:
        return self.root / "jwks.json"

    def jwks(self) -> list:
        p = self._jwks_path()
        if not p.exists():
            return []
        allowed = set(self.config.issuers)
        return [Jwk(d["kid"], d["iss"], int(d["n"], 16), d["published_epoch"])
                for d in json.loads(p.read_text()) if not allowed or d["iss"] in allowed]

    def registry(self) -> JwkRegistry:
        reg = JwkRegistry(self.config.window)
        for j in self.jwks():
            reg.publish(j)
        return reg

    def add_provider_key(self, key: rsa.RsaPrivateKey, jwk: Jwk) -> None:
        _write_private(self.root / "op" / f"{jwk.kid}.json",
                       json.dumps({"p": hex(key.p), "q": hex(key.q)}))
        keys = [j for j in self.jwks() if j.kid != jwk.kid] + [jwk]
        self.root.mkdir(parents=True, exist_ok=True)
        self._jwks_path().write_text(json.dumps(
            [{"kid": j.kid, "iss": j.iss, "n": hex(j.n), "published_epoch": j.published_epoch}
             for j in keys], indent=1))

    def provider(self, iss: str, registry: JwkRegistry) -> MockOP:
        """Mock provider for ``iss`` holding its most recently published key."""
        mine = sorted((j for j in self.jwks() if j.iss == iss), key=lambda j: j.published_epoch)
        if not mine:
            raise StateError(f"no key for {iss}; run `op keygen --iss {iss}` first")
        jwk = mine[-1]
        d = json.loads((self.root / "op" / f"{jwk.kid}.json").read_text())
        p, q = int(d["p"], 16), int(d["q"], 16)
        n = p * q
        dd = pow(rsa.E, -1, (p - 1) * (q - 1))
        key = rsa.RsaPrivateKey(p, q, dd, n, dd % (p - 1), dd % (q - 1), pow(q, -1, p))
        return MockOP(iss, registry, _key=key, _jwk=registry.lookup(jwk.kid, jwk.published_epoch))

    # proof backend

    def backend(self, kind: str | None = None) -> ProofBackendKey:
        kind = kind or self.config.backend
        if kind == "transparent":
            return ProofBackendKey.transparent()
        p = self.root / "backend.key"
        if not p.exists():
            _write_private(p, os.urandom(32).hex())
        return ProofBackendKey.simulation(bytes.fromhex(p.read_text().strip()))

    def pk(self, kind: str | None = None) -> ZkLoginPK:
        reg = self.registry()
        pk = gen(self.config.circuit, self.backend(kind), reg, self.config.delta)
        for iss in sorted({j.iss for j in self.jwks()}):
            pk.add_provider(self.provider(iss, reg))
        return pk

    # salt seed and wallet

    def salt_seed(self, create: bool = False) -> SaltSeed:
        p = self.config.salt_seed_path
        if not p.exists():
            if not create:
                raise StateError(f"no salt seed at {p}")
            p.parent.mkdir(parents=True, exist_ok=True)
            SaltSeed.generate().save(p)
        return SaltSeed.load(p)

    def wallet(self) -> dict:
        p = self.root / "wallet.json"
        if not p.exists():
            raise StateError("no wallet; run `wallet init` first")
        return json.loads(p.read_text())

    def save_wallet(self, data: dict) -> None:
        _write_private(self.root / "wallet.json", json.dumps(data, indent=1))
