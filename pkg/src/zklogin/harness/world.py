"""A reproducible deployment (provider, registry, parameters) for games and attacks."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..backends import ProofBackendKey
from ..jwtkit.registry import JwkRegistry, MockOP
from ..proto.address import derive_address
from ..proto.zklogin import Session, UserContext, ZkLoginPK, gen
from ..zkjwt import CircuitConfig

ISS = "https://accounts.example.com"
AUDS = ("wallet-app", "dex-frontend", "game-client")


@dataclass
class Account:
    user: UserContext
    zkaddr: int
    session: Session


@dataclass
class World:
    pk: ZkLoginPK
    op: MockOP
    epoch: int
    trapdoor: bytes | None = None
    rng: random.Random = field(default_factory=random.Random)

    @classmethod
    def create(cls, backend: str = "transparent", seed: int = 0, epoch: int = 10,
               config: CircuitConfig | None = None, key_seed: int = 1) -> World:
        rng = random.Random(seed)
        if backend == "simulation":
            key = ProofBackendKey.simulation(rng.randbytes(32))
        else:
            key = ProofBackendKey(backend)
        pk = gen(config, key, JwkRegistry())
        op = pk.add_provider(MockOP(ISS, pk.registry, key_seed=key_seed))
        op.rotate(epoch)
        return cls(pk, op, epoch, key.trapdoor if backend == "simulation" else None, rng)

    @property
    def iss(self) -> str:
        return self.op.iss

    @property
    def delta(self) -> int:
        return self.pk.delta

    def fresh_epochs(self) -> list:
        """Expiry values an honest wallet may pick while the current key is live."""
        return [self.epoch + k for k in range(self.delta)]

    def user(self, rng: random.Random, sub: str | None = None, aud: str | None = None,
             salt: int | None = None) -> UserContext:
        sub = sub if sub is not None else str(rng.randrange(10 ** 20, 10 ** 21))
        aud = aud if aud is not None else rng.choice(AUDS)
        salt = salt if salt is not None else rng.getrandbits(128)
        email = f"u{sub[-6:]}@example.com" if self.pk.config.stid_claim == "email" else None
        return UserContext(sub, aud, salt, email=email, whitespace_seed=rng.getrandbits(32))

    def account(self, rng: random.Random, **kw) -> Account:
        u = self.user(rng, **kw)
        addr = derive_address(u.stid(self.pk.config), u.aud, self.iss, u.salt, self.pk.config)
        return Account(u, addr, Session(u, rng=random.Random(rng.getrandbits(64))))
