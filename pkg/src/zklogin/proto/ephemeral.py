"""Short-lived user keys. Messages are pre-hashed with the sponge before signing."""

from __future__ import annotations

from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

from ..sponge import Domain, hash_bytes


def message_digest(message: bytes) -> bytes:
    return hash_bytes(bytes(message), Domain.MSG).to_bytes(32, "little")


@dataclass(frozen=True)
class EphemeralKey:
    sk: Ed25519PrivateKey = field(repr=False, compare=False)
    vk: bytes

    @classmethod
    def generate(cls) -> EphemeralKey:
        sk = Ed25519PrivateKey.generate()
        return cls(sk, sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw))

    @classmethod
    def from_seed(cls, seed: bytes) -> EphemeralKey:
        sk = Ed25519PrivateKey.from_private_bytes(seed)
        return cls(sk, sk.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw))

    def sign(self, message: bytes) -> bytes:
        return self.sk.sign(message_digest(message))


def verify(vk: bytes, message: bytes, sig: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(vk).verify(sig, message_digest(message))
    except (InvalidSignature, ValueError):
        return False
    return True
