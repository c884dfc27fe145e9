"""Address and salt derivation."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from ..field import P
from ..sponge import Domain, pack_string, sponge_hash
from ..zkjwt import CircuitConfig, json_raw


class StringTooLong(ValueError):
    pass


def derive_address(stid: str, aud: str, iss: str, salt: int,
                   config: CircuitConfig | None = None) -> int:
    """Sponge hash of the packed identifiers and the salt (a field element).

    Strings enter in their JSON-escaped form, exactly as the circuit sees
    them inside the token.
    """
    return derive_address_raw(json_raw(stid), json_raw(aud), json_raw(iss), salt, config)


def derive_address_raw(stid: bytes, aud: bytes, iss: bytes, salt: int,
                       config: CircuitConfig | None = None) -> int:
    """Same as :func:`derive_address` for identifiers already in escaped form."""
    cfg = config or CircuitConfig()
    elems = []
    for raw, cap in ((stid, cfg.max_stid), (aud, cfg.max_aud), (iss, cfg.max_iss)):
        if len(raw) > cap:
            raise StringTooLong(f"identifier exceeds {cap} bytes")
        elems += pack_string(raw, cap)
    return sponge_hash(elems + [int(salt) % P], Domain.ADDR)


def address_bytes(zkaddr: int) -> bytes:
    return int(zkaddr).to_bytes(32, "little")


def address_from_bytes(raw: bytes) -> int:
    if len(raw) != 32:
        raise ValueError("addresses are 32 bytes")
    v = int.from_bytes(raw, "little")
    if v >= P:
        raise ValueError("address is not a canonical field element")
    return v


@dataclass(frozen=True)
class SaltSeed:
    k_seed: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.k_seed) != 32:
            raise ValueError("salt seed is 32 bytes")

    @classmethod
    def generate(cls) -> SaltSeed:
        return cls(os.urandom(32))

    @classmethod
    def load(cls, path) -> SaltSeed:
        return cls(bytes.fromhex(Path(path).read_text().strip()))

    def save(self, path) -> None:
        p = Path(path)
        p.write_text(self.k_seed.hex())
        p.chmod(0o600)


def derive_salt(seed: SaltSeed, sub: str, aud: str, iss: str, counter: int = 0) -> int:
    """Keyed sponge PRF of (sub, aud, iss, counter); ``counter`` separates accounts."""
    key = [int.from_bytes(seed.k_seed[:16], "big"), int.from_bytes(seed.k_seed[16:], "big")]
    data = []
    for s in (sub, aud, iss):
        raw = s.encode("utf-8")
        data += pack_string(raw, max(len(raw), 1))
    return sponge_hash(key + data + [int(counter)], Domain.SALT)
