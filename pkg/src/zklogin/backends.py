"""Two test proof systems over a ConstraintSystem.

``transparent`` ships the witness itself (compressed); verification re-runs
the constraint check. ``simulation`` is a designated-verifier MAC keyed by a
trapdoor: proofs depend only on the key, the public inputs and the system
digest, so a holder of the trapdoor can produce them without any witness.
"""

from __future__ import annotations

import hashlib
import hmac
import os
import zlib
from dataclasses import dataclass, field

from .csys import Assignment, CompiledSystem, ConstraintSystem

TAG_TRANSPARENT = 0x01
TAG_SIMULATION = 0x02


class UnsatisfiedWitness(ValueError):
    def __init__(self, violation):
        super().__init__(f"constraint {violation.index} ({violation.label or 'unlabeled'}) fails")
        self.violation = violation


class BadProof(ValueError):
    pass


def _system(cs) -> CompiledSystem:
    return cs.compile() if isinstance(cs, ConstraintSystem) else cs


def _public_bytes(public) -> bytes:
    return b"".join((int(x)).to_bytes(32, "little") for x in public)


@dataclass(frozen=True)
class ProofBackendKey:
    kind: str
    mac_key: bytes = field(default=b"", repr=False)

    @classmethod
    def transparent(cls) -> ProofBackendKey:
        return cls("transparent")

    @classmethod
    def simulation(cls, mac_key: bytes | None = None) -> ProofBackendKey:
        key = os.urandom(32) if mac_key is None else mac_key
        if len(key) != 32:
            raise ValueError("simulation key is 32 bytes")
        return cls("simulation", key)

    @property
    def trapdoor(self) -> bytes:
        return self.mac_key

    def __post_init__(self):
        if self.kind not in ("transparent", "simulation"):
            raise ValueError(f"unknown backend {self.kind!r}")


def prove(key: ProofBackendKey, cs, z: Assignment, checked: bool = False) -> bytes:
    """Proof for assignment z; refuses unless z satisfies every constraint.

    ``checked=True`` skips the satisfaction check when the caller has just
    performed it on the same assignment.
    """
    sysc = _system(cs)
    if not checked:
        res = sysc.satisfied(z)
        if not res:
            raise UnsatisfiedWitness(res)
    if key.kind == "transparent":
        raw = z.buf.to_bytes(sysc.num_public, sysc.num_vars)
        return bytes([TAG_TRANSPARENT]) + zlib.compress(raw, 1)
    return sim_prove(key.trapdoor, cs, z.buf.get_many(0, sysc.num_public))


def sim_prove(trapdoor: bytes, cs, public) -> bytes:
    """Valid simulation-backend proof for ``public`` without any witness."""
    sysc = _system(cs)
    if len(public) != sysc.num_public:
        raise ValueError("wrong number of public inputs")
    mac = hmac.new(trapdoor, _public_bytes(public) + sysc.digest, hashlib.sha256).digest()
    return bytes([TAG_SIMULATION]) + mac


def extract_witness(cs, public, proof: bytes) -> Assignment:
    """Rebuild the full assignment carried by a transparent proof."""
    sysc = _system(cs)
    if not proof or proof[0] != TAG_TRANSPARENT:
        raise BadProof("not a transparent proof")
    if len(public) != sysc.num_public:
        raise BadProof("wrong number of public inputs")
    try:
        raw = zlib.decompress(proof[1:])
    except zlib.error as exc:
        raise BadProof("corrupt payload") from exc
    if len(raw) != 32 * (sysc.num_vars - sysc.num_public):
        raise BadProof("witness length mismatch")
    buf = sysc.engine.new_buffer()
    buf.set_many(0, [int(x) for x in public])
    try:
        buf.load_bytes(sysc.num_public, raw)
    except ValueError as exc:
        raise BadProof(str(exc)) from exc
    return Assignment(sysc.cs, buf)


def verify(key: ProofBackendKey, cs, public, proof: bytes) -> int:
    sysc = _system(cs)
    if not proof:
        return 0
    if key.kind == "transparent":
        try:
            z = extract_witness(sysc, public, proof)
        except BadProof:
            return 0
        return int(sysc.holds_all(z.buf))
    if proof[0] != TAG_SIMULATION or len(public) != sysc.num_public:
        return 0
    expect = sim_prove(key.trapdoor, sysc, public)
    return int(hmac.compare_digest(expect, proof))
