"""Named attacks. Every case must be rejected, either by a violated constraint
in the expected circuit region or by verification returning 0."""

from __future__ import annotations

import dataclasses
import random
from collections.abc import Callable
from dataclasses import dataclass

from ..jwtkit.jwt import top_level_members
from ..proto.address import derive_address
from ..proto.ephemeral import EphemeralKey
from ..proto.zklogin import get_witness, resolve_key, zklogin_sign, zklogin_verify
from ..zkjwt import PublicInputs, WitnessBundle, fill_witness
from .world import World


class CorpusCaseUnexpectedlyAccepted(AssertionError):
    pass


@dataclass(frozen=True)
class Verdict:
    name: str
    rejected: bool
    region: str | None = None   # first violated constraint, for circuit-level cases
    reason: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "verdict": "rejected" if self.rejected else "ACCEPTED",
                "region": self.region, "reason": self.reason}


def _circuit_check(world: World, jwt, salt, r, public: PublicInputs, hints=None):
    """Run the prover's side directly, skipping every out-of-circuit check."""
    ckt = world.pk.circuit
    z = fill_witness(ckt, WitnessBundle(jwt, salt, r, hints or {}), public)
    return ckt.cs.compile().satisfied(z)


def _circuit_verdict(name: str, res, expect: str) -> Verdict:
    if res:
        return Verdict(name, False, None, "all constraints hold")
    return Verdict(name, expect in res.label.split("/"), res.label, f"constraint {res.index}")


def _honest(world: World, rng: random.Random, t_exp: int):
    acct = world.account(rng)
    m = rng.randbytes(16)
    sig = zklogin_sign(world.pk, acct.zkaddr, world.iss, m, t_exp, acct.session)
    return acct, m, sig


def _public_for(world: World, acct, vk: bytes, t_exp: int, header_b64: str, zkaddr=None):
    return PublicInputs(world.op.jwk.n, world.iss, acct.zkaddr if zkaddr is None else zkaddr,
                        t_exp, vk, header_b64)


# -- circuit-level cases ----------------------------------------------------------


def over_extend_slice(world: World, rng: random.Random) -> Verdict:
    """Stretch the sub claim's span over the next member so the value reads
    ``<sub>","aud":"<aud>``."""
    acct = world.account(rng)
    t_exp = world.epoch
    w, _ = get_witness(world.pk, world.iss, acct.zkaddr, t_exp, acct.user, rng)
    payload = w.jwt.payload_bytes
    members = top_level_members(payload)
    k = next(n for n, m in enumerate(members) if m[0] == "sub")
    _, ks, colon, _, _, _ = members[k]
    d_next = members[k + 1][5]
    hints = {"sub": (ks, d_next - ks + 1, colon - ks)}
    res = _circuit_check(world, w.jwt, w.salt, w.r,
                         _public_for(world, acct, w.vk_u, t_exp, w.jwt.header_b64), hints)
    return _circuit_verdict("over_extend_slice", res, "claim")


def escaped_quote_key(world: World, rng: random.Random) -> Verdict:
    """A claim keyed ``"sub`` whose escaped quote the prover presents as a key start."""
    victim_sub = str(rng.randrange(10 ** 20, 10 ** 21))
    acct = world.account(rng)
    t_exp = world.epoch
    user = dataclasses.replace(acct.user, extra_claims={'"sub': victim_sub})
    w, _ = get_witness(world.pk, world.iss, acct.zkaddr, t_exp, user, rng)
    payload = w.jwt.payload_bytes
    members = top_level_members(payload)
    _, ks, colon, _, _, d = next(m for m in members if m[0] == '"sub')
    i = ks + 2  # skip the real opening quote and the backslash
    hints = {"sub": (i, d - i + 1, colon - i)}
    target = derive_address(victim_sub, acct.user.aud, world.iss, acct.user.salt, world.pk.config)
    res = _circuit_check(world, w.jwt, w.salt, w.r,
                         _public_for(world, acct, w.vk_u, t_exp, w.jwt.header_b64, target), hints)
    return _circuit_verdict("escaped_quote_key", res, "top_level")


def nonce_foreign_key(world: World, rng: random.Random) -> Verdict:
    """A token whose nonce commits to someone else's ephemeral key, proved for the
    attacker's own key."""
    acct = world.account(rng)
    t_exp = world.epoch
    w, _ = get_witness(world.pk, world.iss, acct.zkaddr, t_exp, acct.user, rng)
    own = EphemeralKey.from_seed(rng.randbytes(32))
    res = _circuit_check(world, w.jwt, w.salt, w.r,
                         _public_for(world, acct, own.vk, t_exp, w.jwt.header_b64))
    return _circuit_verdict("nonce_foreign_key", res, "nonce")


def aud_swap(world: World, rng: random.Random) -> Verdict:
    """A token issued to one app, used to claim the user's address under another."""
    acct = world.account(rng, aud="wallet-app")
    other = dataclasses.replace(acct.user, aud="dex-frontend")
    other_addr = derive_address(other.sub, other.aud, world.iss, other.salt, world.pk.config)
    t_exp = world.epoch
    w, _ = get_witness(world.pk, world.iss, other_addr, t_exp, other, rng)
    res = _circuit_check(world, w.jwt, w.salt, w.r,
                         _public_for(world, acct, w.vk_u, t_exp, w.jwt.header_b64))
    return _circuit_verdict("aud_swap", res, "addr")


# -- verification-level cases -------------------------------------------------------


def _verify_verdict(name: str, ok: int, reason: str) -> Verdict:
    return Verdict(name, not ok, None, f"verify={ok} ({reason})")


def expired_ephemeral(world: World, rng: random.Random) -> Verdict:
    t_exp = rng.choice(world.fresh_epochs())
    acct, m, sig = _honest(world, rng, t_exp)
    t_cur = t_exp + 1 + rng.randrange(world.pk.registry.window)
    return _verify_verdict("expired_ephemeral",
                           zklogin_verify(world.pk, acct.zkaddr, world.iss, m, sig, t_cur),
                           f"T_cur={t_cur} > T_max={t_exp}")


def _far_signature(world: World, rng: random.Random):
    """Honest signature whose expiry lies past the key's freshness window."""
    t_exp = world.epoch + world.pk.registry.window + 1
    return (t_exp,) + _honest(world, rng, t_exp)


def long_expiry(world: World, rng: random.Random) -> Verdict:
    t_exp, acct, m, sig = _far_signature(world, rng)
    t_cur = t_exp - world.delta - rng.randrange(2)
    return _verify_verdict("long_expiry",
                           zklogin_verify(world.pk, acct.zkaddr, world.iss, m, sig, t_cur),
                           f"T_max={t_exp} >= T_cur+delta={t_cur + world.delta}")


def stale_jwk(world: World, rng: random.Random) -> Verdict:
    t_exp, acct, m, sig = _far_signature(world, rng)
    t_cur = t_exp
    stale = resolve_key(world.pk, world.iss, sig.header_b64, t_cur) is None
    return _verify_verdict("stale_jwk",
                           zklogin_verify(world.pk, acct.zkaddr, world.iss, m, sig, t_cur),
                           "StaleKey" if stale else "key still current")


def sigma_u_transplant(world: World, rng: random.Random) -> Verdict:
    t_exp = rng.choice(world.fresh_epochs())
    acct, m, sig = _honest(world, rng, t_exp)
    m2 = m + rng.randbytes(1 + rng.randrange(8))
    return _verify_verdict("sigma_u_transplant",
                           zklogin_verify(world.pk, acct.zkaddr, world.iss, m2, sig, t_exp),
                           "ephemeral signature covers another message")


CORPUS: dict = {f.__name__: f for f in (
    over_extend_slice, escaped_quote_key, expired_ephemeral, long_expiry, stale_jwk,
    nonce_foreign_key, aud_swap, sigma_u_transplant)}

CIRCUIT_CASES = ("over_extend_slice", "escaped_quote_key", "nonce_foreign_key", "aud_swap")


def run_attack(name: str, world: World | None = None, seed: int = 0) -> Verdict:
    world = world or World.create(seed=seed)
    return CORPUS[name](world, random.Random(f"{name}/{seed}"))


def run_attacks(corpus=tuple(CORPUS), seeds=range(1), world: World | None = None,
                strict: bool = False) -> dict:
    """name -> list of verdicts (one per seed)."""
    world = world or World.create()
    out = {}
    for name in corpus:
        fn: Callable = CORPUS[name]
        out[name] = [fn(world, random.Random(f"{name}/{s}")) for s in seeds]
        if strict:
            bad = [v for v in out[name] if not v.rejected]
            if bad:
                raise CorpusCaseUnexpectedlyAccepted(f"{name}: {bad[0]}")
    return out


def corpus_report(results: dict) -> dict:
    cases = []
    for name, vs in results.items():
        regions = sorted({v.region for v in vs if v.region})
        cases.append({"name": name, "verdict": "rejected" if all(v.rejected for v in vs) else "ACCEPTED",
                      "region": ", ".join(regions) or None,
                      "rejected": sum(v.rejected for v in vs), "runs": len(vs),
                      "reason": vs[0].reason if vs else ""})
    total = sum(len(v) for v in results.values())
    return {"game": "attack_corpus", "trials": total,
            "wins": sum(not v.rejected for vs in results.values() for v in vs),
            "advantage": None, "cases": cases}
