"""Security games run against scripted adversaries.

These check mechanism, not asymptotic security: each game is played by a
fixed, finite set of strategies and the report says so in its header.

Challengers keep their honest accounts (and the witnesses those accounts
have obtained) across trials of one run, so a proof is computed once per
account and expiry. Per-trial bookkeeping (Q_w, Q_s) always starts empty.
"""

from __future__ import annotations

import dataclasses
import random
from collections.abc import Callable
from dataclasses import dataclass, field

from .. import backends
from ..jwtkit.jwt import header_b64_for
from ..proto.address import derive_address
from ..proto.zklogin import (
    BackendFailure,
    PredicateFalse,
    Tag,
    ZkLoginSignature,
    get_witness,
    prove_tag,
    public_vector,
    resolve_key,
    sim_sign,
    tws_sign,
    tws_verify,
    zklogin_sign,
    zklogin_verify,
)
from .world import Account, World

REPORT_HEADER = ("scripted adversaries only: a zero win-rate shows the checks reject these "
                 "strategies, not that no strategy exists")


class GameDegenerate(ValueError):
    """The two challenge contexts differ in iss; the game hands out b."""


@dataclass
class GameLog:
    q_w: set = field(default_factory=set)   # (T_exp, zkaddr, iss)
    q_s: set = field(default_factory=set)   # (T_exp, zkaddr, iss, m)
    outcomes: list = field(default_factory=list)


@dataclass(frozen=True)
class Forgery:
    zkaddr: int
    iss: str
    message: bytes
    sig: ZkLoginSignature
    t_cur: int


@dataclass
class Report:
    game: str
    trials: int
    wins: int
    advantage: float | None = None
    cases: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {"game": self.game, "trials": self.trials, "wins": self.wins,
               "advantage": self.advantage, "cases": self.cases, "note": REPORT_HEADER}
        out.update(self.details)
        return out


def _msg(rng: random.Random) -> bytes:
    return rng.randbytes(rng.randrange(1, 48))


# -- zkLogin security --------------------------------------------------------------


class SecurityChallenger:
    def __init__(self, world: World, n_accounts: int = 4, seed: int = 0):
        self.world = world
        rng = random.Random(seed)
        self.accounts = [world.account(rng) for _ in range(n_accounts)]
        self._by_addr = {a.zkaddr: a for a in self.accounts}
        self.log = GameLog()

    def new_trial(self) -> GameLog:
        self.log = GameLog()
        return self.log

    def o_get_witness(self, iss: str, zkaddr: int, t_exp: int):
        acct = self._by_addr[zkaddr]
        self.log.q_w.add((t_exp, zkaddr, iss))
        return acct.session.witness(self.world.pk, iss, zkaddr, t_exp)

    def o_sign(self, zkaddr: int, iss: str, message: bytes, t_exp: int) -> ZkLoginSignature:
        acct = self._by_addr[zkaddr]
        self.log.q_s.add((t_exp, zkaddr, iss, message))
        return zklogin_sign(self.world.pk, zkaddr, iss, message, t_exp, acct.session)

    def judge(self, f: Forgery) -> dict:
        e = all(f.t_cur > t for (t, a, i) in self.log.q_w if (a, i) == (f.zkaddr, f.iss))
        fe = all(f.t_cur > t for (t, a, i, m) in self.log.q_s
                 if (a, i, m) == (f.zkaddr, f.iss, f.message))
        ok = zklogin_verify(self.world.pk, f.zkaddr, f.iss, f.message, f.sig, f.t_cur)
        return {"E": e, "F": fe, "verify": ok, "win": bool(e and fe and ok)}


def _two(rng, accounts) -> tuple:
    a, b = rng.sample(accounts, 2)
    return a, b


def replay_expired_witness(ch: SecurityChallenger, rng: random.Random) -> Forgery:
    """Use a leaked witness after its expiry, optionally relabelling T_max."""
    w_ = ch.world
    acct = rng.choice(ch.accounts)
    t_exp = rng.choice(w_.fresh_epochs())
    w, jwk = ch.o_get_witness(w_.iss, acct.zkaddr, t_exp)
    m = _msg(rng)
    t_cur = t_exp + 1 + rng.randrange(2)
    sig = tws_sign(Tag(jwk, w_.iss, acct.zkaddr, t_exp), w_.pk, w, m)
    variant = rng.randrange(3)
    if variant == 1:
        sig = dataclasses.replace(sig, t_max=t_cur)
    elif variant == 2:
        try:
            sig = tws_sign(Tag(jwk, w_.iss, acct.zkaddr, t_cur), w_.pk, w, m)
        except PredicateFalse:
            sig = dataclasses.replace(sig, t_max=t_cur)
    return Forgery(acct.zkaddr, w_.iss, m, sig, t_cur)


def cross_address(ch: SecurityChallenger, rng: random.Random) -> Forgery:
    """Witness obtained for address A, signature claimed for address B."""
    w_ = ch.world
    a, b = _two(rng, ch.accounts)
    t_exp = rng.choice(w_.fresh_epochs())
    w, jwk = ch.o_get_witness(w_.iss, a.zkaddr, t_exp)
    m = _msg(rng)
    variant = rng.randrange(3)
    sig = tws_sign(Tag(jwk, w_.iss, a.zkaddr, t_exp), w_.pk, w, m)
    if variant == 1:
        try:
            sig = tws_sign(Tag(jwk, w_.iss, b.zkaddr, t_exp), w_.pk, w, m)
        except PredicateFalse:
            pass
    elif variant == 2:
        try:
            pi = prove_tag(w_.pk, Tag(jwk, w_.iss, b.zkaddr, t_exp), w)
            sig = dataclasses.replace(sig, pi=pi)
        except BackendFailure:
            pass
    return Forgery(b.zkaddr, w_.iss, m, sig, rng.randrange(t_exp - w_.delta + 1, t_exp + 1))


def sigma_u_transplant(ch: SecurityChallenger, rng: random.Random) -> Forgery:
    """Reuse a signature obtained from the signing oracle on a new message."""
    w_ = ch.world
    a, b = _two(rng, ch.accounts)
    t_exp = rng.choice(w_.fresh_epochs())
    m1 = _msg(rng)
    sig = ch.o_sign(b.zkaddr, w_.iss, m1, t_exp)
    m2 = m1 + b"\x00" + _msg(rng)
    if rng.randrange(2):
        # own ephemeral key on the new message, victim's proof
        w, _ = ch.o_get_witness(w_.iss, a.zkaddr, t_exp)
        sig = dataclasses.replace(sig, vk_u=w.vk_u, sigma_u=w.eph.sign(m2))
    return Forgery(b.zkaddr, w_.iss, m2, sig, t_exp)


def honest_replay_before_expiry(ch: SecurityChallenger, rng: random.Random) -> Forgery:
    """Sign with a leaked, still-valid witness. Verifies, but event E excludes it."""
    w_ = ch.world
    acct = rng.choice(ch.accounts)
    t_exp = rng.choice(w_.fresh_epochs())
    w, jwk = ch.o_get_witness(w_.iss, acct.zkaddr, t_exp)
    m = _msg(rng)
    return Forgery(acct.zkaddr, w_.iss, m, tws_sign(Tag(jwk, w_.iss, acct.zkaddr, t_exp), w_.pk, w, m),
                   t_exp)


SECURITY_STRATEGIES: dict = {
    "replay_expired_witness": replay_expired_witness,
    "cross_address": cross_address,
    "sigma_u_transplant": sigma_u_transplant,
    "honest_replay_before_expiry": honest_replay_before_expiry,
}


def run_zklogin_security(adversary: str | Callable, trials: int = 1000, seed: int = 0,
                         world: World | None = None, n_accounts: int = 4) -> Report:
    strategy = SECURITY_STRATEGIES[adversary] if isinstance(adversary, str) else adversary
    world = world or World.create(seed=seed)
    ch = SecurityChallenger(world, n_accounts, seed)
    rng = random.Random(seed)
    wins = verified = excluded = 0
    log = []
    for _ in range(trials):
        ch.new_trial()
        out = ch.judge(strategy(ch, rng))
        wins += out["win"]
        verified += out["verify"]
        excluded += bool(out["verify"] and not (out["E"] and out["F"]))
        log.append(out)
    name = getattr(strategy, "__name__", str(adversary))
    return Report("zklogin_security", trials, wins, wins / trials,
                  [{"name": name, "verdict": "win" if wins else "no win", "region": None}],
                  {"verified": verified, "excluded": excluded, "log": log})


# -- unlinkability -------------------------------------------------------------------


@dataclass(frozen=True)
class Context:
    stid: str
    aud: str
    iss: str


@dataclass(frozen=True)
class View:
    """Everything one adversary sees in one unlinkability trial."""

    contexts: tuple
    zkaddr: int
    message: bytes
    sig: ZkLoginSignature
    t_exp: int


class SaltDictionary:
    """Match zkaddr against addresses for guessable salts."""

    name = "salt_dictionary"

    def __init__(self, world: World, contexts: tuple, salts=range(64)):
        cfg = world.pk.config
        self.table = {}
        for b, c in enumerate(contexts):
            for s in salts:
                self.table[derive_address(c.stid, c.aud, c.iss, s, cfg)] = b

    def guess(self, view: View, rng: random.Random) -> int:
        return self.table.get(view.zkaddr, rng.randrange(2))


class ByteStatistics:
    """Guess from parity statistics of the proof and signature bytes."""

    name = "byte_statistics"

    def __init__(self, world: World, contexts: tuple):
        pass

    def guess(self, view: View, rng: random.Random) -> int:
        pi_bits = sum((x).bit_count() for x in view.sig.pi)
        return (pi_bits + view.sig.vk_u[0]) & 1


class SaltReader:
    """Pull the salt out of a transparent proof and test both contexts."""

    name = "salt_reader"

    def __init__(self, world: World, contexts: tuple):
        self.world = world

    def guess(self, view: View, rng: random.Random) -> int:
        w = self.world
        jwk = resolve_key(w.pk, view.contexts[0].iss, view.sig.header_b64, view.t_exp)
        if jwk is None:
            return rng.randrange(2)
        tag = Tag(jwk, view.contexts[0].iss, view.zkaddr, view.t_exp)
        ckt = w.pk.circuit
        try:
            z = backends.extract_witness(ckt.cs, public_vector(w.pk, tag, view.sig.vk_u, view.sig.header_b64),
                                         view.sig.pi)
        except backends.BadProof:
            return rng.randrange(2)
        salt = z[ckt.wit["salt"]]
        for b, c in enumerate(view.contexts):
            if derive_address(c.stid, c.aud, c.iss, salt, w.pk.config) == view.zkaddr:
                return b
        return rng.randrange(2)


DISTINGUISHERS = (SaltDictionary, ByteStatistics, SaltReader)


def default_contexts(world: World) -> tuple:
    return (Context("110463452167303598383", "wallet-app", world.iss),
            Context("204866930551198230071", "wallet-app", world.iss))


def run_unlinkability(trials: int = 1000, seed: int = 0, world: World | None = None,
                      contexts: tuple | None = None, distinguishers=DISTINGUISHERS) -> Report:
    """Each trial: fresh b and secret salt, zkaddr from C_b, one signing query per adversary."""
    world = world or World.create("simulation", seed=seed)
    contexts = contexts or default_contexts(world)
    c0, c1 = contexts
    if c0.iss != c1.iss:
        raise GameDegenerate("contexts differ in iss")
    advs = [d(world, contexts) for d in distinguishers]
    rng = random.Random(seed)
    correct = [0] * len(advs)
    for _ in range(trials):
        b = rng.randrange(2)
        c = contexts[b]
        acct = world.account(rng, sub=c.stid, aud=c.aud, salt=rng.getrandbits(253))
        t_exp = rng.choice(world.fresh_epochs())
        for k, adv in enumerate(advs):
            m = _msg(rng)
            sig = zklogin_sign(world.pk, acct.zkaddr, c.iss, m, t_exp, acct.session)
            view = View(contexts, acct.zkaddr, m, sig, t_exp)
            correct[k] += adv.guess(view, rng) == b
    adv_by = {a.name: abs(n / trials - 0.5) for a, n in zip(advs, correct)}
    best = max(adv_by.values())
    return Report("unlinkability", trials, max(correct), best,
                  [{"name": k, "verdict": f"advantage {v:.4f}", "region": None}
                   for k, v in adv_by.items()],
                  {"backend": world.pk.backend.kind, "by_distinguisher": adv_by})


# -- tagged witness signature games ----------------------------------------------


class TwsChallenger:
    """Oracles over tags (pk_OP, iss, zkaddr, T) of the zkLogin TWS."""

    def __init__(self, world: World, n_accounts: int = 4, seed: int = 0):
        self.world = world
        rng = random.Random(seed)
        self.accounts = [world.account(rng) for _ in range(n_accounts)]
        self.log = GameLog()

    def tags(self) -> list:
        w = self.world
        return [Tag(w.op.jwk, w.iss, a.zkaddr, t) for a in self.accounts for t in w.fresh_epochs()]

    def _acct(self, tag: Tag) -> Account:
        return next(a for a in self.accounts if a.zkaddr == tag.zkaddr)

    def o_get_witness(self, tag: Tag):
        self.log.q_w.add(tag)
        return self._acct(tag).session.witness(self.world.pk, tag.iss, tag.zkaddr, tag.t)[0]

    def o_sign(self, tag: Tag, message: bytes) -> ZkLoginSignature:
        self.log.q_s.add((tag, message))
        w = self._acct(tag).session.witness(self.world.pk, tag.iss, tag.zkaddr, tag.t)[0]
        return tws_sign(tag, self.world.pk, w, message)

    def judge(self, tag: Tag, message: bytes, sig: ZkLoginSignature) -> dict:
        fresh = (tag, message) not in self.log.q_s and tag not in self.log.q_w
        ok = tws_verify(tag, self.world.pk, message, sig)
        return {"fresh": fresh, "verify": ok, "win": bool(fresh and ok)}


def forge_message_swap(ch: TwsChallenger, rng):
    tag = rng.choice(ch.tags())
    m = _msg(rng)
    sig = ch.o_sign(tag, m)
    return tag, m + b"!", sig


def forge_tag_swap(ch: TwsChallenger, rng):
    """Witness for one tag, signature offered for a neighbouring tag."""
    t1, t2 = rng.sample(ch.tags(), 2)
    w = ch.o_get_witness(t1)
    m = _msg(rng)
    sig = tws_sign(t1, ch.world.pk, w, m)
    if t1.t != t2.t and rng.randrange(2):
        sig = dataclasses.replace(sig, t_max=t2.t)
    return t2, m, sig


def forge_queried_tag(ch: TwsChallenger, rng):
    """Legitimate signature under a tag whose witness was leaked; never a win."""
    tag = rng.choice(ch.tags())
    w = ch.o_get_witness(tag)
    m = _msg(rng)
    return tag, m, tws_sign(tag, ch.world.pk, w, m)


TWS_FORGERS: dict = {
    "message_swap": forge_message_swap,
    "tag_swap": forge_tag_swap,
    "queried_tag": forge_queried_tag,
}


def _unforgeability(world: World, trials: int, seed: int) -> Report:
    ch = TwsChallenger(world, seed=seed)
    rng = random.Random(seed)
    cases, wins, verified = [], 0, {}
    for name, forger in TWS_FORGERS.items():
        w = v = 0
        for _ in range(trials):
            ch.log = GameLog()
            out = ch.judge(*forger(ch, rng))
            w += out["win"]
            v += out["verify"]
        wins += w
        verified[name] = v
        cases.append({"name": name, "verdict": f"{w} wins", "region": None})
    return Report("tws_unforgeability", trials * len(TWS_FORGERS), wins, wins / (trials * len(TWS_FORGERS)),
                  cases, {"verified": verified})


# witness hiding: the adversary sees one signature and guesses real (0) or simulated (1)


def _wh_guessers(world: World) -> dict:
    def verifies(tag, m, sig, rng):
        return 1 - tws_verify(tag, world.pk, m, sig)

    def header_is_canonical(tag, m, sig, rng):
        return int(sig.header_b64 == header_b64_for(tag.pk_op.kid))

    def pi_parity(tag, m, sig, rng):
        return sum((x).bit_count() for x in sig.pi) & 1

    def pi_length(tag, m, sig, rng):
        return len(sig.pi) & 1

    def vk_high_bit(tag, m, sig, rng):
        return sig.vk_u[-1] >> 7

    return {f.__name__: f for f in (verifies, header_is_canonical, pi_parity, pi_length, vk_high_bit)}


def _witness_hiding(world: World, trials: int, seed: int) -> Report:
    if world.trapdoor is None:
        raise ValueError("witness hiding needs the simulation backend")
    rng = random.Random(seed)
    accounts = [world.account(rng) for _ in range(4)]
    guessers = _wh_guessers(world)
    correct = dict.fromkeys(guessers, 0)
    for _ in range(trials):
        b = rng.randrange(2)
        acct = rng.choice(accounts)
        t_exp = rng.choice(world.fresh_epochs())
        m = _msg(rng)
        if b == 0:
            w, jwk = get_witness(world.pk, world.iss, acct.zkaddr, t_exp, acct.user, rng)
            tag = Tag(jwk, world.iss, acct.zkaddr, t_exp)
            sig = tws_sign(tag, world.pk, w, m)
        else:
            tag = Tag(world.op.jwk, world.iss, acct.zkaddr, t_exp)
            sig = sim_sign(tag, world.pk, world.trapdoor, m, rng)
        for name, g in guessers.items():
            correct[name] += g(tag, m, sig, rng) == b
    adv_by = {k: abs(v / trials - 0.5) for k, v in correct.items()}
    return Report("tws_witness_hiding", trials, max(correct.values()), max(adv_by.values()),
                  [{"name": k, "verdict": f"advantage {v:.4f}", "region": None} for k, v in adv_by.items()],
                  {"by_distinguisher": adv_by})


def run_tws_games(kind: str, trials: int = 1000, seed: int = 0, world: World | None = None) -> Report:
    if kind == "unforgeability":
        return _unforgeability(world or World.create(seed=seed), trials, seed)
    if kind == "witness-hiding":
        return _witness_hiding(world or World.create("simulation", seed=seed), trials, seed)
    raise ValueError(f"unknown TWS game {kind!r}")
