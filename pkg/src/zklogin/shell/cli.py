"""``zklogin`` command line.

Exit status: 0 on success, 1 when a verification (or an attack or game
check) fails, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

from ..jwtkit import rsa
from ..jwtkit.registry import Jwk, seeded_key
from ..proto.address import (
    address_bytes,
    address_from_bytes,
    derive_address,
    derive_salt,
)
from ..proto.zklogin import (
    SignatureDecodeError,
    UserContext,
    ZkLoginSignature,
    zklogin_sign,
    zklogin_verify,
)
from ..zkjwt import ConfigInvalid, build_ckt
from . import config as config_mod
from .service import HttpError, ProverService, SaltService, serve
from .state import StateError, Store

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SECURITY_GAMES = ("replay_expired_witness", "cross_address", "sigma_u_transplant",
                  "honest_replay_before_expiry")
GAMES = SECURITY_GAMES + ("unlinkability", "tws-unforgeability", "witness-hiding")
UNLINKABILITY_BOUND = 0.05


class UsageError(Exception):
    pass


def _out(obj) -> None:
    print(json.dumps(obj, indent=1) if isinstance(obj, (dict, list)) else obj)


def _epoch(args, default: int = 0) -> int:
    return args.epoch if args.epoch is not None else default


def _read_arg(value: str) -> str:
    """``@path`` reads the value from a file."""
    return Path(value[1:]).read_text().strip() if value.startswith("@") else value


# -- op ---------------------------------------------------------------------------


def cmd_op_keygen(args, store: Store) -> int:
    key = seeded_key(args.seed) if args.seed is not None else rsa.generate()
    kid = hashlib.sha256(f"{args.iss}/{key.n}".encode()).hexdigest()[:16]
    jwk = Jwk(kid, args.iss, key.n, _epoch(args))
    store.registry().publish(jwk)  # raises on kid or modulus reuse
    store.add_provider_key(key, jwk)
    _out({"kid": kid, "iss": args.iss, "published_epoch": jwk.published_epoch})
    return EXIT_OK


def cmd_op_issue(args, store: Store) -> int:
    op = store.provider(args.iss, store.registry())
    claims = {"sub": args.sub, "aud": args.aud, "iss": args.iss, "nonce": args.nonce}
    for item in args.claim or []:
        k, _, v = item.partition("=")
        claims[k] = v
    _out(op.issue(claims, whitespace_seed=args.seed).compact)
    return EXIT_OK


# -- wallet -------------------------------------------------------------------------


def _user(w: dict) -> UserContext:
    return UserContext(w["sub"], w["aud"], int(w["salt"], 16), email=w.get("email"))


def cmd_wallet_init(args, store: Store) -> int:
    if args.salt is not None:
        salt = int(args.salt, 16)
    else:
        salt = derive_salt(store.salt_seed(create=True), args.sub, args.aud, args.iss, args.counter)
    w = {"iss": args.iss, "sub": args.sub, "aud": args.aud, "salt": hex(salt), "email": args.email}
    user = _user(w)
    cfg = store.config.circuit
    zkaddr = derive_address(user.stid(cfg), user.aud, args.iss, salt, cfg)
    w["zkaddr"] = address_bytes(zkaddr).hex()
    store.save_wallet(w)
    _out({"zkaddr": w["zkaddr"], "iss": args.iss})
    return EXIT_OK


def cmd_wallet_address(args, store: Store) -> int:
    _out(store.wallet()["zkaddr"])
    return EXIT_OK


def cmd_wallet_sign(args, store: Store) -> int:
    w = store.wallet()
    pk = store.pk(args.backend)
    zkaddr = address_from_bytes(bytes.fromhex(w["zkaddr"]))
    t_exp = args.expiry if args.expiry is not None else _epoch(args) + pk.delta - 1
    sig = zklogin_sign(pk, zkaddr, w["iss"], args.message.encode(), t_exp, _user(w))
    text = sig.to_b64()
    if args.out:
        Path(args.out).write_text(text)
        _out({"written": args.out, "T_max": sig.t_max, "bytes": len(sig.to_bytes())})
    else:
        _out(text)
    return EXIT_OK


def cmd_wallet_verify(args, store: Store) -> int:
    pk = store.pk(args.backend)
    if args.address:
        zkaddr, iss = address_from_bytes(bytes.fromhex(args.address)), args.iss
    else:
        w = store.wallet()
        zkaddr, iss = address_from_bytes(bytes.fromhex(w["zkaddr"])), args.iss or w["iss"]
    if iss is None:
        raise UsageError("--iss is required with --address")
    try:
        sig = ZkLoginSignature.from_b64(_read_arg(args.sig))
    except SignatureDecodeError as exc:
        _out({"verify": 0, "error": str(exc)})
        return EXIT_FAIL
    ok = zklogin_verify(pk, zkaddr, iss, args.message.encode(), sig, _epoch(args))
    _out({"verify": ok, "T_cur": _epoch(args), "T_max": sig.t_max})
    return EXIT_OK if ok else EXIT_FAIL


# -- salt, circuit, prove -------------------------------------------------------------


def cmd_salt_derive(args, store: Store) -> int:
    svc = SaltService(store.salt_seed(create=True), store.registry(), args.epoch)
    try:
        _out(svc.handle("/salt", {"jwt": _read_arg(args.jwt), "counter": args.counter}))
    except HttpError as exc:
        _out({"error": str(exc), "status": exc.status})
        return EXIT_FAIL
    return EXIT_OK


def cmd_circuit_build(args, store: Store) -> int:
    t0 = time.perf_counter()
    ckt = build_ckt(store.config.circuit)
    _out({"constraints": ckt.cs.num_constraints, "variables": ckt.cs.num_vars,
          "public": ckt.cs.num_public, "seconds": round(time.perf_counter() - t0, 2)})
    return EXIT_OK


def region_table(cs) -> list:
    total = cs.num_constraints
    rows = sorted(cs.stats(depth=1).items(), key=lambda kv: -kv[1])
    return [(name or "(unlabeled)", n, n / total) for name, n in rows]


def cmd_circuit_stats(args, store: Store) -> int:
    t0 = time.perf_counter()
    cs = build_ckt(store.config.circuit).cs
    rows = region_table(cs)
    secs = time.perf_counter() - t0
    if args.json:
        _out({"total": cs.num_constraints, "seconds": round(secs, 2),
              "regions": {name: {"count": n, "share": round(s, 4)} for name, n, s in rows}})
        return EXIT_OK
    print(f"{'region':<12}{'constraints':>12}{'share':>8}")
    for name, n, s in rows:
        print(f"{name:<12}{n:>12,}{s:>8.3f}")
    print(f"{'total':<12}{cs.num_constraints:>12,}{1:>8.3f}")
    print(f"built in {secs:.1f} s")
    return EXIT_OK


def cmd_prove(args, store: Store) -> int:
    pk = store.pk(args.backend)
    svc = ProverService(pk, epoch=args.epoch)
    body = {"jwt": _read_arg(args.jwt), "salt": args.salt, "r": args.r, "vk_u": args.vk,
            "T_max": args.t_max}
    try:
        res = svc.handle("/prove", body)
    except HttpError as exc:
        _out({"error": str(exc), "status": exc.status})
        return EXIT_FAIL
    if args.out:
        Path(args.out).write_text(json.dumps(res))
        res = {k: v for k, v in res.items() if k != "proof"} | {"proof_written": args.out}
    _out(res)
    return EXIT_OK


# -- harness ---------------------------------------------------------------------------


def cmd_attack_run(args, store: Store) -> int:
    from ..harness.attacks import CORPUS, corpus_report, run_attacks
    from ..harness.world import World
    names = tuple(CORPUS) if args.case == "all" else (args.case,)
    if any(n not in CORPUS for n in names):
        raise UsageError(f"unknown case {args.case!r}; choose from {', '.join(CORPUS)} or all")
    world = World.create(args.backend or "transparent", seed=args.seed or 0,
                         config=store.config.circuit)
    res = run_attacks(names, range(args.seeds), world)
    rep = corpus_report(res)
    for c in rep["cases"]:
        print(f"{c['name']}: {c['verdict']} ({c['region'] or c['reason']})")
    return EXIT_OK if rep["wins"] == 0 else EXIT_FAIL


def cmd_game_run(args, store: Store) -> int:
    from ..harness import games
    from ..harness.world import World
    seed = args.seed or 0
    name = args.name
    if name in SECURITY_GAMES:
        rep = games.run_zklogin_security(name, args.trials, seed,
                                         World.create(args.backend or "transparent", seed=seed))
        passed = rep.wins == 0
    elif name == "unlinkability":
        rep = games.run_unlinkability(args.trials, seed,
                                      World.create(args.backend or "simulation", seed=seed))
        passed = rep.advantage < UNLINKABILITY_BOUND
    elif name == "tws-unforgeability":
        rep = games.run_tws_games("unforgeability", args.trials, seed,
                                  World.create(args.backend or "transparent", seed=seed))
        passed = rep.wins == 0
    elif name == "witness-hiding":
        rep = games.run_tws_games("witness-hiding", args.trials, seed,
                                  World.create(args.backend or "simulation", seed=seed))
        passed = rep.advantage < UNLINKABILITY_BOUND
    else:
        raise UsageError(f"unknown game {name!r}; choose from {', '.join(GAMES)}")
    out = rep.to_json()
    out.pop("log", None)
    _out(out)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_serve(args, store: Store) -> int:
    cfg = store.config
    if args.role == "salt":
        svc = SaltService(store.salt_seed(create=True), store.registry(), args.epoch)
        port = args.port if args.port is not None else cfg.salt_port
    else:
        pk = store.pk(args.backend)
        _ = pk.circuit  # build before serving
        svc = ProverService(pk, cfg.prover_queue, cfg.cache_size, args.epoch)
        port = args.port if args.port is not None else cfg.prover_port
    httpd = serve(svc, args.host, port)
    print(f"serving {args.role} on http://{args.host}:{httpd.server_address[1]}", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        httpd.shutdown()
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--epoch", type=int, help="current epoch T_cur")
    common.add_argument("--backend", choices=config_mod.BACKENDS)
    common.add_argument("--seed", type=int)
    common.add_argument("--state", help="state directory (overrides the config)")

    p = _Parser(prog="zklogin", description=__doc__.splitlines()[0],
                epilog="global flags go after the subcommand: --config --epoch --backend --seed --state")
    sub = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def group(name, help_):
        g = sub.add_parser(name, help=help_)
        return g.add_subparsers(dest="action", required=True, parser_class=_Parser)

    op = group("op", "mock OpenID provider")
    a = op.add_parser("keygen", parents=[common])
    a.add_argument("--iss", required=True)
    a.set_defaults(fn=cmd_op_keygen)
    a = op.add_parser("issue", parents=[common])
    for f in ("--iss", "--sub", "--aud", "--nonce"):
        a.add_argument(f, required=True)
    a.add_argument("--claim", action="append", help="extra string claim k=v")
    a.set_defaults(fn=cmd_op_issue)

    wl = group("wallet", "zkLogin wallet")
    a = wl.add_parser("init", parents=[common])
    for f in ("--iss", "--sub", "--aud"):
        a.add_argument(f, required=True)
    a.add_argument("--salt", help="hex salt; default derives one from the salt seed")
    a.add_argument("--counter", type=int, default=0)
    a.add_argument("--email")
    a.set_defaults(fn=cmd_wallet_init)
    a = wl.add_parser("address", parents=[common])
    a.set_defaults(fn=cmd_wallet_address)
    a = wl.add_parser("sign", parents=[common])
    a.add_argument("--message", required=True)
    a.add_argument("--expiry", type=int, help="T_max; default epoch + delta - 1")
    a.add_argument("--out")
    a.set_defaults(fn=cmd_wallet_sign)
    a = wl.add_parser("verify", parents=[common])
    a.add_argument("--message", required=True)
    a.add_argument("--sig", required=True, help="base64 signature or @file")
    a.add_argument("--address", help="hex zkaddr; default the wallet's")
    a.add_argument("--iss")
    a.set_defaults(fn=cmd_wallet_verify)

    sl = group("salt", "salt derivation")
    a = sl.add_parser("derive", parents=[common])
    a.add_argument("--jwt", required=True, help="token or @file")
    a.add_argument("--counter", type=int, default=0)
    a.set_defaults(fn=cmd_salt_derive)

    ck = group("circuit", "circuit construction")
    a = ck.add_parser("build", parents=[common])
    a.set_defaults(fn=cmd_circuit_build)
    a = ck.add_parser("stats", parents=[common])
    a.add_argument("--json", action="store_true")
    a.set_defaults(fn=cmd_circuit_stats)

    a = sub.add_parser("prove", help="prove a JWT witness", parents=[common])
    a.add_argument("--jwt", required=True, help="token or @file")
    a.add_argument("--salt", required=True, help="hex")
    a.add_argument("--r", required=True, help="hex")
    a.add_argument("--vk", required=True, help="hex ephemeral public key")
    a.add_argument("--t-max", type=int, required=True)
    a.add_argument("--out")
    a.set_defaults(fn=cmd_prove)

    at = group("attack", "attack corpus")
    a = at.add_parser("run", parents=[common])
    a.add_argument("case")
    a.add_argument("--seeds", type=int, default=1)
    a.set_defaults(fn=cmd_attack_run)

    gm = group("game", "security games")
    a = gm.add_parser("run", parents=[common])
    a.add_argument("name", help=", ".join(GAMES))
    a.add_argument("--trials", type=int, default=100)
    a.set_defaults(fn=cmd_game_run)

    a = sub.add_parser("serve", help="run the salt or prover service", parents=[common])
    a.add_argument("role", choices=("salt", "prover"))
    a.add_argument("--host", default="127.0.0.1")
    a.add_argument("--port", type=int)
    a.set_defaults(fn=cmd_serve)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = config_mod.load(args.config)
        if args.state:
            cfg = config_mod.from_dict({**_as_dict(cfg), "state_dir": args.state})
        return args.fn(args, Store(cfg))
    except (UsageError, ConfigInvalid, StateError) as exc:
        print(f"zklogin: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _as_dict(cfg) -> dict:
    d = dataclasses.asdict(cfg)
    d["issuers"] = list(d["issuers"])
    return d


if __name__ == "__main__":
    sys.exit(main())
