"""Compiled vs pure-Python evaluation kernel: witness solving and constraint checking.

    python benchmarks/bench_kernel.py [--circuit sha|full] [--repeat N]

``sha`` is a standalone SHA-256 circuit over a 256-byte message (about
135k constraints); ``full`` is the default zkLogin circuit (about 1M, slow
under the Python kernel).
"""

import argparse
import hashlib
import json
import time

from zklogin import kernel
from zklogin.csys import LC, Assignment, ConstraintSystem
from zklogin.gadgets.core import ByteVar, Constants
from zklogin.gadgets.sha256 import digest_from_words, fill_message, g_sha256


def sha_circuit(max_len: int = 256):
    cs = ConstraintSystem()
    Constants.of(cs)
    msg = cs.alloc_many(max_len)
    length = cs.alloc()
    sha = g_sha256(cs, [ByteVar(v) for v in msg], LC({length: 1}), max_len)
    data = bytes(range(200))

    def fill(z):
        z.set_many(msg, fill_message(data, max_len))
        z[length] = len(data)

    def check(z):
        got = digest_from_words(z.get_many(sha.digest))
        assert got == hashlib.sha256(data).digest()

    return cs, fill, check


def full_circuit():
    import random

    from zklogin.harness.world import World
    from zklogin.proto.zklogin import get_witness
    from zklogin.zkjwt import PublicInputs, WitnessBundle, fill_witness

    world = World.create(seed=0)
    rng = random.Random(0)
    acct = world.account(rng)
    w, jwk = get_witness(world.pk, world.iss, acct.zkaddr, world.epoch, acct.user, rng)
    ckt = world.pk.circuit
    pub = PublicInputs(jwk.n, world.iss, acct.zkaddr, world.epoch, w.vk_u, w.jwt.header_b64)
    ref = fill_witness(ckt, WitnessBundle(w.jwt, w.salt, w.r), pub)
    n_pub = ckt.cs.num_public

    def fill(z):
        # inputs only: public vector plus the prover-supplied witness prefix
        z.buf.set_many(0, ref.buf.get_many(0, n_pub))
        inputs = [v for k in ("msg", "sig") for v in ckt.wit[k]]
        inputs += [ckt.wit[k] for k in ("len", "hdr_len", "salt", "r")]
        inputs += [v for vs in ckt.wit["hints"].values() for v in vs]
        z.set_many(inputs, ref.get_many(inputs))

    def check(z):
        assert z.get_many(range(ckt.cs.num_vars)) == ref.get_many(range(ckt.cs.num_vars))

    return ckt.cs, fill, check


def bench(cs, fill, check, impl_name: str, repeat: int) -> dict:
    sysc = cs.compile()
    eng = sysc.make_engine(kernel.load(impl_name))
    solve_t, check_t = [], []
    for _ in range(repeat):
        buf = eng.new_buffer()
        z = Assignment(cs, buf)
        fill(z)
        t0 = time.perf_counter()
        eng.solve(buf)
        solve_t.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        bad = eng.first_violation(buf)
        check_t.append(time.perf_counter() - t0)
        assert bad < 0, f"violation at {bad}"
        check(z)
    return {"kernel": impl_name, "solve_s": min(solve_t), "check_s": min(check_t)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--circuit", choices=("sha", "full"), default="sha")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    cs, fill, check = sha_circuit() if args.circuit == "sha" else full_circuit()
    rows = [bench(cs, fill, check, name, args.repeat) for name in ("cython", "python")]
    c, p = rows
    print(json.dumps({"circuit": args.circuit, "constraints": cs.num_constraints, "results": rows,
                      "speedup_solve": p["solve_s"] / c["solve_s"],
                      "speedup_check": p["check_s"] / c["check_s"]}, indent=1))


if __name__ == "__main__":
    main()
