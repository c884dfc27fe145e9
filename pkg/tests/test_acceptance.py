"""Acceptance checks. Each test prints one PASS/FAIL line (collected and shown
again in the terminal summary). Every threshold is a named constant here.

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python tests/test_acceptance.py``.
"""

import json
import random
import subprocess
import sys
import time

import diffcheck
import pytest

from zklogin.gadgets.slicing import g_slice_naive, g_slice_packed
from zklogin.harness import attacks
from zklogin.harness.games import SaltReader, run_unlinkability, run_zklogin_security
from zklogin.harness.world import World
from zklogin.proto.zklogin import zklogin_sign, zklogin_verify

# circuit size and shape
TOTAL_MIN, TOTAL_MAX = 800_000, 1_400_000
SHA_SHARE = (0.55, 0.80)
RSA_SHARE = (0.08, 0.20)
B64_PARSE_SHARE_MAX = 0.25
BUILD_SECONDS_MAX = 60.0
# base64 cost per character
B64_PER_CHAR = (40.0, 100.0)
# slicing
SLICE_N, SLICE_M, SLICE_FACTOR = 1600, 100, 3
SLICE_EXHAUSTIVE_N = 64
# completeness
FLOWS, FLOWS_SECONDS_MAX = 100, 120.0
# attacks and games
ATTACK_SEEDS = 100
EXPECTED_REGIONS = {"over_extend_slice": "claim", "escaped_quote_key": "top_level",
                    "nonce_foreign_key": "nonce", "aud_swap": "addr"}
SECURITY_STRATEGIES = ("replay_expired_witness", "cross_address", "sigma_u_transplant")
SECURITY_TRIALS = 1000
UNLINK_TRIALS, UNLINK_ADV_MAX = 1000, 0.05
CONTROL_TRIALS, CONTROL_ADV_MIN = 100, 0.4
# differential testing
ORACLE_CASES = 1000

LINES: list = []


def report(tag: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} {tag}: {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def test_c01_constraint_counts(tmp_path):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "zklogin", "circuit", "stats", "--json",
                           "--state", str(tmp_path)], capture_output=True, text=True, check=True)
    secs = time.perf_counter() - t0
    data = json.loads(proc.stdout)
    total = data["total"]
    share = {k: v["share"] for k, v in data["regions"].items()}
    sha, rsa = share["sha256"], share["rsa"]
    rest = share["base64"] + share["parse"]
    ok = (TOTAL_MIN <= total <= TOTAL_MAX and SHA_SHARE[0] <= sha <= SHA_SHARE[1]
          and RSA_SHARE[0] <= rsa <= RSA_SHARE[1] and rest <= B64_PARSE_SHARE_MAX
          and secs < BUILD_SECONDS_MAX)
    report("C1 constraint counts", ok,
           f"total={total:,} sha256={sha:.3f} rsa={rsa:.3f} base64+parse={rest:.3f} "
           f"build+count={secs:.1f}s (fresh process)")


def test_c02_base64_cost():
    costs = [diffcheck.base64_cost_per_char(allow_nul_tail=n) for n in (False, True)]
    ok = all(B64_PER_CHAR[0] <= c <= B64_PER_CHAR[1] for c in costs)
    report("C2 base64 per-char cost", ok, f"plain={costs[0]:.2f} nul-tail={costs[1]:.2f}")


def test_c03_slicing():
    packed = diffcheck.slice_cost(g_slice_packed, SLICE_N, SLICE_M)
    naive = diffcheck.slice_cost(g_slice_naive, SLICE_N, SLICE_M)
    n_p, bad_p = diffcheck.slice_exhaustive(SLICE_EXHAUSTIVE_N, g_slice_packed)
    n_n, bad_n = diffcheck.slice_exhaustive(SLICE_EXHAUSTIVE_N, g_slice_naive)
    ok = packed * SLICE_FACTOR < naive and not bad_p and not bad_n
    report("C3 slicing", ok,
           f"packed={packed:,} naive={naive:,} ratio={naive / packed:.1f}x; exhaustive n<={SLICE_EXHAUSTIVE_N}: "
           f"{n_p:,}+{n_n:,} evaluations, {len(bad_p) + len(bad_n)} failures")


def test_c04_completeness():
    world = World.create(seed=44)
    rng = random.Random(44)
    t0 = time.perf_counter()
    verified = 0
    for _ in range(FLOWS):
        acct = world.account(rng)
        t_max = rng.choice(world.fresh_epochs())
        msg = rng.randbytes(rng.randrange(1, 64))
        sig = zklogin_sign(world.pk, acct.zkaddr, world.iss, msg, t_max, acct.session)
        t_cur = rng.randrange(t_max - world.delta + 1, t_max + 1)
        verified += zklogin_verify(world.pk, acct.zkaddr, world.iss, msg, sig, t_cur)
    secs = time.perf_counter() - t0
    report("C4 end-to-end completeness", verified == FLOWS and secs < FLOWS_SECONDS_MAX,
           f"{verified}/{FLOWS} verified in {secs:.1f}s (transparent backend)")


def test_c05_freshness(world):
    rng = random.Random(5)
    acct = world.account(rng)
    t_max = world.epoch + world.delta - 1
    sig = zklogin_sign(world.pk, acct.zkaddr, world.iss, b"m", t_max, acct.session)

    def v(t_cur):
        return zklogin_verify(world.pk, acct.zkaddr, world.iss, b"m", sig, t_cur)

    at_max, after, too_far = v(t_max), v(t_max + 1), v(t_max - world.delta)
    report("C5 freshness boundaries", (at_max, after, too_far) == (1, 0, 0),
           f"T_cur=T_max -> {at_max}; T_cur=T_max+1 -> {after}; T_max=T_cur+delta -> {too_far}")


def test_c06_attack_corpus(world):
    res = attacks.run_attacks(tuple(attacks.CORPUS), range(ATTACK_SEEDS), world)
    problems = []
    for name, verdicts in res.items():
        if not all(v.rejected for v in verdicts):
            problems.append(f"{name} accepted")
        want = EXPECTED_REGIONS.get(name)
        if want and not all(v.region and want in v.region.split("/") for v in verdicts):
            problems.append(f"{name} outside region {want}")
    regions = ", ".join(f"{n}@{'|'.join(sorted({v.region for v in res[n]}))}" for n in EXPECTED_REGIONS)
    report("C6 attack corpus", not problems,
           f"{len(res)} cases x {ATTACK_SEEDS} seeds rejected; {regions}"
           + (f"; problems: {problems}" if problems else ""))


def test_c07_security_game(world):
    wins = {s: run_zklogin_security(s, SECURITY_TRIALS, seed=7, world=world).wins
            for s in SECURITY_STRATEGIES}
    report("C7 security game", not any(wins.values()),
           f"wins over {SECURITY_TRIALS} trials each: {wins}")


def test_c08_unlinkability(sim_world, world):
    sim = run_unlinkability(UNLINK_TRIALS, seed=8, world=sim_world)
    ctl = run_unlinkability(CONTROL_TRIALS, seed=8, world=world, distinguishers=(SaltReader,))
    reader = ctl.details["by_distinguisher"]["salt_reader"]
    ok = sim.advantage < UNLINK_ADV_MAX and reader > CONTROL_ADV_MIN
    by = {k: round(v, 4) for k, v in sim.details["by_distinguisher"].items()}
    report("C8 unlinkability", ok,
           f"simulation max advantage={sim.advantage:.4f} over {UNLINK_TRIALS} trials {by}; "
           f"transparent salt_reader advantage={reader:.3f} over {CONTROL_TRIALS} trials")


def test_c09_oracle_equivalence():
    sha_n, sha_bad = diffcheck.sha_differential(ORACLE_CASES, seed=9)
    rsa_n, rsa_bad, rsa_valid = diffcheck.rsa_differential(ORACLE_CASES, seed=9)
    b64_n, b64_bad = diffcheck.b64_differential(ORACLE_CASES, seed=9)
    js_n, js_bad = diffcheck.json_differential(ORACLE_CASES, seed=9)
    counts = {"sha256": (sha_n, len(sha_bad)), "rsa": (rsa_n, len(rsa_bad)),
              "base64": (b64_n, len(b64_bad)), "json": (js_n, len(js_bad))}
    ok = all(n >= ORACLE_CASES and bad == 0 for n, bad in counts.values())
    report("C9 oracle equivalence", ok,
           "cases/mismatches " + ", ".join(f"{k}={n}/{b}" for k, (n, b) in counts.items())
           + f"; rsa oracle-valid signatures={rsa_valid}")


def test_c10_not_reproducible():
    LINES.append("N/A  C10 succinct-proof size and latency, validator throughput: "
                 "no succinct proof system here; see the transparent and simulation backends")
    pytest.skip("proof size, proving latency and throughput need a succinct backend")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
