import json
import random

import pytest

from zklogin.harness import attacks, games
from zklogin.harness.games import (
    Context,
    GameDegenerate,
    SecurityChallenger,
    run_tws_games,
    run_unlinkability,
    run_zklogin_security,
)


@pytest.mark.parametrize("strategy", ["replay_expired_witness", "cross_address", "sigma_u_transplant"])
def test_scripted_forgers_never_win(world, strategy):
    rep = run_zklogin_security(strategy, trials=30, seed=1, world=world)
    assert rep.wins == 0 and rep.advantage == 0
    assert all(not entry["win"] for entry in rep.details["log"])
    json.dumps(rep.to_json())


def test_honest_replay_verifies_but_is_excluded(world):
    rep = run_zklogin_security("honest_replay_before_expiry", trials=20, seed=2, world=world)
    assert rep.wins == 0
    assert rep.details["verified"] == 20 and rep.details["excluded"] == 20


def test_judge_counts_unrecorded_forgery_as_win(world):
    """Same forgery, oracle log wiped: the judge must now call it a win."""
    ch = SecurityChallenger(world, seed=3)
    rng = random.Random(3)
    forgery = games.honest_replay_before_expiry(ch, rng)
    assert not ch.judge(forgery)["win"]
    ch.new_trial()
    out = ch.judge(forgery)
    assert out["verify"] == 1 and out["win"]


def test_security_game_deterministic(world):
    a = run_zklogin_security("cross_address", trials=10, seed=4, world=world)
    b = run_zklogin_security("cross_address", trials=10, seed=4, world=world)
    assert a.details["log"] == b.details["log"]


def test_unlinkability_simulation(sim_world):
    rep = run_unlinkability(trials=30, seed=1, world=sim_world)
    assert rep.details["backend"] == "simulation"
    assert set(rep.details["by_distinguisher"]) == {"salt_dictionary", "byte_statistics", "salt_reader"}
    assert rep.advantage <= 0.5


def test_unlinkability_transparent_leaks(world):
    rep = run_unlinkability(trials=20, seed=1, world=world)
    assert rep.details["by_distinguisher"]["salt_reader"] == 0.5


def test_unlinkability_refuses_different_issuers(sim_world):
    ctx = (Context("1", "wallet-app", sim_world.iss), Context("2", "wallet-app", "https://other"))
    with pytest.raises(GameDegenerate):
        run_unlinkability(trials=1, world=sim_world, contexts=ctx)


def test_salt_dictionary_finds_small_salts(world):
    ctx = games.default_contexts(world)
    d = games.SaltDictionary(world, ctx)
    from zklogin.proto.address import derive_address

    addr = derive_address(ctx[1].stid, ctx[1].aud, ctx[1].iss, 17, world.pk.config)
    view = games.View(ctx, addr, b"", None, world.epoch)
    assert d.guess(view, random.Random(0)) == 1


def test_tws_unforgeability(world):
    rep = run_tws_games("unforgeability", trials=10, seed=1, world=world)
    assert rep.wins == 0
    assert rep.details["verified"]["queried_tag"] == 10


def test_tws_witness_hiding(sim_world):
    rep = run_tws_games("witness-hiding", trials=30, seed=1, world=sim_world)
    assert rep.details["by_distinguisher"]["verifies"] == 0
    with pytest.raises(ValueError):
        run_tws_games("witness-hiding", trials=1, world=games.World.create(seed=0))
    with pytest.raises(ValueError):
        run_tws_games("nope")


@pytest.mark.parametrize("name", list(attacks.CORPUS))
def test_attack_rejected(world, name):
    v = attacks.run_attack(name, world=world, seed=0)
    assert v.rejected, v
    if name in attacks.CIRCUIT_CASES:
        assert v.region is not None
    json.dumps(v.to_json())


def test_expected_circuit_regions(world):
    expect = {"over_extend_slice": "claim", "escaped_quote_key": "top_level",
              "nonce_foreign_key": "nonce", "aud_swap": "addr"}
    for name, region in expect.items():
        v = attacks.run_attack(name, world=world, seed=1)
        assert region in v.region.split("/")


def test_corpus_report_and_strict(world):
    res = attacks.run_attacks(corpus=("sigma_u_transplant",), seeds=range(2), world=world, strict=True)
    rep = attacks.corpus_report(res)
    assert rep["wins"] == 0 and rep["trials"] == 2

    def accept(world, rng):
        return attacks.Verdict("accept", False)

    attacks.CORPUS["_accept"] = accept
    try:
        with pytest.raises(attacks.CorpusCaseUnexpectedlyAccepted):
            attacks.run_attacks(corpus=("_accept",), world=world, strict=True)
    finally:
        del attacks.CORPUS["_accept"]
