import json
import subprocess
import sys
from fractions import Fraction as F

import pytest

from coalconv import io as cio
from coalconv.cli import main
from coalconv.conventions import build_folk_automaton, roommates_figure1
from coalconv.library import gdiv3, pair_grab_game, prisoners_dilemma, roommates_game
from coalconv.simulate import run, script_from_outcomes
from coalconv.stability import verify

from conftest import GAMES, REPO


def same_structure(a, b):
    return (a.n, a.states, a.policies, a.initial, a.tu) == (b.n, b.states, b.policies, b.initial, b.tu)


def cli(capsys, *argv):
    rc = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return rc, out, err


def report(capsys, *argv):
    rc, out, err = cli(capsys, *argv)
    assert rc == 0, (out, err)
    return json.loads(out)


# -- scalars and documents --------------------------------------------------------

def test_rationals():
    assert cio.fmt_q(F(3, 4)) == "3/4" and cio.fmt_q(2) == "2"
    assert cio.parse_q("3/4") == F(3, 4) and cio.parse_q("0.45") == F(9, 20) and cio.parse_q(7) == 7
    for bad in (0.5, True, "x", None):
        with pytest.raises(cio.DocumentError):
            cio.parse_q(bad)
    assert cio.render_value(F(1, 3)) == {"exact": "1/3", "decimal": "0.333333333333"}
    assert cio.render_value(0.1)["exact"] is None


@pytest.mark.parametrize("g", [roommates_game(), gdiv3(), prisoners_dilemma(), pair_grab_game()],
                         ids=["room", "div3", "pd", "grab"])
def test_game_round_trip(g):
    doc = cio.game_to_doc(g, F(3, 5))
    back, d = cio.game_from_doc(json.loads(cio.dumps(doc)))
    assert d == F(3, 5)
    assert back.payoffs == g.payoffs and back.labels == g.labels and back.mode == g.mode
    for a in range(g.m):
        for C in range(1, 1 << g.n):
            assert sorted(back.effectivity(C, a)) == sorted(g.effectivity(C, a))


def test_shipped_games_parse():
    for p in GAMES.glob("*.json"):
        doc = json.loads(p.read_text())
        if doc.get("kind") in ("automaton", "script"):
            continue
        g, _ = cio.game_from_doc(doc)
        assert g.m > 0


def test_bad_documents():
    doc = cio.game_to_doc(gdiv3())
    with pytest.raises(cio.DocumentError):
        cio.game_from_doc({**doc, "format_version": 2})
    with pytest.raises(cio.DocumentError):
        cio.game_from_doc({k: v for k, v in doc.items() if k != "players"})
    with pytest.raises(cio.DocumentError):
        cio.parse_coalition_doc([0, 1], 3)


def test_automaton_round_trip():
    g = pair_grab_game()
    aut, _ = build_folk_automaton(g, (2, 2, 2), 0.97, "tupt")
    back = cio.automaton_from_doc(json.loads(cio.dumps(cio.automaton_to_doc(aut))))
    assert same_structure(back, aut)
    assert back.meta["regime"] == "tupt"
    assert verify(back, g, 0.97).stable


def test_figure1_document_matches_builder():
    g = roommates_game()
    doc = json.loads((GAMES / "figure1.json").read_text())
    assert same_structure(cio.automaton_from_doc(doc), roommates_figure1(g))


def test_script_round_trip_replays_identically():
    g = roommates_game()
    aut = roommates_figure1(g)
    s = script_from_outcomes([(0, 6, 2), (4, 3, 0)])
    back = cio.script_from_doc(json.loads(cio.dumps(cio.script_to_doc(s, g))), g)
    assert back == s
    assert run(aut, g, 0.6, back).payoff == run(aut, g, 0.6, s).payoff
    shipped = cio.script_from_doc(json.loads((GAMES / "bob_carol_block.json").read_text()), g)
    assert shipped == script_from_outcomes([(0, 6, 2)])


# -- CLI -------------------------------------------------------------------------------

def test_core_example(capsys):
    r = report(capsys, "core", "--game", GAMES / "gdiv3.json")
    assert not r["results"]["empty"]
    assert r["results"]["core"][0]["label"] == "(1,0,0)"
    assert all(c["payoffs"][1]["exact"] in ("0", "1/4") for c in r["results"]["core"])


def test_udelta_example(capsys):
    r = report(capsys, "simple", "udelta", "--minimal", "1,2;1,3", "--players", 3,
               "--point", "0,0.5,0.5", "--delta", "0.5")
    assert r["results"]["member"] is True
    r = report(capsys, "simple", "udelta", "--minimal", "1,2;1,3", "--players", 3,
               "--point", "0,0.5,0.5", "--delta", "0.49")
    assert r["results"]["member"] is False


def test_strict_ebeta_empty(capsys):
    r = report(capsys, "sets", "--game", GAMES / "gdiv3.json", "--kind", "ebeta", "--strict")
    assert r["results"]["status"] == "EMPTY"


def test_verify_witness_in_documents(capsys):
    r = report(capsys, "verify", "--game", GAMES / "roommates.json", "--automaton", GAMES / "figure1.json",
               "--delta", "0.45")
    assert r["results"]["verdict"] == "UNSTABLE"
    w = r["witnesses"][0]
    assert (w["state"], w["coalition"], w["successor"]) == ("AB|C", [2, 3], "AC|B")
    r = report(capsys, "verify", "--game", GAMES / "roommates.json", "--automaton", GAMES / "figure1.json",
               "--delta", "1/2", "--exact")
    assert r["results"]["verdict"] == "STABLE"


def test_build_then_verify_report(capsys, tmp_path):
    out = tmp_path / "b.json"
    rc, _, _ = cli(capsys, "build", "--game", GAMES / "pair_grab.json", "--target", "2,2,2", "--regime", "tupt",
                   "--delta", "0.97", "--out", out, "--automaton-out", tmp_path / "a.json")
    assert rc == 0
    assert json.loads(out.read_text())["results"]["verdict"] == "STABLE"
    for src in (out, tmp_path / "a.json"):
        r = report(capsys, "verify", "--game", GAMES / "pair_grab.json", "--automaton", src, "--delta", "0.97")
        assert r["results"]["verdict"] == "STABLE"


def test_simulate_report(capsys):
    r = report(capsys, "simulate", "--game", GAMES / "roommates.json", "--automaton", GAMES / "figure1.json",
               "--script", GAMES / "bob_carol_block.json", "--delta", "0.6")
    bob = float(r["results"]["payoff"][1]["decimal"])
    assert abs(bob - 1.8) < 1e-8
    assert r["results"]["path"][0]["block"] == [2, 3]


def test_iterate_dump(capsys, tmp_path):
    dump = tmp_path / "cells.csv"
    r = report(capsys, "iterate", "--game", GAMES / "gdiv3.json", "--delta", "0", "--resolution", 4,
               "--dump", dump, "--point", "1,0,0")
    assert r["results"]["members"] == 4
    assert r["results"]["point"]["member"] is True
    lines = dump.read_text().splitlines()
    assert lines[0] == "x1,x2,x3,member" and sum(l.endswith(",1") for l in lines) == 4


def test_reports_byte_identical(capsys):
    args = ["mindelta", "--game", GAMES / "gdiv3.json", "--regime", "core_reversion",
            "--grid", "0.3,0.5,0.9", "--path", "(0,1/2,1/2)", "--core", "(1,0,0)"]
    a = cli(capsys, *args)
    b = cli(capsys, *args)
    assert a[0] == 0 and a[1] == b[1]
    assert json.loads(a[1])["inputs_digest"] == json.loads(b[1])["inputs_digest"]


def test_timing_only_on_request(capsys):
    r = report(capsys, "core", "--game", GAMES / "gdiv3.json")
    assert "timing" not in r
    r = report(capsys, "core", "--game", GAMES / "gdiv3.json", "--timing")
    assert "seconds" in r["timing"]


def test_exit_codes(capsys, tmp_path):
    rc, _, err = cli(capsys, "core", "--game", tmp_path / "missing.json")
    assert rc == 1 and err
    rc, _, _ = cli(capsys, "sets", "--game", GAMES / "gdiv3.json", "--kind", "bogus")
    assert rc == 1
    rc, out, _ = cli(capsys, "build", "--game", GAMES / "roommates.json", "--target", "2,2,2",
                     "--regime", "ntu", "--delta", "0.5")
    assert rc == 2
    assert json.loads(out)["error"]["type"] == "DeltaTooSmall"
    bad = tmp_path / "bad.json"
    bad.write_text('{"format_version": 1, "players": 2, "payoffs": [[0.5, 1]]}')
    rc, out, _ = cli(capsys, "core", "--game", bad)
    assert rc == 2 and json.loads(out)["error"]["type"] == "DocumentError"


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "coalconv", "core", "--game", str(GAMES / "gdiv3.json")],
                       capture_output=True, text=True, cwd=REPO)
    assert p.returncode == 0
    assert json.loads(p.stdout)["results"]["empty"] is False
