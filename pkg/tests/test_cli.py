"""Command-line surface: outputs, manifests, replay, and exit codes."""

from __future__ import annotations

import filecmp
import json

import pytest

from slotmac import alpha_optimal, beta3, beta4, builtin, expected_y
from slotmac.cli import main
from slotmac.dsl import machine_source
from slotmac.strategies import corpus_dir


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "slotmac" in capsys.readouterr().out


def test_validate_good_file(capsys):
    path = corpus_dir() / "four_state.strat"
    code, out, err = run(["validate", str(path)], capsys)
    assert code == 0
    assert "ok" in out and "four_state" in out and "4 states" in out


def test_validate_echo_roundtrip(capsys, tmp_path):
    path = corpus_dir() / "three_state.strat"
    code, out, _ = run(["validate", "--echo", str(path)], capsys)
    assert code == 0
    echoed = out.split("\n", 1)[1]
    assert echoed.strip() == machine_source(builtin("three_state")).strip()


def test_validate_bad_file(capsys, tmp_path):
    bad = tmp_path / "broken.strat"
    bad.write_text("machine broken\nstart a\nstate a transmit 2\nend\n")
    code, out, err = run(["validate", str(bad)], capsys)
    assert code == 1
    assert "outside [0, 1]" in out
    assert "broken.strat:3:18: error" in out


def test_validate_missing_file(capsys, tmp_path):
    code, _, err = run(["validate", str(tmp_path / "nope.strat")], capsys)
    assert code == 1


def test_analytics_table_values(capsys, tmp_path):
    code, out, _ = run(
        ["analytics", "--t-min", "1", "--t-max", "6", "--out-dir", str(tmp_path)], capsys
    )
    assert code == 0
    lines = (tmp_path / "analytics.csv").read_text().strip().splitlines()
    assert lines[0] == "T,alpha,expected_y,beta3,beta4"
    assert len(lines) == 7
    for line in lines[1:]:
        T, alpha, ey, b3, b4 = line.split(",")
        T = int(T)
        assert float(alpha) == pytest.approx(float(alpha_optimal(T)), rel=1e-12)
        assert float(ey) == pytest.approx(float(expected_y(T)), rel=1e-12)
        assert float(b3) == pytest.approx(float(beta3(T)), rel=1e-12)
        assert float(b4) == pytest.approx(float(beta4(T)), rel=1e-12)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "analytics"
    assert "analytics.csv" in manifest["outputs"]


def test_capture_solve_csv(capsys, tmp_path):
    code, out, _ = run(
        ["capture", "solve", "--n-max", "7", "--out-dir", str(tmp_path)], capsys
    )
    assert code == 0
    lines = (tmp_path / "capture_table.csv").read_text().strip().splitlines()
    assert len(lines) == 8
    n, p, z = lines[3].split(",")
    assert (int(n), float(p), float(z)) == (3, pytest.approx(0.411972, abs=1e-4), pytest.approx(1.787955, abs=1e-5))
    assert "z3" in out or "1.7879" in out


def test_capture_simulate_json(capsys, tmp_path):
    code, out, _ = run(
        [
            "capture", "simulate", "--users", "3", "--episodes", "20000",
            "--seed", "5", "--out-dir", str(tmp_path),
        ],
        capsys,
    )
    assert code == 0
    data = json.loads((tmp_path / "capture_sim.json").read_text())
    assert data["users"] == 3
    assert data["episodes"] == 20000
    assert abs(data["mean"] - 1.787955) < 5 * data["stderr"]


def test_capture_converse_json(capsys, tmp_path):
    code, out, _ = run(
        ["capture", "converse", "--episodes", "20000", "--out-dir", str(tmp_path)], capsys
    )
    assert code == 0
    data = json.loads((tmp_path / "converse.json").read_text())
    assert data["relaxation"]["value"] == pytest.approx(data["relaxation"]["z3"], abs=1e-4)
    assert all(w["inside"] for w in data["windows"])


def test_multichannel_simulate_json(capsys, tmp_path):
    code, out, _ = run(
        [
            "multichannel", "simulate", "--users", "3", "--channels", "2",
            "--episodes", "30000", "--out-dir", str(tmp_path),
        ],
        capsys,
    )
    assert code == 0
    data = json.loads((tmp_path / "multichannel_sim.json").read_text())
    assert abs(data["mean"] - 4 / 3) < 5 * data["stderr"]


def test_multichannel_optimize(capsys, tmp_path):
    code, out, _ = run(
        ["multichannel", "optimize", "--emit-plot-data", "--out-dir", str(tmp_path)], capsys
    )
    assert code == 0
    data = json.loads((tmp_path / "multichannel_opt.json").read_text())
    three = data["three_users_two_channels"]
    assert three["full"]["value"] == pytest.approx(4 / 3, abs=1e-4)
    assert three["independent"]["value"] == pytest.approx(1.343727, abs=1e-4)
    assert data["two_users"]["m=2"] == pytest.approx(4 / 3, rel=1e-12)
    sweep = (tmp_path / "multichannel_sweep.csv").read_text().strip().splitlines()
    assert sweep[0] == "family,p,q,r,beta,theta,value"
    assert len(sweep) > 50
    best = min(
        float(row.split(",")[-1]) for row in sweep[1:] if row.startswith("independent,")
    )
    assert best == pytest.approx(three["independent"]["value"], abs=1e-3)


def test_tournament_outputs_and_replay(capsys, tmp_path):
    first = tmp_path / "first"
    code, out, _ = run(
        [
            "tournament", "--entrants", "four_state,three_state,never",
            "--horizon", "30", "--runs", "2000", "--seed", "9",
            "--out-dir", str(first),
        ],
        capsys,
    )
    assert code == 0
    assert (first / "score_matrix.csv").exists()
    assert (first / "merit.json").exists()
    manifest = json.loads((first / "manifest.json").read_text())
    assert manifest["command"] == "tournament"
    assert "jobs" not in manifest["options"]

    second = tmp_path / "second"
    code, out, _ = run(
        ["replay", str(first / "manifest.json"), "--jobs", "3", "--out-dir", str(second)],
        capsys,
    )
    assert code == 0
    match, mismatch, errors = filecmp.cmpfiles(
        first, second, ["score_matrix.csv", "merit.json", "manifest.json"], shallow=False
    )
    assert mismatch == [] and errors == []


def test_tournament_merit_sanity(capsys, tmp_path):
    code, out, _ = run(
        [
            "tournament", "--entrants", "four_state,never", "--horizon", "50",
            "--runs", "3000", "--seed", "4", "--out-dir", str(tmp_path),
        ],
        capsys,
    )
    assert code == 0
    merit = json.loads((tmp_path / "merit.json").read_text())
    assert merit["beta_baseline"] == "never"
    rows = {r["name"]: r for r in merit["entrants"]}
    assert abs(rows["four_state"]["beta"] - 48.0) < 0.1


def test_tournament_transcripts(capsys, tmp_path):
    code, out, _ = run(
        [
            "tournament", "--entrants", "tft0,tft1", "--horizon", "10",
            "--runs", "50", "--dump-transcripts", "2", "--out-dir", str(tmp_path),
        ],
        capsys,
    )
    assert code == 0
    data = json.loads((tmp_path / "transcripts.json").read_text())
    entries = data["transcripts"]
    assert len(entries) == 3  # the 2-entrant round robin has 3 pairings
    assert [e["pairing"] for e in entries] == [["tft0", "tft0"], ["tft0", "tft1"], ["tft1", "tft1"]]
    for entry in entries:
        assert len(entry["games"]) == 2
        for game in entry["games"]:
            assert len(game["slots"]) == 10
            for a, b, feedback in game["slots"]:
                assert feedback == a + b
    # opposite-phase mirrors alternate solo slots for the whole game
    crossed = entries[1]["games"][0]
    assert crossed["scores"] == [5, 5]


def test_seed_env_fallback(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("SLOTMAC_SEED", "123")
    run(
        ["capture", "simulate", "--users", "2", "--episodes", "5000", "--out-dir", str(tmp_path / "a")],
        capsys,
    )
    monkeypatch.delenv("SLOTMAC_SEED")
    run(
        [
            "capture", "simulate", "--users", "2", "--episodes", "5000",
            "--seed", "123", "--out-dir", str(tmp_path / "b"),
        ],
        capsys,
    )
    a = json.loads((tmp_path / "a" / "capture_sim.json").read_text())
    b = json.loads((tmp_path / "b" / "capture_sim.json").read_text())
    assert a == b


def test_bad_arguments_exit_one(capsys, tmp_path):
    code, _, err = run(["capture", "simulate", "--users", "0", "--episodes", "10"], capsys)
    assert code == 1
    assert err.strip()


def test_unknown_entrant_exit_one(capsys):
    code, _, err = run(["tournament", "--entrants", "four_state,zzz", "--runs", "10"], capsys)
    assert code == 1
    assert "zzz" in err
