"""Minimum-time capture: table solver, policies, simulation, and the
supporting evidence that the table cannot be beaten by much."""

from __future__ import annotations

import math

import numpy as np
import pytest

from slotmac import (
    FixedProbabilityPolicy,
    GroupSplittingPolicy,
    RngStream,
    capture_objective,
    converse_checks,
    play_capture_episode,
    simulate_capture,
    solve_capture_table,
)
from slotmac.capture import (
    capture_upper_bound,
    minimize_three_user_relaxation,
    simulate_virtual_pair,
    three_user_relaxation,
)

# reference solution of the recursion, one row per group size
REFERENCE = {
    1: (1.0, 1.0),
    2: (0.5, 2.0),
    3: (0.411972, 1.787955),
    4: (0.302995, 2.134543),
    5: (0.238639, 2.155752),
    6: (0.191461, 2.262458),
    7: (0.166629, 2.275431),
}


def test_table_matches_reference(capture_table):
    for n, (p, z) in REFERENCE.items():
        assert capture_table.probs[n] == pytest.approx(p, abs=1e-4), n
        assert capture_table.values[n] == pytest.approx(z, abs=1e-5), n


def test_three_beats_two(capture_table):
    # the counterintuitive row: three users resolve faster than two
    assert capture_table.values[3] < capture_table.values[2]
    assert min(capture_table.values[2:]) == capture_table.values[3]


def test_table_fixed_point(capture_table):
    # each solved value must reproduce itself through the objective
    for n in range(2, 8):
        z = capture_objective(n, capture_table.probs[n], capture_table.values)
        assert z == pytest.approx(capture_table.values[n], abs=1e-9)


def test_table_grid_oracle(capture_table):
    # a dumb dense scan cannot find a better probability
    for n in (2, 3, 4):
        best = min(
            capture_objective(n, p, capture_table.values)
            for p in np.linspace(1e-4, 1 - 1e-4, 2001)
        )
        assert capture_table.values[n] <= best + 1e-6


def test_rows_and_csv(capture_table):
    rows = capture_table.rows()
    assert [r[0] for r in rows] == list(range(1, 8))
    assert rows[0][1:] == (1.0, 1.0)
    text = capture_table.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "n,p,z"
    assert len(lines) == 8
    n, p, z = lines[3].split(",")
    assert int(n) == 3
    assert float(p) == pytest.approx(REFERENCE[3][0], abs=1e-6)
    assert float(z) == pytest.approx(REFERENCE[3][1], abs=1e-6)


def test_solver_input_validation():
    with pytest.raises(ValueError):
        solve_capture_table(0)


def test_two_users_left_transmit_half(capture_table):
    policy = GroupSplittingPolicy(capture_table)
    assert policy.transmit_prob(2) == pytest.approx(0.5, abs=1e-4)
    assert policy.transmit_prob(1) == 1.0


def test_survivor_prefers_smaller_expected_time(capture_table):
    policy = GroupSplittingPolicy(capture_table)
    # of 3, a pair transmitted: the silent singleton finishes next slot
    assert policy.survivor(3, 2) == "silent"
    assert policy.survivor(3, 1) == "transmitters"
    # of 6, three transmitted: both halves look alike, keep the transmitters
    assert policy.survivor(6, 3) == "transmitters"
    # of 7, transmitted side of 3 beats silent side of 4
    assert policy.survivor(7, 3) == "transmitters"
    assert policy.survivor(7, 4) == "silent"
    # survivor is only consulted on a proper split; mirror-image calls must
    # never disagree about which physical side lives on
    for group in range(2, 8):
        for k in range(1, group):
            a = policy.survivor(group, k)
            b = policy.survivor(group, group - k)
            if 2 * k != group:
                assert (a == "transmitters") == (b == "silent"), (group, k)


def test_three_user_pair_collision_resolves_next_slot(capture_table):
    # hunt for an episode whose first slot is a two-user collision, then the
    # lone silent user must take slot 2 solo
    policy = GroupSplittingPolicy(capture_table)
    seen = False
    for k in range(200):
        res = play_capture_episode(policy, 3, RngStream(2, (70, k)))
        first = [sum(row) for row in res.decisions]
        if first[0] == 2:
            assert res.capture_slot == 2
            silent = res.decisions[0].index(0)
            assert res.decisions[1][silent] == 1
            assert res.winner == silent
            seen = True
    assert seen


def test_simulation_matches_table(capture_table):
    policy = GroupSplittingPolicy(capture_table)
    for n in (2, 3, 5):
        s = simulate_capture(policy, n, episodes=120_000, seed=5)
        assert s.censored == 0
        assert abs(s.mean - capture_table.values[n]) < 4 * s.stderr, n


def test_scalar_episodes_agree_with_table(capture_table):
    policy = GroupSplittingPolicy(capture_table)
    times = [
        play_capture_episode(policy, 3, RngStream(8, (71, k))).capture_slot
        for k in range(3000)
    ]
    mean = float(np.mean(times))
    stderr = float(np.std(times, ddof=1)) / math.sqrt(len(times))
    assert abs(mean - capture_table.values[3]) < 4 * stderr


def test_fixed_probability_mean():
    # n users at fixed p resolve as a geometric with success n p (1-p)^(n-1)
    n, p = 4, 0.3
    s = simulate_capture(FixedProbabilityPolicy(p), n, episodes=80_000, seed=6)
    want = 1.0 / (n * p * (1 - p) ** (n - 1))
    assert abs(s.mean - want) < 4 * s.stderr


def test_censoring_counted_not_averaged():
    # transmit probability so high that 4 users nearly always collide
    s = simulate_capture(FixedProbabilityPolicy(0.999), 4, episodes=400, seed=7, max_slots=30)
    assert s.censored > 0
    assert s.completed + s.censored == s.episodes
    d = s.to_json_dict()
    assert d["censored"] == s.censored


def test_summary_json_roundtrip(capture_table):
    s = simulate_capture(GroupSplittingPolicy(capture_table), 2, episodes=5000, seed=8)
    d = s.to_json_dict()
    assert d["episodes"] == 5000
    assert d["mean"] == pytest.approx(s.mean)


def test_virtual_pair_expectation():
    s = simulate_virtual_pair(episodes=100_000, seed=9)
    assert abs(s.mean - 2.0) < 4 * s.stderr


def test_relaxation_objective_spot_values(capture_table):
    # at a = c the problem is symmetric and strictly worse than the optimum
    sym = three_user_relaxation(1 / 3, 1 / 3)
    a, c, val = minimize_three_user_relaxation()
    assert val < sym
    assert c == pytest.approx(0.0, abs=1e-2)
    assert val == pytest.approx(capture_table.values[3], abs=1e-4)
    assert 0 < a < 1


def test_relaxation_feasible_region():
    from slotmac.capture import _relaxation_feasible

    assert _relaxation_feasible(np.float64(1 / 3), np.float64(1 / 3))
    assert not _relaxation_feasible(np.float64(0.9), np.float64(0.9))
    assert not _relaxation_feasible(np.float64(-0.1), np.float64(0.2))
    # the cube-sum cap rules out near-deterministic corners
    assert not _relaxation_feasible(np.float64(0.99), np.float64(0.0))


def test_upper_bound_monotone_toward_e():
    vals = [capture_upper_bound(n) for n in range(2, 30)]
    assert all(v <= math.e + 1e-12 for v in vals)
    assert vals == sorted(vals)
    assert capture_upper_bound(2) == pytest.approx(2.0)


def test_converse_report(capture_table):
    rep = converse_checks(capture_table, episodes=50_000, seed=3)
    assert abs(rep.virtual_pair.mean - 2.0) < 4 * rep.virtual_pair.stderr
    assert rep.relaxation_value == pytest.approx(capture_table.values[3], abs=1e-4)
    assert rep.z3 == pytest.approx(capture_table.values[3], abs=1e-9)
    for n, z, bound in rep.bounds:
        assert z <= bound + 1e-9
        assert bound <= math.e + 1e-12
        assert z == pytest.approx(capture_table.values[n], abs=1e-12)
    for w in rep.windows:
        assert w.low <= w.p <= w.high, w.n
        assert w.inside
        assert w.p == pytest.approx(capture_table.probs[w.n], abs=1e-12)
    d = rep.to_json_dict()
    assert d["relaxation"]["value"] == pytest.approx(rep.relaxation_value)
    assert all(row["z"] <= row["e"] for row in d["bounds"])
