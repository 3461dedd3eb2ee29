import json

import numpy as np
import pytest

from zrp.configuration import (
    Configuration,
    Trajectory,
    cesaro_profile,
    config_from_json,
    config_to_json,
    enumerate_particles,
    events_csv_string,
    intervals,
    leq,
    move,
    remove,
    replay,
    snapshots,
    summary_json,
    translate,
    trajectory_summary,
    truncate,
)
from zrp.engine import OPEN, killed, simulate
from zrp.errors import ConfigError, InvariantViolation
from zrp.kernel import nn_kernel_1d
from zrp.noise import HarrisNoise
from zrp.rates import power_rate


def _traj(T=1.0, seed=42, policy=OPEN, occ=None):
    cfg = Configuration(1, occ or {0: 2, 1: 1})
    return simulate(cfg, power_rate(2.0), nn_kernel_1d(0.5), policy, T,
                    HarrisNoise(seed))


def test_configuration_validation():
    with pytest.raises(ConfigError):
        Configuration(0, {})
    with pytest.raises(ConfigError):
        Configuration(1, {0: -1})
    with pytest.raises(ConfigError):
        Configuration(1, {0: 1.5})
    with pytest.raises(ConfigError):
        Configuration(2, {0: 1})  # site dim mismatch


def test_configuration_drops_empty_sites():
    c = Configuration(1, {0: 2, 5: 0})
    assert c.count(5) == 0
    assert 5 not in c.as_dict()
    assert c.total() == 2


def test_move_and_remove():
    c = Configuration(1, {0: 2})
    c2 = move(c, 0, 1)
    assert c2.as_dict() == {0: 1, 1: 1}
    assert c.as_dict() == {0: 2}  # immutable inputs
    assert remove(c2, 1).as_dict() == {0: 1}
    with pytest.raises(ConfigError):
        move(c, 1, 2)
    with pytest.raises(ConfigError):
        move(c, 0, 0)


def test_truncate_keeps_box():
    c = Configuration(1, {-5: 1, 0: 2, 3: 1})
    assert truncate(c, 3).as_dict() == {0: 2, 3: 1}
    c2 = Configuration(2, {(0, 0): 1, (2, 1): 1})
    assert truncate(c2, 1).as_dict() == {(0, 0): 1}


def test_leq_partial_order():
    a = Configuration(1, {0: 1, 1: 1})
    b = Configuration(1, {0: 2, 1: 1, 2: 3})
    assert leq(a, b)
    assert not leq(b, a)
    assert leq(a, a)
    with pytest.raises(ConfigError):
        leq(a, Configuration(2, {(0, 0): 1}))


def test_translate():
    c = Configuration(1, {0: 1, 2: 2})
    assert translate(c, 3).as_dict() == {3: 1, 5: 2}
    c2 = Configuration(2, {(1, 0): 1})
    assert translate(c2, (0, -1)).as_dict() == {(1, -1): 1}


def test_enumerate_particles_distance_order():
    c = Configuration(1, {-1: 2, 0: 1, 3: 1})
    # distance to 0 sorts 0 first, then the pair at -1, then 3
    assert enumerate_particles(c, 0) == [0, -1, -1, 3]
    # distance to 3 reverses the ranking
    assert enumerate_particles(c, 3) == [3, 0, -1, -1]


def test_enumerate_particles_tie_break_is_lexicographic():
    c = Configuration(2, {(0, 1): 1, (1, 0): 1, (0, 0): 1})
    assert enumerate_particles(c, (0, 0)) == [(0, 0), (0, 1), (1, 0)]


def test_cesaro_profile_flags():
    # constant density stays bounded
    flat = Configuration(1, {x: 1 for x in range(-40, 41)})
    _, bounded = cesaro_profile(flat, 20)
    assert bounded
    # eta(x) = |x| grows linearly: flagged unbounded
    lin = Configuration(1, {x: abs(x) for x in range(-40, 41) if x != 0})
    _, bounded = cesaro_profile(lin, 20)
    assert not bounded
    # a single point mass dilutes away: bounded
    point = Configuration(1, {0: 7})
    profile, bounded = cesaro_profile(point, 20)
    assert bounded
    assert profile[0] == pytest.approx(7.0 / 3.0)


def test_config_json_roundtrip():
    for c in (Configuration(1, {-2: 1, 0: 3}), Configuration(2, {(0, 1): 2})):
        assert config_from_json(config_to_json(c)) == c
    with pytest.raises(ConfigError):
        config_from_json({"d": 1})
    with pytest.raises(ConfigError):
        config_from_json({"d": 1, "sites": [{"x": [0], "n": 1}, {"x": [0], "n": 2}]})


def test_replay_matches_final():
    t = _traj(T=2.0)
    assert replay(t) == t.final


def test_replay_rejects_tampered_log():
    t = _traj(T=2.0)
    bad = Trajectory(d=t.d, initial=t.initial, events=t.events[:-1],
                     final=t.final, T=t.T, policy=t.policy, seed_desc=t.seed_desc)
    if t.events:
        with pytest.raises(InvariantViolation):
            replay(bad)


def test_replay_rejects_out_of_order_times():
    t = _traj(T=2.0)
    if len(t.events) >= 2:
        ev = [t.events[1], t.events[0]] + list(t.events[2:])
        bad = Trajectory(d=t.d, initial=t.initial, events=ev, final=t.final,
                         T=t.T, policy=t.policy, seed_desc=t.seed_desc)
        with pytest.raises(InvariantViolation):
            replay(bad)


def test_snapshots_at_times():
    t = _traj(T=2.0)
    snaps = snapshots(t, [0.0, 1.0, 2.0])
    assert snaps[0] == t.initial
    assert snaps[-1] == t.final
    with pytest.raises(ConfigError):
        snapshots(t, [2.5])


def test_intervals_walk_is_consistent():
    t = _traj(T=2.0)
    tot = 0.0
    last_end = 0.0
    seen_initial = False
    for t0, t1, occ in intervals(t):
        assert t1 > t0
        assert t0 == pytest.approx(last_end)
        if t0 == 0.0:
            assert occ == t.initial.as_dict()
            seen_initial = True
        tot += t1 - t0
        last_end = t1
    assert seen_initial
    assert tot == pytest.approx(t.T)


def test_events_csv_layout():
    t = _traj(T=1.0)
    lines = events_csv_string(t).strip().splitlines()
    assert lines[0] == "time,src,dst,kind,marginal"
    assert len(lines) == len(t.events) + 1
    first = lines[1].split(",")
    assert float(first[0]) == t.events[0][0]


def test_summary_fields():
    t = _traj(T=1.0, policy=killed(3), occ={0: 2, 1: 1})
    s = trajectory_summary(t)
    assert s["event_count"] == len(t.events)
    assert s["T"] == 1.0
    assert s["policy"] == "killed(3)"
    assert "kill_count" in s
    json.loads(summary_json(t))  # valid json


def test_kill_events_remove_mass():
    t = simulate(Configuration(1, {0: 2, 1: 1}), power_rate(2.0),
                 nn_kernel_1d(0.5), killed(1), 3.0, HarrisNoise(42))
    kills = [e for e in t.events if e[3] == "kill"]
    assert t.final.total() == t.initial.total() - len(kills)
    assert t.kill_count() == len(kills)
    assert replay(t) == t.final
