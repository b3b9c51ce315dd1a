import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dbrtsim.mobility import (MobilityConfig, MobilityModel, WaypointState, advance,
                              initial_state, next_leg, position_at)

CFG = MobilityConfig()


def test_config_validation():
    with pytest.raises(ValueError):
        MobilityConfig(pause_time=-1)
    with pytest.raises(ValueError):
        MobilityConfig(speed_min=5, speed_max=2)
    with pytest.raises(ValueError):
        MobilityConfig(speed_min=0)
    with pytest.raises(ValueError):
        MobilityConfig(model="brownian")


def test_degenerate_speed_interval():
    cfg = MobilityConfig(speed_min=5, speed_max=5)
    rng = np.random.default_rng(1)
    assert {next_leg(rng, cfg)[1] for _ in range(100)} == {5.0}


def test_next_leg_bounds_and_mean():
    rng = np.random.default_rng(2)
    legs = [next_leg(rng, CFG) for _ in range(10_000)]
    xs = np.array([d[0] for d, _ in legs])
    ys = np.array([d[1] for d, _ in legs])
    speeds = np.array([s for _, s in legs])
    assert xs.min() >= 0 and xs.max() <= 1000
    assert ys.min() >= 0 and ys.max() <= 800
    assert speeds.min() >= 1 and speeds.max() <= 10
    assert abs(xs.mean() - 500) < 10


def test_position_interpolation_and_clamp():
    st_ = WaypointState(pos=(0.0, 0.0), dest=(100.0, 0.0), speed=10.0, leg_start=3.0)
    assert position_at(st_, 3.0, 8.0) == (50.0, 0.0)
    assert position_at(st_, 3.0, 100.0) == (100.0, 0.0)
    paused = WaypointState((4.0, 5.0), (4.0, 5.0), 1.0, 0.0, paused_until=50.0)
    assert position_at(paused, 0.0, 20.0) == (4.0, 5.0)
    with pytest.raises(ValueError):
        position_at(st_, 3.0, 2.0)


def test_arrival_starts_pause():
    rng = np.random.default_rng(0)
    cfg = MobilityConfig(pause_time=10)
    st_ = WaypointState((0.0, 0.0), (30.0, 40.0), 5.0, 0.0)
    assert st_.arrival == 10.0
    assert advance(st_, 9.0, rng, cfg) is st_
    nxt = advance(st_, 10.0, rng, cfg)
    assert not nxt.moving and nxt.paused_until == 20.0 and nxt.pos == (30.0, 40.0)


def test_zero_pause_gives_immediate_leg():
    rng = np.random.default_rng(0)
    cfg = MobilityConfig(pause_time=0)
    st_ = WaypointState((0.0, 0.0), (3.0, 4.0), 1.0, 0.0)
    paused = advance(st_, 5.0, rng, cfg)
    assert paused.paused_until == 5.0
    moving = advance(paused, 5.0, rng, cfg)
    assert moving.moving and moving.leg_start == 5.0


def test_nodes_start_paused():
    s = initial_state((10.0, 20.0), CFG)
    assert s.paused_until == CFG.pause_time


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.floats(0, 60))
def test_positions_stay_in_area(seed, pause):
    cfg = MobilityConfig(pause_time=pause)
    rng = np.random.default_rng(seed)
    init = np.column_stack([rng.uniform(0, 1000, 5), rng.uniform(0, 800, 5)])
    m = MobilityModel(cfg, init, [np.random.default_rng([seed, i]) for i in range(5)])
    for t in np.arange(0, 400, 0.5):
        xy = m.positions(float(t))
        assert (xy[:, 0] >= 0).all() and (xy[:, 0] <= 1000).all()
        assert (xy[:, 1] >= 0).all() and (xy[:, 1] <= 800).all()


def test_long_walk_never_leaves_area():
    rng = np.random.default_rng(5)
    cfg = MobilityConfig(pause_time=0, speed_min=5, speed_max=20)
    st_ = initial_state((500.0, 400.0), cfg)
    for _ in range(100_000):
        st_ = advance(st_, st_.arrival if st_.moving else st_.paused_until, rng, cfg)
        x, y = st_.dest
        assert 0 <= x <= 1000 and 0 <= y <= 800


def _transitions(pause, seed, horizon=250.0):
    init = np.random.default_rng(seed).uniform(0, 800, (30, 2))
    m = MobilityModel(MobilityConfig(pause_time=pause), init,
                      [np.random.default_rng([seed, i]) for i in range(30)])
    m.positions(horizon)
    return m.transitions.sum()


def test_longer_pause_means_fewer_transitions():
    counts = {p: np.mean([_transitions(p, s) for s in range(5)]) for p in (0, 10, 30, 60, 90)}
    vals = [counts[p] for p in sorted(counts)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_trajectory_reproducible():
    init = np.array([[100.0, 100.0], [700.0, 500.0]])
    a = MobilityModel(CFG, init, [np.random.default_rng([3, i]) for i in range(2)])
    b = MobilityModel(CFG, init, [np.random.default_rng([3, i]) for i in range(2)])
    for t in (0.0, 35.0, 80.5, 249.9):
        assert np.array_equal(a.positions(t), b.positions(t))


def test_static_model_does_not_move():
    init = np.array([[1.0, 2.0], [3.0, 4.0]])
    m = MobilityModel(MobilityConfig(model="static"), init, [None, None])
    assert np.array_equal(m.positions(100.0), init)
