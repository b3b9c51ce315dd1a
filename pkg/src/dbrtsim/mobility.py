"""Random-waypoint mobility with pause times."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MobilityConfig:
    area_width: float = 1000.0
    area_height: float = 800.0
    speed_min: float = 1.0
    speed_max: float = 10.0
    pause_time: float = 30.0
    model: str = "random_waypoint"  # or "static"
    tick: float = 0.1

    def __post_init__(self):
        if self.area_width <= 0 or self.area_height <= 0:
            raise ValueError("area dimensions must be positive")
        if not 0 < self.speed_min <= self.speed_max:
            raise ValueError("need 0 < speed_min <= speed_max")
        if self.pause_time < 0:
            raise ValueError("pause_time must be >= 0")
        if self.model not in ("random_waypoint", "static"):
            raise ValueError(f"unknown mobility model {self.model!r}")
        if self.tick <= 0:
            raise ValueError("tick must be positive")


@dataclass(frozen=True)
class WaypointState:
    pos: tuple
    dest: tuple
    speed: float
    leg_start: float
    paused_until: float | None = None  # None while moving

    @property
    def moving(self) -> bool:
        return self.paused_until is None

    @property
    def arrival(self) -> float:
        if self.speed <= 0:
            return self.leg_start
        return self.leg_start + math.dist(self.pos, self.dest) / self.speed


def random_point(rng: np.random.Generator, cfg: MobilityConfig) -> tuple:
    return (float(rng.uniform(0.0, cfg.area_width)), float(rng.uniform(0.0, cfg.area_height)))


def next_leg(rng: np.random.Generator, cfg: MobilityConfig) -> tuple[tuple, float]:
    dest = random_point(rng, cfg)
    if cfg.speed_min == cfg.speed_max:
        return dest, float(cfg.speed_min)
    return dest, float(rng.uniform(cfg.speed_min, cfg.speed_max))


def position_at(state: WaypointState, leg_start: float, t: float) -> tuple:
    if t < leg_start:
        raise ValueError("t precedes the leg start")
    if not state.moving:
        return state.pos
    x0, y0 = state.pos
    x1, y1 = state.dest
    length = math.hypot(x1 - x0, y1 - y0)
    travelled = state.speed * (t - leg_start)
    if travelled >= length or length == 0:
        return state.dest
    f = travelled / length
    return (x0 + (x1 - x0) * f, y0 + (y1 - y0) * f)


def advance(state: WaypointState, now: float, rng: np.random.Generator,
            cfg: MobilityConfig) -> WaypointState:
    """One phase transition: arrival -> pause, or pause expiry -> new leg."""
    if state.moving:
        if now < state.arrival:
            return state
        return WaypointState(pos=state.dest, dest=state.dest, speed=state.speed,
                             leg_start=now, paused_until=now + cfg.pause_time)
    if now < state.paused_until:
        return state
    dest, speed = next_leg(rng, cfg)
    return WaypointState(pos=state.pos, dest=dest, speed=speed, leg_start=now)


def initial_state(pos: tuple, cfg: MobilityConfig) -> WaypointState:
    # nodes begin paused at their start position
    return WaypointState(pos=pos, dest=pos, speed=cfg.speed_min, leg_start=0.0,
                         paused_until=cfg.pause_time)


class MobilityModel:
    """Tracks every node's waypoint state and samples positions on demand.

    Each node draws from its own generator so trajectories do not depend on
    the order in which nodes are advanced.
    """

    def __init__(self, cfg: MobilityConfig, initial: np.ndarray, rngs: list):
        self.cfg = cfg
        self.rngs = rngs
        self.states = [initial_state((float(x), float(y)), cfg) for x, y in initial]
        self.transitions = np.zeros(len(self.states), dtype=int)
        self._xy = np.array(initial, dtype=float).reshape(-1, 2)

    def _catch_up(self, i: int, t: float) -> WaypointState:
        st = self.states[i]
        while True:
            due = st.arrival if st.moving else st.paused_until
            if t < due:
                break
            st = advance(st, due, self.rngs[i], self.cfg)
            self.transitions[i] += 1
        self.states[i] = st
        return st

    def positions(self, t: float) -> np.ndarray:
        if self.cfg.model == "static":
            return self._xy
        out = np.empty_like(self._xy)
        for i in range(len(self.states)):
            st = self._catch_up(i, t)
            out[i] = position_at(st, st.leg_start, t)
        return out
