"""Idealized shared medium: serialization delay, Bernoulli loss, HELLO liveness."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

BROADCAST = -1


class FrameKind(enum.IntEnum):
    HELLO = 0
    DSDV_UPDATE = 1
    DBRT_QUERY = 2
    DBRT_REPLY = 3
    DATA = 4

    @property
    def is_control(self) -> bool:
        return self is not FrameKind.DATA


CONTROL_KINDS = tuple(k for k in FrameKind if k.is_control)


@dataclass(frozen=True)
class LinkConfig:
    bandwidth: float = 2_000_000.0  # bit/s
    proc_delay: float = 0.0         # s per hop
    loss_prob: float = 0.0
    hello_interval: float = 2.0
    miss_threshold: int = 3
    hello_size: int = 28
    update_header: int = 12
    update_entry: int = 12
    dbrt_header: int = 20
    dbrt_per_node: int = 4

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if not 0 <= self.loss_prob < 1:
            raise ValueError("loss_prob must be in [0, 1)")
        if self.proc_delay < 0:
            raise ValueError("proc_delay must be >= 0")
        if self.hello_interval <= 0:
            raise ValueError("hello_interval must be positive")
        if self.miss_threshold < 1:
            raise ValueError("miss_threshold must be >= 1")

    def airtime(self, size: int) -> float:
        return size * 8 / self.bandwidth + self.proc_delay

    def update_size(self, n_routes: int) -> int:
        return self.update_header + self.update_entry * n_routes

    def dbrt_size(self, n_ids: int) -> int:
        return self.dbrt_header + self.dbrt_per_node * n_ids


_uids = itertools.count()


class Frame:
    __slots__ = ("kind", "src", "dst", "size", "payload", "uid")

    def __init__(self, kind: FrameKind, src: int, dst: int, size: int, payload=None,
                 uid: int | None = None):
        if size <= 0:
            raise ValueError("frame size must be positive")
        self.kind = kind
        self.src = src
        self.dst = dst
        self.size = size
        self.payload = payload
        self.uid = next(_uids) if uid is None else uid

    def __repr__(self):
        return f"Frame({self.kind.name}, {self.src}->{self.dst}, {self.size}B, uid={self.uid})"


DELIVERED, DROPPED, OUT_OF_RANGE = "delivered", "dropped", "out_of_range"


def transmit(frame: Frame, reachable, cfg: LinkConfig, now: float, rng=None):
    """Resolve one transmission against the set of nodes currently in range of
    the sender.

    Returns ``(deliveries, outcome)`` where ``deliveries`` is a list of
    ``(receiver, deliver_at)``.  A broadcast is "delivered" if at least one
    copy survives, "dropped" if every in-range copy was lost.
    """
    at = now + cfg.airtime(frame.size)
    if frame.dst == BROADCAST:
        targets = sorted(reachable)
    elif frame.dst in reachable:
        targets = [frame.dst]
    else:
        return [], OUT_OF_RANGE
    if not targets:
        return [], OUT_OF_RANGE
    if cfg.loss_prob > 0 and rng is not None:
        keep = rng.random(len(targets)) >= cfg.loss_prob
        deliveries = [(r, at) for r, k in zip(targets, keep) if k]
    else:
        deliveries = [(r, at) for r in targets]
    return deliveries, (DELIVERED if deliveries else DROPPED)


def hello_frame(node: int, own_seq: int, cfg: LinkConfig, uid: int | None = None) -> Frame:
    return Frame(FrameKind.HELLO, node, BROADCAST, cfg.hello_size, payload=own_seq, uid=uid)


class NeighborLiveness:
    """Last-heard bookkeeping for one node's neighbors."""

    def __init__(self, hello_interval: float = 2.0, miss_threshold: int = 3):
        if miss_threshold < 1:
            raise ValueError("miss_threshold must be >= 1")
        self.hello_interval = hello_interval
        self.miss_threshold = miss_threshold
        self.last_heard: dict[int, float] = {}

    def heard(self, node: int, now: float) -> bool:
        """Refresh ``node``; returns True if it was not known before."""
        new = node not in self.last_heard
        self.last_heard[node] = now
        return new

    def forget(self, node: int) -> bool:
        return self.last_heard.pop(node, None) is not None

    def __contains__(self, node):
        return node in self.last_heard


def detect_failures(liveness: NeighborLiveness, now: float) -> set[int]:
    limit = liveness.miss_threshold * liveness.hello_interval
    dead = {n for n, t in liveness.last_heard.items() if now - t > limit}
    for n in dead:
        del liveness.last_heard[n]
    return dead
