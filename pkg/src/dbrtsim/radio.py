"""Free-space radio model and neighbor computation."""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

Position = tuple  # (x, y) in meters


@dataclass(frozen=True)
class RadioModel:
    tx_power: float = 0.28       # W
    rx_threshold: float = 4.48e-6  # W; 0.28 / 250**2
    path_loss_exponent: float = 2.0

    def __post_init__(self):
        if self.tx_power <= 0 or self.rx_threshold <= 0:
            raise ValueError("tx_power and rx_threshold must be positive")
        if self.path_loss_exponent != 2.0:
            raise ValueError("only the free-space exponent 2 is supported")

    @property
    def range(self) -> float:
        return math.sqrt(self.tx_power / self.rx_threshold)

    @property
    def range_sq(self) -> float:
        return self.tx_power / self.rx_threshold


def received_power(model: RadioModel, d: float) -> float:
    """Power at distance ``d`` under a 1/d^2 law with unit scaling constant."""
    if d <= 0:
        raise ValueError("received_power is undefined for d <= 0")
    return model.tx_power / (d * d)


def distance(a: Position, b: Position) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def in_range(model: RadioModel, a: Position, b: Position) -> bool:
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    # d^2 <= tx/rx; inclusive boundary, co-located nodes are connected
    return dx * dx + dy * dy <= model.range_sq


@dataclass
class TopologySnapshot:
    positions: Mapping[int, Position]
    taken_at: float = 0.0

    def graph(self, model: RadioModel) -> dict[int, set[int]]:
        ids = sorted(self.positions)
        if not ids:
            return {}
        adj = adjacency_matrix(np.array([self.positions[i] for i in ids], float), model)
        return {ids[i]: {ids[j] for j in np.flatnonzero(adj[i])} for i in range(len(ids))}


def neighbors(snapshot: TopologySnapshot, model: RadioModel, n: int) -> set[int]:
    if n not in snapshot.positions:
        raise KeyError(f"node {n} is not in the snapshot")
    p = snapshot.positions[n]
    return {m for m, q in snapshot.positions.items() if m != n and in_range(model, p, q)}


def adjacency_matrix(xy: np.ndarray, model: RadioModel) -> np.ndarray:
    """Boolean (n, n) in-range matrix with a False diagonal."""
    diff = xy[:, None, :] - xy[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    adj = d2 <= model.range_sq
    np.fill_diagonal(adj, False)
    return adj
