"""Scenario builders shared by the test modules."""

import numpy as np

from dbrtsim.config import ScenarioConfig, format_positions, override
from dbrtsim.oracles import connected
from dbrtsim.radio import RadioModel, adjacency_matrix

# S=0, A=1, B=2, D=3: S and D each reach A and B; A-B and S-D are out of range
DIAMOND = [(100.0, 400.0), (250.0, 250.0), (250.0, 560.0), (400.0, 400.0)]
LINE = [(100.0, 400.0), (300.0, 400.0), (500.0, 400.0), (700.0, 400.0)]


def static_config(points, pairs="", **extra) -> ScenarioConfig:
    values = {
        "node_count": len(points),
        "mobility.model": "static",
        "topology.positions": format_positions(points),
        "traffic.pairs": pairs,
        "traffic.flows": 0 if not pairs else len(pairs.split(",")),
    }
    values.update(extra)
    return override(ScenarioConfig(), **values)


def graph_of(points) -> dict:
    adj = adjacency_matrix(np.asarray(points, float), RadioModel())
    return {i: set(np.flatnonzero(adj[i]).tolist()) for i in range(len(points))}


def random_connected_points(n: int, rng: np.random.Generator) -> list:
    """Uniform placement in an area shrunk with ``n`` so small networks stay
    connected often enough; resampled until connected."""
    scale = min(1.0, (n / 50) ** 0.5)
    w, h = 1000.0 * scale, 800.0 * scale
    while True:
        pts = [(float(x), float(y)) for x, y in zip(rng.uniform(0, w, n), rng.uniform(0, h, n))]
        if connected(graph_of(pts)):
            return pts
