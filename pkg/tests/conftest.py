import numpy as np
import pytest

from glyphspectra.graphs import InterestPoint, NumeralGraph


def random_blob(rng: np.random.Generator, size: int = 48) -> np.ndarray:
    """A random binary blob built from thick strokes and discs."""
    img = np.zeros((size, size), dtype=bool)
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(rng.integers(2, 5)):
        x0, y0, x1, y1 = rng.integers(4, size - 4, size=4)
        length = max(abs(x1 - x0), abs(y1 - y0), 1)
        for t in np.linspace(0, 1, 2 * length + 1):
            cy = y0 + t * (y1 - y0)
            cx = x0 + t * (x1 - x0)
            img |= (yy - cy) ** 2 + (xx - cx) ** 2 <= rng.integers(2, 6)
    for _ in range(rng.integers(0, 3)):
        cy, cx = rng.integers(6, size - 6, size=2)
        r = rng.integers(3, 7)
        img |= (yy - cy) ** 2 + (xx - cx) ** 2 <= r ** 2
    return img


def random_weighted_graph(rng: np.random.Generator,
                          max_order: int = 12) -> NumeralGraph:
    """Random graph with distinct integer coordinates and edge weights equal
    to coordinate distances."""
    order = int(rng.integers(1, max_order + 1))
    coords = set()
    while len(coords) < order:
        coords.add((int(rng.integers(0, 64)), int(rng.integers(0, 64))))
    points = [InterestPoint(x, y, "corner") for x, y in sorted(coords)]
    edges = []
    for u in range(order):
        for v in range(u + 1, order):
            if rng.random() < 0.3:
                w = float(np.hypot(points[u].x - points[v].x,
                                   points[u].y - points[v].y))
                edges.append((u, v, w))
    return NumeralGraph(points, edges)


@pytest.fixture
def fig2_graph() -> NumeralGraph:
    """The five-node, seven-edge worked example with w(1,5)=1."""
    points = [InterestPoint(i, 0, "corner") for i in range(5)]
    edges = [(0, 1, 5.0), (0, 4, 1.0), (1, 2, 4.0), (1, 3, 6.0),
             (1, 4, 3.0), (2, 3, 2.0), (3, 4, 7.0)]
    return NumeralGraph(points, edges)


FIG2_WA = np.array([
    [0, 5, 0, 0, 1],
    [5, 0, 4, 6, 3],
    [0, 4, 0, 2, 0],
    [0, 6, 2, 0, 7],
    [1, 3, 0, 7, 0],
], dtype=float)

FIG2_SPECTRUM = np.array([12.6880, 1.9669, 0.2570, -6.0595, -8.8523])
