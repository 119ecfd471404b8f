"""Skeleton -> weighted interest-point graph.

Interest points are skeleton pixels that carry structure: stroke endpoints,
junctions (crossing number >= 3), and corners found by polyline
simplification of the traced stroke segments. Edges join interest points
connected by a skeleton path that passes through no other interest point,
and carry the Euclidean distance between their endpoints' coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, ContentError, DegeneracyError

ENDPOINT = "endpoint"
JUNCTION = "junction"
CORNER = "corner"

# 8-neighborhood in clockwise order starting at north
_N8 = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]

DEFAULT_RDP_EPSILON = 2.0


@dataclass(frozen=True)
class InterestPoint:
    x: int
    y: int
    kind: str


@dataclass
class NumeralGraph:
    """Undirected weighted graph; nodes indexed by list position."""
    points: list[InterestPoint]
    edges: list[tuple[int, int, float]]  # (u, v, weight), u < v

    @property
    def order(self) -> int:
        return len(self.points)

    def to_json(self) -> str:
        return json.dumps({
            "nodes": [{"id": i, "x": p.x, "y": p.y, "kind": p.kind}
                      for i, p in enumerate(self.points)],
            "edges": [{"u": u, "v": v, "w": w} for u, v, w in self.edges],
        }, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NumeralGraph":
        data = json.loads(text)
        nodes = sorted(data["nodes"], key=lambda n: n["id"])
        points = [InterestPoint(n["x"], n["y"], n["kind"]) for n in nodes]
        edges = [(min(e["u"], e["v"]), max(e["u"], e["v"]), float(e["w"]))
                 for e in data["edges"]]
        return cls(points, edges)


def _neighbors(skel: np.ndarray, y: int, x: int):
    h, w = skel.shape
    out = []
    for dy, dx in _N8:
        ny, nx = y + dy, x + dx
        if 0 <= ny < h and 0 <= nx < w and skel[ny, nx]:
            out.append((ny, nx))
    return out


def crossing_number(skel: np.ndarray, y: int, x: int) -> int:
    """Number of 0->1 transitions around the pixel's 8-neighborhood."""
    h, w = skel.shape
    vals = []
    for dy, dx in _N8:
        ny, nx = y + dy, x + dx
        vals.append(bool(skel[ny, nx]) if 0 <= ny < h and 0 <= nx < w else False)
    return sum((not vals[i]) and vals[(i + 1) % 8] for i in range(8))


def _point_segment_distance(p, a, b) -> float:
    px, py = p
    ax, ay = a
    bx, by = b
    if a == b:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * (bx - ax) + (py - ay) * (by - ay)) / \
        ((bx - ax) ** 2 + (by - ay) ** 2)
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (ax + t * (bx - ax)), py - (ay + t * (by - ay)))


def rdp(points: list[tuple[int, int]], epsilon: float) -> list[tuple[int, int]]:
    """Ramer-Douglas-Peucker polyline simplification (keeps endpoints)."""
    if len(points) < 3:
        return list(points)
    dmax, index = 0.0, 0
    for i in range(1, len(points) - 1):
        d = _point_segment_distance(points[i], points[0], points[-1])
        if d > dmax:
            dmax, index = d, i
    if dmax <= epsilon:
        return [points[0], points[-1]]
    left = rdp(points[:index + 1], epsilon)
    right = rdp(points[index:], epsilon)
    return left[:-1] + right


def _junction_clusters(skel: np.ndarray) -> list[set[tuple[int, int]]]:
    """8-connected clusters of pixels whose crossing number is >= 3."""
    raw = {(y, x) for y, x in zip(*np.nonzero(skel))
           if crossing_number(skel, y, x) >= 3}
    clusters = []
    remaining = set(raw)
    while remaining:
        seed = remaining.pop()
        cluster = {seed}
        stack = [seed]
        while stack:
            cy, cx = stack.pop()
            for dy, dx in _N8:
                nb = (cy + dy, cx + dx)
                if nb in remaining:
                    remaining.discard(nb)
                    cluster.add(nb)
                    stack.append(nb)
        clusters.append(cluster)
    return clusters


def _cluster_representative(cluster) -> tuple[int, int]:
    cy = sum(p[0] for p in cluster) / len(cluster)
    cx = sum(p[1] for p in cluster) / len(cluster)
    return min(cluster, key=lambda p: ((p[0] - cy) ** 2 + (p[1] - cx) ** 2, p))


def _junction_pixels(skel: np.ndarray) -> set[tuple[int, int]]:
    """Junction clusters merged to their centroid-nearest pixel."""
    return {_cluster_representative(c) for c in _junction_clusters(skel)}


def _anchor_zones(skel: np.ndarray, anchors: set[tuple[int, int]]):
    """Map every anchor-zone pixel to its canonical anchor.

    A junction cluster containing exactly one anchor maps wholesale to that
    anchor, so chain walks cannot slip through merged-away junction pixels.
    """
    zones = {a: a for a in anchors}
    for cluster in _junction_clusters(skel):
        members = cluster & anchors
        if len(members) == 1:
            canon = next(iter(members))
            for p in cluster:
                zones[p] = canon
    return zones


def _trace_segments(skel: np.ndarray, anchors: set[tuple[int, int]]):
    """Walk skeleton chains between anchor zones.

    Returns a list of pixel paths; each starts and ends at a canonical
    anchor. Pixels outside the zones are consumed by exactly one path.
    """
    zones = _anchor_zones(skel, anchors)
    visited = set()
    paths = []
    adjacent_pairs = set()
    for z in sorted(zones):
        canon = zones[z]
        for nb in _neighbors(skel, *z):
            if nb in zones:
                if zones[nb] != canon:
                    pair = (min(z, nb), max(z, nb))
                    if pair not in adjacent_pairs:
                        adjacent_pairs.add(pair)
                        paths.append([canon, zones[nb]])
                continue
            if nb in visited:
                continue
            path = [canon, nb]
            visited.add(nb)
            prev, cur = z, nb
            while True:
                nbs = _neighbors(skel, *cur)
                # finish at any adjacent anchor zone we did not come from
                stop = [q for q in nbs if q in zones and q != prev
                        and not (zones[q] == canon and len(path) <= 2)]
                if stop:
                    path.append(zones[sorted(stop)[0]])
                    break
                nxt = [q for q in nbs if q not in zones
                       and q not in visited and q != prev]
                if not nxt:
                    break  # dead-end stub; caller drops unterminated paths
                step = sorted(nxt)[0]
                path.append(step)
                visited.add(step)
                prev, cur = cur, step
            paths.append(path)
    return paths


def _trace_loop(skel: np.ndarray, component: set[tuple[int, int]]):
    """Order the pixels of an anchor-free closed curve, seeded at its
    topmost-then-leftmost pixel."""
    seed = min(component)
    path = [seed]
    seen = {seed}
    cur, prev = seed, None
    while True:
        nbs = [q for q in _neighbors(skel, *cur)
               if q in component and q != prev and q not in seen]
        if not nbs:
            break
        step = sorted(nbs)[0]
        path.append(step)
        seen.add(step)
        prev, cur = cur, step
    return path


def _components(skel: np.ndarray) -> list[set[tuple[int, int]]]:
    pixels = set(zip(*np.nonzero(skel)))
    comps = []
    while pixels:
        seed = pixels.pop()
        comp = {seed}
        stack = [seed]
        while stack:
            cy, cx = stack.pop()
            for dy, dx in _N8:
                nb = (cy + dy, cx + dx)
                if nb in pixels:
                    pixels.discard(nb)
                    comp.add(nb)
                    stack.append(nb)
        comps.append(comp)
    return comps


def detect_interest_points(skel: np.ndarray,
                           epsilon: float = DEFAULT_RDP_EPSILON
                           ) -> list[InterestPoint]:
    """Endpoints, merged junctions, and RDP corner points of a skeleton."""
    skel = np.asarray(skel, dtype=bool)
    if not skel.any():
        raise ContentError("empty skeleton")

    endpoints = set()
    isolated = set()
    for y, x in zip(*np.nonzero(skel)):
        deg = len(_neighbors(skel, y, x))
        if deg == 1:
            endpoints.add((y, x))
        elif deg == 0:
            isolated.add((y, x))
    junctions = _junction_pixels(skel)
    endpoints -= junctions
    anchors = endpoints | junctions | isolated

    corners = set()
    for path in _trace_segments(skel, anchors):
        if len(path) < 3:
            continue
        xy = [(x, y) for y, x in path]
        kept = set(rdp(xy, epsilon)[1:-1])
        corners.update((y, x) for x, y in kept)
    for comp in _components(skel):
        if comp & anchors:
            continue
        loop = _trace_loop(skel, comp)
        xy = [(x, y) for y, x in loop] + [(loop[0][1], loop[0][0])]
        kept = [p for p in dict.fromkeys(rdp(xy, epsilon))]
        if len(kept) < 3:
            # tiny loop simplifies away; keep three evenly spaced pixels
            idx = [0, len(loop) // 3, 2 * len(loop) // 3]
            kept = [(loop[i][1], loop[i][0]) for i in idx]
        corners.update((y, x) for x, y in kept)
    corners -= anchors

    points = ([InterestPoint(int(x), int(y), ENDPOINT)
               for y, x in sorted(endpoints | isolated)]
              + [InterestPoint(int(x), int(y), JUNCTION)
                 for y, x in sorted(junctions)]
              + [InterestPoint(int(x), int(y), CORNER)
                 for y, x in sorted(corners)])
    return points


def build_graph(skel: np.ndarray, points: list[InterestPoint]) -> NumeralGraph:
    """Connect interest points joined by a skeleton path containing no other
    interest point; parallel paths collapse to the one with the
    lexicographically smallest midpoint."""
    skel = np.asarray(skel, dtype=bool)
    index = {}
    for i, p in enumerate(points):
        if not (0 <= p.y < skel.shape[0] and 0 <= p.x < skel.shape[1]) \
                or not skel[p.y, p.x]:
            raise ConsistencyError(f"point ({p.x},{p.y}) not on the skeleton")
        index[(p.y, p.x)] = i

    best_paths: dict[tuple[int, int], list] = {}
    for path in _trace_segments(skel, set(index)):
        start, end = path[0], path[-1]
        if end not in index or start == end:
            continue  # self-loops and dangling stubs are dropped
        u, v = sorted((index[start], index[end]))
        mid = path[len(path) // 2]
        key = (u, v)
        if key not in best_paths or (mid[1], mid[0]) < \
                (best_paths[key][len(best_paths[key]) // 2][1],
                 best_paths[key][len(best_paths[key]) // 2][0]):
            best_paths[key] = path

    edges = [(u, v, 0.0) for u, v in sorted(best_paths)]
    return weight_edges(NumeralGraph(list(points), edges))


def weight_edges(g: NumeralGraph) -> NumeralGraph:
    """Assign each edge the Euclidean distance between its endpoints."""
    edges = []
    for u, v, _ in g.edges:
        pu, pv = g.points[u], g.points[v]
        w = math.hypot(pu.x - pv.x, pu.y - pv.y)
        if w == 0.0:
            raise DegeneracyError(f"edge ({u},{v}) joins coincident coordinates")
        edges.append((u, v, w))
    return NumeralGraph(list(g.points), edges)


def extract_graph(skel: np.ndarray,
                  epsilon: float = DEFAULT_RDP_EPSILON) -> NumeralGraph:
    """Full skeleton-to-graph step: interest points plus weighted edges."""
    return build_graph(skel, detect_interest_points(skel, epsilon))
