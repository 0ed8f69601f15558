"""From thick polyline drawings in R^d to embeddings in the lattice Cay(Z^d, {e_1..e_d}).

Each edge curve is replaced by a walk along the 1-skeletons of the closed unit
cubes it touches. Cube sets are computed exactly in rational arithmetic.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from heisembed.cayley import Walk, bfs_ball, geodesic_word, word_norms
from heisembed.errors import PreconditionError, ResourceError, ValidationError
from heisembed.graphs import from_edge_list
from heisembed.group import GeneratingSet, Lattice, Word, parse_genset
from heisembed.wiring import CombinatorialWiring, VerificationReport, verify

LATTICE_RADIUS_CAP = 32


def _frac(v) -> Fraction:
    if isinstance(v, bool):
        raise ValidationError("boolean is not a coordinate")
    if isinstance(v, float) and not math.isfinite(v):
        raise ValidationError(f"non-finite coordinate {v}")
    try:
        return Fraction(v)
    except (TypeError, ValueError):
        raise ValidationError(f"bad coordinate {v!r}") from None


def _floor(p) -> tuple[int, ...]:
    return tuple(math.floor(c) for c in p)


@dataclass(frozen=True)
class Polyline:
    points: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValidationError("a polyline needs at least two points")
        d = len(self.points[0])
        if any(len(p) != d for p in self.points):
            raise ValidationError("polyline points disagree in dimension")

    @classmethod
    def of(cls, points) -> "Polyline":
        return cls(tuple(tuple(_frac(c) for c in p) for p in points))

    @property
    def d(self) -> int:
        return len(self.points[0])

    def segments(self):
        return zip(self.points, self.points[1:])

    def scaled(self, s: Fraction) -> "Polyline":
        return Polyline(tuple(tuple(s * c for c in p) for p in self.points))


# ---------------------------------------------------------------- cubes

def _cubes_at(x) -> list[tuple[int, ...]]:
    """Lower corners of all closed unit cubes containing the point x."""
    axes = []
    for c in x:
        f = math.floor(c)
        axes.append((f - 1, f) if c == f else (f,))
    return list(itertools.product(*axes))


def _segment_cubes(a, b) -> set:
    delta = [bj - aj for aj, bj in zip(a, b)]
    ts = {Fraction(0), Fraction(1)}
    for aj, dj in zip(a, delta):
        if dj:
            lo, hi = sorted((aj, aj + dj))
            for k in range(math.ceil(lo), math.floor(hi) + 1):
                ts.add((k - aj) / dj)
    ts = sorted(ts)
    probes = ts + [(s + t) / 2 for s, t in zip(ts, ts[1:])]
    out = set()
    for t in probes:
        out.update(_cubes_at([aj + t * dj for aj, dj in zip(a, delta)]))
    return out


@dataclass(frozen=True)
class CubeGraph:
    """Touched cubes (by lower corner); cubes are adjacent when they share a vertex."""

    Q: frozenset
    d: int

    def neighbors(self, q):
        for off in itertools.product((-1, 0, 1), repeat=self.d):
            if any(off):
                r = tuple(a + b for a, b in zip(q, off))
                if r in self.Q:
                    yield r


def cubes_touched(poly: Polyline) -> CubeGraph:
    if poly.d < 2:
        raise ValidationError("dimension must be at least 2")
    Q = set()
    for a, b in poly.segments():
        Q |= _segment_cubes(a, b)
    return CubeGraph(frozenset(Q), poly.d)


# ---------------------------------------------------------------- paths

@dataclass(frozen=True)
class LatticePath:
    points: np.ndarray          # (L+1, d) int64, unit steps
    bfs_depth: int
    cube_count: int

    @property
    def word(self) -> Word:
        steps = np.diff(self.points, axis=0)
        axis = np.argmax(np.abs(steps), axis=1)
        sign = steps[np.arange(steps.shape[0]), axis]
        return Word((axis + 1) * sign)


def _cube_bfs(graph: CubeGraph, src, dst) -> list:
    parent = {src: None}
    queue = deque([src])
    while queue:
        q = queue.popleft()
        if q == dst:
            break
        for r in graph.neighbors(q):
            if r not in parent:
                parent[r] = q
                queue.append(r)
    if dst not in parent:
        raise RuntimeError(f"cube graph disconnected between {src} and {dst}")
    chain = [dst]
    while parent[chain[-1]] is not None:
        chain.append(parent[chain[-1]])
    return chain[::-1]


def _walk_to(cur: list, target, out: list):
    for i in range(len(cur)):
        step = 1 if target[i] > cur[i] else -1
        while cur[i] != target[i]:
            cur[i] += step
            out.append(tuple(cur))


def lattice_path(poly: Polyline) -> LatticePath:
    """Unit-step path from floor(start) to floor(end) along skeletons of touched cubes."""
    graph = cubes_touched(poly)
    src, dst = _floor(poly.points[0]), _floor(poly.points[-1])
    chain = _cube_bfs(graph, src, dst)
    cur = list(src)
    out = [tuple(cur)]
    for q, r in zip(chain, chain[1:]):
        # lowest corner of the shared face: max of the lower corners per axis
        _walk_to(cur, [max(a, b) for a, b in zip(q, r)], out)
    _walk_to(cur, dst, out)
    return LatticePath(np.asarray(out, dtype=np.int64).reshape(-1, poly.d), len(chain) - 1, len(graph.Q))


# ---------------------------------------------------------------- exact distances

def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _sub(u, v):
    return [a - b for a, b in zip(u, v)]


def _clamp(t):
    return min(max(t, Fraction(0)), Fraction(1))


def point_segment_dist2(p, a, b) -> Fraction:
    ab = _sub(b, a)
    den = _dot(ab, ab)
    t = _clamp(_dot(_sub(p, a), ab) / den) if den else Fraction(0)
    c = [ai + t * di for ai, di in zip(a, ab)]
    diff = _sub(p, c)
    return _dot(diff, diff)


def segment_segment_dist2(p1, q1, p2, q2) -> Fraction:
    """Squared distance between closed segments, exact."""
    d1, d2, r = _sub(q1, p1), _sub(q2, p2), _sub(p1, p2)
    a, e, f = _dot(d1, d1), _dot(d2, d2), _dot(d2, r)
    if a == 0 and e == 0:
        return _dot(r, r)
    if a == 0:
        return point_segment_dist2(p1, p2, q2)
    if e == 0:
        return point_segment_dist2(p2, p1, q1)
    c, b = _dot(d1, r), _dot(d1, d2)
    den = a * e - b * b
    s = _clamp((b * f - c * e) / den) if den else Fraction(0)
    t = (b * s + f) / e
    if t < 0:
        t, s = Fraction(0), _clamp(-c / a)
    elif t > 1:
        t, s = Fraction(1), _clamp((b - c) / a)
    diff = [p1[i] + s * d1[i] - p2[i] - t * d2[i] for i in range(len(p1))]
    return _dot(diff, diff)


def polyline_dist2(u: Polyline, v: Polyline) -> Fraction:
    return min(segment_segment_dist2(a, b, c, d) for a, b in u.segments() for c, d in v.segments())


def point_polyline_dist2(p, poly: Polyline) -> Fraction:
    return min(point_segment_dist2(p, a, b) for a, b in poly.segments())


# ---------------------------------------------------------------- conversion

@dataclass(frozen=True)
class Drawing:
    d: int
    vertices: tuple
    edges: tuple            # ((u, v, Polyline), ...)


def drawing_from_document(doc: dict) -> Drawing:
    try:
        d = int(doc["d"])
        vertices = tuple(tuple(_frac(c) for c in p) for p in doc["vertices"])
        edges = []
        for item in doc["edges"]:
            u, v = int(item["u"]), int(item["v"])
            for w in (u, v):
                if not 0 <= w < len(vertices):
                    raise ValidationError(f"edge endpoint {w} out of range")
            pts = item.get("points") or [vertices[u], vertices[v]]
            edges.append((u, v, Polyline.of(pts)))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed polyline document: {exc}") from None
    if d < 2 or any(len(p) != d for p in vertices) or any(pl.d != d for _, _, pl in edges):
        raise ValidationError(f"coordinates must all have dimension d = {d} >= 2")
    return Drawing(d, vertices, tuple(edges))


def read_drawing(path: str | Path) -> Drawing:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from None
    return drawing_from_document(doc)


def thickness_violations(drawing: Drawing, limit: int = 1) -> list[dict]:
    """Non-adjacent feature pairs closer than 1 (exact squared distances)."""
    out = []
    V, E = drawing.vertices, drawing.edges
    for i in range(len(V)):
        for j in range(i + 1, len(V)):
            if _dot(_sub(V[i], V[j]), _sub(V[i], V[j])) < 1:
                out.append({"vertices": [i, j]})
    for v in range(len(V)):
        for e, (a, b, pl) in enumerate(E):
            if v not in (a, b) and point_polyline_dist2(V[v], pl) < 1:
                out.append({"vertex": v, "edge": e})
    for e in range(len(E)):
        for t in range(e + 1, len(E)):
            if {E[e][0], E[e][1]} & {E[t][0], E[t][1]}:
                continue
            if polyline_dist2(E[e][2], E[t][2]) < 1:
                out.append({"edges": [e, t]})
        if len(out) >= limit:
            break
    return out[:limit] if limit else out


def scale_factor(d: int) -> Fraction:
    """A rational just above 3 sqrt(d)."""
    return Fraction(math.isqrt(9 * d * 10**12) + 1, 10**6)


@dataclass
class ConversionResult:
    wiring: CombinatorialWiring
    report: VerificationReport
    scale: Fraction
    tube_ok: bool
    endpoints_ok: bool
    depth_ok: bool
    max_tube_dist2: Fraction

    @property
    def ok(self) -> bool:
        return self.report.embedding_ok and self.tube_ok and self.endpoints_ok and self.depth_ok

    def to_json(self) -> dict:
        return {"ok": self.ok, "scale": str(self.scale), "tube_ok": self.tube_ok,
                "endpoints_ok": self.endpoints_ok, "depth_ok": self.depth_ok,
                "max_tube_dist": math.sqrt(self.max_tube_dist2), "verify": self.report.to_json()}


def tube_dist2(path: LatticePath, poly: Polyline) -> Fraction:
    return max(point_polyline_dist2(tuple(Fraction(c) for c in p), poly) for p in path.points.tolist())


def convert_embedding(drawing: Drawing, check_thickness: bool = True) -> ConversionResult:
    """Scale by about 3 sqrt(d), floor vertices, route every edge through its touched cubes."""
    if check_thickness:
        bad = thickness_violations(drawing)
        if bad:
            raise PreconditionError(f"drawing is not 1-thick: {json.dumps(bad[0])} closer than 1")
    d = drawing.d
    for e, (u, v, pl) in enumerate(drawing.edges):
        ends = {pl.points[0], pl.points[-1]}
        if ends != {drawing.vertices[u], drawing.vertices[v]}:
            raise ValidationError(f"edge {e} does not join the points of vertices {u} and {v}")
    s = scale_factor(d)
    group = Lattice(d)
    genset = GeneratingSet(tuple(group.standard_names.values()), tuple(group.standard_names), group)
    graph = from_edge_list(len(drawing.vertices), [(u, v) for u, v, _ in drawing.edges])
    vertex_map = tuple(_floor(s * c for c in p) for p in drawing.vertices)
    roads = []
    tube = endpoints = depth = True
    worst = Fraction(0)
    for u, v, pl in drawing.edges:
        g = pl.scaled(s)
        if u > v:
            g = Polyline(g.points[::-1])
        path = lattice_path(g)
        endpoints &= path.points[0].tolist() == list(_floor(g.points[0])) and \
            path.points[-1].tolist() == list(_floor(g.points[-1]))
        depth &= path.bfs_depth <= path.cube_count
        dist2 = tube_dist2(path, g)
        worst = max(worst, dist2)
        tube &= dist2 <= d
        roads.append(Walk(group.element(path.points[0].tolist()), path.word, genset))
    f = CombinatorialWiring(genset, graph, vertex_map, tuple(roads))
    return ConversionResult(f, verify(f), s, tube, endpoints, depth, worst)


# ---------------------------------------------------------------- other generating sets of Z^d

def lattice_genset(d: int, text: str | None = None) -> GeneratingSet:
    group = Lattice(d)
    if text is None:
        return GeneratingSet(tuple(group.standard_names.values()), tuple(group.standard_names), group)
    return parse_genset(text, group)


def retarget_zd(f: CombinatorialWiring, S: GeneratingSet, radius_cap: int = LATTICE_RADIUS_CAP):
    """Scale a standard-lattice wiring by m and spell each e_i as a shortest S-word.

    Returns (wiring over S, m).
    """
    group = f.group
    if not isinstance(group, Lattice) or S.group != group:
        raise ValidationError("retargeting needs a lattice wiring and a generating set of the same lattice")
    basis = list(group.standard_names.values())
    if [tuple(e) for e in f.genset.elements] != basis:
        raise ValidationError("input wiring must use the standard basis in order")
    norms = word_norms(S, basis, radius_cap)
    missing = [f"e{i + 1}" for i, nrm in enumerate(norms) if nrm is None]
    if missing:
        raise ResourceError(f"{S} does not reach {', '.join(missing)} within radius {radius_cap}; "
                            "it may not generate the lattice")
    ball = bfs_ball(S, max(norms))
    table = {}
    for i, e in enumerate(basis):
        w = geodesic_word(ball, e)
        table[i + 1], table[-(i + 1)] = w, w.inverse()
    if max(norms) == 1:
        m = 1           # every e_i is a letter of S: a pure relabeling
    else:
        M = max(max(sum(abs(c) for c in s) for s in S.elements), max(norms))
        m = M * max(norms) + 1
    vertex_map = tuple(tuple(m * c for c in g) for g in f.vertex_map)
    roads = tuple(Walk(tuple(m * c for c in r.start), r.word.stretch(m).substitute(table), S) for r in f.roads)
    return CombinatorialWiring(S, f.graph, vertex_map, roads), m
