"""Deterministic rewritings that turn a k-wiring into an embedding into any Cayley graph of H.

Pipeline, each stage verified independently:

1. random wiring into Cay(H, {x, y})                      (k-wiring, neighbors distinct)
2. burden relief: scale by K = 1000 k, separate roads with z-detours -> Cay(H, {x, y, z})
3. removing z: scale by 2, replace z by (x y x^-1 y^-1)^4         -> Cay(H, {x, y})
4. general generating set: scale by m, replace x, y by shortest S-words -> Cay(H, S)
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from heisembed.cayley import DEFAULT_BALL_CAP, DEFAULT_RADIUS_CAP, Walk, bfs_ball, geodesic_word, word_norms
from heisembed.errors import HeisembedError, PreconditionError, ResourceError, ValidationError
from heisembed.graphs import FiniteGraph
from heisembed.group import HEISENBERG, GeneratingSet, GeneratorLabel, Word, lam, standard_genset
from heisembed.random_wiring import RandomWiringConfig, generate_run
from heisembed.wiring import CombinatorialWiring, VerificationReport, load_of, metrics_of, verify

XY = standard_genset("x,y")
XYZ = standard_genset("x,y,z")

# letter codes over XYZ (x -> 1, y -> 2, z -> 3)
_X, _Y, _Z = 1, 2, 3
_NAMED = {(1, 0, 0): _X, (0, 1, 0): _Y, (0, 0, 1): _Z}

DEFAULT_RELIEF_FACTOR = 1000
REMOVE_Z_VOLUME_BOUND = 64


def _standard_codes(S: GeneratingSet, allowed: tuple[int, ...]) -> dict[int, int]:
    """Map S's letter codes to XYZ codes; S must consist of the named generators in ``allowed``."""
    if S.group != HEISENBERG:
        raise PreconditionError("expected a generating set of the Heisenberg group")
    table = {}
    for i, e in enumerate(S.elements):
        code = _NAMED.get(tuple(e))
        if code is None or code not in allowed:
            raise PreconditionError(f"generating set {S} is not {{{', '.join('xyz'[c - 1] for c in allowed)}}}")
        table[i + 1] = code
        table[-(i + 1)] = -code
    if sorted(abs(c) for c in table.values() if c > 0) != sorted(allowed):
        raise PreconditionError(f"generating set {S} is missing generators")
    return table


def _recode(word: Word, table: dict[int, int]) -> np.ndarray:
    lut = np.zeros(2 * max(abs(k) for k in table) + 1, dtype=np.int64)
    off = (lut.size - 1) // 2
    for k, v in table.items():
        lut[k + off] = v
    return lut[word.codes.astype(np.int64) + off]


# --------------------------------------------------------------------------- colors

def residue_class(p) -> int:
    """4 * (a mod 4) + (b mod 4), in 0..15."""
    return 4 * (p[0] % 4) + (p[1] % 4)


@dataclass(frozen=True)
class ColoringAssignment:
    vertex_color: tuple[int, ...]
    point_edge_color: dict
    k: int

    def color(self, p, e: int) -> int:
        return self.point_edge_color[(tuple(p), e)]


@dataclass(frozen=True)
class ReliefConfig:
    factor: int = DEFAULT_RELIEF_FACTOR
    override_allowed: bool = False

    def __post_init__(self):
        if self.factor != DEFAULT_RELIEF_FACTOR:
            if not self.override_allowed:
                raise ValidationError("relief factor override requires override_allowed=True")
            if self.factor % 2 or self.factor <= 64:
                raise ValidationError(f"relief factor must be even and > 64, got {self.factor}")


def _road_points(f: CombinatorialWiring) -> list[list[tuple]]:
    return [[tuple(p) for p in road.vertices().tolist()] for road in f.roads]


def assign_coloring(f: CombinatorialWiring, k: int | None = None) -> ColoringAssignment:
    """Colors 0..32k-1 separating coincident vertices, nearby roads, and vertices from road interiors."""
    _standard_codes(f.genset, (_X, _Y))
    load = load_of(f).load
    if k is None:
        k = load
    if load > k:
        raise PreconditionError(f"wiring has load {load} > k = {k}")
    G = f.graph
    for u, v in G.edges:
        if f.vertex_map[u] == f.vertex_map[v]:
            raise PreconditionError(f"neighbors {u} and {v} share the image {tuple(f.vertex_map[u])}")

    rank = {}
    vertex_color = []
    for v in range(G.n):
        p = tuple(f.vertex_map[v])
        eta = rank.get(p, 0)
        rank[p] = eta + 1
        vertex_color.append(residue_class(p) * k + eta)

    points = _road_points(f)
    eta_edge = {}
    colors = {}
    for e, (u, v) in enumerate(G.edges):
        fu, fv = tuple(f.vertex_map[u]), tuple(f.vertex_map[v])
        for p in dict.fromkeys(points[e]):
            if p == fu:
                colors[(p, e)] = vertex_color[u]
            elif p == fv:
                colors[(p, e)] = vertex_color[v]
            else:
                eta = eta_edge.get(p, 0)
                colors[(p, e)] = (16 + residue_class(p)) * k + eta
            # roads through p are ranked by edge id whether or not p is an endpoint
            eta_edge[p] = eta_edge.get(p, 0) + 1
    return ColoringAssignment(tuple(vertex_color), colors, k)


def audit_coloring(f: CombinatorialWiring, coloring: ColoringAssignment) -> dict[str, dict]:
    """Exhaustively check the three coloring properties (distances from an exact BFS ball)."""
    G = f.graph
    k = coloring.k
    out = {}

    bad = None
    for u in range(G.n):
        for v in range(u + 1, G.n):
            if f.vertex_map[u] == f.vertex_map[v] and coloring.vertex_color[u] == coloring.vertex_color[v]:
                bad = bad or {"vertices": [u, v]}
    out["separates_vertices"] = {"pass": bad is None, "witness": bad}

    near = bfs_ball(f.genset, 3)
    group = f.group
    pts = _road_points(f)
    bad = None
    for e in range(G.m):
        for t in range(e + 1, G.m):
            if set(G.edges[e]) & set(G.edges[t]):
                continue
            for p in dict.fromkeys(pts[e]):
                pinv = group.inv(p)
                ce = coloring.color(p, e)
                for q in dict.fromkeys(pts[t]):
                    if group.mul(pinv, q) in near and ce == coloring.color(q, t):
                        bad = bad or {"edges": [e, t], "points": [list(p), list(q)], "color": ce}
    out["separates_roads"] = {"pass": bad is None, "witness": bad}

    bad = None
    vcolors = set(coloring.vertex_color)
    for e in range(G.m):
        inner = pts[e][1:-1]
        ends = {tuple(pts[e][0]), tuple(pts[e][-1])}
        for p in inner:
            if p in ends:
                continue
            c = coloring.color(p, e)
            if c in vcolors or c < 16 * k:
                bad = bad or {"edge": e, "point": list(p), "color": c}
    out["separates_inner_points"] = {"pass": bad is None, "witness": bad}
    out["range"] = {"pass": all(0 <= c < 32 * k for c in coloring.point_edge_color.values())
                    and all(0 <= c < 16 * k for c in coloring.vertex_color), "witness": None}
    return out


# --------------------------------------------------------------------------- burden relief

def relief_word(s: GeneratorLabel | int, alpha: int, alpha2: int, K: int, k: int | None = None) -> Word:
    """Word over {x, y, z} carrying z^alpha * lam_K(p) to z^alpha2 * lam_K(p s).

    ``s`` is a letter of {x, y}: a label, or a code (+-1 for x^+-1, +-2 for y^+-1).
    """
    if isinstance(s, GeneratorLabel):
        s = s.code
    if abs(s) not in (_X, _Y):
        raise ValidationError(f"relief words exist only for x and y letters, got code {s}")
    if K % 2:
        raise ValidationError(f"K must be even, got {K}")
    half = K // 2
    limit = 32 * k if k is not None else half + 1
    for a in (alpha, alpha2):
        if not 0 <= a < limit or a > half:
            raise ValidationError(f"color {a} out of range")
    other = _Y if abs(s) == _X else _X
    dz = alpha2 - alpha
    zcode = _Z if dz >= 0 else -_Z
    codes = np.repeat(np.array([s, other, zcode, -other, s], dtype=np.int64),
                      [half + alpha, 1, abs(dz), 1, half - alpha])
    return Word(codes)


def burden_relief(f: CombinatorialWiring, config: ReliefConfig = ReliefConfig(),
                  k: int | None = None) -> tuple[CombinatorialWiring, ColoringAssignment]:
    """k-wiring over {x, y} with distinct neighbor images -> embedding over {x, y, z}."""
    coloring = assign_coloring(f, k)
    k = coloring.k
    K = config.factor * k
    half = K // 2
    codes_in = _standard_codes(f.genset, (_X, _Y))

    def lift(p, color):
        q = lam(K, p)
        return HEISENBERG.element((q[0], q[1], q[2] + color))

    vertex_map = tuple(lift(f.vertex_map[v], coloring.vertex_color[v]) for v in range(f.graph.n))
    roads = []
    for e, road in enumerate(f.roads):
        pts = [tuple(p) for p in road.vertices().tolist()]
        alphas = np.array([coloring.color(p, e) for p in pts], dtype=np.int64)
        s = _recode(road.word, codes_in)
        if s.size:
            other = np.where(np.abs(s) == _X, _Y, _X)
            dz = alphas[1:] - alphas[:-1]
            letters = np.stack([s, other, np.where(dz >= 0, _Z, -_Z), -other, s], axis=1)
            counts = np.stack([half + alphas[:-1], np.ones_like(s), np.abs(dz), np.ones_like(s),
                               half - alphas[:-1]], axis=1)
            word = Word(np.repeat(letters.ravel(), counts.ravel()))
        else:
            word = Word()
        roads.append(Walk(lift(pts[0], int(alphas[0])), word, XYZ))
    return CombinatorialWiring(XYZ, f.graph, vertex_map, tuple(roads)), coloring


def relief_volume_bound(k: int) -> int:
    return 4402 * k * k


# --------------------------------------------------------------------------- removing z

_COMMUTATOR = Word([_X, _Y, -_X, -_Y])
_COMMUTATOR_INV = Word([_Y, _X, -_Y, -_X])
_REMOVE_Z_TABLE = {
    _X: Word([_X, _X]), -_X: Word([-_X, -_X]),
    _Y: Word([_Y, _Y]), -_Y: Word([-_Y, -_Y]),
    _Z: _COMMUTATOR.power(4), -_Z: _COMMUTATOR_INV.power(4),
}


def substitute_letter(code: int) -> Word:
    """The replacement word for one XYZ letter when moving from {x, y, z} to {x, y}."""
    return _REMOVE_Z_TABLE[code]


def _require_embedding(f: CombinatorialWiring, report: VerificationReport | None, check: bool):
    if report is None and check:
        report = verify(f)
    if report is not None and not report.embedding_ok:
        names = ", ".join(c.name for c in report.failures() if c.name in
                          ("walk_validity", "endpoints", "vertex_injective", "roads_disjoint", "vertex_isolation"))
        raise PreconditionError(f"input is not a combinatorial embedding ({names})")


def remove_z(f: CombinatorialWiring, report: VerificationReport | None = None,
             check: bool = True) -> CombinatorialWiring:
    """Embedding over {x, y, z} -> embedding over {x, y}: lam_2 on vertices, letters substituted."""
    codes_in = _standard_codes(f.genset, (_X, _Y, _Z))
    _require_embedding(f, report, check)
    vertex_map = tuple(lam(2, g) for g in f.vertex_map)
    roads = []
    for road in f.roads:
        w = Word(_recode(road.word, codes_in)).substitute(_REMOVE_Z_TABLE)
        roads.append(Walk(lam(2, road.start), w, XY))
    return CombinatorialWiring(XY, f.graph, vertex_map, tuple(roads))


# --------------------------------------------------------------------------- general generating set

class BiLipschitz(NamedTuple):
    M: int
    m: int
    w_x: Word
    w_y: Word


def bilip_and_m(S: GeneratingSet, radius_cap: int = DEFAULT_RADIUS_CAP,
                ball_cap: int = DEFAULT_BALL_CAP) -> BiLipschitz:
    """Metric-comparison constant M, stretch m = max(M|x|_S, M|y|_S) + 1, and shortest S-words for x, y."""
    if S.group != HEISENBERG:
        raise ValidationError("expected a generating set of the Heisenberg group")
    xs, ys = word_norms(S, [(1, 0, 0), (0, 1, 0)], radius_cap, ball_cap)
    if xs is None or ys is None:
        raise ResourceError(f"BFS over {S} did not reach x and y within radius {radius_cap}")
    gens_xy = word_norms(XY, S.elements, radius_cap, ball_cap)
    if any(d is None for d in gens_xy):
        raise ResourceError(f"some generator of {S} has {{x,y}}-length beyond {radius_cap}")
    M = max(max(gens_xy), xs, ys)
    m = max(M * xs, M * ys) + 1
    ball = bfs_ball(S, max(xs, ys), ball_cap)
    return BiLipschitz(M, m, geodesic_word(ball, (1, 0, 0)), geodesic_word(ball, (0, 1, 0)))


def general_volume_bound(bl: BiLipschitz) -> int:
    """Each Cayley edge used by the input spawns at most m * max|w| new points; there are <= 2 per point."""
    return 1 + 2 * bl.m * max(len(bl.w_x), len(bl.w_y))


def to_general_genset(f: CombinatorialWiring, S: GeneratingSet, report: VerificationReport | None = None,
                      check: bool = True, bilip: BiLipschitz | None = None) -> CombinatorialWiring:
    """Embedding over {x, y} -> embedding over S: lam_m, letters repeated m times, x and y spelled in S."""
    codes_in = _standard_codes(f.genset, (_X, _Y))
    _require_embedding(f, report, check)
    bl = bilip or bilip_and_m(S)
    table = {_X: bl.w_x, -_X: bl.w_x.inverse(), _Y: bl.w_y, -_Y: bl.w_y.inverse()}
    vertex_map = tuple(lam(bl.m, g) for g in f.vertex_map)
    roads = []
    for road in f.roads:
        w = Word(_recode(road.word, codes_in)).stretch(bl.m).substitute(table)
        roads.append(Walk(lam(bl.m, road.start), w, S))
    return CombinatorialWiring(S, f.graph, vertex_map, tuple(roads))


# --------------------------------------------------------------------------- pipeline

STAGES = ("random_wiring", "burden_relief", "remove_z", "general_genset")


class StageError(HeisembedError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


@dataclass(frozen=True)
class PipelineConfig:
    random: RandomWiringConfig = RandomWiringConfig()
    relief: ReliefConfig = ReliefConfig()
    metrics_mode: str = "auto"
    ball_cap: int = DEFAULT_BALL_CAP


@dataclass
class StageRecord:
    stage: str
    wiring: CombinatorialWiring
    metrics: object
    report: VerificationReport
    elapsed_ms: float = 0.0

    def to_json(self) -> dict:
        return {
            "stage": self.stage,
            "volume": self.metrics.volume,
            "diameter": self.metrics.diameter,
            "diameter_mode": self.metrics.diameter_mode,
            "load": self.metrics.load,
            "verify": self.report.to_json(),
        }


@dataclass
class EmbedResult:
    wiring: CombinatorialWiring
    stages: list[StageRecord]
    attempts: int
    radius: int
    threshold: int
    k: int
    bilip: BiLipschitz
    ratios: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        first = self.stages[0].report
        return (first.wiring_ok and first["neighbor_distinct"].passed
                and all(s.report.embedding_ok for s in self.stages[1:])
                and all(r["ok"] for r in self.ratios))

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "attempts": self.attempts,
            "r": self.radius,
            "threshold": self.threshold,
            "k": self.k,
            "m": self.bilip.m,
            "M": self.bilip.M,
            "stages": [s.to_json() for s in self.stages],
            "volume_ratios": self.ratios,
        }


def embed_graph(G: FiniteGraph, S: GeneratingSet, config: PipelineConfig = PipelineConfig()) -> EmbedResult:
    """Random wiring, then the three rewritings; every stage is verified on its own."""
    stages = []

    def run(stage, fn):
        t0 = time.perf_counter()
        try:
            return fn(), (time.perf_counter() - t0) * 1000
        except HeisembedError as exc:
            raise StageError(stage, exc) from exc

    try:
        bilip = bilip_and_m(S, ball_cap=config.ball_cap)
    except HeisembedError as exc:
        raise StageError("general_genset", exc) from exc

    rcfg = config.random
    run1, ms = run("random_wiring", lambda: generate_run(G, XY, rcfg))
    f1 = run1.wiring
    exact_ball = bfs_ball(XY, 4 * run1.radius, config.ball_cap)
    m1 = metrics_of(f1, config.metrics_mode, ball=exact_ball if config.metrics_mode != "proxy" else None,
                    ball_cap=config.ball_cap)
    rep1 = verify(f1, k=run1.outcome.threshold)
    stages.append(StageRecord("random_wiring", f1, m1, rep1, ms))
    k = m1.load

    (f2, _), ms = run("burden_relief", lambda: burden_relief(f1, config.relief, k))
    rep2 = verify(f2)
    stages.append(StageRecord("burden_relief", f2, metrics_of(f2, config.metrics_mode, ball_cap=config.ball_cap),
                              rep2, ms))

    f3, ms = run("remove_z", lambda: remove_z(f2, report=rep2))
    rep3 = verify(f3)
    stages.append(StageRecord("remove_z", f3, metrics_of(f3, config.metrics_mode, ball_cap=config.ball_cap),
                              rep3, ms))

    f4, ms = run("general_genset", lambda: to_general_genset(f3, S, report=rep3, bilip=bilip))
    rep4 = verify(f4)
    stages.append(StageRecord("general_genset", f4, metrics_of(f4, config.metrics_mode, ball_cap=config.ball_cap),
                              rep4, ms))

    bounds = [relief_volume_bound(k), REMOVE_Z_VOLUME_BOUND, general_volume_bound(bilip)]
    ratios = []
    for prev, cur, bound in zip(stages, stages[1:], bounds):
        ratio = cur.metrics.volume / prev.metrics.volume
        ratios.append({"from": prev.stage, "to": cur.stage, "ratio": ratio, "bound": bound,
                       "ok": cur.metrics.volume <= bound * prev.metrics.volume})
    return EmbedResult(f4, stages, run1.attempts, run1.radius, run1.outcome.threshold, k, bilip, ratios)
