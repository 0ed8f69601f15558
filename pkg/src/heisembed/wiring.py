"""Combinatorial wirings, their metrics, the verifier, and the JSON interchange.

A wiring maps graph vertices to group elements and graph edges to roads
(walks between the endpoint images). Points are handled as packed int64 keys
so that verification of multi-million-point wirings stays in numpy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from heisembed.cayley import DEFAULT_BALL_CAP, Walk, bfs_ball, _Packer
from heisembed.errors import ResourceError, ValidationError
from heisembed.graphs import FiniteGraph, from_edge_list
from heisembed.group import HEISENBERG, GeneratingSet, Word, group_from_name

EXACT_POINT_LIMIT = 4000
EXACT_RADIUS_LIMIT = 40
PROXY_SAMPLE = 2048

CHECK_NAMES = (
    "walk_validity",
    "endpoints",
    "vertex_injective",
    "roads_disjoint",
    "vertex_isolation",
    "load",
    "neighbor_distinct",
)
EMBEDDING_CHECKS = ("walk_validity", "endpoints", "vertex_injective", "roads_disjoint", "vertex_isolation")
WIRING_CHECKS = ("walk_validity", "endpoints", "load")


@dataclass(frozen=True, eq=False)
class CombinatorialWiring:
    genset: GeneratingSet
    graph: FiniteGraph
    vertex_map: tuple
    roads: tuple[Walk, ...]

    def __post_init__(self):
        group = self.genset.group
        object.__setattr__(self, "vertex_map", tuple(group.element(g) for g in self.vertex_map))
        object.__setattr__(self, "roads", tuple(self.roads))
        if len(self.vertex_map) != self.graph.n:
            raise ValidationError(f"vertex_map has {len(self.vertex_map)} entries for n={self.graph.n}")
        if len(self.roads) != self.graph.m:
            raise ValidationError(f"{len(self.roads)} roads for {self.graph.m} edges")
        for road in self.roads:
            if road.genset != self.genset:
                raise ValidationError("road generating set differs from the wiring's")

    @property
    def group(self):
        return self.genset.group

    def road_length_total(self) -> int:
        return sum(len(r) for r in self.roads)


@dataclass(frozen=True)
class LoadMap:
    """Per-element loads; ``elements`` rows align with the two count arrays."""

    elements: np.ndarray
    vertex_load: np.ndarray
    road_load: np.ndarray

    @property
    def load(self) -> int:
        if not self.elements.shape[0]:
            return 0
        return int(max(self.vertex_load.max(), self.road_load.max()))

    def at(self, g) -> tuple[int, int]:
        hit = np.flatnonzero((self.elements == np.asarray(g, dtype=np.int64)).all(axis=1))
        if not hit.size:
            return (0, 0)
        i = int(hit[0])
        return int(self.vertex_load[i]), int(self.road_load[i])


@dataclass(frozen=True)
class WiringMetrics:
    volume: int
    diameter: int
    diameter_mode: str
    load: int
    road_length_total: int

    def to_json(self) -> dict:
        return {
            "volume": self.volume,
            "diameter": self.diameter,
            "diameter_mode": self.diameter_mode,
            "load": self.load,
            "road_length_total": self.road_length_total,
        }


@dataclass
class Check:
    name: str
    passed: bool
    witness: dict | None = None
    violations: int = 0

    def to_json(self) -> dict:
        return {"pass": self.passed, "violations": self.violations, "witness": self.witness}


@dataclass
class VerificationReport:
    checks: list[Check]
    k: int | None
    load: int
    volume: int
    extras: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def bits(self) -> dict[str, bool]:
        return {c.name: c.passed for c in self.checks}

    @property
    def embedding_ok(self) -> bool:
        return all(self[name].passed for name in EMBEDDING_CHECKS)

    @property
    def wiring_ok(self) -> bool:
        """k-wiring axioms; requires ``k`` to have been supplied."""
        if self.k is None:
            return False
        return all(self[name].passed for name in WIRING_CHECKS)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        out = {
            "k": self.k,
            "load": self.load,
            "volume": self.volume,
            "embedding_ok": self.embedding_ok,
            "wiring_ok": self.wiring_ok if self.k is not None else None,
            "checks": {c.name: c.to_json() for c in self.checks},
        }
        out.update(self.extras)
        return out


class _Incidence:
    """Packed keys for vertex images and the de-duplicated point sets of each road."""

    def __init__(self, f: CombinatorialWiring, skip: set[int] = frozenset()):
        rank = f.group.rank
        self.vertex_points = np.asarray(f.vertex_map, dtype=np.int64).reshape(-1, rank)
        self.road_points = []
        for e, road in enumerate(f.roads):
            if e in skip:
                self.road_points.append(np.zeros((0, rank), dtype=np.int64))
            else:
                self.road_points.append(road.vertices())
        allpts = np.concatenate([self.vertex_points] + self.road_points) if f.graph.n or f.graph.m \
            else np.zeros((0, rank), dtype=np.int64)
        packer = _Packer.for_points(allpts)
        if packer is not None:
            self._packer = packer
            self.vertex_keys = packer.pack(self.vertex_points)
            self.road_keys = [np.unique(packer.pack(p)) for p in self.road_points]
            self._uniq = None
        else:
            # coordinates too spread out for packing: rank rows instead
            self._packer = None
            uniq, inverse = np.unique(allpts, axis=0, return_inverse=True)
            inverse = inverse.reshape(-1)
            self._uniq = uniq
            n = self.vertex_points.shape[0]
            self.vertex_keys = inverse[:n]
            self.road_keys, pos = [], n
            for p in self.road_points:
                self.road_keys.append(np.unique(inverse[pos:pos + p.shape[0]]))
                pos += p.shape[0]
        sizes = np.array([k.size for k in self.road_keys], dtype=np.int64)
        cat_keys = np.concatenate(self.road_keys + [np.zeros(0, dtype=np.int64)])
        cat_edges = np.repeat(np.arange(len(self.road_keys), dtype=np.int64), sizes)
        order = np.lexsort((cat_edges, cat_keys))
        self.sorted_keys = cat_keys[order]
        self.sorted_edges = cat_edges[order]
        if self.sorted_keys.size:
            starts = np.flatnonzero(np.concatenate(([True], self.sorted_keys[1:] != self.sorted_keys[:-1])))
        else:
            starts = np.zeros(0, dtype=np.int64)
        self.group_starts = starts
        self.group_sizes = np.diff(np.concatenate((starts, [self.sorted_keys.size])))
        self.group_keys = self.sorted_keys[starts]

    def coords(self, key: int) -> list[int]:
        if self._packer is None:
            return self._uniq[int(key)].tolist()
        p = self._packer
        spans = p.hi - p.lo + 1
        return (p.lo + (int(key) // p.mults) % spans).tolist()

    def edges_at(self, key: int) -> np.ndarray:
        lo = np.searchsorted(self.sorted_keys, key, side="left")
        hi = np.searchsorted(self.sorted_keys, key, side="right")
        return self.sorted_edges[lo:hi]

    def image_keys(self) -> np.ndarray:
        return np.union1d(self.vertex_keys, self.group_keys)


def _walk_validity(f: CombinatorialWiring) -> tuple[Check, set[int]]:
    bad, witness = set(), None
    limit = len(f.genset)
    for e, road in enumerate(f.roads):
        codes = road.word.codes
        if codes.size and int(np.abs(codes).max()) > limit:
            bad.add(e)
            if witness is None:
                i = int(np.flatnonzero(np.abs(codes) > limit)[0])
                witness = {"edge": e, "letter": i, "generator_index": abs(int(codes[i])) - 1}
    return Check("walk_validity", not bad, witness, len(bad)), bad


def load_of(f: CombinatorialWiring) -> LoadMap:
    """Vertex-load and road-load of every element in the image (roads counted once per element)."""
    inc = _Incidence(f)
    return _load_map(inc)


def _load_map(inc: _Incidence) -> LoadMap:
    keys = inc.image_keys()
    vk, vcount = np.unique(inc.vertex_keys, return_counts=True)
    vertex_load = np.zeros(keys.size, dtype=np.int64)
    vertex_load[np.searchsorted(keys, vk)] = vcount
    road_load = np.zeros(keys.size, dtype=np.int64)
    road_load[np.searchsorted(keys, inc.group_keys)] = inc.group_sizes
    rank = inc.vertex_points.shape[1]
    elements = np.array([inc.coords(k) for k in keys.tolist()], dtype=np.int64).reshape(-1, rank) \
        if keys.size <= 200_000 else _decode_many(inc, keys)
    return LoadMap(elements, vertex_load, road_load)


def _decode_many(inc: _Incidence, keys: np.ndarray) -> np.ndarray:
    if inc._packer is None:
        return inc._uniq[keys]
    p = inc._packer
    spans = p.hi - p.lo + 1
    return p.lo + (keys[:, None] // p.mults) % spans


def verify(f: CombinatorialWiring, k: int | None = None) -> VerificationReport:
    """Check the k-wiring and combinatorial-embedding axioms, with witnesses."""
    G = f.graph
    checks = []
    walk_check, bad_roads = _walk_validity(f)
    checks.append(walk_check)
    inc = _Incidence(f, skip=bad_roads)
    vkeys = inc.vertex_keys

    # endpoints
    bad_end, witness = 0, None
    for e, (u, v) in enumerate(G.edges):
        if e in bad_roads:
            continue
        pts = inc.road_points[e]
        first, last = pts[0].tolist(), pts[-1].tolist()
        fu, fv = list(f.vertex_map[u]), list(f.vertex_map[v])
        if not ((first == fu and last == fv) or (first == fv and last == fu)):
            bad_end += 1
            if witness is None:
                witness = {"edge": e, "start": first, "end": last, "expected": [fu, fv]}
    checks.append(Check("endpoints", bad_end == 0, witness, bad_end))

    # vertex injectivity
    order = np.lexsort((np.arange(G.n), vkeys))
    sk = vkeys[order]
    dup = np.flatnonzero(sk[1:] == sk[:-1]) if G.n > 1 else np.zeros(0, dtype=np.int64)
    witness = None
    if dup.size:
        i = int(dup[0])
        u, v = sorted((int(order[i]), int(order[i + 1])))
        witness = {"vertices": [u, v], "element": inc.coords(sk[i])}
    checks.append(Check("vertex_injective", dup.size == 0, witness, int(dup.size)))

    # roads of non-adjacent edges are disjoint
    eu = np.array([e[0] for e in G.edges], dtype=np.int64)
    ev = np.array([e[1] for e in G.edges], dtype=np.int64)
    starts, sizes = inc.group_starts, inc.group_sizes
    violations, witness = 0, None
    pair = np.flatnonzero(sizes == 2)
    if pair.size:
        a = inc.sorted_edges[starts[pair]]
        b = inc.sorted_edges[starts[pair] + 1]
        adjacent = (eu[a] == eu[b]) | (eu[a] == ev[b]) | (ev[a] == eu[b]) | (ev[a] == ev[b])
        bad = np.flatnonzero(~adjacent)
        violations += int(bad.size)
        if bad.size:
            i = int(bad[0])
            witness = {"edges": [int(a[i]), int(b[i])], "element": inc.coords(inc.group_keys[pair[i]])}
    for gi in np.flatnonzero(sizes > 2).tolist():
        s = int(starts[gi])
        edges = inc.sorted_edges[s:s + int(sizes[gi])].tolist()
        for x in range(len(edges)):
            for y in range(x + 1, len(edges)):
                e, t = edges[x], edges[y]
                if not set(G.edges[e]) & set(G.edges[t]):
                    violations += 1
                    cand = {"edges": [e, t], "element": inc.coords(inc.group_keys[gi])}
                    if witness is None or _wkey(cand) < _wkey(witness):
                        witness = cand
    checks.append(Check("roads_disjoint", violations == 0, witness, violations))

    # vertex images avoid roads of non-incident edges
    violations, witness = 0, None
    for v in range(G.n):
        for e in inc.edges_at(vkeys[v]).tolist():
            if v not in G.edges[e]:
                violations += 1
                if witness is None:
                    witness = {"edge": e, "vertex": v, "element": list(f.vertex_map[v])}
    checks.append(Check("vertex_isolation", violations == 0, witness, violations))

    lm = _load_map(inc)
    load = lm.load
    if k is not None:
        over = np.flatnonzero(np.maximum(lm.vertex_load, lm.road_load) > k)
        witness = None
        if over.size:
            i = int(over[0])
            witness = {"element": lm.elements[i].tolist(), "vertex_load": int(lm.vertex_load[i]),
                       "road_load": int(lm.road_load[i]), "k": k}
        checks.append(Check("load", over.size == 0, witness, int(over.size)))

    # neighbors land on distinct elements
    if G.m:
        same = np.flatnonzero(vkeys[eu] == vkeys[ev])
    else:
        same = np.zeros(0, dtype=np.int64)
    witness = None
    if same.size:
        e = int(same[0])
        witness = {"edge": e, "vertices": list(G.edges[e]), "element": list(f.vertex_map[G.edges[e][0]])}
    checks.append(Check("neighbor_distinct", same.size == 0, witness, int(same.size)))

    return VerificationReport(checks, k, load, int(inc.image_keys().size))


def _wkey(w: dict):
    return (w["edges"], w["element"])


def image_points(f: CombinatorialWiring) -> np.ndarray:
    """Im f as a sorted array of distinct rows."""
    inc = _Incidence(f)
    return _decode_many(inc, inc.image_keys())


def metrics_of(f: CombinatorialWiring, mode: str = "auto", ball=None,
               ball_cap: int = DEFAULT_BALL_CAP) -> WiringMetrics:
    """Volume, diameter (exact via BFS when feasible, else tagged proxy), load."""
    if mode not in ("auto", "exact", "proxy"):
        raise ValueError(f"unknown metrics mode {mode!r}")
    inc = _Incidence(f)
    keys = inc.image_keys()
    pts = _decode_many(inc, keys)
    load = _load_map(inc).load
    total = f.road_length_total()
    volume = int(keys.size)
    if volume <= 1:
        return WiringMetrics(volume, 0, "exact", load, total)
    if mode in ("auto", "exact"):
        try:
            diam = _exact_diameter(f.genset, pts, ball, ball_cap, strict=(mode == "exact"))
        except ResourceError:
            if mode == "exact":
                raise
            diam = None
        if diam is not None:
            return WiringMetrics(volume, diam, "exact", load, total)
    return WiringMetrics(volume, _proxy_diameter(f.group, pts, inc, f), "proxy", load, total)


def _exact_diameter(S: GeneratingSet, pts: np.ndarray, ball, ball_cap: int, strict: bool) -> int | None:
    group = S.group
    if pts.shape[0] > EXACT_POINT_LIMIT and not strict:
        return None
    # translate so the first image point sits at the identity
    base = pts[0]
    shifted = group.left_quotient(base[None, :], pts)
    if ball is None:
        ball = _ball_covering(S, shifted, ball_cap, strict)
        if ball is None:
            return None
    best = 0
    chunk = max(1, 2_000_000 // pts.shape[0])
    for i in range(0, pts.shape[0], chunk):
        q = group.left_quotient(pts[i:i + chunk, None, :], pts[None, :, :]).reshape(-1, pts.shape[1])
        d = ball.lookup(q)
        if (d < 0).any():
            if strict:
                raise ResourceError(f"ball of radius {ball.radius} does not cover the image differences")
            return None
        best = max(best, int(d.max()))
    return best


def _ball_covering(S: GeneratingSet, shifted: np.ndarray, ball_cap: int, strict: bool):
    # find max_q |base^-1 q|, then any pair distance is at most twice that
    radius = 4
    while True:
        if radius > EXACT_RADIUS_LIMIT and not strict:
            return None
        ball = bfs_ball(S, radius, ball_cap)
        d = ball.lookup(shifted)
        if (d >= 0).all():
            need = 2 * int(d.max())
            if need <= ball.radius:
                return ball
            if need > EXACT_RADIUS_LIMIT and not strict:
                return None
            return bfs_ball(S, need, ball_cap)
        radius *= 2


def _proxy_diameter(group, pts: np.ndarray, inc: _Incidence, f: CombinatorialWiring) -> int:
    """Max proxy distance over vertex images, coordinate extremes and an even stride sample."""
    n = pts.shape[0]
    picks = [np.asarray(f.vertex_map, dtype=np.int64).reshape(-1, pts.shape[1])]
    picks.append(pts[np.concatenate([pts.argmin(axis=0), pts.argmax(axis=0)])])
    if n > PROXY_SAMPLE:
        picks.append(pts[np.linspace(0, n - 1, PROXY_SAMPLE).astype(np.int64)])
    else:
        picks.append(pts)
    sample = np.unique(np.concatenate(picks), axis=0)
    best = 0
    chunk = max(1, 2_000_000 // sample.shape[0])
    for i in range(0, sample.shape[0], chunk):
        q = group.left_quotient(sample[i:i + chunk, None, :], sample[None, :, :])
        best = max(best, int(group.proxy_norm(q).max()))
    return best


def thick_bounds(f: CombinatorialWiring, metrics: WiringMetrics, report: VerificationReport) -> dict:
    """Volume and diameter bounds for the continuous objects the certificate implies."""
    degree = 2 * len(f.genset)
    out = {}
    if report.embedding_ok:
        out["thick_embedding"] = {"volume_bound": metrics.volume * degree,
                                  "diameter_bound": metrics.diameter + 2,
                                  "diameter_mode": metrics.diameter_mode}
    if report.k is not None and report.wiring_ok:
        out["coarse_wiring"] = {"k": report.k, "volume": metrics.volume,
                                "diameter_bound": metrics.diameter + 2,
                                "diameter_mode": metrics.diameter_mode}
    return out


# ---------------------------------------------------------------- JSON interchange

_SEP = (",", ":")


def _dump(obj) -> str:
    return json.dumps(obj, separators=_SEP)


def _dump_word(word: Word, ngens: int) -> str:
    if not len(word):
        return "[]"
    tokens = np.empty(2 * ngens + 1, dtype=object)
    for code in range(-ngens, ngens + 1):
        if code:
            tokens[code + ngens] = f"[{abs(code) - 1},{1 if code > 0 else -1}]"
    idx = word.codes.astype(np.int64) + ngens
    return "[" + ",".join(tokens[idx].tolist()) + "]"


def to_json_text(f: CombinatorialWiring) -> str:
    """Serialize; the bytes equal ``json.dumps(doc, separators=(',', ':'))``."""
    parts = ["{"]
    if f.group != HEISENBERG:
        parts.append('"group":' + _dump(f.group.name) + ",")
    parts.append('"genset":' + _dump(f.genset.to_json()))
    parts.append(',"n":' + _dump(f.graph.n))
    parts.append(',"edges":' + _dump([list(e) for e in f.graph.edges]))
    parts.append(',"vertex_map":' + _dump([list(g) for g in f.vertex_map]))
    parts.append(',"roads":[')
    ngens = max(len(f.genset), 1)
    road_parts = []
    for road in f.roads:
        road_parts.append('{"start":' + _dump(list(road.start)) + ',"word":' + _dump_word(road.word, ngens) + "}")
    parts.append(",".join(road_parts))
    parts.append("]}")
    return "".join(parts)


def to_document(f: CombinatorialWiring) -> dict:
    doc = {}
    if f.group != HEISENBERG:
        doc["group"] = f.group.name
    doc["genset"] = f.genset.to_json()
    doc["n"] = f.graph.n
    doc["edges"] = [list(e) for e in f.graph.edges]
    doc["vertex_map"] = [list(g) for g in f.vertex_map]
    doc["roads"] = [{"start": list(r.start), "word": r.word.labels()} for r in f.roads]
    return doc


def _word_from_json(letters) -> Word:
    if not letters:
        return Word()
    arr = np.asarray(letters, dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("word letters must be [genIndex, sign] pairs")
    idx, sign = arr[:, 0], arr[:, 1]
    if ((sign != 1) & (sign != -1)).any():
        raise ValidationError("letter sign must be +1 or -1")
    if (idx < 0).any() or (idx >= np.iinfo(np.int16).max).any():
        raise ValidationError("generator index out of range")
    return Word(sign * (idx + 1))


def from_document(doc: dict) -> CombinatorialWiring:
    try:
        group = group_from_name(doc.get("group", "H"))
        genset = GeneratingSet(tuple(tuple(e) for e in doc["genset"]), group=group)
        n = int(doc["n"])
        edges = [tuple(e) for e in doc["edges"]]
        graph = from_edge_list(n, edges)
        if list(graph.edges) != [tuple(sorted(e)) for e in edges] or any(u > v for u, v in edges):
            raise ValidationError("edges must be listed as [u, v] with u < v")
        roads = tuple(
            Walk(group.element(r["start"]), _word_from_json(r["word"]), genset) for r in doc["roads"]
        )
        return CombinatorialWiring(genset, graph, tuple(doc["vertex_map"]), roads)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed wiring document: {exc}") from None


def from_json_text(text: str) -> CombinatorialWiring:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError("wiring document must be a JSON object")
    return from_document(doc)
