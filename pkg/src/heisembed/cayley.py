"""Breadth-first exploration of Cayley graphs: balls, word norms, geodesics, walks.

Letters are expanded in the fixed order (gen 0, +), (gen 0, -), (gen 1, +), ...
and a parent is never overwritten, so the geodesic read back from a ball is a
deterministic function of the generating set and its ordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from heisembed.errors import DomainError, ResourceError
from heisembed.group import GeneratingSet, GeneratorLabel, Word

DEFAULT_BALL_CAP = 50_000_000
DEFAULT_RADIUS_CAP = 64


class Ball:
    """Closed ball of a given radius around the identity, with BFS data."""

    def __init__(self, genset: GeneratingSet, radius: int, order: list, dists: list, parents: list):
        self.genset = genset
        self.radius = radius
        self.frontier_order = order
        self._index = {g: i for i, g in enumerate(order)}
        self.dists = np.asarray(dists, dtype=np.int64)
        self.parent_codes = np.asarray(parents, dtype=np.int64)
        self.elements = np.asarray(order, dtype=np.int64).reshape(len(order), genset.group.rank)
        self._packer = _Packer.for_points(self.elements)
        if self._packer is not None:
            keys = self._packer.pack(self.elements)
            self._sort = np.argsort(keys, kind="stable")
            self._sorted_keys = keys[self._sort]

    def __len__(self) -> int:
        return len(self.frontier_order)

    def __contains__(self, g) -> bool:
        return tuple(g) in self._index

    def __repr__(self) -> str:
        return f"Ball(genset={self.genset}, radius={self.radius}, size={len(self)})"

    def dist(self, g) -> int | None:
        i = self._index.get(tuple(g))
        return None if i is None else int(self.dists[i])

    def parent(self, g) -> GeneratorLabel | None:
        i = self._index.get(tuple(g))
        if i is None:
            raise DomainError(f"{tuple(g)} is not in the ball of radius {self.radius}")
        code = int(self.parent_codes[i])
        return None if code == 0 else GeneratorLabel.from_code(code)

    def size_at(self, R: int) -> int:
        """|B_R| for R <= radius, read off the BFS distances."""
        if R > self.radius:
            raise DomainError(f"radius {R} exceeds ball radius {self.radius}")
        return int(np.searchsorted(self.dists, R, side="right"))

    def members(self, R: int | None = None) -> list:
        """Members with distance <= R in BFS order (a prefix of the enumeration)."""
        if R is None:
            return list(self.frontier_order)
        return self.frontier_order[: self.size_at(R)]

    def lookup(self, points: np.ndarray) -> np.ndarray:
        """Vectorized distances for rows of ``points``; -1 where outside the ball."""
        points = np.asarray(points, dtype=np.int64).reshape(-1, self.elements.shape[1])
        if self._packer is None:
            return np.array([self.dist(p) if tuple(p) in self._index else -1 for p in points.tolist()],
                            dtype=np.int64)
        inside = self._packer.inside(points)
        out = np.full(points.shape[0], -1, dtype=np.int64)
        if inside.any():
            keys = self._packer.pack(points[inside])
            pos = np.searchsorted(self._sorted_keys, keys)
            pos = np.minimum(pos, self._sorted_keys.size - 1)
            hit = self._sorted_keys[pos] == keys
            found = np.full(keys.size, -1, dtype=np.int64)
            found[hit] = self.dists[self._sort[pos[hit]]]
            out[inside] = found
        return out


class _Packer:
    """Injective packing of bounded integer rows into int64 keys."""

    def __init__(self, lo: np.ndarray, hi: np.ndarray):
        self.lo = lo
        self.hi = hi
        spans = (hi - lo + 1).tolist()
        mults, m = [], 1
        for span in reversed(spans):
            mults.append(m)
            m *= span
        self.mults = np.array(list(reversed(mults)), dtype=np.int64)

    @classmethod
    def for_points(cls, points: np.ndarray) -> "_Packer | None":
        if points.size == 0:
            return None
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        total = 1
        for span in (hi - lo + 1).tolist():
            total *= span
        if total >= 2**62:
            return None
        return cls(lo, hi)

    def inside(self, points: np.ndarray) -> np.ndarray:
        return ((points >= self.lo) & (points <= self.hi)).all(axis=1)

    def pack(self, points: np.ndarray) -> np.ndarray:
        return ((points - self.lo) * self.mults).sum(axis=1)


def letter_order(S: GeneratingSet) -> list[int]:
    codes = []
    for i in range(len(S)):
        codes += [i + 1, -(i + 1)]
    return codes


def _bfs(S: GeneratingSet, radius: int, cap: int, targets: Iterable | None = None) -> Ball:
    group = S.group
    mul = group.mul
    steps = [(code, S.step(code)) for code in letter_order(S)]
    identity = group.identity
    index = {identity}
    order, dists, parents = [identity], [0], [0]
    pending = None if targets is None else {tuple(t) for t in targets} - {identity}
    frontier = [identity]
    reached = 0
    for r in range(1, radius + 1):
        if pending is not None and not pending:
            break
        nxt = []
        for g in frontier:
            for code, s in steps:
                h = mul(g, s)
                if h not in index:
                    index.add(h)
                    nxt.append(h)
                    order.append(h)
                    dists.append(r)
                    parents.append(code)
            if len(order) > cap:
                raise ResourceError(
                    f"ball of radius {radius} over {S} exceeds cap of {cap} elements "
                    f"(reached {len(order)} at radius {r})",
                    reached=len(order),
                )
        frontier = nxt
        reached = r
        if pending is not None:
            pending.difference_update(nxt)
    else:
        reached = radius
    return Ball(S, reached, order, dists, parents)


@lru_cache(maxsize=16)
def bfs_ball(S: GeneratingSet, R: int, cap: int = DEFAULT_BALL_CAP) -> Ball:
    """Closed ball B_R with exact distances and canonical parent letters."""
    if R < 0:
        raise DomainError("radius must be non-negative")
    return _bfs(S, R, cap)


def word_norm(S: GeneratingSet, g, cap: int, ball_cap: int = DEFAULT_BALL_CAP) -> int | None:
    """Exact word length of ``g`` if it is at most ``cap``, else None."""
    if cap < 0:
        raise DomainError("cap must be non-negative")
    g = S.group.element(g)
    if g == S.group.identity:
        return 0
    ball = _bfs(S, cap, ball_cap, targets=[g])
    return ball.dist(g)


def word_norms(S: GeneratingSet, elements: Iterable, cap: int, ball_cap: int = DEFAULT_BALL_CAP) -> list:
    """Word norms of several elements from one shared BFS (None where beyond ``cap``)."""
    elements = [S.group.element(g) for g in elements]
    ball = _bfs(S, cap, ball_cap, targets=elements)
    return [ball.dist(g) for g in elements]


def geodesic_word(ball: Ball, g) -> Word:
    """Canonical shortest word for ``g`` read from the BFS parent chain."""
    S = ball.genset
    group = S.group
    g = group.element(g)
    i = ball._index.get(g)
    if i is None:
        raise DomainError(f"{tuple(g)} is not in the ball of radius {ball.radius}")
    codes = []
    while True:
        code = int(ball.parent_codes[i])
        if code == 0:
            break
        codes.append(code)
        g = group.mul(g, S.step(-code))
        i = ball._index[g]
    return Word(codes[::-1])


def check_generates(S: GeneratingSet, radius_cap: int = DEFAULT_RADIUS_CAP,
                    ball_cap: int = DEFAULT_BALL_CAP) -> dict:
    """Confirm that BFS reaches every standard generator; returns their S-norms."""
    targets = dict(S.group.standard_names)
    ball = _bfs(S, radius_cap, ball_cap, targets=targets.values())
    norms = {name: ball.dist(e) for name, e in targets.items()}
    missing = [name for name, d in norms.items() if d is None]
    if missing:
        raise ResourceError(
            f"{S} did not reach {', '.join(missing)} within radius {radius_cap}; "
            "it may not generate the group",
            reached=len(ball),
        )
    return norms


@dataclass(frozen=True, eq=False)
class Walk:
    """The walk (g; w): start, start*s1, start*s1*s2, ..."""

    start: tuple
    word: Word
    genset: GeneratingSet

    def __len__(self) -> int:
        return len(self.word)

    def vertices(self) -> np.ndarray:
        return self.genset.trace(self.start, self.word)

    @property
    def end(self):
        if not len(self.word):
            return self.start
        return self.genset.group.element(self.vertices()[-1].tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Walk):
            return NotImplemented
        return (tuple(self.start) == tuple(other.start) and self.word == other.word
                and self.genset == other.genset)

    def __hash__(self) -> int:
        return hash((tuple(self.start), self.word))


def translate_walk(g, w: Word, S: GeneratingSet) -> Walk:
    """The walk g*w, i.e. the word w read from the vertex g."""
    S.validate_word(w)
    return Walk(S.group.element(g), w, S)
