"""Finite simple input graphs: validation, edge-list files, random regular graphs."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from heisembed.errors import ValidationError

DEFAULT_RESTARTS = 10_000


@dataclass(frozen=True)
class FiniteGraph:
    n: int
    edges: tuple[tuple[int, int], ...]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False, compare=False, default=())

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self.adjacency), default=0)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def adjacent_edges(self, i: int, j: int) -> bool:
        """Whether edges i and j share an endpoint."""
        return bool(set(self.edges[i]) & set(self.edges[j]))


def from_edge_list(n: int, pairs) -> FiniteGraph:
    """Validate and normalize an undirected simple graph; edges keep input order."""
    if n < 0:
        raise ValidationError(f"vertex count must be non-negative, got {n}")
    edges, seen = [], set()
    adj = [[] for _ in range(n)]
    for pair in pairs:
        u, v = (int(x) for x in pair)
        if u == v:
            raise ValidationError(f"loop at vertex {u}: ({u},{v})")
        if not (0 <= u < n and 0 <= v < n):
            raise ValidationError(f"edge ({u},{v}) out of range for n={n}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ValidationError(f"duplicate edge ({u},{v})")
        seen.add(key)
        edges.append(key)
        adj[u].append(v)
        adj[v].append(u)
    return FiniteGraph(n, tuple(edges), tuple(tuple(sorted(a)) for a in adj))


def orient(G: FiniteGraph) -> list[tuple[int, int]]:
    """Direct every edge from its smaller to its larger endpoint."""
    return [(min(u, v), max(u, v)) for u, v in G.edges]


def random_regular(n: int, d: int, seed: int, max_restarts: int = DEFAULT_RESTARTS) -> FiniteGraph:
    """Simple d-regular graph from the configuration model, restarting on any collision."""
    if d < 0 or n < 1:
        raise ValidationError(f"bad parameters n={n}, d={d}")
    if (n * d) % 2:
        raise ValidationError(f"n*d must be even (n={n}, d={d})")
    if d >= n:
        raise ValidationError(f"need d < n (n={n}, d={d})")
    rng = np.random.Generator(np.random.PCG64(seed))
    stubs = np.repeat(np.arange(n), d)
    for _ in range(max_restarts):
        perm = rng.permutation(stubs).reshape(-1, 2)
        lo = perm.min(axis=1)
        hi = perm.max(axis=1)
        if (lo == hi).any():
            continue
        pairs = sorted(zip(lo.tolist(), hi.tolist()))
        if len(set(pairs)) != len(pairs):
            continue
        return from_edge_list(n, pairs)
    raise ValidationError(f"configuration model did not produce a simple graph in {max_restarts} restarts")


def read_edge_list(path: str | Path) -> FiniteGraph:
    """Parse the "n m" header then m "u v" lines; '#' starts a comment."""
    lines = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ValidationError(f"{path}: empty graph file")
    try:
        header = [int(t) for t in lines[0].split()]
        if len(header) != 2:
            raise ValueError
        n, m = header
        pairs = []
        for line in lines[1:]:
            toks = [int(t) for t in line.split()]
            if len(toks) != 2:
                raise ValueError
            pairs.append(tuple(toks))
    except ValueError:
        raise ValidationError(f"{path}: malformed edge list") from None
    if len(pairs) != m:
        raise ValidationError(f"{path}: header says {m} edges, found {len(pairs)}")
    return from_edge_list(n, pairs)


def format_edge_list(G: FiniteGraph) -> str:
    return "".join([f"{G.n} {G.m}\n"] + [f"{u} {v}\n" for u, v in G.edges])
