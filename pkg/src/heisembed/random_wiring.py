"""Randomized combinatorial wiring into a Cayley graph of polynomial growth.

Vertices are placed independently and uniformly in the ball B_r with
r = ceil(n^(1/(alpha-1))); the edge (i, j) becomes the walk g_i * gamma_h with
h = g_i^-1 g_j and gamma_h the canonical BFS geodesic. A sample is accepted when
none of the three bad events occurs:

    e1  some element receives >= t vertices
    e2  some element lies on >= t roads
    e3  some edge has both endpoints on the same element

with t = ceil(C * ln(1 + n)).

Randomness: each attempt draws from PCG64 seeded by ``SeedSequence([seed, attempt])``,
so attempt streams are independent and reproducible across platforms.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from heisembed.cayley import DEFAULT_BALL_CAP, Ball, Walk, bfs_ball, geodesic_word
from heisembed.errors import AttemptsExhausted, DomainError, ValidationError
from heisembed.graphs import FiniteGraph, orient
from heisembed.group import GeneratingSet
from heisembed.wiring import CombinatorialWiring, load_of


@dataclass(frozen=True)
class RandomWiringConfig:
    alpha: float = 4
    load_threshold_constant: float = 3.0
    max_attempts: int = 200
    seed: int = 0
    ball_cap: int = DEFAULT_BALL_CAP

    def __post_init__(self):
        if not self.alpha > 1:
            raise ValidationError(f"growth order must exceed 1, got {self.alpha}")
        if self.max_attempts < 1:
            raise ValidationError("max_attempts must be >= 1")
        if not self.load_threshold_constant > 0:
            raise ValidationError("load threshold constant must be positive")


@dataclass(frozen=True)
class EventOutcome:
    e1: bool
    e2: bool
    e3: bool
    threshold: int
    max_vertex_load: int = 0
    max_road_load: int = 0

    @property
    def good(self) -> bool:
        return not (self.e1 or self.e2 or self.e3)


@dataclass(frozen=True)
class RandomRun:
    wiring: CombinatorialWiring
    outcome: EventOutcome
    attempts: int
    radius: int
    ball: Ball


def radius_for(n: int, alpha: float) -> int:
    """ceil(n^(1/(alpha-1))), exact for integral alpha."""
    if n < 1:
        raise DomainError("need at least one vertex")
    if not alpha > 1:
        raise DomainError("growth order must exceed 1")
    e = alpha - 1
    if float(e).is_integer():
        e = int(e)
        r = max(1, int(round(n ** (1.0 / e))))
        while r**e < n:
            r += 1
        while r > 1 and (r - 1) ** e >= n:
            r -= 1
        return r
    r = max(1, math.ceil(n ** (1.0 / e)))
    while r > 1 and (r - 1) ** e >= n:
        r -= 1
    while r**e < n:
        r += 1
    return r


def load_threshold(n: int, constant: float) -> int:
    return math.ceil(constant * math.log1p(n))


def attempt_rng(seed: int, attempt: int) -> np.random.Generator:
    seq = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, attempt])
    return np.random.Generator(np.random.PCG64(seq))


def _outcome(f: CombinatorialWiring, threshold: int) -> EventOutcome:
    lm = load_of(f)
    vmax = int(lm.vertex_load.max()) if lm.vertex_load.size else 0
    rmax = int(lm.road_load.max()) if lm.road_load.size else 0
    e3 = any(f.vertex_map[u] == f.vertex_map[v] for u, v in f.graph.edges)
    return EventOutcome(vmax >= threshold, rmax >= threshold, e3, threshold, vmax, rmax)


def sample_wiring(G: FiniteGraph, S: GeneratingSet, config: RandomWiringConfig, ball: Ball,
                  attempt: int = 0, positions=None, _geodesics: dict | None = None):
    """One draw of the random wiring and its bad-event outcome.

    ``positions`` overrides the sampled vertex images (used to build specific cases).
    """
    r = radius_for(max(G.n, 1), config.alpha)
    if ball.radius < 2 * r:
        raise DomainError(f"ball radius {ball.radius} < 2r = {2 * r}")
    if ball.genset != S:
        raise DomainError("ball was built over a different generating set")
    group = S.group
    if positions is None:
        members = ball.members(r)
        idx = attempt_rng(config.seed, attempt).integers(0, len(members), size=G.n)
        positions = [members[i] for i in idx.tolist()]
    else:
        positions = [group.element(p) for p in positions]
    memo = {} if _geodesics is None else _geodesics
    roads = []
    for u, v in orient(G):
        h = group.mul(group.inv(positions[u]), positions[v])
        w = memo.get(h)
        if w is None:
            w = memo[h] = geodesic_word(ball, h)
        roads.append(Walk(positions[u], w, S))
    f = CombinatorialWiring(S, G, tuple(positions), tuple(roads))
    return f, _outcome(f, load_threshold(G.n, config.load_threshold_constant))


def generate_run(G: FiniteGraph, S: GeneratingSet, config: RandomWiringConfig,
                 ball: Ball | None = None) -> RandomRun:
    """First accepted sample in attempt order, with its statistics."""
    r = radius_for(max(G.n, 1), config.alpha)
    if ball is None:
        ball = bfs_ball(S, 2 * r, config.ball_cap)
    counts = {"e1": 0, "e2": 0, "e3": 0}
    memo = {}
    for attempt in range(config.max_attempts):
        f, outcome = sample_wiring(G, S, config, ball, attempt, _geodesics=memo)
        if outcome.good:
            return RandomRun(f, outcome, attempt + 1, r, ball)
        for name in counts:
            counts[name] += getattr(outcome, name)
    stats = {"attempts": config.max_attempts, "radius": r,
             "threshold": load_threshold(G.n, config.load_threshold_constant), "event_counts": counts,
             "config": asdict(config)}
    raise AttemptsExhausted(
        f"no good wiring in {config.max_attempts} attempts (n={G.n}); raise the load constant or attempts",
        stats,
    )


def generate(G: FiniteGraph, S: GeneratingSet, config: RandomWiringConfig) -> CombinatorialWiring:
    return generate_run(G, S, config).wiring


def monte_carlo(graphs, S: GeneratingSet, config: RandomWiringConfig, trials: int) -> list[dict]:
    """Empirical bad-event frequencies per graph, with binomial standard errors.

    ``graphs`` is an iterable of FiniteGraph; trial t uses attempt index t.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    rows = []
    for G in graphs:
        r = radius_for(max(G.n, 1), config.alpha)
        ball = bfs_ball(S, 2 * r, config.ball_cap)
        hits = {"e1": 0, "e2": 0, "e3": 0}
        memo = {}
        for t in range(trials):
            _, outcome = sample_wiring(G, S, config, ball, t, _geodesics=memo)
            for name in hits:
                hits[name] += getattr(outcome, name)
        row = {"n": G.n, "m": G.m, "r": r, "ball_r": ball.size_at(r), "trials": trials,
               "threshold": load_threshold(G.n, config.load_threshold_constant)}
        for name, h in hits.items():
            p = h / trials
            row[f"p_{name}"] = p
            row[f"se_{name}"] = math.sqrt(p * (1 - p) / trials)
        rows.append(row)
    return rows
