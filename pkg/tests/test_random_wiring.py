import math

import numpy as np
import pytest

from heisembed.cayley import bfs_ball
from heisembed.errors import AttemptsExhausted, DomainError, ValidationError
from heisembed.graphs import from_edge_list, random_regular
from heisembed.group import standard_genset
from heisembed.random_wiring import (RandomWiringConfig, attempt_rng, generate_run, load_threshold,
                                     monte_carlo, radius_for, sample_wiring)
from heisembed.wiring import image_points, verify

XY = standard_genset("x,y")


@pytest.mark.parametrize("n,alpha,r", [(1, 4, 1), (8, 4, 2), (9, 4, 3), (27, 4, 3), (28, 4, 4), (64, 4, 4),
                                       (65, 4, 5), (9, 3, 3), (10, 3, 4), (5, 2, 5)])
def test_radius_is_exact_ceiling(n, alpha, r):
    assert radius_for(n, alpha) == r


def test_radius_non_integral_alpha():
    assert radius_for(100, 3.5) == math.ceil(100 ** (1 / 2.5))
    with pytest.raises(DomainError):
        radius_for(0, 4)
    with pytest.raises(DomainError):
        radius_for(4, 1)


def test_threshold():
    assert load_threshold(8, 3.0) == math.ceil(3 * math.log(9)) == 7
    assert load_threshold(64, 3.0) == 13


def test_config_validation():
    with pytest.raises(ValidationError):
        RandomWiringConfig(alpha=1)
    with pytest.raises(ValidationError):
        RandomWiringConfig(max_attempts=0)
    with pytest.raises(ValidationError):
        RandomWiringConfig(load_threshold_constant=0)


def test_attempt_streams_are_reproducible_and_distinct():
    a = attempt_rng(5, 0).integers(0, 10**9, 4).tolist()
    assert a == attempt_rng(5, 0).integers(0, 10**9, 4).tolist()
    assert a != attempt_rng(5, 1).integers(0, 10**9, 4).tolist()
    assert attempt_rng(-1, 0).integers(0, 10, 1).size == 1


@pytest.mark.parametrize("n", [4, 8, 16, 32])
def test_generated_wirings_satisfy_the_contract(n):
    G = random_regular(n, 3, seed=n)
    cfg = RandomWiringConfig(seed=3)
    run = generate_run(G, XY, cfg)
    r = radius_for(n, 4)
    rep = verify(run.wiring, k=run.outcome.threshold)
    assert rep.wiring_ok and rep["neighbor_distinct"].passed
    assert run.outcome.good and 1 <= run.attempts <= 200
    ball = bfs_ball(XY, 2 * r)
    assert (ball.lookup(image_points(run.wiring)) >= 0).all()
    assert rep.volume <= ball.size_at(2 * r)
    assert all(g in ball and ball.dist(g) <= r for g in run.wiring.vertex_map)
    # roads are geodesics: length equals the word distance of the endpoint images
    group = XY.group
    for (u, v), road in zip(G.edges, run.wiring.roads):
        h = group.mul(group.inv(run.wiring.vertex_map[u]), run.wiring.vertex_map[v])
        assert len(road) == ball.dist(h)
    again = generate_run(G, XY, cfg)
    assert again.attempts == run.attempts and again.wiring.vertex_map == run.wiring.vertex_map


def test_sample_with_fixed_positions():
    G = from_edge_list(2, [(0, 1)])
    ball = bfs_ball(XY, 4)
    f, out = sample_wiring(G, XY, RandomWiringConfig(), ball, positions=[(0, 0, 0), (0, 0, 0)])
    assert out.e3 and not out.good
    f, out = sample_wiring(G, XY, RandomWiringConfig(), ball, positions=[(0, 0, 0), (1, 1, 1)])
    assert out.good and len(f.roads[0]) == 2


def test_sample_requires_a_big_enough_ball():
    G = random_regular(16, 3, 0)
    with pytest.raises(DomainError):
        sample_wiring(G, XY, RandomWiringConfig(), bfs_ball(XY, 3))
    with pytest.raises(DomainError):
        sample_wiring(G, XY, RandomWiringConfig(), bfs_ball(standard_genset("x,y,z"), 6))


def test_attempts_exhausted_carries_statistics():
    G = random_regular(16, 3, 0)
    with pytest.raises(AttemptsExhausted) as exc:
        generate_run(G, XY, RandomWiringConfig(load_threshold_constant=0.5, max_attempts=3))
    stats = exc.value.stats
    assert stats["attempts"] == 3 and stats["threshold"] == 2
    assert stats["event_counts"]["e2"] == 3


def test_monte_carlo_rows():
    rows = monte_carlo([random_regular(8, 3, 1)], XY, RandomWiringConfig(seed=2), trials=40)
    row = rows[0]
    assert row["n"] == 8 and row["r"] == 2 and row["ball_r"] == 17 and row["trials"] == 40
    for e in ("e1", "e2", "e3"):
        p = row[f"p_{e}"]
        assert 0 <= p <= 1
        assert row[f"se_{e}"] == pytest.approx(np.sqrt(p * (1 - p) / 40))
    with pytest.raises(ValidationError):
        monte_carlo([], XY, RandomWiringConfig(), 0)
