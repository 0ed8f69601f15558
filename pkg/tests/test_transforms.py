import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heisembed.cayley import Walk
from heisembed.errors import PreconditionError, ValidationError
from heisembed.graphs import from_edge_list, random_regular
from heisembed.group import GeneratorLabel, Word, eval_word, lam, mul, parse_genset, standard_genset
from heisembed.random_wiring import RandomWiringConfig, generate_run
from heisembed.transforms import (XY, XYZ, PipelineConfig, ReliefConfig, StageError, assign_coloring,
                                  audit_coloring, bilip_and_m, burden_relief, embed_graph, general_volume_bound,
                                  relief_volume_bound, relief_word, remove_z, residue_class, substitute_letter,
                                  to_general_genset)
from heisembed.wiring import CombinatorialWiring, image_points, verify
from conftest import complete_graph
from oracles import bfs_distances, eval_codes

GENS_XYZ = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]


def crossing_wiring():
    """Two non-adjacent edges whose roads cross at the identity."""
    G = from_edge_list(4, [(0, 1), (2, 3)])
    fv = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0)]
    roads = [Walk(fv[0], Word([1, 1]), XY), Walk(fv[2], Word([2, 2]), XY)]
    return CombinatorialWiring(XY, G, tuple(fv), tuple(roads))


def test_residue_class():
    assert residue_class((5, 2, 7)) == 6
    assert residue_class((-1, -1, 0)) == 15
    assert residue_class((4, 8, 1)) == 0


def test_vertex_colors_follow_residues():
    G = from_edge_list(2, [])
    f = CombinatorialWiring(XY, G, ((0, 0, 0), (0, 1, 0)), ())
    c = assign_coloring(f, k=1)
    assert c.vertex_color == (0, 1)


def test_crossing_roads_get_distinct_ranks():
    f = crossing_wiring()
    c = assign_coloring(f, k=2)
    # identity: residue 0, roads ranked 0 and 1 by edge id
    assert c.color((0, 0, 0), 0) == 16 * 2 + 0
    assert c.color((0, 0, 0), 1) == 16 * 2 + 1
    assert c.color((-1, 0, 0), 0) == c.vertex_color[0] == 12 * 2
    audit = audit_coloring(f, c)
    assert all(item["pass"] for item in audit.values()), audit


def test_coincident_vertices_are_separated():
    G = from_edge_list(3, [(0, 1)])
    fv = ((0, 0, 0), (1, 0, 0), (0, 0, 0))
    f = CombinatorialWiring(XY, G, fv, (Walk(fv[0], Word([1]), XY),))
    c = assign_coloring(f, k=2)
    assert c.vertex_color[0] != c.vertex_color[2]
    assert audit_coloring(f, c)["separates_vertices"]["pass"]


def test_coloring_preconditions():
    f = crossing_wiring()
    with pytest.raises(PreconditionError):
        assign_coloring(f, k=1)
    G = from_edge_list(2, [(0, 1)])
    same = CombinatorialWiring(XY, G, ((0, 0, 0), (0, 0, 0)), (Walk((0, 0, 0), Word(), XY),))
    with pytest.raises(PreconditionError):
        assign_coloring(same)
    xyz = CombinatorialWiring(XYZ, from_edge_list(1, []), ((0, 0, 0),), ())
    with pytest.raises(PreconditionError):
        assign_coloring(xyz)


def test_relief_word_example_word():
    w = relief_word(GeneratorLabel(0, 1), 2, 3, K=1000, k=1)
    expected = [1] * 502 + [2, 3, -2] + [1] * 498
    assert w.codes.tolist() == expected
    assert len(w) == 1000 + 2 + 1


def test_relief_word_equal_colors_keeps_the_backtrack():
    w = relief_word(GeneratorLabel(1, -1), 5, 5, K=1000, k=1)
    assert len(w) == 1002
    assert w.codes.tolist() == [-2] * 505 + [1, -1] + [-2] * 495


def test_relief_word_endpoint_from_identity():
    K = 1000
    w = relief_word(GeneratorLabel(1, 1), 3, 2, K, k=1)
    end = eval_codes((0, 0, 3), w.codes.tolist(), GENS_XYZ)[-1]
    assert end == (0, K, 2)


@settings(max_examples=60)
@given(st.tuples(st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50)),
       st.sampled_from([1, -1, 2, -2]), st.integers(0, 63), st.integers(0, 63))
def test_relief_word_endpoint_law(p, s, a1, a2):
    K = 200
    start = mul((0, 0, a1), lam(K, p))
    step = {1: (1, 0, 0), -1: (-1, 0, 0), 2: (0, 1, 0), -2: (0, -1, 0)}[s]
    w = relief_word(s, a1, a2, K, k=2)
    assert len(w) == K + 2 + abs(a2 - a1)
    assert eval_word(start, w, XYZ) == mul((0, 0, a2), lam(K, mul(p, step)))


def test_relief_word_rejects():
    with pytest.raises(ValidationError):
        relief_word(GeneratorLabel(0, 1), 32, 0, 1000, k=1)
    with pytest.raises(ValidationError):
        relief_word(GeneratorLabel(0, 1), -1, 0, 1000)
    with pytest.raises(ValidationError):
        relief_word(3, 0, 0, 1000)
    with pytest.raises(ValidationError):
        relief_word(1, 0, 0, 999)


def test_relief_config():
    assert ReliefConfig().factor == 1000
    assert ReliefConfig(100, override_allowed=True).factor == 100
    for bad in [(100, False), (64, True), (101, True)]:
        with pytest.raises(ValidationError):
            ReliefConfig(*bad)


def test_relief_of_isolated_vertex():
    f = CombinatorialWiring(XY, from_edge_list(1, []), ((0, 0, 0),), ())
    out, _ = burden_relief(f)
    assert out.vertex_map == ((0, 0, 0),)


def test_relief_of_single_x_step():
    G = from_edge_list(2, [(0, 1)])
    fv = ((0, 0, 0), (1, 0, 0))
    f = CombinatorialWiring(XY, G, fv, (Walk(fv[0], Word([1]), XY),))
    out, col = burden_relief(f)
    K = 1000 * col.k
    a1, a2 = col.vertex_color
    assert out.vertex_map == ((0, 0, a1), (K, 0, a2))
    assert len(out.roads[0]) == K + 2 + abs(a2 - a1)
    assert verify(out).embedding_ok


def test_relief_untangles_crossing_roads():
    f = crossing_wiring()
    out, col = burden_relief(f)
    rep = verify(out)
    assert rep.embedding_ok
    assert rep.volume <= relief_volume_bound(col.k) * verify(f).volume
    K = 1000 * col.k
    for road, orig in zip(out.roads, f.roads):
        assert len(road) <= 1100 * col.k * len(orig)


def test_remove_z_single_z_step():
    G = from_edge_list(2, [(0, 1)])
    fv = ((0, 0, 0), (0, 0, 1))
    f = CombinatorialWiring(XYZ, G, fv, (Walk(fv[0], Word([3]), XYZ),))
    out = remove_z(f)
    road = out.roads[0]
    assert len(road) == 16 and road.end == (0, 0, 4) == lam(2, (0, 0, 1))
    assert out.vertex_map[1] == (0, 0, 4)
    assert verify(out).embedding_ok
    assert substitute_letter(-3).codes.tolist() == [2, 1, -2, -1] * 4


def test_remove_z_x_step():
    G = from_edge_list(2, [(0, 1)])
    fv = ((3, 1, 2), (4, 1, 2))
    f = CombinatorialWiring(XYZ, G, fv, (Walk(fv[0], Word([1]), XYZ),))
    out = remove_z(f)
    assert out.roads[0].word.codes.tolist() == [1, 1]
    assert out.roads[0].end == lam(2, mul(fv[0], (1, 0, 0)))


def test_remove_z_refuses_non_embeddings():
    f = crossing_wiring()
    g = CombinatorialWiring(XYZ, f.graph, f.vertex_map, tuple(Walk(r.start, r.word, XYZ) for r in f.roads))
    with pytest.raises(PreconditionError):
        remove_z(g)


def test_bilip_constants():
    bl = bilip_and_m(XY)
    assert (bl.M, bl.m) == (1, 2) and bl.w_x.codes.tolist() == [1] and bl.w_y.codes.tolist() == [2]
    bl = bilip_and_m(XYZ)
    assert (bl.M, bl.m) == (4, 5)
    S = parse_genset("y,x,1:0:2")
    bl = bilip_and_m(S)
    assert len(bl.w_x) == 1 and eval_word((0, 0, 0), bl.w_x, S) == (1, 0, 0)
    assert eval_word((0, 0, 0), bl.w_y, S) == (0, 1, 0)
    xy_norm = bfs_distances([(1, 0, 0), (0, 1, 0)], 8)[(1, 0, 2)]
    assert bl.M == xy_norm and bl.m == xy_norm + 1
    assert general_volume_bound(bl) == 1 + 2 * bl.m


def test_general_genset_xy_is_the_stretched_wiring():
    G = from_edge_list(2, [(0, 1)])
    fv = ((0, 0, 0), (1, 0, 0))
    f = CombinatorialWiring(XY, G, fv, (Walk(fv[0], Word([1]), XY),))
    out = to_general_genset(f, XY)
    assert out.vertex_map == ((0, 0, 0), (2, 0, 0))
    assert out.roads[0].word.codes.tolist() == [1, 1]


def test_general_genset_xyz_single_step():
    G = from_edge_list(2, [(0, 1)])
    fv = ((0, 0, 0), (0, 1, 0))
    f = CombinatorialWiring(XY, G, fv, (Walk(fv[0], Word([2]), XY),))
    out = to_general_genset(f, XYZ)
    assert out.roads[0].word.codes.tolist() == [2] * 5
    assert out.vertex_map[1] == lam(5, (0, 1, 0))


def test_general_genset_inverse_letters_use_reversed_words():
    S = parse_genset("1:1:0,y")
    G = from_edge_list(2, [(0, 1)])
    fv = ((0, 0, 0), (-1, 0, 0))
    f = CombinatorialWiring(XY, G, fv, (Walk(fv[0], Word([-1]), XY),))
    bl = bilip_and_m(S)
    out = to_general_genset(f, S)
    assert out.roads[0].word == bl.w_x.inverse().power(bl.m)
    assert out.roads[0].end == lam(bl.m, (-1, 0, 0))


def test_single_vertex_pipeline():
    res = embed_graph(from_edge_list(1, []), XYZ)
    assert res.ok and res.stages[-1].metrics.volume == 1


def test_stage_errors_are_tagged():
    cfg = PipelineConfig(RandomWiringConfig(load_threshold_constant=0.3, max_attempts=2))
    with pytest.raises(StageError) as exc:
        embed_graph(random_regular(16, 3, 0), XY, cfg)
    assert exc.value.stage == "random_wiring"


@pytest.fixture(scope="module")
def k4_runs():
    return {names: embed_graph(complete_graph(4), standard_genset(names),
                               PipelineConfig(RandomWiringConfig(seed=1)))
            for names in ("x,y", "x,y,z")}


def test_k4_pipeline_verifies_every_stage(k4_runs):
    for res in k4_runs.values():
        assert res.ok
        assert [s.stage for s in res.stages] == ["random_wiring", "burden_relief", "remove_z", "general_genset"]
        assert all(s.report.embedding_ok for s in res.stages[1:])
        assert all(r["ok"] for r in res.ratios)
        doc = res.to_json()
        assert list(doc["stages"][0]) == ["stage", "volume", "diameter", "diameter_mode", "load", "verify"]


def test_endpoint_algebra_on_every_stage(k4_runs):
    for res in k4_runs.values():
        for stage in res.stages:
            f = stage.wiring
            for (u, v), road in zip(f.graph.edges, f.roads):
                assert road.start == f.vertex_map[u]
                assert eval_word(road.start, road.word, f.genset) == f.vertex_map[v]


def test_relief_waypoints_are_exactly_the_lattice_points(k4_runs):
    res = k4_runs["x,y"]
    f1, f2 = res.stages[0].wiring, res.stages[1].wiring
    col = assign_coloring(f1, res.k)
    K = 1000 * res.k
    pts = image_points(f2)
    on_grid = {tuple(p) for p in pts.tolist() if p[0] % K == 0 and p[1] % K == 0}
    waypoints = {mul((0, 0, c), lam(K, p)) for (p, e), c in col.point_edge_color.items()}
    waypoints |= set(f2.vertex_map)
    assert on_grid == waypoints


def test_parity_separation_after_removing_z(k4_runs):
    res = k4_runs["x,y"]
    f2, f3 = res.stages[1].wiring, res.stages[2].wiring
    assert all(a % 2 == 0 and b % 2 == 0 and c % 4 == 0 for a, b, c in f3.vertex_map)
    for old, new in zip(f2.roads, f3.roads):
        pts = new.vertices()
        even = (pts[:, 0] % 2 == 0) & (pts[:, 1] % 2 == 0) & (pts[:, 2] % 4 == 0)
        expected = np.zeros(len(pts), dtype=bool)
        lengths = [len(substitute_letter(int(c))) for c in old.word.codes.tolist()]
        expected[np.concatenate(([0], np.cumsum(lengths)))] = True
        assert (even == expected).all()


@pytest.mark.parametrize("n,seed", [(4, 0), (8, 1), (8, 2)])
def test_coloring_audit_on_generated_wirings(n, seed):
    G = complete_graph(4) if n == 4 else random_regular(n, 3, seed)
    run = generate_run(G, XY, RandomWiringConfig(seed=seed))
    col = assign_coloring(run.wiring)
    audit = audit_coloring(run.wiring, col)
    assert all(item["pass"] for item in audit.values()), audit
