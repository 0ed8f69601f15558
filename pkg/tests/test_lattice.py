import itertools
import json
import math
import random
from fractions import Fraction

import pytest

from heisembed.errors import PreconditionError, ResourceError, ValidationError
from heisembed.lattice import (Polyline, convert_embedding, cubes_touched, drawing_from_document, lattice_genset,
                               lattice_path, read_drawing, retarget_zd, scale_factor, segment_segment_dist2,
                               tube_dist2)
from heisembed.wiring import to_json_text, verify
from oracles import segment_touches_cube

TETRA = {"d": 3, "vertices": [[0, 0, 0], [10, 0, 0], [0, 10, 0], [0, 0, 10]],
         "edges": [{"u": u, "v": v} for u in range(4) for v in range(u + 1, 4)]}


def brute_cubes(poly):
    pts = poly.points
    lo = [math.floor(min(p[i] for p in pts)) - 1 for i in range(poly.d)]
    hi = [math.floor(max(p[i] for p in pts)) + 1 for i in range(poly.d)]
    out = set()
    for q in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
        if any(segment_touches_cube(a, b, q) for a, b in poly.segments()):
            out.add(q)
    return out


def test_degenerate_segment():
    assert cubes_touched(Polyline.of([(0.5, 0.5, 0.5)] * 2)).Q == {(0, 0, 0)}


def test_axis_segment():
    assert cubes_touched(Polyline.of([(0.5, 0.5, 0.5), (2.5, 0.5, 0.5)])).Q == {(0, 0, 0), (1, 0, 0), (2, 0, 0)}


def test_lattice_point_crossing_touches_all_eight_cubes():
    Q = cubes_touched(Polyline.of([(0.5, 0.5, 0.5), (1.5, 1.5, 1.5)])).Q
    assert {(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)} <= Q
    assert Q == brute_cubes(Polyline.of([(0.5, 0.5, 0.5), (1.5, 1.5, 1.5)]))


def test_cube_sets_match_slab_clipping():
    rng = random.Random(4)
    for _ in range(25):
        pts = [tuple(Fraction(rng.randint(-12, 12), rng.choice([1, 2, 4])) for _ in range(3))
               for _ in range(rng.randint(2, 4))]
        poly = Polyline.of(pts)
        assert cubes_touched(poly).Q == brute_cubes(poly)


def test_cube_sets_in_the_plane():
    poly = Polyline.of([(0, 0), (2, 1)])
    assert cubes_touched(poly).Q == brute_cubes(poly)
    with pytest.raises(ValidationError):
        cubes_touched(Polyline.of([(0,), (1,)]))


def test_axis_path():
    path = lattice_path(Polyline.of([(0.5, 0.5, 0.5), (2.5, 0.5, 0.5)]))
    assert path.points.tolist() == [[0, 0, 0], [1, 0, 0], [2, 0, 0]]
    assert path.word.codes.tolist() == [1, 1]


def test_closed_loop_path():
    path = lattice_path(Polyline.of([(0.2, 0.3, 0.1), (3.7, 1.2, 0.4), (1.1, 2.9, 2.2), (0.2, 0.3, 0.1)]))
    assert path.points[0].tolist() == path.points[-1].tolist() == [0, 0, 0]


def test_random_paths_obey_tube_and_endpoint_laws():
    rng = random.Random(0)
    for _ in range(100):
        pts = [tuple(rng.uniform(-6, 6) for _ in range(3)) for _ in range(rng.randint(2, 5))]
        poly = Polyline.of(pts)
        path = lattice_path(poly)
        steps = abs(path.points[1:] - path.points[:-1]).sum(axis=1)
        assert (steps == 1).all()
        assert path.points[0].tolist() == [math.floor(c) for c in pts[0]]
        assert path.points[-1].tolist() == [math.floor(c) for c in pts[-1]]
        assert tube_dist2(path, poly) <= 3
        assert path.bfs_depth <= path.cube_count


def test_segment_distance_matches_sampling():
    rng = random.Random(9)
    for _ in range(20):
        p1, q1, p2, q2 = (tuple(Fraction(rng.randint(-6, 6)) for _ in range(3)) for _ in range(4))
        exact = segment_segment_dist2(p1, q1, p2, q2)
        grid = [Fraction(i, 24) for i in range(25)]
        sampled = min(sum((p1[i] + s * (q1[i] - p1[i]) - p2[i] - t * (q2[i] - p2[i])) ** 2 for i in range(3))
                      for s in grid for t in grid)
        assert exact <= sampled
        assert sampled - exact <= Fraction(1, 4) * (1 + sampled)
    assert segment_segment_dist2((0, 0, 0), (2, 0, 0), (1, 1, 0), (1, 3, 0)) == 1


def test_scale_factor_is_just_above():
    for d in (2, 3, 4):
        s = scale_factor(d)
        assert s * s > 9 * d and (s - Fraction(1, 10**6)) ** 2 <= 9 * d


def test_tetrahedron_converts_to_lattice_embedding():
    res = convert_embedding(drawing_from_document(TETRA))
    assert res.ok and res.report.embedding_ok
    assert res.wiring.vertex_map[1] == (math.floor(scale_factor(3) * 10), 0, 0)


def test_parallel_segments_stay_disjoint():
    doc = {"d": 3, "vertices": [[0, 0, 0], [4, 0, 0], [0, 1, 0], [4, 1, 0]],
           "edges": [{"u": 0, "v": 1}, {"u": 2, "v": 3}]}
    res = convert_embedding(drawing_from_document(doc))
    assert res.report["roads_disjoint"].passed and res.ok


def test_single_edge_endpoints_are_floors():
    doc = {"d": 2, "vertices": [[0.3, 0.1], [3.9, 2.2]], "edges": [{"u": 0, "v": 1, "points": [[0.3, 0.1],
                                                                                               [1, 3], [3.9, 2.2]]}]}
    res = convert_embedding(drawing_from_document(doc))
    s = scale_factor(2)
    want = [[math.floor(s * Fraction(c)) for c in p] for p in doc["vertices"]]
    assert [list(g) for g in res.wiring.vertex_map] == want
    assert res.ok


def test_thin_drawing_is_rejected_with_the_pair():
    doc = {"d": 3, "vertices": [[0, 0, 0], [4, 0, 0], [0, 0.5, 0], [4, 0.5, 0]],
           "edges": [{"u": 0, "v": 1}, {"u": 2, "v": 3}]}
    with pytest.raises(PreconditionError, match="vertices"):
        convert_embedding(drawing_from_document(doc))


def test_edge_must_join_its_vertices():
    doc = {"d": 2, "vertices": [[0, 0], [5, 0]], "edges": [{"u": 0, "v": 1, "points": [[0, 0], [4, 0]]}]}
    with pytest.raises(ValidationError):
        convert_embedding(drawing_from_document(doc))


@pytest.mark.parametrize("doc", [{}, {"d": 1, "vertices": [[0]], "edges": []},
                                 {"d": 2, "vertices": [[0, 0]], "edges": [{"u": 0, "v": 3}]},
                                 {"d": 2, "vertices": [[0, "a"]], "edges": []},
                                 {"d": 2, "vertices": [[0, float("nan")]], "edges": []}])
def test_bad_drawings(doc):
    with pytest.raises(ValidationError):
        drawing_from_document(doc)


def test_read_drawing(tmp_path):
    p = tmp_path / "t.json"
    p.write_text(json.dumps(TETRA))
    assert len(read_drawing(p).edges) == 6
    p.write_text("{")
    with pytest.raises(ValidationError):
        read_drawing(p)


@pytest.fixture(scope="module")
def tetra():
    return convert_embedding(drawing_from_document(TETRA)).wiring


def test_retarget_standard_basis_is_identity(tetra):
    out, m = retarget_zd(tetra, lattice_genset(3))
    assert m == 1 and to_json_text(out) == to_json_text(tetra)


def test_retarget_sheared_basis(tetra):
    out, m = retarget_zd(tetra, lattice_genset(3, "1:1:0,e2,e3"))
    assert m > 1 and verify(out).embedding_ok
    assert out.vertex_map[1] == tuple(m * c for c in tetra.vertex_map[1])


def test_retarget_non_generating_set(tetra):
    with pytest.raises(ResourceError):
        retarget_zd(tetra, lattice_genset(3, "2:0:0,e2,e3"))
