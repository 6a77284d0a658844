import itertools
import random

import networkx
import pytest
from hypothesis import given, strategies as st

from limitops.errors import ConfigurationError, DomainError
from limitops.space import CoarseUnion, ZLattice, space_from_dict

Z1 = ZLattice(1)
Z2 = ZLattice(2, "l1")
Z2INF = ZLattice(2, "linf")
UNION = CoarseUnion("cycles", [4, 6, 8, 10, 12])
PATHS = CoarseUnion("paths", {"start": 2, "step": 3})

def span(space, n):
    return min(n, space.total_points()) if isinstance(space, CoarseUnion) and space.n_components else n


lattice_pts = st.lists(st.integers(-40, 40), min_size=2, max_size=2).map(tuple)


def union_graph(space, n):
    """networkx graph of the first n components with the spine edges collapsed into weights."""
    g = networkx.Graph()
    for k in range(n):
        for v in range(space.size(k)):
            for w in space._local_neighbors(k, v):
                g.add_edge((k, v), (k, w), weight=1)
    for k in range(1, n):
        g.add_edge((k - 1, 0), (k, 0), weight=space.spine(k) - space.spine(k - 1))
    return g


def test_distance_examples():
    assert Z1.distance((3,), (7,)) == 4
    assert UNION.distance((0, 1), (0, 1)) == 0
    assert UNION.distance((0, 0), (1, 0)) >= 1


def test_union_distance_matches_weighted_graph():
    g = union_graph(UNION, 5)
    dist = dict(networkx.all_pairs_dijkstra_path_length(g))
    for x in g.nodes:
        for y in g.nodes:
            assert UNION.distance(x, y) == dist[x][y]


def test_union_separation_grows():
    for j, k in itertools.combinations(range(5), 2):
        d = min(UNION.distance((j, v), (k, w)) for v in range(UNION.size(j)) for w in range(UNION.size(k)))
        assert d >= j + k + 1


def test_ball_examples():
    assert sorted(Z1.ball((0,), 2).points) == [(-2,), (-1,), (0,), (1,), (2,)]
    assert len(Z2.ball((0, 0), 1)) == 5
    # C_10 is component 3 of UNION
    b = UNION.ball((3, 0), 2)
    assert len(b) == 5 and {p[0] for p in b} == {3}


def test_canonical_labeling_examples():
    assert UNION.canonical_labeling((3, 4), 0).points == ((3, 4),)
    assert Z1.canonical_labeling((5,), 1).points == ((5,), (4,), (6,))
    assert Z1.canonical_labeling((-3,), 1).points == ((-3,), (-4,), (-2,))
    c6 = CoarseUnion("cycles", [6])
    assert c6.canonical_labeling((0, 0), 2).points == ((0, 0), (0, 5), (0, 1), (0, 4), (0, 2))


@pytest.mark.parametrize("space", [Z1, Z2, Z2INF, ZLattice(3)])
def test_labeling_translation_equivariant(space):
    rnd = random.Random(1)
    ref = [tuple(a - b for a, b in zip(p, space.basepoint())) for p in space.canonical_labeling(space.basepoint(), 3)]
    for _ in range(20):
        c = tuple(rnd.randint(-100, 100) for _ in range(space.dim))
        offs = [tuple(a - b for a, b in zip(p, c)) for p in space.canonical_labeling(c, 3)]
        assert offs == ref


def test_growth_examples():
    assert Z1.growth_bound(3) == 7
    assert Z2INF.growth_bound(1) == 9
    assert CoarseUnion("cycles", [4, 6, 8, 10]).growth_bound(2) == 5


@pytest.mark.parametrize("space,metric", [(ZLattice(2), "l1"), (ZLattice(3), "l1"), (ZLattice(3, "linf"), "linf")])
def test_growth_bound_matches_brute_force(space, metric):
    for r in range(5):
        n = space.dim
        norm = (lambda o: sum(map(abs, o))) if metric == "l1" else (lambda o: max(map(abs, o)))
        count = sum(1 for o in itertools.product(range(-r, r + 1), repeat=n) if norm(o) <= r)
        assert space.growth_bound(r) == count


@pytest.mark.parametrize("space", [Z1, Z2, Z2INF, UNION, PATHS])
def test_ulf_and_nesting(space):
    rnd = random.Random(7)
    pts = [space.point_at(rnd.randrange(span(space, 200))) for _ in range(25)]
    for x in pts:
        for r in range(6):
            b, b1 = space.ball(x, r), space.ball(x, r + 1)
            assert set(b.points) <= set(b1.points)
            assert len(b) <= space.growth_bound(r)
            assert b.diameter == max(space.distance(p, q) for p in b for q in b)
            assert all(space.distance(x, p) <= r for p in b)


@pytest.mark.parametrize("space", [Z1, Z2, Z2INF, UNION, PATHS])
def test_metric_axioms_random_triples(space):
    rnd = random.Random(3)
    for _ in range(10_000):
        x, y, z = (space.point_at(rnd.randrange(span(space, 300))) for _ in range(3))
        dxy = space.distance(x, y)
        assert dxy >= 0 and (dxy == 0) == (x == y)
        assert dxy == space.distance(y, x)
        assert space.distance(x, z) <= dxy + space.distance(y, z)


@given(lattice_pts, lattice_pts, lattice_pts)
def test_lattice_triangle_inequality(x, y, z):
    for s in (Z2, Z2INF):
        assert s.distance(x, z) <= s.distance(x, y) + s.distance(y, z)


@pytest.mark.parametrize("space", [Z1, Z2, UNION, PATHS])
def test_enumeration_is_bijective(space):
    n = span(space, 150)
    pts = [space.point_at(i) for i in range(n)]
    assert len(set(pts)) == n
    assert [space.index_of(p) for p in pts] == list(range(n))


def test_union_enumeration_finite():
    assert UNION.total_points() == 40
    with pytest.raises(DomainError):
        UNION.point_at(40)


def test_diverging_sequences():
    assert Z1.diverging_sequence("axis_ray", 4) == [(1,), (2,), (4,), (8,)]
    assert Z1.diverging_sequence("axis_ray", 3, sign=-1) == [(-1,), (-2,), (-4,)]
    assert Z1.diverging_sequence("axis_ray", 3, phase=1) == [(2,), (3,), (5,)]
    assert Z2.diverging_sequence("diagonal_ray", 3) == [(1, 1), (2, 2), (4, 4)]
    assert UNION.diverging_sequence("component_walk", 3) == [(1, 0), (2, 0), (3, 0)]
    big = CoarseUnion("cycles", {"start": 4, "step": 2})
    seq = big.diverging_sequence("component_walk", 10)
    assert [p[0] for p in seq] == list(range(1, 11))


def test_randomized_sequence_is_seeded_and_diverges():
    a = Z2.diverging_sequence("randomized", 12, seed=5)
    assert a == Z2.diverging_sequence("randomized", 12, seed=5)
    assert a != Z2.diverging_sequence("randomized", 12, seed=6)
    d = [Z2.distance((0, 0), p) for p in a]
    assert all(d[m] >= 2 ** m for m in range(12))


def test_bad_configurations():
    with pytest.raises(ConfigurationError):
        ZLattice(1, property_a=False)
    with pytest.raises(ConfigurationError):
        ZLattice(0)
    with pytest.raises(ConfigurationError):
        CoarseUnion("cycles", [2])
    with pytest.raises(ConfigurationError):
        Z1.diverging_sequence("component_walk", 3)
    with pytest.raises(ConfigurationError):
        UNION.diverging_sequence("axis_ray", 3)
    with pytest.raises(DomainError):
        UNION.point((9, 0))
    with pytest.raises(DomainError):
        Z1.ball((0,), -1)


def test_round_trip_dict():
    for s in (Z1, Z2INF, UNION, PATHS):
        assert space_from_dict(s.to_dict()) == s
