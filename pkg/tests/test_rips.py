import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import rips_betti
from persamp.barcode import Barcode, hilbert_function
from persamp.rips import (
    betti_numbers,
    bifiltration_hilbert,
    check_distance_matrix,
    distance_matrix,
    load_matrix_csv,
    load_points_csv,
    vr_barcodes,
)

INF = math.inf
SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]


def test_two_points():
    h0, h1 = vr_barcodes(distance_matrix([(0, 0), (3, 4)]))
    assert h0 == Barcode([(0, 5), (0, INF)])
    assert h1 == Barcode()


def test_single_point():
    h0, h1 = vr_barcodes([[0.0]])
    assert h0 == Barcode([(0, INF)]) and len(h1) == 0


def test_square_h1():
    h0, h1 = vr_barcodes(distance_matrix(SQUARE), max_dim=1)
    assert len(h1) == 1
    (bar,) = list(h1)
    assert abs(bar.birth - 1) <= 1e-9 and abs(bar.death - math.sqrt(2)) <= 1e-9
    assert sorted(b.death for b in h0) == [1, 1, 1, INF]


def test_max_radius_truncates():
    h0, h1 = vr_barcodes(distance_matrix(SQUARE), max_radius=1.2)
    assert h1 == Barcode([(1, INF)])


def test_octahedron_h2():
    pts = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    h0, h1, h2 = vr_barcodes(distance_matrix(pts), max_dim=2)
    assert len(h2) == 1
    (bar,) = list(h2)
    assert bar.birth == pytest.approx(math.sqrt(2)) and bar.death == pytest.approx(2)


def _random_points(seed, n=7):
    rng = np.random.default_rng(seed)
    return np.round(rng.uniform(0, 4, size=(n, 2)), 2)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0, 5))
def test_betti_matches_dense_oracle(seed, scale):
    d = distance_matrix(_random_points(seed))
    assert betti_numbers(d, scale, 2) == rips_betti(d, scale, 2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_barcodes_agree_with_betti(seed):
    d = distance_matrix(_random_points(seed, 6))
    bars = vr_barcodes(d, max_dim=1)
    for scale in np.unique(d):
        for k, bc in enumerate(bars):
            assert hilbert_function(bc, scale) == rips_betti(d, scale, 1)[k]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.randoms())
def test_relabeling_invariance(seed, rnd):
    pts = _random_points(seed, 6)
    perm = list(range(len(pts)))
    rnd.shuffle(perm)
    a = vr_barcodes(distance_matrix(pts))
    b = vr_barcodes(distance_matrix(pts[perm]))
    assert a == b


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_h0_counts(seed):
    pts = _random_points(seed, 8)
    h0 = vr_barcodes(distance_matrix(pts), max_dim=0)[0]
    assert sum(1 for b in h0 if b.death == INF) == 1
    # coincident points produce zero-length bars that are dropped
    assert len(h0) == len(np.unique(pts, axis=0))


def test_bifiltration_equal_densities_matches_barcode():
    d = distance_matrix(SQUARE)
    radii = (0, 0.5, 1, 1.2, 1.5)
    H = bifiltration_hilbert(d, [1, 1, 1, 1], radii, (0, 1, 2), degree=1)
    h1 = vr_barcodes(d)[1]
    assert H.dims[0].tolist() == [hilbert_function(h1, r) for r in radii]
    assert H.dims[1].tolist() == H.dims[0].tolist()
    assert H.dims[2].tolist() == [0] * len(radii)


def test_bifiltration_single_point():
    H = bifiltration_hilbert([[0.0]], [2.0], (0, 1), (0, 1, 3), degree=0)
    assert H.dims.tolist() == [[1, 1], [1, 1], [0, 0]]


def test_bifiltration_density_filter():
    pts = [(0, 0), (5, 0), (10, 0)]
    H = bifiltration_hilbert(distance_matrix(pts), [3, 2, 1], (0, 5), (1, 2, 3), degree=0)
    assert H.dims.tolist() == [[3, 1], [2, 1], [1, 1]]


def test_bifiltration_parallel_matches_serial():
    d = distance_matrix(_random_points(1, 6))
    dens = np.linspace(0, 1, 6)
    a = bifiltration_hilbert(d, dens, (0, 1, 2), (0, 0.5), degree=0, jobs=1)
    b = bifiltration_hilbert(d, dens, (0, 1, 2), (0, 0.5), degree=0, jobs=2)
    assert (a.dims == b.dims).all()


def test_input_validation():
    with pytest.raises(ValueError):
        check_distance_matrix([[0, 1], [2, 0]])
    with pytest.raises(ValueError):
        check_distance_matrix([[0, 1, 2], [1, 0, 1]])
    with pytest.raises(ValueError):
        check_distance_matrix([[1, 0], [0, 0]])
    with pytest.raises(ValueError):
        check_distance_matrix([[0, float("nan")], [float("nan"), 0]])
    with pytest.raises(ValueError):
        vr_barcodes(distance_matrix(SQUARE), max_dim=3)
    with pytest.raises(ValueError):
        bifiltration_hilbert(distance_matrix(SQUARE), [1, 1], (0,), (0,))


def test_csv_loaders(tmp_path):
    p = tmp_path / "pts.csv"
    p.write_text("x,y,density\n0,0,1\n1,0,2\n1,1,3\n0,1,4\n")
    pts, dens = load_points_csv(p, density_col=True)
    assert pts.tolist() == [list(map(float, s)) for s in SQUARE]
    assert dens.tolist() == [1, 2, 3, 4]
    m = tmp_path / "m.csv"
    m.write_text("0,2\n2,0\n")
    assert load_matrix_csv(m).tolist() == [[0, 2], [2, 0]]
    m.write_text("0,2\n3,0\n")
    with pytest.raises(ValueError):
        load_matrix_csv(m)


def _components(d, r):
    parent = list(range(len(d)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(d)):
        for j in range(i + 1, len(d)):
            if d[i][j] <= r:
                parent[find(i)] = find(j)
    return len({find(i) for i in range(len(d))})


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0, 3))
def test_h0_structure(seed, r):
    pts = _random_points(seed, 7)
    d = distance_matrix(pts)
    h0 = vr_barcodes(d, max_dim=0, max_radius=r)[0]
    assert hilbert_function(h0, 0) == len(np.unique(pts, axis=0))
    assert sum(1 for b in h0 if b.death == INF) == _components(d, r)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_bifiltration_vertex_count_monotone_in_density(seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 4, size=(6, 2))
    dens = rng.uniform(0, 1, size=6)
    H = bifiltration_hilbert(distance_matrix(pts), dens, (0,), (0, 0.25, 0.5, 0.75), degree=0)
    col = H.dims[:, 0].tolist()
    assert col == sorted(col, reverse=True)
    assert col == [int((dens >= t).sum()) for t in (0, 0.25, 0.5, 0.75)]


def test_bifiltration_rejects_unsorted_breakpoints():
    d = distance_matrix(SQUARE)
    with pytest.raises(ValueError):
        bifiltration_hilbert(d, [1] * 4, (0, 2, 1), (0,))
    with pytest.raises(ValueError):
        bifiltration_hilbert(d, [1] * 4, (0,), (1, 1))


def test_non_metric_dissimilarity_accepted():
    # violates the triangle inequality
    d = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
    h0, h1 = vr_barcodes(d)
    assert h0 == Barcode([(0, 1), (0, 1), (0, INF)]) and len(h1) == 0
