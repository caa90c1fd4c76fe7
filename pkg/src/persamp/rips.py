"""Vietoris-Rips persistence over F2 and function-Rips Hilbert grids.

Simplices enter the complex at the largest pairwise distance among their
vertices, so a feature born at ``b`` and killed at ``d`` is the bar
``[b, d)``.  Columns of the boundary matrix are Python integers used as
bit sets.
"""

import concurrent.futures as cf
import csv
import itertools
import math

import numpy as np

from .barcode import Bar, Barcode
from .gridmod import GridGeometry, HilbertGrid

__all__ = [
    "MAX_DIM",
    "check_distance_matrix",
    "distance_matrix",
    "rips_filtration",
    "vr_barcodes",
    "betti_numbers",
    "bifiltration_hilbert",
    "load_points_csv",
    "load_matrix_csv",
]

MAX_DIM = 2


def check_distance_matrix(d, tol=0.0):
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    if np.isnan(d).any():
        raise ValueError("distance matrix contains NaN")
    if np.abs(d - d.T).max(initial=0.0) > tol:
        raise ValueError("distance matrix is not symmetric")
    if (d < 0).any():
        raise ValueError("distance matrix has negative entries")
    if np.abs(np.diag(d)).max(initial=0.0) > tol:
        raise ValueError("distance matrix has a nonzero diagonal")
    return d


def distance_matrix(points):
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    diff = x[:, None, :] - x[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def rips_filtration(d, max_simplex_dim, max_radius=math.inf, vertices=None):
    """List of ``(value, dim, vertex tuple)`` sorted by value, then dim,
    then vertices, which keeps faces ahead of their cofaces."""
    verts = range(len(d)) if vertices is None else sorted(vertices)
    out = []
    for k in range(max_simplex_dim + 1):
        for s in itertools.combinations(verts, k + 1):
            v = 0.0 if k == 0 else max(d[i][j] for i, j in itertools.combinations(s, 2))
            if v <= max_radius:
                out.append((float(v), k, s))
    out.sort()
    return out


def _reduce(filtration):
    """Standard column reduction; returns ``{death index: birth index}``."""
    index = {s: i for i, (_, _, s) in enumerate(filtration)}
    pivot_of = {}
    pairs = {}
    for j, (_, k, s) in enumerate(filtration):
        if k == 0:
            continue
        col = 0
        for face in itertools.combinations(s, k):
            col ^= 1 << index[face]
        while col:
            low = col.bit_length() - 1
            other = pivot_of.get(low)
            if other is None:
                pivot_of[low] = col
                pairs[j] = low
                break
            col ^= other
    return pairs


def vr_barcodes(d, max_dim=1, max_radius=math.inf):
    """Barcodes in degrees ``0..max_dim``.  Zero-length pairs are dropped;
    unpaired classes become infinite bars."""
    if not 0 <= max_dim <= MAX_DIM:
        raise ValueError(f"max_dim must be in 0..{MAX_DIM}")
    d = check_distance_matrix(d)
    filt = rips_filtration(d, max_dim + 1, max_radius)
    pairs = _reduce(filt)
    killed = set(pairs.values())
    bars = [[] for _ in range(max_dim + 1)]
    for j, i in pairs.items():
        b, k = filt[i][0], filt[i][1]
        dth = filt[j][0]
        if k <= max_dim and dth > b:
            bars[k].append(Bar(b, dth))
    paired = killed | set(pairs)
    for i, (v, k, _) in enumerate(filt):
        if k <= max_dim and i not in paired:
            bars[k].append(Bar(v, math.inf))
    return [Barcode(sorted(b)) for b in bars]


def _rank_f2(columns):
    pivots = {}
    r = 0
    for col in columns:
        while col:
            low = col.bit_length() - 1
            if low in pivots:
                col ^= pivots[low]
            else:
                pivots[low] = col
                r += 1
                break
    return r


def _boundary_rank(d, vertices, scale, k):
    """Rank of the boundary map from k-simplices to (k-1)-simplices."""
    if k <= 0:
        return 0
    lower = [s for s in itertools.combinations(vertices, k)
             if k == 1 or max(d[i][j] for i, j in itertools.combinations(s, 2)) <= scale]
    idx = {s: i for i, s in enumerate(lower)}
    cols = []
    for s in itertools.combinations(vertices, k + 1):
        if max(d[i][j] for i, j in itertools.combinations(s, 2)) <= scale:
            col = 0
            for face in itertools.combinations(s, k):
                col ^= 1 << idx[face]
            cols.append(col)
    return _rank_f2(cols), len(cols)


def _count(d, vertices, scale, k):
    if k == 0:
        return len(vertices)
    return sum(1 for s in itertools.combinations(vertices, k + 1)
               if max(d[i][j] for i, j in itertools.combinations(s, 2)) <= scale)


def betti_numbers(d, scale, max_degree=1, vertices=None):
    """Betti numbers of the Rips complex at ``scale`` from boundary ranks."""
    d = check_distance_matrix(d)
    verts = tuple(range(len(d))) if vertices is None else tuple(sorted(vertices))
    out = []
    for k in range(max_degree + 1):
        ck = _count(d, verts, scale, k)
        rk = _boundary_rank(d, verts, scale, k)[0] if k else 0
        rk1 = _boundary_rank(d, verts, scale, k + 1)[0]
        out.append(ck - rk - rk1)
    return out


def _cell(args):
    d, density, delta, eps, degree = args
    verts = [i for i, x in enumerate(density) if x >= delta]
    if not verts:
        return 0
    return betti_numbers(d, eps, degree, verts)[degree]


def bifiltration_hilbert(d, density, radius_bps, density_bps, degree=0, jobs=1):
    """Betti numbers over a (density, radius) grid.

    Axis 0 holds ``density_bps`` and axis 1 holds ``radius_bps``.  Cell
    ``(i, j)`` is the Rips complex at scale ``radius_bps[j]`` on the points
    with density at least ``density_bps[i]``.
    """
    if not 0 <= degree <= MAX_DIM:
        raise ValueError(f"degree must be in 0..{MAX_DIM}")
    d = check_distance_matrix(d)
    density = np.asarray(density, dtype=float)
    if density.shape != (len(d),):
        raise ValueError("need one density value per point")
    geo = GridGeometry((tuple(density_bps), tuple(radius_bps)))
    cells = [(d, density, delta, eps, degree)
             for delta in geo.breakpoints[0] for eps in geo.breakpoints[1]]
    if jobs > 1:
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            vals = list(pool.map(_cell, cells))
    else:
        vals = [_cell(c) for c in cells]
    return HilbertGrid(geo, np.array(vals).reshape(geo.shape))


def _read_rows(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    try:
        return [[float(x) for x in r] for r in rows]
    except ValueError:
        # header line
        return [[float(x) for x in r] for r in rows[1:]]


def load_points_csv(path, density_col=False):
    """Points (and densities, if the last column holds them)."""
    rows = _read_rows(path)
    if not rows:
        raise ValueError(f"{path}: no points")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: rows have differing lengths")
    arr = np.array(rows, dtype=float)
    if density_col:
        return arr[:, :-1], arr[:, -1]
    return arr, None


def load_matrix_csv(path):
    arr = np.array(_read_rows(path), dtype=float)
    return check_distance_matrix(arr)
