"""Finite grid modules: cubically encoded persistence modules over R^n.

A :class:`GridGeometry` fixes strictly increasing breakpoints on every axis.
Cell ``i`` on an axis is ``[bp[i], bp[i+1])`` and the last cell is
``[bp[-1], inf)``; the module vanishes below ``bp[0]``.  A
:class:`GridModule` attaches an F_p vector space to every cell and a matrix
to every unit step between neighbouring cells.

Axes are 0-based throughout the Python API.  The JSON format uses 1-based
axis numbers.
"""

import bisect
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .barcode import Bar, Barcode

__all__ = [
    "GridGeometry",
    "GridModule",
    "HilbertGrid",
    "ModuleMorphism",
    "Face",
    "Violation",
    "InvalidModuleError",
    "ShortExactSequence",
    "interval_module",
    "zero_module",
    "validate",
    "validate_morphism",
    "structure_map",
    "direct_sum",
    "submodule_generated",
    "quotient",
    "kernel",
    "cokernel",
    "localization",
    "local_cohomology",
    "quotient_restriction",
    "refine",
    "common_refinement",
    "barcode_to_grid",
    "grid_barcode",
    "hilbert_at",
    "random_geometry",
    "random_module",
    "random_ses",
    "module_to_dict",
    "module_from_dict",
    "morphism_to_dict",
    "morphism_from_dict",
    "load_module",
    "save_module",
    "hilbert_to_dict",
    "hilbert_from_dict",
]


@dataclass(frozen=True)
class GridGeometry:
    breakpoints: tuple

    def __post_init__(self):
        bps = tuple(tuple(float(x) for x in axis) for axis in self.breakpoints)
        if not bps:
            raise ValueError("geometry needs at least one axis")
        for a, axis in enumerate(bps):
            if not axis:
                raise ValueError(f"axis {a} has no breakpoints")
            if not all(math.isfinite(x) for x in axis):
                raise ValueError(f"axis {a} has a non-finite breakpoint")
            if any(x >= y for x, y in zip(axis, axis[1:])):
                raise ValueError(f"axis {a} breakpoints are not strictly increasing")
        object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def unit(cls, shape, start=0):
        return cls(tuple(tuple(range(start, start + k)) for k in shape))

    @property
    def n(self):
        return len(self.breakpoints)

    @property
    def shape(self):
        return tuple(len(a) for a in self.breakpoints)

    @property
    def size(self):
        return int(np.prod(self.shape))

    def last(self, axis):
        return len(self.breakpoints[axis]) - 1

    def cell_bounds(self, axis, i):
        bp = self.breakpoints[axis]
        hi = bp[i + 1] if i + 1 < len(bp) else math.inf
        return bp[i], hi

    def index_of(self, axis, value):
        """Cell index whose lower breakpoint equals ``value``."""
        return self.breakpoints[axis].index(float(value))

    def locate(self, point):
        """Cell containing ``point``, or ``None`` below the grid."""
        idx = []
        for axis, x in zip(self.breakpoints, point):
            i = bisect.bisect_right(axis, x) - 1
            if i < 0:
                return None
            idx.append(i)
        return tuple(idx)

    def vertices(self):
        return itertools.product(*(range(k) for k in self.shape))

    def contains(self, u):
        return len(u) == self.n and all(0 <= x < k for x, k in zip(u, self.shape))

    def sub(self, axes):
        return GridGeometry(tuple(self.breakpoints[a] for a in axes))


def _step(u, axis, delta=1):
    v = list(u)
    v[axis] += delta
    return tuple(v)


@dataclass(frozen=True)
class Face:
    """A nonempty set of coordinate axes (0-based)."""

    axes: frozenset

    def __init__(self, axes):
        if isinstance(axes, int):
            axes = (axes,)
        ax = frozenset(int(a) for a in axes)
        if not ax:
            raise ValueError("a face needs at least one axis")
        if min(ax) < 0:
            raise ValueError("axes are non-negative integers")
        object.__setattr__(self, "axes", ax)

    def complement(self, n):
        return tuple(a for a in range(n) if a not in self.axes)

    def sorted(self):
        return tuple(sorted(self.axes))


def _face_axes(tau, n):
    axes = tau.sorted() if isinstance(tau, Face) else tuple(sorted(set(int(a) for a in tau)))
    if any(a < 0 or a >= n for a in axes):
        raise ValueError(f"face axes {axes} out of range for n={n}")
    return axes


class GridModule:
    """Vector spaces on grid cells with unit-step structure matrices.

    ``maps`` is keyed by ``(axis, vertex)``; an absent key is a zero map.
    """

    def __init__(self, geometry, dims, maps=None, prime=la.DEFAULT_PRIME):
        if not isinstance(geometry, GridGeometry):
            geometry = GridGeometry(geometry)
        self.geometry = geometry
        d = np.array(dims, dtype=np.int64).reshape(geometry.shape)
        d.setflags(write=False)
        self.dims = d
        self.prime = int(prime)
        self._maps = {}
        for (axis, u), m in (maps or {}).items():
            u = tuple(int(x) for x in u)
            a = np.array(m, dtype=np.int64)
            if a.size == 0:
                a = a.reshape(self.dim(_step(u, axis)) if geometry.contains(_step(u, axis)) else 0,
                              self.dim(u) if geometry.contains(u) else 0)
            a = a % self.prime
            a.setflags(write=False)
            self._maps[(int(axis), u)] = a

    @property
    def n(self):
        return self.geometry.n

    @property
    def shape(self):
        return self.geometry.shape

    def dim(self, u):
        return int(self.dims[tuple(u)])

    def vertices(self):
        return self.geometry.vertices()

    def map(self, axis, u):
        u = tuple(u)
        m = self._maps.get((axis, u))
        if m is None:
            return la.zeros(self.dim(_step(u, axis)), self.dim(u))
        return m

    def stored_maps(self):
        return dict(self._maps)

    def is_zero(self):
        return not self.dims.any()

    def total_dim(self):
        return int(self.dims.sum())

    def __eq__(self, other):
        if not isinstance(other, GridModule):
            return NotImplemented
        if (self.geometry != other.geometry or self.prime != other.prime
                or not np.array_equal(self.dims, other.dims)):
            return False
        for u in self.vertices():
            for a in range(self.n):
                if u[a] + 1 < self.shape[a] and not np.array_equal(self.map(a, u), other.map(a, u)):
                    return False
        return True

    __hash__ = None

    def __repr__(self):
        return f"GridModule(shape={self.shape}, dims={self.dims.tolist()}, prime={self.prime})"


@dataclass
class HilbertGrid:
    """Hilbert function on a grid without structure maps."""

    geometry: GridGeometry
    dims: np.ndarray

    def __post_init__(self):
        self.dims = np.asarray(self.dims, dtype=np.int64).reshape(self.geometry.shape)

    @property
    def n(self):
        return self.geometry.n


class ModuleMorphism:
    """Per-vertex matrices ``target.dim(u) x source.dim(u)``."""

    def __init__(self, source, target, components=None):
        if source.geometry != target.geometry:
            raise ValueError("morphism endpoints must share a geometry")
        if source.prime != target.prime:
            raise ValueError("morphism endpoints must share a prime")
        self.source = source
        self.target = target
        p = source.prime
        self._comp = {}
        for u, m in (components or {}).items():
            u = tuple(int(x) for x in u)
            a = np.array(m, dtype=np.int64)
            if a.size == 0:
                a = a.reshape(target.dim(u), source.dim(u))
            self._comp[u] = a % p

    @property
    def prime(self):
        return self.source.prime

    def component(self, u):
        u = tuple(u)
        m = self._comp.get(u)
        if m is None:
            return la.zeros(self.target.dim(u), self.source.dim(u))
        return m

    def compose(self, other):
        """``self`` after ``other``."""
        if other.target.geometry != self.source.geometry:
            raise ValueError("cannot compose morphisms on different geometries")
        comps = {u: la.matmul(self.component(u), other.component(u), self.prime)
                 for u in self.source.vertices()}
        return ModuleMorphism(other.source, self.target, comps)

    def is_zero(self):
        return all(not self.component(u).any() for u in self.source.vertices())

    @classmethod
    def identity(cls, M):
        return cls(M, M, {u: la.identity(M.dim(u)) for u in M.vertices()})


@dataclass(frozen=True)
class Violation:
    kind: str
    vertex: tuple
    axes: tuple
    message: str

    def __str__(self):
        return f"{self.kind} violation at vertex {self.vertex}, axes {self.axes}: {self.message}"


class InvalidModuleError(ValueError):
    def __init__(self, violation):
        super().__init__(str(violation))
        self.violation = violation


def validate(M):
    """Return the first :class:`Violation` of ``M`` or ``None``."""
    geo = M.geometry
    if (M.dims < 0).any():
        u = tuple(int(x) for x in np.argwhere(M.dims < 0)[0])
        return Violation("shape", u, (), "negative dimension")
    for (axis, u), m in sorted(M.stored_maps().items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if not (0 <= axis < M.n) or not geo.contains(u) or not geo.contains(_step(u, axis)):
            return Violation("shape", u, (axis,), "map key outside the grid")
        want = (M.dim(_step(u, axis)), M.dim(u))
        if m.shape != want:
            return Violation("shape", u, (axis,), f"map has shape {m.shape}, expected {want}")
    p = M.prime
    shape = geo.shape
    for u in geo.vertices():
        for i in range(M.n):
            if u[i] + 1 >= shape[i]:
                continue
            ui = _step(u, i)
            for j in range(i + 1, M.n):
                if u[j] + 1 >= shape[j]:
                    continue
                uj = _step(u, j)
                left = la.matmul(M.map(j, ui), M.map(i, u), p)
                right = la.matmul(M.map(i, uj), M.map(j, u), p)
                if not np.array_equal(left, right):
                    return Violation("commutativity", u, (i, j),
                                     "square does not commute")
    return None


def validate_morphism(f):
    """Return the first naturality or shape :class:`Violation`, or ``None``."""
    S, T = f.source, f.target
    for u in S.vertices():
        c = f.component(u)
        if c.shape != (T.dim(u), S.dim(u)):
            return Violation("shape", u, (), f"component has shape {c.shape}")
    p = f.prime
    for u in S.vertices():
        for a in range(S.n):
            if u[a] + 1 >= S.shape[a]:
                continue
            w = _step(u, a)
            left = la.matmul(T.map(a, u), f.component(u), p)
            right = la.matmul(f.component(w), S.map(a, u), p)
            if not np.array_equal(left, right):
                return Violation("naturality", u, (a,), "square does not commute")
    return None


def zero_module(geometry, prime=la.DEFAULT_PRIME):
    if not isinstance(geometry, GridGeometry):
        geometry = GridGeometry(geometry)
    return GridModule(geometry, np.zeros(geometry.shape, dtype=np.int64), {}, prime)


def interval_module(geometry, lo, hi=None, prime=la.DEFAULT_PRIME):
    """Indicator module of the cell box ``lo <= u <= hi``.

    ``hi`` entries of ``None`` or ``inf`` extend the box to the last cell.
    """
    if not isinstance(geometry, GridGeometry):
        geometry = GridGeometry(geometry)
    shape = geometry.shape
    lo = tuple(int(x) for x in lo)
    if hi is None:
        hi = (None,) * geometry.n
    hi = tuple(shape[a] - 1 if (h is None or h == math.inf) else int(h) for a, h in enumerate(hi))
    if len(lo) != geometry.n or len(hi) != geometry.n:
        raise ValueError("box corners must have one entry per axis")
    for a in range(geometry.n):
        if not (0 <= lo[a] < shape[a]) or not (0 <= hi[a] < shape[a]):
            raise IndexError(f"box corner out of range on axis {a}")
        if hi[a] < lo[a]:
            raise ValueError(f"empty box on axis {a}: hi < lo")
    dims = np.zeros(shape, dtype=np.int64)
    box = tuple(slice(l, h + 1) for l, h in zip(lo, hi))
    dims[box] = 1
    one = np.ones((1, 1), dtype=np.int64)
    maps = {}
    for u in itertools.product(*(range(l, h + 1) for l, h in zip(lo, hi))):
        for a in range(geometry.n):
            if u[a] + 1 <= hi[a]:
                maps[(a, u)] = one
    return GridModule(geometry, dims, maps, prime)


def structure_map(M, u, w):
    """Composite ``M(u <= w)`` along a monotone path."""
    u = tuple(u)
    w = tuple(w)
    if any(x > y for x, y in zip(u, w)):
        raise ValueError(f"{u} is not <= {w}")
    p = M.prime
    out = la.identity(M.dim(u))
    cur = u
    for a in range(M.n):
        while cur[a] < w[a]:
            out = la.matmul(M.map(a, cur), out, p)
            cur = _step(cur, a)
    return out


def composites_from(M, u):
    """All composites ``M(u <= w)`` for ``w >= u``, keyed by ``w``."""
    u = tuple(u)
    p = M.prime
    out = {u: la.identity(M.dim(u))}
    ranges = [range(x, k) for x, k in zip(u, M.shape)]
    for w in itertools.product(*ranges):
        if w == u:
            continue
        a = next(i for i in range(M.n) if w[i] > u[i])
        prev = _step(w, a, -1)
        src = out[prev]
        if src.shape[0] == 0 or src.shape[1] == 0 or M.dim(w) == 0:
            out[w] = la.zeros(M.dim(w), src.shape[1])
        else:
            out[w] = la.matmul(M.map(a, prev), src, p)
    return out


def _block_diag(blocks):
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = la.zeros(rows, cols)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def direct_sum(*modules):
    if not modules:
        raise ValueError("direct_sum needs at least one module")
    geo = modules[0].geometry
    p = modules[0].prime
    for M in modules[1:]:
        if M.geometry != geo:
            raise ValueError("direct_sum needs a shared geometry")
        if M.prime != p:
            raise ValueError("direct_sum needs a shared prime")
    dims = sum(M.dims for M in modules)
    maps = {}
    for u in geo.vertices():
        for a in range(geo.n):
            if u[a] + 1 < geo.shape[a]:
                maps[(a, u)] = _block_diag([M.map(a, u) for M in modules])
    return GridModule(geo, dims, maps, p)


def _induced_submodule(M, bases):
    """Submodule with per-vertex column bases ``bases[u]`` (a subfunctor)."""
    p = M.prime
    geo = M.geometry
    dims = np.zeros(geo.shape, dtype=np.int64)
    for u in geo.vertices():
        dims[u] = bases[u].shape[1]
    maps = {}
    for u in geo.vertices():
        bu = bases[u]
        for a in range(geo.n):
            if u[a] + 1 >= geo.shape[a]:
                continue
            w = _step(u, a)
            bw = bases[w]
            if bu.shape[1] == 0 or bw.shape[1] == 0:
                continue
            image = la.matmul(M.map(a, u), bu, p)
            maps[(a, u)] = la.solve_in_span(bw, image, p)
    S = GridModule(geo, dims, maps, p)
    return S, ModuleMorphism(S, M, bases)


def _induced_quotient(M, bases):
    """Quotient of ``M`` by the subfunctor spanned by ``bases[u]``."""
    p = M.prime
    geo = M.geometry
    comp = {}
    proj = {}
    dims = np.zeros(geo.shape, dtype=np.int64)
    for u in geo.vertices():
        d = M.dim(u)
        b = bases[u]
        q = la.quotient_basis(b, d, p) if d else la.zeros(0, 0)
        comp[u] = q
        dims[u] = q.shape[1]
        if d:
            full = la.inverse(np.hstack([b, q]), p)
            proj[u] = np.ascontiguousarray(full[b.shape[1]:, :])
        else:
            proj[u] = la.zeros(0, 0)
    maps = {}
    for u in geo.vertices():
        for a in range(geo.n):
            if u[a] + 1 >= geo.shape[a]:
                continue
            w = _step(u, a)
            if dims[u] == 0 or dims[w] == 0:
                continue
            maps[(a, u)] = la.matmul(proj[w], la.matmul(M.map(a, u), comp[u], p), p)
    Q = GridModule(geo, dims, maps, p)
    return Q, ModuleMorphism(M, Q, proj)


def submodule_generated(M, gens):
    """Submodule generated by homogeneous elements ``(vertex, vector)``.

    Returns ``(S, incl)``.
    """
    p = M.prime
    geo = M.geometry
    at = {}
    for vertex, vec in gens:
        u = tuple(int(x) for x in vertex)
        if not geo.contains(u):
            raise IndexError(f"generator vertex {u} outside the grid")
        v = np.asarray(vec, dtype=np.int64).reshape(-1)
        if v.shape[0] != M.dim(u):
            raise ValueError(f"generator at {u} has length {v.shape[0]}, expected {M.dim(u)}")
        at.setdefault(u, []).append(v.reshape(-1, 1) % p)
    bases = {}
    for w in geo.vertices():
        cols = []
        for a in range(geo.n):
            if w[a] > 0:
                prev = _step(w, a, -1)
                if bases[prev].shape[1]:
                    cols.append(la.matmul(M.map(a, prev), bases[prev], p))
        cols.extend(at.get(w, ()))
        d = M.dim(w)
        if cols:
            bases[w] = la.column_basis(np.hstack(cols), p)
        else:
            bases[w] = la.zeros(d, 0)
    return _induced_submodule(M, bases)


def quotient(M, incl):
    """Quotient of ``M`` by the image of an injective ``incl``.

    Returns ``(Q, proj)``.
    """
    if incl.target.geometry != M.geometry or not np.array_equal(incl.target.dims, M.dims):
        raise ValueError("inclusion does not land in M")
    bases = {}
    for u in M.vertices():
        c = incl.component(u)
        if la.rank(c, M.prime) != c.shape[1]:
            raise ValueError(f"inclusion is not injective at vertex {u}")
        bases[u] = c
    return _induced_quotient(M, bases)


def kernel(f):
    """Returns ``(K, incl)`` with ``K = ker f``."""
    p = f.prime
    bases = {u: la.kernel_basis(f.component(u), p) for u in f.source.vertices()}
    return _induced_submodule(f.source, bases)


def cokernel(f):
    """Returns ``(C, proj)`` with ``C = coker f``."""
    p = f.prime
    bases = {u: la.column_basis(f.component(u), p) for u in f.target.vertices()}
    return _induced_quotient(f.target, bases)


def _clamp(u, axes, shape):
    v = list(u)
    for a in axes:
        v[a] = shape[a] - 1
    return tuple(v)


def localization(M, rho):
    """Localization along the axes of ``rho``: evaluate at the last cells."""
    axes = _face_axes(rho, M.n)
    geo = M.geometry
    shape = geo.shape
    dims = np.zeros(shape, dtype=np.int64)
    maps = {}
    for u in geo.vertices():
        c = _clamp(u, axes, shape)
        dims[u] = M.dim(c)
        for a in range(geo.n):
            if u[a] + 1 >= shape[a]:
                continue
            if a in axes:
                maps[(a, u)] = la.identity(M.dim(c))
            else:
                maps[(a, u)] = M.map(a, c)
    return GridModule(geo, dims, maps, M.prime)


def local_cohomology(M, tau):
    """Zeroth local cohomology along ``tau``; returns ``(H, incl)``."""
    axes = _face_axes(tau, M.n)
    p = M.prime
    shape = M.shape
    bases = {}
    for u in M.vertices():
        d = M.dim(u)
        if d == 0:
            bases[u] = la.zeros(0, 0)
            continue
        rows = [structure_map(M, u, _clamp(u, (i,), shape)) for i in axes]
        bases[u] = la.kernel_basis(np.vstack(rows), p)
    return _induced_submodule(M, bases)


def quotient_restriction(M, tau):
    """Colimit along ``tau``, indexed by the remaining axes.

    An empty ``tau`` returns ``M``.  When ``tau`` covers every axis the
    result is a single vector space on a one-cell 1-axis grid.
    """
    axes = _face_axes(tau, M.n)
    if not axes:
        return M
    rest = tuple(a for a in range(M.n) if a not in axes)
    shape = M.shape
    if not rest:
        top = _clamp((0,) * M.n, axes, shape)
        return GridModule(GridGeometry(((0.0,),)), [M.dim(top)], {}, M.prime)
    geo = M.geometry.sub(rest)
    dims = np.zeros(geo.shape, dtype=np.int64)
    maps = {}

    def lift(v):
        u = [0] * M.n
        for k, a in enumerate(rest):
            u[a] = v[k]
        for a in axes:
            u[a] = shape[a] - 1
        return tuple(u)

    for v in geo.vertices():
        u = lift(v)
        dims[v] = M.dim(u)
        for k, a in enumerate(rest):
            if v[k] + 1 < geo.shape[k]:
                maps[(k, v)] = M.map(a, u)
    return GridModule(geo, dims, maps, M.prime)


def refine(M, geometry):
    """Re-express ``M`` on a finer geometry containing its breakpoints."""
    if not isinstance(geometry, GridGeometry):
        geometry = GridGeometry(geometry)
    if geometry.n != M.n:
        raise ValueError(f"dimension mismatch: {geometry.n} vs {M.n}")
    for a in range(M.n):
        if not set(M.geometry.breakpoints[a]) <= set(geometry.breakpoints[a]):
            raise ValueError(f"axis {a}: target breakpoints do not refine the module's")
    if geometry == M.geometry:
        return M
    orig = [[bisect.bisect_right(M.geometry.breakpoints[a], x) - 1 for x in geometry.breakpoints[a]]
            for a in range(M.n)]

    def back(c):
        o = tuple(orig[a][c[a]] for a in range(M.n))
        return None if min(o) < 0 else o

    dims = np.zeros(geometry.shape, dtype=np.int64)
    for c in geometry.vertices():
        o = back(c)
        dims[c] = M.dim(o) if o is not None else 0
    maps = {}
    for c in geometry.vertices():
        o = back(c)
        if o is None or dims[c] == 0:
            continue
        for a in range(M.n):
            if c[a] + 1 >= geometry.shape[a]:
                continue
            o2 = back(_step(c, a))
            if dims[_step(c, a)] == 0:
                continue
            maps[(a, c)] = structure_map(M, o, o2)
    return GridModule(geometry, dims, maps, M.prime)


def merged_geometry(*geometries):
    n = geometries[0].n
    if any(g.n != n for g in geometries):
        raise ValueError("dimension mismatch")
    return GridGeometry(tuple(tuple(sorted(set().union(*(g.breakpoints[a] for g in geometries))))
                              for a in range(n)))


def common_refinement(M, N):
    if M.n != N.n:
        raise ValueError(f"dimension mismatch: {M.n} vs {N.n}")
    geo = merged_geometry(M.geometry, N.geometry)
    return refine(M, geo), refine(N, geo)


def hilbert_at(M, point):
    """``dim M(point)`` at a real point."""
    u = M.geometry.locate(point)
    return 0 if u is None else int(M.dims[u])


def barcode_to_grid(bc, prime=la.DEFAULT_PRIME, breakpoints=None):
    """1-axis grid module isomorphic to the interval decomposition ``bc``."""
    bars = [b for b in bc if b.death > b.birth]
    if any(not math.isfinite(b.birth) for b in bars):
        raise ValueError("bars with infinite birth have no grid form")
    ends = {b.birth for b in bars} | {b.death for b in bars if math.isfinite(b.death)}
    if breakpoints is None:
        bps = tuple(sorted(ends)) or (0.0,)
    else:
        bps = tuple(sorted(float(x) for x in breakpoints))
        if not ends <= set(bps):
            raise ValueError("breakpoints must contain every finite bar endpoint")
    geo = GridGeometry((bps,))
    L = len(bps)
    alive = []
    for i in range(L):
        lo = bps[i]
        alive.append([k for k, b in enumerate(bars) if b.birth <= lo < b.death])
    dims = [len(a) for a in alive]
    maps = {}
    for i in range(L - 1):
        src, dst = alive[i], alive[i + 1]
        if not src or not dst:
            continue
        m = la.zeros(len(dst), len(src))
        pos = {k: r for r, k in enumerate(dst)}
        for c, k in enumerate(src):
            if k in pos:
                m[pos[k], c] = 1
        maps[(0, (i,))] = m
    return GridModule(geo, dims, maps, prime)


def grid_barcode(M):
    """Interval decomposition of a 1-axis grid module via its rank function."""
    if M.n != 1:
        raise ValueError("grid_barcode needs a 1-axis module")
    L = M.shape[0]
    bps = M.geometry.breakpoints[0]
    r = np.zeros((L + 1, L + 1), dtype=np.int64)
    for i in range(L):
        comps = composites_from(M, (i,))
        for j in range(i, L):
            r[i, j] = la.rank(comps[(j,)], M.prime)

    def rk(i, j):
        if i < 0 or j >= L or i > j:
            return 0
        return int(r[i, j])

    bars = []
    for i in range(L):
        for j in range(i, L):
            mult = rk(i, j) - rk(i - 1, j) - rk(i, j + 1) + rk(i - 1, j + 1)
            death = bps[j + 1] if j + 1 < L else math.inf
            bars.extend([Bar(bps[i], death)] * mult)
    return Barcode(bars)


@dataclass
class ShortExactSequence:
    A: GridModule
    B: GridModule
    C: GridModule
    incl: ModuleMorphism
    proj: ModuleMorphism

    def __iter__(self):
        return iter((self.A, self.B, self.C, self.incl, self.proj))

    def check(self):
        """Return ``None`` if exact, else a description of the first defect."""
        p = self.B.prime
        for u in self.B.vertices():
            i = self.incl.component(u)
            q = self.proj.component(u)
            if self.A.dim(u) + self.C.dim(u) != self.B.dim(u):
                return f"dimension mismatch at {u}"
            if la.rank(i, p) != self.A.dim(u):
                return f"incl not injective at {u}"
            if la.rank(q, p) != self.C.dim(u):
                return f"proj not surjective at {u}"
            if la.matmul(q, i, p).any():
                return f"proj . incl != 0 at {u}"
        for f in (self.incl, self.proj):
            v = validate_morphism(f)
            if v is not None:
                return str(v)
        return None


def random_geometry(seed, n=2, max_cells=5, max_gap=3, max_start=2):
    rng = np.random.default_rng(seed)
    bps = []
    for _ in range(n):
        k = int(rng.integers(1, max_cells + 1))
        start = int(rng.integers(0, max_start + 1))
        gaps = rng.integers(1, max_gap + 1, size=k - 1)
        bps.append(tuple(float(x) for x in np.concatenate([[start], start + np.cumsum(gaps)])))
    return GridGeometry(tuple(bps))


def _random_box(rng, geo):
    lo, hi = [], []
    for k in geo.shape:
        a = int(rng.integers(0, k))
        b = int(rng.integers(a, k))
        lo.append(a)
        hi.append(b)
    return tuple(lo), tuple(hi)


def _random_gens(rng, M, count):
    support = [u for u in M.vertices() if M.dim(u) > 0]
    gens = []
    if not support:
        return gens
    for _ in range(count):
        u = support[int(rng.integers(0, len(support)))]
        vec = rng.integers(0, M.prime, size=M.dim(u))
        if not vec.any():
            vec[int(rng.integers(0, M.dim(u)))] = 1
        gens.append((u, vec))
    return gens


def random_module(seed, geometry=None, max_dim=4, gen_count=0, n=2, max_cells=5,
                  prime=la.DEFAULT_PRIME):
    """Direct sum of random box modules, optionally divided by a random
    generated submodule.  Pointwise dimensions never exceed ``max_dim``."""
    rng = np.random.default_rng(seed)
    if geometry is None:
        geometry = random_geometry(rng, n=n, max_cells=max_cells)
    k = int(rng.integers(0, max_dim + 1))
    parts = [interval_module(geometry, *_random_box(rng, geometry), prime=prime) for _ in range(k)]
    M = direct_sum(*parts) if parts else zero_module(geometry, prime)
    if gen_count:
        _, incl = submodule_generated(M, _random_gens(rng, M, gen_count))
        M, _ = quotient(M, incl)
    return M


def random_ses(seed, n=None, max_cells=5, max_dim=4, geometry=None, prime=la.DEFAULT_PRIME):
    """Random short exact sequence ``0 -> A -> B -> C -> 0``."""
    rng = np.random.default_rng(seed)
    if n is None:
        n = int(rng.integers(1, 3))
    if geometry is None:
        geometry = random_geometry(rng, n=n, max_cells=max_cells)
    gen_count = int(rng.integers(0, 3)) if rng.random() < 0.5 else 0
    B = random_module(rng, geometry, max_dim=max_dim, gen_count=gen_count, prime=prime)
    A, incl = submodule_generated(B, _random_gens(rng, B, int(rng.integers(0, 4))))
    C, proj = quotient(B, incl)
    return ShortExactSequence(A, B, C, incl, proj)


def _num(x):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def module_to_dict(M):
    maps = []
    for (axis, u), m in sorted(M.stored_maps().items(), key=lambda kv: (kv[0][1], kv[0][0])):
        if m.any():
            maps.append({"axis": axis + 1, "vertex": list(u), "matrix": m.tolist()})
    return {
        "prime": M.prime,
        "n": M.n,
        "breakpoints": [[_num(x) for x in axis] for axis in M.geometry.breakpoints],
        "dims": M.dims.reshape(-1).tolist(),
        "maps": maps,
    }


def _matrix_from_rows(rows, shape, where):
    a = np.array(rows, dtype=np.int64)
    if a.size == 0:
        if shape[0] * shape[1] != 0:
            raise InvalidModuleError(Violation("shape", where[0], where[1], "empty matrix for nonzero shape"))
        return la.zeros(*shape)
    if a.shape != shape:
        raise InvalidModuleError(Violation("shape", where[0], where[1],
                                           f"matrix has shape {a.shape}, expected {shape}"))
    return a


def module_from_dict(doc):
    try:
        prime = int(doc.get("prime", la.DEFAULT_PRIME))
        n = int(doc["n"])
        geo = GridGeometry(tuple(tuple(axis) for axis in doc["breakpoints"]))
        dims = np.array(doc["dims"], dtype=np.int64)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed module document: {exc}") from None
    if geo.n != n:
        raise ValueError(f"n={n} but {geo.n} breakpoint axes given")
    if dims.size != geo.size:
        raise ValueError(f"dims has {dims.size} entries, grid has {geo.size} cells")
    dims = dims.reshape(geo.shape)
    maps = {}
    for rec in doc.get("maps", []):
        axis = int(rec["axis"]) - 1
        u = tuple(int(x) for x in rec["vertex"])
        if not (0 <= axis < n) or not geo.contains(u) or not geo.contains(_step(u, axis)):
            raise InvalidModuleError(Violation("shape", u, (axis,), "map key outside the grid"))
        shape = (int(dims[_step(u, axis)]), int(dims[u]))
        maps[(axis, u)] = _matrix_from_rows(rec["matrix"], shape, (u, (axis,)))
    M = GridModule(geo, dims, maps, prime)
    v = validate(M)
    if v is not None:
        raise InvalidModuleError(v)
    return M


def morphism_to_dict(f):
    comps = [{"vertex": list(u), "matrix": f.component(u).tolist()}
             for u in f.source.vertices() if f.component(u).any()]
    return {"kind": "morphism", "prime": f.prime, "source": module_to_dict(f.source),
            "target": module_to_dict(f.target), "components": comps}


def morphism_from_dict(doc):
    S = module_from_dict(doc["source"])
    T = module_from_dict(doc["target"])
    comps = {}
    for rec in doc.get("components", []):
        u = tuple(int(x) for x in rec["vertex"])
        if not S.geometry.contains(u):
            raise InvalidModuleError(Violation("shape", u, (), "component outside the grid"))
        comps[u] = _matrix_from_rows(rec["matrix"], (T.dim(u), S.dim(u)), (u, ()))
    f = ModuleMorphism(S, T, comps)
    v = validate_morphism(f)
    if v is not None:
        raise InvalidModuleError(v)
    return f


def load_module(path):
    with open(path, encoding="utf-8") as fh:
        return module_from_dict(json.load(fh))


def save_module(M, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(module_to_dict(M), fh, indent=1)


def hilbert_to_dict(H):
    return {
        "kind": "hilbert",
        "n": H.n,
        "breakpoints": [[_num(x) for x in axis] for axis in H.geometry.breakpoints],
        "dims": H.dims.reshape(-1).tolist(),
    }


def hilbert_from_dict(doc):
    geo = GridGeometry(tuple(tuple(axis) for axis in doc["breakpoints"]))
    dims = np.array(doc["dims"], dtype=np.int64)
    if dims.size != geo.size:
        raise ValueError(f"dims has {dims.size} entries, grid has {geo.size} cells")
    if (dims < 0).any():
        raise ValueError("negative dimension in Hilbert grid")
    return HilbertGrid(geo, dims)
