"""Distances induced by amplitudes.

Path metrics are minimized over matching-induced cospans.  Each matched
pair of bars ``[b, d)`` and ``[b', d')`` maps into the center bar
``[min(b, b'), min(d, d'))``; kernels and cokernels of the two maps are the
fragments whose amplitudes enter the cost.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import amplitude as amp
from .amplitude import (
    LEBESGUE,
    Magnitude,
    PNorm,
    ShiftAmp,
    TotPers,
    TropLen,
    eval_barcode,
    evaluate,
)
from .barcode import Bar, Barcode
from .gridmod import GridModule, HilbertGrid, barcode_to_grid, merged_geometry
from .matching import MatchingPlan, all_plans, bottleneck_plan, min_cost_plan, plan_count

__all__ = [
    "CostFunction",
    "SUM",
    "MAX",
    "LpFold",
    "CospanFragments",
    "DistanceReport",
    "InstanceTooLarge",
    "abs_distance",
    "lp_hilbert_distance",
    "wasserstein",
    "bottleneck",
    "wasserstein_report",
    "matching_cospan",
    "cost_of_cospan",
    "plan_cost",
    "path_metric_1param",
    "path_metric_folds",
    "interleaving_1param",
    "noise_membership",
]

INF = math.inf


@dataclass(frozen=True)
class CostFunction:
    """Fold of the four cospan amplitudes: ``sum``, ``max`` or ``lp``."""

    kind: str = "sum"
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in ("sum", "max", "lp"):
            raise ValueError(f"unknown cost function {self.kind!r}")
        if self.kind == "lp" and not float(self.p) >= 1:
            raise ValueError("LpFold needs p >= 1")
        object.__setattr__(self, "p", float(self.p))

    @property
    def effective(self):
        """Normalize: lp with p=1 is sum, lp with p=inf is max."""
        if self.kind == "lp" and self.p == 1:
            return "sum", 1.0
        if self.kind == "lp" and self.p == INF:
            return "max", INF
        return self.kind, self.p

    def __call__(self, values):
        kind, p = self.effective
        vals = [float(v) for v in values]
        if kind == "sum":
            return math.fsum(vals) if all(map(math.isfinite, vals)) else INF
        if kind == "max":
            return max(vals, default=0.0)
        if any(v == INF for v in vals):
            return INF
        return math.fsum(v ** p for v in vals) ** (1.0 / p)

    def apply_arrays(self, arrays):
        kind, p = self.effective
        stack = np.stack(arrays)
        if kind == "sum":
            return stack.sum(axis=0)
        if kind == "max":
            return stack.max(axis=0)
        with np.errstate(over="ignore"):
            return (stack ** p).sum(axis=0) ** (1.0 / p)

    def name(self):
        kind, p = self.effective
        return kind if kind != "lp" else f"lp{p:g}"


SUM = CostFunction("sum")
MAX = CostFunction("max")


def LpFold(p):
    return CostFunction("lp", p)


@dataclass
class DistanceReport:
    distance_name: str
    value: float
    exactness: str
    witness_plan: MatchingPlan = None

    def to_dict(self):
        return {
            "distance_name": self.distance_name,
            "value": self.value if math.isfinite(self.value) else "inf",
            "exactness": self.exactness,
            "witness_plan": None if self.witness_plan is None else self.witness_plan.to_dict(),
        }

    def to_json(self):
        return json.dumps(self.to_dict())


class InstanceTooLarge(ValueError):
    """Exhaustive plan enumeration was requested beyond the size bound."""


def _as_barcode(x):
    return x if isinstance(x, Barcode) else Barcode(x)


# ---------------------------------------------------------------- simple distances

def abs_distance(spec, A, B):
    """``|alpha(A) - alpha(B)|`` with ``inf - inf`` taken as 0."""
    a, b = evaluate(spec, A), evaluate(spec, B)
    if a == INF and b == INF:
        return 0.0
    return abs(a - b)


def _hilbert_on(geometry, X):
    """Dims of ``X`` re-indexed onto a finer ``geometry``."""
    src = X.geometry
    idx = []
    for a in range(geometry.n):
        bp = src.breakpoints[a]
        idx.append(np.searchsorted(bp, geometry.breakpoints[a], side="right") - 1)
    out = np.zeros(geometry.shape, dtype=np.int64)
    valid = [i >= 0 for i in idx]
    if not all(v.any() for v in valid):
        return out
    grids = np.ix_(*[np.flatnonzero(v) for v in valid])
    out[grids] = X.dims[np.ix_(*[i[v] for i, v in zip(idx, valid)])]
    return out


def _as_grid(X):
    if isinstance(X, (GridModule, HilbertGrid)):
        return X
    return barcode_to_grid(_as_barcode(X))


def lp_hilbert_distance(p, A, B, content=LEBESGUE):
    """L^p distance between Hilbert functions against a content."""
    GA, GB = _as_grid(A), _as_grid(B)
    if GA.geometry.n != GB.geometry.n:
        raise ValueError(f"dimension mismatch: {GA.geometry.n} vs {GB.geometry.n}")
    geo = merged_geometry(GA.geometry, GB.geometry)
    diff = np.abs(_hilbert_on(geo, GA) - _hilbert_on(geo, GB))
    p = float(p)
    if not p >= 1 or p == INF:
        raise ValueError("p must be in [1, inf)")
    return float(amp._lp_hilbert(diff, content.cell_weights(geo), p, False))


# ---------------------------------------------------------------- wasserstein

def _split(bc):
    fin = [i for i, b in enumerate(bc) if b.death != INF]
    inf = [i for i, b in enumerate(bc) if b.death == INF]
    return fin, inf


def _ground(db, dd, ground):
    if ground == "linf":
        return np.maximum(db, dd)
    if ground == "l1":
        return db + dd
    raise ValueError(f"unknown ground metric {ground!r}")


def _diag(lengths, ground):
    return lengths / 2.0 if ground == "linf" else lengths


def _infinite_pairs(A, B, ia, ib):
    ia = sorted(ia, key=lambda i: (A[i].birth, i))
    ib = sorted(ib, key=lambda j: (B[j].birth, j))
    costs = [abs(A[i].birth - B[j].birth) for i, j in zip(ia, ib)]
    return list(zip(ia, ib)), costs


def wasserstein(p, dgmA, dgmB, ground="linf", matching=False):
    """Classical p-Wasserstein distance between diagrams (p may be inf).

    Parameters
    ----------
    p : float in [1, inf]
    dgmA, dgmB : Barcode or iterable of (birth, death)
    ground : "linf" (diagonal cost (d-b)/2) or "l1" (diagonal cost d-b)
    matching : bool
        Also return the optimal :class:`MatchingPlan`.

    Returns
    -------
    float, or (float, MatchingPlan or None)
    """
    p = float(p)
    if not p >= 1:
        raise ValueError("p must be >= 1")
    A, B = _as_barcode(dgmA), _as_barcode(dgmB)
    fa, ia = _split(A)
    fb, ib = _split(B)
    if len(ia) != len(ib):
        return (INF, None) if matching else INF
    inf_pairs, inf_costs = _infinite_pairs(A, B, ia, ib)

    ba = np.array([A[i].birth for i in fa], dtype=float)
    da = np.array([A[i].death for i in fa], dtype=float)
    bb = np.array([B[j].birth for j in fb], dtype=float)
    db = np.array([B[j].death for j in fb], dtype=float)
    pair = _ground(np.abs(ba[:, None] - bb[None, :]), np.abs(da[:, None] - db[None, :]), ground)
    del_a = _diag(da - ba, ground)
    del_b = _diag(db - bb, ground)

    if p == INF:
        cost, plan = bottleneck_plan(pair, del_a, del_b)
        value = max([cost] + inf_costs)
    else:
        cost, plan = min_cost_plan(pair ** p, del_a ** p, del_b ** p)
        value = (cost + math.fsum(c ** p for c in inf_costs)) ** (1.0 / p)
    if not matching:
        return float(value)
    full = MatchingPlan.merge(plan.remap(fa, fb), MatchingPlan(tuple(inf_pairs), (), ()))
    return float(value), full


def bottleneck(dgmA, dgmB, ground="linf", matching=False):
    return wasserstein(INF, dgmA, dgmB, ground=ground, matching=matching)


def wasserstein_report(p, dgmA, dgmB, ground="linf"):
    value, plan = wasserstein(p, dgmA, dgmB, ground=ground, matching=True)
    name = "bottleneck" if float(p) == INF else f"wasserstein_{float(p):g}"
    return DistanceReport(f"{name}[{ground}]", value, "exact", plan)


def interleaving_1param(dgmA, dgmB):
    """Interleaving distance of 1-parameter modules (equal to bottleneck)."""
    return wasserstein(INF, dgmA, dgmB)


def noise_membership(spec, epsilon, A):
    return evaluate(spec, A) <= epsilon


# ---------------------------------------------------------------- cospans

@dataclass
class CospanFragments:
    ker_phi: Barcode
    coker_phi: Barcode
    ker_psi: Barcode
    coker_psi: Barcode

    def classes(self):
        return (self.ker_phi, self.coker_phi, self.ker_psi, self.coker_psi)


def _side(b, d, cb, cd):
    """Kernel and cokernel of the map from [b, d) into the center [cb, cd)."""
    if b < cd:
        return (cd, d), (cb, b)
    return (b, d), (cb, cd)


def _pair_fragments(x, y):
    cb = min(x.birth, y.birth)
    cd = min(x.death, y.death)
    kx, cx = _side(x.birth, x.death, cb, cd)
    ky, cy = _side(y.birth, y.death, cb, cd)
    return kx, cx, ky, cy


def _nonempty(lo_hi):
    lo, hi = lo_hi
    return hi > lo


def matching_cospan(bcM, bcN, plan):
    """Fragments of the cospan induced by ``plan``."""
    M, N = _as_barcode(bcM), _as_barcode(bcN)
    plan.check(len(M), len(N))
    out = ([], [], [], [])
    for i, j in plan.pairs:
        for cls, frag in zip(out, _pair_fragments(M[i], N[j])):
            if _nonempty(frag):
                cls.append(Bar(*frag))
    for i in plan.unmatched_M:
        if M[i].death > M[i].birth:
            out[0].append(M[i])
    for j in plan.unmatched_N:
        if N[j].death > N[j].birth:
            out[2].append(N[j])
    return CospanFragments(*(Barcode(c) for c in out))


def cost_of_cospan(fragments, spec, f=SUM):
    return f([eval_barcode(spec, c) for c in fragments.classes()])


def plan_cost(spec, bcM, bcN, plan, f=SUM):
    return cost_of_cospan(matching_cospan(bcM, bcN, plan), spec, f)


# ---------------------------------------------------------------- path metric

def _is_length_spec(spec):
    if isinstance(spec, ShiftAmp):
        return len(spec.v) == 1
    return isinstance(spec, (PNorm, TotPers, TropLen))


def _frag_value(spec, lo, hi):
    if hi <= lo:
        return 0.0
    if isinstance(spec, Magnitude):
        return math.exp(-lo) - (0.0 if hi == INF else math.exp(-hi))
    return INF if hi == INF else hi - lo


def _aggregate(spec, V):
    """Amplitude of a direct sum of fragments, row-wise on ``V``."""
    if V.shape[1] == 0:
        return np.zeros(V.shape[0])
    if isinstance(spec, (TotPers, Magnitude)):
        return V.sum(axis=1)
    if isinstance(spec, ShiftAmp):
        return V.max(axis=1)
    if isinstance(spec, PNorm):
        if spec.p == INF:
            return V.max(axis=1)
        if spec.p == 1:
            return V.sum(axis=1)
        with np.errstate(over="ignore"):
            return (V ** spec.p).sum(axis=1) ** (1.0 / spec.p)
    if isinstance(spec, TropLen):
        k = spec.k
        if V.shape[1] <= k:
            return V.sum(axis=1)
        return -np.partition(-V, k - 1, axis=1)[:, :k].sum(axis=1)
    raise TypeError(f"no vectorized aggregate for {spec!r}")


def _class_tables(spec, M, N):
    """Per-class pair tables ``(m, n+1)`` (last column: M unmatched) and
    N-unmatched vectors."""
    m, n = len(M), len(N)
    tables = [np.zeros((m, n + 1)) for _ in range(4)]
    unmatched_n = [np.zeros(n) for _ in range(4)]
    for i in range(m):
        for j in range(n):
            for c, (lo, hi) in enumerate(_pair_fragments(M[i], N[j])):
                tables[c][i, j] = _frag_value(spec, lo, hi)
        tables[0][i, n] = _frag_value(spec, M[i].birth, M[i].death)
    for j in range(n):
        unmatched_n[2][j] = _frag_value(spec, N[j].birth, N[j].death)
    return tables, unmatched_n


_CHUNK = 200_000


def _exhaustive_fast(spec, M, N, folds):
    """One enumeration, one minimum per fold in ``folds``."""
    m, n = len(M), len(N)
    tables, un = _class_tables(spec, M, N)
    plans = all_plans(m, n)
    best = [(INF, 0) for _ in folds]
    rows = np.arange(m)
    for start in range(0, len(plans), _CHUNK):
        P = plans[start:start + _CHUNK].astype(np.intp)
        matched_n = np.zeros((len(P), n), dtype=bool)
        for i in range(m):
            hit = P[:, i] >= 0
            matched_n[np.flatnonzero(hit), P[hit, i]] = True
        per_class = []
        for c in range(4):
            V = np.empty((len(P), m + n))
            if m:
                V[:, :m] = tables[c][rows[None, :], P]
            if n:
                V[:, m:] = np.where(matched_n, 0.0, un[c][None, :])
            per_class.append(_aggregate(spec, V))
        for t, f in enumerate(folds):
            cost = f.apply_arrays(per_class)
            k = int(np.argmin(cost))
            if cost[k] < best[t][0]:
                best[t] = (float(cost[k]), start + k)
    return [(v, MatchingPlan.from_assignment(plans[i].tolist(), n)) for v, i in best]


def _exhaustive_generic(spec, M, N, f):
    m, n = len(M), len(N)
    best_val, best_plan = None, None
    for row in all_plans(m, n):
        plan = MatchingPlan.from_assignment(row.tolist(), n)
        val = plan_cost(spec, M, N, plan, f)
        if best_val is None or val < best_val:
            best_val, best_plan = val, plan
    return float(best_val), best_plan


def _separable_kind(spec, f):
    kind, q = f.effective
    if isinstance(spec, TotPers) or (isinstance(spec, PNorm) and spec.p == 1):
        if kind == "sum":
            return "power", 1.0
    if isinstance(spec, PNorm) and spec.p != INF and kind == "lp" and q == spec.p:
        return "power", spec.p
    if isinstance(spec, Magnitude) and kind == "sum":
        return "power", 1.0
    max_like = (isinstance(spec, PNorm) and spec.p == INF) or (
        isinstance(spec, ShiftAmp) and len(spec.v) == 1)
    if max_like and kind == "max":
        return "max", INF
    return None


def _separable(spec, M, N, mode, p):
    """Assignment over per-pair costs (sum of p-th powers, or max)."""
    if isinstance(spec, Magnitude):
        fin_m, inf_m = list(range(len(M))), []
        fin_n, inf_n = list(range(len(N))), []
    else:
        fin_m, inf_m = _split(M)
        fin_n, inf_n = _split(N)
        if len(inf_m) != len(inf_n):
            return INF, None

    def pair_cost(x, y):
        vals = [_frag_value(spec, lo, hi) for lo, hi in _pair_fragments(x, y)]
        if mode == "max":
            return max(vals)
        return math.fsum(v ** p for v in vals)

    def del_cost(x):
        v = _frag_value(spec, x.birth, x.death)
        return v if mode == "max" else v ** p

    inf_pairs, _ = _infinite_pairs(M, N, inf_m, inf_n)
    inf_costs = [pair_cost(M[i], N[j]) for i, j in inf_pairs]
    pair = np.array([[pair_cost(M[i], N[j]) for j in fin_n] for i in fin_m], dtype=float)
    dm = np.array([del_cost(M[i]) for i in fin_m], dtype=float)
    dn = np.array([del_cost(N[j]) for j in fin_n], dtype=float)
    if mode == "max":
        cost, plan = bottleneck_plan(pair, dm, dn)
        value = max([cost] + inf_costs)
    else:
        cost, plan = min_cost_plan(pair, dm, dn)
        value = (cost + math.fsum(inf_costs)) ** (1.0 / p)
    full = MatchingPlan.merge(plan.remap(fin_m, fin_n), MatchingPlan(tuple(inf_pairs), (), ()))
    return float(value), full


def _is_exact(spec, f):
    kind, _ = f.effective
    return kind == "sum" and (isinstance(spec, TotPers) or (isinstance(spec, PNorm) and spec.p == 1))


def path_metric_1param(spec, bcM, bcN, f=SUM, method="auto", max_bars=8):
    """Minimum cospan cost over all matching plans.

    ``method`` is ``"auto"`` (assignment when the cost separates per pair,
    else exhaustive), ``"exhaustive"`` or ``"assignment"``.  The value is
    the path metric itself for ``(rho_1, Sum)`` and an upper bound
    otherwise; the report says which.
    """
    M, N = _as_barcode(bcM), _as_barcode(bcN)
    sep = _separable_kind(spec, f)
    if method == "assignment" and sep is None:
        raise ValueError(f"{spec!r} with fold {f.name()} does not separate per pair")
    if method in ("auto", "assignment") and sep is not None:
        value, plan = _separable(spec, M, N, *sep)
    elif method in ("auto", "exhaustive"):
        if max(len(M), len(N)) > max_bars:
            raise InstanceTooLarge(
                f"{len(M)} x {len(N)} bars exceeds the exhaustive bound of {max_bars} per side "
                f"({plan_count(len(M), len(N))} plans)")
        if _is_length_spec(spec) or isinstance(spec, Magnitude):
            (value, plan), = _exhaustive_fast(spec, M, N, [f])
        else:
            value, plan = _exhaustive_generic(spec, M, N, f)
    else:
        raise ValueError(f"unknown method {method!r}")
    name = f"path[{amp.format_spec(spec)},{f.name()}]"
    return DistanceReport(name, value, "exact" if _is_exact(spec, f) else "upper_bound", plan)


def path_metric_folds(spec, bcM, bcN, folds, max_bars=8):
    """Exhaustive path metric for several folds from a single enumeration."""
    M, N = _as_barcode(bcM), _as_barcode(bcN)
    if not (_is_length_spec(spec) or isinstance(spec, Magnitude)):
        return [path_metric_1param(spec, M, N, f, method="exhaustive", max_bars=max_bars)
                for f in folds]
    if max(len(M), len(N)) > max_bars:
        raise InstanceTooLarge(f"{len(M)} x {len(N)} bars exceeds {max_bars} per side")
    out = []
    for f, (value, plan) in zip(folds, _exhaustive_fast(spec, M, N, list(folds))):
        name = f"path[{amp.format_spec(spec)},{f.name()}]"
        out.append(DistanceReport(name, value, "exact" if _is_exact(spec, f) else "upper_bound",
                                  plan))
    return out
