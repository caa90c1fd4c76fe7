"""Assignment and bottleneck matching helpers, plus plan enumeration."""

import functools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

__all__ = [
    "MatchingPlan",
    "augmented_cost",
    "min_cost_plan",
    "bottleneck_plan",
    "all_plans",
    "plan_count",
]


@dataclass(frozen=True)
class MatchingPlan:
    """Partial matching between bars of ``M`` and bars of ``N``."""

    pairs: tuple
    unmatched_M: tuple
    unmatched_N: tuple

    @classmethod
    def from_assignment(cls, assign, n):
        """``assign[i]`` is the partner of M-bar ``i`` or -1."""
        pairs = tuple((i, int(j)) for i, j in enumerate(assign) if j >= 0)
        used = {j for _, j in pairs}
        return cls(
            pairs,
            tuple(i for i, j in enumerate(assign) if j < 0),
            tuple(j for j in range(n) if j not in used),
        )

    def assignment(self, m):
        out = [-1] * m
        for i, j in self.pairs:
            out[i] = j
        return tuple(out)

    def check(self, m, n):
        left = sorted([i for i, _ in self.pairs] + list(self.unmatched_M))
        right = sorted([j for _, j in self.pairs] + list(self.unmatched_N))
        if left != list(range(m)) or right != list(range(n)):
            raise ValueError("plan does not partition the bar indices")

    def to_dict(self):
        return {
            "pairs": [list(p) for p in self.pairs],
            "unmatched_M": list(self.unmatched_M),
            "unmatched_N": list(self.unmatched_N),
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            tuple(tuple(int(x) for x in p) for p in doc["pairs"]),
            tuple(int(x) for x in doc["unmatched_M"]),
            tuple(int(x) for x in doc["unmatched_N"]),
        )

    def remap(self, rows, cols):
        """Translate local indices through ``rows``/``cols`` lookup lists."""
        return MatchingPlan(
            tuple((rows[i], cols[j]) for i, j in self.pairs),
            tuple(rows[i] for i in self.unmatched_M),
            tuple(cols[j] for j in self.unmatched_N),
        )

    @staticmethod
    def merge(*plans):
        return MatchingPlan(
            tuple(sorted(p for pl in plans for p in pl.pairs)),
            tuple(sorted(i for pl in plans for i in pl.unmatched_M)),
            tuple(sorted(j for pl in plans for j in pl.unmatched_N)),
        )


def augmented_cost(pair, del_m, del_n):
    """Square ``(m+n)`` cost matrix with a private diagonal slot per bar."""
    pair = np.asarray(pair, dtype=float).reshape(len(del_m), len(del_n))
    m, n = pair.shape
    c = np.full((m + n, m + n), np.inf)
    c[:m, :n] = pair
    c[m:, n:] = 0.0
    if m:
        c[np.arange(m), n + np.arange(m)] = del_m
    if n:
        c[m + np.arange(n), np.arange(n)] = del_n
    return c


def _assign_from_columns(cols, m, n):
    return [int(cols[i]) if cols[i] < n else -1 for i in range(m)]


def min_cost_plan(pair, del_m, del_n):
    """Minimum total cost partial matching.  Returns ``(cost, plan)``."""
    m, n = len(del_m), len(del_n)
    if m + n == 0:
        return 0.0, MatchingPlan((), (), ())
    c = augmented_cost(pair, del_m, del_n)
    rows, cols = linear_sum_assignment(c)
    order = np.empty(m + n, dtype=int)
    order[rows] = cols
    total = float(c[rows, cols].sum())
    return total, MatchingPlan.from_assignment(_assign_from_columns(order, m, n), n)


def bottleneck_plan(pair, del_m, del_n):
    """Partial matching minimizing the largest used cost.

    Binary search over candidate thresholds; feasibility by maximum
    bipartite matching.  Returns ``(cost, plan)``.
    """
    m, n = len(del_m), len(del_n)
    if m + n == 0:
        return 0.0, MatchingPlan((), (), ())
    c = augmented_cost(pair, del_m, del_n)
    cand = np.unique(c[np.isfinite(c)])
    size = m + n

    def feasible(t):
        graph = csr_matrix((c <= t).astype(np.int8))
        match = maximum_bipartite_matching(graph, perm_type="column")
        return match if (match >= 0).all() else None

    lo, hi = 0, len(cand) - 1
    best = feasible(cand[hi])
    if best is None:
        return np.inf, None
    while lo < hi:
        mid = (lo + hi) // 2
        got = feasible(cand[mid])
        if got is None:
            lo = mid + 1
        else:
            hi, best = mid, got
    assert len(best) == size
    return float(cand[lo]), MatchingPlan.from_assignment(_assign_from_columns(best, m, n), n)


def plan_count(m, n):
    from math import comb, factorial

    return sum(comb(m, k) * comb(n, k) * factorial(k) for k in range(min(m, n) + 1))


@functools.lru_cache(maxsize=128)
def all_plans(m, n):
    """Every partial matching as an ``(P, m)`` array, in lexicographic
    order with -1 (unmatched) sorting first."""
    plans = np.zeros((1, 0), dtype=np.int8)
    for _ in range(m):
        blocks = []
        for opt in range(-1, n):
            ok = np.ones(len(plans), dtype=bool) if opt < 0 else ~(plans == opt).any(axis=1)
            sel = plans[ok]
            blocks.append(np.hstack([sel, np.full((len(sel), 1), opt, dtype=np.int8)]))
        plans = np.vstack(blocks)
    if m:
        plans = plans[np.lexsort(plans.T[::-1])]
    plans.setflags(write=False)
    return plans
