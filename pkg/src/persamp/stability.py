"""Property catalog for stability inequalities, plus counterexamples.

Each catalog entry draws independent samples from a seeded generator and
checks one or more inequalities ``left <= right``.  A sample is identified
by ``(entry id, seed, sample index)``, which is all :func:`replay` needs to
recompute it.

Soundness of each entry, given that some path metrics are only upper bounds:

* ``LIP``: |a(A) - a(B)| <= d_a <= computed upper bound.
* ``SHIFT-INT``: interleaving <= d_shift <= upper bound.  The factor-6
  direction is only checked on disjoint equal-length bars, where the
  values are 2r and r/2.
* ``HILB-INT``: bottleneck <= 4 * d_rho1.  Both sides are exact.
* ``WASS``, ``PNORM``, ``TROP``, ``MAG``: both sides are minima over the
  same full plan family.  The inequality holds plan by plan, so it holds
  for the minima.
* ``H0-AB``, ``QR-SHIFT``, ``AXIOMS``: amplitude values in exact
  arithmetic.

Float-valued catalog comparisons allow a relative slack of 1e-12 for
rounding.  Exact-arithmetic entries use no slack.
"""

import concurrent.futures as cf
import math
import zlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import amplitude as amp
from .amplitude import (
    COUNTING,
    LEBESGUE,
    LpHilbert,
    Magnitude,
    MaxDim,
    PNorm,
    ShiftAmp,
    Support,
    TotPers,
    TropLen,
    c_tau_rank,
    check_axioms,
    eval_barcode,
    eval_grid,
    format_spec,
    tropical_sigma10,
)
from .barcode import Bar, Barcode
from .distance import (
    SUM,
    LpFold,
    abs_distance,
    bottleneck,
    interleaving_1param,
    path_metric_1param,
    path_metric_folds,
)
from . import linalg as la
from .gridmod import (
    Face,
    GridGeometry,
    GridModule,
    direct_sum,
    grid_barcode,
    interval_module,
    local_cohomology,
    module_to_dict,
    quotient,
    quotient_restriction,
    random_module,
    random_ses,
    structure_map,
    submodule_generated,
)

__all__ = [
    "CATALOG",
    "COUNTEREXAMPLES",
    "InequalityCase",
    "CheckReport",
    "random_barcode",
    "rank_invariant",
    "run_catalog",
    "run_counterexamples",
    "sample_checks",
    "replay",
]

INF = math.inf
FLOAT_SLACK = 1e-12


def random_barcode(seed, max_bars=5, birth_range=(0.0, 10.0), len_range=(0.0, 5.0),
                   inf_rate=0.0, resolution=None):
    """Random finite barcode; ``resolution`` snaps endpoints to a grid."""
    rng = np.random.default_rng(seed)
    k = int(rng.integers(0, max_bars + 1))
    bars = []
    lo_l, hi_l = len_range
    for _ in range(k):
        b = float(rng.uniform(*birth_range))
        ell = float(rng.uniform(lo_l, hi_l))
        if resolution:
            b = round(b / resolution) * resolution
            ell = round(ell / resolution) * resolution
            ell = min(max(ell, lo_l), hi_l)
            b = min(max(b, birth_range[0]), birth_range[1])
        if inf_rate and rng.random() < inf_rate:
            bars.append(Bar(b, INF))
        else:
            bars.append(Bar(b, b + ell))
    return Barcode(bars)


def rank_invariant(M, s, q):
    """``rank M(s <= q)`` at real points ``s <= q``."""
    s = (s,) if np.isscalar(s) else tuple(s)
    q = (q,) if np.isscalar(q) else tuple(q)
    u = M.geometry.locate(s)
    w = M.geometry.locate(q)
    if u is None or w is None:
        return 0
    return la.rank(structure_map(M, u, w), M.prime)


@dataclass
class InequalityCase:
    id: str
    description: str
    mode: str
    sampler: object = field(repr=False)


@dataclass
class CheckReport:
    id: str
    samples: int
    failures: list = field(default_factory=list)
    max_slack: float = None
    min_slack: float = None
    mode: str = ""
    kind: str = "inequality"
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return not self.failures

    def to_dict(self):
        def num(x):
            if x is None:
                return None
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")

        return {
            "id": self.id,
            "kind": self.kind,
            "mode": self.mode,
            "samples": self.samples,
            "passed": self.passed,
            "failures": self.failures,
            "max_slack": num(self.max_slack),
            "min_slack": num(self.min_slack),
            "details": self.details,
        }


def _bc_json(bc):
    return [[b.birth, b.death if math.isfinite(b.death) else "inf"] for b in bc]


def _le(left, right, exact):
    if exact:
        return amp.leq(left, right)
    left, right = float(left), float(right)
    if right == INF:
        return True
    return left <= right + FLOAT_SLACK * max(abs(left), abs(right), 1.0)


# ---------------------------------------------------------------- samplers
# Each sampler takes a Generator and returns (checks, inputs, exact) where
# checks is a list of (label, left, right).

def _pair(rng, max_bars, **kw):
    kw.setdefault("resolution", 0.25)
    return random_barcode(rng, max_bars, **kw), random_barcode(rng, max_bars, **kw)


_LIP_SPECS = (PNorm(1), PNorm(2), PNorm(INF), TotPers(), TropLen(1), TropLen(2), TropLen(3),
              Magnitude(), ShiftAmp(1.0), Support())


def _lip(rng):
    A, B = _pair(rng, 4)
    checks = []
    for spec in _LIP_SPECS:
        d = path_metric_1param(spec, A, B, SUM).value
        checks.append((format_spec(spec), abs_distance(spec, A, B), d))
    return checks, {"A": _bc_json(A), "B": _bc_json(B)}, False


def _shift_int(rng):
    A, B = _pair(rng, 4)
    checks = [("dI<=dshift", interleaving_1param(A, B),
               path_metric_1param(ShiftAmp(1.0), A, B, SUM).value)]
    a = float(rng.integers(0, 20)) / 4
    r = float(rng.integers(1, 20)) / 4
    b = a + r + float(rng.integers(1, 20)) / 4
    F, G = Barcode([(a, a + r)]), Barcode([(b, b + r)])
    checks.append(("dshift<=6dI[family]", path_metric_1param(ShiftAmp(1.0), F, G, SUM).value,
                   6 * interleaving_1param(F, G)))
    return checks, {"A": _bc_json(A), "B": _bc_json(B), "family": [a, r, b]}, False


def _hilb_int(rng):
    A, B = _pair(rng, 6)
    return ([("bottleneck<=4*d_rho1", bottleneck(A, B),
              4 * path_metric_1param(PNorm(1), A, B, SUM).value)],
            {"A": _bc_json(A), "B": _bc_json(B)}, False)


def _wass(rng):
    A, B = _pair(rng, 6)
    checks = []
    for p in (1.0, 2.0, 3.0, INF):
        rep = path_metric_folds(PNorm(p), A, B, (LpFold(p), SUM))
        low, mid = rep[0].value, rep[1].value
        factor = 4 ** (1 - 1 / p) if p != INF else 4.0
        checks.append((f"p={p:g}:lp<=sum", low, mid))
        checks.append((f"p={p:g}:sum<=c*lp", mid, factor * low))
    return checks, {"A": _bc_json(A), "B": _bc_json(B)}, False


def _pnorm(rng):
    A, B = _pair(rng, 5)
    ps = (1.0, 2.0, INF)
    vals = {p: path_metric_1param(PNorm(p), A, B, SUM, method="exhaustive").value for p in ps}
    checks = [(f"q={q:g}<=p={p:g}", vals[q], vals[p]) for p in ps for q in ps if p < q]
    return checks, {"A": _bc_json(A), "B": _bc_json(B)}, False


def _trop(rng):
    A, B = _pair(rng, 5)
    vals = {k: path_metric_1param(TropLen(k), A, B, SUM).value for k in (1, 2, 3)}
    checks = [(f"l={l},k={k}", vals[l], max(1.0, l / k) * vals[k])
              for k in (1, 2, 3) for l in (1, 2, 3) if k != l]
    return checks, {"A": _bc_json(A), "B": _bc_json(B)}, False


def _mag(rng):
    A, B = _pair(rng, 5)
    checks = [("d_mag<=d_totpers",
               path_metric_1param(Magnitude(), A, B, SUM, method="exhaustive").value,
               path_metric_1param(TotPers(), A, B, SUM, method="exhaustive").value)]
    for name, X in (("A", A), ("B", B)):
        checks.append((f"|{name}|<=totpers", eval_barcode(Magnitude(), X),
                       eval_barcode(TotPers(), X)))
    return checks, {"A": _bc_json(A), "B": _bc_json(B)}, False


def _random_face(rng, n, proper=False):
    axes = [a for a in range(n) if rng.random() < 0.5]
    if not axes:
        axes = [int(rng.integers(0, n))]
    if proper and len(axes) == n:
        axes = [int(rng.integers(0, n))]
    return Face(axes)


def _random_shift(rng, n):
    v = tuple(float(x) for x in rng.integers(1, 4, size=n))
    return ShiftAmp(v, ("l1", "l2", "linf")[int(rng.integers(0, 3))])


def _h0_ab(rng):
    n = int(rng.integers(1, 3))
    M = random_module(rng, n=n, gen_count=int(rng.integers(0, 3)))
    tau = _random_face(rng, n)
    H, _ = local_cohomology(M, tau)
    checks = []
    for spec in (LpHilbert(1), LpHilbert(2), LpHilbert(1, COUNTING), MaxDim(), _random_shift(rng, n)):
        checks.append((format_spec(spec), eval_grid(spec, H, exact=True),
                       eval_grid(spec, M, exact=True)))
    return checks, {"M": module_to_dict(M), "tau": sorted(tau.axes)}, True


def _qr_shift(rng):
    M = random_module(rng, n=2, gen_count=int(rng.integers(0, 3)))
    tau = _random_face(rng, 2, proper=True)
    spec = _random_shift(rng, 2)
    rest = tau.complement(2)
    R = quotient_restriction(M, tau)
    spec_r = ShiftAmp(tuple(spec.v[a] for a in rest), spec.norm)
    return ([(f"{format_spec(spec_r)}<={format_spec(spec)}", eval_grid(spec_r, R, exact=True),
              eval_grid(spec, M, exact=True))],
            {"M": module_to_dict(M), "tau": sorted(tau.axes)}, True)


def axiom_specs(n):
    specs = [LpHilbert(1), LpHilbert(2), LpHilbert(1, COUNTING), MaxDim(), Support(),
             ShiftAmp((1.0,) * n, "linf"), ShiftAmp(tuple(float(i + 1) for i in range(n)), "l2")]
    if n == 1:
        specs += [PNorm(1), PNorm(2), PNorm(INF), TotPers(), TropLen(1), TropLen(2), TropLen(3),
                  Magnitude()]
    return specs


_STRICT_TRACKED = ("maxdim", "trop:1", "shift")


def _axioms(rng):
    n = 1 + int(rng.integers(0, 2))
    ses = random_ses(rng, n=n)
    defect = ses.check()
    checks = []
    strict = {}
    if defect is not None:
        checks.append(("exact-sequence", 1, 0))
    for spec in axiom_specs(n):
        name = format_spec(spec)
        rep = check_axioms(spec, ses)
        a, b, c = rep.exact_values
        checks.append((f"{name}:mono_sub", a, b))
        checks.append((f"{name}:mono_quot", c, b))
        checks.append((f"{name}:subadd", b, amp.add(a, c)))
        if amp._is_additive(spec):
            checks.append((f"{name}:additive", 0 if rep.additivity else 1, 0))
        if rep.strict_subadditive:
            for key in _STRICT_TRACKED:
                if name.startswith(key):
                    strict.setdefault(key, {"spec": name, "values": [_num(x) for x in (a, b, c)]})
    inputs = {"A": module_to_dict(ses.A), "B": module_to_dict(ses.B), "C": module_to_dict(ses.C),
              "strict": strict}
    return checks, inputs, True


CATALOG = {
    "LIP": InequalityCase("LIP", "|a(A)-a(B)| <= d_a (path upper bound)", "upper_bound", _lip),
    "SHIFT-INT": InequalityCase("SHIFT-INT", "d_I <= d_shift; d_shift <= 6 d_I on a family",
                                "upper_bound+family", _shift_int),
    "HILB-INT": InequalityCase("HILB-INT", "d_I <= 4 d_rho1 (n=1)", "exact", _hilb_int),
    "WASS": InequalityCase("WASS", "W_p sandwich with factor 4^(1-1/p)", "exhaustive", _wass),
    "PNORM": InequalityCase("PNORM", "d_rho_q <= d_rho_p for p <= q", "exhaustive", _pnorm),
    "TROP": InequalityCase("TROP", "d_T_l <= max(1, l/k) d_T_k", "exhaustive", _trop),
    "MAG": InequalityCase("MAG", "d_mag <= d_totpers and |M| <= totpers(M)", "exhaustive", _mag),
    "H0-AB": InequalityCase("H0-AB", "a(H0_tau M) <= a(M)", "exact", _h0_ab),
    "QR-SHIFT": InequalityCase("QR-SHIFT", "shift'(M/tau) <= shift(M)", "exact", _qr_shift),
    "AXIOMS": InequalityCase("AXIOMS", "amplitude axioms over random short exact sequences",
                             "exact", _axioms),
}


def _sample_rng(case_id, seed, index):
    return np.random.default_rng([int(seed), int(index), zlib.crc32(case_id.encode())])


def sample_checks(case_id, seed, index):
    """Recompute one catalog sample: ``(checks, inputs, exact)``."""
    case = CATALOG[case_id]
    return case.sampler(_sample_rng(case_id, seed, index))


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _run_range(case_id, seed, start, stop):
    out = []
    for i in range(start, stop):
        checks, inputs, exact = sample_checks(case_id, seed, i)
        rows = []
        for label, left, right in checks:
            ok = _le(left, right, exact)
            rows.append((label, float(left), float(right), ok))
        out.append((i, rows, inputs))
    return out


def replay(witness):
    """Recompute the checks recorded in a failure witness."""
    checks, _, _ = sample_checks(witness["id"], witness["seed"], witness["sample"])
    return [(label, float(left), float(right)) for label, left, right in checks]


def _run_case(case_id, seed, samples, jobs):
    if jobs > 1 and samples > 1:
        step = max(1, math.ceil(samples / (4 * jobs)))
        ranges = [(s, min(samples, s + step)) for s in range(0, samples, step)]
        with cf.ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_run_range, *zip(*[(case_id, seed, a, b) for a, b in ranges]))
            results = [r for part in parts for r in part]
    else:
        results = _run_range(case_id, seed, 0, samples)
    results.sort(key=lambda r: r[0])
    case = CATALOG[case_id]
    rep = CheckReport(case_id, samples, mode=case.mode)
    slacks = []
    strict = {}
    for i, rows, inputs in results:
        bad = [r for r in rows if not r[3]]
        for _, left, right, _ in rows:
            if math.isfinite(right) and math.isfinite(left):
                slacks.append(right - left)
        if case_id == "AXIOMS":
            for key, w in inputs.get("strict", {}).items():
                strict.setdefault(key, dict(w, sample=i))
        if bad:
            rep.failures.append({
                "id": case_id, "seed": seed, "sample": i,
                "checks": [{"label": l, "left": _num(a), "right": _num(b)} for l, a, b, _ in bad],
                "inputs": inputs,
            })
    if slacks:
        rep.max_slack = max(slacks)
        rep.min_slack = min(slacks)
    if case_id == "AXIOMS":
        rep.details["strict_subadditivity_witnesses"] = strict
        missing = [k for k in _STRICT_TRACKED if k not in strict]
        rep.details["missing_strict_witnesses"] = missing
        if missing and samples >= 100:
            rep.failures.append({"id": case_id, "seed": seed, "sample": None,
                                 "checks": [{"label": f"no strict witness for {k}"} for k in missing]})
    return rep


def run_catalog(ids=None, seed=0, samples=500, jobs=1):
    """Run catalog entries; returns one :class:`CheckReport` per id."""
    ids = list(CATALOG) if ids is None else list(ids)
    unknown = [i for i in ids if i not in CATALOG]
    if unknown:
        raise KeyError(f"unknown catalog ids: {unknown}")
    return [_run_case(i, seed, samples, jobs) for i in ids]


# ---------------------------------------------------------------- counterexamples

def _rank_sub():
    geo = GridGeometry(((0.0, 1.0, 2.0),))
    B = interval_module(geo, (0,), (1,))
    A, incl = submodule_generated(B, [((1,), [1])])
    C, _ = quotient(B, incl)
    s, q = 0.0, 1.0
    vals = {"rank_B": rank_invariant(B, s, q), "rank_A": rank_invariant(A, s, q),
            "rank_C": rank_invariant(C, s, q), "s": s, "q": q,
            "bars": {"A": _bc_json(grid_barcode(A)), "B": _bc_json(grid_barcode(B)),
                     "C": _bc_json(grid_barcode(C))}}
    return vals["rank_B"] > vals["rank_A"] + vals["rank_C"], vals


def _sigma_mono():
    geo = GridGeometry(((1.0, 2.0, 4.0),))
    B = interval_module(geo, (0,), (1,))
    A, _ = submodule_generated(B, [((1,), [1])])
    bA, bB = grid_barcode(A), grid_barcode(B)
    vals = {"sigma_A": tropical_sigma10(bA, 1, 1), "sigma_B": tropical_sigma10(bB, 1, 1),
            "A": _bc_json(bA), "B": _bc_json(bB)}
    return vals["sigma_A"] > vals["sigma_B"], vals


def _ctau_mono():
    geo = GridGeometry(((0.0, 1.0, 2.0, 3.0, 4.0), (0.0,)))
    B = interval_module(geo, (2, 0))
    A, incl = submodule_generated(B, [((4, 0), [1])])
    C, _ = quotient(B, incl)
    tau = Face(0)
    vals = {"c_A": c_tau_rank(A, tau, COUNTING), "c_B": c_tau_rank(B, tau, COUNTING),
            "c_C": c_tau_rank(C, tau, COUNTING),
            "C_is_stripe": C == interval_module(geo, (2, 0), (3, None))}
    return vals["c_C"] > vals["c_B"] and vals["C_is_stripe"], vals


def _min_amp():
    geo = GridGeometry(((0.0, 1.0),))
    B = GridModule(geo, [1, 1], {})
    A, incl = submodule_generated(B, [((0,), [1])])
    C, _ = quotient(B, incl)

    def gamma(M):
        return int(M.dims.min())

    vals = {"gamma_B": gamma(B), "gamma_A": gamma(A), "gamma_C": gamma(C),
            "dims": {"A": A.dims.tolist(), "B": B.dims.tolist(), "C": C.dims.tolist()}}
    return vals["gamma_B"] > vals["gamma_A"] + vals["gamma_C"], vals


def _ctau_disc():
    ks = (1, 2, 4)
    c_vals, shifts = [], []
    spec = ShiftAmp((1.0, 1.0), "linf")
    for k in ks:
        geo = GridGeometry(((0.0, 1.0 / k), (0.0,)))
        Mk = direct_sum(*[interval_module(geo, (0, 0), (0, None))] * k)
        c_vals.append(c_tau_rank(Mk, Face(0), LEBESGUE, exact=True))
        shifts.append(eval_grid(spec, Mk, exact=True))
    ok = all(c == 1 for c in c_vals) and all(s == Fraction(1, k) for s, k in zip(shifts, ks))
    vals = {"k": list(ks), "c_tau": [float(c) for c in c_vals], "shift": [float(s) for s in shifts]}
    return ok, vals


COUNTEREXAMPLES = {
    "RANK-SUB": ("rank invariant is not subadditive", _rank_sub),
    "SIGMA-MONO": ("sigma_(1,0) is not monotone", _sigma_mono),
    "CTAU-MONO": ("c_tau is not monotone under quotients", _ctau_mono),
    "MIN-AMP": ("min of dimensions is not subadditive", _min_amp),
    "CTAU-DISC": ("c_tau is not continuous", _ctau_disc),
}


def run_counterexamples(ids=None):
    """Each report passes when its violation is reproduced."""
    ids = list(COUNTEREXAMPLES) if ids is None else list(ids)
    out = []
    for cid in ids:
        if cid not in COUNTEREXAMPLES:
            raise KeyError(f"unknown counterexample id: {cid}")
        desc, fn = COUNTEREXAMPLES[cid]
        violated, vals = fn()
        rep = CheckReport(cid, 1, mode="fixed", kind="counterexample",
                          details={"description": desc, "values": vals})
        if not violated:
            rep.failures.append({"id": cid, "reason": "expected violation did not occur",
                                 "values": vals})
        out.append(rep)
    return out
