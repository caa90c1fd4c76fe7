"""Amplitude evaluators, contents and axiom checks.

Every evaluator accepts ``exact=True``.  In that mode finite breakpoints and
bar endpoints are lifted to :class:`fractions.Fraction` (floats convert
exactly), so rational-valued amplitudes are computed without rounding.
Irrational steps (p-th roots, exponentials) switch to 60-digit
:class:`decimal.Decimal`.  Comparisons in :func:`leq` are exact for rationals
and carry a 1e-45 relative slack once a Decimal is involved.
"""

import decimal
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .barcode import Barcode, length
from .gridmod import (
    GridGeometry,
    GridModule,
    HilbertGrid,
    barcode_to_grid,
    common_refinement,
    composites_from,
    grid_barcode,
    local_cohomology,
    quotient_restriction,
    _face_axes,
)

__all__ = [
    "Content",
    "LEBESGUE",
    "COUNTING",
    "PNorm",
    "TotPers",
    "TropLen",
    "Magnitude",
    "Support",
    "ShiftAmp",
    "MaxDim",
    "LpHilbert",
    "InapplicableSpec",
    "AxiomReport",
    "parse_spec",
    "format_spec",
    "evaluate",
    "eval_barcode",
    "eval_grid",
    "check_axioms",
    "integral_representation_check",
    "hilbert_invariance_check",
    "tropical_sigma10",
    "c_tau_rank",
    "leq",
    "add",
    "close",
    "to_float",
]

_CTX = decimal.Context(prec=60)
_SLACK = decimal.Decimal("1e-45")
INF = math.inf


class InapplicableSpec(TypeError):
    """The amplitude is not defined on this kind of input."""


# ---------------------------------------------------------------- numbers

def _lift(x, exact):
    x = float(x)
    if exact and math.isfinite(x):
        return Fraction(x)
    return x


def _zero(exact):
    return Fraction(0) if exact else 0.0


def _dec(x):
    if isinstance(x, decimal.Decimal):
        return x
    if isinstance(x, Fraction):
        return _CTX.divide(decimal.Decimal(x.numerator), decimal.Decimal(x.denominator))
    if isinstance(x, (int, np.integer)):
        return decimal.Decimal(int(x))
    return decimal.Decimal(float(x))


def _is_inf(x):
    return isinstance(x, float) and x == INF


def _pow(x, p, exact):
    if _is_inf(x):
        return INF
    if float(p).is_integer():
        return x ** int(p)
    if exact:
        return _CTX.power(_dec(x), _dec(Fraction(p)))
    return float(x) ** p


def _root(s, p, exact):
    if s == 0:
        return _zero(exact)
    if _is_inf(s):
        return INF
    if p == 1:
        return s
    if exact:
        if p == 2:
            return _CTX.sqrt(_dec(s))
        return _CTX.power(_dec(s), _CTX.divide(decimal.Decimal(1), _dec(Fraction(p))))
    return float(s) ** (1.0 / p)


def add(x, y):
    """Extended-real sum that tolerates mixed Fraction/Decimal inputs."""
    if _is_inf(x) or _is_inf(y):
        return INF
    if isinstance(x, decimal.Decimal) or isinstance(y, decimal.Decimal):
        return _CTX.add(_dec(x), _dec(y))
    return x + y


def _mul(x, y):
    if x == 0 or y == 0:
        return 0
    if _is_inf(x) or _is_inf(y):
        return INF
    if isinstance(x, decimal.Decimal) or isinstance(y, decimal.Decimal):
        return _CTX.multiply(_dec(x), _dec(y))
    return x * y


def leq(x, y):
    """``x <= y`` exactly, or with 1e-45 relative slack for Decimals."""
    if _is_inf(y):
        return True
    if _is_inf(x):
        return False
    if isinstance(x, decimal.Decimal) or isinstance(y, decimal.Decimal):
        xd, yd = _dec(x), _dec(y)
        with decimal.localcontext(_CTX):
            return xd <= yd + _SLACK * max(abs(xd), abs(yd), decimal.Decimal(1))
    return x <= y


def close(x, y, rel_tol=0.0):
    """Equality of extended reals, exact when ``rel_tol`` is 0 and no
    Decimal is involved."""
    if _is_inf(x) or _is_inf(y):
        return _is_inf(x) and _is_inf(y)
    if isinstance(x, decimal.Decimal) or isinstance(y, decimal.Decimal):
        xd, yd = _dec(x), _dec(y)
        with decimal.localcontext(_CTX):
            tol = max(_dec(Fraction(rel_tol)), _SLACK) * max(abs(xd), abs(yd), decimal.Decimal(1))
            return abs(xd - yd) <= tol
    if rel_tol == 0:
        return x == y
    return math.isclose(float(x), float(y), rel_tol=rel_tol, abs_tol=rel_tol)


def to_float(x):
    return float(x)


def _prod(values):
    if any(v == 0 for v in values):
        return 0
    out = 1
    for v in values:
        out = INF if (_is_inf(out) or _is_inf(v)) else out * v
    return out


# ---------------------------------------------------------------- contents

@dataclass(frozen=True)
class Content:
    """Additive cell weights: ``lebesgue``, ``counting`` or ``custom``.

    ``counting`` counts integer lattice points in a cell, which is 1 per
    finite cell on a unit grid.
    """

    kind: str = "lebesgue"
    geometry: GridGeometry = None
    weights: tuple = None

    def __post_init__(self):
        if self.kind not in ("lebesgue", "counting", "custom"):
            raise ValueError(f"unknown content kind {self.kind!r}")
        if self.kind == "custom":
            if self.geometry is None or self.weights is None:
                raise ValueError("custom content needs a geometry and weights")
            w = tuple(float(x) for x in np.asarray(self.weights, dtype=float).reshape(-1))
            if len(w) != self.geometry.size:
                raise ValueError("custom weights do not match the geometry")
            if any(x < 0 or math.isnan(x) for x in w):
                raise ValueError("custom weights must be non-negative")
            object.__setattr__(self, "weights", w)

    @classmethod
    def custom(cls, geometry, weights):
        return cls("custom", geometry, tuple(np.asarray(weights, dtype=float).reshape(-1)))

    def cell_weights(self, geometry, exact=False):
        """Object array of cell weights on ``geometry``."""
        return _cell_weights(self, geometry, bool(exact))


@functools.lru_cache(maxsize=4096)
def _cell_weights(content, geometry, exact):
    if content.kind == "custom":
        if geometry != content.geometry:
            raise ValueError("custom content is tied to its own geometry; supply refined weights")
        arr = np.empty(geometry.size, dtype=object)
        arr[:] = [_lift(x, exact) for x in content.weights]
        return arr.reshape(geometry.shape)
    per_axis = []
    for a in range(geometry.n):
        sides = []
        for i in range(geometry.shape[a]):
            lo, hi = geometry.cell_bounds(a, i)
            if hi == INF:
                sides.append(INF)
            elif content.kind == "lebesgue":
                sides.append(_lift(hi, exact) - _lift(lo, exact))
            else:
                sides.append(math.ceil(hi) - math.ceil(lo))
        per_axis.append(sides)
    arr = np.empty(geometry.shape, dtype=object)
    for u in geometry.vertices():
        w = _prod([per_axis[a][u[a]] for a in range(geometry.n)])
        if content.kind == "counting" and not _is_inf(w):
            w = Fraction(w) if exact else float(w)
        arr[u] = w
    arr.setflags(write=False)
    return arr


LEBESGUE = Content("lebesgue")
COUNTING = Content("counting")


# ---------------------------------------------------------------- specs

def _check_p(p):
    p = float(p)
    if not (p >= 1):
        raise ValueError(f"p must be in [1, inf], got {p}")
    return p


@dataclass(frozen=True)
class PNorm:
    p: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "p", _check_p(self.p))


@dataclass(frozen=True)
class TotPers:
    pass


@dataclass(frozen=True)
class TropLen:
    k: int = 1

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        object.__setattr__(self, "k", int(self.k))


@dataclass(frozen=True)
class Magnitude:
    pass


@dataclass(frozen=True)
class Support:
    pass


@dataclass(frozen=True)
class ShiftAmp:
    v: tuple = (1.0,)
    norm: str = "linf"

    def __post_init__(self):
        v = self.v
        if np.isscalar(v):
            v = (v,)
        v = tuple(float(x) for x in v)
        if not v or any(x < 0 or not math.isfinite(x) for x in v) or not any(v):
            raise ValueError("shift direction must be a nonzero non-negative finite vector")
        if self.norm not in ("l1", "l2", "linf"):
            raise ValueError(f"unknown norm {self.norm!r}")
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class MaxDim:
    pass


@dataclass(frozen=True)
class LpHilbert:
    p: float = 1.0
    content: Content = field(default=LEBESGUE)

    def __post_init__(self):
        p = _check_p(self.p)
        if p == INF:
            raise ValueError("LpHilbert needs finite p")
        object.__setattr__(self, "p", p)


_BARCODE_SPECS = (PNorm, TotPers, TropLen, Magnitude, Support, ShiftAmp)


def _fmt_num(x):
    return "inf" if x == INF else f"{x:g}"


def format_spec(spec):
    if isinstance(spec, PNorm):
        return f"p{_fmt_num(spec.p)}"
    if isinstance(spec, TotPers):
        return "totpers"
    if isinstance(spec, TropLen):
        return f"trop:{spec.k}"
    if isinstance(spec, Magnitude):
        return "magnitude"
    if isinstance(spec, Support):
        return "support"
    if isinstance(spec, MaxDim):
        return "maxdim"
    if isinstance(spec, ShiftAmp):
        return "shift:" + ",".join(_fmt_num(x) for x in spec.v) + ":" + spec.norm
    if isinstance(spec, LpHilbert):
        out = f"hilbert:{_fmt_num(spec.p)}"
        if spec.content.kind == "counting":
            out += ":counting"
        elif spec.content.kind == "custom":
            out += ":custom"
        return out
    raise TypeError(f"not an amplitude spec: {spec!r}")


def parse_spec(text):
    """Parse the textual syntax (``p1``, ``trop:3``, ``shift:1,1:linf``...)."""
    t = text.strip().lower()
    parts = t.split(":")
    head = parts[0]
    try:
        if head == "totpers" and len(parts) == 1:
            return TotPers()
        if head == "magnitude" and len(parts) == 1:
            return Magnitude()
        if head == "support" and len(parts) == 1:
            return Support()
        if head == "maxdim" and len(parts) == 1:
            return MaxDim()
        if head == "trop" and len(parts) == 2:
            return TropLen(int(parts[1]))
        if head == "shift" and len(parts) in (2, 3):
            v = tuple(float(x) for x in parts[1].split(","))
            return ShiftAmp(v, parts[2] if len(parts) == 3 else "linf")
        if head == "hilbert" and len(parts) in (2, 3):
            content = LEBESGUE
            if len(parts) == 3:
                content = {"counting": COUNTING, "lebesgue": LEBESGUE}[parts[2]]
            return LpHilbert(float(parts[1]), content)
        if head.startswith("p") and len(parts) == 1 and len(head) > 1:
            return PNorm(float(head[1:]))
    except (ValueError, KeyError) as exc:
        raise ValueError(f"bad amplitude spec {text!r}: {exc}") from None
    raise ValueError(f"unknown amplitude spec {text!r}")


# ---------------------------------------------------------------- evaluation

def _lengths(bc, exact):
    out = []
    for b in bc:
        if b.death == b.birth:
            out.append(_zero(exact))
        elif b.death == INF:
            out.append(INF)
        else:
            out.append(_lift(b.death, exact) - _lift(b.birth, exact))
    return out


def _pnorm_of(lengths, p, exact):
    if not lengths:
        return _zero(exact)
    if any(_is_inf(x) for x in lengths):
        return INF
    if p == INF:
        return max(lengths)
    if p == 1:
        return sum(lengths, _zero(exact))
    return _root(functools.reduce(add, (_pow(x, p, exact) for x in lengths), _zero(exact)), p, exact)


def _magnitude(bc, exact):
    terms = []
    for b in bc:
        if not math.isfinite(b.birth):
            raise ValueError("magnitude needs finite births")
        if b.death == b.birth:
            continue
        if exact:
            hi = decimal.Decimal(0) if b.death == INF else _CTX.exp(-_dec(Fraction(b.death)))
            terms.append(_CTX.subtract(_CTX.exp(-_dec(Fraction(b.birth))), hi))
        else:
            terms.append(math.exp(-b.birth) - math.exp(-b.death))
    if exact:
        out = decimal.Decimal(0)
        for t in sorted(terms):
            out = _CTX.add(out, t)
        return out
    return math.fsum(terms)


def _union_measure(bc, exact):
    spans = sorted((b.birth, b.death) for b in bc if b.death > b.birth)
    total = _zero(exact)
    cur_lo = cur_hi = None
    for lo, hi in spans:
        if cur_hi is not None and lo <= cur_hi:
            cur_hi = max(cur_hi, hi)
            continue
        if cur_hi is not None:
            total = add(total, INF if cur_hi == INF else _lift(cur_hi, exact) - _lift(cur_lo, exact))
        cur_lo, cur_hi = lo, hi
    if cur_hi is not None:
        total = add(total, INF if cur_hi == INF else _lift(cur_hi, exact) - _lift(cur_lo, exact))
    return total


def _as_barcode(obj):
    if isinstance(obj, Barcode):
        return obj
    return Barcode(obj)


def eval_barcode(spec, bc, exact=False):
    """Amplitude of a barcode."""
    bc = _as_barcode(bc)
    if isinstance(spec, (LpHilbert, MaxDim)):
        return eval_grid(spec, barcode_to_grid(bc), exact)
    if isinstance(spec, PNorm):
        val = _pnorm_of(_lengths(bc, exact), spec.p, exact)
    elif isinstance(spec, TotPers):
        val = _pnorm_of(_lengths(bc, exact), 1, exact)
    elif isinstance(spec, ShiftAmp):
        if len(spec.v) != 1:
            raise InapplicableSpec("barcodes need a scalar shift direction")
        val = _pnorm_of(_lengths(bc, exact), INF, exact)
    elif isinstance(spec, TropLen):
        ls = _lengths(bc, exact)
        ls.sort(reverse=True)
        top = ls[: spec.k]
        val = INF if any(_is_inf(x) for x in top) else sum(top, _zero(exact))
    elif isinstance(spec, Magnitude):
        val = _magnitude(bc, exact)
    elif isinstance(spec, Support):
        val = _union_measure(bc, exact)
    else:
        raise InapplicableSpec(f"{spec!r} is not a barcode amplitude")
    return val if exact else float(val)


def _lp_hilbert(dims, weights, p, exact):
    total = _zero(exact)
    for u in zip(*np.nonzero(dims)):
        d = int(dims[u])
        term = _mul(_pow(Fraction(d) if exact else float(d), p, exact), weights[u])
        total = add(total, term)
    return _root(total, p, exact)


def _vector_norm(v, norm, exact):
    if norm == "linf":
        return max(v)
    if norm == "l1":
        return sum(v, _zero(exact))
    s = sum((x * x for x in v), _zero(exact))
    return _CTX.sqrt(_dec(s)) if exact else math.sqrt(s)


def _shift_grid(spec, M, exact):
    geo = M.geometry
    n = geo.n
    v = spec.v
    if len(v) == 1 and n > 1:
        raise InapplicableSpec(f"shift direction has 1 entry, module has {n} axes")
    if len(v) != n:
        raise InapplicableSpec(f"shift direction has {len(v)} entries, module has {n} axes")
    v = [_lift(x, exact) for x in v]
    bounds = [[tuple(_lift(x, exact) for x in geo.cell_bounds(a, i)) for i in range(geo.shape[a])]
              for a in range(n)]
    best = None
    for u in M.vertices():
        if M.dim(u) == 0:
            continue
        for w, comp in composites_from(M, u).items():
            if M.dim(w) == 0 or not comp.any():
                continue
            low, high = -INF, INF
            empty = False
            for a in range(n):
                a_lo, a_hi = bounds[a][u[a]]
                b_lo, b_hi = bounds[a][w[a]]
                if v[a] == 0:
                    if u[a] != w[a]:
                        empty = True
                        break
                    continue
                low = max(low, -INF if _is_inf(a_hi) else (b_lo - a_hi) / v[a])
                high = min(high, INF if _is_inf(b_hi) else (b_hi - a_lo) / v[a])
            if empty or not max(low, 0) < high:
                continue
            if best is None or high > best:
                best = high
    if best is None:
        return _zero(exact)
    return _mul(_vector_norm(v, spec.norm, exact), best)


def eval_grid(spec, M, exact=False):
    """Amplitude of a grid module (or a :class:`HilbertGrid` for
    Hilbert-function amplitudes)."""
    if isinstance(spec, LpHilbert):
        val = _lp_hilbert(M.dims, spec.content.cell_weights(M.geometry, exact), spec.p, exact)
    elif isinstance(spec, MaxDim):
        val = int(M.dims.max()) if M.dims.size else 0
        val = Fraction(val) if exact else val
    elif isinstance(spec, Support):
        w = LEBESGUE.cell_weights(M.geometry, exact)
        val = _zero(exact)
        for u in zip(*np.nonzero(M.dims)):
            val = add(val, w[u])
    elif isinstance(M, HilbertGrid):
        raise InapplicableSpec(f"{spec!r} needs structure maps")
    elif isinstance(spec, ShiftAmp):
        val = _shift_grid(spec, M, exact)
    elif isinstance(spec, _BARCODE_SPECS):
        if M.n != 1:
            raise InapplicableSpec(f"{spec!r} is only defined for 1-parameter modules")
        return eval_barcode(spec, grid_barcode(M), exact)
    else:
        raise InapplicableSpec(f"unknown spec {spec!r}")
    return val if exact else float(val)


def evaluate(spec, obj, exact=False):
    """Dispatch on the input kind."""
    if isinstance(obj, (GridModule, HilbertGrid)):
        return eval_grid(spec, obj, exact)
    return eval_barcode(spec, obj, exact)


# ---------------------------------------------------------------- checks

def _is_additive(spec):
    if isinstance(spec, (PNorm, LpHilbert)):
        return spec.p == 1
    return isinstance(spec, (TotPers, Magnitude))


@dataclass
class AxiomReport:
    monotonicity_sub: bool
    monotonicity_quot: bool
    subadditivity: bool
    additivity: bool
    values: tuple
    witnesses: dict = field(default_factory=dict)
    exact_values: tuple = ()

    @property
    def is_amplitude_like(self):
        return self.monotonicity_sub and self.monotonicity_quot and self.subadditivity

    @property
    def strict_subadditive(self):
        return self.subadditivity and not self.additivity


def check_axioms(spec, ses):
    """Evaluate ``spec`` exactly on ``A``, ``B``, ``C`` of a short exact
    sequence and report each axiom."""
    A, B, C = (ses.A, ses.B, ses.C) if hasattr(ses, "A") else tuple(ses)
    a, b, c = (evaluate(spec, X, exact=True) for X in (A, B, C))
    s = add(a, c)
    integral = all(not isinstance(x, decimal.Decimal) for x in (a, b, c))
    rep = AxiomReport(
        monotonicity_sub=leq(a, b),
        monotonicity_quot=leq(c, b),
        subadditivity=leq(b, s),
        additivity=close(b, s, 0.0 if integral else 1e-9),
        values=(float(a), float(b), float(c)),
        exact_values=(a, b, c),
    )
    if not rep.monotonicity_sub:
        rep.witnesses["monotonicity_sub"] = (float(a), float(b))
    if not rep.monotonicity_quot:
        rep.witnesses["monotonicity_quot"] = (float(c), float(b))
    if not rep.subadditivity:
        rep.witnesses["subadditivity"] = (float(b), float(s))
    return rep


def _to_grid(obj):
    if isinstance(obj, (GridModule, HilbertGrid)):
        return obj
    return barcode_to_grid(_as_barcode(obj))


def integral_representation_check(spec, content, M, rel_tol=1e-9):
    """Does ``spec`` equal the integral of the Hilbert function against
    ``content`` on ``M``?"""
    lhs = evaluate(spec, M)
    rhs = eval_grid(LpHilbert(1, content), _to_grid(M))
    return close(lhs, rhs, rel_tol)


def _same_hilbert(M, N):
    if isinstance(M, HilbertGrid) or isinstance(N, HilbertGrid):
        if M.geometry != N.geometry:
            raise ValueError("Hilbert grids need a shared geometry")
        return np.array_equal(M.dims, N.dims)
    Mr, Nr = common_refinement(M, N)
    return np.array_equal(Mr.dims, Nr.dims)


def hilbert_invariance_check(spec, M, N):
    """Do two inputs with equal Hilbert functions get equal values?"""
    GM, GN = _to_grid(M), _to_grid(N)
    if not _same_hilbert(GM, GN):
        raise ValueError("inputs do not have equal Hilbert functions")
    return close(evaluate(spec, M, exact=True), evaluate(spec, N, exact=True))


def tropical_sigma10(bc, l, m):
    """Sum of the ``l`` largest values ``min(b_i, m * length_i)``."""
    vals = sorted((min(b.birth, m * length(b)) for b in _as_barcode(bc)), reverse=True)
    return float(sum(vals[:l]))


def c_tau_rank(M, tau, content=LEBESGUE, exact=False):
    """L1-Hilbert amplitude of the quotient restriction of H^0_tau(M)
    along the complementary axes."""
    axes = _face_axes(tau, M.n)
    if not axes:
        raise ValueError("tau must be nonempty")
    H, _ = local_cohomology(M, axes)
    rest = tuple(a for a in range(M.n) if a not in axes)
    R = quotient_restriction(H, rest)
    return eval_grid(LpHilbert(1, content), R, exact)
