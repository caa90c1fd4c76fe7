import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import shift_oracle
from persamp.amplitude import (
    COUNTING,
    LEBESGUE,
    Content,
    InapplicableSpec,
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
    evaluate,
    format_spec,
    hilbert_invariance_check,
    integral_representation_check,
    parse_spec,
    tropical_sigma10,
)
from persamp.barcode import Barcode
from persamp.gridmod import (
    Face,
    GridGeometry,
    ModuleMorphism,
    ShortExactSequence,
    barcode_to_grid,
    direct_sum,
    interval_module,
    quotient,
    random_module,
    submodule_generated,
    zero_module,
)

INF = math.inf


def bc(*bars):
    return Barcode(list(bars))


def test_barcode_examples():
    assert eval_barcode(PNorm(1), bc((0, 3))) == 3
    assert eval_barcode(TropLen(2), bc((0, 3), (0, 1), (0, 5))) == 8
    assert eval_barcode(Magnitude(), bc((0, INF))) == 1
    assert eval_barcode(Support(), bc((0, 2), (1, 3))) == 3
    assert eval_barcode(ShiftAmp(1.0), bc((0, 3), (4, 5))) == 3


def test_shift_barcode_example_against_dense_oracle():
    M = barcode_to_grid(bc((0, 3), (4, 5)))
    value, res = shift_oracle(M, (1.0,))
    assert abs(value - 3) <= res


def test_infinite_bars_give_infinity():
    b = bc((0, INF), (0, 1))
    for spec in (PNorm(1), PNorm(2), PNorm(INF), TotPers(), TropLen(1), Support()):
        assert eval_barcode(spec, b) == INF
    assert eval_barcode(TropLen(1), bc((0, 5), (1, 2))) == 5


def test_magnitude_rejects_infinite_birth():
    with pytest.raises(ValueError):
        eval_barcode(Magnitude(), bc((-INF, 0)))


def test_exact_values():
    assert eval_barcode(PNorm(1), bc((0, 0.5), (0, 0.25)), exact=True) == Fraction(3, 4)
    v = eval_barcode(PNorm(2), bc((0, 3), (0, 4)), exact=True)
    assert v == 5


def test_grid_examples():
    g = GridGeometry(((0, 2, 4), (0, 3, 5)))
    box = interval_module(g, (0, 0), (0, 0))
    assert eval_grid(LpHilbert(1), box) == 6
    C = interval_module(g, (1, 1))
    assert eval_grid(MaxDim(), direct_sum(C, C)) == 2
    unit = interval_module(GridGeometry(((0, 1), (0, 1))), (0, 0), (0, 0))
    assert eval_grid(ShiftAmp((1, 1), "linf"), unit) == 1
    assert eval_grid(LpHilbert(1), interval_module(g, (0, 0))) == INF


def test_shift_unit_box_dense_oracle():
    unit = interval_module(GridGeometry(((0, 1), (0, 1))), (0, 0), (0, 0))
    value, res = shift_oracle(unit, (1, 1))
    assert abs(value - 1) <= res


def test_inapplicable_specs():
    g = GridGeometry(((0, 1), (0, 1)))
    M = interval_module(g, (0, 0))
    with pytest.raises(InapplicableSpec):
        eval_grid(PNorm(1), M)
    with pytest.raises(InapplicableSpec):
        eval_grid(ShiftAmp(1.0), M)
    with pytest.raises(InapplicableSpec):
        eval_grid(Magnitude(), M)
    # grid-only specs on a barcode go through its grid form
    assert eval_barcode(MaxDim(), bc((0, 2), (1, 3))) == 2


def test_zero_has_zero_amplitude():
    g = GridGeometry(((0, 1), (0, 2)))
    Z = zero_module(g)
    for spec in (LpHilbert(1), LpHilbert(2, COUNTING), MaxDim(), Support(), ShiftAmp((1, 2))):
        assert eval_grid(spec, Z) == 0
    for spec in (PNorm(1), PNorm(INF), TotPers(), TropLen(3), Magnitude(), Support(), ShiftAmp(1)):
        assert eval_barcode(spec, Barcode()) == 0


def test_spec_syntax_roundtrip():
    for text in ("p1", "p2", "pinf", "totpers", "trop:3", "magnitude", "support", "maxdim",
                 "shift:1,2:l1", "hilbert:1", "hilbert:2:counting"):
        spec = parse_spec(text)
        assert parse_spec(format_spec(spec)) == spec
    with pytest.raises(ValueError):
        parse_spec("trop:0")
    with pytest.raises(ValueError):
        parse_spec("nonsense")
    with pytest.raises(ValueError):
        parse_spec("p0.5")


def _one_param_ses():
    B = barcode_to_grid(bc((0, 2)), breakpoints=(0, 1, 2))
    A, incl = submodule_generated(B, [((1,), [1])])
    C, proj = quotient(B, incl)
    return ShortExactSequence(A, B, C, incl, proj)


def test_check_axioms_examples():
    ses = _one_param_ses()
    rep = check_axioms(LpHilbert(1), ses)
    assert rep.additivity and rep.is_amplitude_like
    rep = check_axioms(MaxDim(), ses)
    assert rep.subadditivity and not rep.additivity
    assert rep.values == (1.0, 1.0, 1.0)
    M = random_module(4, n=2)
    Z = zero_module(M.geometry)
    triv = ShortExactSequence(Z, M, M, ModuleMorphism(Z, M), ModuleMorphism.identity(M))
    for spec in (LpHilbert(1), MaxDim(), ShiftAmp((1, 1))):
        rep = check_axioms(spec, triv)
        assert rep.is_amplitude_like and rep.additivity


def test_integral_representation_examples():
    b = bc((0, 3), (1, 2.5))
    assert integral_representation_check(PNorm(1), LEBESGUE, b)
    assert integral_representation_check(TotPers(), LEBESGUE, b)
    assert not integral_representation_check(TropLen(1), LEBESGUE, bc((0, 5), (0, 3)))


def test_hilbert_invariance_examples():
    split = bc((0, 1), (1, 2))
    whole = bc((0, 2))
    assert hilbert_invariance_check(LpHilbert(1), barcode_to_grid(split), barcode_to_grid(whole))
    assert not hilbert_invariance_check(ShiftAmp(1.0), split, whole)
    assert eval_barcode(ShiftAmp(1.0), split) == 1 and eval_barcode(ShiftAmp(1.0), whole) == 2
    assert hilbert_invariance_check(LpHilbert(2), barcode_to_grid(whole), barcode_to_grid(whole))
    with pytest.raises(ValueError):
        hilbert_invariance_check(LpHilbert(1), split, bc((0, 3)))


def test_tropical_sigma10_examples():
    assert tropical_sigma10(bc((1, 4)), 1, 1) == 1
    assert tropical_sigma10(bc((2, 4)), 1, 1) == 2


def test_c_tau_examples():
    for k in (1, 2, 4):
        g = GridGeometry(((0, 1 / k), (0,)))
        Mk = direct_sum(*[interval_module(g, (0, 0), (0, None))] * k)
        assert c_tau_rank(Mk, Face(0), LEBESGUE) == pytest.approx(1.0)
    g2 = GridGeometry(((0, 1), (0, 1)))
    assert c_tau_rank(interval_module(g2, (0, 0)), Face(0)) == 0
    assert c_tau_rank(interval_module(g2, (0, 0)), Face([0, 1])) == 0
    unit = GridGeometry(((0, 1, 2, 3, 4), (0,)))
    stripe = interval_module(unit, (2, 0), (3, None))
    assert c_tau_rank(stripe, Face(0), COUNTING) == 2


def test_counting_content_counts_lattice_points():
    g = GridGeometry(((0, 0.5, 2.5),))
    w = COUNTING.cell_weights(g)
    assert list(w) == [1, 2, INF]


def test_custom_content():
    g = GridGeometry(((0, 1, 2),))
    c = Content.custom(g, [2.0, 0.5, 0.0])
    M = interval_module(g, (0,))
    assert eval_grid(LpHilbert(1, c), M) == 2.5
    with pytest.raises(ValueError):
        eval_grid(LpHilbert(1, c), interval_module(GridGeometry(((0, 1),)), (0,)))


# ---------------------------------------------------------------- properties

finite_barcodes = st.lists(
    st.tuples(st.integers(0, 40), st.integers(0, 20)).map(lambda t: (t[0] / 4, (t[0] + t[1]) / 4)),
    max_size=7).map(Barcode)


@given(finite_barcodes)
def test_pnorm_non_increasing_in_p(b):
    vals = [eval_barcode(PNorm(p), b, exact=True) for p in (1, 1.5, 2, 3, INF)]
    for x, y in zip(vals, vals[1:]):
        assert float(y) <= float(x) * (1 + 1e-12)


@given(finite_barcodes)
def test_trop_monotone_and_bounded(b):
    vals = [eval_barcode(TropLen(k), b, exact=True) for k in range(1, 9)]
    assert vals == sorted(vals)
    rho1 = eval_barcode(PNorm(1), b, exact=True)
    assert all(v <= rho1 for v in vals)
    assert eval_barcode(TropLen(max(len(b), 1)), b, exact=True) == rho1


@given(finite_barcodes)
def test_scalar_shift_equals_rho_inf_on_both_routes(b):
    rho_inf = eval_barcode(PNorm(INF), b, exact=True)
    assert eval_barcode(ShiftAmp(1.0), b, exact=True) == rho_inf
    assert eval_grid(ShiftAmp(1.0), barcode_to_grid(b), exact=True) == rho_inf


@given(finite_barcodes)
def test_magnitude_below_totpers(b):
    assert eval_barcode(Magnitude(), b) <= eval_barcode(TotPers(), b) + 1e-12


def test_magnitude_needs_nonnegative_births():
    # e^1 - e^0 > 1: the bound fails below 0
    b = bc((-1, 0))
    assert eval_barcode(Magnitude(), b) > eval_barcode(TotPers(), b)


@given(finite_barcodes, finite_barcodes)
def test_direct_sum_rules(a, b):
    s = a + b
    for p in (1, 2, 3):
        lhs = float(eval_barcode(PNorm(p), s, exact=True)) ** p
        rhs = (float(eval_barcode(PNorm(p), a, exact=True)) ** p
               + float(eval_barcode(PNorm(p), b, exact=True)) ** p)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
    assert eval_barcode(ShiftAmp(1.0), s) == max(eval_barcode(ShiftAmp(1.0), a),
                                                  eval_barcode(ShiftAmp(1.0), b))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_grid_direct_sum_rules(s1, s2):
    M = random_module(s1, n=2)
    N = random_module(s2, geometry=M.geometry)
    S = direct_sum(M, N)
    assert eval_grid(MaxDim(), S) <= eval_grid(MaxDim(), M) + eval_grid(MaxDim(), N)
    sp = ShiftAmp((1, 2), "l2")
    assert eval_grid(sp, S, exact=True) == max(eval_grid(sp, M, exact=True),
                                               eval_grid(sp, N, exact=True))
    for X in (M, N):
        assert evaluate(LpHilbert(1), X) <= evaluate(LpHilbert(1), S)


def test_maxdim_direct_sum_of_intervals():
    g = GridGeometry(((0, 1), (0, 1)))
    A = interval_module(g, (0, 0))
    B = interval_module(g, (1, 1))
    assert eval_grid(MaxDim(), direct_sum(A, B)) == 2
    assert eval_grid(MaxDim(), direct_sum(A, A)) == 2 * eval_grid(MaxDim(), A)
