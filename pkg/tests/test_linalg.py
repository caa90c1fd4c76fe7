import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from persamp import linalg as la


def test_rank_examples():
    assert la.rank(np.zeros((0, 0), dtype=np.int64)) == 0
    assert la.rank(np.eye(3, dtype=np.int64)) == 3
    assert la.rank([[1, 1], [1, 1]]) == 1


def test_kernel_examples():
    assert la.kernel_basis(np.eye(3, dtype=np.int64)).shape == (3, 0)
    k = la.kernel_basis(np.zeros((2, 3), dtype=np.int64))
    assert k.shape == (3, 3) and la.rank(k) == 3
    k = la.kernel_basis([[1, 1]])
    assert k.tolist() == [[1], [1]]


def test_kernel_oracle_enumeration():
    # every vector of F_2^3 in the null space is in the span of the basis
    m = np.array([[1, 0, 1], [0, 1, 1]])
    k = la.kernel_basis(m)
    null = {v for v in itertools.product(range(2), repeat=3)
            if not (m @ np.array(v) % 2).any()}
    span = {tuple(int(x) for x in (k @ np.array(c)) % 2)
            for c in itertools.product(range(2), repeat=k.shape[1])}
    assert null == span


def test_solve_in_span_examples():
    t = np.array([[1, 0], [1, 1]])
    assert la.solve_in_span(np.eye(2, dtype=np.int64), t).tolist() == t.tolist()
    with pytest.raises(la.NoSolution):
        la.solve_in_span(np.zeros((2, 0), dtype=np.int64), [[1], [0]])
    assert la.solve_in_span([[1], [1]], [[1], [1]]).tolist() == [[1]]
    with pytest.raises(la.NoSolution):
        la.solve_in_span([[1], [1]], [[1], [0]])


def test_quotient_basis_examples():
    assert la.quotient_basis(np.zeros((2, 0), dtype=np.int64), 2).shape == (2, 2)
    assert la.quotient_basis(np.eye(2, dtype=np.int64), 2).shape == (2, 0)
    q = la.quotient_basis([[1], [1]], 2)
    assert q.shape == (2, 1)
    assert la.rank(np.hstack([[[1], [1]], q])) == 2
    with pytest.raises(ValueError):
        la.quotient_basis([[1], [1], [0]], 2)


def test_inverse_and_mod_p():
    m = np.array([[1, 2], [0, 1]])
    inv = la.inverse(m, 3)
    assert (la.matmul(m, inv, 3) == np.eye(2, dtype=np.int64)).all()
    with pytest.raises(np.linalg.LinAlgError):
        la.inverse([[1, 1], [1, 1]])


def test_rank_over_f3_differs_from_f2():
    m = [[1, 1], [1, 3]]
    assert la.rank(m, 2) == 1
    assert la.rank(m, 3) == 2


def _mats(p):
    return st.tuples(st.integers(0, 5), st.integers(0, 5)).flatmap(
        lambda s: arrays(np.int64, s, elements=st.integers(0, p - 1)))


@settings(max_examples=150, deadline=None)
@given(st.sampled_from([2, 3, 5]).flatmap(lambda p: st.tuples(st.just(p), _mats(p))))
def test_rank_nullity_and_kernel(pm):
    p, m = pm
    k = la.kernel_basis(m, p)
    assert la.rank(m, p) + k.shape[1] == m.shape[1]
    assert not la.matmul(m, k, p).any()
    assert la.rank(k, p) == k.shape[1]


@settings(max_examples=150, deadline=None)
@given(st.sampled_from([2, 3]).flatmap(lambda p: st.tuples(st.just(p), _mats(p))))
def test_quotient_basis_completes(pm):
    p, sub = pm
    q = la.quotient_basis(sub, sub.shape[0], p)
    full = np.hstack([sub, q]) if sub.size or q.size else np.zeros((sub.shape[0], 0), np.int64)
    assert la.rank(full, p) == sub.shape[0]
    assert q.shape[1] == sub.shape[0] - la.rank(sub, p)


@settings(max_examples=100, deadline=None)
@given(_mats(2), st.data())
def test_solve_in_span_roundtrip(basis, data):
    coeff = data.draw(arrays(np.int64, (basis.shape[1], 2), elements=st.integers(0, 1)))
    target = la.matmul(basis, coeff, 2) if basis.shape[1] else np.zeros((basis.shape[0], 2), np.int64)
    x = la.solve_in_span(basis, target, 2)
    assert (la.matmul(basis, x, 2) == target % 2).all()
