"""Exact linear algebra over a prime field F_p.

Matrices are numpy int64 arrays with entries reduced to ``[0, p)``.  Every
routine reduces its input modulo ``p`` first, so callers may pass arbitrary
integer arrays.  Bases are returned as matrix columns.
"""

import numpy as np

DEFAULT_PRIME = 2

__all__ = [
    "DEFAULT_PRIME",
    "NoSolution",
    "as_matrix",
    "rref",
    "rank",
    "kernel_basis",
    "column_basis",
    "solve_in_span",
    "quotient_basis",
    "inverse",
    "matmul",
    "identity",
    "zeros",
]


class NoSolution(ValueError):
    """Raised when a target does not lie in the span of a basis."""


def as_matrix(m, p=DEFAULT_PRIME, shape=None):
    a = np.asarray(m, dtype=np.int64)
    if shape is not None:
        a = a.reshape(shape)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    return a % p


def zeros(rows, cols):
    return np.zeros((rows, cols), dtype=np.int64)


def identity(n):
    return np.eye(n, dtype=np.int64)


def matmul(a, b, p=DEFAULT_PRIME):
    return (a @ b) % p


def _inv_scalar(x, p):
    return pow(int(x), p - 2, p)


def rref(m, p=DEFAULT_PRIME):
    """Reduced row echelon form with first-nonzero pivoting.

    Returns ``(R, pivots)`` where ``pivots`` lists the pivot column of each
    nonzero row of ``R``.
    """
    a = as_matrix(m, p).copy()
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            a[[r, k]] = a[[k, r]]
        if p != 2 and a[r, c] != 1:
            a[r] = (a[r] * _inv_scalar(a[r, c], p)) % p
        col = a[:, c].copy()
        col[r] = 0
        hit = np.flatnonzero(col)
        if hit.size:
            a[hit] = (a[hit] - np.outer(col[hit], a[r])) % p
        pivots.append(c)
        r += 1
    return a, tuple(pivots)


def rank(m, p=DEFAULT_PRIME):
    a = np.asarray(m)
    if a.size == 0:
        return 0
    return len(rref(a, p)[1])


def kernel_basis(m, p=DEFAULT_PRIME):
    """Columns spanning the null space of ``m``."""
    a = as_matrix(m, p)
    cols = a.shape[1]
    r, pivots = rref(a, p)
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = zeros(cols, len(free))
    for k, f in enumerate(free):
        basis[f, k] = 1
        for i, pc in enumerate(pivots):
            basis[pc, k] = (-r[i, f]) % p
    return basis


def column_basis(m, p=DEFAULT_PRIME):
    """Canonical basis of the column space (reduced, as columns)."""
    a = as_matrix(m, p)
    if a.size == 0:
        return zeros(a.shape[0], 0)
    r, pivots = rref(a.T, p)
    return np.ascontiguousarray(r[: len(pivots)].T)


def solve_in_span(basis, target, p=DEFAULT_PRIME):
    """Return ``X`` with ``basis @ X == target`` (mod p).

    Free variables are set to zero.  Raises :class:`NoSolution` when some
    target column is outside the column span of ``basis``.
    """
    b = as_matrix(basis, p)
    t = as_matrix(target, p)
    if b.shape[0] != t.shape[0]:
        raise ValueError(f"row mismatch: basis has {b.shape[0]} rows, target has {t.shape[0]}")
    k = b.shape[1]
    x = zeros(k, t.shape[1])
    if t.shape[1] == 0:
        return x
    r, pivots = rref(np.hstack([b, t]), p)
    for i, pc in enumerate(pivots):
        if pc >= k:
            raise NoSolution("target is not in the span of the basis")
        x[pc] = r[i, k:]
    return x


def quotient_basis(sub, ambient_dim, p=DEFAULT_PRIME):
    """Standard basis vectors completing the column space of ``sub``.

    Their images form a basis of ``F_p^ambient_dim / span(sub)``.
    """
    s = np.asarray(sub, dtype=np.int64)
    if s.ndim != 2 or (s.size == 0 and s.shape[0] == 0):
        if s.size:
            raise ValueError("sub must be a 2-d matrix")
        return identity(ambient_dim)
    if s.shape[0] != ambient_dim:
        raise ValueError(f"sub has {s.shape[0]} rows, expected {ambient_dim}")
    if s.shape[1] == 0:
        return identity(ambient_dim)
    _, pivots = rref(s.T % p, p)
    keep = [j for j in range(ambient_dim) if j not in set(pivots)]
    return np.ascontiguousarray(identity(ambient_dim)[:, keep])


def inverse(m, p=DEFAULT_PRIME):
    a = as_matrix(m, p)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("inverse needs a square matrix")
    r, pivots = rref(np.hstack([a, identity(n)]), p)
    if pivots[:n] != tuple(range(n)):
        raise np.linalg.LinAlgError("matrix is singular over F_p")
    return np.ascontiguousarray(r[:, n:])
