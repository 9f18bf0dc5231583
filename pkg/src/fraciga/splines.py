"""B-spline knot vectors, basis evaluation, Greville abscissae and knot insertion.

Indices are 0-based throughout: a knot vector with ``len(knots) == l + 1``
carries ``n_basis == l - p`` basis functions ``B_0 .. B_{n_basis-1}``.

Evaluation follows the span-local scheme of the NURBS book (algorithms A2.1,
A2.2): for a parameter in knot span ``i`` only ``B_{i-p} .. B_i`` are nonzero
and all of them are produced in a single pass.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError, InsertionError, UnsupportedDegreeError

__all__ = [
    "KnotVector",
    "find_span",
    "find_spans",
    "basis_funs",
    "eval_basis",
    "bspline_basis",
    "bspline_basis_derivative",
    "greville_abscissae",
    "insert_knot",
    "uniform_interior_knots",
]

_TOL = 1e-14


class KnotVector:
    """Open, non-decreasing knot vector on [0, 1] together with its degree.

    Parameters
    ----------
    knots : array_like
        Knot values. The first and last ``degree + 1`` entries must be 0 and 1.
    degree : int
        Polynomial degree ``p >= 0``.
    """

    __slots__ = ("_knots", "_degree")

    def __init__(self, knots, degree):
        knots = np.array(knots, dtype=float)
        degree = int(degree)
        if knots.ndim != 1:
            raise DomainError("knot vector must be one-dimensional")
        if degree < 0:
            raise DomainError(f"degree must be nonnegative, got {degree}")
        if knots.size - degree - 1 < 1:
            raise DomainError(
                f"{knots.size} knots cannot carry a degree-{degree} basis")
        if not np.all(np.isfinite(knots)):
            raise DomainError("knots must be finite")
        if np.any(np.diff(knots) < 0):
            raise DomainError("knots must be non-decreasing")
        if np.any(knots[: degree + 1] != 0.0) or np.any(knots[-(degree + 1):] != 1.0):
            raise DomainError(
                f"open knot vector must start with {degree + 1} zeros and end "
                f"with {degree + 1} ones")
        knots.flags.writeable = False
        self._knots = knots
        self._degree = degree

    @property
    def knots(self):
        return self._knots

    @property
    def degree(self):
        return self._degree

    @property
    def n_basis(self):
        """Number of basis functions, ``l - p``."""
        return self._knots.size - self._degree - 1

    @property
    def interior_knots(self):
        p = self._degree
        return self._knots[p + 1: self._knots.size - p - 1]

    def __len__(self):
        return self._knots.size

    def __eq__(self, other):
        if not isinstance(other, KnotVector):
            return NotImplemented
        return self._degree == other._degree and np.array_equal(self._knots, other._knots)

    def __hash__(self):
        return hash((self._degree, self._knots.tobytes()))

    def __repr__(self):
        return f"KnotVector({self._knots.tolist()}, degree={self._degree})"

    @classmethod
    def open_uniform(cls, degree, n_intervals):
        """Open knot vector with ``n_intervals`` equal knot spans."""
        inner = uniform_interior_knots(n_intervals)
        return cls(np.concatenate([np.zeros(degree + 1), inner, np.ones(degree + 1)]), degree)


def uniform_interior_knots(n_intervals):
    """Interior knots ``j / n_intervals`` for ``j = 1 .. n_intervals - 1``."""
    n_intervals = int(n_intervals)
    if n_intervals < 1:
        raise DomainError("need at least one knot interval")
    return np.arange(1, n_intervals) / n_intervals


def find_span(kv, u):
    """Index ``i`` of the knot span ``[u_i, u_{i+1})`` containing ``u``.

    ``u == 1`` is assigned to the last nonempty span so that evaluation on the
    right boundary is well defined.
    """
    u = float(u)
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"parameter {u} outside [0, 1]")
    return int(find_spans(kv, np.array([u]))[0])


def find_spans(kv, u):
    """Vectorized :func:`find_span`; parameters are clipped into [0, 1]."""
    U = kv.knots
    p = kv.degree
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    spans = np.searchsorted(U, u, side="right") - 1
    return np.clip(spans, p, kv.n_basis - 1)


def _local_basis(U, spans, u, p):
    # Cox-de Boor triangle (NURBS book A2.2) vectorized over points.
    npts = u.shape[0]
    N = np.zeros((npts, p + 1))
    N[:, 0] = 1.0
    left = np.zeros((npts, p + 1))
    right = np.zeros((npts, p + 1))
    for j in range(1, p + 1):
        left[:, j] = u - U[spans + 1 - j]
        right[:, j] = U[spans + j] - u
        saved = np.zeros(npts)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            with np.errstate(divide="ignore", invalid="ignore"):
                temp = np.where(denom != 0.0, N[:, r] / denom, 0.0)
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    return N


def eval_basis(kv, u, derivative=False):
    """Evaluate all nonzero basis functions at an array of parameters.

    Parameters
    ----------
    kv : KnotVector
    u : array_like
        Parameters, clipped into [0, 1].
    derivative : bool, optional
        Also return first derivatives.

    Returns
    -------
    spans : ndarray of int, shape (N,)
        Knot span index; column ``r`` of the value arrays belongs to basis
        function ``spans - p + r``.
    values : ndarray, shape (N, p + 1)
    derivs : ndarray, shape (N, p + 1)
        Only when ``derivative`` is true.
    """
    U = kv.knots
    p = kv.degree
    u = np.clip(np.atleast_1d(np.asarray(u, dtype=float)), 0.0, 1.0)
    spans = find_spans(kv, u)
    values = _local_basis(U, spans, u, p)
    if not derivative:
        return spans, values
    derivs = np.zeros_like(values)
    if p > 0:
        lower = _local_basis(U, spans, u, p - 1)
        for r in range(p + 1):
            j = spans - p + r
            if r >= 1:
                d = U[j + p] - U[j]
                with np.errstate(divide="ignore", invalid="ignore"):
                    derivs[:, r] += np.where(d != 0.0, p * lower[:, r - 1] / d, 0.0)
            if r <= p - 1:
                d = U[j + p + 1] - U[j + 1]
                with np.errstate(divide="ignore", invalid="ignore"):
                    derivs[:, r] -= np.where(d != 0.0, p * lower[:, r] / d, 0.0)
    return spans, values, derivs


def basis_funs(kv, u):
    """Span index and the ``p + 1`` nonzero basis values at a scalar ``u``."""
    span = find_span(kv, u)
    _, values = eval_basis(kv, np.array([float(u)]))
    return span, values[0]


def _check_index(kv, i):
    if not 0 <= i < kv.n_basis:
        raise DomainError(f"basis index {i} outside 0..{kv.n_basis - 1}")


def bspline_basis(kv, i, u):
    """Value of ``B_{i,p}(u)``."""
    _check_index(kv, i)
    span, values = basis_funs(kv, u)
    r = i - (span - kv.degree)
    return float(values[r]) if 0 <= r <= kv.degree else 0.0


def bspline_basis_derivative(kv, i, u):
    """First derivative ``B'_{i,p}(u)``; one-sided at the ends of [0, 1]."""
    _check_index(kv, i)
    span = find_span(kv, u)
    _, _, derivs = eval_basis(kv, np.array([float(u)]), derivative=True)
    r = i - (span - kv.degree)
    return float(derivs[0, r]) if 0 <= r <= kv.degree else 0.0


def greville_abscissae(kv):
    """Greville abscissae ``(u_{i+1} + ... + u_{i+p}) / p`` for every basis function."""
    p = kv.degree
    if p == 0:
        raise UnsupportedDegreeError("Greville abscissae need degree >= 1")
    U = kv.knots
    csum = np.concatenate([[0.0], np.cumsum(U)])
    idx = np.arange(kv.n_basis)
    g = (csum[idx + p + 1] - csum[idx + 1]) / p
    # averaging repeated knots may leave 1 - 1e-16 at the ends
    g[0], g[-1] = 0.0, 1.0
    return g


def insert_knot(kv, points, ubar):
    """Insert a single knot ``ubar`` (Boehm's algorithm).

    Parameters
    ----------
    kv : KnotVector
    points : array_like, shape (n_basis, ...)
        Control points along axis 0. For NURBS these are projective points
        ``[w * X, w]``; trailing axes are carried along unchanged.
    ubar : float
        New knot, strictly inside (0, 1).

    Returns
    -------
    KnotVector, ndarray
        Refined knot vector and the ``n_basis + 1`` new control points.
    """
    ubar = float(ubar)
    P = np.asarray(points, dtype=float)
    p = kv.degree
    n = kv.n_basis
    if P.shape[0] != n:
        raise InsertionError(f"expected {n} control points, got {P.shape[0]}")
    if not 0.0 < ubar < 1.0:
        raise InsertionError(f"knot {ubar} must lie strictly inside (0, 1)")
    U = kv.knots
    if np.count_nonzero(np.abs(U - ubar) <= _TOL) >= p:
        raise InsertionError(f"knot {ubar} already has full multiplicity {p}")
    k = int(find_spans(kv, np.array([ubar]))[0])
    Q = np.empty((n + 1,) + P.shape[1:])
    Q[: k - p + 1] = P[: k - p + 1]
    Q[k + 1:] = P[k:]
    for i in range(k - p + 1, k + 1):
        alpha = (ubar - U[i]) / (U[i + p] - U[i])
        Q[i] = alpha * P[i] + (1.0 - alpha) * P[i - 1]
    new_knots = np.insert(U, k + 1, ubar)
    return KnotVector(new_knots, p), Q
