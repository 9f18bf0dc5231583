"""Collocation points and assembly of the interpolation and fractional Laplacian matrices.

For a field ``u_h = sum_k N_k(F^{-1}(x)) c_k`` the discrete fractional
Laplacian at a point ``x`` is

    c_{s,2} [ A u(x) - sum_ij (2 pi w_i / (m r_i^{1+2s})) u(x + xi_ij) + B Lap_h u(x) ]

where ``Lap_h`` is the fourth-order nine-point Laplacian with step ``h`` and
terms with ``x + xi_ij`` outside the domain vanish (the field is extended by
zero). Every term is linear in ``c``, so each point yields one dense row.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import AssemblyError, DomainError, NotInDomain
from .linalg import SparseRow, rows_to_dense
from .quadrature import coefficient_A, coefficient_B, polar_rule
from .special import check_order, normalization_constant

__all__ = [
    "DiscretizationParams",
    "CollocationSet",
    "OperatorPair",
    "collocation_points",
    "basis_row",
    "interpolation_matrix",
    "stencil_points",
    "FractionalLaplacian",
    "fractional_laplacian_row",
    "fractional_laplacian_matrix",
    "operator_key",
    "save_operator",
    "load_operator",
]

LOCATE_TOL = 1e-13
_SEED_GRID = 65
_LINEAR_GUESS_RADIUS = 0.05

# fourth-order second difference at offsets -2h, -h, +h, +2h (center -5/2)
_STENCIL_OFFSETS = (-2.0, -1.0, 1.0, 2.0)
_STENCIL_WEIGHTS = (-1.0 / 12.0, 4.0 / 3.0, 4.0 / 3.0, -1.0 / 12.0)
_STENCIL_CENTER = -5.0 / 2.0


@dataclass(frozen=True)
class DiscretizationParams:
    """Fractional order plus window, stencil and quadrature settings.

    ``tail`` adds the exact contribution of ``|y| > R`` for a point whose
    field vanishes beyond distance ``R``; off by default, so the integral is
    simply truncated at ``R`` (relative error of order ``R^{-2s}``).
    """

    s: float
    a: float = 0.1
    h: float = 0.001
    R: float = 20.0
    n: int = 1000
    m: int = 20
    tail: bool = False

    def __post_init__(self):
        check_order(self.s)
        if not self.a > 0:
            raise DomainError(f"window size must be positive, got {self.a}")
        if not self.h > 0:
            raise DomainError(f"stencil step must be positive, got {self.h}")
        if not self.R > self.a:
            raise DomainError(f"truncation radius {self.R} must exceed window size {self.a}")
        if int(self.n) < 1 or int(self.m) < 3:
            raise DomainError(f"need n >= 1 and m >= 3, got n={self.n}, m={self.m}")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class CollocationSet:
    """Greville collocation points in vec order (``u`` index fastest)."""

    params: np.ndarray
    points: np.ndarray
    boundary: np.ndarray
    interior: np.ndarray
    shape: tuple

    def __len__(self):
        return self.params.shape[0]


@dataclass(eq=False)
class OperatorPair:
    """Interpolation rows ``M`` and the dense discrete fractional Laplacian ``L``."""

    M: list
    L: np.ndarray
    points: CollocationSet

    @property
    def size(self):
        return self.L.shape[0]

    def M_dense(self):
        return rows_to_dense(self.M, self.size)


def collocation_points(surface):
    """Tensor grid of Greville abscissae and its boundary/interior split."""
    p, q = surface.degrees
    if p < 1 or q < 1:
        raise DomainError("collocation needs degrees >= 1")
    gu, gv = surface.greville_grid()
    n_u, n_v = gu.size, gv.size
    uu, vv = np.meshgrid(gu, gv, indexing="xy")  # [j, i] -> vec index i + n_u * j
    params = np.column_stack([uu.ravel(), vv.ravel()])
    ii, jj = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    on_edge = (ii == 0) | (ii == n_u - 1) | (jj == 0) | (jj == n_v - 1)
    points = surface.map_many(params[:, 0], params[:, 1])
    for arr in (params, points):
        arr.flags.writeable = False
    return CollocationSet(params, points, np.flatnonzero(on_edge),
                          np.flatnonzero(~on_edge), (n_u, n_v))


def _row_from_local(cols, vals):
    order = np.argsort(cols)
    cols, vals = cols[order], vals[order]
    keep = vals != 0.0
    return SparseRow(cols[keep], vals[keep])


def basis_row(surface, x, tol=LOCATE_TOL):
    """Sparse row of basis values at physical point ``x``; empty outside the domain."""
    x = np.asarray(x, dtype=float).reshape(2)
    if not surface.contains(x):
        return SparseRow.zero()
    try:
        u, v = surface.inverse_map(x, tol)
    except NotInDomain as exc:
        raise AssemblyError(x, exc.reason) from exc
    cols, vals = surface.eval_rows([u], [v])
    return _row_from_local(cols[0], vals[0])


def interpolation_matrix(surface, points):
    """Rows of basis values at the collocation points (exact parameters, no inversion)."""
    cols, vals = surface.eval_rows(points.params[:, 0], points.params[:, 1])
    return [_row_from_local(c, v) for c, v in zip(cols, vals)]


def stencil_points(x, h):
    """Nine evaluation points of the fourth-order Laplacian and their weights.

    Returns
    -------
    points : ndarray, shape (9, 2)
        ``x`` first, then ``x - 2h e1, x - h e1, x + h e1, x + 2h e1`` and the
        same along ``e2``.
    weights : ndarray, shape (9,)
        Stencil coefficients including the ``1 / h^2`` factor.
    """
    if not h > 0:
        raise DomainError(f"stencil step must be positive, got {h}")
    x = np.asarray(x, dtype=float).reshape(2)
    pts = [x.copy()]
    wts = [2.0 * _STENCIL_CENTER]
    for axis in range(2):
        for off, w in zip(_STENCIL_OFFSETS, _STENCIL_WEIGHTS):
            y = x.copy()
            y[axis] += off * h
            pts.append(y)
            wts.append(w)
    return np.array(pts), np.array(wts) / (h * h)


class FractionalLaplacian:
    """Row evaluator for the discrete fractional Laplacian on one surface.

    Precomputes the quadrature rule, the scalar coefficients and seed tables
    for the inverse map; :meth:`row` is then a pure function of the point and
    safe to call from several threads.
    """

    def __init__(self, surface, params, rule=None, tol=LOCATE_TOL):
        self.surface = surface
        self.params = params
        self.tol = tol
        if rule is None:
            rule = polar_rule(params.n, params.m, params.R)
        self.rule = rule
        s = params.s
        self.c_s = normalization_constant(s)
        self.A = coefficient_A(rule, s)
        if params.tail:
            # far field |y| > R: u(x + y) = 0 once R exceeds the domain's reach from x
            self.A += math.pi * rule.R ** (-2.0 * s) / s
        self.B = coefficient_B(rule, s, params.a)
        self.radial_coef = 2.0 * math.pi * rule.radial_weights / (rule.m * rule.radii ** (1.0 + 2.0 * s))
        self.directions = rule.directions
        # the domain lies in the convex hull of the control net
        P = surface.control_points.reshape(-1, 2)
        self._bbox = (P.min(axis=0), P.max(axis=0))
        g = np.linspace(0.0, 1.0, _SEED_GRID)
        uu, vv = np.meshgrid(g, g, indexing="ij")
        self._seed_params = np.column_stack([uu.ravel(), vv.ravel()])
        self._seed_tree = cKDTree(surface.map_many(self._seed_params[:, 0], self._seed_params[:, 1]))

    def _seeds(self, y):
        _, idx = self._seed_tree.query(y)
        return self._seed_params[idx]

    def _locate_near(self, x, uv_x, y):
        # initial guesses: linearization about x for nearby points, seed table otherwise
        F, J = self.surface.map_and_jacobian([uv_x[0]], [uv_x[1]])
        J = J[0]
        init = self._seeds(y)
        d = y - x
        near = np.hypot(d[:, 0], d[:, 1]) < _LINEAR_GUESS_RADIUS
        if np.any(near) and abs(np.linalg.det(J)) > 1e-12:
            lin = uv_x + np.linalg.solve(J, d[near].T).T
            inside = np.all((lin >= 0.0) & (lin <= 1.0), axis=1)
            sel = np.flatnonzero(near)[inside]
            init[sel] = lin[inside]
        uv, ok = self.surface.locate(y, self.tol, initial=init)
        if not np.all(ok):
            bad = y[np.flatnonzero(~ok)[0]]
            raise AssemblyError(bad, f"inverse map failed near collocation point {tuple(x)}")
        return uv

    def _inside_candidates(self, x):
        lo, hi = self._bbox
        corner = np.maximum(np.abs(lo - x), np.abs(hi - x))
        far = math.hypot(corner[0], corner[1]) * (1.0 + 1e-12)
        n_r = int(np.searchsorted(self.rule.radii, far, side="right"))
        y = x[None, None, :] + self.rule.radii[:n_r, None, None] * self.directions[None, :, :]
        y = y.reshape(-1, 2)
        coef = np.repeat(self.radial_coef[:n_r], self.rule.m)
        if self.surface.hint is not None:
            inside = self.surface.hint.contains(y)
            return y[inside], coef[inside], None
        uv, ok = self.surface.locate(y, self.tol, initial=self._seeds(y))
        return y[ok], coef[ok], uv[ok]

    def row(self, x, uv_x=None):
        """Dense row over all basis coefficients at physical point ``x``.

        Parameters
        ----------
        x : array_like, shape (2,)
            Point inside the domain.
        uv_x : array_like, shape (2,), optional
            Known parameters of ``x`` (collocation points); located otherwise.
        """
        surface = self.surface
        x = np.asarray(x, dtype=float).reshape(2)
        if uv_x is None:
            if not surface.contains(x):
                raise DomainError(f"point {tuple(x)} lies outside the domain")
            try:
                uv_x = np.array(surface.inverse_map(x, self.tol))
            except NotInDomain as exc:
                raise AssemblyError(x, exc.reason) from exc
        uv_x = np.asarray(uv_x, dtype=float).reshape(2)
        n_dof = surface.n_dof

        st_pts, st_w = stencil_points(x, self.params.h)
        st_pts, st_w = st_pts[1:], st_w[1:]
        keep = surface.contains_many(st_pts)
        st_pts, st_w = st_pts[keep], st_w[keep]
        st_uv = self._locate_near(x, uv_x, st_pts) if st_pts.size else np.empty((0, 2))

        y, coef, y_uv = self._inside_candidates(x)
        if y_uv is None:
            y_uv = self._locate_near(x, uv_x, y) if y.size else np.empty((0, 2))

        all_uv = np.vstack([uv_x[None, :], st_uv, y_uv])
        cols, vals = surface.eval_rows(all_uv[:, 0], all_uv[:, 1])
        ns = st_pts.shape[0]
        center = 2.0 * _STENCIL_CENTER / self.params.h**2
        # summation order: stencil (center first), then A u(x), then quadrature
        weights = np.concatenate([
            [self.B * center],
            self.B * st_w,
            [self.A],
            -coef,
        ])
        block_rows = np.concatenate([[0], 1 + np.arange(ns), [0], 1 + ns + np.arange(y.shape[0])])
        c = cols[block_rows].ravel()
        w = (weights[:, None] * vals[block_rows]).ravel()
        return self.c_s * np.bincount(c, weights=w, minlength=n_dof)


def fractional_laplacian_row(surface, x, params, rule=None):
    """Dense row of the discrete fractional Laplacian at a point ``x`` inside the domain."""
    return FractionalLaplacian(surface, params, rule).row(x)


def _resolve_threads(threads):
    if threads is None:
        threads = int(os.environ.get("FRAC_IGA_THREADS", "1") or 1)
    return max(1, int(threads))


def fractional_laplacian_matrix(surface, points, params, rule=None, threads=None):
    """Assemble ``M`` and ``L``; boundary rows of ``L`` are left zero.

    Rows are independent and each is summed in a fixed order, so the result is
    bit-identical for every thread count.
    """
    op = FractionalLaplacian(surface, params, rule)
    n_dof = surface.n_dof
    L = np.zeros((len(points), n_dof))

    def work(k):
        L[k] = op.row(points.points[k], points.params[k])

    threads = _resolve_threads(threads)
    if threads == 1:
        for k in points.interior:
            work(k)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, points.interior))
    return OperatorPair(interpolation_matrix(surface, points), L, points)


# -- binary operator cache ------------------------------------------------

_MAGIC = b"FIGAOP01"


def operator_key(surface, params, level=None):
    """Content hash identifying an assembled operator."""
    doc = {"surface": surface.to_dict(), "params": params.to_dict(), "level": level}
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def save_operator(path, pair, key):
    """Write ``(M, L)`` as little-endian float64 behind a dimension/hash header."""
    n_rows, n_cols = pair.L.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<QQ", n_rows, n_cols))
        fh.write(key.encode("ascii").ljust(64, b"\0"))
        fh.write(pair.M_dense().astype("<f8").tobytes())
        fh.write(pair.L.astype("<f8").tobytes())


def load_operator(path, key=None):
    """Read a cached ``(M_dense, L)``; returns None if the key does not match."""
    path = Path(path)
    if not path.exists():
        return None
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            return None
        n_rows, n_cols = struct.unpack("<QQ", fh.read(16))
        stored = fh.read(64).rstrip(b"\0").decode("ascii")
        if key is not None and stored != key:
            return None
        data = np.frombuffer(fh.read(), dtype="<f8")
    size = n_rows * n_cols
    if data.size != 2 * size:
        return None
    M = data[:size].reshape(n_rows, n_cols).astype(float)
    L = data[size:].reshape(n_rows, n_cols).astype(float)
    return M, L
