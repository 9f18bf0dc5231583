"""Bivariate NURBS surfaces mapping the unit square onto a physical domain.

Control points are stored as an ``(n_u, n_v, 2)`` array indexed ``[i, j]``
with ``i`` running along the ``u`` direction. Flattened ("vec") basis indices
follow the column-major convention ``k = i + n_u * j`` so that the ``u`` index
varies fastest.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, NotInDomain
from .splines import (KnotVector, eval_basis, greville_abscissae, insert_knot,
                      uniform_interior_knots)

__all__ = [
    "MembershipHint",
    "NurbsSurface",
    "unit_disk",
    "square",
    "refine_uniform",
    "refine_dyadic",
]

MAX_ITER = 50
SINGULAR_DET = 1e-14
_RESTART_GRID = 5
HINT_SLACK = 1e-14


@dataclass(frozen=True)
class MembershipHint:
    """Analytic inside-test for a shipped geometry.

    ``kind`` is ``"disk"`` (centered at the origin, ``size`` = radius) or
    ``"square"`` (centered at the origin, ``size`` = half width).
    """

    kind: str
    size: float

    def __post_init__(self):
        if self.kind not in ("disk", "square"):
            raise DomainError(f"unknown membership hint {self.kind!r}")
        if not self.size > 0:
            raise DomainError("membership hint size must be positive")

    def contains(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        # slack for boundary images that land a few ulps outside
        limit = self.size * (1.0 + HINT_SLACK)
        if self.kind == "disk":
            return np.hypot(pts[:, 0], pts[:, 1]) <= limit
        return np.max(np.abs(pts), axis=1) <= limit

    def to_dict(self):
        key = "radius" if self.kind == "disk" else "half_width"
        return {"kind": self.kind, key: self.size}

    @classmethod
    def from_dict(cls, d):
        if d is None:
            return None
        kind = d.get("kind")
        size = d.get("radius" if kind == "disk" else "half_width")
        if size is None:
            raise DomainError(f"membership hint {d!r} lacks its size")
        return cls(kind, float(size))


class NurbsSurface:
    """Tensor-product NURBS map ``F: [0, 1]^2 -> R^2``.

    Parameters
    ----------
    kv_u, kv_v : KnotVector
        Knot vectors with degrees ``p`` and ``q``.
    control_points : array_like, shape (n_u, n_v, 2)
    weights : array_like, shape (n_u, n_v)
        Strictly positive.
    hint : MembershipHint, optional
        Analytic membership test; without it membership falls back to
        inverse-map success.
    """

    def __init__(self, kv_u, kv_v, control_points, weights, hint=None):
        P = np.array(control_points, dtype=float)
        W = np.array(weights, dtype=float)
        shape = (kv_u.n_basis, kv_v.n_basis)
        if P.shape != shape + (2,):
            raise DomainError(f"control net shape {P.shape} does not match {shape + (2,)}")
        if W.shape != shape:
            raise DomainError(f"weight grid shape {W.shape} does not match {shape}")
        if not np.all(W > 0):
            raise DomainError("weights must be strictly positive")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(W))):
            raise DomainError("control net must be finite")
        P.flags.writeable = False
        W.flags.writeable = False
        self.kv_u = kv_u
        self.kv_v = kv_v
        self.control_points = P
        self.weights = W
        self.hint = hint
        self._seeds = None

    # -- sizes -----------------------------------------------------------

    @property
    def degrees(self):
        return self.kv_u.degree, self.kv_v.degree

    @property
    def shape(self):
        return self.kv_u.n_basis, self.kv_v.n_basis

    @property
    def n_dof(self):
        return self.kv_u.n_basis * self.kv_v.n_basis

    def vec_index(self, i, j):
        return i + self.kv_u.n_basis * j

    # -- vectorized evaluation -------------------------------------------

    def _local(self, u, v, derivative):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        v = np.atleast_1d(np.asarray(v, dtype=float))
        p, q = self.degrees
        if derivative:
            su, bu, dbu = eval_basis(self.kv_u, u, derivative=True)
            sv, bv, dbv = eval_basis(self.kv_v, v, derivative=True)
        else:
            su, bu = eval_basis(self.kv_u, u)
            sv, bv = eval_basis(self.kv_v, v)
            dbu = dbv = None
        iu = su[:, None] - p + np.arange(p + 1)
        jv = sv[:, None] - q + np.arange(q + 1)
        return iu, jv, bu, bv, dbu, dbv

    def eval_rows(self, u, v):
        """Column indices and values of the nonzero NURBS basis functions.

        Returns
        -------
        cols : ndarray of int, shape (N, (p+1)(q+1))
            vec-ordered basis indices.
        vals : ndarray, shape (N, (p+1)(q+1))
        """
        iu, jv, bu, bv, _, _ = self._local(u, v, False)
        W = self.weights[iu[:, :, None], jv[:, None, :]]
        num = W * bu[:, :, None] * bv[:, None, :]
        vals = num / num.sum(axis=(1, 2))[:, None, None]
        cols = iu[:, :, None] + self.kv_u.n_basis * jv[:, None, :]
        npts = vals.shape[0]
        return cols.reshape(npts, -1), vals.reshape(npts, -1)

    def eval_gradients(self, u, v):
        """Like :meth:`eval_rows` but also returns ``dN/du`` and ``dN/dv``."""
        iu, jv, bu, bv, dbu, dbv = self._local(u, v, True)
        W = self.weights[iu[:, :, None], jv[:, None, :]]
        num = W * bu[:, :, None] * bv[:, None, :]
        num_u = W * dbu[:, :, None] * bv[:, None, :]
        num_v = W * bu[:, :, None] * dbv[:, None, :]
        S = num.sum(axis=(1, 2))[:, None, None]
        S_u = num_u.sum(axis=(1, 2))[:, None, None]
        S_v = num_v.sum(axis=(1, 2))[:, None, None]
        vals = num / S
        d_u = (num_u * S - num * S_u) / S**2
        d_v = (num_v * S - num * S_v) / S**2
        cols = iu[:, :, None] + self.kv_u.n_basis * jv[:, None, :]
        npts = vals.shape[0]
        return (cols.reshape(npts, -1), vals.reshape(npts, -1),
                d_u.reshape(npts, -1), d_v.reshape(npts, -1))

    def map_many(self, u, v):
        """Physical points ``F(u, v)`` for parameter arrays, shape (N, 2)."""
        cols, vals = self.eval_rows(u, v)
        P = self.control_points.transpose(1, 0, 2).reshape(-1, 2)
        return np.einsum("nk,nkd->nd", vals, P[cols])

    def map_and_jacobian(self, u, v):
        """``F`` (N, 2) and ``grad F`` (N, 2, 2) with ``J[:, a, 0] = dF_a/du``."""
        cols, vals, d_u, d_v = self.eval_gradients(u, v)
        P = self.control_points.transpose(1, 0, 2).reshape(-1, 2)[cols]
        F = np.einsum("nk,nkd->nd", vals, P)
        J = np.stack([np.einsum("nk,nkd->nd", d_u, P),
                      np.einsum("nk,nkd->nd", d_v, P)], axis=-1)
        return F, J

    # -- scalar API ------------------------------------------------------

    @staticmethod
    def _check_param(u, v):
        if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
            raise DomainError(f"parameter ({u}, {v}) outside the unit square")

    def _split(self, k):
        n_u = self.kv_u.n_basis
        return int(k % n_u), int(k // n_u)

    def basis(self, u, v):
        """The ``(p+1)(q+1)`` potentially nonzero values as ``[((k, l), N_kl), ...]``."""
        self._check_param(u, v)
        cols, vals = self.eval_rows([u], [v])
        return [(self._split(k), float(x)) for k, x in zip(cols[0], vals[0])]

    def basis_gradient(self, u, v):
        """``[((k, l), dN/du, dN/dv), ...]`` by the quotient rule."""
        self._check_param(u, v)
        cols, _, d_u, d_v = self.eval_gradients([u], [v])
        return [(self._split(k), float(a), float(b))
                for k, a, b in zip(cols[0], d_u[0], d_v[0])]

    def map_to_physical(self, u, v):
        self._check_param(u, v)
        return self.map_many([u], [v])[0]

    def jacobian(self, u, v):
        self._check_param(u, v)
        return self.map_and_jacobian([u], [v])[1][0]

    # -- inversion -------------------------------------------------------

    def _restart_seeds(self):
        if self._seeds is None:
            g = (np.arange(_RESTART_GRID) + 0.5) / _RESTART_GRID
            uu, vv = np.meshgrid(g, g, indexing="ij")
            params = np.column_stack([uu.ravel(), vv.ravel()])
            self._seeds = (params, self.map_many(params[:, 0], params[:, 1]))
        return self._seeds

    def _newton(self, x, uv, tol):
        # Gauss-Newton with iterates clamped to the unit square.
        uv = uv.copy()
        ok = np.zeros(len(x), dtype=bool)
        active = np.arange(len(x))
        for _ in range(MAX_ITER + 1):
            if active.size == 0:
                break
            F, J = self.map_and_jacobian(uv[active, 0], uv[active, 1])
            r = F - x[active]
            res = np.hypot(r[:, 0], r[:, 1])
            done = res <= tol
            ok[active[done]] = True
            det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            bad = ~done & (np.abs(det) < SINGULAR_DET)
            keep = ~done & ~bad
            active, r, J, det = active[keep], r[keep], J[keep], det[keep]
            du = (J[:, 1, 1] * r[:, 0] - J[:, 0, 1] * r[:, 1]) / det
            dv = (J[:, 0, 0] * r[:, 1] - J[:, 1, 0] * r[:, 0]) / det
            uv[active, 0] = np.clip(uv[active, 0] - du, 0.0, 1.0)
            uv[active, 1] = np.clip(uv[active, 1] - dv, 0.0, 1.0)
        return uv, ok

    def locate(self, points, tol=1e-12, initial=None):
        """Vectorized inverse map without membership pre-filtering.

        Parameters
        ----------
        points : array_like, shape (N, 2)
        tol : float
            Residual tolerance ``|F(u, v) - x|``.
        initial : array_like, shape (N, 2), optional
            Starting parameters; defaults to the center of the unit square.

        Returns
        -------
        params : ndarray, shape (N, 2)
        ok : ndarray of bool, shape (N,)
            False where neither the first pass nor the grid restart converged.
        """
        x = np.asarray(points, dtype=float).reshape(-1, 2)
        if initial is None:
            uv0 = np.full_like(x, 0.5)
        else:
            uv0 = np.clip(np.asarray(initial, dtype=float).reshape(-1, 2), 0.0, 1.0)
        uv, ok = self._newton(x, uv0, tol)
        if not np.all(ok):
            miss = np.flatnonzero(~ok)
            seeds, images = self._restart_seeds()
            d = np.linalg.norm(x[miss, None, :] - images[None, :, :], axis=2)
            uv2, ok2 = self._newton(x[miss], seeds[np.argmin(d, axis=1)], tol)
            uv[miss] = uv2
            ok[miss] = ok2
        idx = np.flatnonzero(ok)
        if idx.size:
            uv[idx] = self._polish(x[idx], uv[idx])
        return uv, ok

    def _polish(self, x, uv):
        # one extra Newton step, kept only where it lowers the residual
        F, J = self.map_and_jacobian(uv[:, 0], uv[:, 1])
        r = F - x
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        safe = np.abs(det) >= SINGULAR_DET
        det = np.where(safe, det, 1.0)
        step = np.column_stack([
            (J[:, 1, 1] * r[:, 0] - J[:, 0, 1] * r[:, 1]) / det,
            (J[:, 0, 0] * r[:, 1] - J[:, 1, 0] * r[:, 0]) / det,
        ])
        cand = np.clip(uv - step, 0.0, 1.0)
        r2 = self.map_many(cand[:, 0], cand[:, 1]) - x
        better = safe & (np.hypot(r2[:, 0], r2[:, 1]) < np.hypot(r[:, 0], r[:, 1]))
        return np.where(better[:, None], cand, uv)

    def inverse_map(self, x, tol=1e-12):
        """Parameters ``(u, v)`` with ``|F(u, v) - x| <= tol``.

        Raises
        ------
        NotInDomain
            If the membership hint rejects ``x`` or the iteration fails.
        """
        if not tol > 0:
            raise DomainError("tolerance must be positive")
        x = np.asarray(x, dtype=float).reshape(2)
        if self.hint is not None and not self.hint.contains(x)[0]:
            raise NotInDomain(x, f"rejected by {self.hint.kind} membership test")
        uv, ok = self.locate(x[None, :], tol)
        if not ok[0]:
            raise NotInDomain(x, "Gauss-Newton iteration did not converge")
        return float(uv[0, 0]), float(uv[0, 1])

    def contains_many(self, points, tol=1e-12):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if self.hint is not None:
            return self.hint.contains(pts)
        return self.locate(pts, tol)[1]

    def contains(self, x, tol=1e-12):
        """Whether ``x`` lies in the closed domain."""
        return bool(self.contains_many(np.asarray(x, dtype=float).reshape(1, 2), tol)[0])

    # -- refinement ------------------------------------------------------

    def _projective(self):
        W = self.weights[..., None]
        return np.concatenate([self.control_points * W, W], axis=-1)

    @staticmethod
    def _deproject(Pw):
        return Pw[..., :2] / Pw[..., 2:3], Pw[..., 2]

    def insert_knots(self, u_knots=(), v_knots=()):
        """New surface with the given knots inserted; the geometry is unchanged."""
        Pw = self._projective()
        kv_u, kv_v = self.kv_u, self.kv_v
        for ub in u_knots:
            kv_u, Pw = insert_knot(kv_u, Pw, ub)
        Pw = Pw.transpose(1, 0, 2)
        for vb in v_knots:
            kv_v, Pw = insert_knot(kv_v, Pw, vb)
        P, W = self._deproject(Pw.transpose(1, 0, 2))
        return NurbsSurface(kv_u, kv_v, P, W, self.hint)

    # -- serialization ---------------------------------------------------

    def to_dict(self):
        n_u, n_v = self.shape
        return {
            "degree_u": self.kv_u.degree,
            "degree_v": self.kv_v.degree,
            "knots_u": self.kv_u.knots.tolist(),
            "knots_v": self.kv_v.knots.tolist(),
            "shape": [n_u, n_v],
            "control_points": self.control_points.reshape(-1, 2).tolist(),
            "weights": self.weights.reshape(-1).tolist(),
            "membership_hint": None if self.hint is None else self.hint.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        try:
            kv_u = KnotVector(d["knots_u"], d["degree_u"])
            kv_v = KnotVector(d["knots_v"], d["degree_v"])
            n_u, n_v = d.get("shape", (kv_u.n_basis, kv_v.n_basis))
            P = np.asarray(d["control_points"], dtype=float).reshape(n_u, n_v, 2)
            W = np.asarray(d["weights"], dtype=float).reshape(n_u, n_v)
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed surface document: {exc}") from exc
        return cls(kv_u, kv_v, P, W, MembershipHint.from_dict(d.get("membership_hint")))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def save(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path):
        return cls.from_json(Path(path).read_text())

    def greville_grid(self):
        return greville_abscissae(self.kv_u), greville_abscissae(self.kv_v)

    def __repr__(self):
        return (f"NurbsSurface(degrees={self.degrees}, shape={self.shape}, "
                f"hint={self.hint})")


def unit_disk():
    """Exact single-patch biquadratic unit disk (nine control points)."""
    c = math.sqrt(2.0) / 2.0
    r = math.sqrt(2.0)
    P = np.array([
        [[-c, -c], [-r, 0.0], [-c, c]],
        [[0.0, -r], [0.0, 0.0], [0.0, r]],
        [[c, -c], [r, 0.0], [c, c]],
    ])
    W = np.array([
        [1.0, c, 1.0],
        [c, 1.0, c],
        [1.0, c, 1.0],
    ])
    kv = KnotVector([0, 0, 0, 1, 1, 1], 2)
    return NurbsSurface(kv, kv, P, W, MembershipHint("disk", 1.0))


def square(half_width=1.0):
    """Biquadratic patch whose map is exactly ``(hw (2u - 1), hw (2v - 1))``."""
    hw = float(half_width)
    if not hw > 0:
        raise DomainError(f"half width must be positive, got {half_width}")
    kv = KnotVector([0, 0, 0, 1, 1, 1], 2)
    g = hw * (2.0 * greville_abscissae(kv) - 1.0)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    P = np.stack([xx, yy], axis=-1)
    return NurbsSurface(kv, kv, P, np.ones((3, 3)), MembershipHint("square", hw))


def _missing(existing, target, tol=1e-12):
    return [t for t in target if not np.any(np.abs(existing - t) <= tol)]


def refine_uniform(surface, n_intervals):
    """Insert knots so both directions have knots at every ``j / n_intervals``."""
    target = uniform_interior_knots(n_intervals)
    return surface.insert_knots(_missing(surface.kv_u.interior_knots, target),
                                _missing(surface.kv_v.interior_knots, target))


def refine_dyadic(surface, level):
    """Uniform refinement with interior knots at ``j / 2**level``."""
    if level < 0:
        raise DomainError("refinement level must be nonnegative")
    return refine_uniform(surface, 2**level) if level else surface
