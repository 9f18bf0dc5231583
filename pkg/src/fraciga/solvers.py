"""Fractional Poisson solver and linearized Crank-Nicolson porous-medium stepper.

Poisson problem: ``(-Delta)^s u = f`` in the domain, ``u = 0`` outside. The
solution is represented by NURBS coefficients ``c``; interior collocation rows
enforce ``L c = f`` and boundary rows enforce ``M c = 0``.

Porous medium: ``u_t + (-Delta)^s (|u|^{m-1} u) = 0``. With interior values
``u`` and ``K = L* M*^{-1}`` (the operator acting on interior values, boundary
coefficients held at zero) one step reads

    u^{n+1} = u^n - (m dt / 2) K(|u^n|^{m-1} (u^n - u^{n-1})) - theta dt K(|u^n|^{m-1} u^n)

with ``theta = 1`` for the ``"cn"`` scheme (Crank-Nicolson with the implicit
power linearized about ``u^n``) and ``theta = 1/2`` for ``"half"``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse.linalg

from .assembly import (
    basis_row,
    collocation_points,
    fractional_laplacian_matrix,
)
from .errors import DomainError, SingularMatrixError, StabilityError
from .linalg import LU, rows_to_csr

__all__ = [
    "PoissonSolution",
    "solve_poisson",
    "PorousOperator",
    "PorousState",
    "porous_step",
    "PorousResult",
    "simulate_porous",
    "SCHEMES",
]

DIVERGENCE_BOUND = 1e3
SCHEMES = {"cn": 1.0, "half": 0.5}


def _sample(f, points):
    vals = np.asarray(f(points), dtype=float)
    if vals.shape == ():
        vals = np.full(points.shape[0], float(vals))
    if vals.shape != (points.shape[0],):
        raise DomainError(f"source returned shape {vals.shape}, expected ({points.shape[0]},)")
    if not np.all(np.isfinite(vals)):
        raise DomainError("source is not finite at every collocation point")
    return vals


@dataclass(eq=False)
class PoissonSolution:
    """Collocation values ``M c``, coefficients ``c`` and the solve residual."""

    values: np.ndarray
    coefficients: np.ndarray
    residual: float
    points: object = None


def solve_poisson(surface, f, params, ops=None, threads=None):
    """Solve the fractional Poisson problem by collocation.

    Parameters
    ----------
    surface : NurbsSurface
    f : callable
        Maps an (N, 2) array of physical points to source values.
    params : DiscretizationParams
    ops : OperatorPair, optional
        Pre-assembled operators for ``surface``; assembled when omitted.
    threads : int, optional
        Assembly worker count.

    Returns
    -------
    PoissonSolution
    """
    if ops is None:
        ops = fractional_laplacian_matrix(surface, collocation_points(surface), params,
                                          threads=threads)
    pts = ops.points
    rhs = _sample(f, pts.points)
    rhs[pts.boundary] = 0.0
    M = ops.M_dense()
    system = ops.L.copy()
    system[pts.boundary] = M[pts.boundary]
    c = LU(system).solve(rhs)
    residual = float(np.max(np.abs(system @ c - rhs))) if rhs.size else 0.0
    return PoissonSolution(M @ c, c, residual, pts)


class PorousOperator:
    """Interior restrictions ``M*``, ``L*`` with ``M*`` factorized once."""

    def __init__(self, ops):
        self.ops = ops
        self.interior = ops.points.interior
        idx = self.interior
        M = rows_to_csr(ops.M, ops.size).tocsc()
        self.M_star = M[idx][:, idx].tocsc()
        self.L_star = np.ascontiguousarray(ops.L[np.ix_(idx, idx)])
        try:
            self._lu = scipy.sparse.linalg.splu(self.M_star) if idx.size else None
        except RuntimeError as exc:
            raise SingularMatrixError(f"interior interpolation matrix is singular: {exc}") from exc

    @property
    def size(self):
        return self.interior.size

    def coefficients(self, values):
        """Full coefficient vector of the field with the given interior values."""
        c = np.zeros(self.ops.size)
        if self.size:
            c[self.interior] = self._lu.solve(np.asarray(values, dtype=float))
        return c

    def apply(self, values):
        """``K v = L* M*^{-1} v``."""
        if not self.size:
            return np.zeros(0)
        return self.L_star @ self._lu.solve(np.asarray(values, dtype=float))


@dataclass(frozen=True, eq=False)
class PorousState:
    """Two consecutive interior value vectors and the stepping parameters."""

    u_prev: np.ndarray
    u_curr: np.ndarray
    n: int
    dt: float
    m_exp: float
    s: float
    scheme: str = "cn"

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"time step must be positive, got {self.dt}")
        if not self.m_exp >= 1:
            raise DomainError(f"exponent must be >= 1, got {self.m_exp}")
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}; choose from {sorted(SCHEMES)}")
        for name in ("u_prev", "u_curr"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise StabilityError(f"non-finite values in {name} at step {self.n}")

    @property
    def t(self):
        return (self.n - 1) * self.dt

    @property
    def min_value(self):
        return float(np.min(self.u_curr)) if self.u_curr.size else 0.0


def porous_step(state, op):
    """Advance one step; the previous field at the first step is zero."""
    u, up = state.u_curr, state.u_prev
    m = state.m_exp
    power = np.abs(u) ** (m - 1.0) if m != 1 else np.ones_like(u)
    theta = SCHEMES[state.scheme]
    du = op.apply(power * (u - up))
    ku = op.apply(power * u)
    u_next = u - (0.5 * m * state.dt) * du - (theta * state.dt) * ku
    return replace(state, u_prev=u, u_curr=u_next, n=state.n + 1)


@dataclass(eq=False)
class PorousResult:
    """Probe trajectory (rows: step, columns: probes) and the final state."""

    times: np.ndarray
    probes: np.ndarray
    trajectory: np.ndarray
    final: PorousState
    operator: PorousOperator = field(repr=False)

    def final_field(self):
        """(x, y, u) at every collocation point; boundary values are zero."""
        pts = self.operator.ops.points
        u = np.zeros(len(pts))
        u[pts.interior] = self.final.u_curr
        return np.column_stack([pts.points, u])

    def write_trajectory(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "t"] + [f"probe_{k + 1}" for k in range(self.probes.shape[0])])
            for k, (t, row) in enumerate(zip(self.times, self.trajectory)):
                w.writerow([k, _fmt(t)] + [_fmt(v) for v in row])

    def write_field(self, path):
        write_field_csv(path, self.final_field())


def _fmt(x):
    return f"{float(x):.17g}"


def write_field_csv(path, rows, header=("x", "y", "u")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def simulate_porous(surface, f0, m_exp, params, dt, n_steps, probes=((0.0, 0.0),),
                    scheme="cn", ops=None, threads=None):
    """Run ``n_steps`` porous-medium steps from the collocation samples of ``f0``.

    Probe values are recorded before the first step and after every step by
    interpolating the current field (basis rows at the probe points).

    Raises
    ------
    StabilityError
        If any value exceeds ``1e3`` in magnitude.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    for x in probes:
        if not surface.contains(x):
            raise DomainError(f"probe {tuple(x)} lies outside the domain")
    if int(n_steps) < 0:
        raise DomainError(f"step count must be nonnegative, got {n_steps}")
    if ops is None:
        ops = fractional_laplacian_matrix(surface, collocation_points(surface), params,
                                          threads=threads)
    op = PorousOperator(ops)
    probe_rows = [basis_row(surface, x) for x in probes]
    u0 = _sample(f0, ops.points.points)[op.interior]
    state = PorousState(np.zeros_like(u0), u0, 1, float(dt), float(m_exp), params.s, scheme)

    def record(st):
        c = op.coefficients(st.u_curr)
        return [row.dot(c) for row in probe_rows]

    traj = [record(state)]
    for _ in range(int(n_steps)):
        state = porous_step(state, op)
        if state.u_curr.size and np.max(np.abs(state.u_curr)) > DIVERGENCE_BOUND:
            raise StabilityError(f"solution exceeded {DIVERGENCE_BOUND:g} at step {state.n}")
        traj.append(record(state))
    times = np.arange(int(n_steps) + 1) * float(dt)
    return PorousResult(times, probes, np.array(traj), state, op)
