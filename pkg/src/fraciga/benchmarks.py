"""Exact solutions, error metrics and convergence-study drivers.

On the unit disk the functions ``u_n(x) = (1 - |x|^2)^s phi_n(x)`` with
``phi_n(x) = (-1)^n P_n^{(s,0)}(2|x|^2 - 1)`` satisfy
``(-Delta)^s u_n = lambda_n phi_n`` with
``lambda_n = 2^{2s} Gamma(s+n+1)^2 / (n!)^2``.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, replace

import numpy as np
import scipy.special

from .assembly import collocation_points, fractional_laplacian_matrix
from .errors import DomainError
from .nurbs import refine_dyadic, refine_uniform, unit_disk
from .solvers import solve_poisson
from .special import check_order, gamma, jacobi_p

__all__ = [
    "EigenPair",
    "eigen_pair",
    "rmse",
    "heat_exact_origin",
    "ConvergenceRecord",
    "ConvergenceStudy",
    "fit_slope",
    "ladder_surface",
    "convergence_study",
    "LADDERS",
]

SATURATION_FACTOR = 3.0
LADDERS = ("dyadic", "uniform")


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue ``lam`` with evaluators of ``phi_n`` and of the exact solution."""

    n: int
    s: float
    lam: float

    def _r2(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.einsum("ij,ij->i", points, points)

    def phi(self, points):
        r2 = self._r2(points)
        return (-1.0) ** self.n * jacobi_p(self.n, self.s, 0.0, 2.0 * r2 - 1.0)

    def source(self, points):
        """Right-hand side ``lambda_n phi_n``."""
        return self.lam * self.phi(points)

    def solution(self, points):
        r2 = self._r2(points)
        return np.maximum(1.0 - r2, 0.0) ** self.s * self.phi(points)


def eigen_pair(n, s):
    """Closed-form eigenpair of mode ``n`` for order ``s`` on the unit disk."""
    if int(n) != n or n < 0:
        raise DomainError(f"mode index must be a nonnegative integer, got {n}")
    n = int(n)
    s = check_order(s)
    lam = 4.0**s * gamma(s + n + 1.0) ** 2 / math.factorial(n) ** 2
    return EigenPair(n, s, lam)


def rmse(numerical, exact, total=None):
    """Root-mean-square difference; ``total`` defaults to the vector length."""
    numerical = np.asarray(numerical, dtype=float).reshape(-1)
    exact = np.asarray(exact, dtype=float).reshape(-1)
    if numerical.shape != exact.shape:
        raise DomainError(f"length mismatch: {numerical.size} vs {exact.size}")
    total = numerical.size if total is None else int(total)
    if total <= 0:
        raise DomainError("point count must be positive")
    return math.sqrt(float(np.sum((numerical - exact) ** 2)) / total)


def heat_exact_origin(t):
    """Origin value of the ``s = 1/2`` heat solution with data ``exp(-100|x|^2)``.

    ``1 - 10 sqrt(pi) t exp(100 t^2) erfc(10 t)``, evaluated through the scaled
    complementary error function so that large ``t`` does not overflow.
    """
    t = float(t)
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    return 1.0 - 10.0 * math.sqrt(math.pi) * t * float(scipy.special.erfcx(10.0 * t))


@dataclass(frozen=True)
class ConvergenceRecord:
    level: int
    dof: int
    error: float
    seconds: float


@dataclass(frozen=True)
class ConvergenceStudy:
    mode: int
    s: float
    ladder: str
    records: tuple
    slope: float

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["level", "dof", "error", "seconds"])
            for r in self.records:
                w.writerow([r.level, r.dof, f"{r.error:.17g}", f"{r.seconds:.17g}"])
            w.writerow(["# slope", f"{self.slope:.17g}"])


def fit_slope(dofs, errors):
    """Least-squares slope of ``log error`` against ``log N`` before saturation.

    Uses the levels whose error exceeds three times the final error; falls
    back to all levels when fewer than two qualify.
    """
    dofs = np.asarray(dofs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if dofs.size < 2:
        raise DomainError("need at least two levels to fit a slope")
    keep = errors > SATURATION_FACTOR * errors[-1]
    if np.count_nonzero(keep) < 2:
        keep = np.ones_like(keep)
    return float(np.polyfit(np.log(dofs[keep]), np.log(errors[keep]), 1)[0])


def ladder_surface(level, ladder="dyadic", base=None):
    """Refined disk at ``level``.

    ``"dyadic"`` inserts the interior knots ``j / 2^level``; ``"uniform"``
    yields ``2^(level+1)`` basis functions per direction (DOF 16, 64, 256, ...).
    """
    base = unit_disk() if base is None else base
    if level < 1:
        raise DomainError(f"level must be >= 1, got {level}")
    if ladder == "dyadic":
        return refine_dyadic(base, level)
    if ladder == "uniform":
        p = base.degrees[0]
        return refine_uniform(base, 2 ** (level + 1) - p)
    raise DomainError(f"unknown ladder {ladder!r}; choose from {LADDERS}")


def convergence_study(mode, s, params, levels, ladder="dyadic", threads=None, callback=None):
    """Solve the eigen benchmark on successive refinements of the disk.

    Parameters
    ----------
    mode : int
        Eigenmode index ``n``.
    s : float
        Fractional order; overrides ``params.s``.
    params : DiscretizationParams
    levels : int
        Number of refinement levels, ``>= 2``.
    ladder : {"dyadic", "uniform"}
    callback : callable, optional
        Called with each :class:`ConvergenceRecord` as it completes.
    """
    if int(levels) < 2:
        raise DomainError(f"need at least 2 levels, got {levels}")
    params = replace(params, s=check_order(s))
    pair = eigen_pair(mode, params.s)
    records = []
    for level in range(1, int(levels) + 1):
        t0 = time.perf_counter()
        surface = ladder_surface(level, ladder)
        pts = collocation_points(surface)
        ops = fractional_laplacian_matrix(surface, pts, params, threads=threads)
        sol = solve_poisson(surface, pair.source, params, ops=ops)
        err = rmse(sol.values, pair.solution(pts.points))
        rec = ConvergenceRecord(level, surface.n_dof, err, time.perf_counter() - t0)
        records.append(rec)
        if callback is not None:
            callback(rec)
    slope = fit_slope([r.dof for r in records], [r.error for r in records])
    return ConvergenceStudy(int(mode), params.s, ladder, tuple(records), slope)
