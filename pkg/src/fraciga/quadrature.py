"""Gauss-Legendre rules and the polar tensor quadrature around a point.

The polar rule integrates over the disk of radius ``R`` with ``n`` Gauss-Legendre
radii and ``m`` uniformly spaced directions,

    int_{|y| < R} f(y) dy  ~  sum_ij  (2 pi w_i r_i / m)  f(r_i sigma_j).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceError
from .special import check_order, window_moment, window_rho

__all__ = [
    "gauss_legendre",
    "PolarQuadrature",
    "polar_rule",
    "coefficient_A",
    "coefficient_B",
]

MAX_NODES = 10**6


def _legendre_pair(n, x):
    # P_n(x) and P_{n-1}(x) by the Bonnet recurrence
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    return p1, p0


def gauss_legendre(n, lo=-1.0, hi=1.0):
    """``n``-point Gauss-Legendre nodes and weights on ``[lo, hi]``.

    Nodes are found by Newton's method in the angle ``theta`` (``x = cos theta``)
    started from Tricomi's asymptotic guesses. Working in ``theta`` keeps the
    distance of the extreme nodes to the interval ends accurate to full
    relative precision, which matters for the singular radial weights.

    Returns
    -------
    nodes, weights : ndarray
        Nodes in increasing order.
    """
    n = int(n)
    if n < 1:
        raise DomainError(f"need at least one node, got {n}")
    if n > MAX_NODES:
        raise ResourceError(f"{n} Gauss-Legendre nodes exceed the limit {MAX_NODES}")
    if not lo < hi:
        raise DomainError(f"empty interval [{lo}, {hi}]")
    if n == 1:
        return np.array([0.5 * (lo + hi)]), np.array([hi - lo])
    # roots are symmetric: solve for theta in (0, pi/2] and mirror
    half = (n + 1) // 2
    k = np.arange(1, half + 1)
    theta = np.pi * (4 * k - 1) / (4 * n + 2)
    theta += (1.0 / (8 * n * n) - 1.0 / (8 * n**3)) / np.tan(theta)
    for _ in range(100):
        x = np.cos(theta)
        pn, pm = _legendre_pair(n, x)
        dtheta = -n * (pm - x * pn) / np.sin(theta)
        step = pn / dtheta
        theta = theta - step
        if np.max(np.abs(step)) < 1e-12:  # rounding floor of the recurrence near x = 1
            break
    x = np.cos(theta)
    pn, pm = _legendre_pair(n, x)
    w = 2.0 / (n * (pm - x * pn) / np.sin(theta)) ** 2
    # (1 + cos theta) / 2 = cos^2(theta / 2); the mirror node uses sin^2
    lower = np.sin(0.5 * theta) ** 2
    upper = np.cos(0.5 * theta) ** 2
    if n % 2:
        lower[-1] = 0.5
    mid = n // 2
    t = np.concatenate([lower, upper[:mid][::-1]])
    wt = np.concatenate([w, w[:mid][::-1]])
    return lo + (hi - lo) * t, 0.5 * (hi - lo) * wt


@dataclass(frozen=True, eq=False)
class PolarQuadrature:
    """Radial Gauss-Legendre rule on ``[0, R]`` tensorized with ``m`` directions.

    Attributes
    ----------
    radii, radial_weights : ndarray, shape (n,)
    m : int
    R : float
    """

    radii: np.ndarray
    radial_weights: np.ndarray
    m: int
    R: float

    @property
    def n(self):
        return self.radii.size

    @property
    def angles(self):
        return 2.0 * np.pi * np.arange(1, self.m + 1) / self.m

    @property
    def directions(self):
        a = self.angles
        return np.column_stack([np.cos(a), np.sin(a)])

    @property
    def offsets(self):
        """``xi_ij = r_i sigma_j``, shape (n, m, 2)."""
        return self.radii[:, None, None] * self.directions[None, :, :]

    @property
    def weights(self):
        """Combined area weights ``2 pi w_i r_i / m``, shape (n, m)."""
        w = 2.0 * np.pi * self.radial_weights * self.radii / self.m
        return np.repeat(w[:, None], self.m, axis=1)

    def integrate(self, f):
        """Apply the rule to ``f`` taking an (N, 2) array of offsets."""
        vals = np.asarray(f(self.offsets.reshape(-1, 2)), dtype=float)
        return float(np.sum(self.weights.reshape(-1) * vals))


def polar_rule(n, m, R):
    if int(m) < 3:
        raise DomainError(f"need at least 3 directions, got {m}")
    if not R > 0:
        raise DomainError(f"truncation radius must be positive, got {R}")
    r, w = gauss_legendre(n, 0.0, float(R))
    r.flags.writeable = False
    w.flags.writeable = False
    return PolarQuadrature(r, w, int(m), float(R))


def coefficient_A(rule, s):
    """``2 pi sum_i w_i / r_i^{1+2s}``; grows without bound as the rule is refined."""
    s = check_order(s)
    return 2.0 * math.pi * float(np.sum(rule.radial_weights / rule.radii ** (1.0 + 2.0 * s)))


def coefficient_B(rule, s, a):
    """Quadrature error of the windowed second-order term.

    ``pi sum_i w_i rho(r_i) r_i^{1-2s} - pi int_0^a rho(r) r^{1-2s} dr``.
    """
    s = check_order(s)
    if not 0 < a <= rule.R:
        raise DomainError(f"window size {a} must lie in (0, R={rule.R}]")
    rho = window_rho(rule.radii, a)
    discrete = float(np.sum(rule.radial_weights * rho * rule.radii ** (1.0 - 2.0 * s)))
    return math.pi * discrete - math.pi * window_moment(a, s)
