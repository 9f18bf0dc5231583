"""Scalar special functions used by the discretization and the benchmarks."""
from __future__ import annotations

import math

import numpy as np

from .errors import DomainError

__all__ = [
    "check_order",
    "gamma",
    "erfc",
    "normalization_constant",
    "jacobi_p",
    "window_rho",
    "window_moment",
]

# rho(t) = 1 - 35 t^4 + 84 t^5 - 70 t^6 + 20 t^7 with t = r / a
_RHO_POWERS = (0, 4, 5, 6, 7)
_RHO_COEFFS = (1.0, -35.0, 84.0, -70.0, 20.0)


def check_order(s):
    """Return ``s`` as a float after checking ``0 < s < 1``."""
    s = float(s)
    if not 0.0 < s < 1.0:
        raise DomainError(f"fractional order must lie in (0, 1), got {s}")
    return s


def gamma(x):
    """Gamma function for real ``x`` away from the poles."""
    x = float(x)
    if x <= 0 and x == math.floor(x):
        raise DomainError(f"gamma has a pole at {x}")
    return math.gamma(x)


def erfc(x):
    return math.erfc(float(x))


def normalization_constant(s):
    """``c_{s,2} = 2^{2s} Gamma(1+s) / (pi |Gamma(-s)|)``.

    Evaluated as ``2^{2s} s Gamma(1+s) / (pi Gamma(1-s))``, which avoids the
    negative argument of ``Gamma(-s)``.
    """
    s = check_order(s)
    return 4.0**s * s * math.gamma(1.0 + s) / (math.pi * math.gamma(1.0 - s))


def jacobi_p(n, alpha, beta, x):
    """Jacobi polynomial ``P_n^{(alpha, beta)}(x)`` by three-term recurrence.

    ``x`` may be a scalar or an array; the result has the same shape.
    """
    if int(n) != n or n < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {n}")
    if not (alpha > -1 and beta > -1):
        raise DomainError(f"need alpha, beta > -1, got ({alpha}, {beta})")
    n = int(n)
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    ab = alpha + beta
    p = 0.5 * (alpha - beta) + 0.5 * (ab + 2.0) * x
    for k in range(2, n + 1):
        c = 2.0 * k + ab
        a1 = 2.0 * k * (k + ab) * (c - 2.0)
        a2 = (c - 1.0) * (alpha * alpha - beta * beta)
        a3 = (c - 2.0) * (c - 1.0) * c
        a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * c
        p_prev, p = p, ((a2 + a3 * x) * p - a4 * p_prev) / a1
    return p if p.ndim else float(p)


def window_rho(r, a):
    """Compactly supported window: ``1 - O(r^4)`` at 0, vanishing for ``r >= a``."""
    t = np.asarray(r, dtype=float) / a
    val = sum(c * t**k for c, k in zip(_RHO_COEFFS, _RHO_POWERS))
    val = np.where(t < 1.0, val, 0.0)
    return val if val.ndim else float(val)


def window_moment(a, s):
    """Closed form of ``int_0^a rho(r) r^{1-2s} dr``."""
    s = check_order(s)
    if not a > 0:
        raise DomainError(f"window size must be positive, got {a}")
    total = sum(c / (k + 2.0 - 2.0 * s) for c, k in zip(_RHO_COEFFS, _RHO_POWERS))
    return a ** (2.0 - 2.0 * s) * total
