"""Acceptance criteria, each run at its stated tolerance.

Every check logs one PASS/FAIL line; the lines are repeated in a summary
section at the end of the pytest run.
"""
import math
import time

import numpy as np
import pytest

from fraciga.assembly import (
    DiscretizationParams,
    collocation_points,
    fractional_laplacian_matrix,
    fractional_laplacian_row,
    interpolation_matrix,
    stencil_points,
)
from fraciga.benchmarks import convergence_study, heat_exact_origin
from fraciga.linalg import LU, rows_to_dense
from fraciga.nurbs import refine_dyadic, refine_uniform, square, unit_disk
from fraciga.quadrature import gauss_legendre
from fraciga.special import normalization_constant, window_moment, window_rho
from fraciga.splines import KnotVector, eval_basis

# Reference errors of the mode-1, s = 0.8 benchmark, keyed by the number of
# knot spans (4^level on the dyadic ladder).
REFERENCE_ERRORS = {16: 0.0667, 64: 0.0212}
LEVELS = 5
POROUS_ELEMENTS = 17          # odd: the origin is a collocation point; 19^2 = 361 DOF
POROUS_DT = 1e-3
POROUS_STEPS = 100            # t in [0, 0.1]


def gaussian(x):
    return np.exp(-100.0 * np.sum(x**2, axis=1))


@pytest.fixture(scope="module")
def study_coarse():
    return convergence_study(1, 0.8, DiscretizationParams(s=0.8, n=1000, m=20), LEVELS)


@pytest.fixture(scope="module")
def study_fine():
    return convergence_study(1, 0.8, DiscretizationParams(s=0.8, n=5000, m=40), LEVELS)


@pytest.fixture(scope="module")
def porous_surface():
    return refine_uniform(square(1.0), POROUS_ELEMENTS)


@pytest.fixture(scope="module")
def porous_ops(porous_surface):
    cache = {}

    def get(s):
        if s not in cache:
            cache[s] = fractional_laplacian_matrix(
                porous_surface, collocation_points(porous_surface), DiscretizationParams(s=s))
        return cache[s]

    return get


def porous_origin(surface, ops, s, m_exp, scheme="cn"):
    from fraciga.solvers import simulate_porous

    res = simulate_porous(surface, gaussian, m_exp, DiscretizationParams(s=s), POROUS_DT,
                          POROUS_STEPS, probes=[(0.0, 0.0)], scheme=scheme, ops=ops(s))
    return res.times, res.trajectory[:, 0]


def spans(record):
    return (2 ** record.level) ** 2


class TestCriterion1EigenBenchmark:
    def test_reference_errors(self, study_coarse, acceptance_log):
        by_spans = {spans(r): r for r in study_coarse.records}
        ratios = {n: by_spans[n].error / ref for n, ref in REFERENCE_ERRORS.items()}
        ok = all(0.5 <= q <= 2.0 for q in ratios.values())
        detail = "; ".join(f"{n} spans ({by_spans[n].dof} DOF): {by_spans[n].error:.5f} "
                           f"vs {REFERENCE_ERRORS[n]} (x{ratios[n]:.3f})" for n in REFERENCE_ERRORS)
        acceptance_log("C1a", ok, f"reference errors within factor 2 -- {detail}")
        assert ok

    def test_monotone(self, study_coarse, acceptance_log):
        errors = [r.error for r in study_coarse.records]
        ok = len(errors) >= 3 and all(b < a for a, b in zip(errors, errors[1:]))
        acceptance_log("C1b", ok, "monotone decrease over levels: "
                       + ", ".join(f"{r.dof}:{r.error:.3e}" for r in study_coarse.records))
        assert ok

    def test_slope(self, study_coarse, acceptance_log):
        ok = study_coarse.slope <= -0.8
        acceptance_log("C1c", ok, f"pre-plateau log-log slope {study_coarse.slope:.3f} <= -0.8")
        assert ok

    def test_runtime(self, study_coarse, acceptance_log):
        seconds = sum(r.seconds for r in study_coarse.records if r.dof <= 324)
        ok = seconds <= 600
        acceptance_log("C1d", ok, f"levels up to 324 DOF in {seconds:.1f} s (<= 600 s)")
        assert ok


class TestCriterion2QuadraturePlateau:
    def test_finer_quadrature_lower_plateau(self, study_coarse, study_fine, acceptance_log):
        coarse, fine = study_coarse.records[-1], study_fine.records[-1]
        ok = fine.error < coarse.error
        total = sum(r.seconds for r in study_fine.records)
        acceptance_log("C2", ok, f"plateau at {fine.dof} DOF: (5000,40) {fine.error:.5f} < "
                       f"(1000,20) {coarse.error:.5f}; fine study {total:.0f} s")
        assert ok and total <= 1800


@pytest.fixture(scope="module")
def surface():
    return refine_dyadic(unit_disk(), 4)


class TestCriterion3PointwiseOperator:
    def center_value(self, surface, params):
        s = params.s
        pts = collocation_points(surface)
        M = rows_to_dense(interpolation_matrix(surface, pts), surface.n_dof)
        c = LU(M).solve(np.maximum(1.0 - np.sum(pts.points**2, axis=1), 0.0) ** s)
        return fractional_laplacian_row(surface, [0.0, 0.0], params) @ c

    @pytest.mark.parametrize("s", [0.8, 0.5])
    def test_center(self, surface, acceptance_log, s):
        target = 4**s * math.gamma(1 + s) ** 2
        value = self.center_value(surface, DiscretizationParams(s=s, n=5000, m=40))
        rel = abs(value - target) / target
        ok = rel <= 0.02
        acceptance_log(f"C3 s={s}", ok, f"center value {value:.6f} vs {target:.6f} "
                       f"(rel {rel:.2e}, tol 2e-2; R=20, no far-field term)")
        assert ok, (
            "the discrete operator truncates the integral at R; for s=0.5 the omitted "
            "far field is c_s * pi * R^(-2s) / s = 1/R, i.e. 3.2% of pi/2 at R=20")

    def test_center_matches_truncated_operator(self, surface, acceptance_log):
        # supplemental: the s=0.5 shortfall is exactly the far field beyond R
        s = 0.5
        params = DiscretizationParams(s=s, n=5000, m=40)
        value = self.center_value(surface, params)
        truncated = math.pi / 2 - normalization_constant(s) * math.pi * params.R ** (-2 * s) / s
        rel = abs(value - truncated) / truncated
        tail = self.center_value(surface, DiscretizationParams(s=s, n=5000, m=40, tail=True))
        rel_tail = abs(tail - math.pi / 2) / (math.pi / 2)
        ok = rel <= 1e-3 and rel_tail <= 0.02
        acceptance_log("C3+", ok, f"s=0.5 matches pi/2 - 1/R = {truncated:.6f} (rel {rel:.1e}); "
                       f"with far-field term {tail:.6f} vs pi/2 (rel {rel_tail:.1e}) [supplemental]")
        assert ok


class TestCriterion4FractionalHeat:
    def test_origin_trajectory(self, porous_surface, porous_ops, acceptance_log):
        t0 = time.perf_counter()
        times, u0 = porous_origin(porous_surface, porous_ops, 0.5, 1.0)
        exact = np.array([heat_exact_origin(t) for t in times])
        dev = float(np.max(np.abs(u0 - exact)))
        ok = dev <= 2e-2 and porous_surface.n_dof >= 324 and times[-1] == pytest.approx(0.1)
        acceptance_log("C4", ok, f"max |u_h(0,t) - exact| = {dev:.2e} over t in [0, 0.1] "
                       f"({porous_surface.n_dof} DOF, dt={POROUS_DT}, "
                       f"{time.perf_counter() - t0:.0f} s)")
        assert ok


class TestCriterion5DiffusionOrdering:
    def test_larger_s_diffuses_faster(self, porous_surface, porous_ops, acceptance_log):
        _, a = porous_origin(porous_surface, porous_ops, 0.8, 1.0)
        _, b = porous_origin(porous_surface, porous_ops, 0.2, 1.0)
        ok = a[-1] < b[-1]
        acceptance_log("C5a", ok, f"u(0,0.1): s=0.8 {a[-1]:.4f} < s=0.2 {b[-1]:.4f} (m=1)")
        assert ok

    def test_larger_m_diffuses_slower(self, porous_surface, porous_ops, acceptance_log):
        _, m1 = porous_origin(porous_surface, porous_ops, 0.5, 1.0)
        _, m2 = porous_origin(porous_surface, porous_ops, 0.5, 2.0)
        ok = m2[-1] > m1[-1]
        acceptance_log("C5b", ok, f"u(0,0.1): m=2 {m2[-1]:.4f} > m=1 {m1[-1]:.4f} (s=0.5)")
        assert ok


def _partition_of_unity():
    kv = KnotVector([0, 0, 0, 0.1, 0.35, 0.35, 0.8, 1, 1, 1], 2)
    _, vals = eval_basis(kv, np.linspace(0, 1, 10001))
    return float(np.max(np.abs(vals.sum(axis=1) - 1))), 1e-12


def _knot_insertion():
    d = unit_disk()
    fine = refine_dyadic(d, 3)
    g = np.random.default_rng(0).uniform(size=(5000, 2))
    return float(np.max(np.abs(d.map_many(*g.T) - fine.map_many(*g.T)))), 1e-10


def _inverse_round_trip():
    d = refine_dyadic(unit_disk(), 2)
    g = np.random.default_rng(1).uniform(size=(5000, 2))
    x = d.map_many(*g.T)
    uv, ok = d.locate(x)
    err = float(np.max(np.abs(d.map_many(*uv.T) - x))) if ok.all() else np.inf
    return err, 1e-10


def _disk_boundary():
    d = unit_disk()
    t = np.linspace(0, 1, 2001)
    z, o = np.zeros_like(t), np.ones_like(t)
    x = np.vstack([d.map_many(t, z), d.map_many(t, o), d.map_many(z, t), d.map_many(o, t)])
    return float(np.max(np.abs(np.hypot(*x.T) - 1))), 1e-12


def _gauss_legendre_exactness():
    worst = 0.0
    for n in (1, 2, 4, 8, 16, 24):
        x, w = gauss_legendre(n)
        for k in range(2 * n):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            worst = max(worst, abs(float(w @ x**k) - exact))
    return worst, 1e-13


def _stencil_slope():
    exact = -2 * math.sin(0.3) * math.cos(0.2)
    hs = [0.1, 0.05, 0.025]
    errs = []
    for h in hs:
        p, w = stencil_points([0.3, 0.2], h)
        errs.append(abs(w @ (np.sin(p[:, 0]) * np.cos(p[:, 1])) - exact))
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0]), 3.8, ">="


def _window_identities():
    a = 0.1
    rho = np.polynomial.Polynomial([1, 0, 0, 0, -35, 84, -70, 20])
    checks = [window_rho(0.0, a) - 1, window_rho(a, a), window_rho(a / 2, a) - 0.5]
    checks += [rho.deriv(k)(1.0) / a**k for k in (1, 2, 3)]
    return float(max(abs(c) for c in checks)), 1e-12


def _window_moment():
    import scipy.integrate

    worst = 0.0
    for a, s in [(0.1, 0.8), (0.1, 0.5), (1.0, 0.2), (0.5, 0.9)]:
        ref, _ = scipy.integrate.quad(lambda r: window_rho(r, a) * r ** (1 - 2 * s), 0, a,
                                      epsabs=1e-15, epsrel=1e-13, limit=200)
        worst = max(worst, abs(window_moment(a, s) - ref))
    return worst, 1e-10


def _normalization():
    return abs(normalization_constant(0.5) - 1 / (2 * math.pi)), 1e-12


def _determinism():
    surface = refine_dyadic(unit_disk(), 2)
    pts = collocation_points(surface)
    params = DiscretizationParams(s=0.8, n=1000, m=20)
    ref = fractional_laplacian_matrix(surface, pts, params, threads=1).L
    same = all(np.array_equal(ref, fractional_laplacian_matrix(surface, pts, params, threads=t).L)
               for t in (2, 4))
    return (0.0 if same else 1.0), 0.0


PROPERTIES = [
    ("B-spline partition of unity", _partition_of_unity),
    ("knot-insertion geometric invariance", _knot_insertion),
    ("inverse-map round trip", _inverse_round_trip),
    ("disk boundary exactness", _disk_boundary),
    ("Gauss-Legendre degree 2n-1 exactness", _gauss_legendre_exactness),
    ("fourth-order Laplacian slope", _stencil_slope),
    ("window identities and end derivatives", _window_identities),
    ("window moment closed form vs quadrature", _window_moment),
    ("c_{0.5,2} = 1/(2 pi)", _normalization),
    ("assembly bit-identical for 1/2/4 threads", _determinism),
]


class TestCriterion6Properties:
    @pytest.mark.parametrize("k", range(len(PROPERTIES)), ids=[p[0] for p in PROPERTIES])
    def test_property(self, k, acceptance_log):
        name, check = PROPERTIES[k]
        t0 = time.perf_counter()
        value, bound, *cmp = check()
        seconds = time.perf_counter() - t0
        at_least = cmp == [">="]
        ok = (value >= bound if at_least else value <= bound) and seconds <= 60
        op = ">=" if at_least else "<="
        acceptance_log(f"C6.{k + 1}", ok, f"{name}: {value:.3e} {op} {bound:.1e} ({seconds:.1f} s)")
        assert ok
