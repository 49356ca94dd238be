"""Fast identity suite behind `kreinext selfcheck`."""

import math

import numpy as np

from .admissibility import discrete_spectrum_scan, krein_matrix, theta_matrix
from .branchmath import CutPoint, Side, branch_sqrt, w_deriv, w_func
from .energy import SpectralIntegrand
from .gamma import FieldKind, Geometry, gamma_matrix
from .krein import BoundaryMatrix, q_function_residual
from .oracle import channel_eigen_residual, fd_derivative


def _branch(rng):
    worst = 0.0
    for _ in range(100):
        z = complex(*rng.normal(size=2) * 5)
        p = CutPoint.off_cut(z)
        k = branch_sqrt(p)
        worst = max(worst, abs(k * k - z), 0.0 if k.imag >= 0 else 1.0)
        worst = max(worst, abs(branch_sqrt(p.conjugate()) + k.conjugate()))
    for rho in rng.uniform(0.01, 50, 20):
        a = branch_sqrt(CutPoint.on_cut(rho, Side.ABOVE))
        b = branch_sqrt(CutPoint.on_cut(rho, Side.BELOW))
        worst = max(worst, abs(a + b), abs(a - math.sqrt(rho)))
    return worst < 1e-12, f"max deviation {worst:.2e}"


def _w_smooth(rng):
    worst = 0.0
    for t in rng.uniform(0.05, 3.0, 10):
        worst = max(worst, abs(fd_derivative(w_func, t) - w_deriv(t)))
    worst = max(worst, abs(w_func(0.0) + 0.75), abs(w_deriv(0.0) + 0.5j))
    return worst < 1e-8, f"max deviation {worst:.2e}"


def _gamma_symmetry(rng):
    geom = Geometry(rng.normal(size=(3, 3)))
    worst = 0.0
    for kind in FieldKind:
        for _ in range(10):
            g = gamma_matrix(kind, geom, CutPoint.off_cut(complex(*rng.normal(size=2)))).entries
            worst = max(worst, float(np.max(np.abs(g - g.T))))
    return worst == 0.0, f"max asymmetry {worst:.2e}"


def _q_function(rng):
    geom = Geometry.pair(1.0)
    worst = 0.0
    for _ in range(2):
        mu = CutPoint.off_cut(complex(-rng.uniform(0.5, 3), rng.uniform(-1, 1)))
        lam = CutPoint.off_cut(complex(-rng.uniform(0.5, 3), rng.uniform(-1, 1)))
        worst = max(worst, q_function_residual(FieldKind.SCALAR, geom, mu, lam, tol=1e-9))
    return worst < 1e-6, f"max residual {worst:.2e}"


def _fold(rng):
    worst = 0.0
    for bm in (krein_matrix(FieldKind.TRANSVERSE, Geometry.pair(1.0)),
               krein_matrix(FieldKind.SCALAR, Geometry(rng.normal(size=(3, 3)))),
               theta_matrix(rng.uniform(0, math.pi), 1.0)):
        worst = max(worst, SpectralIntegrand(bm).check_fold(samples=30))
    return worst < 1e-12, f"max relative deviation {worst:.2e}"


def _channels(rng):
    worst = 0.0
    for kind in FieldKind:
        for _ in range(25):
            p = CutPoint.off_cut(complex(*rng.normal(size=2) * 3))
            worst = max(worst, channel_eigen_residual(kind, p, rng.uniform(0.5, 2)))
    return worst < 1e-10, f"max residual {worst:.2e}"


def _spectrum(rng):
    geom = Geometry([[0.0, 0.0, 0.0]])
    roots = discrete_spectrum_scan(BoundaryMatrix.full(np.array([[-2.0]]), FieldKind.SCALAR, geom))
    ok = len(roots) == 1 and abs(roots[0] + 4.0) < 1e-10
    return ok, f"roots {roots}"


CHECKS = [
    ("branch square root", _branch),
    ("w and its derivative", _w_smooth),
    ("Gamma symmetry", _gamma_symmetry),
    ("Q-function identity", _q_function),
    ("conjugate fold", _fold),
    ("channel eigenvalues", _channels),
    ("discrete spectrum N=1", _spectrum),
]


def run_selfcheck(seed=2024):
    rng = np.random.default_rng(seed)
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
