"""Acceptance criteria 1-12; each test prints one PASS/FAIL line."""

import io
import math
import time

import numpy as np
import pytest
from scipy.special import lambertw

import conftest
from kreinext.admissibility import discrete_spectrum_scan, krein_matrix, theta_matrix
from kreinext.branchmath import CutPoint, Side, branch_sqrt
from kreinext.cli import main
from kreinext.energy import (SpectralIntegrand, divergence_coefficient, energy_channels, energy_general,
                             kernel_sqrt_diff, theta_minimize, theta_sweep)
from kreinext.gamma import FieldKind, Geometry, boundary_dim, channels_n2, gamma_deriv
from kreinext.krein import BoundaryMatrix, b_matrix, eval_deficiency, q_function_residual, resolvent_on_deficiency
from kreinext.oracle import channel_eigen_residual, divergence_residual, pde_residual, singular_fit

S, T = FieldKind.SCALAR, FieldKind.TRANSVERSE
ONE = Geometry([[0.0, 0.0, 0.0]])
PAIR = Geometry.pair(1.0)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def figure_fit(figure_points):
    t0 = time.perf_counter()
    rows = theta_sweep(figure_points[:, 0], 1.0)
    elapsed = time.perf_counter() - t0
    computed = np.array([r[1] for r in rows])
    devs = {s: float(np.max(np.abs(s * computed - figure_points[:, 1]))) for s in (1.0, 0.5)}
    s_star = min(devs, key=devs.get)
    return s_star, devs, elapsed, rows


def test_c01_figure_reproduction(report, figure_fit):
    s_star, devs, elapsed, rows = figure_fit
    ok = devs[s_star] < 0.01 and elapsed < 60 and all(r[3] == "Converged" for r in rows)
    report(1, ok, f"s* = {s_star:g}, max deviation {devs[s_star]:.2e} (s*=1: {devs[1.0]:.3g}, "
                  f"s*=1/2: {devs[0.5]:.3g}) over {len(rows)} points in {elapsed:.1f} s")


@pytest.mark.parametrize("kind, want", [(T, -0.63), (S, -0.33)])
def test_c02_krein_energies(report, figure_fit, kind, want):
    s_star = figure_fit[0]
    t0 = time.perf_counter()
    res = energy_general(krein_matrix(kind, PAIR))
    elapsed = time.perf_counter() - t0
    got = s_star * res.r_e
    report(2, abs(got - want) < 0.02 and elapsed < 10,
           f"{kind.value}: s* r E(M_K) = {got:.6f} (target {want} +- 0.02), {elapsed:.2f} s")


def test_c03_zero_energy_anchors(report):
    worst = max(abs(energy_general(theta_matrix(th, 1.0)).r_e) for th in (0.0, math.pi / 2, math.pi))
    single = max(abs(energy_general(BoundaryMatrix.full(np.zeros((d, d)), k, ONE)).value)
                 for k, d in ((S, 1), (T, 3)))
    empty = [energy_general(BoundaryMatrix.friedrichs(k, PAIR)).value for k in (S, T)]
    ok = worst < 1e-6 and single < 1e-10 and all(v == 0.0 for v in empty)
    report(3, ok, f"theta anchors max |rE| {worst:.1e}; N=1 M=0 max |E| {single:.1e}; empty projector {empty}")


def test_c04_path_equivalence(report):
    cases = [(krein_matrix(S, PAIR), channels_n2(S)), (krein_matrix(T, PAIR), channels_n2(T))]
    cases += [(theta_matrix(th, 1.0), channels_n2(T, theta=th)) for th in np.linspace(0.05, math.pi - 0.05, 16)]
    worst = max(abs(energy_general(bm).value - energy_channels(ch).value) for bm, ch in cases)
    report(4, worst < 1e-8, f"max |general - channels| = {worst:.2e} over {len(cases)} cases")


def test_c05_fold_and_branch(report):
    rng = np.random.default_rng(2024)
    geom = Geometry([[0, 0, 0], [1, 0, 0], [0.2, 1.4, 0.5]])
    fold = 0.0
    for _ in range(100):
        kind = S if rng.random() < 0.5 else T
        d = boundary_dim(kind, geom)
        m = rng.normal(size=(d, d))
        bm = BoundaryMatrix.full(0.5 * (m + m.T), kind, geom)
        rho = rng.uniform(0.01, 100)
        g = [np.trace(b_matrix(bm, p) @ gamma_deriv(kind, geom, p).entries)
             for p in (CutPoint.on_cut(rho, Side.ABOVE), CutPoint.on_cut(rho, Side.BELOW))]
        fold = max(fold, abs(g[1] - np.conj(g[0])) / max(1.0, abs(g[0])))
    integ = SpectralIntegrand(krein_matrix(T, geom))
    fold = max(fold, integ.check_fold(samples=100))
    branch = 0.0
    for _ in range(100):
        z = complex(*rng.normal(size=2) * 10)
        k = branch_sqrt(CutPoint.off_cut(z))
        branch = max(branch, abs(k * k - z) / max(1, abs(z)), 0.0 if k.imag >= 0 else 1.0)
        rho = rng.uniform(1e-6, 1e3)
        branch = max(branch, abs(branch_sqrt(CutPoint.on_cut(rho, Side.ABOVE))
                                 + branch_sqrt(CutPoint.on_cut(rho, Side.BELOW))))
    report(5, fold < 1e-12 and branch < 1e-12, f"fold deviation {fold:.1e}, branch deviation {branch:.1e}")


def test_c06_q_function_and_channels(report):
    rng = np.random.default_rng(6)
    q = 0.0
    for _ in range(10):
        mu = CutPoint.off_cut(complex(rng.uniform(-4, 2), rng.uniform(0.2, 3)))
        lam = CutPoint.off_cut(complex(rng.uniform(-4, 2), rng.uniform(0.2, 3)))
        q = max(q, q_function_residual(S, Geometry.pair(rng.uniform(0.5, 2)), mu, lam))
    ch = 0.0
    for _ in range(50):
        mu = CutPoint.off_cut(complex(rng.uniform(-10, 10), rng.uniform(0.01, 10)))
        for kind in (S, T):
            ch = max(ch, channel_eigen_residual(kind, mu, rng.uniform(0.3, 3)))
    report(6, q < 1e-6 and ch < 1e-10, f"Q-function residual {q:.1e}; channel eigen-residual {ch:.1e}")


def test_c07_discrete_spectrum(report):
    a = discrete_spectrum_scan(BoundaryMatrix.full([[-2.0]], S, ONE))
    z = discrete_spectrum_scan(BoundaryMatrix.full(np.zeros((2, 2)), S, PAIR))
    lam = -float(lambertw(1.0).real) ** 2
    mk = [discrete_spectrum_scan(krein_matrix(k, PAIR)) for k in (S, T)]
    ok = (len(a) == 1 and abs(a[0] + 4) < 1e-10 and len(z) == 1 and abs(z[0] - lam) < 1e-6
          and mk == [[], []])
    report(7, ok, f"m=[-2] -> {a}; zero pair -> {z} (s = e^-s oracle {lam:.7f}; "
                  f"printed -0.321585 differs by {abs(lam + 0.321585):.1e}); M_K roots {mk}")


def test_c08_log_divergence_law(report):
    lines, ok = [], True
    for kind in (S, T):
        mk = krein_matrix(kind, PAIR).m
        d = mk.shape[0]
        for sign in (1, -1):
            m = mk + np.eye(d) * sign * math.pi / d
            a = divergence_coefficient(BoundaryMatrix.full(m, kind, PAIR))
            want = np.trace(m) / math.pi
            rel = abs(a - want) / abs(want)
            ok &= rel < 0.05
            lines.append(f"{kind.value} TrM={sign:+d}pi: a={a:.5f} vs TrM/pi={want:+.3f} (ratio {a / want:.4f})")
        a0 = divergence_coefficient(krein_matrix(kind, PAIR))
        ok &= abs(a0) < 1e-3
        lines.append(f"{kind.value} M_K: |a| = {abs(a0):.1e}")
    report(8, ok, "; ".join(lines))


def test_c09_abel_kernel(report):
    bm = BoundaryMatrix.full([[0.0]], S, ONE)
    worst = 0.0
    for a, b in [(1.0, 2.0), (0.5, 0.7), (1.3, 1.3), (0.8, 2.5), (2.0, 3.0)]:
        v = kernel_sqrt_diff(bm, [a, 0, 0], [0, -b, 0])
        want = -1 / (2 * math.pi**2 * a * b * (a + b) ** 2)
        worst = max(worst, abs(v / want - 1))
    report(9, worst < 1e-4, f"max relative error {worst:.1e} on 5 (a, b) pairs")


def test_c10_pde_and_boundary_residuals(report):
    rng = np.random.default_rng(10)
    box = rng.normal(size=(10, 3))
    box *= rng.uniform(0.5, 2.0, (10, 1)) / np.linalg.norm(box, axis=1)[:, None]
    lam = CutPoint.off_cut(-1.0)
    ps = max(pde_residual(S, PAIR, n, lam, box + [0, 0, 0.5]) for n in range(2))
    pt = max(pde_residual(T, ONE, al, lam, box) for al in range(3))
    dv = max(divergence_residual(ONE, al, CutPoint.off_cut(complex(-1, 0.5)), box) for al in range(3))
    radii = np.geomspace(1e-3, 1e-2, 12)
    direction = np.array([0.48, 0.6, 0.64])
    bc = 0.0
    for m in (0.0, 0.7, -0.3):
        bm = BoundaryMatrix.full([[m]], S, ONE)
        vals = [resolvent_on_deficiency(bm, CutPoint.off_cut(complex(-1, 0.5)), CutPoint.off_cut(-2.0), 0,
                                        a * direction) for a in radii]
        xi, gamma = singular_fit(radii, vals)
        bc = max(bc, abs(gamma - m * xi) / max(abs(xi), abs(gamma)))
    ok = ps < 1e-6 and pt < 1e-4 and dv < 1e-4 and bc < 1e-3
    report(10, ok, f"Helmholtz scalar {ps:.1e}, transverse {pt:.1e}; divergence {dv:.1e}; gamma = M xi {bc:.1e}")


def test_c11_symmetry_and_minimizers(report):
    sym = max(abs(energy_general(theta_matrix(th, 1.0)).value
                  - energy_general(theta_matrix(math.pi / 2 - th, 1.0)).value)
              for th in np.linspace(0, math.pi / 2, 9))
    a, ea = theta_minimize((0.0, math.pi / 2))
    b, eb = theta_minimize((math.pi / 2, math.pi))
    ok = sym < 1e-9 and abs(a - math.pi / 4) < 0.02 and abs(b - 3 * math.pi / 4) < 0.02 and eb < ea
    report(11, ok, f"symmetry {sym:.1e}; minima at {a:.5f} (rE {ea:.5f}) and {b:.5f} (rE {eb:.5f})")


@pytest.mark.run_last
def test_c12_wall_clock_and_reproducibility(report):
    outs = []
    for jobs in ("1", "1", "2"):
        buf = io.StringIO()
        main(["sweep", "--steps", "65", "--jobs", jobs], out=buf)
        outs.append(buf.getvalue())
    elapsed = time.perf_counter() - conftest.SESSION_START
    same = outs[0] == outs[1] == outs[2]
    report(12, same and elapsed < 300,
           f"sweep CSV byte-identical across runs and job counts: {same}; suite wall clock {elapsed:.0f} s")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
