"""Admissibility of boundary matrices: zero trace, no bound states; Krein matrix and theta family."""

import math
from dataclasses import dataclass, field

import numpy as np

from .gamma import FieldKind, Geometry, Projector, boundary_dim, gamma_k, krein_gamma, project, theta_basis
from .krein import BoundaryMatrix


class ScanError(RuntimeError):
    pass


@dataclass
class AdmissibilityReport:
    trace_ok: bool
    discrete_spectrum: list
    krein_form_ok: bool
    trace: float = 0.0
    reasons: list = field(default_factory=list)

    @property
    def admissible(self):
        return self.trace_ok and not self.discrete_spectrum

    @property
    def verdict(self):
        return "Admissible" if self.admissible else "Inadmissible"

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "trace_ok": self.trace_ok,
            "trace": self.trace,
            "discrete_spectrum": list(self.discrete_spectrum),
            "krein_form_ok": self.krein_form_ok,
            "reasons": list(self.reasons),
        }


def krein_matrix(kind, geom):
    """M_K = Gamma_0 on the full boundary space."""
    m = krein_gamma(kind, geom)
    m = 0.5 * (m + m.T)
    return BoundaryMatrix.full(m, kind, geom)


def theta_matrix(theta, r):
    """Projected Krein matrix on span{cos(theta) e_m1 - sin(theta) e_m2}: (3 sin 2theta / 4r) diag(2, -1, -1)."""
    geom = Geometry.pair(r)
    s2 = math.sin(2 * theta)
    m = np.diag([2.0, -1.0, -1.0]) * (0.75 * s2 / r)
    return BoundaryMatrix(m, Projector(theta_basis(theta)), FieldKind.TRANSVERSE, geom)


def _scale(bm):
    parts = [np.linalg.norm(bm.m, 2) if bm.rank else 0.0]
    if bm.geom.n >= 2:
        parts.append(1.0 / bm.geom.r_min)
    s = max(parts)
    return s if s > 0 else 1.0


def _real_matrix(bm, s):
    """M - P^dagger Gamma_{-s^2} P, real for s > 0 (k = i s)."""
    g = gamma_k(bm.kind, bm.geom, 1j * np.asarray(s, dtype=float))
    a = bm.m - project(g, bm.projector)
    return a.real


def _eigenvalues(bm, s):
    ev = np.linalg.eigvalsh(_real_matrix(bm, s))
    scale = np.maximum(1.0, np.max(np.abs(ev), axis=-1))
    # eigenvalues within rounding of zero count as non-negative: at the
    # threshold of a Krein-type matrix they vanish like s
    tol = 1e3 * np.finfo(float).eps * scale
    return ev, tol


def _negative_count(bm, s):
    ev, tol = _eigenvalues(bm, s)
    return np.sum(ev < -tol[..., None], axis=-1)


def s_max_bound(bm):
    """Gershgorin bound: beyond it the -s diagonal dominates every row."""
    geom = bm.geom
    coupling = 1.5 if bm.kind is FieldKind.TRANSVERSE else 1.0
    row = 0.0
    for a in range(geom.n):
        row = max(row, sum(coupling / geom.dist[a, b] for b in range(geom.n) if b != a))
    norm = np.linalg.norm(bm.m, 2) if bm.rank else 0.0
    unit = 1.0 / geom.r_min if geom.n >= 2 else 0.0
    total = norm + row + unit
    return 2.0 * total if total > 0 else 1.0


def discrete_spectrum_scan(bm, grid=400, s_max=None, rel_tol=1e-13):
    """Negative eigenvalues mu = -s^2 of the extension, sorted ascending.

    On mu < 0 the matrix A(s) = M - P^dagger Gamma_{-s^2} P is real symmetric.
    Roots are located where the number of negative eigenvalues of A changes
    along a grid in s, then refined by bisection on that count; a root where
    k eigenvalues cross is returned k times. A grid point where an eigenvalue
    touches zero without any crossing is reported as a tangency error.
    """
    if bm.rank == 0:
        return []
    s_max = s_max_bound(bm) if s_max is None else s_max
    s_min = s_max * 1e-9
    # geometric near 0 (threshold behaviour) and linear further out
    s = np.unique(np.concatenate([np.geomspace(s_min, s_max, grid), np.linspace(s_min, s_max, grid)]))
    ev, tol = _eigenvalues(bm, s)
    counts = np.sum(ev < -tol[:, None], axis=1)
    near = np.min(np.abs(ev), axis=1) < 1e-12 * np.max(np.abs(ev), axis=1)
    for i in np.nonzero(near & (s > 1e-6 * s_max))[0]:
        # touching zero away from threshold: fine only if the count changes
        lo, hi = _negative_count(bm, s[i] * np.array([1 - 1e-6, 1 + 1e-6]))
        if lo == hi:
            raise ScanError(f"tangential root near s = {s[i]:.6g} (no sign change)")
    roots = []
    for i in range(len(s) - 1):
        c0, c1 = counts[i], counts[i + 1]
        if c0 == c1:
            continue
        lo, hi = s[i], s[i + 1]
        # the count drops with s; bisect on it
        while hi - lo > rel_tol * s_max:
            mid = 0.5 * (lo + hi)
            if _negative_count(bm, mid) == c0:
                lo = mid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
        roots.extend([float(-root * root)] * int(abs(c0 - c1)))
    return sorted(roots)


def check_admissible(bm):
    scale = _scale(bm)
    trace = float(np.trace(bm.m)) if bm.rank else 0.0
    trace_ok = abs(trace) < 1e-12 * scale
    spectrum = discrete_spectrum_scan(bm)
    if bm.rank:
        mk = project(krein_gamma(bm.kind, bm.geom), bm.projector)
        krein_ok = bool(np.max(np.abs(bm.m - mk)) < 1e-10 * scale)
    else:
        krein_ok = True
    reasons = []
    if not trace_ok:
        reasons.append(f"nonzero trace {trace:.6g} (logarithmic divergence of the energy)")
    if spectrum:
        reasons.append("discrete spectrum: " + ", ".join(f"{mu:.6g}" for mu in spectrum))
    return AdmissibilityReport(trace_ok, spectrum, krein_ok, trace, reasons)
