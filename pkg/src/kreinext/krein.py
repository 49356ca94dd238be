"""Krein resolvent formula: b-matrix, deficiency vectors and resolvent kernels."""

import math
from dataclasses import dataclass

import numpy as np

from .branchmath import CutPoint, branch_sqrt, w_deriv, w_func
from .gamma import FieldKind, Geometry, Projector, boundary_dim, gamma_matrix, project

SQRT4PI = math.sqrt(4 * math.pi)
# transverse deficiency vectors are sqrt(3/2) times the transverse part of the
# scalar one, which gives them the unit singular coefficient and the Gram
# diagonal i / (sqrt(mu) + sqrt(lambda))
TRANSVERSE_NORM = math.sqrt(3.0 / (8.0 * math.pi))


class SpectralPointError(ArithmeticError):
    """M - P^dagger Gamma P is singular: the spectral parameter is an eigenvalue."""

    def __init__(self, det_abs, at=None):
        self.det_abs = det_abs
        self.at = at
        super().__init__(f"singular boundary matrix at {at} (|det| = {det_abs:.3e})")


class BoundaryMatrix:
    """Real symmetric m on the subspace spanned by a projector, for a field kind and geometry."""

    def __init__(self, m, projector, kind, geom):
        m = np.array(m, dtype=float)
        if m.size == 0:
            m = np.zeros((0, 0))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("boundary matrix must be square")
        if not np.all(np.isfinite(m)):
            raise ValueError("boundary matrix entries must be finite")
        if not np.array_equal(m, m.T):
            raise ValueError("boundary matrix must be exactly symmetric")
        if projector.dim != boundary_dim(kind, geom):
            raise ValueError("projector does not match the boundary dimension")
        if m.shape[0] != projector.rank:
            raise ValueError(f"matrix is {m.shape[0]}x{m.shape[0]} but projector rank is {projector.rank}")
        self.m = m
        self.projector = projector
        self.kind = kind
        self.geom = geom

    @property
    def rank(self):
        return self.projector.rank

    @classmethod
    def full(cls, m, kind, geom):
        return cls(m, Projector.full(boundary_dim(kind, geom)), kind, geom)

    @classmethod
    def friedrichs(cls, kind, geom):
        return cls(np.zeros((0, 0)), Projector.empty(boundary_dim(kind, geom)), kind, geom)

    def length_scale(self):
        """r_min for N >= 2, otherwise 1 / ||m|| (or 1 when m vanishes)."""
        if self.geom.n >= 2:
            return self.geom.r_min
        norm = np.linalg.norm(self.m, 2) if self.rank else 0.0
        return 1.0 / norm if norm > 0 else 1.0


def b_matrix(bm, p, rcond=1e-13):
    """(M - P^dagger Gamma_p P)^{-1}; raises SpectralPointError when singular."""
    if bm.rank == 0:
        return np.zeros((0, 0), dtype=complex)
    a = bm.m - project(gamma_matrix(bm.kind, bm.geom, p).entries, bm.projector)
    sv = np.linalg.svd(a, compute_uv=False)
    scale = max(sv[0], np.linalg.norm(bm.m, 2), abs(branch_sqrt(p)))
    if sv[-1] <= rcond * scale:
        raise SpectralPointError(float(abs(np.linalg.det(a))), p)
    return np.linalg.solve(a, np.eye(bm.rank))


def _rel(geom, n, x):
    d = np.asarray(x, dtype=float) - geom.points[n]
    a = float(np.linalg.norm(d))
    if a == 0.0:
        raise ValueError("deficiency vector evaluated at its singular point")
    return d, a


def transverse_profile(k, a):
    """Radial functions A, B with D = norm * (A e_m + B xhat xhat_m)."""
    t = k * a
    w = w_func(t)
    wd = w_deriv(t)
    big_a = (np.exp(1j * t) + (2.0 / 3.0) * w) / a
    big_b = (2.0 / 3.0) * (k * wd - w / a)
    return big_a, big_b


def eval_deficiency(kind, geom, alpha, lam, x):
    """Deficiency vector D_lambda^alpha at x.

    Scalar: e^{i k a} / (sqrt(4 pi) a). Transverse (alpha = 3 n + m): the
    divergence-free field curl((x - x_n) x grad)[(sqrt 2 / 3) w(k a) Y_1m] in
    closed form, sqrt(3/(8 pi)) (A(a) e_m + B(a) xhat xhat_m).
    """
    k = branch_sqrt(lam)
    if kind is FieldKind.SCALAR:
        _, a = _rel(geom, alpha, x)
        return complex(np.exp(1j * k * a) / (SQRT4PI * a))
    n, m = divmod(alpha, 3)
    d, a = _rel(geom, n, x)
    xhat = d / a
    big_a, big_b = transverse_profile(k, a)
    e = np.zeros(3)
    e[m] = 1.0
    return TRANSVERSE_NORM * (big_a * e + big_b * xhat * xhat[m])


def free_resolvent_kernel(lam, x, y):
    r = float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))
    if r == 0.0:
        raise ValueError("free resolvent kernel is singular at coincident points")
    return complex(np.exp(1j * branch_sqrt(lam) * r) / (4 * math.pi * r))


def _projected_scalar_deficiency(bm, lam, x):
    d = np.array([eval_deficiency(FieldKind.SCALAR, bm.geom, n, lam, x) for n in range(bm.geom.n)])
    return bm.projector.basis @ d


def perturbed_resolvent_kernel(bm, lam, x, y):
    """R_lambda(x, y) + sum b_mm' (PD)_lambda^m(x) conj((PD)_conj(lambda)^m'(y))."""
    if bm.kind is not FieldKind.SCALAR:
        raise ValueError("pointwise resolvent kernels are available for the scalar kind only")
    free = free_resolvent_kernel(lam, x, y)
    if bm.rank == 0:
        return free
    b = b_matrix(bm, lam)
    left = _projected_scalar_deficiency(bm, lam, x)
    right = np.conj(_projected_scalar_deficiency(bm, lam.conjugate(), y))
    return complex(free + left @ b @ right)


def resolvent_on_deficiency(bm, lam, mu, beta, x):
    """(R^M_lambda D_mu^beta)(x) for the scalar kind.

    Uses R_lambda D_mu = (D_lambda - D_mu)/(lambda - mu) and the Gram identity
    (D_conj(lambda), D_mu) = (Gamma_lambda - Gamma_mu)/(lambda - mu).
    """
    if bm.kind is not FieldKind.SCALAR:
        raise ValueError("scalar kind only")
    lv, mv = lam.complex_value(), mu.complex_value()
    if lv == mv:
        raise ValueError("lambda and mu must differ")
    geom = bm.geom
    d_lam = np.array([eval_deficiency(FieldKind.SCALAR, geom, n, lam, x) for n in range(geom.n)])
    d_mu = eval_deficiency(FieldKind.SCALAR, geom, beta, mu, x)
    out = (d_lam[beta] - d_mu) / (lv - mv)
    if bm.rank == 0:
        return complex(out)
    g_l = gamma_matrix(FieldKind.SCALAR, geom, lam).entries
    g_m = gamma_matrix(FieldKind.SCALAR, geom, mu).entries
    gram = (g_l[:, beta] - g_m[:, beta]) / (lv - mv)
    pb = bm.projector.basis
    coeff = b_matrix(bm, lam) @ (pb @ gram)
    return complex(out + (pb @ d_lam) @ coeff)


def q_function_residual(kind, geom, mu, lam, tol=1e-9):
    """Max-norm of (Gamma_mu - Gamma_lam)/(mu - lam) minus the numeric deficiency Gram matrix.

    Scalar kind: all entries. Transverse kind: same-point entries only (the
    cross-point tensor integrals are not evaluated).
    """
    from .oracle import deficiency_gram_numeric

    if mu.is_on_cut or lam.is_on_cut:
        raise ValueError("both points must be off the cut")
    mv, lv = mu.complex_value(), lam.complex_value()
    if mv == lv:
        raise ValueError("mu and lam must differ")
    quot = (gamma_matrix(kind, geom, mu).entries - gamma_matrix(kind, geom, lam).entries) / (mv - lv)
    d = boundary_dim(kind, geom)
    worst = 0.0
    for a in range(d):
        for b in range(a, d):
            if kind is FieldKind.TRANSVERSE and a // 3 != b // 3:
                continue
            num = deficiency_gram_numeric(kind, geom, mu, lam, a, b, tol=tol)
            worst = max(worst, abs(quot[a, b] - num))
    return worst


@dataclass(frozen=True)
class DeficiencyVector:
    kind: FieldKind
    geom: Geometry
    alpha: int
    lam: CutPoint

    def __call__(self, x):
        return eval_deficiency(self.kind, self.geom, self.alpha, self.lam, x)
