"""Independent checks: finite differences, numeric Gram integrals, PDE residuals, singular fits."""

import math

import numpy as np

from .branchmath import branch_sqrt, w_func
from .gamma import FieldKind
from .krein import SQRT4PI, TRANSVERSE_NORM, eval_deficiency, transverse_profile
from .quadrature import QuadratureError, integrate_head


def fd_derivative(f, x, h=1e-3, levels=3):
    """Central difference with Richardson extrapolation (order 2 * levels)."""
    table = []
    for j in range(levels):
        hj = h / 2**j
        table.append((f(x + hj) - f(x - hj)) / (2 * hj))
    for lev in range(1, levels):
        fac = 4.0**lev
        table = [(fac * table[i + 1] - table[i]) / (fac - 1) for i in range(len(table) - 1)]
    return table[0]


def _exp_extent(decay):
    if decay <= 0:
        raise QuadratureError("Gram integral needs both points off the cut")
    return 45.0 / decay


def _radial(f, length, tol):
    edges = [0.0] + [length * 2.0**-j for j in range(30, -1, -1)]
    return integrate_head(f, 0.0, length, tol, breakpoints=edges[1:-1])


def deficiency_gram_numeric(kind, geom, mu, lam, alpha, beta, tol=1e-10):
    """(D_conj(mu)^alpha, D_lam^beta) = integral of conj(D_conj(mu)^alpha) D_lam^beta by quadrature."""
    km, kl = branch_sqrt(mu), branch_sqrt(lam)
    kmb = branch_sqrt(mu.conjugate())
    if kind is FieldKind.SCALAR:
        if alpha == beta:
            center = geom.points[alpha]
            direction = np.array([0.36, 0.48, 0.8])

            def f(a):
                out = np.empty(a.shape, dtype=complex)
                for i, ai in enumerate(a):
                    x = center + ai * direction
                    out[i] = np.conj(eval_deficiency(kind, geom, alpha, mu.conjugate(), x)) \
                        * eval_deficiency(kind, geom, alpha, lam, x)
                return out * 4 * math.pi * a * a

            return _radial(f, _exp_extent((km + kl).imag), tol)[0]
        return _prolate_gram(geom, mu, lam, alpha, beta, tol)
    n1, m1 = divmod(alpha, 3)
    n2, m2 = divmod(beta, 3)
    if n1 != n2:
        raise NotImplementedError("cross-point transverse Gram integrals are not evaluated")
    if m1 != m2:
        return 0j  # odd under the reflection x_m1 -> -x_m1

    def g(a):
        am, bm = transverse_profile(kmb, a)
        am, bm = np.conj(am), np.conj(bm)
        al, bl = transverse_profile(kl, a)
        ang = al * am + (am * bl + bm * al + bm * bl) / 3.0
        return 4 * math.pi * TRANSVERSE_NORM**2 * ang * a * a

    # the static part of w gives an a^-4 tail; integrate far enough for 1e-12
    length = max(_exp_extent(min(km.imag, kl.imag)), 1e4 / min(abs(km), abs(kl)))
    return _radial(g, length, tol)[0]


def _prolate_gram(geom, mu, lam, alpha, beta, tol, nodes=48):
    """Cross-point scalar Gram in prolate spheroidal coordinates around the two points."""
    p1, p2 = geom.points[alpha], geom.points[beta]
    axis = p2 - p1
    r = float(np.linalg.norm(axis))
    axis = axis / r
    perp = np.cross(axis, [1.0, 0.0, 0.0])
    if np.linalg.norm(perp) < 0.5:
        perp = np.cross(axis, [0.0, 1.0, 0.0])
    perp /= np.linalg.norm(perp)
    half = 0.5 * r
    center = 0.5 * (p1 + p2)
    tau, wt = np.polynomial.legendre.leggauss(nodes)
    km, kl = branch_sqrt(mu), branch_sqrt(lam)
    mub = mu.conjugate()

    def f(sig):
        out = np.empty(sig.shape, dtype=complex)
        for i, s in enumerate(sig):
            rho = half * np.sqrt(np.maximum((s * s - 1) * (1 - tau * tau), 0.0))
            # sigma + tau grows away from p1, so p1 sits at z = -half
            z = -half * s * tau
            acc = 0j
            for zj, rj, wj, tj in zip(z, rho, wt, tau):
                x = center + zj * axis + rj * perp
                val = np.conj(eval_deficiency(FieldKind.SCALAR, geom, alpha, mub, x)) \
                    * eval_deficiency(FieldKind.SCALAR, geom, beta, lam, x)
                acc += wj * val * (s * s - tj * tj)
            out[i] = acc * 2 * math.pi * half**3
        return out

    length = 1.0 + _exp_extent(half * (km + kl).imag)
    return integrate_head(f, 1.0, length, tol,
                          breakpoints=[1.0 + (length - 1.0) * 2.0**-j for j in range(12)])[0]


_LAP = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_OFFS = np.arange(-2, 3)


def fd_laplacian(f, x, h):
    x = np.asarray(x, dtype=float)
    acc = 0
    for ax in range(3):
        e = np.zeros(3)
        e[ax] = h
        acc = acc + sum(c * f(x + o * e) for c, o in zip(_LAP, _OFFS) if c != 0)
    return acc / (h * h)


def fd_gradient_component(f, x, ax, h):
    e = np.zeros(3)
    e[ax] = h
    return sum(c * f(x + o * e) for c, o in zip(_D1, _OFFS) if c != 0) / h


def fd_divergence(f, x, h):
    x = np.asarray(x, dtype=float)
    return sum(fd_gradient_component(lambda y, i=i: f(y)[i], x, i, h) for i in range(3))


def fd_curl(f, x, h):
    x = np.asarray(x, dtype=float)
    d = [[fd_gradient_component(lambda y, j=j: f(y)[j], x, i, h) for j in range(3)] for i in range(3)]
    return np.array([d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0]])


def _check_samples(geom, samples, margin):
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    for x in samples:
        if np.min(np.linalg.norm(geom.points - x, axis=1)) <= margin:
            raise ValueError("sample box must exclude the singular points")
    return samples


def pde_residual(kind, geom, alpha, lam, samples, h=1e-3):
    """max |(-Delta_FD - lambda) u| / |u| over the samples.

    Scalar: u = D_lambda. Transverse: u = curl D_lambda (by finite differences),
    which removes the longitudinal component and tests the transverse Helmholtz
    equation P_T(-Delta - lambda) D_lambda = 0.
    """
    lv = complex(lam.complex_value())
    samples = _check_samples(geom, samples, 20 * h)
    d = lambda y: eval_deficiency(kind, geom, alpha, lam, y)
    if kind is FieldKind.SCALAR:
        u = d
        step = h
    else:
        hc = 10 * h
        u = lambda y: fd_curl(d, y, hc)
        step = h
    worst = 0.0
    for x in samples:
        val = u(x)
        res = -fd_laplacian(u, x, step) - lv * val
        worst = max(worst, float(np.linalg.norm(res) / np.linalg.norm(val)))
    return worst


def helmholtz_residual_field(kind, geom, alpha, lam, x, h=1e-3):
    """(-Delta_FD - lambda) D_lambda at x (no transverse filtering)."""
    lv = complex(lam.complex_value())
    d = lambda y: eval_deficiency(kind, geom, alpha, lam, y)
    return -fd_laplacian(d, x, h) - lv * d(np.asarray(x, dtype=float))


def divergence_residual(geom, alpha, lam, samples, h=1e-3):
    """max a |div_FD D| / |D| for a transverse deficiency vector, a = distance to its point."""
    samples = _check_samples(geom, samples, 20 * h)
    n = alpha // 3
    worst = 0.0
    for x in samples:
        a = float(np.linalg.norm(x - geom.points[n]))
        f = lambda y: eval_deficiency(FieldKind.TRANSVERSE, geom, alpha, lam, y)
        div = fd_divergence(f, x, h * a)
        worst = max(worst, a * abs(div) / float(np.linalg.norm(f(x))))
    return worst


def singular_fit(radii, values, min_samples=8):
    """Least-squares fit values ~ (xi / a + gamma + c a) / sqrt(4 pi) -> (xi, gamma).

    With this normalization a pure scalar deficiency vector has xi = 1 and
    gamma = i sqrt(lambda), the matching Gamma entry.
    """
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=complex)
    if len(radii) < min_samples or len(radii) != len(values):
        raise ValueError(f"need at least {min_samples} radii with matching values")
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    a = np.column_stack([1.0 / radii, np.ones_like(radii), radii]) / SQRT4PI
    scale = np.linalg.norm(a, axis=0)
    an = a / scale
    if np.linalg.cond(an) > 1e10:
        raise ValueError("ill-conditioned singular fit")
    sol, *_ = np.linalg.lstsq(an.astype(complex), values, rcond=None)
    sol = sol / scale
    return complex(sol[0]), complex(sol[1])


def _channel_vectors(kind):
    # symmetric / antisymmetric combinations of the two points, per component
    s = 1.0 / math.sqrt(2.0)
    if kind is FieldKind.SCALAR:
        return [np.array([s, s]), np.array([s, -s])]
    out = []
    for comp in (2, 0, 1):
        for sign in (1.0, -1.0):
            v = np.zeros(6)
            v[comp], v[3 + comp] = s, sign * s
            out.append(v)
    return out


def channel_eigen_residual(kind, p, r=1.0):
    """max |Gamma v - lambda_chi v| over the N=2 channel vectors.

    lambda_chi = i sqrt(mu) + chi f(sqrt(mu) r) / r with f = e^{it} (scalar) or
    w (transverse), chi taken from the channel table; checks that the channel
    table diagonalizes Gamma_mu.
    """
    from .gamma import Geometry, channels_n2, gamma_matrix

    geom = Geometry.pair(r)
    g = gamma_matrix(kind, geom, p).entries
    k = branch_sqrt(p)
    prof = np.exp(1j * k * r) if kind is FieldKind.SCALAR else w_func(k * r)
    vecs = _channel_vectors(kind)
    # vectors: scalar (+, -); transverse (z+, z-, x+, x-, y+, y-)
    chis = [1.0, -1.0] if kind is FieldKind.SCALAR else [2.0, -2.0, -1.0, 1.0, -1.0, 1.0]
    if sorted(chis) != sorted(channels_n2(kind, r=r).chis()):
        return math.inf
    worst = 0.0
    for v, chi in zip(vecs, chis):
        lam = 1j * k + chi * prof / r
        worst = max(worst, float(np.max(np.abs(g @ v - lam * v))))
    return worst
