"""Spectral integrals of the extension: energy difference, norm ratio, divergence fit, kernels.

Everything is computed in the dimensionless variable t = sqrt(rho) * r_s with
r_s the smallest pairwise distance. With A(t) = r_s (M - P^dagger Gamma P) and
phi(t) = t Tr[A^{-1} dA/dt], the energy difference is

    r_s E = -(1/pi) int_0^inf Im phi(t) dt.

phi is analytic at t = 0 with phi(0) equal to the order of the threshold zero
of det A, so near the origin it is formed from the Taylor coefficients of det A.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .admissibility import discrete_spectrum_scan, theta_matrix
from .branchmath import W_COEFFS, WD_COEFFS, _NTERMS, w_func, w_deriv
from .gamma import FieldKind, gamma_k
from .krein import SQRT4PI, BoundaryMatrix
from .quadrature import (K_WEIGHTS, NODES, QuadratureError, QuadratureSettings, integrate_head,
                         integrate_oscillatory_tail)


class Status(enum.Enum):
    CONVERGED = "Converged"
    LOG_DIVERGENT = "LogDivergent"
    SPECTRAL_OBSTRUCTION = "SpectralObstruction"


@dataclass
class EnergyResult:
    value: float            # E, units 1/length
    abs_err: float
    tail_coefficient: float  # c in the large-rho integrand c / rho of E, units 1/length
    status: Status
    r_scale: float = 1.0
    notes: list = field(default_factory=list)

    @property
    def r_e(self):
        return self.value * self.r_scale

    @property
    def r_e_err(self):
        return self.abs_err * self.r_scale

    def to_dict(self):
        return {
            "value": self.value,
            "rE": self.r_e,
            "abs_err": self.abs_err,
            "rE_err": self.r_e_err,
            "tail_coefficient": self.tail_coefficient,
            "status": self.status.value,
            "r_scale": self.r_scale,
            "notes": list(self.notes),
        }


class FoldError(AssertionError):
    pass


TAIL_TOL = 1e-6          # allowed slope of r_s E against ln t for Converged
_FFT_NODES = 64


class SpectralIntegrand:
    """phi(t) for a boundary matrix, with a Taylor-coefficient form near t = 0."""

    def __init__(self, bm, r_scale=None):
        self.bm = bm
        self.r = float(r_scale or bm.length_scale())
        self.basis = bm.projector.basis
        self.mt = self.r * bm.m
        geom = bm.geom
        rho_max = geom.dist.max() / self.r if geom.n > 1 else 1.0
        self.rho_max = max(1.0, rho_max)
        # det A is entire; keep the circle small enough that 64 coefficients resolve it
        self.radius = min(0.5, 2.0 / rho_max)
        self.t_switch = 0.5 * self.radius
        self._coeffs = None

    def matrices(self, t):
        t = np.asarray(t, dtype=complex)
        k = t / self.r
        g = gamma_k(self.bm.kind, self.bm.geom, k)
        gd = gamma_k(self.bm.kind, self.bm.geom, k, deriv=True)
        b = self.basis
        a = self.mt - self.r * np.einsum("ma,...ab,nb->...mn", b, g, b)
        ad = -np.einsum("ma,...ab,nb->...mn", b, gd, b)
        return a, ad

    def phi_direct(self, t):
        a, ad = self.matrices(t)
        tr = np.trace(np.linalg.solve(a, ad), axis1=-2, axis2=-1)
        return np.asarray(t) * tr

    def g_trace(self, k):
        """g = Tr[(M - P Gamma_mu P)^{-1} P Gamma'_mu P] at mu = k^2, k on the chosen side."""
        k = np.asarray(k, dtype=complex)
        b = self.basis
        gm = gamma_k(self.bm.kind, self.bm.geom, k)
        gk = gamma_k(self.bm.kind, self.bm.geom, k, deriv=True) / (2 * k[..., None, None])
        a = self.bm.m - np.einsum("ma,...ab,nb->...mn", b, gm, b)
        rhs = np.einsum("ma,...ab,nb->...mn", b, gk, b)
        return np.trace(np.linalg.solve(a, rhs), axis1=-2, axis2=-1)

    def det_coefficients(self):
        """Taylor coefficients of det A(t) with rounding-level leading terms set to 0."""
        if self._coeffs is None:
            n = _FFT_NODES
            z = self.radius * np.exp(2j * np.pi * np.arange(n) / n)
            a, _ = self.matrices(z)
            dets = np.linalg.det(a)
            c = np.fft.fft(dets) / n
            c = c / self.radius ** np.arange(n)
            big = np.max(np.abs(dets))
            mags = np.abs(c) * self.radius ** np.arange(n)
            nz = np.nonzero(mags > 1e3 * np.finfo(float).eps * big)[0]
            if len(nz) == 0:
                raise QuadratureError("determinant vanishes identically near the threshold")
            order = int(nz[0])
            self._coeffs = (order, c[order:n // 2])
        return self._coeffs

    @property
    def threshold_order(self):
        return self.det_coefficients()[0]

    def phi_series(self, t):
        order, c = self.det_coefficients()
        t = np.asarray(t, dtype=complex)
        j = np.arange(len(c))
        den = np.polyval(c[::-1], t)
        num = np.polyval((c * (j + order))[::-1], t)
        return num / den

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape, dtype=complex)
        small = t < self.t_switch
        if np.any(small):
            out[small] = self.phi_series(t[small])
        if np.any(~small):
            out[~small] = self.phi_direct(t[~small])
        return out

    def energy_density(self, t):
        """-(1/pi) Im phi(t): integrand of r_s E."""
        return -np.imag(self.phi(t)) / math.pi

    def check_fold(self, samples=16, rtol=1e-12):
        rng = np.random.default_rng(12345)
        k = rng.uniform(0.05, 20.0, samples) / self.r
        above = self.g_trace(k)
        below = self.g_trace(-k)
        scale = np.maximum(np.abs(above), 1.0 / (k * k * self.r * self.r))
        dev = np.max(np.abs(below - np.conj(above)) / scale)
        if dev > rtol:
            raise FoldError(f"g(rho - i0) != conj g(rho + i0): deviation {dev:.3e}")
        return dev


SMOOTHING_CUTOFFS = tuple(np.geomspace(20.0, 320.0, 10))


def smoothed_log_slope(f, start, cutoffs=SMOOTHING_CUTOFFS, panel=math.pi):
    """Slope a of I(t_c) = int f(t) exp(-(t/t_c)^2) dt against ln t_c.

    The Gaussian damping leaves the logarithm of a 1/t tail intact while every
    oscillation, commensurate or not, is suppressed like exp(-(w t_c / 2)^2).
    Only the cutoff-dependent part matters for the slope, so [0, start] is
    skipped and one set of fixed Kronrod nodes serves all cutoffs. The
    power tail t^-3 of the density turns into ln(t_c) / t_c^2 after damping,
    hence the model a ln t_c + b + sum of t_c^-1 .. t_c^-4 with log partners.
    """
    end = 7.0 * max(cutoffs)
    n = int(math.ceil((end - start) / panel))
    edges = np.linspace(start, end, n + 1)
    half = 0.5 * np.diff(edges)
    x = 0.5 * (edges[1:] + edges[:-1])[:, None] + half[:, None] * NODES[None, :]
    wts = (half[:, None] * K_WEIGHTS[None, :]).ravel()
    x = x.ravel()
    fx = np.asarray(f(x), dtype=float)
    tc = np.asarray(cutoffs, dtype=float)
    vals = np.array([np.dot(wts * np.exp(-(x / c) ** 2), fx) for c in tc])
    lg = np.log(tc)
    a = np.column_stack([lg, np.ones_like(tc), tc**-1.0, tc**-2.0, lg * tc**-2.0,
                         tc**-3.0, tc**-4.0, lg * tc**-4.0])
    scale = np.linalg.norm(a, axis=0)
    sol, *_ = np.linalg.lstsq(a / scale, vals, rcond=None)
    return float(sol[0] / scale[0])


def _integrate_density(f, t_switch, q, breakpoints=(), want_tail=True, rho_max=1.0):
    """Head over [0, T0] (split at t_switch) plus accelerated tail -> (value, err, tail_coef)."""
    t0 = q.head_cutoff
    head, herr = integrate_head(f, 0.0, t0, 0.4 * q.abs_tol,
                                breakpoints=[t_switch, *breakpoints], panel=math.pi / 2,
                                max_panels=q.max_panels)
    tail = integrate_oscillatory_tail(f, t0, math.pi, 0.4 * q.abs_tol, q.accel_depth,
                                      q.max_segments, return_details=True)
    coef = smoothed_log_slope(f, t_switch, panel=math.pi / rho_max) if want_tail else 0.0
    return head + tail.value, herr + tail.err, coef


def _status(coef, obstruction):
    # coef: slope of the r_s E partial integrals against ln t
    if obstruction:
        return Status.SPECTRAL_OBSTRUCTION
    if abs(coef) >= TAIL_TOL:
        return Status.LOG_DIVERGENT
    return Status.CONVERGED


def energy_general(bm, q=None, r_scale=None):
    """E = (1/pi) int Im g(rho + i0) sqrt(rho) drho through full matrix inversion."""
    q = q or QuadratureSettings()
    if bm.rank == 0:
        return EnergyResult(0.0, 0.0, 0.0, Status.CONVERGED, r_scale or bm.length_scale(),
                            ["empty projector: no correction to the Laplacian"])
    integrand = SpectralIntegrand(bm, r_scale)
    integrand.check_fold()
    notes = []
    roots = discrete_spectrum_scan(bm)
    if roots:
        notes.append("discrete spectrum at mu = " + ", ".join(f"{m:.6g}" for m in roots))
    try:
        val, err, coef = _integrate_density(integrand.energy_density, integrand.t_switch, q,
                                            rho_max=integrand.rho_max)
    except (QuadratureError, np.linalg.LinAlgError) as exc:
        notes.append(f"integration failed on the continuum: {exc}")
        return EnergyResult(float("nan"), float("inf"), float("nan"),
                            Status.SPECTRAL_OBSTRUCTION, integrand.r, notes)
    status = _status(coef, bool(roots))
    if status is Status.LOG_DIVERGENT:
        notes.append(f"logarithmic tail: E integrand ~ {coef / (2 * integrand.r):.6g} / rho "
                     f"(trace of M = {np.trace(bm.m):.6g}, Tr M / (2 pi) expected)")
    r = integrand.r
    return EnergyResult(val / r, err / r, coef / (2 * r), status, r, notes)


# ---------------------------------------------------------------------------
# channel path (N = 2): scalar functions only, no matrices
# ---------------------------------------------------------------------------

def _transverse_parts(t):
    """V1 = (w' + i/2)/t and W2 = (w + 3/4 + i t/2)/t^2, evaluated without cancellation."""
    t = np.asarray(t, dtype=float)
    small = t < 0.5
    v1 = np.empty(t.shape, dtype=complex)
    w2 = np.empty(t.shape, dtype=complex)
    if np.any(small):
        ts = t[small]
        v1[small] = np.polyval(WD_COEFFS[1:_NTERMS - 1][::-1], ts.astype(complex))
        w2[small] = np.polyval(W_COEFFS[2:_NTERMS][::-1], ts.astype(complex))
    if np.any(~small):
        tb = t[~small]
        v1[~small] = (w_deriv(tb) + 0.5j) / tb
        w2[~small] = (w_func(tb) + 0.75 + 0.5j * tb) / tb**2
    return v1, w2


def _scalar_parts(t):
    """V1 = i (e^{it} - 1)/t and W2 = (e^{it} - 1 - i t)/t^2 for real t."""
    t = np.asarray(t, dtype=float)
    small = t < 0.5
    v1 = np.empty(t.shape, dtype=complex)
    w2 = np.empty(t.shape, dtype=complex)
    if np.any(small):
        ts = t[small].astype(complex)
        n = np.arange(2, 24)
        c = np.array([1j**m / math.factorial(m) for m in n])
        w2[small] = np.polyval(c[::-1], ts)
        c1 = np.array([1j * 1j**m / math.factorial(m) for m in range(1, 24)])
        v1[small] = np.polyval(c1[::-1], ts)
    if np.any(~small):
        tb = t[~small]
        em1 = -2.0 * np.sin(0.5 * tb) ** 2 + 1j * np.sin(tb)
        v1[~small] = 1j * em1 / tb
        w2[~small] = (em1 - 1j * tb) / tb**2
    return v1, w2


def channel_ratio(kind, chi, m_eigenvalue, r, t):
    """t N(t) / D(t) for one channel, with D = i t + chi f(t) - r m and N = dD/dt.

    f = w for the transverse kind and e^{it} for the scalar kind. Written as
    D = delta + t (i a + chi t W2), N = i a + chi t V1, where delta vanishes for
    the Krein eigenvalue, so the threshold zero cancels analytically.
    """
    t = np.asarray(t, dtype=float)
    if kind is FieldKind.TRANSVERSE:
        a = 1.0 - 0.5 * chi
        delta = -0.75 * chi - r * m_eigenvalue
        v1, w2 = _transverse_parts(t)
    else:
        a = 1.0 + chi
        delta = chi - r * m_eigenvalue
        v1, w2 = _scalar_parts(t)
    num = 1j * a + chi * t * v1
    den_t = 1j * a + chi * t * w2
    if abs(delta) <= 1e-14 * max(1.0, abs(chi)):
        return num / den_t
    return t * num / (delta + t * den_t)


def channel_density(channels, t):
    """-(1/pi) sum over channels of Im[t N / D]: integrand of r E."""
    acc = np.zeros(np.shape(t))
    for ch in channels.channels:
        if ch.multiplicity == 0:
            continue
        acc = acc + ch.multiplicity * np.imag(channel_ratio(channels.kind, ch.chi, ch.m_eigenvalue,
                                                            channels.r, t))
    return -acc / math.pi


def energy_channels(channels, r=None, q=None):
    """Energy from the N=2 channel decomposition, summing channels before integrating."""
    q = q or QuadratureSettings()
    r = float(r if r is not None else channels.r)
    if r != channels.r:
        from dataclasses import replace
        channels = replace(channels, r=r)
    if all(ch.chi == 0 and ch.m_eigenvalue == 0 for ch in channels.channels):
        return EnergyResult(0.0, 0.0, 0.0, Status.CONVERGED, r)
    f = lambda t: channel_density(channels, t)
    val, err, coef = _integrate_density(f, 0.5, q)
    return EnergyResult(val / r, err / r, coef / (2 * r), _status(coef, False), r)


@dataclass
class PrintedFormResult:
    literal: EnergyResult
    i_variant: EnergyResult


def _printed_density(channels, t, variant):
    acc = np.zeros(np.shape(t))
    t = np.asarray(t, dtype=float)
    v1, w2 = _transverse_parts(t)
    for ch in channels.channels:
        chi = ch.chi
        a = 1.0 - 0.5 * chi
        den_t = 1j * a + chi * t * w2            # D / t
        dwdt = -0.5j + t * v1                    # dw/dt
        wprime = 1j * dwdt if variant else dwdt
        num = chi * wprime - 1.0
        acc = acc + ch.multiplicity * np.real(num / den_t)
    return acc / (2 * math.pi)


def energy_printed_form(channels, r=1.0, q=None):
    """The printed channel integrands (1/2 pi r) sum Re[(chi w' - 1)/D] t dt, literally and with w' = i dw/dt.

    Krein channel data (D = (3/4) chi + i t + chi w) is assumed.
    """
    q = q or QuadratureSettings()
    if channels.kind is not FieldKind.TRANSVERSE:
        raise ValueError("the printed channel integrands are transverse")
    out = []
    for variant in (False, True):
        f = lambda t, v=variant: _printed_density(channels, t, v)
        probe = np.array([1e-9, 1e-8])
        growth = probe * f(probe)
        if abs(growth[0]) > 1e-6 and abs(growth[0] - growth[1]) < 1e-3 * abs(growth[0]):
            out.append(EnergyResult(float("nan"), float("inf"), float("nan"), Status.LOG_DIVERGENT, r,
                                    [f"integrand ~ {growth[0]:.6g}/t as t -> 0"]))
            continue
        val, err, coef = _integrate_density(f, 0.5, q)
        out.append(EnergyResult(val / r, err / r, coef / (2 * r), _status(coef, False), r))
    return PrintedFormResult(*out)


# ---------------------------------------------------------------------------
# norm ratio, divergence fit
# ---------------------------------------------------------------------------

def norm_log_ratio(bm, q=None, r_scale=None):
    """(1/(8 pi i)) int [g(rho+i0) - g(rho-i0)] ln rho drho with rho in units of r_s^-2.

    Equals -(1/(2 pi)) int_0^inf Im phi(t) ln t dt / t.
    """
    q = q or QuadratureSettings()
    if bm.rank == 0:
        return 0.0
    roots = discrete_spectrum_scan(bm)
    if roots:
        raise ArithmeticError("SpectralObstruction: discrete spectrum makes the norm ratio infinite")
    integrand = SpectralIntegrand(bm, r_scale)

    def f(t):
        return -np.imag(integrand.phi(t)) * np.log(t) / t / (2 * math.pi)

    geo = [integrand.t_switch * 2.0**-j for j in range(1, 40)]
    val, err, _ = _integrate_density(f, integrand.t_switch, q, breakpoints=geo, want_tail=False)
    return val


def divergence_coefficient(bm, q=None, lambdas=(1e2, 1e3, 1e4, 1e5, 1e6)):
    """Slope a of the regularized partial integrals E(Lambda) ~ a ln Lambda + b + c / Lambda.

    Lambda is the spectral cutoff in units of r_s^-2, imposed as the Gaussian
    damping exp(-rho / Lambda): the logarithmic growth is untouched and the
    oscillatory parts converge. a has units of 1/length. For the normalization
    E = (1/pi) int Im g sqrt(rho) drho the 1/rho tail of the integrand is
    Tr M / (2 pi), and that is what the fit returns.
    """
    q = q or QuadratureSettings()
    if bm.rank == 0:
        return 0.0
    integrand = SpectralIntegrand(bm)
    vals = []
    for lam in lambdas:
        tc = math.sqrt(lam)
        f = lambda t, tc=tc: integrand.energy_density(t) * np.exp(-(t / tc) ** 2)
        v, _ = integrate_head(f, 0.0, 7.0 * tc, q.abs_tol, breakpoints=[integrand.t_switch],
                              panel=math.pi / 2, max_panels=q.max_panels)
        vals.append(v / integrand.r)
    lam = np.asarray(lambdas, dtype=float)
    a = np.column_stack([np.log(lam), np.ones_like(lam), 1.0 / lam])
    scale = np.linalg.norm(a, axis=0)
    sol, *_ = np.linalg.lstsq(a / scale, np.asarray(vals), rcond=None)
    return float(sol[0] / scale[0])


# ---------------------------------------------------------------------------
# theta family
# ---------------------------------------------------------------------------

def theta_sweep(thetas, r=1.0, q=None):
    q = q or QuadratureSettings()
    rows = []
    for th in thetas:
        res = energy_general(theta_matrix(float(th), r), q)
        rows.append((float(th), res.r_e, res.r_e_err, res.status.value))
    return rows


def golden_section(f, a, b, tol):
    """Minimize a unimodal f on [a, b] to bracket width tol -> (x, f(x))."""
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def theta_minimize(interval, r=1.0, q=None, tol=1e-4):
    """Golden-section minimizer of r E(M(theta)) on an interval of [0, pi] -> (theta, E)."""
    q = q or QuadratureSettings(abs_tol=1e-9)
    lo, hi = interval
    if not 0 <= lo < hi <= math.pi:
        raise ValueError("interval must lie within [0, pi]")
    f = lambda th: energy_general(theta_matrix(th, r), q).value
    return golden_section(f, lo, hi, tol)


# ---------------------------------------------------------------------------
# square-root kernel difference
# ---------------------------------------------------------------------------

def kernel_sqrt_diff(bm, x, y, q=None):
    """Kernel of T_M^{1/2} - Delta^{1/2} at (x, y) by Abel summation.

    (1/pi) int_0^inf 2 k^2 Im[sum b_mm'(k) (PD)^m(x) (PD)^m'(y)] e^{-eps k} dk,
    extrapolated to eps -> 0 by polynomial (Richardson) extrapolation over the
    regulator schedule times min(a, b).
    """
    q = q or QuadratureSettings()
    if bm.kind is not FieldKind.SCALAR:
        raise ValueError("scalar kind only")
    if bm.rank == 0:
        return 0.0
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.allclose(x, y, rtol=0, atol=0):
        raise ValueError("x and y must differ")
    ax = np.linalg.norm(bm.geom.points - x, axis=1)
    ay = np.linalg.norm(bm.geom.points - y, axis=1)
    if np.min(ax) == 0 or np.min(ay) == 0:
        raise ValueError("x and y must avoid the marked points")
    basis = bm.projector.basis
    s_max = float(np.max(ax[:, None] + ay[None, :]))
    s_min = float(np.min(ax[:, None] + ay[None, :]))

    def x_of_k(k):
        k = np.asarray(k, dtype=complex)
        g = gamma_k(FieldKind.SCALAR, bm.geom, k)
        a = bm.m - np.einsum("ma,...ab,nb->...mn", basis, g, basis)
        dx = np.exp(1j * k[..., None] * ax) / (SQRT4PI * ax)
        dy = np.exp(1j * k[..., None] * ay) / (SQRT4PI * ay)
        px = dx @ basis.T
        py = dy @ basis.T
        sol = np.linalg.solve(a, py[..., None])[..., 0]
        return np.sum(px * sol, axis=-1)

    base = min(np.min(ax), np.min(ay))
    eps_list = [c * base for c in q.regulators]
    vals = []
    for eps in eps_list:
        f = lambda k, e=eps: 2 * k * k * np.imag(x_of_k(k)) * np.exp(-e * k) / math.pi
        kmax = 40.0 / eps
        v, _ = integrate_head(f, 0.0, kmax, 0.01 * q.abs_tol * abs(1.0 / (base * base * s_min * s_min)),
                              panel=math.pi / (2 * s_max), max_panels=q.max_panels)
        vals.append(v)
    e = np.asarray(eps_list)
    full = np.polyval(np.polyfit(e, vals, len(e) - 1), 0.0)
    lower = np.polyval(np.polyfit(e[1:], vals[1:], len(e) - 2), 0.0)
    if abs(full - lower) > 1e-2 * max(abs(full), 1e-300):
        raise QuadratureError("Abel extrapolation did not settle")
    return float(full)
