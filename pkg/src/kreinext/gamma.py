"""Boundary-value matrices Gamma_mu, their mu-derivatives, projectors and N=2 channels."""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .branchmath import CutPoint, branch_sqrt, w_deriv, w_func


class FieldKind(enum.Enum):
    SCALAR = "scalar"
    TRANSVERSE = "transverse"

    @property
    def block(self):
        return 1 if self is FieldKind.SCALAR else 3

    @classmethod
    def parse(cls, text):
        t = str(text).strip().lower()
        if t in ("scalar", "s"):
            return cls.SCALAR
        if t in ("transverse", "vector", "transversevector", "t", "v"):
            return cls.TRANSVERSE
        raise ValueError(f"unknown field kind {text!r}")


class Geometry:
    """N marked points in 3-space; distances and direction dyads are precomputed."""

    def __init__(self, points):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1 and pts.size == 3:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise ValueError("points must be a non-empty list of 3-vectors")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        self.points = pts
        self.n = len(pts)
        diff = pts[None, :, :] - pts[:, None, :]
        dist = np.linalg.norm(diff, axis=-1)
        off = ~np.eye(self.n, dtype=bool)
        if np.any(dist[off] <= 0):
            raise ValueError("coincident points: pairwise distances must be positive")
        self.dist = dist
        unit = np.zeros_like(diff)
        unit[off] = diff[off] / dist[off][:, None]
        self.unit = unit
        self.dyad = np.einsum("abi,abj->abij", unit, unit)

    @property
    def r_min(self):
        if self.n < 2:
            return None
        return float(self.dist[~np.eye(self.n, dtype=bool)].min())

    def scaled(self, factor):
        return Geometry(self.points * factor)

    @classmethod
    def pair(cls, r):
        return cls([[0.0, 0.0, 0.0], [0.0, 0.0, float(r)]])


def boundary_dim(kind, geom):
    return kind.block * geom.n


def _offdiag_tensor(kind, geom, a, b):
    if kind is FieldKind.SCALAR:
        return np.ones((1, 1))
    return 3.0 * geom.dyad[a, b] - np.eye(3)


def gamma_k(kind, geom, k, deriv=False):
    """Gamma (or dGamma/dk) as a function of k = sqrt(mu), vectorized over k.

    Returns an array of shape k.shape + (d, d). The entries are entire in k,
    so any complex k is accepted; k = 0 gives the Krein matrix.
    """
    k = np.asarray(k, dtype=complex)
    d = boundary_dim(kind, geom)
    blk = kind.block
    out = np.zeros(k.shape + (d, d), dtype=complex)
    diag = (1j * np.ones_like(k)) if deriv else (1j * k)
    for a in range(geom.n):
        for i in range(blk):
            out[..., a * blk + i, a * blk + i] = diag
    for a in range(geom.n):
        for b in range(a + 1, geom.n):
            r = geom.dist[a, b]
            t = k * r
            if kind is FieldKind.SCALAR:
                val = 1j * np.exp(1j * t) if deriv else np.exp(1j * t) / r
            else:
                val = w_deriv(t) if deriv else w_func(t) / r
            blockv = np.asarray(val)[..., None, None] * _offdiag_tensor(kind, geom, a, b)
            out[..., a * blk:(a + 1) * blk, b * blk:(b + 1) * blk] = blockv
            out[..., b * blk:(b + 1) * blk, a * blk:(a + 1) * blk] = blockv
    return out


@dataclass(frozen=True)
class GammaMatrix:
    entries: np.ndarray
    at: CutPoint
    kind: FieldKind

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def gamma_matrix(kind, geom, p):
    """Gamma_mu: diagonal i sqrt(mu); off-diagonal e^{i sqrt(mu) r}/r or (w(sqrt(mu) r)/r)(3E - I)."""
    return GammaMatrix(gamma_k(kind, geom, branch_sqrt(p)), p, kind)


def gamma_deriv(kind, geom, p):
    """dGamma/dmu, entrywise (dGamma/dk) / (2k)."""
    k = branch_sqrt(p)
    if k == 0:
        raise ValueError("dGamma/dmu is singular at mu = 0")
    return GammaMatrix(gamma_k(kind, geom, k, deriv=True) / (2 * k), p, kind)


def krein_gamma(kind, geom):
    """Gamma at mu -> 0: zero diagonal, 1/r or -(3/(4r))(3E - I) off the diagonal."""
    return gamma_k(kind, geom, 0.0).real


class Projector:
    """Real orthonormal basis (rows) of a subspace of the boundary space."""

    def __init__(self, basis, dim=None, atol=1e-12):
        b = np.array(basis, dtype=float)
        if b.size == 0:
            if dim is None:
                raise ValueError("empty projector needs the boundary dimension")
            b = np.zeros((0, dim))
        if b.ndim == 1:
            b = b[None, :]
        if dim is not None and b.shape[1] != dim:
            raise ValueError(f"projector vectors have length {b.shape[1]}, expected {dim}")
        if not np.all(np.isfinite(b)):
            raise ValueError("projector entries must be finite")
        if len(b) > b.shape[1]:
            raise ValueError("more basis vectors than the boundary dimension")
        gram = b @ b.T
        if len(b) and np.max(np.abs(gram - np.eye(len(b)))) > atol:
            raise ValueError("projector basis is not orthonormal")
        self.basis = b

    @property
    def rank(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    @classmethod
    def full(cls, dim):
        return cls(np.eye(dim))

    @classmethod
    def empty(cls, dim):
        return cls(np.zeros((0, dim)), dim=dim)


def project(m, p):
    """P^dagger m P for the real basis rows of the projector."""
    m = np.asarray(m)
    if m.shape[-2:] != (p.dim, p.dim):
        raise ValueError(f"matrix of shape {m.shape[-2:]} does not match projector dimension {p.dim}")
    b = p.basis
    return np.einsum("ma,...ab,nb->...mn", b, m, b)


@dataclass(frozen=True)
class Channel:
    chi: float
    multiplicity: int
    m_eigenvalue: float


@dataclass(frozen=True)
class ChannelDecomposition:
    kind: FieldKind
    channels: tuple
    r: float = 1.0

    def chis(self):
        return [c.chi for c in self.channels for _ in range(c.multiplicity)]

    @property
    def dim(self):
        return sum(c.multiplicity for c in self.channels)


def theta_basis(theta):
    """Orthonormal rows spanning cos(theta) e_{m,1} - sin(theta) e_{m,2}, m = r, p, q.

    Boundary vectors are ordered (point 1: x, y, z; point 2: x, y, z) with the
    pair separated along z, so r is the z component.
    """
    c, s = math.cos(theta), math.sin(theta)
    b = np.zeros((3, 6))
    for row, comp in enumerate((2, 0, 1)):
        b[row, comp] = c
        b[row, 3 + comp] = -s
    return b


def channels_n2(kind, theta=None, r=1.0):
    """Channels of the N=2 problem: Gamma eigenvalue i sqrt(mu) + chi * (off-diagonal profile)."""
    if theta is None:
        if kind is FieldKind.SCALAR:
            chis = [(1.0, 1), (-1.0, 1)]
        else:
            chis = [(2.0, 1), (-2.0, 1), (-1.0, 2), (1.0, 2)]
    else:
        if kind is FieldKind.SCALAR:
            raise ValueError("the theta family is defined for the transverse kind only")
        s2 = math.sin(2 * theta)
        chis = [(-2.0 * s2, 1), (s2, 2)]
    unit = 1.0 if kind is FieldKind.SCALAR else -0.75
    chans = tuple(Channel(chi, mult, chi * unit / r) for chi, mult in chis)
    return ChannelDecomposition(kind, chans, r)
