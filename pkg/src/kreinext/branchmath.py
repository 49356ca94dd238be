"""Square root with the cut along the positive real axis, and the function w(t).

Spectral parameters live on the plane cut along [0, +inf). Off the cut the
root has arg/2 with arg in (0, 2pi), so Im sqrt >= 0. Points on the cut carry
an explicit side tag instead of a small imaginary shift.
"""

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np


class Side(enum.Enum):
    ABOVE = "above"
    BELOW = "below"


@dataclass(frozen=True)
class CutPoint:
    """Spectral parameter with branch information.

    Either ``value`` (off the closed positive real axis) or ``rho > 0`` with a
    side tag. Use the ``off_cut`` / ``on_cut`` constructors.
    """

    value: complex | None = None
    rho: float | None = None
    side: Side | None = None

    def __post_init__(self):
        if self.value is not None:
            if self.rho is not None or self.side is not None:
                raise ValueError("CutPoint is either off-cut or on-cut, not both")
            v = complex(self.value)
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise ValueError("CutPoint value must be finite")
            if v.imag == 0.0 and v.real >= 0.0:
                raise ValueError(f"off-cut value {v} lies on the closed positive axis")
            object.__setattr__(self, "value", v)
        else:
            if self.rho is None or self.side is None:
                raise ValueError("on-cut CutPoint needs rho and side")
            rho = float(self.rho)
            if not (rho > 0.0 and math.isfinite(rho)):
                raise ValueError("on-cut CutPoint needs finite rho > 0")
            object.__setattr__(self, "rho", rho)
            object.__setattr__(self, "side", Side(self.side))

    @classmethod
    def off_cut(cls, value):
        return cls(value=complex(value))

    @classmethod
    def on_cut(cls, rho, side=Side.ABOVE):
        return cls(rho=rho, side=Side(side))

    @property
    def is_on_cut(self):
        return self.value is None

    def complex_value(self):
        """The parameter as a plain complex number (side information dropped)."""
        return complex(self.rho) if self.is_on_cut else self.value

    def conjugate(self):
        """Mirror point: conjugate value, or the opposite side of the cut."""
        if self.is_on_cut:
            other = Side.BELOW if self.side is Side.ABOVE else Side.ABOVE
            return CutPoint(rho=self.rho, side=other)
        return CutPoint(value=self.value.conjugate())

    def sqrt(self):
        return branch_sqrt(self)

    def __str__(self):
        if self.is_on_cut:
            return f"{self.rho!r}:{self.side.value}"
        return repr(self.value)


def branch_sqrt(p):
    """sqrt on the plane cut along [0, inf): Im >= 0 off the cut, +-sqrt(rho) on it."""
    if p.is_on_cut:
        s = math.sqrt(p.rho)
        return complex(s if p.side is Side.ABOVE else -s)
    v = p.value
    if v.imag > 0.0 or (v.imag == 0.0 and v.real < 0.0):
        # principal branch already has arg/2 in (0, pi/2]; negative axis handled
        # here so a signed zero imaginary part cannot flip the sheet
        return cmath.sqrt(complex(v.real, abs(v.imag)))
    return -cmath.sqrt(v)


def sqrt_array(z):
    """Vectorized branch_sqrt for off-cut complex values (Im >= 0 result)."""
    z = np.asarray(z, dtype=complex)
    upper = np.sqrt(z.real + 1j * np.abs(z.imag))
    return np.where(z.imag < 0, -np.sqrt(z), upper)


# ---------------------------------------------------------------------------
# w(t) = (3 / (2 t^2)) (i t e^{it} - e^{it} + 1)
#      = (3/2) sum_{n>=0} i^{n+2} (n+1) t^n / (n+2)!
# ---------------------------------------------------------------------------

SERIES_SWITCH = 0.5
_NTERMS = 20  # remainder at |t| = 0.5 is ~1e-20


def _w_coefficients(n):
    c = np.empty(n, dtype=complex)
    for k in range(n):
        c[k] = 1.5 * (1j ** ((k + 2) % 4)) * (k + 1) / math.factorial(k + 2)
    return c


W_COEFFS = _w_coefficients(_NTERMS + 1)
# coefficients of dw/dt
WD_COEFFS = np.array([(k + 1) * W_COEFFS[k + 1] for k in range(_NTERMS)])


def _horner(coeffs, t):
    # polyval wants highest degree first
    return np.polyval(coeffs[::-1], t)


def w_series(t, start=0):
    """Taylor series of w with the first ``start`` terms removed."""
    t = np.asarray(t, dtype=complex)
    tail = _horner(W_COEFFS[start:_NTERMS], t)
    return tail * t**start if start else tail


def wd_series(t, start=0):
    """Taylor series of dw/dt with the first ``start`` terms removed."""
    t = np.asarray(t, dtype=complex)
    tail = _horner(WD_COEFFS[start:_NTERMS - 1], t)
    return tail * t**start if start else tail


def _w_closed(t):
    e = np.exp(1j * t)
    return 1.5 * (1j * t * e - e + 1.0) / (t * t)


def _wd_closed(t):
    return -1.5 * np.exp(1j * t) / t - 2.0 * _w_closed(t) / t


def _switch(t, series, closed):
    t = np.asarray(t, dtype=complex)
    small = np.abs(t) < SERIES_SWITCH
    if t.ndim == 0:
        return complex(series(t) if small else closed(t))
    out = np.empty(t.shape, dtype=complex)
    out[small] = series(t[small])
    big = ~small
    out[big] = closed(t[big])
    return out


def w_func(t):
    """w(t); exact -3/4 at t = 0. Accepts scalars or arrays."""
    return _switch(t, w_series, _w_closed)


def w_deriv(t):
    """dw/dt; exact -i/2 at t = 0. Accepts scalars or arrays."""
    return _switch(t, wd_series, _wd_closed)


def w_shifted(t, start):
    """w(t) minus its first ``start`` Taylor terms, free of cancellation."""
    def closed(x):
        head = _horner(W_COEFFS[:start], x) if start else 0.0
        return _w_closed(x) - head
    return _switch(t, lambda x: w_series(x, start), closed)


def wd_shifted(t, start):
    """dw/dt minus its first ``start`` Taylor terms."""
    def closed(x):
        head = _horner(WD_COEFFS[:start], x) if start else 0.0
        return _wd_closed(x) - head
    return _switch(t, lambda x: wd_series(x, start), closed)
