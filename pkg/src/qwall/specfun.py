"""Special functions for the disk and sphere bases.

Cylindrical Bessel functions ``J_m``, spherical Bessel functions ``j_l``,
their derivatives and positive zeros, and orthonormal spherical harmonics
together with the tangential pieces needed for vector spherical harmonics.

Pointwise evaluation is delegated to :mod:`scipy.special`; the zero finder is
local (sign scan, bracketed refinement, Newton polish).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

CYLINDRICAL = "cylindrical"
SPHERICAL = "spherical"

ZERO_TOL = 1e-12


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


@dataclass(frozen=True)
class BesselOrder:
    """Kind and non-negative order of a Bessel function."""

    kind: str
    order: int

    def __post_init__(self):
        if self.kind not in (CYLINDRICAL, SPHERICAL):
            raise ValueError(f"unknown Bessel kind {self.kind!r}")
        if int(self.order) != self.order or self.order < 0:
            raise ValueError(f"Bessel order must be a non-negative integer, got {self.order}")

    @property
    def nu(self) -> float:
        """Order of the equivalent cylindrical function (``l + 1/2`` for spherical)."""
        return self.order + 0.5 if self.kind == SPHERICAL else float(self.order)


def cylindrical(m: int) -> tuple[BesselOrder, int]:
    """Map a signed cylindrical order to ``(BesselOrder(|m|), sign)``.

    Uses ``J_{-m} = (-1)^m J_m`` so that ``J_m(x) = sign * J_{|m|}(x)``.
    """
    sign = -1 if (m < 0 and m % 2) else 1
    return BesselOrder(CYLINDRICAL, abs(int(m))), sign


def spherical(l: int) -> BesselOrder:
    return BesselOrder(SPHERICAL, l)


def bessel_j(order: BesselOrder, x):
    """Evaluate ``J_m(x)`` or ``j_l(x)``.

    Parameters
    ----------
    order : BesselOrder
    x : float or array_like
        Non-negative argument.

    Raises
    ------
    DomainError
        If any ``x < 0``.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("Bessel argument must be non-negative")
    if order.kind == CYLINDRICAL:
        out = special.jv(order.order, xa)
    else:
        out = special.spherical_jn(order.order, xa)
    return float(out) if out.ndim == 0 else out


def bessel_j_prime(order: BesselOrder, x):
    """Derivative ``d/dx`` of :func:`bessel_j`; requires ``x > 0``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("Bessel derivative requires a positive argument")
    if order.kind == CYLINDRICAL:
        out = special.jvp(order.order, xa)
    else:
        out = special.spherical_jn(order.order, xa, derivative=True)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BesselZeroTable:
    order: BesselOrder
    zeros: tuple[float, ...]

    def __len__(self):
        return len(self.zeros)

    def __getitem__(self, n):
        return self.zeros[n]


def _mcmahon(nu: float, s: int) -> float:
    beta = (s + 0.5 * nu - 0.25) * math.pi
    return beta - (4.0 * nu * nu - 1.0) / (8.0 * beta)


def bessel_zeros(order: BesselOrder, n_max: int) -> BesselZeroTable:
    """First ``n_max`` positive zeros of ``J_m`` or ``j_l``.

    Zeros are bracketed by a sign scan between ``nu`` (below the first zero)
    and a McMahon estimate of the last one, refined with Brent's method and
    polished with one Newton step. Every returned zero satisfies
    ``|J(z)| < 1e-12``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return _zero_table(order, int(n_max))


@lru_cache(maxsize=None)
def _zero_table(order: BesselOrder, n_max: int) -> BesselZeroTable:
    if order.kind == SPHERICAL and order.order == 0:
        # j_0 = sin x / x
        return BesselZeroTable(order, tuple(math.pi * s for s in range(1, n_max + 1)))

    f = lambda x: bessel_j(order, x)
    nu = order.nu
    # zero spacing exceeds 2.9 for every order >= 0
    step = 0.25
    lo = max(nu, step)
    hi = _mcmahon(nu, n_max) + math.pi
    zeros: list[float] = []
    while len(zeros) < n_max:
        xs = np.arange(lo, hi + step, step)
        vals = f(xs)
        for a, b, fa, fb in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
            if fa == 0.0:
                zeros.append(float(a))
            elif fa * fb < 0.0:
                z = optimize.brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
                d = bessel_j_prime(order, z)
                z_newton = z - f(z) / d
                if a < z_newton < b and abs(f(z_newton)) <= abs(f(z)):
                    z = z_newton
                zeros.append(float(z))
            if len(zeros) == n_max:
                break
        lo, hi = xs[-1], xs[-1] + 4 * math.pi

    for z in zeros:
        if abs(f(z)) >= ZERO_TOL:
            raise ArithmeticError(f"zero refinement failed for {order} at {z}: |J|={abs(f(z)):.3e}")
    return BesselZeroTable(order, tuple(zeros))


def spherical_harmonic(l: int, m: int, theta, phi):
    """Orthonormal spherical harmonic ``Y_{l,m}(theta, phi)`` (Condon-Shortley phase)."""
    _check_lm(l, m)
    return special.sph_harm_y(l, m, theta, phi)


def spherical_harmonic_gradient(l: int, m: int, theta, phi):
    """Return ``(Y, dY/dtheta, (1/sin theta) dY/dphi)``.

    The last two are the polar and azimuthal components of
    ``Psi_{l,m} = r grad Y_{l,m}``; ``Y_{l,m} r_hat`` is the radial vector
    harmonic. Polar angles must avoid the poles.
    """
    _check_lm(l, m)
    theta = np.asarray(theta, dtype=float)
    y, dy = special.sph_harm_y(l, m, theta, phi, diff_n=1)
    return y, dy[..., 0], 1j * m * y / np.sin(theta)


def _check_lm(l, m):
    if l < 0 or abs(m) > l:
        raise DomainError(f"need l >= 0 and |m| <= l, got l={l}, m={m}")
