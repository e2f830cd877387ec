"""Instantaneous eigenbases of an infinite well with one moving boundary.

Three geometries share one structure. Every mode ``a`` has a dimensionless
wavenumber ``z_a`` (``n*pi`` on the segment, a Bessel zero on the disk and the
sphere) so that

    E_a(t) = hbar**2 z_a**2 / (2 mu size(t)**2)

and the outward normal derivative of the normalized eigenfunction at the wall
is ``w_a / size**(d/2 + 1)`` times the angular factor, with ``w_a = s_a z_a``
and ``s_a = (-1)**n`` on the segment, ``-1`` on the disk and sphere. The
coupling elements, wall force and energy rate are all closed forms in ``z_a``
and ``w_a``.

Mode labels are tuples in quantum-number order: ``(n,)`` for the segment,
``(m, n)`` for the disk, ``(n, l, m)`` for the sphere. Plain ``int`` is
accepted for segment modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import specfun

SEGMENT = "segment1D"
DISK = "disk2D"
SPHERE = "sphere3D"
DIMENSIONS = (SEGMENT, DISK, SPHERE)
SPATIAL_DIM = {SEGMENT: 1, DISK: 2, SPHERE: 3}

_ALIASES = {
    "1d": SEGMENT, "segment": SEGMENT, "segment1d": SEGMENT,
    "2d": DISK, "disk": DISK, "disk2d": DISK,
    "3d": SPHERE, "sphere": SPHERE, "sphere3d": SPHERE,
}


class GeometryCollapseError(ValueError):
    """The well size reaches zero inside a requested time window."""


def canonical_dimension(name: str) -> str:
    try:
        return _ALIASES[str(name).lower()]
    except KeyError:
        raise ValueError(f"unknown well dimension {name!r}") from None


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mu > 0):
            raise ValueError("hbar and mu must be strictly positive")


@dataclass(frozen=True)
class WellGeometry:
    """Well of size ``initial_size + wall_speed * t`` (length or radius)."""

    dimension: str
    initial_size: float
    wall_speed: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "dimension", canonical_dimension(self.dimension))
        if not self.initial_size > 0:
            raise ValueError("initial_size must be positive")

    def size(self, t: float) -> float:
        return self.initial_size + self.wall_speed * t

    def check_window(self, t0: float, t1: float) -> None:
        lo, hi = min(t0, t1), max(t0, t1)
        if min(self.size(lo), self.size(hi)) <= 0:
            raise GeometryCollapseError(
                f"well collapses inside [{lo}, {hi}] (size {self.size(lo)} -> {self.size(hi)})"
            )

    def boundary_area(self, t: float = 0.0) -> float:
        """Measure of the moving boundary: 1 (a point), ``2 pi R`` or ``4 pi R^2``."""
        s = self.size(t)
        if self.dimension == SEGMENT:
            return 1.0
        if self.dimension == DISK:
            return 2.0 * math.pi * s
        return 4.0 * math.pi * s * s

    def with_speed(self, wall_speed: float) -> "WellGeometry":
        return WellGeometry(self.dimension, self.initial_size, wall_speed)


def as_mode(dimension: str, mode) -> tuple[int, ...]:
    """Validate a mode label for ``dimension`` and return it as a tuple."""
    dimension = canonical_dimension(dimension)
    if isinstance(mode, (int, np.integer)):
        mode = (int(mode),)
    mode = tuple(int(q) for q in mode)
    if dimension == SEGMENT:
        ok = len(mode) == 1 and mode[0] >= 1
    elif dimension == DISK:
        ok = len(mode) == 2 and mode[1] >= 1
    else:
        ok = len(mode) == 3 and mode[0] >= 1 and mode[1] >= 0 and abs(mode[2]) <= mode[1]
    if not ok:
        raise ValueError(f"invalid mode {mode} for {dimension}")
    return mode


def _radial_order(dimension: str, mode: tuple[int, ...]):
    """Bessel order and radial quantum number of a disk or sphere mode."""
    if dimension == DISK:
        return specfun.BesselOrder(specfun.CYLINDRICAL, abs(mode[0])), mode[1]
    return specfun.spherical(mode[1]), mode[0]


def wavenumber(dimension: str, mode) -> float:
    """Dimensionless wavenumber ``z`` with ``k = z / size``."""
    dimension = canonical_dimension(dimension)
    mode = as_mode(dimension, mode)
    if dimension == SEGMENT:
        return mode[0] * math.pi
    order, n = _radial_order(dimension, mode)
    return specfun.bessel_zeros(order, n)[n - 1]


def wall_sign(dimension: str, mode) -> float:
    mode = as_mode(dimension, mode)
    if canonical_dimension(dimension) == SEGMENT:
        return -1.0 if mode[0] % 2 else 1.0
    return -1.0


def angular_block(dimension: str, mode) -> tuple[int, ...]:
    """Angular quantum numbers; the wall motion only couples modes sharing them."""
    mode = as_mode(dimension, mode)
    dimension = canonical_dimension(dimension)
    if dimension == SEGMENT:
        return ()
    if dimension == DISK:
        return (mode[0],)
    return (mode[1], mode[2])


@dataclass(frozen=True)
class ModeSet:
    """Ordered, duplicate-free truncation of the eigenbasis.

    Ordering: segment by ``n``; disk by ``m`` then ``n``; sphere by ``l``,
    ``m``, then ``n``. Build with :meth:`segment`, :meth:`disk`,
    :meth:`sphere` or :meth:`from_modes`.
    """

    dimension: str
    modes: tuple[tuple[int, ...], ...]
    truncation: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        dim = canonical_dimension(self.dimension)
        object.__setattr__(self, "dimension", dim)
        modes = tuple(as_mode(dim, q) for q in self.modes)
        modes = tuple(sorted(set(modes), key=lambda q: _sort_key(dim, q)))
        if not modes:
            raise ValueError("empty mode set")
        object.__setattr__(self, "modes", modes)
        z = np.array([wavenumber(dim, q) for q in modes])
        w = np.array([wall_sign(dim, q) for q in modes]) * z
        blocks = [angular_block(dim, q) for q in modes]
        labels = {b: i for i, b in enumerate(dict.fromkeys(blocks))}
        block_id = np.array([labels[b] for b in blocks])
        for name, arr in (("z", z), ("w", w), ("block_id", block_id)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_index", {q: i for i, q in enumerate(modes)})

    @classmethod
    def segment(cls, n_max: int) -> "ModeSet":
        return cls(SEGMENT, tuple((n,) for n in range(1, n_max + 1)), {"n_max": n_max})

    @classmethod
    def disk(cls, m_max: int, n_max: int) -> "ModeSet":
        modes = tuple((m, n) for m in range(-m_max, m_max + 1) for n in range(1, n_max + 1))
        return cls(DISK, modes, {"m_max": m_max, "n_max": n_max})

    @classmethod
    def sphere(cls, l_max: int, n_max: int) -> "ModeSet":
        modes = tuple(
            (n, l, m) for l in range(l_max + 1) for m in range(-l, l + 1) for n in range(1, n_max + 1)
        )
        return cls(SPHERE, modes, {"l_max": l_max, "n_max": n_max})

    @classmethod
    def from_modes(cls, dimension: str, modes: Iterable) -> "ModeSet":
        return cls(dimension, tuple(modes), {})

    @classmethod
    def build(cls, dimension: str, n_max: int, angular_max: int = 0) -> "ModeSet":
        """Rectangular truncation; ``angular_max`` is ``m_max`` (disk) or ``l_max`` (sphere)."""
        dimension = canonical_dimension(dimension)
        if dimension == SEGMENT:
            return cls.segment(n_max)
        if dimension == DISK:
            return cls.disk(angular_max, n_max)
        return cls.sphere(angular_max, n_max)

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def index(self, mode) -> int:
        return self._index[as_mode(self.dimension, mode)]

    def __contains__(self, mode) -> bool:
        try:
            return as_mode(self.dimension, mode) in self._index
        except ValueError:
            return False


def _sort_key(dimension, mode):
    if dimension == SPHERE:
        n, l, m = mode
        return (l, m, n)
    return mode


def instantaneous_energy(constants: PhysicalConstants, geometry: WellGeometry, mode, t: float = 0.0) -> float:
    z = wavenumber(geometry.dimension, mode)
    s = geometry.size(t)
    return constants.hbar**2 * z * z / (2.0 * constants.mu * s * s)


def energies(constants: PhysicalConstants, geometry: WellGeometry, mode_set: ModeSet, t: float) -> np.ndarray:
    s = geometry.size(t)
    return constants.hbar**2 * mode_set.z**2 / (2.0 * constants.mu * s * s)


def _inverse_size_integral(geometry: WellGeometry, t: float) -> float:
    """Closed form of the integral of ``1/size(tau)**2`` over ``[0, t]``."""
    geometry.check_window(0.0, t)
    return t / (geometry.initial_size * geometry.size(t))


def phase_theta(constants: PhysicalConstants, geometry: WellGeometry, mode, t: float) -> float:
    """Dynamical phase ``(1/hbar) * integral_0^t E(tau) dtau`` for affine wall motion."""
    z = wavenumber(geometry.dimension, mode)
    return constants.hbar * z * z / (2.0 * constants.mu) * _inverse_size_integral(geometry, t)


def phases(constants: PhysicalConstants, geometry: WellGeometry, mode_set: ModeSet, t: float) -> np.ndarray:
    return constants.hbar * mode_set.z**2 / (2.0 * constants.mu) * _inverse_size_integral(geometry, t)


def coupling_element(geometry: WellGeometry, mode_a, mode_b, t: float = 0.0) -> float:
    """``<phi_a | d phi_b / dt>`` over the instantaneous domain.

    Closed form ``(v/size) * 2 w_a w_b / (z_a^2 - z_b^2)`` within an angular
    block, zero across blocks and on the diagonal.
    """
    dim = geometry.dimension
    a, b = as_mode(dim, mode_a), as_mode(dim, mode_b)
    if a == b or angular_block(dim, a) != angular_block(dim, b):
        return 0.0
    za, zb = wavenumber(dim, a), wavenumber(dim, b)
    wa, wb = wall_sign(dim, a) * za, wall_sign(dim, b) * zb
    return geometry.wall_speed / geometry.size(t) * 2.0 * wa * wb / (za * za - zb * zb)


def coupling_kernel(mode_set: ModeSet) -> np.ndarray:
    """Time-independent part ``K`` of the coupling matrix, ``M(t) = (v/size(t)) K``."""
    z, w = mode_set.z, mode_set.w
    same = mode_set.block_id[:, None] == mode_set.block_id[None, :]
    np.fill_diagonal(same, False)
    dz2 = np.where(same, z[:, None] ** 2 - z[None, :] ** 2, 1.0)
    k = np.where(same, 2.0 * w[:, None] * w[None, :] / dz2, 0.0)
    np.fill_diagonal(k, 0.0)
    return k


def coupling_matrix(geometry: WellGeometry, mode_set: ModeSet, t: float = 0.0) -> np.ndarray:
    return geometry.wall_speed / geometry.size(t) * coupling_kernel(mode_set)


# ---------------------------------------------------------------------------
# pointwise evaluation


def _coords(dimension: str, points) -> tuple[np.ndarray, ...]:
    if dimension == SEGMENT:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 2 and pts.shape[0] == 1:
            pts = pts[0]
        return (np.atleast_1d(pts),)
    return tuple(np.atleast_1d(np.asarray(c, dtype=float)) for c in points)


def mode_fields(geometry: WellGeometry, mode_set: ModeSet, t: float, points, gradient: bool = True,
                modes: Sequence | None = None, check: bool = True):
    """Eigenfunction values and gradients at many points.

    Parameters
    ----------
    points
        Segment: array of ``x``. Disk: ``(r, phi)``. Sphere: ``(r, theta, phi)``.
    modes
        Subset of ``mode_set`` to evaluate (default: all).

    Returns
    -------
    values : ndarray, shape (n_modes, n_points), complex
    grads : ndarray, shape (n_modes, dim, n_points), complex
        Components in the local orthonormal frame (``x``; ``r, phi``;
        ``r, theta, phi``). Only returned when ``gradient`` is true.
    """
    dim = geometry.dimension
    if dim != mode_set.dimension:
        raise ValueError("mode set and geometry dimensions differ")
    size = geometry.size(t)
    coords = _coords(dim, points)
    r = coords[0]
    if check and (np.any(r < 0) or np.any(r > size * (1 + 1e-14))):
        raise specfun.DomainError("point outside the well")
    selected = list(mode_set.modes if modes is None else (as_mode(dim, q) for q in modes))
    nd = SPATIAL_DIM[dim]
    vals = np.empty((len(selected), r.size), dtype=complex)
    grads = np.empty((len(selected), nd, r.size), dtype=complex) if gradient else None

    for i, q in enumerate(selected):
        z = wavenumber(dim, q)
        k = z / size
        if dim == SEGMENT:
            amp = math.sqrt(2.0 / size)
            vals[i] = amp * np.sin(k * r)
            if gradient:
                grads[i, 0] = amp * k * np.cos(k * r)
            continue
        order, _ = _radial_order(dim, q)
        jz = specfun.bessel_j_prime(order, z)
        if dim == DISK:
            m = q[0]
            norm = -1.0 / (math.sqrt(math.pi) * size * jz)
            ang = np.exp(1j * m * coords[1])
            radial = norm * specfun.bessel_j(order, k * r)
            vals[i] = radial * ang
            if gradient:
                grads[i, 0] = norm * k * _jprime(order, k * r) * ang
                with np.errstate(divide="ignore", invalid="ignore"):
                    grads[i, 1] = np.where(r > 0, 1j * m * radial / r, _axis_limit_2d(m, norm, k)) * ang
        else:
            _, l, m = q
            norm = -math.sqrt(2.0) / (size**1.5 * jz)
            radial = norm * specfun.bessel_j(order, k * r)
            if gradient:
                y, dth, dph = specfun.spherical_harmonic_gradient(l, m, coords[1], coords[2])
                grads[i, 0] = norm * k * _jprime(order, k * r) * y
                with np.errstate(divide="ignore", invalid="ignore"):
                    over_r = np.where(r > 0, radial / r, norm * k / 3.0 if l == 1 else 0.0)
                grads[i, 1] = over_r * dth
                grads[i, 2] = over_r * dph
            else:
                y = specfun.spherical_harmonic(l, m, coords[1], coords[2])
            vals[i] = radial * y
    return (vals, grads) if gradient else vals


def _jprime(order, x):
    """Bessel derivative that also accepts ``x = 0``."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x > 0
    out[pos] = specfun.bessel_j_prime(order, x[pos])
    if np.any(~pos):
        if order.kind == specfun.CYLINDRICAL:
            out[~pos] = 0.5 if order.order == 1 else 0.0
        else:
            out[~pos] = 1.0 / 3.0 if order.order == 1 else 0.0
    return out


def _axis_limit_2d(m, norm, k):
    # J_m(kr)/r -> k/2 as r -> 0 for |m| = 1, else 0
    return norm * k / 2.0 if abs(m) == 1 else 0.0


def eigenfunction(geometry: WellGeometry, mode, point, t: float = 0.0) -> complex:
    """Normalized instantaneous eigenfunction at a single point.

    ``point`` is ``x`` (segment), ``(r, phi)`` (disk) or ``(r, theta, phi)``
    (sphere).
    """
    dim = geometry.dimension
    mode = as_mode(dim, mode)
    pts = point if dim == SEGMENT else tuple([c] for c in point)
    ms = ModeSet.from_modes(dim, [mode])
    return complex(mode_fields(geometry, ms, t, pts, gradient=False)[0, 0])
