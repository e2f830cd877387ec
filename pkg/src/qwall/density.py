"""Probability and energy densities, their fluxes, and wall values.

All spatial derivatives come from differentiated basis functions. Inside the
well ``V = 0`` and ``H Psi = sum_a c_a E_a phi_a`` with ``c_a = b_a
exp(-i theta_a)``, so

    rho1 = Psi* H Psi              (complex)
    rho2 = Re rho1
    rho3 = (hbar^2 / 2 mu) |grad Psi|^2
    J_D  = (hbar / mu) Im(Psi* grad Psi)
    J2   = (hbar / 2 mu) [Im(Psi* grad H Psi) - Im(grad Psi* H Psi)]
    J3   = -(hbar / mu) Im(grad Psi* H Psi)

Vector fields are stored in the local orthonormal frame of the grid
(``x``; ``r, phi``; ``r, theta, phi``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import DISK, SEGMENT, SPATIAL_DIM, SPHERE, WellGeometry, energies, mode_fields
from .dynamics import SpectralState, evolve
from .specfun import spherical_harmonic

SCALAR_KINDS = ("rho_d", "rho1", "rho2", "rho3")
FLUX_KINDS = ("flux_d", "flux2", "flux3")


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Tensor-product grid strictly inside the well.

    ``axes`` holds the 1D coordinate arrays, ``points`` the flattened
    coordinates (C order over ``axes``) and ``weights`` the quadrature weights
    including the volume element.
    """

    dimension: str
    size: float
    axes: tuple
    points: tuple
    weights: np.ndarray
    radial_rule: str

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def n_points(self) -> int:
        return self.weights.size

    def integrate(self, values) -> complex | float:
        out = np.sum(np.asarray(values) * self.weights, axis=-1)
        return out

    def measure(self) -> float:
        return float(np.sum(self.weights))


def _radial_nodes(n: int, size: float, rule: str):
    if rule == "gauss":
        x, w = np.polynomial.legendre.leggauss(n)
        return 0.5 * size * (x + 1.0), 0.5 * size * w
    if rule == "uniform":
        h = size / n
        return (np.arange(n) + 0.5) * h, np.full(n, h)
    raise ValueError(f"unknown radial rule {rule!r}")


def _periodic_nodes(n: int):
    h = 2.0 * math.pi / n
    return np.arange(n) * h, np.full(n, h)


def segment_grid(size: float, n: int = 2048) -> SpatialGrid:
    """Cell midpoints on ``(0, size)``; exact for the trigonometric integrands of the box."""
    x, w = _radial_nodes(n, size, "uniform")
    return SpatialGrid(SEGMENT, size, (x,), (x,), w, "uniform")


def disk_grid(size: float, nr: int = 256, nphi: int = 128, radial: str = "gauss") -> SpatialGrid:
    r, wr = _radial_nodes(nr, size, radial)
    phi, wp = _periodic_nodes(nphi)
    rr, pp = np.meshgrid(r, phi, indexing="ij")
    w = np.outer(wr * r, wp).ravel()
    return SpatialGrid(DISK, size, (r, phi), (rr.ravel(), pp.ravel()), w, radial)


def sphere_grid(size: float, nr: int = 128, ntheta: int = 64, nphi: int = 32, radial: str = "gauss") -> SpatialGrid:
    """Radial rule times Gauss-Legendre in ``cos theta`` (``radial="uniform"`` uses midpoints in theta too)."""
    r, wr = _radial_nodes(nr, size, radial)
    if radial == "gauss":
        mu, wmu = np.polynomial.legendre.leggauss(ntheta)
        theta = np.arccos(mu)[::-1]
        wt = wmu[::-1]
    else:
        theta, ht = _radial_nodes(ntheta, math.pi, "uniform")
        wt = ht * np.sin(theta)
    phi, wp = _periodic_nodes(nphi)
    rr, tt, pp = np.meshgrid(r, theta, phi, indexing="ij")
    w = (wr * r * r)[:, None, None] * wt[None, :, None] * wp[None, None, :]
    return SpatialGrid(SPHERE, size, (r, theta, phi), (rr.ravel(), tt.ravel(), pp.ravel()), w.ravel(), radial)


def default_grid(geometry: WellGeometry, t: float = 0.0, **kw) -> SpatialGrid:
    size = geometry.size(t)
    if geometry.dimension == SEGMENT:
        return segment_grid(size, **kw)
    if geometry.dimension == DISK:
        return disk_grid(size, **kw)
    return sphere_grid(size, **kw)


def boundary_grid(geometry: WellGeometry, t: float = 0.0, n_angles: int = 128) -> SpatialGrid:
    """Points on the wall with surface-measure weights (disk: ``R dphi``; sphere: ``R^2 dOmega``)."""
    size = geometry.size(t)
    if geometry.dimension == SEGMENT:
        return SpatialGrid(SEGMENT, size, (np.array([size]),), (np.array([size]),), np.ones(1), "wall")
    if geometry.dimension == DISK:
        phi, wp = _periodic_nodes(n_angles)
        r = np.full_like(phi, size)
        return SpatialGrid(DISK, size, (np.array([size]), phi), (r, phi), size * wp, "wall")
    mu, wmu = np.polynomial.legendre.leggauss(n_angles)
    theta = np.arccos(mu)[::-1]
    phi, wp = _periodic_nodes(2 * n_angles)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    w = size * size * np.outer(wmu[::-1], wp).ravel()
    r = np.full(tt.size, size)
    return SpatialGrid(SPHERE, size, (np.array([size]), theta, phi), (r, tt.ravel(), pp.ravel()), w, "wall")


@dataclass(frozen=True, eq=False)
class DensityField:
    grid: SpatialGrid
    values: np.ndarray
    kind: str
    time: float

    def integral(self):
        return self.grid.integrate(self.values)


@dataclass(frozen=True)
class WallValue:
    value: float
    time: float


class _Wave:
    """Psi, grad Psi, H Psi and grad H Psi of a state on a set of points."""

    def __init__(self, state: SpectralState, geometry: WellGeometry, points, check=True):
        if state.mode_set.dimension != geometry.dimension:
            raise ValueError("state and geometry dimensions differ")
        c = state.amplitudes(geometry)
        live = np.flatnonzero(c)
        modes = [state.mode_set.modes[i] for i in live]
        e = energies(state.constants, geometry, state.mode_set, state.time)[live]
        c = c[live]
        vals, grads = mode_fields(geometry, state.mode_set, state.time, points, modes=modes, check=check)
        self.psi = c @ vals
        self.hpsi = (c * e) @ vals
        self.grad = np.einsum("a,adp->dp", c, grads)
        self.grad_hpsi = np.einsum("a,adp->dp", c * e, grads)
        self.hbar = state.constants.hbar
        self.mu = state.constants.mu


def _check_grid(grid: SpatialGrid, geometry: WellGeometry, t: float):
    if grid.dimension != geometry.dimension:
        raise ValueError("grid and geometry dimensions differ")
    if np.max(grid.points[0]) > geometry.size(t) * (1 + 1e-14):
        raise ValueError("grid extends outside the instantaneous well")


def _field(state, geometry, grid, kind, values):
    return DensityField(grid, values, kind, state.time)


def _wave(state, geometry, grid):
    _check_grid(grid, geometry, state.time)
    return _Wave(state, geometry, grid.points)


def rho_d(state: SpectralState, geometry: WellGeometry, grid: SpatialGrid) -> DensityField:
    w = _wave(state, geometry, grid)
    return _field(state, geometry, grid, "rho_d", np.abs(w.psi) ** 2)


def flux_d(state: SpectralState, geometry: WellGeometry, grid: SpatialGrid) -> DensityField:
    w = _wave(state, geometry, grid)
    return _field(state, geometry, grid, "flux_d", w.hbar / w.mu * np.imag(np.conj(w.psi) * w.grad))


def rho1(state: SpectralState, geometry: WellGeometry, grid: SpatialGrid) -> DensityField:
    w = _wave(state, geometry, grid)
    return _field(state, geometry, grid, "rho1", np.conj(w.psi) * w.hpsi)


def rho2(state: SpectralState, geometry: WellGeometry, grid: SpatialGrid) -> DensityField:
    w = _wave(state, geometry, grid)
    return _field(state, geometry, grid, "rho2", np.real(np.conj(w.psi) * w.hpsi))


def rho3(state: SpectralState, geometry: WellGeometry, grid: SpatialGrid) -> DensityField:
    w = _wave(state, geometry, grid)
    kin = w.hbar**2 / (2.0 * w.mu) * np.sum(np.abs(w.grad) ** 2, axis=0)
    return _field(state, geometry, grid, "rho3", kin)


def energy_flux(state: SpectralState, geometry: WellGeometry, grid: SpatialGrid, which: str) -> DensityField:
    """Energy flux paired with ``rho2`` (``which="flux2"``) or ``rho3`` (``"flux3"``)."""
    w = _wave(state, geometry, grid)
    cross = np.imag(np.conj(w.grad) * w.hpsi)
    if which == "flux3":
        vals = -(w.hbar / w.mu) * cross
    elif which == "flux2":
        vals = w.hbar / (2.0 * w.mu) * (np.imag(np.conj(w.psi) * w.grad_hpsi) - cross)
    else:
        raise ValueError(f"unknown flux {which!r}")
    return _field(state, geometry, grid, which, vals)


def all_fields(state: SpectralState, geometry: WellGeometry, grid: SpatialGrid) -> dict[str, np.ndarray]:
    """Every density and flux on ``grid`` from one basis evaluation."""
    w = _wave(state, geometry, grid)
    pref = w.hbar / w.mu
    cross = np.imag(np.conj(w.grad) * w.hpsi)
    r1 = np.conj(w.psi) * w.hpsi
    return {
        "rho_d": np.abs(w.psi) ** 2,
        "rho1": r1,
        "rho2": r1.real,
        "rho3": w.hbar**2 / (2.0 * w.mu) * np.sum(np.abs(w.grad) ** 2, axis=0),
        "flux_d": pref * np.imag(np.conj(w.psi) * w.grad),
        "flux2": 0.5 * pref * (np.imag(np.conj(w.psi) * w.grad_hpsi) - cross),
        "flux3": -pref * cross,
    }


# ---------------------------------------------------------------------------
# wall quantities


def _wall_sums(state: SpectralState, geometry: WellGeometry) -> np.ndarray:
    """Per angular block ``sum_a c_a w_a``."""
    c = state.amplitudes(geometry)
    ms = state.mode_set
    return np.bincount(ms.block_id, weights=(c * ms.w).real, minlength=ms.block_id.max() + 1) + 1j * np.bincount(
        ms.block_id, weights=(c * ms.w).imag, minlength=ms.block_id.max() + 1
    )


def wall_force(state: SpectralState, geometry: WellGeometry, method: str = "closed", n_angles: int = 128) -> float:
    """Mean force of the particle on the moving wall.

    ``method="closed"`` evaluates ``hbar^2/(mu size^3) sum_blocks |sum_a c_a w_a|^2``.
    ``method="quadrature"`` integrates the full ``rho3`` field over the wall
    with the surface measure (segment: the wall value itself).
    """
    size = geometry.size(state.time)
    if method == "closed":
        k = state.constants.hbar**2 / (state.constants.mu * size**3)
        return float(k * np.sum(np.abs(_wall_sums(state, geometry)) ** 2))
    if method == "quadrature":
        bg = boundary_grid(geometry, state.time, n_angles)
        w = _Wave(state, geometry, bg.points)
        dens = w.hbar**2 / (2.0 * w.mu) * np.sum(np.abs(w.grad) ** 2, axis=0)
        return float(bg.integrate(dens))
    raise ValueError(f"unknown method {method!r}")


def wall_pressure(state: SpectralState, geometry: WellGeometry, method: str = "closed") -> float:
    """Force per unit boundary measure (``2 pi R`` on the disk, ``4 pi R^2`` on the sphere)."""
    return wall_force(state, geometry, method) / geometry.boundary_area(state.time)


def rho3_at_wall(state: SpectralState, geometry: WellGeometry, n_angles: int = 128):
    """Closed-form boundary limit of ``rho3``.

    On the wall only the normal derivative survives:
    ``d_n Psi = sum_a c_a w_a / size^(d/2+1) * angular_a``.
    Returns a :class:`WallValue` on the segment and a :class:`DensityField`
    over the wall angles otherwise.
    """
    t = state.time
    size = geometry.size(t)
    pref = state.constants.hbar**2 / (2.0 * state.constants.mu)
    c = state.amplitudes(geometry)
    ms = state.mode_set
    if geometry.dimension == SEGMENT:
        dn = math.sqrt(2.0 / size) / size * np.sum(c * ms.w)
        return WallValue(float(pref * abs(dn) ** 2), t)
    bg = boundary_grid(geometry, t, n_angles)
    dn = np.zeros(bg.n_points, dtype=complex)
    for i in np.flatnonzero(c):
        q = ms.modes[i]
        if geometry.dimension == DISK:
            ang = np.exp(1j * q[0] * bg.points[1]) / math.sqrt(math.pi)
            dn += c[i] * ms.w[i] / size**2 * ang
        else:
            ang = math.sqrt(2.0) * spherical_harmonic(q[1], q[2], bg.points[1], bg.points[2])
            dn += c[i] * ms.w[i] / size**2.5 * ang
    return DensityField(bg, pref * np.abs(dn) ** 2, "rho3_wall", t)


def wall_limits(state: SpectralState, geometry: WellGeometry, n_angles: int = 64) -> dict[str, float]:
    """Largest magnitudes of ``rho_d``, ``rho2`` and ``rho3`` on the wall.

    Eigenfunctions are evaluated exactly at the boundary (``sin(n pi)``,
    ``J(z)`` at a zero), not extrapolated from the interior.
    """
    bg = boundary_grid(geometry, state.time, n_angles)
    w = _Wave(state, geometry, bg.points)
    return {
        "rho_d": float(np.max(np.abs(w.psi) ** 2)),
        "rho2": float(np.max(np.abs(np.real(np.conj(w.psi) * w.hpsi)))),
        "rho3": float(np.max(w.hbar**2 / (2 * w.mu) * np.sum(np.abs(w.grad) ** 2, axis=0))),
    }


# ---------------------------------------------------------------------------
# continuity


def divergence(grid: SpatialGrid, vec: np.ndarray) -> np.ndarray:
    """Centered-difference divergence of a frame-component vector field.

    Requires a uniform radial rule (and uniform polar angle on the sphere);
    the azimuth is periodic, other axes use one-sided closure at the ends.
    """
    if grid.radial_rule != "uniform":
        raise ValueError("finite-difference divergence needs a uniform grid")
    shape = grid.shape
    comps = [np.asarray(v).reshape(shape) for v in vec]
    if grid.dimension == SEGMENT:
        return np.gradient(comps[0], grid.axes[0], edge_order=2).ravel()

    r = grid.axes[0]
    dphi = grid.axes[-1][1] - grid.axes[-1][0]
    phi_ax = len(shape) - 1

    def d_phi(f):
        return (np.roll(f, -1, axis=phi_ax) - np.roll(f, 1, axis=phi_ax)) / (2.0 * dphi)

    if grid.dimension == DISK:
        rr = r[:, None]
        div = np.gradient(rr * comps[0], r, axis=0, edge_order=2) / rr + d_phi(comps[1]) / rr
        return div.ravel()
    theta = grid.axes[1]
    rr = r[:, None, None]
    st = np.sin(theta)[None, :, None]
    div = (
        np.gradient(rr**2 * comps[0], r, axis=0, edge_order=2) / rr**2
        + np.gradient(st * comps[1], theta, axis=1, edge_order=2) / (rr * st)
        + d_phi(comps[2]) / (rr * st)
    )
    return div.ravel()


_CONTINUITY = {"d": ("rho_d", "flux_d"), "2": ("rho2", "flux2"), "3": ("rho3", "flux3")}


def continuity_residual(state: SpectralState, geometry: WellGeometry, grid: SpatialGrid, which: str,
                        dt: float, rtol: float = 1e-12, atol: float = 1e-14) -> DensityField:
    """``d rho/dt + div J`` at ``state.time + dt`` by centered differences.

    The state is evolved to ``t + dt`` and ``t + 2 dt``; ``which`` is ``"d"``,
    ``"2"`` or ``"3"``. Values next to the grid edges carry the one-sided
    closure error, so callers should inspect an interior subgrid.
    """
    dens_kind, flux_kind = _CONTINUITY[which]
    t0 = state.time
    traj = evolve(state, geometry, t0 + 2 * dt, rtol=rtol, atol=atol, t_eval=[t0 + dt], richardson=False)
    s0, s1, s2 = traj.states
    f0 = all_fields(s0, geometry, grid)[dens_kind]
    f2 = all_fields(s2, geometry, grid)[dens_kind]
    flux = all_fields(s1, geometry, grid)[flux_kind]
    res = (f2 - f0) / (2.0 * dt) + divergence(grid, flux)
    return DensityField(grid, res, f"continuity_{which}", s1.time)
