import numpy as np
import pytest
from scipy import special

from qwall.basis import ModeSet, PhysicalConstants, WellGeometry, wavenumber
from qwall.density import (
    DensityField,
    WallValue,
    all_fields,
    boundary_grid,
    continuity_residual,
    default_grid,
    disk_grid,
    divergence,
    energy_flux,
    flux_d,
    rho1,
    rho2,
    rho3,
    rho3_at_wall,
    rho_d,
    segment_grid,
    sphere_grid,
    wall_force,
    wall_limits,
    wall_pressure,
)
from qwall.dynamics import SpectralState, energy_rate_initial, evolve, expected_energy, random_state

SQ = 2**-0.5
GEOMS = {"1D": ModeSet.segment(6), "2D": ModeSet.disk(2, 3), "3D": ModeSet.sphere(2, 2)}


def _random(dim, rng, size=1.0, t=0.0, v=0.0):
    s = random_state(GEOMS[dim], 6, rng)
    g = WellGeometry(dim, size, v)
    if t:
        s = evolve(s, g, t, richardson=False).final
    return s, g


def _grid(dim, size):
    return {"1D": lambda: segment_grid(size, 1024), "2D": lambda: disk_grid(size, 96, 48),
            "3D": lambda: sphere_grid(size, 64, 24, 16)}[dim]()


@pytest.mark.parametrize("dim", ["1D", "2D", "3D"])
def test_integrals_equal_energy(dim, rng):
    s, g = _random(dim, rng, size=1.3, t=0.2, v=0.15)
    grid = _grid(dim, g.size(s.time))
    e = expected_energy(s, g)
    assert rho_d(s, g, grid).integral() == pytest.approx(1.0, abs=1e-10)
    assert rho2(s, g, grid).integral() == pytest.approx(e, rel=1e-10)
    assert rho3(s, g, grid).integral() == pytest.approx(e, rel=1e-10)
    r1 = rho1(s, g, grid)
    assert abs(r1.integral().imag) < 1e-10 * e
    np.testing.assert_allclose(r1.values.real, rho2(s, g, grid).values, atol=1e-12 * e)


@pytest.mark.parametrize("dim", ["1D", "2D", "3D"])
def test_rho2_and_rho3_differ_locally(dim, rng):
    s, g = _random(dim, rng)
    grid = _grid(dim, 1.0)
    diff = rho2(s, g, grid).values - rho3(s, g, grid).values
    assert np.max(np.abs(diff)) > 1e-2
    assert np.all(rho3(s, g, grid).values >= 0)


def test_segment_ground_state_fields():
    ms = ModeSet.segment(4)
    s = SpectralState.eigenstate(ms, 1)
    g = WellGeometry("1D", 1.0)
    grid = segment_grid(1.0, 64)
    x = grid.points[0]
    np.testing.assert_allclose(rho_d(s, g, grid).values, 2 * np.sin(np.pi * x) ** 2, atol=1e-14)
    np.testing.assert_allclose(rho2(s, g, grid).values, np.pi**2 * np.sin(np.pi * x) ** 2, atol=1e-13)
    np.testing.assert_allclose(rho3(s, g, grid).values, np.pi**2 * np.cos(np.pi * x) ** 2, atol=1e-13)
    assert np.max(np.abs(flux_d(s, g, grid).values)) < 1e-14
    for which in ("flux2", "flux3"):
        assert np.max(np.abs(energy_flux(s, g, grid, which).values)) < 1e-12


def test_fields_scale_with_constants():
    ms = ModeSet.segment(4)
    c = PhysicalConstants(hbar=2.0, mu=3.0)
    s = SpectralState.from_modes(ms, {1: SQ, 2: SQ}, constants=c).replace(time=0.3)
    g = WellGeometry("1D", 1.0)
    grid = segment_grid(1.0, 256)
    assert rho3(s, g, grid).integral() == pytest.approx(expected_energy(s, g), rel=1e-12)


def test_all_fields_consistent_with_individual_functions(rng):
    s, g = _random("2D", rng, t=0.1, v=0.2)
    grid = disk_grid(g.size(s.time), 16, 8)
    f = all_fields(s, g, grid)
    np.testing.assert_array_equal(f["rho3"], rho3(s, g, grid).values)
    np.testing.assert_array_equal(f["flux2"], energy_flux(s, g, grid, "flux2").values)
    np.testing.assert_array_equal(f["flux_d"], flux_d(s, g, grid).values)
    with pytest.raises(ValueError):
        energy_flux(s, g, grid, "flux9")


def test_grid_must_fit_inside_well():
    s = SpectralState.eigenstate(ModeSet.segment(2), 1)
    with pytest.raises(ValueError):
        rho_d(s, WellGeometry("1D", 1.0), segment_grid(2.0, 8))
    with pytest.raises(ValueError):
        rho_d(s, WellGeometry("2D", 1.0), segment_grid(1.0, 8))


def test_default_grids():
    assert default_grid(WellGeometry("1D", 1.0)).shape == (2048,)
    assert default_grid(WellGeometry("2D", 1.0)).shape == (256, 128)
    assert default_grid(WellGeometry("3D", 1.0)).shape == (128, 64, 32)
    assert sphere_grid(2.0, 16, 8, 8).measure() == pytest.approx(4 / 3 * np.pi * 8)
    assert disk_grid(2.0, 16, 8).measure() == pytest.approx(4 * np.pi)
    assert sphere_grid(2.0, 64, 64, 8, radial="uniform").measure() == pytest.approx(4 / 3 * np.pi * 8, rel=1e-3)


# -- wall quantities -------------------------------------------------------


def test_segment_wall_values_ground_state():
    s = SpectralState.eigenstate(ModeSet.segment(8), 1)
    g = WellGeometry("1D", 1.0)
    w = rho3_at_wall(s, g)
    assert isinstance(w, WallValue)
    assert w.value == pytest.approx(np.pi**2, rel=1e-14)
    assert wall_force(s, g) == pytest.approx(np.pi**2, rel=1e-14)
    assert wall_force(s, g, method="quadrature") == pytest.approx(np.pi**2, rel=1e-14)
    lim = wall_limits(s, g)
    assert lim["rho_d"] < 1e-12 and lim["rho2"] < 1e-12
    assert lim["rho3"] == pytest.approx(np.pi**2)


def test_segment_wall_value_superposition():
    """d_x Psi(L) = sqrt(2) pi sum_n (-1)^n n c_n at L = 1."""
    s = SpectralState.from_modes(ModeSet.segment(4), {1: SQ, 2: 1j * SQ})
    g = WellGeometry("1D", 1.0)
    dpsi = np.sqrt(2) * np.pi * (-1 * SQ + 2 * 1j * SQ)
    assert rho3_at_wall(s, g).value == pytest.approx(0.5 * abs(dpsi) ** 2, rel=1e-13)


def test_disk_mixed_state_force():
    ms = ModeSet.disk(0, 3)
    s = SpectralState.from_modes(ms, {(0, 1): SQ, (0, 2): SQ})
    g = WellGeometry("2D", 1.0)
    z1, z2 = special.jn_zeros(0, 2)
    expect = ((z1 + z2) / np.sqrt(2)) ** 2
    assert wall_force(s, g) == pytest.approx(expect, rel=1e-12)
    assert wall_force(s, g, method="quadrature") == pytest.approx(expect, rel=1e-8)
    wall = rho3_at_wall(s, g)
    assert isinstance(wall, DensityField)
    assert wall.integral() == pytest.approx(expect, rel=1e-10)


def test_sphere_ground_state_force_and_pressure():
    s = SpectralState.eigenstate(ModeSet.sphere(0, 2), (1, 0, 0))
    g = WellGeometry("3D", 1.0)
    assert wall_force(s, g) == pytest.approx(np.pi**2, rel=1e-14)
    assert wall_pressure(s, g) == pytest.approx(np.pi / 4, rel=1e-14)


@pytest.mark.parametrize("dim", ["1D", "2D", "3D"])
def test_force_closed_form_matches_quadrature(dim, rng):
    s, g = _random(dim, rng, size=0.9, t=0.3, v=0.1)
    closed = wall_force(s, g)
    assert wall_force(s, g, method="quadrature", n_angles=64) == pytest.approx(closed, rel=1e-10)
    if dim != "1D":
        assert rho3_at_wall(s, g, 64).integral() == pytest.approx(closed, rel=1e-10)
    with pytest.raises(ValueError):
        wall_force(s, g, method="sensor")


@pytest.mark.parametrize("dim", ["1D", "2D", "3D"])
def test_rate_equals_minus_force_times_speed(dim, rng):
    s, g = _random(dim, rng, t=0.2, v=0.3)
    assert energy_rate_initial(s, g) == pytest.approx(-wall_force(s, g) * g.wall_speed, rel=1e-10)


@pytest.mark.parametrize("dim", ["2D", "3D"])
def test_wall_annihilates_rho_d_and_rho2(dim, rng):
    s, g = _random(dim, rng)
    lim = wall_limits(s, g)
    assert lim["rho_d"] < 1e-12 and lim["rho2"] < 1e-12 and lim["rho3"] > 1e-3


def test_boundary_grid_measure():
    assert boundary_grid(WellGeometry("2D", 2.0), n_angles=16).measure() == pytest.approx(4 * np.pi)
    assert boundary_grid(WellGeometry("3D", 2.0), n_angles=16).measure() == pytest.approx(16 * np.pi)


# -- continuity ------------------------------------------------------------


def test_divergence_of_known_fields():
    g = disk_grid(1.0, 200, 256, radial="uniform")
    r, p = g.points
    # F = (r cos phi, -r sin phi)  ->  div F = 2 cos phi - cos phi = cos phi
    div = divergence(g, np.array([r * np.cos(p), -r * np.sin(p)])).reshape(g.shape)
    np.testing.assert_allclose(div[2:-2], np.cos(p).reshape(g.shape)[2:-2], atol=1e-3)
    s = sphere_grid(1.0, 100, 100, 16, radial="uniform")
    r, t, _ = s.points
    div = divergence(s, np.array([r**2, np.zeros_like(r), np.zeros_like(r)])).reshape(s.shape)
    np.testing.assert_allclose(div[20:-2], (4 * r).reshape(s.shape)[20:-2], atol=5e-3)  # 4 h^2 / r truncation
    with pytest.raises(ValueError):
        divergence(disk_grid(1.0, 8, 8), np.zeros((2, 64)))


def test_continuity_residual_small_in_moving_well():
    s = SpectralState.from_modes(ModeSet.segment(16), {1: SQ, 2: SQ})
    g = WellGeometry("1D", 1.0, 0.0)
    grid = segment_grid(1.0, 1024)
    for which in ("d", "2", "3"):
        res = continuity_residual(s, g, grid, which, 1e-4)
        assert res.kind == f"continuity_{which}"
        assert np.max(np.abs(res.values[20:-20])) < 1e-2
