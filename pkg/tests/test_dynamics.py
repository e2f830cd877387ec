import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwall.basis import ModeSet, PhysicalConstants, WellGeometry
from qwall.dynamics import (
    IntegrationError,
    SpectralState,
    energy_rate_initial,
    evolve,
    expected_energy,
    random_state,
    time_reversed,
)

SQ = 2**-0.5


def test_state_construction_and_immutability():
    ms = ModeSet.segment(4)
    s = SpectralState.from_modes(ms, {1: SQ, 3: 1j * SQ})
    assert s.norm == pytest.approx(1.0)
    assert s.amplitude(3) == pytest.approx(1j * SQ)
    with pytest.raises(ValueError):
        s.coefficients[0] = 2.0
    with pytest.raises(ValueError):
        SpectralState(ms, np.ones(3))
    s2 = SpectralState.from_modes(ms, {1: 3.0, 2: 4.0}, normalize=True)
    assert s2.amplitude(2) == pytest.approx(0.8)


def test_random_state_is_normalized(rng):
    ms = ModeSet.sphere(2, 3)
    s = random_state(ms, 8, rng)
    assert s.norm == pytest.approx(1.0, abs=1e-14)
    assert np.count_nonzero(s.coefficients) == 8
    with pytest.raises(ValueError):
        random_state(ModeSet.segment(3), 4, rng)


def test_energy_examples():
    ms = ModeSet.segment(4)
    g = WellGeometry("1D", 1.0)
    assert expected_energy(SpectralState.eigenstate(ms, 1), g) == pytest.approx(np.pi**2 / 2)
    mix = SpectralState.from_modes(ms, {1: SQ, 2: SQ})
    assert expected_energy(mix, g) == pytest.approx(5 * np.pi**2 / 4)
    c = PhysicalConstants(hbar=2.0, mu=0.5)
    s = SpectralState.eigenstate(ms, 2, c)
    assert expected_energy(s, WellGeometry("1D", 2.0)) == pytest.approx(4.0 * 4 * np.pi**2 / (2 * 0.5 * 4))


def test_static_well_is_stationary(rng):
    ms = ModeSet.disk(1, 4)
    s = random_state(ms, 5, rng)
    traj = evolve(s, WellGeometry("2D", 1.0), 3.0)
    np.testing.assert_array_equal(traj.final.coefficients, s.coefficients)
    assert traj.final.time == 3.0


def test_empty_evolution_returns_initial():
    s = SpectralState.eigenstate(ModeSet.segment(3), 1)
    traj = evolve(s, WellGeometry("1D", 1.0, 0.1), 0.0)
    assert traj.states == [s]
    assert traj.diagnostics.accepted_steps == 0


def test_backward_time_rejected():
    s = SpectralState.eigenstate(ModeSet.segment(3), 1).replace(time=1.0)
    with pytest.raises(ValueError):
        evolve(s, WellGeometry("1D", 1.0, 0.1), 0.5)


def test_dimension_mismatch_rejected():
    s = SpectralState.eigenstate(ModeSet.segment(3), 1)
    with pytest.raises(ValueError):
        evolve(s, WellGeometry("2D", 1.0, 0.1), 0.5)


def test_step_budget_exhaustion_reports_progress():
    s = SpectralState.eigenstate(ModeSet.segment(16), 1)
    with pytest.raises(IntegrationError) as info:
        evolve(s, WellGeometry("1D", 1.0, 1.0), 1.0, max_steps=3)
    assert 0.0 <= info.value.t_reached < 1.0


def test_output_times_and_diagnostics():
    s = SpectralState.eigenstate(ModeSet.segment(16), 1)
    traj = evolve(s, WellGeometry("1D", 1.0, 0.5), 1.0, t_eval=[0.25, 0.5, 2.0])
    np.testing.assert_array_equal(traj.times, [0.0, 0.25, 0.5, 1.0])
    d = traj.diagnostics
    assert d.t_reached == 1.0 and d.accepted_steps > 0
    assert d.max_norm_drift < 1e-10
    assert d.richardson_error is not None and d.richardson_error < 1e-8


def test_only_live_blocks_evolve(rng):
    ms = ModeSet.disk(2, 6)
    s = SpectralState.from_modes(ms, {(1, 1): 1.0})
    out = evolve(s, WellGeometry("2D", 1.0, 0.3), 0.5).final
    live = ms.block_id == ms.block_id[ms.index((1, 1))]
    assert np.all(out.coefficients[~live] == 0)
    assert np.count_nonzero(out.coefficients[live]) == 6


def test_initial_rate_ground_state():
    s = SpectralState.eigenstate(ModeSet.segment(8), 1)
    for v in (0.01, 0.1, -1.0):
        assert energy_rate_initial(s, WellGeometry("1D", 1.0, v)) == pytest.approx(-np.pi**2 * v, rel=1e-14)


def _centered_rate(state, geometry, dt):
    """(E(dt) - E(-dt)) / 2 dt; E(-dt) comes from the time-reversed problem."""
    fwd = evolve(state, geometry, dt, rtol=1e-13, atol=1e-15, richardson=False).final
    rs, rg = time_reversed(state, geometry)
    back = evolve(rs, rg, dt, rtol=1e-13, atol=1e-15, richardson=False).final
    return (expected_energy(fwd, geometry) - expected_energy(back, rg)) / (2 * dt)


@pytest.mark.parametrize("dim,modes", [("1D", [1, 2]), ("2D", [(0, 1), (0, 2)]), ("3D", [(1, 1, 0), (2, 1, 0)])])
def test_initial_rate_matches_centered_difference(dim, modes):
    ms = ModeSet.build(dim, 24, 1)
    s = SpectralState.from_modes(ms, {modes[0]: SQ, modes[1]: SQ * np.exp(0.7j)})
    g = WellGeometry(dim, 1.0, 0.1)
    assert _centered_rate(s, g, 1e-5) == pytest.approx(energy_rate_initial(s, g), rel=1e-4)


def test_time_reversal_returns_conjugate_state(rng):
    ms = ModeSet.sphere(1, 8)
    s0 = random_state(ms, 4, rng, modes=[q for q in ms if q[0] <= 3])
    g = WellGeometry("3D", 1.0, 0.2)
    s1 = evolve(s0, g, 0.4, rtol=1e-12, atol=1e-14).final
    rs, rg = time_reversed(s1, g)
    assert rg.initial_size == pytest.approx(1.08) and rg.wall_speed == -0.2
    back = evolve(rs, rg, 0.4, rtol=1e-12, atol=1e-14).final
    c_back = back.amplitudes(rg)
    fwd, _ = time_reversed(back.replace(time=0.4), rg)  # undo the conjugation and relabelling
    np.testing.assert_allclose(fwd.coefficients, s0.coefficients, atol=1e-9)
    assert expected_energy(back, rg) == pytest.approx(expected_energy(s0, g), rel=1e-10)
    assert np.sum(np.abs(c_back) ** 2) == pytest.approx(1.0, abs=1e-10)


def test_time_reversal_needs_partner_modes():
    ms = ModeSet.from_modes("2D", [(1, 1)])
    s = SpectralState.eigenstate(ms, (1, 1))
    with pytest.raises(ValueError):
        time_reversed(s, WellGeometry("2D", 1.0, 0.1))


def test_self_convergence_in_truncation():
    g = WellGeometry("1D", 1.0, 0.1)
    e = []
    for n in (32, 64):
        s = SpectralState.eigenstate(ModeSet.segment(n), 1)
        e.append(expected_energy(evolve(s, g, 1.0, richardson=False).final, g))
    assert abs(e[1] - e[0]) / e[1] < 1e-7
    assert e[1] == pytest.approx(4.079591232931, rel=1e-9)


@settings(max_examples=8, deadline=None)
@given(v=st.floats(-0.5, 0.5).filter(lambda v: abs(v) > 1e-3), seed=st.integers(0, 2**32 - 1))
def test_norm_is_conserved(v, seed):
    ms = ModeSet.segment(12)
    s = random_state(ms, 3, np.random.default_rng(seed), modes=range(1, 5))
    traj = evolve(s, WellGeometry("1D", 1.0, v), 0.5, richardson=False)
    assert traj.diagnostics.max_norm_drift < 1e-8
    assert traj.final.norm == pytest.approx(1.0, abs=1e-8)
