"""Coefficient dynamics in the instantaneous eigenbasis.

The wavefunction is ``Psi = sum_a b_a(t) exp(-i theta_a(t)) phi_a(t)``. The
``b_a`` obey

    db_a/dt = -sum_b b_b exp(i(theta_a - theta_b)) <phi_a | d phi_b/dt>

with closed-form phases, so the integrator never sees the fast ``E_a/hbar``
rotation directly. Integration uses an adaptive Dormand-Prince 5(4) pair.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .basis import (
    DISK,
    SEGMENT,
    ModeSet,
    PhysicalConstants,
    WellGeometry,
    as_mode,
    coupling_kernel,
    energies,
    phases,
)

log = logging.getLogger(__name__)

NORM_TOL = 1e-8
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12


class IntegrationError(RuntimeError):
    """Step size underflow; ``t_reached`` records how far the integration got."""

    def __init__(self, message, t_reached):
        super().__init__(message)
        self.t_reached = t_reached


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Immutable snapshot of the interaction-picture coefficients ``b`` at ``time``."""

    mode_set: ModeSet
    coefficients: np.ndarray
    time: float = 0.0
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    def __post_init__(self):
        b = np.array(self.coefficients, dtype=complex)
        if b.shape != (len(self.mode_set),):
            raise ValueError(f"expected {len(self.mode_set)} coefficients, got shape {b.shape}")
        b.setflags(write=False)
        object.__setattr__(self, "coefficients", b)

    @classmethod
    def from_modes(cls, mode_set: ModeSet, amplitudes: Mapping, time: float = 0.0,
                   constants: PhysicalConstants | None = None, normalize: bool = False) -> "SpectralState":
        """Build a state from ``{mode: amplitude}``; unspecified modes are zero."""
        b = np.zeros(len(mode_set), dtype=complex)
        for mode, amp in amplitudes.items():
            b[mode_set.index(mode)] = amp
        if normalize:
            b /= np.linalg.norm(b)
        return cls(mode_set, b, time, constants or PhysicalConstants())

    @classmethod
    def eigenstate(cls, mode_set: ModeSet, mode, constants: PhysicalConstants | None = None) -> "SpectralState":
        """Eigenstate of the initial well."""
        return cls.from_modes(mode_set, {mode: 1.0}, 0.0, constants)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def amplitude(self, mode) -> complex:
        return complex(self.coefficients[self.mode_set.index(mode)])

    def amplitudes(self, geometry: WellGeometry) -> np.ndarray:
        """Schrodinger-picture expansion coefficients ``b exp(-i theta)``."""
        return self.coefficients * np.exp(-1j * phases(self.constants, geometry, self.mode_set, self.time))

    def replace(self, coefficients=None, time=None) -> "SpectralState":
        return SpectralState(
            self.mode_set,
            self.coefficients if coefficients is None else coefficients,
            self.time if time is None else time,
            self.constants,
        )


def random_state(mode_set: ModeSet, n_modes: int, rng: np.random.Generator,
                 modes: Sequence | None = None, constants: PhysicalConstants | None = None) -> SpectralState:
    """Normalized state with ``n_modes`` random complex amplitudes on distinct modes."""
    pool = list(mode_set.modes if modes is None else (as_mode(mode_set.dimension, q) for q in modes))
    if n_modes > len(pool):
        raise ValueError("not enough modes in the pool")
    picks = rng.choice(len(pool), size=n_modes, replace=False)
    amps = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
    amps /= np.linalg.norm(amps)
    return SpectralState.from_modes(mode_set, {pool[i]: a for i, a in zip(sorted(picks), amps)},
                                    constants=constants)


@dataclass
class Diagnostics:
    accepted_steps: int = 0
    rejected_steps: int = 0
    rhs_evaluations: int = 0
    max_norm_drift: float = 0.0
    richardson_error: float | None = None
    t_reached: float = 0.0


@dataclass
class Trajectory:
    states: list
    diagnostics: Diagnostics

    @property
    def final(self) -> SpectralState:
        return self.states[-1]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.states])


# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, :1] = [1 / 5]
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_B = _A[6].copy()
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _dopri_step(rhs, t, y, h, k0):
    ks = np.empty((7, y.size), dtype=complex)
    ks[0] = k0
    for i in range(1, 7):
        ks[i] = rhs(t + _C[i] * h, y + h * (_A[i, :i] @ ks[:i]))
    # FSAL: the last stage is evaluated at the propagated solution
    y_new = y + h * (_B[:6] @ ks[:6])
    err = h * (_E @ ks)
    return y_new, err, ks[6]


def _make_rhs(state: SpectralState, geometry: WellGeometry, active: np.ndarray):
    sub = ModeSet.from_modes(state.mode_set.dimension, [state.mode_set.modes[i] for i in active])
    kernel = coupling_kernel(sub)
    half_freq = state.constants.hbar * sub.z**2 / (2.0 * state.constants.mu)
    v, s0 = geometry.wall_speed, geometry.initial_size

    def rhs(t, b):
        size = s0 + v * t
        rot = np.exp(1j * half_freq * (t / (s0 * size)))
        return -(v / size) * rot * (kernel @ (b / rot))

    return rhs


def _active_indices(state: SpectralState) -> np.ndarray:
    """Modes in angular blocks that carry amplitude; other blocks stay exactly zero."""
    ids = state.mode_set.block_id
    live = np.unique(ids[state.coefficients != 0])
    return np.flatnonzero(np.isin(ids, live))


def evolve(initial: SpectralState, geometry: WellGeometry, t_final: float,
           rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
           t_eval: Sequence[float] | None = None, richardson: bool = True,
           max_steps: int = 5_000_000) -> Trajectory:
    """Integrate the coefficient equations from ``initial.time`` to ``t_final``.

    Parameters
    ----------
    initial : SpectralState
    geometry : WellGeometry
        Wall trajectory; ``geometry.size`` must stay positive on the window.
    t_final : float
        Must not precede ``initial.time``.
    rtol, atol : float
        Per-component tolerances of the embedded error estimate.
    t_eval : sequence of float, optional
        Extra output times inside the window; the final time is always
        included.
    richardson : bool
        Re-integrate over the accepted step mesh with every step halved and
        record the largest coefficient difference as
        ``diagnostics.richardson_error``.

    Returns
    -------
    Trajectory
        States at ``initial.time``, the requested times and ``t_final``.
        Norm drift is recorded, never corrected.
    """
    if initial.mode_set.dimension != geometry.dimension:
        raise ValueError("state and geometry dimensions differ")
    t0 = float(initial.time)
    if t_final < t0:
        raise ValueError("t_final precedes the initial time")
    geometry.check_window(t0, t_final)
    diag = Diagnostics(t_reached=t0)
    if t_final == t0:
        return Trajectory([initial], diag)

    outputs = sorted({float(t) for t in (t_eval or ()) if t0 < t < t_final} | {float(t_final)})
    active = _active_indices(initial)
    full = np.array(initial.coefficients)
    y = full[active].copy()
    rhs_raw = _make_rhs(initial, geometry, active)

    def rhs(t, b):
        diag.rhs_evaluations += 1
        return rhs_raw(t, b)

    norm0 = initial.norm
    states = [initial]
    mesh = []
    t = t0
    k = rhs(t, y)
    h = _initial_step(rhs, t, y, k, t_final - t0, rtol, atol)
    for t_out in outputs:
        while t < t_out:
            if diag.accepted_steps + diag.rejected_steps >= max_steps:
                raise IntegrationError("maximum step count exceeded", t)
            last = h >= t_out - t
            step = t_out - t if last else h
            if step < 1e-14 * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow at t={t}", t)
            y_new, err, k_new = _dopri_step(rhs, t, y, step, k)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            en = math.sqrt(np.mean((np.abs(err) / scale) ** 2)) if y.size else 0.0
            if en <= 1.0:
                mesh.append((t, step))
                t = t_out if last else t + step
                y, k = y_new, k_new
                diag.accepted_steps += 1
                diag.max_norm_drift = max(diag.max_norm_drift, abs(float(np.vdot(y, y).real) - norm0))
                factor = 5.0 if en == 0 else min(5.0, 0.9 * en ** -0.2)
                if not last:
                    h = step * factor
            else:
                diag.rejected_steps += 1
                h = step * max(0.2, 0.9 * en ** -0.2)
        full[active] = y
        states.append(initial.replace(coefficients=full.copy(), time=t_out))
    diag.t_reached = t

    if richardson:
        yf = initial.coefficients[active].copy()
        for ts, hs in mesh:
            for half in (0.0, 0.5):
                yf, _, _ = _dopri_step(rhs_raw, ts + half * hs, yf, 0.5 * hs, rhs_raw(ts + half * hs, yf))
        diag.richardson_error = float(np.max(np.abs(yf - y))) if y.size else 0.0

    if diag.max_norm_drift > NORM_TOL:
        log.warning("norm drift %.3e exceeds %.1e", diag.max_norm_drift, NORM_TOL)
    return Trajectory(states, diag)


def _initial_step(rhs, t, y, k, span, rtol, atol):
    scale = atol + rtol * np.abs(y)
    d0 = math.sqrt(np.mean((np.abs(y) / scale) ** 2))
    d1 = math.sqrt(np.mean((np.abs(k) / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    k1 = rhs(t + h0, y + h0 * k)
    d2 = math.sqrt(np.mean((np.abs(k1 - k) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def expected_energy(state: SpectralState, geometry: WellGeometry) -> float:
    """``sum |b_a|^2 E_a(t)``."""
    e = energies(state.constants, geometry, state.mode_set, state.time)
    return float(np.sum(np.abs(state.coefficients) ** 2 * e))


def energy_rate_initial(state: SpectralState, geometry: WellGeometry) -> float:
    """Rate of change of the expected energy at the state's instant.

    Evaluates ``sum_a E_a (b_a* db_a/dt + c.c.) + dE_a/dt |b_a|^2`` with the
    closed-form couplings. At ``t = 0`` this is the initial power delivered
    by the wall; the expression holds at any instant.
    """
    c = state.amplitudes(geometry)
    t = state.time
    size = geometry.size(t)
    e = energies(state.constants, geometry, state.mode_set, t)
    m = geometry.wall_speed / size * coupling_kernel(state.mode_set)
    # Schrodinger-picture form of the coefficient equation (phases cancel)
    cdot = -(m @ c)
    edot = -2.0 * e * geometry.wall_speed / size
    return float(np.sum(e * 2.0 * (np.conj(c) * cdot).real + edot * np.abs(c) ** 2))


def time_reversed(state: SpectralState, geometry: WellGeometry) -> tuple[SpectralState, WellGeometry]:
    """Conjugate state in a well retracing the wall motion backwards.

    Returns ``(state', geometry')`` at time 0 with ``geometry'`` starting at
    ``geometry.size(state.time)`` and speed ``-v``. Evolving ``state'`` for
    ``tau`` gives the complex conjugate of the original wavefunction at
    ``state.time - tau``.
    """
    reversed_geometry = WellGeometry(geometry.dimension, geometry.size(state.time), -geometry.wall_speed)
    c = state.amplitudes(geometry)
    ms = state.mode_set
    b = np.zeros_like(c)
    for i, q in enumerate(ms.modes):
        if c[i] == 0:
            continue
        # conj(phi_{m}) = phi_{-m} on the disk, (-1)^m phi_{-m} on the sphere
        if ms.dimension == SEGMENT:
            partner, sign = q, 1.0
        elif ms.dimension == DISK:
            partner, sign = (-q[0], q[1]), 1.0
        else:
            partner, sign = (q[0], q[1], -q[2]), (-1.0) ** q[2]
        if partner not in ms:
            raise ValueError(f"mode set lacks {partner}, the conjugate partner of {q}")
        b[ms.index(partner)] = sign * np.conj(c[i])
    return SpectralState(ms, b, 0.0, state.constants), reversed_geometry
