"""Moving-wall work experiments.

The wall is moved a distance ``dl`` at constant speed ``v`` (``dt = dl/|v|``)
and the mean work is measured as the change of the expected energy of the
spectrally evolved state. It is compared with two first-order predictions:

* ``-F * dl_signed`` with ``F`` the wall force built from ``rho3`` at the wall,
* ``dE/dt(0) * dt`` from the closed-form initial energy rate.

Discrepancies involving the measurement are relative to ``|measured|``, e.g.
``measured_vs_predicted = |measured - predicted| / |measured|``;
``analytic_vs_predicted`` is relative to ``|predicted|``. A discrepancy
between two identical numbers (including two zeros) is 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .basis import (
    DISK,
    SEGMENT,
    ModeSet,
    PhysicalConstants,
    WellGeometry,
    as_mode,
    wavenumber,
)
from .density import wall_force, wall_limits
from .dynamics import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    IntegrationError,
    SpectralState,
    energy_rate_initial,
    evolve,
    expected_energy,
)

MAX_RELATIVE_DISPLACEMENT = 1e-3
SCALING_FACTORS = (1.0, 0.5, 0.25)


class ExperimentError(IntegrationError):
    """Integrator failure inside a work experiment, tagged with the wall speed."""

    def __init__(self, message, t_reached, speed, truncation):
        super().__init__(message, t_reached)
        self.speed = speed
        self.truncation = truncation


def relative_discrepancy(value: float, reference: float) -> float:
    """``|value - reference| / |reference|``, 0 when both are equal."""
    if value == reference:
        return 0.0
    if reference == 0.0:
        return math.inf
    return abs(value - reference) / abs(reference)


def _angular_extent(dimension: str, modes) -> int:
    if dimension == SEGMENT:
        return 0
    if len(modes[0]) == 2:
        return max(abs(q[0]) for q in modes)
    return max(q[1] for q in modes)


@dataclass(frozen=True)
class WorkExperiment:
    """Specification of a work experiment.

    Parameters
    ----------
    geometry : WellGeometry
        Dimension and initial size; its ``wall_speed`` is ignored in favour
        of ``speeds``.
    amplitudes : mapping
        Initial ``{mode: b}`` at ``t = 0``; must be normalized.
    displacement : float
        Distance ``dl >= 0`` travelled by the wall, at most ``1e-3`` times the
        initial size. Negative speeds move the wall inwards by ``dl``.
    speeds : sequence of float
        Nonzero wall speeds to sweep.
    truncations : sequence of int
        Radial truncations ``N`` to sweep; defaults to ``(64, 128)``. The
        first one produces the headline numbers.
    angular_max : int, optional
        ``m_max`` (disk) or ``l_max`` (sphere); defaults to the smallest value
        covering ``amplitudes``.
    scaling : bool
        Also run the displacement study at ``dl``, ``dl/2``, ``dl/4``.
    """

    geometry: WellGeometry
    amplitudes: Mapping
    displacement: float
    speeds: Sequence[float] = (0.1,)
    truncations: Sequence[int] = (64, 128)
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    angular_max: int | None = None
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    scaling: bool = True

    def __post_init__(self):
        dim = self.geometry.dimension
        amps = {as_mode(dim, q): complex(b) for q, b in dict(self.amplitudes).items()}
        if not amps:
            raise ValueError("initial state has no amplitudes")
        object.__setattr__(self, "amplitudes", amps)
        norm = sum(abs(b) ** 2 for b in amps.values())
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"initial state is not normalized (sum |b|^2 = {norm!r})")
        if not (0.0 <= self.displacement <= MAX_RELATIVE_DISPLACEMENT * self.geometry.initial_size):
            raise ValueError(
                f"displacement must lie in [0, {MAX_RELATIVE_DISPLACEMENT:g} * size], got {self.displacement!r}"
            )
        speeds = tuple(float(v) for v in self.speeds)
        if not speeds or any(v == 0.0 or not math.isfinite(v) for v in speeds):
            raise ValueError("speeds must be finite and nonzero")
        object.__setattr__(self, "speeds", speeds)
        truncs = tuple(int(n) for n in self.truncations)
        if not truncs or min(truncs) < 1:
            raise ValueError("truncations must be positive")
        object.__setattr__(self, "truncations", truncs)
        need = max(q[1] if dim == DISK else q[0] for q in amps)
        if need > min(truncs):
            raise ValueError(f"truncation {min(truncs)} does not cover radial index {need}")
        ext = _angular_extent(dim, list(amps))
        if self.angular_max is None:
            object.__setattr__(self, "angular_max", ext)
        elif self.angular_max < ext:
            raise ValueError(f"angular_max {self.angular_max} does not cover the initial state")

    def mode_set(self, truncation: int) -> ModeSet:
        return ModeSet.build(self.geometry.dimension, truncation, self.angular_max)

    def initial_state(self, truncation: int) -> SpectralState:
        return SpectralState.from_modes(self.mode_set(truncation), self.amplitudes, 0.0, self.constants)


@dataclass(frozen=True)
class SpeedRow:
    speed: float
    duration: float
    signed_displacement: float
    measured_work: float
    predicted_work: float
    analytic_rate: float
    analytic_work: float
    measured_vs_predicted: float
    measured_vs_analytic: float
    analytic_vs_predicted: float
    norm_drift: float
    steps: int


@dataclass(frozen=True)
class ScalingStudy:
    speed: float
    displacements: tuple[float, ...]
    discrepancies: tuple[float, ...]
    slope: float | None


@dataclass(frozen=True)
class ConvergenceRow:
    speed: float
    truncation: int
    measured_work: float
    relative_change: float | None


@dataclass(frozen=True)
class WallReport:
    """Outcome of :func:`run_work_experiment`.

    ``predicted_work`` is ``-F * dl`` for an expanding wall; each speed row
    carries its own signed prediction. ``speed_spread`` is the largest
    pairwise relative difference of ``measured_work / signed_displacement``
    across the speed sweep.
    """

    dimension: str
    initial_size: float
    displacement: float
    constants: PhysicalConstants
    amplitudes: dict
    truncation: int
    force: float
    pressure: float
    area: float
    predicted_work: float
    rows: tuple[SpeedRow, ...]
    speed_spread: float
    scaling: tuple[ScalingStudy, ...]
    convergence: tuple[ConvergenceRow, ...]

    def row(self, speed: float) -> SpeedRow:
        for r in self.rows:
            if r.speed == speed:
                return r
        raise KeyError(speed)

    def to_dict(self) -> dict:
        """JSON-ready nested dictionary (complex amplitudes as ``[re, im]``)."""
        return {
            "geometry": {
                "dimension": self.dimension,
                "size": self.initial_size,
                "displacement": self.displacement,
                "boundary_area": self.area,
            },
            "state": {
                "constants": {"hbar": self.constants.hbar, "mu": self.constants.mu},
                "truncation": self.truncation,
                "amplitudes": [
                    {"mode": list(q), "b": [b.real, b.imag]} for q, b in sorted(self.amplitudes.items())
                ],
            },
            "predicted_work": self.predicted_work,
            "measured_work": [
                {"speed": r.speed, "duration": r.duration, "displacement": r.signed_displacement,
                 "value": r.measured_work}
                for r in self.rows
            ],
            "analytic_rate": [
                {"speed": r.speed, "rate": r.analytic_rate, "work": r.analytic_work} for r in self.rows
            ],
            "force": self.force,
            "pressure": self.pressure,
            "discrepancies": {
                "per_speed": [
                    {"speed": r.speed, "predicted_work": r.predicted_work,
                     "measured_vs_predicted": r.measured_vs_predicted,
                     "measured_vs_analytic": r.measured_vs_analytic,
                     "analytic_vs_predicted": r.analytic_vs_predicted,
                     "norm_drift": r.norm_drift}
                    for r in self.rows
                ],
                "speed_spread": self.speed_spread,
                "displacement_scaling": [
                    {"speed": s.speed, "displacements": list(s.displacements),
                     "discrepancies": list(s.discrepancies), "slope": s.slope}
                    for s in self.scaling
                ],
            },
            "convergence": [asdict(c) for c in self.convergence],
        }


def _measure(state: SpectralState, geometry: WellGeometry, duration: float, exp: WorkExperiment, n: int):
    try:
        traj = evolve(state, geometry, duration, rtol=exp.rtol, atol=exp.atol, richardson=False)
    except IntegrationError as err:
        raise ExperimentError(
            f"integration failed at wall speed {geometry.wall_speed!r} (N={n}): {err}",
            err.t_reached, geometry.wall_speed, n,
        ) from err
    work = expected_energy(traj.final, geometry) - expected_energy(state, geometry)
    return work, traj.diagnostics


def _fit_slope(x, y) -> float | None:
    x, y = np.asarray(x), np.asarray(y)
    if np.any(y <= 0) or np.any(x <= 0) or len(x) < 2:
        return None
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def run_work_experiment(exp: WorkExperiment) -> WallReport:
    """Move the wall and compare measured and predicted work.

    For every speed ``v``: ``dt = dl/|v|``, evolve the initial state over
    ``[0, dt]``, record ``E(dt) - E(0)``, the prediction ``-F(0) v dt`` with
    ``F`` from :func:`qwall.density.wall_force`, and ``dE/dt(0) dt`` from
    :func:`qwall.dynamics.energy_rate_initial`.

    Raises
    ------
    ExperimentError
        If the integrator fails; ``speed`` and ``truncation`` identify the cell.
    """
    dim = exp.geometry.dimension
    base = WellGeometry(dim, exp.geometry.initial_size, 0.0)
    dl = exp.displacement
    n0 = exp.truncations[0]
    state0 = exp.initial_state(n0)
    force = wall_force(state0, base)
    area = base.boundary_area(0.0)

    rows = []
    for v in exp.speeds:
        geo = base.with_speed(v)
        duration = dl / abs(v)
        signed = v * duration
        measured, diag = _measure(state0, geo, duration, exp, n0)
        predicted = -force * signed
        rate = energy_rate_initial(state0, geo)
        analytic = rate * duration
        rows.append(SpeedRow(
            speed=v, duration=duration, signed_displacement=signed,
            measured_work=measured, predicted_work=predicted,
            analytic_rate=rate, analytic_work=analytic,
            measured_vs_predicted=relative_discrepancy(predicted, measured),
            measured_vs_analytic=relative_discrepancy(analytic, measured),
            analytic_vs_predicted=relative_discrepancy(analytic, predicted),
            norm_drift=diag.max_norm_drift, steps=diag.accepted_steps,
        ))

    spread = 0.0
    if dl > 0:
        per_length = [r.measured_work / r.signed_displacement for r in rows]
        for a, b in itertools.combinations(per_length, 2):
            spread = max(spread, relative_discrepancy(a, b))

    scaling = []
    if exp.scaling and dl > 0:
        for v in exp.speeds:
            geo = base.with_speed(v)
            dls, discs = [], []
            for f in SCALING_FACTORS:
                d = dl * f
                work, _ = _measure(state0, geo, d / abs(v), exp, n0)
                dls.append(d)
                discs.append(abs(work + force * math.copysign(d, v)))
            scaling.append(ScalingStudy(v, tuple(dls), tuple(discs), _fit_slope(dls, discs)))

    convergence = []
    for v, row in zip(exp.speeds, rows):
        prev = row.measured_work
        convergence.append(ConvergenceRow(v, n0, prev, None))
        geo = base.with_speed(v)
        for n in exp.truncations[1:]:
            work, _ = _measure(exp.initial_state(n), geo, row.duration, exp, n)
            convergence.append(ConvergenceRow(v, n, work, relative_discrepancy(work, prev)))
            prev = work

    return WallReport(
        dimension=dim, initial_size=base.initial_size, displacement=dl, constants=exp.constants,
        amplitudes=dict(exp.amplitudes), truncation=n0,
        force=force, pressure=force / area, area=area, predicted_work=-force * dl,
        rows=tuple(rows), speed_spread=spread, scaling=tuple(scaling), convergence=tuple(convergence),
    )


@dataclass(frozen=True)
class AdiabaticReport:
    mode: tuple[int, ...]
    force: float
    energy_slope: float
    relative_error: float

    @property
    def passed(self) -> bool:
        return self.relative_error <= 1e-10


def adiabatic_crosscheck(geometry: WellGeometry, mode, constants: PhysicalConstants | None = None,
                         t: float = 0.0) -> AdiabaticReport:
    """Compare the wall force of an eigenstate with ``-dE_mode/dsize``.

    ``dE/dsize = -hbar^2 z^2 / (mu size^3)`` is differentiated by hand from
    the eigenvalue; the force comes from the density module.
    """
    constants = constants or PhysicalConstants()
    mode = as_mode(geometry.dimension, mode)
    ms = ModeSet.from_modes(geometry.dimension, [mode])
    state = SpectralState.from_modes(ms, {mode: 1.0}, t, constants)
    force = wall_force(state, geometry)
    z = wavenumber(geometry.dimension, mode)
    slope = -constants.hbar**2 * z**2 / (constants.mu * geometry.size(t) ** 3)
    return AdiabaticReport(mode, force, slope, abs(force + slope) / force)


@dataclass(frozen=True)
class NullityReport:
    """Wall values of ``rho2`` against the ``rho3`` work prediction.

    ``rho2_wall`` is the closed-form wall limit (identically 0 because every
    eigenfunction vanishes there); ``rho2_wall_evaluated`` is the largest
    magnitude obtained by evaluating the basis exactly on the wall.
    """

    displacement: float
    rho2_wall: float
    rho2_wall_evaluated: float
    rho_d_wall_evaluated: float
    rho2_predicted_work: float
    rho3_predicted_work: float
    measured_work: float | None
    speed: float | None

    @property
    def rho2_contradicted(self) -> bool:
        """Measured work is nonzero while the ``rho2`` prediction is zero."""
        return self.measured_work is not None and self.measured_work != 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def rho2_wall_nullity_check(state: SpectralState, geometry: WellGeometry, displacement: float = 1e-4,
                            measure: bool = True, speed: float | None = None) -> NullityReport:
    """Check that ``rho2`` cannot account for the work done on the wall.

    Substituting the wall value of ``rho2`` into ``dW = -rho dl`` predicts no
    work at all, whereas ``rho3`` predicts ``-F dl``. With ``measure=True``
    the wall is moved outwards by ``displacement`` at ``speed`` (default:
    the geometry's speed, or 0.1 for a static geometry) and the actual work
    is reported alongside.
    """
    static = WellGeometry(geometry.dimension, geometry.size(state.time), 0.0)
    # restart the clock at the state's instant; the Schrodinger amplitudes are kept
    at_zero = SpectralState(state.mode_set, state.amplitudes(geometry), 0.0, state.constants)
    limits = wall_limits(at_zero, static)
    force = wall_force(at_zero, static)
    measured = None
    v = None
    if measure and displacement > 0:
        v = speed if speed is not None else (geometry.wall_speed or 0.1)
        geo = static.with_speed(v)
        traj = evolve(at_zero, geo, displacement / abs(v), richardson=False)
        measured = expected_energy(traj.final, geo) - expected_energy(at_zero, geo)
    signed = displacement if v is None else math.copysign(displacement, v)
    return NullityReport(
        displacement=displacement,
        rho2_wall=0.0,
        rho2_wall_evaluated=limits["rho2"],
        rho_d_wall_evaluated=limits["rho_d"],
        rho2_predicted_work=0.0,
        rho3_predicted_work=-force * signed,
        measured_work=measured,
        speed=v,
    )
