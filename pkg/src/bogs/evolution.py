"""Time integration: integrating-factor RK4, trajectories and the Duhamel operator."""

import logging
import dataclasses
from typing import TYPE_CHECKING
from dataclasses import field, dataclass

import numpy as np
import scipy.fft

from bogs.errors import (
    ConfigError,
    RangeError,
    BlowUpError,
    Diagnostics,
    InsufficientDataError,
)
from bogs.spectral import (
    Grid,
    Field,
    FloatArray,
    ComplexArray,
    make_field,
    bo_propagator,
    apply_multiplier,
    inverse_transform,
    schrodinger_propagator,
)
from bogs.equations import (
    Equation,
    EquationKind,
    EquationSpec,
    make_equation,
    nonlinear_field,
)

if TYPE_CHECKING:
    from bogs.invariants import ConservationReport

logger = logging.getLogger(__name__)

DEFAULT_DEALIAS_FRACTION = 2 / 3
STEP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping parameters of one run."""

    dt: float
    t_end: float
    dealias_fraction: float = DEFAULT_DEALIAS_FRACTION
    snapshot_stride: int = 1
    stability_constant: float = 1.0
    blowup_factor: float = 1e6

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ConfigError(f'solver.dt must be positive, got {self.dt}')
        if not self.t_end >= 0:
            raise ConfigError(f'solver.t_end must be >= 0, got {self.t_end}')
        if not 0 < self.dealias_fraction <= 1:
            raise ConfigError(
                f'solver.dealias_fraction must lie in (0, 1], got {self.dealias_fraction}'
            )
        if self.snapshot_stride < 1:
            raise ConfigError(f'solver.snapshot_stride must be >= 1, got {self.snapshot_stride}')
        if self.stability_constant <= 0:
            raise ConfigError(
                f'solver.stability_constant must be positive, got {self.stability_constant}'
            )
        if self.blowup_factor <= 1:
            raise ConfigError(f'solver.blowup_factor must exceed 1, got {self.blowup_factor}')
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > STEP_TOLERANCE * max(1.0, steps):
            raise ConfigError(
                f'solver.t_end ({self.t_end}) must be an integer multiple of solver.dt ({self.dt})'
            )
        if round(steps) % self.snapshot_stride:
            raise ConfigError(
                f'solver.t_end must be a multiple of solver.snapshot_stride * solver.dt '
                f'({round(steps)} steps, stride {self.snapshot_stride})'
            )

    @property
    def n_steps(self) -> int:
        """Number of RK4 steps to ``t_end``."""
        return round(self.t_end / self.dt)


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of one run, equally spaced in time.

    ``data`` has one row per snapshot.
    """

    equation: EquationSpec
    grid: Grid
    times: FloatArray
    data: np.ndarray
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    imag_residue: float = 0.0
    conservation: 'ConservationReport | None' = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        object.__setattr__(self, 'times', times)
        if times.ndim != 1 or self.data.shape != (times.size, self.grid.n_points):
            raise ConfigError(
                f'trajectory data shape {self.data.shape} does not match '
                f'{times.size} times on a {self.grid.n_points}-point grid'
            )
        if times.size > 1:
            steps = np.diff(times)
            if np.any(steps <= 0):
                raise ConfigError('trajectory times must be strictly increasing')
            if np.ptp(steps) > 1e-9 * max(float(steps.mean()), 1e-300):
                raise ConfigError('trajectory times must be uniformly spaced')
        self.data.flags.writeable = False

    @classmethod
    def from_fields(
        cls, equation: EquationSpec, fields: list[Field], times: list[float] | FloatArray
    ) -> 'Trajectory':
        """Stack fields sharing one grid into a trajectory."""
        if not fields:
            raise InsufficientDataError('a trajectory needs at least one snapshot')
        grid = fields[0].grid
        if any(f.grid != grid for f in fields):
            raise ConfigError('all snapshots must share one grid')
        data = np.stack([np.asarray(f.samples) for f in fields])
        return cls(equation, grid, np.asarray(times, dtype=np.float64), data)

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def is_complex(self) -> bool:
        """Whether the snapshots hold complex samples."""
        return bool(np.iscomplexobj(self.data))

    @property
    def time_step(self) -> float:
        """Spacing between snapshots (zero for a single snapshot)."""
        return float(self.times[1] - self.times[0]) if len(self) > 1 else 0.0

    @property
    def duration(self) -> float:
        """``T``, the time between the first and last snapshot."""
        return float(self.times[-1] - self.times[0])

    def snapshot(self, index: int) -> Field:
        """Snapshot ``index`` as a field."""
        return make_field(self.grid, self.data[index])

    @property
    def snapshots(self) -> list[Field]:
        """All snapshots as fields."""
        return [self.snapshot(i) for i in range(len(self))]

    def spectra(self) -> ComplexArray:
        """Row-wise FFT of the snapshots."""
        return scipy.fft.fft(self.data, axis=1)

    def scaled(self, factor: float) -> 'Trajectory':
        """Samples multiplied by ``factor``; conservation data is dropped."""
        return dataclasses.replace(self, data=np.array(self.data) * factor, conservation=None)

    def map(self, values: np.ndarray) -> 'Trajectory':
        """Same times and grid carrying different samples."""
        return dataclasses.replace(self, data=np.array(values), conservation=None)


def linear_propagate(f: Field, t: float, kind: EquationKind | str = EquationKind.MBO) -> Field:
    """Free evolution ``S(t) f``.

    BO-type flows use ``exp(-i t xi |xi|)`` and keep real data real; DNLS uses
    the Schrodinger group ``exp(-i t xi^2)``.
    """
    if isinstance(kind, str):
        kind = EquationKind.parse(kind)
    if kind is EquationKind.DNLS:
        return apply_multiplier(f, schrodinger_propagator(t))
    return apply_multiplier(f, bo_propagator(t))


def nonlinear_rhs(
    f: Field, eq: EquationSpec, dealias_fraction: float = DEFAULT_DEALIAS_FRACTION
) -> Field:
    """Dealiased nonlinear term: ``-sign (u^2)_x``, ``-sign u^2 u_x`` or ``-sign |u|^2 u_x``."""
    return nonlinear_field(f, make_equation(eq), dealias_fraction)


class IntegratingFactorRK4:
    """Classical RK4 applied to ``w(t) = S(-t) u(t)`` in Fourier space."""

    def __init__(self, equation: Equation, grid: Grid, cfg: SolverConfig) -> None:
        self.equation = equation
        self.grid = grid
        self.cfg = cfg
        self.full = equation.integrating_factor(grid, cfg.dt)
        self.half = equation.integrating_factor(grid, cfg.dt / 2)

    def _n(self, u_hat: ComplexArray) -> ComplexArray:
        return self.equation.nonlinear(u_hat, self.grid, self.cfg.dealias_fraction)

    def advance(self, u_hat: ComplexArray) -> ComplexArray:
        """One step of size ``dt``."""
        h = self.cfg.dt
        e, e2 = self.full, self.half
        k1 = self._n(u_hat)
        k2 = self._n(e2 * (u_hat + h / 2 * k1))
        k3 = self._n(e2 * u_hat + h / 2 * k2)
        k4 = self._n(e * u_hat + h * e2 * k3)
        return e * u_hat + h / 6 * (e * k1 + 2 * e2 * (k2 + k3) + k4)

    def check_stability(self, u: np.ndarray, t: float, diagnostics: Diagnostics) -> None:
        """Warn once when ``dt`` exceeds the heuristic amplitude bound."""
        amplitude = float(np.abs(u).max(initial=0.0))
        if amplitude == 0 or diagnostics.has('stability'):
            return
        limit = self.cfg.stability_constant * self.grid.dx / amplitude
        if self.cfg.dt > limit:
            diagnostics.warn(
                'stability',
                f'dt={self.cfg.dt:g} exceeds the heuristic limit {limit:.3g} at t={t:g}',
            )


def _to_samples(u_hat: ComplexArray, real: bool) -> tuple[np.ndarray, float]:
    u = scipy.fft.ifft(u_hat)
    if real:
        return u.real, float(np.abs(u.imag).max(initial=0.0))
    return u, 0.0


def step(
    state: tuple[float, Field],
    eq: EquationSpec,
    cfg: SolverConfig,
    diagnostics: Diagnostics | None = None,
) -> tuple[float, Field]:
    """Advance one time step of size ``cfg.dt``."""
    t, f = state
    equation = make_equation(eq)
    equation.check_field(f)
    integrator = IntegratingFactorRK4(equation, f.grid, cfg)
    integrator.check_stability(np.asarray(f.samples), t, diagnostics or Diagnostics())
    u_hat = integrator.advance(np.asarray(f.spectrum))
    samples, _ = _to_samples(u_hat, f.is_real)
    if not np.all(np.isfinite(samples)):
        raise BlowUpError('solution became non-finite', last_time=t)
    return t + cfg.dt, make_field(f.grid, samples)


def run(
    u0: Field, eq: EquationSpec, cfg: SolverConfig, *, track_conservation: bool = True
) -> Trajectory:
    """Integrate from ``t = 0`` to ``cfg.t_end``.

    Raises:
        BlowUpError: the solution became non-finite or exceeded
            ``cfg.blowup_factor`` times its initial maximum.
    """
    equation = make_equation(eq)
    equation.check_field(u0)
    grid = u0.grid
    integrator = IntegratingFactorRK4(equation, grid, cfg)
    diagnostics = Diagnostics()

    initial = float(np.abs(u0.samples).max(initial=0.0))
    ceiling = cfg.blowup_factor * initial
    u_hat = np.array(u0.spectrum)
    rows = [np.array(u0.samples)]
    times = [0.0]
    residue = 0.0
    t = 0.0
    integrator.check_stability(np.asarray(u0.samples), t, diagnostics)

    logger.debug(
        'run %s: n=%d L=%g dt=%g steps=%d',
        eq.kind.value,
        grid.n_points,
        grid.length,
        cfg.dt,
        cfg.n_steps,
    )
    for index in range(1, cfg.n_steps + 1):
        u_hat = integrator.advance(u_hat)
        samples, imag = _to_samples(u_hat, u0.is_real)
        if not np.all(np.isfinite(samples)):
            raise BlowUpError('solution became non-finite', last_time=t)
        peak = float(np.abs(samples).max())
        if initial > 0 and peak > ceiling:
            raise BlowUpError(
                f'max|u| = {peak:.3g} exceeded {cfg.blowup_factor:g} times the initial maximum',
                last_time=t,
            )
        t = index * cfg.dt
        residue = max(residue, imag)
        if index % cfg.snapshot_stride == 0:
            rows.append(samples)
            times.append(t)
            integrator.check_stability(samples, t, diagnostics)

    traj = Trajectory(
        eq,
        grid,
        np.asarray(times),
        np.stack(rows),
        diagnostics=diagnostics,
        imag_residue=residue,
    )
    if track_conservation:
        from bogs.invariants import drift_report

        traj = dataclasses.replace(traj, conservation=drift_report(traj))
    return traj


def duhamel(
    forcing: Trajectory, t: float, kind: EquationKind | str = EquationKind.DNLS
) -> Field:
    """Retarded integral ``int_{t_0}^t S(t - s) f(s) ds`` by the trapezoidal rule.

    ``S`` is the Schrodinger group unless ``kind`` names a BO-type flow. A
    final partial panel uses the linear interpolant of the forcing.
    """
    if isinstance(kind, str):
        kind = EquationKind.parse(kind)
    times = forcing.times
    span = max(abs(float(times[-1])), 1.0) * 1e-12
    if not times[0] - span <= t <= times[-1] + span:
        raise RangeError(f't={t:g} lies outside the forcing range [{times[0]:g}, {times[-1]:g}]')
    grid = forcing.grid
    equation = make_equation(EquationSpec(kind))
    spectra = forcing.spectra()

    full = int(np.searchsorted(times, t + span, side='right')) - 1
    full = min(full, len(forcing) - 1)
    total = np.zeros(grid.n_points, dtype=np.complex128)
    if full > 0:
        weights = np.full(full + 1, forcing.time_step)
        weights[0] = weights[-1] = forcing.time_step / 2
        for j in range(full + 1):
            total += weights[j] * equation.integrating_factor(grid, t - times[j]) * spectra[j]
    tail = t - float(times[full])
    if tail > span and full + 1 < len(forcing):
        frac = tail / forcing.time_step
        at_t = (1 - frac) * spectra[full] + frac * spectra[full + 1]
        total += tail / 2 * (equation.integrating_factor(grid, tail) * spectra[full] + at_t)
    return inverse_transform(grid, total, real=False)


@dataclass(frozen=True)
class ResidualSeries:
    """Residual norms of a time-differenced identity at interior snapshots."""

    times: FloatArray
    residual: FloatArray
    relative: FloatArray

    @property
    def max(self) -> float:
        """Largest residual."""
        return float(self.residual.max(initial=0.0))


def spectral_norms(spectra: ComplexArray, grid: Grid) -> FloatArray:
    """Row-wise L2 norms of spectra via Parseval."""
    return np.sqrt(grid.length / grid.n_points**2 * np.sum(np.abs(spectra) ** 2, axis=-1))


def interaction_residual(
    traj: Trajectory, dealias_fraction: float = DEFAULT_DEALIAS_FRACTION
) -> ResidualSeries:
    """Check ``d/dt (exp(i t omega) u_hat) = exp(i t omega) N(u)_hat`` by centred differences."""
    if len(traj) < 3:
        raise InsufficientDataError(
            f'interaction residual needs at least 3 snapshots, got {len(traj)}'
        )
    equation = make_equation(traj.equation)
    grid = traj.grid
    omega = equation.omega(grid)
    spectra = traj.spectra()
    phases = np.exp(1j * np.outer(traj.times, omega))
    w = phases * spectra
    h = traj.time_step
    dw = (w[2:] - w[:-2]) / (2 * h)
    forcing = np.stack(
        [equation.nonlinear(spectra[j], grid, dealias_fraction) for j in range(1, len(traj) - 1)]
    )
    expected = phases[1:-1] * forcing
    residual = spectral_norms(dw - expected, grid)
    scale = np.maximum(spectral_norms(expected, grid), 1e-300)
    return ResidualSeries(traj.times[1:-1], residual, residual / scale)

