"""Conserved functionals of the BO family and drift reports."""

from typing import TYPE_CHECKING, NamedTuple
from dataclasses import dataclass

import numpy as np
import scipy.fft
import numpy.typing as npt

from bogs.errors import FieldError
from bogs.spectral import Grid, Field, FloatArray, ComplexArray
from bogs.equations import EquationKind

if TYPE_CHECKING:
    from bogs.evolution import Trajectory

DRIFT_FLOOR = 1e-14


class MassFunctionals(NamedTuple):
    """The conserved functionals at one time."""

    mean_mass: float
    l2_mass: float
    hamiltonian: float


def _rows(data: npt.ArrayLike) -> np.ndarray:
    return np.atleast_2d(np.asarray(data))


def _hu_x(spectra: ComplexArray, grid: Grid) -> FloatArray:
    """``H u_x`` row-wise; its symbol is ``|xi|``."""
    return scipy.fft.ifft(np.abs(grid.odd_wavenumbers) * spectra, axis=-1).real


def _u_x(spectra: ComplexArray, grid: Grid) -> FloatArray:
    return scipy.fft.ifft(1j * grid.odd_wavenumbers * spectra, axis=-1).real


def _hamiltonian_parts(u: FloatArray, grid: Grid, sign: int) -> tuple[FloatArray, FloatArray]:
    spectra = scipy.fft.fft(u, axis=-1)
    quadratic = 0.5 * grid.dx * np.sum(u * _hu_x(spectra, grid), axis=-1)
    quartic = sign * grid.dx * np.sum(u**4, axis=-1) / 12
    return quadratic, quartic


def _bo_energy(u: FloatArray, grid: Grid, sign: int) -> FloatArray:
    spectra = scipy.fft.fft(u, axis=-1)
    ux = _u_x(spectra, grid)
    integrand = 0.5 * ux**2 + 0.75 * sign * u**2 * _hu_x(spectra, grid) + 0.25 * u**4
    return grid.dx * np.sum(integrand, axis=-1)


def _require_real(u: Field) -> None:
    if not u.is_real:
        raise FieldError('conserved functionals of the BO family need a real field')


def mass_functionals(u: Field, sign: int = 1) -> MassFunctionals:
    """Mean, L2 mass and Hamiltonian ``int 1/2 u H u_x + sign u^4 / 12``.

    ``sign`` is the nonlinearity sign of ``u_t + H u_xx + sign u^2 u_x = 0``;
    the Hamiltonian with ``- u^4 / 12`` belongs to ``sign = -1``.
    """
    _require_real(u)
    grid = u.grid
    samples = _rows(u.samples)
    quadratic, quartic = _hamiltonian_parts(samples, grid, sign)
    return MassFunctionals(
        mean_mass=float(grid.dx * samples.sum()),
        l2_mass=float(grid.dx * np.sum(samples**2)),
        hamiltonian=float(quadratic[0] + quartic[0]),
    )


def hamiltonian_parts(u: Field, sign: int = 1) -> tuple[float, float]:
    """Quadratic part ``1/2 int u H u_x`` and quartic part ``sign int u^4 / 12``."""
    _require_real(u)
    quadratic, quartic = _hamiltonian_parts(_rows(u.samples), u.grid, sign)
    return float(quadratic[0]), float(quartic[0])


def bo_energy(u: Field, sign: int = 1) -> float:
    """Energy ``int 1/2 u_x^2 + 3/4 sign u^2 H u_x + 1/4 u^4``.

    Conserved by ``u_t + H u_xx + sign (u^2)_x = 0``.
    """
    _require_real(u)
    return float(_bo_energy(_rows(u.samples), u.grid, sign)[0])


def drift(series: npt.ArrayLike) -> float:
    """``max_t |Q(t) - Q(0)| / max(|Q(0)|, 1e-14)``."""
    values = np.asarray(series, dtype=np.float64)
    if values.size == 0:
        return 0.0
    return float(np.max(np.abs(values - values[0])) / max(abs(values[0]), DRIFT_FLOOR))


@dataclass(frozen=True)
class ConservationReport:
    """Time series of the conserved functionals of a trajectory.

    ``hamiltonian`` is absent for DNLS; ``bo_energy`` is present for BO only.
    """

    times: FloatArray
    mean_mass: FloatArray
    l2_mass: FloatArray
    hamiltonian: FloatArray | None = None
    bo_energy: FloatArray | None = None

    def series(self) -> dict[str, FloatArray]:
        """Reported functionals by name."""
        out = {'mean_mass': self.mean_mass, 'l2_mass': self.l2_mass}
        if self.hamiltonian is not None:
            out['hamiltonian'] = self.hamiltonian
        if self.bo_energy is not None:
            out['bo_energy'] = self.bo_energy
        return out

    @property
    def drifts(self) -> dict[str, float]:
        """Relative drift of every reported functional."""
        return {name: drift(values) for name, values in self.series().items()}

    def rows(self) -> list[list[float | str]]:
        """Rows for ``conservation.csv``, blank where a functional is not reported."""
        series = self.series()
        columns = ('mean_mass', 'l2_mass', 'hamiltonian', 'bo_energy')
        return [
            [float(t)] + [float(series[c][i]) if c in series else '' for c in columns]
            for i, t in enumerate(self.times)
        ]


def drift_report(traj: 'Trajectory') -> ConservationReport:
    """Evaluate the conserved functionals on every snapshot of ``traj``."""
    grid = traj.grid
    data = np.asarray(traj.data)
    sign = traj.equation.nonlinearity_sign
    if traj.equation.kind is EquationKind.DNLS or traj.is_complex:
        return ConservationReport(
            times=traj.times,
            mean_mass=np.abs(grid.dx * data.sum(axis=1)),
            l2_mass=grid.dx * np.sum(np.abs(data) ** 2, axis=1),
        )
    quadratic, quartic = _hamiltonian_parts(data, grid, sign)
    energy = _bo_energy(data, grid, sign) if traj.equation.kind is EquationKind.BO else None
    return ConservationReport(
        times=traj.times,
        mean_mass=grid.dx * data.sum(axis=1),
        l2_mass=grid.dx * np.sum(data**2, axis=1),
        hamiltonian=quadratic + quartic,
        bo_energy=energy,
    )
