"""Equation family: linear dispersion symbols and nonlinear terms."""

import enum
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
import scipy.fft

from bogs.errors import ConfigError
from bogs.spectral import Grid, Field, FloatArray, ComplexArray, dealias_mask, inverse_transform


class EquationKind(enum.Enum):
    """The three flows of the BO family."""

    BO = 'BO'
    MBO = 'mBO'
    DNLS = 'DNLS'

    @classmethod
    def parse(cls, value: str) -> 'EquationKind':
        """Case-insensitive lookup by value."""
        for kind in cls:
            if kind.value.lower() == value.lower():
                return kind
        choices = ', '.join(k.value for k in cls)
        raise ConfigError(f"equation.kind must be one of {choices}, got '{value}'")

    @property
    def scaling_exponent(self) -> float:
        """``alpha`` in the invariant dilation ``lam^-alpha u(x / lam, t / lam^2)``."""
        return 1.0 if self is EquationKind.BO else 0.5


@dataclass(frozen=True)
class EquationSpec:
    """Which flow to solve.

    ``nonlinearity_sign`` multiplies the nonlinear term on the left-hand side:
    mBO reads ``u_t + H u_xx + sign * u^2 u_x = 0``.
    """

    kind: EquationKind
    nonlinearity_sign: int = 1
    linear_only: bool = False

    def __post_init__(self) -> None:
        if self.nonlinearity_sign not in (1, -1):
            raise ConfigError(
                f'equation.sign must be +1 or -1, got {self.nonlinearity_sign!r}'
            )

    @property
    def complex_valued(self) -> bool:
        """Whether the flow evolves complex fields."""
        return self.kind is EquationKind.DNLS


class Equation(ABC):
    """A dispersive flow ``u_t = -i omega(D) u + nonlinear(u)``."""

    def __init__(self, spec: EquationSpec) -> None:
        self.spec = spec

    @property
    def sign(self) -> int:
        """Sign of the nonlinearity."""
        return self.spec.nonlinearity_sign

    @abstractmethod
    def omega(self, grid: Grid) -> FloatArray:
        """Dispersion relation on the grid, in FFT order."""

    def integrating_factor(self, grid: Grid, t: float) -> ComplexArray:
        """``exp(-i t omega)`` on the grid."""
        return np.exp(-1j * t * self.omega(grid))

    def nonlinear(self, u_hat: ComplexArray, grid: Grid, dealias_fraction: float) -> ComplexArray:
        """Spectrum of the nonlinear term, truncated to the dealiased band."""
        if self.spec.linear_only:
            return np.zeros_like(u_hat)
        mask = dealias_mask(grid, dealias_fraction)
        u_hat = np.where(mask, u_hat, 0)
        return np.where(mask, self._nonlinear(u_hat, grid), 0)

    @abstractmethod
    def _nonlinear(self, u_hat: ComplexArray, grid: Grid) -> ComplexArray:
        """Undealiased nonlinear spectrum."""

    def check_field(self, f: Field) -> None:
        """Raise ConfigError unless ``f`` is real or complex as the flow requires."""
        if self.spec.complex_valued == f.is_real:
            expected = 'complex' if self.spec.complex_valued else 'real'
            raise ConfigError(f'{self.spec.kind.value} evolves {expected} fields, got {f.kind}')


def _ux(u_hat: ComplexArray, grid: Grid) -> ComplexArray:
    return scipy.fft.ifft(1j * grid.odd_wavenumbers * u_hat)


class BenjaminOno(Equation):
    """``u_t + H u_xx + sign * (u^2)_x = 0``."""

    def omega(self, grid: Grid) -> FloatArray:
        """``xi |xi|``."""
        k = grid.odd_wavenumbers
        return k * np.abs(k)

    def _nonlinear(self, u_hat: ComplexArray, grid: Grid) -> ComplexArray:
        u = scipy.fft.ifft(u_hat).real
        return -self.sign * 1j * grid.odd_wavenumbers * scipy.fft.fft(u * u)


class ModifiedBenjaminOno(Equation):
    """``u_t + H u_xx + sign * u^2 u_x = 0``."""

    def omega(self, grid: Grid) -> FloatArray:
        """``xi |xi|``."""
        k = grid.odd_wavenumbers
        return k * np.abs(k)

    def _nonlinear(self, u_hat: ComplexArray, grid: Grid) -> ComplexArray:
        u = scipy.fft.ifft(u_hat).real
        ux = _ux(u_hat, grid).real
        return -self.sign * scipy.fft.fft(u * u * ux)


class DerivativeNLS(Equation):
    """``u_t - i u_xx + sign * |u|^2 u_x = 0``."""

    def omega(self, grid: Grid) -> FloatArray:
        """``xi^2``."""
        return grid.wavenumbers**2

    def _nonlinear(self, u_hat: ComplexArray, grid: Grid) -> ComplexArray:
        u = scipy.fft.ifft(u_hat)
        ux = _ux(u_hat, grid)
        return -self.sign * scipy.fft.fft(np.abs(u) ** 2 * ux)


_EQUATIONS: dict[EquationKind, type[Equation]] = {
    EquationKind.BO: BenjaminOno,
    EquationKind.MBO: ModifiedBenjaminOno,
    EquationKind.DNLS: DerivativeNLS,
}


def make_equation(spec: EquationSpec) -> Equation:
    """Instantiate the flow named by ``spec``."""
    return _EQUATIONS[spec.kind](spec)


def nonlinear_field(f: Field, equation: Equation, dealias_fraction: float) -> Field:
    """Dealiased nonlinear term of ``f`` as a field."""
    spec = equation.nonlinear(np.asarray(f.spectrum), f.grid, dealias_fraction)
    return inverse_transform(f.grid, spec, real=f.is_real)
