"""Periodic grids, fields and Fourier multipliers.

Everything here works on a uniform periodic grid of even size. Spectra are
kept in FFT order (``scipy.fft.fftfreq`` layout), so index ``n // 2`` holds
the unpaired Nyquist mode.
"""

import enum
import logging
from typing import Literal
from functools import cached_property
from dataclasses import dataclass
from collections.abc import Callable, Iterator

import numpy as np
import scipy.fft
import numpy.typing as npt
from scipy.integrate import cumulative_trapezoid

from bogs.errors import ScaleError, ConfigError, FieldError, Diagnostics, OperatorError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]
Symbol = Callable[[FloatArray], npt.NDArray[np.generic]]

DEFAULT_SHIFT_K = 3
DEFAULT_DECAY_TOLERANCE = 1e-8


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[-length/2, length/2)``."""

    n_points: int
    length: float

    def __post_init__(self) -> None:
        if isinstance(self.n_points, bool) or not isinstance(self.n_points, int):
            raise ConfigError(f'grid.n_points must be an integer, got {self.n_points!r}')
        if self.n_points < 8 or self.n_points % 2:
            raise ConfigError(f'grid.n_points must be even and >= 8, got {self.n_points}')
        if not np.isfinite(self.length) or self.length <= 0:
            raise ConfigError(f'grid.length must be positive, got {self.length}')

    @property
    def dx(self) -> float:
        """Grid spacing."""
        return self.length / self.n_points

    @cached_property
    def x(self) -> FloatArray:
        """Sample positions, starting at the left boundary."""
        return -self.length / 2 + self.dx * np.arange(self.n_points, dtype=np.float64)

    @cached_property
    def wavenumbers(self) -> FloatArray:
        """Angular wavenumbers in FFT order."""
        return scipy.fft.fftfreq(self.n_points, d=self.dx) * 2 * np.pi

    @cached_property
    def odd_wavenumbers(self) -> FloatArray:
        """Wavenumbers with the unpaired Nyquist entry set to zero.

        Sign-dependent symbols are evaluated here so that they map real fields
        to real fields.
        """
        k = self.wavenumbers.copy()
        k[self.n_points // 2] = 0.0
        return k

    @property
    def nyquist_index(self) -> int:
        """FFT index of the Nyquist wavenumber."""
        return self.n_points // 2

    @property
    def kmax(self) -> float:
        """Largest resolved |wavenumber| (the Nyquist wavenumber)."""
        return np.pi * self.n_points / self.length

    def scaled(self, factor: int) -> 'Grid':
        """Grid with the same spacing covering ``factor`` times the length."""
        return Grid(self.n_points * factor, self.length * factor)


class Field:
    """Immutable samples of a function on a grid."""

    kind: Literal['real', 'complex'] = 'complex'

    def __init__(self, grid: Grid, samples: npt.ArrayLike) -> None:
        raw = np.asarray(samples)
        if self.kind == 'real' and np.iscomplexobj(raw):
            raise FieldError('real field given complex samples')
        data = np.array(raw, dtype=self._dtype(), copy=True)
        if data.shape != (grid.n_points,):
            raise FieldError(
                f'expected {grid.n_points} samples for this grid, got shape {data.shape}'
            )
        if not np.all(np.isfinite(data)):
            raise FieldError('field samples must be finite')
        data.flags.writeable = False
        self.grid = grid
        self.samples = data

    @classmethod
    def _dtype(cls) -> type[np.generic]:
        return np.complex128

    @property
    def is_real(self) -> bool:
        """Whether the samples are real."""
        return self.kind == 'real'

    @cached_property
    def spectrum(self) -> ComplexArray:
        """FFT of the samples, read-only."""
        spec = scipy.fft.fft(self.samples)
        spec.flags.writeable = False
        return spec

    def with_samples(self, samples: npt.ArrayLike) -> 'Field':
        """A field on the same grid carrying ``samples``."""
        return make_field(self.grid, samples)

    def __repr__(self) -> str:
        return f'{type(self).__name__}(n_points={self.grid.n_points}, length={self.grid.length:g})'


class RealField(Field):
    """Real-valued samples; the spectrum is conjugate symmetric."""

    kind = 'real'

    @classmethod
    def _dtype(cls) -> type[np.generic]:
        return np.float64


class ComplexField(Field):
    """Complex-valued samples."""

    kind = 'complex'


def make_field(grid: Grid, samples: npt.ArrayLike) -> Field:
    """Wrap samples in a RealField or ComplexField depending on their dtype."""
    data = np.asarray(samples)
    if np.iscomplexobj(data):
        return ComplexField(grid, data)
    return RealField(grid, data)


def zero_field(grid: Grid, *, complex_valued: bool = False) -> Field:
    """The zero field on ``grid``."""
    if complex_valued:
        return ComplexField(grid, np.zeros(grid.n_points, dtype=np.complex128))
    return RealField(grid, np.zeros(grid.n_points))


def make_grid(n_points: int, length: float) -> Grid:
    """Grid of ``n_points`` samples on a period of ``length``."""
    return Grid(n_points, float(length))


def inverse_transform(grid: Grid, spectrum: npt.ArrayLike, *, real: bool = False) -> Field:
    """Inverse DFT; ``real=True`` drops the imaginary roundoff."""
    values = scipy.fft.ifft(np.asarray(spectrum, dtype=np.complex128))
    if real:
        return RealField(grid, values.real)
    return ComplexField(grid, values)


# --- Fourier multipliers ---------------------------------------------------


@dataclass(frozen=True)
class MultiplierSpec:
    """Fourier multiplier ``f_hat(xi) -> symbol(xi) * f_hat(xi)``.

    ``odd`` symbols depend on the sign of xi and are evaluated with the
    Nyquist mode treated as frequency zero.
    """

    name: str
    symbol: Symbol
    odd: bool = False

    def values(self, grid: Grid) -> ComplexArray:
        """Symbol evaluated on the grid wavenumbers, in FFT order."""
        k = grid.odd_wavenumbers if self.odd else grid.wavenumbers
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            vals = np.asarray(self.symbol(k), dtype=np.complex128)
        vals = np.broadcast_to(vals, k.shape).astype(np.complex128)
        if not np.all(np.isfinite(vals)):
            bad = k[~np.isfinite(vals)]
            raise OperatorError(f"multiplier '{self.name}' is not finite at xi={bad[0]:g}")
        return vals

    def is_conjugate_symmetric(self, grid: Grid) -> bool:
        """Whether the symbol maps real fields to real fields on ``grid``."""
        vals = self.values(grid)
        mirrored = vals[(-np.arange(grid.n_points)) % grid.n_points]
        scale = max(1.0, float(np.abs(vals).max()))
        return bool(np.allclose(mirrored, np.conj(vals), rtol=0, atol=1e-14 * scale))


def apply_multiplier(f: Field, m: MultiplierSpec) -> Field:
    """Pointwise product in Fourier space.

    Real input stays real when the symbol is conjugate symmetric on the grid.
    """
    spec = f.spectrum * m.values(f.grid)
    return inverse_transform(f.grid, spec, real=f.is_real and m.is_conjugate_symmetric(f.grid))


def _sign(k: FloatArray) -> FloatArray:
    return np.sign(k)


def hilbert() -> MultiplierSpec:
    """Hilbert transform, symbol ``-i sgn(xi)`` with ``sgn(0) = 0``."""
    return MultiplierSpec('hilbert', lambda k: -1j * _sign(k), odd=True)


def derivative(order: int = 1) -> MultiplierSpec:
    """``d_x^order``."""
    return MultiplierSpec(f'd{order}', lambda k: (1j * k) ** order, odd=order % 2 == 1)


def abs_derivative(s: float) -> MultiplierSpec:
    """``|D|^s``; for ``s < 0`` the zero mode is annihilated."""

    def symbol(k: FloatArray) -> FloatArray:
        a = np.abs(k)
        if s == 0:
            return np.ones_like(a)
        out = np.zeros_like(a)
        nz = a > 0
        out[nz] = a[nz] ** s
        return out

    return MultiplierSpec(f'|D|^{s:g}', symbol)


def bracket(s: float) -> MultiplierSpec:
    """Japanese bracket ``<D>^s = (1 + xi^2)^(s/2)``."""
    return MultiplierSpec(f'<D>^{s:g}', lambda k: (1.0 + k * k) ** (s / 2))


def inverse_derivative() -> MultiplierSpec:
    """``(d/dx)^-1`` on mean-zero data; the zero mode maps to zero."""

    def symbol(k: FloatArray) -> npt.NDArray[np.complex128]:
        out = np.zeros(k.shape, dtype=np.complex128)
        nz = k != 0
        out[nz] = 1.0 / (1j * k[nz])
        return out

    return MultiplierSpec('D^-1', symbol, odd=True)


def positive_projection() -> MultiplierSpec:
    """P_+, indicator of xi > 0."""
    return MultiplierSpec('P+', lambda k: (k > 0).astype(np.float64), odd=True)


def negative_projection() -> MultiplierSpec:
    """P_-, indicator of xi < 0."""
    return MultiplierSpec('P-', lambda k: (k < 0).astype(np.float64), odd=True)


def bo_propagator(t: float) -> MultiplierSpec:
    """Free Benjamin-Ono group, symbol ``exp(-i t xi |xi|)``."""
    return MultiplierSpec(f'S_bo({t:g})', lambda k: np.exp(-1j * t * k * np.abs(k)), odd=True)


def schrodinger_propagator(t: float) -> MultiplierSpec:
    """Free Schrodinger group ``exp(i t d_x^2)``, symbol ``exp(-i t xi^2)``."""
    return MultiplierSpec(f'S_schr({t:g})', lambda k: np.exp(-1j * t * k * k))


def dealias_mask(grid: Grid, fraction: float) -> npt.NDArray[np.bool_]:
    """Modes kept by the truncation rule ``|xi| <= fraction * kmax``."""
    if not 0 < fraction <= 1:
        raise ConfigError(f'solver.dealias_fraction must lie in (0, 1], got {fraction}')
    return np.abs(grid.wavenumbers) <= fraction * grid.kmax * (1 + 1e-12)


def dealias(f: Field, fraction: float) -> Field:
    """Drop the modes outside the dealiased band."""
    spec = np.where(dealias_mask(f.grid, fraction), f.spectrum, 0)
    return inverse_transform(f.grid, spec, real=f.is_real)


# --- Littlewood-Paley calculus --------------------------------------------


class SelectorKind(enum.Enum):
    """Littlewood-Paley projections by their usual notation."""

    BLOCK = 'P_N'
    ZERO = 'P_0'
    LOW = 'P_<<N'
    LESSSIM = 'P_<~N'
    TILDE = 'P~_N'
    GE1 = 'P_>=1'


@dataclass(frozen=True)
class Selector:
    """A Littlewood-Paley projection, optionally tied to a dyadic scale."""

    kind: SelectorKind
    N: int | None = None

    @classmethod
    def block(cls, N: int) -> 'Selector':
        """``P_N``."""
        return cls(SelectorKind.BLOCK, N)

    @classmethod
    def zero(cls) -> 'Selector':
        """``P_0``, the frequencies below 1."""
        return cls(SelectorKind.ZERO)

    @classmethod
    def low(cls, N: int) -> 'Selector':
        """``P_<<N``, the frequencies well below ``N``."""
        return cls(SelectorKind.LOW, N)

    @classmethod
    def lesssim(cls, N: int) -> 'Selector':
        """``P_<~N``, every block up to ``N``."""
        return cls(SelectorKind.LESSSIM, N)

    @classmethod
    def tilde(cls, N: int) -> 'Selector':
        """``P~_N``, equal to 1 on the support of ``P_N``."""
        return cls(SelectorKind.TILDE, N)

    @classmethod
    def ge1(cls) -> 'Selector':
        """``P_>=1``."""
        return cls(SelectorKind.GE1)

    def __str__(self) -> str:
        return self.kind.value if self.N is None else f'{self.kind.value}[{self.N}]'


def _chi(x: FloatArray) -> FloatArray:
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def is_dyadic(N: int) -> bool:
    """Whether ``N`` is a power of two, at least 1."""
    if isinstance(N, bool) or not isinstance(N, int | np.integer):
        return False
    return N >= 1 and int(N) & (int(N) - 1) == 0


def top_scale(grid: Grid) -> int:
    """Smallest power of two not below the Nyquist wavenumber."""
    top = 1
    while top < grid.kmax * (1 - 1e-12):
        top *= 2
    return top


def dyadic_scales(grid: Grid) -> list[int]:
    """Resolvable dyadic scales ``1, 2, ..., top_scale(grid)``."""
    scales: list[int] = []
    N = 1
    while N <= top_scale(grid):
        scales.append(N)
        N *= 2
    return scales


def check_scale(grid: Grid, N: int) -> None:
    """Raise ScaleError unless ``N`` is a dyadic scale the grid resolves."""
    if not is_dyadic(N):
        raise ScaleError(f'dyadic scale must be a power of two >= 1, got {N!r}')
    top = top_scale(grid)
    if N > top:
        raise ScaleError(
            f'scale N={N} is not resolvable: grid Nyquist wavenumber is {grid.kmax:g} '
            f'(largest dyadic scale {top})'
        )


@dataclass(frozen=True)
class DyadicCutoff:
    """Smooth Littlewood-Paley partition of unity.

    ``psi`` equals 1 on ``|xi| <= 1`` and vanishes for ``|xi| >= 2``;
    ``phi(xi) = psi(xi) - psi(2 xi)`` and ``P_N`` has symbol ``phi(xi / N)``.
    ``P_<<N`` keeps every block ``M <= N / 2**shift_k`` together with ``P_0``.
    """

    shift_k: int = DEFAULT_SHIFT_K

    def __post_init__(self) -> None:
        if self.shift_k < 1:
            raise ConfigError(f'analysis.shift_k must be >= 1, got {self.shift_k}')

    @staticmethod
    def psi(xi: npt.ArrayLike) -> FloatArray:
        """Smooth bump equal to 1 on ``|xi| <= 1`` and 0 on ``|xi| >= 2``."""
        a = np.abs(np.asarray(xi, dtype=np.float64))
        upper = _chi(2.0 - a)
        return upper / (upper + _chi(a - 1.0))

    def phi(self, xi: npt.ArrayLike) -> FloatArray:
        """``psi(xi) - psi(2 xi)``."""
        a = np.asarray(xi, dtype=np.float64)
        return self.psi(a) - self.psi(2 * a)

    def symbol(self, selector: Selector) -> Callable[[FloatArray], FloatArray]:
        """Symbol of ``selector`` as a function of the wavenumber."""
        N = selector.N
        match selector.kind:
            case SelectorKind.ZERO:
                return lambda k: self.psi(2 * k)
            case SelectorKind.GE1:
                return lambda k: 1.0 - self.psi(2 * k)
            case SelectorKind.BLOCK:
                assert N is not None
                return lambda k: self.phi(k / N)
            case SelectorKind.LESSSIM:
                assert N is not None
                return lambda k: self.psi(k / N)
            case SelectorKind.LOW:
                assert N is not None
                M = N / 2**self.shift_k
                if M < 1:
                    return lambda k: self.psi(2 * k)
                return lambda k: self.psi(k / M)
            case SelectorKind.TILDE:
                assert N is not None
                if N == 1:
                    return lambda k: self.psi(k / 2)
                return lambda k: self.psi(k / (2 * N)) - self.psi(4 * k / N)

    def multiplier(self, selector: Selector, grid: Grid) -> MultiplierSpec:
        """Multiplier of ``selector`` on ``grid``, checking its scale."""
        if selector.N is not None:
            check_scale(grid, selector.N)
        return MultiplierSpec(str(selector), self.symbol(selector))

    def selectors(self, grid: Grid) -> Iterator[Selector]:
        """P_0 followed by every resolvable P_N."""
        yield Selector.zero()
        for N in dyadic_scales(grid):
            yield Selector.block(N)


def dyadic_project(f: Field, selector: Selector, cutoff: DyadicCutoff | None = None) -> Field:
    """Apply a Littlewood-Paley projection to ``f``."""
    cutoff = cutoff or DyadicCutoff()
    return apply_multiplier(f, cutoff.multiplier(selector, f.grid))


def square_function(f: Field, *, renormalized: bool = False, cutoff: DyadicCutoff | None = None) -> RealField:
    """Littlewood-Paley square function ``(sum_N |P_N f|^2)^(1/2)`` including P_0.

    With ``renormalized`` each block symbol is divided by the root of the sum
    of squared symbols, which makes the blocks' squares sum to one.
    """
    cutoff = cutoff or DyadicCutoff()
    grid = f.grid
    symbols = [cutoff.multiplier(sel, grid).values(grid).real for sel in cutoff.selectors(grid)]
    if renormalized:
        norm = np.sqrt(np.sum(np.square(symbols), axis=0))
        symbols = [s / norm for s in symbols]
    total = np.zeros(grid.n_points)
    for s in symbols:
        total += np.abs(scipy.fft.ifft(f.spectrum * s)) ** 2
    return RealField(grid, np.sqrt(total))


# --- quadrature ------------------------------------------------------------


def lp_norm(samples: npt.ArrayLike, dx: float, p: float) -> float:
    """Riemann sum approximation of ``||samples||_p``."""
    a = np.abs(np.asarray(samples))
    if np.isinf(p):
        return float(a.max(initial=0.0))
    return float((dx * np.sum(a**p)) ** (1 / p))


def l2_norm(f: Field) -> float:
    """``||f||_2`` by quadrature."""
    return lp_norm(f.samples, f.grid.dx, 2)


def spectral_l2_norm(f: Field) -> float:
    """L2 norm through Parseval's identity."""
    n = f.grid.n_points
    return float(np.sqrt(f.grid.length / n**2 * np.sum(np.abs(f.spectrum) ** 2)))


def sobolev_norm(f: Field, s: float, *, homogeneous: bool = False) -> float:
    """H^s norm (``<xi>^s`` weight) or the homogeneous ``|xi|^s`` version."""
    m = abs_derivative(s) if homogeneous else bracket(s)
    weight = np.abs(m.values(f.grid)) ** 2
    n = f.grid.n_points
    return float(np.sqrt(f.grid.length / n**2 * np.sum(weight * np.abs(f.spectrum) ** 2)))


def primitive_from_left(
    f: Field,
    *,
    method: Literal['trapezoid', 'spectral'] = 'trapezoid',
    decay_tolerance: float = DEFAULT_DECAY_TOLERANCE,
    diagnostics: Diagnostics | None = None,
) -> Field:
    """Antiderivative anchored at the left boundary, ``F(x_0) = 0``.

    ``trapezoid`` is the cumulative trapezoidal rule. ``spectral`` integrates
    the band-limited interpolant exactly: the mean contributes a linear ramp
    and the oscillating part goes through ``(d/dx)^-1``.

    Boundary values above ``decay_tolerance * max|f|`` are recorded as a
    ``boundary-decay`` diagnostic, or logged as a warning when no
    ``diagnostics`` record is given.
    """
    grid = f.grid
    samples = f.samples
    peak = float(np.abs(samples).max(initial=0.0))
    edge = max(abs(samples[0]), abs(samples[-1]))
    if peak > 0 and edge > decay_tolerance * peak:
        message = (
            f'integrand reaches {edge / peak:.3g} of its maximum at the domain boundary '
            f'(tolerance {decay_tolerance:g})'
        )
        if diagnostics is None:
            logger.warning('boundary-decay: %s', message)
        else:
            diagnostics.warn('boundary-decay', message)
    if method == 'trapezoid':
        values = cumulative_trapezoid(samples, dx=grid.dx, initial=0)
    elif method == 'spectral':
        mean = f.spectrum[0] / grid.n_points
        oscillating = f.spectrum.copy()
        oscillating[0] = 0
        part = scipy.fft.ifft(oscillating * inverse_derivative().values(grid))
        values = mean * (grid.x - grid.x[0]) + part - part[0]
        if f.is_real:
            values = values.real
    else:
        raise ConfigError(f"analysis.primitive must be 'trapezoid' or 'spectral', got {method!r}")
    return make_field(grid, values)
