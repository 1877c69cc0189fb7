"""Initial data profiles."""

from collections.abc import Iterator

import numpy as np

from bogs.errors import ConfigError
from bogs.spectral import Grid, RealField, ComplexField, inverse_transform

DEFAULT_GAUSSIAN_WIDTH = 2.0


def gaussian(grid: Grid, a: float, sigma: float = DEFAULT_GAUSSIAN_WIDTH, x0: float = 0.0) -> RealField:
    """``a exp(-((x - x0) / sigma)^2)``."""
    if sigma <= 0:
        raise ConfigError(f'initial.sigma must be positive, got {sigma}')
    return RealField(grid, a * np.exp(-(((grid.x - x0) / sigma) ** 2)))


def cosine(grid: Grid, a: float, k: float) -> RealField:
    """``a cos(k x)``; ``k`` has to be one of the grid wavenumbers."""
    index = k * grid.length / (2 * np.pi)
    if abs(index - round(index)) > 1e-9 * max(1.0, abs(index)) or abs(k) >= grid.kmax:
        raise ConfigError(
            f'initial.k = {k} is not a resolved grid wavenumber (multiples of {2 * np.pi / grid.length:g})'
        )
    return RealField(grid, a * np.cos(k * grid.x))


def random_band(
    grid: Grid,
    a: float,
    n_min: float,
    n_max: float,
    seed: int,
    width: float | None = None,
) -> RealField:
    """Real field with random Fourier coefficients on ``n_min <= |xi| <= n_max``.

    An optional Gaussian envelope of the given width localises the field away
    from the boundary. The result is scaled to ``max|u| = a``.
    """
    if n_min < 0 or n_max < n_min:
        raise ConfigError(f'initial band must satisfy 0 <= n_min <= n_max, got [{n_min}, {n_max}]')
    rng = np.random.default_rng(seed)
    k = grid.odd_wavenumbers
    band = (np.abs(k) >= n_min) & (np.abs(k) <= n_max)
    band[grid.nyquist_index] = False
    if not band.any():
        raise ConfigError(f'initial band [{n_min}, {n_max}] contains no grid wavenumber')
    coeffs = rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)
    spectrum = np.where(band, coeffs, 0)
    mirrored = np.conj(spectrum[(-np.arange(grid.n_points)) % grid.n_points])
    spectrum = np.where(k >= 0, spectrum, mirrored)
    spectrum[0] = spectrum[0].real
    samples = inverse_transform(grid, spectrum, real=True).samples
    if width is not None:
        samples = samples * np.exp(-((grid.x / width) ** 2))
    peak = float(np.abs(samples).max())
    if peak == 0:
        return RealField(grid, samples)
    return RealField(grid, a * samples / peak)


def wave_packet(
    grid: Grid, N: float, sigma: float = 1.0, x0: float = 0.0, phase: float = 0.0
) -> ComplexField:
    """``exp(i (N x + phase)) exp(-((x - x0) / sigma)^2)``, a packet at frequency N."""
    envelope = np.exp(-(((grid.x - x0) / sigma) ** 2))
    return ComplexField(grid, np.exp(1j * (N * grid.x + phase)) * envelope)


def random_ensemble(
    grid: Grid,
    count: int,
    base_seed: int,
    amplitude: tuple[float, float],
    band: tuple[float, float],
    width: float | None = None,
) -> Iterator[tuple[int, RealField]]:
    """Seeded ensemble of random band fields; member ``i`` uses ``base_seed + i``.

    The amplitude of each member is drawn uniformly from ``amplitude`` with
    the member's own generator, so growing the ensemble keeps earlier members.
    """
    low, high = amplitude
    if not 0 <= low <= high:
        raise ConfigError(f'ensemble amplitudes must satisfy 0 <= min <= max, got [{low}, {high}]')
    for seed in range(base_seed, base_seed + count):
        a = float(np.random.default_rng([seed, 1]).uniform(low, high))
        yield seed, random_band(grid, a, band[0], band[1], seed, width)
