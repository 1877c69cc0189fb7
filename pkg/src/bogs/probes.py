"""Numerical probes of the free Schrodinger estimates and of the square function.

Every probe draws a seeded ensemble (member ``i`` uses ``seed + i``), evolves
each datum with ``exp(i t d_x^2)`` on ``[0, T]`` and records the ratio of the
estimated space-time norm to the data norm. Implied constants are reported,
never asserted.
"""

import math
import logging
import dataclasses
from typing import NamedTuple
from dataclasses import field, dataclass
from collections.abc import Iterator, Sequence

import numpy as np
import scipy.fft
import scipy.stats
import numpy.typing as npt

from bogs.errors import FieldError, ConfigError, InsufficientDataError
from bogs.spectral import (
    Grid,
    Field,
    Selector,
    FloatArray,
    DyadicCutoff,
    bracket,
    l2_norm,
    lp_norm,
    make_grid,
    check_scale,
    sobolev_norm,
    dyadic_project,
    square_function,
    schrodinger_propagator,
)
from bogs.analysis import MixedNormSpec, MixedNormAccumulator
from bogs.profiles import random_band, wave_packet

logger = logging.getLogger(__name__)

DEFAULT_MIN_SAMPLES = 32
DEFAULT_PROBE_TIME = 0.9
DEFAULT_THETAS = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_PROBE_SCALES = (4, 8, 16, 32, 64, 128)
DEFAULT_LP_EXPONENTS = (2.0, 4.0, 6.0)
MIN_FIT_SCALE = 4


class ProbeSample(NamedTuple):
    """One ratio of an estimate at one parameter and sample."""

    parameter: float
    sample: int
    ratio: float


@dataclass(frozen=True)
class ProbeReport:
    """Ratios of one estimate over a parameter sweep and a seeded ensemble.

    Samples whose data norm vanishes are left out. ``slope`` is the fitted
    ``log2(mean ratio)`` against ``log2(parameter)`` when the probe sweeps
    dyadic scales.
    """

    name: str
    parameter_name: str
    entries: tuple[ProbeSample, ...]
    slope: float | None = None
    min_samples: int = DEFAULT_MIN_SAMPLES

    def __post_init__(self) -> None:
        for entry in self.entries:
            if not math.isfinite(entry.ratio):
                raise FieldError(
                    f'probe {self.name}: non-finite ratio at {self.parameter_name}={entry.parameter:g}, '
                    f'sample {entry.sample}'
                )
        if self.sample_count < self.min_samples:
            raise InsufficientDataError(
                f'probe {self.name} kept {self.sample_count} samples, fewer than the minimum {self.min_samples}'
            )

    @property
    def parameters(self) -> list[float]:
        """Distinct parameter values in increasing order."""
        return sorted({e.parameter for e in self.entries})

    def ratios(self, parameter: float) -> FloatArray:
        """Ratios recorded at ``parameter``."""
        return np.array([e.ratio for e in self.entries if e.parameter == parameter])

    @property
    def sample_count(self) -> int:
        """Fewest kept samples at any parameter."""
        counts = [len(self.ratios(p)) for p in self.parameters]
        return min(counts, default=0)

    @property
    def max_ratio(self) -> float:
        """Largest ratio in the report."""
        return max((e.ratio for e in self.entries), default=0.0)

    def rows(self) -> list[list[float | int]]:
        """Rows for ``probe_<name>.csv``."""
        return [[e.parameter, e.sample, e.ratio] for e in self.entries]

    def summary_rows(self) -> list[list[str | float | int]]:
        """Rows for ``probe_summary.csv``: probe, parameter, max ratio, slope, samples."""
        slope: str | float = '' if self.slope is None else self.slope
        return [
            [self.name, p, float(self.ratios(p).max()), slope, len(self.ratios(p))]
            for p in self.parameters
        ]


@dataclass(frozen=True)
class ProbeSettings:
    """Ensemble and discretisation of the probes.

    Random data are real band-limited fields on ``band`` with a Gaussian
    envelope of width ``envelope``; wave packets for the dyadic smoothing
    probe have width ``packet_width``.
    """

    n_points: int = 512
    length: float = 64 * math.pi
    samples: int = DEFAULT_MIN_SAMPLES
    min_samples: int = DEFAULT_MIN_SAMPLES
    time: float = DEFAULT_PROBE_TIME
    n_times: int = 129
    seed: int = 0
    band: tuple[float, float] = (1.0, 6.0)
    envelope: float | None = 8.0
    thetas: tuple[float, ...] = DEFAULT_THETAS
    smoothing_thetas: tuple[float, ...] = (0.0, 0.5)
    scales: tuple[int, ...] = DEFAULT_PROBE_SCALES
    lp_exponents: tuple[float, ...] = DEFAULT_LP_EXPONENTS
    packet_width: float = 1.0
    cutoff: DyadicCutoff = field(default_factory=DyadicCutoff)

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ConfigError(f'analysis.probe_samples must be >= 1, got {self.samples}')
        if self.samples < self.min_samples:
            raise ConfigError(
                f'analysis.probe_samples = {self.samples} is below analysis.min_samples = {self.min_samples}'
            )
        if not 0 < self.time < 1:
            raise ConfigError(f'analysis.probe_time must lie in (0, 1), got {self.time}')
        if self.n_times < 2:
            raise ConfigError(f'analysis.probe_times must be >= 2, got {self.n_times}')
        for theta in (*self.thetas, *self.smoothing_thetas):
            if not 0 <= theta <= 1:
                raise ConfigError(f'analysis.theta values must lie in [0, 1], got {theta}')
        for p in self.lp_exponents:
            if not 1 <= p < math.inf:
                raise ConfigError(f'analysis.lp_exponents must be finite and >= 1, got {p}')
        if self.packet_width <= 0:
            raise ConfigError(f'packet width must be positive, got {self.packet_width}')

    @property
    def grid(self) -> Grid:
        """The configured spatial grid."""
        return make_grid(self.n_points, self.length)

    @property
    def times(self) -> FloatArray:
        """Uniform times on ``[0, time]``."""
        return np.linspace(0.0, self.time, self.n_times)

    def seeds(self) -> range:
        """Seeds of the ensemble members."""
        return range(self.seed, self.seed + self.samples)

    def datum(self, seed: int) -> Field:
        """Random band datum for ``seed``, normalised to unit amplitude."""
        return random_band(self.grid, 1.0, self.band[0], self.band[1], seed, self.envelope)


def free_rows(
    phi: Field, times: npt.ArrayLike, weight: npt.ArrayLike | None = None
) -> Iterator[np.ndarray]:
    """Yield ``w(D) exp(i t d_x^2) phi`` at each time, one row at a time."""
    grid = phi.grid
    spectrum = phi.spectrum if weight is None else phi.spectrum * np.asarray(weight)
    for t in np.asarray(times, dtype=np.float64):
        yield scipy.fft.ifft(spectrum * schrodinger_propagator(float(t)).values(grid))


def _free_norms(
    phi: Field,
    times: FloatArray,
    specs: Sequence[MixedNormSpec],
    weight: npt.ArrayLike | None = None,
) -> list[float]:
    accumulators = [MixedNormAccumulator(spec, phi.grid.dx, times) for spec in specs]
    for row in free_rows(phi, times, weight):
        for acc in accumulators:
            acc.add(row)
    return [acc.result() for acc in accumulators]


def _exponent(value: float) -> float:
    return math.inf if value == 0 else 1 / value


def strichartz_spec(theta: float) -> MixedNormSpec:
    """``L_T^{4/theta} L_x^{2/(1-theta)}``."""
    return MixedNormSpec('t', 4 * _exponent(theta), 2 * _exponent(1 - theta))


def smoothing_spec(theta: float) -> MixedNormSpec:
    """``L_x^{2/(1-theta)} L_T^{2/theta}``."""
    return MixedNormSpec('x', 2 * _exponent(1 - theta), 2 * _exponent(theta))


def strichartz_probe(settings: ProbeSettings) -> ProbeReport:
    """``||exp(i t d_x^2) phi||_{L_T^{4/theta} L_x^{2/(1-theta)}} / ||phi||_2`` over the theta sweep."""
    specs = [strichartz_spec(theta) for theta in settings.thetas]
    entries: list[ProbeSample] = []
    for seed in settings.seeds():
        phi = settings.datum(seed)
        denominator = l2_norm(phi)
        if denominator == 0:
            continue
        norms = _free_norms(phi, settings.times, specs)
        entries.extend(
            ProbeSample(theta, seed, norm / denominator)
            for theta, norm in zip(settings.thetas, norms, strict=True)
        )
    return ProbeReport('strichartz', 'theta', tuple(entries), min_samples=settings.min_samples)


def maximal_probe(settings: ProbeSettings) -> ProbeReport:
    """``||exp(i t d_x^2) phi||_{L_x^4 L_T^inf} / ||phi||_{H^1/4 hom}``."""
    spec = MixedNormSpec('x', 4, math.inf)
    entries: list[ProbeSample] = []
    for seed in settings.seeds():
        phi = settings.datum(seed)
        denominator = sobolev_norm(phi, 0.25, homogeneous=True)
        if denominator == 0:
            continue
        (norm,) = _free_norms(phi, settings.times, [spec])
        entries.append(ProbeSample(settings.time, seed, norm / denominator))
    return ProbeReport('maximal', 'T', tuple(entries), min_samples=settings.min_samples)


def smoothing_one_probe(settings: ProbeSettings) -> ProbeReport:
    """``||<D>^{1/2} exp(i t d_x^2) phi||_{L_x^inf L_T^2} / ||phi||_2``."""
    spec = MixedNormSpec('x', math.inf, 2)
    weight = bracket(0.5).values(settings.grid)
    entries: list[ProbeSample] = []
    for seed in settings.seeds():
        phi = settings.datum(seed)
        denominator = l2_norm(phi)
        if denominator == 0:
            continue
        (norm,) = _free_norms(phi, settings.times, [spec], weight)
        entries.append(ProbeSample(settings.time, seed, norm / denominator))
    return ProbeReport('smoothing_one', 'T', tuple(entries), min_samples=settings.min_samples)


@dataclass(frozen=True)
class PacketGrid:
    """Per-scale discretisation keeping a packet of frequency N away from the boundary.

    The packet travels ``2 N T`` to the right; the domain leaves room for the
    travel plus a margin of ``margin`` packet widths and resolves ``2.5 N``.
    """

    grid: Grid
    times: FloatArray
    start: float

    @classmethod
    def for_scale(cls, N: int, T: float, width: float, margin: float = 16.0) -> 'PacketGrid':
        """Grid and times resolving a packet of frequency ``N`` up to time ``T``."""
        length = 2 * N * T + 2 * margin * width
        n_min = max(64, math.ceil(2.5 * N * length / math.pi))
        n_points = 1 << (n_min - 1).bit_length()
        n_times = math.ceil(16 * N * T / width) + 1
        grid = make_grid(n_points, length)
        return cls(grid, np.linspace(0.0, T, n_times), -length / 2 + 0.75 * margin * width)


def smoothing_slope_probe(settings: ProbeSettings, theta: float) -> ProbeReport:
    """``||exp(i t d_x^2) P_N phi||_{L_x^{2/(1-theta)} L_T^{2/theta}} / ||P_N phi||_2`` over N.

    Data are ``P_N`` of wave packets at frequency N with seeded phase, width
    and offset. The slope is fitted on ``N >= 4`` and is expected near
    ``1/2 - theta``.
    """
    if not 0 <= theta <= 1:
        raise ConfigError(f'analysis.theta values must lie in [0, 1], got {theta}')
    spec = smoothing_spec(theta)
    widest = 1.25 * settings.packet_width
    entries: list[ProbeSample] = []
    for N in settings.scales:
        layout = PacketGrid.for_scale(N, settings.time, widest)
        check_scale(layout.grid, N)
        for seed in settings.seeds():
            rng = np.random.default_rng(seed)
            width = settings.packet_width * rng.uniform(0.8, 1.25)
            phase = rng.uniform(0, 2 * math.pi)
            x0 = layout.start + rng.uniform(0, width)
            packet = wave_packet(layout.grid, N, width, x0, phase)
            phi = dyadic_project(packet, Selector.block(N), settings.cutoff)
            denominator = l2_norm(phi)
            if denominator == 0:
                continue
            (norm,) = _free_norms(phi, layout.times, [spec])
            entries.append(ProbeSample(float(N), seed, norm / denominator))
        logger.debug('smoothing probe theta=%g: N=%d on %d points', theta, N, layout.grid.n_points)
    report = ProbeReport(
        f'smoothing_theta{theta:g}', 'N', tuple(entries), min_samples=settings.min_samples
    )
    return dataclasses.replace(report, slope=fit_slope(report))


def fit_slope(report: ProbeReport, min_parameter: float = MIN_FIT_SCALE) -> float | None:
    """Least-squares slope of ``log2(mean ratio)`` against ``log2(parameter)``."""
    params = [p for p in report.parameters if p >= min_parameter]
    if len(params) < 2:
        return None
    means = [float(np.mean(report.ratios(p))) for p in params]
    if min(means) <= 0:
        return None
    fit = scipy.stats.linregress(np.log2(params), np.log2(means))
    return float(fit.slope)


def strichartz_probe_suite(settings: ProbeSettings) -> dict[str, ProbeReport]:
    """Strichartz, maximal, local smoothing and dyadic smoothing probes."""
    reports = {
        'strichartz': strichartz_probe(settings),
        'maximal': maximal_probe(settings),
        'smoothing_one': smoothing_one_probe(settings),
    }
    for theta in settings.smoothing_thetas:
        report = smoothing_slope_probe(settings, theta)
        reports[report.name] = report
    for name, report in reports.items():
        logger.info('probe %s: max ratio %.4g over %d samples', name, report.max_ratio, report.sample_count)
    return reports


def lp_probe(settings: ProbeSettings, *, renormalized: bool = True) -> ProbeReport:
    """``||(sum_N |P_N phi|^2)^{1/2}||_p / ||phi||_p`` for each exponent p.

    Data are random fields spread over the whole resolved band. With
    renormalised squares the ``p = 2`` ratio is one.
    """
    grid = settings.grid
    entries: list[ProbeSample] = []
    for seed in settings.seeds():
        phi = random_band(grid, 1.0, 0.0, 0.9 * grid.kmax, seed, settings.envelope)
        square = square_function(phi, renormalized=renormalized, cutoff=settings.cutoff)
        for p in settings.lp_exponents:
            denominator = lp_norm(phi.samples, grid.dx, p)
            if denominator == 0:
                continue
            entries.append(ProbeSample(p, seed, lp_norm(square.samples, grid.dx, p) / denominator))
    return ProbeReport('lp', 'p', tuple(entries), min_samples=settings.min_samples)
