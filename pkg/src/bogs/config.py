"""Run configuration for bogs.

A configuration file is TOML restricted to flat sections of scalars and lists
of numbers::

    [equation]
    kind = "mBO"

    [grid]
    n_points = 512
    length = "64pi"

    [solver]
    dt = 1e-3
    t_end = 1.0

Values missing from the file are taken from ``DEFAULT_CONFIG``. Unknown
sections and keys are rejected.
"""

import re
import math
import logging
import tomllib
import dataclasses
from typing import Any
from pathlib import Path
from dataclasses import field, dataclass
from collections.abc import Mapping

from bogs.gauge import GaugeSettings
from bogs.errors import ConfigError
from bogs.probes import ProbeSettings
from bogs.spectral import DEFAULT_SHIFT_K, DEFAULT_DECAY_TOLERANCE, Grid, Field, DyadicCutoff, is_dyadic
from bogs.profiles import DEFAULT_GAUSSIAN_WIDTH, cosine, gaussian, random_band
from bogs.analysis import DEFAULT_MAX_POINTS
from bogs.evolution import DEFAULT_DEALIAS_FRACTION, SolverConfig
from bogs.equations import EquationKind, EquationSpec

logger = logging.getLogger(__name__)


class _Required:
    def __repr__(self) -> str:
        return '<required>'


REQUIRED: Any = _Required()

DEFAULT_CONFIG: dict[str, dict[str, Any]] = {
    'equation': {
        'kind': REQUIRED,
        'sign': 1,
        'linear_only': False,
    },
    'grid': {
        'n_points': REQUIRED,
        'length': REQUIRED,
    },
    'initial': {
        'profile': 'gaussian',
        'a': 0.5,
        'sigma': DEFAULT_GAUSSIAN_WIDTH,
        'x0': 0.0,
        'k': 1.0,
        'n_min': 1.0,
        'n_max': 4.0,
        'seed': 0,
        'width': 0.0,
    },
    'solver': {
        'dt': REQUIRED,
        't_end': REQUIRED,
        'dealias_fraction': DEFAULT_DEALIAS_FRACTION,
        'snapshot_stride': 1,
        'stability_constant': 1.0,
        'blowup_factor': 1e6,
    },
    'analysis': {
        's': 0.5,
        'dyadic': [],
        'shift_k': DEFAULT_SHIFT_K,
        'primitive': 'spectral',
        'decay_tolerance': DEFAULT_DECAY_TOLERANCE,
        'probe_samples': 32,
        'min_samples': 32,
        'theta': [0.0, 0.25, 0.5, 0.75, 1.0],
        'smoothing_theta': [0.0, 0.5],
        'probe_time': 0.9,
        'probe_times': 129,
        'probe_scales': [4, 8, 16, 32, 64, 128],
        'lp_exponents': [2.0, 4.0, 6.0],
        'ensemble': 20,
        'lam': 2,
        'scale_time': 0.5,
        'max_points': DEFAULT_MAX_POINTS,
        'seed': 0,
        'amplitude_min': 0.1,
        'amplitude_max': 0.5,
        'band_min': 0.0,
        'band_max': 4.0,
        'envelope': 16.0,
    },
}

PROFILES = ('gaussian', 'cosine', 'random_band')
_PI_LENGTH = re.compile(r'^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)?\s*\*?\s*pi\s*$')


@dataclass(frozen=True)
class InitialCondition:
    """Named initial profile and its parameters."""

    profile: str = 'gaussian'
    a: float = 0.5
    sigma: float = DEFAULT_GAUSSIAN_WIDTH
    x0: float = 0.0
    k: float = 1.0
    n_min: float = 1.0
    n_max: float = 4.0
    seed: int = 0
    width: float | None = None

    def build(self, grid: Grid, *, complex_valued: bool = False) -> Field:
        """Sample the profile on ``grid``."""
        match self.profile:
            case 'gaussian':
                u0 = gaussian(grid, self.a, self.sigma, self.x0)
            case 'cosine':
                u0 = cosine(grid, self.a, self.k)
            case 'random_band':
                u0 = random_band(grid, self.a, self.n_min, self.n_max, self.seed, self.width)
            case _:
                raise ConfigError(
                    f"initial.profile must be one of {', '.join(PROFILES)}, got '{self.profile}'"
                )
        if complex_valued:
            return u0.with_samples(u0.samples.astype(complex))
        return u0


@dataclass(frozen=True)
class AnalysisConfig:
    """The ``[analysis]`` section."""

    s: float = 0.5
    dyadic: tuple[int, ...] = ()
    shift_k: int = DEFAULT_SHIFT_K
    primitive: str = 'spectral'
    decay_tolerance: float = DEFAULT_DECAY_TOLERANCE
    probe_samples: int = 32
    min_samples: int = 32
    theta: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    smoothing_theta: tuple[float, ...] = (0.0, 0.5)
    probe_time: float = 0.9
    probe_times: int = 129
    probe_scales: tuple[int, ...] = (4, 8, 16, 32, 64, 128)
    lp_exponents: tuple[float, ...] = (2.0, 4.0, 6.0)
    ensemble: int = 20
    lam: int = 2
    scale_time: float = 0.5
    max_points: int = DEFAULT_MAX_POINTS
    seed: int = 0
    amplitude_min: float = 0.1
    amplitude_max: float = 0.5
    band_min: float = 0.0
    band_max: float = 4.0
    envelope: float = 16.0

    def __post_init__(self) -> None:
        if self.s < 0.5:
            raise ConfigError(f'analysis.s must be >= 1/2, got {self.s}')
        for N in (*self.dyadic, *self.probe_scales):
            if not is_dyadic(N):
                raise ConfigError(f'analysis dyadic scales must be powers of two, got {N}')
        if self.primitive not in ('trapezoid', 'spectral'):
            raise ConfigError(
                f"analysis.primitive must be 'trapezoid' or 'spectral', got '{self.primitive}'"
            )
        if self.decay_tolerance <= 0:
            raise ConfigError(f'analysis.decay_tolerance must be positive, got {self.decay_tolerance}')
        if self.ensemble < 1:
            raise ConfigError(f'analysis.ensemble must be >= 1, got {self.ensemble}')
        if self.lam < 1:
            raise ConfigError(f'analysis.lam must be a positive integer, got {self.lam}')
        if self.scale_time < 0:
            raise ConfigError(f'analysis.scale_time must be >= 0, got {self.scale_time}')
        if self.max_points < 8:
            raise ConfigError(f'analysis.max_points must be >= 8, got {self.max_points}')
        if not 0 <= self.amplitude_min <= self.amplitude_max:
            raise ConfigError(
                'analysis.amplitude_min and analysis.amplitude_max must satisfy 0 <= min <= max, '
                f'got [{self.amplitude_min}, {self.amplitude_max}]'
            )
        if not 0 <= self.band_min <= self.band_max:
            raise ConfigError(
                'analysis.band_min and analysis.band_max must satisfy 0 <= min <= max, '
                f'got [{self.band_min}, {self.band_max}]'
            )
        # Constructing the helpers validates the remaining ranges.
        self.cutoff()
        self.probe_settings(Grid(8, 1.0))

    def cutoff(self) -> DyadicCutoff:
        """Littlewood-Paley partition with the configured ``shift_k``."""
        return DyadicCutoff(self.shift_k)

    def gauge_settings(self, dealias_fraction: float) -> GaugeSettings:
        """Gauge settings sharing this section's cutoff and primitive."""
        return GaugeSettings(
            cutoff=self.cutoff(),
            dealias_fraction=dealias_fraction,
            primitive=self.primitive,  # pyright: ignore[reportArgumentType]
            decay_tolerance=self.decay_tolerance,
        )

    def probe_settings(self, grid: Grid) -> ProbeSettings:
        """Harmonic-analysis settings on the configured grid."""
        return ProbeSettings(
            n_points=grid.n_points,
            length=grid.length,
            samples=self.probe_samples,
            min_samples=self.min_samples,
            time=self.probe_time,
            n_times=self.probe_times,
            seed=self.seed,
            thetas=self.theta,
            smoothing_thetas=self.smoothing_theta,
            scales=self.probe_scales,
            lp_exponents=self.lp_exponents,
            cutoff=self.cutoff(),
        )


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration of one command."""

    equation: EquationSpec
    grid: Grid
    initial: InitialCondition
    solver: SolverConfig
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    values: Mapping[str, Mapping[str, Any]] = field(default_factory=dict[str, Mapping[str, Any]])

    def initial_field(self) -> Field:
        """Initial field, complex for DNLS."""
        return self.initial.build(self.grid, complex_valued=self.equation.complex_valued)

    def with_seed(self, seed: int) -> 'RunConfig':
        """Override both the initial-condition seed and the ensemble base seed."""
        if seed < 0:
            raise ConfigError(f'seed must be non-negative, got {seed}')
        values = {section: dict(items) for section, items in self.values.items()}
        values.setdefault('initial', {})['seed'] = seed
        values.setdefault('analysis', {})['seed'] = seed
        return dataclasses.replace(
            self,
            initial=dataclasses.replace(self.initial, seed=seed),
            analysis=dataclasses.replace(self.analysis, seed=seed),
            values=values,
        )

    @property
    def seed(self) -> int:
        """Base seed of every randomised computation."""
        return self.analysis.seed


def _path(section: str, key: str) -> str:
    return f'{section}.{key}'


def _number(path: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f'{path} must be a number, got {value!r}')
    if not math.isfinite(value):
        raise ConfigError(f'{path} must be finite, got {value!r}')
    return float(value)


def _integer(path: str, value: Any) -> int:
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f'{path} must be an integer, got {value!r}')
    return value


def _string(path: str, value: Any) -> str:
    if not isinstance(value, str):
        raise ConfigError(f'{path} must be a string, got {value!r}')
    return value


def _boolean(path: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f'{path} must be true or false, got {value!r}')
    return value


def _numbers(path: str, value: Any) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise ConfigError(f'{path} must be a list of numbers, got {value!r}')
    return tuple(_number(f'{path}[{i}]', v) for i, v in enumerate(value))  # pyright: ignore[reportUnknownArgumentType, reportUnknownVariableType]


def _integers(path: str, value: Any) -> tuple[int, ...]:
    if not isinstance(value, list):
        raise ConfigError(f'{path} must be a list of integers, got {value!r}')
    return tuple(_integer(f'{path}[{i}]', v) for i, v in enumerate(value))  # pyright: ignore[reportUnknownArgumentType, reportUnknownVariableType]


def parse_length(value: Any) -> float:
    """``grid.length`` as a number or a multiple of pi written ``"64pi"``."""
    if isinstance(value, str):
        match = _PI_LENGTH.match(value)
        if match is None:
            raise ConfigError(f"grid.length must be a number or '<c>pi', got '{value}'")
        factor = float(match.group(1)) if match.group(1) else 1.0
        return factor * math.pi
    return _number('grid.length', value)


def _merge(user: Mapping[str, Any]) -> dict[str, dict[str, Any]]:
    merged = {section: dict(values) for section, values in DEFAULT_CONFIG.items()}
    for section, values in user.items():
        if section not in DEFAULT_CONFIG:
            raise ConfigError(f"unknown section '{section}'")
        if not isinstance(values, dict):
            raise ConfigError(f"'{section}' must be a section, got {values!r}")
        for key, value in values.items():  # pyright: ignore[reportUnknownVariableType]
            if key not in DEFAULT_CONFIG[section]:
                raise ConfigError(f"unknown key '{_path(section, key)}'")  # pyright: ignore[reportUnknownArgumentType]
            merged[section][key] = value
    for section, values in merged.items():
        for key, value in values.items():
            if value is REQUIRED:
                raise ConfigError(f"missing required key '{_path(section, key)}'")
    return merged


def _from_mapping(user: Mapping[str, Any]) -> RunConfig:
    values = _merge(user)
    eq, gr, ini, sol, an = (values[s] for s in ('equation', 'grid', 'initial', 'solver', 'analysis'))

    equation = EquationSpec(
        EquationKind.parse(_string('equation.kind', eq['kind'])),
        _integer('equation.sign', eq['sign']),
        _boolean('equation.linear_only', eq['linear_only']),
    )
    grid = Grid(_integer('grid.n_points', gr['n_points']), parse_length(gr['length']))
    width = _number('initial.width', ini['width'])
    initial = InitialCondition(
        profile=_string('initial.profile', ini['profile']),
        a=_number('initial.a', ini['a']),
        sigma=_number('initial.sigma', ini['sigma']),
        x0=_number('initial.x0', ini['x0']),
        k=_number('initial.k', ini['k']),
        n_min=_number('initial.n_min', ini['n_min']),
        n_max=_number('initial.n_max', ini['n_max']),
        seed=_integer('initial.seed', ini['seed']),
        width=width if width > 0 else None,
    )
    if initial.profile not in PROFILES:
        raise ConfigError(
            f"initial.profile must be one of {', '.join(PROFILES)}, got '{initial.profile}'"
        )
    if initial.seed < 0:
        raise ConfigError(f'initial.seed must be non-negative, got {initial.seed}')
    solver = SolverConfig(
        dt=_number('solver.dt', sol['dt']),
        t_end=_number('solver.t_end', sol['t_end']),
        dealias_fraction=_number('solver.dealias_fraction', sol['dealias_fraction']),
        snapshot_stride=_integer('solver.snapshot_stride', sol['snapshot_stride']),
        stability_constant=_number('solver.stability_constant', sol['stability_constant']),
        blowup_factor=_number('solver.blowup_factor', sol['blowup_factor']),
    )
    analysis = AnalysisConfig(
        s=_number('analysis.s', an['s']),
        dyadic=_integers('analysis.dyadic', an['dyadic']),
        shift_k=_integer('analysis.shift_k', an['shift_k']),
        primitive=_string('analysis.primitive', an['primitive']),
        decay_tolerance=_number('analysis.decay_tolerance', an['decay_tolerance']),
        probe_samples=_integer('analysis.probe_samples', an['probe_samples']),
        min_samples=_integer('analysis.min_samples', an['min_samples']),
        theta=_numbers('analysis.theta', an['theta']),
        smoothing_theta=_numbers('analysis.smoothing_theta', an['smoothing_theta']),
        probe_time=_number('analysis.probe_time', an['probe_time']),
        probe_times=_integer('analysis.probe_times', an['probe_times']),
        probe_scales=_integers('analysis.probe_scales', an['probe_scales']),
        lp_exponents=_numbers('analysis.lp_exponents', an['lp_exponents']),
        ensemble=_integer('analysis.ensemble', an['ensemble']),
        lam=_integer('analysis.lam', an['lam']),
        scale_time=_number('analysis.scale_time', an['scale_time']),
        max_points=_integer('analysis.max_points', an['max_points']),
        seed=_integer('analysis.seed', an['seed']),
        amplitude_min=_number('analysis.amplitude_min', an['amplitude_min']),
        amplitude_max=_number('analysis.amplitude_max', an['amplitude_max']),
        band_min=_number('analysis.band_min', an['band_min']),
        band_max=_number('analysis.band_max', an['band_max']),
        envelope=_number('analysis.envelope', an['envelope']),
    )
    if analysis.seed < 0:
        raise ConfigError(f'analysis.seed must be non-negative, got {analysis.seed}')
    return RunConfig(equation, grid, initial, solver, analysis, values)


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text."""
    try:
        user = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f'invalid configuration syntax: {e}') from e
    config = _from_mapping(user)
    logger.debug('configuration: %s on %s', config.equation, config.grid)
    return config


def load_config(path: Path | str) -> RunConfig:
    """Read and validate a configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f'cannot read configuration {path}: {e.strerror or e}') from e
    except UnicodeDecodeError as e:
        raise ConfigError(f'configuration {path} is not UTF-8: {e}') from e
    return parse_config(text)
