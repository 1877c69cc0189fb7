"""Space-time norms of trajectories and the checks built on them."""

import math
import logging
import dataclasses
from typing import Literal
from dataclasses import field, dataclass
from collections.abc import Callable, Iterable

import numpy as np
import scipy.fft
import scipy.signal
import numpy.typing as npt

from bogs.errors import ConfigError, InsufficientDataError
from bogs.spectral import (
    Grid,
    Field,
    Selector,
    make_field,
    FloatArray,
    DyadicCutoff,
    MultiplierSpec,
    bracket,
    abs_derivative,
    sobolev_norm,
    l2_norm,
    dyadic_scales,
)
from bogs.evolution import SolverConfig, Trajectory, run
from bogs.equations import EquationSpec

logger = logging.getLogger(__name__)

DEFAULT_MAX_POINTS = 1 << 22


@dataclass(frozen=True)
class MixedNormSpec:
    """``L_x^p L_T^q`` (``outer='x'``) or ``L_T^p L_x^q`` (``outer='t'``).

    ``p`` is the outer exponent and ``q`` the inner one; ``math.inf`` means a
    maximum over grid points.
    """

    outer: Literal['x', 't']
    p: float
    q: float

    def __post_init__(self) -> None:
        if self.outer not in ('x', 't'):
            raise ConfigError(f"mixed norm outer variable must be 'x' or 't', got {self.outer!r}")
        for name, value in (('p', self.p), ('q', self.q)):
            if not value >= 1:
                raise ConfigError(f'mixed norm exponent {name} must be >= 1, got {value}')


def trapezoid_weights(times: npt.ArrayLike) -> FloatArray:
    """Weights of the trapezoidal rule on the given nodes."""
    t = np.asarray(times, dtype=np.float64)
    w = np.zeros_like(t)
    if t.size > 1:
        h = np.diff(t)
        w[:-1] += h / 2
        w[1:] += h / 2
    return w


def _power_mean(values: np.ndarray, weights: np.ndarray | float, p: float, axis: int) -> np.ndarray:
    if math.isinf(p):
        return np.max(values, axis=axis)
    return np.sum(weights * values**p, axis=axis) ** (1 / p)


class MixedNormAccumulator:
    """Streams time slices of ``|u(x, t)|`` into one mixed norm.

    Rows must arrive in the order of ``times``; only O(n_points) state is kept.
    """

    def __init__(self, spec: MixedNormSpec, dx: float, times: npt.ArrayLike) -> None:
        self.spec = spec
        self.dx = dx
        self.weights = trapezoid_weights(times)
        self._index = 0
        self._inner_x: np.ndarray | None = None
        self._inner_t: list[float] = []

    def add(self, row: npt.ArrayLike) -> None:
        """Fold in the next time row."""
        a = np.abs(np.asarray(row))
        w = self.weights[self._index]
        self._index += 1
        if self.spec.outer == 'x':
            q = self.spec.q
            contribution = a if math.isinf(q) else w * a**q
            if self._inner_x is None:
                self._inner_x = np.array(contribution, dtype=np.float64)
            elif math.isinf(q):
                np.maximum(self._inner_x, contribution, out=self._inner_x)
            else:
                self._inner_x += contribution
        else:
            self._inner_t.append(float(_power_mean(a, self.dx, self.spec.q, axis=0)))

    def result(self) -> float:
        """The mixed norm of every row added so far."""
        if self._index == 0:
            raise InsufficientDataError('mixed norm of an empty trajectory')
        spec = self.spec
        if spec.outer == 'x':
            assert self._inner_x is not None
            inner = self._inner_x if math.isinf(spec.q) else self._inner_x ** (1 / spec.q)
            return float(_power_mean(inner, self.dx, spec.p, axis=0))
        inner_t = np.asarray(self._inner_t)
        return float(_power_mean(inner_t, self.weights[: self._index], spec.p, axis=0))


def mixed_norm_of(
    rows: Iterable[npt.ArrayLike], dx: float, times: npt.ArrayLike, spec: MixedNormSpec
) -> float:
    """Mixed Lebesgue norm of ``rows`` sampled at ``times``."""
    acc = MixedNormAccumulator(spec, dx, times)
    for row in rows:
        acc.add(row)
    return acc.result()


def mixed_norm(traj: Trajectory, spec: MixedNormSpec) -> float:
    """Mixed Lebesgue norm of a trajectory.

    Space integrals use the periodic rule ``dx * sum``, time integrals the
    trapezoidal rule on the snapshot times.
    """
    if len(traj) == 0:
        raise InsufficientDataError('mixed norm of an empty trajectory')
    return mixed_norm_of(traj.data, traj.grid.dx, traj.times, spec)


def spacetime_l2(traj: Trajectory) -> float:
    """Flat space-time L2 norm."""
    w = trapezoid_weights(traj.times)
    return float(np.sqrt(traj.grid.dx * np.sum(w[:, None] * np.abs(traj.data) ** 2)))


# --- X and Y norms ---------------------------------------------------------


@dataclass(frozen=True)
class NormReport:
    """A norm split into its named groups; the norm is the sum of the groups."""

    name: str
    blocks: dict[str, float] = field(default_factory=dict[str, float])

    @property
    def total(self) -> float:
        """Sum over all blocks."""
        return float(sum(self.blocks.values()))

    def rows(self) -> list[list[str | float]]:
        """One CSV row per block plus a ``total`` row."""
        out: list[list[str | float]] = [[self.name, name, value] for name, value in self.blocks.items()]
        out.append([self.name, 'total', self.total])
        return out


def _filtered(spectra: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    return scipy.fft.ifft(spectra * symbol, axis=1)


def _derivative_symbol(grid: Grid, order: int) -> np.ndarray:
    k = grid.odd_wavenumbers if order % 2 else grid.wavenumbers
    return (1j * k) ** order


def x_norm(traj: Trajectory, s: float = 0.5, cutoff: DyadicCutoff | None = None) -> NormReport:
    """Norm of the solution space ``X_T^s``.

    Groups: ``sup_t ||u||_{H^s}``; smoothing terms
    ``||D^{s+1/2-k} d^k P_N u||_{L_x^inf L_T^2}`` for ``1 <= k <= [s+1/2]``;
    maximal terms ``||<D>^{s-k-1/2} d^k P_N u||_{L_x^2 L_T^inf}`` and
    ``||<D>^{s-k-1/4} d^k P_N u||_{L_x^4 L_T^inf}`` for ``0 <= k <= [s]``.
    Dyadic sums run over P_0 and every resolvable P_N, square-summed.
    """
    if s < 0.5:
        raise ConfigError(f'analysis.s must be >= 1/2, got {s}')
    if len(traj) == 0:
        raise InsufficientDataError('x_norm of an empty trajectory')
    cutoff = cutoff or DyadicCutoff()
    grid = traj.grid
    spectra = traj.spectra()
    blocks_sym = [cutoff.multiplier(sel, grid).values(grid).real for sel in cutoff.selectors(grid)]
    smoothing_spec = MixedNormSpec('x', math.inf, 2)
    maximal_spec = MixedNormSpec('x', 2, math.inf)
    maximal4_spec = MixedNormSpec('x', 4, math.inf)

    sup = max(sobolev_norm(make_field(grid, row), s) for row in traj.data)

    def group(orders: range, weight: Callable[[int], MultiplierSpec], spec: MixedNormSpec) -> float:
        total = 0.0
        for k in orders:
            base = weight(k).values(grid) * _derivative_symbol(grid, k)
            for block in blocks_sym:
                rows = _filtered(spectra, base * block)
                total += mixed_norm_of(rows, grid.dx, traj.times, spec) ** 2
        return math.sqrt(total)

    smoothing_orders = range(1, math.floor(s + 0.5) + 1)
    maximal_orders = range(0, math.floor(s) + 1)
    return NormReport(
        f'X^{s:g}',
        {
            'sup_Hs': sup,
            'smoothing': group(
                smoothing_orders, lambda k: abs_derivative(s + 0.5 - k), smoothing_spec
            ),
            'maximal_2': group(maximal_orders, lambda k: bracket(s - k - 0.5), maximal_spec),
            'maximal_4': group(maximal_orders, lambda k: bracket(s - k - 0.25), maximal4_spec),
        },
    )


def y_norm(traj: Trajectory) -> NormReport:
    """``sup_t ||u||_{H^1/2} + ||u_x||_{L_x^inf L_T^2} + ||u||_{L_x^2 L_T^inf} + ||<D>^1/4 u||_{L_x^4 L_T^inf}``."""
    if len(traj) == 0:
        raise InsufficientDataError('y_norm of an empty trajectory')
    grid = traj.grid
    spectra = traj.spectra()
    sup = max(sobolev_norm(traj.snapshot(i), 0.5) for i in range(len(traj)))
    ux = _filtered(spectra, _derivative_symbol(grid, 1))
    quarter = _filtered(spectra, bracket(0.25).values(grid))
    return NormReport(
        'Y',
        {
            'sup_H1/2': sup,
            'smoothing': mixed_norm_of(ux, grid.dx, traj.times, MixedNormSpec('x', math.inf, 2)),
            'maximal_2': mixed_norm_of(traj.data, grid.dx, traj.times, MixedNormSpec('x', 2, math.inf)),
            'maximal_4': mixed_norm_of(quarter, grid.dx, traj.times, MixedNormSpec('x', 4, math.inf)),
        },
    )


def project_trajectory(traj: Trajectory, selector: Selector, cutoff: DyadicCutoff | None = None) -> Trajectory:
    """Apply a Littlewood-Paley projection to every snapshot."""
    cutoff = cutoff or DyadicCutoff()
    symbol = cutoff.multiplier(selector, traj.grid).values(traj.grid).real
    rows = _filtered(traj.spectra(), symbol)
    return traj.map(rows if traj.is_complex else rows.real)


# --- space-time L2 estimate ------------------------------------------------


@dataclass(frozen=True)
class SpacetimeL2Check:
    """Both sides of ``||(u^2)_x||_{L^2_xT} <~ rhs`` on one run."""

    lhs: float
    rhs: float
    x_norm: float
    x_norm_high: float
    initial_high: float

    @property
    def ratio(self) -> float:
        """``lhs / rhs``; ``inf`` when only the right-hand side vanishes."""
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else math.inf
        return self.lhs / self.rhs


def spacetime_l2_sides(traj: Trajectory, cutoff: DyadicCutoff | None = None) -> SpacetimeL2Check:
    """Evaluate ``lhs = ||(u^2)_x||`` and
    ``rhs = ||P_>=1 u0||_{H^1/2}^2 + T^1/2 X^2 + (1 + X) X X_>=1`` with
    ``X = ||u||_{X_T^1/2}`` and ``X_>=1 = ||P_>=1 u||_{X_T^1/2}``.
    """
    cutoff = cutoff or DyadicCutoff()
    grid = traj.grid
    squares = scipy.fft.fft(np.asarray(traj.data) ** 2, axis=1)
    derivative_rows = _filtered(squares, _derivative_symbol(grid, 1)).real
    lhs = mixed_norm_of(derivative_rows, grid.dx, traj.times, MixedNormSpec('x', 2, 2))
    high = project_trajectory(traj, Selector.ge1(), cutoff)
    X = x_norm(traj, 0.5, cutoff).total
    X_high = x_norm(high, 0.5, cutoff).total
    initial_high = sobolev_norm(high.snapshot(0), 0.5)
    rhs = initial_high**2 + math.sqrt(traj.duration) * X**2 + (1 + X) * X * X_high
    return SpacetimeL2Check(lhs, rhs, X, X_high, initial_high)


def spacetime_l2_check(
    u0: Field, eq: EquationSpec, cfg: SolverConfig, cutoff: DyadicCutoff | None = None
) -> SpacetimeL2Check:
    """Run the flow from ``u0`` and compare both sides of the space-time estimate."""
    traj = run(u0, eq, cfg, track_conservation=False)
    return spacetime_l2_sides(traj, cutoff)


@dataclass(frozen=True)
class EnsembleMember:
    """Space-time check of one seeded ensemble member."""

    seed: int
    check: SpacetimeL2Check


def spacetime_l2_ensemble(
    fields: Iterable[tuple[int, Field]],
    eq: EquationSpec,
    cfg: SolverConfig,
    cutoff: DyadicCutoff | None = None,
) -> list[EnsembleMember]:
    """Evaluate the estimate on each ``(seed, u0)`` in order."""
    members: list[EnsembleMember] = []
    for seed, u0 in fields:
        check = spacetime_l2_check(u0, eq, cfg, cutoff)
        logger.info('seed %d: lhs=%.6g rhs=%.6g ratio=%.6g', seed, check.lhs, check.rhs, check.ratio)
        members.append(EnsembleMember(seed, check))
    return members


# --- scaling ---------------------------------------------------------------


def dilate(u0: Field, lam: int, exponent: float = 0.5) -> Field:
    """``lam^-exponent u0(x / lam)`` on the grid ``(lam n, lam L)`` by band-limited resampling."""
    if lam < 1:
        raise ConfigError(f'analysis.lam must be a positive integer, got {lam}')
    if lam == 1:
        return u0
    grid = u0.grid.scaled(lam)
    samples = scipy.signal.resample(np.asarray(u0.samples), grid.n_points)
    values = samples * lam**-exponent
    return make_field(grid, np.real(values) if u0.is_real else values)


@dataclass(frozen=True)
class ScalingReport:
    """Static and dynamic outcome of one dilation."""

    lam: int
    l2_ratio: float
    hdot_ratio: float
    static_error: float
    dynamic_mismatch: float

    def rows(self) -> list[list[str | float]]:
        """One row per reported quantity."""
        return [
            ['lam', float(self.lam)],
            ['l2_ratio', self.l2_ratio],
            ['hdot_half_ratio', self.hdot_ratio],
            ['static_error', self.static_error],
            ['dynamic_mismatch', self.dynamic_mismatch],
        ]


def scaling_check(
    u0: Field,
    lam: int,
    eq: EquationSpec,
    cfg: SolverConfig,
    *,
    max_points: int = DEFAULT_MAX_POINTS,
) -> ScalingReport:
    """Compare a run with its dilated copy.

    The flow's dilation is ``u_lam = lam^-a u(x / lam, t / lam^2)`` with
    ``a = 1`` for BO and ``a = 1/2`` for mBO and DNLS. Static part:
    ``||u0_lam||_{L2} = lam^(1/2 - a) ||u0||_{L2}`` and
    ``||u0_lam||_{H^1/2 hom} = lam^-a ||u0||_{H^1/2 hom}``. Dynamic part:
    ``u`` runs to ``cfg.t_end`` on the original grid and ``u_lam`` to
    ``lam^2 cfg.t_end`` with ``lam^2 dt``; the report holds
    ``max|lam^a u_lam(lam x, lam^2 t) - u(x, t)| / max|u(x, t)|``.
    """
    if isinstance(lam, bool) or not isinstance(lam, int) or lam < 1:
        raise ConfigError(f'analysis.lam must be a positive integer, got {lam!r}')
    exponent = eq.kind.scaling_exponent
    if lam == 1:
        return ScalingReport(1, 1.0, 1.0, 0.0, 0.0)
    points = lam * u0.grid.n_points
    if points > max_points:
        raise ConfigError(
            f'dilated grid needs {points} points, above analysis.max_points = {max_points}'
        )
    big0 = dilate(u0, lam, exponent)
    l2_small = l2_norm(u0)
    l2_ratio = l2_norm(big0) / max(l2_small, 1e-300)
    hdot_small = sobolev_norm(u0, 0.5, homogeneous=True)
    hdot_ratio = sobolev_norm(big0, 0.5, homogeneous=True) / max(hdot_small, 1e-300)
    expected_l2 = lam ** (0.5 - exponent)
    expected_hdot = lam**-exponent
    static_error = max(
        abs(l2_ratio - expected_l2) / expected_l2 if l2_small else 0.0,
        abs(hdot_ratio - expected_hdot) / expected_hdot if hdot_small else 0.0,
    )

    final_only = dataclasses.replace(cfg, snapshot_stride=cfg.n_steps or 1)
    small = run(u0, eq, final_only, track_conservation=False).snapshot(-1)
    big_cfg = SolverConfig(
        dt=cfg.dt * lam**2,
        t_end=cfg.t_end * lam**2,
        dealias_fraction=cfg.dealias_fraction,
        snapshot_stride=cfg.n_steps or 1,
        stability_constant=cfg.stability_constant,
        blowup_factor=cfg.blowup_factor,
    )
    big = run(big0, eq, big_cfg, track_conservation=False).snapshot(-1)
    restricted = np.asarray(big.samples)[::lam] * lam**exponent
    scale = max(float(np.abs(small.samples).max()), 1e-300)
    mismatch = float(np.abs(restricted - small.samples).max() / scale)
    logger.info('scaling lam=%d: static %.3g, dynamic %.3g', lam, static_error, mismatch)
    return ScalingReport(lam, l2_ratio, hdot_ratio, static_error, mismatch)


def resolvable_scales(grid: Grid, requested: Iterable[int] = ()) -> list[int]:
    """Requested dyadic scales, or every resolvable one when none are given."""
    scales = list(requested)
    return scales or dyadic_scales(grid)
