"""Frequency-localised gauge transform of the mBO flow.

For a dyadic ``N`` the gauged unknown is ``v_N = exp(-i g F / 2) P_+ P_N u``
with ``F`` the left-anchored primitive of ``(P_<<N u)^2`` and ``g = -sign``.
DNLS uses the density ``|P_<<N u|^2`` and BO the linear density
``2 P_<<N u`` that matches ``(u^2)_x = 2 u u_x``; both keep ``g = -sign``.
It satisfies ``(d_t - i d_x^2) v_N = A_1 + ... + A_5`` where, writing
``e = exp(-i g F / 2)``, ``low = P_<<N u`` and ``w = P_+ P_N u``:

    A_1 = -sign e (P_+ P_N(u^2 u_x) - low^2 w_x)
    A_2 = g e P_<<N(iH - 1) u_x low w
    A_3 = -i g e w int^x H low_x low_x
    A_4 = i g sign e w int^x low P_<<N(u^2 u_x)
    A_5 = (i / 4) e low^4 w
"""

import logging
from typing import Literal
from dataclasses import field, dataclass

import numpy as np
import scipy.fft

from bogs.errors import ScaleError, ConfigError, Diagnostics, InsufficientDataError
from bogs.spectral import (
    DEFAULT_DECAY_TOLERANCE,
    Field,
    Selector,
    ComplexField,
    DyadicCutoff,
    hilbert,
    dealias,
    make_field,
    derivative,
    check_scale,
    l2_norm,
    apply_multiplier,
    dyadic_project,
    positive_projection,
    primitive_from_left,
)
from bogs.equations import EquationKind
from bogs.evolution import DEFAULT_DEALIAS_FRACTION, Trajectory, ResidualSeries, spectral_norms

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaugeSettings:
    """Cutoff, dealiasing and primitive options of the gauge transform."""

    cutoff: DyadicCutoff = field(default_factory=DyadicCutoff)
    dealias_fraction: float = DEFAULT_DEALIAS_FRACTION
    primitive: Literal['trapezoid', 'spectral'] = 'spectral'
    decay_tolerance: float = DEFAULT_DECAY_TOLERANCE


@dataclass(frozen=True)
class GaugeBundle:
    """Gauged field at one scale and one time.

    ``phase_mismatch`` is ``|1 - exp(-i g F_total / 2)|``, the jump of the
    phase factor across the periodic boundary.
    """

    N: int
    phase_primitive: Field
    v: ComplexField
    rhs_terms: tuple[Field, ...] = ()
    phase_mismatch: float = 0.0
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    @property
    def rhs(self) -> np.ndarray:
        """Sum of ``rhs_terms`` on the grid."""
        total = np.zeros(self.v.grid.n_points, dtype=np.complex128)
        for term in self.rhs_terms:
            total += term.samples
        return total


def _pp(f: Field, N: int, cutoff: DyadicCutoff) -> Field:
    return apply_multiplier(dyadic_project(f, Selector.block(N), cutoff), positive_projection())


def _dx(f: Field) -> Field:
    return apply_multiplier(f, derivative(1))


def _cubic(u: Field, dealias_fraction: float) -> Field:
    """Dealiased ``u^2 u_x``."""
    return dealias(make_field(u.grid, u.samples**2 * _dx(u).samples), dealias_fraction)


def _density(low: Field, kind: EquationKind) -> Field:
    match kind:
        case EquationKind.BO:
            return make_field(low.grid, 2 * low.samples.real)
        case EquationKind.MBO:
            return make_field(low.grid, low.samples.real**2)
        case EquationKind.DNLS:
            return make_field(low.grid, np.abs(low.samples) ** 2)


def gauge_transform(
    u: Field,
    N: int,
    settings: GaugeSettings | None = None,
    *,
    sign: int = 1,
    kind: EquationKind | None = None,
) -> GaugeBundle:
    """Build ``F`` and ``v_N`` for the flow ``kind``.

    ``kind`` defaults to mBO for real input and DNLS for complex input.

    Raises:
        ConfigError: ``kind`` does not match the field (BO and mBO are real).
        ScaleError: ``N`` is not a resolvable dyadic scale.
    """
    settings = settings or GaugeSettings()
    if kind is None:
        kind = EquationKind.MBO if u.is_real else EquationKind.DNLS
    if u.is_real == (kind is EquationKind.DNLS):
        raise ConfigError(f'{kind.value} gauge needs a {"complex" if u.is_real else "real"} field')
    check_scale(u.grid, N)
    diagnostics = Diagnostics()
    low = dyadic_project(u, Selector.low(N), settings.cutoff)
    density = _density(low, kind)
    F = primitive_from_left(
        density,
        method=settings.primitive,
        decay_tolerance=settings.decay_tolerance,
        diagnostics=diagnostics,
    )
    g = -sign
    phase = np.exp(-0.5j * g * F.samples.real)
    w = _pp(u, N, settings.cutoff)
    v = ComplexField(u.grid, phase * w.samples)
    total = u.grid.dx * float(np.sum(density.samples.real))
    mismatch = abs(1 - np.exp(-0.5j * g * total))
    return GaugeBundle(N, F, v, phase_mismatch=float(mismatch), diagnostics=diagnostics)


def gauge_rhs_terms(
    u: Field, N: int, settings: GaugeSettings | None = None, *, sign: int = 1
) -> GaugeBundle:
    """Gauge bundle including the five right-hand side terms ``A_1 ... A_5``."""
    if not u.is_real:
        raise ConfigError('the transformed right-hand side is defined for real mBO fields')
    settings = settings or GaugeSettings()
    bundle = gauge_transform(u, N, settings, sign=sign)
    diagnostics = bundle.diagnostics
    cutoff = settings.cutoff
    g = -sign
    grid = u.grid

    low = dyadic_project(u, Selector.low(N), cutoff).samples
    low_f = make_field(grid, low)
    low_x = _dx(low_f).samples
    h_low_x = apply_multiplier(_dx(low_f), hilbert()).samples
    pp = _pp(u, N, cutoff)
    w = pp.samples
    w_x = _dx(pp).samples
    cubic = _cubic(u, settings.dealias_fraction)
    pp_cubic = _pp(cubic, N, cutoff).samples
    low_cubic = dyadic_project(cubic, Selector.low(N), cutoff).samples
    e = np.exp(-0.5j * g * bundle.phase_primitive.samples.real)

    def primitive(values: np.ndarray) -> np.ndarray:
        return primitive_from_left(
            make_field(grid, values),
            method=settings.primitive,
            decay_tolerance=settings.decay_tolerance,
            diagnostics=diagnostics,
        ).samples

    a1 = -sign * e * (pp_cubic - low**2 * w_x)
    a2 = g * e * (1j * h_low_x - low_x) * low * w
    a3 = -1j * g * e * w * primitive(h_low_x * low_x)
    a4 = 1j * g * sign * e * w * primitive(low * low_cubic)
    a5 = 0.25j * e * low**4 * w
    terms = tuple(ComplexField(grid, a) for a in (a1, a2, a3, a4, a5))
    return GaugeBundle(N, bundle.phase_primitive, bundle.v, terms, bundle.phase_mismatch, diagnostics)


def decomposition_check(u: Field, N: int, cutoff: DyadicCutoff | None = None) -> float:
    """L2 norm of the defect of the low-high splitting of ``P_+P_N(u^2 u_x)``.

    Compares ``P_+P_N(u^2 u_x) - low^2 P_+P_N u_x`` with
    ``[P_N(low^2 P_+P~_N u_x) - low^2 P_+P_N P~_N u_x] + P_+P_N((u^2 - low^2) u_x)``.

    The defect is at roundoff level when ``u`` splits into a low part on
    ``|xi| <= M`` (``M = N / 2**shift_k``) and a high part on ``[a, b]`` with
    ``max(N / 2, 2 M) <= a``, ``b <= 2 N``, ``3 M < N / 2`` and ``b + 2 M`` below
    the Nyquist wavenumber. Otherwise ``P~_N`` does not act as the identity on
    every frequency that ``low^2`` shifts into the ``P_N`` band, and the defect
    measures that leakage.
    """
    cutoff = cutoff or DyadicCutoff()
    if N < 2**cutoff.shift_k:
        raise ScaleError(f'decomposition needs N >= 2**shift_k = {2**cutoff.shift_k}, got {N}')
    check_scale(u.grid, N)
    grid = u.grid
    u_x = _dx(u)
    low = dyadic_project(u, Selector.low(N), cutoff).samples
    low2 = low**2

    lhs = _pp(make_field(grid, u.samples**2 * u_x.samples), N, cutoff).samples
    lhs = lhs - low2 * _pp(u_x, N, cutoff).samples

    tilde_ux = dyadic_project(u_x, Selector.tilde(N), cutoff)
    plus_tilde = apply_multiplier(tilde_ux, positive_projection())
    first = dyadic_project(make_field(grid, low2 * plus_tilde.samples), Selector.block(N), cutoff)
    second = low2 * _pp(tilde_ux, N, cutoff).samples
    rest = _pp(make_field(grid, (u.samples**2 - low2) * u_x.samples), N, cutoff).samples
    rhs = first.samples - second + rest
    return l2_norm(make_field(grid, lhs - rhs))


def a3_localization(u: Field, N: int, settings: GaugeSettings | None = None) -> float:
    """Share of L2 mass above ``N/2`` in the A_3 primitive after removing its mean ramp."""
    settings = settings or GaugeSettings()
    check_scale(u.grid, N)
    grid = u.grid
    low = dyadic_project(u, Selector.low(N), settings.cutoff)
    low_x = _dx(low)
    integrand = make_field(grid, apply_multiplier(low_x, hilbert()).samples * low_x.samples)
    G = primitive_from_left(integrand, method='spectral', decay_tolerance=np.inf)
    mean = float(np.mean(integrand.samples))
    spectrum = scipy.fft.fft(G.samples - mean * (grid.x - grid.x[0]))
    power = np.abs(spectrum) ** 2
    total = float(power.sum())
    if total == 0:
        return 0.0
    return float(power[np.abs(grid.wavenumbers) > N / 2].sum() / total)


@dataclass(frozen=True)
class GaugeResidualSeries(ResidualSeries):
    """Residual series plus the phase mismatch of ``v_N`` at each interior snapshot."""

    phase_mismatch: np.ndarray

    @property
    def max_phase_mismatch(self) -> float:
        """Largest phase mismatch over the interior snapshots."""
        return float(self.phase_mismatch.max(initial=0.0))


def gauge_residual(
    traj: Trajectory, N: int, settings: GaugeSettings | None = None
) -> GaugeResidualSeries:
    """Residual of ``(d_t - i d_x^2) v_N = sum_j A_j`` along an mBO trajectory.

    ``d_t`` is a centred difference across neighbouring snapshots. For a
    linear-only trajectory the reduced identity ``(d_t - i d_x^2) P_+P_N u = 0``
    is checked instead and the phase mismatch is zero.
    """
    settings = settings or GaugeSettings()
    if traj.equation.kind is not EquationKind.MBO:
        raise ConfigError(
            f'gauge residual is defined for mBO trajectories, got {traj.equation.kind.value}'
        )
    if len(traj) < 3:
        raise InsufficientDataError(f'gauge residual needs at least 3 snapshots, got {len(traj)}')
    check_scale(traj.grid, N)
    h = traj.time_step
    if h * N**2 > 1:
        traj.diagnostics.warn(
            'phase-resolution',
            f'snapshot spacing {h:g} times N^2 = {h * N**2:.3g} exceeds 1; '
            'centred differences do not resolve the phase of v_N',
        )
    grid = traj.grid
    sign = traj.equation.nonlinearity_sign
    linear = traj.equation.linear_only

    vs: list[np.ndarray] = []
    rhs: list[np.ndarray] = []
    mismatch: list[float] = []
    for u in traj.snapshots:
        if linear:
            vs.append(np.asarray(_pp(u, N, settings.cutoff).samples, dtype=np.complex128))
            rhs.append(np.zeros(grid.n_points, dtype=np.complex128))
            mismatch.append(0.0)
        else:
            bundle = gauge_rhs_terms(u, N, settings, sign=sign)
            traj.diagnostics.extend(bundle.diagnostics)
            vs.append(np.asarray(bundle.v.samples))
            rhs.append(bundle.rhs)
            mismatch.append(bundle.phase_mismatch)
    v = np.stack(vs)
    v_hat = scipy.fft.fft(v, axis=1)
    dt_v_hat = (v_hat[2:] - v_hat[:-2]) / (2 * h)
    lap_hat = -(grid.wavenumbers**2) * v_hat[1:-1]
    rhs_hat = scipy.fft.fft(np.stack(rhs)[1:-1], axis=1)
    defect = dt_v_hat - 1j * lap_hat - rhs_hat
    residual = spectral_norms(defect, grid)
    scale = np.maximum(spectral_norms(dt_v_hat, grid), 1e-300)
    logger.debug('gauge residual N=%d: max %.3g over %d snapshots', N, residual.max(), len(traj))
    return GaugeResidualSeries(
        traj.times[1:-1], residual, residual / scale, np.asarray(mismatch[1:-1])
    )
