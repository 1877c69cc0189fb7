"""Tests for bogs.evolution module."""

import math

import numpy as np
import pytest

from bogs.errors import ConfigError, RangeError, BlowUpError, InsufficientDataError
from bogs.profiles import gaussian, random_band
from bogs.spectral import (
    Grid,
    RealField,
    ComplexField,
    zero_field,
    bo_propagator,
    apply_multiplier,
    schrodinger_propagator,
)
from bogs.evolution import (
    Trajectory,
    SolverConfig,
    run,
    step,
    duhamel,
    nonlinear_rhs,
    linear_propagate,
    interaction_residual,
)
from bogs.equations import EquationKind, EquationSpec

MBO = EquationSpec(EquationKind.MBO)


class TestSolverConfig:
    def test_valid(self):
        cfg = SolverConfig(dt=1e-3, t_end=1.0)
        assert cfg.n_steps == 1000

    def test_t_end_must_be_multiple_of_dt(self):
        with pytest.raises(ConfigError, match='integer multiple'):
            SolverConfig(dt=0.3, t_end=1.0)

    def test_stride_must_divide_steps(self):
        with pytest.raises(ConfigError, match='snapshot_stride'):
            SolverConfig(dt=0.1, t_end=1.0, snapshot_stride=3)

    @pytest.mark.parametrize(
        ('changes', 'key'),
        [
            ({'dt': 0.0}, 'solver.dt'),
            ({'t_end': -1.0}, 'solver.t_end'),
            ({'dealias_fraction': 1.5}, 'solver.dealias_fraction'),
            ({'snapshot_stride': 0}, 'solver.snapshot_stride'),
            ({'blowup_factor': 1.0}, 'solver.blowup_factor'),
        ],
    )
    def test_ranges(self, changes: dict[str, float], key: str):
        values: dict[str, float] = {'dt': 0.1, 't_end': 1.0} | changes
        with pytest.raises(ConfigError, match=key):
            SolverConfig(**values)  # pyright: ignore[reportArgumentType]


class TestTrajectory:
    def test_shape_checked(self, small_grid: Grid):
        with pytest.raises(ConfigError, match='does not match'):
            Trajectory(MBO, small_grid, np.array([0.0, 1.0]), np.zeros((3, small_grid.n_points)))

    def test_times_uniform(self, small_grid: Grid):
        with pytest.raises(ConfigError, match='uniformly'):
            Trajectory(MBO, small_grid, np.array([0.0, 1.0, 3.0]), np.zeros((3, small_grid.n_points)))

    def test_times_increasing(self, small_grid: Grid):
        with pytest.raises(ConfigError, match='increasing'):
            Trajectory(MBO, small_grid, np.array([1.0, 0.0]), np.zeros((2, small_grid.n_points)))

    def test_from_fields(self, small_grid: Grid):
        fields = [zero_field(small_grid), zero_field(small_grid)]
        traj = Trajectory.from_fields(MBO, fields, [0.0, 0.5])
        assert len(traj) == 2
        assert traj.time_step == 0.5
        assert not traj.is_complex


class TestLinearFlow:
    def test_bo_propagation_keeps_real(self, small_grid: Grid):
        f = gaussian(small_grid, 1.0, 1.0)
        assert linear_propagate(f, 0.3, EquationKind.MBO).is_real

    def test_schrodinger_plane_wave(self, small_grid: Grid):
        k = 3 * 2 * math.pi / small_grid.length
        f = ComplexField(small_grid, np.exp(1j * k * small_grid.x))
        g = linear_propagate(f, 0.7, 'DNLS')
        np.testing.assert_allclose(g.samples, np.exp(1j * (k * small_grid.x - k * k * 0.7)), atol=1e-12)

    def test_bo_travelling_cosine(self, small_grid: Grid):
        k = 5 * 2 * math.pi / small_grid.length
        f = RealField(small_grid, np.cos(k * small_grid.x))
        g = linear_propagate(f, 0.7, EquationKind.BO)
        np.testing.assert_allclose(g.samples, np.cos(k * small_grid.x - k * k * 0.7), atol=1e-12)
        np.testing.assert_allclose(
            g.samples, apply_multiplier(f, bo_propagator(0.7)).samples, atol=1e-14
        )

    def test_schrodinger_time_reversal(self, small_grid: Grid):
        f = ComplexField(small_grid, gaussian(small_grid, 1.0).samples * np.exp(1j * small_grid.x))
        back = apply_multiplier(linear_propagate(f, 0.5, 'DNLS'), schrodinger_propagator(-0.5))
        np.testing.assert_allclose(back.samples, f.samples, atol=1e-12)

    def test_group_property(self, small_grid: Grid):
        f = random_band(small_grid, 1.0, 0.0, 6.0, 4)
        twice = linear_propagate(linear_propagate(f, 0.4), 0.6)
        once = linear_propagate(f, 1.0)
        np.testing.assert_allclose(twice.samples, once.samples, atol=1e-12)

    def test_linear_only_run_is_exact(self, small_grid: Grid):
        f = random_band(small_grid, 1.0, 0.0, 6.0, 8)
        cfg = SolverConfig(dt=0.05, t_end=1.0, snapshot_stride=20)
        traj = run(f, EquationSpec(EquationKind.MBO, linear_only=True), cfg)
        expected = linear_propagate(f, 1.0)
        np.testing.assert_allclose(traj.snapshot(-1).samples, expected.samples, atol=1e-12)


class TestRun:
    def test_zero_data_stays_zero(self, small_grid: Grid):
        cfg = SolverConfig(dt=0.01, t_end=0.1)
        traj = run(zero_field(small_grid), MBO, cfg)
        assert len(traj) == 11
        assert np.all(traj.data == 0)
        assert traj.conservation is not None
        assert np.all(traj.conservation.l2_mass == 0)

    def test_stride(self, small_grid: Grid):
        cfg = SolverConfig(dt=0.01, t_end=0.1, snapshot_stride=5)
        traj = run(gaussian(small_grid, 0.5), MBO, cfg)
        np.testing.assert_allclose(traj.times, [0.0, 0.05, 0.1])

    def test_step_matches_run(self, small_grid: Grid):
        u0 = gaussian(small_grid, 0.5)
        cfg = SolverConfig(dt=0.01, t_end=0.01)
        t, u1 = step((0.0, u0), MBO, cfg)
        assert t == pytest.approx(0.01)
        np.testing.assert_array_equal(u1.samples, run(u0, MBO, cfg).snapshot(-1).samples)

    def test_real_field_required_for_mbo(self, small_grid: Grid):
        f = ComplexField(small_grid, np.zeros(small_grid.n_points))
        with pytest.raises(ConfigError):
            run(f, MBO, SolverConfig(dt=0.1, t_end=0.1))

    def test_dnls_run_is_complex(self, small_grid: Grid):
        u0 = gaussian(small_grid, 0.3)
        u0 = ComplexField(small_grid, u0.samples * np.exp(0.5j * small_grid.x))
        traj = run(u0, EquationSpec(EquationKind.DNLS), SolverConfig(dt=0.01, t_end=0.1))
        assert traj.is_complex
        assert traj.conservation is not None
        assert traj.conservation.hamiltonian is None
        assert traj.conservation.drifts['l2_mass'] < 1e-8

    def test_blowup_detected(self, small_grid: Grid):
        u0 = gaussian(small_grid, 50.0, 0.5)
        cfg = SolverConfig(dt=0.1, t_end=10.0, blowup_factor=1.5)
        with pytest.raises(BlowUpError) as info, np.errstate(all='ignore'):
            run(u0, MBO, cfg)
        assert info.value.last_time < 10.0

    def test_stability_diagnostic(self, small_grid: Grid):
        u0 = gaussian(small_grid, 2.0, 2.0)
        cfg = SolverConfig(dt=0.5, t_end=0.5, stability_constant=0.1)
        traj = run(u0, MBO, cfg, track_conservation=False)
        assert traj.diagnostics.has('stability')

    def test_conservation_short_run(self, grid: Grid):
        u0 = gaussian(grid, 0.5)
        traj = run(u0, MBO, SolverConfig(dt=1e-3, t_end=1.0, snapshot_stride=100))
        assert traj.conservation is not None
        drifts = traj.conservation.drifts
        assert drifts['l2_mass'] < 1e-8
        assert drifts['hamiltonian'] < 1e-6
        assert traj.imag_residue < 1e-12

    @pytest.mark.slow
    def test_conservation_acceptance(self, grid: Grid):
        u0 = gaussian(grid, 0.5)
        traj = run(u0, MBO, SolverConfig(dt=1e-3, t_end=5.0, snapshot_stride=100))
        assert traj.conservation is not None
        assert traj.conservation.drifts['l2_mass'] < 1e-8
        assert traj.conservation.drifts['hamiltonian'] < 1e-6


class TestOrder:
    def test_fourth_order_in_time(self):
        grid = Grid(256, 32 * math.pi)
        u0 = gaussian(grid, 1.5, 4.0)

        def final(dt: float) -> np.ndarray:
            cfg = SolverConfig(dt=dt, t_end=1.0, snapshot_stride=round(1.0 / dt))
            return np.asarray(run(u0, MBO, cfg, track_conservation=False).snapshot(-1).samples)

        reference = final(0.0025)
        errors = [np.abs(final(dt) - reference).max() for dt in (0.04, 0.02)]
        order = math.log2(errors[0] / errors[1])
        assert order == pytest.approx(4.0, abs=0.3)


class TestInteractionResidual:
    def test_centred_difference_converges(self, small_grid: Grid):
        u0 = gaussian(small_grid, 1.0)
        maxima = []
        for dt in (0.02, 0.01):
            traj = run(u0, MBO, SolverConfig(dt=dt, t_end=0.4), track_conservation=False)
            maxima.append(interaction_residual(traj).max)
        assert 3.0 < maxima[0] / maxima[1] < 5.0

    def test_needs_three_snapshots(self, small_grid: Grid):
        traj = run(gaussian(small_grid, 1.0), MBO, SolverConfig(dt=0.1, t_end=0.1))
        with pytest.raises(InsufficientDataError):
            interaction_residual(traj)


class TestDuhamel:
    def _constant_forcing(self, grid: Grid, h: float, n: int) -> tuple[Trajectory, np.ndarray]:
        k = 2 * 2 * math.pi / grid.length
        g = np.exp(1j * k * grid.x)
        data = np.tile(g, (n + 1, 1))
        traj = Trajectory(EquationSpec(EquationKind.DNLS), grid, np.arange(n + 1) * h, data)
        return traj, g

    def test_constant_forcing(self, small_grid: Grid):
        traj, g = self._constant_forcing(small_grid, 0.01, 100)
        k = 2 * 2 * math.pi / small_grid.length
        omega = k * k
        expected = g * (1 - np.exp(-1j * omega * 1.0)) / (1j * omega)
        result = duhamel(traj, 1.0)
        np.testing.assert_allclose(result.samples, expected, atol=1e-5)

    def test_partial_panel(self, small_grid: Grid):
        traj, g = self._constant_forcing(small_grid, 0.01, 100)
        k = 2 * 2 * math.pi / small_grid.length
        omega = k * k
        t = 0.555
        expected = g * (1 - np.exp(-1j * omega * t)) / (1j * omega)
        np.testing.assert_allclose(duhamel(traj, t).samples, expected, atol=1e-5)

    def test_zero_at_start(self, small_grid: Grid):
        traj, _ = self._constant_forcing(small_grid, 0.01, 10)
        np.testing.assert_array_equal(duhamel(traj, 0.0).samples, 0)

    def test_outside_range(self, small_grid: Grid):
        traj, _ = self._constant_forcing(small_grid, 0.01, 10)
        with pytest.raises(RangeError):
            duhamel(traj, 0.5)


class TestNonlinearRhs:
    def test_zero_for_zero_field(self, small_grid: Grid):
        rhs = nonlinear_rhs(RealField(small_grid, np.zeros(small_grid.n_points)), MBO)
        np.testing.assert_array_equal(rhs.samples, 0)
